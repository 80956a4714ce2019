"""Portable seeded randomness for instance generation.

All randomized subcommands and test suites draw from SplitMix64, so a seed
reproduces the same instances on any platform or implementation. The
generator is fully specified by:

    state   <- (state + 0x9E3779B97F4A7C15) mod 2^64
    z       <- state
    z       <- ((z xor (z >> 30)) * 0xBF58476D1CE4E5B9) mod 2^64
    z       <- ((z xor (z >> 27)) * 0x94D049BB133111EB) mod 2^64
    output  <- z xor (z >> 31)

uniform() maps the top 53 bits of the output to a double in [0, 1).
"""

_MASK = (1 << 64) - 1


class SplitMix64:
    """Deterministic 64-bit generator; seed is any integer."""

    def __init__(self, seed):
        self.state = seed & _MASK

    def next_u64(self):
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def uniform(self, lo=0.0, hi=1.0):
        return lo + (hi - lo) * ((self.next_u64() >> 11) * 2.0 ** -53)

    def randint(self, lo, hi):
        """Uniform integer in [lo, hi] via rejection-free modulo of 64 bits."""
        span = hi - lo + 1
        return lo + self.next_u64() % span

    def point(self, box):
        """One point in the axis-aligned box [(lo, hi), ...]."""
        return tuple(self.uniform(lo, hi) for lo, hi in box)


def random_points(rng, n, box):
    return [rng.point(box) for _ in range(n)]


def random_masses(rng, n):
    """n positive masses summing to 1.0; the last is the exact complement."""
    raw = [rng.uniform(0.1, 1.0) for _ in range(n)]
    total = sum(raw)
    masses = [r / total for r in raw[:-1]]
    masses.append(1.0 - sum(masses))
    return masses
