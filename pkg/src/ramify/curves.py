"""Curves in measure space built from single-atom moves.

A transport path converts to a curve by firing its edges one at a time: each
move slides one parcel of mass along a straight segment while everything else
stands still. Restricted to one move the distance between snapshots is just
weight^alpha times how far the parcel has traveled, a genuine metric, so the
curve is piecewise metric Lipschitz and its length telescopes to the graph
cost. Arc reparametrization turns optimal paths into unit-speed geodesics:
the distance between two snapshots equals their parameter gap.
"""

import json
import math
from bisect import bisect_right
from dataclasses import dataclass

from .graphs import CycleError, find_cycle, m_alpha, validate_graph
from .measures import (AtomicMeasure, MASS_TOL, euclid, j_alpha,
                       measure_from_json, measure_to_json)
from .rng import SplitMix64
from .topology import EXACT_CAP, optimize_topology


@dataclass(frozen=True)
class Move:
    src: tuple
    dst: tuple
    weight: float
    t0: float
    t1: float


@dataclass(frozen=True)
class MeasureCurve:
    """Ordered single-edge mass moves applied to a base measure.

    Move intervals tile the domain. Snapshots at any parameter are valid
    atomic measures; transient coincidences (a moving parcel crossing a
    resting atom) are merged when a snapshot is materialized.
    """

    base: AtomicMeasure
    moves: tuple
    domain: tuple = (0.0, 1.0)

    def __post_init__(self):
        lo, hi = self.domain
        edge = lo
        for mv in self.moves:
            if abs(mv.t0 - edge) > 1e-9 or mv.t1 <= mv.t0:
                raise ValueError("move intervals must tile the domain in order")
            if mv.weight <= 0:
                raise ValueError("move weight must be positive")
            edge = mv.t1
        if self.moves and abs(edge - hi) > 1e-9:
            raise ValueError(f"moves end at {edge}, domain ends at {hi}")
        object.__setattr__(self, "_configs", self._walk())

    def _walk(self):
        """Config before each move; raises if a move lacks mass at its source."""
        config = {p: m for p, m in self.base.atoms}
        out = [dict(config)]
        for mv in self.moves:
            have = config.get(mv.src, 0.0)
            if have < mv.weight - 1e-9:
                raise ValueError(
                    f"move from {mv.src} needs {mv.weight}, only {have} present"
                )
            config[mv.src] = have - mv.weight
            if config[mv.src] <= MASS_TOL:
                del config[mv.src]
            config[mv.dst] = config.get(mv.dst, 0.0) + mv.weight
            out.append(dict(config))
        return out

    def length(self):
        return self.domain[1] - self.domain[0]

    def at(self, t):
        """Measure snapshot at parameter t, coincident atoms merged."""
        lo, hi = self.domain
        if not lo - 1e-9 <= t <= hi + 1e-9:
            raise ValueError(f"t = {t} outside domain {self.domain}")
        if not self.moves:
            return self.base
        starts = [mv.t0 for mv in self.moves]
        k = bisect_right(starts, t) - 1
        k = max(k, 0)
        mv = self.moves[k]
        if t >= mv.t1:
            return _as_measure(self._configs[k + 1], self.base.dim)
        frac = (t - mv.t0) / (mv.t1 - mv.t0)
        if frac <= 0:
            return _as_measure(self._configs[k], self.base.dim)
        config = dict(self._configs[k])
        config[mv.src] -= mv.weight
        if config[mv.src] <= MASS_TOL:
            del config[mv.src]
        spot = tuple(
            s + frac * (d - s) for s, d in zip(mv.src, mv.dst)
        )
        config[spot] = config.get(spot, 0.0) + mv.weight
        return _as_measure(config, self.base.dim)

    def endpoint(self):
        return _as_measure(self._configs[-1], self.base.dim)


def _as_measure(config, dim):
    atoms = tuple(sorted((p, m) for p, m in config.items() if m > MASS_TOL))
    return AtomicMeasure(atoms, dim=dim)


def path_to_curve(g, alpha):
    """Schedule a transport path's edges into a measure curve of equal length.

    Edges fire one at a time, lexicographically earliest among those whose
    tail currently holds enough mass; on a valid acyclic graph this schedule
    always completes. Moves get equal parameter intervals (peeling one edge
    of the remaining k leaves it the first (k-1)/k of its interval).
    """
    if find_cycle(g) is not None:
        raise CycleError("curve construction requires an acyclic graph")
    report = validate_graph(g)
    if not report.valid:
        raise ValueError(f"graph does not balance: max residual {report.max_residual:.3g}")
    pts = g.points()
    pending = sorted(g.edges, key=lambda e: (str(e[0]), str(e[1])))
    config = {p: m for p, m in g.source.atoms}
    fired = []
    while pending:
        ready = next(
            (e for e in pending
             if config.get(pts[e[0]], 0.0) >= e[2] - 1e-9),
            None,
        )
        if ready is None:
            raise ValueError("no edge has enough mass at its tail; "
                             "graph balance must be broken")
        pending.remove(ready)
        tail, head, w = ready
        src, dst = pts[tail], pts[head]
        config[src] = config.get(src, 0.0) - w
        if config[src] <= MASS_TOL:
            del config[src]
        config[dst] = config.get(dst, 0.0) + w
        fired.append((src, dst, w))
    k = len(fired)
    moves = tuple(
        Move(src=s, dst=d, weight=w, t0=i / k, t1=(i + 1) / k)
        for i, (s, d, w) in enumerate(fired)
    )
    return MeasureCurve(base=g.source, moves=moves, domain=(0.0, 1.0))


def curve_length(c, alpha):
    """Analytic length: each move contributes weight^alpha * segment length."""
    return sum(mv.weight ** alpha * euclid(mv.src, mv.dst) for mv in c.moves)


def variation_length(c, alpha, points=1024, cap=EXACT_CAP + 2):
    """Variation-sum estimate over a dyadic refinement of the move partition.

    Sums the plan distance between consecutive snapshots. Each move interval
    is subdivided on its own (the length supremum runs over partitions within
    each metric piece), and once the spacing is fine enough that moving the
    active parcel directly is the cheapest plan, the sum telescopes to the
    analytic length.
    """
    if not c.moves:
        return 0.0
    per = 1
    while per * len(c.moves) < points:
        per *= 2
    total = 0.0
    for mv in c.moves:
        prev = c.at(mv.t0)
        for i in range(1, per + 1):
            t = mv.t0 + (mv.t1 - mv.t0) * i / per
            cur = c.at(min(t, mv.t1))
            total += j_alpha(prev, cur, alpha, method="auto", cap=cap).value
            prev = cur
    return total


def arc_reparametrize(c, alpha):
    """Unit-speed curve over [0, L]: breakpoints at cumulative move costs."""
    costs = [mv.weight ** alpha * euclid(mv.src, mv.dst) for mv in c.moves]
    total = sum(costs)
    if total <= 0:
        raise ValueError("cannot arc-parametrize a zero-length curve")
    moves = []
    t = 0.0
    for mv, cost in zip(c.moves, costs):
        moves.append(Move(src=mv.src, dst=mv.dst, weight=mv.weight,
                          t0=t, t1=t + cost))
        t += cost
    return MeasureCurve(base=c.base, moves=tuple(moves), domain=(0.0, t))


def metric_derivative(c, alpha, t, h=1e-5, cap=EXACT_CAP + 2):
    """Central-difference speed |J(f(t-h), f(t+h))| / 2h."""
    lo, hi = c.domain
    t0, t1 = max(lo, t - h), min(hi, t + h)
    d = j_alpha(c.at(t0), c.at(t1), alpha, method="auto", cap=cap).value
    return d / (t1 - t0)


def geodesic_check(c, alpha, samples=50, seed=0, cap=EXACT_CAP):
    """Largest |D(f(s), f(t)) - |t - s|| over sampled parameter pairs.

    Requires an arc-parametrized curve; for curves built from exactly solved
    transport paths the deviation is solver noise. Distances between
    snapshots are computed by the exact topology optimizer, so the snapshots
    must stay within its terminal cap.
    """
    rng = SplitMix64(seed)
    lo, hi = c.domain
    worst = 0.0
    for _ in range(samples):
        s = rng.uniform(lo, hi)
        t = rng.uniform(lo, hi)
        ms_, mt = c.at(s), c.at(t)
        d = optimize_topology(ms_, mt, alpha, mode="exact", cap=cap).value
        worst = max(worst, abs(d - abs(t - s)))
    return worst


def uniform_distance(f, h, alpha, grid=64, cap=EXACT_CAP + 2):
    """Largest plan distance between two curves over a shared parameter grid.

    Both domains are rescaled to [0, 1] first; inherits the relaxed triangle
    constant of the plan distance on the sampled measures.
    """
    def rescaled(c, t):
        lo, hi = c.domain
        return c.at(lo + t * (hi - lo))

    worst = 0.0
    for i in range(grid + 1):
        t = i / grid
        worst = max(
            worst,
            j_alpha(rescaled(f, t), rescaled(h, t), alpha,
                    method="auto", cap=cap).value,
        )
    return worst


# -- JSON -----------------------------------------------------------------------

def curve_to_json(c):
    return {
        "base": measure_to_json(c.base),
        "domain": list(c.domain),
        "moves": [
            {"from": list(mv.src), "to": list(mv.dst), "weight": mv.weight,
             "t0": mv.t0, "t1": mv.t1}
            for mv in c.moves
        ],
    }


def curve_from_json(doc):
    return MeasureCurve(
        base=measure_from_json(doc["base"]),
        moves=tuple(
            Move(src=tuple(m["from"]), dst=tuple(m["to"]), weight=m["weight"],
                 t0=m["t0"], t1=m["t1"])
            for m in doc["moves"]
        ),
        domain=tuple(doc.get("domain", (0.0, 1.0))),
    )


def frames(c, ts):
    """Measure snapshots at the requested parameters (for animation export)."""
    return [{"t": t, "measure": measure_to_json(c.at(t))} for t in ts]
