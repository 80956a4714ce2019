"""Finite quasimetric tables: axiom checks, relaxation constants, chain metric.

A quasimetric is a symmetric positive-definite distance that satisfies only a
relaxed triangle inequality J(x,y) <= sigma * (J(x,z) + J(z,y)). On a finite
point set everything is computable: the relaxation constant sigma, its n-chain
refinements sigma_n, and the chain-infimum pseudometric d_J (all-pairs minimum
chain cost), which is the largest metric-like object J dominates.
"""

import csv
import json
import warnings
from dataclasses import dataclass, field

import numpy as np

ABS_TOL = 1e-12
RATIO_TOL = 1e-9


class MalformedTable(ValueError):
    """Distance table is not a square numeric array."""


class AxiomInconsistency(ValueError):
    """Input violated a precondition that axiom checking should have caught."""


@dataclass(frozen=True)
class FiniteQuasimetric:
    """Symmetric nonnegative distance table on labeled points.

    The table may hold floats or exact numbers (e.g. fractions.Fraction in an
    object-dtype array); every operation preserves the arithmetic of the input.
    """

    labels: tuple
    table: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.table)
        if t.ndim != 2 or t.shape[0] != t.shape[1]:
            raise MalformedTable(f"table must be square, got shape {t.shape}")
        if len(self.labels) != t.shape[0]:
            raise MalformedTable(
                f"{len(self.labels)} labels for a {t.shape[0]}-point table"
            )
        if t.shape[0] < 1:
            raise MalformedTable("need at least one point")
        if t.dtype != object and not np.all(np.isfinite(t)):
            raise MalformedTable("table contains NaN or infinite entries")
        object.__setattr__(self, "table", t)
        object.__setattr__(self, "labels", tuple(self.labels))

    @property
    def n(self):
        return self.table.shape[0]

    def is_exact(self):
        return self.table.dtype == object


def from_points(points, dist):
    """Build a table by evaluating dist on all pairs of points."""
    pts = list(points)
    n = len(pts)
    t = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            t[i, j] = t[j, i] = dist(pts[i], pts[j])
    return FiniteQuasimetric(tuple(range(n)), t)


def check_axioms(q):
    """Violations of nonnegativity, identity of indiscernibles, and symmetry.

    Returns a list of dicts naming the violated condition (1, 2, or 3) and the
    witness indices; empty list means the table is a valid semimetric.
    """
    t = q.table
    n = q.n
    out = []
    for i in range(n):
        if t[i, i] != 0:
            out.append({"condition": 2, "where": (i, i),
                        "message": f"nonzero diagonal at {q.labels[i]}"})
        for j in range(n):
            if t[i, j] < 0:
                out.append({"condition": 1, "where": (i, j),
                            "message": "negative entry"})
            if i < j:
                if t[i, j] != t[j, i]:
                    out.append({"condition": 3, "where": (i, j),
                                "message": "asymmetric entry"})
                if t[i, j] == 0:
                    out.append({"condition": 2, "where": (i, j),
                                "message": "zero distance between distinct points"})
    return out


def relaxation_constant(q):
    """Smallest sigma with J(x,y) <= sigma*(J(x,z)+J(z,y)), with a witness triple.

    Assumes check_axioms(q) passed. Returns (sigma, (x, z, y)); sigma is 1 and
    the witness None for a metric table or a single point.
    """
    t = q.table
    n = q.n
    one = _one_like(t)
    if n < 2:
        return one, None
    best = one
    witness = None
    offdiag = ~np.eye(n, dtype=bool)
    for z in range(n):
        denom = t[:, z:z + 1] + t[z:z + 1, :]
        if np.any(denom[offdiag] == 0):
            x, y = _first_true(offdiag & (denom == 0))
            raise AxiomInconsistency(
                f"J({x},{z}) + J({z},{y}) = 0 for distinct {x}, {y}"
            )
        safe = denom.copy()
        safe[~offdiag] = one  # avoid 0/0 on the diagonal
        ratio = t / safe
        ratio[~offdiag] = one * 0
        k = np.argmax(ratio)
        x, y = divmod(int(k), n)
        if ratio[x, y] > best:
            best = ratio[x, y]
            witness = (x, z, y)
    return best, witness


def hop_bounded_cost(q, n_hops):
    """Minimum chain cost between all pairs over chains of at most n_hops edges.

    One min-plus relaxation round per hop. Chains shorter than n_hops are
    covered automatically because repeating a vertex costs J(x,x) = 0.
    """
    if n_hops < 1:
        raise ValueError("n_hops must be >= 1")
    d = q.table.copy()
    for _ in range(n_hops - 1):
        nxt = _minplus(d, q.table)
        if _same(nxt, d):
            break
        d = nxt
    return d


def sigma_n(q, n_hops):
    """Smallest sigma_n with J(x_1,x_{n+1}) <= sigma_n * sum of n chain edges."""
    d = hop_bounded_cost(q, n_hops)
    return _chain_ratio(q.table, d)


def induced_pseudometric(q):
    """Chain-infimum pseudometric d_J: all-pairs minimum chain cost.

    Relaxation runs to a full no-change fixed point, so the output satisfies
    the triangle inequality exactly in the arithmetic it was computed in.
    Returns (d, is_metric) where is_metric means all off-diagonal entries are
    positive.
    """
    d = q.table.copy()
    n = q.n
    while True:
        nxt = d
        for k in range(n):
            nxt = np.minimum(nxt, nxt[:, k:k + 1] + nxt[k:k + 1, :])
        if _same(nxt, d):
            break
        d = nxt
    is_metric = bool(np.all(d[~np.eye(n, dtype=bool)] > 0)) if n > 1 else True
    return d, is_metric


@dataclass
class RelaxationReport:
    """sigma, its chain refinements, and the finite-space ideality certificate.

    sigma_n values are nondecreasing and bounded by sigma**(n-1); on a finite
    space the hop-bounded costs stabilize within n-1 hops, so
    sigma_infinity_estimate is exact once stabilization is observed
    (is_ideal_up_to records the largest chain length checked).
    """

    sigma: float
    witness_triple: tuple | None
    sigma_n: list = field(default_factory=list)
    sigma_infinity_estimate: float = 1.0
    is_ideal_up_to: int = 1


def relaxation_report(q, n_max=None):
    """Full profile sigma_1..sigma_k until the hop-bounded costs stabilize."""
    sigma, witness = relaxation_constant(q)
    limit = n_max if n_max is not None else max(2, q.n)
    profile = [(1, _one_like(q.table))]
    d = q.table.copy()
    k = 1
    while k < limit:
        nxt = _minplus(d, q.table)
        k += 1
        stable = _same(nxt, d)
        d = nxt
        profile.append((k, _chain_ratio(q.table, d)))
        if stable:
            break
    return RelaxationReport(
        sigma=sigma,
        witness_triple=witness,
        sigma_n=profile,
        sigma_infinity_estimate=profile[-1][1],
        is_ideal_up_to=profile[-1][0],
    )


def continuity_constant(q, cap=40):
    """Empirical constant for |J(x,y)-J(z,w)| <= sigma*(J(x,z)+J(w,y)).

    Optional diagnostic (quadruple scan, so limited to cap points); a finite
    value certifies the four-point continuity condition on this table.
    """
    n = q.n
    if n > cap:
        raise ValueError(f"continuity scan is O(n^4); table has {n} > {cap} points")
    t = q.table
    best = _one_like(t)
    for x in range(n):
        for y in range(n):
            for z in range(n):
                for w in range(n):
                    den = t[x, z] + t[w, y]
                    if den == 0:
                        continue
                    r = abs(t[x, y] - t[z, w]) / den
                    if r > best:
                        best = r
    return best


# -- ingestion ---------------------------------------------------------------

def load_table(path):
    """Read a distance table from .json ({labels, table}) or .csv (header row)."""
    text = open(path).read()
    if str(path).endswith(".json") or text.lstrip().startswith("{"):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as e:
            raise MalformedTable(f"{path}: invalid JSON at line {e.lineno}: {e.msg}")
        if "table" not in doc:
            raise MalformedTable(f"{path}: missing 'table' key")
        table = np.asarray(doc["table"], dtype=float)
        labels = doc.get("labels", list(range(len(table))))
        return FiniteQuasimetric(tuple(labels), table)
    rows = list(csv.reader(text.splitlines()))
    if not rows:
        raise MalformedTable(f"{path}: empty CSV")
    labels = [c.strip() for c in rows[0]]
    body = rows[1:]
    if len(body) != len(labels):
        raise MalformedTable(
            f"{path}: header names {len(labels)} points but {len(body)} rows follow"
        )
    try:
        table = np.asarray([[float(c) for c in row] for row in body])
    except ValueError as e:
        raise MalformedTable(f"{path}: non-numeric cell ({e})")
    return FiniteQuasimetric(tuple(labels), table)


# -- internals ---------------------------------------------------------------

def _one_like(table):
    return 1.0 if table.dtype != object else table.flat[0] * 0 + 1


def _minplus(d, j):
    return np.minimum(d, (d[:, :, None] + j[None, :, :]).min(axis=1))


def _same(a, b):
    return bool((a == b).all())


def _chain_ratio(j, d):
    n = j.shape[0]
    one = _one_like(j)
    if n < 2:
        return one
    best = one
    degenerate = False
    for x in range(n):
        for y in range(n):
            if x == y:
                continue
            if d[x, y] == 0:
                degenerate = True
                continue
            r = j[x, y] / d[x, y]
            if r > best:
                best = r
    if degenerate:
        warnings.warn("degenerate chain: d_J vanishes off-diagonal, not a metric")
        return float("inf")
    return best


def _first_true(mask):
    k = int(np.argmax(mask))
    return divmod(k, mask.shape[1])
