"""Atomic probability measures, transport plans, and the concave plan cost.

The central quantity is the cost of a plan gamma between two atomic measures,
sum over positive entries of gamma_ij^alpha * d(x_i, y_j) with alpha < 1, and
its minimum over all plans. The minimum is attained at a vertex of the
transportation polytope (the cost is concave along every polytope direction
for 0 < alpha < 1), so small instances are solved exactly by enumerating
basic feasible solutions; larger ones fall back to pivot descent from the
northwest-corner basis.
"""

import itertools
import json
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

MASS_TOL = 1e-12
ENUM_CAP = 10  # max m+n for exhaustive vertex enumeration


class UnsupportedExponent(ValueError):
    """alpha > 1 is outside the concave-cost regime."""


class EnumerationCapExceeded(ValueError):
    """Instance too large for exhaustive vertex enumeration; use descent."""


def euclid(p, q):
    """Shared point-pair distance; every cost in the package routes through it."""
    return math.dist(p, q)


@dataclass(frozen=True)
class AtomicMeasure:
    """Finite weighted sum of point masses with total mass 1.

    atoms is a tuple of (point, mass) with pairwise distinct points and
    strictly positive masses. Masses may be floats or exact rationals.
    """

    atoms: tuple
    dim: int

    def __post_init__(self):
        atoms = tuple((tuple(p), m) for p, m in self.atoms)
        if not atoms:
            raise ValueError("measure needs at least one atom")
        for p, m in atoms:
            if len(p) != self.dim:
                raise ValueError(f"point {p} is not {self.dim}-dimensional")
            if not m > 0:
                raise ValueError(f"mass {m} at {p} must be positive")
        pts = [p for p, _ in atoms]
        if len(set(pts)) != len(pts):
            raise ValueError("duplicate atom locations (atoms must be distinct)")
        total = sum(m for _, m in atoms)
        if abs(total - 1) > MASS_TOL:
            raise ValueError(f"masses sum to {total}, not 1")
        object.__setattr__(self, "atoms", atoms)

    @property
    def points(self):
        return [p for p, _ in self.atoms]

    @property
    def masses(self):
        return [m for _, m in self.atoms]

    def __len__(self):
        return len(self.atoms)


def dirac(point):
    return AtomicMeasure(((tuple(point), 1.0),), dim=len(point))


def measure_from_weights(points, masses):
    points = [tuple(p) for p in points]
    return AtomicMeasure(tuple(zip(points, masses)), dim=len(points[0]))


@dataclass(frozen=True)
class TransportPlan:
    """Joint mass table between two atomic measures; only positive entries stored.

    entries is a tuple of (i, j, mass) sorted by (i, j). Row sums reproduce the
    source masses, column sums the target masses.
    """

    source: AtomicMeasure
    target: AtomicMeasure
    entries: tuple

    def __post_init__(self):
        ent = tuple(sorted((int(i), int(j), m) for i, j, m in self.entries))
        for i, j, m in ent:
            if not m > 0:
                raise ValueError(f"plan entry ({i},{j}) has nonpositive mass {m}")
            if not (0 <= i < len(self.source) and 0 <= j < len(self.target)):
                raise ValueError(f"plan entry ({i},{j}) out of range")
        row = [0] * len(self.source)
        col = [0] * len(self.target)
        for i, j, m in ent:
            row[i] += m
            col[j] += m
        for i, (a, r) in enumerate(zip(self.source.masses, row)):
            if abs(a - r) > MASS_TOL:
                raise ValueError(f"row {i} sums to {r}, expected {a}")
        for j, (b, c) in enumerate(zip(self.target.masses, col)):
            if abs(b - c) > MASS_TOL:
                raise ValueError(f"column {j} sums to {c}, expected {b}")
        object.__setattr__(self, "entries", ent)

    def support(self):
        return tuple((i, j) for i, j, _ in self.entries)


def identity_plan(a):
    return TransportPlan(a, a, tuple((i, i, m) for i, (_, m) in enumerate(a.atoms)))


def plan_cost(plan, alpha, metric=euclid):
    """Concave transport cost: sum of mass^alpha * distance over stored entries.

    Zero entries are absent by construction, so 0^alpha never arises; alpha = 1
    is the linear boundary case, alpha <= 0 is allowed.
    """
    if alpha > 1:
        raise UnsupportedExponent(f"alpha = {alpha} > 1")
    xs = plan.source.points
    ys = plan.target.points
    return sum(m ** alpha * metric(xs[i], ys[j]) for i, j, m in plan.entries)


# -- vertex enumeration over the transportation polytope ----------------------
#
# Basic feasible solutions correspond to spanning trees of the complete
# bipartite support graph: the tree determines the flows from the margins
# (cut an edge, net the margins on one side). Trees depend only on (m, n),
# so the structure is enumerated once per shape and cached as sign matrices;
# per instance the candidate flows are a single matrix product.

@lru_cache(maxsize=32)
def _tree_structure(m, n):
    """All spanning trees of K_{m,n} as (cells, signs).

    cells[t, k] is the flat index i*n+j of the k-th tree edge; signs[t, k] is
    a +-1/0 vector over (rows, cols) so that flows = signs @ [a, b] gives the
    basic solution (cols carry their sign already).
    """
    nodes = m + n
    need = nodes - 1
    all_cells = [(i, j) for i in range(m) for j in range(n)]
    trees = []
    parent = list(range(nodes))

    def find(x):
        while parent[x] != x:
            x = parent[x]
        return x

    def grow(start, chosen):
        if len(chosen) == need:
            trees.append(tuple(chosen))
            return
        for k in range(start, len(all_cells)):
            if len(all_cells) - k < need - len(chosen):
                break
            i, j = all_cells[k]
            ri, rj = find(i), find(m + j)
            if ri == rj:
                continue
            parent[ri] = rj
            chosen.append(k)
            grow(k + 1, chosen)
            chosen.pop()
            parent[ri] = ri

    grow(0, [])

    cells = np.array(trees, dtype=np.int64)
    signs = np.zeros((len(trees), need, nodes), dtype=np.int8)
    for t, tree in enumerate(trees):
        adj = {v: [] for v in range(nodes)}
        for k in tree:
            i, j = all_cells[k]
            adj[i].append(m + j)
            adj[m + j].append(i)
        # root at 0, record parents in BFS order
        order, par = [0], {0: None}
        for v in order:
            for w in adj[v]:
                if w not in par:
                    par[w] = v
                    order.append(w)
        # subtree bitmasks accumulated leaf-to-root
        mask = {v: 1 << v for v in range(nodes)}
        for v in reversed(order[1:]):
            mask[par[v]] |= mask[v]
        for k_idx, k in enumerate(tree):
            i, j = all_cells[k]
            child = m + j if par.get(m + j) == i else i
            side = mask[child]
            # flow leaves the side containing row endpoint i
            if not (side >> i) & 1:
                side = ((1 << nodes) - 1) ^ side
            for v in range(nodes):
                if (side >> v) & 1:
                    signs[t, k_idx, v] = 1 if v < m else -1
    return cells, signs


def _distance_matrix(a, b, metric=euclid):
    xs, ys = a.points, b.points
    return np.array([[metric(x, y) for y in ys] for x in xs])


def _vertex_flows(a, b):
    """(cells, flows, feasible) for every spanning-tree basis of the instance."""
    m, n = len(a), len(b)
    cells, signs = _tree_structure(m, n)
    z = np.array(list(a.masses) + list(b.masses), dtype=float)
    flows = signs.astype(float) @ z
    feasible = (flows >= -MASS_TOL).all(axis=1)
    return cells, flows, feasible


def enumerate_extreme_plans(a, b, cap=ENUM_CAP):
    """Yield the basic feasible solutions of Plan(a, b), deduplicated by support.

    Support forms a spanning forest (at most m+n-1 entries). Raises
    EnumerationCapExceeded when m+n exceeds the cap; use pivot descent then.
    """
    m, n = len(a), len(b)
    if m + n > cap:
        raise EnumerationCapExceeded(
            f"m+n = {m + n} exceeds enumeration cap {cap}; use the descent solver"
        )
    cells, flows, feasible = _vertex_flows(a, b)
    seen = set()
    for t in np.nonzero(feasible)[0]:
        entries = tuple(
            (int(c) // n, int(c) % n, float(f))
            for c, f in zip(cells[t], flows[t])
            if f > MASS_TOL
        )
        sig = tuple((i, j) for i, j, _ in entries)
        if sig in seen:
            continue
        seen.add(sig)
        yield TransportPlan(a, b, entries)


# -- solvers ------------------------------------------------------------------

@dataclass
class PlanResult:
    value: float
    plan: TransportPlan
    exact: bool
    interior_probe_improved: bool | None = None


def j_alpha(a, b, alpha, method="auto", cap=ENUM_CAP, metric=euclid):
    """Minimum plan cost between two atomic measures, with its optimal plan.

    method "enumerate" is exact (vertex enumeration); "descent" runs pivot
    descent from the northwest-corner basis and is flagged heuristic; "auto"
    enumerates when m+n <= cap. For alpha <= 0 the exact result additionally
    probes interior perturbations of the best vertex, since concavity no
    longer certifies vertex optimality there.
    """
    if alpha > 1:
        raise UnsupportedExponent(f"alpha = {alpha} > 1")
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    if method == "auto":
        method = "enumerate" if len(a) + len(b) <= cap else "descent"
    if method == "enumerate":
        return _solve_enumerate(a, b, alpha, cap, metric)
    if method == "descent":
        return _solve_descent(a, b, alpha, metric)
    raise ValueError(f"unknown method {method!r}")


def _solve_enumerate(a, b, alpha, cap, metric):
    m, n = len(a), len(b)
    if m + n > cap:
        raise EnumerationCapExceeded(
            f"m+n = {m + n} exceeds enumeration cap {cap}; use the descent solver"
        )
    cells, flows, feasible = _vertex_flows(a, b)
    dmat = _distance_matrix(a, b, metric)
    dists = dmat.ravel()[cells]
    positive = flows > MASS_TOL
    costs = np.where(positive, np.where(positive, flows, 1.0) ** alpha * dists, 0.0)
    totals = np.where(feasible, costs.sum(axis=1), np.inf)
    best = totals.min()
    # deterministic argmin: among exact ties prefer the smallest support
    tied = np.nonzero(totals == best)[0]
    def support_of(t):
        return tuple(
            (int(c) // n, int(c) % n)
            for c, f in zip(cells[t], flows[t])
            if f > MASS_TOL
        )
    winner = min(tied, key=lambda t: support_of(t))
    entries = tuple(
        (int(c) // n, int(c) % n, float(f))
        for c, f in zip(cells[winner], flows[winner])
        if f > MASS_TOL
    )
    plan = TransportPlan(a, b, entries)
    value = plan_cost(plan, alpha, metric)
    probe = _interior_probe(a, b, alpha, value, metric) if alpha <= 0 else None
    return PlanResult(value=value, plan=plan, exact=True,
                      interior_probe_improved=probe)


def _interior_probe(a, b, alpha, best_value, metric, steps=(1e-3, 1e-2, 0.1)):
    """Check whether blending the best vertex toward others beats it (alpha <= 0)."""
    plans = list(enumerate_extreme_plans(a, b))
    if len(plans) < 2:
        return False
    best = min(plans, key=lambda p: plan_cost(p, alpha, metric))
    base = {(i, j): m for i, j, m in best.entries}
    for other in plans:
        if other.support() == best.support():
            continue
        for t in steps:
            mix = dict(base)
            for key in mix:
                mix[key] = mix[key] * (1 - t)
            for i, j, m in other.entries:
                mix[(i, j)] = mix.get((i, j), 0.0) + t * m
            entries = tuple((i, j, m) for (i, j), m in mix.items() if m > MASS_TOL)
            cost = plan_cost(TransportPlan(a, b, entries), alpha, metric)
            if cost < best_value - 1e-9:
                return True
    return False


def _northwest_basis(ra, rb):
    """Staircase basis of m+n-1 cells; degenerate cells carry zero flow."""
    m, n = len(ra), len(rb)
    ra = list(ra)
    rb = list(rb)
    i = j = 0
    basis = []
    while True:
        q = min(ra[i], rb[j])
        basis.append([i, j, q])
        ra[i] -= q
        rb[j] -= q
        if i == m - 1 and j == n - 1:
            break
        if ra[i] == 0 and i < m - 1:
            i += 1
        else:
            j += 1
    return basis


_START_LIMIT = 600  # permuted-start budget: all m! * n! pairs up to this many


def _start_orders(masses, exhaustive):
    n = len(masses)
    if exhaustive:
        return list(itertools.permutations(range(n)))
    ident = tuple(range(n))
    orders = [
        ident,
        ident[::-1],
        tuple(sorted(range(n), key=lambda i: (-masses[i], i))),
        tuple(sorted(range(n), key=lambda i: (masses[i], i))),
    ]
    out = []
    for o in orders:
        if o not in out:
            out.append(o)
    return out


def _solve_descent(a, b, alpha, metric):
    """Multistart pivot descent over northwest-corner bases.

    A northwest basis depends on the atom order, so each (row order, column
    order) pair seeds one descent; small instances run every permutation pair,
    large ones a canonical quartet per side. Each descent moves along
    cost-decreasing basis exchanges only (the concave cost along a cycle
    shift is minimized at an endpoint, so pivoting to the adjacent vertex
    dominates the segment), steepest first, ties broken by lexicographically
    smallest entering cell. The best local minimum over the starts wins.
    """
    m, n = len(a), len(b)
    dmat = _distance_matrix(a, b, metric)
    am, bm = list(a.masses), list(b.masses)
    exhaustive = math.factorial(m) * math.factorial(n) <= _START_LIMIT
    best = None
    for ro in _start_orders(am, exhaustive):
        for co in _start_orders(bm, exhaustive):
            local = _pivot_descent(
                [am[i] for i in ro], [bm[j] for j in co],
                dmat[np.ix_(ro, co)], alpha,
            )
            entries = tuple(sorted((ro[i], co[j], f) for i, j, f in local))
            value = sum(f ** alpha * dmat[i, j] for i, j, f in entries)
            support = tuple((i, j) for i, j, _ in entries)
            key = (value, support)
            if best is None or key < best[0]:
                best = (key, entries)
    plan = TransportPlan(a, b, best[1])
    return PlanResult(value=plan_cost(plan, alpha, metric), plan=plan, exact=False)


def _pivot_descent(ra, rb, dmat, alpha):
    """Steepest-descent pivoting from the northwest basis of one margin order.

    Returns the positive entries of the local minimum in local indices.
    """
    m, n = len(ra), len(rb)
    basis = _northwest_basis(ra, rb)

    def cost_of(cells):
        return sum(f ** alpha * dmat[i, j] for i, j, f in cells if f > MASS_TOL)

    current = cost_of(basis)
    while True:
        in_basis = {(i, j) for i, j, _ in basis}
        adj = {}
        flow = {}
        for i, j, f in basis:
            adj.setdefault(("r", i), []).append(("c", j))
            adj.setdefault(("c", j), []).append(("r", i))
            flow[(i, j)] = f
        best_move = None
        for i in range(m):
            for j in range(n):
                if (i, j) in in_basis:
                    continue
                cycle = _basis_cycle(adj, i, j)
                neg = [(cell, flow[cell]) for cell, s in cycle if s < 0]
                t = min(f for _, f in neg)
                if t <= MASS_TOL:
                    continue  # degenerate pivot, no strict decrease possible
                trial = dict(flow)
                trial[(i, j)] = t
                for cell, s in cycle:
                    trial[cell] = trial.get(cell, 0.0) + s * t
                new_cost = sum(
                    f ** alpha * dmat[r, c]
                    for (r, c), f in trial.items() if f > MASS_TOL
                )
                move = (new_cost, (i, j))
                if best_move is None or move < best_move[:2]:
                    leaving = min(cell for cell, f in neg if f == t)
                    best_move = (new_cost, (i, j), leaving, t, cycle)
        if best_move is None or best_move[0] >= current - 1e-15 * max(1.0, abs(current)):
            break
        new_cost, entering, leaving, t, cycle = best_move
        updated = {(i, j): f for i, j, f in basis}
        updated[entering] = t
        for cell, s in cycle:
            updated[cell] += s * t
        del updated[leaving]
        basis = [[i, j, f] for (i, j), f in sorted(updated.items())]
        current = cost_of(basis)
    return tuple((i, j, f) for i, j, f in basis if f > MASS_TOL)


def _basis_cycle(adj, i, j):
    """Signed cells of the unique basis cycle closed by entering cell (i, j).

    The entering cell itself (sign +1) is excluded; returned cells alternate
    -1, +1 along the tree path from column j back to row i.
    """
    start, goal = ("c", j), ("r", i)
    prev = {start: None}
    queue = [start]
    for v in queue:
        if v == goal:
            break
        for w in adj[v]:
            if w not in prev:
                prev[w] = v
                queue.append(w)
    path = []
    v = goal
    while v is not None:
        path.append(v)
        v = prev[v]
    # path runs row i -> ... -> col j; consecutive nodes are basis cells
    out = []
    sign = -1
    for u, v in zip(path, path[1:]):
        cell = (u[1], v[1]) if u[0] == "r" else (v[1], u[1])
        out.append((cell, sign))
        sign = -sign
    return out


# -- composition and empirical relaxation -------------------------------------

def compose_plans(u, tau):
    """Chain a plan a->c with a plan c->b: gamma_ij = sum_k u_ik tau_kj / c_k.

    Margins compose exactly (telescoping), and the cost of the result obeys
    the relaxed triangle bound with constant N^(1-alpha) on measures of at
    most N atoms.
    """
    mid = u.target
    if tau.source.atoms != mid.atoms:
        raise ValueError("middle measures do not match atomwise")
    c = mid.masses
    by_k = {}
    for i, k, m in u.entries:
        by_k.setdefault(k, []).append((i, m))
    gamma = {}
    for k, j, t in tau.entries:
        for i, m in by_k.get(k, []):
            gamma[(i, j)] = gamma.get((i, j), 0) + m * t / c[k]
    entries = tuple((i, j, m) for (i, j), m in gamma.items() if m > 0)
    return TransportPlan(u.source, tau.target, entries)


def empirical_sigma(family, alpha, method="auto", cap=ENUM_CAP):
    """Largest observed J(a,b) / (J(a,c) + J(c,b)) over ordered triples.

    For measures of at most N atoms this must stay below N^(1-alpha).
    Returns at least 1 (the constant achieved by any metric).
    """
    values = {}
    ms = list(family)
    idx = range(len(ms))
    def jv(x, y):
        if x == y:
            return 0.0
        key = (min(x, y), max(x, y))
        if key not in values:
            values[key] = j_alpha(ms[key[0]], ms[key[1]], alpha,
                                  method=method, cap=cap).value
        return values[key]
    best = 1.0
    for x in idx:
        for y in idx:
            if x == y:
                continue
            for z in idx:
                den = jv(x, z) + jv(z, y)
                if den == 0:
                    continue
                r = jv(x, y) / den
                if r > best:
                    best = r
    return best


# -- JSON ---------------------------------------------------------------------

def measure_to_json(a):
    return {"dim": a.dim,
            "atoms": [{"point": list(p), "mass": m} for p, m in a.atoms]}


def measure_from_json(doc):
    atoms = tuple((tuple(at["point"]), at["mass"]) for at in doc["atoms"])
    return AtomicMeasure(atoms, dim=doc["dim"])


def load_measure(path):
    return measure_from_json(json.load(open(path)))


def plan_to_json(plan):
    return {
        "source": measure_to_json(plan.source),
        "target": measure_to_json(plan.target),
        "entries": [{"i": i, "j": j, "mass": m} for i, j, m in plan.entries],
    }


def plan_from_json(doc):
    return TransportPlan(
        measure_from_json(doc["source"]),
        measure_from_json(doc["target"]),
        tuple((e["i"], e["j"], e["mass"]) for e in doc["entries"]),
    )
