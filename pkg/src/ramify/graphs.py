"""Transport paths: weighted directed geometric graphs moving one measure to another.

A graph is a valid transport path when the balance equation holds at every
vertex: outflow minus inflow equals the source mass there, minus the sink
mass there, or zero. Its cost is sum over edges of weight^alpha * length.
Cycles (in the undirected sense, antiparallel pairs included) never help for
alpha in (0, 1] and are removed by shifting mass around the cycle to an
endpoint of its feasible interval, where the concave cost is minimal.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .measures import (AtomicMeasure, MASS_TOL, euclid, measure_from_json,
                       measure_to_json)


class UnknownVertex(ValueError):
    """Edge references a vertex id that is not declared."""


class CycleError(ValueError):
    """Operation requires an acyclic graph."""


@dataclass(frozen=True)
class TransportGraph:
    """Directed geometric graph with positive edge weights and terminal measures.

    vertices: tuple of (id, point); edges: tuple of (tail, head, weight).
    Parallel edges with the same direction are merged by weight addition at
    construction; self-loops are rejected.
    """

    vertices: tuple
    edges: tuple
    source: AtomicMeasure
    target: AtomicMeasure

    def __post_init__(self):
        verts = tuple((v, tuple(p)) for v, p in self.vertices)
        ids = [v for v, _ in verts]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate vertex ids")
        known = set(ids)
        merged = {}
        for tail, head, w in self.edges:
            if tail not in known or head not in known:
                raise UnknownVertex(f"edge ({tail}, {head}) uses undeclared vertex")
            if tail == head:
                raise ValueError(f"self-loop at {tail}")
            if not w > 0:
                raise ValueError(f"edge ({tail}, {head}) has nonpositive weight {w}")
            merged[(tail, head)] = merged.get((tail, head), 0.0) + w
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(
            self, "edges", tuple((t, h, w) for (t, h), w in merged.items())
        )

    def points(self):
        return dict(self.vertices)

    def edge_count(self):
        return len(self.edges)


@dataclass
class BalanceReport:
    residuals: dict
    max_residual: float
    valid: bool
    messages: list = field(default_factory=list)


def validate_graph(g, tol=MASS_TOL):
    """Per-vertex residuals of the balance equation.

    A vertex hosting both a source and a target atom must emit their net
    difference. Atom coordinates of either measure that match no vertex make
    the graph invalid.
    """
    pts = g.points()
    required = {}
    coord_to_vertex = {}
    for v, p in g.vertices:
        coord_to_vertex.setdefault(p, v)
    messages = []
    for p, m in g.source.atoms:
        if p not in coord_to_vertex:
            messages.append(f"source atom at {p} has no vertex")
        else:
            v = coord_to_vertex[p]
            required[v] = required.get(v, 0.0) + m
    for p, m in g.target.atoms:
        if p not in coord_to_vertex:
            messages.append(f"target atom at {p} has no vertex")
        else:
            v = coord_to_vertex[p]
            required[v] = required.get(v, 0.0) - m
    net = {v: 0.0 for v in pts}
    for tail, head, w in g.edges:
        net[tail] += w
        net[head] -= w
    residuals = {v: net[v] - required.get(v, 0.0) for v in pts}
    worst = max((abs(r) for r in residuals.values()), default=0.0)
    return BalanceReport(
        residuals=residuals,
        max_residual=worst,
        valid=worst <= tol and not messages,
        messages=messages,
    )


def m_alpha(g, alpha):
    """Transport cost: sum of weight^alpha * Euclidean edge length."""
    if alpha > 1:
        raise ValueError(f"alpha = {alpha} > 1")
    pts = g.points()
    return sum(w ** alpha * euclid(pts[t], pts[h]) for t, h, w in g.edges)


def plan_to_graph(plan):
    """Star graph of a transport plan: one edge per entry, weight gamma_ij.

    Vertices are the distinct atom locations of both measures. Entries whose
    endpoints coincide move no mass anywhere and are dropped (they contribute
    exactly zero cost), so m_alpha reproduces plan_cost for every alpha.
    """
    coords = []
    index = {}
    for p in list(plan.source.points) + list(plan.target.points):
        if p not in index:
            index[p] = f"v{len(coords)}"
            coords.append(p)
    xs, ys = plan.source.points, plan.target.points
    edges = tuple(
        (index[xs[i]], index[ys[j]], m)
        for i, j, m in plan.entries
        if xs[i] != ys[j]
    )
    vertices = tuple((index[p], p) for p in coords)
    return TransportGraph(vertices, edges, plan.source, plan.target)


def sum_graphs(gs):
    """Chain sum of transport paths a1 -> a2 -> ... -> ak.

    Vertices are identified by coordinate. Weights add on identical directed
    pairs; antiparallel weights cancel (the heavier direction keeps the net,
    nets at most 1e-12 are dropped), matching summation of oriented chains.
    """
    gs = list(gs)
    if not gs:
        raise ValueError("nothing to sum")
    for g1, g2 in zip(gs, gs[1:]):
        if not _measures_close(g1.target, g2.source):
            raise ValueError("chain mismatch: target of one graph is not "
                             "the source of the next")
    index = {}
    coords = []
    acc = {}
    for g in gs:
        pts = g.points()
        for v, p in g.vertices:
            if p not in index:
                index[p] = f"v{len(coords)}"
                coords.append(p)
        for t, h, w in g.edges:
            key = (index[pts[t]], index[pts[h]])
            acc[key] = acc.get(key, 0.0) + w
    edges = []
    done = set()
    for (t, h), w in acc.items():
        if (t, h) in done:
            continue
        back = acc.get((h, t))
        if back is None:
            edges.append((t, h, w))
        else:
            done.add((h, t))
            net = w - back
            if net > MASS_TOL:
                edges.append((t, h, net))
            elif net < -MASS_TOL:
                edges.append((h, t, -net))
        done.add((t, h))
    vertices = tuple((index[p], p) for p in coords)
    return TransportGraph(vertices, tuple(edges), gs[0].source, gs[-1].target)


# -- cycles --------------------------------------------------------------------

def find_cycle(g):
    """One undirected cycle as [(edge_index, sign)] or None if the graph is a forest.

    sign is +1 when the directed edge is aligned with the traversal direction.
    Antiparallel edge pairs count as (two-edge) cycles: as oriented chains they
    partially cancel, exactly like longer cycles.
    """
    parent = {}

    def find(x):
        root = x
        while parent.get(root, root) != root:
            root = parent[root]
        return root

    tree_adj = {}
    for idx, (t, h, _) in enumerate(g.edges):
        rt, rh = find(t), find(h)
        if rt == rh:
            # recover tree path h -> t, then close with edge idx
            prev = {h: None}
            queue = [h]
            for v in queue:
                if v == t:
                    break
                for w, eidx, sign in tree_adj.get(v, []):
                    if w not in prev:
                        prev[w] = (v, eidx, sign)
                        queue.append(w)
            cycle = [(idx, 1)]
            v = t
            while prev[v] is not None:
                u, eidx, sign = prev[v]
                cycle.append((eidx, sign))
                v = u
            return cycle
        parent[rt] = rh
        # sign: +1 when walking tail -> head, -1 when walking against the edge
        tree_adj.setdefault(t, []).append((h, idx, 1))
        tree_adj.setdefault(h, []).append((t, idx, -1))
    return None


def is_acyclic(g):
    return find_cycle(g) is None


def remove_cycles(g, alpha):
    """Cycle-free transport path with no larger cost, for alpha in (0, 1].

    Shifts mass around each cycle: every edge term (w +- t)^alpha is concave
    in the shift, so one endpoint of the feasible interval is optimal and
    zeroes out at least one edge. Rejects alpha <= 0, where the terms are
    convex in the shift and the endpoint argument fails.
    """
    if not 0 < alpha <= 1:
        raise ValueError("cycle removal requires alpha in (0, 1]")
    pts = g.points()
    edges = list(g.edges)
    while True:
        work = TransportGraph(g.vertices, tuple(edges), g.source, g.target)
        cycle = find_cycle(work)
        if cycle is None:
            break
        elist = list(work.edges)
        aligned = [elist[i][2] for i, s in cycle if s > 0]
        opposed = [elist[i][2] for i, s in cycle if s < 0]
        lo = -min(aligned) if aligned else None
        hi = min(opposed) if opposed else None

        def shifted_cost(t):
            c = 0.0
            for i, s in cycle:
                tail, head, w = elist[i]
                nw = w + s * t
                if nw > MASS_TOL:
                    c += nw ** alpha * euclid(pts[tail], pts[head])
            return c

        candidates = [t for t in (lo, hi) if t is not None]
        best = min(candidates, key=shifted_cost)
        edges = []
        shift = {i: s for i, s in cycle}
        for i, (tail, head, w) in enumerate(elist):
            nw = w + shift.get(i, 0) * best
            if nw > MASS_TOL:
                edges.append((tail, head, nw))
    used = {v for t, h, _ in edges for v in (t, h)}
    keep = {p for p, _ in g.source.atoms} | {p for p, _ in g.target.atoms}
    vertices = tuple((v, p) for v, p in g.vertices if v in used or p in keep)
    return TransportGraph(vertices, tuple(edges), g.source, g.target)


# -- decomposition ---------------------------------------------------------------

@dataclass
class PathDecomposition:
    """Pairwise routing u_ij with the polyline each pair travels.

    u has the plan margins; weighting each route's oriented segments by u_ij
    and summing reproduces every edge weight of the decomposed graph.
    """

    u: np.ndarray
    routes: list


def decompose(g):
    """Proportional-routing decomposition of a valid acyclic transport path.

    In topological order, the mass arriving at a vertex splits across outgoing
    edges proportionally to their weights; a forest has a unique directed path
    per (source, sink) pair, so the routes are forced.
    """
    if find_cycle(g) is not None:
        raise CycleError("decomposition requires an acyclic graph")
    report = validate_graph(g)
    if not report.valid:
        raise ValueError(f"graph does not balance: {report.max_residual:.3g}")
    pts = g.points()
    coord_to_vertex = {}
    for v, p in g.vertices:
        coord_to_vertex.setdefault(p, v)
    m, n = len(g.source), len(g.target)
    src_vertex = [coord_to_vertex[p] for p in g.source.points]
    dst_vertex = [coord_to_vertex[p] for p in g.target.points]
    sink_mass = {}
    for j, (p, b) in enumerate(g.target.atoms):
        sink_mass[coord_to_vertex[p]] = (j, b)

    out_edges = {v: [] for v in pts}
    indeg = {v: 0 for v in pts}
    for t, h, w in g.edges:
        out_edges[t].append((h, w))
        indeg[h] += 1
    order = [v for v in sorted(pts, key=str) if indeg[v] == 0]
    for v in order:
        for h, _ in out_edges[v]:
            indeg[h] -= 1
            if indeg[h] == 0:
                order.append(h)

    comp = {v: {} for v in pts}
    for i, (p, a) in enumerate(g.source.atoms):
        v = coord_to_vertex[p]
        comp[v][i] = comp[v].get(i, 0.0) + a
    u = np.zeros((m, n))
    for v in order:
        avail = comp[v]
        total = sum(avail.values())
        if total <= MASS_TOL:
            continue
        if v in sink_mass:
            j, b = sink_mass[v]
            for i, mass in avail.items():
                u[i, j] += mass * (b / total)
        for h, w in out_edges[v]:
            frac = w / total
            for i, mass in avail.items():
                comp[h][i] = comp[h].get(i, 0.0) + mass * frac

    routes = [[[] for _ in range(n)] for _ in range(m)]
    for i in range(m):
        for j in range(n):
            if u[i, j] > MASS_TOL:
                routes[i][j] = _directed_path(out_edges, src_vertex[i], dst_vertex[j])
    return PathDecomposition(u=u, routes=routes)


def _directed_path(out_edges, start, goal):
    if start == goal:
        return [start]
    prev = {start: None}
    queue = [start]
    for v in queue:
        for h, _ in out_edges[v]:
            if h not in prev:
                prev[h] = v
                queue.append(h)
        if goal in prev:
            break
    if goal not in prev:
        raise ValueError(f"no directed route from {start} to {goal}")
    path = [goal]
    while prev[path[-1]] is not None:
        path.append(prev[path[-1]])
    return path[::-1]


def _measures_close(a, b, tol=MASS_TOL):
    if a.dim != b.dim or len(a) != len(b):
        return False
    bm = dict(b.atoms)
    for p, m in a.atoms:
        if p not in bm or abs(bm[p] - m) > tol:
            return False
    return True


# -- JSON -----------------------------------------------------------------------

def graph_to_json(g):
    return {
        "vertices": [{"id": v, "point": list(p)} for v, p in g.vertices],
        "edges": [{"tail": t, "head": h, "weight": w} for t, h, w in g.edges],
        "source": measure_to_json(g.source),
        "target": measure_to_json(g.target),
    }


def graph_from_json(doc):
    return TransportGraph(
        vertices=tuple((v["id"], tuple(v["point"])) for v in doc["vertices"]),
        edges=tuple((e["tail"], e["head"], e["weight"]) for e in doc["edges"]),
        source=measure_from_json(doc["source"]),
        target=measure_from_json(doc["target"]),
    )


def load_graph(path):
    return graph_from_json(json.load(open(path)))
