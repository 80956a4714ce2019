"""Branched-topology optimization of the transport cost between atomic measures.

The geodesic distance between two atomic measures equals the minimum graph
cost over all transport paths. Exact mode enumerates full tree topologies
(terminals as leaves, degree-3 branch vertices); every other tree arises from
a full one by edge contraction, which the coordinate optimization reaches on
its own when branch vertices collapse. For a fixed topology the edge weights
are forced by the balance equation and the cost is convex in the branch
coordinates, so damped Weiszfeld iteration finds the topology's optimum and
the global minimum is the best topology.

Heuristic mode starts from the optimal-plan star and applies greedy local
moves (branch merges, branch relocation, subtree reattachment), accepting
only improvements, so the result never costs more than the plan it started
from.
"""

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .graphs import TransportGraph, m_alpha, plan_to_graph
from .measures import MASS_TOL, euclid, j_alpha

EXACT_CAP = 8
COLLAPSE_TOL = 1e-7
COORD_TOL = 1e-9
MAX_SWEEPS = 10_000
DAMPING = 0.5


class ExactCapExceeded(ValueError):
    """Too many terminals for exhaustive topology enumeration."""


@dataclass
class TopologyResult:
    graph: TransportGraph
    value: float
    exact: bool


def terminals_of(a, b):
    """Distinct atom coordinates with their net mass (source minus sink).

    Coordinates whose source and sink masses cancel impose no constraint on
    a transport path and are excluded.
    """
    net = {}
    for p, m in a.atoms:
        net[p] = net.get(p, 0.0) + m
    for p, m in b.atoms:
        net[p] = net.get(p, 0.0) - m
    pts, nets = [], []
    for p, v in net.items():
        if abs(v) > MASS_TOL:
            pts.append(p)
            nets.append(v)
    return pts, nets


@lru_cache(maxsize=16)
def full_topologies(t_count):
    """All full tree topologies: terminals 0..t-1 as leaves, branch nodes of
    degree 3 numbered from t_count. Built by inserting each terminal into
    every edge of every smaller topology, which yields each topology once.
    """
    if t_count < 2:
        return ((),)
    topos = [((0, 1),)]
    for k in range(2, t_count):
        s = t_count + (k - 2)
        nxt = []
        for edges in topos:
            for idx, (u, v) in enumerate(edges):
                rest = edges[:idx] + edges[idx + 1:]
                nxt.append(rest + ((u, s), (s, v), (k, s)))
        topos = nxt
    return tuple(topos)


def _edge_flows(edges, nets, node_count):
    """Signed flows forced by the balance equation on a tree topology.

    Returns [(tail, head, weight)] with weight > 0 for flowing edges plus a
    list of zero-flow edges; independent of any branch coordinates.
    """
    if not edges:
        return [], []
    adj = {v: [] for v in range(node_count)}
    present = set()
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
        present.update((u, v))
    root = min(present)
    order, parent = [root], {root: None}
    for v in order:
        for w in adj[v]:
            if w not in parent:
                parent[w] = v
                order.append(w)
    sub = {v: (nets[v] if v < len(nets) else 0.0) for v in order}
    for v in reversed(order[1:]):
        sub[parent[v]] += sub[v]
    flowing, silent = [], []
    for v in order[1:]:
        f = sub[v]
        if f > MASS_TOL:
            flowing.append((v, parent[v], f))
        elif f < -MASS_TOL:
            flowing.append((parent[v], v, -f))
        else:
            silent.append((v, parent[v]))
    return flowing, silent


# -- coordinate optimization ---------------------------------------------------

def _scalar_optimize(fixed, free, flow_edges, alpha,
                     max_sweeps=MAX_SWEEPS, tol=COORD_TOL):
    """Damped Weiszfeld sweeps over the free nodes of one structure.

    fixed: node -> coordinate tuple (terminals); free: node -> mutable list
    coordinate. Mutates free in place until the largest coordinate step drops
    below tol.
    """
    pulls = {v: [] for v in free}
    for u, v, w in flow_edges:
        c = w ** alpha
        if u in pulls:
            pulls[u].append((v, c))
        if v in pulls:
            pulls[v].append((u, c))

    def coord(v):
        return fixed[v] if v in fixed else free[v]

    nodes = sorted(free)
    for _ in range(max_sweeps):
        worst = 0.0
        for v in nodes:
            anchors = pulls[v]
            if not anchors:
                continue
            p = free[v]
            num = [0.0] * len(p)
            den = 0.0
            for nbr, c in anchors:
                q = coord(nbr)
                d = max(euclid(p, q), 1e-12)
                inv = c / d
                den += inv
                for k in range(len(p)):
                    num[k] += inv * q[k]
            if den <= 0:
                continue
            step = 0.0
            for k in range(len(p)):
                new = p[k] + DAMPING * (num[k] / den - p[k])
                step = max(step, abs(new - p[k]))
                p[k] = new
            worst = max(worst, step)
        if worst < tol:
            break


def _structure_cost(fixed, free, flow_edges, alpha):
    def coord(v):
        return fixed[v] if v in fixed else tuple(free[v])
    return sum(w ** alpha * euclid(coord(u), coord(v)) for u, v, w in flow_edges)


def _refine_with_contraction(fixed, free, flow_edges, alpha,
                             max_sweeps=MAX_SWEEPS):
    """Contract branch nodes that collapsed onto a neighbor and re-optimize.

    Returns (cost, coords, edges) of the final structure; coords maps every
    surviving node to its coordinate tuple and edges keep their flows.
    """
    fixed = dict(fixed)
    free = {v: list(p) for v, p in free.items()}
    edges = list(flow_edges)
    while True:
        def coord(v):
            return fixed[v] if v in fixed else free[v]
        merge = None
        for u, v, _ in edges:
            for s, other in ((u, v), (v, u)):
                if s in free and euclid(coord(s), coord(other)) < COLLAPSE_TOL:
                    merge = (s, other)
                    break
            if merge:
                break
        if merge is None:
            break
        s, other = merge
        del free[s]
        edges = [
            (other if u == s else u, other if v == s else v, w)
            for u, v, w in edges
        ]
        edges = [(u, v, w) for u, v, w in edges if u != v]
        _scalar_optimize(fixed, free, edges, alpha, max_sweeps=max_sweeps)
    coords = dict(fixed)
    coords.update({v: tuple(p) for v, p in free.items()})
    return _structure_cost(fixed, free, edges, alpha), coords, edges


def _batch_optimize(term_xy, topo_list, flows_list, t_count, alpha,
                    max_sweeps=MAX_SWEEPS, tol=COORD_TOL):
    """Jacobi Weiszfeld over all full topologies of one instance at once.

    Full topologies share their shape (t_count - 2 branch nodes of degree 3),
    so neighbor ids and edge coefficients pack into rectangular arrays and
    every sweep is a handful of vectorized operations.
    """
    B = len(topo_list)
    s_count = t_count - 2
    dim = term_xy.shape[1]
    n_total = t_count + s_count
    nbr = np.zeros((B, s_count, 3), dtype=np.int64)
    coef = np.zeros((B, s_count, 3))
    fill = np.zeros((B, s_count), dtype=np.int64)
    for b in range(B):
        flowing, silent = flows_list[b]
        for u, v, w in flowing:
            c = w ** alpha
            for x, y in ((u, v), (v, u)):
                if x >= t_count:
                    k = fill[b, x - t_count]
                    nbr[b, x - t_count, k] = y
                    coef[b, x - t_count, k] = c
                    fill[b, x - t_count] += 1
        for u, v in silent:
            for x, y in ((u, v), (v, u)):
                if x >= t_count:
                    k = fill[b, x - t_count]
                    nbr[b, x - t_count, k] = y
                    coef[b, x - t_count, k] = 0.0
                    fill[b, x - t_count] += 1

    pos = np.empty((B, n_total, dim))
    pos[:, :t_count] = term_xy
    pos[:, t_count:] = term_xy.mean(axis=0)
    rows = np.arange(B)[:, None, None]
    # spread branch nodes toward their topological place before Weiszfeld
    for _ in range(20):
        npos = pos[rows, nbr]
        pos[:, t_count:] = npos.mean(axis=2)
    for _ in range(max_sweeps):
        cur = pos[:, t_count:]
        npos = pos[rows, nbr]
        diff = cur[:, :, None, :] - npos
        dist = np.sqrt((diff ** 2).sum(axis=-1))
        inv = coef / np.maximum(dist, 1e-12)
        den = inv.sum(axis=2)
        tgt = (inv[..., None] * npos).sum(axis=2) / np.maximum(den, 1e-300)[..., None]
        tgt = np.where(den[..., None] > 0, tgt, cur)
        new = cur + DAMPING * (tgt - cur)
        step = np.abs(new - cur).max() if new.size else 0.0
        pos[:, t_count:] = new
        if step < tol:
            break
    return pos


# -- exact solver ----------------------------------------------------------------

def optimize_topology(a, b, alpha, mode="exact", cap=EXACT_CAP,
                      max_sweeps=MAX_SWEEPS):
    """Best transport path found between two atomic measures.

    Exact mode enumerates full topologies over the terminals (capped), exact
    flag True; heuristic mode improves the optimal-plan star by local moves
    and is valid at any size, exact flag False with value never above the
    plan cost it started from.
    """
    if alpha > 1:
        raise ValueError(f"alpha = {alpha} > 1")
    if a.dim != b.dim:
        raise ValueError("dimension mismatch")
    if mode == "heuristic":
        return _optimize_heuristic(a, b, alpha)
    if mode != "exact":
        raise ValueError(f"unknown mode {mode!r}")
    pts, nets = terminals_of(a, b)
    t_count = len(pts)
    if t_count > cap:
        raise ExactCapExceeded(
            f"{t_count} terminals exceed exact-mode cap {cap}; use heuristic mode"
        )
    if t_count == 0:
        graph = _assemble_graph(a, b, {}, [])
        return TopologyResult(graph=graph, value=0.0, exact=True)
    if t_count == 2:
        w = abs(nets[0])
        tail, head = (0, 1) if nets[0] > 0 else (1, 0)
        coords = {0: pts[0], 1: pts[1]}
        graph = _assemble_graph(a, b, coords, [(tail, head, w)])
        return TopologyResult(graph=graph, value=m_alpha(graph, alpha), exact=True)

    term_xy = np.array(pts, dtype=float)
    topo_list = full_topologies(t_count)
    flows_list = [
        _edge_flows(edges, nets, 2 * t_count - 2) for edges in topo_list
    ]
    pos = _batch_optimize(term_xy, topo_list, flows_list, t_count, alpha,
                          max_sweeps=max_sweeps)
    fixed = {i: pts[i] for i in range(t_count)}
    best = None
    for idx in range(len(topo_list)):
        flowing, _ = flows_list[idx]
        free = {
            t_count + k: list(pos[idx, t_count + k])
            for k in range(t_count - 2)
        }
        cost, coords, edges = _refine_with_contraction(
            fixed, free, flowing, alpha, max_sweeps=max_sweeps
        )
        if best is None or (cost, idx) < (best[0], best[1]):
            best = (cost, idx, coords, edges)
    _, _, coords, edges = best
    graph = _assemble_graph(a, b, coords, edges)
    value = m_alpha(graph, alpha)
    # the optimal-plan star is itself a transport path; when every branch
    # vertex wants to sit on a terminal, Weiszfeld stalls a hair above it and
    # the star is the exact degenerate optimum
    star_res = j_alpha(a, b, alpha, method="auto")
    star = plan_to_graph(star_res.plan)
    star_value = m_alpha(star, alpha)
    if star_value < value:
        graph, value = star, star_value
    return TopologyResult(graph=graph, value=value, exact=True)


def d_j_alpha(a, b, alpha, cap=EXACT_CAP):
    """Geodesic distance: minimum transport-path cost, computed exactly."""
    return optimize_topology(a, b, alpha, mode="exact", cap=cap).value


def _assemble_graph(a, b, coords, flow_edges):
    """TransportGraph from optimized structure; all atom coordinates become
    vertices even when isolated (zero net mass moves nothing)."""
    by_coord = {}
    vertices = []

    def vid(p, prefix):
        if p not in by_coord:
            by_coord[p] = f"{prefix}{len(vertices)}"
            vertices.append((by_coord[p], p))
        return by_coord[p]

    for p, _ in a.atoms:
        vid(p, "v")
    for p, _ in b.atoms:
        vid(p, "v")
    edges = []
    for u, v, w in flow_edges:
        if w <= MASS_TOL:
            continue
        pu = tuple(float(x) for x in coords[u])
        pv = tuple(float(x) for x in coords[v])
        if pu == pv:
            continue
        edges.append((vid(pu, "s"), vid(pv, "s"), float(w)))
    return TransportGraph(tuple(vertices), tuple(edges), a, b)


# -- restricted edge budgets ------------------------------------------------------

def _canonical_signature(edges, node_kinds):
    """Canonical form of a topology tree, branch nodes interchangeable.

    Terminals are distinguishable (they carry fixed coordinates), so rooting
    at terminal 0 and sorting subtree encodings canonically identifies trees
    up to relabeling of branch nodes.
    """
    adj = {}
    for u, v in edges:
        adj.setdefault(u, []).append(v)
        adj.setdefault(v, []).append(u)

    def encode(v, parent):
        kids = sorted(encode(w, v) for w in adj.get(v, []) if w != parent)
        return (node_kinds[v], tuple(kids))

    root = 0
    return encode(root, None)


@lru_cache(maxsize=16)
def enumerate_topologies(t_count):
    """Every tree topology over the terminals: full topologies plus all their
    edge contractions that do not merge two terminals, deduplicated."""
    if t_count == 2:
        return (((0, 1),), 2),
    seen = {}
    for full in full_topologies(t_count):
        n_edges = len(full)
        for mask in range(1 << n_edges):
            groups = {}
            parent = {}

            def find(x):
                while parent.get(x, x) != x:
                    x = parent[x]
                return x

            ok = True
            for k in range(n_edges):
                if mask >> k & 1:
                    u, v = full[k]
                    ru, rv = find(u), find(v)
                    if ru != rv:
                        # keep terminal representative if any
                        if rv < t_count:
                            parent[ru] = rv
                        else:
                            parent[rv] = ru
            # relabel groups; reject terminal-terminal merges
            labels = {}
            for node in range(2 * t_count - 2):
                r = find(node)
                labels.setdefault(r, []).append(node)
            for r, members in labels.items():
                if sum(1 for m in members if m < t_count) > 1:
                    ok = False
                    break
            if not ok:
                continue
            remap = {}
            next_branch = t_count
            for node in range(2 * t_count - 2):
                r = find(node)
                if r not in remap:
                    if r < t_count:
                        remap[r] = r
                    else:
                        remap[r] = next_branch
                        next_branch += 1
            new_edges = tuple(
                sorted(
                    (min(remap[find(u)], remap[find(v)]),
                     max(remap[find(u)], remap[find(v)]))
                    for k, (u, v) in enumerate(full)
                    if not (mask >> k & 1)
                )
            )
            kinds = {n: ("T", n) if n < t_count else ("S",)
                     for n in range(next_branch)}
            sig = _canonical_signature(new_edges, kinds)
            if sig not in seen:
                seen[sig] = (new_edges, next_branch)
    return tuple(seen.values())


def stabilization_profile(a, b, alpha, k_max=None, cap=EXACT_CAP):
    """Best cost over transport paths with at most k edges, for k up to k_max.

    Nonincreasing in k; stabilizes no later than 4N-3 edges where N bounds the
    atom counts of the endpoints, which is where the unrestricted optimum is
    reached. Entries are infinite while k is too small to span the terminals.
    """
    if alpha > 1:
        raise ValueError(f"alpha = {alpha} > 1")
    n_cap = max(len(a), len(b))
    if k_max is None:
        k_max = 4 * n_cap - 3
    pts, nets = terminals_of(a, b)
    t_count = len(pts)
    if t_count > cap:
        raise ExactCapExceeded(f"{t_count} terminals exceed cap {cap}")
    if t_count == 0:
        return [(k, 0.0) for k in range(1, k_max + 1)]
    term_fixed = {i: pts[i] for i in range(t_count)}
    evaluated = []  # (edge_count, cost)
    if t_count == 2:
        w = abs(nets[0])
        cost = w ** alpha * euclid(pts[0], pts[1])
        evaluated.append((1, cost))
    else:
        centroid = tuple(np.array(pts, dtype=float).mean(axis=0))
        for edges, node_count in enumerate_topologies(t_count):
            flowing, _ = _edge_flows(edges, nets, node_count)
            free = {
                v: list(centroid) for v in range(t_count, node_count)
            }
            _scalar_optimize(term_fixed, free, flowing, alpha)
            cost, coords, kept = _refine_with_contraction(
                term_fixed, free, flowing, alpha
            )
            realized = sum(
                1 for u, v, w in kept
                if w > MASS_TOL and tuple(coords[u]) != tuple(coords[v])
            )
            evaluated.append((realized, cost))
    profile = []
    for k in range(1, k_max + 1):
        feasible = [c for e, c in evaluated if e <= k]
        profile.append((k, min(feasible) if feasible else math.inf))
    return profile


# -- heuristic solver --------------------------------------------------------------

class _ForestState:
    """Mutable tree/forest over terminals plus created branch nodes.

    Edge flows are always re-derived from the balance equation, so every move
    just edits the undirected adjacency and asks for the cost again.
    """

    def __init__(self, coords, nets, pinned):
        self.coords = {v: list(p) for v, p in coords.items()}
        self.nets = dict(nets)
        self.pinned = set(pinned)
        self.adj = {v: set() for v in coords}
        self.counter = 0

    def add_edge(self, u, v):
        self.adj[u].add(v)
        self.adj[v].add(u)

    def remove_edge(self, u, v):
        self.adj[u].discard(v)
        self.adj[v].discard(u)

    def new_branch(self, p):
        vid = f"h{self.counter}"
        self.counter += 1
        self.coords[vid] = list(p)
        self.nets[vid] = 0.0
        self.adj[vid] = set()
        return vid

    def flows(self):
        """Directed flows (tail, head, w > 0) forced by the balance equation."""
        seen = set()
        out = []
        for root in sorted(self.adj):
            if root in seen:
                continue
            order, parent = [root], {root: None}
            seen.add(root)
            for v in order:
                for w in sorted(self.adj[v]):
                    if w not in parent:
                        parent[w] = v
                        order.append(w)
                        seen.add(w)
            sub = {v: self.nets.get(v, 0.0) for v in order}
            for v in reversed(order[1:]):
                sub[parent[v]] += sub[v]
            for v in order[1:]:
                f = sub[v]
                if f > MASS_TOL:
                    out.append((v, parent[v], f))
                elif f < -MASS_TOL:
                    out.append((parent[v], v, -f))
        return out

    def cost(self, alpha, flows=None):
        if flows is None:
            flows = self.flows()
        return sum(
            w ** alpha * euclid(self.coords[u], self.coords[v])
            for u, v, w in flows
        )

    def subtree(self, start, banned):
        """Nodes reachable from start without crossing into banned."""
        seen = {start}
        queue = [start]
        for v in queue:
            for w in self.adj[v]:
                if w != banned and w not in seen:
                    seen.add(w)
                    queue.append(w)
        return seen


def _fermat3(p1, c1, p2, c2, p3, c3):
    """Weighted three-point Fermat optimum (point, cost); anchors compared too."""
    x = [(p1[k] + p2[k] + p3[k]) / 3.0 for k in range(len(p1))]
    anchors = ((p1, c1), (p2, c2), (p3, c3))
    for _ in range(200):
        num = [0.0] * len(x)
        den = 0.0
        for q, c in anchors:
            d = max(euclid(x, q), 1e-12)
            inv = c / d
            den += inv
            for k in range(len(x)):
                num[k] += inv * q[k]
        step = 0.0
        for k in range(len(x)):
            new = x[k] + DAMPING * (num[k] / den - x[k])
            step = max(step, abs(new - x[k]))
            x[k] = new
        if step < 1e-10:
            break

    def total(q):
        return c1 * euclid(p1, q) + c2 * euclid(p2, q) + c3 * euclid(p3, q)

    candidates = [tuple(x), tuple(p1), tuple(p2), tuple(p3)]
    best = min(candidates, key=total)
    return best, total(best)


def _optimize_heuristic(a, b, alpha, max_moves=10_000):
    plan = j_alpha(a, b, alpha, method="auto").plan
    g0 = plan_to_graph(plan)
    pts = g0.points()
    net = {}
    for p, m in a.atoms:
        net[p] = net.get(p, 0.0) + m
    for p, m in b.atoms:
        net[p] = net.get(p, 0.0) - m
    state = _ForestState(
        coords={v: p for v, p in g0.vertices},
        nets={v: net.get(p, 0.0) for v, p in g0.vertices},
        pinned=[v for v, _ in g0.vertices],
    )
    for t, h, _ in g0.edges:
        state.add_edge(t, h)

    _relocate(state, alpha, max_sweeps=200)
    current = state.cost(alpha)
    for _ in range(max_moves):
        moved, current = _best_merge(state, alpha, current)
        if not moved:
            moved, current = _best_reassign(state, alpha, current)
        if not moved:
            break
        _cleanup(state)
        _relocate(state, alpha, max_sweeps=60)
        current = state.cost(alpha)
    _relocate(state, alpha, max_sweeps=2000)
    _cleanup(state)

    flows = state.flows()
    coords = {v: tuple(p) for v, p in state.coords.items()}
    graph = _assemble_graph(a, b, coords, flows)
    return TopologyResult(graph=graph, value=m_alpha(graph, alpha), exact=False)


def _relocate(state, alpha, max_sweeps):
    """Damped Weiszfeld over the created branch nodes (flows stay fixed)."""
    flows = state.flows()
    movable = sorted(v for v in state.coords if v not in state.pinned)
    if not movable:
        return
    pulls = {v: [] for v in movable}
    for u, v, w in flows:
        c = w ** alpha
        if u in pulls:
            pulls[u].append((v, c))
        if v in pulls:
            pulls[v].append((u, c))
    for _ in range(max_sweeps):
        worst = 0.0
        for v in movable:
            anchors = pulls[v]
            if not anchors:
                continue
            p = state.coords[v]
            num = [0.0] * len(p)
            den = 0.0
            for nbr, c in anchors:
                q = state.coords[nbr]
                d = max(euclid(p, q), 1e-12)
                inv = c / d
                den += inv
                for k in range(len(p)):
                    num[k] += inv * q[k]
            if den <= 0:
                continue
            for k in range(len(p)):
                new = p[k] + DAMPING * (num[k] / den - p[k])
                worst = max(worst, abs(new - p[k]))
                p[k] = new
        if worst < COORD_TOL:
            break


def _best_merge(state, alpha, current):
    """Steepest branch-creation move: reroute two inflows of one head through
    a new branch point placed at the weighted Fermat optimum."""
    flows = state.flows()
    incoming = {}
    for u, v, w in flows:
        incoming.setdefault(v, []).append((u, w))
    best = None
    for v in sorted(incoming):
        ins = incoming[v]
        if len(ins) < 2:
            continue
        pv = state.coords[v]
        ranked = sorted(
            ins, key=lambda uw: math.atan2(
                state.coords[uw[0]][1] - pv[1], state.coords[uw[0]][0] - pv[0]
            ) if len(pv) > 1 else 0.0
        )
        pairs = set()
        for k in range(len(ranked)):
            u1, w1 = ranked[k]
            u2, w2 = ranked[(k + 1) % len(ranked)]
            if u1 == u2 or (u2, u1) in pairs or (u1, u2) in pairs:
                continue
            pairs.add((u1, u2))
            p1, p2 = state.coords[u1], state.coords[u2]
            old = (w1 ** alpha * euclid(p1, pv) + w2 ** alpha * euclid(p2, pv))
            spot, new = _fermat3(
                p1, w1 ** alpha, p2, w2 ** alpha, pv, (w1 + w2) ** alpha
            )
            gain = old - new
            if gain > 1e-12 and (best is None or gain > best[0] + 1e-15):
                best = (gain, v, u1, u2, spot)
    if best is None:
        return False, current
    _, v, u1, u2, spot = best
    s = state.new_branch(spot)
    state.remove_edge(u1, v)
    state.remove_edge(u2, v)
    state.add_edge(u1, s)
    state.add_edge(u2, s)
    state.add_edge(s, v)
    return True, state.cost(alpha)


def _best_reassign(state, alpha, current, k_nearest=6):
    """Steepest subtree reattachment: move one edge endpoint to a nearby node
    on the other side of the cut."""
    edges = [(u, v) for u, v, _ in state.flows()]
    best = None
    for u, v in edges:
        side = state.subtree(u, banned=v)
        others = [
            x for x in state.adj
            if x not in side and x != v and x not in state.adj[u]
        ]
        others.sort(key=lambda x: (euclid(state.coords[u], state.coords[x]), x))
        for x in others[:k_nearest]:
            state.remove_edge(u, v)
            state.add_edge(u, x)
            trial = state.cost(alpha)
            state.remove_edge(u, x)
            state.add_edge(u, v)
            gain = current - trial
            if gain > 1e-12 and (best is None or gain > best[0] + 1e-15):
                best = (gain, u, v, x)
    if best is None:
        return False, current
    _, u, v, x = best
    state.remove_edge(u, v)
    state.add_edge(u, x)
    return True, state.cost(alpha)


def _cleanup(state):
    """Drop silent branch nodes: splice degree-2, contract collapsed, remove
    stranded ones."""
    changed = True
    while changed:
        changed = False
        for v in sorted(state.adj):
            if v in state.pinned:
                continue
            nbrs = sorted(state.adj[v])
            if len(nbrs) == 0:
                del state.adj[v], state.coords[v], state.nets[v]
                changed = True
                break
            if len(nbrs) == 1:
                state.remove_edge(v, nbrs[0])
                del state.adj[v], state.coords[v], state.nets[v]
                changed = True
                break
            if len(nbrs) == 2 and nbrs[0] != nbrs[1]:
                state.remove_edge(v, nbrs[0])
                state.remove_edge(v, nbrs[1])
                if nbrs[1] not in state.adj[nbrs[0]]:
                    state.add_edge(nbrs[0], nbrs[1])
                del state.adj[v], state.coords[v], state.nets[v]
                changed = True
                break
            hit = next(
                (n for n in nbrs
                 if euclid(state.coords[v], state.coords[n]) < COLLAPSE_TOL),
                None,
            )
            if hit is not None:
                for n in nbrs:
                    state.remove_edge(v, n)
                    if n != hit and n not in state.adj[hit]:
                        state.add_edge(hit, n)
                del state.adj[v], state.coords[v], state.nets[v]
                changed = True
                break
