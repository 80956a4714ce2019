"""Seeded verification suites: the package's claims run against themselves.

Each suite returns a SuiteResult with one line per check so the CLI can print
a pass/fail ledger and the test suite can assert on the same outcomes. All
instances derive from SplitMix64 streams, so results are reproducible from
the seed alone.
"""

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import curves as cv
from . import graphs as gr
from . import measures as ms
from . import quasimetric as qm
from . import topology as tp
from .rng import SplitMix64, random_masses, random_points

UNIT_BOX = ((0.0, 1.0), (0.0, 1.0))


@dataclass
class SuiteResult:
    name: str
    checks: list = field(default_factory=list)  # (label, ok, detail)

    def record(self, label, ok, detail=""):
        self.checks.append((label, bool(ok), detail))

    @property
    def ok(self):
        return all(ok for _, ok, _ in self.checks)


# -- instance generators -------------------------------------------------------

def random_measure(rng, max_atoms=4, box=UNIT_BOX):
    n = rng.randint(1, max_atoms)
    return ms.measure_from_weights(random_points(rng, n, box), random_masses(rng, n))


def random_acyclic_graph(rng, alpha):
    """Random small transport path: a plan star, or a cycle-free chain sum."""
    kind = rng.randint(0, 2)
    a = random_measure(rng, 3)
    b = random_measure(rng, 3)
    if kind == 0:
        return gr.plan_to_graph(ms.j_alpha(a, b, alpha).plan)
    if kind == 1:
        c = random_measure(rng, 3)
        chain = gr.sum_graphs([
            gr.plan_to_graph(ms.j_alpha(a, c, alpha).plan),
            gr.plan_to_graph(ms.j_alpha(c, b, alpha).plan),
        ])
        return gr.remove_cycles(chain, alpha)
    return tp.optimize_topology(a, b, alpha, mode="exact").graph


def quadratic_grid_table(n, exact=False):
    """|x-y|^2 on the (n+1)-point uniform grid over [0, 1]."""
    if exact:
        table = np.empty((n + 1, n + 1), dtype=object)
        for i in range(n + 1):
            for j in range(n + 1):
                table[i, j] = (Fraction(i, n) - Fraction(j, n)) ** 2
    else:
        xs = np.arange(n + 1) / n
        table = (xs[:, None] - xs[None, :]) ** 2
    return qm.FiniteQuasimetric(tuple(range(n + 1)), table)


def y_instance():
    sources = ms.measure_from_weights([(-1.0, 1.0), (1.0, 1.0)], [0.5, 0.5])
    sink = ms.dirac((0.0, 0.0))
    return sources, sink


def branch_grid_oracle(sources, sink_point, alpha, lo=-1.5, hi=1.5,
                       resolution=1e-3, refinements=2):
    """Single-branch-point cost minimized by grid search with local refinement."""
    anchors = [(np.array(p), m ** alpha) for p, m in sources.atoms]
    total = sum(m for _, m in sources.atoms)
    sink = np.array(sink_point)
    sink_coef = total ** alpha

    def sweep(cx, cy, half, step):
        xs = np.arange(cx - half, cx + half + step / 2, step)
        ys = np.arange(cy - half, cy + half + step / 2, step)
        gx, gy = np.meshgrid(xs, ys, indexing="ij")
        cost = sink_coef * np.hypot(gx - sink[0], gy - sink[1])
        for p, coef in anchors:
            cost = cost + coef * np.hypot(gx - p[0], gy - p[1])
        k = np.unravel_index(np.argmin(cost), cost.shape)
        return float(gx[k]), float(gy[k]), float(cost[k])

    cx, cy = (lo + hi) / 2, (lo + hi) / 2
    half, step = (hi - lo) / 2, resolution
    bx, by, best = sweep(cx, cy, half, step)
    for _ in range(refinements):
        half, step = 2 * step, step / 100
        bx, by, best = sweep(bx, by, half, step)
    return best


# -- suites ---------------------------------------------------------------------

def suite_sigma_bounds(seed, sets=100, triples=500, chains=100):
    """Relaxation constants stay below their proven ceilings."""
    out = SuiteResult("sigma-bounds")
    rng = SplitMix64(seed)
    t0 = time.perf_counter()
    worst = (0.0, None)
    ok = True
    for trial in range(sets):
        pts = random_points(rng, 20, UNIT_BOX)
        q = qm.from_points(pts, lambda x, y: ms.euclid(x, y) + ms.euclid(x, y) ** 2)
        sigma, _ = qm.relaxation_constant(q)
        if not 1.0 < sigma <= 2.0:
            ok = False
        if sigma > worst[0]:
            worst = (sigma, trial)
    elapsed = time.perf_counter() - t0
    out.record(
        f"sigma in (1, 2] for {sets} random 20-point sets with J = d + d^2",
        ok, f"max sigma {worst[0]:.6f}, {elapsed:.2f}s",
    )
    out.record(f"runtime under 5 s", elapsed < 5.0, f"{elapsed:.2f}s")

    alpha, bound = 0.5, 4 ** 0.5
    violations = 0
    worst_ratio = 0.0
    for _ in range(triples):
        fam = [random_measure(rng, 4) for _ in range(3)]
        a, c, b = fam
        jab = ms.j_alpha(a, b, alpha).value
        den = ms.j_alpha(a, c, alpha).value + ms.j_alpha(c, b, alpha).value
        if den == 0:
            continue
        ratio = jab / den
        worst_ratio = max(worst_ratio, ratio)
        if ratio > bound + 1e-9:
            violations += 1
    out.record(
        f"{triples} triples in A_4(R^2) at alpha=0.5: empirical sigma <= 2",
        violations == 0, f"max ratio {worst_ratio:.6f}",
    )

    chain_bound = 4.0
    violations = 0
    worst_ratio = 0.0
    for k in range(2, 7):
        for _ in range(chains // 5):
            fam = [random_measure(rng, 4) for _ in range(k + 1)]
            end = ms.j_alpha(fam[0], fam[-1], alpha).value
            total = sum(
                ms.j_alpha(fam[i], fam[i + 1], alpha).value for i in range(k)
            )
            if total == 0:
                continue
            ratio = end / total
            worst_ratio = max(worst_ratio, ratio)
            if ratio > chain_bound + 1e-9:
                violations += 1
    out.record(
        "k-chains (k <= 6): constants <= 4 = N^(2(1-alpha))",
        violations == 0, f"max ratio {worst_ratio:.6f}",
    )
    return out


def suite_oracle_equivalence(seed, instances=200,
                             alphas=(0.25, 0.5, 0.75, 0.9), tol=1e-12):
    """Pivot descent lands on the enumerated optimum for small instances."""
    out = SuiteResult("oracle-equivalence")
    rng = SplitMix64(seed)
    t0 = time.perf_counter()
    worst = 0.0
    failures = 0
    for _ in range(instances):
        a = random_measure(rng, 4)
        b = random_measure(rng, 4)
        for alpha in alphas:
            exact = ms.j_alpha(a, b, alpha, method="enumerate").value
            desc = ms.j_alpha(a, b, alpha, method="descent").value
            gap = abs(exact - desc)
            worst = max(worst, gap)
            if gap > tol:
                failures += 1
    elapsed = time.perf_counter() - t0
    out.record(
        f"descent = enumeration on {instances} instances x {len(alphas)} alphas",
        failures == 0, f"max gap {worst:.3e}, {elapsed:.1f}s",
    )
    out.record("runtime under 30 s", elapsed < 30.0, f"{elapsed:.1f}s")
    return out


def suite_chain_collapse(seed=0, sizes=(2, 10, 100)):
    """d_J(0,1) = 1/n for |x-y|^2 on the (n+1)-point grid, exactly in rationals."""
    out = SuiteResult("chain-collapse")
    for n in sizes:
        d, _ = qm.induced_pseudometric(quadratic_grid_table(n, exact=True))
        got = d[0, n]
        out.record(
            f"rational grid n={n}: d_J(0,1) == 1/{n} bit-exact",
            got == Fraction(1, n), f"got {got}",
        )
    for n in sizes:
        d, _ = qm.induced_pseudometric(quadratic_grid_table(n, exact=False))
        err = abs(d[0, n] - 1.0 / n)
        out.record(
            f"float grid n={n}: |d_J(0,1) - 1/n| <= 1e-12",
            err <= 1e-12, f"err {err:.3e}",
        )
    return out


def suite_triangle_violation(seed=0, alpha=0.5, y=10.0):
    """The two-bump example beats the triangle inequality through the middle."""
    out = SuiteResult("triangle-violation")
    a = ms.measure_from_weights([(-1.0, y + 1.0), (1.0, y + 1.0)], [0.5, 0.5])
    c = ms.dirac((0.0, y))
    b = ms.dirac((0.0, 0.0))
    jac = ms.j_alpha(a, c, alpha).value
    jcb = ms.j_alpha(c, b, alpha).value
    jab = ms.j_alpha(a, b, alpha).value
    closed_ac = 2 * 0.5 ** alpha * math.sqrt(2.0)
    closed_cb = y
    closed_ab = 2 * 0.5 ** alpha * math.sqrt(1.0 + (y + 1.0) ** 2)
    for label, got, want in (
        ("J(a,c)", jac, closed_ac),
        ("J(c,b)", jcb, closed_cb),
        ("J(a,b)", jab, closed_ab),
    ):
        out.record(f"{label} matches closed form within 1e-9",
                   abs(got - want) <= 1e-9, f"{got} vs {want}")
    gap = jac + jcb - jab
    out.record("J(a,c) + J(c,b) - J(a,b) < 0", gap < 0, f"gap {gap:.6f}")
    return out


def suite_branch_oracle(seed=0, alpha=0.5, tol=1e-4):
    """Exact optimizer agrees with brute grid search on the two-source instance."""
    out = SuiteResult("branch-oracle")
    sources, sink = y_instance()
    t0 = time.perf_counter()
    res = tp.optimize_topology(sources, sink, alpha, mode="exact")
    elapsed = time.perf_counter() - t0
    oracle = branch_grid_oracle(sources, (0.0, 0.0), alpha)
    out.record(
        "optimizer value matches refined 1e-3 grid oracle within 1e-4",
        abs(res.value - oracle) <= tol,
        f"optimizer {res.value:.9f}, oracle {oracle:.9f}",
    )
    out.record("optimizer runtime under 1 s", elapsed < 1.0, f"{elapsed:.3f}s")
    return out


def suite_graph_curve(seed, count=50, alpha=0.6, tol=1e-12):
    """Scheduling a path into a curve preserves its cost to within rounding."""
    out = SuiteResult("graph-curve")
    rng = SplitMix64(seed)
    worst = 0.0
    failures = 0
    for _ in range(count):
        g = random_acyclic_graph(rng, alpha)
        c = cv.path_to_curve(g, alpha)
        gap = abs(cv.curve_length(c, alpha) - gr.m_alpha(g, alpha))
        worst = max(worst, gap)
        if gap > tol:
            failures += 1
    out.record(
        f"|L(curve(G)) - M_alpha(G)| <= 1e-12 on {count} acyclic graphs",
        failures == 0, f"max gap {worst:.3e}",
    )
    return out


def suite_stabilization(seed, count=20, alpha=0.5):
    """Edge-budget profiles flatten out by 4N-3 edges."""
    out = SuiteResult("stabilization")
    rng = SplitMix64(seed)
    bad_monotone = 0
    bad_constant = 0
    for _ in range(count):
        a = random_measure(rng, 3)
        b = random_measure(rng, 3)
        n_cap = max(len(a), len(b))
        k_star = 4 * n_cap - 3
        prof = tp.stabilization_profile(a, b, alpha, k_max=k_star + 3)
        values = [v for _, v in prof]
        if any(v1 > v0 + 1e-12 for v0, v1 in zip(values, values[1:])):
            bad_monotone += 1
        tail = [v for k, v in prof if k >= k_star]
        if max(tail) - min(tail) > 1e-9:
            bad_constant += 1
    out.record(f"profiles nonincreasing on {count} instances",
               bad_monotone == 0, f"{bad_monotone} violations")
    out.record("profiles constant for k >= 4N-3",
               bad_constant == 0, f"{bad_constant} violations")
    return out


def suite_geodesic(seed, alpha=0.5, samples=50, tol=1e-6):
    """Arc-parametrized exact solutions are unit-speed geodesics."""
    out = SuiteResult("geodesic")
    sources, sink = y_instance()
    cases = [
        ("dirac pair", ms.dirac((0.0, 0.0)), ms.dirac((3.0, 4.0))),
        ("flat Y", sources, sink),
        ("tall Y",
         ms.measure_from_weights([(-1.0, 2.0), (1.0, 2.0)], [0.5, 0.5]), sink),
        ("uneven Y",
         ms.measure_from_weights([(-1.0, 2.0), (1.0, 2.0)], [0.3, 0.7]), sink),
    ]
    for label, a, b in cases:
        res = tp.optimize_topology(a, b, alpha, mode="exact")
        curve = cv.arc_reparametrize(cv.path_to_curve(res.graph, alpha), alpha)
        dev = cv.geodesic_check(curve, alpha, samples=samples, seed=seed)
        out.record(f"{label}: max |D(f(s),f(t)) - |t-s|| <= 1e-6",
                   dev <= tol, f"deviation {dev:.3e}")
    return out


def suite_alpha_one(seed, count=50, tol=1e-9):
    """At alpha = 1 branching buys nothing and the cost is a true metric."""
    out = SuiteResult("alpha-one")
    rng = SplitMix64(seed)
    worst = 0.0
    failures = 0
    for _ in range(count):
        a = random_measure(rng, 3)
        b = random_measure(rng, 3)
        opt = tp.optimize_topology(a, b, 1.0, mode="exact").value
        plan = ms.j_alpha(a, b, 1.0).value
        gap = abs(opt - plan)
        worst = max(worst, gap)
        if gap > tol:
            failures += 1
    out.record(
        f"optimize_topology = j_alpha at alpha=1 on {count} instances",
        failures == 0, f"max gap {worst:.3e}",
    )
    worst_sigma = 1.0
    for _ in range(30):
        fam = [random_measure(rng, 3) for _ in range(3)]
        worst_sigma = max(worst_sigma, ms.empirical_sigma(fam, 1.0))
    out.record("empirical sigma of J_1 equals 1 within 1e-9",
               abs(worst_sigma - 1.0) <= tol, f"max {worst_sigma}")
    return out


SUITES = {
    "sigma-bounds": suite_sigma_bounds,
    "oracle-equivalence": suite_oracle_equivalence,
    "chain-collapse": suite_chain_collapse,
    "triangle-violation": suite_triangle_violation,
    "branch-oracle": suite_branch_oracle,
    "graph-curve": suite_graph_curve,
    "stabilization": suite_stabilization,
    "geodesic": suite_geodesic,
    "alpha-one": suite_alpha_one,
}


def run_suite(name, seed):
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    return SUITES[name](seed)
