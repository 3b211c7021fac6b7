"""Acceptance checks: each closed-form result compared against simulation.

Every check returns a ``CheckResult``; ``run_suite`` drives them for the
``check`` subcommand and the test suite. Runtime budgets are part of each
criterion.
"""

import math
import time
from dataclasses import dataclass

import numpy as np

from . import bounds, constructions, linalg
from .learner import TaskStack, average_iterates, run, run_batch, run_projected, run_sequence
from .metrics import batch_metrics, exact_expected_forgetting, expected_forgetting, forgetting, \
    forgetting_at, forgetting_curve, random_trial_curves
from .orderings import Ordering, realize


@dataclass
class CheckResult:
    name: str
    passed: bool
    measured: float
    bound: float
    detail: str
    seconds: float = 0.0
    budget: float = math.inf

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return (f"{status} {self.name}: measured={self.measured:.6g} bound={self.bound:.6g} "
                f"time={self.seconds:.2f}s/{self.budget:g}s  {self.detail}")


def _timed(name, budget):
    def wrap(fn):
        def inner():
            start = time.perf_counter()
            res = fn()
            res.seconds = time.perf_counter() - start
            res.budget = budget
            res.name = name
            if res.seconds >= budget:
                res.passed = False
                res.detail += " (over time budget)"
            return res
        inner.check_name = name
        return inner
    return wrap


@_timed("no_forgetting", 5)
def check_no_forgetting(pairs=200, seed=20220701):
    """Pairs whose principal angles are all 0 or pi/2 never forget after two tasks."""
    rng = np.random.default_rng(seed)
    conditions = constructions.NO_FORGETTING_CONDITIONS
    worst, worst_angle = 0.0, 0.0
    for i in range(pairs):
        d = int(rng.integers(2, 9))
        s = constructions.no_forgetting_pair(rng, d, conditions[i % len(conditions)])
        angles = linalg.task_angles(s[1].data, s[2].data)
        worst_angle = max(worst_angle, float(np.min(np.minimum(angles, np.abs(math.pi / 2 - angles)))))
        f = forgetting(run(s, Ordering.identity(2), 2)).forgetting
        worst = max(worst, f)
    ok = worst <= 1e-12 and worst_angle <= 1e-6
    return CheckResult("", ok, worst, 1e-12, f"{pairs} pairs; max angle offset from {{0, pi/2}} {worst_angle:.2g}")


@_timed("two_task_tightness", 5)
def check_two_task_tightness():
    ks = list(range(2, 41, 2))
    worst = 0.0
    for theta in (math.pi / 12, math.pi / 6, math.pi / 4, math.pi / 3):
        s = constructions.two_task_collection(theta)
        seq = realize(Ordering.cyclic(2), ks[-1])
        for rec in forgetting_curve(s, seq, ks):
            target = bounds.two_task_forgetting_bound(rec.iteration, [theta])
            worst = max(worst, abs(rec.forgetting - target))
    return CheckResult("", worst <= 1e-8, worst, 1e-8, "max |simulated - formula| over theta, even k <= 40")


def simulate_two_task_grid(thetas, ks):
    """Cyclic forgetting of the saturating two-task collection for every angle in ``thetas``."""
    stack = TaskStack.from_collections([constructions.two_task_collection(t) for t in thetas])
    kmax = max(ks)
    seqs = np.tile(np.arange(kmax) % 2, (len(thetas), 1))
    out = {}

    def on_record(k, W):
        counts = np.tile([(k + 1) // 2, k // 2], (len(thetas), 1)).astype(float)
        out[k] = batch_metrics(stack, W, counts, k)[0]

    run_batch(stack, seqs, record_at=ks, on_record=on_record)
    return out


@_timed("two_task_worst_case", 30)
def check_two_task_worst_case(grid=10_000):
    thetas = (math.pi / 2) * np.arange(1, grid + 1) / grid
    ks = (2, 10, 100)
    sims = simulate_two_task_grid(thetas, ks)
    worst = 0.0
    for k in ks:
        worst = max(worst, abs(sims[k].max() - bounds.two_task_worst_case(k)[0]))
    rel = abs(sims[100].max() - 1 / (2 * math.e * 99)) / (1 / (2 * math.e * 99))
    ok = worst <= 1e-6 and rel <= 0.05
    return CheckResult("", ok, worst, 1e-6, f"grid max vs closed form at k in {ks}; k=100 vs 1/(2e(k-1)) rel err {rel:.3%}")


@_timed("distance_tightness", 5)
def check_distance_tightness():
    worst = 0.0
    for theta in (math.pi / 6, math.pi / 4):
        s = constructions.two_task_collection(theta)
        theta_f = linalg.friedrichs_angle(linalg.task_angles(s[1].data, s[2].data))
        w_norm = float(np.linalg.norm(s.offline_solution))
        tr = run(s, Ordering.cyclic(2), 40)
        for k in range(2, 41, 2):
            e = tr.iterates[k] - s.offline_solution
            worst = max(worst, abs(e @ e - bounds.distance_bound(k, theta_f, w_norm)))
    return CheckResult("", worst <= 1e-8, worst, 1e-8, "max |distance² - (cos²θ_F)^(k-1)||w*||²|, k <= 40")


@_timed("adversarial_identity", 60)
def check_adversarial():
    values = {}
    margin = math.inf
    for eps in (0.3, 0.5):
        s, o = constructions.adversarial_identity(eps)
        f = forgetting(run(s, o, len(s), store_iterates=False)).forgetting
        values[eps] = (len(s), f)
        margin = min(margin, f - (1 - eps))
    detail = "; ".join(f"eps={e}: T={t}, F={f:.4f}" for e, (t, f) in values.items())
    return CheckResult("", margin > 0, margin, 0.0, "min F - (1 - eps); " + detail)


@_timed("cyclic_sandwich", 60)
def check_cyclic_sandwich():
    failures = []
    worst_ratio = math.inf
    for T in (3, 4, 6):
        for n in (T, 2 * T, 4 * T):
            k = n * T
            s, o = constructions.back_and_forth(T, k)
            m = constructions.cyclic_operator(s)
            f = forgetting(run(s, o, k, store_iterates=False)).forgetting
            lo, hi = bounds.cyclic_bounds(T, k, s.dimension, s.max_rank)
            sym = float(np.linalg.norm(m - m.T))
            worst_ratio = min(worst_ratio, f / lo)
            if not (lo <= f <= hi and f <= T * T / k and sym <= 1e-9):
                failures.append(f"T={T} n={n}: F={f:.4g} in [{lo:.4g}, {hi:.4g}]? asym={sym:.2g}")
    detail = "; ".join(failures) if failures else "all (T, n) inside [lower, upper] and <= T²/k"
    return CheckResult("", not failures, worst_ratio, 1.0, "min F/lower; " + detail)


@_timed("random_expected_bound", 120)
def check_random_expected(trials=20, seed_base=6):
    s = constructions.fig5_collection()
    ks = (128, 512, 2048)
    curves = random_trial_curves(s, ks, trials, seed_base)["forgetting"]
    worst = -math.inf
    parts = []
    for j, k in enumerate(ks):
        mean = curves[:, j].mean()
        upper = mean + 3 * curves[:, j].std(ddof=1) / math.sqrt(trials)
        bound = bounds.random_expected_bound(k, s.dimension, s.average_rank)
        worst = max(worst, upper / bound)
        parts.append(f"k={k}: mean={mean:.3g} +3se={upper:.3g} bound={bound:.3g}")
    return CheckResult("", worst < 1.0, worst, 1.0, "max (mean + 3se)/bound; " + "; ".join(parts))


@_timed("exact_expectation_oracle", 60)
def check_exact_expectation(trials=100_000, seed_base=8):
    s = constructions.two_task_collection(math.pi / 5)
    worst = 0.0
    for k in range(1, 9):
        est = expected_forgetting(s, k, trials, seed_base + k)
        exact = exact_expected_forgetting(s, k)
        se = est.standard_error
        z = abs(est.mean - exact) / se if se > 0 else (0.0 if est.mean == exact else math.inf)
        worst = max(worst, z)
    return CheckResult("", worst <= 3.0, worst, 3.0, f"max |MC - exact| in standard errors, k = 1..8, {trials} trials")


@_timed("update_rule_projection_oracle", 10)
def check_projection_oracle(instances=100, seed=2):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for i in range(instances):
        d = int(rng.integers(2, 7))
        T = int(rng.integers(1, 5))
        k = int(rng.integers(1, 41))
        s = constructions.random_collection(rng, d, T)
        o = Ordering.cyclic(T) if i % 2 else Ordering.random(T, seed=i)
        tr = run(s, o, k, store_iterates=False)
        w = run_projected(s.offline_solution, s.projections, tr.sequence)
        worst = max(worst, float(np.max(np.abs(w - tr.final))))
    return CheckResult("", worst <= 1e-7, worst, 1e-7, f"max |update rule - projection product| over {instances} instances")


@_timed("average_iterate_cyclic", 10)
def check_average_iterate():
    T = 4
    worst = -math.inf
    for n in (4, 16, 64):
        s, o = constructions.back_and_forth(T, n * T)
        tr = run(s, o, n * T)
        f = forgetting_at(average_iterates(tr, "end_of_cycle", T), tr.sequence, s)
        worst = max(worst, f - (bounds.average_iterate_bounds(T, n * T, "cyclic") + 1e-9))
    return CheckResult("", worst <= 0, worst, 0.0, "max F(avg) - (T-1)/(2n) over n in {4, 16, 64}")


def _property_failures(seed=11, cases=150):
    rng = np.random.default_rng(seed)
    failures = []

    def expect(cond, what):
        if not cond:
            failures.append(what)

    for i in range(cases):
        d = int(rng.integers(2, 9))
        n = int(rng.integers(1, d + 2))
        r = int(rng.integers(1, min(n, d) + 1))
        m = rng.standard_normal((n, r)) @ rng.standard_normal((r, d))
        p = linalg.null_projection(m)
        v = rng.standard_normal(d)
        expect(np.abs(p @ p - p).max() <= 1e-9, f"idempotence #{i}")
        expect(np.abs(p - p.T).max() <= 1e-9, f"symmetry #{i}")
        expect(np.linalg.norm(p @ v) <= np.linalg.norm(v) + 1e-12, f"contraction #{i}")
        expect(np.abs(m @ p).max() <= 1e-9 * (1 + np.abs(m).max()), f"annihilation #{i}")
        pi = linalg.pseudo_inverse(m)
        tol = 1e-8 * (1 + np.abs(m).max() * np.abs(pi).max())
        expect(np.abs(m @ pi @ m - m).max() <= tol * np.abs(m).max(), f"penrose 1 #{i}")
        expect(np.abs(pi @ m @ pi - pi).max() <= tol * np.abs(pi).max(), f"penrose 2 #{i}")
        expect(np.abs(m @ pi - (m @ pi).T).max() <= tol, f"penrose 3 #{i}")
        expect(np.abs(pi @ m - (pi @ m).T).max() <= tol, f"penrose 4 #{i}")

        a = rng.standard_normal((d, int(rng.integers(1, d + 1))))
        b = rng.standard_normal((d, int(rng.integers(1, d + 1))))
        q, _ = np.linalg.qr(rng.standard_normal((a.shape[1], a.shape[1])))
        mix = q * rng.uniform(0.5, 2.0, a.shape[1])
        base = linalg.principal_angles(a, b)
        expect(np.abs(base - linalg.principal_angles(a @ mix, b)).max() <= 1e-8, f"basis invariance #{i}")
        expect(np.abs(base - linalg.principal_angles(b, a)).max() <= 1e-8, f"angle symmetry #{i}")

        x1 = rng.standard_normal((int(rng.integers(1, d)), d))
        x2 = rng.standard_normal((int(rng.integers(1, d)), d))
        rows = linalg.task_angles(x1, x2)
        nulls = linalg.principal_angles(linalg.svd(x1).null_space, linalg.svd(x2).null_space)
        nz_rows = np.sort(rows[rows > linalg.ANGLE_ZERO_TOLERANCE])
        nz_nulls = np.sort(nulls[nulls > linalg.ANGLE_ZERO_TOLERANCE])
        expect(nz_rows.size == nz_nulls.size and np.allclose(nz_rows, nz_nulls, rtol=0, atol=1e-8),
               f"complement angles #{i}")

    for i in range(60):
        d = int(rng.integers(2, 7))
        T = int(rng.integers(1, 5))
        k = int(rng.integers(1, 30))
        s = constructions.random_collection(rng, d, T)
        tr = run(s, Ordering.random(T, seed=1000 + i), k)
        dist = np.linalg.norm(tr.iterates - s.offline_solution, axis=1)
        expect(np.all(np.diff(dist) <= 1e-10), f"trajectory contraction #{i}")
        rec = forgetting(tr)
        expect(rec.forgetting <= rec.residual_bound + 1e-10, f"forgetting <= residual bound #{i}")
        expect(rec.forgetting <= rec.distance_sq + 1e-10, f"forgetting <= distance #{i}")
        expect(rec.per_task_losses[-1] <= 1e-16, f"interpolation #{i}")
    return failures


@_timed("property_suite", 20)
def check_properties():
    failures = _property_failures()
    return CheckResult("", not failures, float(len(failures)), 0.0,
                       "failures: " + (", ".join(failures[:5]) if failures else "none"))


QUICK = (check_no_forgetting, check_two_task_tightness, check_distance_tightness,
         check_projection_oracle, check_average_iterate)
ALL = (check_no_forgetting, check_two_task_tightness, check_two_task_worst_case, check_distance_tightness,
       check_adversarial, check_cyclic_sandwich, check_random_expected, check_exact_expectation,
       check_projection_oracle, check_average_iterate, check_properties)
SUITES = {"quick": QUICK, "all": ALL}


def run_suite(name="all", emit=print):
    results = []
    for check in SUITES[name]:
        try:
            res = check()
        except Exception as exc:  # a crashing check is a failing check
            res = CheckResult(check.check_name, False, math.nan, math.nan, f"error: {exc!r}")
        results.append(res)
        emit(res.line())
    return results
