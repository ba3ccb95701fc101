"""
Acceptance bundle: each criterion runs an experiment against an independent
oracle and compares the measured quantities with fixed bounds.

Every ``criterion_*`` function returns a :class:`CriterionResult`.  Bounds
are multiplied by ``tol_scale``, so ``tol_scale=0`` forces failures.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import bessel, families
from .chrono import disentangle, exchange, expansional_expand, lift
from .evolution import (dyson_expand, generalized_trotter_kato, poincare_quotient, propagate,
                        q_integral, semilinear_mild, trotter)
from .gauge import Gauge, TaggedPartition, cousin, hk_integrate, is_fine
from .kernels import (Grid1D, compose, heat_kernel, mehler_kernel, relativistic_branch,
                      sqrt_relativistic_kernel, symbol_to_kernel)
from .matcore import expm, op_norm, random_dissipative, random_matrix, yosida
from .models import heat_model, quartic_model
from .pathsum import Regularizer, experimental_evolution, feynman_kac, lambda_sweep

__all__ = ["Check", "CriterionResult", "CRITERIA", "SUITES", "run_criteria", "loglog_slope"]

# K_2(1) to 40 digits, from an arbitrary-precision evaluation
K2_AT_1 = 1.624838898635177482810707382283843714659


@dataclass
class Check:
    name: str
    value: float
    bound: float
    kind: str = "le"  # "le": value <= bound; "near": |value - target| <= bound
    target: float = 0.0

    @property
    def passed(self) -> bool:
        if not np.isfinite(self.value):
            return False
        if self.kind == "le":
            return self.value <= self.bound
        if self.kind == "near":
            return abs(self.value - self.target) <= self.bound
        if self.kind == "true":
            return bool(self.value)
        raise ValueError(self.kind)


@dataclass
class CriterionResult:
    cid: int
    title: str
    checks: list = field(default_factory=list)
    rows: list = field(default_factory=list)  # (item, metric, value)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def summary(self) -> dict:
        return {
            "id": self.cid,
            "title": self.title,
            "passed": self.passed,
            "checks": [{"name": c.name, "value": c.value, "bound": c.bound, "kind": c.kind,
                        "target": c.target, "passed": c.passed} for c in self.checks],
        }


def loglog_slope(xs, ys) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    return float(np.polyfit(np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float)), 1)[0])


def _rng(seed):
    return np.random.default_rng(seed)


# -- 1. piecewise-constant agreement ------------------------------------------

def criterion_1(tol_scale=1.0):
    res = CriterionResult(1, "gauge integral of a step family equals the finite measure sum")
    rng = _rng(101)
    mats = [random_matrix(2, rng) for _ in range(3)]
    bp = [0.0, 0.3, 0.7, 1.0]
    F = families.step(bp, mats)
    t0 = time.perf_counter()
    val = hk_integrate(F, 0.0, 1.0, tol=1e-12).value
    secs = time.perf_counter() - t0
    exact = sum((v - u) * M for u, v, M in zip(bp[:-1], bp[1:], mats))
    diff = op_norm(val - exact)
    res.rows += [("step3", "diff", diff)]
    res.checks += [Check("norm difference", diff, 1e-12 * tol_scale),
                   Check("runtime seconds", secs, 1.0 * tol_scale)]
    return res


# -- 2. gauge axioms ----------------------------------------------------------

def _naive_fine(ends, tags, delta):
    for i in range(len(tags)):
        d = delta(tags[i])
        if not (tags[i] - d < ends[i] and ends[i + 1] < tags[i] + d):
            return False
    return True


def criterion_2(tol_scale=1.0):
    res = CriterionResult(2, "gauge fineness, monotonicity and additivity")
    rng = _rng(202)
    failures = 0
    for k in range(100):
        c = 10 ** rng.uniform(-2.5, -0.5)
        om, ph, amp = rng.uniform(1, 20), rng.uniform(0, 2 * np.pi), rng.uniform(0, 0.9)

        def delta(t, c=c, om=om, ph=ph, amp=amp):
            return c * (1.0 + amp * np.sin(om * np.asarray(t) + ph))

        g = Gauge(delta, 0.0, 1.0)
        p = cousin(g)
        bigger = Gauge(lambda t, f=delta, s=1.0 + rng.uniform(0, 2): s * f(t), 0.0, 1.0)
        ok = is_fine(p, g) and _naive_fine(p.endpoints, p.tags, delta)
        ok = ok and is_fine(p, bigger)
        # an arbitrary partition: vectorised test must agree with the naive loop
        ends = np.sort(np.concatenate([[0.0, 1.0], rng.uniform(0, 1, rng.integers(2, 40))]))
        tags = ends[:-1] + rng.uniform(0, 1, ends.size - 1) * np.diff(ends)
        q = TaggedPartition(ends, tags)
        ok = ok and (is_fine(q, g) == _naive_fine(ends, tags, delta))
        failures += 0 if ok else 1
    res.rows.append(("random_instances", "failures", failures))
    res.checks.append(Check("fineness/monotonicity failures", failures, 0))
    F = families.random_smooth(2, 7)
    tol = 1e-10
    whole = hk_integrate(F, 0.0, 1.0, tol).value
    worst = 0.0
    for c in rng.uniform(0.05, 0.95, 20):
        d = op_norm(hk_integrate(F, 0.0, c, tol).value + hk_integrate(F, c, 1.0, tol).value - whole)
        worst = max(worst, d)
    res.rows.append(("additivity", "max_defect", worst))
    res.checks.append(Check("interval additivity defect", worst, 2 * tol * tol_scale))
    return res


# -- 3. Yosida approximator ---------------------------------------------------

def criterion_3(tol_scale=1.0):
    res = CriterionResult(3, "Yosida approximator converges with slope -1")
    rng = _rng(303)
    lams = [10.0, 1e2, 1e3, 1e4]
    worst_slope, worst_comm = None, 0.0
    for k in range(10):
        A = random_dissipative(4, rng)
        x = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        errs = []
        for lam in lams:
            Al = yosida(A, lam)
            errs.append(np.linalg.norm(Al @ x - A @ x))
            worst_comm = max(worst_comm, op_norm(A @ Al - Al @ A))
        s = loglog_slope(lams, errs)
        res.rows.append((f"matrix{k}", "slope", s))
        if worst_slope is None or abs(s + 1) > abs(worst_slope + 1):
            worst_slope = s
    res.checks += [Check("worst slope", worst_slope, 0.05 * tol_scale, "near", -1.0),
                   Check("commutation defect", worst_comm, 1e-12 * tol_scale)]
    return res


# -- 4. disentanglement and exchange -------------------------------------------

def criterion_4(tol_scale=1.0):
    res = CriterionResult(4, "disentanglement and exchange identities hold exactly")
    rng = _rng(404)
    bad = 0
    count = 0
    for _ in range(20):
        A, B = random_matrix(3, rng), random_matrix(3, rng)
        s, t = sorted(rng.uniform(0, 1, 2))
        X = lift(s, B) * lift(t, A)
        count += 2
        bad += not np.array_equal(disentangle(X), A @ B)
        Y = lift(s, B) * lift(t, A) - lift(t, B) * lift(s, A)
        bad += not np.array_equal(disentangle(Y), A @ B - B @ A)
    # exchange axioms on enumerated tag positions
    times = [0.1, 0.4, 0.6, 0.9]
    A = random_matrix(3, rng)
    for t in times:
        for t2 in times:
            if t2 == t:
                continue
            for u in times:
                X = lift(u, A)
                count += 1
                bad += exchange(exchange(X, t, t2), t2, t) != X
                if u not in (t, t2):
                    count += 1
                    bad += exchange(X, t, t2) != X
                for s in times:
                    if len({t, t2, s}) < 3 or u in (s, t2):
                        continue
                    # composition law on factors sitting at t or away from {t, s, t2}
                    count += 1
                    bad += exchange(exchange(X, t, s), s, t2) != exchange(X, t, t2)
    res.rows += [("identities", "checked", count), ("identities", "failures", bad)]
    res.checks.append(Check("exact identity failures", bad, 0))
    return res


# -- 5. Feynman expansional ----------------------------------------------------

def criterion_5(tol_scale=1.0):
    res = CriterionResult(5, "expansional truncation error scales as eps^(k+1)")
    rng = _rng(505)
    A, B = random_matrix(4, rng), random_matrix(4, rng)
    eps = [1e-1, 1e-2, 1e-3]
    t0 = time.perf_counter()
    for k in (1, 2):
        errs = [op_norm(expm(A + e * B) - expansional_expand(A, e * B, k, 32)) for e in eps]
        s = loglog_slope(eps, errs)
        for e, er in zip(eps, errs):
            res.rows.append((f"k{k}_eps{e:g}", "error", er))
        res.rows.append((f"k{k}", "slope", s))
        res.checks.append(Check(f"slope k={k}", s, 0.1 * tol_scale, "near", k + 1.0))
    res.checks.append(Check("runtime seconds", time.perf_counter() - t0, 30.0 * tol_scale))
    return res


# -- 6. Dyson exactness ----------------------------------------------------------

def criterion_6(tol_scale=1.0):
    res = CriterionResult(6, "Dyson partial sum plus remainder equals the propagator")
    worst, worst_ratio = 0.0, 0.0
    for seed in range(5):
        F = families.random_smooth(3, 600 + seed)
        for w in (0.5, 1.0):
            ref = propagate(F.scaled(w), 1.0, 4096, richardson=True)
            # the reference is only good to round-off accumulated over 12k exponentials;
            # its self-convergence bounds that and is added to the comparison budget
            ref_err = op_norm(ref - propagate(F.scaled(w), 1.0, 2048, richardson=True))
            res.rows.append((f"seed{seed}_w{w:g}", "reference_error", ref_err))
            for n in (0, 1, 2):
                r = dyson_expand(F, 1.0, n, w)
                diff = op_norm(r.total - ref)
                res.rows.append((f"seed{seed}_w{w:g}_n{n}", "diff", diff))
                res.rows.append((f"seed{seed}_w{w:g}_n{n}", "estimate", r.quad_error))
                res.rows.append((f"seed{seed}_w{w:g}_n{n}", "diff_over_estimate",
                                 diff / r.quad_error))
                worst = max(worst, diff)
                worst_ratio = max(worst_ratio, diff / (r.quad_error + ref_err))
    res.checks += [Check("max |diff|", worst, 1e-8 * tol_scale),
                   Check("max diff / (estimate + reference error)", worst_ratio,
                         1.0 * tol_scale)]
    return res


# -- 7. Poincare asymptotics ------------------------------------------------------

def criterion_7(tol_scale=1.0):
    res = CriterionResult(7, "truncation quotient tends to the next Taylor coefficient")
    rng = _rng(707)
    F = families.random_smooth(4, 77)
    Q = q_integral(F, 1.0)
    x = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    x /= np.linalg.norm(x)
    worst = 0.0
    for n in (0, 1, 2):
        limit = np.linalg.matrix_power(Q, n + 1) @ x / math.factorial(n + 1)
        quo = poincare_quotient(Q, x, n, 1e-3)
        rel = float(np.linalg.norm(quo - limit) / np.linalg.norm(limit))
        res.rows.append((f"n{n}", "relative_error", rel))
        worst = max(worst, rel)
    res.checks.append(Check("max relative error", worst, 0.01 * tol_scale))
    return res


# -- 8. Trotter and generalized Trotter-Kato ---------------------------------------

def criterion_8(tol_scale=1.0):
    res = CriterionResult(8, "Trotter and generalized Trotter-Kato converge at first order")
    ns = [2 ** k for k in range(1, 11)]
    A = np.array([[0, 1], [0, 0]], dtype=complex)
    B = np.array([[0, 0], [1, 0]], dtype=complex)
    exact = expm(A + B)
    errs = [op_norm(trotter(A, B, 1.0, n) - exact) for n in ns]
    for n, e in zip(ns, errs):
        res.rows.append((f"trotter_n{n}", "error", e))
    s_tr = loglog_slope(ns, errs)
    res.rows.append(("trotter", "slope", s_tr))

    FA = families.random_smooth(3, 801)
    FB = families.random_smooth(3, 802)
    ref = propagate(FA + FB, 1.0, 8192, richardson=True)
    gerrs, pnorm = [], 0.0
    for n in ns:
        G = generalized_trotter_kato(FA, FB, 1.0, n)
        gerrs.append(op_norm(G - ref))
        pnorm = max(pnorm, op_norm(G))
        res.rows.append((f"gtk_n{n}", "error", gerrs[-1]))
        res.rows.append((f"gtk_plain_n{n}", "error",
                         op_norm(generalized_trotter_kato(FA, FB, 1.0, n, "plain") - ref)))
    s_gtk = loglog_slope(ns, gerrs)
    res.rows.append(("gtk", "slope", s_gtk))

    rng = _rng(808)
    Ad, Bd = random_dissipative(3, rng), random_dissipative(3, rng)
    CA, CB = families.constant(Ad), families.constant(Bd)
    agree = 0.0
    for n in ns:
        T = trotter(Ad, Bd, 1.0, n)
        agree = max(agree, op_norm(generalized_trotter_kato(CA, CB, 1.0, n) - T))
        pnorm = max(pnorm, op_norm(T))
    res.rows += [("constant_gtk_vs_trotter", "max_diff", agree), ("contraction", "max_norm", pnorm)]
    res.checks += [Check("Trotter slope", s_tr, 0.1 * tol_scale, "near", -1.0),
                   Check("GTK slope", s_gtk, 0.1 * tol_scale, "near", -1.0),
                   Check("constant GTK vs Trotter", agree, 1e-9 * tol_scale),
                   Check("max product norm - 1", pnorm - 1.0, 1e-10 * tol_scale)]
    return res


# -- 9. path sum --------------------------------------------------------------------

def _decreasing_with_one_inversion(errs, slack):
    inversions = [(a, b) for a, b in zip(errs[:-1], errs[1:]) if b >= a]
    if not inversions:
        return True
    return len(inversions) == 1 and inversions[0][1] <= (1.0 + slack) * inversions[0][0]


def criterion_9(tol_scale=1.0):
    res = CriterionResult(9, "experimental evolution operator")
    rng = _rng(909)
    A = random_dissipative(3, rng)
    F = families.constant(A)
    E = expm(A)
    worst = 0.0
    for lam in (50.0, 100.0, 1000.0):
        r = experimental_evolution(F, 1.0, lam)
        gap = abs(op_norm(r.value - E) - op_norm(E) * r.poisson_deficit)
        res.rows.append((f"constant_lam{lam:g}", "deficit", r.poisson_deficit))
        res.rows.append((f"constant_lam{lam:g}", "gap", gap))
        worst = max(worst, gap)
    res.checks.append(Check("constant generator: error - |e^A| deficit", worst, 1e-12 * tol_scale))

    D = families.diagonal([lambda s: -1.0 - s + 0j, lambda s: (-2.0 + 0.5j) * s ** 2,
                           lambda s: 1j * s + 0 * s])
    ref = expm(np.diag([-1.5, (-2.0 + 0.5j) / 3.0, 0.5j]))
    lams = [10.0, 100.0, 1000.0]
    rows = lambda_sweep(D, 1.0, lams, ref, renormalize=True)
    errs = [r[3] for r in rows]
    for lam, terms, deficit, err, _ in rows:
        res.rows += [(f"sweep_lam{lam:g}", "terms_used", terms),
                     (f"sweep_lam{lam:g}", "deficit", deficit),
                     (f"sweep_lam{lam:g}", "error", err)]
    raw = lambda_sweep(D, 1.0, [10.0, 100.0], ref, renormalize=False)
    for lam, _, _, err, _ in raw:
        res.rows.append((f"sweep_lam{lam:g}", "error_unrenormalized", err))
    res.checks += [Check("sweep error at lambda=1e3", errs[-1], 1e-3 * tol_scale),
                   Check("sweep decreasing", float(_decreasing_with_one_inversion(
                       errs, 0.1 * tol_scale)), 1.0, "true")]
    return res


# -- 10. Feynman-Kac ------------------------------------------------------------------

def criterion_10(tol_scale=1.0):
    res = CriterionResult(10, "regularised potentials converge to the direct propagator")
    t0 = time.perf_counter()
    h = heat_model()
    ref = expm(h.full_generator())
    errs = []
    for rho in (1e-2, 1e-4, 1e-6):
        U = feynman_kac(h.F0, h.V, 1.0, Regularizer("sqrt_cutoff", rho), 1)
        errs.append(op_norm(U - ref) / op_norm(ref))
        res.rows.append((f"heat_rho{rho:g}", "relative_error", errs[-1]))
    q = quartic_model()
    qref = expm(q.full_generator())
    qerrs = []
    for rho in (1e-2, 1e-4, 1e-6):
        U = feynman_kac(q.F0, q.V, 1.0, Regularizer("sqrt_cutoff", rho), 1, coupling=q.coupling)
        qerrs.append(op_norm(U - qref) / op_norm(qref))
        res.rows.append((f"quartic_rho{rho:g}", "relative_error", qerrs[-1]))
    dec = all(b < a for a, b in zip(errs[:-1], errs[1:]))
    res.checks += [Check("heat errors decreasing", float(dec), 1.0, "true"),
                   Check("heat final relative error", errs[-1], 1e-6 * tol_scale),
                   Check("quartic final relative error", qerrs[-1], 1e-5 * tol_scale),
                   Check("runtime seconds", time.perf_counter() - t0, 60.0 * tol_scale)]
    return res


# -- 11. kernels -----------------------------------------------------------------------

def criterion_11(tol_scale=1.0):
    import mpmath

    res = CriterionResult(11, "kernel composition, special functions and symbols")
    grid = Grid1D(12.0, 512)
    ck = compose(heat_kernel(1.0), 1.0, 0.5, 0.0, grid).defect
    mh = compose(mehler_kernel(1.0, 1.0, 1.0), 0.6, 0.3, 0.0, grid, damping=0.05)
    res.rows += [("heat_ck", "defect", ck), ("mehler", "defect", mh.defect),
                 ("mehler", "damping_bias", mh.bias)]

    k2err = abs(bessel.k2(1.0) - K2_AT_1) / K2_AT_1
    ident, wron, hank = 0.0, 0.0, 0.0
    for z in (0.5, 1.0, 3.0, 7.5, 11.9, 12.1, 20.0, 150.0, 2500.0):
        h1, h2 = bessel.hankel_h2_1(z), bessel.hankel_h2_2(z)
        ident = max(ident, abs(h1 + h2 - 2 * bessel.j2(z)))
        # derivatives of order 2 from the order-1 functions
        j1, y1 = bessel.j1(z), bessel.y1(z)
        j2, y2 = bessel.j2(z), bessel.y2(z)
        dj2, dy2 = j1 - 2.0 / z * j2, y1 - 2.0 / z * y2
        wron = max(wron, abs(j2 * dy2 - dj2 * y2 - 2.0 / (math.pi * z)) * z)
        ref = complex(mpmath.hankel1(2, z))
        hank = max(hank, abs(h1 - ref) / abs(ref))
    res.rows += [("k2_at_1", "relative_error", k2err), ("hankel_sum", "max_error", ident),
                 ("wronskian", "max_scaled_error", wron), ("hankel_vs_oracle", "max_rel", hank)]

    rng = _rng(1111)
    wrong = 0
    for _ in range(1000):
        c = rng.uniform(0.5, 2.0)
        t = rng.uniform(-3, 3)
        x, y = rng.uniform(-3, 3, 3), rng.uniform(-3, 3, 3)
        r = float(np.linalg.norm(x - y))
        if c * abs(t) < r:
            expect = "spacelike"
        elif c * t > r:
            expect = "future"
        else:
            expect = "past"
        wrong += relativistic_branch(x, t, y, c) != expect
    K = sqrt_relativistic_kernel(1.0, 1.0)
    v = K(np.array([1.0]), 0.5, np.array([0.0]))
    D = mpmath.mpf(1) - mpmath.mpf("0.25")
    oracle = complex(0.5 / (4 * mpmath.pi) * (-2j) * mpmath.besselk(2, mpmath.sqrt(D)) / (mpmath.pi * D))
    rel = abs(v - oracle) / abs(oracle)
    res.rows += [("branch_selector", "mismatches", wrong), ("spacelike_point", "relative_error", rel)]

    x = grid.points
    Ks = symbol_to_kernel(lambda xx, eta: -1j * eta ** 2 + 0 * xx, 1.0, 1.0, grid)
    sym = float(np.max(np.abs(Ks - heat_kernel(1.0)(x[:, None], 1.0, x[None, :], 0.0))))
    res.rows.append(("symbol_heat", "max_error", sym))
    res.checks += [Check("heat composition defect", ck, 1e-6 * tol_scale),
                   Check("Mehler composition defect", mh.defect, 1e-4 * tol_scale),
                   Check("K2(1) relative error", k2err, 1e-10 * tol_scale),
                   Check("H1 + H2 - 2 J2", ident, 1e-10 * tol_scale),
                   Check("Wronskian (scaled by z)", wron, 1e-9 * tol_scale),
                   Check("Hankel vs oracle", hank, 1e-10 * tol_scale),
                   Check("branch mismatches", wrong, 0),
                   Check("spacelike kernel vs oracle", rel, 1e-8 * tol_scale),
                   Check("symbol heat kernel", sym, 1e-6 * tol_scale)]
    return res


# -- 12. semilinear mild solution ------------------------------------------------------

def criterion_12(tol_scale=1.0):
    from scipy.integrate import solve_ivp

    res = CriterionResult(12, "Picard mild solution matches an ODE oracle")

    def a(s):
        return -0.5 + 0.3 * np.sin(s)

    F = families.GeneratorFamily(0.0, 2.0, lambda ts: a(ts).astype(complex)[:, None, None], 1,
                                 name="scalar")

    def f(s, u):
        return u * (1.0 - u)

    u_end = semilinear_mild(F, f, np.array([0.1]), 2.0, 4000)
    sol = solve_ivp(lambda s, u: a(s) * u + u * (1 - u), (0.0, 2.0), [0.1], method="DOP853",
                    rtol=1e-13, atol=1e-15)
    err = abs(complex(u_end[0]) - sol.y[0, -1])
    res.rows.append(("logistic", "error", err))
    res.checks.append(Check("error vs oracle", err, 1e-6 * tol_scale))
    return res


CRITERIA = {i: globals()[f"criterion_{i}"] for i in range(1, 13)}

SUITES = {
    "gauge": [1, 2],
    "dyson": [3, 4, 5, 6, 7, 12],
    "trotter": [8],
    "pathsum": [9, 10],
    "kernels": [11],
    "all": list(range(1, 13)),
}


def run_criteria(ids, tol_scale=1.0):
    out = []
    for i in ids:
        t0 = time.perf_counter()
        r = CRITERIA[i](tol_scale)
        r.seconds = time.perf_counter() - t0
        out.append(r)
    return out
