"""
Sum over measurement-time slots and its Poisson average.

For measurement times ``tau_1 < ... < tau_n`` in ``[a, t]`` the slot
boundaries are the midpoints between neighbouring taus.  Each slot integral
``M_j = int_{t_{j-1}}^{t_j} A(s) ds`` is placed at ``tau_j`` and the slot
exponentials are multiplied latest-first.  Averaging these products with
Poisson weights in ``n`` gives the experimental evolution operator.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import BudgetError, ConvergenceError, DomainError
from .evolution import ordered_product, propagate
from .families import GeneratorFamily
from .gauge import constant_gauge, cousin, hk_integrate
from .matcore import expm, op_norm, sqrt_cutoff, yosida

__all__ = [
    "MeasurementSchedule",
    "PathSumResult",
    "slot_integrals",
    "u_schedule",
    "u_n",
    "poisson_weights",
    "experimental_evolution",
    "lambda_sweep",
    "Regularizer",
    "regularized_family",
    "feynman_kac",
]

DEFAULT_BUDGET = 2000
# weights this far below the largest one cannot change the sum in double precision
NEGLIGIBLE_WEIGHT = 1e-20


def _threads():
    try:
        return max(1, int(os.environ.get("CHRONOCALC_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class MeasurementSchedule:
    """Measurement times in ``[a, t]`` and the induced slot boundaries."""

    taus: np.ndarray
    t: float
    a: float = 0.0

    def __post_init__(self):
        taus = np.asarray(self.taus, dtype=float)
        object.__setattr__(self, "taus", taus)
        if taus.ndim != 1 or taus.size < 1:
            raise DomainError("schedule needs at least one measurement time")
        if np.any(np.diff(taus) <= 0):
            raise DomainError("measurement times must be strictly increasing")
        if taus[0] < self.a or taus[-1] > self.t:
            raise DomainError(f"measurement times must lie in [{self.a}, {self.t}]")

    @property
    def n(self) -> int:
        return self.taus.size

    @property
    def boundaries(self) -> np.ndarray:
        mids = 0.5 * (self.taus[:-1] + self.taus[1:])
        return np.concatenate([[self.a], mids, [self.t]])

    @classmethod
    def equispaced(cls, t, n, a=0.0):
        """``tau_j = a + j (t - a)/n`` for ``j = 1..n``."""
        if n < 1:
            raise DomainError("n must be >= 1")
        return cls(a + (t - a) * np.arange(1, n + 1) / n, t, a)

    @classmethod
    def uniform_random(cls, t, n, rng, a=0.0):
        """Order statistics of ``n`` uniform draws on ``[a, t]``."""
        return cls(np.sort(rng.uniform(a, t, n)), t, a)


@dataclass
class PathSumResult:
    value: np.ndarray
    lam: float
    terms_used: int
    poisson_deficit: float
    weight_sum: float
    renormalized: bool = False


def _batched_midpoint_hk(F, lo, hi, tol, max_iter):
    """Gauge integrals over many smooth slots in lockstep.

    The gauge on each slot is the constant ``width/4`` halved per iteration,
    as in :func:`hk_integrate`.  Fine partitions for a constant gauge are
    affine images of one partition of ``[0, 1]``, so a single call to
    :func:`cousin` serves every slot.
    """
    width = hi - lo
    out = np.empty((lo.size, F.dim, F.dim), dtype=np.complex128)
    active = np.arange(lo.size)
    prev = None
    rel = 0.25
    for _ in range(max_iter):
        p = cousin(constant_gauge(rel, 0.0, 1.0))
        w = p.widths
        tags = lo[active, None] + width[active, None] * p.tags[None, :]
        vals = F(tags.ravel()).reshape(active.size, w.size, F.dim, F.dim)
        S = width[active, None, None] * np.einsum("k,mkij->mij", w, vals)
        if prev is not None:
            err = np.linalg.norm(S - prev, 2, axis=(1, 2))
            done = err < tol[active]
            out[active[done]] = S[done]
            active, S = active[~done], S[~done]
            if active.size == 0:
                return out
        prev = S
        rel *= 0.5
    raise ConvergenceError(
        f"slot integrals: {active.size} slots unconverged after {max_iter} gauges")


def slot_integrals(F: GeneratorFamily, bounds, tol: float = 1e-10,
                   max_iter: int = 20) -> np.ndarray:
    """``M_j = int_{bounds[j-1]}^{bounds[j]} A(s) ds`` for every slot, ``(n, d, d)``.

    ``tol`` is shared out in proportion to slot width, so the summed error of
    all slots stays near ``tol`` however many slots there are.
    """
    b = np.asarray(bounds, dtype=float)
    lo, hi = b[:-1], b[1:]
    tols = tol * (hi - lo) / (b[-1] - b[0])
    out = np.zeros((lo.size, F.dim, F.dim), dtype=np.complex128)
    nonempty = hi > lo
    disc = np.asarray(F.discontinuities, dtype=float)
    rough = np.zeros(lo.size, dtype=bool)
    if disc.size:
        rough = np.any((disc[None, :] > lo[:, None]) & (disc[None, :] < hi[:, None]), axis=1)
    smooth = np.flatnonzero(nonempty & ~rough)
    if smooth.size:
        out[smooth] = _batched_midpoint_hk(F, lo[smooth], hi[smooth], tols[smooth], max_iter)
    for j in np.flatnonzero(nonempty & rough):
        out[j] = hk_integrate(F, lo[j], hi[j], tols[j], max_iter).value
    return out


def u_schedule(F: GeneratorFamily, sched: MeasurementSchedule, tol: float = 1e-10) -> np.ndarray:
    """``expm(M_n) ... expm(M_1)`` for the slots of ``sched``."""
    M = slot_integrals(F, sched.boundaries, tol)
    return ordered_product(expm(M)[::-1])


def u_n(F: GeneratorFamily, t: float, n: int, tol: float = 1e-10) -> np.ndarray:
    """Slot product for the equispaced schedule ``tau_j = a + j (t - a)/n``."""
    return u_schedule(F, MeasurementSchedule.equispaced(t, n, F.a), tol)


def poisson_weights(mean: float, last: int) -> tuple[np.ndarray, float]:
    """Poisson probabilities ``P(N = k)`` for ``k <= last`` and the tail ``P(N > last)``.

    Uses the upward recurrence ``w_{k+1} = w_k mean/(k+1)``; when ``exp(-mean)``
    underflows the recurrence runs on logarithms.
    """
    if mean < 0:
        raise DomainError("Poisson mean must be >= 0")
    k = np.arange(last + 1)
    if mean < 700.0:
        w = np.empty(last + 1)
        w[0] = math.exp(-mean)
        for j in range(last):
            w[j + 1] = w[j] * mean / (j + 1)
    else:
        logw = np.empty(last + 1)
        logw[0] = -mean
        logw[1:] = -mean + np.cumsum(math.log(mean) - np.log(k[1:]))
        w = np.exp(logw)
    deficit = max(0.0, 1.0 - math.fsum(w))
    return w, deficit


def experimental_evolution(F: GeneratorFamily, t: float, lam: float, tol: float = 1e-10,
                           budget: int = DEFAULT_BUDGET, renormalize: bool = False,
                           schedule: str = "equispaced", rng=None,
                           threads: int | None = None) -> PathSumResult:
    """Poisson-weighted average of slot products up to ``n = floor(lam (t - a))``.

    The ``n = 0`` term is the identity.  With ``renormalize`` the truncated
    sum is divided by the retained weight mass.  ``schedule="random"`` draws
    the measurement times as uniform order statistics from ``rng`` instead of
    using the equispaced ones; this is a qualitative estimator only.
    """
    if lam <= 0:
        raise DomainError("lambda must be positive")
    span = t - F.a
    mean = lam * span
    last = int(math.floor(mean))
    if last + 1 > budget:
        raise BudgetError(f"{last + 1} Poisson terms exceed the budget of {budget}")
    w, deficit = poisson_weights(mean, last)
    keep = [k for k in range(1, last + 1) if w[k] >= NEGLIGIBLE_WEIGHT * w.max()]
    if schedule == "random":
        rng = rng if rng is not None else np.random.default_rng(0)
        scheds = {k: MeasurementSchedule.uniform_random(t, k, rng, F.a) for k in keep}
    elif schedule == "equispaced":
        scheds = {k: MeasurementSchedule.equispaced(t, k, F.a) for k in keep}
    else:
        raise DomainError(f"unknown schedule {schedule!r}")

    def term(k):
        return u_schedule(F, scheds[k], tol)

    nthreads = _threads() if threads is None else threads
    if nthreads > 1 and len(keep) > 1:
        with ThreadPoolExecutor(nthreads) as pool:
            mats = list(pool.map(term, keep))
    else:
        mats = [term(k) for k in keep]
    # reduce in ascending n
    value = w[0] * np.eye(F.dim, dtype=np.complex128)
    for k, U in zip(keep, mats):
        value = value + w[k] * U
    total = math.fsum(w)
    if renormalize:
        value = value / total
    return PathSumResult(value, float(lam), last + 1, deficit, total, renormalize)


def lambda_sweep(F: GeneratorFamily, t: float, lams, reference, renormalize: bool = False,
                 tol: float = 1e-10, budget: int = DEFAULT_BUDGET, timings: bool = False):
    """Rows ``(lambda, terms_used, deficit, error_vs_reference, runtime_ms)``.

    ``runtime_ms`` is ``None`` unless ``timings`` is set, which keeps the
    rows reproducible byte for byte.
    """
    import time

    rows = []
    for lam in lams:
        t0 = time.perf_counter()
        r = experimental_evolution(F, t, lam, tol, budget, renormalize)
        ms = (time.perf_counter() - t0) * 1e3 if timings else None
        rows.append((float(lam), r.terms_used, r.poisson_deficit,
                     op_norm(r.value - reference), ms))
    return rows


@dataclass(frozen=True)
class Regularizer:
    """``kind`` is ``"yosida"`` (parameter lambda) or ``"sqrt_cutoff"`` (parameter rho)."""

    kind: str
    param: float

    def __post_init__(self):
        if self.kind not in ("yosida", "sqrt_cutoff"):
            raise DomainError(f"unknown regularizer {self.kind!r}")

    def __call__(self, V) -> np.ndarray:
        if self.kind == "yosida":
            return yosida(V, self.param)
        return sqrt_cutoff(V, self.param)


def regularized_family(V: GeneratorFamily, reg: Regularizer) -> GeneratorFamily:
    """Slice-wise regularisation ``s -> reg(V(s))``."""
    f = V.func

    def func(ts):
        return np.stack([reg(M) for M in f(ts)])

    return GeneratorFamily(V.a, V.b, func, V.dim, V.continuity_class, V.discontinuities,
                           f"{reg.kind}[{reg.param}]({V.name})", V.check_domain)


def feynman_kac(F0: GeneratorFamily, V: GeneratorFamily, t: float, regularizer: Regularizer,
                n: int, coupling: complex = 1.0, richardson: bool = False) -> np.ndarray:
    """Propagator of ``F0 + coupling * reg(V)`` at resolution ``n``.

    As ``rho -> 0`` (or ``lambda -> inf`` for the Yosida form) the result tends
    to the propagator of ``F0 + coupling * V``.
    """
    Vr = regularized_family(V, regularizer)
    full = F0 + (Vr if coupling == 1.0 else Vr.scaled(coupling))
    return propagate(full, t, n, richardson=richardson)
