"""
Henstock-Kurzweil (gauge) integration of matrix-valued families.

A gauge is a strictly positive function on ``[a, b]``.  A tagged partition
``t_0 <= tau_1 <= t_1 <= ... <= tau_n <= t_n`` is fine for the gauge when
every cell ``[t_{i-1}, t_i]`` sits inside ``(tau_i - delta(tau_i),
tau_i + delta(tau_i))``.  :func:`cousin` builds such partitions by midpoint
bisection and :func:`hk_integrate` drives a sequence of shrinking gauges until
successive Riemann sums agree.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConvergenceError, DomainError, PartitionError
from .matcore import op_norm

__all__ = [
    "Gauge",
    "TaggedPartition",
    "GaugeIntegralResult",
    "constant_gauge",
    "cousin",
    "is_fine",
    "riemann_sum",
    "hk_integrate",
    "strong_continuity_defect",
    "uniform_partition",
]


@dataclass(frozen=True)
class Gauge:
    """A gauge ``delta: [a, b] -> (0, inf)``.

    ``delta`` may be vectorised; scalar-only callables are handled too.
    """

    delta: Callable
    a: float
    b: float

    def __post_init__(self):
        if not self.a < self.b:
            raise DomainError(f"gauge interval needs a < b, got [{self.a}, {self.b}]")

    def __call__(self, t):
        ts = np.atleast_1d(np.asarray(t, dtype=float))
        try:
            d = np.asarray(self.delta(ts), dtype=float)
            if d.shape != ts.shape:
                d = np.broadcast_to(d, ts.shape).astype(float)
        except (TypeError, ValueError):
            d = np.array([float(self.delta(float(x))) for x in ts])
        if np.any(~(d > 0)):
            bad = ts[~(d > 0)][0]
            raise DomainError(f"gauge is not positive at t={bad!r}")
        return d


def constant_gauge(value: float, a: float, b: float) -> Gauge:
    return Gauge(lambda t: np.full(np.shape(t), float(value)), a, b)


@dataclass(frozen=True)
class TaggedPartition:
    """Endpoints ``t_0 < ... < t_n`` with tags ``t_{i-1} <= tau_i <= t_i``."""

    endpoints: np.ndarray
    tags: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.endpoints, dtype=float)
        tau = np.asarray(self.tags, dtype=float)
        object.__setattr__(self, "endpoints", t)
        object.__setattr__(self, "tags", tau)
        if t.ndim != 1 or t.size < 2 or tau.size != t.size - 1:
            raise DomainError("partition needs n+1 endpoints and n tags")
        if np.any(np.diff(t) < 0):
            raise DomainError("partition endpoints must be nondecreasing")
        if np.any(tau < t[:-1]) or np.any(tau > t[1:]):
            raise DomainError("every tag must lie in its cell")

    @property
    def a(self) -> float:
        return float(self.endpoints[0])

    @property
    def b(self) -> float:
        return float(self.endpoints[-1])

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.endpoints)

    @property
    def mesh(self) -> float:
        return float(self.widths.max())

    def __len__(self):
        return self.tags.size


def uniform_partition(a: float, b: float, n: int, tag: str = "mid") -> TaggedPartition:
    t = np.linspace(a, b, n + 1)
    if tag == "mid":
        tau = 0.5 * (t[:-1] + t[1:])
    elif tag == "left":
        tau = t[:-1].copy()
    elif tag == "right":
        tau = t[1:].copy()
    else:
        raise DomainError(f"unknown tag rule {tag!r}")
    return TaggedPartition(t, tau)


def is_fine(p: TaggedPartition, g: Gauge) -> bool:
    """Exact test of the fineness condition, cell by cell (open intervals)."""
    d = g(p.tags)
    lo_ok = p.endpoints[:-1] > p.tags - d
    hi_ok = p.endpoints[1:] < p.tags + d
    return bool(np.all(lo_ok & hi_ok))


def cousin(g: Gauge, max_depth: int = 40) -> TaggedPartition:
    """Construct a ``g``-fine tagged partition by midpoint bisection.

    A cell ``[u, v]`` is accepted with tag ``(u + v)/2`` as soon as its
    half-width is below the gauge at the midpoint, otherwise it is halved.

    Raises
    ------
    PartitionError
        If some cell is still unresolved after ``max_depth`` halvings.
    """
    lo = np.array([g.a])
    hi = np.array([g.b])
    done_lo, done_hi = [], []
    for depth in range(max_depth + 1):
        mid = 0.5 * (lo + hi)
        d = g(mid)
        # same comparison as is_fine, so accepted cells always validate
        ok = (lo > mid - d) & (hi < mid + d)
        done_lo.append(lo[ok])
        done_hi.append(hi[ok])
        lo, hi = lo[~ok], hi[~ok]
        if lo.size == 0:
            break
        if depth == max_depth:
            raise PartitionError(
                f"cousin: depth {max_depth} exhausted; unresolved subinterval "
                f"[{lo[0]!r}, {hi[0]!r}]", interval=(float(lo[0]), float(hi[0])))
        mid = 0.5 * (lo + hi)
        lo, hi = np.concatenate([lo, mid]), np.concatenate([mid, hi])
    L = np.concatenate(done_lo)
    H = np.concatenate(done_hi)
    order = np.argsort(L, kind="stable")
    L, H = L[order], H[order]
    p = TaggedPartition(np.append(L, H[-1]), 0.5 * (L + H))
    if not is_fine(p, g):
        raise PartitionError("cousin: constructed partition failed validation")
    return p


def riemann_sum(F, p: TaggedPartition) -> np.ndarray:
    """``sum_i (t_i - t_{i-1}) F(tau_i)``, reduced in a fixed order."""
    vals = F(p.tags)
    dt = p.widths
    return (dt[:, None, None] * vals).sum(axis=0)


@dataclass
class GaugeIntegralResult:
    value: np.ndarray
    partitions_used: int
    final_mesh: float
    est_error: float
    history: list = field(default_factory=list)


def _nudge(tags, lo, hi, points, eps):
    """Move tags sitting on declared discontinuities into the cell interior."""
    if not len(points):
        return tags
    tags = tags.copy()
    for d in points:
        hit = np.abs(tags - d) <= eps
        if np.any(hit):
            room_right = hi[hit] - tags[hit] > eps
            tags[hit] = np.where(room_right, tags[hit] + eps, tags[hit] - eps)
    return tags


def hk_integrate(F, a: float, b: float, tol: float = 1e-10,
                 max_iter: int = 20, delta0: float | None = None) -> GaugeIntegralResult:
    """Gauge integral of ``F`` over ``[a, b]``.

    Gauges ``delta_{k+1} = delta_k / 2`` start from the constant ``(b - a)/4``.
    For each gauge a fine partition is built with :func:`cousin` (separately
    on every piece between declared discontinuities of ``F``) and the Riemann
    sum is formed.  Iteration stops when two successive sums differ by less
    than ``tol`` in operator norm.
    """
    if not a < b:
        raise DomainError(f"hk_integrate needs a < b, got [{a}, {b}]")
    if tol <= 0:
        raise DomainError("tol must be positive")
    disc = [float(x) for x in getattr(F, "discontinuities", ()) if a < x < b]
    cuts = [a] + sorted(disc) + [b]
    eps = 1e-13 * (b - a)
    delta = (b - a) / 4.0 if delta0 is None else float(delta0)
    prev = None
    history = []
    for k in range(max_iter):
        ends, tags = [np.array([a])], []
        for u, v in zip(cuts[:-1], cuts[1:]):
            p = cousin(constant_gauge(delta, u, v))
            ends.append(p.endpoints[1:])
            tags.append(p.tags)
        t = np.concatenate(ends)
        tau = _nudge(np.concatenate(tags), t[:-1], t[1:], disc, eps)
        part = TaggedPartition(t, tau)
        S = riemann_sum(F, part)
        if prev is not None:
            err = op_norm(S - prev)
            history.append(err)
            if err < tol:
                return GaugeIntegralResult(S, k + 1, part.mesh, err, history)
        prev = S
        delta *= 0.5
    raise ConvergenceError(
        f"hk_integrate: no convergence to tol={tol} after {max_iter} gauges",
        history)


def strong_continuity_defect(F, x, p: TaggedPartition) -> float:
    """``sum_k dt_k |A(s_k) x - <A(s_k) x, x> x|^2`` over the partition tags."""
    x = np.asarray(x, dtype=np.complex128)
    nx = np.linalg.norm(x)
    if abs(nx - 1.0) > 1e-12:
        raise DomainError(f"x must be a unit vector, |x| = {nx!r}")
    Ax = F(p.tags) @ x
    proj = Ax @ x.conj()
    r = Ax - proj[:, None] * x[None, :]
    return float(np.sum(p.widths * np.sum(np.abs(r) ** 2, axis=1)))
