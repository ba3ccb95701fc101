"""
Closed-form propagator kernels and grid-based kernel checks.

Kernels are evaluated as ``K.eval(x, t, y, s)`` with array ``x`` and ``y``
broadcast against each other.  The Schroedinger and Mehler kernels accept a
complex time; ``t - i eps`` with ``eps > 0`` gives the analytically continued
kernel, which decays in ``|x - y|`` and still composes exactly.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .bessel import hankel_h2_1, hankel_h2_2, k2
from .errors import AccuracyWarning, DomainError, SingularityError

__all__ = [
    "KernelFunction",
    "Grid1D",
    "heat_kernel",
    "schrodinger_free_kernel",
    "mehler_kernel",
    "sqrt_relativistic_kernel",
    "relativistic_branch",
    "DIRAC_BETA",
    "symbol_to_kernel",
    "trapezoid_weights",
    "compose",
    "CompositionReport",
    "propagate_on_grid",
    "check_symbol",
    "write_kernel_csv",
]

DIRAC_BETA = np.diag([1.0, 1.0, -1.0, -1.0])


@dataclass(frozen=True)
class KernelFunction:
    name: str
    params: dict
    eval: Callable
    singular_set: str
    branch_rule: str = "single branch"
    one_sided: bool = False
    metadata: dict = field(default_factory=dict)

    def __call__(self, x, t, y, s=0.0):
        return self.eval(x, t, y, s)


@dataclass(frozen=True)
class Grid1D:
    """``count`` uniformly spaced points on ``[-L, L]``."""

    L: float
    count: int

    def __post_init__(self):
        if self.L <= 0 or self.count < 2:
            raise DomainError("grid needs L > 0 and at least two points")

    @property
    def points(self) -> np.ndarray:
        return np.linspace(-self.L, self.L, self.count)

    @property
    def h(self) -> float:
        return 2.0 * self.L / (self.count - 1)


def trapezoid_weights(grid: Grid1D) -> np.ndarray:
    w = np.full(grid.count, grid.h)
    w[0] = w[-1] = 0.5 * grid.h
    return w


# -- closed-form kernels -----------------------------------------------------

def heat_kernel(kappa: float = 1.0) -> KernelFunction:
    """``(4 pi kappa (t-s))^{-1/2} exp(-(x-y)^2 / (4 kappa (t-s)))``."""
    if kappa <= 0:
        raise DomainError("kappa must be positive")

    def ev(x, t, y, s=0.0):
        dt = t - s
        if not dt > 0:
            raise DomainError(f"heat kernel needs t > s, got t - s = {dt!r}")
        d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
        return np.exp(-d * d / (4.0 * kappa * dt)) / math.sqrt(4.0 * math.pi * kappa * dt)

    return KernelFunction("heat", {"kappa": kappa}, ev, "t <= s", one_sided=True)


def _elapsed(t, s):
    dt = complex(t) - complex(s)
    if dt.imag > 0:
        raise DomainError("complex time must have nonpositive imaginary part")
    return dt


def schrodinger_free_kernel(m: float = 1.0, hbar: float = 1.0) -> KernelFunction:
    """``(m / (2 pi i hbar t))^{1/2} exp(i m (x-y)^2 / (2 hbar t))``, principal root."""

    def ev(x, t, y, s=0.0):
        dt = _elapsed(t, s)
        if dt == 0:
            raise SingularityError("free kernel is singular at t = s")
        d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
        pref = np.sqrt(m / (2j * math.pi * hbar * dt))
        return pref * np.exp(1j * m * d * d / (2.0 * hbar * dt))

    return KernelFunction("schrodinger_free", {"m": m, "hbar": hbar}, ev, "t = s")


def mehler_kernel(m: float = 1.0, omega: float = 1.0, hbar: float = 1.0) -> KernelFunction:
    """Harmonic-oscillator kernel.

    ``(m W / (2 pi i hbar sin Wt))^{1/2} exp{(i m W / (2 hbar sin Wt))
    [(x^2 + y^2) cos Wt - 2 x y]}`` with ``W = omega``.
    """

    def ev(x, t, y, s=0.0):
        dt = _elapsed(t, s)
        sn = np.sin(omega * dt)
        if abs(sn) < 1e-12:
            k = round(dt.real * omega / math.pi)
            raise SingularityError(f"Mehler kernel caustic at t = {k} pi / omega")
        cs = np.cos(omega * dt)
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        pref = np.sqrt(m * omega / (2j * math.pi * hbar * sn))
        return pref * np.exp(1j * m * omega / (2.0 * hbar * sn) * ((x * x + y * y) * cs - 2.0 * x * y))

    return KernelFunction("mehler", {"m": m, "omega": omega, "hbar": hbar}, ev,
                          "t - s = k pi / omega")


def relativistic_branch(x, t, y, c: float = 1.0) -> str:
    """``"spacelike"``, ``"future"`` or ``"past"`` from ``c^2 t^2 - |x - y|^2`` and ``sign(t)``."""
    r = float(np.linalg.norm(np.atleast_1d(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))))
    ct = c * float(t)
    gap = ct * ct - r * r
    if abs(gap) <= 1e-12 * max(ct * ct, r * r, 1e-300):
        raise SingularityError("kernel is singular on the light cone")
    if gap < 0:
        return "spacelike"
    return "future" if t > 0 else "past"


def sqrt_relativistic_kernel(mu: float = 1.0, c: float = 1.0) -> KernelFunction:
    """Scalar part of the square-root relativistic kernel.

    With ``D = c^2 t^2 - |x - y|^2`` the value is ``(c t mu^2 / 4 pi)`` times

    * ``-2i K_2(mu sqrt(-D)) / (pi (-D))`` when ``D < 0``,
    * ``H_2^(2)(mu sqrt(D)) / D`` when ``D > 0`` and ``t > 0``,
    * ``-H_2^(1)(mu sqrt(D)) / D`` when ``D > 0`` and ``t < 0``.

    The Dirac matrix ``beta`` multiplying the kernel is kept in ``metadata``.
    """

    def ev(x, t, y, s=0.0):
        t = float(t) - float(s)
        branch = relativistic_branch(x, t, y, c)
        r = float(np.linalg.norm(np.atleast_1d(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))))
        pref = c * t * mu * mu / (4.0 * math.pi)
        if branch == "spacelike":
            D = r * r - (c * t) ** 2
            return complex(0.0, -2.0 * pref * k2(mu * math.sqrt(D)) / (math.pi * D))
        D = (c * t) ** 2 - r * r
        z = mu * math.sqrt(D)
        if branch == "future":
            return pref * hankel_h2_2(z) / D
        return -pref * hankel_h2_1(z) / D

    return KernelFunction("sqrt_relativistic", {"mu": mu, "c": c}, ev, "c^2 t^2 = |x - y|^2",
                          "spacelike -> K2; timelike t > 0 -> H2(2); timelike t < 0 -> H2(1)",
                          metadata={"beta": DIRAC_BETA})


# -- grid constructions --------------------------------------------------------

def symbol_to_kernel(a, t: float, hbar: float, grid: Grid1D, oversample: int = 2,
                     norm: str = "standard", tail_tol: float = 1e-8) -> np.ndarray:
    """Kernel samples ``K[i, j] = K(x_i, t; y_j, 0)`` from a symbol.

    ``K(x, y) = c int exp(i (x - y) eta) exp(-(i/hbar) t a(x, eta)) d eta`` by a
    Riemann sum over ``eta`` in ``[-pi/h, pi/h)`` with step
    ``2 pi / (oversample * count * h)``.  ``norm="standard"`` uses
    ``c = 1/(2 pi)``, which makes ``a = 0`` the identity; ``norm="unitary"``
    uses ``c = (2 pi)^{-1/2}``.

    ``a(x, eta)`` must accept broadcast arrays.  If the integrand is not below
    ``tail_tol`` of its peak at the edge of the ``eta`` range an
    :class:`AccuracyWarning` reports the tail size.
    """
    x = grid.points
    h = grid.h
    P = int(oversample) * grid.count
    deta = 2.0 * math.pi / (P * h)
    eta = (np.arange(P) - P // 2) * deta
    S = np.exp(-1j / hbar * t * np.asarray(a(x[:, None], eta[None, :]), dtype=np.complex128))
    S = np.broadcast_to(S, (x.size, eta.size))
    peak = np.max(np.abs(S))
    if not np.isfinite(peak):
        raise DomainError("symbol exponential overflowed; the symbol is not integrable at this t")
    tail = float(np.max(np.abs(S[:, [0, -1]]))) / peak
    if tail > tail_tol:
        warnings.warn(f"symbol_to_kernel: eta tail is {tail:.3e} of the peak", AccuracyWarning,
                      stacklevel=2)
    c = 1.0 / (2.0 * math.pi) if norm == "standard" else 1.0 / math.sqrt(2.0 * math.pi)
    if norm not in ("standard", "unitary"):
        raise DomainError(f"unknown normalisation {norm!r}")
    left = S * np.exp(1j * x[:, None] * eta[None, :])
    right = np.exp(-1j * eta[:, None] * x[None, :])
    return c * deta * (left @ right)


@dataclass
class CompositionReport:
    defect: float
    damping: float
    bias: float
    window: float


def compose(K: KernelFunction, t: float, tau: float, s: float, grid: Grid1D,
            damping: float = 0.0, window: float = 0.5) -> CompositionReport:
    """Reproducing-property defect on a grid.

    Forms ``int K(x, t; z, tau) K(z, tau; y, s) dz`` with trapezoid weights
    over the grid and compares it with ``K(x, t; y, s)`` for ``x, y`` in the
    central ``window`` fraction of the grid, away from the truncation edges.

    For oscillatory kernels ``damping = eps > 0`` shifts both factors to
    complex time ``- i eps``; the target is then the kernel at ``t - s - 2 i
    eps``.  The report carries the bias ``max |K(t - 2 i eps) - K(t)|`` on
    the same window.
    """
    if K.one_sided and not s < tau < t:
        raise DomainError("need s < tau < t for a one-sided kernel")
    if tau in (s, t):
        raise SingularityError("intermediate time coincides with an endpoint")
    z = grid.points
    w = trapezoid_weights(grid)
    inner = np.abs(z) <= window * grid.L + 1e-12
    xs = z[inner]
    e = 1j * damping if damping else 0.0
    K1 = K(xs[:, None], t - e, z[None, :], tau)
    K2 = K(z[:, None], tau - e, xs[None, :], s)
    C = (K1 * w[None, :]) @ K2
    target = K(xs[:, None], t - 2 * e, xs[None, :], s)
    defect = float(np.max(np.abs(C - target)))
    bias = 0.0
    if damping:
        bias = float(np.max(np.abs(target - K(xs[:, None], t, xs[None, :], s))))
    return CompositionReport(defect, damping, bias, window)


def propagate_on_grid(K: KernelFunction, psi, t: float, grid: Grid1D, s: float = 0.0):
    """``(U psi)(x_i) = sum_j w_j K(x_i, t; y_j, s) psi(y_j)``."""
    x = grid.points
    return (K(x[:, None], t, x[None, :], s) * trapezoid_weights(grid)[None, :]) @ np.asarray(psi)


def check_symbol(a, m: float, C: float | None = None, xs=None, etas=None):
    """Sampled growth test ``|a(x, eta)| <= C (1 + |eta|)^m``.

    Returns ``(ok, C_est)`` where ``C_est`` is the smallest constant that works
    on the samples.  Without a declared ``C`` the result is ``ok`` whenever
    ``C_est`` is finite.
    """
    xs = np.linspace(-10, 10, 41) if xs is None else np.asarray(xs, dtype=float)
    etas = np.concatenate([-np.geomspace(1e-3, 1e4, 60)[::-1], [0.0], np.geomspace(1e-3, 1e4, 60)]) \
        if etas is None else np.asarray(etas, dtype=float)
    vals = np.abs(np.asarray(a(xs[:, None], etas[None, :]), dtype=np.complex128))
    ratio = vals / (1.0 + np.abs(etas[None, :])) ** m
    C_est = float(np.max(ratio))
    ok = bool(np.isfinite(C_est)) and (C is None or C_est <= C)
    return ok, C_est


def write_kernel_csv(path, grid: Grid1D, t: float, samples) -> None:
    """Rows ``x, y, t, re, im`` for a sample matrix ``samples[i, j] = K(x_i, t; x_j)``."""
    x = grid.points
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["x", "y", "t", "re", "im"])
        for i, xi in enumerate(x):
            for j, yj in enumerate(x):
                v = complex(samples[i, j])
                wr.writerow([repr(float(xi)), repr(float(yj)), repr(float(t)),
                             repr(v.real), repr(v.imag)])
