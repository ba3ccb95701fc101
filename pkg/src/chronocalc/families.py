"""
Generator families t -> A(t) on a compact interval.

A family is evaluated with ``F(t)`` for a scalar time (returns ``(d, d)``) or
with an array of times (returns ``(..., d, d)``).  Named families can be built
from JSON descriptors through :func:`family_from_config`.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError
from .matcore import as_matrix, matrix_from_json, random_dissipative, random_matrix

CONTINUITY_CLASSES = ("constant", "smooth", "piecewise", "tabulated")


@dataclass(frozen=True)
class GeneratorFamily:
    """A map ``t -> A(t)`` on ``[a, b]``.

    ``func`` receives a 1-d float array of times and returns an array of shape
    ``(len(t), d, d)``.  Use :meth:`from_scalar` to wrap a function that only
    handles one time at a time.
    """

    a: float
    b: float
    func: Callable[[np.ndarray], np.ndarray]
    dim: int
    continuity_class: str = "smooth"
    discontinuities: tuple = ()
    name: str = "family"
    check_domain: bool = True

    def __post_init__(self):
        if not self.a < self.b:
            raise DomainError(f"family interval needs a < b, got [{self.a}, {self.b}]")
        if self.continuity_class not in CONTINUITY_CLASSES:
            raise DomainError(f"unknown continuity class {self.continuity_class!r}")

    def __call__(self, t):
        ts = np.asarray(t, dtype=float)
        flat = np.atleast_1d(ts).ravel()
        if self.check_domain:
            span = self.b - self.a
            slack = 1e-12 * span
            if np.any(flat < self.a - slack) or np.any(flat > self.b + slack):
                bad = flat[(flat < self.a - slack) | (flat > self.b + slack)][0]
                raise DomainError(
                    f"{self.name}: time {bad!r} outside [{self.a}, {self.b}]")
        out = np.asarray(self.func(flat), dtype=np.complex128)
        if out.shape != (flat.size, self.dim, self.dim):
            raise DomainError(
                f"{self.name}: evaluation returned shape {out.shape}, "
                f"expected {(flat.size, self.dim, self.dim)}")
        if not np.all(np.isfinite(out)):
            idx = np.argwhere(~np.isfinite(out))[0][0]
            raise DomainError(f"{self.name}: non-finite value at t={flat[idx]!r}")
        return out.reshape(ts.shape + (self.dim, self.dim))

    @classmethod
    def from_scalar(cls, fn, a, b, dim=None, **kw):
        """Wrap ``fn(t) -> (d, d)`` evaluated one time at a time."""
        if dim is None:
            dim = as_matrix(fn(a)).shape[0]

        def func(ts):
            return np.stack([np.asarray(fn(float(t)), dtype=np.complex128) for t in ts])

        return cls(a=a, b=b, func=func, dim=dim, **kw)

    # -- algebra ---------------------------------------------------------

    def scaled(self, c) -> "GeneratorFamily":
        """The family ``c * A(t)``."""
        f = self.func
        return GeneratorFamily(
            self.a, self.b, lambda ts: c * f(ts), self.dim, self.continuity_class,
            self.discontinuities, f"{c}*{self.name}", self.check_domain)

    def __add__(self, other: "GeneratorFamily") -> "GeneratorFamily":
        if other.dim != self.dim:
            raise DomainError("family dimensions differ")
        a, b = max(self.a, other.a), min(self.b, other.b)
        f, g = self.func, other.func
        cls_ = "constant" if self.continuity_class == other.continuity_class == "constant" \
            else ("piecewise" if "piecewise" in (self.continuity_class, other.continuity_class)
                  else "smooth")
        disc = tuple(sorted(set(self.discontinuities) | set(other.discontinuities)))
        return GeneratorFamily(a, b, lambda ts: f(ts) + g(ts), self.dim, cls_, disc,
                               f"({self.name}+{other.name})", self.check_domain)

    def restricted(self, a, b) -> "GeneratorFamily":
        disc = tuple(d for d in self.discontinuities if a < d < b)
        return GeneratorFamily(a, b, self.func, self.dim, self.continuity_class, disc,
                               self.name, self.check_domain)

    def is_commuting(self, samples: int = 9, tol: float = 1e-12) -> bool:
        """Sampled check that ``||[A(s), A(s')]|| <= tol`` on a pair grid."""
        ts = np.linspace(self.a, self.b, samples)
        mats = self(ts)
        for i in range(samples):
            for j in range(i + 1, samples):
                c = mats[i] @ mats[j] - mats[j] @ mats[i]
                if np.linalg.norm(c, 2) > tol:
                    return False
        return True


# -- constructors ----------------------------------------------------------

def constant(A, a=0.0, b=1.0, name="constant") -> GeneratorFamily:
    A = as_matrix(A)

    def func(ts):
        return np.broadcast_to(A, (len(ts),) + A.shape).copy()

    return GeneratorFamily(a, b, func, A.shape[0], "constant", (), name)


def diagonal(coeff_fns, a=0.0, b=1.0, name="diagonal") -> GeneratorFamily:
    """Diagonal family ``diag(f_1(t), ..., f_d(t))`` from vectorised scalars."""
    fns = list(coeff_fns)
    d = len(fns)

    def func(ts):
        out = np.zeros((len(ts), d, d), dtype=np.complex128)
        for k, f in enumerate(fns):
            out[:, k, k] = np.broadcast_to(f(ts), ts.shape)
        return out

    return GeneratorFamily(a, b, func, d, "smooth", (), name)


def polynomial(coeffs, a=0.0, b=1.0, name="polynomial") -> GeneratorFamily:
    """``A(t) = sum_k C_k t**k`` for matrices ``C_k``."""
    C = np.stack([as_matrix(c) for c in coeffs])

    def func(ts):
        powers = ts[:, None] ** np.arange(len(C))[None, :]
        return np.einsum("tk,kij->tij", powers, C)

    cls_ = "constant" if len(C) == 1 else "smooth"
    return GeneratorFamily(a, b, func, C.shape[1], cls_, (), name)


def trigonometric(A0, A1, A2=None, omega=1.0, a=0.0, b=1.0, name="trig"):
    """``A(t) = A0 + sin(omega t) A1 + cos(omega t) A2``."""
    A0 = as_matrix(A0)
    A1 = as_matrix(A1)
    A2 = np.zeros_like(A0) if A2 is None else as_matrix(A2)

    def func(ts):
        s = np.sin(omega * ts)[:, None, None]
        c = np.cos(omega * ts)[:, None, None]
        return A0[None] + s * A1[None] + c * A2[None]

    return GeneratorFamily(a, b, func, A0.shape[0], "smooth", (), name)


def step(breakpoints, mats, a=None, b=None, name="step") -> GeneratorFamily:
    """Piecewise-constant family.

    ``breakpoints`` are ``t_0 < t_1 < ... < t_k``; ``mats[i]`` is the value on
    ``[t_i, t_{i+1})`` (the last piece is closed on the right).
    """
    bp = np.asarray(breakpoints, dtype=float)
    M = np.stack([as_matrix(m) for m in mats])
    if len(M) != len(bp) - 1 or np.any(np.diff(bp) <= 0):
        raise DomainError("step family needs increasing breakpoints and one matrix per piece")
    a = bp[0] if a is None else a
    b = bp[-1] if b is None else b

    def func(ts):
        idx = np.clip(np.searchsorted(bp, ts, side="right") - 1, 0, len(M) - 1)
        return M[idx]

    return GeneratorFamily(a, b, func, M.shape[1], "piecewise", tuple(bp[1:-1]), name)


def indicator(A, lo, hi, a=0.0, b=1.0, name="indicator") -> GeneratorFamily:
    """``A * chi_[lo, hi]`` on ``[a, b]``."""
    A = as_matrix(A)
    Z = np.zeros_like(A)
    pts = [a] + [p for p in (lo, hi) if a < p < b] + [b]
    mats = []
    for u, v in zip(pts[:-1], pts[1:]):
        mid = 0.5 * (u + v)
        mats.append(A if lo <= mid <= hi else Z)
    return step(pts, mats, name=name)


def tabulated(times, mats, name="tabulated") -> GeneratorFamily:
    """Piecewise-linear interpolation through sampled matrices."""
    T = np.asarray(times, dtype=float)
    M = np.stack([as_matrix(m) for m in mats])
    if len(T) < 2 or len(T) != len(M) or np.any(np.diff(T) <= 0):
        raise DomainError("tabulated family needs >= 2 increasing sample times")

    def func(ts):
        i = np.clip(np.searchsorted(T, ts, side="right") - 1, 0, len(T) - 2)
        w = ((ts - T[i]) / (T[i + 1] - T[i]))[:, None, None]
        return (1 - w) * M[i] + w * M[i + 1]

    return GeneratorFamily(T[0], T[-1], func, M.shape[1], "tabulated", (), name)


def random_smooth(dim, seed, a=0.0, b=1.0, scale=1.0, dissipative=True, name=None):
    """Random smooth non-commuting family ``A0 + sin(t) A1 + t^2 A2 / 2``.

    With ``dissipative=True`` the constant part is shifted so every slice has
    a negative semidefinite Hermitian part.
    """
    rng = np.random.default_rng(seed)
    A1 = random_matrix(dim, rng, 0.5 * scale)
    A2 = random_matrix(dim, rng, 0.5 * scale)
    if dissipative:
        A0 = random_dissipative(dim, rng, scale)
        bound = np.linalg.norm(A1, 2) + 0.5 * max(a * a, b * b) * np.linalg.norm(A2, 2)
        A0 = A0 - bound * np.eye(dim)
    else:
        A0 = random_matrix(dim, rng, scale)

    def func(ts):
        s = np.sin(ts)[:, None, None]
        q = 0.5 * (ts * ts)[:, None, None]
        return A0[None] + s * A1[None] + q * A2[None]

    return GeneratorFamily(a, b, func, dim, "smooth", (), name or f"random_smooth[{seed}]")


def family_from_config(cfg: dict) -> GeneratorFamily:
    """Build a family from a JSON descriptor.

    Recognised ``kind`` values: ``constant``, ``polynomial``, ``diagonal_poly``,
    ``step``, ``tabulated``, ``random_smooth``, ``trig``.  Matrices use the
    ``{"dim", "re", "im"}`` literal.
    """
    kind = cfg.get("kind")
    a = float(cfg.get("a", 0.0))
    b = float(cfg.get("b", 1.0))
    if kind == "constant":
        return constant(matrix_from_json(cfg["matrix"]), a, b)
    if kind == "polynomial":
        return polynomial([matrix_from_json(m) for m in cfg["coeffs"]], a, b)
    if kind == "diagonal_poly":
        polys = [np.polynomial.Polynomial(c) for c in cfg["coeffs"]]
        return diagonal(polys, a, b, name="diagonal_poly")
    if kind == "step":
        return step(cfg["breakpoints"], [matrix_from_json(m) for m in cfg["mats"]])
    if kind == "tabulated":
        return tabulated(cfg["times"], [matrix_from_json(m) for m in cfg["mats"]])
    if kind == "random_smooth":
        return random_smooth(int(cfg["dim"]), int(cfg.get("seed", 0)), a, b,
                             float(cfg.get("scale", 1.0)),
                             bool(cfg.get("dissipative", True)))
    if kind == "trig":
        A2 = cfg.get("A2")
        return trigonometric(matrix_from_json(cfg["A0"]), matrix_from_json(cfg["A1"]),
                             None if A2 is None else matrix_from_json(A2),
                             float(cfg.get("omega", 1.0)), a, b)
    raise DomainError(f"unknown family kind {kind!r}")
