"""
Finite model of the time-ordered operator algebra.

An expression is a finite sum of complex-weighted products of time-tagged
matrices.  Factors at distinct times commute, so a term is stored as its
factors sorted by ascending time with at most one factor per time; factors
that land on the same time are multiplied immediately, left operand first.
Disentanglement turns a term back into an ordinary product, latest time on
the left.

Times are compared by exact float equality.  Quantise tags beforehand if two
times should be treated as the same slot.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .matcore import as_matrix, expm, matrix_from_json, matrix_to_json

__all__ = [
    "TimeFactor",
    "TimeOrderedTerm",
    "TimeOrderedExpr",
    "lift",
    "expr_mul",
    "exchange",
    "disentangle",
    "expansional_expand",
]


def _frozen(M):
    M = np.array(M, dtype=np.complex128)
    M.setflags(write=False)
    return M


@dataclass(frozen=True)
class TimeFactor:
    time: float
    matrix: np.ndarray


@dataclass(frozen=True)
class TimeOrderedTerm:
    coeff: complex
    factors: tuple  # of TimeFactor, ascending in time, unique times

    @property
    def times(self):
        return tuple(f.time for f in self.factors)

    def key(self):
        return (self.times, tuple(f.matrix.tobytes() for f in self.factors))


def _canonical_factors(pairs, dim):
    """Sort ``(time, matrix)`` pairs, merging equal times in the given order."""
    slots: dict = {}
    order = []
    for t, M in pairs:
        if t in slots:
            slots[t] = slots[t] @ M
        else:
            slots[t] = M
            order.append(t)
    eye = np.eye(dim, dtype=np.complex128)
    out = []
    for t in sorted(order):
        M = slots[t]
        if np.array_equal(M, eye):
            continue  # identity slots carry no information
        out.append(TimeFactor(float(t), _frozen(M)))
    return tuple(out)


class TimeOrderedExpr:
    """Immutable finite sum of time-ordered terms acting on ``C^dim``."""

    __slots__ = ("dim", "terms")

    def __init__(self, dim: int, terms=()):
        object.__setattr__(self, "dim", int(dim))
        merged: dict = {}
        for term in terms:
            for f in term.factors:
                if f.matrix.shape != (dim, dim):
                    raise DomainError(
                        f"factor at t={f.time} has shape {f.matrix.shape}, expected {(dim, dim)}")
            k = term.key()
            if k in merged:
                c, fac = merged[k]
                merged[k] = (c + term.coeff, fac)
            else:
                merged[k] = (complex(term.coeff), term.factors)
        canon = tuple(TimeOrderedTerm(c, fac)
                      for k, (c, fac) in sorted(merged.items(), key=lambda kv: kv[0])
                      if c != 0)
        object.__setattr__(self, "terms", canon)

    def __setattr__(self, name, value):
        raise AttributeError("TimeOrderedExpr is immutable")

    @classmethod
    def from_pairs(cls, dim, coeff, pairs):
        """Single term from ``(time, matrix)`` pairs given in multiplication order."""
        return cls(dim, [TimeOrderedTerm(complex(coeff), _canonical_factors(
            [(float(t), as_matrix(M)) for t, M in pairs], dim))])

    @classmethod
    def scalar(cls, dim, c=1.0):
        return cls(dim, [TimeOrderedTerm(complex(c), ())])

    # -- algebra -------------------------------------------------------------

    def __mul__(self, other):
        if isinstance(other, TimeOrderedExpr):
            return expr_mul(self, other)
        c = complex(other)
        return TimeOrderedExpr(self.dim, [TimeOrderedTerm(c * t.coeff, t.factors)
                                          for t in self.terms])

    __rmul__ = __mul__

    def __add__(self, other):
        if other.dim != self.dim:
            raise DomainError("dimension mismatch")
        return TimeOrderedExpr(self.dim, self.terms + other.terms)

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-other)

    def __eq__(self, other):
        if not isinstance(other, TimeOrderedExpr):
            return NotImplemented
        if self.dim != other.dim or len(self.terms) != len(other.terms):
            return False
        return all(x.coeff == y.coeff and x.key() == y.key()
                   for x, y in zip(self.terms, other.terms))

    def __hash__(self):
        return hash((self.dim, tuple((t.coeff, t.key()) for t in self.terms)))

    def allclose(self, other, atol=1e-12) -> bool:
        """Same term structure, coefficients and matrices equal to ``atol``."""
        if self.dim != other.dim or len(self.terms) != len(other.terms):
            return False
        for x, y in zip(self.terms, other.terms):
            if x.times != y.times or abs(x.coeff - y.coeff) > atol:
                return False
            for f, g in zip(x.factors, y.factors):
                if np.max(np.abs(f.matrix - g.matrix)) > atol:
                    return False
        return True

    def times(self):
        return sorted({t for term in self.terms for t in term.times})

    def __repr__(self):
        return f"TimeOrderedExpr(dim={self.dim}, terms={len(self.terms)})"

    # -- serialisation -------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "terms": [
                {"coeff": [term.coeff.real, term.coeff.imag],
                 "factors": [{"t": f.time, "matrix": matrix_to_json(f.matrix)}
                             for f in term.factors]}
                for term in self.terms
            ],
        }

    @classmethod
    def from_json(cls, obj):
        if isinstance(obj, str):
            obj = json.loads(obj)
        dim = int(obj["dim"])
        terms = []
        for t in obj["terms"]:
            re, im = t["coeff"]
            pairs = [(float(f["t"]), matrix_from_json(f["matrix"])) for f in t["factors"]]
            terms.append(TimeOrderedTerm(complex(re, im), _canonical_factors(pairs, dim)))
        return cls(dim, terms)


def lift(t: float, A, a: float = 0.0, b: float = 1.0) -> TimeOrderedExpr:
    """Place ``A`` in the time slot ``t`` of ``[a, b]``."""
    if not a <= t <= b:
        raise DomainError(f"time {t!r} outside [{a}, {b}]")
    A = as_matrix(A)
    return TimeOrderedExpr.from_pairs(A.shape[0], 1.0, [(t, A)])


def expr_mul(X: TimeOrderedExpr, Y: TimeOrderedExpr) -> TimeOrderedExpr:
    """Product ``X Y``; equal-time factors multiply as (X factor)(Y factor)."""
    if X.dim != Y.dim:
        raise DomainError(f"dimension mismatch: {X.dim} vs {Y.dim}")
    terms = []
    for x in X.terms:
        for y in Y.terms:
            pairs = [(f.time, f.matrix) for f in x.factors] + \
                    [(f.time, f.matrix) for f in y.factors]
            terms.append(TimeOrderedTerm(x.coeff * y.coeff,
                                         _canonical_factors(pairs, X.dim)))
    return TimeOrderedExpr(X.dim, terms)


def exchange(X: TimeOrderedExpr, t: float, t2: float) -> TimeOrderedExpr:
    """Swap the time tags ``t`` and ``t2`` on every factor of ``X``."""
    def swap(s):
        if s == t:
            return t2
        if s == t2:
            return t
        return s

    terms = [TimeOrderedTerm(term.coeff, _canonical_factors(
        [(swap(f.time), f.matrix) for f in term.factors], X.dim)) for term in X.terms]
    return TimeOrderedExpr(X.dim, terms)


def disentangle(X: TimeOrderedExpr) -> np.ndarray:
    """Ordinary operator for ``X``: each term's factors multiplied latest-first."""
    out = np.zeros((X.dim, X.dim), dtype=np.complex128)
    for term in X.terms:
        P = np.eye(X.dim, dtype=np.complex128)
        for f in reversed(term.factors):
            P = P @ f.matrix
        out += term.coeff * P
    return out


def _gl01(q):
    x, w = np.polynomial.legendre.leggauss(q)
    return 0.5 * (x + 1.0), 0.5 * w


def _expansional_term(A, B, k, q):
    """``int_{0<s_k<...<s_1<1} e^{(1-s_1)A} B e^{(s_1-s_2)A} ... B e^{s_k A} ds``."""
    x, w = _gl01(q)
    d = A.shape[0]

    def H(j, s):
        # H_j(s) = int_0^s e^{(s-r)A} B H_{j-1}(r) dr,  H_0(s) = e^{sA}
        if j == 0:
            return expm(s[:, None, None] * A)
        r = s[:, None] * x[None, :]
        inner = H(j - 1, r.ravel()).reshape(len(s), q, d, d)
        E = expm((s[:, None] - r)[..., None, None] * A)
        integrand = E @ B @ inner
        return s[:, None, None] * np.einsum("j,mjab->mab", w, integrand)

    return H(k, np.array([1.0]))[0]


def expansional_expand(A, B, order: int, quad_nodes: int = 32, return_error: bool = False):
    """Truncated expansion of ``e^{A+B}`` in powers of ``B``.

    Sums the iterated integrals of ``e^{(1-s_1)A} B e^{(s_1-s_2)A} B ...
    e^{s_k A}`` over the simplex ``0 < s_k < ... < s_1 < 1`` for ``k <= order``
    with tensor Gauss-Legendre quadrature.  With ``return_error`` the result
    comes with the difference against a rule with 3/4 of the nodes.
    """
    A = as_matrix(A)
    B = as_matrix(B, "B")
    if order not in (0, 1, 2, 3):
        raise DomainError("order must be 0, 1, 2 or 3")
    if quad_nodes < 8:
        raise DomainError("quad_nodes must be >= 8")
    total = expm(A)
    coarse = total.copy()
    q2 = max(8, (3 * quad_nodes) // 4)
    for k in range(1, order + 1):
        total = total + _expansional_term(A, B, k, quad_nodes)
        if return_error:
            coarse = coarse + _expansional_term(A, B, k, q2)
    if return_error:
        return total, float(np.linalg.norm(total - coarse, 2))
    return total
