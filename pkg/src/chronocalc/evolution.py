"""
Time-ordered evolution operators for matrix generator families.

Conventions: products are written latest time leftmost, so the propagator on
``[a, t]`` is ``E_n ... E_2 E_1`` with ``E_j`` the step at the ``j``-th
subinterval.  ``propagate`` is the midpoint product integral; a fourth-order
Magnus sweep (``scheme="magnus4"``) is available where many intermediate
propagators are needed at once.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import BudgetError, ConvergenceError, DomainError
from .families import GeneratorFamily
from .gauge import hk_integrate
from .matcore import as_matrix, expm, op_norm

__all__ = [
    "q_integral",
    "ordered_product",
    "propagate",
    "propagator_table",
    "Propagator",
    "ode_defect",
    "dyson_term",
    "DysonResult",
    "dyson_expand",
    "poincare_quotient",
    "trotter",
    "generalized_trotter_kato",
    "gtk_time_prime",
    "interaction_rep",
    "InteractionPicture",
    "semilinear_mild",
    "relative_bound_beta",
]

DEFAULT_NODES = 24
SIMPLEX_BUDGET = 2_000_000


def _gl01(q):
    x, w = np.polynomial.legendre.leggauss(q)
    return 0.5 * (x + 1.0), 0.5 * w


def q_integral(F: GeneratorFamily, t: float, tol: float = 1e-10) -> np.ndarray:
    """``Q[t, a] = int_a^t A(s) ds`` by gauge integration."""
    if not F.a <= t <= F.b:
        raise DomainError(f"t={t!r} outside [{F.a}, {F.b}]")
    if t == F.a:
        return np.zeros((F.dim, F.dim), dtype=np.complex128)
    return hk_integrate(F, F.a, t, tol).value


def ordered_product(mats) -> np.ndarray:
    """``mats[0] @ mats[1] @ ... @ mats[-1]`` by a fixed pairwise reduction."""
    M = np.asarray(mats, dtype=np.complex128)
    if len(M) == 0:
        raise DomainError("empty product")
    d = M.shape[-1]
    while len(M) > 1:
        if len(M) % 2:
            M = np.concatenate([M, np.eye(d, dtype=np.complex128)[None]])
        M = M[0::2] @ M[1::2]
    return M[0]


def _midpoint_product(F, start, t, n):
    dt = (t - start) / n
    tau = start + (np.arange(1, n + 1) - 0.5) * dt
    E = expm(dt * F(tau))
    return ordered_product(E[::-1])


def propagate(F: GeneratorFamily, t: float, n: int, richardson: bool = False,
              start: float | None = None, scheme: str = "midpoint") -> np.ndarray:
    """Propagator ``U[t, start]`` of ``x' = A(t) x``.

    The midpoint scheme forms ``prod_{j=n..1} expm(dt A(tau_j))`` with
    ``tau_j = start + (j - 1/2) dt``.  It is symmetric, so its error expands
    in even powers of ``dt`` and ``richardson=True`` returns
    ``(4 U_{2n} - U_n)/3``, which is fourth order.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    start = F.a if start is None else start
    if t == start:
        return np.eye(F.dim, dtype=np.complex128)
    if scheme == "magnus4":
        return propagator_table(F, [t], n / abs(t - start), start=start)[0]
    if scheme != "midpoint":
        raise DomainError(f"unknown scheme {scheme!r}")
    U = _midpoint_product(F, start, t, n)
    if richardson:
        U2 = _midpoint_product(F, start, t, 2 * n)
        U = (4.0 * U2 - U) / 3.0
    return U


_M4_C = (0.5 - math.sqrt(3) / 6, 0.5 + math.sqrt(3) / 6)


def propagator_table(F: GeneratorFamily, times, steps_per_unit: float = 512,
                     start: float | None = None) -> np.ndarray:
    """``U[s, start]`` at every ``s`` in ``times`` from one Magnus-4 sweep.

    Steps never straddle a requested time; each gap is cut into
    ``ceil(gap * steps_per_unit)`` equal steps.  ``times`` need not be
    sorted but must be ``>= start``.
    """
    start = F.a if start is None else start
    ts = np.asarray(times, dtype=float)
    order = np.argsort(ts, kind="stable")
    uniq, inverse = np.unique(ts[order], return_inverse=True)
    if uniq.size and uniq[0] < start:
        raise DomainError("propagator_table times must be >= start")
    knots = [start]
    marks = []
    for s in uniq:
        gap = s - knots[-1]
        m = max(1, int(math.ceil(gap * steps_per_unit - 1e-9))) if gap > 0 else 0
        if m:
            knots.extend(knots[-1] + gap * np.arange(1, m + 1) / m)
            knots[-1] = s
        marks.append(len(knots) - 1)
    knots = np.asarray(knots)
    h = np.diff(knots)
    d = F.dim
    if h.size:
        A1 = F(knots[:-1] + _M4_C[0] * h)
        A2 = F(knots[:-1] + _M4_C[1] * h)
        hh = h[:, None, None]
        omega = 0.5 * hh * (A1 + A2) + (math.sqrt(3) / 12.0) * hh ** 2 * (A2 @ A1 - A1 @ A2)
        E = expm(omega)
    cum = np.empty((knots.size, d, d), dtype=np.complex128)
    cum[0] = np.eye(d)
    for k in range(h.size):
        cum[k + 1] = E[k] @ cum[k]
    table = cum[np.asarray(marks, dtype=int)]
    out = np.empty((ts.size, d, d), dtype=np.complex128)
    out[order] = table[inverse]
    return out


@dataclass(frozen=True)
class Propagator:
    """A propagator recipe: family, method and resolution.

    ``expm_of_Q`` exponentiates the integrated generator and is only legal
    when the family commutes with itself at sampled time pairs; otherwise the
    plain exponential does not solve the time-dependent equation.
    """

    family: GeneratorFamily
    method: str = "product_integral"
    resolution: int = 256

    def __post_init__(self):
        if self.method not in ("product_integral", "expm_of_Q", "dyson"):
            raise DomainError(f"unknown propagator method {self.method!r}")
        if self.method == "expm_of_Q" and not self.family.is_commuting():
            raise DomainError("expm_of_Q needs a commuting family; use product_integral")

    def __call__(self, t: float) -> np.ndarray:
        if self.method == "expm_of_Q":
            return expm(q_integral(self.family, t))
        if self.method == "dyson":
            return dyson_expand(self.family, t, 3, 1.0).total
        return propagate(self.family, t, self.resolution, richardson=True)


def ode_defect(F: GeneratorFamily, t: float, n: int, h: float | None = None) -> float:
    """Central-difference residual ``|U' - A(t) U|`` of the propagator at ``t``."""
    h = (F.b - F.a) / 2 ** 12 if h is None else h
    if not F.a + h <= t <= F.b - h:
        raise DomainError("t must be interior to the family interval")
    Up = propagate(F, t + h, n)
    Um = propagate(F, t - h, n)
    U = propagate(F, t, n)
    return op_norm((Up - Um) / (2 * h) - F(t) @ U)


# -- Dyson expansion -----------------------------------------------------------

def _simplex(G, a, t, k, q):
    """``int_{a<s_k<...<s_1<t} G(s_1) ... G(s_k) ds`` by nested Gauss-Legendre."""
    if q ** k > SIMPLEX_BUDGET:
        raise BudgetError(f"simplex rule with {q}^{k} nodes exceeds budget {SIMPLEX_BUDGET}")
    x, w = _gl01(q)

    def D(j, s):
        # D_j(s) = int_a^s G(r) D_{j-1}(r) dr
        r = a + (s[:, None] - a) * x[None, :]
        g = G(r.ravel())
        d = g.shape[-1]
        g = g.reshape(len(s), q, d, d)
        if j > 1:
            g = g @ D(j - 1, r.ravel()).reshape(len(s), q, d, d)
        return (s - a)[:, None, None] * np.einsum("j,mjab->mab", w, g)

    return D(k, np.array([float(t)]))[0]


def dyson_term(F: GeneratorFamily, t: float, k: int, quad_nodes: int = DEFAULT_NODES):
    """Simplex integral of ``A(s_1) ... A(s_k)`` over ``a < s_k < ... < s_1 < t``."""
    if not 1 <= k <= 4:
        raise DomainError("k must be in 1..4")
    if t == F.a:
        return np.zeros((F.dim, F.dim), dtype=np.complex128)
    return _simplex(F, F.a, t, k, quad_nodes)


@dataclass
class DysonResult:
    partial_sum: np.ndarray
    remainder: np.ndarray
    order: int
    w: float
    quad_error: float

    @property
    def total(self):
        return self.partial_sum + self.remainder


def _cheb_nodes(a, b, m):
    j = np.arange(m)
    return 0.5 * (a + b) + 0.5 * (b - a) * np.cos(np.pi * j / (m - 1))


def _cheb_interp(nodes, values, x):
    """Barycentric interpolation through Chebyshev points of the second kind."""
    m = nodes.size
    bw = (-1.0) ** np.arange(m)
    bw[0] *= 0.5
    bw[-1] *= 0.5
    diff = x[:, None] - nodes[None, :]
    exact = diff == 0
    diff[exact] = 1.0
    c = bw[None, :] / diff
    rows = exact.any(axis=1)
    c[rows] = exact[rows].astype(float)
    c /= c.sum(axis=1, keepdims=True)
    return np.einsum("pm,mab->pab", c, values)


def _remainder_integrand(F, t, n, xi, q, steps, cheb):
    """``U^xi[t,a] * simplex_{n+1}`` of the interaction-picture generator."""
    a = F.a
    Fxi = F.scaled(xi)
    nodes = _cheb_nodes(a, t, cheb)
    U = propagator_table(Fxi, np.append(nodes, t), steps)
    Un, Ut = U[:-1], U[-1]
    Atil = np.linalg.solve(Un, F(nodes) @ Un)

    def G(s):
        return _cheb_interp(nodes, Atil, s)

    return Ut @ _simplex(G, a, t, n + 1, q)


def _remainder(F, t, n, w, q, steps, cheb):
    x, wt = _gl01(q)
    xis = w * x
    acc = np.zeros((F.dim, F.dim), dtype=np.complex128)
    for xi, c in zip(xis, wt):
        acc = acc + (w * c * (w - xi) ** n) * _remainder_integrand(F, t, n, xi, q, steps, cheb)
    return (n + 1) * acc


def dyson_expand(F: GeneratorFamily, t: float, n: int, w: float,
                 quad_nodes: int = DEFAULT_NODES, steps_per_unit: float = 512,
                 cheb_nodes: int = 33) -> DysonResult:
    """Dyson expansion of ``U^w[t, a]`` (generator ``w A``) to order ``n`` plus exact remainder.

    ``partial_sum = I + sum_{k<=n} w^k S_k`` with ``S_k`` the simplex integrals
    of :func:`dyson_term`.  The remainder is the integral form of Taylor's
    theorem in ``w``::

        (n+1) int_0^w (w-xi)^n dxi  int_{simplex_{n+1}}
            U^xi[t,s_1] A(s_1) U^xi[s_1,s_2] A(s_2) ... A(s_{n+1}) U^xi[s_{n+1},a]

    which equals ``U^w - partial_sum`` exactly.  Intermediate propagators come
    from a Magnus-4 sweep and are folded into the interaction-picture
    generator, interpolated on Chebyshev points.  ``quad_error`` combines an
    embedded quadrature estimate with a propagator-resolution estimate.
    """
    if not 0 <= n <= 3:
        raise DomainError("n must be in 0..3")
    d = F.dim
    partial = np.eye(d, dtype=np.complex128)
    partial_c = partial.copy()
    q2 = max(8, (2 * quad_nodes) // 3)
    for k in range(1, n + 1):
        partial = partial + w ** k * dyson_term(F, t, k, quad_nodes)
        partial_c = partial_c + w ** k * dyson_term(F, t, k, q2)
    rem = _remainder(F, t, n, w, quad_nodes, steps_per_unit, cheb_nodes)
    rem_c = _remainder(F, t, n, w, q2, steps_per_unit, cheb_nodes)
    Fw = F.scaled(w)
    Uh = propagator_table(Fw, [t], steps_per_unit)[0]
    U2h = propagator_table(Fw, [t], steps_per_unit / 2)[0]
    prop_err = op_norm(Uh - U2h) / 15.0
    est = op_norm(partial - partial_c) + op_norm(rem - rem_c) + 4.0 * prop_err
    return DysonResult(partial, rem, n, w, est)


def poincare_quotient(Q, x, n: int, w: float) -> np.ndarray:
    """``w^{-(n+1)} (exp(wQ) - sum_{k<=n} (wQ)^k / k!) x``."""
    Q = as_matrix(Q, "Q")
    x = np.asarray(x, dtype=np.complex128)
    U = expm(w * Q)
    partial = np.zeros_like(Q)
    term = np.eye(Q.shape[0], dtype=np.complex128)
    for k in range(n + 1):
        partial = partial + term
        term = term @ (w * Q) / (k + 1)
    return ((U - partial) @ x) / w ** (n + 1)


# -- Trotter products ---------------------------------------------------------

def trotter(A, B, t: float, n: int) -> np.ndarray:
    """``(expm(tA/n) expm(tB/n))^n``."""
    if n < 1:
        raise DomainError("n must be >= 1")
    A = as_matrix(A)
    B = as_matrix(B, "B")
    S = expm(t * A / n) @ expm(t * B / n)
    if n & (n - 1) == 0:
        for _ in range(n.bit_length() - 1):
            S = S @ S
        return S
    P = S.copy()
    for _ in range(n - 1):
        P = P @ S
    return P


def gtk_time_prime(t: float, n: int, a: float = 0.0) -> float:
    """Shifted final time ``t (1 - 10^-10 e^{-(n+1)^2})`` for the B slots."""
    return a + (t - a) * (1.0 - 1e-10 * math.exp(-float(n + 1) ** 2))


def generalized_trotter_kato(FA: GeneratorFamily, FB: GeneratorFamily, t: float, n: int,
                             schedule: str = "shifted") -> np.ndarray:
    """``prod_{j=n..1} expm((t/n) A(jt/n)) expm((t/n) B(jt'_n/n))``, latest leftmost.

    ``schedule="shifted"`` uses ``t'_n`` from :func:`gtk_time_prime`;
    ``"plain"`` uses ``t'_n = t``.  Times are measured from the family start.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    a = FA.a
    if schedule == "shifted":
        tp = gtk_time_prime(t, n, a)
    elif schedule == "plain":
        tp = t
    else:
        raise DomainError(f"unknown schedule {schedule!r}")
    dt = (t - a) / n
    j = np.arange(1, n + 1)
    EA = expm(dt * FA(a + j * (t - a) / n))
    EB = expm(dt * FB(a + j * (tp - a) / n))
    return ordered_product((EA @ EB)[::-1])


# -- interaction representation -----------------------------------------------

@dataclass
class InteractionPicture:
    """Interaction-picture objects for ``H = H0(t) + H1(t)``.

    ``A_I(s) = U0(a,s) H1(s) U0(s,a)`` and ``psi(phi)`` solves
    ``i hbar psi' = A_I psi`` from ``psi(a) = phi`` up to time ``t``.
    """

    A_I: Callable
    psi: Callable
    U0: Callable
    full: Callable
    consistency: Callable


def interaction_rep(F0: GeneratorFamily, F1: GeneratorFamily, t: float, n: int,
                    hbar: float = 1.0) -> InteractionPicture:
    """Interaction representation for Hermitian Hamiltonian families ``F0``, ``F1``.

    Generators are ``-(i/hbar) F``.  ``U0`` is the free propagator, evaluated
    by a Magnus-4 sweep of ``n`` steps per unit time; ``psi`` is the midpoint
    product integral of ``-(i/hbar) A_I`` with ``n`` steps.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    probe = F0(np.linspace(F0.a, F0.b, 9))
    scale = max(1.0, float(np.max(np.abs(probe))))
    if np.max(np.abs(probe - np.conj(np.swapaxes(probe, -1, -2)))) > 1e-12 * scale:
        raise DomainError("F0 must be Hermitian so that -(i/hbar) F0 generates a unitary group")
    a = F0.a
    G0 = F0.scaled(-1j / hbar)
    steps = max(n / max(t - a, 1e-300), 64)

    def U0(s):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        return propagator_table(G0, s, steps)

    def ai_func(ts):
        U = U0(ts)
        return np.linalg.solve(U, F1(ts) @ U)

    AI = GeneratorFamily(a, F0.b, ai_func, F0.dim, "smooth", (), "A_I")
    GI = AI.scaled(-1j / hbar)

    def psi(phi):
        phi = np.asarray(phi, dtype=np.complex128)
        return propagate(GI, t, n) @ phi

    def full(phi):
        G = (F0 + F1).scaled(-1j / hbar)
        return propagate(G, t, n) @ np.asarray(phi, dtype=np.complex128)

    def consistency(phi):
        """``|psi(t) - U0(a,t) U(t,a) phi|``."""
        lhs = psi(phi)
        rhs = np.linalg.solve(U0(t)[0], full(phi))
        return float(np.linalg.norm(lhs - rhs))

    return InteractionPicture(AI, psi, lambda s: U0(s), full, consistency)


# -- semilinear problems -----------------------------------------------------

def semilinear_mild(F: GeneratorFamily, f, u_a, t: float, n: int,
                    max_picard: int = 100, tol: float = 1e-12, return_path: bool = False):
    """Mild solution ``u(t) = U(t,a) u_a + int_a^t U(t,s) f(s, u(s)) ds`` by Picard iteration.

    The step propagators are midpoint exponentials on a uniform grid of ``n``
    steps and the Duhamel integral uses the trapezoid rule on the same grid,
    accumulated recursively so each sweep costs ``O(n)``.

    Raises
    ------
    ConvergenceError
        If successive iterates still differ by more than ``tol`` after
        ``max_picard`` sweeps; ``history`` holds the sup-norm differences.
    """
    if n < 16:
        raise DomainError("n must be >= 16")
    a = F.a
    h = (t - a) / n
    grid = a + h * np.arange(n + 1)
    P = expm(h * F(grid[:-1] + 0.5 * h))
    u0 = np.asarray(u_a, dtype=np.complex128)
    free = np.empty((n + 1, u0.size), dtype=np.complex128)
    free[0] = u0
    for k in range(n):
        free[k + 1] = P[k] @ free[k]
    u = free.copy()
    history = []
    for _ in range(max_picard):
        g = np.array([np.asarray(f(grid[k], u[k]), dtype=np.complex128)
                      for k in range(n + 1)])
        new = np.empty_like(u)
        new[0] = u0
        acc = np.zeros(u0.size, dtype=np.complex128)
        for k in range(n):
            acc = P[k] @ (acc + 0.5 * h * g[k]) + 0.5 * h * g[k + 1]
            new[k + 1] = free[k + 1] + acc
        diff = float(np.max(np.abs(new - u)))
        history.append(diff)
        u = new
        if diff < tol:
            return (u[-1], u) if return_path else u[-1]
    raise ConvergenceError(
        f"semilinear_mild: Picard iteration did not contract below {tol}", history)


def relative_bound_beta(Q1, Q0, alpha: float) -> float:
    """Smallest ``beta`` with ``|Q1 x| <= alpha |Q0 x| + beta |x|`` for all ``x``.

    Finite-dimensional stand-in for the relative-bound hypothesis of the
    analytic perturbation results; maximises over the unit sphere with a
    dense sample plus singular vectors of ``Q1``.
    """
    Q1 = as_matrix(Q1, "Q1")
    Q0 = as_matrix(Q0, "Q0")
    d = Q1.shape[0]
    rng = np.random.default_rng(0)
    X = rng.standard_normal((4096, d)) + 1j * rng.standard_normal((4096, d))
    _, _, Vh = np.linalg.svd(Q1)
    X = np.concatenate([X, Vh.conj()])
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    vals = np.linalg.norm(X @ Q1.T, axis=1) - alpha * np.linalg.norm(X @ Q0.T, axis=1)
    return float(max(vals.max(), 0.0))
