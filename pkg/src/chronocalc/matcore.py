"""
Dense complex linear algebra and semigroup primitives.

Matrices are plain ``numpy`` arrays of dtype ``complex128``; the functions
here accept anything ``np.asarray`` understands and always return complex
arrays.  ``expm`` is batched over leading axes.
"""
from __future__ import annotations

import json

import numpy as np

from .errors import DomainError, RangeError, SingularityError

__all__ = [
    "as_matrix",
    "op_norm",
    "expm",
    "resolvent",
    "yosida",
    "is_dissipative",
    "hermitian_part",
    "sqrt_cutoff",
    "random_matrix",
    "random_dissipative",
    "random_hermitian",
    "commutator",
    "matrix_to_json",
    "matrix_from_json",
]

# Pade(13) coefficients and its backward-error threshold (Higham 2005)
_PADE13 = np.array([
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
    1187353796428800.0, 129060195264000.0, 10559470521600.0,
    670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
    960960.0, 16380.0, 182.0, 1.0,
])
_THETA13 = 5.371920351148152

# beyond 2**_MAX_SQUARINGS scaling the squaring phase is not trusted
_MAX_SQUARINGS = 60


def as_matrix(A, name="A") -> np.ndarray:
    """Coerce ``A`` to a finite square complex matrix (or a stack of them)."""
    M = np.asarray(A, dtype=np.complex128)
    if M.ndim == 0:
        M = M.reshape(1, 1)
    if M.ndim < 2 or M.shape[-1] != M.shape[-2]:
        raise DomainError(f"{name} must be square, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise DomainError(f"{name} has non-finite entries")
    return M


def op_norm(A) -> float:
    """Operator (spectral) norm: the largest singular value."""
    M = np.asarray(A, dtype=np.complex128)
    if M.size == 0:
        return 0.0
    return float(np.linalg.norm(M, 2))


def commutator(A, B) -> np.ndarray:
    return A @ B - B @ A


def expm(A) -> np.ndarray:
    """Matrix exponential by scaling and squaring with a degree-13 Pade approximant.

    Works on a single ``(d, d)`` matrix or on a stack ``(..., d, d)``; each
    matrix in a stack gets its own scaling exponent.

    Raises
    ------
    RangeError
        If the 1-norm needs more than ``2**60`` scaling, or the result overflows.
    """
    M = as_matrix(A)
    batch_shape = M.shape[:-2]
    d = M.shape[-1]
    X = M.reshape(-1, d, d)
    norms = np.abs(X).sum(axis=-2).max(axis=-1)
    with np.errstate(divide="ignore"):
        s = np.where(norms > _THETA13, np.ceil(np.log2(norms / _THETA13)), 0.0)
    s = s.astype(int)
    if s.size and s.max() > _MAX_SQUARINGS:
        raise RangeError(
            f"expm: 1-norm {norms.max():.3e} exceeds the scaling budget")
    X = X / (2.0 ** s)[:, None, None]

    b = _PADE13 / _PADE13[0]  # unit constant term keeps expm(0) exactly I
    ident = np.broadcast_to(np.eye(d, dtype=np.complex128), X.shape)
    X2 = X @ X
    X4 = X2 @ X2
    X6 = X4 @ X2
    U = X @ (X6 @ (b[13] * X6 + b[11] * X4 + b[9] * X2)
             + b[7] * X6 + b[5] * X4 + b[3] * X2 + b[1] * ident)
    V = (X6 @ (b[12] * X6 + b[10] * X4 + b[8] * X2)
         + b[6] * X6 + b[4] * X4 + b[2] * X2 + b[0] * ident)
    F = np.linalg.solve(V - U, V + U)

    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(int(s.max()) if s.size else 0):
            idx = s > k
            F[idx] = F[idx] @ F[idx]

    if not np.all(np.isfinite(F)):
        raise RangeError("expm: result overflowed")
    return F.reshape(batch_shape + (d, d))


def hermitian_part(A) -> np.ndarray:
    A = np.asarray(A, dtype=np.complex128)
    return 0.5 * (A + A.conj().T)


def is_dissipative(A, tol: float = 0.0) -> tuple[bool, float]:
    """Test Re<A x, x> <= 0 through the spectrum of the Hermitian part.

    Returns ``(flag, margin)`` where ``margin`` is the largest eigenvalue of
    ``(A + A*)/2`` and ``flag`` is ``margin <= tol``.
    """
    H = hermitian_part(as_matrix(A))
    margin = float(np.linalg.eigvalsh(H)[-1])
    return margin <= tol, margin


def resolvent(lam: float, A) -> np.ndarray:
    """``(lam I - A)^{-1}``.

    Raises
    ------
    SingularityError
        When ``lam I - A`` is numerically singular; carries the condition number.
    """
    A = as_matrix(A)
    d = A.shape[0]
    M = lam * np.eye(d) - A
    cond = float(np.linalg.cond(M))
    if not np.isfinite(cond) or cond > 1.0 / np.finfo(float).eps:
        raise SingularityError(
            f"lam*I - A is singular at lam={lam!r} (cond ~ {cond:.3e})",
            condition=cond)
    R = np.linalg.solve(M, np.eye(d, dtype=np.complex128))
    if lam > 0 and is_dissipative(A)[0]:
        # Hille-Yosida bound; a violation means the solve went wrong
        nR = op_norm(R)
        if nR > (1.0 + 1e-9) / lam:
            raise ArithmeticError(
                f"resolvent bound violated: |R| = {nR!r} > 1/lam = {1 / lam!r}")
    return R


def yosida(A, lam: float) -> np.ndarray:
    """Yosida approximator ``lam * A * R(lam, A)``."""
    A = as_matrix(A)
    return lam * (A @ resolvent(lam, A))


def sqrt_cutoff(V, rho: float) -> np.ndarray:
    """Bounded regularisation ``V (I + rho V^2)^{-1/2}`` of a Hermitian matrix.

    Each eigenvalue ``v`` is mapped to ``v / sqrt(1 + rho v^2)``, so the result
    has norm at most ``1/sqrt(rho)`` and tends to ``V`` as ``rho -> 0``.
    """
    V = as_matrix(V, "V")
    if rho < 0:
        raise DomainError(f"rho must be >= 0, got {rho!r}")
    scale = max(1.0, op_norm(V))
    if np.max(np.abs(V - V.conj().T)) > 1e-12 * scale:
        raise DomainError("sqrt_cutoff requires a Hermitian matrix")
    H = 0.5 * (V + V.conj().T)
    w, Q = np.linalg.eigh(H)
    mapped = w / np.sqrt(1.0 + rho * w * w)
    return (Q * mapped) @ Q.conj().T


def random_matrix(dim: int, rng, scale: float = 1.0) -> np.ndarray:
    """Complex Gaussian matrix with entries of variance ``scale**2 / dim``."""
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return scale * z / np.sqrt(2.0 * dim)


def random_hermitian(dim: int, rng, scale: float = 1.0) -> np.ndarray:
    M = random_matrix(dim, rng, scale)
    return 0.5 * (M + M.conj().T)


def random_dissipative(dim: int, rng, scale: float = 1.0, margin: float = 0.1):
    """Random matrix shifted so its Hermitian part is ``<= -margin``."""
    M = random_matrix(dim, rng, scale)
    top = np.linalg.eigvalsh(hermitian_part(M))[-1]
    return M - (top + margin) * np.eye(dim)


def matrix_to_json(A) -> dict:
    A = as_matrix(A)
    return {
        "dim": int(A.shape[0]),
        "re": [float(v) for v in A.real.ravel()],
        "im": [float(v) for v in A.imag.ravel()],
    }


def matrix_from_json(obj) -> np.ndarray:
    """Inverse of :func:`matrix_to_json`; also accepts a JSON string."""
    if isinstance(obj, str):
        obj = json.loads(obj)
    n = int(obj["dim"])
    re = np.asarray(obj["re"], dtype=float)
    im = np.asarray(obj.get("im", np.zeros(n * n)), dtype=float)
    if n < 1 or re.size != n * n or im.size != n * n:
        raise DomainError(f"matrix literal needs dim*dim = {n * n} entries")
    return as_matrix((re + 1j * im).reshape(n, n))
