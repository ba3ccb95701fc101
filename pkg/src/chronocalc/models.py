"""
Small discretised models used by the Feynman-Kac and kernel experiments.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .families import constant, diagonal

__all__ = ["grid_points", "laplacian_1d", "DeskModel", "heat_model", "quartic_model"]


def grid_points(n: int, L: float) -> np.ndarray:
    """Interior nodes of a uniform grid on ``[-L, L]`` with Dirichlet ends."""
    if n < 2:
        raise DomainError("need at least two interior points")
    return np.linspace(-L, L, n + 2)[1:-1]


def laplacian_1d(n: int, L: float) -> np.ndarray:
    """Three-point Dirichlet Laplacian on the interior nodes of ``[-L, L]``."""
    h = 2.0 * L / (n + 1)
    D = np.diag(np.full(n, -2.0)) + np.diag(np.ones(n - 1), 1) + np.diag(np.ones(n - 1), -1)
    return D / (h * h)


@dataclass(frozen=True)
class DeskModel:
    """``F0 + coupling * V`` split into its unperturbed and potential parts."""

    x: np.ndarray
    F0: object
    V: object
    coupling: complex

    def full_generator(self) -> np.ndarray:
        return self.F0(0.0) + self.coupling * self.V(0.0)


def heat_model(n: int = 64, L: float = 1.0, kappa: float = 0.01, potential=None,
               t_end: float = 1.0) -> DeskModel:
    """``kappa * Laplacian + V`` with a bounded diagonal potential (default ``cos(pi x)``)."""
    x = grid_points(n, L)
    pot = potential if potential is not None else (lambda s: np.cos(np.pi * s))
    vals = np.asarray(pot(x), dtype=float)
    F0 = constant(kappa * laplacian_1d(n, L), 0.0, t_end, name="heat")
    V = constant(np.diag(vals), 0.0, t_end, name="potential")
    return DeskModel(x, F0, V, 1.0)


def quartic_model(n: int = 64, L: float = 2.0, hbar: float = 1.0, omega: float = 1.0,
                  lam_c: float = 0.1, t_end: float = 1.0) -> DeskModel:
    """Anharmonic oscillator ``H = -(hbar^2/2) Laplacian + Omega^2 x^2 / 2 + lam_c x^4``.

    The evolution generator is ``-(i/hbar) H``; the potential enters with
    coupling ``-i/hbar`` so that it can be regularised as a Hermitian matrix.
    """
    x = grid_points(n, L)
    K = -0.5 * hbar * hbar * laplacian_1d(n, L)
    F0 = constant(-1j / hbar * K, 0.0, t_end, name="kinetic")
    V = diagonal([lambda s, v=v: np.full(np.shape(s), v)
                  for v in 0.5 * omega ** 2 * x ** 2 + lam_c * x ** 4], 0.0, t_end,
                 name="quartic")
    return DeskModel(x, F0, V, -1j / hbar)
