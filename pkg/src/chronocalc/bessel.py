"""
Bessel, modified Bessel and Hankel functions of order 0, 1, 2 for real
positive arguments.

J and Y use the ascending series below ``|z| = 12`` and Hankel's asymptotic
expansion above it; order 2 follows from the three-term recurrence.  K uses
the representation ``K_v(z) = int_0^inf exp(-z cosh u) cosh(v u) du`` with
the trapezoid rule, which converges geometrically because the integrand is
analytic in a strip; the ascending series for K loses all accuracy to
cancellation once ``z`` reaches a few units.
"""
import math

import numpy as np

from .errors import RangeError

__all__ = ["j0", "j1", "j2", "y0", "y1", "y2", "k0", "k1", "k2",
           "hankel_h2_1", "hankel_h2_2", "bessel_jy"]

SWITCH = 12.0
EULER_GAMMA = 0.57721566490153286061
K_RANGE = (0.0, 700.0)
HANKEL_RANGE = (0.0, 1.0e4)


def _check(z, lo, hi, what):
    z = float(z)
    if not lo < z < hi:
        raise RangeError(f"{what}: argument {z!r} outside validated range ({lo}, {hi})")
    return z


def _digamma_int(m):
    # psi(m) for positive integer m
    return -EULER_GAMMA + math.fsum(1.0 / k for k in range(1, m))


def _j_series(n, z):
    q = -0.25 * z * z
    term = (0.5 * z) ** n / math.factorial(n)
    total = term
    k = 0
    while True:
        k += 1
        term *= q / (k * (k + n))
        total += term
        if abs(term) < 1e-17 * abs(total) and k > 2:
            return total
        if k > 200:
            return total


def _y_series(n, z):
    # Y_n = -(1/pi)(z/2)^-n sum_{k<n} (n-k-1)!/k! (z^2/4)^k + (2/pi) ln(z/2) J_n
    #       - (1/pi)(z/2)^n sum_k [psi(k+1) + psi(n+k+1)] (-z^2/4)^k / (k! (n+k)!)
    h = 0.5 * z
    first = 0.0
    for k in range(n):
        first += math.factorial(n - k - 1) / math.factorial(k) * (h * h) ** k
    first *= -(h ** -n) / math.pi
    q = -h * h
    term = 1.0 / math.factorial(n)
    psi_a, psi_b = _digamma_int(1), _digamma_int(n + 1)
    total = (psi_a + psi_b) * term
    k = 0
    while True:
        k += 1
        term *= q / (k * (k + n))
        psi_a += 1.0 / k
        psi_b += 1.0 / (n + k)
        contrib = (psi_a + psi_b) * term
        total += contrib
        if (abs(contrib) < 1e-17 * abs(total) and k > 2) or k > 200:
            break
    return first + (2.0 / math.pi) * math.log(h) * _j_series(n, z) - (h ** n) * total / math.pi


def _hankel_asymptotic(nu, z):
    """``(P, Q)`` of Hankel's expansion, summed until terms stop decreasing."""
    mu = 4.0 * nu * nu
    P, Q = 1.0, 0.0
    a = 1.0
    prev = math.inf
    k = 0
    while k < 60:
        k += 1
        a *= (mu - (2 * k - 1) ** 2) / (k * 8.0 * z)
        if abs(a) >= prev or a == 0.0:
            break
        prev = abs(a)
        if k % 2:
            Q += (-1) ** ((k - 1) // 2) * a
        else:
            P += (-1) ** (k // 2) * a
    return P, Q


def bessel_jy(n, z):
    """``(J_n(z), Y_n(z))`` for ``n`` in 0, 1."""
    if z < SWITCH:
        return _j_series(n, z), _y_series(n, z)
    P, Q = _hankel_asymptotic(n, z)
    chi = z - (0.5 * n + 0.25) * math.pi
    amp = math.sqrt(2.0 / (math.pi * z))
    c, s = math.cos(chi), math.sin(chi)
    return amp * (P * c - Q * s), amp * (P * s + Q * c)


def _jy2(z):
    J0, Y0 = bessel_jy(0, z)
    J1, Y1 = bessel_jy(1, z)
    Y2 = 2.0 / z * Y1 - Y0
    J2 = _j_series(2, z) if z < SWITCH else 2.0 / z * J1 - J0
    return J2, Y2


def j0(z):
    return bessel_jy(0, _check(z, *HANKEL_RANGE, "j0"))[0]


def j1(z):
    return bessel_jy(1, _check(z, *HANKEL_RANGE, "j1"))[0]


def j2(z):
    return _jy2(_check(z, *HANKEL_RANGE, "j2"))[0]


def y0(z):
    return bessel_jy(0, _check(z, *HANKEL_RANGE, "y0"))[1]


def y1(z):
    return bessel_jy(1, _check(z, *HANKEL_RANGE, "y1"))[1]


def y2(z):
    return _jy2(_check(z, *HANKEL_RANGE, "y2"))[1]


def hankel_h2_1(z) -> complex:
    """``H_2^(1)(z) = J_2(z) + i Y_2(z)``."""
    J, Y = _jy2(_check(z, *HANKEL_RANGE, "hankel_h2_1"))
    return complex(J, Y)


def hankel_h2_2(z) -> complex:
    """``H_2^(2)(z) = J_2(z) - i Y_2(z)``."""
    J, Y = _jy2(_check(z, *HANKEL_RANGE, "hankel_h2_2"))
    return complex(J, -Y)


def _k_integral(nu, z):
    # integrand ~ exp(-z u^2 / 2) near 0, so the step tracks 1/sqrt(z)
    h = min(0.1, 0.5 / math.sqrt(z))
    umax = math.acosh(max(1.0, 760.0 / z)) + 1.0
    u = np.arange(0.0, umax + h, h)
    g = np.exp(-z * (np.cosh(u) - 1.0))
    f = g * np.cosh(nu * u)
    return h * (math.fsum(f) - 0.5 * f[0]) * math.exp(-z)


def k0(z):
    return _k_integral(0, _check(z, *K_RANGE, "k0"))


def k1(z):
    return _k_integral(1, _check(z, *K_RANGE, "k1"))


def k2(z):
    """``K_2(z) = K_0(z) + (2/z) K_1(z)``."""
    z = _check(z, *K_RANGE, "k2")
    return _k_integral(0, z) + 2.0 / z * _k_integral(1, z)
