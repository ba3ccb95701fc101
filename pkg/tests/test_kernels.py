import csv
import math

import numpy as np
import pytest

from chronocalc.errors import AccuracyWarning, DomainError, SingularityError
from chronocalc.kernels import (DIRAC_BETA, Grid1D, check_symbol, compose, heat_kernel,
                                mehler_kernel, propagate_on_grid, relativistic_branch,
                                schrodinger_free_kernel, sqrt_relativistic_kernel,
                                symbol_to_kernel, trapezoid_weights, write_kernel_csv)


def test_grid():
    g = Grid1D(3.0, 7)
    assert g.h * (g.count - 1) == pytest.approx(2 * g.L)
    assert g.points[0] == -3.0 and g.points[-1] == 3.0
    w = trapezoid_weights(g)
    assert w.sum() == pytest.approx(6.0)


def test_heat_kernel_normalization_and_center():
    K = heat_kernel(1.0)
    g = Grid1D(30.0, 3001)
    mass = trapezoid_weights(g) @ K(g.points, 1.0, 0.0, 0.0)
    assert abs(mass - 1) <= 1e-8
    kappa, dt = 0.7, 0.2
    v = heat_kernel(kappa)(0.3, dt, 0.3, 0.0)
    assert v == pytest.approx(1 / math.sqrt(4 * math.pi * kappa * dt), rel=1e-15)
    with pytest.raises(DomainError):
        K(0.0, 1.0, 0.0, 1.0)


def test_heat_mass_conservation():
    g = Grid1D(20.0, 801)
    x = g.points
    psi = np.exp(-x ** 2)
    w = trapezoid_weights(g)
    out = propagate_on_grid(heat_kernel(0.5), psi, 1.0, g)
    assert abs(w @ out - w @ psi) <= 1e-8


def test_heat_composition():
    r = compose(heat_kernel(1.0), 1.0, 0.5, 0.0, Grid1D(12.0, 512))
    assert r.defect <= 1e-6 and r.bias == 0.0


def test_free_kernel_modulus_and_norm():
    K = schrodinger_free_kernel(1.0, 1.0)
    x = np.linspace(-3, 3, 13)
    mod = np.abs(K(x[:, None], 0.7, x[None, :]))
    assert np.allclose(mod, math.sqrt(1 / (2 * math.pi * 0.7)), rtol=1e-14)
    g = Grid1D(40.0, 4001)
    z = g.points
    psi = np.exp(-z ** 2 / 2 + 1j * z)
    out = propagate_on_grid(K, psi, 0.5, g)
    w = trapezoid_weights(g)
    n0, n1 = w @ np.abs(psi) ** 2, w @ np.abs(out) ** 2
    assert abs(n1 - n0) / n0 <= 1e-3
    with pytest.raises(SingularityError):
        K(0.0, 0.0, 1.0)


def test_free_kernel_damped_composition():
    r = compose(schrodinger_free_kernel(), 1.0, 0.5, 0.0, Grid1D(12.0, 1024), damping=0.05)
    assert r.defect <= 1e-3
    assert r.bias > 0


def test_mehler_limits_and_caustic():
    M = mehler_kernel(1.0, 1e-4, 1.0)
    F = schrodinger_free_kernel(1.0, 1.0)
    x = np.linspace(-2, 2, 9)
    assert np.max(np.abs(M(x[:, None], 0.8, x[None, :]) - F(x[:, None], 0.8, x[None, :]))) <= 1e-6
    M1 = mehler_kernel(1.0, 1.0, 1.0)
    a = np.abs(M1(x, 0.4, 0.3))
    b = np.abs(M1(x, 0.4 + 2 * math.pi, 0.3))
    assert np.allclose(a, b, rtol=1e-10)
    with pytest.raises(SingularityError):
        M1(0.0, math.pi, 0.0)
    with pytest.raises(DomainError):
        M1(0.0, 1.0 + 0.1j, 0.0)


def test_mehler_composition():
    r = compose(mehler_kernel(1.0, 1.0, 1.0), 0.6, 0.3, 0.0, Grid1D(12.0, 512), damping=0.05)
    assert r.defect <= 1e-4


def test_branch_table(rng):
    for _ in range(1000):
        c = rng.uniform(0.5, 2)
        t = rng.uniform(-3, 3)
        x, y = rng.uniform(-3, 3, 2), rng.uniform(-3, 3, 2)
        r = np.linalg.norm(x - y)
        expect = "spacelike" if c * abs(t) < r else ("future" if t > 0 else "past")
        assert relativistic_branch(x, t, y, c) == expect
    with pytest.raises(SingularityError):
        relativistic_branch([1.0], 1.0, [0.0], 1.0)


def test_relativistic_values():
    import mpmath

    K = sqrt_relativistic_kernel(1.0, 1.0)
    v = K([1.0], 0.5, [0.0])
    assert v.real == 0.0
    D = mpmath.mpf("0.75")
    ref = complex(0.5 / (4 * mpmath.pi) * (-2j) * mpmath.besselk(2, mpmath.sqrt(D)) / (mpmath.pi * D))
    assert abs(v - ref) <= 1e-8 * abs(ref)
    fut = K([0.0], 2.0, [0.0])
    past = K([0.0], -2.0, [0.0])
    zf = complex(mpmath.hankel2(2, 2.0))
    assert fut == pytest.approx(2.0 / (4 * math.pi) * zf / 4.0, rel=1e-10)
    zp = complex(mpmath.hankel1(2, 2.0))
    assert past == pytest.approx(-(-2.0) / (4 * math.pi) * zp / 4.0, rel=1e-10)
    assert np.array_equal(K.metadata["beta"], DIRAC_BETA)


def test_relativistic_mass_decay():
    mus = np.linspace(200.0, 400.0, 5)
    ct, r = 0.5, 1.0
    vals = [abs(sqrt_relativistic_kernel(mu)([r], ct, [0.0])) for mu in mus]
    slope = np.polyfit(mus, np.log(vals), 1)[0]
    expect = -math.sqrt(r * r - ct * ct)
    assert abs(slope - expect) <= 0.02 * abs(expect)


def test_symbol_heat_and_identity():
    g = Grid1D(12.0, 512)
    x = g.points
    Ks = symbol_to_kernel(lambda xx, eta: -1j * 0.5 * eta ** 2 + 0 * xx, 1.0, 1.0, g)
    ref = heat_kernel(0.5)(x[:, None], 1.0, x[None, :], 0.0)
    assert np.max(np.abs(Ks - ref)) <= 1e-6
    with pytest.warns(AccuracyWarning):
        I = symbol_to_kernel(lambda xx, eta: 0 * eta + 0 * xx, 1.0, 1.0, Grid1D(4.0, 33))
    assert np.allclose(I * Grid1D(4.0, 33).h, np.eye(33), atol=1e-12)


def test_symbol_schrodinger_damped():
    g = Grid1D(12.0, 512)
    x = g.points
    t = 1.0 - 0.2j
    Ks = symbol_to_kernel(lambda xx, eta: 0.5 * eta ** 2 + 0 * xx, t, 1.0, g)
    ref = schrodinger_free_kernel()(x[:, None], t, x[None, :], 0.0)
    assert np.max(np.abs(Ks - ref)) <= 1e-3


def test_symbol_unitary_norm():
    g = Grid1D(12.0, 256)
    a = lambda xx, eta: -1j * eta ** 2 + 0 * xx
    s = symbol_to_kernel(a, 1.0, 1.0, g)
    u = symbol_to_kernel(a, 1.0, 1.0, g, norm="unitary")
    assert np.allclose(u, s * math.sqrt(2 * math.pi))
    with pytest.raises(DomainError):
        symbol_to_kernel(a, 1.0, 1.0, g, norm="other")


def test_check_symbol():
    ok, C = check_symbol(lambda x, eta: 1 + eta ** 2 + 0 * x, 2)
    assert ok and C <= 1.0 + 1e-12
    ok, C = check_symbol(lambda x, eta: eta ** 3 + 0 * x, 2, C=5.0)
    assert not ok


def test_write_csv(tmp_path):
    g = Grid1D(1.0, 3)
    S = np.arange(9).reshape(3, 3) * (1 + 1j)
    p = tmp_path / "k.csv"
    write_kernel_csv(p, g, 0.5, S)
    rows = list(csv.reader(open(p)))
    assert rows[0] == ["x", "y", "t", "re", "im"]
    assert len(rows) == 10
    assert rows[2] == ["-1.0", "0.0", "0.5", "1.0", "1.0"]
