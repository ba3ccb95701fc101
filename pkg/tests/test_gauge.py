import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chronocalc import families
from chronocalc.errors import ConvergenceError, DomainError, PartitionError
from chronocalc.gauge import (Gauge, TaggedPartition, constant_gauge, cousin, hk_integrate,
                              is_fine, riemann_sum, strong_continuity_defect, uniform_partition)
from chronocalc.matcore import op_norm, random_matrix

X = np.array([[0, 1], [1, 0]], dtype=complex)


def test_cousin_examples():
    p = cousin(constant_gauge(0.3, 0.0, 1.0))
    assert np.array_equal(p.endpoints, [0.0, 0.5, 1.0])
    assert np.array_equal(p.tags, [0.25, 0.75])
    p = cousin(constant_gauge(10.0, 0.0, 1.0))
    assert np.array_equal(p.endpoints, [0.0, 1.0]) and p.tags[0] == 0.5
    g = Gauge(lambda t: t / 2 + 0.01, 0.0, 1.0)
    assert is_fine(cousin(g), g)


def test_cousin_depth_exhaustion_names_interval():
    g = Gauge(lambda t: np.where(np.asarray(t) < 0.7, 1e-20, 1.0), 0.0, 1.0)
    with pytest.raises(PartitionError) as ei:
        cousin(g, max_depth=12)
    lo, hi = ei.value.interval
    assert 0.0 <= lo < hi <= 0.5
    assert "unresolved" in str(ei.value)


def test_gauge_positivity():
    g = Gauge(lambda t: np.zeros_like(t), 0.0, 1.0)
    with pytest.raises(DomainError):
        g(0.5)
    with pytest.raises(DomainError):
        Gauge(lambda t: 1.0, 1.0, 0.0)


def test_gauge_scalar_only_callable():
    g = Gauge(lambda t: 0.2 if t < 0.5 else 0.1, 0.0, 1.0)
    p = cousin(g)
    assert is_fine(p, g)


def test_is_fine_examples():
    p = uniform_partition(0.0, 1.0, 10)
    assert is_fine(p, constant_gauge(0.2, 0, 1))
    assert not is_fine(p, constant_gauge(0.01, 0, 1))


def test_partition_validation_and_mesh():
    p = TaggedPartition([0.0, 0.1, 0.5, 1.0], [0.05, 0.3, 0.9])
    assert p.mesh == pytest.approx(0.5)
    assert p.mesh == float(np.max(np.diff(p.endpoints)))
    with pytest.raises(DomainError):
        TaggedPartition([0.0, 0.5, 1.0], [0.6, 0.7])
    with pytest.raises(DomainError):
        TaggedPartition([0.0, 1.0], [0.5, 0.5])


@settings(max_examples=100, deadline=None)
@given(st.floats(1e-3, 0.5), st.floats(0.0, 0.9), st.floats(0.5, 30.0), st.floats(1.0, 4.0))
def test_monotonicity_random(c, amp, om, factor):
    g1 = Gauge(lambda t: c * (1 + amp * np.sin(om * np.asarray(t))), 0.0, 1.0)
    g2 = Gauge(lambda t: factor * c * (1 + amp * np.sin(om * np.asarray(t))), 0.0, 1.0)
    p = cousin(g1)
    assert is_fine(p, g1)
    assert is_fine(p, g2)


def test_riemann_sum_examples():
    A = np.array([[1, 2], [3, 4]], dtype=complex)
    F = families.constant(A)
    p = TaggedPartition([0.0, 0.2, 0.7, 1.0], [0.1, 0.2, 0.99])
    assert np.allclose(riemann_sum(F, p), A, atol=1e-15)
    lin = families.polynomial([np.zeros((2, 2)), np.eye(2)])
    assert np.allclose(riemann_sum(lin, uniform_partition(0, 1, 4)), 0.5 * np.eye(2), atol=1e-15)
    ind = families.indicator(X, 0.0, 0.5)
    p = TaggedPartition([0, 0.25, 0.5, 0.75, 1.0], [0.1, 0.3, 0.6, 0.8])
    assert np.array_equal(riemann_sum(ind, p), 0.5 * X)


def test_hk_integrate_indicator():
    r = hk_integrate(families.indicator(X, 0.0, 0.5), 0.0, 1.0, tol=1e-12)
    assert op_norm(r.value - 0.5 * X) <= 1e-15
    assert r.est_error <= 1e-12
    assert r.est_error == r.history[-1]


def test_hk_integrate_linear_and_exponential(rng):
    A = random_matrix(3, rng)
    lin = families.polynomial([np.zeros((3, 3)), A])
    r = hk_integrate(lin, 0.0, 1.0, tol=1e-10)
    assert op_norm(r.value - A / 2) <= 1e-10
    ex = families.diagonal([np.exp, np.exp])
    r = hk_integrate(ex, 0.0, 1.0, tol=1e-10)
    assert op_norm(r.value - (math.e - 1) * np.eye(2)) <= 1e-10
    assert r.partitions_used >= 2 and r.final_mesh > 0


def test_hk_integrate_against_simpson(rng):
    from scipy.integrate import quad

    F = families.random_smooth(2, 3)
    r = hk_integrate(F, 0.0, 1.0, tol=1e-10)
    ref = np.zeros((2, 2), dtype=complex)
    for i in range(2):
        for j in range(2):
            ref[i, j] = quad(lambda t: F(t)[i, j].real, 0, 1, epsabs=1e-14)[0] + \
                1j * quad(lambda t: F(t)[i, j].imag, 0, 1, epsabs=1e-14)[0]
    assert op_norm(r.value - ref) <= 1e-10


def test_linearity_additivity_uniform_limit(rng):
    F = families.random_smooth(3, 11)
    G = families.random_smooth(3, 12)
    tol = 1e-10
    QF = hk_integrate(F, 0, 1, tol).value
    QG = hk_integrate(G, 0, 1, tol).value
    assert op_norm(hk_integrate(F + G, 0, 1, tol).value - QF - QG) <= 2 * tol
    for c in rng.uniform(0.1, 0.9, 5):
        parts = hk_integrate(F, 0, c, tol).value + hk_integrate(F, c, 1, tol).value
        assert op_norm(parts - QF) <= 2 * tol
    errs = []
    for k in (1, 10, 100, 1000):
        Fk = F + families.constant(np.eye(3) / k)
        errs.append(op_norm(hk_integrate(Fk, 0, 1, tol).value - QF))
    assert all(b < a for a, b in zip(errs, errs[1:]))
    assert errs[-1] <= 1e-3 + 2 * tol


def test_hk_integrate_errors():
    F = families.constant(np.eye(2))
    with pytest.raises(DomainError):
        hk_integrate(F, 1.0, 0.0)
    with pytest.raises(DomainError):
        hk_integrate(F, 0.0, 1.0, tol=0.0)
    rough = families.diagonal([lambda t: np.sin(1e5 * t)])
    with pytest.raises(ConvergenceError) as ei:
        hk_integrate(rough, 0.0, 1.0, tol=1e-14, max_iter=3)
    assert len(ei.value.history) == 2


def test_strong_continuity_defect(rng):
    A = random_matrix(4, rng)
    F = families.constant(A)
    x = np.zeros(4, dtype=complex)
    x[1] = 1
    p = uniform_partition(0, 1, 16)
    Ax = A @ x
    expect = np.linalg.norm(Ax - np.vdot(x, Ax) * x) ** 2
    assert strong_continuity_defect(F, x, p) == pytest.approx(expect, rel=1e-13)
    D = families.diagonal([lambda t: t, lambda t: 1 + t])
    assert strong_continuity_defect(D, np.array([1.0, 0.0]), p) == 0.0
    R = families.random_smooth(4, 5)
    y = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    y /= np.linalg.norm(y)
    p = uniform_partition(0, 1, 64)
    total = 0.0
    for k in range(64):
        v = R(p.tags[k]) @ y
        r = v - np.vdot(y, v) * y
        total += p.widths[k] * float(np.vdot(r, r).real)
    assert strong_continuity_defect(R, y, p) == pytest.approx(total, rel=1e-13, abs=1e-14)
    with pytest.raises(DomainError):
        strong_continuity_defect(R, 2 * y, p)
