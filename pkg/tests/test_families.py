import numpy as np
import pytest

from chronocalc import families
from chronocalc.errors import DomainError
from chronocalc.matcore import is_dissipative, matrix_to_json

A = np.array([[1, 2], [3, 4]], dtype=complex)
B = np.array([[0, 1], [-1, 0]], dtype=complex)


def test_scalar_and_batched_evaluation():
    F = families.polynomial([A, B])
    assert F(0.5).shape == (2, 2)
    assert F(np.array([0.0, 0.5, 1.0])).shape == (3, 2, 2)
    assert np.allclose(F(0.5), A + 0.5 * B)


def test_domain_checks():
    F = families.constant(A)
    with pytest.raises(DomainError):
        F(1.5)
    with pytest.raises(DomainError):
        families.constant(A, 1.0, 0.0)
    bad = families.diagonal([lambda t: np.where(t == 0.5, np.nan, t)])
    with pytest.raises(DomainError, match="non-finite"):
        bad(0.5)


def test_step_right_continuous_and_last_piece_closed():
    F = families.step([0.0, 0.5, 1.0], [A, B])
    assert np.array_equal(F(0.5), B)
    assert np.array_equal(F(0.4999), A)
    assert np.array_equal(F(1.0), B)
    assert F.discontinuities == (0.5,)
    assert F.continuity_class == "piecewise"
    with pytest.raises(DomainError):
        families.step([0.0, 1.0], [A, B])


def test_indicator_closed_interval():
    F = families.indicator(A, 0.0, 0.5)
    assert np.array_equal(F(0.25), A)
    assert np.array_equal(F(0.75), np.zeros((2, 2)))


def test_tabulated_interpolates():
    F = families.tabulated([0.0, 1.0, 2.0], [A, B, A])
    assert np.allclose(F(0.5), 0.5 * (A + B))
    assert np.allclose(F(2.0), A)
    with pytest.raises(DomainError):
        families.tabulated([0.0, 0.0], [A, B])


def test_random_smooth_is_dissipative_and_reproducible():
    F = families.random_smooth(4, 9)
    G = families.random_smooth(4, 9)
    ts = np.linspace(0, 1, 11)
    assert np.array_equal(F(ts), G(ts))
    assert all(is_dissipative(M)[0] for M in F(ts))
    assert not F.is_commuting()


def test_sum_scale_restrict():
    F = families.constant(A) + families.polynomial([np.zeros((2, 2)), B])
    assert np.allclose(F(0.3), A + 0.3 * B)
    assert np.allclose(F.scaled(2.0)(0.3), 2 * (A + 0.3 * B))
    R = families.step([0.0, 0.5, 1.0], [A, B]).restricted(0.6, 1.0)
    assert R.discontinuities == () and R.a == 0.6
    with pytest.raises(DomainError):
        families.constant(A) + families.constant(np.eye(3))


def test_from_scalar():
    F = families.GeneratorFamily.from_scalar(lambda t: t * A, 0.0, 2.0)
    assert F.dim == 2
    assert np.allclose(F(np.array([1.0, 2.0])), [A, 2 * A])


def test_family_from_config_kinds():
    m = matrix_to_json(A)
    assert np.allclose(families.family_from_config({"kind": "constant", "matrix": m})(0.2), A)
    F = families.family_from_config({"kind": "diagonal_poly", "coeffs": [[-1, -1], [0, 0, -2]]})
    assert np.allclose(F(1.0), np.diag([-2, -2]))
    F = families.family_from_config({"kind": "step", "breakpoints": [0, 0.5, 1],
                                     "mats": [m, matrix_to_json(B)]})
    assert np.allclose(F(0.7), B)
    F = families.family_from_config({"kind": "random_smooth", "dim": 3, "seed": 4})
    assert F.dim == 3
    F = families.family_from_config({"kind": "trig", "A0": m, "A1": matrix_to_json(B),
                                     "omega": 2.0})
    assert np.allclose(F(0.25), A + np.sin(0.5) * B)
    with pytest.raises(DomainError):
        families.family_from_config({"kind": "nope"})
