import math

import numpy as np
import pytest

from chronocalc import families
from chronocalc.errors import BudgetError, DomainError
from chronocalc.evolution import propagate, q_integral
from chronocalc.matcore import expm, op_norm, random_matrix
from chronocalc.models import heat_model, laplacian_1d, quartic_model
from chronocalc.pathsum import (MeasurementSchedule, Regularizer, experimental_evolution,
                                feynman_kac, lambda_sweep, poisson_weights, slot_integrals,
                                u_n, u_schedule)

DIAG = families.diagonal([lambda s: -1 - s, lambda s: -2 * s])


def test_schedule_boundaries_interleave():
    sc = MeasurementSchedule([0.2, 0.5, 0.9], 1.0)
    b = sc.boundaries
    assert np.allclose(b, [0.0, 0.35, 0.7, 1.0])
    assert np.all(b[:-1] <= sc.taus) and np.all(sc.taus <= b[1:])
    assert sc.n == 3
    with pytest.raises(DomainError):
        MeasurementSchedule([0.5, 0.2], 1.0)
    with pytest.raises(DomainError):
        MeasurementSchedule([0.5, 1.2], 1.0)
    r = MeasurementSchedule.uniform_random(1.0, 50, np.random.default_rng(0))
    assert np.all(np.diff(r.taus) > 0)


def test_u_schedule_constant_telescopes(rng):
    A = random_matrix(3, rng)
    F = families.constant(A)
    E = expm(A)
    assert op_norm(u_schedule(F, MeasurementSchedule([1.0], 1.0)) - E) <= 1e-12
    sc = MeasurementSchedule.uniform_random(1.0, 7, rng)
    assert op_norm(u_schedule(F, sc) - E) <= 1e-12
    for n in (1, 4, 13):
        assert op_norm(u_n(F, 1.0, n) - E) <= 1e-12


def test_u_schedule_diagonal():
    sc = MeasurementSchedule.equispaced(1.0, 9)
    assert op_norm(u_schedule(DIAG, sc) - expm(q_integral(DIAG, 1.0))) <= 1e-10


def test_two_slot_ordering(rng):
    A, B = random_matrix(2, rng), random_matrix(2, rng)
    F = families.step([0.0, 0.5, 1.0], [A, B])
    # tau = (0.5, 1): boundaries (0, 0.75, 1), so slot integrals mix A and B
    U = u_n(F, 1.0, 2)
    M1 = 0.5 * A + 0.25 * B
    M2 = 0.25 * B
    assert op_norm(U - expm(M2) @ expm(M1)) <= 1e-12
    assert op_norm(U - expm(M1) @ expm(M2)) > 1e-3


def test_u_n_converges_second_order():
    # exact slot integrals make each factor a first Magnus term, so the order is two
    F = families.random_smooth(3, 31)
    ref = propagate(F, 1.0, 4096, richardson=True)
    ns = [8, 16, 32, 64]
    e = [op_norm(u_n(F, 1.0, n) - ref) for n in ns]
    assert abs(np.polyfit(np.log(ns), np.log(e), 1)[0] + 2) <= 0.15


def test_slot_integrals_tolerance_shared():
    F = families.random_smooth(2, 40)
    b = np.linspace(0, 1, 33)
    M = slot_integrals(F, b, tol=1e-10)
    assert op_norm(M.sum(axis=0) - q_integral(F, 1.0, 1e-12)) <= 2e-10


@pytest.mark.parametrize("mean,last", [(0.5, 0), (10.0, 10), (300.0, 300), (1500.0, 1500)])
def test_poisson_weights_invariant(mean, last):
    w, deficit = poisson_weights(mean, last)
    assert math.fsum(w) + deficit == pytest.approx(1.0, abs=1e-12)
    assert 0 <= deficit < 1
    assert np.all(w >= 0)
    if mean < 700:
        assert w[0] == math.exp(-mean)


def test_constant_generator_weights_exact(rng):
    A = random_matrix(3, rng)
    A -= 2 * np.eye(3)
    F = families.constant(A)
    r = experimental_evolution(F, 1.0, 40.0)
    assert r.terms_used == 41
    E = expm(A)
    # every U_n equals E, the n = 0 term is I
    w, _ = poisson_weights(40.0, 40)
    expect = w[0] * np.eye(3) + (r.weight_sum - w[0]) * E
    assert op_norm(r.value - expect) <= 1e-12


def test_small_lambda_single_term():
    r = experimental_evolution(DIAG, 1.0, 0.5)
    assert r.terms_used == 1
    assert np.allclose(r.value, math.exp(-0.5) * np.eye(2))
    assert r.poisson_deficit == pytest.approx(1 - math.exp(-0.5))


def test_budget_and_domain():
    with pytest.raises(BudgetError):
        experimental_evolution(DIAG, 1.0, 5000.0)
    with pytest.raises(DomainError):
        experimental_evolution(DIAG, 1.0, -1.0)
    with pytest.raises(DomainError):
        experimental_evolution(DIAG, 1.0, 5.0, schedule="poisson")


def test_unrenormalized_contraction_and_renormalized_limit():
    F = families.diagonal([lambda s: 1j * s, lambda s: -1j * s * s])
    for lam in (5.0, 50.0):
        r = experimental_evolution(F, 1.0, lam)
        assert op_norm(r.value) <= r.weight_sum + 1e-12
    ref = expm(q_integral(F, 1.0))
    rows = lambda_sweep(F, 1.0, [10.0, 100.0, 1000.0], ref, renormalize=True)
    errs = [row[3] for row in rows]
    assert errs[-1] <= 1e-3
    assert errs[0] > errs[-1]
    assert all(row[4] is None for row in rows)


def test_threads_give_identical_result():
    F = families.random_smooth(2, 41)
    a = experimental_evolution(F, 1.0, 60.0, threads=1).value
    b = experimental_evolution(F, 1.0, 60.0, threads=4).value
    assert np.array_equal(a, b)


def test_random_schedule_reproducible():
    F = families.random_smooth(2, 42)
    a = experimental_evolution(F, 1.0, 20.0, schedule="random", rng=np.random.default_rng(5))
    b = experimental_evolution(F, 1.0, 20.0, schedule="random", rng=np.random.default_rng(5))
    assert np.array_equal(a.value, b.value)


def test_feynman_kac_zero_potential(rng):
    F0 = families.random_smooth(3, 50)
    V = families.constant(np.zeros((3, 3)))
    for reg in (Regularizer("yosida", 10.0), Regularizer("sqrt_cutoff", 0.1)):
        assert op_norm(feynman_kac(F0, V, 1.0, reg, 64) - propagate(F0, 1.0, 64)) <= 1e-14
    with pytest.raises(DomainError):
        Regularizer("cutoff", 1.0)


def test_feynman_kac_heat_ladder():
    m = heat_model()
    ref = expm(m.full_generator())
    errs = [op_norm(feynman_kac(m.F0, m.V, 1.0, Regularizer("sqrt_cutoff", rho), 8) - ref)
            for rho in (1e-2, 1e-4, 1e-6)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] <= 1e-6


def test_feynman_kac_quartic():
    m = quartic_model()
    ref = expm(m.full_generator())
    U = feynman_kac(m.F0, m.V, 1.0, Regularizer("sqrt_cutoff", 1e-6), 8, coupling=m.coupling)
    assert op_norm(U - ref) <= 1e-5
    U = feynman_kac(m.F0, m.V, 1.0, Regularizer("yosida", 1e6), 8, coupling=m.coupling)
    assert op_norm(U - ref) <= 1e-3


def test_models_shapes():
    L = laplacian_1d(8, 1.0)
    assert np.allclose(L, L.T)
    assert np.all(np.linalg.eigvalsh(L) < 0)
