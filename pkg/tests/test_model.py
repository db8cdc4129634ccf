import math

import numpy as np
import pytest

from lassolab.model import (DimensionError, OperatorNorms, ProblemInstance, ProblemParams,
                            objective_value, support, theorem_bounds)


@pytest.mark.parametrize("kw", [dict(p=0.5), dict(p=2.5), dict(q=0.9), dict(r=0.5),
                                dict(lam=-1.0), dict(lam=math.inf)])
def test_params_rejects_out_of_range(kw):
    with pytest.raises(ValueError):
        ProblemParams(**kw)


def test_with_lam_keeps_exponents():
    p = ProblemParams(1.5, 1.0, 2.0, 3.0).with_lam(0.25)
    assert (p.p, p.q, p.r, p.lam) == (1.5, 1.0, 2.0, 0.25)


def test_instance_shapes_checked():
    A = np.ones((3, 4))
    with pytest.raises(DimensionError):
        ProblemInstance(A, np.ones(4))
    with pytest.raises(DimensionError):
        ProblemInstance(A, np.ones(3), np.eye(3))
    with pytest.raises(ValueError):
        ProblemInstance(A, np.array([1.0, np.nan, 0.0]))


def test_instance_rejects_singular_dictionary():
    B = np.eye(3)
    B[2, 2] = 1e-13
    with pytest.raises(np.linalg.LinAlgError):
        ProblemInstance(np.ones((2, 3)), np.ones(2), B)


def test_instance_is_immutable():
    inst = ProblemInstance(np.ones((2, 2)), np.ones(2))
    with pytest.raises(AttributeError):
        inst.y = np.zeros(2)
    with pytest.raises(ValueError):
        inst.A[0, 0] = 5.0


def test_instance_copies_inputs():
    A = np.ones((2, 2))
    inst = ProblemInstance(A, np.ones(2))
    A[0, 0] = 7.0
    assert inst.A[0, 0] == 1.0


def test_dictionary_operations_match_dense_algebra():
    rng = np.random.default_rng(3)
    A = rng.standard_normal((4, 5))
    B = rng.standard_normal((5, 5)) + 3 * np.eye(5)
    inst = ProblemInstance(A, rng.standard_normal(4), B)
    w = rng.standard_normal(5)
    np.testing.assert_allclose(inst.M, A @ B, rtol=1e-13)
    np.testing.assert_allclose(inst.apply_B(w), B @ w, rtol=1e-13)
    np.testing.assert_allclose(inst.apply_Binv(B @ w), w, rtol=1e-10, atol=1e-12)
    nrm = inst.norms()
    assert nrm.norm_B == pytest.approx(np.linalg.norm(B, 2), rel=1e-12)
    assert nrm.kappa_B == pytest.approx(np.linalg.cond(B), rel=1e-10)
    assert not inst.is_identity
    assert ProblemInstance(A, np.ones(4)).is_identity


def test_objective_value_matches_definition():
    rng = np.random.default_rng(4)
    A = rng.standard_normal((3, 4))
    y = rng.standard_normal(3)
    z = rng.standard_normal(4)
    prm = ProblemParams(1.5, 3.0, 2.0, 0.7)
    expect = (np.sum(np.abs(y - A @ z) ** 1.5) ** (1 / 1.5)) ** 3 / 3 + 0.7 * np.abs(z).sum() ** 2 / 2
    assert objective_value(prm, ProblemInstance(A, y), z) == pytest.approx(expect, rel=1e-13)


def test_support_threshold_is_relative():
    v = np.array([1.0, -1e-7, 1e-5, 0.0, -0.5])
    assert support(v, 1e-6) == (0, 2, 4)
    assert support(v, 0.0) == (0, 1, 2, 4)
    assert support(np.zeros(3)) == ()


def test_theorem_bounds_noiseless():
    # chi = 2 * 1.5 * 2 = 6, cap = 36 * 2 = 72
    b = theorem_bounds(OperatorNorms(4.0, 0.5), 1.5, 2, False, ProblemParams(), beta=1.3)
    assert b.chi == pytest.approx(6.0)
    assert (b.sparsity_cap, b.t, b.lam_star) == (72, 73, 0.0)


def test_theorem_bounds_noisy_threshold():
    # chi = 6 * 1.5 * 2 = 18, cap = 324; lam_star = 2^(q-1) beta^r ||B||^r ||e||^(q-r)
    prm = ProblemParams(2.0, 2.0, 1.0)
    b = theorem_bounds(OperatorNorms(4.0, 0.5), 1.5, 1, True, prm, beta=1.3, e_norm=0.2)
    assert b.sparsity_cap == 324
    assert b.lam_star == pytest.approx(2 * 1.3 * 4.0 * 0.2)
    prm = ProblemParams(2.0, 1.0, 2.0)
    b = theorem_bounds(OperatorNorms(4.0, 0.5), 1.5, 1, True, prm, beta=1.3, e_norm=0.2)
    assert b.lam_star == pytest.approx(1.3 ** 2 * 16.0 / 0.2)


@pytest.mark.parametrize("q,r,expect", [(1.0, 2.0, math.inf), (2.0, 2.0, 2 * 1.3 ** 2 * 16.0),
                                        (2.0, 1.0, 0.0)])
def test_theorem_bounds_zero_noise_limits(q, r, expect):
    b = theorem_bounds(OperatorNorms(4.0, 0.5), 1.0, 1, True, ProblemParams(2.0, q, r),
                       beta=1.3, e_norm=0.0)
    assert b.lam_star == pytest.approx(expect)


def test_theorem_bounds_infinite_gamma_is_vacuous():
    b = theorem_bounds(OperatorNorms(1.0, 1.0), math.inf, 1, False, ProblemParams(), beta=1.0)
    assert b.sparsity_cap is None and b.t is None


def test_theorem_bounds_validates_inputs():
    with pytest.raises(ValueError):
        theorem_bounds(OperatorNorms(1.0, 1.0), 0.5, 1, False, ProblemParams(), beta=1.0)
    with pytest.raises(ValueError):
        theorem_bounds(OperatorNorms(1.0, 1.0), 1.0, 0, False, ProblemParams(), beta=1.0)
