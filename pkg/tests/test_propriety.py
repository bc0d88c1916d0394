import numpy as np
import pytest

from fusionlasso.inference import propriety
from fusionlasso.structure import (
    ConstraintSet,
    StructureGraph,
    build_agnostic,
    build_lattice,
    compile_constraints,
)


def _chain(p=3):
    return compile_constraints(StructureGraph(p, [(i, i + 1) for i in range(p - 1)]))


def test_nullspace_of_chain_is_constant():
    B = propriety.nullspace_basis(_chain(3))
    assert B.shape == (3, 1)
    np.testing.assert_allclose(np.abs(B[:, 0]), np.full(3, 1 / np.sqrt(3)))


def test_nullspace_dimensions():
    assert propriety.nullspace_basis(ConstraintSet.from_rows(np.eye(4))).shape == (4, 0)

    cells = [{"Type": t, "Money": m} for t in "ABC" for m in ["lo", "hi"]]
    cset = compile_constraints(build_lattice(cells))
    assert cset.rank() == 5
    assert propriety.nullspace_basis(cset).shape == (6, 1)

    # No constraints: every direction is free
    np.testing.assert_allclose(
        propriety.nullspace_basis(compile_constraints(StructureGraph(3))), np.eye(3)
    )


def test_check_prior():
    assert propriety.check_prior(ConstraintSet.from_rows(np.eye(3)))
    assert not propriety.check_prior(_chain(3))

    chain = _chain(3)
    with_quad = ConstraintSet.from_rows(chain.D, quad_mats=[1e-3 * np.eye(3)])
    assert propriety.check_prior(with_quad)

    with_ridge = chain.with_ridge(1e-3 * np.eye(3))
    assert propriety.check_prior(with_ridge)


def test_prior_report():
    report = propriety.prior_report(_chain(4))
    assert not report.prior_proper
    assert report.rank_Dbar == 3
    assert report.nullspace_dim == 1
    assert report.condition_a is None
    assert report.posterior_proper is None


def test_one_hot_design_with_fusion():
    rng = np.random.default_rng(0)
    levels = np.repeat(np.arange(3), 4)
    X = np.eye(3)[levels]
    y = rng.standard_normal(12)
    report = propriety.check_posterior(X, y, compile_constraints(build_agnostic(range(3))), "linear")
    assert not report.prior_proper
    assert report.condition_a
    assert report.condition_b == propriety.HOLDS
    assert report.posterior_proper


def test_continuous_covariate_linear():
    x = np.linspace(-1, 1, 10)
    X = np.column_stack([np.ones(10), x])
    cset = ConstraintSet.from_rows(np.array([[0.0, 1.0]]))
    report = propriety.check_posterior(X, 1 + 2 * x, cset, "linear")
    assert report.condition_a
    assert report.condition_b == propriety.HOLDS
    assert report.posterior_proper


def test_collinear_design_is_improper():
    X = np.ones((3, 2))
    report = propriety.check_posterior(X, np.zeros(3), compile_constraints(StructureGraph(2)), "linear")
    assert not report.condition_a
    assert report.condition_b == propriety.FAILS
    assert report.posterior_proper is False


def _two_group_logistic(y):
    x = np.array([-2, -1, 1, 2, -2, -1, 1, 2], dtype=float)
    a = np.repeat([1.0, 0.0], 4)
    X = np.column_stack([a, 1 - a, x])
    cset = ConstraintSet.from_rows(np.array([[1.0, -1.0, 0.0]]))
    return X, np.asarray(y), cset


def test_separated_logistic_is_improper():
    X, y, cset = _two_group_logistic((np.array([-2, -1, 1, 2] * 2) > 0).astype(int))
    report = propriety.check_posterior(X, y, cset, "logistic")
    assert report.condition_a
    assert report.condition_b == propriety.FAILS
    assert report.posterior_proper is False


def test_overlapping_logistic_is_proper():
    X, y, cset = _two_group_logistic([0, 1, 0, 1, 1, 0, 1, 1])
    report = propriety.check_posterior(X, y, cset, "logistic")
    assert report.condition_a
    assert report.condition_b == propriety.HOLDS
    assert report.posterior_proper
    assert set(report.to_dict()) >= {"prior_proper", "condition_a", "condition_b", "posterior_proper"}


def test_check_posterior_shape_errors():
    cset = _chain(3)
    with pytest.raises(ValueError):
        propriety.check_posterior(np.ones((4, 2)), np.zeros(4), cset, "linear")
    with pytest.raises(ValueError):
        propriety.check_posterior(np.ones((4, 3)), np.zeros(5), cset, "linear")


def _pooled_treatment_logistic():
    unit = np.repeat([0, 1], 4)
    treated = np.tile([1.0, 1.0, 0.0, 0.0], 2)
    X = np.column_stack([np.ones(8), treated * (unit == 0), treated * (unit == 1)])
    cset = ConstraintSet.from_rows(np.array([[0.0, 1.0, -1.0]]))
    return X, treated.astype(int), cset


def test_treatment_separated_logistic_is_improper():
    X, treated, cset = _pooled_treatment_logistic()
    report = propriety.check_posterior(X, treated, cset, "logistic")
    assert report.condition_a
    assert report.condition_b == propriety.FAILS
    assert report.posterior_proper is False


def test_treatment_quasi_separated_logistic_is_improper():
    X, _, cset = _pooled_treatment_logistic()
    report = propriety.check_posterior(X, [1, 1, 0, 1, 1, 1, 1, 0], cset, "logistic")
    assert report.condition_b == propriety.FAILS
    assert report.posterior_proper is False

    report = propriety.check_posterior(X, [1, 0, 0, 1, 1, 0, 1, 0], cset, "logistic")
    assert report.condition_b == propriety.HOLDS
    assert report.posterior_proper
