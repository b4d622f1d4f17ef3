import warnings

import numpy as np
import pytest

from mfsobol.errors import DomainError
from mfsobol.models.analytic import analytic_space, ishigami, ishigami_indices
from mfsobol.pce import (
    IllConditionedWarning,
    PcBasis,
    expected_count,
    fit_pce,
    legendre_eval,
    pc_sobol,
    pce_training_points,
)
from mfsobol.sampling import Parameter, ParameterSpace


def test_basis_count_and_ordering():
    for d, o in ((1, 0), (2, 3), (3, 4), (4, 2)):
        b = PcBasis.total_degree(d, o)
        assert b.count == expected_count(d, o)
        degrees = [sum(t) for t in b.terms]
        assert degrees == sorted(degrees)
    assert PcBasis.total_degree(3, 4).count == 35
    with pytest.raises(DomainError):
        PcBasis.total_degree(0, 2)


def test_orthonormality_gauss_legendre():
    # E[psi_a psi_b] under U(-1,1)^2 by 10-point tensor quadrature is the identity
    x, w = np.polynomial.legendre.leggauss(10)
    X, Y = np.meshgrid(x, x, indexing="ij")
    U = np.column_stack([X.ravel(), Y.ravel()])
    W = np.outer(w, w).ravel() / 4.0
    D = PcBasis.total_degree(2, 5).design(U)
    np.testing.assert_allclose(D.T @ (W[:, None] * D), np.eye(D.shape[1]), atol=1e-12)


def test_legendre_eval_hand_values():
    z = np.array([[0.5, -1.0]])
    # sqrt(3) z times sqrt(5) (3 z^2 - 1) / 2
    expected = np.sqrt(3) * 0.5 * np.sqrt(5) * (3 - 1) / 2
    assert legendre_eval((1, 2), z)[0] == pytest.approx(expected)


def test_exact_recovery_of_polynomial():
    sp = ParameterSpace((Parameter("a", 0.0, 2.0), Parameter("b", -1.0, 1.0)))
    Z = pce_training_points(sp, 40)
    u = sp.normalize(Z)
    y = 1.0 + 2.0 * u[:, 0] + 0.5 * u[:, 0] * u[:, 1]
    s = fit_pce(sp, 2, Z, y)
    assert s.residual < 1e-12
    assert s.mean == pytest.approx(1.0, abs=1e-12)
    # Var = 4 Var(u) + 0.25 Var(u1 u2) = 4/3 + 0.25/9
    assert s.variance == pytest.approx(4 / 3 + 0.25 / 9, rel=1e-10)
    est = pc_sobol(s)
    V = 4 / 3 + 0.25 / 9
    np.testing.assert_allclose(est.S, [4 / 3 / V, 0.0], atol=1e-12)
    np.testing.assert_allclose(est.ST, [1.0, 0.25 / 9 / V], atol=1e-12)
    np.testing.assert_allclose(s(Z), y, atol=1e-12)


def test_ishigami_pc():
    sp = analytic_space("ishigami")
    Z = pce_training_points(sp, 2000)
    est = pc_sobol(fit_pce(sp, 9, Z, ishigami(Z)))
    ref = ishigami_indices()
    np.testing.assert_allclose(est.S, ref["S"], atol=0.01)
    np.testing.assert_allclose(est.ST, ref["ST"], atol=0.02)


def test_too_few_samples():
    sp = analytic_space("ishigami")
    with pytest.raises(DomainError):
        fit_pce(sp, 4, pce_training_points(sp, 69), np.zeros(69))


def test_ill_conditioning_warns():
    sp = ParameterSpace((Parameter("a", 0.0, 1.0),))
    Z = np.concatenate([np.full(10, 0.5), np.full(10, 0.5 + 1e-9)])[:, None]
    y = Z[:, 0]
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        s = fit_pce(sp, 3, Z, y)
    assert any(issubclass(r.category, IllConditionedWarning) for r in rec)
    assert s.warnings


def test_constant_model_degenerate():
    sp = analytic_space("ishigami")
    Z = pce_training_points(sp, 40)
    est = pc_sobol(fit_pce(sp, 2, Z, np.full(40, 2.0)))
    assert est.degenerate and np.all(est.S == 0)


def test_export(tmp_path):
    sp = analytic_space("ishigami")
    Z = pce_training_points(sp, 40)
    s = fit_pce(sp, 2, Z, ishigami(Z))
    s.export(tmp_path / "c.txt")
    lines = (tmp_path / "c.txt").read_text().splitlines()
    assert len(lines) == 1 + s.basis.count
    assert float(lines[1].split()[-1]) == s.c[0]
