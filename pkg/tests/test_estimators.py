import numpy as np
import pytest

from mfsobol.errors import (
    AllocationError,
    BudgetTooSmallError,
    DegenerateStatisticsError,
    DomainError,
    LeastSquaresError,
)
from mfsobol.estimators import (
    AllocationPlan,
    EvalTable,
    PilotStatistics,
    allocation_ratios,
    analytic_estimator_variance,
    budget_for,
    check_cost_ratio,
    control_weights,
    fit_discrepancy,
    mc_sobol,
    mfmc_mean,
    mfmc_sobol,
    mfmc_variance,
    optimal_allocation,
    owen_tj,
    owen_vj,
    perturb_lowfid,
    pilot_statistics,
    sample_mean_var,
)
from mfsobol.models.analytic import analytic_space, ishigami, ishigami_indices, linear_additive
from mfsobol.sampling import build_bundle


def gauss_legendre_indices(f, lo, hi, n=40):
    """Main and total indices of a 3-input function by tensor Gauss-Legendre quadrature."""
    x, w = np.polynomial.legendre.leggauss(n)
    x = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
    w = 0.5 * w
    X = np.array(np.meshgrid(x, x, x, indexing="ij"))
    W = w[:, None, None] * w[None, :, None] * w[None, None, :]
    F = f(X.reshape(3, -1).T).reshape(n, n, n)
    mu = np.sum(W * F)
    V = np.sum(W * F * F) - mu**2
    S, ST = [], []
    for j in range(3):
        others = tuple(i for i in range(3) if i != j)
        cond = np.tensordot(F, np.outer(w, w).reshape(n, n), axes=(others, (0, 1)))
        S.append((np.sum(w * cond**2) - mu**2) / V)
        condc = np.tensordot(F, w, axes=([j], [0]))
        wo = np.outer(w, w)
        ST.append(1 - (np.sum(wo * condc**2) - mu**2) / V)
    return np.array(S), np.array(ST), V


def evaluate(bundle, f):
    return {t: f(bundle.matrix(t)) for t in bundle.tags()}


def test_ishigami_closed_form_matches_quadrature():
    ref = ishigami_indices()
    S, ST, V = gauss_legendre_indices(ishigami, -np.pi, np.pi)
    np.testing.assert_allclose(S, ref["S"], atol=1e-10)
    np.testing.assert_allclose(ST, ref["ST"], atol=1e-10)
    assert V == pytest.approx(ref["V"], rel=1e-10)
    np.testing.assert_allclose(ref["S"], [0.3139, 0.4424, 0.0], atol=1e-4)
    assert ref["ST"][2] == pytest.approx(0.2437, abs=1e-4)


def test_mc_sobol_ishigami():
    b = build_bundle(analytic_space("ishigami"), 20000)
    est = mc_sobol(evaluate(b, ishigami), "y")
    ref = ishigami_indices()
    np.testing.assert_allclose(est.S, ref["S"], atol=0.02)
    np.testing.assert_allclose(est.ST, ref["ST"], atol=0.02)
    assert est.method == "mc" and not est.degenerate


def test_owen_vj_unbiased_on_linear_model(rng):
    # y = z1 + 2 z2 on U(0,1)^2: V_1 = 1/12 exactly; average of many small-N estimates
    reps, N = 20000, 4
    A = rng.random((reps, N, 2))
    B = rng.random((reps, N, 2))
    f = lambda Z: Z[..., 0] + 2 * Z[..., 1]
    C = B.copy()
    C[..., 0] = A[..., 0]
    vals = [owen_vj(f(A[r]), f(B[r]), f(C[r])) for r in range(reps)]
    se = np.std(vals) / np.sqrt(reps)
    assert abs(np.mean(vals) - 1 / 12) < 4 * se


def test_owen_tj_hand_value():
    assert owen_tj([1.0, 2.0], [0.0, 4.0]) == pytest.approx((1 + 4) / 4)


def test_constant_model_contributions_exactly_zero():
    b = build_bundle(analytic_space("constant"), 16)
    vals = {t: np.full(16, 3.7) for t in b.tags()}
    est = mc_sobol(vals)
    assert est.V_hat == 0.0
    assert np.all(est.V_j == 0.0) and np.all(est.T_j == 0.0)
    assert est.degenerate and np.all(est.S == 0.0) and np.all(np.isfinite(est.ST))


def test_sample_mean_var_errors():
    with pytest.raises(DomainError):
        sample_mean_var([1.0])
    assert sample_mean_var([1.0, 3.0]) == (2.0, 2.0)


def make_table(f_list, w, m, space=None, n=None):
    space = space or analytic_space("ishigami")
    b = build_bundle(space, n or max(m))
    data = [evaluate(b.head(mk), f) for f, mk in zip(f_list, m)]
    return EvalTable(tuple(data), w, "y")


def test_k1_mfmc_is_bitwise_mc():
    table = make_table([ishigami], [1.0], [64])
    plan = AllocationPlan(np.array([64]), np.array([1.0]), np.array([1.0]), 320.0, 64.0, np.array([1.0]), 3)
    a = mfmc_sobol(table, plan)
    b = mc_sobol(table)
    for field in ("V_hat", "E_hat"):
        assert getattr(a, field) == getattr(b, field)
    for field in ("V_j", "T_j", "S", "ST"):
        assert np.array_equal(getattr(a, field), getattr(b, field))


def test_duplicated_models_telescope_to_first_level():
    # identical low-fidelity copy with alpha = 1: corrections vanish except the m_2 - m_1 extension
    table = make_table([ishigami, ishigami], [1.0, 0.1], [32, 128])
    plan = AllocationPlan(np.array([32, 128]), np.array([1.0, 1.0]), np.ones(2), 0.0, 0.0, np.array([1.0, 0.1]), 3)
    est = mfmc_sobol(table, plan)
    full = mc_sobol({t: v[:128] for t, v in table.model(1).items()})
    assert est.V_hat == pytest.approx(full.V_hat, rel=1e-12)
    np.testing.assert_allclose(est.V_j, full.V_j, rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(est.T_j, full.T_j, rtol=1e-12)
    assert mfmc_mean(table, plan) == pytest.approx(full.E_hat, rel=1e-12)
    assert mfmc_variance(table, plan) == pytest.approx(full.V_hat, rel=1e-12)
    assert len(est.terms["levels"]) == 2 and est.terms["levels"][1]["m_lo"] == 32


def test_eval_table_validation():
    with pytest.raises(DomainError):
        EvalTable(({"A": [1, 2], "B": [1, 2]}, {"A": [1], "B": [1]}), [1, 1])
    with pytest.raises(DomainError):
        EvalTable(({"A": [1, 2]},), [1])
    with pytest.raises(DomainError):
        EvalTable(({"A": [1, 2], "B": [1, 2]},), [0])


def test_pilot_statistics_identical_models():
    y = np.linspace(0, 1, 20) ** 2
    st = pilot_statistics([y, y])
    np.testing.assert_allclose(st.rho, 1.0)
    np.testing.assert_allclose(st.q, 1.0)
    with pytest.raises(DegenerateStatisticsError):
        pilot_statistics([y, np.ones(20)])
    with pytest.raises(DomainError):
        pilot_statistics([y[:3]])


def test_allocation_hand_values():
    # two models, rho^2 = 0.81, w = (1, 0.01): r_2 = sqrt(0.81 / (0.01 * 0.19))
    st = PilotStatistics.from_moments(sigma=[1.0, 2.0], rho=[1.0, 0.9])
    r = allocation_ratios(st, [1.0, 0.01])
    assert r[1] == pytest.approx(np.sqrt(0.81 / 0.0019))
    plan = optimal_allocation(st, [1.0, 0.01], 1000, 3)
    p_eff = 200.0
    expected = np.floor(p_eff * r / (1.0 + 0.01 * r[1]))
    np.testing.assert_array_equal(plan.m, expected)
    np.testing.assert_allclose(plan.alpha, [1.0, 0.45])
    np.testing.assert_allclose(control_weights(st), [1.0, 0.45])
    assert plan.cost <= 1000 + 1e-9
    assert budget_for([1.0, 0.01], plan.m, 3) == pytest.approx(plan.cost)


def test_allocation_errors():
    st = PilotStatistics.from_moments(sigma=[1, 1, 1], rho=[1.0, 0.9, 0.95])
    chk = check_cost_ratio(st, [1.0, 0.1, 0.01])
    assert not chk.admissible
    assert chk.violations[0]["k"] == 2 and chk.violations[0]["kind"] == "ordering"
    with pytest.raises(AllocationError) as info:
        optimal_allocation(st, [1.0, 0.1, 0.01], 1000, 3)
    assert info.value.violations
    ok = PilotStatistics.from_moments(sigma=[1, 1], rho=[1.0, 0.99])
    with pytest.raises(BudgetTooSmallError):
        optimal_allocation(ok, [1.0, 0.3], 10, 3)


def test_cost_ratio_condition_strict():
    # equality of w1/w2 with the correlation ratio is not admissible
    rho = np.array([1.0, 0.5])
    rhs = (1.0 - 0.25) / (0.25 - 0.0)
    assert not check_cost_ratio(rho, [rhs, 1.0]).admissible
    assert check_cost_ratio(rho, [rhs * 1.001, 1.0]).admissible


def test_analytic_variance_k1_gaussian():
    st = PilotStatistics.from_moments(sigma=[1.7], rho=[1.0])
    for m in (4, 10, 317):
        plan = AllocationPlan(np.array([m]), np.ones(1), np.ones(1), 0.0, 0.0, np.ones(1), 3)
        assert analytic_estimator_variance(st, plan) == pytest.approx(2 * 1.7**4 / (m - 1), rel=1e-14)
    with pytest.raises(DomainError):
        analytic_estimator_variance(st, plan, m=[3])


def test_analytic_variance_decreases_with_budget():
    st = PilotStatistics.from_moments(sigma=[1.8, 1.84], rho=[1.0, 0.99])
    v = [analytic_estimator_variance(st, optimal_allocation(st, [1, 0.3], p, 3)) for p in (500, 1000, 2000)]
    assert v[0] > v[1] > v[2]


def test_discrepancy_recovers_linear_trend(rng):
    sp = analytic_space("linear_additive", 3)
    S = rng.random((50, 3))
    y_lf = linear_additive(S)
    trend = np.array([0.3, -0.2, 0.1])
    U = 2 * S - 1
    y_hf = y_lf + 5.0 + U @ trend
    np.testing.assert_allclose(fit_discrepancy(y_hf, y_lf, S, sp.lower, sp.upper), trend, atol=1e-12)
    pert = perturb_lowfid(y_hf, y_lf, S, 1.0, S, y_lf, sp.lower, sp.upper)
    np.testing.assert_allclose(pert, y_lf - U @ trend, atol=1e-12)
    np.testing.assert_array_equal(perturb_lowfid(y_hf, y_lf, S, 0.0, S, y_lf, sp.lower, sp.upper), y_lf)


def test_discrepancy_rank_deficient():
    S = np.tile([[0.5, 0.5, 0.5]], (10, 1))
    with pytest.raises(LeastSquaresError):
        fit_discrepancy(np.arange(10.0), np.zeros(10), S, np.zeros(3), np.ones(3))


def test_plan_roundtrip():
    st = PilotStatistics.from_moments(sigma=[1.0, 1.1], rho=[1.0, 0.95])
    plan = optimal_allocation(st, [1, 0.3], 500, 3)
    back = AllocationPlan.from_dict(plan.to_dict())
    np.testing.assert_array_equal(back.m, plan.m)
    assert PilotStatistics.from_dict(st.to_dict()).rho.tolist() == st.rho.tolist()
