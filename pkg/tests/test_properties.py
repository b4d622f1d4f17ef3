import numpy as np
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from mfsobol.campaign.validation import error_metrics
from mfsobol.estimators import (
    AllocationPlan,
    EvalTable,
    PilotStatistics,
    analytic_estimator_variance,
    check_cost_ratio,
    mc_sobol,
    mfmc_sobol,
    optimal_allocation,
    owen_tj,
    perturb_lowfid,
    pilot_statistics,
)
from mfsobol.models.qoi import StationTrace
from mfsobol.pce import PcBasis, expected_count
from mfsobol.sampling import carotid_space, sobol_points

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


@settings(max_examples=50, deadline=None)
@given(d=st.integers(1, 5), n=st.integers(1, 64), skip=st.integers(0, 100))
def test_sobol_points_in_unit_cube_and_prefix_stable(d, n, skip):
    P = sobol_points(d, n, skip)
    assert P.shape == (n, d) and np.all((P >= 0) & (P < 1))
    np.testing.assert_array_equal(P[: n // 2], sobol_points(d, max(n // 2, 1), skip)[: n // 2])


@settings(max_examples=50, deadline=None)
@given(arrays(float, st.tuples(st.integers(2, 30)), elements=finite),
       arrays(float, st.tuples(st.integers(2, 30)), elements=finite))
def test_owen_tj_nonnegative(a, b):
    n = min(a.shape[0], b.shape[0])
    assert owen_tj(a[:n], b[:n]) >= 0


@settings(max_examples=40, deadline=None)
@given(st.integers(4, 40), st.floats(-50, 50), st.floats(0.1, 10), st.integers(0, 2**32 - 1))
def test_indices_invariant_to_affine_output_maps(n, shift, scale, seed):
    rng = np.random.default_rng(seed)
    vals = {t: rng.normal(size=n) for t in ("A", "B", "C1", "C2")}
    vals["C1"] = 0.5 * vals["C1"] + 0.5 * vals["A"]
    base = mc_sobol(vals)
    moved = mc_sobol({t: shift + scale * v for t, v in vals.items()})
    assume(not base.degenerate)
    np.testing.assert_allclose(moved.ST, base.ST, rtol=1e-6, atol=1e-9)
    assert moved.V_hat == np.float64(moved.V_hat)
    np.testing.assert_allclose(moved.V_hat, scale**2 * base.V_hat, rtol=1e-9)


@settings(max_examples=60, deadline=None)
@given(
    rho=st.lists(st.floats(0.5, 0.9999), min_size=1, max_size=3, unique=True),
    w_ratio=st.lists(st.floats(2.0, 1e4), min_size=3, max_size=3),
    p=st.floats(100, 1e5),
)
def test_allocation_nested_and_within_budget(rho, w_ratio, p):
    rho = [1.0] + sorted(rho, reverse=True)
    K = len(rho)
    w = np.cumprod([1.0] + w_ratio[: K - 1]) ** -1
    stats = PilotStatistics.from_moments(sigma=np.ones(K), rho=rho)
    assume(check_cost_ratio(stats, w).admissible)
    try:
        plan = optimal_allocation(stats, w, p, 3)
    except Exception:
        assume(False)
    assert np.all(np.diff(plan.m) >= 0)
    assert plan.m[0] >= 2
    assert plan.cost <= p * (1 + 1e-9) + (3 + 2) * float(np.sum(w)) * K


@settings(max_examples=40, deadline=None)
@given(st.integers(10, 60), st.floats(0.05, 3.0), st.floats(0.0, 2.0), st.integers(0, 2**32 - 1))
def test_perturbation_identity_and_correlation_drop(n, amp, phi, seed):
    rng = np.random.default_rng(seed)
    sp = carotid_space()
    S = sp.scale(rng.random((n, 3)))
    u = sp.normalize(S)
    uc = u - u.mean(axis=0)
    a = np.array([3.0, 1.0, 1.0])
    y_hf = u @ a
    # discrepancy direction with zero sample covariance against the HF response
    b = np.array([1.0, -0.5, 0.2])
    b = b - (uc @ b) @ (uc @ a) / ((uc @ a) @ (uc @ a)) * a
    assume(np.std(uc @ b) > 1e-6)
    y_lf = y_hf + amp * (u @ b) + 0.01 * rng.normal(size=n)
    pert = perturb_lowfid(y_hf, y_lf, S, phi, S, y_lf, sp.lower, sp.upper)
    # the perturbation only subtracts phi times the fitted linear trend
    resid = np.linalg.lstsq(np.column_stack([np.ones(n), u]), pert - y_lf, rcond=None)[1]
    assert resid.size == 0 or resid[0] < 1e-18 * max(1.0, np.sum((pert - y_lf) ** 2))
    rho0 = pilot_statistics([y_hf, y_lf]).rho[1]
    rho1 = pilot_statistics([y_hf, perturb_lowfid(y_hf, y_lf, S, 1.0, S, y_lf, sp.lower, sp.upper)]).rho[1]
    assert rho1 < rho0


@settings(max_examples=30, deadline=None)
@given(st.integers(4, 30), st.integers(0, 2**32 - 1))
def test_mfmc_k1_equals_mc(n, seed):
    rng = np.random.default_rng(seed)
    vals = {t: rng.normal(size=n) for t in ("A", "B", "C1", "C2", "C3")}
    table = EvalTable((vals,), [1.0])
    plan = AllocationPlan(np.array([n]), np.ones(1), np.ones(1), 0.0, 0.0, np.ones(1), 3)
    a, b = mfmc_sobol(table, plan), mc_sobol(vals)
    assert np.array_equal(a.S, b.S) and np.array_equal(a.ST, b.ST) and a.V_hat == b.V_hat


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 5), st.integers(0, 6))
def test_pc_basis_count(d, order):
    assert PcBasis.total_degree(d, order).count == expected_count(d, order)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.9, 1.1), st.integers(20, 200))
def test_error_metrics_identity_and_pressure_scaling(scale, n):
    t = np.linspace(0, 1, n)
    P = 1e4 + 2e3 * np.sin(2 * np.pi * t) ** 2
    tr = StationTrace(t, P, 1e-6 * np.cos(2 * np.pi * t), 3e-3 + 1e-5 * np.sin(2 * np.pi * t), 3e-3, 1.0)
    zero = error_metrics(tr, tr)
    assert all(v == 0.0 for v in zero.values())
    scaled = StationTrace(t, scale * P, tr.Q, tr.r, tr.r_dia, 1.0)
    # sum |P - s P| / sum P = |1 - s| exactly
    np.testing.assert_allclose(error_metrics(tr, scaled)["avg_P"], abs(1 - scale), rtol=1e-9, atol=1e-15)


@given(st.integers(6, 80), st.floats(0.0, 1.0), st.floats(0.2, 5.0), st.floats(0.3, 3.0),
       st.integers(4, 50), st.integers(0, 500), st.integers(0, 2**32 - 1))
def test_analytic_variance_nonnegative_for_sample_moments(n, noise, scale, alpha, m1, extra, seed):
    rng = np.random.default_rng(seed)
    hi = rng.standard_normal(n) + 0.3 * rng.standard_normal(n) ** 2
    lo = scale * hi + noise * rng.standard_normal(n)
    assume(np.ptp(lo) > 0)
    stats = pilot_statistics([hi, lo])
    plan = AllocationPlan(np.array([m1, m1 + extra]), np.array([1.0, alpha]), np.ones(2), 0.0, 0.0,
                          np.array([1.0, 0.1]), 3)
    assert analytic_estimator_variance(stats, plan) >= 0.0
