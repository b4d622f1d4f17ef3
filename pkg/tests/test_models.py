import math

import numpy as np
import pytest

from mfsobol.errors import DomainError, SolverError
from mfsobol.models import (
    MMHG,
    HemoConfig,
    InflowWaveform,
    carotid_waveform,
    cfl_number,
    extract_qoi,
    get_kernels,
    qoi_0d,
    qoi_1d,
    rc_parameters,
    simulate_0d,
    simulate_1d,
    tube_compliance,
    tube_law,
)
from mfsobol.models._backend import BACKEND
from mfsobol.models.physics import wk3_outlet_step
from mfsobol.sampling import carotid_space, sobol_points

Z_MEAN = np.array([3.29e-3, 440e3, 0.785e-3])


def test_rc_parameters_hand_values():
    # R = 8 eta L / (pi r^4), C = 3 L pi r^3 / (2 E h) evaluated by hand
    R, C = rc_parameters(*Z_MEAN, HemoConfig())
    assert R == pytest.approx(8e-3 * 0.126 / (math.pi * 3.29e-3**4), rel=1e-14)
    assert R == pytest.approx(2.7386e6, rel=1e-4)
    assert C == pytest.approx(6.1218e-11, rel=1e-4)
    with pytest.raises(DomainError):
        rc_parameters(-1.0, 1.0, 1.0, HemoConfig())


def test_tube_law_reference_and_compliance():
    A0 = math.pi * Z_MEAN[0] ** 2
    P_dia = HemoConfig().P_dia
    assert tube_law(A0, A0, P_dia, Z_MEAN[1], Z_MEAN[2], 0.49) == pytest.approx(P_dia)
    # compliance equals the derivative of the tube law
    A = 1.1 * A0
    eps = 1e-6 * A
    dPdA = (tube_law(A + eps, A0, P_dia, 440e3, 0.785e-3, 0.49) - tube_law(A - eps, A0, P_dia, 440e3, 0.785e-3, 0.49)) / (2 * eps)
    assert tube_compliance(A, A0, 440e3, 0.785e-3, 0.49) == pytest.approx(1 / dPdA, rel=1e-7)
    with pytest.raises(DomainError):
        tube_law(-1.0, A0, P_dia, 1.0, 1.0, 0.49)


def test_windkessel_steady_state():
    cfg = HemoConfig()
    q = 6e-6
    P = q * (cfg.Rp + cfg.Rd)
    assert wk3_outlet_step(P, q, 0.0, cfg) == pytest.approx(0.0, abs=1e-6)


def test_waveform_calibration_and_periodicity():
    wf = carotid_waveform()
    assert wf.period == 1.0
    assert wf.mean == pytest.approx(6.6489083458032575e-06, rel=1e-6)
    assert wf(0.25) == pytest.approx(wf(1.25))
    assert wf.peak > 2 * wf.mean


def test_waveform_file_roundtrip(tmp_path):
    wf = InflowWaveform.fourier(5e-6, [1e-6], [0.0])
    path = tmp_path / "q.txt"
    wf.to_file(path)
    back = InflowWaveform.from_file(path)
    t = np.linspace(0, 0.99, 17)
    np.testing.assert_allclose(back(t), wf(t), rtol=1e-9)


@pytest.mark.skipif(BACKEND != "c", reason="compiled kernels not built")
@pytest.mark.parametrize("fn", [qoi_0d, qoi_1d])
def test_backends_agree(fn):
    Z = carotid_space().scale(sobol_points(3, 4))
    a = fn(Z, backend="c")
    b = fn(Z, backend="python")
    np.testing.assert_allclose(a, b, rtol=1e-11)


def test_get_kernels_rejects_unknown():
    with pytest.raises(ValueError):
        get_kernels("fortran")


@pytest.mark.parametrize("fn", [qoi_0d, qoi_1d])
def test_batch_invariance(fn):
    Z = carotid_space().scale(sobol_points(3, 5))
    batch = fn(Z)
    single = np.vstack([fn(z) for z in Z])
    np.testing.assert_array_equal(batch, single)


def test_mean_input_qois_physiological():
    q1 = qoi_1d(Z_MEAN)[0]
    q0 = qoi_0d(Z_MEAN)[0]
    assert q1[0] / MMHG == pytest.approx(129.7, abs=0.2)
    assert q1[1] / MMHG == pytest.approx(51.1, abs=0.2)
    np.testing.assert_allclose(q0, q1, rtol=0.02)


@pytest.mark.parametrize("sim", [simulate_0d, simulate_1d])
def test_constant_inflow_steady_pressure(sim):
    # Poiseuille drop over half the vessel plus the Windkessel resistances
    cfg = HemoConfig(cycles_0d=40, cycles_1d=40)
    q = 6.6e-6
    R, _ = rc_parameters(*Z_MEAN, cfg)
    tr = sim(Z_MEAN, cfg, InflowWaveform.constant(q))
    expected = q * (cfg.Rp + cfg.Rd + R / 2)
    assert tr.P[-1] == pytest.approx(expected, rel=5e-4)
    assert np.ptp(tr.P) < 1e-6 * expected


@pytest.mark.parametrize("sim", [simulate_0d, simulate_1d])
def test_equilibrium_at_reference_pressure(sim):
    cfg = HemoConfig(p_out=HemoConfig().P_dia)
    tr = sim(Z_MEAN, cfg, InflowWaveform.constant(0.0))
    np.testing.assert_allclose(tr.P, cfg.P_dia, rtol=1e-9)
    np.testing.assert_allclose(tr.dr, 0.0, atol=1e-12)


def test_time_step_convergence():
    cfg = HemoConfig()
    coarse = qoi_1d(Z_MEAN, cfg)[0]
    fine = qoi_1d(Z_MEAN, cfg.with_(dt_1d=cfg.dt_1d / 2))[0]
    np.testing.assert_allclose(coarse[:2], fine[:2], rtol=1e-3)
    c0 = qoi_0d(Z_MEAN, cfg)[0]
    f0 = qoi_0d(Z_MEAN, cfg.with_(dt_0d=cfg.dt_0d / 2))[0]
    np.testing.assert_allclose(c0[:2], f0[:2], rtol=1e-3)


@pytest.mark.parametrize("fn", [qoi_0d, qoi_1d])
def test_pulse_pressure_decreases_with_radius(fn):
    r = np.linspace(2.96e-3, 3.62e-3, 6)
    Z = np.column_stack([r, np.full(6, 440e3), np.full(6, 0.785e-3)])
    pp = fn(Z)[:, 1]
    assert np.all(np.diff(pp) < 0)


def test_trace_qoi_consistency():
    tr = simulate_1d(Z_MEAN)
    np.testing.assert_allclose(extract_qoi(tr).as_array(), qoi_1d(Z_MEAN)[0], rtol=1e-12)
    tr0 = simulate_0d(Z_MEAN)
    np.testing.assert_allclose(extract_qoi(tr0).as_array(), qoi_0d(Z_MEAN)[0], rtol=1e-12)


def test_cfl_violation_raises_with_location():
    cfg = HemoConfig(nodes_1d=33)
    assert cfl_number(Z_MEAN, cfg) > 1
    with pytest.raises(SolverError) as info:
        qoi_1d(Z_MEAN, cfg)
    assert info.value.index == 0 and info.value.step is not None


def test_input_validation():
    with pytest.raises(DomainError):
        qoi_0d(np.ones((2, 2)))
    with pytest.raises(DomainError):
        qoi_1d([-1.0, 440e3, 1e-3])
    with pytest.raises(DomainError):
        simulate_0d(np.vstack([Z_MEAN, Z_MEAN]))
