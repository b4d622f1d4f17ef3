"""Forward models: 1D pulse-wave and 0D lumped carotid solvers plus analytic test functions."""

from ._backend import BACKEND, get_kernels
from .analytic import analytic_model, ishigami, ishigami_indices
from .physics import MMHG, HemoConfig, rc_parameters, tube_compliance, tube_law, wk3_outlet_step
from .qoi import QOI_NAMES, QoiVector, StationTrace, extract_qoi
from .solvers import cfl_number, qoi_0d, qoi_1d, simulate_0d, simulate_1d
from .waveform import InflowWaveform, carotid_waveform

__all__ = [
    "BACKEND", "MMHG", "QOI_NAMES", "HemoConfig", "InflowWaveform", "QoiVector",
    "StationTrace", "analytic_model", "carotid_waveform", "cfl_number", "extract_qoi",
    "get_kernels", "ishigami", "ishigami_indices", "qoi_0d", "qoi_1d", "rc_parameters",
    "simulate_0d", "simulate_1d", "tube_compliance", "tube_law", "wk3_outlet_step",
]
