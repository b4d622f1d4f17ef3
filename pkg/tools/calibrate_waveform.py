"""Calibrate the default carotid inflow waveform.

A smooth common-carotid template (systolic peak, late-systolic shoulder,
dicrotic wave, flat diastole) is projected onto a few Fourier harmonics. Its
mean flow and pulsatile amplitude are then solved for so the 1D model at the
mean inputs hits the target systolic and pulse pressures. Prints the
coefficients to paste into ``mfsobol/models/waveform.py``.
"""

import argparse

import numpy as np
from scipy.optimize import least_squares

from mfsobol.models import MMHG, HemoConfig, qoi_1d
from mfsobol.models.waveform import InflowWaveform
from mfsobol.sampling import carotid_space


def template(t):
    g = lambda c, w: np.exp(-0.5 * ((t - c) / w) ** 2)
    return 1.0 * g(0.13, 0.03) + 0.3 * g(0.26, 0.06) + 0.18 * g(0.45, 0.05)


def harmonics(n_harm, samples=4096):
    t = np.arange(samples) / samples
    f = template(t)
    f = f - f.mean()
    spec = np.fft.rfft(f) / samples
    cos = 2.0 * spec.real[1:n_harm + 1]
    sin = -2.0 * spec.imag[1:n_harm + 1]
    return cos, sin


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--psys", type=float, default=129.7, help="target systolic pressure [mmHg]")
    ap.add_argument("--pp", type=float, default=51.1, help="target pulse pressure [mmHg]")
    ap.add_argument("--harmonics", type=int, default=10)
    args = ap.parse_args()

    cfg = HemoConfig()
    z = carotid_space().mean
    cos0, sin0 = harmonics(args.harmonics)

    def build(x):
        mean, amp = x
        return InflowWaveform.fourier(mean * 1e-6, amp * 1e-6 * cos0, amp * 1e-6 * sin0)

    def resid(x):
        q = qoi_1d(z, cfg, build(x))[0]
        return [q[0] / MMHG - args.psys, q[1] / MMHG - args.pp]

    sol = least_squares(resid, x0=[6.5, 30.0], xtol=1e-14, ftol=1e-14)
    mean, amp = sol.x
    wf = build(sol.x)
    q = qoi_1d(z, cfg, wf)[0]
    print(f"# P_sys {q[0] / MMHG:.4f} mmHg  PP {q[1] / MMHG:.4f} mmHg  dr_max {q[2] * 1e3:.5f} mm")
    print(f"# mean {wf.mean * 1e6:.4f} ml/s  peak {wf.peak * 1e6:.4f} ml/s  min {wf.Q.min() * 1e6:.4f} ml/s")
    print(f"CAROTID_MEAN = {mean * 1e-6!r}")
    print("CAROTID_COS = (" + ", ".join(repr(float(v)) for v in amp * 1e-6 * cos0) + ")")
    print("CAROTID_SIN = (" + ", ".join(repr(float(v)) for v in amp * 1e-6 * sin0) + ")")


if __name__ == "__main__":
    main()
