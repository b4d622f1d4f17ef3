# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled time-stepping kernels. Same algorithms and return layout as
``_pykernels``; loops run per sample so a failing point stops early."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, isfinite, INFINITY, M_PI
from libc.stdlib cimport malloc, free

cnp.import_array()

cdef enum:
    OK = 0
    NONFINITE = 1
    CFL = 2
    NEGATIVE_AREA = 3
    NEWTON = 4
    MAX_NEWTON_0D = 20
    MAX_NEWTON_BC = 50

cdef double BC_RTOL = 1e-13


def zerod_run(r, E, h, q, int n_cycles, double dt, double eta, double L, double Rp,
              double Cwk, double Rd, double p_out, double P_dia, double rho_inf,
              double tol, bint record=False):
    cdef const double[::1] rv = np.ascontiguousarray(r, dtype=np.float64)
    cdef const double[::1] Ev = np.ascontiguousarray(E, dtype=np.float64)
    cdef const double[::1] hv = np.ascontiguousarray(h, dtype=np.float64)
    cdef const double[::1] qv = np.ascontiguousarray(q, dtype=np.float64)
    cdef Py_ssize_t n = rv.shape[0], n_per = qv.shape[0]
    cdef Py_ssize_t total = n_cycles * n_per, start = (n_cycles - 1) * n_per
    cdef Py_ssize_t s, i, it, rec_n = n_per if record else 0

    qoi_a = np.empty((n, 3))
    status_a = np.zeros(n, dtype=np.int64)
    step_a = np.full(n, -1, dtype=np.int64)
    P_a = np.empty((n, rec_n))
    Q_a = np.empty((n, rec_n))
    cdef double[:, ::1] qoi = qoi_a
    cdef long long[::1] status = status_a
    cdef long long[::1] fstep = step_a
    cdef double[:, ::1] Prec = P_a
    cdef double[:, ::1] Qrec = Q_a

    cdef double am = (3.0 - rho_inf) / (2.0 * (1.0 + rho_inf))
    cdef double af = 1.0 / (1.0 + rho_inf)
    cdef double gm = 0.5 + am - af
    cdef double sdt = af * gm * dt
    cdef double adt = af * dt * (1.0 - gm)
    cdef double gp = 1.0 / Rp, gd = 1.0 / Rd, b3 = gd * p_out
    cdef double qmax = 0.0
    for i in range(n_per):
        if fabs(qv[i]) > qmax:
            qmax = fabs(qv[i])
    cdef double tol_abs = tol * (qmax if qmax > P_dia / Rd else P_dia / Rd)

    cdef double R, C, g2, m1, m2, m3, k11, k12, k22, k23, k33
    cdef double j11, j12, j22, j23, j33, det
    cdef double i11, i12, i13, i22, i23, i33
    cdef double y1, y2, y3, v1, v2, v3, w1, w2, w3, a1, a2, a3, r1, r2, r3, res, bq
    cdef double r01, r02, r03
    cdef Py_ssize_t icur, inext
    cdef double pmax, pmin, pp
    cdef bint conv

    for s in range(n):
        R = 8.0 * eta * L / (M_PI * rv[s] ** 4)
        C = 3.0 * L * M_PI * rv[s] ** 3 / (2.0 * Ev[s] * hv[s])
        g2 = 2.0 / R
        m1 = 0.5 * C
        m2 = 0.5 * C
        m3 = Cwk
        k11 = g2
        k12 = -g2
        k22 = g2 + gp
        k23 = -gp
        k33 = gp + gd
        j11 = am * m1 + sdt * k11
        j12 = sdt * k12
        j22 = am * m2 + sdt * k22
        j23 = sdt * k23
        j33 = am * m3 + sdt * k33
        # symmetric tridiagonal inverse by cofactors
        det = j11 * (j22 * j33 - j23 * j23) - j12 * j12 * j33
        i11 = (j22 * j33 - j23 * j23) / det
        i12 = -j12 * j33 / det
        i13 = j12 * j23 / det
        i22 = j11 * j33 / det
        i23 = -j11 * j23 / det
        i33 = (j11 * j22 - j12 * j12) / det

        y1 = P_dia
        y2 = P_dia
        y3 = P_dia
        v1 = (qv[0] - (k11 * y1 + k12 * y2)) / m1
        v2 = (-(k12 * y1 + k22 * y2 + k23 * y3)) / m2
        v3 = (b3 - (k23 * y2 + k33 * y3)) / m3
        pmax = -INFINITY
        pmin = INFINITY
        icur = 0

        for i in range(total):
            if i >= start:
                if y1 > pmax:
                    pmax = y1
                if y1 < pmin:
                    pmin = y1
                if record:
                    Prec[s, i - start] = y1
                    Qrec[s, i - start] = (y1 - y2) * g2
            inext = icur + 1
            if inext == n_per:
                inext = 0
            bq = (1.0 - af) * qv[icur] + af * qv[inext]
            icur = inext
            # residual is affine in the new rates w: r(w) = r0 + J w
            a1 = y1 + adt * v1
            a2 = y2 + adt * v2
            a3 = y3 + adt * v3
            r01 = (1.0 - am) * m1 * v1 + k11 * a1 + k12 * a2 - bq
            r02 = (1.0 - am) * m2 * v2 + k12 * a1 + k22 * a2 + k23 * a3
            r03 = (1.0 - am) * m3 * v3 + k23 * a2 + k33 * a3 - b3
            w1 = v1
            w2 = v2
            w3 = v3
            conv = False
            for it in range(MAX_NEWTON_0D + 1):
                r1 = r01 + j11 * w1 + j12 * w2
                r2 = r02 + j12 * w1 + j22 * w2 + j23 * w3
                r3 = r03 + j23 * w2 + j33 * w3
                res = fabs(r1)
                if fabs(r2) > res:
                    res = fabs(r2)
                if fabs(r3) > res:
                    res = fabs(r3)
                if res <= tol_abs:
                    conv = True
                    break
                w1 = w1 - (i11 * r1 + i12 * r2 + i13 * r3)
                w2 = w2 - (i12 * r1 + i22 * r2 + i23 * r3)
                w3 = w3 - (i13 * r1 + i23 * r2 + i33 * r3)
            if not conv:
                status[s] = NEWTON
                fstep[s] = i
                break
            y1 = y1 + dt * ((1.0 - gm) * v1 + gm * w1)
            y2 = y2 + dt * ((1.0 - gm) * v2 + gm * w2)
            y3 = y3 + dt * ((1.0 - gm) * v3 + gm * w3)
            v1 = w1
            v2 = w2
            v3 = w3
            if not (isfinite(y1) and isfinite(y2) and isfinite(y3)):
                status[s] = NONFINITE
                fstep[s] = i
                break

        pp = pmax - pmin
        qoi[s, 0] = pmax
        qoi[s, 1] = pp
        qoi[s, 2] = 3.0 * rv[s] * rv[s] / (4.0 * Ev[s] * hv[s]) * pp

    return qoi_a, status_a, step_a, P_a, Q_a


cdef inline double _qrt(double x) nogil:
    return sqrt(sqrt(x))


def oned_run(r, E, h, q, int n_cycles, double dt, int nodes, double rho_f, double eta,
             double nu, double zeta, double L, double Rp, double Cwk, double Rd,
             double p_out, double P_dia, bint record=False):
    cdef const double[::1] rv = np.ascontiguousarray(r, dtype=np.float64)
    cdef const double[::1] Ev = np.ascontiguousarray(E, dtype=np.float64)
    cdef const double[::1] hv = np.ascontiguousarray(h, dtype=np.float64)
    cdef const double[::1] qv = np.ascontiguousarray(q, dtype=np.float64)
    cdef Py_ssize_t n = rv.shape[0], n_per = qv.shape[0], N = nodes
    cdef Py_ssize_t total = n_cycles * n_per, start = (n_cycles - 1) * n_per
    cdef Py_ssize_t s, i, k, it, rec_n = n_per if record else 0
    cdef Py_ssize_t mid_lo, mid_hi
    if N % 2 == 1:
        mid_lo = (N - 1) // 2
        mid_hi = mid_lo
    else:
        mid_lo = N // 2 - 1
        mid_hi = N // 2

    qoi_a = np.empty((n, 3))
    status_a = np.zeros(n, dtype=np.int64)
    step_a = np.full(n, -1, dtype=np.int64)
    node_a = np.full(n, -1, dtype=np.int64)
    P_a = np.empty((n, rec_n))
    Q_a = np.empty((n, rec_n))
    r_a = np.empty((n, rec_n))
    cdef double[:, ::1] qoi = qoi_a
    cdef long long[::1] status = status_a
    cdef long long[::1] fstep = step_a
    cdef long long[::1] fnode = node_a
    cdef double[:, ::1] Prec = P_a
    cdef double[:, ::1] Qrec = Q_a
    cdef double[:, ::1] rrec = r_a

    cdef double dz = L / (N - 1)
    cdef double lam = dt / dz
    cdef double fric = -2.0 * (zeta + 2.0) * M_PI * eta / rho_f
    cdef double inv_rho = 1.0 / rho_f
    cdef double a_wk = 1.0 / (Cwk / dt + 0.5 / Rd)
    cdef double c_wk = Cwk / dt - 0.5 / Rd
    cdef double z_out = Rp + 0.5 * a_wk

    cdef double *buf = <double *> malloc(10 * N * sizeof(double))
    if buf == NULL:
        raise MemoryError()
    cdef double *A = buf
    cdef double *u = buf + N
    cdef double *An = buf + 2 * N
    cdef double *un = buf + 3 * N
    cdef double *c = buf + 4 * N
    cdef double *F1 = buf + 5 * N
    cdef double *F2 = buf + 6 * N
    cdef double *As = buf + 7 * N
    cdef double *us = buf + 8 * N
    cdef double *Fs = buf + 9 * N
    cdef double *tmp

    cdef double A0, sA0, beta, bA, kc, Pc, sq, P, Pm, rm, q_new
    cdef double w_0, w_1, xf, W, a, a4, sa, f, df, delta, G, Q_old
    cdef double pmax, pmin, rmax, rmin, F1s_prev, F2s_prev, F1s, F2s, Ps
    cdef bint conv, failed

    try:
        for s in range(n):
            A0 = M_PI * rv[s] * rv[s]
            sA0 = sqrt(A0)
            beta = sqrt(M_PI) * Ev[s] * hv[s] / (1.0 - nu * nu)
            bA = beta / A0
            kc = sqrt(beta / (2.0 * rho_f * A0))
            for k in range(N):
                A[k] = A0
                u[k] = 0.0
            Pc = P_dia
            pmax = -INFINITY
            pmin = INFINITY
            rmax = -INFINITY
            rmin = INFINITY
            failed = False

            for i in range(total):
                for k in range(N):
                    sq = sqrt(A[k])
                    c[k] = kc * sqrt(sq)
                    P = P_dia + bA * (sq - sA0)
                    F1[k] = A[k] * u[k]
                    F2[k] = 0.5 * u[k] * u[k] + P * inv_rho
                if i >= start:
                    Pm = 0.5 * ((P_dia + bA * (sqrt(A[mid_lo]) - sA0)) + (P_dia + bA * (sqrt(A[mid_hi]) - sA0)))
                    rm = 0.5 * (sqrt(A[mid_lo] / M_PI) + sqrt(A[mid_hi] / M_PI))
                    if Pm > pmax:
                        pmax = Pm
                    if Pm < pmin:
                        pmin = Pm
                    if rm > rmax:
                        rmax = rm
                    if rm < rmin:
                        rmin = rm
                    if record:
                        Prec[s, i - start] = Pm
                        Qrec[s, i - start] = 0.5 * (A[mid_lo] * u[mid_lo] + A[mid_hi] * u[mid_hi])
                        rrec[s, i - start] = rm
                for k in range(N):
                    if (fabs(u[k]) + c[k]) * lam > 1.0:
                        status[s] = CFL
                        fstep[s] = i
                        fnode[s] = k
                        failed = True
                        break
                if failed:
                    break

                # predictor (forward differences) on nodes 0..N-2
                for k in range(N - 1):
                    As[k] = A[k] - lam * (F1[k + 1] - F1[k])
                    us[k] = u[k] - lam * (F2[k + 1] - F2[k]) + dt * fric * u[k] / A[k]
                # corrector (backward differences) on interior nodes
                F1s_prev = As[0] * us[0]
                F2s_prev = 0.5 * us[0] * us[0] + (P_dia + bA * (sqrt(As[0]) - sA0)) * inv_rho
                for k in range(1, N - 1):
                    Ps = P_dia + bA * (sqrt(As[k]) - sA0)
                    F1s = As[k] * us[k]
                    F2s = 0.5 * us[k] * us[k] + Ps * inv_rho
                    An[k] = 0.5 * (A[k] + As[k] - lam * (F1s - F1s_prev))
                    un[k] = 0.5 * (u[k] + us[k] - lam * (F2s - F2s_prev) + dt * fric * us[k] / As[k])
                    F1s_prev = F1s
                    F2s_prev = F2s

                # inlet
                q_new = qv[(i + 1) % n_per]
                w_0 = u[0] - 4.0 * c[0]
                w_1 = u[1] - 4.0 * c[1]
                xf = (c[0] - u[0]) * lam
                W = w_0 + xf * (w_1 - w_0)
                a = A[0]
                conv = False
                for it in range(MAX_NEWTON_BC):
                    a4 = kc * _qrt(a)
                    f = a * (W + 4.0 * a4) - q_new
                    df = W + 5.0 * a4
                    delta = f / df
                    a = a - delta
                    if fabs(delta) <= BC_RTOL * fabs(a):
                        conv = True
                        break
                if not conv:
                    status[s] = NEWTON
                    fstep[s] = i
                    fnode[s] = 0
                    break
                An[0] = a
                un[0] = W + 4.0 * kc * _qrt(a)

                # outlet
                w_0 = u[N - 1] + 4.0 * c[N - 1]
                w_1 = u[N - 2] + 4.0 * c[N - 2]
                xf = (u[N - 1] + c[N - 1]) * lam
                W = w_0 - xf * (w_0 - w_1)
                Q_old = A[N - 1] * u[N - 1]
                G = a_wk * (c_wk * Pc + 0.5 * Q_old + p_out / Rd)
                a = A[N - 1]
                conv = False
                for it in range(MAX_NEWTON_BC):
                    sa = sqrt(a)
                    a4 = kc * sqrt(sa)
                    f = P_dia + bA * (sa - sA0) - G - z_out * a * (W - 4.0 * a4)
                    df = 0.5 * bA / sa - z_out * (W - 5.0 * a4)
                    delta = f / df
                    a = a - delta
                    if fabs(delta) <= BC_RTOL * fabs(a):
                        conv = True
                        break
                if not conv:
                    status[s] = NEWTON
                    fstep[s] = i
                    fnode[s] = N - 1
                    break
                An[N - 1] = a
                un[N - 1] = W - 4.0 * kc * _qrt(a)
                Pc = G + 0.5 * a_wk * (a * un[N - 1])

                tmp = A
                A = An
                An = tmp
                tmp = u
                u = un
                un = tmp

                for k in range(N):
                    if A[k] <= 0.0:
                        status[s] = NEGATIVE_AREA
                        fstep[s] = i
                        fnode[s] = k
                        failed = True
                        break
                    if not (isfinite(A[k]) and isfinite(u[k])):
                        status[s] = NONFINITE
                        fstep[s] = i
                        failed = True
                        break
                if failed:
                    break

            qoi[s, 0] = pmax
            qoi[s, 1] = pmax - pmin
            qoi[s, 2] = rmax - rmin
            # restore buffer order for the next sample
            A = buf
            u = buf + N
            An = buf + 2 * N
            un = buf + 3 * N
    finally:
        free(buf)

    return qoi_a, status_a, step_a, node_a, P_a, Q_a, r_a
