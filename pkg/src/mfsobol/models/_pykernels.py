"""Pure numpy time-stepping kernels, vectorised over a batch of input points.

These are the reference implementations; ``_ckernels.pyx`` mirrors them loop
for loop. Newton updates are masked per sample, so the result for one point
does not depend on the other points in its batch.

Status codes: 0 ok, 1 non-finite state, 2 CFL violation, 3 non-positive area,
4 Newton failure.
"""

import numpy as np

OK, NONFINITE, CFL, NEGATIVE_AREA, NEWTON = 0, 1, 2, 3, 4

MAX_NEWTON_0D = 20
MAX_NEWTON_BC = 50
BC_RTOL = 1e-13


def _fail(status, step, mask, code, i):
    new = mask & (status == OK)
    status[new] = code
    step[new] = i


def zerod_run(r, E, h, q, n_cycles, dt, eta, L, Rp, Cwk, Rd, p_out, P_dia, rho_inf, tol, record=False):
    """Two-unit RC chain with a three-element Windkessel, generalised-alpha in time.

    States are the pressures at the mid node, the distal node and the
    Windkessel capacitor. Returns ``(qoi, status, fail_step, P_rec, Q_rec)``.
    """
    r = np.asarray(r, dtype=float)
    E = np.asarray(E, dtype=float)
    h = np.asarray(h, dtype=float)
    q = np.asarray(q, dtype=float)
    n = r.shape[0]
    n_per = q.shape[0]
    total = n_cycles * n_per
    start = (n_cycles - 1) * n_per

    R = 8.0 * eta * L / (np.pi * r**4)
    C = 3.0 * L * np.pi * r**3 / (2.0 * E * h)
    g2 = 2.0 / R
    gp = 1.0 / Rp
    gd = 1.0 / Rd
    m1 = 0.5 * C
    m2 = 0.5 * C
    m3 = Cwk

    am = (3.0 - rho_inf) / (2.0 * (1.0 + rho_inf))
    af = 1.0 / (1.0 + rho_inf)
    gm = 0.5 + am - af
    s = af * gm * dt

    # K = [[g2, -g2, 0], [-g2, g2+gp, -gp], [0, -gp, gp+gd]]
    k11, k12 = g2, -g2
    k22, k23 = g2 + gp, -gp
    k33 = gp + gd
    j11 = am * m1 + s * k11
    j12 = s * k12
    j22 = am * m2 + s * k22
    j23 = s * k23
    j33 = am * m3 + s * k33
    adt = af * dt * (1.0 - gm)
    # symmetric tridiagonal inverse by cofactors
    det = j11 * (j22 * j33 - j23 * j23) - j12 * j12 * j33
    i11 = (j22 * j33 - j23 * j23) / det
    i12 = -j12 * j33 / det
    i13 = j12 * j23 / det
    i22 = j11 * j33 / det
    i23 = -j11 * j23 / det
    i33 = (j11 * j22 - j12 * j12) / det

    scale = max(float(np.max(np.abs(q))), P_dia / Rd)
    tol_abs = tol * scale
    b3 = gd * p_out

    y1 = np.full(n, P_dia)
    y2 = np.full(n, P_dia)
    y3 = np.full(n, P_dia)
    v1 = (q[0] - (k11 * y1 + k12 * y2)) / m1
    v2 = (-(k12 * y1 + k22 * y2 + k23 * y3)) / m2
    v3 = (b3 - (k23 * y2 + k33 * y3)) / m3

    status = np.zeros(n, dtype=np.int64)
    fail_step = np.full(n, -1, dtype=np.int64)
    pmax = np.full(n, -np.inf)
    pmin = np.full(n, np.inf)
    P_rec = np.empty((n, n_per)) if record else np.empty((n, 0))
    Q_rec = np.empty((n, n_per)) if record else np.empty((n, 0))

    with np.errstate(all="ignore"):
        for i in range(total):
            if i >= start:
                pmax = np.maximum(pmax, y1)
                pmin = np.minimum(pmin, y1)
                if record:
                    P_rec[:, i - start] = y1
                    Q_rec[:, i - start] = (y1 - y2) * g2
            bq = (1.0 - af) * q[i % n_per] + af * q[(i + 1) % n_per]
            # residual is affine in the new rates w: r(w) = r0 + J w
            a1 = y1 + adt * v1
            a2 = y2 + adt * v2
            a3 = y3 + adt * v3
            r01 = (1.0 - am) * m1 * v1 + k11 * a1 + k12 * a2 - bq
            r02 = (1.0 - am) * m2 * v2 + k12 * a1 + k22 * a2 + k23 * a3
            r03 = (1.0 - am) * m3 * v3 + k23 * a2 + k33 * a3 - b3
            w1, w2, w3 = v1.copy(), v2.copy(), v3.copy()
            active = np.ones(n, dtype=bool)
            for _ in range(MAX_NEWTON_0D + 1):
                r1 = r01 + j11 * w1 + j12 * w2
                r2 = r02 + j12 * w1 + j22 * w2 + j23 * w3
                r3 = r03 + j23 * w2 + j33 * w3
                res = np.maximum(np.maximum(np.abs(r1), np.abs(r2)), np.abs(r3))
                active &= ~(res <= tol_abs)
                if not active.any():
                    break
                w1 = np.where(active, w1 - (i11 * r1 + i12 * r2 + i13 * r3), w1)
                w2 = np.where(active, w2 - (i12 * r1 + i22 * r2 + i23 * r3), w2)
                w3 = np.where(active, w3 - (i13 * r1 + i23 * r2 + i33 * r3), w3)
            if active.any():
                _fail(status, fail_step, active, NEWTON, i)
            y1 = y1 + dt * ((1.0 - gm) * v1 + gm * w1)
            y2 = y2 + dt * ((1.0 - gm) * v2 + gm * w2)
            y3 = y3 + dt * ((1.0 - gm) * v3 + gm * w3)
            v1, v2, v3 = w1, w2, w3
            bad = ~(np.isfinite(y1) & np.isfinite(y2) & np.isfinite(y3))
            if bad.any():
                _fail(status, fail_step, bad, NONFINITE, i)

    pp = pmax - pmin
    qoi = np.column_stack([pmax, pp, 3.0 * r**2 / (4.0 * E * h) * pp])
    return qoi, status, fail_step, P_rec, Q_rec


def oned_run(r, E, h, q, n_cycles, dt, nodes, rho_f, eta, nu, zeta, L, Rp, Cwk, Rd, p_out, P_dia, record=False):
    """MacCormack scheme for the (A, u) conservation laws on a uniform grid.

    Inlet: prescribed flow, area from the outgoing Riemann invariant.
    Outlet: three-element Windkessel coupled through the tube law and the
    outgoing Riemann invariant. Returns ``(qoi, status, fail_step, fail_node,
    P_rec, Q_rec, r_rec)`` at the mid-span station.
    """
    r = np.asarray(r, dtype=float)
    E = np.asarray(E, dtype=float)
    h = np.asarray(h, dtype=float)
    q = np.asarray(q, dtype=float)
    n = r.shape[0]
    N = int(nodes)
    n_per = q.shape[0]
    total = n_cycles * n_per
    start = (n_cycles - 1) * n_per

    dz = L / (N - 1)
    lam = dt / dz
    A0 = np.pi * r**2
    sA0 = np.sqrt(A0)
    beta = np.sqrt(np.pi) * E * h / (1.0 - nu * nu)
    bA = beta / A0
    kc = np.sqrt(beta / (2.0 * rho_f * A0))
    fric = -2.0 * (zeta + 2.0) * np.pi * eta / rho_f
    inv_rho = 1.0 / rho_f
    a_wk = 1.0 / (Cwk / dt + 0.5 / Rd)
    c_wk = Cwk / dt - 0.5 / Rd
    z_out = Rp + 0.5 * a_wk

    if N % 2 == 1:
        mid_lo = mid_hi = (N - 1) // 2
    else:
        mid_lo, mid_hi = N // 2 - 1, N // 2

    A = np.repeat(A0[:, None], N, axis=1)
    u = np.zeros((n, N))
    Pc = np.full(n, P_dia)
    An = np.empty_like(A)
    un = np.empty_like(u)

    status = np.zeros(n, dtype=np.int64)
    fail_step = np.full(n, -1, dtype=np.int64)
    fail_node = np.full(n, -1, dtype=np.int64)
    pmax = np.full(n, -np.inf)
    pmin = np.full(n, np.inf)
    rmax = np.full(n, -np.inf)
    rmin = np.full(n, np.inf)
    shape = (n, n_per) if record else (n, 0)
    P_rec, Q_rec, r_rec = np.empty(shape), np.empty(shape), np.empty(shape)
    kcol = kc[:, None]
    bAcol = bA[:, None]
    sA0col = sA0[:, None]

    with np.errstate(all="ignore"):
        for i in range(total):
            sq = np.sqrt(A)
            c = kcol * np.sqrt(sq)
            P = P_dia + bAcol * (sq - sA0col)
            if i >= start:
                Pm = 0.5 * (P[:, mid_lo] + P[:, mid_hi])
                rm = 0.5 * (np.sqrt(A[:, mid_lo] / np.pi) + np.sqrt(A[:, mid_hi] / np.pi))
                pmax = np.maximum(pmax, Pm)
                pmin = np.minimum(pmin, Pm)
                rmax = np.maximum(rmax, rm)
                rmin = np.minimum(rmin, rm)
                if record:
                    P_rec[:, i - start] = Pm
                    Q_rec[:, i - start] = 0.5 * (A[:, mid_lo] * u[:, mid_lo] + A[:, mid_hi] * u[:, mid_hi])
                    r_rec[:, i - start] = rm

            cfl = (np.abs(u) + c) * lam
            viol = cfl > 1.0
            if viol.any():
                rows = viol.any(axis=1) & (status == OK)
                fail_node[rows] = np.argmax(viol[rows], axis=1)
                _fail(status, fail_step, rows, CFL, i)

            F1 = A * u
            F2 = 0.5 * u * u + P * inv_rho
            S = fric * u / A
            As = A[:, :-1] - lam * (F1[:, 1:] - F1[:, :-1])
            us = u[:, :-1] - lam * (F2[:, 1:] - F2[:, :-1]) + dt * S[:, :-1]
            sqs = np.sqrt(As)
            Ps = P_dia + bAcol * (sqs - sA0col)
            F1s = As * us
            F2s = 0.5 * us * us + Ps * inv_rho
            Ss = fric * us / As
            An[:, 1:-1] = 0.5 * (A[:, 1:-1] + As[:, 1:] - lam * (F1s[:, 1:] - F1s[:, :-1]))
            un[:, 1:-1] = 0.5 * (u[:, 1:-1] + us[:, 1:] - lam * (F2s[:, 1:] - F2s[:, :-1]) + dt * Ss[:, 1:])

            # inlet: outgoing invariant W2 = u - 4c traced back from the interior
            q_new = q[(i + 1) % n_per]
            w_0 = u[:, 0] - 4.0 * c[:, 0]
            w_1 = u[:, 1] - 4.0 * c[:, 1]
            xf = (c[:, 0] - u[:, 0]) * lam
            W2 = w_0 + xf * (w_1 - w_0)
            a = A[:, 0].copy()
            active = np.ones(n, dtype=bool)
            for _ in range(MAX_NEWTON_BC):
                a4 = kc * np.sqrt(np.sqrt(a))
                f = a * (W2 + 4.0 * a4) - q_new
                df = W2 + 5.0 * a4
                delta = f / df
                a = np.where(active, a - delta, a)
                active &= ~(np.abs(delta) <= BC_RTOL * np.abs(a))
                if not active.any():
                    break
            if active.any():
                _fail(status, fail_step, active, NEWTON, i)
                fail_node[active & (fail_node < 0)] = 0
            An[:, 0] = a
            un[:, 0] = W2 + 4.0 * kc * np.sqrt(np.sqrt(a))

            # outlet: outgoing invariant W1 = u + 4c, Windkessel closes the system
            w_n = u[:, -1] + 4.0 * c[:, -1]
            w_m = u[:, -2] + 4.0 * c[:, -2]
            xf = (u[:, -1] + c[:, -1]) * lam
            W1 = w_n - xf * (w_n - w_m)
            Q_old = A[:, -1] * u[:, -1]
            G = a_wk * (c_wk * Pc + 0.5 * Q_old + p_out / Rd)
            a = A[:, -1].copy()
            active = np.ones(n, dtype=bool)
            for _ in range(MAX_NEWTON_BC):
                sa = np.sqrt(a)
                a4 = kc * np.sqrt(sa)
                g = P_dia + bA * (sa - sA0) - G - z_out * a * (W1 - 4.0 * a4)
                dg = 0.5 * bA / sa - z_out * (W1 - 5.0 * a4)
                delta = g / dg
                a = np.where(active, a - delta, a)
                active &= ~(np.abs(delta) <= BC_RTOL * np.abs(a))
                if not active.any():
                    break
            if active.any():
                _fail(status, fail_step, active, NEWTON, i)
                fail_node[active & (fail_node < 0)] = N - 1
            An[:, -1] = a
            un[:, -1] = W1 - 4.0 * kc * np.sqrt(np.sqrt(a))
            Pc = G + 0.5 * a_wk * (a * un[:, -1])

            A, An = An, A
            u, un = un, u

            bad_area = (A <= 0.0).any(axis=1)
            if bad_area.any():
                rows = bad_area & (status == OK)
                fail_node[rows] = np.argmax(A[rows] <= 0.0, axis=1)
                _fail(status, fail_step, rows, NEGATIVE_AREA, i)
            bad = ~(np.isfinite(A).all(axis=1) & np.isfinite(u).all(axis=1))
            if bad.any():
                _fail(status, fail_step, bad, NONFINITE, i)

    qoi = np.column_stack([pmax, pmax - pmin, rmax - rmin])
    return qoi, status, fail_step, fail_node, P_rec, Q_rec, r_rec
