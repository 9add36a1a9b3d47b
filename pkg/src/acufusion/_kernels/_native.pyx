# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: hot per-sample recursions of the toolkit.

Each function mirrors its pure-Python twin in _reference.py; keep the
arithmetic and operation order in the two files identical.
"""

import numpy as np

from libc.math cimport sqrt, sin, cos, fabs


cdef inline void _tissue_forces(double d, double v,
                                const double[::1] mu, const double[::1] eta,
                                const double[::1] top, const double[::1] bottom,
                                const double[::1] stiffness,
                                const double[::1] damping,
                                double* ft_out, double* ff_out) noexcept:
    cdef Py_ssize_t n_layers = mu.shape[0]
    cdef Py_ssize_t j, tip
    cdef double pen, ft, coulomb, viscous, hi, contact, sign
    if d <= 0.0 or n_layers == 0:
        ft_out[0] = 0.0
        ff_out[0] = 0.0
        return
    tip = n_layers - 1
    for j in range(n_layers):
        if d < bottom[j]:
            tip = j
            break
    pen = d - top[tip]
    if pen < 0.0:
        pen = 0.0
    ft = stiffness[tip] * pen + damping[tip] * v
    if ft < 0.0:
        ft = 0.0
    coulomb = 0.0
    viscous = 0.0
    for j in range(n_layers):
        hi = d if d < bottom[j] else bottom[j]
        if j == n_layers - 1 and d > bottom[j]:
            hi = d
        contact = hi - top[j]
        if contact <= 0.0:
            continue
        coulomb += mu[j] * (stiffness[j] * contact)
        viscous += eta[j] * contact
    sign = 1.0 if v > 0.0 else (-1.0 if v < 0.0 else 0.0)
    ft_out[0] = ft
    ff_out[0] = coulomb * sign + viscous * v


def lt_replay(const double[::1] fa, double m,
              const double[::1] mu, const double[::1] eta,
              const double[::1] top, const double[::1] bottom,
              const double[::1] stiffness, const double[::1] damping,
              double d0, double v0, double h):
    cdef Py_ssize_t n = fa.shape[0]
    a_np = np.empty(n)
    v_np = np.empty(n)
    d_np = np.empty(n)
    ft_np = np.empty(n)
    ff_np = np.empty(n)
    cdef double[::1] a = a_np
    cdef double[::1] v = v_np
    cdef double[::1] d = d_np
    cdef double[::1] fts = ft_np
    cdef double[::1] ffs = ff_np
    cdef double vi = v0
    cdef double di = d0
    cdef double ft, ff, ai
    cdef Py_ssize_t i
    for i in range(n):
        _tissue_forces(di, vi, mu, eta, top, bottom, stiffness, damping,
                       &ft, &ff)
        ai = (fa[i] - ft - ff) / m
        a[i] = ai
        v[i] = vi
        d[i] = di
        fts[i] = ft
        ffs[i] = ff
        vi = vi + h * ai
        di = di + h * vi
        if di < 0.0:
            di = 0.0
            if vi < 0.0:
                vi = 0.0
    return a_np, v_np, d_np, ft_np, ff_np


def lt_track(const double[::1] d_plan, double m,
             const double[::1] mu, const double[::1] eta,
             const double[::1] top, const double[::1] bottom,
             const double[::1] stiffness, const double[::1] damping,
             double h):
    cdef Py_ssize_t n = d_plan.shape[0]
    fa_np = np.empty(n)
    a_np = np.empty(n)
    v_np = np.empty(n)
    d_np = np.empty(n)
    ft_np = np.empty(n)
    ff_np = np.empty(n)
    cdef double[::1] fa = fa_np
    cdef double[::1] a = a_np
    cdef double[::1] v = v_np
    cdef double[::1] d = d_np
    cdef double[::1] fts = ft_np
    cdef double[::1] ffs = ff_np
    cdef double vi = 0.0
    cdef double di = d_plan[0]
    cdef double ft, ff, v_tgt, fai, ai
    cdef Py_ssize_t i
    for i in range(n):
        _tissue_forces(di, vi, mu, eta, top, bottom, stiffness, damping,
                       &ft, &ff)
        if i + 1 < n:
            v_tgt = (d_plan[i + 1] - d_plan[i]) / h
        else:
            v_tgt = 0.0
        fai = m * (v_tgt - vi) / h + ft + ff
        ai = (fai - ft - ff) / m
        fa[i] = fai
        a[i] = ai
        v[i] = vi
        d[i] = di
        fts[i] = ft
        ffs[i] = ff
        vi = vi + h * ai
        di = di + h * vi
        if di < 0.0:
            di = 0.0
            if vi < 0.0:
                vi = 0.0
    return fa_np, a_np, v_np, d_np, ft_np, ff_np


def rot_replay(const double[::1] ta, const double[::1] inertia,
               const double[::1] inv_inertia, const double[::1] w0,
               double coulomb, double viscous, double h):
    cdef Py_ssize_t n = ta.shape[0]
    w_np = np.empty((n, 3))
    tf_np = np.empty(n)
    cdef double[:, ::1] w = w_np
    cdef double[::1] tfs = tf_np
    cdef double wx = w0[0], wy = w0[1], wz = w0[2]
    cdef double sign, tf, iw0, iw1, iw2, cx, cy, cz, tx, ty, tz
    cdef double dwx, dwy, dwz
    cdef Py_ssize_t i
    for i in range(n):
        sign = 1.0 if wz > 0.0 else (-1.0 if wz < 0.0 else 0.0)
        tf = coulomb * sign + viscous * wz
        w[i, 0] = wx
        w[i, 1] = wy
        w[i, 2] = wz
        tfs[i] = tf
        iw0 = inertia[0] * wx + inertia[1] * wy + inertia[2] * wz
        iw1 = inertia[3] * wx + inertia[4] * wy + inertia[5] * wz
        iw2 = inertia[6] * wx + inertia[7] * wy + inertia[8] * wz
        cx = wy * iw2 - wz * iw1
        cy = wz * iw0 - wx * iw2
        cz = wx * iw1 - wy * iw0
        tx = -cx
        ty = -cy
        tz = (ta[i] - tf) - cz
        dwx = inv_inertia[0] * tx + inv_inertia[1] * ty + inv_inertia[2] * tz
        dwy = inv_inertia[3] * tx + inv_inertia[4] * ty + inv_inertia[5] * tz
        dwz = inv_inertia[6] * tx + inv_inertia[7] * ty + inv_inertia[8] * tz
        wx = wx + h * dwx
        wy = wy + h * dwy
        wz = wz + h * dwz
    return w_np, tf_np


def rot_track(const double[::1] w_plan, const double[::1] inertia,
              const double[::1] inv_inertia,
              double coulomb, double viscous, double h):
    cdef Py_ssize_t n = w_plan.shape[0]
    ta_np = np.empty(n)
    w_np = np.empty((n, 3))
    tf_np = np.empty(n)
    cdef double[::1] ta = ta_np
    cdef double[:, ::1] w = w_np
    cdef double[::1] tfs = tf_np
    cdef double wx = 0.0, wy = 0.0
    cdef double wz = w_plan[0]
    cdef double izz_inv = inv_inertia[8]
    cdef double sign, tf, w_tgt, iw0, iw1, iw2, czc, cross_term, tau_z, tai
    cdef double tx, ty, tz, cx, cy, cz, dwx, dwy, dwz
    cdef Py_ssize_t i
    for i in range(n):
        sign = 1.0 if wz > 0.0 else (-1.0 if wz < 0.0 else 0.0)
        tf = coulomb * sign + viscous * wz
        if i + 1 < n:
            w_tgt = w_plan[i + 1]
        else:
            w_tgt = w_plan[i]
        iw0 = inertia[0] * wx + inertia[1] * wy + inertia[2] * wz
        iw1 = inertia[3] * wx + inertia[4] * wy + inertia[5] * wz
        iw2 = inertia[6] * wx + inertia[7] * wy + inertia[8] * wz
        czc = wx * iw1 - wy * iw0
        cross_term = (inv_inertia[6] * (wy * iw2 - wz * iw1)
                      + inv_inertia[7] * (wz * iw0 - wx * iw2)
                      + inv_inertia[8] * czc)
        tau_z = ((w_tgt - wz) / h + cross_term) / izz_inv
        tai = tau_z + tf
        ta[i] = tai
        w[i, 0] = wx
        w[i, 1] = wy
        w[i, 2] = wz
        tfs[i] = tf
        # same derivative evaluation as rot_replay
        cx = wy * iw2 - wz * iw1
        cy = wz * iw0 - wx * iw2
        cz = wx * iw1 - wy * iw0
        tx = -cx
        ty = -cy
        tz = (tai - tf) - cz
        dwx = inv_inertia[0] * tx + inv_inertia[1] * ty + inv_inertia[2] * tz
        dwy = inv_inertia[3] * tx + inv_inertia[4] * ty + inv_inertia[5] * tz
        dwz = inv_inertia[6] * tx + inv_inertia[7] * ty + inv_inertia[8] * tz
        wx = wx + h * dwx
        wy = wy + h * dwy
        wz = wz + h * dwz
    return ta_np, w_np, tf_np


def mahony_batch(const double[:, ::1] gyro, const double[:, ::1] accel,
                 double h, double kp, double ki,
                 const double[::1] q0, const double[::1] b0,
                 double gate_frac, double g):
    cdef Py_ssize_t n = gyro.shape[0]
    q_np = np.empty((n, 4))
    b_np = np.empty((n, 3))
    cdef double[:, ::1] q_out = q_np
    cdef double[:, ::1] b_out = b_np
    cdef double qw = q0[0], qx = q0[1], qy = q0[2], qz = q0[3]
    cdef double bx = b0[0], by = b0[1], bz = b0[2]
    cdef double ax, ay, az, anorm, ex, ey, ez, vx, vy, vz, hx, hy, hz
    cdef double wx, wy, wz, theta, half, c, s, dw, dx, dy, dz
    cdef double nw, nx, ny, nz, inv
    cdef Py_ssize_t i
    for i in range(n):
        ax = accel[i, 0]
        ay = accel[i, 1]
        az = accel[i, 2]
        anorm = sqrt(ax * ax + ay * ay + az * az)
        ex = 0.0
        ey = 0.0
        ez = 0.0
        if anorm > 0.0 and fabs(anorm - g) <= gate_frac * g:
            vx = ax / anorm
            vy = ay / anorm
            vz = az / anorm
            hx = 2.0 * (qx * qz - qw * qy)
            hy = 2.0 * (qy * qz + qw * qx)
            hz = qw * qw - qx * qx - qy * qy + qz * qz
            ex = vy * hz - vz * hy
            ey = vz * hx - vx * hz
            ez = vx * hy - vy * hx
            if ki > 0.0:
                bx -= ki * ex * h
                by -= ki * ey * h
                bz -= ki * ez * h
        wx = gyro[i, 0] - bx + kp * ex
        wy = gyro[i, 1] - by + kp * ey
        wz = gyro[i, 2] - bz + kp * ez
        theta = sqrt(wx * wx + wy * wy + wz * wz) * h
        if theta > 0.0:
            half = 0.5 * theta
            c = cos(half)
            s = sin(half) / theta * h
            dw = c
            dx = wx * s
            dy = wy * s
            dz = wz * s
            nw = qw * dw - qx * dx - qy * dy - qz * dz
            nx = qw * dx + qx * dw + qy * dz - qz * dy
            ny = qw * dy - qx * dz + qy * dw + qz * dx
            nz = qw * dz + qx * dy - qy * dx + qz * dw
            inv = 1.0 / sqrt(nw * nw + nx * nx + ny * ny + nz * nz)
            qw = nw * inv
            qx = nx * inv
            qy = ny * inv
            qz = nz * inv
        q_out[i, 0] = qw
        q_out[i, 1] = qx
        q_out[i, 2] = qy
        q_out[i, 3] = qz
        b_out[i, 0] = bx
        b_out[i, 1] = by
        b_out[i, 2] = bz
    return q_np, b_np


def confidence_batch(const double[:, ::1] z, double x0, double p0, double q,
                     double r00, double r01, double r10, double r11):
    cdef Py_ssize_t n = z.shape[0]
    x_np = np.empty(n)
    p_np = np.empty(n)
    cdef double[::1] x_out = x_np
    cdef double[::1] p_out = p_np
    cdef double x = x0
    cdef double p = p0
    cdef double pm, s00, s01, s10, s11, det, k0, k1
    cdef Py_ssize_t i
    for i in range(n):
        pm = p + q
        s00 = pm + r00
        s01 = pm + r01
        s10 = pm + r10
        s11 = pm + r11
        det = s00 * s11 - s01 * s10
        if not det > 0.0:
            raise ValueError(i)
        k0 = pm * (s11 - s10) / det
        k1 = pm * (s00 - s01) / det
        x = x + k0 * (z[i, 0] - x) + k1 * (z[i, 1] - x)
        p = (1.0 - (k0 + k1)) * pm
        if x < 0.0:
            x = 0.0
        elif x > 1.0:
            x = 1.0
        x_out[i] = x
        p_out[i] = p
    return x_np, p_np


def zupt_integrate(const double[::1] accel, const unsigned char[::1] motion,
                   double h, double d0):
    cdef Py_ssize_t n = accel.shape[0]
    v_np = np.empty(n)
    d_np = np.empty(n)
    cdef double[::1] v = v_np
    cdef double[::1] d = d_np
    cdef double a_prev, vi
    cdef Py_ssize_t i
    v[0] = 0.0
    d[0] = d0
    for i in range(1, n):
        if motion[i]:
            a_prev = accel[i - 1] if motion[i - 1] else 0.0
            vi = v[i - 1] + 0.5 * (accel[i] + a_prev) * h
            v[i] = vi
            d[i] = d[i - 1] + 0.5 * (vi + v[i - 1]) * h
        else:
            v[i] = 0.0
            d[i] = d[i - 1]
    return v_np, d_np
