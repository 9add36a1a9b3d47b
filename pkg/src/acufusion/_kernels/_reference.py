"""Pure-Python reference kernels.

These mirror the compiled kernels in ``_native.pyx`` operation for
operation (same arithmetic, same order) so either backend can serve the
same contracts.  The compiled module is preferred at import time; this
module is the fallback and the ground truth for parity tests.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "lt_replay", "lt_track", "rot_replay", "rot_track",
    "mahony_batch", "confidence_batch", "zupt_integrate",
]


def _tissue_forces(d, v, mu, eta, top, bottom, stiffness, damping):
    """Tip and friction force of the layered stand-in at depth d, speed v.

    Tip force: Kelvin-Voigt spring+damper of the layer containing the tip,
    clamped >= 0 (tissue pushes, never pulls).  Per-layer normal (grip)
    force is stiffness * pierced length; friction is Coulomb (opposing v)
    plus viscous drag eta * L * v.  Depth beyond the last layer keeps using
    the last layer's parameters.
    """
    n_layers = len(mu)
    if d <= 0.0 or n_layers == 0:
        return 0.0, 0.0
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
            hi = d  # beyond the last layer: extend its parameters
        contact = hi - top[j]
        if contact <= 0.0:
            continue
        coulomb += mu[j] * (stiffness[j] * contact)
        viscous += eta[j] * contact
    sign = 1.0 if v > 0.0 else (-1.0 if v < 0.0 else 0.0)
    ff = coulomb * sign + viscous * v
    return ft, ff


def lt_replay(fa, m, mu, eta, top, bottom, stiffness, damping, d0, v0, h):
    """Semi-implicit Euler integration of axial translation under a given
    applied-force sequence.  Depth is positive downward; the needle cannot
    rise above skin entry (depth clamped at 0, upward speed zeroed there).

    Returns (accel, velocity, depth, tip_force, friction_force), each
    aligned with fa: index i holds the state at step i and the forces and
    acceleration evaluated from that state.
    """
    n = len(fa)
    a = np.empty(n)
    v = np.empty(n)
    d = np.empty(n)
    ft_arr = np.empty(n)
    ff_arr = np.empty(n)
    vi = float(v0)
    di = float(d0)
    for i in range(n):
        ft, ff = _tissue_forces(di, vi, mu, eta, top, bottom,
                                stiffness, damping)
        ai = (fa[i] - ft - ff) / m
        a[i] = ai
        v[i] = vi
        d[i] = di
        ft_arr[i] = ft
        ff_arr[i] = ff
        vi = vi + h * ai
        di = di + h * vi
        if di < 0.0:
            di = 0.0
            if vi < 0.0:
                vi = 0.0
    return a, v, d, ft_arr, ff_arr


def lt_track(d_plan, m, mu, eta, top, bottom, stiffness, damping, h):
    """Forward pass that finds the applied-force sequence reproducing a
    depth plan under the same semi-implicit update as lt_replay.

    Replaying the returned force array through lt_replay gives the same
    trajectory bit for bit (identical state arithmetic).
    """
    n = len(d_plan)
    fa = np.empty(n)
    a = np.empty(n)
    v = np.empty(n)
    d = np.empty(n)
    ft_arr = np.empty(n)
    ff_arr = np.empty(n)
    vi = 0.0
    di = float(d_plan[0])
    for i in range(n):
        ft, ff = _tissue_forces(di, vi, mu, eta, top, bottom,
                                stiffness, damping)
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
        ft_arr[i] = ft
        ff_arr[i] = ff
        vi = vi + h * ai
        di = di + h * vi
        if di < 0.0:
            di = 0.0
            if vi < 0.0:
                vi = 0.0
    return fa, a, v, d, ft_arr, ff_arr


def _rot_step(w, inertia, inv_inertia, tau_z):
    """One angular-rate derivative: wdot = I^-1 (tau_z e_z - w x (I w))."""
    iw0 = inertia[0] * w[0] + inertia[1] * w[1] + inertia[2] * w[2]
    iw1 = inertia[3] * w[0] + inertia[4] * w[1] + inertia[5] * w[2]
    iw2 = inertia[6] * w[0] + inertia[7] * w[1] + inertia[8] * w[2]
    cx = w[1] * iw2 - w[2] * iw1
    cy = w[2] * iw0 - w[0] * iw2
    cz = w[0] * iw1 - w[1] * iw0
    tx = -cx
    ty = -cy
    tz = tau_z - cz
    return (
        inv_inertia[0] * tx + inv_inertia[1] * ty + inv_inertia[2] * tz,
        inv_inertia[3] * tx + inv_inertia[4] * ty + inv_inertia[5] * tz,
        inv_inertia[6] * tx + inv_inertia[7] * ty + inv_inertia[8] * tz,
    )


def rot_replay(ta, inertia, inv_inertia, w0, coulomb, viscous, h):
    """Semi-implicit Euler integration of the rigid-body rotation equation
    driven by an axial applied-torque sequence.

    Friction torque acts about the needle axis: a Coulomb term opposing
    the axial rate plus a viscous term proportional to it.  Returns
    (omega (n,3), friction_torque (n,)).
    """
    n = len(ta)
    w = np.empty((n, 3))
    tf_arr = np.empty(n)
    wx, wy, wz = float(w0[0]), float(w0[1]), float(w0[2])
    for i in range(n):
        sign = 1.0 if wz > 0.0 else (-1.0 if wz < 0.0 else 0.0)
        tf = coulomb * sign + viscous * wz
        w[i, 0] = wx
        w[i, 1] = wy
        w[i, 2] = wz
        tf_arr[i] = tf
        dwx, dwy, dwz = _rot_step((wx, wy, wz), inertia, inv_inertia,
                                  ta[i] - tf)
        wx = wx + h * dwx
        wy = wy + h * dwy
        wz = wz + h * dwz
    return w, tf_arr


def rot_track(w_plan, inertia, inv_inertia, coulomb, viscous, h):
    """Find the axial applied-torque sequence tracking an axial-rate plan
    under the same update as rot_replay.  Returns (ta, omega, tf)."""
    n = len(w_plan)
    ta = np.empty(n)
    w = np.empty((n, 3))
    tf_arr = np.empty(n)
    wx, wy = 0.0, 0.0
    wz = float(w_plan[0])
    izz_inv = inv_inertia[8]
    for i in range(n):
        sign = 1.0 if wz > 0.0 else (-1.0 if wz < 0.0 else 0.0)
        tf = coulomb * sign + viscous * wz
        if i + 1 < n:
            w_tgt = w_plan[i + 1]
        else:
            w_tgt = w_plan[i]
        # z-row of I^-1 applied to the gyroscopic term
        iw0 = inertia[0] * wx + inertia[1] * wy + inertia[2] * wz
        iw1 = inertia[3] * wx + inertia[4] * wy + inertia[5] * wz
        iw2 = inertia[6] * wx + inertia[7] * wy + inertia[8] * wz
        cx = wx * iw1 - wy * iw0  # z-component of w x (I w)
        cross_term = (inv_inertia[6] * (wy * iw2 - wz * iw1)
                      + inv_inertia[7] * (wz * iw0 - wx * iw2)
                      + inv_inertia[8] * cx)
        tau_z = ((w_tgt - wz) / h + cross_term) / izz_inv
        tai = tau_z + tf
        ta[i] = tai
        w[i, 0] = wx
        w[i, 1] = wy
        w[i, 2] = wz
        tf_arr[i] = tf
        dwx, dwy, dwz = _rot_step((wx, wy, wz), inertia, inv_inertia,
                                  tai - tf)
        wx = wx + h * dwx
        wy = wy + h * dwy
        wz = wz + h * dwz
    return ta, w, tf_arr


def mahony_batch(gyro, accel, h, kp, ki, q0, b0, gate_frac, g):
    """Run the complementary attitude filter over whole measurement arrays.

    q[i], bias[i] hold the state after absorbing sample i.  The gravity
    correction is skipped for samples whose accelerometer magnitude
    deviates from g by more than gate_frac (dynamic-motion gating).
    """
    n = gyro.shape[0]
    q_out = np.empty((n, 4))
    b_out = np.empty((n, 3))
    qw, qx, qy, qz = float(q0[0]), float(q0[1]), float(q0[2]), float(q0[3])
    bx, by, bz = float(b0[0]), float(b0[1]), float(b0[2])
    for i in range(n):
        ax = accel[i, 0]
        ay = accel[i, 1]
        az = accel[i, 2]
        anorm = math.sqrt(ax * ax + ay * ay + az * az)
        ex = ey = ez = 0.0
        if anorm > 0.0 and abs(anorm - g) <= gate_frac * g:
            vx = ax / anorm
            vy = ay / anorm
            vz = az / anorm
            # predicted gravity direction in the body frame (third row of R)
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
        theta = math.sqrt(wx * wx + wy * wy + wz * wz) * h
        if theta > 0.0:
            half = 0.5 * theta
            c = math.cos(half)
            s = math.sin(half) / theta * h
            dw, dx, dy, dz = c, wx * s, wy * s, wz * s
            nw = qw * dw - qx * dx - qy * dy - qz * dz
            nx = qw * dx + qx * dw + qy * dz - qz * dy
            ny = qw * dy - qx * dz + qy * dw + qz * dx
            nz = qw * dz + qx * dy - qy * dx + qz * dw
            inv = 1.0 / math.sqrt(nw * nw + nx * nx + ny * ny + nz * nz)
            qw, qx, qy, qz = nw * inv, nx * inv, ny * inv, nz * inv
        q_out[i, 0] = qw
        q_out[i, 1] = qx
        q_out[i, 2] = qy
        q_out[i, 3] = qz
        b_out[i, 0] = bx
        b_out[i, 1] = by
        b_out[i, 2] = bz
    return q_out, b_out


def confidence_batch(z, x0, p0, q, r00, r01, r10, r11):
    """Scalar-state, two-measurement Kalman recursion over a measurement
    array.  Returns (x, p) arrays; the state is clamped into [0, 1] after
    every update.  Returns the failing step index (>= 0) in place of the
    arrays' first element sentinel via exception from the caller if the
    innovation covariance turns singular; here a negative step index is
    encoded by raising ValueError for the wrapper to translate.
    """
    n = z.shape[0]
    x_out = np.empty(n)
    p_out = np.empty(n)
    x = float(x0)
    p = float(p0)
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
    return x_out, p_out


def zupt_integrate(accel, motion, h, d0):
    """Gated trapezoidal integration: velocity and displacement advance
    only through motion samples; stationary samples force velocity to 0,
    treat acceleration as 0 and hold displacement."""
    n = len(accel)
    v = np.empty(n)
    d = np.empty(n)
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
    return v, d
