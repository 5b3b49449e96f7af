"""Fused numba kernels for one time step.

These follow the same sequence of operations as the array code in
:mod:`dugks.scheme` without allocating temporaries, which is what makes the
fine-mesh cases affordable. The 1-D kernel takes velocities as a ``(q, 2)``
array with a zero second column and returns ``-(cell) - 1`` on the first
non-physical density. The D2Q9 kernels return a nonzero flag instead.
"""

import math

import numba as nb
import numpy as np

_JIT = dict(cache=True, error_model="numpy")

RHO_FLOOR = 1e-12


@nb.njit(inline="always", **_JIT)
def _relax_into(out, g, coef, w, xi, rt0, feq, d):
    """``out = g + coef * (f_eq(g) - g)`` with the bracket's conserved moments removed.

    The projected bracket is left in ``d``. Returns ``False`` when the
    density of ``g`` is not admissible.
    """
    q = g.shape[0]
    rho = 0.0
    mx = 0.0
    my = 0.0
    for k in range(q):
        rho += g[k]
        mx += xi[k, 0] * g[k]
        my += xi[k, 1] * g[k]
    if not rho >= RHO_FLOOR:
        return False
    inv = 1.0 / rho
    ux = mx * inv
    uy = my * inv
    c1 = 1.0 / rt0
    c2 = 0.5 * c1 * c1
    base = 1.0 - 0.5 * (ux * ux + uy * uy) * c1
    r0 = 0.0
    rx = 0.0
    ry = 0.0
    for k in range(q):
        xu = xi[k, 0] * ux + xi[k, 1] * uy
        feq[k] = w[k] * rho * (base + xu * (c1 + xu * c2))
        dk = feq[k] - g[k]
        d[k] = dk
        r0 += dk
        rx += xi[k, 0] * dk
        ry += xi[k, 1] * dk
    for k in range(q):
        dk = d[k] - w[k] * (r0 + (xi[k, 0] * rx + xi[k, 1] * ry) * c1)
        d[k] = dk
        out[k] = g[k] + coef * dk
    return True


@nb.njit(**_JIT)
def step_1d(f, w, xi, rt0, tau_eff, dt, dx, mode, out):
    """Full 1-D step. ``mode``: 0 DUGKS, 1 CLR, 2 collisionless."""
    n, q = f.shape
    b = np.empty_like(f)
    h = np.empty_like(f)
    flux = np.empty_like(f)
    feq = np.empty(q)
    d = np.empty(q)
    face = np.empty(q)
    a = 0.25 * dt / tau_eff
    for i in range(n):
        if mode == 2:
            for k in range(q):
                b[i, k] = f[i, k]
                h[i, k] = f[i, k]
            continue
        if not _relax_into(h[i], f[i], 2.0 * a, w, xi, rt0, feq, d):
            return -i - 1
        for k in range(q):
            b[i, k] = f[i, k] + a * d[k] if mode == 0 else f[i, k]
    coef = 0.5 * dt / (2.0 * tau_eff + 0.5 * dt)
    for i in range(n):
        iR = i + 1 if i + 1 < n else 0
        for k in range(q):
            half = 0.5 * (b[i, k] + b[iR, k])
            slope = (b[iR, k] - b[i, k]) / dx
            face[k] = half - 0.5 * dt * xi[k, 0] * slope
        if mode == 0:
            if not _relax_into(flux[i], face, coef, w, xi, rt0, feq, d):
                return -i - 1
            for k in range(q):
                flux[i, k] = xi[k, 0] * flux[i, k]
        else:
            for k in range(q):
                flux[i, k] = xi[k, 0] * face[k]
    lam = dt / dx
    coef = dt / (2.0 * tau_eff + dt)
    for i in range(n):
        im = i - 1 if i > 0 else n - 1
        total = 0.0
        for k in range(q):
            face[k] = h[i, k] - lam * (flux[i, k] - flux[im, k])
            total += face[k]
        if mode == 2:
            if not math.isfinite(total):
                return -i - 1
            for k in range(q):
                out[i, k] = face[k]
        elif not _relax_into(out[i], face, coef, w, xi, rt0, feq, d):
            return -i - 1
    return 0


# ---------------------------------------------------------------------------
# D2Q9, velocity-major storage. Unit directions (ex, ey) per index:
# 0 (0,0)  1 (1,0)  2 (0,1)  3 (-1,0)  4 (0,-1)
# 5 (1,1)  6 (-1,1) 7 (-1,-1) 8 (1,-1)
# The loops below are written without branches in the inner ``j`` loop so
# that LLVM can vectorize them; density checks are accumulated in a flag.

_JIT9 = dict(cache=True, error_model="numpy", inline="always")


@nb.njit(**_JIT9)
def _d9(g0, g1, g2, g3, g4, g5, g6, g7, g8, c2rt, c1, c2, w0, w1, w2):
    """Projected ``f_eq(g) - g`` and the density of ``g``.

    ``c2rt`` is ``c**2`` (``3 rt0``), ``c1 = 1/rt0``, ``c2 = c1**2 / 2``.
    """
    rho = g0 + g1 + g2 + g3 + g4 + g5 + g6 + g7 + g8
    inv = 1.0 / rho
    # X = c * u_x and Y = c * u_y, i.e. xi_k . u for the axis directions
    X = c2rt * (g1 - g3 + g5 - g6 - g7 + g8) * inv
    Y = c2rt * (g2 - g4 + g5 + g6 - g7 - g8) * inv
    base = 1.0 - 0.5 * (X * X + Y * Y) / c2rt * c1
    S = X + Y
    D = X - Y
    pa = w1 * rho
    pd = w2 * rho
    d0 = w0 * rho * base - g0
    d1 = pa * (base + X * (c1 + X * c2)) - g1
    d2 = pa * (base + Y * (c1 + Y * c2)) - g2
    d3 = pa * (base - X * (c1 - X * c2)) - g3
    d4 = pa * (base - Y * (c1 - Y * c2)) - g4
    d5 = pd * (base + S * (c1 + S * c2)) - g5
    d6 = pd * (base - D * (c1 - D * c2)) - g6
    d7 = pd * (base - S * (c1 - S * c2)) - g7
    d8 = pd * (base + D * (c1 + D * c2)) - g8
    r0 = d0 + d1 + d2 + d3 + d4 + d5 + d6 + d7 + d8
    rx = 3.0 * (d1 - d3 + d5 - d6 - d7 + d8)
    ry = 3.0 * (d2 - d4 + d5 + d6 - d7 - d8)
    return (
        rho,
        d0 - w0 * r0,
        d1 - w1 * (r0 + rx),
        d2 - w1 * (r0 + ry),
        d3 - w1 * (r0 - rx),
        d4 - w1 * (r0 - ry),
        d5 - w2 * (r0 + rx + ry),
        d6 - w2 * (r0 - rx + ry),
        d7 - w2 * (r0 - rx - ry),
        d8 - w2 * (r0 + rx - ry),
    )


@nb.njit(cache=True, error_model="numpy")
def _fill_halo(p):
    """Periodic one-cell halo for a ``(q, n + 2, n + 2)`` padded array."""
    q, mp, _ = p.shape
    n = mp - 2
    for k in range(q):
        for i in range(1, n + 1):
            p[k, i, 0] = p[k, i, n]
            p[k, i, n + 1] = p[k, i, 1]
        for j in range(mp):
            p[k, 0, j] = p[k, n, j]
            p[k, n + 1, j] = p[k, 1, j]


@nb.njit(cache=True, error_model="numpy")
def d2q9_prepare(f, w0, w1, w2, rt0, tau_eff, dt, mode, bp, h):
    """``h = f + dt/2 Q/eps`` and padded ``b`` (``f + dt/4 Q/eps`` for DUGKS)."""
    _, n, _ = f.shape
    c2rt = 3.0 * rt0
    c1 = 1.0 / rt0
    c2 = 0.5 * c1 * c1
    a = 0.25 * dt / tau_eff
    a2 = 2.0 * a
    ab = a if mode == 0 else 0.0
    bad = 0
    if mode == 2:
        for k in range(9):
            for i in range(n):
                for j in range(n):
                    h[k, i, j] = f[k, i, j]
                    bp[k, i + 1, j + 1] = f[k, i, j]
        _fill_halo(bp)
        return 0
    for i in range(n):
        for j in range(n):
            g0 = f[0, i, j]
            g1 = f[1, i, j]
            g2 = f[2, i, j]
            g3 = f[3, i, j]
            g4 = f[4, i, j]
            g5 = f[5, i, j]
            g6 = f[6, i, j]
            g7 = f[7, i, j]
            g8 = f[8, i, j]
            rho, d0, d1, d2, d3, d4, d5, d6, d7, d8 = _d9(
                g0, g1, g2, g3, g4, g5, g6, g7, g8, c2rt, c1, c2, w0, w1, w2
            )
            bad |= not (rho >= RHO_FLOOR)
            h[0, i, j] = g0 + a2 * d0
            h[1, i, j] = g1 + a2 * d1
            h[2, i, j] = g2 + a2 * d2
            h[3, i, j] = g3 + a2 * d3
            h[4, i, j] = g4 + a2 * d4
            h[5, i, j] = g5 + a2 * d5
            h[6, i, j] = g6 + a2 * d6
            h[7, i, j] = g7 + a2 * d7
            h[8, i, j] = g8 + a2 * d8
            bp[0, i + 1, j + 1] = g0 + ab * d0
            bp[1, i + 1, j + 1] = g1 + ab * d1
            bp[2, i + 1, j + 1] = g2 + ab * d2
            bp[3, i + 1, j + 1] = g3 + ab * d3
            bp[4, i + 1, j + 1] = g4 + ab * d4
            bp[5, i + 1, j + 1] = g5 + ab * d5
            bp[6, i + 1, j + 1] = g6 + ab * d6
            bp[7, i + 1, j + 1] = g7 + ab * d7
            bp[8, i + 1, j + 1] = g8 + ab * d8
    _fill_halo(bp)
    return bad


@nb.njit(**_JIT9)
def _face9(bp, k, iL, jL, iR, jR, iLp, jLp, iLm, jLm, iRp, jRp, iRm, jRm, en, et, hn, ht):
    fL = bp[k, iL, jL]
    fR = bp[k, iR, jR]
    # tangential difference from the cell upwind along the normal, both cells when en == 0
    tdiff = (1.0 + en) * (bp[k, iLp, jLp] - bp[k, iLm, jLm]) + (1.0 - en) * (
        bp[k, iRp, jRp] - bp[k, iRm, jRm]
    )
    return 0.5 * (fL + fR) - hn * en * (fR - fL) - ht * et * tdiff


@nb.njit(cache=True, error_model="numpy")
def d2q9_faces(bp, w0, w1, w2, rt0, tau_eff, dt, dx, close, fx, fy):
    """Face values on every x- and y-face, times ``c * e_n``.

    ``fx[k, i, j]`` is the face between cells ``(i, j)`` and ``(i + 1, j)``;
    ``fy[k, i, j + 1]`` the face between ``(i, j)`` and ``(i, j + 1)``, with
    ``fy[:, :, 0]`` a periodic copy of ``fy[:, :, n]``. Only components with
    a nonzero normal velocity are written.
    """
    _, mp, _ = bp.shape
    n = mp - 2
    c = np.sqrt(3.0 * rt0)
    c2rt = 3.0 * rt0
    c1 = 1.0 / rt0
    c2 = 0.5 * c1 * c1
    # face values enter as xi * (dt/2) * slope; xi = c * e
    hn = 0.5 * dt / dx * c
    ht = 0.125 * dt / dx * c
    coef = 0.5 * dt / (2.0 * tau_eff + 0.5 * dt) if close else 0.0
    bad = 0
    # x-faces: normal e_x, tangential e_y
    for i in range(n):
        iL = i + 1
        iR = i + 2
        for jj in range(n):
            j = jj + 1
            a0 = _face9(bp, 0, iL, j, iR, j, iL, j + 1, iL, j - 1, iR, j + 1, iR, j - 1, 0.0, 0.0, hn, ht)
            a1 = _face9(bp, 1, iL, j, iR, j, iL, j + 1, iL, j - 1, iR, j + 1, iR, j - 1, 1.0, 0.0, hn, ht)
            a2 = _face9(bp, 2, iL, j, iR, j, iL, j + 1, iL, j - 1, iR, j + 1, iR, j - 1, 0.0, 1.0, hn, ht)
            a3 = _face9(bp, 3, iL, j, iR, j, iL, j + 1, iL, j - 1, iR, j + 1, iR, j - 1, -1.0, 0.0, hn, ht)
            a4 = _face9(bp, 4, iL, j, iR, j, iL, j + 1, iL, j - 1, iR, j + 1, iR, j - 1, 0.0, -1.0, hn, ht)
            a5 = _face9(bp, 5, iL, j, iR, j, iL, j + 1, iL, j - 1, iR, j + 1, iR, j - 1, 1.0, 1.0, hn, ht)
            a6 = _face9(bp, 6, iL, j, iR, j, iL, j + 1, iL, j - 1, iR, j + 1, iR, j - 1, -1.0, 1.0, hn, ht)
            a7 = _face9(bp, 7, iL, j, iR, j, iL, j + 1, iL, j - 1, iR, j + 1, iR, j - 1, -1.0, -1.0, hn, ht)
            a8 = _face9(bp, 8, iL, j, iR, j, iL, j + 1, iL, j - 1, iR, j + 1, iR, j - 1, 1.0, -1.0, hn, ht)
            if close:
                rho, d0, d1, d2, d3, d4, d5, d6, d7, d8 = _d9(
                    a0, a1, a2, a3, a4, a5, a6, a7, a8, c2rt, c1, c2, w0, w1, w2
                )
                bad |= not (rho >= RHO_FLOOR)
            else:
                d0 = d1 = d2 = d3 = d4 = d5 = d6 = d7 = d8 = 0.0
            fx[1, i, jj] = c * (a1 + coef * d1)
            fx[3, i, jj] = -c * (a3 + coef * d3)
            fx[5, i, jj] = c * (a5 + coef * d5)
            fx[6, i, jj] = -c * (a6 + coef * d6)
            fx[7, i, jj] = -c * (a7 + coef * d7)
            fx[8, i, jj] = c * (a8 + coef * d8)
    # y-faces: normal e_y, tangential e_x
    for i in range(n):
        I = i + 1
        for jj in range(n):
            jL = jj + 1
            jR = jj + 2
            a0 = _face9(bp, 0, I, jL, I, jR, I + 1, jL, I - 1, jL, I + 1, jR, I - 1, jR, 0.0, 0.0, hn, ht)
            a1 = _face9(bp, 1, I, jL, I, jR, I + 1, jL, I - 1, jL, I + 1, jR, I - 1, jR, 0.0, 1.0, hn, ht)
            a2 = _face9(bp, 2, I, jL, I, jR, I + 1, jL, I - 1, jL, I + 1, jR, I - 1, jR, 1.0, 0.0, hn, ht)
            a3 = _face9(bp, 3, I, jL, I, jR, I + 1, jL, I - 1, jL, I + 1, jR, I - 1, jR, 0.0, -1.0, hn, ht)
            a4 = _face9(bp, 4, I, jL, I, jR, I + 1, jL, I - 1, jL, I + 1, jR, I - 1, jR, -1.0, 0.0, hn, ht)
            a5 = _face9(bp, 5, I, jL, I, jR, I + 1, jL, I - 1, jL, I + 1, jR, I - 1, jR, 1.0, 1.0, hn, ht)
            a6 = _face9(bp, 6, I, jL, I, jR, I + 1, jL, I - 1, jL, I + 1, jR, I - 1, jR, 1.0, -1.0, hn, ht)
            a7 = _face9(bp, 7, I, jL, I, jR, I + 1, jL, I - 1, jL, I + 1, jR, I - 1, jR, -1.0, -1.0, hn, ht)
            a8 = _face9(bp, 8, I, jL, I, jR, I + 1, jL, I - 1, jL, I + 1, jR, I - 1, jR, -1.0, 1.0, hn, ht)
            if close:
                rho, d0, d1, d2, d3, d4, d5, d6, d7, d8 = _d9(
                    a0, a1, a2, a3, a4, a5, a6, a7, a8, c2rt, c1, c2, w0, w1, w2
                )
                bad |= not (rho >= RHO_FLOOR)
            else:
                d0 = d1 = d2 = d3 = d4 = d5 = d6 = d7 = d8 = 0.0
            fy[2, i, jj + 1] = c * (a2 + coef * d2)
            fy[4, i, jj + 1] = -c * (a4 + coef * d4)
            fy[5, i, jj + 1] = c * (a5 + coef * d5)
            fy[6, i, jj + 1] = c * (a6 + coef * d6)
            fy[7, i, jj + 1] = -c * (a7 + coef * d7)
            fy[8, i, jj + 1] = -c * (a8 + coef * d8)
        for k in range(2, 9):
            fy[k, i, 0] = fy[k, i, n]
    return bad


@nb.njit(cache=True, error_model="numpy")
def d2q9_update(h, fx, fy, w0, w1, w2, rt0, tau_eff, dt, dx, with_collision, out):
    _, n, _ = h.shape
    c2rt = 3.0 * rt0
    c1 = 1.0 / rt0
    c2 = 0.5 * c1 * c1
    lam = dt / dx
    coef = dt / (2.0 * tau_eff + dt) if with_collision else 0.0
    bad = 0
    for i in range(n):
        im = i - 1 if i > 0 else n - 1
        for j in range(n):
            g0 = h[0, i, j]
            g1 = h[1, i, j] - lam * (fx[1, i, j] - fx[1, im, j])
            g2 = h[2, i, j] - lam * (fy[2, i, j + 1] - fy[2, i, j])
            g3 = h[3, i, j] - lam * (fx[3, i, j] - fx[3, im, j])
            g4 = h[4, i, j] - lam * (fy[4, i, j + 1] - fy[4, i, j])
            g5 = h[5, i, j] - lam * ((fx[5, i, j] - fx[5, im, j]) + (fy[5, i, j + 1] - fy[5, i, j]))
            g6 = h[6, i, j] - lam * ((fx[6, i, j] - fx[6, im, j]) + (fy[6, i, j + 1] - fy[6, i, j]))
            g7 = h[7, i, j] - lam * ((fx[7, i, j] - fx[7, im, j]) + (fy[7, i, j + 1] - fy[7, i, j]))
            g8 = h[8, i, j] - lam * ((fx[8, i, j] - fx[8, im, j]) + (fy[8, i, j + 1] - fy[8, i, j]))
            if with_collision:
                rho, d0, d1, d2, d3, d4, d5, d6, d7, d8 = _d9(
                    g0, g1, g2, g3, g4, g5, g6, g7, g8, c2rt, c1, c2, w0, w1, w2
                )
                bad |= not (rho >= RHO_FLOOR)
            else:
                d0 = d1 = d2 = d3 = d4 = d5 = d6 = d7 = d8 = 0.0
                bad |= not math.isfinite(g0 + g1 + g2 + g3 + g4 + g5 + g6 + g7 + g8)
            out[0, i, j] = g0 + coef * d0
            out[1, i, j] = g1 + coef * d1
            out[2, i, j] = g2 + coef * d2
            out[3, i, j] = g3 + coef * d3
            out[4, i, j] = g4 + coef * d4
            out[5, i, j] = g5 + coef * d5
            out[6, i, j] = g6 + coef * d6
            out[7, i, j] = g7 + coef * d7
            out[8, i, j] = g8 + coef * d8
    return bad
