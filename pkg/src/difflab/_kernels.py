"""Compiled geometry and integration kernels for the groove field.

Primitives are stored as flat arrays so numba can walk them:

    kind   0 = straight segment, 1 = quarter arc, 2 = single point
    P      segment start / arc centre / point
    U      segment direction / arc unit vector towards its first endpoint
    W      arc unit vector towards its second endpoint (unused otherwise)
    par    segment length / arc radius
    s0     arclength of the primitive's first point along the whole path
    lo/hi  axis-aligned bounding box of each primitive

``prm`` packs the scalar constants:
    [L, r, kappa, v, blend, total_length, leak_radius, halt_radius]
"""

import math

import numpy as np
from numba import njit

SEG = 0
ARC = 1
POINT = 2

HALF_PI = 0.5 * math.pi


@njit(cache=True)
def smoothstep(u):
    if u <= 0.0:
        return 0.0
    if u >= 1.0:
        return 1.0
    return u * u * (3.0 - 2.0 * u)


@njit(cache=True)
def confinement_profile(d, r, kappa, blend):
    """Magnitude of the pull towards the centreline at distance d."""
    d1 = r - blend
    if d <= d1:
        return kappa * d
    if d < r:
        e = d - d1
        return kappa * (d - e * e / (2.0 * blend))
    return kappa * (r - 0.5 * blend)


@njit(cache=True)
def tangential_weight(d, r, L):
    if d <= r:
        return 1.0
    return 1.0 - smoothstep((d - r) / (0.5 * L - r))


@njit(cache=True)
def project(j, x, kind, P, U, W, par, s0, q, t):
    """Nearest point of primitive j to x; fills q, t and returns (dist^2, arclength)."""
    D = x.shape[0]
    kj = kind[j]
    if kj == SEG:
        proj = 0.0
        for i in range(D):
            proj += (x[i] - P[j, i]) * U[j, i]
        if proj < 0.0:
            proj = 0.0
        elif proj > par[j]:
            proj = par[j]
        for i in range(D):
            q[i] = P[j, i] + proj * U[j, i]
            t[i] = U[j, i]
        s = s0[j] + proj
    elif kj == ARC:
        a = 0.0
        b = 0.0
        for i in range(D):
            w = x[i] - P[j, i]
            a += w * U[j, i]
            b += w * W[j, i]
        th = math.atan2(b, a)
        if th < 0.0 or th > HALF_PI:
            # closest endpoint in circular distance
            d0 = abs(th)
            d1 = abs(th - HALF_PI)
            if d1 > math.pi:
                d1 = 2.0 * math.pi - d1
            th = 0.0 if d0 <= d1 else HALF_PI
        c = math.cos(th)
        sn = math.sin(th)
        R = par[j]
        for i in range(D):
            q[i] = P[j, i] + R * (c * U[j, i] + sn * W[j, i])
            t[i] = -sn * U[j, i] + c * W[j, i]
        s = s0[j] + R * th
    else:
        for i in range(D):
            q[i] = P[j, i]
            t[i] = U[j, i]
        s = s0[j]
    d2 = 0.0
    for i in range(D):
        e = x[i] - q[i]
        d2 += e * e
    return d2, s


@njit(cache=True)
def nearest_global(x, kind, P, U, W, par, s0, q, t):
    n = kind.shape[0]
    D = x.shape[0]
    qb = np.empty(D)
    tb = np.empty(D)
    best = np.inf
    bj = 0
    bs = 0.0
    for j in range(n):
        d2, s = project(j, x, kind, P, U, W, par, s0, qb, tb)
        if d2 < best:
            best = d2
            bj = j
            bs = s
            for i in range(D):
                q[i] = qb[i]
                t[i] = tb[i]
    return bj, best, bs


@njit(cache=True)
def box_dist2(x, lo, hi, j):
    acc = 0.0
    for i in range(x.shape[0]):
        if x[i] < lo[j, i]:
            e = lo[j, i] - x[i]
            acc += e * e
        elif x[i] > hi[j, i]:
            e = x[i] - hi[j, i]
            acc += e * e
    return acc


@njit(cache=True)
def nearest_local(x, jcur, kind, P, U, W, par, s0, lo_box, hi_box, near_ptr, near_idx, q, t):
    """Nearest point among jcur, its +-2 neighbours and its near-list.

    Candidates whose bounding box is farther than the best distance so far
    are skipped without projecting.
    """
    n = kind.shape[0]
    D = x.shape[0]
    qb = np.empty(D)
    tb = np.empty(D)
    best, bs = project(jcur, x, kind, P, U, W, par, s0, q, t)
    bj = jcur
    lo = max(0, jcur - 2)
    hi = min(n, jcur + 3)
    m0 = near_ptr[jcur]
    m1 = near_ptr[jcur + 1]
    for m in range(m0 - (hi - lo), m1):
        if m < m0:
            j = lo + (m - m0 + (hi - lo))
        else:
            j = near_idx[m]
            if lo <= j < hi:
                continue
        if j == jcur or box_dist2(x, lo_box, hi_box, j) > best:
            continue
        d2, s = project(j, x, kind, P, U, W, par, s0, qb, tb)
        if d2 < best or (d2 == best and j < bj):
            best = d2
            bj = j
            bs = s
            for i in range(D):
                q[i] = qb[i]
                t[i] = tb[i]
    return bj, best, bs


@njit(cache=True)
def groove_parts(x, q, t, d, s, prm, tang, conf):
    """Tangential and confinement parts of the field given the nearest point."""
    L = prm[0]
    r = prm[1]
    kappa = prm[2]
    v = prm[3]
    blend = prm[4]
    total = prm[5]
    D = x.shape[0]
    rem = total - s
    g = 1.0 if rem >= 0.5 * L else smoothstep(rem / (0.5 * L))
    speed = v * tangential_weight(d, r, L) * g
    if d > 0.0:
        pull = confinement_profile(d, r, kappa, blend) / d
    else:
        pull = 0.0
    for i in range(D):
        tang[i] = speed * t[i]
        conf[i] = -pull * (x[i] - q[i])


@njit(cache=True)
def field_batch(X, kind, P, U, W, par, s0, prm, tang_out, conf_out, dist_out, s_out):
    n, D = X.shape
    q = np.empty(D)
    t = np.empty(D)
    tang = np.empty(D)
    conf = np.empty(D)
    for m in range(n):
        x = X[m]
        j, d2, s = nearest_global(x, kind, P, U, W, par, s0, q, t)
        d = math.sqrt(d2)
        groove_parts(x, q, t, d, s, prm, tang, conf)
        for i in range(D):
            tang_out[m, i] = tang[i]
            conf_out[m, i] = conf[i]
        dist_out[m] = d
        s_out[m] = s


@njit(cache=True)
def pinball_chunk(
    x, state, noise, h, noise_scale, kind, P, U, W, par, s0, lo_box, hi_box,
    near_ptr, near_idx, prm, terminal, state_s, trace, rec, stride,
):
    """Integrate up to len(noise) Euler-Maruyama steps of the pinball SDE.

    ``state`` holds [jcur, last_state, trace_len, rec_len, step, status,
    overflow] as int64 and is updated in place.  status: 0 running,
    1 halted, 2 leaked, 3 non-finite.
    """
    D = x.shape[0]
    L = prm[0]
    leak = prm[6]
    halt = prm[7]
    q = np.empty(D)
    t = np.empty(D)
    tang = np.empty(D)
    conf = np.empty(D)
    sqh = math.sqrt(h) * noise_scale
    jump_tol = 0.25 * L
    nstates = state_s.shape[0]
    global_next = state[0] < 0
    if global_next:
        state[0] = 0
    done = 0
    for it in range(noise.shape[0]):
        if global_next:
            j, d2, s = nearest_global(x, kind, P, U, W, par, s0, q, t)
            global_next = False
        else:
            j, d2, s = nearest_local(x, state[0], kind, P, U, W, par, s0, lo_box, hi_box, near_ptr, near_idx, q, t)
            if d2 > (0.9 * leak) ** 2:
                j, d2, s = nearest_global(x, kind, P, U, W, par, s0, q, t)
        state[0] = j
        d = math.sqrt(d2)

        # cell occupancy: state cells sit on straight legs, +-L/2 in arclength
        k = np.searchsorted(state_s, s)
        occ = -1
        if k < nstates and abs(state_s[k] - s) < 0.5 * L:
            occ = k
        elif k > 0 and abs(state_s[k - 1] - s) < 0.5 * L:
            occ = k - 1
        if occ >= 0 and occ != state[1]:
            if state[2] < trace.shape[0]:
                trace[state[2]] = occ
                state[2] += 1
            else:
                state[6] = 1
            state[1] = occ

        if state[4] % stride == 0 and state[3] < rec.shape[0]:
            rec[state[3], 0] = state[4] * h
            for i in range(D):
                rec[state[3], i + 1] = x[i]
            state[3] += 1

        if d > leak:
            state[5] = 2
            return done
        dt2 = 0.0
        for i in range(D):
            e = x[i] - terminal[i]
            dt2 += e * e
        if dt2 < halt * halt:
            state[5] = 1
            return done

        groove_parts(x, q, t, d, s, prm, tang, conf)
        step2 = 0.0
        for i in range(D):
            f = -0.5 * x[i] + tang[i] + conf[i]
            drift = 0.5 * x[i] + f
            dx = drift * h + sqh * noise[it, i]
            x[i] += dx
            step2 += dx * dx
            if not math.isfinite(x[i]):
                state[5] = 3
                return done
        if step2 > jump_tol * jump_tol:
            global_next = True
            state[0] = -1
        state[4] += 1
        done += 1
    if global_next:
        state[0] = -1
    return done
