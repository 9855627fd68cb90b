"""Finite-difference and time-stepping kernels.

Everything here works on bare (r, z) node arrays over a uniform parameter
grid u with spacing du.  The parameter is arc length right after a remesh
and drifts away from it between remeshes, so all geometric formulas carry
the metric factor sigma = |dX/du| explicitly.

Pole handling (PoleToPole topology): r extends oddly and z (and every
axisymmetric scalar) evenly through a pole, so centered stencils on
parity ghost nodes are exact for the continuum surface.  Ratios X/r at
the poles are replaced by their L'Hopital limits.

Stencils are evaluated in difference form (combinations of f[i+j]-f[i])
so constant fields differentiate to exactly zero in floating point.
"""

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a hard dependency, but keep a fallback

    def njit(*args, **kwargs):
        def wrapper(func):
            return func

        return wrapper


# advance() return statuses
ST_TSTOP = 0       # reached requested stop time
ST_STEPS = 1       # step budget for this chunk exhausted (remesh cadence)
ST_THRESHOLD = 2   # max |A|^2 crossed the stop threshold
ST_FLOOR = 3       # adaptive dt fell below dt_floor
ST_NONFINITE = 4   # step produced non-finite values (state rolled back)
ST_EVENT = 5       # max |A|^2 grew past the snapshot-event factor

# constraint kind codes (see constraints.py)
HK_ZERO = 0
HK_CONST = 1
HK_EXP = 2
HK_SIN = 3
HK_RECIP = 4
HK_NEGT = 5
HK_TABLE = 6


@njit(cache=True)
def pad_ghosts(f, is_ring, odd):
    """Extend f by two ghost nodes per side: periodic wrap for rings,
    parity reflection about both poles otherwise."""
    m = f.shape[0]
    g = np.empty(m + 4)
    g[2:m + 2] = f
    if is_ring:
        g[0] = f[m - 2]
        g[1] = f[m - 1]
        g[m + 2] = f[0]
        g[m + 3] = f[1]
    else:
        s = -1.0 if odd else 1.0
        g[1] = s * f[1]
        g[0] = s * f[2]
        g[m + 2] = s * f[m - 2]
        g[m + 3] = s * f[m - 3]
    return g


@njit(cache=True)
def d1(g, du):
    """Fourth-order first derivative of a ghost-padded array."""
    m = g.shape[0] - 4
    out = np.empty(m)
    c = 1.0 / (12.0 * du)
    for i in range(m):
        j = i + 2
        out[i] = (8.0 * (g[j + 1] - g[j - 1]) - (g[j + 2] - g[j - 2])) * c
    return out


@njit(cache=True)
def d2(g, du):
    """Fourth-order second derivative of a ghost-padded array."""
    m = g.shape[0] - 4
    out = np.empty(m)
    c = 1.0 / (12.0 * du * du)
    for i in range(m):
        j = i + 2
        out[i] = (16.0 * (g[j + 1] - g[j]) + 16.0 * (g[j - 1] - g[j])
                  - (g[j + 2] - g[j]) - (g[j - 2] - g[j])) * c
    return out


@njit(cache=True)
def base_geometry(r, z, k, is_ring, du):
    """First and second fundamental form data of the profile.

    Returns (sigma, ru, zu, nur, nuz, kp, kr, H, maxA2).
    kp is the profile principal curvature, kr the rotational one
    (multiplicity k); H = kp + k*kr.
    """
    m = r.shape[0]
    rp = pad_ghosts(r, is_ring, True)
    zp = pad_ghosts(z, is_ring, False)
    ru = d1(rp, du)
    zu = d1(zp, du)
    ruu = d2(rp, du)
    zuu = d2(zp, du)

    sigma = np.empty(m)
    nur = np.empty(m)
    nuz = np.empty(m)
    kp = np.empty(m)
    kr = np.empty(m)
    H = np.empty(m)
    maxA2 = 0.0
    for i in range(m):
        sg = np.sqrt(ru[i] * ru[i] + zu[i] * zu[i])
        sigma[i] = sg
        nur[i] = zu[i] / sg
        nuz[i] = -ru[i] / sg
        kpi = (ru[i] * zuu[i] - zu[i] * ruu[i]) / (sg * sg * sg)
        kp[i] = kpi
        if (not is_ring) and (i == 0 or i == m - 1):
            # pole: z'/r -> z''/r' (both vanish to first order)
            kri = zuu[i] / (sg * ru[i])
        else:
            kri = zu[i] / (sg * r[i])
        kr[i] = kri
        H[i] = kpi + k * kri
        a2 = kpi * kpi + k * kri * kri
        if a2 > maxA2 or not np.isfinite(a2):
            maxA2 = a2
    return sigma, ru, zu, nur, nuz, kp, kr, H, maxA2


@njit(cache=True)
def laplacian(phi, r, ru, sigma, k, is_ring, du):
    """Laplace-Beltrami of an even axisymmetric scalar:
    lap phi = phi_ss + k (r_s/r) phi_s, with the pole limit (1+k) phi_ss."""
    m = phi.shape[0]
    phis = d1(pad_ghosts(phi, is_ring, False), du)
    for i in range(m):
        phis[i] /= sigma[i]
    phiss = d1(pad_ghosts(phis, is_ring, True), du)
    out = np.empty(m)
    for i in range(m):
        pss = phiss[i] / sigma[i]
        if (not is_ring) and (i == 0 or i == m - 1):
            out[i] = (1.0 + k) * pss
        else:
            out[i] = pss + k * (ru[i] / (sigma[i] * r[i])) * phis[i]
    return out


@njit(cache=True)
def velocity(r, z, k, is_ring, du, hval):
    """Normal velocity F = lap H + h and its (r, z) components.

    Returns (vr, vz, F, maxA2)."""
    sigma, ru, zu, nur, nuz, kp, kr, H, maxA2 = base_geometry(r, z, k, is_ring, du)
    lapH = laplacian(H, r, ru, sigma, k, is_ring, du)
    m = r.shape[0]
    vr = np.empty(m)
    vz = np.empty(m)
    F = np.empty(m)
    for i in range(m):
        f = lapH[i] + hval
        F[i] = f
        vr[i] = f * nur[i]
        vz[i] = f * nuz[i]
    return vr, vz, F, maxA2


@njit(cache=True)
def min_gap(r, z, is_ring):
    m = r.shape[0]
    g = 1.0e300
    for i in range(m - 1):
        dr = r[i + 1] - r[i]
        dz = z[i + 1] - z[i]
        d = np.sqrt(dr * dr + dz * dz)
        if d < g:
            g = d
    if is_ring:
        dr = r[0] - r[m - 1]
        dz = z[0] - z[m - 1]
        d = np.sqrt(dr * dr + dz * dz)
        if d < g:
            g = d
    return g


@njit(cache=True)
def heval(kind, c, tab_t, tab_h, t):
    if kind == HK_ZERO:
        return 0.0
    if kind == HK_CONST:
        return c
    if kind == HK_EXP:
        return np.exp(t)
    if kind == HK_SIN:
        return np.sin(t)
    if kind == HK_RECIP:
        return 1.0 / (1.0 + t)
    if kind == HK_NEGT:
        return -t
    return np.interp(t, tab_t, tab_h)


@njit(cache=True)
def rk4_step(r, z, k, is_ring, du, dt, t, hkind, hc, tab_t, tab_h, vr1, vz1):
    """Classical RK4 update of the node positions, in place.

    vr1/vz1 are the stage-1 velocities already evaluated at (r, z, t).
    Returns False if the result is non-finite."""
    m = r.shape[0]
    half = 0.5 * dt
    h2 = heval(hkind, hc, tab_t, tab_h, t + half)
    h4 = heval(hkind, hc, tab_t, tab_h, t + dt)

    r2 = np.empty(m)
    z2 = np.empty(m)
    for i in range(m):
        r2[i] = r[i] + half * vr1[i]
        z2[i] = z[i] + half * vz1[i]
    vr2, vz2, _, _ = velocity(r2, z2, k, is_ring, du, h2)

    for i in range(m):
        r2[i] = r[i] + half * vr2[i]
        z2[i] = z[i] + half * vz2[i]
    vr3, vz3, _, _ = velocity(r2, z2, k, is_ring, du, h2)

    for i in range(m):
        r2[i] = r[i] + dt * vr3[i]
        z2[i] = z[i] + dt * vz3[i]
    vr4, vz4, _, _ = velocity(r2, z2, k, is_ring, du, h4)

    sixth = dt / 6.0
    ok = True
    for i in range(m):
        r[i] = r[i] + sixth * (vr1[i] + 2.0 * (vr2[i] + vr3[i]) + vr4[i])
        z[i] = z[i] + sixth * (vz1[i] + 2.0 * (vz2[i] + vz3[i]) + vz4[i])
        if not (np.isfinite(r[i]) and np.isfinite(z[i])):
            ok = False
    return ok


@njit(cache=True, nogil=True)
def advance(r, z, k, is_ring, du, t, t_stop, cfl, max_steps,
            stop_a2, dt_floor, dt_cap, event_factor, a2_ref,
            hkind, hc, tab_t, tab_h):
    """Integrate the flow in place until an event occurs.

    Returns (status, t, steps, dt_last, maxA2).  On ST_NONFINITE the
    state has been rolled back to the last finite step and dt_last is
    the dt that failed.
    """
    steps = 0
    dt_last = 0.0
    while True:
        hval = heval(hkind, hc, tab_t, tab_h, t)
        vr1, vz1, _, maxA2 = velocity(r, z, k, is_ring, du, hval)
        if not np.isfinite(maxA2):
            return ST_NONFINITE, t, steps, dt_last, maxA2
        if maxA2 >= stop_a2:
            return ST_THRESHOLD, t, steps, dt_last, maxA2
        if event_factor > 0.0 and maxA2 >= event_factor * a2_ref:
            return ST_EVENT, t, steps, dt_last, maxA2
        if t >= t_stop:
            return ST_TSTOP, t, steps, dt_last, maxA2
        if steps >= max_steps:
            return ST_STEPS, t, steps, dt_last, maxA2

        g = min_gap(r, z, is_ring)
        g2 = g * g
        dt = cfl * g2 * g2 / (1.0 + maxA2 * g2)
        if dt < dt_floor:
            return ST_FLOOR, t, steps, dt, maxA2
        if dt > dt_cap:
            dt = dt_cap
        land = False
        if t + dt >= t_stop:
            dt = t_stop - t
            land = True

        r0 = r.copy()
        z0 = z.copy()
        ok = rk4_step(r, z, k, is_ring, du, dt, t, hkind, hc, tab_t, tab_h, vr1, vz1)
        if not ok:
            r[:] = r0
            z[:] = z0
            return ST_NONFINITE, t, steps, dt, maxA2
        t = t_stop if land else t + dt
        steps += 1
        dt_last = dt
