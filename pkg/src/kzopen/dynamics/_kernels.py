"""Compiled per-mode integrators for the (P, Re C, Im C) system.

The system is integrated in a stretched time-like variable ``s`` in [-1, 0]:
``u = -s`` and ``tau = u**(1/m)`` where ``m = min(1, alpha, beta)`` over the
schedules that are actually active. With that substitution ``dmu``, ``T`` and
the Jacobian ``dt/ds`` are all at least C^1 in ``s`` up to the critical point,
so the ``tau**(beta - 1)`` divergence of the angle rate never appears.
Running s up to 0 (rather than 1 - u up to 1) keeps full floating-point
resolution of ``u`` near the critical point.

Modes are described by affine matrix elements ``a = a0 + a1*dmu`` and
``b = b0 + b1*dmu``. This covers the Kitaev chain both with the exact lattice
dispersion and with its critical-region forms.

Parameter vector layout (``par``)::

    0 dmu_i   1 T_i    2 alpha   3 beta    4 m
    5 t_f     6 gamma  7 delta   8 s_exp   9 kappa
"""
import math

import numpy as np
from numba import njit

DMU_I, T_I, ALPHA, BETA, M_EXP, T_F, GAMMA, DELTA, S_EXP, KAPPA = range(10)
N_PAR = 10

METHOD_DOPRI5 = 0
METHOD_RADAU5 = 1
METHOD_AUTO = 2

STATUS_OK = 0
STATUS_UNDERFLOW = 1
STATUS_MAX_STEPS = 2
STATUS_DEGENERATE = 3

# stats columns
ST_ACCEPTED, ST_REJECTED, ST_METHOD, ST_STATUS, ST_S_FAIL, ST_ONSET = range(6)
N_STATS = 6

_TWO_PI = 2.0 * math.pi

# largest change of Bogoliubov angle / thermal occupation per step
STEP_JUMP = 0.05
PTH_JUMP = 1.0
ONSET_MAX = 1e-3
# implicit steps: largest factor by which the local stiffness may change,
# unless the step is non-stiff at both ends (h * rate <= 1)
FREQ_RATIO = 4.0

# Dormand-Prince 5(4)
_C2, _C3, _C4, _C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = (9017 / 3168, -355 / 33, 46732 / 5247,
                                49 / 176, -5103 / 18656)
_A71, _A73, _A74, _A75, _A76 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
_E1, _E3, _E4, _E5, _E6, _E7 = (71 / 57600, -71 / 16695, 71 / 1920,
                                -17253 / 339200, 22 / 525, -1 / 40)

# Radau IIA, three stages
_S6 = math.sqrt(6.0)
_RC = np.array([(4 - _S6) / 10, (4 + _S6) / 10, 1.0])
_RA = np.array([
    [(88 - 7 * _S6) / 360, (296 - 169 * _S6) / 1800, (-2 + 3 * _S6) / 225],
    [(296 + 169 * _S6) / 1800, (88 + 7 * _S6) / 360, (-2 - 3 * _S6) / 225],
    [(16 - _S6) / 36, (16 + _S6) / 36, 1 / 9],
])
_RE = np.array([-13 - 7 * _S6, -13 + 7 * _S6, -1.0]) / 3
_MU_REAL = 3 + 3 ** (2 / 3) - 3 ** (1 / 3)


@njit(cache=True, nogil=True)
def relaxation(lam, T, gamma, delta, s_exp):
    if gamma == 0.0:
        return 0.0
    pref = _TWO_PI * gamma * delta
    if T <= 0.0:
        return pref * lam ** s_exp
    x = lam / (2.0 * T)
    if x > 30.0:
        return pref * lam ** s_exp
    if x < 1e-6:
        if lam == 0.0:
            # s = 1 limit; s < 1 diverges
            return pref * 2.0 * T if s_exp == 1.0 else math.inf
        return pref * lam ** s_exp * (1.0 / x + x / 3.0)
    return pref * lam ** s_exp / math.tanh(x)


@njit(cache=True, nogil=True)
def fermi(lam, T):
    if T <= 0.0:
        return 0.0 if lam > 0.0 else 0.5
    x = lam / T
    if x >= 0.0:
        e = math.exp(-x)
        return e / (1.0 + e)
    return 1.0 / (1.0 + math.exp(x))


@njit(cache=True, nogil=True)
def schedule(s, par):
    """(dmu, T, w = dt/ds, dmu/ds) at stretched time ``s``."""
    u = -s
    if u < 0.0:
        u = 0.0
    m = par[M_EXP]
    r_b = par[BETA] / m
    r_a = par[ALPHA] / m
    dmu = par[DMU_I] * u ** r_b
    T = par[T_I] * u ** r_a
    w = par[T_F] / m * u ** (1.0 / m - 1.0)
    if r_b == 0.0 or par[DMU_I] == 0.0:
        # frozen schedule (fixed-point runs) or no parameter ramp at all
        dmu_ds = 0.0
    else:
        dmu_ds = -par[DMU_I] * r_b * u ** (r_b - 1.0)
    return dmu, T, w, dmu_ds


@njit(cache=True, nogil=True)
def system(s, a0, a1, b0, b1, par, A, g):
    """Fill ``A`` (3x3) and ``g`` so that dy/ds = A y + g. Returns lambda."""
    dmu, T, w, dmu_ds = schedule(s, par)
    a = a0 + a1 * dmu
    b = b0 + b1 * dmu
    lam2 = a * a + b * b
    lam = math.sqrt(lam2)
    if lam2 > 0.0:
        bs = 0.5 * (b * a1 - a * b1) / lam2 * dmu_ds
    else:
        bs = 0.0
    wr = w * relaxation(lam, T, par[GAMMA], par[DELTA], par[S_EXP])
    wk = 2.0 * w * par[KAPPA] * lam
    A[0, 0] = -wr
    A[0, 1] = 0.0
    A[0, 2] = 2.0 * bs
    A[1, 0] = 0.0
    A[1, 1] = -wr
    A[1, 2] = -wk
    A[2, 0] = -2.0 * bs
    A[2, 1] = wk
    A[2, 2] = -wr
    g[0] = wr * fermi(lam, T)
    g[1] = 0.0
    g[2] = bs
    return lam


@njit(cache=True, nogil=True)
def _rhs(s, y, a0, a1, b0, b1, par, A, g, out):
    lam = system(s, a0, a1, b0, b1, par, A, g)
    for i in range(3):
        out[i] = A[i, 0] * y[0] + A[i, 1] * y[1] + A[i, 2] * y[2] + g[i]
    return lam


@njit(cache=True, nogil=True)
def _solve(M, r, n):
    """In-place Gaussian elimination with partial pivoting; result in ``r``."""
    for k in range(n):
        p = k
        big = abs(M[k, k])
        for i in range(k + 1, n):
            if abs(M[i, k]) > big:
                big = abs(M[i, k])
                p = i
        if p != k:
            for j in range(n):
                tmp = M[k, j]
                M[k, j] = M[p, j]
                M[p, j] = tmp
            tmp = r[k]
            r[k] = r[p]
            r[p] = tmp
        piv = M[k, k]
        for i in range(k + 1, n):
            f = M[i, k] / piv
            if f != 0.0:
                for j in range(k, n):
                    M[i, j] -= f * M[k, j]
                r[i] -= f * r[k]
    for k in range(n - 1, -1, -1):
        acc = r[k]
        for j in range(k + 1, n):
            acc -= M[k, j] * r[j]
        r[k] = acc / M[k, k]


@njit(cache=True, nogil=True)
def _err_norm(e, y, ynew, rtol, atol):
    """RMS error; P relative to itself, C relative to the Bloch-vector length."""
    b0 = math.sqrt((y[0] - 0.5) ** 2 + y[1] ** 2 + y[2] ** 2)
    b1 = math.sqrt((ynew[0] - 0.5) ** 2 + ynew[1] ** 2 + ynew[2] ** 2)
    bl = max(b0, b1)
    acc = (e[0] / (atol + rtol * max(abs(y[0]), abs(ynew[0])))) ** 2
    sc = atol + rtol * bl
    acc += (e[1] / sc) ** 2 + (e[2] / sc) ** 2
    return math.sqrt(acc / 3.0)


@njit(cache=True, nogil=True)
def adiabatic_start(y0, a0, a1, b0, b1, par, y):
    """Copy ``y0`` into ``y`` with C set to its frozen-coefficient value.

    Returns the size of the correction, i.e. the onset transient amplitude
    that is left out. Modes that are not adiabatic at the start (rotation
    rate above ``ONSET_MAX`` of the local frequency) keep ``y0``.
    """
    A = np.empty((3, 3))
    g = np.empty(3)
    system(-1.0, a0, a1, b0, b1, par, A, g)
    wr = -A[0, 0]
    wk = A[2, 1]
    bs = g[2]
    y[0] = y0[0]
    den = wr * wr + wk * wk
    if den == 0.0 or 2.0 * abs(bs) > ONSET_MAX * math.sqrt(den):
        y[1] = y0[1]
        y[2] = y0[2]
        return 0.0
    p = y0[0] - 0.5
    y[1] = 2.0 * bs * p * wk / den
    y[2] = -2.0 * bs * p * wr / den
    return math.sqrt((y[1] - y0[1]) ** 2 + (y[2] - y0[2]) ** 2)


@njit(cache=True, nogil=True)
def stiffness_estimate(a0, a1, b0, b1, par):
    """Rough explicit step count: integral of the spectral radius over s."""
    A = np.empty((3, 3))
    g = np.empty(3)
    n = 64
    tot = 0.0
    for i in range(n):
        s = (i + 0.5) / n - 1.0
        system(s, a0, a1, b0, b1, par, A, g)
        rad = abs(A[0, 0]) + abs(A[1, 2]) + abs(A[0, 2])
        tot += rad / n
    return tot / 3.3


@njit(cache=True, nogil=True)
def _initial_step(s0, y, f0, a0, a1, b0, b1, par, rtol, atol, A, g):
    """Hairer's starting step, measured in the same norm as the error test."""
    bl = math.sqrt((y[0] - 0.5) ** 2 + y[1] ** 2 + y[2] ** 2)
    sc = np.empty(3)
    sc[0] = atol + rtol * abs(y[0])
    sc[1] = atol + rtol * bl
    sc[2] = sc[1]
    d0 = 0.0
    d1 = 0.0
    for i in range(3):
        d0 += (y[i] / sc[i]) ** 2
        d1 += (f0[i] / sc[i]) ** 2
    d0 = math.sqrt(d0 / 3)
    d1 = math.sqrt(d1 / 3)
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    h0 = max(min(h0, 1e-2), 1e-12)
    y1 = np.empty(3)
    f1 = np.empty(3)
    for i in range(3):
        y1[i] = y[i] + h0 * f0[i]
    _rhs(s0 + h0, y1, a0, a1, b0, b1, par, A, g, f1)
    d2 = 0.0
    for i in range(3):
        d2 += ((f1[i] - f0[i]) / sc[i]) ** 2
    d2 = math.sqrt(d2 / 3) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return max(min(100 * h0, h1, 0.1), 1e-12)


@njit(cache=True, nogil=True)
def _frozen_pair(s, a0, a1, b0, b1, par):
    """(Bogoliubov angle, thermal occupation, local rate) at ``s``."""
    dmu, T, w, dmu_ds = schedule(s, par)
    a = a0 + a1 * dmu
    b = b0 + b1 * dmu
    lam = math.sqrt(a * a + b * b)
    ang = 0.5 * math.atan2(-b + 0.0, a)
    rate = w * (relaxation(lam, T, par[GAMMA], par[DELTA], par[S_EXP])
                + 2.0 * par[KAPPA] * lam)
    return ang, fermi(lam, T), rate


@njit(cache=True, nogil=True)
def _limit_step(s, h, ang0, pth0, rate0, a0, a1, b0, b1, par, jump, floor,
                ratio):
    """Shrink ``h`` until the instantaneous eigenbasis moves by at most
    ``jump`` and the thermal target by at most a factor ``1 + PTH_JUMP``
    (above ``floor``) over the step. Both are monotone between crossovers,
    so this stops steps from jumping over a narrow non-adiabatic window, or
    an exponential drop of the target, that no stage point would resolve.

    With ``ratio > 0`` the local rate (relaxation plus rotation) may also
    change by at most that factor across a stiff step: the implicit error
    estimate is filtered by the stiff part and misses the error made when
    a single step runs from the stiff into the non-stiff regime."""
    for _ in range(200):
        ang1, pth1, rate1 = _frozen_pair(s + h, a0, a1, b0, b1, par)
        d = ang1 - ang0
        # half-angles live modulo pi
        d = d - math.pi * math.floor(d / math.pi + 0.5)
        dp = abs(pth1 - pth0)
        ok = (abs(d) <= jump and dp <= jump
              and dp <= PTH_JUMP * min(pth0, pth1) + floor)
        if ok and ratio > 0.0:
            hi = max(rate0, rate1)
            lo = min(rate0, rate1)
            ok = h * hi <= 1.0 or hi <= ratio * lo
        if ok:
            return h, False
        h *= 0.5
    return h, True


@njit(cache=True, nogil=True)
def dopri5(y0, a0, a1, b0, b1, par, s_out, rtol, atol, max_steps, out, stats):
    """Dormand-Prince 5(4) with Hairer's PI step control."""
    A = np.empty((3, 3))
    g = np.empty(3)
    y = y0.copy()
    k1 = np.empty(3)
    k2 = np.empty(3)
    k3 = np.empty(3)
    k4 = np.empty(3)
    k5 = np.empty(3)
    k6 = np.empty(3)
    k7 = np.empty(3)
    yt = np.empty(3)
    ynew = np.empty(3)
    err = np.empty(3)
    s = -1.0
    lam = _rhs(s, y, a0, a1, b0, b1, par, A, g, k1)
    h = _initial_step(s, y, k1, a0, a1, b0, b1, par, rtol, atol, A, g)
    facold = 1e-4
    n_acc = 0
    n_rej = 0
    j = 0
    n_out = s_out.shape[0]
    while j < n_out and s_out[j] <= -1.0:
        for i in range(3):
            out[j, i] = y[i]
        j += 1
    last_rejected = False
    while j < n_out:
        if lam == 0.0:
            stats[ST_STATUS] = STATUS_DEGENERATE
            stats[ST_S_FAIL] = s
            break
        if n_acc + n_rej >= max_steps:
            stats[ST_STATUS] = STATUS_MAX_STEPS
            stats[ST_S_FAIL] = s
            break
        target = s_out[j]
        hit = False
        if s + h >= target - 4e-16 * max(abs(s), abs(target)):
            h = target - s
            hit = True
        ang0, pth0, rate0 = _frozen_pair(s, a0, a1, b0, b1, par)
        h2, _ = _limit_step(s, h, ang0, pth0, rate0, a0, a1, b0, b1, par,
                            STEP_JUMP, atol, 0.0)
        if h2 < h:
            h = h2
            hit = False
        if h < 1e-14 * abs(s) or h < 1e-300:
            stats[ST_STATUS] = STATUS_UNDERFLOW
            stats[ST_S_FAIL] = s
            break
        for i in range(3):
            yt[i] = y[i] + h * _A21 * k1[i]
        _rhs(s + _C2 * h, yt, a0, a1, b0, b1, par, A, g, k2)
        for i in range(3):
            yt[i] = y[i] + h * (_A31 * k1[i] + _A32 * k2[i])
        _rhs(s + _C3 * h, yt, a0, a1, b0, b1, par, A, g, k3)
        for i in range(3):
            yt[i] = y[i] + h * (_A41 * k1[i] + _A42 * k2[i] + _A43 * k3[i])
        _rhs(s + _C4 * h, yt, a0, a1, b0, b1, par, A, g, k4)
        for i in range(3):
            yt[i] = y[i] + h * (_A51 * k1[i] + _A52 * k2[i] + _A53 * k3[i]
                                + _A54 * k4[i])
        _rhs(s + _C5 * h, yt, a0, a1, b0, b1, par, A, g, k5)
        for i in range(3):
            yt[i] = y[i] + h * (_A61 * k1[i] + _A62 * k2[i] + _A63 * k3[i]
                                + _A64 * k4[i] + _A65 * k5[i])
        s_new = target if hit else s + h
        _rhs(s_new, yt, a0, a1, b0, b1, par, A, g, k6)
        for i in range(3):
            ynew[i] = y[i] + h * (_A71 * k1[i] + _A73 * k3[i] + _A74 * k4[i]
                                  + _A75 * k5[i] + _A76 * k6[i])
        lam_new = _rhs(s_new, ynew, a0, a1, b0, b1, par, A, g, k7)
        for i in range(3):
            err[i] = h * (_E1 * k1[i] + _E3 * k3[i] + _E4 * k4[i] + _E5 * k5[i]
                          + _E6 * k6[i] + _E7 * k7[i])
        en = _err_norm(err, y, ynew, rtol, atol)
        fac11 = en ** 0.17 if en > 0.0 else 0.0
        fac = fac11 / facold ** 0.04 / 0.9
        fac = max(0.1, min(5.0, fac))
        if en <= 1.0:
            facold = max(en, 1e-4)
            n_acc += 1
            s = s_new
            for i in range(3):
                y[i] = ynew[i]
                k1[i] = k7[i]
            lam = lam_new
            if hit:
                for i in range(3):
                    out[j, i] = y[i]
                j += 1
            hn = h / fac if fac > 0.0 else 5.0 * h
            if last_rejected:
                hn = min(hn, h)
            h = hn
            last_rejected = False
        else:
            n_rej += 1
            h = h / min(5.0, fac11 / 0.9)
            last_rejected = True
    stats[ST_ACCEPTED] = n_acc
    stats[ST_REJECTED] = n_rej
    stats[ST_METHOD] = METHOD_DOPRI5


@njit(cache=True, nogil=True)
def radau5(y0, a0, a1, b0, b1, par, s_out, rtol, atol, max_steps, out, stats):
    """Three-stage Radau IIA (order 5) specialised to a linear system.

    The stage equations are linear, so each step is a single 9x9 solve.
    """
    A0 = np.empty((3, 3))
    g0 = np.empty(3)
    As = np.empty((3, 3, 3))
    gs = np.empty((3, 3))
    M = np.empty((9, 9))
    r = np.empty(9)
    M3 = np.empty((3, 3))
    e = np.empty(3)
    f0 = np.empty(3)
    ftmp = np.empty(3)
    gtmp = np.empty(3)
    Atmp = np.empty((3, 3))
    ytmp = np.empty(3)
    ynew = np.empty(3)
    y = y0.copy()
    s = -1.0
    lam = _rhs(s, y, a0, a1, b0, b1, par, A0, g0, f0)
    h = _initial_step(s, y, f0, a0, a1, b0, b1, par, rtol, atol, A0, g0)
    _rhs(s, y, a0, a1, b0, b1, par, A0, g0, f0)
    n_acc = 0
    n_rej = 0
    j = 0
    n_out = s_out.shape[0]
    while j < n_out and s_out[j] <= -1.0:
        for i in range(3):
            out[j, i] = y[i]
        j += 1
    last_rejected = False
    first = True
    while j < n_out:
        if lam == 0.0:
            stats[ST_STATUS] = STATUS_DEGENERATE
            stats[ST_S_FAIL] = s
            break
        if n_acc + n_rej >= max_steps:
            stats[ST_STATUS] = STATUS_MAX_STEPS
            stats[ST_S_FAIL] = s
            break
        target = s_out[j]
        hit = False
        if s + h >= target - 4e-16 * max(abs(s), abs(target)):
            h = target - s
            hit = True
        ang0, pth0, rate0 = _frozen_pair(s, a0, a1, b0, b1, par)
        h2, _ = _limit_step(s, h, ang0, pth0, rate0, a0, a1, b0, b1, par,
                            STEP_JUMP, atol, FREQ_RATIO)
        if h2 < h:
            h = h2
            hit = False
        if h < 1e-14 * abs(s) or h < 1e-300:
            stats[ST_STATUS] = STATUS_UNDERFLOW
            stats[ST_S_FAIL] = s
            break
        for q in range(3):
            sq = target if (hit and q == 2) else s + _RC[q] * h
            system(sq, a0, a1, b0, b1, par, As[q], gs[q])
        # (I - h a_qp A_p) z_p = h sum_p a_qp (A_p y + g_p)
        for q in range(3):
            for i in range(3):
                acc = 0.0
                for p in range(3):
                    fp = gs[p, i]
                    for l in range(3):
                        fp += As[p, i, l] * y[l]
                    acc += _RA[q, p] * fp
                r[3 * q + i] = h * acc
                for p in range(3):
                    for l in range(3):
                        v = -h * _RA[q, p] * As[p, i, l]
                        if p == q and i == l:
                            v += 1.0
                        M[3 * q + i, 3 * p + l] = v
        _solve(M, r, 9)
        for i in range(3):
            ynew[i] = y[i] + r[6 + i]
        # embedded error estimate (Hairer & Wanner)
        for i in range(3):
            ze = (_RE[0] * r[i] + _RE[1] * r[3 + i] + _RE[2] * r[6 + i]) / h
            e[i] = f0[i] + ze
            for l in range(3):
                M3[i, l] = -A0[i, l]
            M3[i, i] += _MU_REAL / h
        _solve(M3, e, 3)
        en = _err_norm(e, y, ynew, rtol, atol)
        if en > 1.0 and (first or last_rejected):
            for i in range(3):
                ytmp[i] = y[i] + e[i]
            _rhs(s, ytmp, a0, a1, b0, b1, par, Atmp, gtmp, ftmp)
            for i in range(3):
                ze = (_RE[0] * r[i] + _RE[1] * r[3 + i] + _RE[2] * r[6 + i]) / h
                e[i] = ftmp[i] + ze
                for l in range(3):
                    M3[i, l] = -A0[i, l]
                M3[i, i] += _MU_REAL / h
            _solve(M3, e, 3)
            en = _err_norm(e, y, ynew, rtol, atol)
        if en <= 1.0:
            n_acc += 1
            s = target if hit else s + h
            for i in range(3):
                y[i] = ynew[i]
            lam = _rhs(s, y, a0, a1, b0, b1, par, A0, g0, f0)
            if hit:
                for i in range(3):
                    out[j, i] = y[i]
                j += 1
            fac = 10.0 if en == 0.0 else min(10.0, 0.9 * en ** -0.25)
            if last_rejected:
                fac = min(fac, 1.0)
            h = h * max(0.2, fac)
            last_rejected = False
            first = False
        else:
            n_rej += 1
            h = h * max(0.2, 0.9 * en ** -0.25)
            last_rejected = True
    stats[ST_ACCEPTED] = n_acc
    stats[ST_REJECTED] = n_rej
    stats[ST_METHOD] = METHOD_RADAU5


@njit(cache=True, nogil=True)
def integrate_modes(coef, y0, par, s_out, method, rtol, atol, max_steps,
                    stiff_threshold, reject_fraction, onset, out, stats):
    """Integrate every mode row of ``coef`` (a0, a1, b0, b1) over s in [-1, 0].

    ``out`` has shape (n_modes, n_out, 3); ``stats`` (n_modes, N_STATS).
    With ``onset`` true, modes handed to the implicit method start from the
    adiabatic-following correlator (see ``adiabatic_start``).
    """
    n = coef.shape[0]
    ys = np.empty(3)
    for k in range(n):
        a0 = coef[k, 0]
        a1 = coef[k, 1]
        b0 = coef[k, 2]
        b1 = coef[k, 3]
        st = stats[k]
        for c in range(N_STATS):
            st[c] = 0.0
        use = method
        if use == METHOD_AUTO:
            if stiffness_estimate(a0, a1, b0, b1, par) > stiff_threshold:
                use = METHOD_RADAU5
            else:
                use = METHOD_DOPRI5
        if use == METHOD_DOPRI5:
            dopri5(y0[k], a0, a1, b0, b1, par, s_out, rtol, atol, max_steps,
                   out[k], st)
            if method == METHOD_AUTO:
                tot = st[ST_ACCEPTED] + st[ST_REJECTED]
                bad = st[ST_STATUS] != STATUS_OK or (
                    tot > 50 and st[ST_REJECTED] > reject_fraction * tot)
                if bad:
                    for c in range(N_STATS):
                        st[c] = 0.0
                    use = METHOD_RADAU5
        if use == METHOD_RADAU5:
            if onset:
                st[ST_ONSET] = adiabatic_start(y0[k], a0, a1, b0, b1, par, ys)
            else:
                for i in range(3):
                    ys[i] = y0[k, i]
            radau5(ys, a0, a1, b0, b1, par, s_out, rtol, atol, max_steps,
                   out[k], st)
