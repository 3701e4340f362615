"""Exponent extraction, power-law fits, data collapse and identity checks."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from . import model as mdl
from .bath import BathParams
from .dynamics import (DynamicsOptions, excitation_density, initial_states,
                       integrate_labels, make_grid)
from .protocol import RampClass, RampSpec, classify, predicted_exponent


class AnalysisError(ValueError):
    pass


@dataclass(frozen=True)
class ScalingCurve:
    t_f: np.ndarray
    E: np.ndarray
    metadata: dict = field(default_factory=dict)
    t0: float = 1.0

    def __post_init__(self):
        t = np.asarray(self.t_f, dtype=float)
        e = np.asarray(self.E, dtype=float)
        object.__setattr__(self, "t_f", t)
        object.__setattr__(self, "E", e)
        if t.shape != e.shape or t.ndim != 1:
            raise AnalysisError("t_f and E must be 1-d arrays of equal length")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise AnalysisError("t_f must be strictly increasing")
        if np.any(e <= 0):
            raise AnalysisError("E must be > 0 for log-log analysis")
        if not self.t0 > 0:
            raise AnalysisError("t0 must be > 0")


@dataclass(frozen=True)
class FitResult:
    zeta_hat: float
    prefactor: float
    residual_rms: float
    window: tuple
    n: int


def _lagrange_slope(x, y, x0):
    """Derivative at x0 of the parabola through three points."""
    x1, x2, x3 = x
    y1, y2, y3 = y
    return (y1 * (2 * x0 - x2 - x3) / ((x1 - x2) * (x1 - x3))
            + y2 * (2 * x0 - x1 - x3) / ((x2 - x1) * (x2 - x3))
            + y3 * (2 * x0 - x1 - x2) / ((x3 - x1) * (x3 - x2)))


def estimate_exponent(curve: ScalingCurve, t_f_eval: float) -> float:
    """-d log E / d log t_f from the three samples nearest to ``t_f_eval``.

    Interior points get the centred three-point formula; at the ends of the
    curve the same parabola gives a one-sided difference.
    """
    if curve.t_f.size < 3:
        raise AnalysisError("need at least 3 samples")
    lx = np.log(curve.t_f)
    x0 = math.log(t_f_eval)
    span = lx[-1] - lx[0]
    if x0 < lx[0] - 1e-9 * max(span, 1) or x0 > lx[-1] + 1e-9 * max(span, 1):
        raise AnalysisError("t_f_eval is not bracketed by the samples")
    i = int(np.argmin(np.abs(lx - x0)))
    i = min(max(i, 1), lx.size - 2)
    sl = slice(i - 1, i + 2)
    return -_lagrange_slope(lx[sl], np.log(curve.E[sl]), x0)


def exponent_profile(curve: ScalingCurve) -> np.ndarray:
    """zeta_est at every sample."""
    return np.array([estimate_exponent(curve, t) for t in curve.t_f])


def default_window(curve: ScalingCurve) -> tuple:
    """Slowest decade of the sampled range."""
    hi = float(curve.t_f[-1])
    return (hi / 10.0 * (1 - 1e-12), hi)


def fit_power_law(curve: ScalingCurve, window: Optional[tuple] = None) -> FitResult:
    """Least squares for log E = zeta log(t0/t_f) + log D over the window."""
    window = window or default_window(curve)
    lo, hi = window
    sel = (curve.t_f >= lo * (1 - 1e-12)) & (curve.t_f <= hi * (1 + 1e-12))
    n = int(sel.sum())
    if n == 0:
        raise AnalysisError("fit window is empty")
    if n < 4:
        raise AnalysisError(f"fit window holds {n} samples, need >= 4")
    x = np.log(curve.t0 / curve.t_f[sel])
    y = np.log(curve.E[sel])
    X = np.stack([x, np.ones_like(x)], axis=1)
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    res = y - X @ coef
    return FitResult(float(coef[0]), float(math.exp(coef[1])),
                     float(np.sqrt(np.mean(res ** 2))), (lo, hi), n)


def fit_velocity_law(curve: ScalingCurve, alpha: float, T_i: float,
                     window: Optional[tuple] = None) -> FitResult:
    """Slope of log E against log v_T (v_T = T_i t_f^-alpha) at fixed path."""
    window = window or default_window(curve)
    lo, hi = window
    sel = (curve.t_f >= lo * (1 - 1e-12)) & (curve.t_f <= hi * (1 + 1e-12))
    if sel.sum() < 4:
        raise AnalysisError("velocity fit needs >= 4 samples")
    x = np.log(T_i * curve.t_f[sel] ** -alpha)
    y = np.log(curve.E[sel])
    X = np.stack([x, np.ones_like(x)], axis=1)
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    res = y - X @ coef
    return FitResult(float(coef[0]), float(math.exp(coef[1])),
                     float(np.sqrt(np.mean(res ** 2))), (lo, hi), int(sel.sum()))


# -- collapse ------------------------------------------------------------------

def collapse_velocities(ramp: RampSpec, cls, t0: float = 1.0):
    """(v_mu, v_T) of the fixed-velocity ramp whose density is the prefactor."""
    cls = RampClass(cls)
    v_mu = ramp.dmu_i * t0 ** -ramp.beta
    v_T = ramp.T_i * t0 ** -ramp.alpha
    if cls is RampClass.A:
        return 0.0, v_T
    if cls is RampClass.C:
        return v_mu, 0.0
    return v_mu, v_T


def collapse_kappa(kappa: float, s: float) -> float:
    """Limit of the rescaled kappa: unchanged for s = 1, zero for s < 1."""
    return kappa if s == 1 else 0.0


@dataclass
class CollapseResult:
    x: list          # per curve log(t0/t_f)
    y: list          # per curve log(E/D)/zeta
    spread: float
    slope: float
    window: tuple


def collapse(curves: Sequence[ScalingCurve], zetas: Sequence[float],
             Ds: Sequence[float], window: Optional[tuple] = None,
             n_bins: int = 50) -> CollapseResult:
    """Rescale curves to (log(t0/t_f), log(E/D)/zeta).

    ``spread`` is the largest cross-curve range of the collapsed ordinate over
    the window, with curves interpolated linearly in log t_f onto a common
    grid. ``slope`` is a joint least-squares slope over the window.
    """
    if len(curves) == 0:
        raise AnalysisError("no curves")
    if len(zetas) != len(curves) or len(Ds) != len(curves):
        raise AnalysisError("one zeta and one D needed per curve")
    for z, D in zip(zetas, Ds):
        if z is None or D is None or not (z > 0 and D > 0):
            raise AnalysisError("every curve needs zeta > 0 and D > 0")
    xs = [np.log(c.t0 / c.t_f) for c in curves]
    ys = [np.log(c.E / D) / z for c, z, D in zip(curves, zetas, Ds)]
    if window is None:
        hi = min(float(c.t_f[-1]) for c in curves)
        window = (hi / 10.0, hi)
    lo, hi = window
    # common abscissa in log t_f (all curves share t0 in practice)
    grid_lt = np.linspace(math.log(lo), math.log(hi), n_bins)
    stack = []
    px, py = [], []
    for c, y in zip(curves, ys):
        lt = np.log(c.t_f)
        if lt[0] > grid_lt[0] + 1e-9 or lt[-1] < grid_lt[-1] - 1e-9:
            raise AnalysisError("curve does not cover the collapse window")
        stack.append(np.interp(grid_lt, lt, y))
        sel = (c.t_f >= lo * (1 - 1e-12)) & (c.t_f <= hi * (1 + 1e-12))
        px.append(np.log(c.t0 / c.t_f[sel]))
        py.append(y[sel])
    stack = np.array(stack)
    spread = float(np.max(stack.max(axis=0) - stack.min(axis=0)))
    X = np.concatenate(px)
    Y = np.concatenate(py)
    if X.size >= 2 and np.ptp(X) > 0:
        slope = float(np.polyfit(X, Y, 1)[0])
    else:
        slope = float("nan")
    return CollapseResult(xs, ys, spread, slope, (lo, hi))


# -- scaling identity ----------------------------------------------------------

@dataclass(frozen=True)
class IdentityResult:
    a: float
    b: float
    lhs: float
    rhs: float
    residual: float
    converged: bool


def rescaled_arguments(ramp: RampSpec, bath: BathParams, kappa: float,
                       model: mdl.ModelSpec, a: float, b: float):
    """Right-hand-side arguments of the (a, b) homogeneity map."""
    r2 = RampSpec(ramp.alpha, ramp.beta,
                  a ** (1.0 / model.nu_z) * ramp.dmu_i, a * ramp.T_i,
                  b * ramp.t_f)
    b2 = replace(bath, gamma=bath.gamma / (a ** bath.s * b))
    return r2, b2, kappa / (a * b)


def verify_scaling_identity(ramp: RampSpec, model: mdl.ModelSpec,
                            bath: BathParams, opts: DynamicsOptions,
                            a: float, b: float,
                            force_exact: bool = False) -> IdentityResult:
    """|E - a^(-1/z) E(rescaled)| / E with the local (critical) dynamics.

    ``force_exact`` runs the lattice dispersion instead, for which the identity
    only holds asymptotically; it exists as a negative control.
    """
    if not (a > 0 and b > 0):
        raise AnalysisError("a and b must be > 0")
    o = replace(opts, use_local=not force_exact)
    lhs = excitation_density(ramp, model, bath, o)
    r2, b2, k2 = rescaled_arguments(ramp, bath, o.kappa, model, a, b)
    o2 = replace(o, kappa=k2)
    if o.eps_max is not None:
        o2 = replace(o2, eps_max=a * o.eps_max)
    rhs = excitation_density(r2, model, b2, o2)
    rhs_val = a ** (-1.0 / model.z) * rhs.E
    res = abs(lhs.E - rhs_val) / abs(lhs.E)
    return IdentityResult(a, b, lhs.E, rhs_val, res,
                          lhs.converged and rhs.converged)


# -- unitary limit -------------------------------------------------------------

@dataclass(frozen=True)
class CoherentResult:
    direct: float        # E(t_f) - E(0) from the T_i ramp itself
    rewrite: float       # same, from a single T_i = 0 run
    discrepancy: float   # relative
    zeta_coh: float
    max_mode_error: float


def coherent_correction(ramp: RampSpec, model: mdl.ModelSpec,
                        opts: DynamicsOptions,
                        bath: Optional[BathParams] = None) -> CoherentResult:
    """Non-adiabatic correction of a unitary ramp, computed two ways."""
    if bath is not None and bath.gamma != 0:
        raise AnalysisError("coherent_correction needs gamma = 0")
    bath0 = BathParams(0.0, bath.delta if bath else 1.0, bath.s if bath else 1.0)
    if ramp.dmu_i == 0:
        raise AnalysisError("a unitary ramp needs dmu_i != 0")
    grid = make_grid(model, ramp, opts)
    if ramp.T_i > 0:
        out_T, _ = integrate_labels(grid.labels, ramp, model, bath0, opts)
        P_T = out_T[:, -1, 0]
    P0 = initial_states(grid.labels, ramp, model, opts.use_local)[:, 0]
    cold = replace(ramp, T_i=0.0)
    out_0, _ = integrate_labels(grid.labels, cold, model, bath0, opts)
    P_cold = out_0[:, -1, 0]
    rewrite_modes = P_cold * (1.0 - 2.0 * P0) + P0
    if ramp.T_i == 0:
        P_T = P_cold
    direct = float(np.dot(grid.weights, P_T - P0))
    rewrite = float(np.dot(grid.weights, rewrite_modes - P0))
    disc = abs(direct - rewrite) / max(abs(direct), 1e-300)
    sig = np.abs(P_T) > 0
    mode_err = float(np.max(np.abs(P_T - rewrite_modes)[sig] / np.abs(P_T[sig]))) \
        if np.any(sig) else 0.0
    zc = predicted_exponent(RampClass.C, ramp.alpha, ramp.beta, model.nu,
                            model.z, bath0.s, coherent=True)
    return CoherentResult(direct, rewrite, disc, zc, mode_err)


def class_and_exponent(ramp: RampSpec, model: mdl.ModelSpec, bath: BathParams,
                       coherent: bool = False, conjectural: bool = False):
    cls = classify(ramp, model.nu_z)
    z = predicted_exponent(cls, ramp.alpha, ramp.beta, model.nu, model.z,
                           bath.s, coherent=coherent, conjectural=conjectural)
    return cls, z
