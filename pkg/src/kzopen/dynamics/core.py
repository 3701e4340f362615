"""Mode integration and quadrature of the excitation density.

Every mode carries (P, Re C, Im C). In physical time

    dP/dt = -R (P - P_th) + 2 bdot Im C
    dC/dt = -R C + 2i kappa lam C - 2i bdot (P - 1/2)

with bdot the rate of change of the Bogoliubov angle. Affine models (all
shipped ones) go through the compiled kernels; anything else falls back to
scipy's ``solve_ivp``.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .. import model as mdl
from ..bath import BathParams, relaxation_rate, thermal_occupation
from ..protocol import RampSpec, ramp_values, start_from_velocities
from . import _kernels as K
from .grids import ModeGrid, deepen, exact_grid, local_grid

_METHODS = {"dopri5": K.METHOD_DOPRI5, "radau5": K.METHOD_RADAU5,
            "auto": K.METHOD_AUTO}
_STATUS_NAMES = {K.STATUS_OK: "ok", K.STATUS_UNDERFLOW: "step-size underflow",
                 K.STATUS_MAX_STEPS: "max steps", K.STATUS_DEGENERATE: "degenerate"}


@dataclass(frozen=True)
class ModeState:
    P: float
    C_re: float
    C_im: float

    def as_array(self) -> np.ndarray:
        return np.array([self.P, self.C_re, self.C_im])


@dataclass(frozen=True)
class DynamicsOptions:
    """Numerical settings.

    ``depth``/``nodes`` set the graded grid (panels = depth + 1); the innermost
    panel is split further until its contribution changes by less than
    ``deepen_tol`` relative to E. ``onset`` chooses how modes handed to the
    implicit integrator start: "adiabatic" (C at its adiabatic-following value,
    dropping a transient of reported size) or "exact" (C = 0).
    """

    kappa: float = 1.0
    use_local: bool = False
    rel_tol: float = 1e-8
    abs_tol: float = 1e-12
    depth: int = 20
    nodes: int = 8
    eps_max: Optional[float] = None
    method: str = "auto"
    onset: str = "adiabatic"
    max_steps: int = 10_000_000
    stiff_threshold: float = 2000.0
    reject_fraction: float = 0.2
    deepen_tol: float = 1e-7
    max_depth: int = 200
    verify_grid: bool = False
    grid_tol: float = 1e-4
    threads: Optional[int] = None

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be > 0")
        if self.nodes * (self.depth + 1) < 16:
            raise ValueError("mode grid needs N >= 16")
        if self.kappa < 0:
            raise ValueError("kappa must be >= 0")
        if self.method not in _METHODS:
            raise ValueError(f"method must be one of {sorted(_METHODS)}")
        if self.onset not in ("adiabatic", "exact"):
            raise ValueError("onset must be 'adiabatic' or 'exact'")
        if self.eps_max is not None and not self.eps_max > 0:
            raise ValueError("eps_max must be > 0")

    def n_threads(self) -> int:
        return self.threads or os.cpu_count() or 1


@dataclass
class DensityResult:
    E: float
    tail: float
    n_modes: int
    depth: int
    onset_bound: float
    failures: list = field(default_factory=list)
    grid_error: float = float("nan")
    deepened: bool = True
    steps: int = 0
    implicit_modes: int = 0
    terminal_bound: float = 0.0

    @property
    def converged(self) -> bool:
        ok = not self.failures and self.deepened
        if not math.isnan(self.grid_error):
            ok = ok and self.grid_error <= 10.0
        return ok

    def __float__(self):
        return float(self.E)


@dataclass
class Trajectory:
    t: np.ndarray
    tau: np.ndarray
    dmu: np.ndarray
    T: np.ndarray
    E: np.ndarray
    density: DensityResult


# -- per-mode coefficients -----------------------------------------------------

def _elements(model: mdl.ModelSpec, dmu, label, use_local):
    if use_local:
        return mdl.local_elements(model, dmu, label)
    return model.a_fn(dmu, label), model.b_fn(dmu, label)


def _angle_slope(model: mdl.ModelSpec, dmu, label, use_local):
    """d(angle)/d(dmu) at fixed mode."""
    if not use_local:
        return mdl.angle_derivative(model, dmu, label)
    h = max(1e-7, 1e-7 * abs(dmu))
    up = mdl.local_angle(model, dmu + h, label)
    dn = mdl.local_angle(model, dmu - h, label)
    d = (up - dn + 0.5 * math.pi) % math.pi - 0.5 * math.pi
    return d / (2.0 * h)


def energy(model: mdl.ModelSpec, dmu, label, use_local=False):
    a, b = _elements(model, dmu, label, use_local)
    return np.hypot(a, b)


def mode_rhs(state: ModeState, tau: float, label: float, ramp: RampSpec,
             model: mdl.ModelSpec, bath: BathParams,
             opts: DynamicsOptions) -> ModeState:
    """d(P, Re C, Im C)/d tau, with tau = 1 - t/t_f running from 1 to 0."""
    if not 0.0 < tau <= 1.0:
        raise ValueError("tau must lie in (0, 1]")
    dmu, T = ramp_values(ramp, tau)
    lam = float(energy(model, dmu, label, opts.use_local))
    if ramp.dmu_i != 0:
        dmu_dt = -ramp.beta * ramp.dmu_i * tau ** (ramp.beta - 1.0) / ramp.t_f
        bdot = float(_angle_slope(model, dmu, label, opts.use_local)) * dmu_dt
    else:
        bdot = 0.0
    R = float(relaxation_rate(bath, lam, T))
    pth = float(thermal_occupation(lam, T))
    P, cr, ci = state.P, state.C_re, state.C_im
    om = 2.0 * opts.kappa * lam
    dP = -R * (P - pth) + 2.0 * bdot * ci
    dcr = -R * cr - om * ci
    dci = -R * ci + om * cr - 2.0 * bdot * (P - 0.5)
    tf = ramp.t_f
    return ModeState(-tf * dP, -tf * dcr, -tf * dci)


# -- compiled path -------------------------------------------------------------

def _par(ramp: RampSpec, bath: BathParams, kappa: float) -> np.ndarray:
    return np.array([ramp.dmu_i, ramp.T_i, ramp.alpha, ramp.beta,
                     ramp.stretch, ramp.t_f, bath.gamma, bath.delta, bath.s,
                     kappa], dtype=float)


def _coefficients(model: mdl.ModelSpec, labels, use_local):
    fn = model.local_affine if use_local else model.affine
    if fn is None:
        return None
    return np.ascontiguousarray(np.stack(fn(labels), axis=1), dtype=float)


def _s_points(tau_out, m):
    tau_out = np.asarray(tau_out, dtype=float)
    if np.any(np.diff(tau_out) >= 0):
        raise ValueError("tau_out must be strictly decreasing")
    if np.any((tau_out < 0) | (tau_out > 1)):
        raise ValueError("tau_out must lie in [0, 1]")
    return -(tau_out ** m)


def _run_kernel(coef, y0, par, s_out, opts: DynamicsOptions):
    n = coef.shape[0]
    out = np.zeros((n, s_out.size, 3))
    stats = np.zeros((n, K.N_STATS))
    args = (_METHODS[opts.method], opts.rel_tol, opts.abs_tol, opts.max_steps,
            opts.stiff_threshold, opts.reject_fraction, opts.onset == "adiabatic")
    nt = min(opts.n_threads(), max(1, n // 8))
    if nt <= 1:
        K.integrate_modes(coef, y0, par, s_out, *args, out, stats)
        return out, stats
    edges = np.linspace(0, n, 4 * nt + 1).astype(int)

    def work(i):
        a, b = edges[i], edges[i + 1]
        K.integrate_modes(coef[a:b], y0[a:b], par, s_out, *args,
                          out[a:b], stats[a:b])

    with ThreadPoolExecutor(max_workers=nt) as ex:
        list(ex.map(work, range(edges.size - 1)))
    return out, stats


# -- generic path --------------------------------------------------------------

def _generic_system(s, label, ramp, model, bath, kappa, use_local):
    m = ramp.stretch
    u = max(-s, 0.0)
    dmu = ramp.dmu_i * u ** (ramp.beta / m)
    T = ramp.T_i * u ** (ramp.alpha / m)
    w = ramp.t_f / m * u ** (1.0 / m - 1.0)
    lam = float(energy(model, dmu, label, use_local))
    if ramp.dmu_i != 0:
        rb = ramp.beta / m
        dmu_ds = -ramp.dmu_i * rb * u ** (rb - 1.0)
        bs = float(_angle_slope(model, dmu, label, use_local)) * dmu_ds
    else:
        bs = 0.0
    wr = w * float(relaxation_rate(bath, lam, T))
    wk = 2.0 * w * kappa * lam
    A = np.array([[-wr, 0.0, 2 * bs], [0.0, -wr, -wk], [-2 * bs, wk, -wr]])
    g = np.array([wr * float(thermal_occupation(lam, T)), 0.0, bs])
    return A, g


def _run_generic(labels, y0, ramp, model, bath, s_out, opts: DynamicsOptions):
    n = labels.size
    out = np.zeros((n, s_out.size, 3))
    stats = np.zeros((n, K.N_STATS))
    method = "DOP853" if opts.method == "dopri5" else "Radau"
    for i, lab in enumerate(labels):
        def f(s, y):
            A, g = _generic_system(s, lab, ramp, model, bath, opts.kappa,
                                   opts.use_local)
            return A @ y + g

        def jac(s, y):
            return _generic_system(s, lab, ramp, model, bath, opts.kappa,
                                   opts.use_local)[0]

        kw = {"jac": jac} if method == "Radau" else {}
        sol = solve_ivp(f, (-1.0, 0.0), y0[i], method=method, t_eval=s_out,
                        rtol=opts.rel_tol, atol=opts.abs_tol, **kw)
        stats[i, K.ST_ACCEPTED] = sol.nfev
        stats[i, K.ST_METHOD] = K.METHOD_RADAU5 if method == "Radau" else 0
        if sol.status != 0:
            stats[i, K.ST_STATUS] = K.STATUS_UNDERFLOW
            stats[i, K.ST_S_FAIL] = sol.t[-1] if sol.t.size else -1.0
            continue
        out[i] = sol.y.T
    return out, stats


# -- public API ----------------------------------------------------------------

def initial_states(labels, ramp: RampSpec, model: mdl.ModelSpec, use_local):
    lam = energy(model, ramp.dmu_i, labels, use_local)
    y0 = np.zeros((np.size(labels), 3))
    y0[:, 0] = thermal_occupation(lam, ramp.T_i)
    return y0


def integrate_labels(labels, ramp: RampSpec, model: mdl.ModelSpec,
                     bath: BathParams, opts: DynamicsOptions, tau_out=(0.0,),
                     y0=None):
    """Integrate each mode label; returns (states[n, n_out, 3], stats)."""
    labels = np.ascontiguousarray(np.atleast_1d(labels), dtype=float)
    s_out = _s_points(tau_out, ramp.stretch)
    if y0 is None:
        y0 = initial_states(labels, ramp, model, opts.use_local)
    y0 = np.ascontiguousarray(np.atleast_2d(y0), dtype=float)
    coef = _coefficients(model, labels, opts.use_local)
    if coef is None:
        return _run_generic(labels, y0, ramp, model, bath, s_out, opts)
    return _run_kernel(coef, y0, _par(ramp, bath, opts.kappa), s_out, opts)


def evolve_mode(label: float, ramp: RampSpec, model: mdl.ModelSpec,
                bath: BathParams, opts: DynamicsOptions,
                y0: Optional[Sequence[float]] = None) -> ModeState:
    """Final state of one mode at the critical point (tau = 0)."""
    if not opts.use_local and label == 0.0:
        raise mdl.DegeneratePointError("k = 0 is excluded (gapless at the end)")
    out, stats = integrate_labels([label], ramp, model, bath, opts,
                                  y0=None if y0 is None else [y0])
    st = int(stats[0, K.ST_STATUS])
    if st != K.STATUS_OK:
        tau_fail = (-stats[0, K.ST_S_FAIL]) ** (1.0 / ramp.stretch)
        raise IntegrationError(_STATUS_NAMES[st], tau_fail)
    P, cr, ci = out[0, -1]
    return ModeState(min(max(P, 0.0), 1.0), cr, ci)


class IntegrationError(RuntimeError):
    def __init__(self, reason, tau):
        super().__init__(f"integration failed ({reason}) at tau = {tau:.6g}")
        self.reason = reason
        self.tau = tau


def default_eps_max(model: mdl.ModelSpec, ramp: RampSpec) -> float:
    g = model.c2 * abs(ramp.dmu_i) ** model.nu_z
    return 20.0 * max(ramp.T_i, g)


def make_grid(model: mdl.ModelSpec, ramp: RampSpec, opts: DynamicsOptions,
              nodes=None) -> ModeGrid:
    nodes = nodes or opts.nodes
    if not opts.use_local:
        return exact_grid(opts.depth, nodes)
    top = opts.eps_max or default_eps_max(model, ramp)
    return local_grid(top, opts.depth, nodes,
                      lambda e: mdl.local_dos(model, e))


def _failures(grid, stats, ramp):
    bad = np.nonzero(stats[:, K.ST_STATUS] != K.STATUS_OK)[0]
    res = []
    for i in bad:
        tau = (-stats[i, K.ST_S_FAIL]) ** (1.0 / ramp.stretch)
        res.append((float(grid.labels[i]),
                    _STATUS_NAMES[int(stats[i, K.ST_STATUS])], float(tau)))
    return res


def _density_on_grid(ramp, model, bath, opts, tau_out, nodes=None):
    """Integrate on an adaptively deepened grid. Returns (grid, states, stats, ok)."""
    grid = make_grid(model, ramp, opts, nodes)
    out, stats = integrate_labels(grid.labels, ramp, model, bath, opts, tau_out)
    dos = (lambda e: mdl.local_dos(model, e)) if opts.use_local else None
    ok = False
    while grid.depth < opts.max_depth:
        inner = grid.innermost()
        old = float(np.dot(grid.weights[inner], out[inner, -1, 0]))
        total = float(np.dot(grid.weights, out[:, -1, 0]))
        new_grid, mask = deepen(grid, dos)
        o2, s2 = integrate_labels(new_grid.labels[mask], ramp, model, bath,
                                  opts, tau_out)
        out = np.concatenate([out[~inner], o2])
        stats = np.concatenate([stats[~inner], s2])
        grid = new_grid
        new = float(np.dot(grid.weights[mask], o2[:, -1, 0]))
        if abs(new - old) <= opts.deepen_tol * abs(total) or total == 0.0:
            ok = True
            break
    return grid, out, stats, ok


def _tail(grid: ModeGrid, P_final, model):
    """Estimate of the density above eps_max, assuming P decays at least as
    eps^-2 beyond the outermost node."""
    if grid.kind != "local":
        return 0.0
    i = int(np.argmax(grid.labels))
    e = grid.labels[i]
    return float(abs(P_final[i]) * mdl.local_dos(model, e) * e)


def _summarise(grid, out, stats, ok, ramp, model):
    P = out[:, -1, 0]
    E = float(np.dot(grid.weights, P))
    onset = float(np.dot(grid.weights, stats[:, K.ST_ONSET]))
    return DensityResult(
        E=E, tail=_tail(grid, P, model), n_modes=grid.size, depth=grid.depth,
        onset_bound=onset, failures=_failures(grid, stats, ramp), deepened=ok,
        steps=int(stats[:, K.ST_ACCEPTED].sum() + stats[:, K.ST_REJECTED].sum()),
        implicit_modes=int((stats[:, K.ST_METHOD] == K.METHOD_RADAU5).sum()))


def excitation_density(ramp: RampSpec, model: mdl.ModelSpec, bath: BathParams,
                       opts: DynamicsOptions) -> DensityResult:
    """Excitation density at the end of the ramp."""
    grid, out, stats, ok = _density_on_grid(ramp, model, bath, opts, (0.0,))
    res = _summarise(grid, out, stats, ok, ramp, model)
    if opts.verify_grid:
        g2, o2, s2, ok2 = _density_on_grid(ramp, model, bath, opts, (0.0,),
                                           nodes=2 * opts.nodes)
        E2 = float(np.dot(g2.weights, o2[:, -1, 0]))
        rel = abs(E2 - res.E) / max(abs(E2), 1e-300)
        # in units of the target: > 10 means non-convergence
        res.grid_error = rel / opts.grid_tol
        res.failures += _failures(g2, s2, ramp)
        if res.grid_error > 10.0:
            res.failures.append(("grid", f"refinement disagrees: {res.E!r} vs {E2!r}",
                                 0.0))
    return res


def excitation_trajectory(ramp: RampSpec, model: mdl.ModelSpec,
                          bath: BathParams, opts: DynamicsOptions,
                          n_samples: int) -> Trajectory:
    """E(t) at ``n_samples`` times equally spaced in t from 0 to t_f."""
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    tau = np.linspace(1.0, 0.0, n_samples)
    grid, out, stats, ok = _density_on_grid(ramp, model, bath, opts, tau)
    E = out[:, :, 0].T @ grid.weights
    dmu = ramp.dmu_i * tau ** ramp.beta
    T = ramp.T_i * tau ** ramp.alpha
    return Trajectory(t=ramp.t_f * (1.0 - tau), tau=tau, dmu=dmu, T=T, E=E,
                      density=_summarise(grid, out, stats, ok, ramp, model))


def thermal_density(model: mdl.ModelSpec, dmu: float, T: float,
                    opts: DynamicsOptions, eps_max: Optional[float] = None):
    """Equilibrium density sum_k w P_th on the same grid family as the dynamics."""
    if opts.use_local:
        top = eps_max or opts.eps_max or 20.0 * max(T, model.c2 * abs(dmu) ** model.nu_z)
        if top == 0.0:
            # gapless and cold: nothing is excited
            return 0.0
        grid = local_grid(top, opts.depth, opts.nodes,
                          lambda e: mdl.local_dos(model, e))
    else:
        grid = exact_grid(opts.depth, opts.nodes)
    lam = energy(model, dmu, grid.labels, opts.use_local)
    return float(np.dot(grid.weights, thermal_occupation(lam, T)))


def relax_at_fixed_point(labels, model: mdl.ModelSpec, bath: BathParams,
                         dmu: float, T: float, t: float, P0,
                         opts: DynamicsOptions, n_out: int = 1):
    """Hold (dmu, T) fixed for a time ``t`` starting from occupations ``P0``.

    Returns (times, P[n_modes, n_out], stats).
    """
    labels = np.ascontiguousarray(np.atleast_1d(labels), dtype=float)
    coef = _coefficients(model, labels, opts.use_local)
    if coef is None:
        raise NotImplementedError("fixed-point relaxation needs an affine model")
    par = np.array([dmu, T, 0.0, 0.0, 1.0, t, bath.gamma, bath.delta, bath.s,
                    opts.kappa])
    y0 = np.zeros((labels.size, 3))
    y0[:, 0] = P0
    frac = np.linspace(0.0, 1.0, n_out + 1)[1:]
    s_out = frac - 1.0
    out, stats = _run_kernel(coef, y0, par, s_out,
                             replace(opts, onset="exact"))
    return frac * t, out[:, :, 0], stats


@dataclass
class FixedVelocityResult:
    D: float
    ladder: list
    converged: bool
    trend: str

    def __float__(self):
        return float(self.D)


def fixed_velocity_density(v_mu: float, v_T: float, alpha: float, beta: float,
                           gamma: float, kappa: float, model: mdl.ModelSpec,
                           bath: BathParams, opts: DynamicsOptions,
                           t_f0: float = 1.0, rtol: float = 1e-3,
                           max_doublings: int = 12) -> FixedVelocityResult:
    """Limit of E as t_f grows with the ramp velocities held fixed."""
    if v_mu == 0 and v_T <= 0:
        raise ValueError("need at least one non-zero velocity")
    if v_T < 0:
        raise ValueError("v_T must be >= 0")
    b = replace(bath, gamma=gamma)
    o = replace(opts, kappa=kappa)
    ladder = []
    t_f = float(t_f0)
    prev = None
    for _ in range(max_doublings + 1):
        dmu_i, T_i = start_from_velocities(v_mu, v_T, alpha, beta, t_f)
        ramp = RampSpec(alpha, beta, dmu_i, T_i, t_f)
        E = excitation_density(ramp, model, b, o).E
        ladder.append((t_f, E))
        if prev is not None and abs(E - prev) <= rtol * abs(E):
            return FixedVelocityResult(E, ladder, True, "converged")
        prev = E
        t_f *= 2.0
    d = np.diff([e for _, e in ladder[-4:]])
    trend = ("increasing" if np.all(d > 0) else
             "decreasing" if np.all(d < 0) else "oscillating")
    return FixedVelocityResult(ladder[-1][1], ladder, False, trend)
