import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from kzopen import BathParams, RampSpec, kitaev, relaxation_rate, thermal_occupation
from kzopen.dynamics import (DynamicsOptions, IntegrationError, ModeState,
                             energy, evolve_mode, exact_grid,
                             excitation_density, excitation_trajectory,
                             fixed_velocity_density, integrate_labels,
                             make_grid, mode_rhs, relax_at_fixed_point,
                             thermal_density)
from kzopen.model import DegeneratePointError, angle_derivative

KIT = kitaev()
OPTS = DynamicsOptions()
BATH = BathParams(0.05)
B1 = RampSpec(1.0, 1.0, -0.28, 0.28, math.exp(7))


def test_options_validation():
    for kw in (dict(rel_tol=0), dict(abs_tol=-1), dict(kappa=-1), dict(method="rk45"),
               dict(onset="x"), dict(depth=0, nodes=8), dict(eps_max=0.0)):
        with pytest.raises(ValueError):
            DynamicsOptions(**kw)


# -- mode equations -----------------------------------------------------------

def test_mode_rhs_frozen_isolated():
    r = RampSpec(1.0, 1.0, 0.0, 0.3, 50.0)      # parameter frozen at mu_c
    st_ = ModeState(0.2, 0.1, -0.05)
    d = mode_rhs(st_, 0.5, 0.4, r, KIT, BathParams(0.0), OPTS)
    lam = float(energy(KIT, 0.0, 0.4))
    om = 2 * lam * 50.0
    assert d.P == 0.0
    # tau runs backwards in time, hence the sign
    assert d.C_re == pytest.approx(om * -0.05)
    assert d.C_im == pytest.approx(-om * 0.1)


def test_mode_rhs_rate_equation():
    r = RampSpec(1.0, 1.0, 0.0, 0.3, 50.0)
    o = replace(OPTS, kappa=0.0)
    d = mode_rhs(ModeState(0.4, 0.0, 0.0), 0.5, 0.4, r, KIT, BATH, o)
    lam = float(energy(KIT, 0.0, 0.4))
    T = 0.15
    R = float(relaxation_rate(BATH, lam, T))
    want = 50.0 * R * (0.4 - float(thermal_occupation(lam, T)))
    assert d.P == pytest.approx(want, rel=1e-14)
    assert d.C_re == 0.0 and d.C_im == 0.0


@settings(max_examples=100, deadline=None)
@given(st.floats(0.05, 3.0), st.floats(0.01, 1.0), st.floats(-0.9, -0.05),
       st.floats(0.0, 1.0), st.floats(0.3, 3.0), st.floats(0.3, 3.0),
       st.floats(0.0, 1.0), st.floats(-0.5, 0.5), st.floats(-0.5, 0.5),
       st.floats(0.0, 0.2), st.sampled_from([0.0, 1.0]), st.booleans())
def test_mode_rhs_matches_matrix_oracle(k, tau, dmu_i, T_i, al, be, P, cr, ci,
                                         gamma, kappa, local):
    r = RampSpec(al, be, dmu_i, T_i, 37.0)
    bath = BathParams(gamma)
    o = replace(OPTS, kappa=kappa, use_local=local)
    d = mode_rhs(ModeState(P, cr, ci), tau, k, r, KIT, bath, o)
    dmu = dmu_i * tau ** be
    T = T_i * tau ** al
    if local:
        a, b = 2 * dmu, k
        lam = math.hypot(a, b)
        dang = 0.5 * b * 2 / lam ** 2
    else:
        lam = float(oracles.kitaev_lambda(dmu, k))
        a = 2 * (dmu - 1 + math.cos(k))
        dang = 0.5 * math.sin(k) * 2 / lam ** 2
    bdot = dang * (-be * dmu_i * tau ** (be - 1) / 37.0)
    if T > 0:
        R = 2 * math.pi * gamma * lam / math.tanh(min(lam / (2 * T), 700))
    else:
        R = 2 * math.pi * gamma * lam
    M, g = oracles.mode_matrix(R, lam, bdot, float(oracles.fermi(lam, T)), kappa)
    want = -37.0 * (M @ np.array([P, cr, ci]) + g)
    got = np.array([d.P, d.C_re, d.C_im])
    np.testing.assert_allclose(got, want, rtol=1e-6, atol=1e-9 * (1 + np.abs(want).max()))


def test_mode_rhs_domain():
    with pytest.raises(ValueError):
        mode_rhs(ModeState(0, 0, 0), 0.0, 0.3, B1, KIT, BATH, OPTS)


# -- single modes ---------------------------------------------------------------

def test_relaxation_closed_form(rng):
    k = np.array([0.05, 0.3, 1.0, 2.5])
    dmu, T = -0.4, 0.3
    lam = energy(KIT, dmu, k)
    R = relaxation_rate(BATH, lam, T)
    pth = thermal_occupation(lam, T)
    P0 = rng.random(k.size)
    t_end = 5.0 / R.min()
    times, P, st_ = relax_at_fixed_point(k, KIT, BATH, dmu, T, t_end, P0,
                                         replace(OPTS, abs_tol=1e-16), n_out=10)
    want = pth[:, None] + (P0 - pth)[:, None] * np.exp(-R[:, None] * times[None, :])
    np.testing.assert_allclose(P, want, rtol=1e-6)


def test_ground_state_is_stationary():
    k = exact_grid(4, 8).labels
    _, P, _ = relax_at_fixed_point(k, KIT, BathParams(0.0), -0.3, 0.0, 1e3,
                                   np.zeros(k.size), OPTS, n_out=5)
    assert np.all(P == 0.0)


def test_temperature_only_ramp_without_bath_keeps_occupations():
    r = RampSpec(1.0, 1.0, 0.0, 0.5, 100.0)
    k = np.array([0.1, 0.7, 2.0])
    out, _ = integrate_labels(k, r, KIT, BathParams(0.0), OPTS)
    np.testing.assert_allclose(out[:, -1, 0], thermal_occupation(energy(KIT, 0.0, k), 0.5),
                               rtol=1e-12)


def test_evolve_mode_matches_rk4_unitary_linear_ramp():
    r = RampSpec(1.0, 1.0, -0.5, 0.0, 20.0)
    k = 0.3
    st_ = evolve_mode(k, r, KIT, BathParams(0.0), replace(OPTS, rel_tol=1e-10, abs_tol=1e-14))
    ref = oracles.rk4_modes([k], [-0.5], [0.0], [1.0], [1.0], [20.0], [0.0], [1.0], 20000)
    assert st_.P == pytest.approx(ref[0, 0], rel=1e-6)
    assert st_.P > 1e-4


def test_evolve_mode_rejects_gapless_label():
    with pytest.raises(DegeneratePointError):
        evolve_mode(0.0, B1, KIT, BATH, OPTS)


def test_integration_failure_is_reported():
    r = RampSpec(1.0, 1.0, -0.28, 0.28, 1e4)
    with pytest.raises(IntegrationError):
        evolve_mode(0.3, r, KIT, BATH, replace(OPTS, method="dopri5", max_steps=10))


@pytest.mark.parametrize("T_i", [0.0, 0.3])
def test_bloch_vector_stays_physical(T_i):
    r = RampSpec(1.0, 1.0, -0.28, T_i, 300.0)
    grid = exact_grid(10, 8)
    tau = np.linspace(1.0, 0.0, 21)
    for bath in (BATH, BathParams(0.0)):
        out, _ = integrate_labels(grid.labels, r, KIT, bath, OPTS, tau_out=tau)
        P = out[..., 0]
        C = np.hypot(out[..., 1], out[..., 2])
        assert P.min() >= -1e-9 and P.max() <= 1 + 1e-9
        assert C.max() <= 0.5 + 1e-9


def test_methods_agree():
    r = RampSpec(0.5, 1.0, -0.28, 0.28, 300.0)
    k = np.array([0.02, 0.2, 1.0])
    res = [integrate_labels(k, r, KIT, BATH, replace(OPTS, method=m, rel_tol=1e-10,
                                                      abs_tol=1e-14))[0][:, -1, 0]
           for m in ("dopri5", "radau5", "auto")]
    np.testing.assert_allclose(res[1], res[0], rtol=1e-7)
    np.testing.assert_allclose(res[2], res[0], rtol=1e-7)


def test_generic_model_path_matches_compiled():
    from kzopen.model import ModelSpec
    g = ModelSpec(mu_c=-1.0, nu=1.0, z=1.0, c1=1.0, c2=2.0, a_fn=KIT.a_fn,
                  b_fn=KIT.b_fn, da_fn=KIT.da_fn, db_fn=KIT.db_fn)
    r = RampSpec(1.0, 1.0, -0.3, 0.2, 30.0)
    k = np.array([0.1, 0.8])
    o = replace(OPTS, rel_tol=1e-10, abs_tol=1e-13)
    a, _ = integrate_labels(k, r, KIT, BATH, o)
    b, _ = integrate_labels(k, r, g, BATH, o)
    np.testing.assert_allclose(b[:, -1, 0], a[:, -1, 0], rtol=1e-6)


# -- densities ------------------------------------------------------------------

def test_thermal_density_matches_quadrature():
    for dmu, T in [(-0.3, 0.4), (0.2, 1.0)]:
        assert thermal_density(KIT, dmu, T, OPTS) == pytest.approx(
            oracles.thermal_density(dmu, T), rel=1e-8)



def test_thermal_density_vanishes_at_cold_critical_point():
    loc = DynamicsOptions(use_local=True)
    assert thermal_density(KIT, 0.0, 0.0, loc) == 0.0
    assert thermal_density(KIT, 0.0, 0.0, OPTS) == 0.0

def test_no_bath_no_temperature_no_ramp_gives_zero():
    g = exact_grid(20, 8)
    _, P, _ = relax_at_fixed_point(g.labels, KIT, BathParams(0.0), -0.28, 0.0, 1e3,
                                   np.zeros(g.size), OPTS)
    assert float(g.weights @ P[:, -1]) == 0.0


def test_long_hold_reaches_thermal_density():
    g = exact_grid(20, 8)
    dmu, T = -0.28, 0.2
    lam = energy(KIT, dmu, g.labels)
    R = relaxation_rate(BATH, lam, T)
    _, P, _ = relax_at_fixed_point(g.labels, KIT, BATH, dmu, T, 60.0 / R.min(),
                                   np.zeros(g.size), replace(OPTS, abs_tol=1e-20))
    assert float(g.weights @ P[:, -1]) == pytest.approx(oracles.thermal_density(dmu, T),
                                                        rel=1e-6)


def test_class_b_slope():
    tfs = 10 ** np.linspace(3.5, 6.0, 6)
    r = RampSpec(1.0, 1.0, -0.28, 0.28, 1.0)
    E = [excitation_density(r.with_tf(t), KIT, BATH, OPTS).E for t in tfs]
    slope = -np.polyfit(np.log(tfs), np.log(E), 1)[0]
    assert slope == pytest.approx(0.5, abs=0.03)


def test_grid_convergence():
    for tf in (1e3, 1e5):
        r = B1.with_tf(tf)
        e1 = excitation_density(r, KIT, BATH, OPTS).E
        e2 = excitation_density(r, KIT, BATH, replace(OPTS, nodes=16)).E
        assert abs(e2 - e1) / e1 < 1e-4


def test_verify_grid_flag():
    res = excitation_density(B1, KIT, BATH, replace(OPTS, verify_grid=True))
    assert res.converged and res.grid_error < 1.0


def test_exact_and_local_agree_for_slow_ramps():
    for tf in (1e5, 1e6):
        r = B1.with_tf(tf)
        ex = excitation_density(r, KIT, BATH, OPTS).E
        lo = excitation_density(r, KIT, BATH, replace(OPTS, use_local=True)).E
        assert abs(ex - lo) / ex < 0.05


def test_thread_count_does_not_change_results():
    r = RampSpec(0.5, 1.0, -0.28, 0.28, 1e4)
    E = [excitation_density(r, KIT, BATH, replace(OPTS, threads=n)).E for n in (1, 2, 3)]
    assert E[0] == E[1] == E[2]


def test_deterministic():
    a = excitation_density(B1, KIT, BATH, OPTS).E
    b = excitation_density(B1, KIT, BATH, OPTS).E
    assert a == b


def test_local_tail_is_small():
    res = excitation_density(B1.with_tf(1e4), KIT, BATH, replace(OPTS, use_local=True))
    assert 0 <= res.tail < 1e-6 * res.E


# -- trajectories ----------------------------------------------------------------

def test_trajectory_starts_thermal():
    tr = excitation_trajectory(B1, KIT, BATH, OPTS, 11)
    assert tr.E[0] == pytest.approx(thermal_density(KIT, -0.28, 0.28, OPTS), rel=1e-12)
    assert tr.tau[0] == 1.0 and tr.tau[-1] == 0.0
    assert tr.t[-1] == pytest.approx(B1.t_f)
    assert tr.dmu[-1] == 0.0 and tr.T[-1] == 0.0
    with pytest.raises(ValueError):
        excitation_trajectory(B1, KIT, BATH, OPTS, 1)


def test_basis_rotation_only_grows_monotonically():
    tr = excitation_trajectory(B1, KIT, BathParams(0.0), replace(OPTS, kappa=0.0), 41)
    assert np.all(np.diff(tr.E) >= 0)


def test_full_dynamics_below_incoherent():
    E = {}
    for name, bath, kappa in [("full", BATH, 1.0), ("incoherent", BATH, 0.0),
                              ("coherent", BathParams(0.0), 1.0)]:
        E[name] = excitation_trajectory(B1, KIT, bath, replace(OPTS, kappa=kappa), 5).E[-1]
    assert E["full"] < E["incoherent"]
    # the unitary run keeps the initial thermal population, the bath cools it
    assert E["full"] < E["coherent"]


# -- fixed velocity ----------------------------------------------------------------

def test_fixed_velocity_temperature_only_finite():
    res = fixed_velocity_density(0.0, 1e-2, 0.5, 1.0, 0.05, 1.0, KIT, BATH,
                                 replace(OPTS, use_local=True))
    assert res.converged and 0 < res.D < 1
    assert res.ladder[1][0] == 2 * res.ladder[0][0]


def test_fixed_velocity_monotone_in_vT():
    o = replace(OPTS, use_local=True)
    D = [fixed_velocity_density(0.0, v, 1.0, 1.0, 0.05, 1.0, KIT, BATH, o).D
         for v in (1e-1, 1e-2, 1e-3)]
    assert D[0] > D[1] > D[2]


def test_fixed_velocity_nonconvergence_reported():
    res = fixed_velocity_density(0.0, 1e-2, 0.5, 1.0, 0.05, 1.0, KIT, BATH,
                                 replace(OPTS, use_local=True), rtol=1e-14,
                                 max_doublings=3)
    assert not res.converged and len(res.ladder) == 4
    assert res.trend in ("increasing", "decreasing", "oscillating")


def test_fixed_velocity_errors():
    with pytest.raises(ValueError):
        fixed_velocity_density(0.0, 0.0, 1, 1, 0.05, 1.0, KIT, BATH, OPTS)


def test_fixed_velocity_matches_landau_zener_mode_sum():
    res = fixed_velocity_density(-1.0, 0.0, 1.0, 1.0, 0.0, 1.0, KIT, BathParams(0.0),
                                 replace(OPTS, use_local=True))
    assert res.converged
    assert res.D == pytest.approx(oracles.lz_density(1.0), rel=0.05)


def test_default_eps_max():
    g = make_grid(KIT, RampSpec(1, 1, -0.3, 0.1, 1.0), replace(OPTS, use_local=True))
    assert g.top == pytest.approx(20 * 0.6)


def test_angle_slope_formula():
    # analytic partial used by the compiled kernels
    dmu, k = -0.2, 0.7
    a = 2 * (dmu - 1 + math.cos(k))
    assert angle_derivative(KIT, dmu, k) == pytest.approx(
        math.sin(k) / (a * a + math.sin(k) ** 2))
