import numpy as np
import pytest

from chlab import (
    Grid,
    MeanInfeasible,
    Parameters,
    PotentialSpec,
    ScalarField,
    SchemeConfig,
    State,
    initial_state,
    run,
)
from chlab import potentials as pot
from chlab.spectral_core import mean, norm_H2, norm_L2
from chlab.steady import elliptic_solve, solve_stationary, stationary_residual

from conftest import bandlimited_field


def test_convex_regime_returns_constants():
    # theta0 < theta makes the per-slot potential strictly convex, so the
    # only steady state with the given means is the constant pair (checked
    # against the gradient-flow intuition: any guess must collapse)
    p = Parameters(sigma=1.0, c=0.1, theta_u=1.5, theta0_u=0.5, theta_v=1.5, theta0_v=0.5)
    g = Grid(64, 4.0)
    rng = np.random.default_rng(2)
    guess = State(
        0.0,
        ScalarField(g, 0.2 + 0.3 * rng.uniform(-1, 1, g.shape)),
        ScalarField(g, -0.1 + 0.3 * rng.uniform(-1, 1, g.shape)),
    )
    sol, mult, iters = solve_stationary(guess, p, u_mean_target=0.2, tol=1e-10)
    assert np.max(np.abs(sol.u.values - 0.2)) < 1e-9
    assert np.max(np.abs(sol.v.values - 0.1)) < 1e-9
    assert mean(sol.u) == pytest.approx(0.2, abs=1e-12)
    assert mean(sol.v) == pytest.approx(0.1, abs=1e-12)
    ru, rv = stationary_residual(sol, p)
    assert ru <= 1e-10 and rv <= 1e-10
    # multipliers are the mean chemical potentials
    spec = PotentialSpec(p)
    assert mult[0] == pytest.approx(float(np.mean(pot.f_du(sol.u.values, sol.v.values, spec))))
    assert mult[1] == pytest.approx(float(np.mean(pot.f_dv(sol.u.values, sol.v.values, spec))))


def test_mean_infeasible():
    p = Parameters()
    g = Grid(64, 4.0)
    guess = initial_state(g, means=(0.0, 0.0), amplitude=0.01, seed=1)
    with pytest.raises(MeanInfeasible):
        solve_stationary(guess, p, u_mean_target=1.0, tol=1e-8)


def test_multiplier_equations_hold():
    # the full stationary equations hold with the returned constants
    from chlab.spectral_core import laplacian

    p = Parameters(sigma=0.7, c=0.05, theta_u=0.6, theta0_u=1.0, theta_v=0.6, theta0_v=1.0,
                   coupling_a=0.2, coupling_b=0.1, coupling_c=-0.1)
    g = Grid(128, 6.0)
    burn = run(
        initial_state(g, means=(0.1, 0.05), amplitude=0.05, seed=3),
        20.0,
        SchemeConfig(tau=0.02),
        p,
    )
    sol, mult, _ = solve_stationary(burn, p, tol=1e-11)
    spec = PotentialSpec(p)
    eq_u = (
        -p.eps_u**2 * laplacian(sol.u).values
        + pot.f_du(sol.u.values, sol.v.values, spec)
        - mult[0]
    )
    nl = g.lam_inv * g.fwd(sol.v.values - mean(sol.v))
    nl.flat[0] = 0.0
    eq_v = (
        -p.eps_v**2 * laplacian(sol.v).values
        + pot.f_dv(sol.u.values, sol.v.values, spec)
        + p.sigma * g.inv(nl)
        - mult[1]
    )
    assert norm_L2(ScalarField(g, eq_u)) < 1e-9
    assert norm_L2(ScalarField(g, eq_v)) < 1e-9
    # measured strict separation of the steady state
    assert np.max(np.abs(sol.u.values)) < 1.0 - 1e-6
    assert np.max(np.abs(sol.v.values)) < 1.0 - 1e-6


def test_decoupled_static_matches_dynamic():
    # sigma = 0, W = 0: long-time dynamics settles onto a stationary pair
    # (domain below the first unstable wavelength, so it settles fast)
    p = Parameters(sigma=0.0, c=0.0, theta_u=0.6, theta0_u=1.0, theta_v=0.6, theta0_v=1.0)
    g = Grid(128, 3.5)
    fin = run(
        initial_state(g, means=(0.1, -0.1), amplitude=0.05, seed=4),
        60.0,
        SchemeConfig(tau=0.05),
        p,
    )
    tol = 1e-9
    sol, _, _ = solve_stationary(fin, p, tol=tol)
    du = norm_L2(ScalarField(g, sol.u.values - fin.u.values))
    dv = norm_L2(ScalarField(g, sol.v.values - fin.v.values))
    assert du <= 10 * tol or du <= 1e-7  # dynamics already at the branch
    assert dv <= 10 * tol or dv <= 1e-7


def test_restart_from_steady_is_stable():
    p = Parameters(sigma=0.7, c=0.05, theta_u=0.6, theta0_u=1.0, theta_v=0.6, theta0_v=1.0,
                   coupling_a=0.2, coupling_b=0.1, coupling_c=-0.1)
    g = Grid(128, 6.0)
    burn = run(
        initial_state(g, means=(0.1, 0.05), amplitude=0.05, seed=3),
        20.0,
        SchemeConfig(tau=0.02),
        p,
    )
    tol = 1e-11
    sol, _, _ = solve_stationary(burn, p, tol=tol)
    after = run(State(0.0, sol.u, sol.v), 1.0, SchemeConfig(tau=0.02), p)
    drift = norm_L2(ScalarField(g, after.u.values - sol.u.values)) + norm_L2(
        ScalarField(g, after.v.values - sol.v.values)
    )
    assert drift <= 10 * tol or drift <= 1e-8


def test_stationary_residual_signs(grid1d, params):
    # positive on a transient state, tiny on constants in the convex regime
    p = Parameters(sigma=0.5, c=0.0, theta_u=1.5, theta0_u=0.5, theta_v=1.5, theta0_v=0.5)
    g = Grid(64, 4.0)
    const = State(
        0.0,
        ScalarField(g, np.full(g.shape, 0.2)),
        ScalarField(g, np.full(g.shape, 0.0)),
    )
    ru, rv = stationary_residual(const, p)
    assert ru < 1e-13 and rv < 1e-13

    quench = Parameters(sigma=0.5, c=0.0, theta_u=0.3, theta0_u=1.0, theta_v=0.3, theta0_v=1.0)
    mid = run(
        initial_state(Grid(64, 8.0), means=(0.0, 0.1), amplitude=0.05, seed=5),
        2.0,
        SchemeConfig(tau=0.01),
        quench,
    )
    ru2, rv2 = stationary_residual(mid, quench)
    assert ru2 > 1e-6 and rv2 > 1e-6


# -- elliptic Neumann problem ------------------------------------------------


def test_elliptic_zero_data():
    g = Grid(256, 4.0)
    w = elliptic_solve(ScalarField(g, np.zeros(g.shape)), 0.8, tol=1e-11)
    assert norm_L2(w) <= 1e-11


def test_elliptic_constant_data_matches_bisection():
    g = Grid(64, 4.0)
    theta, k = 0.8, 0.7
    w = elliptic_solve(ScalarField(g, np.full(g.shape, k)), theta, tol=1e-12)
    lo, hi = 0.0, 1.0 - 1e-15
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if pot.fh_hat_d1(mid, theta) < k:
            lo = mid
        else:
            hi = mid
    assert np.max(np.abs(w.values - lo)) < 1e-11


def test_elliptic_residual_and_interior(grid1d):
    g = Grid(256, 4.0)
    rng = np.random.default_rng(6)
    f = bandlimited_field(g, rng, frac=0.15, scale=0.5)
    w = elliptic_solve(f, 0.9, tol=1e-10)
    from chlab.spectral_core import laplacian

    resid = -laplacian(w).values + pot.fh_hat_d1(w.values, 0.9) - f.values
    assert norm_L2(ScalarField(g, resid)) <= 1e-10
    assert np.max(np.abs(w.values)) < 1.0


def test_elliptic_monotone_dependence():
    g = Grid(128, 4.0)
    rng = np.random.default_rng(7)
    f1 = bandlimited_field(g, rng, frac=0.1, scale=1.0)
    bump = np.abs(bandlimited_field(g, rng, frac=0.1, scale=0.5).values)
    f2 = ScalarField(g, f1.values + bump)
    w1 = elliptic_solve(f1, 0.8, tol=1e-11)
    w2 = elliptic_solve(f2, 0.8, tol=1e-11)
    assert np.all(w2.values >= w1.values - 1e-9)


def test_elliptic_apriori_estimate_probe():
    # fitted constant in ||w||_H2 + ||S'(w)|| <= C (1 + ||f||) is stable
    # when the data doubles
    g = Grid(256, 4.0)
    rng = np.random.default_rng(8)

    def fitted_constant(scale, count=12):
        cs = []
        for _ in range(count):
            f = bandlimited_field(g, rng, frac=0.15, scale=scale)
            w = elliptic_solve(f, 0.8, tol=1e-10)
            num = norm_H2(w) + norm_L2(ScalarField(g, pot.fh_hat_d1(w.values, 0.8)))
            cs.append(num / (1.0 + norm_L2(f)))
        return max(cs)

    c1 = fitted_constant(0.25)
    c2 = fitted_constant(0.5)
    assert max(c1, c2) / min(c1, c2) < 2.0
