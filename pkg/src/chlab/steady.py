"""Stationary system with mass constraints, and the singular elliptic solve.

The stationary problem pairs

    -eps_u^2 lap(u) + dF/du(u, v)                      = const_u,
    -eps_v^2 lap(v) + dF/dv(u, v) + sigma N(v - mean)  = const_v,

with Neumann walls and prescribed means (mean(u) = target, mean(v) = c).
The constants are the mean chemical potentials; enforcing the means by
projecting Newton updates onto mean-zero fields recovers them as the
means of the corresponding equation's left-hand side.

elliptic_solve handles -lap(w) + S_hat'(w) = f, the scalar Neumann
problem whose a-priori bound ||w||_{H2} + ||S_hat'(w)|| <= C (1 + ||f||)
the diagnostics suite probes empirically.
"""

from __future__ import annotations

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from . import potentials as pot
from .errors import GridMismatch, MeanInfeasible, NewtonDiverged
from .solver import State, _damped_length
from .spectral_core import Grid, ScalarField

_EPS = np.finfo(np.float64).eps


def _residual_pair(grid: Grid, u: np.ndarray, v: np.ndarray, params: pot.Parameters,
                   spec: pot.PotentialSpec):
    """Coefficient-space mean-free residuals of both stationary equations."""
    p = params
    Ru = p.eps_u**2 * grid.lam * grid.fwd(u) + grid.fwd(pot.f_du(u, v, spec))
    Vc = grid.fwd(v)
    Rv = p.eps_v**2 * grid.lam * Vc + grid.fwd(pot.f_dv(u, v, spec))
    if p.sigma != 0.0:
        nl = p.sigma * grid.lam_inv * Vc
        nl.flat[0] = 0.0
        Rv = Rv + nl
    Ru.flat[0] = 0.0
    Rv.flat[0] = 0.0
    return Ru, Rv


def stationary_residual(state: State, params: pot.Parameters,
                        spec: pot.PotentialSpec | None = None) -> tuple[float, float]:
    """L2 norms of the mean-free stationary residuals; zero iff steady."""
    if spec is None:
        spec = pot.PotentialSpec(params)
    grid = state.grid
    Ru, Rv = _residual_pair(grid, state.u.values, state.v.values, params, spec)
    return float(np.sqrt(np.sum(Ru**2))), float(np.sqrt(np.sum(Rv**2)))


def solve_stationary(guess: State, params: pot.Parameters,
                     spec: pot.PotentialSpec | None = None,
                     u_mean_target: float | None = None, tol: float = 1e-10,
                     max_iter: int = 60, safeguard_margin: float = 1e-12):
    """Newton with mass-constraint projection on the stationary system.

    Returns (steady State, (mult_u, mult_v)) where the multipliers are the
    mean chemical potentials.  Residual contract: both mean-free equation
    residuals <= tol in L2.
    """
    if spec is None:
        spec = pot.PotentialSpec(params)
    if u_mean_target is None:
        u_mean_target = float(np.mean(guess.u.values))
    if not abs(u_mean_target) < 1:
        raise MeanInfeasible(f"u mean target {u_mean_target} outside (-1, 1)")
    # the reaction term pins the v mean at c; without it the v mass is a
    # conserved quantity of the dynamics, so the guess supplies the target
    v_mean_target = params.c if params.sigma > 0 else float(np.mean(guess.v.values))
    if not abs(v_mean_target) < 1:
        raise MeanInfeasible(f"v mean target {v_mean_target} outside (-1, 1)")

    grid = guess.grid
    limit = 1.0 - safeguard_margin
    p = params
    lam = grid.lam
    n = int(np.prod(grid.shape))

    # move the guess onto the constraint manifold, damped near the walls
    u = _shift_to_mean(guess.u.values, u_mean_target, limit)
    v = _shift_to_mean(guess.v.values, v_mean_target, limit)

    def total(Ru, Rv):
        return float(np.sqrt(np.sum(Ru**2) + np.sum(Rv**2)))

    Ru, Rv = _residual_pair(grid, u, v, p, spec)
    rnorm = total(Ru, Rv)
    iters = 0
    while max(np.sqrt(np.sum(Ru**2)), np.sqrt(np.sum(Rv**2))) > tol:
        if iters >= max_iter:
            raise NewtonDiverged(
                f"stationary solve: no convergence in {max_iter} iterations "
                f"(residual {rnorm:.3e}, tol {tol:.3e})"
            )
        f_uu, f_uv, f_vv = pot.f_second(u, v, spec)
        lin_u = p.eps_u**2 * lam
        lin_v = p.eps_v**2 * lam

        def matvec(w_flat):
            Wu = w_flat[:n].reshape(grid.shape)
            Wv = w_flat[n:].reshape(grid.shape)
            wu = grid.inv(Wu)
            wv = grid.inv(Wv)
            Ju = lin_u * Wu + grid.fwd(f_uu * wu + f_uv * wv)
            Jv = lin_v * Wv + grid.fwd(f_uv * wu + f_vv * wv)
            if p.sigma != 0.0:
                Jv = Jv + p.sigma * grid.lam_inv * Wv
            Ju.flat[0] = 0.0
            Jv.flat[0] = 0.0
            return np.concatenate([Ju.ravel(), Jv.ravel()])

        shift = max(p.theta0_u, p.theta0_v) + max(
            float(np.max(np.abs(f_uu))), float(np.max(np.abs(f_vv)))
        )
        diag_u = 1.0 / (lin_u + shift)
        diag_v = 1.0 / (lin_v + shift)

        def precond(w_flat):
            return np.concatenate(
                [
                    (diag_u * w_flat[:n].reshape(grid.shape)).ravel(),
                    (diag_v * w_flat[n:].reshape(grid.shape)).ravel(),
                ]
            )

        A = LinearOperator((2 * n, 2 * n), matvec=matvec, dtype=np.float64)
        M = LinearOperator((2 * n, 2 * n), matvec=precond, dtype=np.float64)
        rhs = -np.concatenate([Ru.ravel(), Rv.ravel()])
        eta = min(1e-3, max(0.1 * tol / max(rnorm, tol), 1e-10))
        sol, _ = gmres(A, rhs, rtol=eta, atol=0.0, restart=60, maxiter=15, M=M)
        if not np.all(np.isfinite(sol)):
            raise NewtonDiverged("stationary solve: non-finite Newton update")
        Du = sol[:n].reshape(grid.shape)
        Dv = sol[n:].reshape(grid.shape)
        Du.flat[0] = 0.0
        Dv.flat[0] = 0.0
        du = grid.inv(Du)
        dv = grid.inv(Dv)

        s = min(_damped_length(u, du, limit), _damped_length(v, dv, limit))
        accepted = False
        for _ in range(15):
            u_try = u + s * du
            v_try = v + s * dv
            Ru_t, Rv_t = _residual_pair(grid, u_try, v_try, p, spec)
            r_t = total(Ru_t, Rv_t)
            if r_t < rnorm:
                accepted = True
                break
            s *= 0.5
        iters += 1
        if not accepted:
            raise NewtonDiverged(
                f"stationary solve stagnated at residual {rnorm:.3e} (tol {tol:.3e})"
            )
        u, v, Ru, Rv, rnorm = u_try, v_try, Ru_t, Rv_t, r_t

    mult_u = float(np.mean(pot.f_du(u, v, spec)))
    mult_v = float(np.mean(pot.f_dv(u, v, spec)))
    out = State(guess.t, ScalarField(grid, u), ScalarField(grid, v))
    return out, (mult_u, mult_v), iters


def _shift_to_mean(values: np.ndarray, target: float, limit: float) -> np.ndarray:
    fluct = values - np.mean(values)
    base = np.full_like(values, target)
    s = min(1.0, _damped_length(base, fluct, limit))
    return base + s * fluct


def elliptic_solve(f: ScalarField, theta: float, tol: float = 1e-10,
                   max_iter: int = 80, safeguard_margin: float = 1e-12) -> ScalarField:
    """Solve -lap(w) + S_hat'(w; theta) = f with Neumann walls.

    Strictly convex problem; damped Newton from w = 0 converges for any
    square-integrable data, and the solution stays strictly inside (-1, 1).
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    grid = f.grid
    lam = grid.lam
    limit = 1.0 - safeguard_margin
    Fc = grid.fwd(f.values)
    n = int(np.prod(grid.shape))

    # pointwise solve of S_hat'(w) = f as the starting guess; Newton then
    # only has to reconcile the Laplacian coupling
    w = np.clip(np.tanh(f.values / theta), -limit, limit)

    def residual(wv):
        return lam * grid.fwd(wv) + grid.fwd(pot.fh_hat_d1(wv, theta)) - Fc

    R = residual(w)
    rnorm = float(np.sqrt(np.sum(R**2)))
    iters = 0
    while rnorm > tol:
        if iters >= max_iter:
            raise NewtonDiverged(
                f"elliptic solve: no convergence in {max_iter} iterations "
                f"(residual {rnorm:.3e}, tol {tol:.3e})"
            )
        d2 = pot.fh_hat_d2(w, theta)

        def matvec(x_flat):
            X = x_flat.reshape(grid.shape)
            return (lam * X + grid.fwd(d2 * grid.inv(X))).ravel()

        diag = 1.0 / (lam + float(np.max(d2)))

        def precond(x_flat):
            return (diag * x_flat.reshape(grid.shape)).ravel()

        A = LinearOperator((n, n), matvec=matvec, dtype=np.float64)
        M = LinearOperator((n, n), matvec=precond, dtype=np.float64)
        eta = min(1e-3, max(0.1 * tol / rnorm, 1e-10))
        sol, _ = gmres(A, -R.ravel(), rtol=eta, atol=0.0, restart=50, maxiter=12, M=M)
        if not np.all(np.isfinite(sol)):
            raise NewtonDiverged("elliptic solve: non-finite Newton update")
        d = grid.inv(sol.reshape(grid.shape))

        s = _damped_length(w, d, limit)
        accepted = False
        for _ in range(20):
            w_try = w + s * d
            R_try = residual(w_try)
            r_try = float(np.sqrt(np.sum(R_try**2)))
            if r_try < rnorm:
                accepted = True
                break
            s *= 0.5
        iters += 1
        if not accepted:
            raise NewtonDiverged(
                f"elliptic solve stagnated at residual {rnorm:.3e} (tol {tol:.3e})"
            )
        w, R, rnorm = w_try, R_try, r_try

    return ScalarField(grid, w)
