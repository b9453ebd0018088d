"""Convex-splitting IMEX time integration with safeguarded Newton solves.

One step advances (u, v) by solving, with homogeneous Neumann conditions,

    (u+ - u)/tau = lap(mu+),
    mu+  = a (u+ - u)/tau - eps_u^2 lap(u+) + S'_u(u+) - theta0_u u + W_u(u, v),

    (v+ - v)/tau + sigma (v+ - c) = lap(phi+),
    phi+ = a (v+ - v)/tau - eps_v^2 lap(v+) + S'_v(v+) - theta0_v v + W_v(u, v),

where a is the viscosity (zero unless the viscous system is selected).
The singular convex entropy derivative is implicit; the expansive
quadratic part and the coupling are explicit, so the two equations
decouple and each is a scalar nonlinear problem for the new field.

Means are handled exactly: the zero mode of each unknown is pinned to the
value forced by the scheme (u keeps its mean; the v mean obeys
v_mean+ = (v_mean + tau sigma c)/(1 + tau sigma)), and Newton updates are
projected onto mean-zero fields, where the exact update lives anyway.

Each Newton system is solved by preconditioned GMRES in coefficient
space; the preconditioner is the constant-coefficient operator
(1 + a lam)/tau + sigma + eps^2 lam^2 + thetab lam with thetab the
current convexity bound max(theta0_u, theta0_v) + max S''(iterate).
Updates are damped fraction-to-the-boundary so iterates never leave
(-1 + margin, 1 - margin).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from . import potentials as pot
from .errors import BoundViolation, GridMismatch, NewtonDiverged
from .spectral_core import Grid, ScalarField

MAX_TAU_HALVINGS = 20
_EPS = np.finfo(np.float64).eps


@dataclass(frozen=True)
class State:
    """Trajectory snapshot (t, u, v) with strictly interior phase values."""

    t: float
    u: ScalarField
    v: ScalarField

    def __post_init__(self):
        if self.t < 0:
            raise ValueError(f"t must be nonnegative, got {self.t}")
        if not self.u.grid.compatible(self.v.grid):
            raise GridMismatch(f"{self.u.grid} vs {self.v.grid}")
        for name, f in (("u", self.u), ("v", self.v)):
            m = float(np.max(np.abs(f.values)))
            if m >= 1.0:
                raise BoundViolation(f"max |{name}| = {m} >= 1")

    @property
    def grid(self) -> Grid:
        return self.u.grid


@dataclass(frozen=True)
class SchemeConfig:
    tau: float
    newton_tol: float = 1e-10
    newton_max_iter: int = 50
    safeguard_margin: float = 1e-12
    adaptive: bool = True
    viscous: bool = False
    cutoff_delta: float | None = None

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if not self.newton_tol > 0 or not self.safeguard_margin > 0:
            raise ValueError("tolerances must be positive")
        if self.newton_max_iter < 1:
            raise ValueError("newton_max_iter must be at least 1")


@dataclass(frozen=True)
class StepStats:
    newton_iters: int
    iters_u: int
    iters_v: int
    tau_used: float
    halvings: int
    residual_u: float
    residual_v: float
    residual_history_u: tuple = field(default=(), repr=False)
    residual_history_v: tuple = field(default=(), repr=False)


def effective_spec(cfg: SchemeConfig, params: pot.Parameters, spec: pot.PotentialSpec | None) -> pot.PotentialSpec:
    if spec is None:
        if cfg.cutoff_delta is not None:
            return pot.PotentialSpec(params, "cutoff", cfg.cutoff_delta)
        return pot.PotentialSpec(params)
    if spec.params != params:
        raise ValueError("spec.params disagrees with params")
    if cfg.cutoff_delta is not None and (not spec.is_cutoff or spec.delta != cfg.cutoff_delta):
        raise ValueError("cfg.cutoff_delta disagrees with the potential spec")
    return spec


def _boundary_scale(x: np.ndarray, d: np.ndarray, limit: float) -> float:
    """Largest s with max|x + s d| <= limit, for max|x| < limit."""
    with np.errstate(divide="ignore"):
        up = np.where(d > 0, (limit - x) / np.where(d > 0, d, 1.0), np.inf)
        dn = np.where(d < 0, (-limit - x) / np.where(d < 0, d, 1.0), np.inf)
    return float(min(np.min(up), np.min(dn)))


def _damped_length(x: np.ndarray, d: np.ndarray, limit: float) -> float:
    """Fraction-to-the-boundary step length: full step if it stays inside,
    otherwise 99% of the step that would touch the limit."""
    if float(np.max(np.abs(x))) + float(np.max(np.abs(d))) <= limit:
        return 1.0  # cannot reach the walls, skip the per-node scan
    s_max = _boundary_scale(x, d, limit)
    return 1.0 if s_max > 1.0 else 0.99 * s_max


def _pcg(matvec, b, pinv, rtol, maxiter=200):
    """Preconditioned conjugate gradients on an SPD coefficient-space map.

    pinv is the inverse diagonal preconditioner; returns the approximate
    solution when ||residual|| <= rtol ||b|| or the budget runs out.
    """
    bnorm = float(np.sqrt(np.sum(b * b)))
    x = np.zeros_like(b)
    if bnorm == 0.0:
        return x
    r = b.copy()
    z = pinv * r
    p = z.copy()
    rz = float(np.sum(r * z))
    target = rtol * bnorm
    for _ in range(maxiter):
        q = matvec(p)
        pq = float(np.sum(p * q))
        if pq <= 0.0 or not np.isfinite(pq):
            break  # lost positive-definiteness to roundoff; return best
        alpha = rz / pq
        x += alpha * p
        r -= alpha * q
        if float(np.sqrt(np.sum(r * r))) <= target:
            break
        z = pinv * r
        rz_new = float(np.sum(r * z))
        beta = rz_new / rz
        rz = rz_new
        p = z + beta * p
    return x


class _ImplicitProblem:
    """Single-variable step equation in cosine-coefficient space.

    Residual norms are measured in the fixed diagonal metric 1/P0 with
    P0 = (1 + a lam)/tau + sigma + eps^2 lam^2 + thetab lam (the spectral
    preconditioner at the initial iterate).  The raw L2 residual of a
    fourth-order spectral operator amplifies transform roundoff by
    lam_max^2, so tolerances in that norm would be unattainable; the
    preconditioned metric is the scale on which the linear solves
    converge, making the inexact-Newton forcing terms consistent.
    """

    def __init__(self, grid: Grid, old: np.ndarray, tau: float, sigma: float,
                 c: float, eps2: float, alpha: float, g_explicit: np.ndarray,
                 spec: pot.PotentialSpec, slot: str):
        self.grid = grid
        self.tau = tau
        self.sigma = sigma
        self.eps2 = eps2
        self.alpha = alpha
        self.g = g_explicit
        self.spec = spec
        self.slot = slot
        lam = grid.lam
        self.lin = (1.0 + alpha * lam) / tau + sigma + eps2 * lam**2
        self.B = grid.fwd(old)
        p = spec.params
        thetab = max(p.theta0_u, p.theta0_v) + float(
            np.max(pot.implicit_d2(old, spec, slot))
        )
        self.P0 = self.lin + max(thetab, 0.0) * lam

    def residual(self, x: np.ndarray, X: np.ndarray):
        """Return (Rhat, preconditioned norm, preconditioned roundoff floor)."""
        g = self.grid
        lam = g.lam
        nl = g.fwd(pot.implicit_d1(x, self.spec, self.slot) + self.g)
        term_lin = (1.0 + self.alpha * lam) * (X - self.B) / self.tau
        term_sig = self.sigma * X
        term_ste = self.eps2 * lam**2 * X
        term_nl = lam * nl
        R = term_lin + term_sig + term_ste + term_nl
        R.flat[0] = 0.0  # zero mode pinned by the mean parametrization
        mag = (np.abs(term_lin) + np.abs(term_sig) + np.abs(term_ste) + np.abs(term_nl)) / self.P0
        mag.flat[0] = 0.0
        floor = 64.0 * _EPS * float(np.sqrt(np.sum(mag**2)))
        rnorm = float(np.sqrt(np.sum((R / self.P0) ** 2)))
        return R, rnorm, floor

    def jacobian(self, x: np.ndarray) -> LinearOperator:
        g = self.grid
        lam = g.lam
        shape = g.shape
        d2 = pot.implicit_d2(x, self.spec, self.slot)
        lin = self.lin

        def matvec(w_flat):
            W = w_flat.reshape(shape)
            out = lin * W + lam * g.fwd(d2 * g.inv(W))
            out.flat[0] = 0.0
            return out.ravel()

        n = int(np.prod(shape))
        return LinearOperator((n, n), matvec=matvec, dtype=np.float64)

    def preconditioner(self) -> LinearOperator:
        g = self.grid
        inv = 1.0 / self.P0

        def apply(w_flat):
            return (inv * w_flat.reshape(g.shape)).ravel()

        n = int(np.prod(g.shape))
        return LinearOperator((n, n), matvec=apply, dtype=np.float64)

    def solve_newton_system(self, x: np.ndarray, R: np.ndarray, eta: float) -> np.ndarray:
        """Approximate J delta = -R; returns delta in coefficient space.

        With the singular entropy the potential curvature is >= theta > 0,
        so conjugating by lam^(1/2) makes the Jacobian symmetric positive
        definite and plain CG applies; the cutoff variant can have negative
        curvature in the transition bands and falls back to GMRES.
        """
        g = self.grid
        lam = g.lam
        d2 = pot.implicit_d2(x, self.spec, self.slot)
        if not self.spec.is_cutoff:
            sq = np.sqrt(lam)
            lin = self.lin
            pinv = 1.0 / self.P0

            def matvec(e):
                return lin * e + sq * g.fwd(d2 * g.inv(sq * e))

            b = -R / np.where(lam > 0, sq, 1.0)
            b.flat[0] = 0.0
            e = _pcg(matvec, b, pinv, rtol=eta)
            D = sq * e
        else:
            jac = self.jacobian(x)
            M = self.preconditioner()
            sol, _ = gmres(jac, -R.ravel(), rtol=eta, atol=0.0, restart=50,
                           maxiter=12, M=M)
            D = sol.reshape(g.shape)
        D.flat[0] = 0.0  # exact update is mean-zero
        return D


def _newton_solve(problem: _ImplicitProblem, x0: np.ndarray, mean_new: float,
                  cfg: SchemeConfig) -> tuple[np.ndarray, int, float, tuple]:
    """Safeguarded Newton on one step equation.

    Returns (solution values, iterations, final residual, residual history).
    """
    grid = problem.grid
    limit = 1.0 - cfg.safeguard_margin
    mean0 = mean_new * np.sqrt(grid.volume)

    x = x0
    X = grid.fwd(x)
    X.flat[0] = mean0
    x = grid.inv(X)

    R, rnorm, floor = problem.residual(x, X)
    r0 = rnorm
    history = [rnorm]
    target = max(cfg.newton_tol * r0, 1e-14)

    iters = 0
    while rnorm > target and rnorm > floor:
        if iters >= cfg.newton_max_iter:
            raise NewtonDiverged(
                f"no convergence in {cfg.newton_max_iter} iterations "
                f"(residual {rnorm:.3e}, target {target:.3e})"
            )
        eta = min(1e-2, max(0.5 * target / rnorm, 1e-11))
        D = problem.solve_newton_system(x, R, eta)
        if not np.all(np.isfinite(D)):
            raise NewtonDiverged("linear solver produced non-finite update")
        d = grid.inv(D)

        s = _damped_length(x, d, limit)
        accepted = False
        for _ in range(12):
            # the transform is linear, so the (nodal, coefficient) pair
            # stays consistent without another round trip
            x_try = x + s * d
            X_try = X + s * D
            R_try, rnorm_try, floor_try = problem.residual(x_try, X_try)
            if rnorm_try < rnorm or rnorm_try <= max(target, floor_try):
                accepted = True
                break
            s *= 0.5
        iters += 1
        if not accepted:
            if rnorm <= max(target, floor):
                break
            raise NewtonDiverged(
                f"line search stagnated at residual {rnorm:.3e} (target {target:.3e})"
            )
        x, X, R, rnorm, floor = x_try, X_try, R_try, rnorm_try, floor_try
        history.append(rnorm)

    if np.max(np.abs(x)) >= 1.0:
        # unreachable given the safeguard; a genuine bug if it ever fires
        raise BoundViolation("iterate escaped (-1, 1) despite safeguard")
    return x, iters, rnorm, tuple(history)


def _initial_iterate(old: np.ndarray, mean_old: float, mean_new: float, limit: float) -> np.ndarray:
    """Shift the old field to the new mean, damping if that grazes +-1."""
    if mean_new == mean_old:
        return old.copy()
    fluct = old - mean_old
    base = np.full_like(old, mean_new)
    s = min(1.0, _damped_length(base, fluct, limit))
    return base + s * fluct


def solve_implicit_system(u: ScalarField, v: ScalarField, tau: float,
                          cfg: SchemeConfig, params: pot.Parameters,
                          spec: pot.PotentialSpec | None = None):
    """Solve one IMEX step; returns (u_new, v_new, stats_tuple).

    The coupled residual is block-diagonal (the coupling is explicit), so
    Newton decomposes into two independent solves; the reported iteration
    count is the larger of the two, i.e. the sweeps a lockstep coupled
    Newton would take.
    """
    spec = effective_spec(cfg, params, spec)
    grid = u.grid
    if not grid.compatible(v.grid):
        raise GridMismatch(f"{grid} vs {v.grid}")
    p = params
    alpha = p.alpha_visc if cfg.viscous else 0.0
    limit = 1.0 - cfg.safeguard_margin

    uo, vo = u.values, v.values
    mean_u = float(np.mean(uo))
    mean_v = float(np.mean(vo))
    mean_v_new = (mean_v + tau * p.sigma * p.c) / (1.0 + tau * p.sigma)

    prob_u = _ImplicitProblem(grid, uo, tau, 0.0, 0.0, p.eps_u**2, alpha,
                              pot.explicit_du(uo, vo, spec), spec, "u")
    xu, iters_u, res_u, hist_u = _newton_solve(prob_u, uo.copy(), mean_u, cfg)

    prob_v = _ImplicitProblem(grid, vo, tau, p.sigma, p.c, p.eps_v**2, alpha,
                              pot.explicit_dv(uo, vo, spec), spec, "v")
    v0 = _initial_iterate(vo, mean_v, mean_v_new, limit)
    xv, iters_v, res_v, hist_v = _newton_solve(prob_v, v0, mean_v_new, cfg)

    return (
        ScalarField(grid, xu),
        ScalarField(grid, xv),
        (iters_u, iters_v, res_u, res_v, hist_u, hist_v),
    )


def step(state: State, cfg: SchemeConfig, params: pot.Parameters,
         spec: pot.PotentialSpec | None = None) -> tuple[State, StepStats]:
    """Advance one time step, halving tau on Newton failure if adaptive."""
    spec = effective_spec(cfg, params, spec)
    tau = cfg.tau
    halvings = 0
    while True:
        try:
            un, vn, (iu, iv, ru, rv, hu, hv) = solve_implicit_system(
                state.u, state.v, tau, cfg, params, spec
            )
            break
        except NewtonDiverged:
            if not cfg.adaptive or halvings >= MAX_TAU_HALVINGS:
                raise
            tau *= 0.5
            halvings += 1
    new = State(state.t + tau, un, vn)
    stats = StepStats(
        newton_iters=max(iu, iv),
        iters_u=iu,
        iters_v=iv,
        tau_used=tau,
        halvings=halvings,
        residual_u=ru,
        residual_v=rv,
        residual_history_u=hu,
        residual_history_v=hv,
    )
    return new, stats


def run(initial: State, t_end: float, cfg: SchemeConfig, params: pot.Parameters,
        spec: pot.PotentialSpec | None = None, sink=None, stride: int = 1,
        step_offset: int = 0, snapshot_sink=None) -> State:
    """March from initial.t to t_end, emitting one DiagnosticsRecord per
    accepted step (or per `stride` steps; the final step always reports).

    sink(record) receives the measurements; snapshot_sink(state, step), if
    given, sees every accepted state and may keep whichever it wants.
    Deterministic for fixed inputs and configuration.
    """
    from .diagnostics import psi_tilde_fast, record as make_record

    if t_end < initial.t:
        raise ValueError(f"t_end={t_end} is before initial.t={initial.t}")
    if stride < 1:
        raise ValueError("stride must be at least 1")
    spec = effective_spec(cfg, params, spec)
    state = initial
    t_tol = 1e-12 * max(1.0, abs(t_end))
    k = step_offset
    cached_psi_tilde = None  # psi_tilde of `state`, when known
    while state.t < t_end - t_tol:
        tau = min(cfg.tau, t_end - state.t)
        step_cfg = cfg if tau == cfg.tau else replace(cfg, tau=tau)
        prev = state
        state, stats = step(state, step_cfg, params, spec)
        k += 1
        final = state.t >= t_end - t_tol
        if sink is not None and ((k - step_offset) % stride == 0 or final):
            if cached_psi_tilde is None:
                cached_psi_tilde = psi_tilde_fast(prev, params, spec)
            rec = make_record(
                prev, state, stats.tau_used, params, spec,
                step=k, newton_iters=stats.newton_iters,
                prev_psi_tilde=cached_psi_tilde,
            )
            sink(rec)
            cached_psi_tilde = rec.psi_tilde
        else:
            cached_psi_tilde = None
        if snapshot_sink is not None:
            snapshot_sink(state, k)
    return state


def initial_state(grid: Grid, kind: str = "constant_plus_noise",
                  means: tuple[float, float] = (0.0, 0.0), amplitude: float = 0.05,
                  seed: int = 0, snapshot=None, t0: float = 0.0) -> State:
    """Build a reproducible initial state with exact means.

    kinds: constant_plus_noise (seeded uniform noise, mean-projected),
    function_spec (smooth cosine bump, mean-projected), loaded_snapshot
    (pass snapshot=(u_field, v_field)).
    """
    mu, mv = means
    if not (abs(mu) < 1 and abs(mv) < 1):
        raise BoundViolation(f"means must lie in (-1, 1), got {means}")

    if kind == "loaded_snapshot":
        if snapshot is None:
            raise ValueError("loaded_snapshot needs snapshot=(u, v)")
        u, v = snapshot
        return State(t0, u, v)

    if kind == "constant_plus_noise":
        rng = np.random.default_rng(seed)
        wu = rng.uniform(-1.0, 1.0, grid.shape)
        wv = rng.uniform(-1.0, 1.0, grid.shape)
    elif kind == "function_spec":
        xs = grid.coords()
        bump = np.ones(grid.shape)
        for x, L in zip(xs, grid.length):
            bump = bump * np.cos(np.pi * x / L)
        wu = bump
        wv = -bump
    else:
        raise ValueError(f"unknown initial kind {kind!r}")

    wu = wu - np.mean(wu)
    wv = wv - np.mean(wv)
    uvals = mu + amplitude * wu
    vvals = mv + amplitude * wv
    for name, vals in (("u", uvals), ("v", vvals)):
        if np.max(np.abs(vals)) >= 1.0:
            raise BoundViolation(f"amplitude {amplitude} pushes {name} to +-1")
    return State(t0, ScalarField(grid, uvals), ScalarField(grid, vvals))
