"""Command-line entry points: run, steady, resume, check.

Exit status 0 on success; failures print a machine-readable JSON summary
on stderr and return nonzero.  Every run embeds its full effective
configuration in all output headers, so any output can be re-run.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import diagnostics as diag
from . import fieldio, steady
from .config import RunConfig, config_from_echo, parse_config
from .errors import ChlabError, ConfigError
from .potentials import PotentialSpec
from .solver import initial_state, run
from .spectral_core import (
    Grid,
    ScalarField,
    from_spectral,
    inner,
    inverse_laplacian_meanzero,
    laplacian,
    mean,
    norm_L2,
    to_spectral,
)


def _fail(kind: str, detail) -> int:
    print(json.dumps({"error": kind, "detail": detail}), file=sys.stderr)
    return 1


def _load_config(path, strict: bool) -> RunConfig:
    return parse_config(path, strict=strict)


def _spec_of(cfg: RunConfig) -> PotentialSpec:
    if cfg.scheme.cutoff_delta is not None:
        return PotentialSpec(cfg.params, "cutoff", cfg.scheme.cutoff_delta)
    return PotentialSpec(cfg.params)


def _initial_from_config(cfg: RunConfig):
    d = cfg.directives
    return initial_state(
        d.grid(),
        kind=d.init_kind,
        means=(d.mean_u, d.mean_v),
        amplitude=d.amplitude,
        seed=d.seed,
    )


def _execute(cfg: RunConfig, state, t_end: float, out_dir: str, step_offset: int = 0,
             csv_name: str = "diagnostics.csv") -> int:
    d = cfg.directives
    os.makedirs(out_dir, exist_ok=True)
    echo = cfg.echo()
    spec = _spec_of(cfg)

    snap_stride = d.snapshot_stride
    last_step = [step_offset]

    def snapshot_sink(s, k):
        last_step[0] = k
        if snap_stride > 0 and k % snap_stride == 0:
            fieldio.write_snapshot(os.path.join(out_dir, f"snapshot_{k:08d}.chf"), s)

    with fieldio.DiagnosticsWriter(os.path.join(out_dir, csv_name), echo) as writer:
        if snap_stride > 0:
            fieldio.write_snapshot(
                os.path.join(out_dir, f"snapshot_{step_offset:08d}.chf"), state
            )
        final = run(
            state,
            t_end,
            cfg.scheme,
            cfg.params,
            spec,
            sink=writer.write,
            stride=d.csv_stride,
            step_offset=step_offset,
            snapshot_sink=snapshot_sink,
        )
    fieldio.write_checkpoint(
        os.path.join(out_dir, "checkpoint.chk"), final, last_step[0], echo
    )
    return 0


def cmd_run(config_path, strict: bool = False) -> int:
    try:
        cfg = _load_config(config_path, strict)
        for w in cfg.warnings:
            print(f"warning: {w}", file=sys.stderr)
        state = _initial_from_config(cfg)
        return _execute(cfg, state, cfg.directives.t_end, cfg.directives.out_dir)
    except ConfigError as e:
        return _fail("ConfigError", [str(v) for v in e.violations])
    except ChlabError as e:
        return _fail(type(e).__name__, str(e))


def cmd_resume(checkpoint_path, out_dir=None, t_end=None, strict: bool = False) -> int:
    """Continue a checkpointed run, to the echoed t_end unless overridden."""
    try:
        state, step0, echo = fieldio.read_checkpoint(checkpoint_path)
        cfg = config_from_echo(echo, strict=strict)
        target = os.path.dirname(os.path.abspath(checkpoint_path)) if out_dir is None else out_dir
        horizon = cfg.directives.t_end if t_end is None else float(t_end)
        return _execute(
            cfg,
            state,
            horizon,
            target,
            step_offset=step0,
            csv_name=f"diagnostics.resume-from-{step0}.csv",
        )
    except (ConfigError, ValueError) as e:
        return _fail(type(e).__name__, str(e))
    except ChlabError as e:
        return _fail(type(e).__name__, str(e))


def cmd_steady(config_path, strict: bool = False) -> int:
    """Burn-in run, then polish to a steady state; writes steady.chf and,
    when snapshots were recorded, the Lojasiewicz probe table."""
    try:
        cfg = _load_config(config_path, strict)
        d = cfg.directives
        os.makedirs(d.out_dir, exist_ok=True)
        spec = _spec_of(cfg)
        state = _initial_from_config(cfg)

        snapshots = []
        stride = d.snapshot_stride

        def keep(s, k):
            if stride > 0 and k % stride == 0:
                snapshots.append(s)

        with fieldio.DiagnosticsWriter(
            os.path.join(d.out_dir, "diagnostics.csv"), cfg.echo()
        ) as writer:
            final = run(
                state,
                d.t_end,
                cfg.scheme,
                cfg.params,
                spec,
                sink=writer.write,
                stride=d.csv_stride,
                snapshot_sink=keep,
            )

        sol, mult, iters = steady.solve_stationary(
            final,
            cfg.params,
            spec,
            u_mean_target=mean(final.u),
            tol=max(cfg.scheme.newton_tol, 1e-12),
        )
        fieldio.write_steady(os.path.join(d.out_dir, "steady.chf"), sol, mult)
        print(
            f"steady state after {iters} Newton iterations; "
            f"multipliers ({mult[0]:.6e}, {mult[1]:.6e})"
        )

        if snapshots:
            theta_grid = [round(0.05 * k, 2) for k in range(1, 10)]
            probe = diag.ls_probe(snapshots, sol, theta_grid, spec)
            path = os.path.join(d.out_dir, "ls_probe.csv")
            with open(path, "w", encoding="ascii") as fp:
                flags = ",".join(
                    f"{th}:{'yes' if probe.consistent[th] else 'no'}"
                    for th in sorted(probe.consistent)
                )
                fp.write(f"# consistent = {flags}\n")
                fp.write("t,theta,lhs,rhs,ratio\n")
                for r in probe.rows:
                    ratio = "" if r.ratio is None else repr(float(r.ratio))
                    fp.write(f"{r.t!r},{r.theta!r},{r.lhs!r},{r.rhs!r},{ratio}\n")
        return 0
    except ConfigError as e:
        return _fail("ConfigError", [str(v) for v in e.violations])
    except ChlabError as e:
        return _fail(type(e).__name__, str(e))


# ---------------------------------------------------------------------------
# Built-in verification suite


def _check_spectral():
    rng = np.random.default_rng(11)
    for grid in (Grid(64, 2.0), Grid((32, 24), (1.5, 1.0))):
        f = ScalarField(grid, rng.uniform(-1, 1, grid.shape))
        back = from_spectral(to_spectral(f))
        if norm_L2(ScalarField(grid, back.values - f.values)) > 1e-13 * norm_L2(f):
            return False, "transform round trip"
        c = to_spectral(f).coeffs
        if abs(np.sum(c**2) - norm_L2(f) ** 2) > 1e-12 * norm_L2(f) ** 2:
            return False, "Parseval"
        g = ScalarField(grid, rng.uniform(-1, 1, grid.shape))
        g0 = ScalarField(grid, g.values - mean(g))
        ng = inverse_laplacian_meanzero(g0)
        resid = laplacian(ng).values + g0.values
        if float(np.max(np.abs(resid))) > 1e-11:
            return False, "N o (-lap) identity"
        h = ScalarField(grid, rng.uniform(-1, 1, grid.shape))
        h0 = ScalarField(grid, h.values - mean(h))
        sym = abs(inner(g0, inverse_laplacian_meanzero(h0)) - inner(h0, ng))
        if sym > 1e-12:
            return False, "N self-adjointness"
    return True, ""


def _check_potentials():
    from . import potentials as pot

    p = pot.Parameters(coupling_a=0.7, coupling_b=-0.3, coupling_c=0.2)
    spec = PotentialSpec(p)
    rng = np.random.default_rng(5)
    s = rng.uniform(-0.9, 0.9, 64)
    h = 1e-6
    fd = (pot.fh_hat(s + h, 1.3) - pot.fh_hat(s - h, 1.3)) / (2 * h)
    if np.max(np.abs(fd - pot.fh_hat_d1(s, 1.3)) / np.abs(fd)) > 1e-6:
        return False, "entropy derivative vs finite difference"
    u = rng.uniform(-0.8, 0.8, 64)
    v = rng.uniform(-0.8, 0.8, 64)
    fd = (pot.f_value(u + h, v, spec) - pot.f_value(u - h, v, spec)) / (2 * h)
    if np.max(np.abs(fd - pot.f_du(u, v, spec))) > 1e-6 * max(1.0, np.max(np.abs(fd))):
        return False, "potential u-derivative vs finite difference"
    delta = 0.1
    grid_pts = np.linspace(-1 + delta, 1 - delta, 101)
    uu, vv = np.meshgrid(grid_pts, grid_pts)
    gap = np.max(np.abs(pot.f_delta_value(uu, vv, delta, p) - pot.f_value(uu, vv, spec)))
    if gap != 0.0:
        return False, "cutoff fidelity"
    return True, ""


def _check_scalar_step():
    from .potentials import Parameters
    from .solver import SchemeConfig, State, step

    p = Parameters(sigma=2.0, c=0.1, coupling_a=0.5, coupling_b=0.2, coupling_c=-0.1)
    grid = Grid(32, 1.0)
    tau = 1e-2
    st0 = State(
        0.0,
        ScalarField(grid, np.full(grid.shape, 0.3)),
        ScalarField(grid, np.full(grid.shape, -0.2)),
    )
    new, stats = step(st0, SchemeConfig(tau=tau), p)
    v_expect = (-0.2 + tau * p.sigma * p.c) / (1 + tau * p.sigma)
    if abs(mean(new.u) - 0.3) > 1e-13:
        return False, "constant state must keep the u mean"
    if abs(mean(new.v) - v_expect) > 1e-13:
        return False, "constant state v mean recursion"
    if float(np.max(np.abs(new.u.values - mean(new.u)))) > 1e-10:
        return False, "constant state must stay constant"
    return True, ""


def _check_mass_law():
    from .potentials import Parameters
    from .solver import SchemeConfig, initial_state, run

    p = Parameters(sigma=1.5, c=0.05, theta_u=0.6, theta0_u=1.0, theta_v=0.6, theta0_v=1.0)
    grid = Grid(64, 4.0)
    recs = []
    run(
        initial_state(grid, means=(0.1, 0.3), amplitude=0.05, seed=3),
        0.2,
        SchemeConfig(tau=1e-2),
        p,
        sink=recs.append,
    )
    du, dd, _ = diag.mass_law_check(recs, p)
    if du > 1e-12:
        return False, f"u mass drift {du:.2e}"
    if dd > 1e-12:
        return False, f"v mean recursion deviation {dd:.2e}"
    return True, ""


def cmd_check() -> int:
    checks = [
        ("spectral identities", _check_spectral),
        ("potential derivatives", _check_potentials),
        ("scalar-reduction step", _check_scalar_step),
        ("mass law", _check_mass_law),
    ]
    failures = []
    for name, fn in checks:
        try:
            ok, detail = fn()
        except Exception as e:  # a crashed check is a failed check
            ok, detail = False, f"{type(e).__name__}: {e}"
        print(f"[{'PASS' if ok else 'FAIL'}] {name}" + (f" ({detail})" if detail else ""))
        if not ok:
            failures.append({"check": name, "detail": detail})
    if failures:
        return _fail("CheckFailed", failures)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="chlab",
        description="Coupled Cahn-Hilliard / Cahn-Hilliard-Oono laboratory",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="time integration from a config file")
    p_run.add_argument("config")
    p_run.add_argument("--strict", action="store_true", help="unknown keys are errors")

    p_steady = sub.add_parser("steady", help="burn-in run, then solve the stationary system")
    p_steady.add_argument("config")
    p_steady.add_argument("--strict", action="store_true")

    p_res = sub.add_parser("resume", help="continue a run from a checkpoint")
    p_res.add_argument("checkpoint")
    p_res.add_argument("--out-dir", default=None)
    p_res.add_argument("--t-end", default=None, type=float,
                       help="override the checkpointed horizon")

    sub.add_parser("check", help="run the built-in verification suite")

    args = parser.parse_args(argv)
    if args.command == "run":
        return cmd_run(args.config, strict=args.strict)
    if args.command == "steady":
        return cmd_steady(args.config, strict=args.strict)
    if args.command == "resume":
        return cmd_resume(args.checkpoint, out_dir=args.out_dir, t_end=args.t_end)
    return cmd_check()


if __name__ == "__main__":
    sys.exit(main())
