"""Flat key=value run configuration: parsing, validation, echo.

Format: one `key = value` per line, '#' starts a comment, no nesting.
Every key has a default, so the empty file is a valid configuration.
Validation reports the complete list of violations, not just the first.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ConfigError
from .potentials import Parameters
from .solver import SchemeConfig
from .spectral_core import Grid


@dataclass(frozen=True)
class Violation:
    kind: str  # MissingKey | InvalidValue | UnknownKey
    key: str
    message: str

    def __str__(self):
        return f"{self.kind}: {self.key}: {self.message}"


@dataclass(frozen=True)
class RunDirectives:
    dim: int = 1
    n: tuple = (256,)
    length: tuple = (1.0,)
    t_end: float = 1.0
    strict_h0: bool = True
    init_kind: str = "constant_plus_noise"
    seed: int = 0
    amplitude: float = 0.05
    mean_u: float = 0.0
    mean_v: float = 0.0
    snapshot_stride: int = 0
    csv_stride: int = 1
    out_dir: str = "out"

    def grid(self) -> Grid:
        return Grid(self.n, self.length)


@dataclass(frozen=True)
class RunConfig:
    params: Parameters
    scheme: SchemeConfig
    directives: RunDirectives
    warnings: tuple = ()

    def echo(self) -> dict:
        """Full effective configuration, every key, fixed order."""
        d, p, s = self.directives, self.params, self.scheme
        return {
            "dim": d.dim,
            "n": ",".join(str(m) for m in d.n),
            "length": ",".join(repr(x) for x in d.length),
            "sigma": repr(p.sigma),
            "c": repr(p.c),
            "theta_u": repr(p.theta_u),
            "theta0_u": repr(p.theta0_u),
            "theta_v": repr(p.theta_v),
            "theta0_v": repr(p.theta0_v),
            "eps_u": repr(p.eps_u),
            "eps_v": repr(p.eps_v),
            "coupling_a": repr(p.coupling_a),
            "coupling_b": repr(p.coupling_b),
            "coupling_c": repr(p.coupling_c),
            "alpha_visc": repr(p.alpha_visc),
            "cutoff_delta": "none" if s.cutoff_delta is None else repr(s.cutoff_delta),
            "tau": repr(s.tau),
            "t_end": repr(d.t_end),
            "newton_tol": repr(s.newton_tol),
            "newton_max_iter": s.newton_max_iter,
            "safeguard_margin": repr(s.safeguard_margin),
            "adaptive": "true" if s.adaptive else "false",
            "strict_h0": "true" if d.strict_h0 else "false",
            "init_kind": d.init_kind,
            "seed": d.seed,
            "amplitude": repr(d.amplitude),
            "mean_u": repr(d.mean_u),
            "mean_v": repr(d.mean_v),
            "snapshot_stride": d.snapshot_stride,
            "csv_stride": d.csv_stride,
            "out_dir": d.out_dir,
        }


_FLOAT_KEYS = {
    "sigma", "c", "theta_u", "theta0_u", "theta_v", "theta0_v", "eps_u",
    "eps_v", "coupling_a", "coupling_b", "coupling_c", "alpha_visc", "tau",
    "t_end", "newton_tol", "safeguard_margin", "amplitude", "mean_u", "mean_v",
}
_INT_KEYS = {"dim", "seed", "newton_max_iter", "snapshot_stride", "csv_stride"}
_BOOL_KEYS = {"adaptive", "strict_h0"}
_STR_KEYS = {"init_kind", "out_dir"}
_LIST_KEYS = {"n", "length"}
ALL_KEYS = _FLOAT_KEYS | _INT_KEYS | _BOOL_KEYS | _STR_KEYS | _LIST_KEYS | {"cutoff_delta"}

_INIT_KINDS = ("constant_plus_noise", "function_spec", "loaded_snapshot")


def parse_config_text(text: str, strict: bool = False) -> RunConfig:
    raw = {}
    violations = []
    warnings = []
    for ln, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            violations.append(Violation("InvalidValue", f"line {ln}", f"not key = value: {body!r}"))
            continue
        key, value = (s.strip() for s in body.split("=", 1))
        if key not in ALL_KEYS:
            v = Violation("UnknownKey", key, "not a recognized configuration key")
            if strict:
                violations.append(v)
            else:
                warnings.append(str(v))
            continue
        if key in raw:
            warnings.append(f"duplicate key {key}: later value wins")
        raw[key] = value

    vals = {}

    def take(key, conv, constraint):
        if key not in raw:
            return
        try:
            vals[key] = conv(raw[key])
        except (TypeError, ValueError):
            violations.append(Violation("InvalidValue", key, constraint))

    def as_bool(s):
        t = s.lower()
        if t in ("true", "1", "yes", "on"):
            return True
        if t in ("false", "0", "no", "off"):
            return False
        raise ValueError(s)

    for key in _FLOAT_KEYS:
        take(key, float, "must be a real number")
    for key in _INT_KEYS:
        take(key, int, "must be an integer")
    for key in _BOOL_KEYS:
        take(key, as_bool, "must be true or false")
    for key in _STR_KEYS:
        take(key, str, "must be a string")
    take("n", lambda s: tuple(int(x) for x in s.split(",")), "must be an integer or comma list")
    take(
        "length",
        lambda s: tuple(float(x) for x in s.split(",")),
        "must be a real number or comma list",
    )
    take(
        "cutoff_delta",
        lambda s: None if s.lower() in ("none", "") else float(s),
        "must be a real in (0,1) or none",
    )

    dim = vals.get("dim", 1)
    if dim not in (1, 2):
        violations.append(Violation("InvalidValue", "dim", "must be 1 or 2"))
        dim = 1
    n = vals.get("n", (256,) if dim == 1 else (128, 128))
    if len(n) == 1 and dim == 2:
        n = n * 2
    length = vals.get("length", (1.0,) * dim)
    if len(length) == 1 and dim == 2:
        length = length * 2
    if len(n) != dim:
        violations.append(Violation("InvalidValue", "n", f"needs {dim} entries, got {len(n)}"))
    elif any(m < 8 for m in n):
        violations.append(Violation("InvalidValue", "n", "needs at least 8 nodes per axis"))
    if len(length) != dim:
        violations.append(
            Violation("InvalidValue", "length", f"needs {dim} entries, got {len(length)}")
        )
    elif any(l <= 0 for l in length):
        violations.append(Violation("InvalidValue", "length", "extents must be positive"))

    strict_h0 = vals.get("strict_h0", True)
    params = Parameters(
        sigma=vals.get("sigma", 1.0),
        c=vals.get("c", 0.0),
        theta_u=vals.get("theta_u", 0.8),
        theta0_u=vals.get("theta0_u", 1.0),
        theta_v=vals.get("theta_v", 0.8),
        theta0_v=vals.get("theta0_v", 1.0),
        eps_u=vals.get("eps_u", 1.0),
        eps_v=vals.get("eps_v", 1.0),
        coupling_a=vals.get("coupling_a", 0.0),
        coupling_b=vals.get("coupling_b", 0.0),
        coupling_c=vals.get("coupling_c", 0.0),
        alpha_visc=vals.get("alpha_visc", 0.0),
    )
    import warnings as _warnings

    with _warnings.catch_warnings(record=True) as caught:
        _warnings.simplefilter("always")
        for msg in params.validate(strict_h0=strict_h0):
            key = msg.split(":", 1)[0].strip()
            violations.append(Violation("InvalidValue", key, msg))
    warnings.extend(str(w.message) for w in caught)

    tau = vals.get("tau", 1e-3)
    newton_tol = vals.get("newton_tol", 1e-10)
    newton_max_iter = vals.get("newton_max_iter", 50)
    safeguard_margin = vals.get("safeguard_margin", 1e-12)
    cutoff_delta = vals.get("cutoff_delta", None)
    if tau <= 0:
        violations.append(Violation("InvalidValue", "tau", "must be positive"))
    if newton_tol <= 0:
        violations.append(Violation("InvalidValue", "newton_tol", "must be positive"))
    if newton_max_iter < 1:
        violations.append(Violation("InvalidValue", "newton_max_iter", "must be at least 1"))
    if safeguard_margin <= 0:
        violations.append(Violation("InvalidValue", "safeguard_margin", "must be positive"))
    if cutoff_delta is not None and not 0 < cutoff_delta < 1:
        violations.append(Violation("InvalidValue", "cutoff_delta", "must lie in (0,1)"))

    t_end = vals.get("t_end", 1.0)
    if t_end < 0:
        violations.append(Violation("InvalidValue", "t_end", "must be nonnegative"))
    init_kind = vals.get("init_kind", "constant_plus_noise")
    if init_kind not in _INIT_KINDS:
        violations.append(
            Violation("InvalidValue", "init_kind", f"must be one of {_INIT_KINDS}")
        )
    amplitude = vals.get("amplitude", 0.05)
    if amplitude < 0:
        violations.append(Violation("InvalidValue", "amplitude", "must be nonnegative"))
    for key in ("mean_u", "mean_v"):
        m = vals.get(key, 0.0)
        if not abs(m) < 1:
            violations.append(Violation("InvalidValue", key, "need |mean| < 1"))
    for key in ("snapshot_stride", "csv_stride"):
        if vals.get(key, 0 if key == "snapshot_stride" else 1) < (0 if key == "snapshot_stride" else 1):
            violations.append(Violation("InvalidValue", key, "must be nonnegative"))

    if violations:
        raise ConfigError(violations)

    scheme = SchemeConfig(
        tau=tau,
        newton_tol=newton_tol,
        newton_max_iter=newton_max_iter,
        safeguard_margin=safeguard_margin,
        adaptive=vals.get("adaptive", True),
        viscous=params.alpha_visc > 0,
        cutoff_delta=cutoff_delta,
    )
    directives = RunDirectives(
        dim=dim,
        n=tuple(n),
        length=tuple(length),
        t_end=t_end,
        strict_h0=strict_h0,
        init_kind=init_kind,
        seed=vals.get("seed", 0),
        amplitude=amplitude,
        mean_u=vals.get("mean_u", 0.0),
        mean_v=vals.get("mean_v", 0.0),
        snapshot_stride=vals.get("snapshot_stride", 0),
        csv_stride=vals.get("csv_stride", 1),
        out_dir=vals.get("out_dir", "out"),
    )
    return RunConfig(params=params, scheme=scheme, directives=directives, warnings=tuple(warnings))


def parse_config(path, strict: bool = False) -> RunConfig:
    with open(path, encoding="utf-8") as fp:
        return parse_config_text(fp.read(), strict=strict)


def config_from_echo(echo: dict, strict: bool = False) -> RunConfig:
    """Rebuild a configuration from an output-header echo."""
    text = "\n".join(f"{k} = {v}" for k, v in echo.items())
    return parse_config_text(text, strict=strict)
