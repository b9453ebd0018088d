"""Flory-Huggins entropy, bivariate potential, coupling, and cutoff variant.

The mixing entropy per slot is

    S_hat(s; theta) = (theta/2) [(1+s) ln(1+s) + (1-s) ln(1-s)],

singular at s = +-1, convex with S_hat'' >= theta on (-1, 1).  The full
potential combines two entropy wells, their quadratic demixing parts, and
a polynomial coupling:

    F(u, v) = S_hat(u) - theta0_u/2 u^2 + S_hat(v) - theta0_v/2 v^2 + W(u, v),
    W(u, v) = a uv + b u^2 v + c u v^2.

The cutoff variant multiplies each entropy well (and W, per slot) by a C^2
bump xi_delta that is 1 on |s| <= 1 - 3 delta/4 and 0 for |s| >= 1 - delta/4,
making the result bounded and twice differentiable on all of R^2 while
agreeing exactly with F on [-1+delta, 1-delta]^2.
"""

from __future__ import annotations

from dataclasses import dataclass
import warnings

import numpy as np

from .errors import DomainViolation


@dataclass(frozen=True)
class Parameters:
    """Model coefficients.

    The viscosity coefficient is named alpha_visc and the first coupling
    coefficient coupling_a; they are distinct knobs even though the
    literature reuses one letter for both.
    """

    sigma: float = 1.0
    c: float = 0.0
    theta_u: float = 0.8
    theta0_u: float = 1.0
    theta_v: float = 0.8
    theta0_v: float = 1.0
    eps_u: float = 1.0
    eps_v: float = 1.0
    coupling_a: float = 0.0
    coupling_b: float = 0.0
    coupling_c: float = 0.0
    alpha_visc: float = 0.0

    def validate(self, strict_h0: bool = True) -> list[str]:
        """Return all constraint violations (empty list if valid).

        With strict_h0, the double-well requirement 0 < theta < theta0 is
        enforced for both slots; relaxing it only downgrades that check to
        a warning (useful for convex-regime tests).
        """
        bad = []
        if not abs(self.c) < 1:
            bad.append(f"c: need |c| < 1, got {self.c}")
        if not self.sigma >= 0:
            bad.append(f"sigma: need sigma >= 0, got {self.sigma}")
        if not self.eps_u > 0:
            bad.append(f"eps_u: need eps_u > 0, got {self.eps_u}")
        if not self.eps_v > 0:
            bad.append(f"eps_v: need eps_v > 0, got {self.eps_v}")
        if not 0 <= self.alpha_visc < 1:
            bad.append(f"alpha_visc: need 0 <= alpha_visc < 1, got {self.alpha_visc}")
        for name, th, th0 in (
            ("u", self.theta_u, self.theta0_u),
            ("v", self.theta_v, self.theta0_v),
        ):
            if not th > 0:
                bad.append(f"theta_{name}: need theta > 0, got {th}")
            if not th0 > 0:
                bad.append(f"theta0_{name}: need theta0 > 0, got {th0}")
            if th > 0 and th0 > 0 and not th < th0:
                msg = f"theta_{name}: double-well needs 0 < theta < theta0, got theta={th}, theta0={th0}"
                if strict_h0:
                    bad.append(msg)
                else:
                    warnings.warn("relaxed mode: " + msg, stacklevel=2)
        return bad

    def require_valid(self, strict_h0: bool = True) -> "Parameters":
        bad = self.validate(strict_h0=strict_h0)
        if bad:
            raise ValueError("invalid Parameters: " + "; ".join(bad))
        return self


@dataclass(frozen=True)
class PotentialSpec:
    """Which potential to evaluate: the singular one or its cutoff."""

    params: Parameters
    variant: str = "flory_huggins"  # or "cutoff"
    delta: float | None = None

    def __post_init__(self):
        if self.variant not in ("flory_huggins", "cutoff"):
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.variant == "cutoff":
            if self.delta is None or not 0 < self.delta < 1:
                raise ValueError(f"cutoff needs delta in (0,1), got {self.delta}")

    @property
    def is_cutoff(self) -> bool:
        return self.variant == "cutoff"


# ---------------------------------------------------------------------------
# Flory-Huggins entropy S_hat and derivatives


def _check_open_interval(s, what):
    s = np.asarray(s)
    if np.any(np.abs(s) >= 1):
        raise DomainViolation(f"{what} needs |s| < 1, got max |s| = {np.max(np.abs(s))}")


def fh_hat(s, theta):
    """Entropy value on [-1, 1]; endpoints take the limit theta*ln 2."""
    s = np.asarray(s, dtype=np.float64)
    if np.any(np.abs(s) > 1):
        raise DomainViolation(f"fh_hat needs |s| <= 1, got max |s| = {np.max(np.abs(s))}")
    p, m = 1.0 + s, 1.0 - s
    # x*log(x) with the continuous limit 0 at x=0
    out = 0.5 * theta * (
        np.where(p > 0, p * np.log(np.where(p > 0, p, 1.0)), 0.0)
        + np.where(m > 0, m * np.log(np.where(m > 0, m, 1.0)), 0.0)
    )
    return out if out.ndim else float(out)


def fh_hat_d1(s, theta):
    """S_hat'(s) = (theta/2) ln((1+s)/(1-s)), blowing up at +-1."""
    _check_open_interval(s, "fh_hat_d1")
    s = np.asarray(s, dtype=np.float64)
    out = 0.5 * theta * (np.log1p(s) - np.log1p(-s))
    return out if out.ndim else float(out)


def fh_hat_d2(s, theta):
    """S_hat''(s) = theta / (1 - s^2) >= theta."""
    _check_open_interval(s, "fh_hat_d2")
    s = np.asarray(s, dtype=np.float64)
    out = theta / ((1.0 - s) * (1.0 + s))
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# Polynomial coupling W and the combined potential F


def w_value(u, v, params: Parameters):
    a, b, c = params.coupling_a, params.coupling_b, params.coupling_c
    return a * u * v + b * u**2 * v + c * u * v**2


def w_du(u, v, params: Parameters):
    a, b, c = params.coupling_a, params.coupling_b, params.coupling_c
    return a * v + 2 * b * u * v + c * v**2


def w_dv(u, v, params: Parameters):
    a, b, c = params.coupling_a, params.coupling_b, params.coupling_c
    return a * u + b * u**2 + 2 * c * u * v


def w_second(u, v, params: Parameters):
    """(W_uu, W_uv, W_vv); the mixed partial is symmetric."""
    a, b, c = params.coupling_a, params.coupling_b, params.coupling_c
    return (2 * b * v, a + 2 * b * u + 2 * c * v, 2 * c * u)


def f_value(u, v, spec: PotentialSpec):
    if spec.is_cutoff:
        return f_delta_value(u, v, spec.delta, spec.params)
    p = spec.params
    su = fh_hat(u, p.theta_u) - 0.5 * p.theta0_u * np.asarray(u) ** 2
    sv = fh_hat(v, p.theta_v) - 0.5 * p.theta0_v * np.asarray(v) ** 2
    out = su + sv + w_value(u, v, p)
    return out if np.ndim(out) else float(out)


def f_du(u, v, spec: PotentialSpec):
    if spec.is_cutoff:
        return f_delta_du(u, v, spec.delta, spec.params)
    p = spec.params
    out = fh_hat_d1(u, p.theta_u) - p.theta0_u * np.asarray(u) + w_du(u, v, p)
    return out if np.ndim(out) else float(out)


def f_dv(u, v, spec: PotentialSpec):
    if spec.is_cutoff:
        return f_delta_dv(u, v, spec.delta, spec.params)
    p = spec.params
    out = fh_hat_d1(v, p.theta_v) - p.theta0_v * np.asarray(v) + w_dv(u, v, p)
    return out if np.ndim(out) else float(out)


# ---------------------------------------------------------------------------
# C^2 cutoff bump xi_delta and the regularized potential F_delta
#
# xi_delta is the exact-support closed form of the convolution of the
# indicator of [-1+delta/2, 1-delta/2] with a mollifier of radius delta/4:
# plateau |s| <= 1 - 3 delta/4, support |s| < 1 - delta/4, quintic
# smoothstep transitions (C^2, monotone on each band).


def _check_delta(delta):
    if not 0 < delta < 1:
        raise ValueError(f"delta must be in (0,1), got {delta}")


def _smoothstep(x):
    # quintic: value 0->1 on [0,1], first and second derivatives vanish at ends
    return x**3 * (10.0 + x * (-15.0 + 6.0 * x))


def _smoothstep_d1(x):
    return 30.0 * x**2 * (1.0 - x) ** 2


def _smoothstep_d2(x):
    return 60.0 * x * (1.0 - x) * (1.0 - 2.0 * x)


def _xi_pieces(delta, s):
    """Return (x, in_band, in_plateau) for |s| mapped onto the right band."""
    a = np.abs(np.asarray(s, dtype=np.float64))
    lo = 1.0 - 0.75 * delta  # plateau edge
    hi = 1.0 - 0.25 * delta  # support edge
    x = np.clip((a - lo) / (hi - lo), 0.0, 1.0)
    return a, x, lo, hi


def cutoff_xi(delta, s):
    _check_delta(delta)
    a, x, lo, hi = _xi_pieces(delta, s)
    out = np.where(a <= lo, 1.0, np.where(a >= hi, 0.0, 1.0 - _smoothstep(x)))
    return out if out.ndim else float(out)


def cutoff_xi_d1(delta, s):
    _check_delta(delta)
    s = np.asarray(s, dtype=np.float64)
    a, x, lo, hi = _xi_pieces(delta, s)
    band = (a > lo) & (a < hi)
    out = np.where(band, -_smoothstep_d1(x) / (hi - lo) * np.sign(s), 0.0)
    return out if out.ndim else float(out)


def cutoff_xi_d2(delta, s):
    _check_delta(delta)
    a, x, lo, hi = _xi_pieces(delta, s)
    band = (a > lo) & (a < hi)
    out = np.where(band, -_smoothstep_d2(x) / (hi - lo) ** 2, 0.0)
    return out if out.ndim else float(out)


def _s_hat_delta_parts(s, theta, delta):
    """Value/d1/d2 of S_hat * xi_delta, zero outside the support."""
    s = np.asarray(s, dtype=np.float64)
    hi = 1.0 - 0.25 * delta
    inside = np.abs(s) < hi
    sc = np.where(inside, s, 0.0)
    val = fh_hat(sc, theta) * cutoff_xi(delta, sc)
    d1 = fh_hat_d1(sc, theta) * cutoff_xi(delta, sc) + fh_hat(sc, theta) * cutoff_xi_d1(delta, sc)
    d2 = (
        fh_hat_d2(sc, theta) * cutoff_xi(delta, sc)
        + 2.0 * fh_hat_d1(sc, theta) * cutoff_xi_d1(delta, sc)
        + fh_hat(sc, theta) * cutoff_xi_d2(delta, sc)
    )
    z = np.zeros_like(val)
    return (
        np.where(inside, val, z),
        np.where(inside, d1, z),
        np.where(inside, d2, z),
    )


def _quad_delta_parts(s, theta0, delta):
    """Value/d1 of (theta0/2) s^2 * xi_delta (the demixing part, cut off)."""
    s = np.asarray(s, dtype=np.float64)
    q = 0.5 * theta0 * s**2
    qd = theta0 * s
    xi = cutoff_xi(delta, s)
    xid = cutoff_xi_d1(delta, s)
    return q * xi, qd * xi + q * xid


def s_hat_delta(s, theta, delta):
    """Cutoff entropy well S_hat * xi_delta (the convex part made bounded)."""
    _check_delta(delta)
    out = _s_hat_delta_parts(s, theta, delta)[0]
    return out if np.ndim(out) else float(out)


def s_hat_delta_d1(s, theta, delta):
    _check_delta(delta)
    out = _s_hat_delta_parts(s, theta, delta)[1]
    return out if np.ndim(out) else float(out)


def s_hat_delta_d2(s, theta, delta):
    _check_delta(delta)
    out = _s_hat_delta_parts(s, theta, delta)[2]
    return out if np.ndim(out) else float(out)


def f_delta_value(u, v, delta, params: Parameters):
    _check_delta(delta)
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    su = _s_hat_delta_parts(u, params.theta_u, delta)[0] - _quad_delta_parts(u, params.theta0_u, delta)[0]
    sv = _s_hat_delta_parts(v, params.theta_v, delta)[0] - _quad_delta_parts(v, params.theta0_v, delta)[0]
    w = w_value(u, v, params) * cutoff_xi(delta, u) * cutoff_xi(delta, v)
    out = su + sv + w
    return out if out.ndim else float(out)


def f_delta_du(u, v, delta, params: Parameters):
    _check_delta(delta)
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    s_d1 = _s_hat_delta_parts(u, params.theta_u, delta)[1] - _quad_delta_parts(u, params.theta0_u, delta)[1]
    w = (
        w_du(u, v, params) * cutoff_xi(delta, u)
        + w_value(u, v, params) * cutoff_xi_d1(delta, u)
    ) * cutoff_xi(delta, v)
    out = s_d1 + w
    return out if out.ndim else float(out)


def f_delta_dv(u, v, delta, params: Parameters):
    _check_delta(delta)
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    s_d1 = _s_hat_delta_parts(v, params.theta_v, delta)[1] - _quad_delta_parts(v, params.theta0_v, delta)[1]
    w = (
        w_dv(u, v, params) * cutoff_xi(delta, v)
        + w_value(u, v, params) * cutoff_xi_d1(delta, v)
    ) * cutoff_xi(delta, u)
    out = s_d1 + w
    return out if out.ndim else float(out)


def f_second(u, v, spec: PotentialSpec):
    """Second partials (F_uu, F_uv, F_vv) of the active potential."""
    p = spec.params
    w_uu, w_uv, w_vv = w_second(u, v, p)
    if not spec.is_cutoff:
        f_uu = fh_hat_d2(u, p.theta_u) - p.theta0_u + w_uu
        f_vv = fh_hat_d2(v, p.theta_v) - p.theta0_v + w_vv
        return f_uu, w_uv, f_vv
    d = spec.delta
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    xi_u, xi_v = cutoff_xi(d, u), cutoff_xi(d, v)
    xi_u1, xi_v1 = cutoff_xi_d1(d, u), cutoff_xi_d1(d, v)
    xi_u2, xi_v2 = cutoff_xi_d2(d, u), cutoff_xi_d2(d, v)
    w = w_value(u, v, p)
    w_u, w_v = w_du(u, v, p), w_dv(u, v, p)
    quad_u = 0.5 * p.theta0_u * u**2
    quad_v = 0.5 * p.theta0_v * v**2
    f_uu = (
        s_hat_delta_d2(u, p.theta_u, d)
        - (p.theta0_u * xi_u + 2.0 * p.theta0_u * u * xi_u1 + quad_u * xi_u2)
        + (w_uu * xi_u + 2.0 * w_u * xi_u1 + w * xi_u2) * xi_v
    )
    f_vv = (
        s_hat_delta_d2(v, p.theta_v, d)
        - (p.theta0_v * xi_v + 2.0 * p.theta0_v * v * xi_v1 + quad_v * xi_v2)
        + (w_vv * xi_v + 2.0 * w_v * xi_v1 + w * xi_v2) * xi_u
    )
    f_uv = (w_uv * xi_u + w_v * xi_u1) * xi_v + (w_u * xi_u + w * xi_u1) * xi_v1
    return f_uu, f_uv, f_vv


def h2_ratio(delta, theta, rho):
    """Growth diagnostic |ln delta|^rho / S_hat'(1 - 2 delta).

    For the logarithmic entropy this tends to 2/theta as delta -> 0, i.e.
    the growth condition holds with exponent rho = 1.
    """
    if not 0 < delta < 0.5:
        raise ValueError(f"delta must be in (0, 1/2), got {delta}")
    if not rho > 0.5:
        raise ValueError(f"rho must exceed 1/2, got {rho}")
    return abs(np.log(delta)) ** rho / fh_hat_d1(1.0 - 2.0 * delta, theta)


# ---------------------------------------------------------------------------
# Scheme-facing split: implicit (convex, possibly cut off) part and its
# derivatives, plus the explicit remainder evaluated at the old state.


def implicit_d1(s, spec: PotentialSpec, slot: str):
    """First derivative of the implicitly treated entropy well."""
    theta = spec.params.theta_u if slot == "u" else spec.params.theta_v
    if spec.is_cutoff:
        return s_hat_delta_d1(s, theta, spec.delta)
    return fh_hat_d1(s, theta)


def implicit_d2(s, spec: PotentialSpec, slot: str):
    theta = spec.params.theta_u if slot == "u" else spec.params.theta_v
    if spec.is_cutoff:
        return s_hat_delta_d2(s, theta, spec.delta)
    return fh_hat_d2(s, theta)


def explicit_du(u, v, spec: PotentialSpec):
    """f_du minus the implicit part, evaluated at the old state."""
    p = spec.params
    if spec.is_cutoff:
        return f_delta_du(u, v, spec.delta, p) - s_hat_delta_d1(u, p.theta_u, spec.delta)
    return -p.theta0_u * np.asarray(u) + w_du(u, v, p)


def explicit_dv(u, v, spec: PotentialSpec):
    p = spec.params
    if spec.is_cutoff:
        return f_delta_dv(u, v, spec.delta, p) - s_hat_delta_d1(v, p.theta_v, spec.delta)
    return -p.theta0_v * np.asarray(v) + w_dv(u, v, p)
