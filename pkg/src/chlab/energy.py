"""Free energies, chemical potentials, and the discrete energy identity.

Three functionals share one breakdown record:

    psi        = int [ eps_u^2/2 |grad u|^2 + eps_v^2/2 |grad v|^2 + F(u,v) ]
    psi_hat    = psi + 1/2 ||u - mean(u)||_*^2 + 1/2 ||v - mean(v)||_*^2
                 (+ alpha(1+sigma)/2 (||u - mean||^2 + ||v - mean||^2) if asked)
    psi_tilde  = psi + sigma/2 ||v - mean(v)||_*^2

The sigma/2 weight on the nonlocal term is the one that closes the
dissipation identity

    d(psi_tilde)/dt + ||grad mu||^2 + ||grad phi_tilde||^2
        + sigma (mean(v) - c) int(phi) = 0

against phi_tilde = phi + sigma N(v - mean(v)), which is what
energy_identity_residual measures in its discrete endpoint form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import potentials as pot
from .errors import DomainViolation, GridMismatch
from .spectral_core import Grid, ScalarField

__all__ = [
    "EnergyBreakdown",
    "psi",
    "psi_hat",
    "psi_tilde",
    "mu_of",
    "phi_of",
    "phi_tilde_of",
    "energy_identity_residual",
]


@dataclass(frozen=True)
class EnergyBreakdown:
    gradient_u: float
    gradient_v: float
    potential: float
    nonlocal_v: float
    fluct_u: float
    fluct_v: float
    visc_u: float
    visc_v: float
    psi: float
    psi_hat: float
    psi_tilde: float

    CSV_COLUMNS = (
        "gradient_u",
        "gradient_v",
        "potential",
        "nonlocal_v",
        "fluct_u",
        "fluct_v",
        "visc_u",
        "visc_v",
        "psi",
        "psi_hat",
        "psi_tilde",
    )

    def csv_row(self) -> str:
        return ",".join(repr(float(getattr(self, k))) for k in self.CSV_COLUMNS)


def _bounds_ok(values: np.ndarray, what: str, spec: pot.PotentialSpec):
    if spec.is_cutoff:
        return
    if np.max(np.abs(values)) >= 1.0:
        raise DomainViolation(f"{what} touches +-1 (max |.| = {np.max(np.abs(values))})")


def _grids(u: ScalarField, v: ScalarField) -> Grid:
    if not u.grid.compatible(v.grid):
        raise GridMismatch(f"{u.grid} vs {v.grid}")
    return u.grid


def _fluct_vstar_sq(grid: Grid, values: np.ndarray) -> float:
    """||g - mean(g)||_*^2 via the spectral inverse Laplacian."""
    c = grid.fwd(values)
    c = c.copy()
    c.flat[0] = 0.0
    return float(np.sum(grid.lam_inv * c**2))


def _grad_sq(grid: Grid, values: np.ndarray) -> float:
    c = grid.fwd(values)
    return float(np.sum(grid.lam * c**2))


def _breakdown(u: ScalarField, v: ScalarField, spec: pot.PotentialSpec, include_visc: bool) -> EnergyBreakdown:
    grid = _grids(u, v)
    p = spec.params
    _bounds_ok(u.values, "u", spec)
    _bounds_ok(v.values, "v", spec)

    gradient_u = 0.5 * p.eps_u**2 * _grad_sq(grid, u.values)
    gradient_v = 0.5 * p.eps_v**2 * _grad_sq(grid, v.values)
    potential = float(np.sum(pot.f_value(u.values, v.values, spec)) * grid.cell_volume)

    fluct_u = 0.5 * _fluct_vstar_sq(grid, u.values)
    fluct_v = 0.5 * _fluct_vstar_sq(grid, v.values)
    nonlocal_v = p.sigma * fluct_v  # sigma/2 * ||v - mean||_*^2

    visc_u = visc_v = 0.0
    if include_visc:
        w = 0.5 * p.alpha_visc * (1.0 + p.sigma)
        visc_u = w * float(np.sum((u.values - np.mean(u.values)) ** 2) * grid.cell_volume)
        visc_v = w * float(np.sum((v.values - np.mean(v.values)) ** 2) * grid.cell_volume)

    total = gradient_u + gradient_v + potential
    return EnergyBreakdown(
        gradient_u=gradient_u,
        gradient_v=gradient_v,
        potential=potential,
        nonlocal_v=nonlocal_v,
        fluct_u=fluct_u,
        fluct_v=fluct_v,
        visc_u=visc_u,
        visc_v=visc_v,
        psi=total,
        psi_hat=total + fluct_u + fluct_v + visc_u + visc_v,
        psi_tilde=total + nonlocal_v,
    )


def psi(u: ScalarField, v: ScalarField, spec: pot.PotentialSpec) -> EnergyBreakdown:
    return _breakdown(u, v, spec, include_visc=False)


def psi_hat(u: ScalarField, v: ScalarField, spec: pot.PotentialSpec, include_visc: bool = False) -> EnergyBreakdown:
    return _breakdown(u, v, spec, include_visc=include_visc)


def psi_tilde(u: ScalarField, v: ScalarField, spec: pot.PotentialSpec) -> EnergyBreakdown:
    return _breakdown(u, v, spec, include_visc=False)


def _lap(grid: Grid, values: np.ndarray) -> np.ndarray:
    return grid.inv(-grid.lam * grid.fwd(values))


def _inv_lap0(grid: Grid, values: np.ndarray) -> np.ndarray:
    c = grid.lam_inv * grid.fwd(values)
    c.flat[0] = 0.0
    return grid.inv(c)


def mu_of(u: ScalarField, v: ScalarField, spec: pot.PotentialSpec, dudt: ScalarField | None = None) -> ScalarField:
    """mu = -eps_u^2 lap(u) + dF/du, plus alpha * du/dt in the viscous system."""
    grid = _grids(u, v)
    _bounds_ok(u.values, "u", spec)
    p = spec.params
    out = -p.eps_u**2 * _lap(grid, u.values) + pot.f_du(u.values, v.values, spec)
    if dudt is not None:
        out = out + p.alpha_visc * dudt.values
    return ScalarField(grid, out)


def phi_of(u: ScalarField, v: ScalarField, spec: pot.PotentialSpec, dvdt: ScalarField | None = None) -> ScalarField:
    """phi = -eps_v^2 lap(v) + dF/dv, plus alpha * dv/dt in the viscous system."""
    grid = _grids(u, v)
    _bounds_ok(v.values, "v", spec)
    p = spec.params
    out = -p.eps_v**2 * _lap(grid, v.values) + pot.f_dv(u.values, v.values, spec)
    if dvdt is not None:
        out = out + p.alpha_visc * dvdt.values
    return ScalarField(grid, out)


def phi_tilde_of(u: ScalarField, v: ScalarField, spec: pot.PotentialSpec) -> ScalarField:
    """phi_tilde = phi + sigma N(v - mean(v)), absorbing the nonlocal term."""
    grid = _grids(u, v)
    p = spec.params
    base = phi_of(u, v, spec)
    if p.sigma == 0.0:
        return base
    fluct = v.values - np.mean(v.values)
    return ScalarField(grid, base.values + p.sigma * _inv_lap0(grid, fluct))


def energy_identity_residual(prev, next, tau: float, spec: pot.PotentialSpec) -> float:
    """Discrete defect of the dissipation identity, endpoint convention.

    residual = (psi_tilde(next) - psi_tilde(prev)) / tau
               + ||grad mu||^2 + ||grad phi_tilde||^2
               + sigma (mean(v) - c) int(phi),
    with all dissipation terms evaluated at the next state.  First-order
    accurate along resolved trajectories; zero at steady states.
    """
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")
    grid = _grids(next.u, next.v)
    if not grid.compatible(prev.u.grid):
        raise GridMismatch(f"{prev.u.grid} vs {grid}")
    p = spec.params

    e_prev = psi_tilde(prev.u, prev.v, spec).psi_tilde
    e_next = psi_tilde(next.u, next.v, spec).psi_tilde

    mu = mu_of(next.u, next.v, spec)
    phit = phi_tilde_of(next.u, next.v, spec)
    phi = phi_of(next.u, next.v, spec)
    diss = _grad_sq(grid, mu.values) + _grad_sq(grid, phit.values)
    oono = p.sigma * (np.mean(next.v.values) - p.c) * float(np.sum(phi.values) * grid.cell_volume)
    return (e_next - e_prev) / tau + diss + oono
