"""Spectral discretization on axis-aligned rectangles with Neumann walls.

Fields are collocated at cell midpoints x_i = (i + 1/2) h, the natural
points of the type-II cosine transform.  In that basis the homogeneous
Neumann Laplacian is diagonal with eigenvalues

    lambda_k = sum_axes (pi * k_axis / length_axis)^2,

so differentiation, the inverse operator on mean-zero data, and the dual
norms built from it are all exact mode-by-mode operations.

Coefficient convention: the orthonormal DCT-II is rescaled by
sqrt(cell volume) so that Parseval reads

    sum(values^2) * h^d == sum(coeffs^2)  ( == ||f||_{L2}^2 ).
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np
import scipy.fft

from .errors import GridMismatch, NonZeroMean

# Tolerance for the mean-zero precondition of the inverse Laplacian:
# strict enough to catch misuse, loose enough for accumulated roundoff.
MEANZERO_RTOL = 1e-10


def _workers() -> int | None:
    """Thread cap for the FFT backend, from CHLAB_THREADS."""
    w = os.environ.get("CHLAB_THREADS")
    return int(w) if w else None


def _as_tuple(x, dim=None):
    if np.isscalar(x):
        return (x,) if dim is None else (x,) * dim
    return tuple(x)


class Grid:
    """Tensor-product midpoint grid on a rectangle, 1D or 2D."""

    def __init__(self, n, length):
        n = _as_tuple(n)
        length = _as_tuple(length, dim=len(n))
        if len(n) not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {len(n)}")
        if len(length) != len(n):
            raise ValueError("n and length must have the same number of axes")
        if any(int(m) != m or m < 8 for m in n):
            raise ValueError(f"need at least 8 nodes per axis, got n={n}")
        if any(l <= 0 for l in length):
            raise ValueError(f"lengths must be positive, got {length}")
        self.n = tuple(int(m) for m in n)
        self.length = tuple(float(l) for l in length)
        self.dim = len(self.n)
        self.spacing = tuple(l / m for l, m in zip(self.length, self.n))
        self.cell_volume = float(np.prod(self.spacing))
        self.volume = float(np.prod(self.length))

        # lambda_k = sum_axes (pi k / L)^2, shape == self.shape
        axes = [(np.pi * np.arange(m) / l) ** 2 for m, l in zip(self.n, self.length)]
        lam = axes[0]
        for a in axes[1:]:
            lam = lam[..., None] + a
        self._lam = lam
        self._lam.setflags(write=False)
        # 1/lambda on nonzero modes, 0 on the constant mode
        inv = np.zeros_like(lam)
        nz = lam > 0
        inv[nz] = 1.0 / lam[nz]
        self._lam_inv = inv
        self._lam_inv.setflags(write=False)

    @property
    def shape(self):
        return self.n

    @property
    def lam(self):
        """Neumann Laplacian eigenvalues per mode (nonnegative, lam[0]=0)."""
        return self._lam

    @property
    def lam_inv(self):
        return self._lam_inv

    def coords(self):
        """Midpoint coordinate arrays, one per axis (broadcastable)."""
        xs = []
        for ax, (m, h) in enumerate(zip(self.n, self.spacing)):
            x = (np.arange(m) + 0.5) * h
            sh = [1] * self.dim
            sh[ax] = m
            xs.append(x.reshape(sh))
        return xs

    def fwd(self, values: np.ndarray) -> np.ndarray:
        """Nodal values -> orthonormal cosine coefficients (L2-scaled)."""
        return scipy.fft.dctn(values, type=2, norm="ortho", workers=_workers()) * np.sqrt(
            self.cell_volume
        )

    def inv(self, coeffs: np.ndarray) -> np.ndarray:
        """Coefficients -> nodal values."""
        return scipy.fft.idctn(
            coeffs / np.sqrt(self.cell_volume), type=2, norm="ortho", workers=_workers()
        )

    def compatible(self, other: "Grid") -> bool:
        return self is other or (self.n == other.n and self.length == other.length)

    def __eq__(self, other):
        return isinstance(other, Grid) and self.n == other.n and self.length == other.length

    def __hash__(self):
        return hash((self.n, self.length))

    def __repr__(self):
        return f"Grid(n={self.n}, length={self.length})"


@dataclass(frozen=True)
class ScalarField:
    """Immutable nodal scalar field on a grid."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != self.grid.shape:
            raise GridMismatch(f"values shape {v.shape} != grid shape {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field contains non-finite values")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def with_values(self, values) -> "ScalarField":
        return ScalarField(self.grid, values)


@dataclass(frozen=True)
class SpectralField:
    """Cosine-basis coefficients of a scalar field."""

    grid: Grid
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.float64)
        if c.shape != self.grid.shape:
            raise GridMismatch(f"coeffs shape {c.shape} != grid shape {self.grid.shape}")
        c = c.copy()
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)


def _same_grid(f: ScalarField, g: ScalarField) -> Grid:
    if not f.grid.compatible(g.grid):
        raise GridMismatch(f"{f.grid} vs {g.grid}")
    return f.grid


def to_spectral(f: ScalarField) -> SpectralField:
    return SpectralField(f.grid, f.grid.fwd(f.values))


def from_spectral(F: SpectralField) -> ScalarField:
    return ScalarField(F.grid, F.grid.inv(F.coeffs))


def mean(f: ScalarField) -> float:
    return float(np.mean(f.values))


def inner(f: ScalarField, g: ScalarField) -> float:
    grid = _same_grid(f, g)
    return float(np.sum(f.values * g.values) * grid.cell_volume)


def norm_L2(f: ScalarField) -> float:
    return float(np.sqrt(np.sum(f.values**2) * f.grid.cell_volume))


def grad_norm_sq(f: ScalarField) -> float:
    """||grad f||^2 computed spectrally: sum lam_k c_k^2."""
    c = f.grid.fwd(f.values)
    return float(np.sum(f.grid.lam * c**2))


def norm_H1(f: ScalarField) -> float:
    c = f.grid.fwd(f.values)
    return float(np.sqrt(np.sum((1.0 + f.grid.lam) * c**2)))


def norm_H2(f: ScalarField) -> float:
    """Spectral H^2 norm; on the rectangle ||D^2 f|| == ||lap f|| mode-wise."""
    c = f.grid.fwd(f.values)
    lam = f.grid.lam
    return float(np.sqrt(np.sum((1.0 + lam + lam**2) * c**2)))


def laplacian(f: ScalarField) -> ScalarField:
    c = f.grid.fwd(f.values)
    return ScalarField(f.grid, f.grid.inv(-f.grid.lam * c))


def _check_meanzero(values: np.ndarray, grid: Grid):
    m = np.mean(values)
    nrm = np.sqrt(np.sum(values**2) * grid.cell_volume)
    if abs(m) > MEANZERO_RTOL * max(nrm, np.finfo(float).tiny):
        raise NonZeroMean(f"|mean|={abs(m):.3e} exceeds {MEANZERO_RTOL:g}*||f||={MEANZERO_RTOL * nrm:.3e}")


def inverse_laplacian_meanzero(f: ScalarField) -> ScalarField:
    """Operator N: solve -lap(u) = f with mean(u) = 0, for mean-zero f."""
    _check_meanzero(f.values, f.grid)
    c = f.grid.fwd(f.values)
    out = f.grid.lam_inv * c
    out.flat[0] = 0.0
    return ScalarField(f.grid, f.grid.inv(out))


def norm_Vstar0(f: ScalarField) -> float:
    """||f||_* = sqrt(<f, N f>) on mean-zero inputs."""
    _check_meanzero(f.values, f.grid)
    c = f.grid.fwd(f.values)
    return float(np.sqrt(np.sum(f.grid.lam_inv * c**2)))


def norm_minus1(f: ScalarField) -> float:
    """||f||_{-1}^2 = ||f - mean||_*^2 + |mean|^2."""
    m = mean(f)
    c = f.grid.fwd(f.values - m)
    c.flat[0] = 0.0
    return float(np.sqrt(np.sum(f.grid.lam_inv * c**2) + m * m))
