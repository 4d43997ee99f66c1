"""Periodic grids, real spectral fields, and the fifth-order dispersion symbol.

Fields are stored as complex Fourier coefficients c[j_x, j_y] in standard FFT
layout, normalized so that u(x, y) = sum_{j,k} c[j,k] exp(i(xi_j x + eta_k y)).
With this convention the physical L2 norm is sqrt(lx*ly*sum|c|^2).

Three structural constraints are enforced on every field:
  * Hermitian symmetry, c[-j,-k] = conj(c[j,k])  (real physical samples),
  * zero x-mean, c[0,k] = 0                      (x-antiderivatives well defined),
  * zero Nyquist lines                           (unambiguous Hermitian pairing).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

__all__ = [
    "Grid",
    "DispersionParams",
    "SpectralField",
    "dispersion_symbol",
    "symbol_grid",
    "to_physical",
    "to_spectral",
    "project_constraints",
    "hermitianize",
]


def _is_pow2(n: int) -> bool:
    return n >= 2 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on [0, lx) x [0, ly).

    Mode counts must be powers of two; discrete frequencies are
    xi_j = (2*pi/lx)*j for j in {-nx/2, ..., nx/2 - 1} in FFT order,
    eta likewise.
    """

    nx: int
    ny: int
    lx: float
    ly: float

    def __post_init__(self):
        if not (_is_pow2(self.nx) and _is_pow2(self.ny)):
            raise ValueError(f"grid sizes must be powers of two, got {self.nx}x{self.ny}")
        if not (self.lx > 0 and self.ly > 0):
            raise ValueError("domain periods must be positive")

    @cached_property
    def xi(self) -> np.ndarray:
        v = 2 * np.pi * np.fft.fftfreq(self.nx, d=1.0 / self.nx) / self.lx
        v.flags.writeable = False
        return v

    @cached_property
    def eta(self) -> np.ndarray:
        v = 2 * np.pi * np.fft.fftfreq(self.ny, d=1.0 / self.ny) / self.ly
        v.flags.writeable = False
        return v

    @cached_property
    def xi_mesh(self) -> np.ndarray:
        v = np.broadcast_to(self.xi[:, None], (self.nx, self.ny)).copy()
        v.flags.writeable = False
        return v

    @cached_property
    def eta_mesh(self) -> np.ndarray:
        v = np.broadcast_to(self.eta[None, :], (self.nx, self.ny)).copy()
        v.flags.writeable = False
        return v

    @cached_property
    def _mirror_index(self) -> tuple[np.ndarray, np.ndarray]:
        jx = (-np.arange(self.nx)) % self.nx
        jy = (-np.arange(self.ny)) % self.ny
        return jx, jy

    @property
    def cell_area(self) -> float:
        return (self.lx / self.nx) * (self.ly / self.ny)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)


@dataclass(frozen=True)
class DispersionParams:
    """Coefficients of the linear part: third-order alpha > 0, fifth-order beta.

    beta is fixed to -1; alpha must be positive for the resonance sign
    structure and all bounds downstream.
    """

    alpha: float = 1.0
    beta: float = -1.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha > 0 required, got {self.alpha}")
        if self.beta != -1.0:
            raise ValueError("only beta = -1 is supported")


def dispersion_symbol(params: DispersionParams, xi, eta):
    """p(xi, eta) = xi^5 + alpha*xi^3 - eta^2/xi  (beta = -1 substituted).

    Scalar or array arguments; xi must be nonzero everywhere.
    """
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    if np.any(xi == 0):
        raise ValueError("dispersion symbol is singular at xi = 0")
    out = xi**5 + params.alpha * xi**3 - eta**2 / xi
    return float(out) if out.ndim == 0 else out


@lru_cache(maxsize=32)
def symbol_grid(grid: Grid, alpha: float) -> np.ndarray:
    """Symbol evaluated on the grid lattice; the xi = 0 column is set to zero
    (those modes are annihilated by the zero x-mean constraint)."""
    xi, eta = grid.xi_mesh, grid.eta_mesh
    with np.errstate(divide="ignore", invalid="ignore"):
        p = xi**5 + alpha * xi**3 - eta**2 / xi
    p[xi == 0] = 0.0
    p.flags.writeable = False
    return p


def hermitianize(grid: Grid, coeffs: np.ndarray) -> np.ndarray:
    """Average with the conjugate mirror; identity on already-Hermitian data."""
    jx, jy = grid._mirror_index
    return 0.5 * (coeffs + np.conj(coeffs[jx][:, jy]))


_TWO_PI_L = 2 * np.arccos(np.longdouble(-1.0))


@lru_cache(maxsize=32)
def _symbol_grid_longdouble(grid: Grid, alpha: float) -> np.ndarray:
    p = symbol_grid(grid, alpha).astype(np.longdouble)
    p.flags.writeable = False
    return p


def unimodular_phases(grid: Grid, alpha: float, times) -> np.ndarray:
    """exp(i * t * p) on the lattice for scalar or 1-d ``times``.

    The phase argument is accumulated in extended precision and reduced mod
    2 pi before the complex exponential, so group-law defects stay near
    machine epsilon even when |t * p| reaches 1e6 radians.
    """
    p = _symbol_grid_longdouble(grid, alpha)
    t = np.asarray(times, dtype=np.longdouble)
    if t.ndim == 0:
        theta = np.mod(t * p, _TWO_PI_L).astype(np.float64)
    elif t.ndim == 1:
        theta = np.mod(t[:, None, None] * p[None], _TWO_PI_L).astype(np.float64)
    else:
        raise ValueError("times must be scalar or one-dimensional")
    return np.cos(theta) + 1j * np.sin(theta)


def _apply_constraints(grid: Grid, coeffs: np.ndarray) -> np.ndarray:
    c = np.array(coeffs, dtype=np.complex128, copy=True)
    c[0, :] = 0.0
    c[grid.nx // 2, :] = 0.0
    c[:, grid.ny // 2] = 0.0
    return hermitianize(grid, c)


@dataclass(frozen=True)
class SpectralField:
    """Fourier coefficients of a real zero-x-mean field on a Grid.

    Invariants are asserted at construction; use ``from_coeffs`` to build from
    raw data (applies the constraint projection first).
    """

    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self):
        c = self.coeffs
        if c.shape != self.grid.shape:
            raise ValueError(f"coefficient shape {c.shape} != grid shape {self.grid.shape}")
        if c.dtype != np.complex128:
            raise ValueError("coefficients must be complex128")
        jx, jy = self.grid._mirror_index
        if not np.array_equal(c, np.conj(c[jx][:, jy])):
            raise ValueError("Hermitian symmetry violated")
        if np.any(c[0, :] != 0):
            raise ValueError("zero x-mean violated: c[0, :] != 0")
        if np.any(c[self.grid.nx // 2, :] != 0) or np.any(c[:, self.grid.ny // 2] != 0):
            raise ValueError("Nyquist lines must be zero")
        if not c.flags.writeable:
            return
        c.flags.writeable = False

    @classmethod
    def from_coeffs(cls, grid: Grid, coeffs: np.ndarray) -> "SpectralField":
        return cls(grid, _apply_constraints(grid, coeffs))

    @classmethod
    def zeros(cls, grid: Grid) -> "SpectralField":
        return cls(grid, np.zeros(grid.shape, dtype=np.complex128))

    def __add__(self, other: "SpectralField") -> "SpectralField":
        self._check_same_grid(other)
        return SpectralField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        self._check_same_grid(other)
        return SpectralField(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, scalar: float) -> "SpectralField":
        s = float(scalar)  # complex scalars would break Hermitian symmetry
        return SpectralField(self.grid, s * self.coeffs)

    __rmul__ = __mul__

    def _check_same_grid(self, other: "SpectralField"):
        if other.grid != self.grid:
            raise ValueError("fields live on different grids")

    def reflect_x(self) -> "SpectralField":
        """Spatial reflection x -> -x (spectrally: c(xi, eta) -> c(-xi, eta))."""
        jx, _ = self.grid._mirror_index
        return SpectralField(self.grid, np.ascontiguousarray(self.coeffs[jx]))


def to_physical(f: SpectralField) -> np.ndarray:
    """Real samples u(x_i, y_j) on the grid."""
    n = f.grid.nx * f.grid.ny
    return np.fft.ifft2(f.coeffs).real * n


def to_spectral(samples: np.ndarray, grid: Grid, *, report: bool = False):
    """Back-transform of real samples onto the constrained coefficient set.

    The xi = 0 column and the Nyquist lines are zeroed; with ``report=True``
    the relative L2 mass discarded by that projection is returned as well.
    """
    samples = np.asarray(samples)
    if samples.shape != grid.shape:
        raise ValueError(f"sample shape {samples.shape} != grid shape {grid.shape}")
    if np.iscomplexobj(samples):
        raise ValueError("physical samples must be real")
    raw = np.fft.fft2(samples) / (grid.nx * grid.ny)
    field = SpectralField.from_coeffs(grid, raw)
    if not report:
        return field
    total = np.sum(np.abs(raw) ** 2)
    kept = np.sum(np.abs(field.coeffs) ** 2)
    discarded = np.sqrt(max(total - kept, 0.0) / total) if total > 0 else 0.0
    return field, float(discarded)


def project_constraints(f: SpectralField) -> SpectralField:
    """Idempotent projection onto the field invariants (identity on valid fields)."""
    return SpectralField(f.grid, _apply_constraints(f.grid, f.coeffs))
