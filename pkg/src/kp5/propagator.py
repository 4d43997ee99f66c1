"""The exact linear group S(t), Littlewood-Paley bands, and modulation splits.

S(t) acts diagonally in Fourier space with unimodular symbol exp(i*t*p), so
propagation is exact per mode for any t.  Littlewood-Paley projections act on
the x frequency only.  Modulation projections conjugate a sampled trajectory
by the group, split the temporal spectrum at a dyadic scale M, and conjugate
back; a finite record needs leakage control, so the conjugated samples are
multiplied by a raised-cosine taper over the first and last 10% of the window
and the taper-weighted time mean is routed to the low-modulation half (a
time-constant conjugated path therefore has exactly zero high-modulation
content, matching the whole-line operator on free waves).
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from .fields import (
    Grid,
    DispersionParams,
    SpectralField,
    hermitianize,
    symbol_grid,
    unimodular_phases,
)

__all__ = [
    "DyadicLadder",
    "FieldTrajectory",
    "propagate",
    "free_trajectory",
    "lp_project",
    "modulation_project",
    "raised_cosine_taper",
    "scale_snapshots",
]


def _bump(x: np.ndarray) -> np.ndarray:
    """Smooth cutoff: 1 for |x| <= 1, 0 for |x| >= 2, exp-type blend between."""
    ax = np.abs(np.asarray(x, dtype=float))
    out = np.zeros_like(ax)
    out[ax <= 1.0] = 1.0
    mid = (ax > 1.0) & (ax < 2.0)
    if np.any(mid):
        with np.errstate(over="ignore"):
            g1 = np.exp(-1.0 / (2.0 - ax[mid]))
            g2 = np.exp(-1.0 / (ax[mid] - 1.0))
        out[mid] = g1 / (g1 + g2)
    return out


@dataclass(frozen=True)
class DyadicLadder:
    """Dyadic bands N = 2^k, k_min <= k <= k_max, with the standard smooth bump.

    psi(x) = bump(x) - bump(2x) is supported in 1/2 <= |x| <= 2 and the bands
    telescope to an exact partition of unity on [2^k_min, 2^k_max].
    """

    k_min: int
    k_max: int

    def __post_init__(self):
        if self.k_min > self.k_max:
            raise ValueError("k_min must not exceed k_max")

    @property
    def bands(self) -> tuple[float, ...]:
        return tuple(2.0**k for k in range(self.k_min, self.k_max + 1))

    @staticmethod
    def phi(x) -> np.ndarray:
        return _bump(x)

    @staticmethod
    def psi(x) -> np.ndarray:
        return _bump(x) - _bump(2.0 * np.asarray(x, dtype=float))

    def psi_n(self, N: float, xi) -> np.ndarray:
        if N not in self.bands:
            raise ValueError(f"band {N} outside ladder range 2^[{self.k_min},{self.k_max}]")
        return self.psi(np.asarray(xi, dtype=float) / N)

    def partition_values(self, xi) -> np.ndarray:
        """Sum of psi_N over the ladder; equals 1 on [2^k_min, 2^k_max]."""
        xi = np.asarray(xi, dtype=float)
        return sum(self.psi(xi / N) for N in self.bands)

    @classmethod
    def covering(cls, grid: Grid) -> "DyadicLadder":
        dxi = 2 * np.pi / grid.lx
        xi_max = dxi * (grid.nx // 2)
        return cls(math.floor(math.log2(dxi)), math.ceil(math.log2(xi_max)))


@dataclass(frozen=True)
class FieldTrajectory:
    """Uniformly sampled snapshots u(t0 + m*dt) stored as one complex array
    of shape (n, nx, ny) in the same layout as SpectralField coefficients."""

    grid: Grid
    t0: float
    dt: float
    data: np.ndarray

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        d = self.data
        if d.ndim != 3 or d.shape[1:] != self.grid.shape:
            raise ValueError(f"trajectory data shape {d.shape} incompatible with grid")
        if d.shape[0] < 2:
            raise ValueError("trajectory needs at least two snapshots")
        if d.dtype != np.complex128:
            raise ValueError("trajectory data must be complex128")
        jx, jy = self.grid._mirror_index
        if not np.array_equal(d, np.conj(d[:, jx][:, :, jy])):
            raise ValueError("snapshot Hermitian symmetry violated")
        if np.any(d[:, 0, :] != 0) or np.any(d[:, self.grid.nx // 2, :] != 0) \
                or np.any(d[:, :, self.grid.ny // 2] != 0):
            raise ValueError("snapshot constraint lines must be zero")
        if d.flags.writeable:
            d.flags.writeable = False

    @classmethod
    def from_fields(cls, fields, t0: float, dt: float) -> "FieldTrajectory":
        if len(fields) < 2:
            raise ValueError("trajectory needs at least two snapshots")
        grid = fields[0].grid
        if any(f.grid != grid for f in fields):
            raise ValueError("all snapshots must share one grid")
        return cls(grid, t0, dt, np.array([f.coeffs for f in fields]))

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.data.shape[0])

    @property
    def n_snapshots(self) -> int:
        return self.data.shape[0]

    @property
    def duration(self) -> float:
        return self.dt * (self.data.shape[0] - 1)

    def field(self, m: int) -> SpectralField:
        return SpectralField(self.grid, np.ascontiguousarray(self.data[m]))

    @property
    def snapshots(self) -> list[SpectralField]:
        return [self.field(m) for m in range(self.n_snapshots)]

    def final_field(self) -> SpectralField:
        return self.field(self.n_snapshots - 1)


def propagate(f: SpectralField, t: float, params: DispersionParams) -> SpectralField:
    """Apply the linear group: multiply each coefficient by exp(i*t*p)."""
    mult = unimodular_phases(f.grid, params.alpha, t)
    return SpectralField(f.grid, hermitianize(f.grid, f.coeffs * mult))


def free_trajectory(u0: SpectralField, params: DispersionParams,
                    t0: float, dt: float, n: int) -> FieldTrajectory:
    """Exact linear evolution sampled at t0 + m*dt, m = 0..n-1."""
    ts = t0 + dt * np.arange(n)
    data = u0.coeffs[None] * unimodular_phases(u0.grid, params.alpha, ts)
    jx, jy = u0.grid._mirror_index
    data = 0.5 * (data + np.conj(data[:, jx][:, :, jy]))
    return FieldTrajectory(u0.grid, t0, dt, data)


def lp_project(f: SpectralField, N: float, ladder: DyadicLadder | None = None) -> SpectralField:
    """Littlewood-Paley band projection in the x frequency."""
    if ladder is None:
        ladder = DyadicLadder.covering(f.grid)
    w = ladder.psi_n(N, np.abs(f.grid.xi))
    return SpectralField(f.grid, f.coeffs * w[:, None])


def raised_cosine_taper(n: int, fraction: float = 0.1) -> np.ndarray:
    """Unit window with raised-cosine ramps over the first/last ``fraction``."""
    w = np.ones(n)
    m = max(2, int(round(fraction * n)))
    ramp = 0.5 * (1.0 - np.cos(np.pi * (np.arange(m) + 0.5) / m))
    w[:m] = ramp
    w[-m:] = ramp[::-1]
    return w


def modulation_project(traj: FieldTrajectory, M: float, mode: str,
                       params: DispersionParams) -> FieldTrajectory:
    """Split the trajectory at modulation scale M (distance of the temporal
    frequency from the dispersion surface, in angular units).

    ``mode="below"`` and ``mode="at_or_above"`` return the two halves; they
    sum to the windowed (tapered) input exactly.
    """
    if mode not in ("below", "at_or_above"):
        raise ValueError(f"mode must be 'below' or 'at_or_above', got {mode!r}")
    n = traj.n_snapshots
    duration = traj.duration
    if not (1.0 / duration <= M <= 1.0 / (2.0 * traj.dt)):
        raise ValueError(
            f"modulation scale M={M} unresolvable: admissible range "
            f"[{1.0/duration:.4g}, {1.0/(2.0*traj.dt):.4g}]")
    phases = np.conj(unimodular_phases(traj.grid, params.alpha, traj.times))
    W = traj.data * phases

    taper = raised_cosine_taper(n)
    mu = np.tensordot(taper, W, axes=(0, 0)) / np.sum(taper)
    fluct = taper[:, None, None] * (W - mu[None])

    tau = 2 * np.pi * np.fft.fftfreq(n, d=traj.dt)
    hi_mult = 1.0 - DyadicLadder.phi(2.0 * tau / M)
    high = np.fft.ifft(hi_mult[:, None, None] * np.fft.fft(fluct, axis=0), axis=0)
    if mode == "at_or_above":
        out_w = high
    else:
        out_w = taper[:, None, None] * W - high

    data = out_w * np.conj(phases)
    jx, jy = traj.grid._mirror_index
    data = 0.5 * (data + np.conj(data[:, jx][:, :, jy]))
    data[:, 0, :] = 0.0
    data[:, traj.grid.nx // 2, :] = 0.0
    data[:, :, traj.grid.ny // 2] = 0.0
    return FieldTrajectory(traj.grid, traj.t0, traj.dt, data)


def scale_snapshots(traj: FieldTrajectory, weights: np.ndarray) -> FieldTrajectory:
    """Multiply snapshot m by the real scalar weights[m] (e.g. a time cutoff)."""
    w = np.asarray(weights, dtype=float)
    if w.shape != (traj.n_snapshots,):
        raise ValueError("need one weight per snapshot")
    return FieldTrajectory(traj.grid, traj.t0, traj.dt, traj.data * w[:, None, None])
