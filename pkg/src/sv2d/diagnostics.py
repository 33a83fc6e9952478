"""Structure functions, energy spectra, best-decay constants, extrapolation.

The second-order structure function of a field with coefficients u_hat is

    S2(u; r)^2 = sum_k I(2 pi |k| r) |u_hat(k)|^2,

with the exact kernel I(x) = 2 - 4 J1(x)/x, or its cheap equivalent
Itilde(x) = min(x/2, sqrt(2))^2 (the "numerical" kernel; both within a
factor (3/2)^2 of each other). The 2 pi in the kernel argument comes from
the e^{2 pi i k.x} Fourier convention; the kernels themselves take the
already-scaled argument. Spectra are shell sums over the max norm,
E(u; K) = 1/2 sum_{|k|_inf = K} |u_hat(k)|^2. Statistical versions average
the squared quantities over ensemble members.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spectral import SpectralField

__all__ = [
    "bessel_j1",
    "kernel_exact",
    "kernel_numerical",
    "RGrid",
    "StructureTable",
    "SpectrumTable",
    "structure_function",
    "energy_spectrum",
    "c_max",
    "d_max",
    "richardson_extrapolate",
    "relative_energy_dissipation",
]

KERNEL_EXACT = "exact"
KERNEL_NUMERICAL = "numerical"


# -- Bessel J1 ----------------------------------------------------------------

_J1_SWITCH = 12.0


def _j1_series(x: np.ndarray) -> np.ndarray:
    """Power series J1(x) = (x/2) sum_m (-1)^m (x^2/4)^m / (m! (m+1)!)."""
    q = 0.25 * x * x
    term = np.full_like(x, 0.5)
    acc = term.copy()
    for m in range(1, 40):
        term = term * (-q) / (m * (m + 1))
        acc += term
    return x * acc


def _j1_asymptotic(x: np.ndarray) -> np.ndarray:
    """Hankel asymptotic expansion, accurate beyond the series switch point."""
    inv = 1.0 / x
    inv2 = inv * inv
    # P and Q modulus/phase series for nu = 1 (mu = 4)
    p = 1.0 + inv2 * (15.0 / 128.0 - inv2 * (4725.0 / 32768.0 - inv2 * 2837835.0 / 4194304.0))
    q = inv * (3.0 / 8.0 - inv2 * (105.0 / 1024.0 - inv2 * 72765.0 / 262144.0))
    chi = x - 0.75 * np.pi
    return np.sqrt(2.0 / (np.pi * x)) * (p * np.cos(chi) - q * np.sin(chi))


def bessel_j1(x):
    """J1 for x >= 0: power series below x = 12, Hankel asymptotics above."""
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    if np.any(x < 0):
        raise ValueError("bessel_j1 is defined for x >= 0")
    out = np.empty_like(x)
    lo = x <= _J1_SWITCH
    if np.any(lo):
        out[lo] = _j1_series(x[lo])
    if np.any(~lo):
        out[~lo] = _j1_asymptotic(x[~lo])
    return float(out[0]) if scalar else out


# -- kernels ------------------------------------------------------------------

def kernel_exact(x):
    """I(x) = 2 - 4 J1(x)/x, continuously extended by I(0) = 0."""
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    out = np.zeros_like(x)
    nz = x > 0
    out[nz] = 2.0 - 4.0 * bessel_j1(x[nz]) / x[nz]
    return float(out[0]) if scalar else out


def kernel_numerical(x):
    """Itilde(x) = min(x/2, sqrt(2))^2; nondecreasing, range [0, 2]."""
    x = np.asarray(x, dtype=float)
    out = np.minimum(0.5 * x, math.sqrt(2.0)) ** 2
    return float(out) if out.ndim == 0 else out


_KERNELS = {KERNEL_EXACT: kernel_exact, KERNEL_NUMERICAL: kernel_numerical}


# -- tables -------------------------------------------------------------------

@dataclass(frozen=True)
class RGrid:
    """Increment radii for structure-function evaluation, in (0, 1/2]."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("RGrid needs a 1D nonempty array")
        if np.any(v <= 0) or np.any(v > 0.5):
            raise ValueError("radii must lie in (0, 1/2]")
        if np.any(np.diff(v) <= 0):
            raise ValueError("radii must be strictly increasing")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def default_for(cls, n_modes: int, n_points: int = 50) -> "RGrid":
        """50 log-spaced radii in [1/(4N), 1/2]."""
        return cls(np.geomspace(1.0 / (4.0 * n_modes), 0.5, n_points))


@dataclass(frozen=True)
class StructureTable:
    r: RGrid
    s2: np.ndarray
    kernel: str


@dataclass(frozen=True)
class SpectrumTable:
    K: np.ndarray
    e: np.ndarray


def _as_members(u) -> list[SpectralField]:
    if isinstance(u, SpectralField):
        return [u]
    members = list(u)
    if not members:
        raise ValueError("empty ensemble")
    return members


def structure_function(u, r_grid: RGrid, kernel: str = KERNEL_NUMERICAL) -> StructureTable:
    """S2 over the radius grid; ensembles give the root mean square over
    members, S2(mu; r)^2 = (1/M) sum_i S2(u_i; r)^2."""
    ker = _KERNELS[kernel]
    members = _as_members(u)
    acc = np.zeros(r_grid.values.size)
    for f in members:
        mass = np.sum(np.abs(f.coeffs) ** 2, axis=0).ravel()
        kmag = np.sqrt(f.grid.ksq).ravel()
        for i, r in enumerate(r_grid.values):
            acc[i] += float(np.dot(ker(2.0 * np.pi * kmag * r), mass))
    return StructureTable(r_grid, np.sqrt(acc / len(members)), kernel)


def energy_spectrum(u) -> SpectrumTable:
    """Max-norm shell sums E(K) = 1/2 sum_{|k|_inf = K} |u_hat|^2, averaged
    over ensemble members."""
    members = _as_members(u)
    N = members[0].grid.n_modes
    acc = np.zeros(N + 1)
    for f in members:
        if f.grid.n_modes != N:
            raise ValueError("ensemble members have mismatched resolutions")
        mass = np.sum(np.abs(f.coeffs) ** 2, axis=0)
        acc += np.bincount(f.grid.kinf.ravel(), weights=0.5 * mass.ravel(), minlength=N + 1)
    return SpectrumTable(np.arange(N + 1), acc / len(members))


def c_max(table: StructureTable, alpha: float) -> float:
    """Best decay constant sup_r r^-alpha S2(r) over the radius grid."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    return float(np.max(table.s2 * table.r.values ** (-alpha)))


def d_max(spectrum: SpectrumTable, lam: float) -> float:
    """Best bound sup_{K>=1} K^lambda E(K) on the compensated spectrum."""
    if lam <= 0:
        raise ValueError("lambda must be positive")
    K = spectrum.K[1:]
    return float(np.max(K**lam * spectrum.e[1:]))


def richardson_extrapolate(points) -> float:
    """Limit value of a quantity sampled at three distinct resolutions.

    Fits value = E0 + c1*delta + c2*delta^2 through exactly three
    (delta, value) pairs and returns E0.
    """
    pts = list(points)
    if len(pts) != 3:
        raise ValueError("richardson_extrapolate needs exactly 3 points")
    deltas = np.array([p[0] for p in pts], dtype=float)
    values = np.array([p[1] for p in pts], dtype=float)
    if len(set(deltas)) != 3:
        raise ValueError("deltas must be distinct")
    V = np.vander(deltas, 3, increasing=True)  # columns 1, delta, delta^2
    coef = np.linalg.solve(V, values)
    return float(coef[0])


@dataclass(frozen=True)
class RelativeDissipationTable:
    times: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    mc_error: np.ndarray


def relative_energy_dissipation(times, member_energies, e0_ref: float) -> RelativeDissipationTable:
    """Per-time (E(t) - E0_ref)/E0_ref with ensemble mean and MC error.

    member_energies has shape (M, n_times); the MC error is the sample
    standard deviation over members divided by sqrt(M).
    """
    if e0_ref <= 0:
        raise ValueError("reference energy must be positive")
    e = np.atleast_2d(np.asarray(member_energies, dtype=float))
    rel = (e - e0_ref) / e0_ref
    m = e.shape[0]
    mean = rel.mean(axis=0)
    std = rel.std(axis=0, ddof=1) if m > 1 else np.zeros(rel.shape[1])
    return RelativeDissipationTable(
        times=np.asarray(times, dtype=float),
        mean=mean,
        std=std,
        mc_error=std / math.sqrt(m),
    )
