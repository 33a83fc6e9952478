"""Initial-condition generators: vortex sheets, random perturbations, fBm fields.

Vortex sheets are measures concentrated on a curve; their Fourier
coefficients are 1D oscillatory integrals over the curve parameter,
evaluated by FFT-accelerated trapezoid quadrature (spectrally accurate for
the smooth periodic integrands involved). Mollification is applied as a
spectral multiplier, the transform of a tensor cubic B-spline.

All randomness goes through the counter-based Philox generator; sample i of
an ensemble uses key (seed XOR i), so ensembles are reproducible and
order-independent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.fft import fft, ifft, next_fast_len

from .spectral import GridSpec, SpectralField, leray_project, velocity_from_vorticity

__all__ = [
    "QuadratureError",
    "PerturbationSpec",
    "FbmSpec",
    "make_rng",
    "bspline_mollifier_hat",
    "sheet_mollifier_scale",
    "sinusoidal_vortex_sheet",
    "unsigned_vortex_sheet",
    "shift_columns",
    "random_vertical_shift",
    "fbm_field",
]

SHEET_AMPLITUDE = 0.2  # the curve is x2 = 0.2 sin(2 pi W x1)


class QuadratureError(RuntimeError):
    """Oscillatory line integral did not converge at the chosen node count."""


def make_rng(seed: int, index: int = 0) -> np.random.Generator:
    """Philox generator keyed by seed XOR index (64-bit, counter-based)."""
    return np.random.Generator(np.random.Philox(key=np.uint64(seed) ^ np.uint64(index)))


@dataclass(frozen=True)
class PerturbationSpec:
    """Random vertical shift sigma(x1) = sum_{j<=q} a_j sin(2 pi j x1 - b_j),
    a_j ~ U[0, alpha], b_j ~ U[0, 2 pi]."""

    q: int = 10
    alpha: float = 1.0 / 320.0
    seed: int = 0

    def __post_init__(self):
        if self.q < 1:
            raise ValueError("q must be >= 1")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")


@dataclass(frozen=True)
class FbmSpec:
    """Fractional-Brownian-motion velocity field with Hurst index H in (0,1)."""

    hurst: float
    n_modes: int
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.hurst < 1:
            raise ValueError("hurst must lie in (0, 1)")
        if self.n_modes < 1:
            raise ValueError("n_modes must be >= 1")


# -- mollifier ----------------------------------------------------------------

def bspline_mollifier_hat(k1, k2, rho: float):
    """Fourier transform of the tensor cubic B-spline mollifier at scale rho.

    psi_hat_rho(k) = sinc(pi k1 rho)^4 * sinc(pi k2 rho)^4 with
    sinc(x) = sin(x)/x; equals 1 at k = 0 (unit mass) and lies in (0, 1].
    """
    if rho <= 0:
        raise ValueError("rho must be positive")

    def s4(x):
        x = np.asarray(x, dtype=float)
        out = np.ones_like(x)
        nz = x != 0
        out[nz] = (np.sin(x[nz]) / x[nz]) ** 4
        return out

    return s4(np.pi * np.asarray(k1) * rho) * s4(np.pi * np.asarray(k2) * rho)


def sheet_mollifier_scale(n_modes: int, rho: float) -> float:
    """Spectral scale used when smoothing sheet vorticity at parameter rho.

    The smoothing length rho/N is interpreted on the 2*pi-scaled torus of
    the e^{ik.x} wavenumber convention and the B-spline is taken with unit
    support, so the multiplier is sinc(k rho / (8N))^4 per axis. This keeps
    the smoothing at the grid scale: the sheet's r^(1/2) structure-function
    range then extends down to a few grid cells.
    """
    return rho / (8.0 * np.pi * n_modes)


# -- vortex sheets ------------------------------------------------------------

def _sheet_integrals(N: int, wavenumber: int, strength, nodes: int | None = None) -> np.ndarray:
    """omega_hat before mollification: the (2N+1, 2N+1) array of

        I(k1, k2) = int_0^1 s(x) exp(-2 pi i (k1 x + k2 * 0.2 sin(2 pi W x))) dx

    with W = wavenumber and s given on the quadrature nodes by `strength`.
    Equispaced trapezoid nodes (16N by default); for each k2 the whole k1
    line is one FFT. Raises QuadratureError when the integrand still has
    content near the quadrature Nyquist (unresolved oscillation).
    """
    P = 16 * N if nodes is None else int(nodes)
    x = np.arange(P) / P
    k = np.arange(-N, N + 1)
    s = strength(x)
    # rows: one smooth periodic integrand per k2
    g = s[None, :] * np.exp(
        -2j * np.pi * np.outer(k, SHEET_AMPLITUDE * np.sin(2 * np.pi * wavenumber * x))
    )
    c = fft(g, axis=1) / P
    # alias guard: content near the quadrature Nyquist must be negligible
    band = np.abs(c[:, 3 * P // 8 : P // 2 + 1])
    tail = float(band.max()) if band.size else 0.0
    if tail > 1e-9 * max(1.0, float(np.abs(c).max())):
        raise QuadratureError(
            f"line-integral quadrature with {P} nodes has unresolved tail {tail:.3e}"
        )
    return c[:, k % P].T  # index [k1, k2]


_MAX_SHEET_NODES = 1 << 21


def _sheet_velocity(N: int, rho: float, wavenumber: int, strength) -> SpectralField:
    if N < 8:
        raise ValueError("sheet construction requires N >= 8")
    grid = GridSpec(N)
    # strength frequencies W > 1 widen the integrand bandwidth; double the
    # node count until the alias guard is satisfied
    nodes = 16 * N
    while True:
        try:
            w = _sheet_integrals(N, wavenumber, strength, nodes=nodes)
            break
        except QuadratureError:
            nodes *= 2
            if nodes > _MAX_SHEET_NODES:
                raise
    w *= bspline_mollifier_hat(grid.k1, grid.k2, sheet_mollifier_scale(N, rho))
    w[N, N] = 0.0  # mean correction: total circulation zero
    omega = SpectralField(grid, 0.5 * (w + np.conj(w[::-1, ::-1]))[None])
    return velocity_from_vorticity(omega)


def sinusoidal_vortex_sheet(N: int, rho: float = 10.0) -> SpectralField:
    """Velocity induced by vorticity distributed uniformly (in the x1
    parameter) along the graph x2 = 0.2 sin(2 pi x1), mollified at scale
    rho/N and mean-corrected."""
    return _sheet_velocity(N, rho, 1, lambda x: np.ones_like(x))


def unsigned_vortex_sheet(N: int, rho: float = 5.0, strength_freq: int = 10) -> SpectralField:
    """Vortex sheet without distinguished sign: strength sin(2 pi K x1) along
    the curve x2 = 0.2 sin(2 pi K x1), K = strength_freq."""
    if strength_freq < 1:
        raise ValueError("strength_freq must be >= 1")
    K = strength_freq
    return _sheet_velocity(N, rho, K, lambda x: np.sin(2 * np.pi * K * x))


# -- random vertical perturbation ---------------------------------------------

def shift_columns(u: SpectralField, sigma) -> SpectralField:
    """Replace u(x1, x2) by u(x1, x2 + sigma(x1)), then Leray-project and
    truncate back to |k|_inf <= N.

    The shift is exact in the mixed (x1, k2) representation: each column
    picks up the phase factor exp(2 pi i k2 sigma(x1)). sigma is a callable
    of the column coordinate x1 in [0, 1).
    """
    g = u.grid
    N = g.n_modes
    M = g.n_coeff
    P = next_fast_len(8 * N)
    x = np.arange(P) / P
    phase = np.exp(2j * np.pi * np.outer(sigma(x), g.k))  # (P, 2N+1) in k2

    rows = g.k % P
    out = np.empty_like(u.coeffs)
    for c in range(u.components):
        buf = np.zeros((P, M), dtype=np.complex128)
        buf[rows] = u.coeffs[c]
        mixed = ifft(buf, axis=0) * P          # [x1, k2]
        mixed *= phase
        back = fft(mixed, axis=0) / P
        out[c] = back[rows]
    out = 0.5 * (out + np.conj(out[:, ::-1, ::-1]))  # round-off symmetry cleanup
    return leray_project(SpectralField(g, out))


def random_vertical_shift(u: SpectralField, spec: PerturbationSpec) -> SpectralField:
    """Shift u vertically by the random column function sigma_alpha(x1).

    Deterministic given (u, spec): equal seeds give bit-identical output.
    """
    rng = make_rng(spec.seed)
    amp = rng.uniform(0.0, spec.alpha, size=spec.q)
    phs = rng.uniform(0.0, 2 * np.pi, size=spec.q)
    j = np.arange(1, spec.q + 1)

    def sigma(x):
        return np.sin(2 * np.pi * np.outer(x, j) - phs) @ amp

    return shift_columns(u, sigma)


# -- fractional Brownian fields -----------------------------------------------

def _fbm_scalar_coeffs(grid: GridSpec, hurst: float, rng: np.random.Generator) -> np.ndarray:
    """Coefficients of one scalar draw

        W(x) = sum_{|k|_inf <= N, k != 0} |k|^-(H+1) {a_cc cc_k + a_cs cs_k
                                                      + a_sc sc_k + a_ss ss_k}

    with the cos/sin tensor basis over the quadrant k1, k2 >= 0 and
    coefficients i.i.d. uniform on (-1, 1).
    """
    N = grid.n_modes
    q = np.hypot(*np.meshgrid(np.arange(N + 1), np.arange(N + 1), indexing="ij"))
    env = np.zeros_like(q)
    env[q > 0] = q[q > 0] ** (-(hurst + 1.0))
    a = rng.uniform(-1.0, 1.0, size=(4, N + 1, N + 1)) * env  # cc, cs, sc, ss

    p1 = np.abs(grid.k1).astype(int)
    p2 = np.abs(grid.k2).astype(int)
    s1 = np.sign(grid.k1)
    s2 = np.sign(grid.k2)
    # x-factor coefficient at k1 = s1*p1: cos -> 1/2 (1 at p=0), sin -> -s1*i/2 (0 at p=0)
    cx = np.where(p1 == 0, 1.0, 0.5).astype(complex)
    sx = np.where(p1 == 0, 0.0, -0.5j * s1)
    cy = np.where(p2 == 0, 1.0, 0.5).astype(complex)
    sy = np.where(p2 == 0, 0.0, -0.5j * s2)

    acc, acs, asc, ass = (a[i][p1, p2] for i in range(4))
    return acc * cx * cy + acs * cx * sy + asc * sx * cy + ass * sx * sy


def fbm_field(spec: FbmSpec) -> SpectralField:
    """Divergence-free velocity from two i.i.d. scalar fBm draws.

    The ensemble-averaged spectrum scales as E(K) ~ K^-(2H+1).
    """
    grid = GridSpec(spec.n_modes)
    rng = make_rng(spec.seed)
    w1 = _fbm_scalar_coeffs(grid, spec.hurst, rng)
    w2 = _fbm_scalar_coeffs(grid, spec.hurst, rng)
    return leray_project(SpectralField(grid, np.stack([w1, w2])))
