"""Fourier-space representation of periodic fields on the unit torus.

Fields live on [0,1]^2 with the convention

    u(x) = sum_{|k|_inf <= N} u_hat(k) exp(2*pi*i k.x),

so every derivative carries a factor 2*pi*i*k. Coefficients are stored
densely over the full square lattice k in [-N, N]^2; the conjugate
(reality) symmetry u_hat(-k) = conj(u_hat(k)) is an invariant, not a
storage optimization. Nonlinear products are evaluated alias-free on a
padded physical grid with n_phys > 3*n_modes points per dimension.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import yaml
from scipy.fft import irfft2, next_fast_len, rfft2

__all__ = [
    "GridSpec",
    "SpectralField",
    "zero_field",
    "to_physical",
    "from_physical",
    "leray_project",
    "velocity_from_vorticity",
    "vorticity_from_velocity",
    "nonlinear_term",
    "quadratic_norms",
    "inner_product",
    "field_norm",
    "write_field_snapshot",
    "read_field_snapshot",
]

SNAPSHOT_FORMAT = "sv2d-field-v1"


def padded_size(n_modes: int) -> int:
    """Physical grid size fully dealiasing quadratic products of band-N fields.

    3*N points leave the |k|_inf = N frame contaminated by the +-2N product
    corners, so the minimum is 3*N + 1 (rounded up to an FFT-friendly length).
    """
    return next_fast_len(3 * n_modes + 1)


@dataclass(frozen=True)
class GridSpec:
    """Truncated mode lattice |k|_inf <= n_modes plus its padded physical grid.

    Parameters
    ----------
    n_modes : int
        Maximal retained mode N; coefficients are indexed by k in [-N, N]^2.
    n_phys : int, optional
        Points per dimension of the padded physical grid. Defaults to the
        smallest FFT-friendly size > 3*n_modes; must be >= 3*n_modes.
    """

    n_modes: int
    n_phys: int = 0
    domain_period: float = 1.0

    def __post_init__(self):
        if self.n_modes < 1:
            raise ValueError(f"n_modes must be >= 1, got {self.n_modes}")
        if self.n_phys == 0:
            object.__setattr__(self, "n_phys", padded_size(self.n_modes))
        if self.n_phys < 3 * self.n_modes:
            raise ValueError(
                f"n_phys = {self.n_phys} violates the dealiasing padding "
                f"requirement n_phys >= 3*n_modes = {3 * self.n_modes}"
            )
        if self.domain_period != 1.0:
            raise ValueError("only the unit torus is supported")
        N, P = self.n_modes, self.n_phys
        k = np.arange(-N, N + 1)
        k1, k2 = np.meshgrid(k, k, indexing="ij")
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "k1", k1.astype(float))
        object.__setattr__(self, "k2", k2.astype(float))
        object.__setattr__(self, "ksq", (k1**2 + k2**2).astype(float))
        object.__setattr__(self, "kinf", np.maximum(np.abs(k1), np.abs(k2)))
        # row maps into the length-P FFT layout for +k and -k
        object.__setattr__(self, "_rows", k % P)
        object.__setattr__(self, "_rows_neg", (-k) % P)

    @property
    def n_coeff(self) -> int:
        return 2 * self.n_modes + 1


@dataclass(frozen=True)
class SpectralField:
    """Complex Fourier coefficients of a scalar (1) or vector (2) field.

    coeffs has shape (components, 2N+1, 2N+1); index [c, i, j] holds the
    coefficient of mode k = (i - N, j - N). Instances are immutable; the
    coefficient array is write-protected on construction.
    """

    grid: GridSpec
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.ascontiguousarray(self.coeffs, dtype=np.complex128)
        M = self.grid.n_coeff
        if c.ndim != 3 or c.shape[1:] != (M, M) or c.shape[0] not in (1, 2):
            raise ValueError(
                f"coeffs must have shape (1|2, {M}, {M}), got {c.shape}"
            )
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def components(self) -> int:
        return self.coeffs.shape[0]

    @property
    def n_modes(self) -> int:
        return self.grid.n_modes

    def reality_defect(self) -> float:
        """Max |coeffs(-k) - conj(coeffs(k))|, normalized by the field norm."""
        mirrored = np.conj(self.coeffs[:, ::-1, ::-1])
        scale = field_norm(self)
        defect = float(np.max(np.abs(self.coeffs - mirrored)))
        return defect / scale if scale > 0 else defect

    def mean_defect(self) -> float:
        N = self.grid.n_modes
        scale = field_norm(self)
        defect = float(np.max(np.abs(self.coeffs[:, N, N])))
        return defect / scale if scale > 0 else defect

    def divergence_defect(self) -> float:
        """Max_k |k . u_hat(k)|, normalized by the field norm; vector only."""
        if self.components != 2:
            raise ValueError("divergence is defined for vector fields")
        g = self.grid
        dots = g.k1 * self.coeffs[0] + g.k2 * self.coeffs[1]
        scale = field_norm(self)
        defect = float(np.max(np.abs(dots)))
        return defect / scale if scale > 0 else defect

    def validate(self, tol: float = 1e-12, divergence_free: bool = False) -> None:
        """Raise if a structural invariant is violated beyond tol (relative)."""
        if self.reality_defect() > tol:
            raise ValueError(f"reality symmetry violated: {self.reality_defect():.3e}")
        if self.mean_defect() > tol:
            raise ValueError(f"mean mode not zero: {self.mean_defect():.3e}")
        if divergence_free and self.divergence_defect() > tol:
            raise ValueError(f"divergence-free violated: {self.divergence_defect():.3e}")


def zero_field(grid: GridSpec, components: int = 2) -> SpectralField:
    M = grid.n_coeff
    return SpectralField(grid, np.zeros((components, M, M), dtype=np.complex128))


def field_norm(f: SpectralField) -> float:
    """L2 norm: sqrt(sum_k |u_hat(k)|^2) over all components."""
    return float(np.sqrt(np.sum(np.abs(f.coeffs) ** 2)))


def inner_product(f: SpectralField, g: SpectralField) -> complex:
    """Mode-wise inner product sum_k conj(f_hat).g_hat (= L2 inner product)."""
    return complex(np.sum(np.conj(f.coeffs) * g.coeffs))


# -- transforms --------------------------------------------------------------

def _coeffs_to_physical(grid: GridSpec, comp: np.ndarray) -> np.ndarray:
    """One component (2N+1, 2N+1) -> real physical values (P, P)."""
    N, P = grid.n_modes, grid.n_phys
    half = np.zeros((P, P // 2 + 1), dtype=np.complex128)
    half[np.ix_(grid._rows, np.arange(N + 1))] = comp[:, N:]
    return irfft2(half, s=(P, P)) * (P * P)


def _physical_to_coeffs(grid: GridSpec, values: np.ndarray) -> np.ndarray:
    """Real physical values (P, P) -> truncated coefficients (2N+1, 2N+1).

    The k2 < 0 half is reconstructed by conjugate symmetry, so the reality
    invariant holds exactly on the output.
    """
    N, P = grid.n_modes, grid.n_phys
    H = rfft2(values) / (P * P)
    M = grid.n_coeff
    out = np.empty((M, M), dtype=np.complex128)
    out[:, N:] = H[np.ix_(grid._rows, np.arange(N + 1))]
    out[:, :N] = np.conj(H[np.ix_(grid._rows_neg, np.arange(N, 0, -1))])
    # enforce exact symmetry on the self-conjugate k2 = 0 column
    col = out[:, N]
    out[:, N] = 0.5 * (col + np.conj(col[::-1]))
    return out


def to_physical(f: SpectralField) -> np.ndarray:
    """Evaluate the field on the padded physical grid; shape (C, P, P)."""
    return np.stack([_coeffs_to_physical(f.grid, c) for c in f.coeffs])


def from_physical(grid: GridSpec, values: np.ndarray) -> SpectralField:
    """Project physical values (C, P, P) onto the retained mode lattice."""
    values = np.asarray(values, dtype=float)
    if values.ndim == 2:
        values = values[None]
    return SpectralField(grid, np.stack([_physical_to_coeffs(grid, v) for v in values]))


# -- differential / projection operators -------------------------------------

def _leray_coeffs(grid: GridSpec, c: np.ndarray) -> np.ndarray:
    N = grid.n_modes
    ksq = grid.ksq.copy()
    ksq[N, N] = 1.0  # k = 0 handled by explicit zeroing below
    s = (grid.k1 * c[0] + grid.k2 * c[1]) / ksq
    out = np.stack([c[0] - grid.k1 * s, c[1] - grid.k2 * s])
    out[:, N, N] = 0.0
    return out


def leray_project(f: SpectralField) -> SpectralField:
    """Orthogonal projection onto divergence-free fields, (I - k k^T/|k|^2).

    The k = 0 mode is set to zero (mean-free flows). Idempotent and
    self-adjoint with respect to the mode-wise inner product.
    """
    if f.components != 2:
        raise ValueError("Leray projection acts on vector fields")
    return SpectralField(f.grid, _leray_coeffs(f.grid, f.coeffs))


def _curl_coeffs(grid: GridSpec, c: np.ndarray) -> np.ndarray:
    return 2j * np.pi * (grid.k1 * c[1] - grid.k2 * c[0])


def vorticity_from_velocity(u: SpectralField) -> SpectralField:
    """curl(u): omega_hat(k) = 2*pi*i*(k1 u2_hat - k2 u1_hat)."""
    if u.components != 2:
        raise ValueError("curl acts on vector fields")
    return SpectralField(u.grid, _curl_coeffs(u.grid, u.coeffs)[None])


def velocity_from_vorticity(omega: SpectralField) -> SpectralField:
    """Biot-Savart inversion: the divergence-free u with curl(u) = omega.

    u_hat(k) = i*(k2, -k1)/(2*pi*|k|^2) * omega_hat(k); the mean mode must
    vanish for the inversion to exist.
    """
    if omega.components != 1:
        raise ValueError("Biot-Savart inversion acts on scalar vorticity")
    g = omega.grid
    N = g.n_modes
    w = omega.coeffs[0]
    scale = field_norm(omega)
    if abs(w[N, N]) > 1e-13 * max(scale, 1e-300):
        raise ValueError("vorticity field has a nonzero mean mode")
    ksq = g.ksq.copy()
    ksq[N, N] = 1.0
    u1 = 1j * g.k2 / (2 * np.pi * ksq) * w
    u2 = -1j * g.k1 / (2 * np.pi * ksq) * w
    u1[N, N] = 0.0
    u2[N, N] = 0.0
    return SpectralField(g, np.stack([u1, u2]))


def _advection_coeffs(grid: GridSpec, c: np.ndarray) -> np.ndarray:
    """Raw-array form of nonlinear_term, used in the time-stepping hot loop."""
    w = _curl_coeffs(grid, c)
    u1p = _coeffs_to_physical(grid, c[0])
    u2p = _coeffs_to_physical(grid, c[1])
    wp = _coeffs_to_physical(grid, w)
    f = np.stack([
        _physical_to_coeffs(grid, -wp * u2p),
        _physical_to_coeffs(grid, wp * u1p),
    ])
    return -_leray_coeffs(grid, f)


def nonlinear_term(u: SpectralField) -> SpectralField:
    """Advection tendency -P(P_N(u . grad u)) for divergence-free u.

    Evaluated in rotational form: P(u . grad u) = P(omega * u_perp) with
    u_perp = (-u2, u1), since the gradient part is annihilated by the Leray
    projection. The product is computed alias-free on the padded grid.
    """
    if u.components != 2:
        raise ValueError("advection acts on vector fields")
    return SpectralField(u.grid, _advection_coeffs(u.grid, u.coeffs))


def quadratic_norms(f: SpectralField) -> tuple[float, float]:
    """(energy, enstrophy) = (sum |u_hat|^2, sum |omega_hat|^2) by Parseval."""
    if f.components != 2:
        raise ValueError("quadratic_norms expects a velocity field")
    energy = float(np.sum(np.abs(f.coeffs) ** 2))
    w = _curl_coeffs(f.grid, f.coeffs)
    enstrophy = float(np.sum(np.abs(w) ** 2))
    return energy, enstrophy


# -- snapshot format ----------------------------------------------------------

def write_field_snapshot(f: SpectralField, path, time: float, config_hash: str = "") -> None:
    """Write coefficients as flat little-endian float64 (re, im interleaved).

    Layout: component-major, then row-major over k1 in [-N, N], k2 in [-N, N].
    A sidecar `<path>.meta` YAML file records N, components, time and the
    config hash.
    """
    path = str(path)
    c = f.coeffs
    flat = np.empty(c.size * 2, dtype="<f8")
    flat[0::2] = c.real.ravel()
    flat[1::2] = c.imag.ravel()
    flat.tofile(path)
    meta = {
        "format": SNAPSHOT_FORMAT,
        "n_modes": int(f.grid.n_modes),
        "components": int(f.components),
        "time": float(time),
        "config_hash": config_hash,
    }
    with open(path + ".meta", "w", encoding="utf-8") as fh:
        yaml.safe_dump(meta, fh, sort_keys=True)


def read_field_snapshot(path) -> tuple[SpectralField, dict]:
    """Read a field written by write_field_snapshot; returns (field, meta)."""
    path = str(path)
    with open(path + ".meta", "r", encoding="utf-8") as fh:
        meta = yaml.safe_load(fh)
    if meta.get("format") != SNAPSHOT_FORMAT:
        raise ValueError(f"unrecognized snapshot format in {path}.meta")
    N = int(meta["n_modes"])
    comp = int(meta["components"])
    M = 2 * N + 1
    flat = np.fromfile(path, dtype="<f8")
    if flat.size != comp * M * M * 2:
        raise ValueError(
            f"snapshot size mismatch: expected {comp * M * M * 2} floats, got {flat.size}"
        )
    coeffs = (flat[0::2] + 1j * flat[1::2]).reshape(comp, M, M)
    return SpectralField(GridSpec(N), coeffs), meta
