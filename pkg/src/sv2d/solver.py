"""Time integration of the spectral-viscosity scheme.

The semi-discrete system for the Fourier coefficients is

    d/dt u_hat(k) = advection(u)_hat(k) - eps_N (2 pi |k|)^2 Qhat(k) u_hat(k),

with eps_N = eps / N and the dissipation multiplier Qhat either the
spectral-viscosity choice (zero below the cutoff m_N = ceil(sqrt(N)),
1 - m_N/|k|^2 above it) or identically one (Navier-Stokes-like diffusion,
m_N = 0). Time stepping is explicit three-stage SSP-RK3 with a fixed step;
the running dissipation integral

    D(t) = 2 eps_N int_0^t sum_k Qhat(k) |omega_hat(k)|^2 ds

is accumulated with the same RK3 stage weights, so the discrete energy
balance energy(0) - energy(t) = D(t) holds to the integrator's own order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .spectral import (
    GridSpec,
    SpectralField,
    _advection_coeffs,
    _coeffs_to_physical,
    _curl_coeffs,
)

__all__ = [
    "SV",
    "NS_LIKE",
    "SolverConfig",
    "Trajectory",
    "SolverInstabilityError",
    "q_multiplier",
    "q_multiplier_grid",
    "sv_rhs",
    "stable_dt",
    "step",
    "run",
]

SV = "sv"
NS_LIKE = "ns-like"

# SSP-RK3 as an RK method: quadrature weights of its three stages
_RK3_WEIGHTS = (1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0)


class SolverInstabilityError(RuntimeError):
    """Raised when the energy grows beyond round-off in a single step."""


@dataclass(frozen=True)
class SolverConfig:
    """Parameters of one spectral-viscosity run.

    Parameters
    ----------
    n_modes : int
        Resolution N (maximal retained mode).
    eps : float
        Viscosity scale; the effective coefficient is eps_N = eps / N.
    multiplier_mode : str
        "sv" (cutoff m_N = ceil(sqrt(N))) or "ns-like" (m_N = 0, Q = I).
    t_final : float
        Integration horizon.
    cfl : float
        Safety factor in (0, 1] for the stable step size.
    snapshot_times : tuple of float
        Times at which full fields are recorded; must lie in [0, t_final]
        and be sorted.
    validate_every_step : bool
        Check the structural field invariants after every step (used by the
        acceptance runs; off by default for speed).
    """

    n_modes: int
    eps: float
    t_final: float
    multiplier_mode: str = SV
    cfl: float = 0.4
    snapshot_times: tuple = ()
    validate_every_step: bool = False

    def __post_init__(self):
        if self.n_modes < 1:
            raise ValueError("n_modes must be >= 1")
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.t_final <= 0:
            raise ValueError("t_final must be positive")
        if not 0 < self.cfl <= 1:
            raise ValueError("cfl must lie in (0, 1]")
        if self.multiplier_mode not in (SV, NS_LIKE):
            raise ValueError(f"unknown multiplier mode {self.multiplier_mode!r}")
        ts = tuple(float(t) for t in self.snapshot_times)
        if any(t < 0 or t > self.t_final for t in ts):
            raise ValueError("snapshot_times must lie in [0, t_final]")
        if list(ts) != sorted(ts):
            raise ValueError("snapshot_times must be sorted")
        object.__setattr__(self, "snapshot_times", ts)

    @property
    def eps_n(self) -> float:
        return self.eps / self.n_modes

    @property
    def m_n(self) -> int:
        if self.multiplier_mode == NS_LIKE:
            return 0
        return math.isqrt(self.n_modes - 1) + 1  # ceil(sqrt(N))


def q_multiplier(k, config: SolverConfig) -> float:
    """Dissipation multiplier Qhat(k) for a single mode k = (k1, k2) != 0."""
    k1, k2 = k
    ksq = k1 * k1 + k2 * k2
    if ksq == 0:
        raise ValueError("q_multiplier is defined for k != 0")
    if config.multiplier_mode == NS_LIKE:
        return 1.0
    m = config.m_n
    if ksq < m * m:
        return 0.0
    return 1.0 - m / ksq


def q_multiplier_grid(grid: GridSpec, config: SolverConfig) -> np.ndarray:
    """Qhat evaluated on the whole mode lattice (value at k = 0 set to 0)."""
    N = grid.n_modes
    if config.multiplier_mode == NS_LIKE:
        q = np.ones_like(grid.ksq)
    else:
        m = config.m_n
        q = np.where(grid.ksq >= m * m, 1.0 - m / np.where(grid.ksq == 0, 1.0, grid.ksq), 0.0)
    q[N, N] = 0.0
    return q


def _diffusion_factor(grid: GridSpec, config: SolverConfig) -> np.ndarray:
    """Per-mode decay rate eps_N (2 pi |k|)^2 Qhat(k)."""
    return config.eps_n * (2 * np.pi) ** 2 * grid.ksq * q_multiplier_grid(grid, config)


def sv_rhs(u: SpectralField, config: SolverConfig) -> SpectralField:
    """Full tendency: advection minus spectral-viscosity dissipation."""
    lam = _diffusion_factor(u.grid, config)
    c = _advection_coeffs(u.grid, u.coeffs) - lam * u.coeffs
    return SpectralField(u.grid, c)


def stable_dt(u: SpectralField, config: SolverConfig) -> float:
    """cfl * min(advective, diffusive) step-size bound.

    Advective: dx / max|u| with dx = 1/n_phys (dropped for u = 0).
    Diffusive: 1 / (2 eps_N (2 pi N)^2), the worst-case decay rate.
    """
    g = u.grid
    dt_diff = 1.0 / (2.0 * config.eps_n * (2 * np.pi * config.n_modes) ** 2)
    phys = np.stack([_coeffs_to_physical(g, c) for c in u.coeffs])
    umax = float(np.max(np.sqrt(np.sum(phys**2, axis=0))))
    if umax > 0:
        dt_adv = (1.0 / g.n_phys) / umax
        return config.cfl * min(dt_adv, dt_diff)
    return config.cfl * dt_diff


def _dissipation_rate(grid: GridSpec, c: np.ndarray, q: np.ndarray, eps_n: float) -> float:
    """2 eps_N ||sqrt(Q) omega||^2 evaluated on raw coefficients."""
    w = _curl_coeffs(grid, c)
    return 2.0 * eps_n * float(np.sum(q * np.abs(w) ** 2))


def _rk3_step(grid, c, dt, lam, q, eps_n):
    """One SSP-RK3 step; returns (new_coeffs, stage-weighted dissipation rate)."""
    rates = np.empty(3)

    def rhs(state):
        return _advection_coeffs(grid, state) - lam * state

    rates[0] = _dissipation_rate(grid, c, q, eps_n)
    s1 = c + dt * rhs(c)
    rates[1] = _dissipation_rate(grid, s1, q, eps_n)
    s2 = 0.75 * c + 0.25 * (s1 + dt * rhs(s1))
    rates[2] = _dissipation_rate(grid, s2, q, eps_n)
    out = (c + 2.0 * (s2 + dt * rhs(s2))) / 3.0
    return out, float(np.dot(_RK3_WEIGHTS, rates))


def step(u: SpectralField, dt: float, config: SolverConfig) -> SpectralField:
    """Advance one SSP-RK3 step of size dt (dt <= stable_dt assumed).

    Raises SolverInstabilityError if the energy grows by more than 1e-6
    relative within the step.
    """
    g = u.grid
    lam = _diffusion_factor(g, config)
    q = q_multiplier_grid(g, config)
    e_old = float(np.sum(np.abs(u.coeffs) ** 2))
    out, _ = _rk3_step(g, u.coeffs, dt, lam, q, config.eps_n)
    e_new = float(np.sum(np.abs(out) ** 2))
    # not-<= form so that non-finite energies also trip the guard
    if not e_new <= e_old * (1.0 + 1e-6):
        raise SolverInstabilityError(
            f"energy grew by {(e_new - e_old) / e_old:.3e} in one step"
        )
    return SpectralField(g, out)


@dataclass
class Trajectory:
    """One integrated sample path with its scalar bookkeeping.

    snapshots holds (time, field) pairs at the requested snapshot_times;
    times/energy/enstrophy/dissipation are sampled at every step, with
    dissipation the running integral D(t) = 2 eps_N int ||sqrt(Q) omega||^2.
    diss_rate is the per-step integrand series used for the CSV output.
    """

    config: SolverConfig
    dt: float
    times: np.ndarray
    energy: np.ndarray
    enstrophy: np.ndarray
    dissipation: np.ndarray
    diss_rate: np.ndarray
    snapshots: list = field(default_factory=list)
    invariant_violations: int = 0

    def snapshot_at(self, t: float) -> SpectralField:
        for ts, f in self.snapshots:
            if abs(ts - t) <= 1e-9 * max(1.0, abs(t)):
                return f
        raise KeyError(f"no snapshot at t = {t}")

    def energy_monotone(self, tol: float = 1e-12) -> bool:
        e = self.energy
        return bool(np.all(e[1:] <= e[:-1] * (1.0 + tol)))


def run(initial: SpectralField, config: SolverConfig, dt: float | None = None) -> Trajectory:
    """Integrate the scheme from `initial` to t_final.

    The step size is fixed (computed from the initial state unless given),
    shortened only to land exactly on snapshot times and on t_final.
    """
    if initial.grid.n_modes != config.n_modes:
        raise ValueError(
            f"field resolution {initial.grid.n_modes} does not match "
            f"config n_modes {config.n_modes}"
        )
    g = initial.grid
    if dt is None:
        dt = stable_dt(initial, config)
    if dt <= 0:
        raise ValueError("dt must be positive")

    lam = _diffusion_factor(g, config)
    q = q_multiplier_grid(g, config)
    eps_n = config.eps_n

    c = np.array(initial.coeffs)
    t = 0.0
    tiny = 1e-12 * config.t_final
    targets = [ts for ts in config.snapshot_times]
    violations = 0

    def enstrophy_of(state):
        w = _curl_coeffs(g, state)
        return float(np.sum(np.abs(w) ** 2))

    times = [0.0]
    energy = [float(np.sum(np.abs(c) ** 2))]
    enstrophy = [enstrophy_of(c)]
    dissipation = [0.0]
    diss_rate = [_dissipation_rate(g, c, q, eps_n)]
    snapshots = []
    if targets and abs(targets[0]) <= tiny:
        snapshots.append((0.0, SpectralField(g, c.copy())))
        targets.pop(0)

    d_total = 0.0
    while t < config.t_final - tiny:
        dt_step = min(dt, config.t_final - t)
        if targets and targets[0] - t < dt_step - tiny:
            dt_step = targets[0] - t
        c_new, rate = _rk3_step(g, c, dt_step, lam, q, eps_n)
        e_old, e_new = energy[-1], float(np.sum(np.abs(c_new) ** 2))
        if e_new > e_old * (1.0 + 1e-6):
            raise SolverInstabilityError(
                f"energy grew by {(e_new - e_old) / max(e_old, 1e-300):.3e} "
                f"at t = {t + dt_step:.6g}"
            )
        c = c_new
        t += dt_step
        d_total += dt_step * rate
        times.append(t)
        energy.append(e_new)
        enstrophy.append(enstrophy_of(c))
        dissipation.append(d_total)
        diss_rate.append(_dissipation_rate(g, c, q, eps_n))
        if config.validate_every_step:
            f = SpectralField(g, c)
            if (
                f.reality_defect() > 1e-12
                or f.mean_defect() > 1e-12
                or f.divergence_defect() > 1e-12
                or e_new > e_old * (1.0 + 1e-12)
            ):
                violations += 1
        if targets and abs(t - targets[0]) <= tiny:
            snapshots.append((targets[0], SpectralField(g, c.copy())))
            targets.pop(0)

    return Trajectory(
        config=config,
        dt=dt,
        times=np.array(times),
        energy=np.array(energy),
        enstrophy=np.array(enstrophy),
        dissipation=np.array(dissipation),
        diss_rate=np.array(diss_rate),
        snapshots=snapshots,
        invariant_violations=violations,
    )
