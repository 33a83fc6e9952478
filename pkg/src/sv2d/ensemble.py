"""Monte-Carlo realization of statistical solutions.

M i.i.d. initial samples are drawn from the chosen initial measure (member
i uses seed master_seed XOR i), evolved independently through the
spectral-viscosity scheme with one shared step size (the minimum stable
step over the ensemble, so all members stay time-aligned), and aggregated
as an equal-weight empirical measure. A diverging member is reported and
excluded; the remaining members still produce a (flagged) partial result.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .initial_data import (
    FbmSpec,
    PerturbationSpec,
    fbm_field,
    random_vertical_shift,
    sinusoidal_vortex_sheet,
    unsigned_vortex_sheet,
)
from .solver import SolverConfig, Trajectory, run, stable_dt
from .spectral import SpectralField

__all__ = [
    "PRESETS",
    "InitialSpec",
    "EnsembleConfig",
    "EnsembleStats",
    "EnsembleResult",
    "make_initial",
    "sample_initials",
    "evolve_ensemble",
    "aggregate",
    "energy_matrix",
    "fields_at",
]

PRESETS = ("det-sinusoidal", "perturbed-sinusoidal", "unsigned-sheet", "fbm")


@dataclass(frozen=True)
class InitialSpec:
    """Initial measure: preset name plus its parameters (unused ones ignored)."""

    preset: str
    rho: float = 10.0          # sheet mollification constant (rho_N = rho/N)
    q: int = 10                # perturbation modes
    alpha: float = 1.0 / 320.0  # perturbation amplitude bound
    hurst: float = 0.5         # fBm regularity
    strength_freq: int = 10    # unsigned-sheet strength frequency K

    def __post_init__(self):
        if self.preset not in PRESETS:
            raise ValueError(f"unknown preset {self.preset!r}; expected one of {PRESETS}")


@dataclass(frozen=True)
class EnsembleConfig:
    n_samples: int
    solver: SolverConfig
    initial: InitialSpec
    master_seed: int = 0

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")


@dataclass(frozen=True)
class EnsembleStats:
    """Sample mean, standard deviation (M-1 denominator) and MC error std/sqrt(M)."""

    mean: float
    std: float
    mc_error: float


@lru_cache(maxsize=8)
def _cached_sheet(n_modes: int, rho: float) -> SpectralField:
    return sinusoidal_vortex_sheet(n_modes, rho)


@lru_cache(maxsize=8)
def _cached_unsigned(n_modes: int, rho: float, strength_freq: int) -> SpectralField:
    return unsigned_vortex_sheet(n_modes, rho, strength_freq)


def make_initial(spec: InitialSpec, n_modes: int, seed: int) -> SpectralField:
    """One draw from the initial measure (deterministic given seed)."""
    if spec.preset == "det-sinusoidal":
        return _cached_sheet(n_modes, spec.rho)
    if spec.preset == "perturbed-sinusoidal":
        base = _cached_sheet(n_modes, spec.rho)
        return random_vertical_shift(base, PerturbationSpec(spec.q, spec.alpha, seed))
    if spec.preset == "unsigned-sheet":
        base = _cached_unsigned(n_modes, spec.rho, spec.strength_freq)
        return random_vertical_shift(base, PerturbationSpec(spec.q, spec.alpha, seed))
    if spec.preset == "fbm":
        return fbm_field(FbmSpec(spec.hurst, n_modes, seed))
    raise ValueError(f"unknown preset {spec.preset!r}")


def sample_initials(cfg: EnsembleConfig) -> list[SpectralField]:
    """M i.i.d. samples; member i is generated with seed master_seed XOR i."""
    return [
        make_initial(cfg.initial, cfg.solver.n_modes, cfg.master_seed ^ i)
        for i in range(cfg.n_samples)
    ]


@dataclass
class EnsembleResult:
    config: EnsembleConfig
    dt: float
    trajectories: list  # Trajectory or None per member
    failures: dict = field(default_factory=dict)  # member index -> message

    @property
    def completed(self) -> list[Trajectory]:
        return [t for t in self.trajectories if t is not None]

    @property
    def n_completed(self) -> int:
        return len(self.completed)

    @property
    def partial(self) -> bool:
        return bool(self.failures)


def _evolve_one(args):
    coeffs, grid, solver_cfg, dt = args
    try:
        return run(SpectralField(grid, coeffs), solver_cfg, dt=dt), None
    except Exception as exc:  # aborts this member only
        return None, f"{type(exc).__name__}: {exc}"


def evolve_ensemble(cfg: EnsembleConfig, workers: int = 1, initials=None) -> EnsembleResult:
    """Evolve all members with a shared fixed step size.

    Members are independent units of work; with workers > 1 they are
    dispatched to a process pool. Results are collected in member order, so
    aggregates are byte-reproducible regardless of scheduling.
    """
    if initials is None:
        initials = sample_initials(cfg)
    if len(initials) != cfg.n_samples:
        raise ValueError("number of initial fields does not match n_samples")
    dt = min(stable_dt(u, cfg.solver) for u in initials)

    jobs = [(u.coeffs, u.grid, cfg.solver, dt) for u in initials]
    if workers > 1 and cfg.n_samples > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_evolve_one, jobs))
    else:
        outcomes = [_evolve_one(j) for j in jobs]

    trajectories = [t for t, _ in outcomes]
    failures = {i: msg for i, (_, msg) in enumerate(outcomes) if msg is not None}
    return EnsembleResult(cfg, dt, trajectories, failures)


def aggregate(values) -> EnsembleStats:
    """Mean, sample std (M-1 denominator; zero for M = 1), and std/sqrt(M)."""
    v = np.asarray(list(values), dtype=float)
    if v.size == 0:
        raise ValueError("cannot aggregate an empty list")
    mean = float(v.mean())
    std = float(v.std(ddof=1)) if v.size > 1 else 0.0
    return EnsembleStats(mean, std, std / math.sqrt(v.size))


def energy_matrix(result: EnsembleResult) -> tuple[np.ndarray, np.ndarray]:
    """(times, energies) with energies shaped (members_completed, n_times).

    All members share the same step schedule, so their time axes agree.
    """
    trajs = result.completed
    if not trajs:
        raise ValueError("no completed members")
    times = trajs[0].times
    for t in trajs[1:]:
        if t.times.shape != times.shape or not np.array_equal(t.times, times):
            raise ValueError("members have mismatched time axes")
    return times, np.stack([t.energy for t in trajs])


def fields_at(result: EnsembleResult, t: float) -> list[SpectralField]:
    """Member snapshot fields at a requested snapshot time."""
    return [traj.snapshot_at(t) for traj in result.completed]
