"""Experiment configuration: presets, validation, canonical serialization.

Config files are YAML with a fixed nested schema; unknown keys are
rejected and invariant violations are reported all at once. A canonical
dump (sorted keys, plain scalars) defines the config hash that links every
output artifact back to its inputs.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np
import yaml

from .ensemble import PRESETS, EnsembleConfig, InitialSpec
from .solver import NS_LIKE, SV, SolverConfig

__all__ = [
    "ConfigError",
    "DiagnosticsSpec",
    "ExperimentConfig",
    "preset_defaults",
    "load_config",
    "config_to_dict",
    "canonical_yaml",
    "config_hash",
]


class ConfigError(ValueError):
    """Invalid experiment configuration; message lists every violation."""


@dataclass(frozen=True)
class DiagnosticsSpec:
    alpha: float = 0.5   # structure-function decay exponent
    lam: float = 2.0     # spectrum compensation exponent
    n_r: int = 50        # radii in the default log grid [1/(4N), 1/2]


@dataclass(frozen=True)
class ExperimentConfig:
    ensemble: EnsembleConfig
    diagnostics: DiagnosticsSpec
    output_dir: str = "out"
    max_failure_fraction: float = 0.0

    @property
    def preset(self) -> str:
        return self.ensemble.initial.preset

    @property
    def n_modes(self) -> int:
        return self.ensemble.solver.n_modes


# paper defaults per experiment family; n_modes defaults to the smallest
# resolution used in the corresponding experiments
_PRESET_DEFAULTS = {
    "det-sinusoidal": dict(
        n_modes=128, eps=0.01, multiplier=NS_LIKE, t_final=1.0, rho=10.0,
        alpha=0.5, lam=2.0, samples="one",
    ),
    "perturbed-sinusoidal": dict(
        n_modes=128, eps=0.01, multiplier=SV, t_final=1.0, rho=5.0,
        q=10, alpha_perturb=1.0 / 320.0, alpha=0.5, lam=2.0, samples="n",
    ),
    "unsigned-sheet": dict(
        n_modes=128, eps=0.05, multiplier=SV, t_final=2.0, rho=5.0,
        q=10, alpha_perturb=0.025, strength_freq=10, alpha=0.5, lam=2.0, samples="n",
    ),
    "fbm": dict(
        n_modes=128, eps=1.0 / 20.0, multiplier=SV, t_final=1.0, hurst=0.5,
        samples="n",
    ),
}

_SCHEMA = {
    "preset": None,
    "n_modes": None,
    "output_dir": None,
    "max_failure_fraction": None,
    "solver": {"eps", "multiplier", "t_final", "cfl", "snapshot_times"},
    "ensemble": {"n_samples", "master_seed"},
    "initial": {"rho", "q", "alpha", "hurst", "strength_freq"},
    "diagnostics": {"alpha", "lam", "n_r"},
}


def preset_defaults(preset: str, n_modes: int | None = None, hurst: float | None = None) -> dict:
    """Fully resolved default parameter dict for a preset."""
    if preset not in _PRESET_DEFAULTS:
        raise ConfigError(f"unknown preset {preset!r}; expected one of {PRESETS}")
    d = dict(_PRESET_DEFAULTS[preset])
    if n_modes is not None:
        d["n_modes"] = int(n_modes)
    if preset == "fbm":
        h = d["hurst"] if hurst is None else float(hurst)
        d["hurst"] = h
        d.setdefault("alpha", h)
        d.setdefault("lam", 2.0 * h + 1.0)
        if hurst is not None:
            d["alpha"] = h
            d["lam"] = 2.0 * h + 1.0
    return d


def _default_snapshots(t_final: float) -> tuple:
    return tuple(float(t) for t in np.round(np.linspace(0.0, t_final, 11), 12))


def build_config(raw: dict) -> ExperimentConfig:
    """Validate a raw (parsed-YAML) mapping and construct the config.

    Collects every violation before raising, so a bad file reports all its
    problems at once.
    """
    errors: list[str] = []
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")

    for key in raw:
        if key not in _SCHEMA:
            errors.append(f"unknown key {key!r}")
    for section, allowed in _SCHEMA.items():
        if allowed is None:
            continue
        sub = raw.get(section, {})
        if sub is None:
            sub = {}
        if not isinstance(sub, dict):
            errors.append(f"section {section!r} must be a mapping")
            continue
        for key in sub:
            if key not in allowed:
                errors.append(f"unknown key {section}.{key!r}")
    if errors:
        raise ConfigError("; ".join(errors))

    preset = raw.get("preset")
    if preset not in PRESETS:
        raise ConfigError(f"preset must be one of {PRESETS}, got {preset!r}")

    init_raw = raw.get("initial") or {}
    defaults = preset_defaults(preset, raw.get("n_modes"), init_raw.get("hurst"))
    n_modes = int(defaults["n_modes"])
    solver_raw = raw.get("solver") or {}
    ens_raw = raw.get("ensemble") or {}
    diag_raw = raw.get("diagnostics") or {}

    t_final = float(solver_raw.get("t_final", defaults["t_final"]))
    snap = solver_raw.get("snapshot_times")
    snap = _default_snapshots(t_final) if snap is None else tuple(float(t) for t in snap)

    def check(cond, msg):
        if not cond:
            errors.append(msg)

    eps = float(solver_raw.get("eps", defaults["eps"]))
    cfl = float(solver_raw.get("cfl", 0.4))
    multiplier = str(solver_raw.get("multiplier", defaults["multiplier"]))
    check(n_modes >= 1, f"n_modes must be >= 1, got {n_modes}")
    check(eps > 0, f"solver.eps must be > 0, got {eps}")
    check(t_final > 0, f"solver.t_final must be > 0, got {t_final}")
    check(0 < cfl <= 1, f"solver.cfl must lie in (0, 1], got {cfl}")
    check(multiplier in (SV, NS_LIKE), f"solver.multiplier must be '{SV}' or '{NS_LIKE}'")
    check(all(0 <= t <= t_final for t in snap), "solver.snapshot_times must lie in [0, t_final]")
    check(list(snap) == sorted(snap), "solver.snapshot_times must be sorted")

    if defaults["samples"] == "one":
        default_m = 1
    else:
        default_m = n_modes  # paper choice M = N
    n_samples = int(ens_raw.get("n_samples", default_m))
    master_seed = int(ens_raw.get("master_seed", 0))
    check(n_samples >= 1, f"ensemble.n_samples must be >= 1, got {n_samples}")

    alpha = float(diag_raw.get("alpha", defaults.get("alpha", 0.5)))
    lam = float(diag_raw.get("lam", defaults.get("lam", 2.0)))
    n_r = int(diag_raw.get("n_r", 50))
    check(0 < alpha < 1, f"diagnostics.alpha must lie in (0, 1), got {alpha}")
    check(1 < lam < 3, f"diagnostics.lam must lie in (1, 3), got {lam}")
    check(n_r >= 2, f"diagnostics.n_r must be >= 2, got {n_r}")

    rho = float(init_raw.get("rho", defaults.get("rho", 10.0)))
    q = int(init_raw.get("q", defaults.get("q", 10)))
    alpha_perturb = float(init_raw.get("alpha", defaults.get("alpha_perturb", 1.0 / 320.0)))
    hurst = float(init_raw.get("hurst", defaults.get("hurst", 0.5)))
    strength_freq = int(init_raw.get("strength_freq", defaults.get("strength_freq", 10)))
    check(rho > 0, f"initial.rho must be > 0, got {rho}")
    check(q >= 1, f"initial.q must be >= 1, got {q}")
    check(alpha_perturb >= 0, f"initial.alpha must be >= 0, got {alpha_perturb}")
    check(0 < hurst < 1, f"initial.hurst must lie in (0, 1), got {hurst}")
    check(strength_freq >= 1, f"initial.strength_freq must be >= 1, got {strength_freq}")

    output_dir = str(raw.get("output_dir", "out"))
    max_fail = float(raw.get("max_failure_fraction", 0.0))
    check(0 <= max_fail < 1, "max_failure_fraction must lie in [0, 1)")
    check(bool(output_dir), "output_dir must be nonempty")

    if errors:
        raise ConfigError("; ".join(errors))

    solver = SolverConfig(
        n_modes=n_modes, eps=eps, t_final=t_final,
        multiplier_mode=multiplier, cfl=cfl, snapshot_times=snap,
    )
    initial = InitialSpec(
        preset=preset, rho=rho, q=q, alpha=alpha_perturb,
        hurst=hurst, strength_freq=strength_freq,
    )
    ens = EnsembleConfig(
        n_samples=n_samples, solver=solver, initial=initial, master_seed=master_seed,
    )
    return ExperimentConfig(
        ensemble=ens,
        diagnostics=DiagnosticsSpec(alpha=alpha, lam=lam, n_r=n_r),
        output_dir=output_dir,
        max_failure_fraction=max_fail,
    )


def load_config(path) -> ExperimentConfig:
    """Parse and validate a YAML config file (parse errors carry line info)."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return build_config(raw)


def config_to_dict(cfg: ExperimentConfig) -> dict:
    """Canonical plain-scalar representation (inverse of build_config)."""
    s = cfg.ensemble.solver
    i = cfg.ensemble.initial
    d = cfg.diagnostics
    return {
        "preset": i.preset,
        "n_modes": int(s.n_modes),
        "solver": {
            "eps": float(s.eps),
            "multiplier": s.multiplier_mode,
            "t_final": float(s.t_final),
            "cfl": float(s.cfl),
            "snapshot_times": [float(t) for t in s.snapshot_times],
        },
        "ensemble": {
            "n_samples": int(cfg.ensemble.n_samples),
            "master_seed": int(cfg.ensemble.master_seed),
        },
        "initial": {
            "rho": float(i.rho),
            "q": int(i.q),
            "alpha": float(i.alpha),
            "hurst": float(i.hurst),
            "strength_freq": int(i.strength_freq),
        },
        "diagnostics": {"alpha": float(d.alpha), "lam": float(d.lam), "n_r": int(d.n_r)},
        "output_dir": cfg.output_dir,
        "max_failure_fraction": float(cfg.max_failure_fraction),
    }


def canonical_yaml(cfg: ExperimentConfig) -> str:
    return yaml.safe_dump(config_to_dict(cfg), sort_keys=True, default_flow_style=False)


def config_hash(cfg: ExperimentConfig) -> str:
    return hashlib.sha256(canonical_yaml(cfg).encode("utf-8")).hexdigest()[:12]
