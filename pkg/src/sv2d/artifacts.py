"""Output artifacts of an experiment run: CSV tables, manifest, summary.

Every file is UTF-8 with LF newlines and floats rendered by repr (shortest
round-trip), so identical configurations produce byte-identical artifacts.
The manifest lists every declared file together with the config hash,
per-member seeds and completion status.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
import yaml

from .config import ExperimentConfig, canonical_yaml, config_hash
from .diagnostics import (
    RGrid,
    c_max,
    d_max,
    energy_spectrum,
    relative_energy_dissipation,
    structure_function,
)
from .ensemble import EnsembleResult, energy_matrix, evolve_ensemble, fields_at
from .spectral import write_field_snapshot

__all__ = ["RunArtifacts", "write_csv", "read_csv", "run_experiment"]

MEMBER_HEADER = ["t", "energy", "enstrophy", "dissipation_integral"]
AGGREGATE_HEADER = ["t", "mean_energy", "std_energy", "mc_error"]
STRUCTURE_HEADER = ["r", "s2"]
SPECTRUM_HEADER = ["K", "E", "compensated"]
SUMMARY_HEADER = ["t", "c_max", "d_max", "rel_ediss", "mc_error"]


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_csv(path, header, columns) -> None:
    columns = [np.asarray(c) for c in columns]
    n = columns[0].shape[0]
    if any(c.shape[0] != n for c in columns):
        raise ValueError("CSV columns must have equal length")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for i in range(n):
            fh.write(",".join(_fmt(c[i]) for c in columns) + "\n")


def read_csv(path) -> dict[str, np.ndarray]:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    data = np.array(rows, dtype=float) if rows else np.empty((0, len(header)))
    return {name: data[:, j] for j, name in enumerate(header)}


def _time_tag(t: float) -> str:
    return f"{t:.6f}"


@dataclass
class RunArtifacts:
    out_dir: str
    files: list
    summary: dict
    result: EnsembleResult

    @property
    def exit_status(self) -> int:
        cfg = self.summary
        return 0 if cfg["failure_fraction"] <= cfg["max_failure_fraction"] else 1


def run_experiment(cfg: ExperimentConfig, workers: int = 1, out_dir: str | None = None) -> RunArtifacts:
    """Evolve the ensemble and write every declared artifact.

    Deterministic given cfg: reruns produce byte-identical files.
    """
    out = out_dir if out_dir is not None else cfg.output_dir
    os.makedirs(out, exist_ok=True)
    os.makedirs(os.path.join(out, "members"), exist_ok=True)
    os.makedirs(os.path.join(out, "tables"), exist_ok=True)
    os.makedirs(os.path.join(out, "snapshots"), exist_ok=True)

    chash = config_hash(cfg)
    files: list[str] = []

    def declare(relpath: str) -> str:
        files.append(relpath)
        return os.path.join(out, relpath)

    with open(declare("config.yaml"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(canonical_yaml(cfg))

    result = evolve_ensemble(cfg.ensemble, workers=workers)
    n_members = cfg.ensemble.n_samples
    failure_fraction = len(result.failures) / n_members

    member_status = []
    for i, traj in enumerate(result.trajectories):
        status = "ok" if traj is not None else f"failed: {result.failures[i]}"
        member_status.append({"member": i, "seed": int(cfg.ensemble.master_seed ^ i), "status": status})
        if traj is None:
            continue
        write_csv(
            declare(f"members/member_{i:03d}.csv"),
            MEMBER_HEADER,
            [traj.times, traj.energy, traj.enstrophy, traj.dissipation],
        )

    if not result.completed:
        raise RuntimeError("every ensemble member failed; no artifacts to aggregate")

    times, energies = energy_matrix(result)
    m = energies.shape[0]
    mean_e = energies.mean(axis=0)
    std_e = energies.std(axis=0, ddof=1) if m > 1 else np.zeros_like(mean_e)
    write_csv(
        declare("aggregate.csv"),
        AGGREGATE_HEADER,
        [times, mean_e, std_e, std_e / np.sqrt(m)],
    )

    # snapshot-time diagnostics over the ensemble
    solver = cfg.ensemble.solver
    rg = RGrid.default_for(solver.n_modes, cfg.diagnostics.n_r)
    snap_times = list(solver.snapshot_times)
    cmaxs, dmaxs = [], []
    for t in snap_times:
        members = fields_at(result, t)
        st = structure_function(members, rg)
        sp = energy_spectrum(members)
        cmaxs.append(c_max(st, cfg.diagnostics.alpha))
        dmaxs.append(d_max(sp, cfg.diagnostics.lam))
        tag = _time_tag(t)
        write_csv(declare(f"tables/structure_t{tag}.csv"), STRUCTURE_HEADER, [rg.values, st.s2])
        comp = sp.K.astype(float) ** cfg.diagnostics.lam * sp.e
        write_csv(declare(f"tables/spectrum_t{tag}.csv"), SPECTRUM_HEADER, [sp.K, sp.e, comp])

    # member-0 field snapshots, re-usable through `sv2d diag`
    traj0 = result.completed[0]
    for t, f in traj0.snapshots:
        rel = f"snapshots/member_000_t{_time_tag(t)}.bin"
        write_field_snapshot(f, os.path.join(out, rel), time=t, config_hash=chash)
        files.append(rel)
        files.append(rel + ".meta")

    # relative energy dissipation against this run's own initial mean energy
    e0_ref = float(energies[:, 0].mean())
    snap_idx = [int(np.argmin(np.abs(times - t))) for t in snap_times]
    rel_tab = relative_energy_dissipation(times[snap_idx], energies[:, snap_idx], e0_ref)
    write_csv(
        declare("summary.csv"),
        SUMMARY_HEADER,
        [np.array(snap_times), np.array(cmaxs), np.array(dmaxs), rel_tab.mean, rel_tab.mc_error],
    )

    summary = {
        "config_hash": chash,
        "preset": cfg.preset,
        "n_modes": int(solver.n_modes),
        "delta": 1.0 / solver.n_modes,
        "t_final": float(solver.t_final),
        "dt": float(result.dt),
        "n_samples": int(n_members),
        "n_completed": int(result.n_completed),
        "partial": bool(result.partial),
        "failure_fraction": failure_fraction,
        "max_failure_fraction": float(cfg.max_failure_fraction),
        "initial_energy_mean": e0_ref,
        "final_energy_mean": float(mean_e[-1]),
        "rel_ediss_final": float(rel_tab.mean[-1]),
        "c_max_final": float(cmaxs[-1]),
        "d_max_final": float(dmaxs[-1]),
    }
    with open(declare("summary.yaml"), "w", encoding="utf-8", newline="\n") as fh:
        yaml.safe_dump(summary, fh, sort_keys=True)

    manifest = {
        "config_hash": chash,
        "members": member_status,
        "files": sorted(files) + ["manifest.yaml"],
    }
    with open(os.path.join(out, "manifest.yaml"), "w", encoding="utf-8", newline="\n") as fh:
        yaml.safe_dump(manifest, fh, sort_keys=True)
    files.append("manifest.yaml")

    return RunArtifacts(out_dir=out, files=sorted(files), summary=summary, result=result)
