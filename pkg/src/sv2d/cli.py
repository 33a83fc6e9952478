"""Command-line interface.

Subcommands:
  run          evolve an ensemble from a config file and write artifacts
  diag         re-run diagnostics on a stored field snapshot
  extrapolate  Richardson-extrapolate energies over a set of run summaries
  theory-check verify the constructive-lemma properties and report margins
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys

import numpy as np
import yaml

from .artifacts import SPECTRUM_HEADER, STRUCTURE_HEADER, run_experiment, write_csv
from .config import ConfigError, load_config
from .diagnostics import (
    RGrid,
    c_max,
    d_max,
    energy_spectrum,
    richardson_extrapolate,
    structure_function,
)
from .spectral import GridSpec, SpectralField, leray_project, read_field_snapshot
from .theory import (
    envelope_eval,
    envelope_properties,
    hgrad_identity_check,
    interpolation_inequality_check,
    sublinear_envelope,
)

__all__ = ["main"]


def _cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.seed is not None:
        ens = dataclasses.replace(cfg.ensemble, master_seed=args.seed)
        cfg = dataclasses.replace(cfg, ensemble=ens)
    arts = run_experiment(cfg, workers=args.workers, out_dir=args.out)
    s = arts.summary
    print(f"preset={s['preset']} N={s['n_modes']} M={s['n_samples']} "
          f"completed={s['n_completed']} hash={s['config_hash']}")
    print(f"E0={s['initial_energy_mean']:.6g} E(T)={s['final_energy_mean']:.6g} "
          f"rel_ediss={s['rel_ediss_final']:.4g} c_max={s['c_max_final']:.4g} "
          f"d_max={s['d_max_final']:.4g}")
    print(f"artifacts in {arts.out_dir} ({len(arts.files)} files)")
    if arts.exit_status != 0:
        print(f"{len(arts.result.failures)} member(s) failed", file=sys.stderr)
    return arts.exit_status


def _cmd_diag(args) -> int:
    field, meta = read_field_snapshot(args.snapshot)
    rg = RGrid.default_for(field.grid.n_modes, args.n_r)
    st = structure_function(field, rg, kernel=args.kernel)
    sp = energy_spectrum(field)
    cm = c_max(st, args.alpha)
    dm = d_max(sp, args.lam)
    print(f"snapshot t={meta['time']} N={meta['n_modes']} hash={meta.get('config_hash', '')!s}")
    print(f"c_max(alpha={args.alpha}) = {cm:.6g}")
    print(f"d_max(lambda={args.lam}) = {dm:.6g}")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        write_csv(os.path.join(args.out, "structure.csv"), STRUCTURE_HEADER, [rg.values, st.s2])
        comp = sp.K.astype(float) ** args.lam * sp.e
        write_csv(os.path.join(args.out, "spectrum.csv"), SPECTRUM_HEADER, [sp.K, sp.e, comp])
        print(f"tables written to {args.out}")
    return 0


def _cmd_extrapolate(args) -> int:
    summaries = []
    for path in args.summaries:
        with open(path, "r", encoding="utf-8") as fh:
            summaries.append(yaml.safe_load(fh))
    if len(summaries) < 3:
        print("need at least three run summaries", file=sys.stderr)
        return 2
    summaries.sort(key=lambda s: s["delta"])
    finest = summaries[:3]  # three finest resolutions
    e0 = richardson_extrapolate([(s["delta"], s["initial_energy_mean"]) for s in finest])
    et = richardson_extrapolate([(s["delta"], s["final_energy_mean"]) for s in finest])
    print(f"extrapolated initial energy: {e0:.8g}")
    print("per-resolution relative energy dissipation (E(T) - E0_ref)/E0_ref:")
    for s in summaries:
        rel = (s["final_energy_mean"] - e0) / e0
        print(f"  N={s['n_modes']:>5d}  Delta={s['delta']:.6g}  rel_ediss={rel:.6g}")
    print(f"extrapolated rel_ediss at T: {(et - e0) / e0:.6g}")
    return 0


def _random_band_limited(n_modes: int, seed: int) -> SpectralField:
    g = GridSpec(n_modes)
    rng = np.random.default_rng(seed)
    M = g.n_coeff
    raw = rng.standard_normal((2, M, M)) + 1j * rng.standard_normal((2, M, M))
    raw *= np.exp(-4.0 * g.ksq / n_modes**2)
    raw = 0.5 * (raw + np.conj(raw[:, ::-1, ::-1]))
    raw[:, n_modes, n_modes] = 0.0
    return leray_project(SpectralField(g, raw))


def _cmd_theory_check(args) -> int:
    checks = []

    worst = 0.0
    for seed in range(args.fields):
        u = _random_band_limited(args.n_modes, 100 + seed)
        for r in (0.02, 0.05, 0.1):
            lhs, rhs = hgrad_identity_check(u, r, args.n_quad)
            worst = max(worst, abs(lhs / rhs - 1.0))
    checks.append(("gradient-increment identity |lhs/rhs - 1|", worst, worst <= 1e-5))

    rg = RGrid.default_for(args.n_modes)
    min_margin = np.inf
    for seed in range(args.fields):
        u = _random_band_limited(args.n_modes, 200 + seed)
        nrm = float(np.sqrt(np.sum(np.abs(u.coeffs) ** 2)))
        for r in rg.values:
            min_margin = min(min_margin, interpolation_inequality_check(u, r) / nrm)
    checks.append(("interpolation inequality min margin/||u||", min_margin, min_margin >= -1e-8))

    env = sublinear_envelope([1.0, 1.0, 0.5])
    knots_ok = np.allclose(env.knots, [2.0, 1.5, 1.0]) and envelope_eval(env, 1.5) == 1.25
    env0 = sublinear_envelope(np.zeros(12))
    knots_ok = knots_ok and np.allclose(env0.knots, 1.0 / np.arange(1.0, 13.0))
    checks.append(("envelope closed-form knots", 0.0 if knots_ok else 1.0, knots_ok))

    rng = np.random.default_rng(7)
    worst_env = np.inf
    for _ in range(100):
        k_max = int(rng.integers(3, 30))
        steps = rng.uniform(0.5, 1.0, size=k_max)
        sups = float(rng.uniform(0.1, 5.0)) * np.concatenate([[1.0], np.cumprod(steps)])
        props = envelope_properties(sublinear_envelope(sups), sups)
        worst_env = min(worst_env, min(props.values()))
    checks.append(("envelope properties min margin", worst_env, worst_env >= -1e-12))

    all_ok = all(ok for _, _, ok in checks)
    lines = [
        {"check": name, "measured": float(val), "status": "pass" if ok else "fail"}
        for name, val, ok in checks
    ]
    text = yaml.safe_dump(lines, sort_keys=False)
    print(text, end="")
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    return 0 if all_ok else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="sv2d", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None, help="override master seed")
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    p.add_argument("--out", default=None, help="override output directory")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("diag", help="diagnostics on a stored field snapshot")
    p.add_argument("--snapshot", required=True)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--lambda", dest="lam", type=float, default=2.0)
    p.add_argument("--kernel", choices=("numerical", "exact"), default="numerical")
    p.add_argument("--n-r", type=int, default=50)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_diag)

    p = sub.add_parser("extrapolate", help="Richardson extrapolation over run summaries")
    p.add_argument("--summaries", nargs="+", required=True)
    p.set_defaults(func=_cmd_extrapolate)

    p = sub.add_parser("theory-check", help="verify constructive-lemma properties")
    p.add_argument("--n-quad", type=int, default=10_000)
    p.add_argument("--n-modes", type=int, default=16)
    p.add_argument("--fields", type=int, default=5)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_theory_check)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
