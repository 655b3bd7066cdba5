"""Batch front-end: run a scenario, sweep a parameter, or rebuild the
bundled benchmark datasets.

Exit codes: 0 success, 2 configuration error, 3 solver error.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .config import KNOWN_KEYS, ScenarioConfig
from .effective import effective_operators, rate_steady_state
from .errors import ConfigError, WqedError
from .figures import FIGURES
from .liouville import (GeneratorAction, evolve, fidelity, ground_basis_sampler,
                        mixed_ground_initial, peak_fidelity, steady_state,
                        trajectories)
from .imperfections import ensemble_fidelity
from .model import basis_transform, state_labels, target_state
from .motion import MotionSpec, disordered_peak_scan, peak_scan
from .tables import write_csv


def _target(spec):
    if spec.n_emitters < 2:
        return None
    return target_state(spec.n_emitters, n_levels=spec.scheme.n_levels)


def _observables(spec):
    """Fidelity plus a full set of populations (singlet-triplet labels for
    two emitters, computational labels otherwise)."""
    obs = {}
    if spec.n_emitters == 2:
        u = basis_transform("singlet_triplet", n_levels=spec.scheme.n_levels).matrix
        names = ["p00", "pT", "pS", "p11"]
        rest = state_labels(2, spec.scheme.n_levels)
        used = set()
        for k, lbl in enumerate(names):
            obs[lbl] = u[:, k]
        for c in range(4, u.shape[1]):
            support = int(np.argmax(np.abs(u[:, c])))
            lbl = f"p{rest[support]}"
            if lbl not in used:
                obs[lbl] = u[:, c]
                used.add(lbl)
    elif spec.dim <= 64:
        for i, lbl in enumerate(state_labels(spec.n_emitters, spec.scheme.n_levels)):
            key = np.zeros(spec.dim, dtype=complex)
            key[i] = 1.0
            obs[f"p{lbl}"] = key
    return obs


def run_scenario(cfg: ScenarioConfig, out_path: str | None = None) -> dict:
    """Execute one scenario; returns a summary dict and writes the CSV."""
    task = cfg.get("solver.task")
    method = cfg.get("solver.method")
    seed = cfg.get("solver.seed")
    workers = cfg.get("solver.workers")
    precision = cfg.get("output.precision")
    path = out_path or cfg.get("output.path")
    spec = cfg.system_spec()
    mspec = cfg.motion_spec()
    bspec = cfg.broadening_spec()
    psi_t = _target(spec)

    if task == "peak":
        if mspec is None:
            raise ConfigError("solver.task = peak requires motion.enabled = true")
        nt = cfg.get("solver.n_traj")
        times = cfg.time_grid()
        if bspec is not None:
            res = disordered_peak_scan(spec, mspec, bspec, nt, seed,
                                       times=times, n_workers=workers)
        else:
            res = peak_scan(spec, mspec, nt, seed, times=times,
                            n_workers=workers, guard_action="warn")
        k = int(np.argmax(res.trajectory.column("fidelity")))
        stderr = res.trajectory.column("fidelity_stderr")[k]
        eta = mspec.eta_value
        write_csv(path, ["eta", "omega_z", "nbar0", "F_max", "t_max", "stderr"],
                  [[eta, mspec.omega_z_value if eta > 0 else 0.0, mspec.nbar0,
                    res.f_max, res.t_max, stderr]], precision=precision)
        return {"F_max": res.f_max, "t_max": res.t_max, "stderr": float(stderr),
                "path": path}

    if task == "steady":
        if bspec is not None:
            mean, stderr = ensemble_fidelity(spec, bspec)
            write_csv(path, ["mean_fidelity", "stderr", "n_samples"],
                      [[mean, stderr, bspec.n_samples]], precision=precision)
            return {"fidelity": mean, "stderr": stderr, "path": path}
        if method == "effective":
            dyn = effective_operators(spec)
            rho = steady_state(dyn.generator())
            f = fidelity(rho, target_state(spec.n_emitters, n_levels=2))
        else:
            rho = steady_state(GeneratorAction.from_spec(spec))
            f = fidelity(rho, psi_t)
        write_csv(path, ["fidelity", "infidelity"], [[f, 1.0 - f]],
                  precision=precision)
        return {"fidelity": f, "path": path}

    # transient
    times = cfg.time_grid()
    if mspec is not None:
        res = peak_scan(spec, mspec, cfg.get("solver.n_traj"), seed, times=times,
                        n_workers=workers, guard_action="warn")
        traj = res.trajectory
    elif method == "trajectories":
        traj = trajectories(GeneratorAction.from_spec(spec),
                            ground_basis_sampler(spec), times,
                            cfg.get("solver.n_traj"), seed, target=psi_t,
                            observables=_observables(spec), n_workers=workers)
    elif method == "effective":
        dyn = effective_operators(spec)
        rho0 = np.eye(dyn.dim, dtype=complex) / dyn.dim
        obs = {f"p{lbl}": dyn.basis[:, k] for k, lbl in enumerate(dyn.basis_labels)}
        traj, _ = evolve(dyn.generator(), rho0, times,
                         target=target_state(spec.n_emitters, n_levels=2), observables=obs)
    else:
        traj, _ = evolve(GeneratorAction.from_spec(spec), mixed_ground_initial(spec),
                         times, target=psi_t, observables=_observables(spec))
    traj.to_csv(path, precision=precision)
    t_pk, f_pk = peak_fidelity(traj)
    return {"peak_fidelity": f_pk, "peak_time": t_pk, "path": path}


def _parse_values(text: str) -> list[float]:
    if ":" in text:
        parts = text.split(":")
        if len(parts) not in (3, 4):
            raise ConfigError(f"bad range '{text}', expected start:stop:n[:lin|log]")
        start, stop, n = float(parts[0]), float(parts[1]), int(parts[2])
        scale = parts[3] if len(parts) == 4 else "lin"
        if scale == "log":
            return list(np.logspace(np.log10(start), np.log10(stop), n))
        if scale == "lin":
            return list(np.linspace(start, stop, n))
        raise ConfigError(f"unknown range scale '{scale}'")
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"bad value list '{text}'") from None


def _sweep_point(payload):
    text, axis, value, out_ignored = payload
    cfg = ScenarioConfig.parse(text, apply_env=False)
    cfg.set_numeric(axis, value)
    import tempfile

    with tempfile.NamedTemporaryFile(suffix=".csv", delete=False) as tmp:
        tmp_path = tmp.name
    try:
        summary = run_scenario(cfg, out_path=tmp_path)
    finally:
        if os.path.exists(tmp_path):
            os.unlink(tmp_path)
    return summary


def sweep_scenario(cfg: ScenarioConfig, axis: str, values: list[float],
                   out_path: str | None = None) -> list[list]:
    """One row per value; points are dispatched to a worker pool and the
    output rows keep the input order."""
    if axis not in KNOWN_KEYS:
        raise ConfigError(f"unknown sweep axis '{axis}'")
    if KNOWN_KEYS[axis][0] not in ("rate", "rate_or_auto", "time", "float", "int"):
        raise ConfigError(f"axis '{axis}' is not numeric")
    workers = cfg.get("solver.workers")
    text = cfg.serialize()
    payloads = [(text, axis, v, None) for v in values]
    if workers > 1 and len(values) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            summaries = list(pool.map(_sweep_point, payloads))
    else:
        summaries = [_sweep_point(p) for p in payloads]

    task = cfg.get("solver.task")
    if task == "steady":
        cols = ["fidelity"]
    elif task == "peak":
        cols = ["F_max", "t_max", "stderr"]
    else:
        cols = ["peak_fidelity", "peak_time"]
    header = [axis] + cols
    rows = [[v] + [s.get(c, float("nan")) for c in cols]
            for v, s in zip(values, summaries)]
    path = out_path or cfg.get("output.path")
    write_csv(path, header, rows, precision=cfg.get("output.precision"))
    return rows


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="wqed",
        description="Driven-dissipative waveguide-QED entanglement toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", required=False, help="scenario file")
        p.add_argument("--out", help="output CSV path (or directory for reproduce)")
        p.add_argument("--seed", type=int, help="override solver.seed")
        p.add_argument("--workers", type=int, help="override solver.workers")
        p.add_argument("--cap", type=int, help="override solver.dim_cap")

    p_run = sub.add_parser("run", help="run one scenario")
    add_common(p_run)

    p_sweep = sub.add_parser("sweep", help="sweep one numeric config key")
    add_common(p_sweep)
    p_sweep.add_argument("--axis", required=True, help="dotted config key")
    p_sweep.add_argument("--values", required=True,
                         help="comma list or start:stop:n[:lin|log]")

    p_rep = sub.add_parser("reproduce", help="rebuild a benchmark dataset")
    p_rep.add_argument("figure", help="fig2|fig3|fig4|fig5|fig6|fig7|fig8|figA1|list")
    p_rep.add_argument("--out", default="datasets", help="output directory")
    p_rep.add_argument("--seed", type=int, default=1)
    p_rep.add_argument("--workers", type=int, default=1)
    p_rep.add_argument("--n-traj", type=int, default=None)
    p_rep.add_argument("--fast", action="store_true",
                       help="reduced grids and ensembles (smoke test)")
    p_rep.add_argument("--full", action="store_true",
                       help="include the heaviest variants (e.g. five emitters)")
    p_rep.add_argument("--dry-run", action="store_true",
                       help="validate the preset without computing")

    args = parser.parse_args(argv)
    try:
        if args.command == "reproduce":
            if args.figure == "list":
                for name in FIGURES:
                    print(name)
                return 0
            if args.figure not in FIGURES:
                raise ConfigError(f"unknown figure '{args.figure}'; "
                                  f"choose from {', '.join(FIGURES)}")
            if args.dry_run:
                print(f"{args.figure}: ok")
                return 0
            os.makedirs(args.out, exist_ok=True)
            files = FIGURES[args.figure](args.out, seed=args.seed,
                                         workers=args.workers,
                                         n_traj=args.n_traj, fast=args.fast,
                                         full=args.full)
            for f in files:
                print(os.path.join(args.out, f))
            return 0

        if not args.config:
            raise ConfigError("--config is required")
        cfg = ScenarioConfig.from_file(args.config)
        if args.seed is not None:
            cfg.set("solver.seed", args.seed)
        if args.workers is not None:
            cfg.set("solver.workers", args.workers)
        if args.cap is not None:
            cfg.set("solver.dim_cap", args.cap)

        if args.command == "run":
            summary = run_scenario(cfg, out_path=args.out)
            print(summary["path"])
            return 0
        if args.command == "sweep":
            values = _parse_values(args.values)
            sweep_scenario(cfg, args.axis, values, out_path=args.out)
            print(args.out or cfg.get("output.path"))
            return 0
        raise ConfigError(f"unknown command {args.command}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (WqedError, ValueError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
