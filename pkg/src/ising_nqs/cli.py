"""Command-line pipeline: train models, sample chains, analyze error curves
and autocorrelation, project hardware runtimes, and run barrier diagnostics.

Configuration comes from flags, optionally backed by a JSON manifest
(`--manifest`); flags win over manifest values over built-in defaults. Every
output embeds the hash of the effective configuration and the seed, and a
re-run with the same effective configuration is byte-identical for CSV/JSON.

Exit codes: 0 success, 2 usage error, 3 numerical failure, 4 data exclusion
threshold exceeded.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import advantage as adv
from . import analysis, barrier as barrier_mod, oracle as oracle_mod, plots
from .errors import (
    ChainTooShortError,
    EnumerationSizeError,
    ExclusionThresholdError,
    IntervalSelectionError,
    NumericalError,
    StuckChainError,
)
from .estimators import EnergyEstimate, write_curve_csv, write_estimate_json
from .heisenberg import build_lattice, local_energy_batch
from .autocorr import detect_stuck, select_mh_interval, select_sim_interval
from .rbm import load_model, save_model
from .samplers import ChainConfig, filter_magnetization_zero, run_chains, write_chain_csv
from .trainer import TrainConfig, train, write_history_csv

__all__ = ["main"]


def _default_threads() -> int:
    env = os.environ.get("ISING_NQS_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def _effective(args: argparse.Namespace, defaults: dict) -> dict:
    """defaults < manifest < explicit flags; only keys in defaults count."""
    eff = dict(defaults)
    manifest_path = getattr(args, "manifest", None)
    if manifest_path:
        doc = json.loads(Path(manifest_path).read_text())
        for k, v in doc.items():
            if k in eff:
                eff[k] = v
    for k in defaults:
        v = getattr(args, k, None)
        if v is not None:
            eff[k] = v
    return eff


# keys that steer where/how fast work happens but never what is computed;
# they stay out of the hash so re-runs into a fresh directory still match
_HASH_EXCLUDE = ("out", "threads")


def _manifest_hash(command: str, eff: dict) -> str:
    doc = {k: v for k, v in eff.items() if k not in _HASH_EXCLUDE}
    canon = json.dumps({"command": command, **doc}, sort_keys=True)
    return hashlib.sha256(canon.encode()).hexdigest()[:12]


def _outdir(eff: dict) -> Path:
    out = Path(eff["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _stamp(eff: dict, mhash: str) -> dict:
    return {"manifest": mhash, "seed": eff["seed"]}


def _load_model_file(path: str):
    model, meta = load_model(path)
    lattice = build_lattice(meta["L"])
    return model, lattice, meta


# --- train ---------------------------------------------------------------

TRAIN_DEFAULTS = {
    "L": 4, "alpha": 2, "J": 1.0, "iterations": 400, "preset": "",
    "replicas": 5, "seed": 1, "eta": 0.005, "threads": 0, "out": "runs/train",
}


def cmd_train(args: argparse.Namespace) -> int:
    eff = _effective(args, TRAIN_DEFAULTS)
    mhash = _manifest_hash("train", eff)
    out = _outdir(eff)
    lattice = build_lattice(int(eff["L"]))
    alpha = int(eff["alpha"])
    preset = eff["preset"] or None
    threads = int(eff["threads"]) or _default_threads()
    replicas = int(eff["replicas"])

    def train_one(r: int):
        seed_r = int(eff["seed"]) + r
        cfg = TrainConfig.for_system(lattice.n, alpha, int(eff["iterations"]), seed_r,
                                     preset=preset, eta=float(eff["eta"]))
        model, history = train(lattice, alpha, float(eff["J"]), cfg)
        return seed_r, cfg, model, history

    results = []
    if threads > 1 and replicas > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(train_one, range(replicas)))
    else:
        results = [train_one(r) for r in range(replicas)]

    for r, (seed_r, cfg, model, history) in enumerate(results):
        meta = {
            "preset": cfg.preset, "iterations": cfg.iterations, "eta": cfg.eta,
            "replica": r, "final_energy": history.energy[-1], "manifest": mhash,
        }
        save_model(model, out / f"model_r{r}.json", L=lattice.L, J=float(eff["J"]),
                   rng_seed=seed_r, training_meta=meta)
        write_history_csv(history, out / f"history_r{r}.csv",
                          extra_comments=_stamp(eff, mhash) | {"replica": r})
        plots.plot_history(history, out / f"history_r{r}.png")
        print(f"replica {r}: seed {seed_r}, final energy {history.energy[-1]:.6f}, "
              f"variance {history.variance[-1]:.4f}")
    print(f"wrote {replicas} model(s) to {out}")
    return 0


# --- sample --------------------------------------------------------------

SAMPLE_DEFAULTS = {
    "model": "", "kind": "mh", "chains": 10, "samples": 32768, "interval": 0,
    "thermalization": 200, "seed": 7, "record_hidden": False, "threads": 0,
    "out": "runs/sample",
}


def cmd_sample(args: argparse.Namespace) -> int:
    eff = _effective(args, SAMPLE_DEFAULTS)
    if not eff["model"]:
        raise ValueError("--model is required")
    mhash = _manifest_hash("sample", eff)
    out = _outdir(eff)
    model, lattice, meta = _load_model_file(eff["model"])
    kind = eff["kind"]
    if kind not in ("mh", "sim"):
        raise ValueError(f"--kind must be mh or sim, got {kind!r}")
    threads = int(eff["threads"]) or _default_threads()
    interval = int(eff["interval"])
    if interval < 1:
        if kind == "mh":
            interval = select_mh_interval(model.n)
        else:
            interval = select_sim_interval(model, lattice, meta["J"], model.alpha,
                                           int(eff["seed"]))
    cfg = ChainConfig(n_sweeps=int(eff["samples"]) * interval,
                      thermalization=int(eff["thermalization"]),
                      interval=interval, seed=int(eff["seed"]))
    kwargs = {"record_hidden": bool(eff["record_hidden"])} if kind == "sim" else {}
    chains = run_chains(kind, model, lattice, cfg, int(eff["chains"]),
                        threads=threads, **kwargs)
    exclusions = []
    for k, chain in enumerate(chains):
        path = out / f"chain_{kind}_{k:02d}.csv"
        write_chain_csv(chain, path, extra_comments=_stamp(eff, mhash) | {"chain": k})
        if kind == "sim":
            usable, _ = filter_magnetization_zero(chain)
        else:
            usable = chain
        energies = local_energy_batch(usable.samples, model, lattice, meta["J"])
        stuck, reason = detect_stuck(energies)
        if stuck:
            exclusions.append({"chain": k, "file": path.name, "reason": reason})
    (out / "exclusions.json").write_text(
        json.dumps({"manifest": mhash, "seed": eff["seed"], "excluded": exclusions},
                   sort_keys=True, indent=1) + "\n")
    print(f"wrote {len(chains)} {kind} chain(s) to {out}, interval {interval}, "
          f"{len(exclusions)} excluded as stuck")
    return 0


# --- analyze -------------------------------------------------------------

ANALYZE_DEFAULTS = {
    "model": "", "seed": 11, "threads": 0, "out": "runs/analyze",
    "baseline_chains": 32, "baseline_sweeps": 10000,
    "tau_chains_mh": 10, "tau_chains_sim": 5, "tau_samples": 32768,
    "curve_chains": 10, "curve_sweeps": 10000, "fit_window_mult": 5.0,
}


def cmd_analyze(args: argparse.Namespace) -> int:
    eff = _effective(args, ANALYZE_DEFAULTS)
    if not eff["model"]:
        raise ValueError("--model is required")
    mhash = _manifest_hash("analyze", eff)
    out = _outdir(eff)
    model, lattice, meta = _load_model_file(eff["model"])
    threads = int(eff["threads"]) or _default_threads()
    result = analysis.analyze_model(
        model, lattice, meta["J"], model.alpha, int(eff["seed"]), threads=threads,
        baseline_chains=int(eff["baseline_chains"]), baseline_sweeps=int(eff["baseline_sweeps"]),
        tau_chains_mh=int(eff["tau_chains_mh"]), tau_chains_sim=int(eff["tau_chains_sim"]),
        tau_samples=int(eff["tau_samples"]), curve_chains=int(eff["curve_chains"]),
        curve_sweeps=int(eff["curve_sweeps"]), fit_window_mult=float(eff["fit_window_mult"]))

    stamp = _stamp(eff, mhash)
    baseline_est = EnergyEstimate(mean=result.baseline,
                                  variance=result.baseline_details["variance"],
                                  n_samples=int(eff["baseline_chains"]) * int(eff["baseline_sweeps"]),
                                  tau=None, stderr=result.baseline_stderr)
    write_estimate_json(baseline_est, out / "baseline.json", extra=stamp)
    tau_doc = {
        "n_spins": model.n,
        "alpha": model.alpha,
        "tau_mh_sweeps": result.tau_mh.tau_sweeps,
        "tau_sim_sweeps": result.tau_sim.tau_sweeps,
        "tau_mh_spread": result.tau_mh.spread,
        "tau_sim_spread": result.tau_sim.spread,
        "mh_interval": result.tau_mh.interval,
        "sim_interval": result.tau_sim.interval,
        "ratio": result.ratio,
        "per_chain": {"mh": result.tau_mh.per_chain, "sim": result.tau_sim.per_chain},
        "excluded_chains": {"mh": result.tau_mh.excluded, "sim": result.tau_sim.excluded},
        **stamp,
    }
    (out / "tau.json").write_text(json.dumps(tau_doc, sort_keys=True, indent=1) + "\n")
    write_curve_csv(result.mh_curve, out / "curve_mh.csv", extra_comments=stamp)
    write_curve_csv(result.sim_curve, out / "curve_sim.csv", extra_comments=stamp)
    write_curve_csv(result.predicted_curve, out / "curve_sim_predicted.csv",
                    extra_comments=stamp | {"fit_a": result.fit.a})
    fit_doc = {
        "a": result.fit.a, "free_slope": result.fit.free_slope,
        "residual_rms": result.fit.residual_rms, "poor_fit": result.fit.poor_fit,
        "window_points": int(result.fit.window.sum()), **stamp,
    }
    (out / "fit.json").write_text(json.dumps(fit_doc, sort_keys=True, indent=1) + "\n")
    plots.plot_curves(result.mh_curve, result.sim_curve, result.predicted_curve,
                      result.fit, out / "curves.png")
    print(f"baseline {result.baseline:.6f} +- {result.baseline_stderr:.2e}")
    print(f"tau_mh {result.tau_mh.tau_sweeps:.3f} sweeps, "
          f"tau_sim {result.tau_sim.tau_sweeps:.3f} sweeps, ratio {result.ratio:.3f}")
    print(f"fit a = {result.fit.a:.4g} (free slope {result.fit.free_slope:.3f})")
    print(f"reports in {out}")
    return 0


# --- project -------------------------------------------------------------

PROJECT_DEFAULTS = {
    "ratio": [], "tau_json": "", "profile": [], "measure_cpu": False,
    "model": "", "seed": 13, "out": "runs/project", "bench_sweeps": 2000,
}


def _parse_ratio(entries) -> dict[int, float]:
    ratios = {}
    for entry in entries:
        n_txt, _, val = str(entry).partition(":")
        if not val:
            raise ValueError(f"--ratio wants n_spins:value, got {entry!r}")
        ratios[int(n_txt)] = float(val)
    return ratios


def cmd_project(args: argparse.Namespace) -> int:
    eff = _effective(args, PROJECT_DEFAULTS)
    mhash = _manifest_hash("project", eff)
    out = _outdir(eff)
    ratios = _parse_ratio(eff["ratio"])
    if eff["tau_json"]:
        doc = json.loads(Path(eff["tau_json"]).read_text())
        ratios[int(doc["n_spins"])] = float(doc["ratio"])
    if not ratios:
        raise ValueError("no ratios given; pass --ratio n:value or --tau-json file")
    if any(r <= 0 for r in ratios.values()):
        raise ValueError("ratios must be positive")

    profiles = dict(adv.BUILTIN_PROFILES)
    for entry in eff["profile"]:
        name, _, secs = str(entry).partition(":")
        if not secs:
            raise ValueError(f"--profile wants name:seconds, got {entry!r}")
        profiles[name] = adv.HardwareProfile(name, float(secs), "user supplied")
    measured = {}
    if eff["measure_cpu"]:
        if not eff["model"]:
            raise ValueError("--measure-cpu needs --model for the benchmark")
        model, lattice, _ = _load_model_file(eff["model"])
        measured = adv.measure_cpu_profiles(model, lattice, seed=int(eff["seed"]),
                                            n_sweeps=int(eff["bench_sweeps"]))
        profiles.update(measured)

    rows = adv.projection_rows(ratios, profiles)
    sizes = sorted(ratios)
    header = ["profile", "t_sweep_seconds"] + [str(n) for n in sizes]
    csv_lines = [f"# manifest={mhash}", f"# seed={eff['seed']}", ",".join(header)]
    md_lines = ["| " + " | ".join(header) + " |",
                "|" + "|".join(["---"] * len(header)) + "|"]
    for row in rows:
        vals = [row["profile"], repr(float(row["t_sweep"]))]
        vals += [repr(float(row[n])) for n in sizes]
        csv_lines.append(",".join(vals))
        md_lines.append("| " + " | ".join(vals) + " |")
    (out / "projection.csv").write_text("\n".join(csv_lines) + "\n")
    (out / "projection.md").write_text("\n".join(md_lines) + "\n")
    plots.plot_projection(rows, out / "projection.png")

    doc = {"ratios": {str(k): v for k, v in ratios.items()}, **_stamp(eff, mhash)}
    if measured:
        mh_prof = measured["cpu_mh"]
        speedups = {}
        for name, prof in profiles.items():
            per_size = {}
            for n_spins, ratio in ratios.items():
                seconds, speedup = adv.project_runtime(ratio, prof, mh_prof)
                per_size[str(n_spins)] = {"seconds": seconds, "speedup": speedup,
                                          "advantage": adv.check_advantage(
                                              ratio, prof.t_sweep, 1.0, mh_prof.t_sweep)}
            speedups[name] = per_size
        doc["cpu_mh_t_sweep"] = mh_prof.t_sweep
        doc["cpu_sim_t_sweep"] = measured["cpu_sim"].t_sweep
        doc["speedups_vs_cpu_mh"] = speedups
    (out / "projection.json").write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n")
    print("\n".join(md_lines))
    print(f"projection table in {out}")
    return 0


# --- barrier -------------------------------------------------------------

BARRIER_DEFAULTS = {
    "models": [], "seed": 17, "samples": 32768, "threads": 0, "out": "runs/barrier",
}


def cmd_barrier(args: argparse.Namespace) -> int:
    eff = _effective(args, BARRIER_DEFAULTS)
    if not eff["models"]:
        raise ValueError("pass at least one model file")
    mhash = _manifest_hash("barrier", eff)
    out = _outdir(eff)
    threads = int(eff["threads"]) or _default_threads()
    rows = []
    csv_lines = [f"# manifest={mhash}", f"# seed={eff['seed']}",
                 barrier_mod.BARRIER_CSV_HEADER]
    for path in eff["models"]:
        model, lattice, meta = _load_model_file(path)
        model_id = Path(path).stem
        tau_sim = analysis.measure_tau_sim(model, lattice, meta["J"], model.alpha,
                                           int(eff["seed"]), n_samples=int(eff["samples"]),
                                           threads=threads)
        cfg = ChainConfig(n_sweeps=int(eff["samples"]), thermalization=200, interval=1,
                          seed=int(eff["seed"]))
        joint = run_chains("sim", model, None, cfg, 1, index_offset=300,
                           record_hidden=True)[0]
        visible_rate, hidden_rate = barrier_mod.flip_rate(joint)
        mean_b = barrier_mod.mean_visible_barrier(model, joint)
        row = {
            "n_spins": model.n, "alpha": model.alpha, "model_id": model_id,
            "mean_barrier": mean_b,
            "approx_barrier": barrier_mod.approx_barrier(model),
            "mean_connection": barrier_mod.mean_connection_strength(model),
            "visible_flip_rate": visible_rate, "hidden_flip_rate": hidden_rate,
            "log_tau_sim": float(np.log10(tau_sim.tau_sweeps)),
        }
        rows.append(row)
        csv_lines.append(barrier_mod.barrier_csv_row(
            model.n, model.alpha, model_id, mean_b, row["approx_barrier"],
            row["mean_connection"], visible_rate, hidden_rate, tau_sim.tau_sweeps))
        print(f"{model_id}: alpha {model.alpha}, mean barrier {mean_b:.4f}, "
              f"tau_sim {tau_sim.tau_sweeps:.2f} sweeps")
    (out / "barrier.csv").write_text("\n".join(csv_lines) + "\n")
    plots.plot_barrier(rows, out / "barrier.png")
    print(f"barrier report in {out}")
    return 0


# --- oracle --------------------------------------------------------------

ORACLE_DEFAULTS = {"L": 4, "ring": 0, "J": 1.0, "out": "", "seed": 0}


def cmd_oracle(args: argparse.Namespace) -> int:
    eff = _effective(args, ORACLE_DEFAULTS)
    mhash = _manifest_hash("oracle", eff)
    if int(eff["ring"]) > 0:
        n = int(eff["ring"])
        result = oracle_mod.ground_energy_from_bonds(n, oracle_mod.ring_bonds(n),
                                                     float(eff["J"]))
        label = f"ring-{n}"
    else:
        lattice = build_lattice(int(eff["L"]))
        n = lattice.n
        result = oracle_mod.exact_ground_energy(lattice, float(eff["J"]))
        label = f"{lattice.L}x{lattice.L}"
    doc = {
        "system": label,
        "n_spins": n,
        "J": float(eff["J"]),
        "ground_energy": result.ground_energy,
        "energy_per_site": result.ground_energy / n,
        "sector_dimension": result.sector_dimension,
        "residual": result.residual,
        "manifest": mhash,
    }
    text = json.dumps(doc, sort_keys=True, indent=1) + "\n"
    if eff["out"]:
        outdir = _outdir(eff)
        (outdir / "oracle.json").write_text(text)
    sys.stdout.write(text)
    return 0


# --- parser --------------------------------------------------------------


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--manifest", help="JSON manifest; flags override its values")
    sub.add_argument("--out", help="output directory")
    sub.add_argument("--seed", type=int, help="master RNG seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ising-nqs",
        description="RBM quantum states for the 2D Heisenberg antiferromagnet: "
                    "train, sample, and quantify the sampling advantage of "
                    "emulated stochastic Ising machines.")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("train", help="train model replicas with stochastic reconfiguration")
    _add_common(p)
    p.add_argument("--L", type=int, help="lattice side length (even, >= 4)")
    p.add_argument("--alpha", type=int, help="hidden density M = alpha n")
    p.add_argument("--J", type=float, help="Heisenberg coupling")
    p.add_argument("--iterations", type=int, help="SR iterations (300-600 typical)")
    p.add_argument("--preset", choices=["low", "high"], help="override the preset table")
    p.add_argument("--replicas", type=int, help="models to train (default 5)")
    p.add_argument("--eta", type=float, help="learning rate")
    p.add_argument("--threads", type=int, help="worker threads")
    p.set_defaults(func=cmd_train)

    p = subs.add_parser("sample", help="run MH or sIM chains and write chain CSVs")
    _add_common(p)
    p.add_argument("--model", help="model JSON file")
    p.add_argument("--kind", choices=["mh", "sim"], help="sampler kind")
    p.add_argument("--chains", type=int, help="chain count")
    p.add_argument("--samples", type=int, help="stored samples per chain")
    p.add_argument("--interval", type=int, help="sweeps between samples (0 = auto)")
    p.add_argument("--thermalization", type=int, help="discarded sweeps")
    p.add_argument("--record-hidden", dest="record_hidden", action="store_const",
                   const=True, help="store hidden spins too (sIM only)")
    p.add_argument("--threads", type=int, help="worker threads")
    p.set_defaults(func=cmd_sample)

    p = subs.add_parser("analyze", help="baseline, error curves, taus, and the predicted sIM curve")
    _add_common(p)
    p.add_argument("--model", help="model JSON file")
    p.add_argument("--baseline-chains", dest="baseline_chains", type=int)
    p.add_argument("--baseline-sweeps", dest="baseline_sweeps", type=int)
    p.add_argument("--tau-chains-mh", dest="tau_chains_mh", type=int)
    p.add_argument("--tau-chains-sim", dest="tau_chains_sim", type=int)
    p.add_argument("--tau-samples", dest="tau_samples", type=int)
    p.add_argument("--curve-chains", dest="curve_chains", type=int)
    p.add_argument("--curve-sweeps", dest="curve_sweeps", type=int)
    p.add_argument("--fit-window-mult", dest="fit_window_mult", type=float,
                   help="keep curve points above this multiple of baseline noise")
    p.add_argument("--threads", type=int, help="worker threads")
    p.set_defaults(func=cmd_analyze)

    p = subs.add_parser("project", help="hardware runtime projection table")
    _add_common(p)
    p.add_argument("--ratio", action="append", metavar="N:RATIO",
                   help="tau ratio for a system size; repeatable")
    p.add_argument("--tau-json", dest="tau_json", help="tau.json from analyze")
    p.add_argument("--profile", action="append", metavar="NAME:SECONDS",
                   help="extra hardware profile; repeatable")
    p.add_argument("--measure-cpu", dest="measure_cpu", action="store_const", const=True,
                   help="benchmark this machine's samplers as cpu_mh / cpu_sim rows")
    p.add_argument("--model", help="model file for the CPU benchmark")
    p.add_argument("--bench-sweeps", dest="bench_sweeps", type=int)
    p.set_defaults(func=cmd_project)

    p = subs.add_parser("barrier", help="energy-barrier diagnostics per trained model")
    _add_common(p)
    p.add_argument("models", nargs="*", help="model JSON files")
    p.add_argument("--samples", type=int, help="sweeps per diagnostic chain")
    p.add_argument("--threads", type=int, help="worker threads")
    p.set_defaults(func=cmd_barrier)

    p = subs.add_parser("oracle", help="exact reference energies for small systems")
    _add_common(p)
    p.add_argument("--L", type=int, help="square lattice side")
    p.add_argument("--ring", type=int, help="1D ring size instead of a square lattice")
    p.add_argument("--J", type=float, help="Heisenberg coupling")
    p.set_defaults(func=cmd_oracle)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, ZeroDivisionError, FileNotFoundError, KeyError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, FloatingPointError, ChainTooShortError,
            IntervalSelectionError, EnumerationSizeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except (ExclusionThresholdError, StuckChainError) as exc:
        print(f"data exclusion: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
