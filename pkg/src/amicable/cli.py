"""Command-line driver for corpus generation, training, perturbation
experiments, and reporting.

Every subcommand reads an optional JSON config file whose keys mirror the
flag names; explicit flags override the file, the file overrides built-in
defaults. Reports are CSV plus JSON with a reproducibility stanza
(effective config, its hash, seeds, version) and are bit-deterministic
given config plus seeds.

Exit codes: 0 success; 2 missing corpus/checkpoint (path in the message);
3 non-finite loss during optimization (iteration in the message); 1 other.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, datagen
from .dsp import WaveBuffer, read_wav
from .metrics import EvalReport, aggregate, sdr, di_sdr, TrackScores
from .perturb import (DEFAULT_EPSILON, DEFAULT_ITERATIONS, DEFAULT_LAMBDA,
                      DEFAULT_PATCH_LEN, LAMBDA_GRID, AdamConfig, PerturbDivergedError,
                      PerturbJob, optimize, save_perturb_result)
from .robustness import CompressionProxy, robustness_sweep
from .separator import (TrainConfig, forward, init_model, load_model, save_model,
                        train, TrainDivergedError)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_MISSING = 2
EXIT_DIVERGED = 3

DEFAULT_PROXIES = "quantize-bits:16,quantize-bits:12,quantize-bits:8,quantize-bits:4,mdct-topk:1,mdct-topk:0.5"

PERTURB_DEFAULTS = {
    "alphas": "1",
    "lam": DEFAULT_LAMBDA,
    "epsilon": DEFAULT_EPSILON,
    "iterations": DEFAULT_ITERATIONS,
    "patch_len": DEFAULT_PATCH_LEN,
    "seed": 0,
    "adam_lr": 1e-3,
    "jobs": 1,
}

DEFAULTS = {
    "gen": {"n_tracks": 10, "duration": 10.0, "base_seed": datagen.EVAL_BASE_SEED,
            "sample_rate": 8000, "jobs": 1},
    "train": {"arch": "mask-mlp", "epochs": 240, "lr": 3000.0, "batch_size": 4,
              "seed": 42, "jobs": 1},
    "perturb": dict(PERTURB_DEFAULTS),
    "mmpl": dict(PERTURB_DEFAULTS, alphas="1,-1"),
    "eval": {"jobs": 1, "perturb_dir": ""},
    "sweep-lambda": dict(PERTURB_DEFAULTS, lambdas=",".join(f"{v:g}" for v in LAMBDA_GRID)),
    "selectivity": dict(PERTURB_DEFAULTS),
    "robustness": {"proxy": DEFAULT_PROXIES, "jobs": 1},
}

log = logging.getLogger("amicable.cli")


# ---------------------------------------------------------------------------
# config plumbing


def _config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _effective_config(args: argparse.Namespace, keys: list[str]) -> dict:
    """Built-in defaults, overridden by the config file, overridden by flags."""
    file_cfg = {}
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.exists():
            raise FileNotFoundError(str(path))
        with open(path) as f:
            file_cfg = json.load(f)
    defaults = DEFAULTS[args.command]
    cfg = {}
    for key in keys:
        val = getattr(args, key, None)
        if val is None:
            val = file_cfg.get(key, defaults.get(key))
        if val is None:
            raise ValueError(f"missing required option --{key.replace('_', '-')}")
        cfg[key] = val
    return cfg


def _meta(command: str, cfg: dict) -> dict:
    # the output path is evident from the report location and would break
    # byte-identical reports across otherwise identical runs
    cfg = {k: v for k, v in cfg.items() if k != "out"}
    return {
        "command": command,
        "version": __version__,
        "config": cfg,
        "config_hash": _config_hash(cfg),
    }


def _out_dir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_models(paths: list[str]):
    return [load_model(p) for p in paths]


def _parse_floats(value) -> list[float]:
    if isinstance(value, (list, tuple)):
        return [float(v) for v in value]
    return [float(tok) for tok in str(value).split(",") if tok.strip()]


def _parse_proxies(tokens) -> list[CompressionProxy]:
    if isinstance(tokens, str):
        tokens = [t for t in tokens.split(",") if t.strip()]
    proxies = []
    for tok in tokens:
        kind, _, strength = str(tok).partition(":")
        if not strength:
            raise ValueError(f"proxy '{tok}' must look like kind:strength")
        proxies.append(CompressionProxy(kind.strip(), float(strength)))
    return proxies


def _run_tracks(worker, payloads: list, jobs: int) -> list:
    """Order-preserving map over per-track payloads, optionally parallel."""
    if jobs <= 1 or len(payloads) <= 1:
        return [worker(p) for p in payloads]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(worker, payloads))


# ---------------------------------------------------------------------------
# per-track workers (module level so they pickle for --jobs)


def _perturb_track(payload) -> dict:
    track, models, cfg, seed = payload
    job = PerturbJob(
        models=models,
        alphas=_parse_floats(cfg["alphas"]),
        lam=float(cfg["lam"]),
        epsilon=float(cfg["epsilon"]),
        iterations=int(cfg["iterations"]),
        patch_len=int(cfg["patch_len"]),
        seed=seed,
        adam=AdamConfig(lr=float(cfg["adam_lr"])),
    )
    result = optimize(job, track.mixture, track.sources)
    rows = []
    perturbed = WaveBuffer(track.mixture.samples + result.nu.samples, track.sample_rate)
    for mi, model in enumerate(models):
        base = forward(model, track.mixture)
        pert = forward(model, perturbed)
        for si, ref in enumerate(track.sources):
            s_base = sdr(ref, base[si])
            s_pert = sdr(ref, pert[si])
            rows.append({
                "track_id": track.track_id,
                "model": mi,
                "source": si + 1,
                "sdr_base_db": s_base,
                "sdr_pert_db": s_pert,
                "delta_sdr_db": s_pert - s_base,
                "di_sdr_db": result.di_sdr,
            })
    return {"track_id": track.track_id, "rows": rows, "result": result, "job": job}


def _eval_track(payload) -> list[dict]:
    track, model, nu = payload
    rows = []
    base = forward(model, track.mixture)
    if nu is None:
        for si, ref in enumerate(track.sources):
            rows.append({
                "track_id": track.track_id,
                "source": si + 1,
                "sdr_db": sdr(ref, base[si]),
            })
        return rows
    perturbed = WaveBuffer(track.mixture.samples + nu, track.sample_rate)
    pert = forward(model, perturbed)
    di = di_sdr(track.mixture.samples, nu)
    for si, ref in enumerate(track.sources):
        s_base = sdr(ref, base[si])
        s_pert = sdr(ref, pert[si])
        rows.append({
            "track_id": track.track_id,
            "source": si + 1,
            "sdr_base_db": s_base,
            "sdr_pert_db": s_pert,
            "delta_sdr_db": s_pert - s_base,
            "di_sdr_db": di,
        })
    return rows


def _robustness_track(payload) -> list[dict]:
    track, model, nu, proxies = payload
    job = PerturbJob(models=[model], alphas=[1.0], iterations=1)
    rows = robustness_sweep(job, track.mixture, track.sources,
                            WaveBuffer(nu, track.sample_rate), proxies)
    for row in rows:
        row["track_id"] = track.track_id
    return rows


# ---------------------------------------------------------------------------
# aggregation helpers


def _delta_aggregates(rows: list[dict], group_key: str | None = None) -> dict:
    """Median delta per source plus their mean, optionally per group."""
    def agg_of(subset: list[dict]) -> dict:
        sources = sorted({r["source"] for r in subset})
        med = [float(np.median([r["delta_sdr_db"] for r in subset if r["source"] == s]))
               for s in sources]
        out = {
            "delta_sdr_median_per_source_db": med,
            "delta_sdr_avg_db": float(np.mean(med)),
        }
        if "di_sdr_db" in subset[0]:
            out["di_sdr_median_db"] = float(np.median([r["di_sdr_db"] for r in subset]))
        track_means = {}
        for r in subset:
            track_means.setdefault(r["track_id"], []).append(r["delta_sdr_db"])
        per_track = [float(np.mean(v)) for _, v in sorted(track_means.items())]
        out["delta_sdr_median_over_tracks_db"] = float(np.median(per_track))
        out["tracks_improved"] = int(sum(1 for v in per_track if v > 0))
        out["n_tracks"] = len(per_track)
        return out

    if group_key is None:
        return agg_of(rows)
    groups = sorted({r[group_key] for r in rows}, key=str)
    return {str(g): agg_of([r for r in rows if r[group_key] == g]) for g in groups}


# ---------------------------------------------------------------------------
# subcommands


def cmd_gen(args) -> int:
    cfg = _effective_config(args, ["out", "n_tracks", "duration", "base_seed", "sample_rate"])
    out = _out_dir(cfg["out"])
    tracks = datagen.gen_corpus(int(cfg["n_tracks"]), int(cfg["base_seed"]),
                                float(cfg["duration"]), int(cfg["sample_rate"]))
    datagen.save_corpus(tracks, out)
    report = EvalReport(columns=["track_id", "seed", "duration_s", "peak"])
    for tr in tracks:
        report.add_row(track_id=tr.track_id, seed=tr.seed, duration_s=tr.duration,
                       peak=float(np.max(np.abs(tr.mixture.samples))))
    report.meta = _meta("gen", cfg)
    report.aggregates = {"n_tracks": len(tracks)}
    report.write_csv(out / "report.csv")
    report.write_json(out / "report.json")
    print(f"wrote corpus of {len(tracks)} tracks to {out}")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _effective_config(args, ["corpus", "out", "arch", "epochs", "lr",
                                   "batch_size", "seed"])
    tracks = datagen.load_corpus(cfg["corpus"])
    model = init_model(cfg["arch"], seed=int(cfg["seed"]),
                       sample_rate=tracks[0].sample_rate)
    tcfg = TrainConfig(epochs=int(cfg["epochs"]), learning_rate=float(cfg["lr"]),
                       batch_size=int(cfg["batch_size"]), seed=int(cfg["seed"]))
    model, curve = train(model, tracks, tcfg)
    out_path = Path(cfg["out"])
    out_path.parent.mkdir(parents=True, exist_ok=True)
    save_model(model, out_path)

    report = EvalReport(columns=["epoch", "mean_loss"])
    for i, v in enumerate(curve):
        report.add_row(epoch=i, mean_loss=float(v))
    report.meta = _meta("train", cfg)
    report.aggregates = {
        "first_loss": float(curve[0]) if curve else None,
        "final_loss": float(curve[-1]) if curve else None,
        "checkpoint": str(out_path),
    }
    report.write_csv(out_path.with_suffix(".losses.csv"))
    report.write_json(out_path.with_suffix(".report.json"))
    print(f"trained {cfg['arch']} for {cfg['epochs']} epochs -> {out_path}")
    return EXIT_OK


def _perturb_common(args, command: str) -> int:
    cfg = _effective_config(args, ["corpus", "model", "out", "alphas", "lam", "epsilon",
                                   "iterations", "patch_len", "seed", "adam_lr", "jobs"])
    model_paths = cfg["model"] if isinstance(cfg["model"], list) else [cfg["model"]]
    cfg["model"] = [str(p) for p in model_paths]
    cfg["alphas"] = _parse_floats(cfg["alphas"])
    models = _load_models(model_paths)
    if command == "mmpl" and len(models) < 2:
        raise ValueError("mmpl needs at least two --model checkpoints")
    if len(cfg["alphas"]) != len(models):
        raise ValueError(f"{len(models)} models but {len(cfg['alphas'])} alphas")
    tracks = datagen.load_corpus(cfg["corpus"])
    out = _out_dir(cfg["out"])

    payloads = [(tr, models, cfg, int(cfg["seed"]) + i) for i, tr in enumerate(tracks)]
    outcomes = _run_tracks(_perturb_track, payloads, int(cfg["jobs"]))
    outcomes.sort(key=lambda o: o["track_id"])

    rows = []
    for oc in outcomes:
        save_perturb_result(oc["result"], oc["job"], out / "nu", oc["track_id"])
        rows.extend(oc["rows"])

    report = EvalReport(columns=["track_id", "model", "source", "sdr_base_db",
                                 "sdr_pert_db", "delta_sdr_db", "di_sdr_db"])
    for row in rows:
        report.add_row(**row)
    report.meta = _meta(command, cfg)
    report.aggregates = _delta_aggregates(rows, group_key="model")
    report.write_csv(out / "report.csv")
    report.write_json(out / "report.json")
    for mi in range(len(models)):
        agg = report.aggregates[str(mi)]
        print(f"model {mi}: median dSDR {agg['delta_sdr_avg_db']:+.2f} dB "
              f"at median DI-SDR {agg['di_sdr_median_db']:.1f} dB "
              f"({agg['tracks_improved']}/{agg['n_tracks']} tracks improved)")
    return EXIT_OK


def cmd_perturb(args) -> int:
    return _perturb_common(args, "perturb")


def cmd_mmpl(args) -> int:
    return _perturb_common(args, "mmpl")


def cmd_eval(args) -> int:
    cfg = _effective_config(args, ["corpus", "model", "out", "perturb_dir", "jobs"])
    model = load_model(cfg["model"])
    tracks = datagen.load_corpus(cfg["corpus"])
    out = _out_dir(cfg["out"])

    payloads = []
    for tr in tracks:
        nu = None
        if cfg["perturb_dir"]:
            nu_path = Path(cfg["perturb_dir"]) / "nu" / f"{tr.track_id}_nu.wav"
            if not nu_path.exists():
                raise FileNotFoundError(str(nu_path))
            nu = read_wav(nu_path).samples
        payloads.append((tr, model, nu))
    results = _run_tracks(_eval_track, payloads, int(cfg["jobs"]))
    rows = [row for chunk in results for row in chunk]
    rows.sort(key=lambda r: (r["track_id"], r["source"]))

    if cfg["perturb_dir"]:
        columns = ["track_id", "source", "sdr_base_db", "sdr_pert_db",
                   "delta_sdr_db", "di_sdr_db"]
        aggregates = _delta_aggregates(rows)
    else:
        columns = ["track_id", "source", "sdr_db"]
        scores = {}
        for r in rows:
            scores.setdefault(r["track_id"], []).append(r["sdr_db"])
        aggregates = aggregate([TrackScores(tid, v) for tid, v in sorted(scores.items())])
    report = EvalReport(columns=columns)
    for row in rows:
        report.add_row(**row)
    report.meta = _meta("eval", cfg)
    report.aggregates = aggregates
    report.write_csv(out / "report.csv")
    report.write_json(out / "report.json")
    print(f"evaluated {len(tracks)} tracks -> {out}")
    return EXIT_OK


def cmd_sweep_lambda(args) -> int:
    cfg = _effective_config(args, ["corpus", "model", "out", "lambdas", "alphas",
                                   "epsilon", "iterations", "patch_len", "seed",
                                   "adam_lr", "jobs"])
    lambdas = _parse_floats(cfg["lambdas"])
    if len(lambdas) < 2:
        raise ValueError("sweep-lambda needs at least two lambda values")
    cfg["lambdas"] = lambdas
    model = load_model(cfg["model"])
    tracks = datagen.load_corpus(cfg["corpus"])
    out = _out_dir(cfg["out"])

    all_rows = []
    per_lambda = {}
    for lam in lambdas:
        run_cfg = dict(cfg, lam=lam)
        payloads = [(tr, [model], run_cfg, int(cfg["seed"]) + i)
                    for i, tr in enumerate(tracks)]
        outcomes = _run_tracks(_perturb_track, payloads, int(cfg["jobs"]))
        outcomes.sort(key=lambda o: o["track_id"])
        rows = []
        for oc in outcomes:
            for row in oc["rows"]:
                row = dict(row, lam=lam)
                row.pop("model")
                rows.append(row)
        all_rows.extend(rows)
        per_lambda[f"{lam:g}"] = _delta_aggregates(rows)

    report = EvalReport(columns=["lam", "track_id", "source", "sdr_base_db",
                                 "sdr_pert_db", "delta_sdr_db", "di_sdr_db"])
    for row in all_rows:
        report.add_row(**row)
    report.meta = _meta("sweep-lambda", cfg)
    report.aggregates = per_lambda
    report.write_csv(out / "report.csv")
    report.write_json(out / "report.json")
    for lam in lambdas:
        agg = per_lambda[f"{lam:g}"]
        print(f"lambda {lam:g}: median DI-SDR {agg['di_sdr_median_db']:.1f} dB, "
              f"median dSDR {agg['delta_sdr_avg_db']:+.2f} dB")
    return EXIT_OK


def cmd_selectivity(args) -> int:
    cfg = _effective_config(args, ["corpus", "model_a", "model_b", "out", "alphas",
                                   "lam", "epsilon", "iterations", "patch_len", "seed",
                                   "adam_lr", "jobs"])
    model_a = load_model(cfg["model_a"])
    model_b = load_model(cfg["model_b"])
    tracks = datagen.load_corpus(cfg["corpus"])
    out = _out_dir(cfg["out"])

    run_cfg = dict(cfg, model=[cfg["model_a"]])
    payloads = [(tr, [model_a], run_cfg, int(cfg["seed"]) + i)
                for i, tr in enumerate(tracks)]
    outcomes = _run_tracks(_perturb_track, payloads, int(cfg["jobs"]))
    outcomes.sort(key=lambda o: o["track_id"])

    rows = []
    track_by_id = {tr.track_id: tr for tr in tracks}
    for oc in outcomes:
        save_perturb_result(oc["result"], oc["job"], out / "nu", oc["track_id"])
        tr = track_by_id[oc["track_id"]]
        nu = oc["result"].nu.samples
        for role, chunk in (("targeted", oc["rows"]),
                            ("untargeted", _eval_track((tr, model_b, nu)))):
            for r in chunk:
                rows.append({
                    "track_id": r["track_id"],
                    "model_role": role,
                    "source": r["source"],
                    "sdr_base_db": r["sdr_base_db"],
                    "sdr_pert_db": r["sdr_pert_db"],
                    "delta_sdr_db": r["delta_sdr_db"],
                    "di_sdr_db": r["di_sdr_db"],
                })

    rows.sort(key=lambda r: (r["track_id"], r["model_role"], r["source"]))
    report = EvalReport(columns=["track_id", "model_role", "source", "sdr_base_db",
                                 "sdr_pert_db", "delta_sdr_db", "di_sdr_db"])
    for row in rows:
        report.add_row(**row)
    report.meta = _meta("selectivity", cfg)
    report.aggregates = _delta_aggregates(rows, group_key="model_role")
    report.write_csv(out / "report.csv")
    report.write_json(out / "report.json")
    for role in ("targeted", "untargeted"):
        agg = report.aggregates[role]
        print(f"{role}: median dSDR {agg['delta_sdr_avg_db']:+.2f} dB")
    return EXIT_OK


def cmd_robustness(args) -> int:
    cfg = _effective_config(args, ["corpus", "model", "perturb_dir", "out", "proxy", "jobs"])
    proxies = _parse_proxies(cfg["proxy"])
    cfg["proxy"] = [p.label() for p in proxies]
    model = load_model(cfg["model"])
    tracks = datagen.load_corpus(cfg["corpus"])
    out = _out_dir(cfg["out"])

    payloads = []
    for tr in tracks:
        nu_path = Path(cfg["perturb_dir"]) / "nu" / f"{tr.track_id}_nu.wav"
        if not nu_path.exists():
            raise FileNotFoundError(str(nu_path))
        payloads.append((tr, model, read_wav(nu_path).samples, proxies))
    results = _run_tracks(_robustness_track, payloads, int(cfg["jobs"]))
    rows = [row for chunk in results for row in chunk]
    for row in rows:
        row.pop("model_index", None)
        row["proxy"] = f"{row.pop('proxy_kind')}:{row.pop('proxy_strength'):g}"
    rows.sort(key=lambda r: (r["proxy"], r["track_id"], r["source"]))

    report = EvalReport(columns=["proxy", "track_id", "source", "sdr_base_db",
                                 "sdr_pert_db", "delta_sdr_db"])
    for row in rows:
        report.add_row(**row)
    report.meta = _meta("robustness", cfg)
    report.aggregates = _delta_aggregates(rows, group_key="proxy")
    report.write_csv(out / "report.csv")
    report.write_json(out / "report.json")
    for proxy in sorted({r["proxy"] for r in rows}):
        agg = report.aggregates[proxy]
        print(f"{proxy}: median dSDR {agg['delta_sdr_avg_db']:+.2f} dB")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags override its keys")
    p.add_argument("--out", help="output directory (or file for train)")
    p.add_argument("--jobs", type=int, help="track-level parallelism")


def _add_perturb_params(p: argparse.ArgumentParser, with_lambda: bool = True) -> None:
    p.add_argument("--alphas", help="comma-separated signed model weights")
    if with_lambda:
        p.add_argument("--lambda", dest="lam", type=float, help="regularizer weight")
    p.add_argument("--epsilon", type=float, help="uniform init noise bound")
    p.add_argument("--iterations", type=int)
    p.add_argument("--patch-len", dest="patch_len", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--adam-lr", dest="adam_lr", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="amicable",
        description="Perturbation-based separation improvement experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic corpus")
    _add_common(p)
    p.add_argument("--n-tracks", dest="n_tracks", type=int)
    p.add_argument("--duration", type=float)
    p.add_argument("--base-seed", dest="base_seed", type=int)
    p.add_argument("--sample-rate", dest="sample_rate", type=int)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", help="train a separation model")
    _add_common(p)
    p.add_argument("--corpus", help="corpus directory")
    p.add_argument("--arch", choices=("mask-mlp", "mask-linear"))
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("perturb", help="optimize perturbations on a corpus")
    _add_common(p)
    p.add_argument("--corpus")
    p.add_argument("--model", action="append", help="checkpoint path (repeatable)")
    _add_perturb_params(p)
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("mmpl", help="multi-model perturbation with signed weights")
    _add_common(p)
    p.add_argument("--corpus")
    p.add_argument("--model", action="append", help="checkpoint path (repeat >= 2)")
    _add_perturb_params(p)
    p.set_defaults(func=cmd_mmpl)

    p = sub.add_parser("eval", help="evaluate a model on a corpus")
    _add_common(p)
    p.add_argument("--corpus")
    p.add_argument("--model")
    p.add_argument("--perturb-dir", dest="perturb_dir",
                   help="perturb output dir; evaluate on its perturbed mixtures")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep-lambda", help="noise level vs improvement sweep")
    _add_common(p)
    p.add_argument("--corpus")
    p.add_argument("--model")
    p.add_argument("--lambdas", help="comma-separated lambda grid")
    _add_perturb_params(p, with_lambda=False)
    p.set_defaults(func=cmd_sweep_lambda)

    p = sub.add_parser("selectivity", help="targeted vs untargeted model deltas")
    _add_common(p)
    p.add_argument("--corpus")
    p.add_argument("--model-a", dest="model_a", help="targeted checkpoint")
    p.add_argument("--model-b", dest="model_b", help="untargeted checkpoint")
    _add_perturb_params(p)
    p.set_defaults(func=cmd_selectivity)

    p = sub.add_parser("robustness", help="compression-proxy survival sweep")
    _add_common(p)
    p.add_argument("--corpus")
    p.add_argument("--model")
    p.add_argument("--perturb-dir", dest="perturb_dir",
                   help="perturb output dir holding nu/*.wav")
    p.add_argument("--proxy", help="comma-separated kind:strength list")
    p.set_defaults(func=cmd_robustness)

    return parser


def main(argv=None) -> int:
    level = os.environ.get("AMICABLE_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: missing input: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except PerturbDivergedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except TrainDivergedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
