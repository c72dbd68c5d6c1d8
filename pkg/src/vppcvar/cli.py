"""Command-line front end: ``vppcvar {generate,train,evaluate,sweep}``.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 solver error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
import warnings
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .benchmarks import NeighborIndex, sto_opt_decide, train_qua_e, train_val_n
from .cost_surface import build_surface, surface_plot_data, write_surface_csv
from .cvar_trainer import TrainConfig, load_model, save_model, train, trained_metadata
from .data_io import (
    RunConfig,
    build_lag_features,
    generate_raw_series,
    generate_synthetic,
    load_csv,
    load_raw_csv,
    load_run_config,
    save_csv,
    save_raw_csv,
    split_dataset,
)
from .errors import ConfigError, MissingArtifact, NonConvergence, VppError
from .evaluation import evaluate, evaluate_forecasts, reduction_percent, write_report_csv, write_trace_csv
from .merit_dispatch import reference_fleet, load_fleet, save_fleet

log = logging.getLogger("vppcvar")

MODEL_FILES = {"proposed": "model_proposed.csv", "qua_e": "model_qua_e.csv", "val_n": "model_val_n.csv"}


# ---------------------------------------------------------------------------
# shared plumbing


class Run:
    """Resolved configuration plus the manifest being accumulated."""

    def __init__(self, args, command: str):
        cfg = load_run_config(args.config) if args.config else RunConfig()
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if getattr(args, "beta", None) is not None:
            overrides["beta"] = args.beta
        if getattr(args, "backend", None) is not None:
            overrides["backend"] = args.backend
        self.cfg = replace(cfg, **overrides).validate()
        self.out = Path(args.out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.command = command
        self.fleet = load_fleet(self.cfg.fleet) if self.cfg.fleet else reference_fleet()
        self.surface = build_surface(self.fleet)
        self.timings: dict[str, float] = {}
        self.outputs: list[str] = []

    def path(self, name: str) -> Path:
        p = self.out / name
        self.outputs.append(str(p))
        return p

    def timed(self, label: str):
        run = self

        class _Timer:
            def __enter__(self):
                self.t0 = time.perf_counter()

            def __exit__(self, *exc):
                run.timings[label] = time.perf_counter() - self.t0
                log.info("%s: %.2f s", label, run.timings[label])

        return _Timer()

    def train_config(self, beta: float) -> TrainConfig:
        backend = "subgradient" if self.cfg.backend == "subgrad" else "exact"
        return TrainConfig(beta=beta, backend=backend, iterations=self.cfg.iterations)

    def dataset(self):
        cfg = self.cfg
        if cfg.data:
            ds = load_csv(cfg.data)
        elif cfg.raw:
            ds = build_lag_features(load_raw_csv(cfg.raw))
        else:
            ds = generate_synthetic(cfg.seed, cfg.days, cfg.slots, self.fleet, cfg.noise)
        return split_dataset(ds, cfg.split)

    def write_manifest(self) -> Path:
        path = self.out / "manifest.json"
        manifest = {}
        if path.exists():
            try:
                manifest = json.loads(path.read_text())
            except json.JSONDecodeError:
                manifest = {}
        manifest.update(
            {
                "version": __version__,
                "config": self.cfg.to_dict(),
                "seed": self.cfg.seed,
                "fleet_digest": self.fleet.digest(),
            }
        )
        manifest.setdefault("runs", {})[self.command] = {
            "timings": self.timings,
            "outputs": sorted(set(self.outputs)),
        }
        path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        return path


def _load_models(run: Run):
    models = {}
    for name, fname in MODEL_FILES.items():
        p = run.out / fname
        if not p.exists():
            raise MissingArtifact(f"{p} not found; run 'vppcvar train' first")
        models[name], _ = load_model(p)
    return models


def _sto_opt(run: Run, train_ds, test_ds, beta: float, index=None) -> np.ndarray:
    index = index or NeighborIndex(train_ds)
    sets = index.query_many(test_ds.X, run.cfg.k)
    return np.array([sto_opt_decide(run.surface, s, beta)[0] for s in sets])


# ---------------------------------------------------------------------------
# commands


def cmd_generate(run: Run) -> int:
    cfg = run.cfg
    with run.timed("generate"):
        raw = generate_raw_series(cfg.seed, cfg.days + 3, cfg.slots, run.fleet, cfg.noise)
        ds = build_lag_features(raw)
    save_raw_csv(raw, run.path("raw.csv"))
    save_csv(ds, run.path("dataset.csv"))
    save_fleet(run.fleet, run.path("fleet.toml"))
    log.info("wrote %d samples (%d days x %d slots)", len(ds), ds.days.size, ds.slots_per_day)
    return 0


def cmd_train(run: Run) -> int:
    train_ds, _ = run.dataset()
    beta = run.cfg.beta
    with run.timed("train_proposed"):
        proposed = train(train_ds, run.surface, run.train_config(beta))
    with run.timed("train_qua_e"):
        qua_e = train_qua_e(train_ds)
    with run.timed("train_val_n"):
        val_n = train_val_n(train_ds, run.surface, run.train_config(0.0))
    seed = run.cfg.seed
    save_model(proposed.model, run.path(MODEL_FILES["proposed"]), trained_metadata(proposed, seed=seed))
    save_model(qua_e, run.path(MODEL_FILES["qua_e"]), {"method": "qua_e", "seed": seed})
    save_model(val_n.model, run.path(MODEL_FILES["val_n"]), trained_metadata(val_n, seed=seed))
    log.info("proposed objective %.4f, val_n objective %.4f", proposed.objective, val_n.objective)
    return 0


def cmd_evaluate(run: Run, plot_surface: bool = False, profile: bool = False, surface_y: float | None = None) -> int:
    models = _load_models(run)
    train_ds, test_ds = run.dataset()
    beta = run.cfg.beta
    forecasts = {name: m.predict(test_ds.X) for name, m in models.items()}
    with run.timed("sto_opt"):
        forecasts["sto_opt"] = _sto_opt(run, train_ds, test_ds, beta)
    reports = [evaluate_forecasts(yh, test_ds.y, run.fleet, beta, name) for name, yh in forecasts.items()]
    for r in reports:
        log.info("%-8s rmse %.3f  avg cost %.3f  avg high cost %.3f", r.method, r.rmse, r.avg_cost, r.avg_high_cost)
    write_report_csv(reports, run.path("metrics.csv"))
    _sweep(run, train_ds, test_ds, models["val_n"], models["qua_e"])
    if profile:
        write_trace_csv(run.path("profile.csv"), test_ds, forecasts, run.fleet)
    if plot_surface:
        _write_surface(run, surface_y)
    return 0


def cmd_sweep(run: Run) -> int:
    train_ds, test_ds = run.dataset()
    with run.timed("train_val_n"):
        val_n = train_val_n(train_ds, run.surface, run.train_config(0.0)).model
    qua_e = train_qua_e(train_ds)
    _sweep(run, train_ds, test_ds, val_n, qua_e)
    return 0


def _sweep(run: Run, train_ds, test_ds, val_n, qua_e) -> None:
    """Average high cost of the proposed model, retrained per beta, against Val-N and Qua-E."""
    rows = []
    for beta in run.cfg.sweep_betas:
        with run.timed(f"sweep_train_beta_{beta}"):
            proposed = train(train_ds, run.surface, run.train_config(beta)).model
        rp = evaluate(proposed, test_ds, run.fleet, beta, "proposed")
        rv = evaluate(val_n, test_ds, run.fleet, beta, "val_n")
        rq = evaluate(qua_e, test_ds, run.fleet, beta, "qua_e")
        rows.append((beta, rp, rv, rq))
    with open(run.path("sweep.csv"), "w") as fh:
        fh.write("beta,proposed_avg_high_cost,val_n_avg_high_cost,qua_e_avg_high_cost,reduction_vs_val_n_pct\n")
        for beta, rp, rv, rq in rows:
            red = reduction_percent(rp.avg_high_cost, rv.avg_high_cost)
            fh.write(f"{beta!r},{rp.avg_high_cost!r},{rv.avg_high_cost!r},{rq.avg_high_cost!r},{red!r}\n")
            log.info("beta %.2f: proposed %.3f  val_n %.3f  reduction %.2f%%", beta, rp.avg_high_cost, rv.avg_high_cost, red)


def _write_surface(run: Run, y: float | None) -> None:
    y = 0.75 * run.fleet.da_total if y is None else y
    write_surface_csv(run.surface, run.path("surface_segments.csv"))
    data = surface_plot_data(run.surface, y)
    with open(run.path("surface_plot.csv"), "w") as fh:
        fh.write(f"# y: {y!r}\ny_hat,cost\n")
        for yh, c in data:
            fh.write(f"{yh!r},{c!r}\n")


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML run configuration")
    common.add_argument("--seed", type=int, help="override the configured seed")
    common.add_argument("--out", default="runs/default", help="output directory (default: %(default)s)")
    common.add_argument("-v", "--verbose", action="store_true")

    training = argparse.ArgumentParser(add_help=False)
    training.add_argument("--beta", type=float, help="risk level in [0, 1)")
    training.add_argument("--backend", choices=("exact", "subgrad"))

    parser = argparse.ArgumentParser(prog="vppcvar", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("generate", parents=[common], help="write a synthetic dataset")
    sub.add_parser("train", parents=[common, training], help="train proposed, Qua-E and Val-N models")
    ev = sub.add_parser("evaluate", parents=[common, training], help="score trained models and Sto-OPT")
    ev.add_argument("--plot-surface", action="store_true", help="also write (y_hat, cost) samples of the cost surface")
    ev.add_argument("--surface-y", type=float, help="realization used by --plot-surface (default: 0.75 x DA capacity)")
    ev.add_argument("--profile", action="store_true", help="also write per-sample forecast traces")
    sub.add_parser("sweep", parents=[common, training], help="average high cost across the configured betas")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("always", NonConvergence)
            run = Run(args, args.command)
            if args.command == "generate":
                code = cmd_generate(run)
            elif args.command == "train":
                code = cmd_train(run)
            elif args.command == "evaluate":
                code = cmd_evaluate(run, args.plot_surface, args.profile, args.surface_y)
            else:
                code = cmd_sweep(run)
            run.write_manifest()
            return code
    except VppError as exc:
        print(f"vppcvar: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
