"""Train every method on the default synthetic run and print the comparison table.

    python scripts/run_comparison.py [--config configs/default.toml] [--csv out.csv]
"""

import argparse
import time
from pathlib import Path

from vppcvar.benchmarks import sto_opt_forecasts, train_qua_e, train_val_n
from vppcvar.cost_surface import build_surface
from vppcvar.cvar_trainer import TrainConfig, train
from vppcvar.data_io import generate_synthetic, load_run_config, split_dataset
from vppcvar.evaluation import evaluate_forecasts, write_report_csv
from vppcvar.merit_dispatch import load_fleet

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=ROOT / "configs" / "default.toml")
    ap.add_argument("--csv", help="also write the table as CSV")
    args = ap.parse_args()

    cfg = load_run_config(args.config).validate()
    fleet = load_fleet(cfg.fleet)
    surface = build_surface(fleet)
    train_ds, test_ds = split_dataset(generate_synthetic(cfg.seed, cfg.days, cfg.slots, fleet, cfg.noise), cfg.split)

    timings, forecasts = {}, {}
    t = time.perf_counter()
    forecasts["proposed"] = train(train_ds, surface, TrainConfig(beta=cfg.beta, backend=cfg.backend, iterations=cfg.iterations)).model.predict(test_ds.X)
    timings["proposed"] = time.perf_counter() - t
    t = time.perf_counter()
    forecasts["qua_e"] = train_qua_e(train_ds).predict(test_ds.X)
    timings["qua_e"] = time.perf_counter() - t
    t = time.perf_counter()
    forecasts["val_n"] = train_val_n(train_ds, surface).model.predict(test_ds.X)
    timings["val_n"] = time.perf_counter() - t
    t = time.perf_counter()
    forecasts["sto_opt"] = sto_opt_forecasts(surface, train_ds, test_ds, cfg.beta, cfg.k)
    timings["sto_opt"] = time.perf_counter() - t

    reports = [evaluate_forecasts(yh, test_ds.y, fleet, cfg.beta, m) for m, yh in forecasts.items()]
    print(f"train {len(train_ds)} / test {len(test_ds)} samples, beta = {cfg.beta}")
    print(f"{'method':<10}{'RMSE kW':>10}{'avg cost $':>14}{'avg high cost $':>18}{'mean y_hat':>12}{'time s':>9}")
    for r in reports:
        mean = forecasts[r.method].mean()
        print(f"{r.method:<10}{r.rmse:>10.3f}{r.avg_cost:>14.2f}{r.avg_high_cost:>18.2f}{mean:>12.2f}{timings[r.method]:>9.2f}")
    if args.csv:
        write_report_csv(reports, args.csv, extra={"seconds": [timings[r.method] for r in reports]})


if __name__ == "__main__":
    main()
