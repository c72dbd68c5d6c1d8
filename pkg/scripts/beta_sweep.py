"""Average high cost of the proposed model versus Val-N and Qua-E across risk levels.

    python scripts/beta_sweep.py [--config configs/default.toml] [--betas 0.1 0.3 0.5 0.7 0.9]
"""

import argparse
from pathlib import Path

from vppcvar.benchmarks import train_qua_e, train_val_n
from vppcvar.cost_surface import build_surface
from vppcvar.cvar_trainer import TrainConfig, train
from vppcvar.data_io import generate_synthetic, load_run_config, split_dataset
from vppcvar.evaluation import evaluate, reduction_percent
from vppcvar.merit_dispatch import load_fleet

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=ROOT / "configs" / "default.toml")
    ap.add_argument("--betas", type=float, nargs="+")
    args = ap.parse_args()

    cfg = load_run_config(args.config).validate()
    fleet = load_fleet(cfg.fleet)
    surface = build_surface(fleet)
    train_ds, test_ds = split_dataset(generate_synthetic(cfg.seed, cfg.days, cfg.slots, fleet, cfg.noise), cfg.split)
    val_n = train_val_n(train_ds, surface).model
    qua_e = train_qua_e(train_ds)

    print(f"{'beta':>5}{'proposed':>12}{'Val-N':>12}{'Qua-E':>12}{'vs Val-N %':>12}{'vs Qua-E %':>12}")
    for beta in args.betas or cfg.sweep_betas:
        model = train(train_ds, surface, TrainConfig(beta=beta, backend=cfg.backend, iterations=cfg.iterations)).model
        p = evaluate(model, test_ds, fleet, beta).avg_high_cost
        v = evaluate(val_n, test_ds, fleet, beta).avg_high_cost
        q = evaluate(qua_e, test_ds, fleet, beta).avg_high_cost
        print(f"{beta:>5.2f}{p:>12.2f}{v:>12.2f}{q:>12.2f}{reduction_percent(p, v):>12.2f}{reduction_percent(p, q):>12.2f}")


if __name__ == "__main__":
    main()
