"""Command-line front end: train | prune | bound | experiment.

Every command reads an optional JSON config (--config); explicit flags
override config fields. Exit codes: 0 success, 1 module error, 2 usage or
missing-file error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .bounds import BoundInput, bound_report, layer_stats
from .data import ScalerParams, apply_scaler, load_csv, split, standardize
from .experiment import ExperimentConfig, run_experiment, format_table, write_outputs
from .network import activation, load_weights, save_weights
from .pruning import AbpL, AbpM, prune_abp, prune_baseline, save_records_csv, save_report
from .solvers import LassoConfig
from .training import TrainingDivergedError, train

__all__ = ["main", "entry", "build_parser"]


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    with open(path, encoding="utf-8") as fh:
        try:
            cfg = json.load(fh)
        except json.JSONDecodeError as e:
            raise ValueError(f"{path}: invalid JSON config: {e}") from None
    if not isinstance(cfg, dict):
        raise ValueError(f"{path}: config must be a JSON object")
    return cfg


def _merged_experiment_config(args) -> ExperimentConfig:
    cfg_dict = _load_config(args.config)
    overrides = {
        "data_path": args.data,
        "target_column": args.target,
        "output_dir": args.out,
        "replications": getattr(args, "replications", None),
        "activation": getattr(args, "activation", None),
    }
    if getattr(args, "hidden_dims", None):
        overrides["hidden_dims"] = tuple(int(v) for v in args.hidden_dims.split(","))
    if getattr(args, "fractions", None):
        overrides["fractions"] = tuple(float(v) for v in args.fractions.split(","))
    if getattr(args, "split_seed", None) is not None:
        overrides["split_seed"] = args.split_seed
    if getattr(args, "standardize_targets", False):
        overrides["standardize_targets"] = True
    if getattr(args, "prune_rows", None) is not None:
        overrides["prune_rows"] = args.prune_rows
    cfg_dict.update({k: v for k, v in overrides.items() if v is not None})
    train_over = {
        "epochs": getattr(args, "epochs", None),
        "batch_size": getattr(args, "batch_size", None),
        "learning_rate": getattr(args, "learning_rate", None),
        "seed": getattr(args, "seed", None),
        "optimizer": getattr(args, "optimizer", None),
        "momentum": getattr(args, "momentum", None),
    }
    train_dict = dict(cfg_dict.get("train", {}))
    train_dict.update({k: v for k, v in train_over.items() if v is not None})
    if train_dict:
        cfg_dict["train"] = train_dict
    return ExperimentConfig.from_dict(cfg_dict)


def cmd_train(args) -> int:
    cfg = _merged_experiment_config(args)
    dataset = load_csv(cfg.data_path, cfg.target_column)
    train_set, val_set, _ = split(dataset, cfg.fractions, cfg.split_seed)
    train_std, scaler = standardize(train_set)
    val_std = apply_scaler(val_set, scaler)
    scaler_payload = scaler.to_dict()
    scaler_payload["target_mean"] = None
    scaler_payload["target_std"] = None
    if cfg.standardize_targets:
        mu = float(train_std.targets.mean())
        sd = float(train_std.targets.std()) or 1.0
        train_std.targets = (train_std.targets - mu) / sd
        val_std.targets = (val_std.targets - mu) / sd
        scaler_payload["target_mean"] = mu
        scaler_payload["target_std"] = sd
    arch = [dataset.n_features, *cfg.hidden_dims, 1]
    net, history = train(arch, activation(cfg.activation), train_std, cfg.train, val_data=val_std)
    outdir = Path(cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    save_weights(net, outdir / "weights.json")
    with open(outdir / "scaler.json", "w", encoding="utf-8") as fh:
        json.dump(scaler_payload, fh)
        fh.write("\n")
    with open(outdir / "training_log.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "train_mse", "val_mse"])
        for h in history:
            writer.writerow([h["epoch"], repr(h["train_mse"]), repr(h["val_mse"])])
    with open(outdir / "config.json", "w", encoding="utf-8") as fh:
        json.dump(cfg.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {outdir / 'weights.json'} (final train MSE {history[-1]['train_mse']:.6g})")
    return 0


def _load_pruning_data(args):
    dataset = load_csv(args.data, args.target)
    if args.scaler:
        with open(args.scaler, encoding="utf-8") as fh:
            payload = json.load(fh)
        dataset = apply_scaler(dataset, ScalerParams.from_dict(payload))
        if payload.get("target_mean") is not None:
            dataset.targets = (dataset.targets - payload["target_mean"]) / payload["target_std"]
    return dataset


def cmd_prune(args) -> int:
    net = load_weights(args.weights)
    dataset = _load_pruning_data(args)
    if args.abp_m:
        strategy = AbpM(args.q, args.eta)
    elif args.abp_l:
        strategy = AbpL(
            LassoConfig(
                lam=args.lam,
                tol=args.tol,
                max_iter=args.max_iter,
                penalize_constant=args.penalize_constant,
            )
        )
    else:
        strategy = None
    if strategy is None:
        pruned, report = prune_baseline(net, args.p)
    else:
        pruned, report = prune_abp(net, dataset, strategy, rows=args.rows, seed=args.seed)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    save_weights(pruned, outdir / "pruned_weights.json")
    save_report(report, outdir / "prune_report.json")
    if args.records_csv:
        save_records_csv(report, args.records_csv)
    print(
        f"kept {report.kept_params}/{report.total_params} weights "
        f"(compression {report.network_compression_ratio:.3g}, "
        f"pruning ratio {report.network_pruning_ratio:.3g})"
    )
    return 0


def cmd_bound(args) -> int:
    q = [float(v) for v in args.q.split(",")]
    if any(not 0.0 < v <= 1.0 for v in q):
        print(f"usage error: --q values must lie in (0, 1], got {args.q}", file=sys.stderr)
        return 2
    net = load_weights(args.weights)
    dataset = _load_pruning_data(args)
    length = net.n_layers
    q = q * length if len(q) == 1 else q
    m = [float(v) for v in args.m.split(",")]
    m = m * length if len(m) == 1 else m
    rho = args.rho if args.rho is not None else net.activation.lipschitz
    stats = layer_stats(net, dataset, q, surviving_only=args.t_scope == "surviving")
    inp = BoundInput(stats, m, args.steps, rho, c=args.C, base_error=args.base_error)
    report = bound_report(inp, variant=args.variant)
    text = json.dumps(report, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    print(text)
    return 0


def cmd_experiment(args) -> int:
    cfg = _merged_experiment_config(args)
    result = run_experiment(cfg)
    paths = write_outputs(cfg, result, cfg.output_dir)
    print(format_table(result.summary))
    print(f"wrote {paths['results']}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="abprune", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common_data(p):
        p.add_argument("--config", help="JSON config file; flags override its fields")
        p.add_argument("--data", help="CSV dataset path")
        p.add_argument("--target", help="target column name")
        p.add_argument("--out", help="output directory")

    p_train = sub.add_parser("train", help="train a dense network and save weights")
    add_common_data(p_train)
    p_train.add_argument("--hidden-dims", help="comma list, e.g. 64,64,64")
    p_train.add_argument("--activation", choices=["relu", "tanh", "sigmoid", "identity"])
    p_train.add_argument("--fractions", help="train,val,test fractions, e.g. 0.8,0.1,0.1")
    p_train.add_argument("--split-seed", type=int)
    p_train.add_argument("--epochs", type=int)
    p_train.add_argument("--batch-size", type=int)
    p_train.add_argument("--learning-rate", type=float)
    p_train.add_argument("--optimizer", choices=["sgd", "sgd_momentum"])
    p_train.add_argument("--momentum", type=float)
    p_train.add_argument("--seed", type=int)
    p_train.add_argument("--standardize-targets", action="store_true")
    p_train.set_defaults(func=cmd_train)

    p_prune = sub.add_parser("prune", help="prune saved weights against a dataset")
    p_prune.add_argument("--weights", required=True)
    p_prune.add_argument("--data", required=True)
    p_prune.add_argument("--target", required=True)
    p_prune.add_argument("--scaler", help="scaler.json from training; applied to the data")
    group = p_prune.add_mutually_exclusive_group(required=True)
    group.add_argument("--abp-m", action="store_true", help="adaptive magnitude strategy")
    group.add_argument("--abp-l", action="store_true", help="LASSO strategy")
    group.add_argument("--baseline", action="store_true", help="fixed-proportion magnitude baseline")
    p_prune.add_argument("--q", type=float, default=0.5)
    p_prune.add_argument("--eta", type=float, default=0.0)
    p_prune.add_argument("--lambda", dest="lam", type=float, default=1e-4)
    p_prune.add_argument("--tol", type=float, default=1e-8)
    p_prune.add_argument("--max-iter", type=int, default=10000)
    p_prune.add_argument("--penalize-constant", action="store_true")
    p_prune.add_argument("--p", type=float, default=0.5)
    p_prune.add_argument("--rows", type=int, help="subsample this many trace rows")
    p_prune.add_argument("--seed", type=int, default=0)
    p_prune.add_argument("--out", default="out")
    p_prune.add_argument("--records-csv", help="also write per-neuron records to this CSV")
    p_prune.set_defaults(func=cmd_prune)

    p_bound = sub.add_parser("bound", help="evaluate the layered error bounds")
    p_bound.add_argument("--weights", required=True)
    p_bound.add_argument("--data", required=True)
    p_bound.add_argument("--target", required=True)
    p_bound.add_argument("--scaler")
    p_bound.add_argument("--variant", choices=["general", "magnitude"], default="general")
    p_bound.add_argument("--steps", "--S", dest="steps", type=int, default=1)
    p_bound.add_argument("--q", default="0.5", help="scalar or comma list per layer")
    p_bound.add_argument("--m", required=True, help="kept count, scalar or comma list per layer")
    p_bound.add_argument("--C", type=float, default=1.0)
    p_bound.add_argument("--rho", type=float, help="defaults to the activation's Lipschitz constant")
    p_bound.add_argument("--base-error", type=float, default=0.0)
    p_bound.add_argument("--t-scope", choices=["all", "surviving"], default="all")
    p_bound.add_argument("--out", help="write the JSON report here as well as stdout")
    p_bound.set_defaults(func=cmd_bound)

    p_exp = sub.add_parser("experiment", help="replicated train/prune/evaluate sweep")
    add_common_data(p_exp)
    p_exp.add_argument("--replications", type=int)
    p_exp.add_argument("--prune-rows", type=int)
    p_exp.add_argument("--standardize-targets", action="store_true")
    p_exp.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (ValueError, TrainingDivergedError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
