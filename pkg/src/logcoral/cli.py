"""Command-line entry point.

Subcommands: losses (compare two feature CSVs), gradcheck (finite-difference
validation), train (one run, metrics + checkpoint), ablate (loss-configuration
sweep). Exit codes: 0 success, 1 assertion/threshold failure, 2 usage or I/O
error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import data as D
from . import training
from .exceptions import LogCoralError, NumericalFailure, ParseError, InvalidInput
from .gradcheck import THRESHOLDS, run_gradcheck, spd_with_gaps
from .losses import LossWeights, coral_loss, logcoral_loss, mean_loss
from .stats import batch_covariance, batch_mean
from .training import RunConfig

WEIGHT_KEYS = {"cls": "classification", "classification": "classification",
               "coral": "coral", "logcoral": "logcoral", "mean": "mean"}


def parse_weights(text: str) -> LossWeights:
    """Parse 'cls=1,logcoral=1,mean=0.5' into LossWeights. Values are
    multipliers of each loss's calibrated base scale; unmentioned losses
    default to zero, except classification which defaults to 1."""
    values = {"classification": 1.0, "coral": 0.0, "logcoral": 0.0, "mean": 0.0}
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        if "=" not in item:
            raise InvalidInput(f"bad weight entry {item!r}, expected key=value")
        key, _, val = item.partition("=")
        key = key.strip().lower()
        if key not in WEIGHT_KEYS:
            raise InvalidInput(f"unknown loss weight {key!r}; valid: cls, coral, logcoral, mean")
        try:
            values[WEIGHT_KEYS[key]] = float(val)
        except ValueError:
            raise InvalidInput(f"bad weight value {val!r} for {key}")
    return LossWeights.from_multipliers(**values)


def read_config_file(path) -> dict:
    """Flat key=value file, '#' comments."""
    out = {}
    try:
        f = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot open config {path}: {exc.strerror or exc}")
    with f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ParseError(f"expected key=value, got {line!r}", line=lineno)
            key, _, val = line.partition("=")
            out[key.strip()] = val.strip()
    return out


def build_run_config(args) -> RunConfig:
    """Merge config-file values and CLI flags; flags win."""
    file_vals = read_config_file(args.config) if args.config else {}

    def pick(flag_val, key, cast):
        if flag_val is not None:
            return flag_val
        if key in file_vals:
            return cast(file_vals[key])
        return None

    kwargs = {}
    for key, cast in (("seed", int), ("steps", int), ("batch", int), ("lr", float),
                      ("epsilon", float), ("momentum", float)):
        v = pick(getattr(args, key, None), key, cast)
        if v is not None:
            kwargs[key] = v
    w = pick(getattr(args, "weights", None), "weights", str)
    if w is not None:
        kwargs["weights"] = parse_weights(w) if isinstance(w, str) else w
    for key, cast in (("num_classes", int), ("dim", int), ("samples_per_class", int),
                      ("eval_every", int)):
        if key in file_vals:
            kwargs[key] = cast(file_vals[key])
    return RunConfig(**kwargs)


def _emit(report: dict, fmt: str):
    if fmt == "json":
        print(json.dumps(report, indent=2))
    else:
        for key, val in report.items():
            print(f"{key}: {val}")


def cmd_losses(args) -> int:
    source = D.load_csv(args.source, has_labels=args.labels)
    target = D.load_csv(args.target, has_labels=args.labels)
    cov_s = batch_covariance(source)
    cov_t = batch_covariance(target)
    eps = args.epsilon if args.epsilon is not None else 0.0
    if eps <= 0:
        from .linalg import default_epsilon
        eps = max(default_epsilon(cov_s), default_epsilon(cov_t))
    report = {
        "coral": coral_loss(cov_s, cov_t).value,
        "logcoral": logcoral_loss(cov_s, cov_t, epsilon=eps).value,
        "mean": mean_loss(batch_mean(source), batch_mean(target)).value,
        "cond_source": float(np.linalg.cond(cov_s.data + eps * np.eye(cov_s.dim))),
        "cond_target": float(np.linalg.cond(cov_t.data + eps * np.eye(cov_t.dim))),
        "epsilon": eps,
    }
    fmt = "json" if (args.json or args.format == "json") else "text"
    _emit(report, fmt)
    return 0


def cmd_gradcheck(args) -> int:
    dims = tuple(int(d) for d in args.dims.split(",")) if args.dims else (2, 5, 16)
    base_seed = args.seed if args.seed is not None else 0
    result = run_gradcheck(dims=dims, seeds=range(base_seed, base_seed + args.trials),
                           corrupt_target_sign=args.corrupt_target_sign)
    report = {}
    for name, err in result.errors.items():
        status = "pass" if err <= THRESHOLDS[name] else "FAIL"
        report[name] = {"max_rel_error": err, "threshold": THRESHOLDS[name], "status": status}
        print(f"{name}: max rel error {err:.3e} (threshold {THRESHOLDS[name]:.0e}) {status}")
    if args.format == "json":
        print(json.dumps(report, indent=2))
    if not result.passed:
        out_dir = args.out or "."
        os.makedirs(out_dir, exist_ok=True)
        dump = os.path.join(out_dir, "gradcheck_failure.npz")
        arrays = {}
        for name, case in result.worst_case.items():
            if case is None or result.errors[name] <= THRESHOLDS[name]:
                continue
            seed, dim = case
            rng = np.random.default_rng(seed)
            arrays[f"{name}_cov_s"] = spd_with_gaps(dim, rng).data
            arrays[f"{name}_cov_t"] = spd_with_gaps(dim, rng).data
            arrays[f"{name}_seed"] = np.array(seed)
            arrays[f"{name}_dim"] = np.array(dim)
        np.savez(dump, **arrays)
        print(f"worst-case inputs written to {dump}", file=sys.stderr)
        return 1
    return 0


def _load_dataset(args, config: RunConfig):
    if args.source_csv or args.target_csv:
        if not (args.source_csv and args.target_csv):
            raise InvalidInput("provide both --source-csv and --target-csv, or neither")
        source = D.load_csv(args.source_csv, has_labels=True)
        target = D.load_csv(args.target_csv, has_labels=True)
        return D.DatasetPair(source=source, target=target)
    return training.default_dataset(config)


def cmd_train(args) -> int:
    config = build_run_config(args)
    out_dir = args.out or "run"
    os.makedirs(out_dir, exist_ok=True)
    metrics_path = os.path.join(out_dir, "metrics.jsonl")
    checkpoint_path = os.path.join(out_dir, "checkpoint.npz")
    dataset = _load_dataset(args, config)
    state = training.load_checkpoint(args.resume) if args.resume else None
    try:
        state, records = training.train(config, dataset, state=state,
                                        metrics_path=metrics_path,
                                        checkpoint_path=checkpoint_path)
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}; last good state saved to {checkpoint_path}",
              file=sys.stderr)
        return 1
    from .network import evaluate
    final_acc = evaluate(state.model, dataset.target)
    summary = {"steps": state.step, "final_target_acc": final_acc,
               "metrics": metrics_path, "checkpoint": checkpoint_path}
    if records:
        summary["final_losses"] = {k: v for k, v in records[-1].items() if k.startswith("loss_")}
    _emit(summary, "json" if args.format == "json" else "text")
    return 0


def cmd_ablate(args) -> int:
    config = build_run_config(args)
    n_seeds = args.seeds
    base = config.seed
    table = training.ablate(config, seeds=range(base, base + n_seeds))
    fmt = args.format or "text"
    if fmt == "json":
        print(json.dumps(table, indent=2))
    elif fmt == "csv":
        print("config,mean_acc,std_acc,n_seeds,n_failed")
        for name, row in table.items():
            print(f"{name},{row['mean']:.4f},{row['std']:.4f},{len(row['accs'])},{len(row['failed'])}")
    else:
        width = max(len(n) for n in table)
        for name, row in table.items():
            marker = f"  ({len(row['failed'])} failed)" if row["failed"] else ""
            print(f"{name:<{width}}  {row['mean']*100:6.2f} +/- {row['std']*100:.2f}{marker}")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "ablation.json"), "w", encoding="utf-8") as f:
            json.dump(table, f, indent=2)
    return 0


def _add_common(p):
    p.add_argument("--config", help="flat key=value config file; flags override it")
    p.add_argument("--seed", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--batch", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--weights",
                   help="per-loss multipliers of the calibrated base scales, e.g. cls=1,logcoral=1,mean=1")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--momentum", type=float)
    p.add_argument("--format", choices=["text", "json", "csv"], default="text")
    p.add_argument("--out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="logcoral",
                                     description="Covariance-alignment losses and a small adaptation trainer")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("losses", help="compute alignment losses between two feature CSVs")
    p.add_argument("source")
    p.add_argument("target")
    p.add_argument("--labels", action="store_true", help="last CSV column is an integer label")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    _add_common(p)
    p.set_defaults(func=cmd_losses)

    p = sub.add_parser("gradcheck", help="finite-difference check of all analytic gradients")
    p.add_argument("--dims", help="comma-separated matrix sizes (default 2,5,16)")
    p.add_argument("--trials", type=int, default=20, help="random seeds per size")
    p.add_argument("--corrupt-target-sign", action="store_true", help=argparse.SUPPRESS)
    _add_common(p)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("train", help="train the classifier with alignment losses")
    p.add_argument("--source-csv", help="labeled source features (last column label)")
    p.add_argument("--target-csv", help="target features (labels used only for eval)")
    p.add_argument("--resume", help="checkpoint to continue from")
    _add_common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("ablate", help="sweep loss configurations over seeds")
    p.add_argument("--seeds", type=int, default=5, help="number of seeds")
    _add_common(p)
    p.set_defaults(func=cmd_ablate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except InvalidInput as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except LogCoralError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
