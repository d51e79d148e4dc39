"""Command-line entry point.

Subcommands: gen | train | classify | filter | sweep. Reports are JSON on
stdout or at --out; when --out is set, tabular results also land next to it
as CSV together with a rendered PNG (disable with --no-figures). Exit codes:
0 success, 1 usage error, 2 data error, 3 numeric divergence.

Flag values win over --config file entries, which win over built-in
defaults. All randomness flows from --seed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from .errors import DivergenceError, EngineError
from .filtering import FilterPolicy, filter_candidates, read_embeddings, sweep_threshold, write_embeddings
from .model import (
    DEFAULT_HIDDEN_DIM,
    ModelConfig,
    TrainOptions,
    init_model,
    load_model,
    save_model,
    train,
)
from .synth import BenchmarkConfig, gen_benchmark, gen_embedding_clusters
from .trajectory import (
    JOINT_PRESETS,
    JointSet,
    encode_frames,
    normalize,
    read_trajectories,
    select_joints,
    write_atomic,
    write_trajectories,
)
from .voting import evaluate
from .windows import WindowParams, extract_windows, plan_windows
from .errors import TrajectoryTooShort


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit 2; usage errors are 1
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(1)


# Built-in defaults per subcommand; parser defaults are SUPPRESS so a merged
# view can tell explicit flags apart from config-file entries.
DEFAULTS = {
    "gen": {
        "kind": "trajectories",
        "out_dir": ".",
        "train_count": 300,
        "test_count": 100,
        "classes": 3,
        "alpha_min": 60,
        "alpha_max": 140,
        "joints": 18,
        "sigma": 0.02,
        "dim": 32,
        "separation": 3.0,
        "in_count": 500,
        "out_count": 500,
        "templates": 10,
        "seed": 0,
    },
    "train": {
        "window_size": 16,
        "step": 1,
        "joints": None,
        "normalize": "none",
        "hidden": DEFAULT_HIDDEN_DIM,
        "epochs": TrainOptions.epochs,
        "lr": TrainOptions.learning_rate,
        "batch_size": TrainOptions.batch_size,
        "no_window": False,
        "seed": 0,
        "figures": True,
    },
    "classify": {
        "out": None,
        "window_size": None,
        "step": None,
        "joints": None,
        "normalize": None,
        "no_window": False,
        "figures": True,
    },
    "filter": {
        "out": None,
        "threshold": FilterPolicy.threshold,
        "aggregation": FilterPolicy.aggregation,
        "sweep_taus": None,
        "positive_label": "in",
        "figures": True,
    },
    "sweep": {
        "window_sizes": "4,8,16",
        "steps": "1,2,4",
        "joints": None,
        "normalize": "none",
        "hidden": DEFAULT_HIDDEN_DIM,
        "epochs": TrainOptions.epochs,
        "lr": TrainOptions.learning_rate,
        "batch_size": TrainOptions.batch_size,
        "train_limit": None,
        "test_limit": None,
        "out": None,
        "seed": 0,
        "figures": True,
    },
}


def build_parser() -> _Parser:
    parser = _Parser(prog="skelwin", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    S = argparse.SUPPRESS

    p = sub.add_parser("gen", help="generate synthetic trajectory/embedding datasets")
    p.add_argument("--kind", choices=["trajectories", "embeddings", "both"], default=S)
    p.add_argument("--out-dir", default=S)
    p.add_argument("--train-count", type=int, default=S)
    p.add_argument("--test-count", type=int, default=S)
    p.add_argument("--classes", type=int, default=S, help="number of gesture classes (2 or 3)")
    p.add_argument("--alpha-min", type=int, default=S)
    p.add_argument("--alpha-max", type=int, default=S)
    p.add_argument("--joints", type=int, default=S)
    p.add_argument("--sigma", type=float, default=S)
    p.add_argument("--dim", type=int, default=S, help="embedding dimension")
    p.add_argument("--separation", type=float, default=S)
    p.add_argument("--in-count", type=int, default=S)
    p.add_argument("--out-count", type=int, default=S)
    p.add_argument("--templates", type=int, default=S)
    p.add_argument("--seed", type=int, default=S)
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", help="train a window classifier on a trajectory file")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--window-size", type=int, default=S)
    p.add_argument("--step", type=int, default=S)
    p.add_argument("--joints", default=S, help="preset name or comma-separated indices")
    p.add_argument("--normalize", choices=["none", "anchor_scale"], default=S)
    p.add_argument("--no-window", action="store_true", default=S,
                   help="train on whole sequences instead of windows")
    p.add_argument("--hidden", type=int, default=S)
    p.add_argument("--epochs", type=int, default=S)
    p.add_argument("--lr", type=float, default=S)
    p.add_argument("--batch-size", type=int, default=S)
    p.add_argument("--seed", type=int, default=S)
    p.add_argument("--no-figures", dest="figures", action="store_false", default=S)
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("classify", help="evaluate a checkpoint on a labeled trajectory file")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", default=S)
    p.add_argument("--window-size", type=int, default=S)
    p.add_argument("--step", type=int, default=S)
    p.add_argument("--joints", default=S)
    p.add_argument("--normalize", choices=["none", "anchor_scale"], default=S)
    p.add_argument("--no-window", action="store_true", default=S)
    p.add_argument("--no-figures", dest="figures", action="store_false", default=S)
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("filter", help="filter candidate embeddings against templates")
    p.add_argument("--templates", required=True)
    p.add_argument("--candidates", required=True)
    p.add_argument("--out", default=S)
    p.add_argument("--threshold", type=float, default=S)
    p.add_argument("--aggregation", choices=["max", "mean"], default=S)
    p.add_argument("--sweep-taus", default=S,
                   help="comma-separated thresholds for a precision/recall sweep")
    p.add_argument("--positive-label", default=S)
    p.add_argument("--no-figures", dest="figures", action="store_false", default=S)
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("sweep", help="train/evaluate over a window-size x step grid")
    p.add_argument("--data", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--window-sizes", default=S)
    p.add_argument("--steps", default=S)
    p.add_argument("--joints", default=S)
    p.add_argument("--normalize", choices=["none", "anchor_scale"], default=S)
    p.add_argument("--hidden", type=int, default=S)
    p.add_argument("--epochs", type=int, default=S)
    p.add_argument("--lr", type=float, default=S)
    p.add_argument("--batch-size", type=int, default=S)
    p.add_argument("--train-limit", type=int, default=S)
    p.add_argument("--test-limit", type=int, default=S)
    p.add_argument("--out", default=S)
    p.add_argument("--seed", type=int, default=S)
    p.add_argument("--no-figures", dest="figures", action="store_false", default=S)
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_sweep)

    return parser


def merge_config(args: argparse.Namespace) -> dict:
    """defaults < config file < explicit flags."""
    merged = dict(DEFAULTS[args.command])
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            file_cfg = json.load(fh)
        if not isinstance(file_cfg, dict):
            raise UsageError(f"config file {args.config} must hold a JSON object")
        unknown = sorted(set(file_cfg) - set(merged))
        if unknown:
            raise UsageError(f"config file {args.config}: unknown keys {unknown}")
        merged.update(file_cfg)
    for key, value in vars(args).items():
        if key in ("command", "config", "func"):
            continue
        merged[key] = value
    return merged


def resolve_joints(spec) -> JointSet | None:
    if spec in (None, "", "all"):
        return None
    if isinstance(spec, str) and spec in JOINT_PRESETS:
        return JOINT_PRESETS[spec]
    if isinstance(spec, (list, tuple)):
        return JointSet("custom", tuple(int(i) for i in spec))
    try:
        indices = tuple(int(tok) for tok in str(spec).split(","))
    except ValueError:
        raise UsageError(
            f"--joints must be a preset ({', '.join(JOINT_PRESETS)}) or "
            f"comma-separated indices, got {spec!r}"
        ) from None
    return JointSet("custom", indices)


def parse_int_list(text, flag: str) -> list[int]:
    try:
        values = [int(tok) for tok in str(text).split(",") if tok.strip() != ""]
    except ValueError:
        raise UsageError(f"{flag} must be comma-separated integers, got {text!r}") from None
    if not values:
        raise UsageError(f"{flag} must name at least one value")
    return values


def emit_report(report: dict, out, summary: dict | None = None) -> None:
    text = json.dumps(report, indent=2, allow_nan=False) + "\n"
    if out:
        write_atomic(out, text)
        print(json.dumps(summary if summary is not None else {"out": str(out)}))
    else:
        sys.stdout.write(text)


def write_csv(path, header, rows) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    write_atomic(path, buf.getvalue())


def sibling(out, suffix: str) -> Path:
    out = Path(out)
    return out.with_name(out.stem + suffix)


def build_window_dataset(trajs, joints, normalize_mode, params, class_index):
    """Windowed (features, label) pairs; too-short trajectories are skipped."""
    dataset = []
    skipped = 0
    for traj in trajs:
        t = select_joints(traj, joints) if joints is not None else traj
        t = normalize(t, normalize_mode)
        feats = encode_frames(t)
        effective = params if params is not None else WindowParams(beta=t.alpha, gamma=1)
        try:
            plan = plan_windows(t.alpha, effective)
        except TrajectoryTooShort:
            skipped += 1
            continue
        label = class_index[traj.label]
        for w in extract_windows(feats, plan):
            dataset.append((w, label))
    return dataset, skipped


def class_vocabulary(trajs, where: str) -> list[str]:
    labels = sorted({t.label for t in trajs if t.label is not None})
    if len(labels) < 2:
        raise EngineError(f"{where}: need at least 2 labeled classes, found {labels}")
    return labels


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_gen(cfg: dict) -> None:
    out_dir = Path(cfg["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    written = {}
    if cfg["kind"] in ("trajectories", "both"):
        bench = BenchmarkConfig(
            n_train=cfg["train_count"],
            n_test=cfg["test_count"],
            n_classes=cfg["classes"],
            alpha_range=(cfg["alpha_min"], cfg["alpha_max"]),
            joints=cfg["joints"],
            sigma=cfg["sigma"],
            seed=cfg["seed"],
        )
        train_set, test_set = gen_benchmark(bench)
        train_path = out_dir / "train.jsonl"
        test_path = out_dir / "test.jsonl"
        written[str(train_path)] = write_trajectories(train_path, train_set)
        written[str(test_path)] = write_trajectories(test_path, test_set)
    if cfg["kind"] in ("embeddings", "both"):
        templates, candidates = gen_embedding_clusters(
            dim=cfg["dim"],
            n_in=cfg["in_count"],
            n_out=cfg["out_count"],
            separation=cfg["separation"],
            seed=cfg["seed"],
            n_templates=cfg["templates"],
        )
        tpl_path = out_dir / "templates.jsonl"
        cand_path = out_dir / "candidates.jsonl"
        written[str(tpl_path)] = write_embeddings(tpl_path, templates)
        written[str(cand_path)] = write_embeddings(cand_path, candidates)
    print(json.dumps({"seed": cfg["seed"], "written": written}))


def cmd_train(cfg: dict) -> None:
    trajs = read_trajectories(cfg["data"])
    classes = class_vocabulary(trajs, cfg["data"])
    index = {c: k for k, c in enumerate(classes)}
    joints = resolve_joints(cfg["joints"])
    params = None if cfg["no_window"] else WindowParams(cfg["window_size"], cfg["step"])
    dataset, skipped = build_window_dataset(trajs, joints, cfg["normalize"], params, index)
    if skipped:
        print(f"warning: skipped {skipped} trajectories shorter than the window",
              file=sys.stderr)
    if not dataset:
        raise EngineError(f"{cfg['data']}: no usable training windows")

    input_dim = dataset[0][0].frames.shape[1]
    model = init_model(ModelConfig(
        input_dim=input_dim,
        hidden_dim=cfg["hidden"],
        num_classes=len(classes),
        seed=cfg["seed"],
        classes=tuple(classes),
    ))
    opts = TrainOptions(epochs=cfg["epochs"], learning_rate=cfg["lr"],
                        batch_size=cfg["batch_size"], seed=cfg["seed"])
    model, history = train(model, dataset, opts)

    pipeline = {
        "window_size": None if cfg["no_window"] else cfg["window_size"],
        "step": None if cfg["no_window"] else cfg["step"],
        "joints": cfg["joints"],
        "normalize": cfg["normalize"],
    }
    save_model(model, cfg["out"], pipeline=pipeline)

    write_csv(sibling(cfg["out"], "_loss.csv"), ["epoch", "mean_loss"],
              [(k + 1, loss) for k, loss in enumerate(history)])
    if cfg["figures"] and history:
        from . import plots

        plots.save_loss_curve(history, sibling(cfg["out"], "_loss.png"))

    print(json.dumps({
        "out": str(cfg["out"]),
        "classes": classes,
        "windows": len(dataset),
        "skipped": skipped,
        "epochs": len(history),
        "final_loss": history[-1] if history else None,
    }))


def cmd_classify(cfg: dict) -> None:
    model, pipeline = load_model(cfg["model"])
    # checkpoint provenance fills anything not given on the command line
    window_size = cfg["window_size"] if cfg["window_size"] is not None else pipeline.get("window_size")
    step = cfg["step"] if cfg["step"] is not None else pipeline.get("step")
    joints_spec = cfg["joints"] if cfg["joints"] is not None else pipeline.get("joints")
    normalize_mode = cfg["normalize"] if cfg["normalize"] is not None else pipeline.get("normalize", "none")
    if cfg["no_window"] or window_size is None:
        params = None
    else:
        params = WindowParams(int(window_size), int(step) if step else 1)

    trajs = read_trajectories(cfg["data"])
    report = evaluate(
        model,
        trajs,
        joints=resolve_joints(joints_spec),
        params=params,
        normalize_mode=normalize_mode or "none",
        class_names=model.config.classes,
    )
    out = cfg.get("out")
    summary = {
        "out": str(out) if out else None,
        "action_accuracy": report["action_accuracy"],
        "window_accuracy": report["window_accuracy"],
    }
    emit_report(report, out, summary)
    if out:
        classes = report["classes"]
        write_csv(
            sibling(out, "_confusion.csv"),
            ["true\\predicted"] + classes,
            [[classes[r]] + row for r, row in enumerate(report["confusion"])],
        )
        if cfg["figures"]:
            from . import plots

            plots.save_confusion_matrix(report["confusion"], classes,
                                        sibling(out, "_confusion.png"))


def cmd_filter(cfg: dict) -> None:
    templates = read_embeddings(cfg["templates"])
    candidates = read_embeddings(cfg["candidates"])
    if templates and candidates and templates[0].dim != candidates[0].dim:
        raise EngineError(
            f"template dimension {templates[0].dim} != candidate dimension "
            f"{candidates[0].dim}"
        )
    policy = FilterPolicy(threshold=cfg["threshold"], aggregation=cfg["aggregation"])
    report = filter_candidates(templates, candidates, policy)
    payload = {
        "policy": {"metric": policy.metric, "threshold": policy.threshold,
                   "aggregation": policy.aggregation},
        "total": len(candidates),
        "accepted_count": len(report.accepted),
        "rejected_count": len(report.rejected),
        "acceptance_rate": report.acceptance_rate,
        "accepted": report.accepted,
        "rejected": report.rejected,
        "scores": report.scores,
    }
    curve = None
    if cfg["sweep_taus"]:
        taus = [float(tok) for tok in str(cfg["sweep_taus"]).split(",") if tok.strip() != ""]
        curve = sweep_threshold(templates, candidates, taus,
                                aggregation=policy.aggregation,
                                positive_label=cfg["positive_label"])
        payload["sweep"] = [
            {"tau": t, "precision": p, "recall": r} for t, p, r in curve
        ]
    out = cfg.get("out")
    emit_report(payload, out, {
        "out": str(out) if out else None,
        "acceptance_rate": report.acceptance_rate,
        "accepted": len(report.accepted),
        "total": len(candidates),
    })
    if out:
        write_csv(sibling(out, "_scores.csv"), ["id", "score", "accepted"],
                  [(cid, report.scores[cid], cid in set(report.accepted))
                   for cid in report.scores])
        if cfg["figures"] and report.scores:
            from . import plots

            plots.save_score_histogram(report.scores, policy.threshold,
                                       sibling(out, "_scores.png"))
            if curve:
                plots.save_threshold_curve(curve, sibling(out, "_sweep.png"))


def cmd_sweep(cfg: dict) -> None:
    train_trajs = read_trajectories(cfg["data"])
    test_trajs = read_trajectories(cfg["test"])
    if cfg["train_limit"]:
        train_trajs = train_trajs[: cfg["train_limit"]]
    if cfg["test_limit"]:
        test_trajs = test_trajs[: cfg["test_limit"]]
    classes = class_vocabulary(train_trajs, cfg["data"])
    index = {c: k for k, c in enumerate(classes)}
    joints = resolve_joints(cfg["joints"])
    betas = parse_int_list(cfg["window_sizes"], "--window-sizes")
    gammas = parse_int_list(cfg["steps"], "--steps")

    rows = []
    for gamma in gammas:
        for beta in betas:
            params = WindowParams(beta, gamma)
            dataset, skipped = build_window_dataset(
                train_trajs, joints, cfg["normalize"], params, index
            )
            if not dataset:
                raise EngineError(
                    f"window size {beta} leaves no usable training windows"
                )
            input_dim = dataset[0][0].frames.shape[1]
            model = init_model(ModelConfig(
                input_dim=input_dim, hidden_dim=cfg["hidden"],
                num_classes=len(classes), seed=cfg["seed"], classes=tuple(classes),
            ))
            opts = TrainOptions(epochs=cfg["epochs"], learning_rate=cfg["lr"],
                                batch_size=cfg["batch_size"], seed=cfg["seed"])
            model, history = train(model, dataset, opts)
            report = evaluate(model, test_trajs, joints=joints, params=params,
                              normalize_mode=cfg["normalize"])
            rows.append({
                "window_size": beta,
                "step": gamma,
                "action_accuracy": report["action_accuracy"],
                "window_accuracy": report["window_accuracy"],
                "train_windows": len(dataset),
                "skipped_trajectories": skipped,
                "final_loss": history[-1] if history else None,
            })

    payload = {"classes": classes, "rows": rows}
    out = cfg.get("out")
    best = max(rows, key=lambda r: r["action_accuracy"])
    emit_report(payload, out, {
        "out": str(out) if out else None,
        "cells": len(rows),
        "best": {k: best[k] for k in ("window_size", "step", "action_accuracy")},
    })
    if out:
        write_csv(
            sibling(out, ".csv"),
            ["window_size", "step", "action_accuracy", "window_accuracy",
             "train_windows", "skipped_trajectories", "final_loss"],
            [[r[k] for k in ("window_size", "step", "action_accuracy",
                             "window_accuracy", "train_windows",
                             "skipped_trajectories", "final_loss")] for r in rows],
        )
        if cfg["figures"]:
            from . import plots

            plots.save_sweep_heatmap(rows, sibling(out, ".png"))


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = merge_config(args)
        args.func(cfg)
    except UsageError as exc:
        print(f"skelwin: error: {exc}", file=sys.stderr)
        return 1
    except DivergenceError as exc:
        print(f"skelwin: divergence: {exc} (epoch {exc.epoch})", file=sys.stderr)
        return 3
    except EngineError as exc:
        print(f"skelwin: data error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        name = getattr(exc, "filename", None)
        print(f"skelwin: i/o error{f' ({name})' if name else ''}: {exc}", file=sys.stderr)
        return 2
    except json.JSONDecodeError as exc:
        print(f"skelwin: data error: invalid JSON: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
