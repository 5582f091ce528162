"""Command-line interface.

Conventions: machine-readable JSON on stdout, human-readable tables and
progress on stderr.  Exit codes: 0 on success, 1 on usage errors, 2 on data
or runtime failures (missing files, corrupt artifacts, numeric breakdown).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .datagen import (
    DEFAULT_LABELS,
    gen_dataset,
    gen_textbank,
    read_dataset,
    write_dataset,
)
from .gradsuite import run_suite
from .metrics import evaluate
from .model import (
    embed_cloud,
    load_model,
    load_teacher,
    make_teacher,
    predict_cloud,
    save_model,
    save_teacher,
)
from .textcorr import load_textbank, save_textbank
from .trainer import PRESETS, preset, train

_USAGE_EXIT = 1
_FAILURE_EXIT = 2

# every flag that forwards into TrainConfig when given
_TRAIN_OVERRIDES = (
    "lambda_a", "lambda_t", "lr", "weight_decay", "epochs", "batch_size", "r", "k"
)


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad usage; the contract here reserves 2 for
    runtime failures, so usage problems remap to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(_USAGE_EXIT, f"{self.prog}: error: {message}\n")


def _preset_table() -> str:
    fields = (
        "embed_dim", "hidden_widths", "neighborhood_k", "head_dim", "lambda_a",
        "lambda_t", "lr", "weight_decay", "epochs", "batch_size", "n_points", "r", "k",
    )
    names = sorted(PRESETS)
    width = max(len(f) for f in fields) + 2
    lines = ["preset defaults:", "  " + "".join(f"{'':{width}}") + "  ".join(f"{n:>10}" for n in names)]
    for f in fields:
        row = "  " + f"{f:<{width}}"
        row += "  ".join(f"{str(getattr(PRESETS[n], f)):>10}" for n in names)
        lines.append(row)
    return "\n".join(lines)


def _emit(payload: dict) -> None:
    json.dump(payload, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")


def _table(headers, rows) -> str:
    cols = [len(h) for h in headers]
    text_rows = [[str(c) for c in row] for row in rows]
    for row in text_rows:
        cols = [max(w, len(c)) for w, c in zip(cols, row)]
    def fmt(row):
        return "  ".join(f"{c:>{w}}" for c, w in zip(row, cols))
    return "\n".join([fmt(headers)] + [fmt(r) for r in text_rows])


def _say(text: str) -> None:
    print(text, file=sys.stderr)


def _float_fmt(x) -> str:
    return "-" if x is None else f"{x:.4f}"


# ---------------------------------------------------------------------------
# subcommand implementations


def _cmd_gen_data(args) -> int:
    config = preset(args.preset)
    n_points = args.points if args.points is not None else config.n_points
    clouds = gen_dataset(args.num_clouds, n_points, seed=args.seed, partial_view=args.partial_view)
    protocol = "partial-view" if args.partial_view else "full-shape"
    write_dataset(clouds, args.out, protocol=protocol, seed=args.seed)
    counts = {label: 0 for label in DEFAULT_LABELS}
    for c in clouds:
        for idx, cnt in zip(*np.unique(c.labels, return_counts=True)):
            counts[DEFAULT_LABELS[idx]] += int(cnt)
    _say(_table(("label", "points"), sorted(counts.items())))
    _say(f"wrote {len(clouds)} clouds x {n_points} points to {args.out}")
    _emit({
        "command": "gen-data",
        "out": args.out,
        "num_clouds": args.num_clouds,
        "n_points": n_points,
        "protocol": protocol,
        "labels": list(DEFAULT_LABELS),
        "label_points": counts,
        "seed": args.seed,
        "preset": args.preset,
    })
    return 0


def _cmd_gen_textbank(args) -> int:
    config = preset(args.preset)
    labels = tuple(s.strip() for s in args.labels.split(",") if s.strip())
    groups = None
    if args.synonym_groups:
        groups = [g.split(",") for g in args.synonym_groups.split(";") if g]
    bank = gen_textbank(labels, config.embed_dim, seed=args.seed, synonym_groups=groups)
    save_textbank(bank, args.out)
    _say(f"wrote {bank.m} label embeddings (dim {bank.embed_dim}) to {args.out}")
    _emit({
        "command": "gen-textbank",
        "out": args.out,
        "labels": list(labels),
        "embed_dim": bank.embed_dim,
        "seed": args.seed,
        "preset": args.preset,
    })
    return 0


def _cmd_gen_teacher(args) -> int:
    config = preset(args.preset)
    teacher = make_teacher(config.encoder_config(), config.head_dim, args.seed, gain=args.gain)
    save_teacher(teacher, args.out)
    _say(f"wrote frozen teacher (hidden {teacher.enc_config.hidden_widths}) to {args.out}")
    _emit({
        "command": "gen-teacher",
        "out": args.out,
        "encoder": teacher.enc_config.to_dict(),
        "head_dim": teacher.head_dim,
        "gain": args.gain,
        "seed": args.seed,
        "preset": args.preset,
    })
    return 0


def _cmd_train(args) -> int:
    overrides = {
        name: getattr(args, name)
        for name in _TRAIN_OVERRIDES
        if getattr(args, name) is not None
    }
    config = preset(args.preset, seed=args.seed, **overrides)
    clouds, manifest = read_dataset(args.data)
    bank = load_textbank(args.textbank)
    teacher = None
    if args.teacher is not None:
        teacher = load_teacher(args.teacher)
    model, report = train(clouds, bank, teacher, config)
    save_model(model, args.out)

    step = max(1, len(report) // 10)
    shown = report[::step] + ([report[-1]] if report and report[-1] is not report[::step][-1] else [])
    _say(_table(
        ("epoch", "l_total", "l_point", "l_att", "l_geo", "acc", "tau"),
        [
            (
                r["epoch"], _float_fmt(r["l_total"]), _float_fmt(r["l_point"]),
                _float_fmt(r["l_att"]), _float_fmt(r["l_geo"]),
                _float_fmt(r["train_acc"]), _float_fmt(r["tau"]),
            )
            for r in shown
        ],
    ))
    _say(f"wrote model to {args.out}")
    _emit({
        "command": "train",
        "out": args.out,
        "config": config.to_dict(),
        "dataset": {"clouds": len(clouds), "n_points": manifest["n_points"],
                    "labels": manifest["labels"]},
        "epochs_run": len(report),
        "initial": report[0] if report else None,
        "final": report[-1] if report else None,
        "seed": args.seed,
        "preset": args.preset,
    })
    return 0


def _cmd_eval(args) -> int:
    clouds, _ = read_dataset(args.data)
    bank = load_textbank(args.textbank)
    model = load_model(args.ckpt)
    report = evaluate(clouds, bank, model)
    d = report.to_dict()
    _say(_table(
        ("label", "iou", "acc"),
        [
            (e["label"], _float_fmt(e["iou"]), _float_fmt(e["acc"]))
            for e in d["per_class"]
        ],
    ))
    _say(f"miou {d['miou']:.4f}  acc {d['acc']:.4f}  macc {d['macc']:.4f}")
    _emit({"command": "eval", "ckpt": args.ckpt, "data": args.data, **d})
    return 0


def _cmd_predict(args) -> int:
    clouds, _ = read_dataset(args.data)
    bank = load_textbank(args.textbank)
    model = load_model(args.ckpt)
    histogram = {label: 0 for label in bank.labels}
    entries = []
    if args.out:
        os.makedirs(args.out, exist_ok=True)
    for i, cloud in enumerate(clouds):
        pred = predict_cloud(model, cloud, bank)
        for idx, cnt in zip(*np.unique(pred, return_counts=True)):
            histogram[bank.labels[idx]] += int(cnt)
        if args.out:
            name = f"predictions_{i}.bin"
            pred.astype("<u2").tofile(os.path.join(args.out, name))
            entries.append(name)
    if args.out:
        with open(os.path.join(args.out, "predictions.json"), "w", encoding="utf-8") as f:
            json.dump({"labels": list(bank.labels), "clouds": entries}, f,
                      sort_keys=True, separators=(",", ":"))
    _say(_table(("label", "points"), list(histogram.items())))
    _emit({
        "command": "predict",
        "ckpt": args.ckpt,
        "data": args.data,
        "num_clouds": len(clouds),
        "label_histogram": histogram,
        "out": args.out,
    })
    return 0


def _cmd_gradcheck(args) -> int:
    config = preset(args.preset)
    # cap the verification fixture: probing is exhaustive over every entry,
    # so full-scale widths would take hours without adding coverage
    dims = dict(
        embed_dim=min(config.embed_dim, 32),
        hidden_widths=tuple(min(w, 32) for w in config.hidden_widths),
        neighborhood_k=min(config.neighborhood_k, 8),
        head_dim=min(config.head_dim, 16),
    )
    # wider layers mean larger loss values, so round-off noise in the
    # difference quotient grows; a larger probe step keeps it benign
    result = run_suite(seed=args.seed, h=2e-4, **dims)
    _say(_table(
        ("case", "max_rel_error", "entries", "worst_param"),
        [
            (name, f"{r.max_rel_error:.3e}", r.entries_checked, r.worst_param or "-")
            for name, r in result.reports.items()
        ],
    ))
    verdict = "PASS" if result.passed else "FAIL"
    _say(f"{verdict}: max relative error {result.max_rel_error:.3e} (tol 1e-04)")
    _emit({
        "command": "gradcheck",
        "passed": result.passed,
        "max_rel_error": result.max_rel_error,
        "tol": 1e-4,
        "cases": {
            name: {
                "max_rel_error": r.max_rel_error,
                "entries_checked": r.entries_checked,
                "worst_param": r.worst_param,
            }
            for name, r in result.reports.items()
        },
        "seed": args.seed,
        "preset": args.preset,
    })
    return 0 if result.passed else _FAILURE_EXIT


def _cmd_dump_embeddings(args) -> int:
    clouds, _ = read_dataset(args.data)
    model = load_model(args.ckpt)
    os.makedirs(args.out, exist_ok=True)
    entries = []
    for i, cloud in enumerate(clouds):
        emb = embed_cloud(model, cloud)
        name = f"embeddings_{i}.bin"
        emb.astype("<f4").tofile(os.path.join(args.out, name))
        entries.append({"file": name, "shape": list(emb.shape)})
    manifest = {"embed_dim": model.enc_config.embed_dim, "clouds": entries}
    with open(os.path.join(args.out, "embeddings.json"), "w", encoding="utf-8") as f:
        json.dump(manifest, f, sort_keys=True, separators=(",", ":"))
    _say(f"wrote {len(entries)} embedding files to {args.out}")
    _emit({"command": "dump-embeddings", "ckpt": args.ckpt, "out": args.out, **manifest})
    return 0


# ---------------------------------------------------------------------------
# parser assembly


def _add_shared(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    p.add_argument(
        "--preset", choices=sorted(PRESETS), default="desk",
        help="configuration preset supplying all unset values (default desk)",
    )


def build_parser() -> _Parser:
    parser = _Parser(
        prog="affordkit",
        description="Open-vocabulary affordance detection on synthetic point clouds.",
        epilog=_preset_table(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("gen-data", help="generate a synthetic labeled dataset")
    _add_shared(p)
    p.add_argument("--out", required=True, help="output dataset directory")
    p.add_argument("--num-clouds", type=int, default=16, help="clouds to generate (default 16)")
    p.add_argument(
        "--points", type=int, default=None,
        help="points per cloud (default: preset value — "
        + ", ".join(f"{n} {PRESETS[n].n_points}" for n in sorted(PRESETS)) + ")",
    )
    p.add_argument("--partial-view", action="store_true",
                   help="crop each cloud to a random half-space view")
    p.set_defaults(fn=_cmd_gen_data)

    p = sub.add_parser("gen-textbank", help="generate pseudo label embeddings")
    _add_shared(p)
    p.add_argument("--out", required=True, help="output text-bank directory")
    p.add_argument("--labels", default=",".join(DEFAULT_LABELS),
                   help="comma-separated label names (default: built-in affordances)")
    p.add_argument("--synonym-groups", default=None,
                   help="semicolon-separated groups of comma-separated names whose "
                        "embeddings should correlate, e.g. 'grasp,grab;cut,slice'")
    p.set_defaults(fn=_cmd_gen_textbank)

    p = sub.add_parser("gen-teacher", help="generate a frozen teacher checkpoint")
    _add_shared(p)
    p.add_argument("--out", required=True, help="output teacher checkpoint file")
    p.add_argument("--gain", type=float, default=3.0,
                   help="teacher weight gain so distillation targets are O(1) (default 3.0)")
    p.set_defaults(fn=_cmd_gen_teacher)

    p = sub.add_parser("train", help="train a student model")
    _add_shared(p)
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--textbank", required=True, help="text-bank directory")
    p.add_argument("--teacher", default=None,
                   help="teacher checkpoint (required unless both transfer weights are 0)")
    p.add_argument("--out", required=True, help="output model checkpoint file")
    p.add_argument("--lambda-a", dest="lambda_a", type=float, default=None,
                   help="attention-transfer weight (default 0.9)")
    p.add_argument("--lambda-t", dest="lambda_t", type=float, default=None,
                   help="geometry-transfer weight (default 0.7)")
    p.add_argument("--lr", type=float, default=None,
                   help="learning rate (default: preset value — "
                   + ", ".join(f"{n} {PRESETS[n].lr}" for n in sorted(PRESETS)) + ")")
    p.add_argument("--weight-decay", dest="weight_decay", type=float, default=None,
                   help="decoupled weight decay on matrices (default 1e-4)")
    p.add_argument("--epochs", type=int, default=None,
                   help="training epochs (default: preset value — "
                   + ", ".join(f"{n} {PRESETS[n].epochs}" for n in sorted(PRESETS)) + ")")
    p.add_argument("--batch-size", dest="batch_size", type=int, default=None,
                   help="clouds per optimizer step (default: preset value — "
                   + ", ".join(f"{n} {PRESETS[n].batch_size}" for n in sorted(PRESETS)) + ")")
    p.add_argument("--r", type=float, default=None, help="anchor sampling ratio (default 0.25)")
    p.add_argument("--k", type=int, default=None, help="anchor neighborhood size (default 16)")
    p.set_defaults(fn=_cmd_train)

    p = sub.add_parser("eval", help="evaluate a model checkpoint against a text bank")
    _add_shared(p)
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--textbank", required=True, help="text-bank directory")
    p.add_argument("--ckpt", required=True, help="model checkpoint file")
    p.set_defaults(fn=_cmd_eval)

    p = sub.add_parser("predict", help="write per-point label predictions")
    _add_shared(p)
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--textbank", required=True, help="text-bank directory")
    p.add_argument("--ckpt", required=True, help="model checkpoint file")
    p.add_argument("--out", default=None, help="directory for predictions_<i>.bin files")
    p.set_defaults(fn=_cmd_predict)

    p = sub.add_parser("gradcheck", help="finite-difference check of every gradient")
    _add_shared(p)
    p.set_defaults(fn=_cmd_gradcheck)

    p = sub.add_parser("dump-embeddings", help="write per-point embeddings for a dataset")
    _add_shared(p)
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--ckpt", required=True, help="model checkpoint file")
    p.add_argument("--out", required=True, help="directory for embeddings_<i>.bin files")
    p.set_defaults(fn=_cmd_dump_embeddings)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, RuntimeError, ArithmeticError, OSError) as e:
        print(f"affordkit: error: {e}", file=sys.stderr)
        return _FAILURE_EXIT


if __name__ == "__main__":
    sys.exit(main())
