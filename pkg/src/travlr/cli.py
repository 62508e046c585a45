"""Command line interface.

Exit codes: 0 success, 1 usage or input error, 2 dataset verification failed.
The default seed comes from the TRAVLR_SEED environment variable (0 if unset);
an explicit --seed always wins.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .dataset import (
    SPLITS,
    VIEWS,
    DatasetSpec,
    SplitSizes,
    build_dataset,
    default_jobs,
    default_sizes,
    load_manifest,
    sample_fewshot,
    verify_dataset,
    write_manifest,
    write_view,
)
from .errors import InvalidInput, TravlrError
from .evalkit import (
    aggregate_runs,
    error_by_object_count,
    error_by_pair,
    load_predictions,
    macro_f1,
    predicted_vs_actual_counts,
    with_threshold,
    write_csv,
)
from .rendering import RenderConfig
from .semantics import TASKS, query_from_json_dict
from .splitting import SamplerConfig
from .textgen import render_query

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VERIFY = 2

_MAX_PRINTED_VIOLATIONS = 20


class _Parser(argparse.ArgumentParser):
    """argparse, but usage errors exit 1 (2 is reserved for verify failures)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _env_seed() -> int:
    raw = os.environ.get("TRAVLR_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise InvalidInput(f"TRAVLR_SEED must be an integer, got {raw!r}") from None


_CONFIG_KEYS = (
    "task",
    "seed",
    "train_size",
    "val_size",
    "ind_test_size",
    "ood_test_size",
    "holdout_fraction",
    "cell_px",
    "margin_px",
    "jobs",
    "loose_balance",
)


def _cmd_generate(args) -> int:
    file_cfg = {}
    if args.config:
        try:
            file_cfg = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise InvalidInput(f"cannot read config {args.config}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise InvalidInput(f"config {args.config} is not valid JSON: {exc}") from exc
        if not isinstance(file_cfg, dict):
            raise InvalidInput("config file must hold a JSON object")
        unknown = sorted(set(file_cfg) - set(_CONFIG_KEYS))
        if unknown:
            raise InvalidInput("unknown config keys: " + ", ".join(unknown))

    def resolve(name, default):
        value = getattr(args, name)
        return file_cfg.get(name, default) if value is None else value

    task = resolve("task", None)
    if task is None:
        raise InvalidInput("a task is required (--task or config file)")
    if task not in TASKS:
        raise InvalidInput(f"unknown task {task!r}; expected one of {', '.join(TASKS)}")
    sizes = default_sizes(task)
    spec = DatasetSpec(
        task=task,
        seed=int(resolve("seed", _env_seed())),
        sizes=SplitSizes(
            train=int(resolve("train_size", sizes.train)),
            val=int(resolve("val_size", sizes.val)),
            ind_test=int(resolve("ind_test_size", sizes.ind_test)),
            ood_test=int(resolve("ood_test_size", sizes.ood_test)),
        ),
        holdout_fraction=float(resolve("holdout_fraction", 0.2)),
        sampler=SamplerConfig(),
        render=RenderConfig(
            cell_px=int(resolve("cell_px", 64)), margin_px=int(resolve("margin_px", 8))
        ),
        loose_balance=bool(resolve("loose_balance", False)),
    )
    jobs = resolve("jobs", None)
    report = build_dataset(spec, args.out, jobs=None if jobs is None else int(jobs))
    for line in report.summary_lines():
        print(line)
    return EXIT_OK


def _cmd_verify(args) -> int:
    report = verify_dataset(args.root)
    if args.report:
        Path(args.report).write_text(json.dumps(report.to_json_dict(), indent=2) + "\n")
    for violation in report.violations[:_MAX_PRINTED_VIOLATIONS]:
        print(f"{violation['check']} [{violation['where']}]: {violation['detail']}")
    if len(report.violations) > _MAX_PRINTED_VIOLATIONS:
        print(f"... and {len(report.violations) - _MAX_PRINTED_VIOLATIONS} more")
    if report.ok:
        print(f"checked {report.checked_records} records: OK")
        return EXIT_OK
    print(f"checked {report.checked_records} records: {len(report.violations)} violation(s)")
    return EXIT_VERIFY


def _cmd_view(args) -> int:
    seed = _env_seed() if args.seed is None else args.seed
    for path in write_view(args.root, args.setting, seed):
        print(path)
    return EXIT_OK


def _cmd_fewshot(args) -> int:
    seed = _env_seed() if args.seed is None else args.seed
    manifest = Path(args.root) / args.split / "manifest.jsonl"
    if not manifest.exists():
        raise InvalidInput(f"{manifest} not found")
    subset = sample_fewshot(load_manifest(manifest), args.n, seed)
    out = Path(args.out) if args.out else Path(args.root) / args.split / f"manifest.fewshot{args.n}.jsonl"
    write_manifest(out, [json.dumps(r, separators=(",", ":")) for r in subset])
    print(out)
    return EXIT_OK


def _cmd_score(args) -> int:
    records = load_manifest(Path(args.manifest))
    table_flags = [args.by_pair, args.by_count, args.count_matrix]
    if any(table_flags) and len(args.predictions) != 1:
        raise InvalidInput("error tables need exactly one predictions file")
    summaries = []
    for path in args.predictions:
        preds = load_predictions(path)
        summary = macro_f1(preds, records, alpha=args.alpha)
        if args.threshold is not None:
            summary = with_threshold(summary, args.threshold)
        summaries.append(summary)
        print(
            f"{path}: macro_f1={summary.macro_f1:.2f} accuracy={100 * summary.accuracy:.2f}"
            f" n={summary.n} converged={'yes' if summary.converged else 'no'}"
        )
    aggregate = None
    if len(summaries) > 1:
        aggregate = aggregate_runs(summaries)
        print(
            f"aggregate: macro_f1={aggregate.macro_f1_mean:.2f}"
            f" sd={aggregate.macro_f1_sd:.2f} converged={aggregate.n_converged}/{aggregate.n_runs}"
            f" basis={aggregate.basis}"
        )
    if any(table_flags):
        preds = load_predictions(args.predictions[0])
        if args.by_pair:
            write_csv(
                args.by_pair,
                error_by_pair(preds, records),
                ["scope", "a", "b", "n", "n_wrong", "error_rate"],
            )
        if args.by_count:
            write_csv(
                args.by_count,
                error_by_object_count(preds, records),
                ["total_objects", "n", "n_wrong", "error_rate"],
            )
        if args.count_matrix:
            write_csv(
                args.count_matrix,
                predicted_vs_actual_counts(preds, records),
                ["actual", "queried", "n"],
            )
    if args.report:
        doc = {
            "runs": [
                {"predictions": str(path), **summary.to_json_dict()}
                for path, summary in zip(args.predictions, summaries)
            ],
            "aggregate": aggregate.to_json_dict() if aggregate else None,
        }
        Path(args.report).write_text(json.dumps(doc, indent=2) + "\n")
    return EXIT_OK


_SHAPE_CODES = {
    "square": "sq",
    "circle": "ci",
    "triangle": "tr",
    "star": "st",
    "hexagon": "hx",
    "octagon": "oc",
    "pentagon": "pn",
}


def _grid_lines(scene: dict) -> list[str]:
    cells = {}
    for obj in scene["objects"]:
        code = obj["colour"][0].upper() + _SHAPE_CODES[obj["shape"]]
        cells[(obj["col"], obj["row"])] = code
    lines = ["    " + "   ".join("ABCDEF")]
    for row in range(6):
        cols = [cells.get((col, row), " . ") for col in range(6)]
        lines.append(f"{row + 1}  " + " ".join(f"{c:>3}" for c in cols))
    return lines


def _cmd_inspect(args) -> int:
    manifest = Path(args.root) / args.split / "manifest.jsonl"
    if not manifest.exists():
        raise InvalidInput(f"{manifest} not found")
    records = load_manifest(manifest)
    if args.id:
        records = [r for r in records if r["id"] == args.id]
        if not records:
            raise InvalidInput(f"id {args.id!r} not in {manifest}")
    else:
        records = records[: args.head]
    for record in records:
        pair = record["pair"]
        print(f"id:      {record['id']}")
        print(f"label:   {record['label']}")
        print(f"pair:    {pair['scope']} <{pair['a']}, {pair['b']}>")
        print(f"query:   {render_query(query_from_json_dict(record['query']))}")
        print(f"caption: {record['caption']}")
        print(f"image:   {record['image_path']}")
        for line in _grid_lines(record["scene"]):
            print("  " + line)
        print()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="travlr", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gen = sub.add_parser("generate", help="build a dataset directory")
    gen.add_argument("--task", choices=TASKS)
    gen.add_argument("--out", required=True)
    gen.add_argument("--seed", type=int)
    gen.add_argument("--train-size", dest="train_size", type=int)
    gen.add_argument("--val-size", dest="val_size", type=int)
    gen.add_argument("--ind-test-size", dest="ind_test_size", type=int)
    gen.add_argument("--ood-test-size", dest="ood_test_size", type=int)
    gen.add_argument("--holdout-fraction", dest="holdout_fraction", type=float)
    gen.add_argument("--cell-px", dest="cell_px", type=int)
    gen.add_argument("--margin-px", dest="margin_px", type=int)
    gen.add_argument("--jobs", type=int)
    gen.add_argument("--loose-balance", dest="loose_balance", action="store_const", const=True)
    gen.add_argument("--config", help="JSON file with any of the generate options; flags win")
    gen.set_defaults(func=_cmd_generate)

    ver = sub.add_parser("verify", help="re-derive and check every record of a dataset")
    ver.add_argument("root")
    ver.add_argument("--report", help="write the full verification report to this JSON file")
    ver.set_defaults(func=_cmd_verify)

    view = sub.add_parser("view", help="materialize a modality view of every split")
    view.add_argument("root")
    view.add_argument("--setting", choices=VIEWS, required=True)
    view.add_argument("--seed", type=int)
    view.set_defaults(func=_cmd_view)

    few = sub.add_parser("fewshot", help="label-balanced subset of one split")
    few.add_argument("root")
    few.add_argument("--split", choices=SPLITS, default="train")
    few.add_argument("--n", type=int, default=200)
    few.add_argument("--seed", type=int)
    few.add_argument("--out")
    few.set_defaults(func=_cmd_fewshot)

    score = sub.add_parser("score", help="macro-F1 and error analyses for prediction files")
    score.add_argument("--manifest", required=True)
    score.add_argument("--predictions", required=True, nargs="+")
    score.add_argument("--alpha", type=float, default=0.05)
    score.add_argument("--threshold", type=float)
    score.add_argument("--by-pair", dest="by_pair", help="write per-pair error CSV here")
    score.add_argument("--by-count", dest="by_count", help="write per-object-count error CSV here")
    score.add_argument("--count-matrix", dest="count_matrix", help="write the cardinality actual-vs-queried CSV here")
    score.add_argument("--report", help="write run summaries (and aggregate) to this JSON file")
    score.set_defaults(func=_cmd_score)

    ins = sub.add_parser("inspect", help="pretty-print records from a split")
    ins.add_argument("root")
    ins.add_argument("--split", choices=SPLITS, default="train")
    ins.add_argument("--id")
    ins.add_argument("--head", type=int, default=3)
    ins.set_defaults(func=_cmd_inspect)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except TravlrError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
