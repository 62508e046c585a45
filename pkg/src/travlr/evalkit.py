"""Scoring harness: macro-F1, convergence across runs, error breakdowns.

Predictions arrive as JSONL ({"id": ..., "pred": true|false}); records are
manifest dicts. Joins are strict in both directions: an id on one side only
is an error, never silently dropped. All F1-style figures are on a 0-100
scale and 0/0 ratios are defined as 0.
"""

from __future__ import annotations

import csv
import json
import statistics
from dataclasses import dataclass, replace
from pathlib import Path

from scipy.stats import binom

from .errors import InvalidInput, MissingPrediction, TaskMismatch, UnknownId
from .semantics import SCOPES_BY_TASK, TASKS
from .splitting import pair_space


def load_predictions(path: str | Path) -> dict[str, bool]:
    """Read a predictions JSONL file into {id: pred}."""
    preds: dict[str, bool] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            where = f"{path}:{lineno + 1}"
            try:
                data = json.loads(line)
            except json.JSONDecodeError as exc:
                raise InvalidInput(f"{where}: not valid JSON: {exc}") from exc
            if not isinstance(data, dict) or "id" not in data or "pred" not in data:
                raise InvalidInput(f'{where}: expected {{"id": ..., "pred": ...}}')
            rid, pred = data["id"], data["pred"]
            if not isinstance(rid, str) or not isinstance(pred, bool):
                raise InvalidInput(f"{where}: id must be a string and pred a boolean")
            if rid in preds:
                raise InvalidInput(f"{where}: duplicate prediction for id {rid!r}")
            preds[rid] = pred
    return preds


def _join(predictions: dict[str, bool], records: list[dict]) -> list[tuple[dict, bool]]:
    record_ids = {r["id"] for r in records}
    unknown = sorted(set(predictions) - record_ids)
    if unknown:
        raise UnknownId(unknown)
    missing = [r["id"] for r in records if r["id"] not in predictions]
    if missing:
        raise MissingPrediction(missing)
    return [(r, predictions[r["id"]]) for r in records]


@dataclass(frozen=True)
class RunSummary:
    n: int
    n_correct: int
    accuracy: float
    precision_true: float
    recall_true: float
    f1_true: float
    precision_false: float
    recall_false: float
    f1_false: float
    macro_f1: float
    alpha: float
    converged: bool

    def to_json_dict(self) -> dict:
        return dict(self.__dict__)


def _prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return 100.0 * precision, 100.0 * recall, 100.0 * f1


def _binomial_converged(n_correct: int, n: int, alpha: float) -> bool:
    # one-sided exact test of accuracy > 1/2: P(X >= n_correct), X ~ Bin(n, 1/2)
    p_value = float(binom.sf(n_correct - 1, n, 0.5))
    return p_value < alpha


def macro_f1(predictions: dict[str, bool], records: list[dict], alpha: float = 0.05) -> RunSummary:
    """Score one run; macro-F1 is the plain mean of the two per-class F1s."""
    joined = _join(predictions, records)
    if not joined:
        raise InvalidInput("cannot score an empty record set")
    tp = sum(1 for r, p in joined if p and r["label"])
    fp = sum(1 for r, p in joined if p and not r["label"])
    fn = sum(1 for r, p in joined if not p and r["label"])
    tn = len(joined) - tp - fp - fn
    p_t, r_t, f1_t = _prf(tp, fp, fn)
    p_f, r_f, f1_f = _prf(tn, fn, fp)
    n = len(joined)
    n_correct = tp + tn
    return RunSummary(
        n=n,
        n_correct=n_correct,
        accuracy=n_correct / n,
        precision_true=p_t,
        recall_true=r_t,
        f1_true=f1_t,
        precision_false=p_f,
        recall_false=r_f,
        f1_false=f1_f,
        macro_f1=(f1_t + f1_f) / 2,
        alpha=alpha,
        converged=_binomial_converged(n_correct, n, alpha),
    )


def convergence_test(
    summary: RunSummary, alpha: float | None = None, threshold: float | None = None
) -> bool:
    """Did the run learn anything? Exact binomial test of accuracy against
    chance, or a plain macro-F1 cutoff when threshold is given."""
    if threshold is not None:
        return summary.macro_f1 > threshold
    return _binomial_converged(summary.n_correct, summary.n, summary.alpha if alpha is None else alpha)


def with_threshold(summary: RunSummary, threshold: float) -> RunSummary:
    """Summary with its converged flag re-derived from a macro-F1 cutoff."""
    return replace(summary, converged=convergence_test(summary, threshold=threshold))


@dataclass(frozen=True)
class RunAggregate:
    n_runs: int
    n_converged: int
    macro_f1_mean: float
    macro_f1_sd: float
    basis: str  # "converged" or "all"

    def to_json_dict(self) -> dict:
        return dict(self.__dict__)


def aggregate_runs(summaries: list[RunSummary]) -> RunAggregate:
    """Mean over converged runs when any converged, else over all runs."""
    if not summaries:
        raise InvalidInput("no runs to aggregate")
    converged = [s for s in summaries if s.converged]
    used = converged if converged else list(summaries)
    scores = [s.macro_f1 for s in used]
    return RunAggregate(
        n_runs=len(summaries),
        n_converged=len(converged),
        macro_f1_mean=statistics.fmean(scores),
        macro_f1_sd=statistics.stdev(scores) if len(scores) >= 2 else 0.0,
        basis="converged" if converged else "all",
    )


def _single_task(records: list[dict]) -> str:
    tasks = {r["task"] for r in records}
    if len(tasks) != 1:
        raise TaskMismatch(f"records span tasks {sorted(tasks)}; analyses need exactly one")
    task = tasks.pop()
    if task not in TASKS:
        raise TaskMismatch(f"unknown task {task!r}")
    return task


def error_by_pair(predictions: dict[str, bool], records: list[dict]) -> list[dict]:
    """Error rate per pair cell over the task's full per-scope key spaces;
    cells absent from the records get n=0 and a null rate."""
    task = _single_task(records)
    joined = _join(predictions, records)
    stats: dict[tuple[str, int, int], list[int]] = {}
    for record, pred in joined:
        key = (record["pair"]["scope"], record["pair"]["a"], record["pair"]["b"])
        cell = stats.setdefault(key, [0, 0])
        cell[0] += 1
        cell[1] += pred != record["label"]
    rows = []
    covered = set()
    for scope in SCOPES_BY_TASK[task]:
        for a, b in pair_space(task, scope):
            covered.add((scope, a, b))
            n, wrong = stats.get((scope, a, b), (0, 0))
            rows.append(
                {
                    "scope": scope,
                    "a": a,
                    "b": b,
                    "n": n,
                    "n_wrong": wrong,
                    "error_rate": wrong / n if n else None,
                }
            )
    # cells realized outside the default spaces (custom range configs)
    for scope, a, b in sorted(set(stats) - covered):
        n, wrong = stats[(scope, a, b)]
        rows.append(
            {"scope": scope, "a": a, "b": b, "n": n, "n_wrong": wrong, "error_rate": wrong / n}
        )
    return rows


def error_by_object_count(predictions: dict[str, bool], records: list[dict]) -> list[dict]:
    """Error rate as a function of total scene object count."""
    joined = _join(predictions, records)
    stats: dict[int, list[int]] = {}
    for record, pred in joined:
        cell = stats.setdefault(record["meta"]["total_objects"], [0, 0])
        cell[0] += 1
        cell[1] += pred != record["label"]
    return [
        {
            "total_objects": total,
            "n": stats[total][0],
            "n_wrong": stats[total][1],
            "error_rate": stats[total][1] / stats[total][0],
        }
        for total in sorted(stats)
    ]


def predicted_vs_actual_counts(predictions: dict[str, bool], records: list[dict]) -> list[dict]:
    """Among records the model called true: actual shape count vs the number
    the query asked about. Cardinality records only."""
    task = _single_task(records)
    if task != "cardinality":
        raise TaskMismatch(f"count matrix needs cardinality records, got {task!r}")
    joined = _join(predictions, records)
    counts: dict[tuple[int, int], int] = {}
    for record, pred in joined:
        if not pred:
            continue
        actual = record["meta"]["shape_counts"][record["query"]["shape"]]
        asked = record["query"]["number"]
        counts[(actual, asked)] = counts.get((actual, asked), 0) + 1
    return [
        {"actual": a, "queried": q, "n": counts[(a, q)]} for a, q in sorted(counts)
    ]


def write_csv(path: str | Path, rows: list[dict], columns: list[str]) -> None:
    """Long-format CSV; None becomes an empty cell."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: ("" if row[k] is None else row[k]) for k in columns})
