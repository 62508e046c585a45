"""Dataset assembly, modality views, and integrity verification.

A dataset directory holds config.json, partition.json, a shared blank.png,
and four splits (train, val, ind_test, ood_test), each with manifest.jsonl
plus one PNG per record. Every record's RNG stream is derived from
(seed, task, split, index) alone, so builds are byte-identical regardless of
worker count and any single record can be regenerated in isolation.
"""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from multiprocessing import get_context
from pathlib import Path

from PIL import Image

from .errors import InvalidInput
from .rng import SPLIT_CODES, STREAM_EXAMPLE, STREAM_FEWSHOT, STREAM_VIEW, TASK_CODES, substream
from .rendering import RenderConfig, blank_image, render_scene
from .scene import (
    COLOURS,
    SHAPES,
    Colour,
    Scene,
    attribute_matches,
    canonicalize,
    scene_from_json_dict,
    scene_to_json_dict,
    validate_scene,
)
from .semantics import (
    SCOPES_BY_TASK,
    TASKS,
    CardinalityQuery,
    PairKey,
    QuantifiedQuery,
    Query,
    SpatialQuery,
    eval_query,
    pair_from_json_dict,
    pair_key,
    pair_to_json_dict,
    query_from_json_dict,
    query_to_json_dict,
    validate_query,
)
from .splitting import (
    DEFAULT_SAMPLER_CONFIG,
    SamplerConfig,
    SplitPlan,
    build_split_plan,
    partition_from_json_dict,
    partition_to_json_dict,
    sample_example,
)
from .textgen import concat_text_input, parse_caption, parse_query, render_caption, render_query

SPLITS = ("train", "val", "ind_test", "ood_test")
SPLIT_SIDES = {"train": "train", "val": "train", "ind_test": "train", "ood_test": "ood"}
VIEWS = ("image_caption", "image_only", "caption_only", "mixed")

# mixed view composition: fraction of records per modality
MIXED_IMAGE_ONLY = 0.25
MIXED_CAPTION_ONLY = 0.25


@dataclass(frozen=True)
class SplitSizes:
    train: int
    val: int
    ind_test: int
    ood_test: int

    def for_split(self, split: str) -> int:
        return getattr(self, split)


def default_sizes(task: str) -> SplitSizes:
    train = 32000 if task == "spatiality" else 8000
    return SplitSizes(train=train, val=10000, ind_test=10000, ood_test=20000)


@dataclass(frozen=True)
class DatasetSpec:
    task: str
    seed: int = 0
    sizes: SplitSizes | None = None
    holdout_fraction: float = 0.2
    sampler: SamplerConfig = DEFAULT_SAMPLER_CONFIG
    render: RenderConfig = field(default_factory=RenderConfig)
    loose_balance: bool = False

    def __post_init__(self):
        if self.task not in TASKS:
            raise InvalidInput(f"unknown task {self.task!r}; expected one of {', '.join(TASKS)}")
        if self.sizes is None:
            object.__setattr__(self, "sizes", default_sizes(self.task))
        for split in SPLITS:
            if self.sizes.for_split(split) < 0:
                raise InvalidInput(f"{split} size must be non-negative")


@dataclass(frozen=True)
class ExampleRecord:
    id: str
    task: str
    split: str
    image_path: str
    caption: str
    query: Query
    label: bool
    pair: PairKey
    scene: Scene
    meta: dict


def record_id(task: str, split: str, index: int) -> str:
    return f"{task}-{split}-{index}"


def scene_meta(scene: Scene) -> dict:
    colour_counts = {c.value: 0 for c in COLOURS}
    shape_counts = {s.value: 0 for s in SHAPES}
    for obj in scene.objects:
        colour_counts[obj.colour.value] += 1
        shape_counts[obj.shape.value] += 1
    return {
        "total_objects": len(scene.objects),
        "colour_counts": colour_counts,
        "shape_counts": shape_counts,
    }


def record_to_json_dict(record: ExampleRecord) -> dict:
    return {
        "id": record.id,
        "task": record.task,
        "split": record.split,
        "image_path": record.image_path,
        "caption": record.caption,
        "query": query_to_json_dict(record.query),
        "label": record.label,
        "pair": pair_to_json_dict(record.pair),
        "scene": scene_to_json_dict(record.scene),
        "meta": record.meta,
    }


def record_from_json_dict(data: dict) -> ExampleRecord:
    try:
        return ExampleRecord(
            id=data["id"],
            task=data["task"],
            split=data["split"],
            image_path=data["image_path"],
            caption=data["caption"],
            query=query_from_json_dict(data["query"]),
            label=bool(data["label"]),
            pair=pair_from_json_dict(data["pair"]),
            scene=scene_from_json_dict(data["scene"]),
            meta=data["meta"],
        )
    except KeyError as exc:
        raise InvalidInput(f"manifest record missing field {exc}") from exc


def write_manifest(path: Path, lines: list[str]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for line in lines:
            fh.write(line)
            fh.write("\n")


def iter_manifest(path: Path):
    """Yield manifest records as parsed JSON dicts, in file order."""
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError as exc:
                raise InvalidInput(f"{path}:{lineno + 1}: not valid JSON: {exc}") from exc


def load_manifest(path: Path) -> list[dict]:
    return list(iter_manifest(path))


def spec_to_json_dict(spec: DatasetSpec) -> dict:
    return {
        "task": spec.task,
        "seed": spec.seed,
        "sizes": asdict(spec.sizes),
        "holdout_fraction": spec.holdout_fraction,
        "sampler": asdict(spec.sampler),
        "render": {
            "cell_px": spec.render.cell_px,
            "margin_px": spec.render.margin_px,
            "inset": spec.render.inset,
            "background": list(spec.render.background),
            "colour_map": {c.value: list(rgb) for c, rgb in spec.render.colour_map.items()},
        },
        "loose_balance": spec.loose_balance,
    }


def spec_from_json_dict(data: dict) -> DatasetSpec:
    try:
        sampler = data["sampler"]
        sampler_cfg = SamplerConfig(
            **{k: tuple(v) if isinstance(v, list) else v for k, v in sampler.items()}
        )
        render = data["render"]
        render_cfg = RenderConfig(
            cell_px=render["cell_px"],
            margin_px=render["margin_px"],
            inset=render["inset"],
            background=tuple(render["background"]),
            colour_map={Colour(k): tuple(v) for k, v in render["colour_map"].items()},
        )
        return DatasetSpec(
            task=data["task"],
            seed=data["seed"],
            sizes=SplitSizes(**data["sizes"]),
            holdout_fraction=data["holdout_fraction"],
            sampler=sampler_cfg,
            render=render_cfg,
            loose_balance=data["loose_balance"],
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInput(f"malformed dataset config: {exc}") from exc


def load_config(root: Path) -> DatasetSpec:
    path = Path(root) / "config.json"
    if not path.exists():
        raise InvalidInput(f"{path} not found; is {root} a dataset directory?")
    return spec_from_json_dict(json.loads(path.read_text()))


def generate_record(plan: SplitPlan, spec: DatasetSpec, split: str, index: int) -> ExampleRecord:
    """The record at (split, index); pure function of the dataset spec."""
    rng = substream(spec.seed, STREAM_EXAMPLE, TASK_CODES[spec.task], SPLIT_CODES[split], index)
    if spec.loose_balance:
        target = bool(rng.integers(2))
    else:
        target = index % 2 == 0
    example = sample_example(plan, SPLIT_SIDES[split], target, spec.sampler, rng)
    rid = record_id(spec.task, split, index)
    return ExampleRecord(
        id=rid,
        task=spec.task,
        split=split,
        image_path=f"{split}/images/{rid}.png",
        caption=render_caption(example.scene),
        query=example.query,
        label=example.label,
        pair=example.pair,
        scene=example.scene,
        meta=scene_meta(example.scene),
    )


_WORKER: dict = {}


def _init_worker(plan: SplitPlan, spec: DatasetSpec, split: str, root: str) -> None:
    _WORKER["plan"] = plan
    _WORKER["spec"] = spec
    _WORKER["split"] = split
    _WORKER["root"] = Path(root)


def _emit_record(plan, spec, split, root: Path, index: int) -> str:
    record = generate_record(plan, spec, split, index)
    png = render_scene(record.scene, spec.render)
    (root / record.image_path).write_bytes(png)
    return json.dumps(record_to_json_dict(record), separators=(",", ":"))


def _emit_chunk(bounds: tuple[int, int]) -> list[str]:
    start, stop = bounds
    plan, spec, split, root = _WORKER["plan"], _WORKER["spec"], _WORKER["split"], _WORKER["root"]
    return [_emit_record(plan, spec, split, root, i) for i in range(start, stop)]


@dataclass
class SplitStats:
    split: str
    n: int
    n_true: int
    n_false: int
    distinct_pairs: int


@dataclass
class BuildReport:
    root: str
    task: str
    seed: int
    splits: list[SplitStats]
    seconds: float

    def summary_lines(self) -> list[str]:
        lines = [f"task={self.task} seed={self.seed} root={self.root} ({self.seconds:.1f}s)"]
        lines.append(f"{'split':<10} {'records':>8} {'true':>8} {'false':>8} {'pairs':>6}")
        for s in self.splits:
            lines.append(
                f"{s.split:<10} {s.n:>8} {s.n_true:>8} {s.n_false:>8} {s.distinct_pairs:>6}"
            )
        return lines


def default_jobs() -> int:
    return min(4, os.cpu_count() or 1)


def build_dataset(spec: DatasetSpec, out_dir: str | Path, jobs: int | None = None) -> BuildReport:
    """Materialize the full dataset; rebuilds with equal spec are byte-identical."""
    started = time.monotonic()
    jobs = default_jobs() if jobs is None else max(1, jobs)
    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)
    plan = build_split_plan(spec.task, spec.holdout_fraction, spec.seed, spec.sampler)

    (root / "config.json").write_text(json.dumps(spec_to_json_dict(spec), indent=2) + "\n")
    partition_doc = {
        "task": spec.task,
        "seed": spec.seed,
        "holdout_fraction": spec.holdout_fraction,
        "partitions": [partition_to_json_dict(plan.partitions[s]) for s in SCOPES_BY_TASK[spec.task]],
    }
    (root / "partition.json").write_text(json.dumps(partition_doc, indent=2) + "\n")
    (root / "blank.png").write_bytes(blank_image(spec.render))

    stats = []
    for split in SPLITS:
        n = spec.sizes.for_split(split)
        (root / split / "images").mkdir(parents=True, exist_ok=True)
        if jobs == 1 or n < 256:
            _init_worker(plan, spec, split, str(root))
            lines = _emit_chunk((0, n))
        else:
            chunk = 512
            bounds = [(i, min(i + chunk, n)) for i in range(0, n, chunk)]
            lines = []
            with ProcessPoolExecutor(
                max_workers=jobs,
                mp_context=get_context("fork"),
                initializer=_init_worker,
                initargs=(plan, spec, split, str(root)),
            ) as pool:
                for part in pool.map(_emit_chunk, bounds):
                    lines.extend(part)
        write_manifest(root / split / "manifest.jsonl", lines)
        n_true = 0
        pairs = set()
        for line in lines:
            data = json.loads(line)
            n_true += bool(data["label"])
            pairs.add((data["pair"]["scope"], data["pair"]["a"], data["pair"]["b"]))
        stats.append(SplitStats(split, len(lines), n_true, len(lines) - n_true, len(pairs)))
    return BuildReport(str(root), spec.task, spec.seed, stats, time.monotonic() - started)


def materialize_view(records: list[dict], view: str, seed: int = 0) -> list[dict]:
    """Re-express manifest records under a modality view.

    image_caption is the identity; the other views rewrite caption/image_path
    and add modality and text_input fields. Labels, ids, and order never
    change.
    """
    if view not in VIEWS:
        raise InvalidInput(f"unknown view {view!r}; expected one of {', '.join(VIEWS)}")
    if view == "image_caption":
        return [dict(r) for r in records]

    def as_view(record: dict, modality: str) -> dict:
        out = dict(record)
        query_text = render_query(query_from_json_dict(record["query"]))
        out["modality"] = modality
        if modality == "image_only":
            out["caption"] = ""
            out["text_input"] = concat_text_input(None, query_text)
        elif modality == "caption_only":
            out["image_path"] = "blank.png"
            out["text_input"] = concat_text_input(record["caption"], query_text)
        else:
            out["text_input"] = concat_text_input(record["caption"], query_text)
        return out

    if view == "image_only" or view == "caption_only":
        return [as_view(r, view) for r in records]
    # mixed: exact 25/25/50 allocation over a seeded permutation
    n = len(records)
    n_img = round(n * MIXED_IMAGE_ONLY)
    n_cap = round(n * MIXED_CAPTION_ONLY)
    perm = substream(seed, STREAM_VIEW).permutation(n)
    modality = ["image_caption"] * n
    for i in perm[:n_img]:
        modality[i] = "image_only"
    for i in perm[n_img : n_img + n_cap]:
        modality[i] = "caption_only"
    return [as_view(r, m) for r, m in zip(records, modality)]


def write_view(root: str | Path, view: str, seed: int = 0) -> list[Path]:
    """Materialize a view of every split; returns the paths written."""
    root = Path(root)
    written = []
    for split in SPLITS:
        manifest = root / split / "manifest.jsonl"
        if not manifest.exists():
            raise InvalidInput(f"{manifest} not found")
        records = load_manifest(manifest)
        out = materialize_view(records, view, seed)
        path = root / split / f"manifest.{view}.jsonl"
        write_manifest(path, [json.dumps(r, separators=(",", ":")) for r in out])
        written.append(path)
    return written


def sample_fewshot(records: list[dict], n: int = 200, seed: int = 0) -> list[dict]:
    """Label-balanced subset of n records, in original manifest order."""
    if n < 0:
        raise InvalidInput("n must be non-negative")
    if n == 0:
        return []
    n_true = n // 2
    n_false = n - n_true
    true_idx = [i for i, r in enumerate(records) if r["label"]]
    false_idx = [i for i, r in enumerate(records) if not r["label"]]
    if len(true_idx) < n_true or len(false_idx) < n_false:
        raise InvalidInput(
            f"cannot draw {n_true}/{n_false} per label from "
            f"{len(true_idx)} true / {len(false_idx)} false records"
        )
    rng = substream(seed, STREAM_FEWSHOT)
    chosen = set(true_idx[i] for i in rng.choice(len(true_idx), size=n_true, replace=False))
    chosen.update(false_idx[i] for i in rng.choice(len(false_idx), size=n_false, replace=False))
    return [records[i] for i in sorted(chosen)]


# ---------------------------------------------------------------------------
# verification

_QUANT_REGION_CAP = 5  # attribute regions never exceed the pair-part maximum


def _check_record(
    data: dict,
    spec: DatasetSpec,
    plan: SplitPlan,
    side_texts: dict[str, frozenset[str]],
    split: str,
    index: int,
    root: Path,
    add,
) -> ExampleRecord | None:
    rid = record_id(spec.task, split, index)
    if data.get("id") != rid:
        add("id_sequence", rid, f"expected id {rid!r}, found {data.get('id')!r}")
        return None
    try:
        record = record_from_json_dict(data)
    except InvalidInput as exc:
        add("record_schema", rid, str(exc))
        return None
    if record.task != spec.task:
        add("task_field", rid, f"task {record.task!r} != dataset task {spec.task!r}")
    if record.split != split:
        add("split_field", rid, f"split field {record.split!r} != {split!r}")

    problems = validate_scene(record.scene)
    if problems:
        add("scene_valid", rid, "; ".join(problems))
        return record
    if record.scene != canonicalize(record.scene):
        add("scene_order", rid, "scene objects are not in row-major order")
    problems = validate_query(record.query)
    if problems:
        add("query_valid", rid, "; ".join(problems))
        return record

    # dual-route text checks: stored strings must re-render and re-parse exactly
    if record.caption != render_caption(record.scene):
        add("caption_text", rid, "caption differs from the rendered scene caption")
    elif parse_caption(record.caption) != canonicalize(record.scene):
        add("caption_parse", rid, "caption does not parse back to the stored scene")
    query_text = render_query(record.query)
    if parse_query(query_text) != record.query:
        add("query_parse", rid, "query text does not parse back to the stored query")

    if eval_query(record.scene, record.query) != record.label:
        add("label_oracle", rid, "stored label disagrees with semantics")
    if pair_key(record.scene, record.query) != record.pair:
        add("pair_oracle", rid, "stored pair disagrees with recomputed pair key")
    if record.meta != scene_meta(record.scene):
        add("meta_counts", rid, "meta counts disagree with the scene")

    side = SPLIT_SIDES[split]
    partition = plan.partitions.get(record.pair.scope)
    if partition is None or (record.pair.a, record.pair.b) not in partition.side(side):
        add(
            "pair_disjointness",
            rid,
            f"pair ({record.pair.scope}, {record.pair.a}, {record.pair.b}) "
            f"is not a {side}-side cell",
        )
    if query_text not in side_texts[side]:
        add("query_text_side", rid, f"query text is not on the {side} side: {query_text!r}")

    _check_ranges(record, spec.sampler, add)

    image = root / record.image_path
    if not image.exists():
        add("image_missing", rid, f"{record.image_path} does not exist")
    else:
        try:
            with Image.open(image) as im:
                size = im.size
        except OSError as exc:
            add("image_decode", rid, str(exc))
        else:
            expected = (spec.render.canvas_px, spec.render.canvas_px)
            if size != expected:
                add("image_size", rid, f"image is {size}, expected {expected}")
    return record


def _check_ranges(record: ExampleRecord, cfg: SamplerConfig, add) -> None:
    rid = record.id
    total = len(record.scene.objects)
    query = record.query
    if isinstance(query, SpatialQuery):
        lo, hi = cfg.spatial_distractors
        if not (2 + lo <= total <= 2 + hi):
            add("range_objects", rid, f"spatial scene has {total} objects")
    elif isinstance(query, CardinalityQuery):
        lo, hi = cfg.cardinality_count
        relevant = sum(1 for o in record.scene.objects if o.shape is query.shape)
        if not (lo <= relevant <= hi):
            add("range_relevant", rid, f"{relevant} relevant objects outside [{lo}, {hi}]")
        if not (lo <= query.number <= hi):
            add("range_number", rid, f"query number {query.number} outside [{lo}, {hi}]")
        dlo, dhi = cfg.cardinality_distractors
        if not (dlo <= total - relevant <= dhi):
            add("range_distractors", rid, f"{total - relevant} distractors outside [{dlo}, {dhi}]")
    elif isinstance(query, QuantifiedQuery):
        x = {o for o in record.scene.objects if attribute_matches(o, query.attr1)}
        y = {o for o in record.scene.objects if attribute_matches(o, query.attr2)}
        regions = (len(x & y), len(x - y), len(y - x))
        if max(regions) > _QUANT_REGION_CAP:
            add("range_regions", rid, f"attribute regions {regions} exceed {_QUANT_REGION_CAP}")
        dlo, dhi = cfg.quantifier_distractors
        others = total - len(x | y)
        if not (dlo <= others <= dhi):
            add("range_distractors", rid, f"{others} distractors outside [{dlo}, {dhi}]")
    else:
        lo, hi = cfg.comparison_count
        a = sum(1 for o in record.scene.objects if attribute_matches(o, query.attr1))
        b = sum(1 for o in record.scene.objects if attribute_matches(o, query.attr2))
        if not (lo <= a <= hi and lo <= b <= hi):
            add("range_counts", rid, f"group sizes ({a}, {b}) outside [{lo}, {hi}]")
        dlo, dhi = cfg.comparison_distractors
        others = total - a - b
        if not (dlo <= others <= dhi):
            add("range_distractors", rid, f"{others} distractors outside [{dlo}, {dhi}]")




@dataclass
class VerifyReport:
    root: str
    checked_records: int
    violations: list[dict]

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json_dict(self) -> dict:
        return {
            "root": self.root,
            "checked_records": self.checked_records,
            "ok": self.ok,
            "violations": self.violations,
        }


def verify_dataset(root: str | Path) -> VerifyReport:
    """Re-derive everything checkable and report every violation found."""
    root = Path(root)
    violations: list[dict] = []
    checked = 0

    def add(check: str, where: str, detail: str) -> None:
        violations.append({"check": check, "where": where, "detail": detail})

    try:
        spec = load_config(root)
    except InvalidInput as exc:
        add("layout", "config.json", str(exc))
        return VerifyReport(str(root), 0, violations)
    plan = build_split_plan(spec.task, spec.holdout_fraction, spec.seed, spec.sampler)

    partition_path = root / "partition.json"
    if not partition_path.exists():
        add("layout", "partition.json", "file missing")
    else:
        try:
            doc = json.loads(partition_path.read_text())
            stored = {p["scope"]: partition_from_json_dict(p) for p in doc["partitions"]}
        except (InvalidInput, KeyError, TypeError, json.JSONDecodeError) as exc:
            add("layout", "partition.json", f"unreadable: {exc}")
        else:
            if stored != plan.partitions:
                add("partition_match", "partition.json", "stored partition differs from the one derived from config.json")
    if not (root / "blank.png").exists():
        add("layout", "blank.png", "file missing")

    plan_texts = {"train": plan.query_texts("train"), "ood": plan.query_texts("ood")}
    side_texts: dict[str, set] = {"train": set(), "ood": set()}
    side_pairs: dict[str, set] = {"train": set(), "ood": set()}
    for split in SPLITS:
        manifest = root / split / "manifest.jsonl"
        if not manifest.exists():
            add("layout", f"{split}/manifest.jsonl", "file missing")
            continue
        n_true = 0
        count = 0
        for index, data in enumerate(iter_manifest(manifest)):
            checked += 1
            count += 1
            record = _check_record(data, spec, plan, plan_texts, split, index, root, add)
            if record is None:
                continue
            n_true += record.label
            side = SPLIT_SIDES[split]
            side_pairs[side].add((record.pair.scope, record.pair.a, record.pair.b))
            side_texts[side].add(render_query(record.query))
        expected = spec.sizes.for_split(split)
        if count != expected:
            add("split_size", split, f"{count} records, config says {expected}")
        if not spec.loose_balance and abs(n_true - count / 2) > 1:
            add("label_balance", split, f"{n_true} true of {count}")

    overlap_pairs = side_pairs["train"] & side_pairs["ood"]
    for scope, a, b in sorted(overlap_pairs):
        add("pair_disjointness", "ood_test", f"pair ({scope}, {a}, {b}) occurs on both sides")
    overlap_texts = side_texts["train"] & side_texts["ood"]
    for text in sorted(overlap_texts):
        add("query_text_disjointness", "ood_test", f"query text on both sides: {text!r}")
    return VerifyReport(str(root), checked, violations)
