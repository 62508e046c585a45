"""Train/OOD partitioning and example sampling.

Generalization is controlled at two levels. Each task projects examples onto
a finite grid of pair keys; a held-out subset of cells becomes the OOD side,
under two constraints: every value appearing in an OOD pair must also appear
in some train pair (OOD cells are novel *combinations*, not novel values),
and both labels must stay constructible on both sides. Independently, the
finite space of query strings is split so OOD test queries are never worded
identically to anything seen in train.

Samplers then work backwards from a chosen pair cell to a scene: referent
coordinates, shape counts, or attribute-region sizes are laid down first and
distractor objects that cannot affect the label are added last.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import GridFull, InfeasiblePartition, InvalidInput, SamplingExhausted
from .rng import STREAM_PARTITION, STREAM_QUERY_SPLIT, TASK_CODES, pick, substream
from .scene import (
    COLOURS,
    GRID_SIZE,
    GridPos,
    ObjectSpec,
    Scene,
    SHAPES,
    Colour,
    Shape,
    canonicalize,
)
from .semantics import (
    SCOPES_BY_TASK,
    CardinalityQuery,
    ComparisonQuery,
    ComparisonRel,
    PairKey,
    QuantifiedQuery,
    Quantifier,
    Query,
    SpatialQuery,
    SpatialRel,
    eval_query,
    pair_key,
)
from .textgen import render_query

DESCRIPTIONS = tuple((c, s) for c in COLOURS for s in SHAPES)

# Cross-family attribute pairs, colour-first then shape-first.
ATTR_PAIRS = tuple((c, s) for c in COLOURS for s in SHAPES) + tuple(
    (s, c) for s in SHAPES for c in COLOURS
)

# Quantifiers whose second pair component is the truth-deciding region
# (b >= 1 iff the statement holds); the others decide truth through a region
# that is not part of the key at all.
WITNESS_QUANTS = frozenset({Quantifier.NOT_ALL, Quantifier.SOME, Quantifier.NOT_ONLY})


@dataclass(frozen=True)
class SamplerConfig:
    """Per-task count ranges (inclusive) and the rejection retry cap."""

    spatial_distractors: tuple[int, int] = (1, 1)
    cardinality_count: tuple[int, int] = (1, 6)
    cardinality_distractors: tuple[int, int] = (1, 10)
    quantifier_part: tuple[int, int] = (1, 5)
    quantifier_distractors: tuple[int, int] = (2, 8)
    comparison_count: tuple[int, int] = (1, 9)
    comparison_distractors: tuple[int, int] = (1, 10)
    comparison_train_gap: tuple[int, int] = (1, 3)
    max_retries: int = 1000


DEFAULT_SAMPLER_CONFIG = SamplerConfig()


@dataclass(frozen=True)
class PairPartition:
    task: str
    scope: str
    train_pairs: frozenset[tuple[int, int]]
    ood_pairs: frozenset[tuple[int, int]]
    seed: int
    holdout_fraction: float

    def side(self, name: str) -> frozenset[tuple[int, int]]:
        if name == "train":
            return self.train_pairs
        if name == "ood":
            return self.ood_pairs
        raise InvalidInput(f"unknown side {name!r}")


@dataclass(frozen=True)
class LabeledExample:
    scene: Scene
    query: Query
    label: bool
    pair: PairKey


@dataclass
class SplitPlan:
    """A task's pair partitions plus the query-text split, with the indexes
    samplers draw from."""

    task: str
    seed: int
    holdout_fraction: float
    partitions: dict[str, PairPartition]
    train_queries: tuple[Query, ...]
    ood_queries: tuple[Query, ...]
    pairs_by_side: dict[str, dict[str, tuple[tuple[int, int], ...]]]
    queries_by_group: dict[str, dict[str, tuple[Query, ...]]]
    card_counts: dict[str, dict[int, tuple[int, ...]]]

    def query_texts(self, side: str) -> frozenset[str]:
        queries = self.train_queries if side == "train" else self.ood_queries
        return frozenset(render_query(q) for q in queries)


def pair_space(
    task: str, scope: str, cfg: SamplerConfig = DEFAULT_SAMPLER_CONFIG
) -> tuple[tuple[int, int], ...]:
    """All pair cells of one (task, scope), in canonical order."""
    if task not in SCOPES_BY_TASK:
        raise InvalidInput(f"unknown task {task!r}")
    if scope not in SCOPES_BY_TASK[task]:
        raise InvalidInput(f"task {task!r} has no scope {scope!r}")
    if task == "spatiality":
        span = range(GRID_SIZE)
        return tuple(itertools.product(span, span))
    if task == "cardinality":
        lo, hi = cfg.cardinality_count
        return tuple(itertools.product(range(lo, hi + 1), range(len(SHAPES))))
    if task == "quantifiers":
        lo, hi = cfg.quantifier_part
        first = range(lo, hi + 1)
        second = range(0, hi + 1) if Quantifier(scope) in WITNESS_QUANTS else first
        return tuple(itertools.product(first, second))
    lo, hi = cfg.comparison_count
    return tuple((a, b) for a in range(lo, hi + 1) for b in range(lo, hi + 1) if a != b)


def _coverage_ok(train: set, ood: set) -> bool:
    train_a = {a for a, _ in train}
    train_b = {b for _, b in train}
    return all(a in train_a and b in train_b for a, b in ood)


def _labels_ok(task: str, scope: str, cells: frozenset[tuple[int, int]]) -> bool:
    if not cells:
        return False
    if task == "spatiality":
        return any(a != b for a, b in cells)  # ties can only be false
    if task == "cardinality":
        counts_per_shape: dict[int, int] = {}
        for _, s in cells:
            counts_per_shape[s] = counts_per_shape.get(s, 0) + 1
        return any(n >= 2 for n in counts_per_shape.values())  # false needs a wrong number
    if task == "quantifiers" and Quantifier(scope) in WITNESS_QUANTS:
        return any(b == 0 for _, b in cells) and any(b >= 1 for _, b in cells)
    return True


def partition_pairs(
    task: str,
    scope: str,
    holdout_fraction: float = 0.2,
    seed: int = 0,
    cfg: SamplerConfig = DEFAULT_SAMPLER_CONFIG,
) -> PairPartition:
    """Split one pair space into train/OOD cells.

    Comparison splits on the count gap (train 1..3, OOD above); the other
    tasks hold out a random fraction of cells, stratified so both labels stay
    reachable, re-drawing until value coverage and label feasibility hold.
    """
    if not 0.0 < holdout_fraction < 1.0:
        raise InvalidInput(f"holdout fraction {holdout_fraction} outside (0, 1)")
    cells = pair_space(task, scope, cfg)
    if task == "comparison":
        gap_lo, gap_hi = cfg.comparison_train_gap
        train = frozenset((a, b) for a, b in cells if gap_lo <= abs(a - b) <= gap_hi)
        ood = frozenset(cells) - train
        if not train or not ood:
            raise InfeasiblePartition(
                f"comparison gap band {gap_lo}..{gap_hi} leaves an empty side"
            )
        return PairPartition(task, scope, train, ood, seed, holdout_fraction)

    if task == "quantifiers" and Quantifier(scope) in WITNESS_QUANTS:
        strata = [
            tuple(c for c in cells if c[1] == 0),
            tuple(c for c in cells if c[1] >= 1),
        ]
    else:
        strata = [cells]
    rng = substream(seed, STREAM_PARTITION, TASK_CODES[task], SCOPES_BY_TASK[task].index(scope))
    for _ in range(128):
        ood_cells: set[tuple[int, int]] = set()
        for stratum in strata:
            k = round(len(stratum) * holdout_fraction)
            k = max(1, min(k, len(stratum) - 1))
            chosen = rng.choice(len(stratum), size=k, replace=False)
            ood_cells.update(stratum[i] for i in chosen)
        train_cells = set(cells) - ood_cells
        if (
            _coverage_ok(train_cells, ood_cells)
            and _labels_ok(task, scope, frozenset(train_cells))
            and _labels_ok(task, scope, frozenset(ood_cells))
        ):
            return PairPartition(
                task, scope, frozenset(train_cells), frozenset(ood_cells), seed, holdout_fraction
            )
    raise InfeasiblePartition(
        f"no valid {task}/{scope} partition at holdout {holdout_fraction} after 128 draws"
    )


def query_space(task: str, cfg: SamplerConfig = DEFAULT_SAMPLER_CONFIG) -> tuple[Query, ...]:
    """Every distinct query AST a task can ever ask, in canonical order."""
    if task == "spatiality":
        return tuple(
            SpatialQuery(d1, rel, d2)
            for rel in SpatialRel
            for d1 in DESCRIPTIONS
            for d2 in DESCRIPTIONS
            if d1 != d2
        )
    if task == "cardinality":
        lo, hi = cfg.cardinality_count
        return tuple(
            CardinalityQuery(n, s) for n in range(lo, hi + 1) for s in SHAPES
        )
    if task == "quantifiers":
        return tuple(
            QuantifiedQuery(q, a1, a2) for q in Quantifier for a1, a2 in ATTR_PAIRS
        )
    if task == "comparison":
        return tuple(
            ComparisonQuery(rel, a1, a2) for rel in ComparisonRel for a1, a2 in ATTR_PAIRS
        )
    raise InvalidInput(f"unknown task {task!r}")


def _query_group(query: Query) -> str:
    if isinstance(query, SpatialQuery):
        return query.rel.value
    if isinstance(query, QuantifiedQuery):
        return query.quant.value
    if isinstance(query, ComparisonQuery):
        return query.rel.value
    return "default"


def _split_queries(
    task: str,
    holdout_fraction: float,
    seed: int,
    cfg: SamplerConfig,
    partitions: dict[str, PairPartition],
) -> tuple[tuple[Query, ...], tuple[Query, ...]]:
    space = query_space(task, cfg)
    if task == "cardinality":
        # The query number is always drawn from the pair side's count set for
        # that shape, so the text split simply mirrors the pair split.
        part = partitions["default"]
        train = tuple(q for q in space if (q.number, SHAPES.index(q.shape)) in part.train_pairs)
        ood = tuple(q for q in space if (q.number, SHAPES.index(q.shape)) in part.ood_pairs)
        return train, ood
    rng = substream(seed, STREAM_QUERY_SPLIT, TASK_CODES[task])
    groups: dict[str, list[Query]] = {}
    for q in space:
        groups.setdefault(_query_group(q), []).append(q)
    ood_set: set[Query] = set()
    for name in sorted(groups):
        members = groups[name]
        k = round(len(members) * holdout_fraction)
        k = max(1, min(k, len(members) - 1))
        chosen = rng.choice(len(members), size=k, replace=False)
        ood_set.update(members[i] for i in chosen)
    train = tuple(q for q in space if q not in ood_set)
    ood = tuple(q for q in space if q in ood_set)
    return train, ood


def build_split_plan(
    task: str,
    holdout_fraction: float = 0.2,
    seed: int = 0,
    cfg: SamplerConfig = DEFAULT_SAMPLER_CONFIG,
) -> SplitPlan:
    """Partition every scope of a task and split its query space."""
    partitions = {
        scope: partition_pairs(task, scope, holdout_fraction, seed, cfg)
        for scope in SCOPES_BY_TASK[task]
    }
    train_q, ood_q = _split_queries(task, holdout_fraction, seed, cfg, partitions)

    pairs_by_side = {
        side: {
            scope: tuple(sorted(partitions[scope].side(side)))
            for scope in SCOPES_BY_TASK[task]
        }
        for side in ("train", "ood")
    }
    queries_by_group: dict[str, dict[str, tuple[Query, ...]]] = {}
    for side, qs in (("train", train_q), ("ood", ood_q)):
        grouped: dict[str, list[Query]] = {}
        for q in qs:
            grouped.setdefault(_query_group(q), []).append(q)
        queries_by_group[side] = {name: tuple(members) for name, members in grouped.items()}
    card_counts: dict[str, dict[int, tuple[int, ...]]] = {"train": {}, "ood": {}}
    if task == "cardinality":
        for side in ("train", "ood"):
            per_shape: dict[int, list[int]] = {}
            for count, shape_idx in partitions["default"].side(side):
                per_shape.setdefault(shape_idx, []).append(count)
            card_counts[side] = {s: tuple(sorted(ns)) for s, ns in per_shape.items()}
    return SplitPlan(
        task=task,
        seed=seed,
        holdout_fraction=holdout_fraction,
        partitions=partitions,
        train_queries=train_q,
        ood_queries=ood_q,
        pairs_by_side=pairs_by_side,
        queries_by_group=queries_by_group,
        card_counts=card_counts,
    )


def _free_cells(occupied: set[tuple[int, int]]) -> list[tuple[int, int]]:
    return [
        (col, row)
        for row in range(GRID_SIZE)
        for col in range(GRID_SIZE)
        if (col, row) not in occupied
    ]


def _place(
    descs: list[tuple[Colour, Shape]],
    rng: np.random.Generator,
    occupied: set[tuple[int, int]] | None = None,
) -> list[ObjectSpec]:
    """Put each description on its own free cell, uniformly at random."""
    free = _free_cells(occupied or set())
    if len(descs) > len(free):
        raise GridFull(f"{len(descs)} objects requested, {len(free)} cells free")
    chosen = rng.choice(len(free), size=len(descs), replace=False)
    return [
        ObjectSpec(colour, shape, GridPos(*free[i]))
        for (colour, shape), i in zip(descs, chosen)
    ]


def _off_description(
    match: Colour | Shape, avoid: Colour | Shape, rng: np.random.Generator
) -> tuple[Colour, Shape]:
    """A description matching `match` but not `avoid` (attrs cross-family)."""
    if isinstance(match, Colour):
        return (match, pick(rng, [s for s in SHAPES if s is not avoid]))
    return (pick(rng, [c for c in COLOURS if c is not avoid]), match)


def _build_spatiality(
    plan: SplitPlan, side: str, label: bool, cfg: SamplerConfig, rng: np.random.Generator
) -> LabeledExample:
    usable = {}
    for axis in ("horizontal", "vertical"):
        cells = plan.pairs_by_side[side][axis]
        if label:
            cells = tuple(c for c in cells if c[0] != c[1])
        if cells:
            usable[axis] = cells
    if not usable:
        raise SamplingExhausted(f"no {side} spatial pair supports label={label}")
    axis = pick(rng, sorted(usable))
    a, b = pick(rng, usable[axis])
    horizontal = axis == "horizontal"
    if a == b:
        rel = pick(
            rng,
            (SpatialRel.LEFT_OF, SpatialRel.RIGHT_OF)
            if horizontal
            else (SpatialRel.ABOVE, SpatialRel.BELOW),
        )
    elif horizontal:
        rel = SpatialRel.LEFT_OF if (a < b) == label else SpatialRel.RIGHT_OF
    else:
        rel = SpatialRel.ABOVE if (a < b) == label else SpatialRel.BELOW
    query = pick(rng, plan.queries_by_group[side][rel.value])
    free1 = int(rng.integers(GRID_SIZE))
    if a == b:
        # same column (or row): the free coordinates must differ
        free2 = int(rng.integers(GRID_SIZE - 1))
        if free2 >= free1:
            free2 += 1
    else:
        free2 = int(rng.integers(GRID_SIZE))
    if horizontal:
        pos1, pos2 = GridPos(a, free1), GridPos(b, free2)
    else:
        pos1, pos2 = GridPos(free1, a), GridPos(free2, b)
    scene = canonicalize(
        Scene(
            (
                ObjectSpec(query.obj1[0], query.obj1[1], pos1),
                ObjectSpec(query.obj2[0], query.obj2[1], pos2),
            )
        )
    )
    return LabeledExample(scene, query, label, pair_key(scene, query))


def _build_cardinality(
    plan: SplitPlan, side: str, label: bool, cfg: SamplerConfig, rng: np.random.Generator
) -> LabeledExample:
    counts = plan.card_counts[side]
    if label:
        count, shape_idx = pick(rng, plan.pairs_by_side[side]["default"])
        number = count
    else:
        eligible = tuple(
            (n, s)
            for n, s in plan.pairs_by_side[side]["default"]
            if len(counts[s]) >= 2
        )
        if not eligible:
            raise SamplingExhausted(f"no {side} cardinality pair supports label=False")
        count, shape_idx = pick(rng, eligible)
        others = [n for n in counts[shape_idx] if n != count]
        near = [n for n in others if abs(n - count) <= 2]
        far = [n for n in others if abs(n - count) > 2]
        if near and far:
            number = pick(rng, near) if rng.random() < 0.5 else pick(rng, far)
        else:
            number = pick(rng, near or far)
    shape = SHAPES[shape_idx]
    descs = [(pick(rng, COLOURS), shape) for _ in range(count)]
    scene = canonicalize(Scene(tuple(_place(descs, rng))))
    query = CardinalityQuery(number, shape)
    return LabeledExample(scene, query, label, pair_key(scene, query))


def _build_quantifiers(
    plan: SplitPlan, side: str, label: bool, cfg: SamplerConfig, rng: np.random.Generator
) -> LabeledExample:
    quant = pick(rng, tuple(Quantifier))
    cells = plan.pairs_by_side[side][quant.value]
    if quant in WITNESS_QUANTS:
        cells = tuple(c for c in cells if (c[1] >= 1) == label)
    if not cells:
        raise SamplingExhausted(f"no {side} {quant.value} pair supports label={label}")
    a, b = pick(rng, cells)
    lo, hi = cfg.quantifier_part
    # The pair fixes two of (both, x_only, y_only); the third either decides
    # the label (0 vs >= 1) or is a free draw for the witness quantifiers.
    def deciding() -> int:
        return 0 if label else int(rng.integers(lo, hi + 1))

    def free() -> int:
        return int(rng.integers(0, hi + 1))

    if quant is Quantifier.ALL:
        both, y_only = a, b
        x_only = deciding()
    elif quant is Quantifier.NOT_ALL:
        both, x_only = a, b
        y_only = free()
    elif quant is Quantifier.NO:
        x_only, y_only = a, b
        both = deciding()
    elif quant is Quantifier.SOME:
        x_only, both = a, b
        y_only = free()
    elif quant is Quantifier.ONLY:
        both, x_only = a, b
        y_only = deciding()
    else:  # NOT_ONLY
        both, y_only = a, b
        x_only = free()
    query = pick(rng, plan.queries_by_group[side][quant.value])
    attr1, attr2 = query.attr1, query.attr2
    colour_attr = attr1 if isinstance(attr1, Colour) else attr2
    shape_attr = attr2 if isinstance(attr1, Colour) else attr1
    descs = [(colour_attr, shape_attr)] * both
    descs += [_off_description(attr1, attr2, rng) for _ in range(x_only)]
    descs += [_off_description(attr2, attr1, rng) for _ in range(y_only)]
    scene = canonicalize(Scene(tuple(_place(descs, rng))))
    return LabeledExample(scene, query, label, pair_key(scene, query))


def _build_comparison(
    plan: SplitPlan, side: str, label: bool, cfg: SamplerConfig, rng: np.random.Generator
) -> LabeledExample:
    a, b = pick(rng, plan.pairs_by_side[side]["default"])
    rel = ComparisonRel.MORE if (a > b) == label else ComparisonRel.FEWER
    query = pick(rng, plan.queries_by_group[side][rel.value])
    descs = [_off_description(query.attr1, query.attr2, rng) for _ in range(a)]
    descs += [_off_description(query.attr2, query.attr1, rng) for _ in range(b)]
    scene = canonicalize(Scene(tuple(_place(descs, rng))))
    return LabeledExample(scene, query, label, pair_key(scene, query))


_BUILDERS = {
    "spatiality": _build_spatiality,
    "cardinality": _build_cardinality,
    "quantifiers": _build_quantifiers,
    "comparison": _build_comparison,
}


def _distractor_range(task: str, cfg: SamplerConfig) -> tuple[int, int]:
    return {
        "spatiality": cfg.spatial_distractors,
        "cardinality": cfg.cardinality_distractors,
        "quantifiers": cfg.quantifier_distractors,
        "comparison": cfg.comparison_distractors,
    }[task]


def _distractor_pool(query: Query) -> tuple[tuple[Colour, Shape], ...]:
    """Descriptions that can never interact with the query."""
    if isinstance(query, SpatialQuery):
        return tuple(d for d in DESCRIPTIONS if d != query.obj1 and d != query.obj2)
    if isinstance(query, CardinalityQuery):
        return tuple(d for d in DESCRIPTIONS if d[1] is not query.shape)
    attrs = (query.attr1, query.attr2)
    colour_attr = next(a for a in attrs if isinstance(a, Colour))
    shape_attr = next(a for a in attrs if isinstance(a, Shape))
    return tuple(
        d for d in DESCRIPTIONS if d[0] is not colour_attr and d[1] is not shape_attr
    )


def add_distractors(
    example: LabeledExample, cfg: SamplerConfig, rng: np.random.Generator
) -> LabeledExample:
    """Pad the scene with label-neutral objects; label and pair are recomputed
    and must come out unchanged."""
    lo, hi = _distractor_range(example.pair.task, cfg)
    k = int(rng.integers(lo, hi + 1))
    pool = _distractor_pool(example.query)
    descs = [pick(rng, pool) for _ in range(k)]
    occupied = {(o.pos.col, o.pos.row) for o in example.scene.objects}
    added = _place(descs, rng, occupied)
    scene = canonicalize(Scene(example.scene.objects + tuple(added)))
    return LabeledExample(scene, example.query, example.label, pair_key(scene, example.query))


def sample_core_example(
    plan: SplitPlan,
    side: str,
    target_label: bool,
    cfg: SamplerConfig,
    rng: np.random.Generator,
) -> LabeledExample:
    """One example without distractors (the minimal scene for its pair)."""
    if side not in ("train", "ood"):
        raise InvalidInput(f"unknown side {side!r}")
    return _BUILDERS[plan.task](plan, side, bool(target_label), cfg, rng)


def sample_example(
    plan: SplitPlan,
    side: str,
    target_label: bool,
    cfg: SamplerConfig,
    rng: np.random.Generator,
) -> LabeledExample:
    """One complete example: core scene, distractors, label/pair re-checked.

    Construction is direct, so the retry loop exists only to absorb rare
    self-check failures; exhausting it means the plan/config combination is
    inconsistent.
    """
    if side not in ("train", "ood"):
        raise InvalidInput(f"unknown side {side!r}")
    target = bool(target_label)
    for _ in range(cfg.max_retries):
        example = add_distractors(sample_core_example(plan, side, target, cfg, rng), cfg, rng)
        if example.label is not target or eval_query(example.scene, example.query) is not target:
            continue
        cell = (example.pair.a, example.pair.b)
        if cell not in plan.partitions[example.pair.scope].side(side):
            continue
        return example
    raise SamplingExhausted(
        f"{plan.task}/{side}/label={target}: no consistent example within {cfg.max_retries} tries"
    )


def partition_to_json_dict(partition: PairPartition) -> dict:
    return {
        "task": partition.task,
        "scope": partition.scope,
        "train_pairs": [list(p) for p in sorted(partition.train_pairs)],
        "ood_pairs": [list(p) for p in sorted(partition.ood_pairs)],
        "seed": partition.seed,
        "holdout_fraction": partition.holdout_fraction,
    }


def partition_from_json_dict(data: dict) -> PairPartition:
    try:
        return PairPartition(
            task=data["task"],
            scope=data["scope"],
            train_pairs=frozenset((int(a), int(b)) for a, b in data["train_pairs"]),
            ood_pairs=frozenset((int(a), int(b)) for a, b in data["ood_pairs"]),
            seed=int(data["seed"]),
            holdout_fraction=float(data["holdout_fraction"]),
        )
    except (KeyError, ValueError, TypeError) as exc:
        raise InvalidInput(f"malformed partition JSON: {exc}") from exc
