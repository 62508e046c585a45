"""Independent reference implementations for cross-checking the package.

Everything here is deliberately written from the task definitions using plain
loops, stdlib randomness, and hardcoded tables -- no reuse of package logic
beyond the data types themselves. If the package and these oracles agree on
random inputs, a shared bug is much less likely.
"""

from __future__ import annotations

import math
import random

from travlr.scene import Colour, GridPos, ObjectSpec, Scene, Shape
from travlr.semantics import (
    CardinalityQuery,
    ComparisonQuery,
    QuantifiedQuery,
    SpatialQuery,
)

# independent copies of the canonical orders
COLOUR_ORDER = ("red", "blue", "green", "yellow", "orange")
SHAPE_ORDER = ("square", "circle", "triangle", "star", "hexagon", "octagon", "pentagon")


def _matches(obj: ObjectSpec, attr) -> bool:
    return obj.colour.value == getattr(attr, "value", attr) or obj.shape.value == getattr(
        attr, "value", attr
    )


def _regions(scene: Scene, attr1, attr2) -> tuple[int, int, int]:
    """(|X&Y|, |X-Y|, |Y-X|) by explicit enumeration."""
    inter = x_only = y_only = 0
    for obj in scene.objects:
        in_x = _matches(obj, attr1)
        in_y = _matches(obj, attr2)
        if in_x and in_y:
            inter += 1
        elif in_x:
            x_only += 1
        elif in_y:
            y_only += 1
    return inter, x_only, y_only


def oracle_label(scene: Scene, query) -> bool:
    if isinstance(query, SpatialQuery):
        first = [o for o in scene.objects if (o.colour, o.shape) == query.obj1]
        second = [o for o in scene.objects if (o.colour, o.shape) == query.obj2]
        if len(first) != 1 or len(second) != 1:
            raise LookupError("referents must be unique")
        o1, o2 = first[0], second[0]
        return {
            "left_of": o1.pos.col < o2.pos.col,
            "right_of": o1.pos.col > o2.pos.col,
            "above": o1.pos.row < o2.pos.row,
            "below": o1.pos.row > o2.pos.row,
        }[query.rel.value]
    if isinstance(query, CardinalityQuery):
        return len([o for o in scene.objects if o.shape == query.shape]) == query.number
    if isinstance(query, QuantifiedQuery):
        inter, x_only, y_only = _regions(scene, query.attr1, query.attr2)
        return {
            "all": x_only == 0,
            "not_all": x_only > 0,
            "no": inter == 0,
            "some": inter > 0,
            "only": y_only == 0,
            "not_only": y_only > 0,
        }[query.quant.value]
    if isinstance(query, ComparisonQuery):
        a = len([o for o in scene.objects if _matches(o, query.attr1)])
        b = len([o for o in scene.objects if _matches(o, query.attr2)])
        return a > b if query.rel.value == "more" else a < b
    raise TypeError(query)


# quantifier -> which two of (inter, x_only, y_only) form the pair
_QUANT_PAIR_TABLE = {
    "all": (0, 2),
    "not_all": (0, 1),
    "no": (1, 2),
    "some": (1, 0),
    "only": (0, 1),
    "not_only": (0, 2),
}


def oracle_pair(scene: Scene, query) -> tuple[str, str, int, int]:
    if isinstance(query, SpatialQuery):
        o1 = next(o for o in scene.objects if (o.colour, o.shape) == query.obj1)
        o2 = next(o for o in scene.objects if (o.colour, o.shape) == query.obj2)
        if query.rel.value in ("left_of", "right_of"):
            return ("spatiality", "horizontal", o1.pos.col, o2.pos.col)
        return ("spatiality", "vertical", o1.pos.row, o2.pos.row)
    if isinstance(query, CardinalityQuery):
        actual = len([o for o in scene.objects if o.shape == query.shape])
        return ("cardinality", "default", actual, SHAPE_ORDER.index(query.shape.value))
    if isinstance(query, QuantifiedQuery):
        regions = _regions(scene, query.attr1, query.attr2)
        i, j = _QUANT_PAIR_TABLE[query.quant.value]
        return ("quantifiers", query.quant.value, regions[i], regions[j])
    if isinstance(query, ComparisonQuery):
        a = len([o for o in scene.objects if _matches(o, query.attr1)])
        b = len([o for o in scene.objects if _matches(o, query.attr2)])
        return ("comparison", "default", a, b)
    raise TypeError(query)


def binomial_tail_ge(k: int, n: int, p: float = 0.5) -> float:
    """P(X >= k) for X ~ Binomial(n, p), summed in log space via lgamma."""
    if k <= 0:
        return 1.0
    if k > n:
        return 0.0
    log_terms = []
    log_p, log_q = math.log(p), math.log(1.0 - p)
    for j in range(k, n + 1):
        log_c = math.lgamma(n + 1) - math.lgamma(j + 1) - math.lgamma(n - j + 1)
        log_terms.append(log_c + j * log_p + (n - j) * log_q)
    peak = max(log_terms)
    return math.exp(peak) * math.fsum(math.exp(t - peak) for t in log_terms)


def random_scene(rnd: random.Random, min_objects: int = 1, max_objects: int = 20) -> Scene:
    n = rnd.randint(min_objects, max_objects)
    cells = rnd.sample([(c, r) for c in range(6) for r in range(6)], n)
    return Scene(
        tuple(
            ObjectSpec(
                Colour(rnd.choice(COLOUR_ORDER)),
                Shape(rnd.choice(SHAPE_ORDER)),
                GridPos(col, row),
            )
            for col, row in cells
        )
    )


def random_query_for(scene: Scene, task: str, rnd: random.Random):
    """A query valid for the scene, or None when the scene cannot host one."""
    from travlr.semantics import ComparisonRel, Quantifier, SpatialRel

    if task == "spatiality":
        unique = {}
        for o in scene.objects:
            unique[(o.colour, o.shape)] = unique.get((o.colour, o.shape), 0) + 1
        singles = [d for d, n in unique.items() if n == 1]
        if len(singles) < 2:
            return None
        d1, d2 = rnd.sample(singles, 2)
        return SpatialQuery(d1, SpatialRel(rnd.choice(["left_of", "right_of", "above", "below"])), d2)
    if task == "cardinality":
        return CardinalityQuery(rnd.randint(0, 8), Shape(rnd.choice(SHAPE_ORDER)))
    colour = Colour(rnd.choice(COLOUR_ORDER))
    shape = Shape(rnd.choice(SHAPE_ORDER))
    attr1, attr2 = (colour, shape) if rnd.random() < 0.5 else (shape, colour)
    if task == "quantifiers":
        quant = Quantifier(rnd.choice(["all", "not_all", "no", "some", "only", "not_only"]))
        return QuantifiedQuery(quant, attr1, attr2)
    return ComparisonQuery(ComparisonRel(rnd.choice(["more", "fewer"])), attr1, attr2)
