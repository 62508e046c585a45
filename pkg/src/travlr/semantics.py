"""Query ASTs, truth evaluation, and pair keys.

Four query families over a scene: spatial relations between two uniquely
described objects, shape cardinality, quantified attribute statements, and
count comparison between two attribute groups. Every (scene, query) example
also projects to a PairKey, the two-number summary on which train/OOD
partitioning operates.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .errors import InvalidInput, ReferentError
from .scene import (
    Attribute,
    Colour,
    Scene,
    Shape,
    SHAPES,
    attribute_family,
    select,
)

TASKS = ("spatiality", "cardinality", "quantifiers", "comparison")


class SpatialRel(str, Enum):
    LEFT_OF = "left_of"
    RIGHT_OF = "right_of"
    ABOVE = "above"
    BELOW = "below"

    @property
    def horizontal(self) -> bool:
        return self in (SpatialRel.LEFT_OF, SpatialRel.RIGHT_OF)


class Quantifier(str, Enum):
    ALL = "all"
    NOT_ALL = "not_all"
    NO = "no"
    SOME = "some"
    ONLY = "only"
    NOT_ONLY = "not_only"


class ComparisonRel(str, Enum):
    MORE = "more"
    FEWER = "fewer"


# Scopes index the disjoint pair-key spaces of each task.
SCOPES_BY_TASK = {
    "spatiality": ("horizontal", "vertical"),
    "cardinality": ("default",),
    "quantifiers": tuple(q.value for q in Quantifier),
    "comparison": ("default",),
}


@dataclass(frozen=True)
class SpatialQuery:
    obj1: tuple[Colour, Shape]
    rel: SpatialRel
    obj2: tuple[Colour, Shape]


@dataclass(frozen=True)
class CardinalityQuery:
    number: int
    shape: Shape


@dataclass(frozen=True)
class QuantifiedQuery:
    quant: Quantifier
    attr1: Attribute
    attr2: Attribute


@dataclass(frozen=True)
class ComparisonQuery:
    rel: ComparisonRel
    attr1: Attribute
    attr2: Attribute


Query = SpatialQuery | CardinalityQuery | QuantifiedQuery | ComparisonQuery


@dataclass(frozen=True)
class PairKey:
    task: str
    scope: str
    a: int
    b: int


def task_of(query: Query) -> str:
    if isinstance(query, SpatialQuery):
        return "spatiality"
    if isinstance(query, CardinalityQuery):
        return "cardinality"
    if isinstance(query, QuantifiedQuery):
        return "quantifiers"
    if isinstance(query, ComparisonQuery):
        return "comparison"
    raise InvalidInput(f"not a query: {query!r}")


def validate_query(query: Query) -> list[str]:
    """Constraint violations as strings; [] means the query is well-formed."""
    problems = []
    if isinstance(query, SpatialQuery):
        if query.obj1 == query.obj2:
            problems.append("spatial referents share one description")
    elif isinstance(query, CardinalityQuery):
        if not (0 <= query.number <= 36):
            problems.append(f"cardinality number {query.number} outside [0, 36]")
    elif isinstance(query, (QuantifiedQuery, ComparisonQuery)):
        if attribute_family(query.attr1) == attribute_family(query.attr2):
            problems.append("attr1 and attr2 must come from different families")
    else:
        problems.append(f"not a query: {query!r}")
    return problems


def _unique_referent(scene: Scene, desc: tuple[Colour, Shape]):
    matches = [o for o in scene.objects if o.description == desc]
    if len(matches) != 1:
        colour, shape = desc
        raise ReferentError(f"'{colour.value} {shape.value}' matches {len(matches)} objects, need exactly 1")
    return matches[0]


def eval_spatial(scene: Scene, query: SpatialQuery) -> bool:
    """Strict coordinate comparison; ties on the relevant axis are false."""
    o1 = _unique_referent(scene, query.obj1)
    o2 = _unique_referent(scene, query.obj2)
    if query.rel is SpatialRel.LEFT_OF:
        return o1.pos.col < o2.pos.col
    if query.rel is SpatialRel.RIGHT_OF:
        return o1.pos.col > o2.pos.col
    if query.rel is SpatialRel.ABOVE:
        return o1.pos.row < o2.pos.row
    return o1.pos.row > o2.pos.row


def eval_cardinality(scene: Scene, query: CardinalityQuery) -> bool:
    return sum(1 for o in scene.objects if o.shape is query.shape) == query.number


def eval_quantified(scene: Scene, query: QuantifiedQuery) -> bool:
    """Set semantics over X = select(attr1), Y = select(attr2); empty X or Y
    follows vacuous truth (all/no hold, some fails)."""
    x = set(select(scene, query.attr1))
    y = set(select(scene, query.attr2))
    q = query.quant
    if q is Quantifier.ALL:
        return x <= y
    if q is Quantifier.NOT_ALL:
        return bool(x - y)
    if q is Quantifier.NO:
        return not (x & y)
    if q is Quantifier.SOME:
        return bool(x & y)
    if q is Quantifier.ONLY:
        return y <= x
    return bool(y - x)  # NOT_ONLY


def eval_comparison(scene: Scene, query: ComparisonQuery) -> bool:
    a = len(select(scene, query.attr1))
    b = len(select(scene, query.attr2))
    return a > b if query.rel is ComparisonRel.MORE else a < b


def eval_query(scene: Scene, query: Query) -> bool:
    if isinstance(query, SpatialQuery):
        return eval_spatial(scene, query)
    if isinstance(query, CardinalityQuery):
        return eval_cardinality(scene, query)
    if isinstance(query, QuantifiedQuery):
        return eval_quantified(scene, query)
    if isinstance(query, ComparisonQuery):
        return eval_comparison(scene, query)
    raise InvalidInput(f"not a query: {query!r}")


# Quantifier pair keys as (region, region) picks out of
# (i, dx, dy) = (|X&Y|, |X-Y|, |Y-X|).
_QUANT_PAIR = {
    Quantifier.ALL: ("i", "dy"),
    Quantifier.NOT_ALL: ("i", "dx"),
    Quantifier.NO: ("dx", "dy"),
    Quantifier.SOME: ("dx", "i"),
    Quantifier.ONLY: ("i", "dx"),
    Quantifier.NOT_ONLY: ("i", "dy"),
}


def pair_key(scene: Scene, query: Query) -> PairKey:
    """The two-number summary used for train/OOD disjointness."""
    if isinstance(query, SpatialQuery):
        o1 = _unique_referent(scene, query.obj1)
        o2 = _unique_referent(scene, query.obj2)
        if query.rel.horizontal:
            return PairKey("spatiality", "horizontal", o1.pos.col, o2.pos.col)
        return PairKey("spatiality", "vertical", o1.pos.row, o2.pos.row)
    if isinstance(query, CardinalityQuery):
        actual = sum(1 for o in scene.objects if o.shape is query.shape)
        return PairKey("cardinality", "default", actual, SHAPES.index(query.shape))
    if isinstance(query, QuantifiedQuery):
        x = set(select(scene, query.attr1))
        y = set(select(scene, query.attr2))
        regions = {"i": len(x & y), "dx": len(x - y), "dy": len(y - x)}
        first, second = _QUANT_PAIR[query.quant]
        return PairKey("quantifiers", query.quant.value, regions[first], regions[second])
    if isinstance(query, ComparisonQuery):
        return PairKey(
            "comparison", "default", len(select(scene, query.attr1)), len(select(scene, query.attr2))
        )
    raise InvalidInput(f"not a query: {query!r}")


def attribute_from_str(word: str) -> Attribute:
    try:
        return Colour(word)
    except ValueError:
        pass
    try:
        return Shape(word)
    except ValueError:
        raise InvalidInput(f"unknown attribute {word!r}") from None


def query_to_json_dict(query: Query) -> dict:
    if isinstance(query, SpatialQuery):
        return {
            "kind": "spatial",
            "obj1": {"colour": query.obj1[0].value, "shape": query.obj1[1].value},
            "rel": query.rel.value,
            "obj2": {"colour": query.obj2[0].value, "shape": query.obj2[1].value},
        }
    if isinstance(query, CardinalityQuery):
        return {"kind": "cardinality", "number": query.number, "shape": query.shape.value}
    if isinstance(query, QuantifiedQuery):
        return {
            "kind": "quantified",
            "quant": query.quant.value,
            "attr1": query.attr1.value,
            "attr2": query.attr2.value,
        }
    if isinstance(query, ComparisonQuery):
        return {
            "kind": "comparison",
            "rel": query.rel.value,
            "attr1": query.attr1.value,
            "attr2": query.attr2.value,
        }
    raise InvalidInput(f"not a query: {query!r}")


def query_from_json_dict(data: dict) -> Query:
    try:
        kind = data["kind"]
        if kind == "spatial":
            return SpatialQuery(
                (Colour(data["obj1"]["colour"]), Shape(data["obj1"]["shape"])),
                SpatialRel(data["rel"]),
                (Colour(data["obj2"]["colour"]), Shape(data["obj2"]["shape"])),
            )
        if kind == "cardinality":
            return CardinalityQuery(int(data["number"]), Shape(data["shape"]))
        if kind == "quantified":
            return QuantifiedQuery(
                Quantifier(data["quant"]),
                attribute_from_str(data["attr1"]),
                attribute_from_str(data["attr2"]),
            )
        if kind == "comparison":
            return ComparisonQuery(
                ComparisonRel(data["rel"]),
                attribute_from_str(data["attr1"]),
                attribute_from_str(data["attr2"]),
            )
    except (KeyError, ValueError, TypeError) as exc:
        raise InvalidInput(f"malformed query JSON: {exc}") from exc
    raise InvalidInput(f"unknown query kind {data.get('kind')!r}")


def pair_to_json_dict(key: PairKey) -> dict:
    return {"task": key.task, "scope": key.scope, "a": key.a, "b": key.b}


def pair_from_json_dict(data: dict) -> PairKey:
    try:
        return PairKey(data["task"], data["scope"], int(data["a"]), int(data["b"]))
    except (KeyError, ValueError, TypeError) as exc:
        raise InvalidInput(f"malformed pair JSON: {exc}") from exc
