"""Truth evaluation and pair keys, cross-checked against brute-force oracles."""

from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import oracle_label, oracle_pair, random_query_for, random_scene
from strategies import scenes
from travlr.errors import InvalidInput, ReferentError
from travlr.scene import COLOURS, SHAPES, Colour, GridPos, ObjectSpec, Scene, Shape
from travlr.semantics import (
    CardinalityQuery,
    ComparisonQuery,
    ComparisonRel,
    PairKey,
    QuantifiedQuery,
    Quantifier,
    SCOPES_BY_TASK,
    SpatialQuery,
    SpatialRel,
    TASKS,
    eval_query,
    pair_from_json_dict,
    pair_key,
    pair_to_json_dict,
    query_from_json_dict,
    query_to_json_dict,
    task_of,
    validate_query,
)


def obj(colour, shape, col, row):
    return ObjectSpec(Colour(colour), Shape(shape), GridPos(col, row))


# One red circle at B2, one blue star at D5, two green squares in column A,
# plus a red square. X = red -> {circle@B2, square@A1}; Y = circle -> {circle@B2}.
FIXTURE = Scene(
    (
        obj("red", "circle", 1, 1),
        obj("blue", "star", 3, 4),
        obj("green", "square", 0, 2),
        obj("green", "square", 0, 5),
        obj("red", "square", 0, 0),
    )
)


def test_spatial_frozen_examples():
    rc, bs = (Colour.RED, Shape.CIRCLE), (Colour.BLUE, Shape.STAR)
    assert eval_query(FIXTURE, SpatialQuery(rc, SpatialRel.LEFT_OF, bs)) is True
    assert eval_query(FIXTURE, SpatialQuery(rc, SpatialRel.RIGHT_OF, bs)) is False
    assert eval_query(FIXTURE, SpatialQuery(rc, SpatialRel.ABOVE, bs)) is True
    assert eval_query(FIXTURE, SpatialQuery(bs, SpatialRel.BELOW, rc)) is True


def test_spatial_ties_are_false_both_ways():
    scene = Scene((obj("red", "circle", 2, 0), obj("blue", "star", 2, 5)))
    rc, bs = (Colour.RED, Shape.CIRCLE), (Colour.BLUE, Shape.STAR)
    assert eval_query(scene, SpatialQuery(rc, SpatialRel.LEFT_OF, bs)) is False
    assert eval_query(scene, SpatialQuery(rc, SpatialRel.RIGHT_OF, bs)) is False


def test_spatial_requires_unique_referents():
    rc = (Colour.RED, Shape.CIRCLE)
    gs = (Colour.GREEN, Shape.SQUARE)
    with pytest.raises(ReferentError):
        eval_query(FIXTURE, SpatialQuery(gs, SpatialRel.ABOVE, rc))  # two green squares
    with pytest.raises(ReferentError):
        eval_query(FIXTURE, SpatialQuery(rc, SpatialRel.ABOVE, (Colour.ORANGE, Shape.HEXAGON)))


def test_cardinality_frozen_examples():
    assert eval_query(FIXTURE, CardinalityQuery(2, Shape.SQUARE)) is False
    assert eval_query(FIXTURE, CardinalityQuery(3, Shape.SQUARE)) is True
    assert eval_query(FIXTURE, CardinalityQuery(0, Shape.PENTAGON)) is True
    assert eval_query(FIXTURE, CardinalityQuery(1, Shape.PENTAGON)) is False


def test_quantifier_frozen_truth_table():
    # X = red = {circle@B2, square@A1}; Y = circle = {circle@B2}
    # -> inter 1, X-only 1, Y-only 0.
    cases = {
        Quantifier.ALL: False,
        Quantifier.NOT_ALL: True,
        Quantifier.NO: False,
        Quantifier.SOME: True,
        Quantifier.ONLY: True,
        Quantifier.NOT_ONLY: False,
    }
    for quant, expected in cases.items():
        q = QuantifiedQuery(quant, Colour.RED, Shape.CIRCLE)
        assert eval_query(FIXTURE, q) is expected, quant


def test_quantifier_vacuous_truth():
    scene = Scene((obj("blue", "star", 0, 0),))
    # X = red is empty: "all"/"no" hold vacuously, "some"/"not all" fail.
    assert eval_query(scene, QuantifiedQuery(Quantifier.ALL, Colour.RED, Shape.STAR)) is True
    assert eval_query(scene, QuantifiedQuery(Quantifier.NO, Colour.RED, Shape.STAR)) is True
    assert eval_query(scene, QuantifiedQuery(Quantifier.SOME, Colour.RED, Shape.STAR)) is False
    assert eval_query(scene, QuantifiedQuery(Quantifier.NOT_ALL, Colour.RED, Shape.STAR)) is False
    # Y = circle is empty: "only" holds vacuously.
    assert eval_query(scene, QuantifiedQuery(Quantifier.ONLY, Colour.BLUE, Shape.CIRCLE)) is True
    assert eval_query(scene, QuantifiedQuery(Quantifier.NOT_ONLY, Colour.BLUE, Shape.CIRCLE)) is False


def test_comparison_frozen_examples():
    assert eval_query(FIXTURE, ComparisonQuery(ComparisonRel.MORE, Colour.GREEN, Shape.STAR)) is True
    assert eval_query(FIXTURE, ComparisonQuery(ComparisonRel.FEWER, Colour.GREEN, Shape.STAR)) is False
    assert eval_query(FIXTURE, ComparisonQuery(ComparisonRel.FEWER, Colour.RED, Shape.SQUARE)) is True
    # Equal counts (one blue, one star): both directions false.
    assert eval_query(FIXTURE, ComparisonQuery(ComparisonRel.MORE, Colour.BLUE, Shape.STAR)) is False
    assert eval_query(FIXTURE, ComparisonQuery(ComparisonRel.FEWER, Colour.BLUE, Shape.STAR)) is False


def test_pair_key_frozen_examples():
    rc, bs = (Colour.RED, Shape.CIRCLE), (Colour.BLUE, Shape.STAR)
    assert pair_key(FIXTURE, SpatialQuery(rc, SpatialRel.LEFT_OF, bs)) == PairKey(
        "spatiality", "horizontal", 1, 3
    )
    assert pair_key(FIXTURE, SpatialQuery(rc, SpatialRel.BELOW, bs)) == PairKey(
        "spatiality", "vertical", 1, 4
    )
    # 3 squares in scene; square is shape index 0.
    assert pair_key(FIXTURE, CardinalityQuery(5, Shape.SQUARE)) == PairKey(
        "cardinality", "default", 3, 0
    )
    # (i, dx, dy) = (1, 1, 0) for X=red, Y=circle.
    assert pair_key(FIXTURE, QuantifiedQuery(Quantifier.ALL, Colour.RED, Shape.CIRCLE)) == PairKey(
        "quantifiers", "all", 1, 0
    )
    assert pair_key(FIXTURE, QuantifiedQuery(Quantifier.SOME, Colour.RED, Shape.CIRCLE)) == PairKey(
        "quantifiers", "some", 1, 1
    )
    assert pair_key(FIXTURE, QuantifiedQuery(Quantifier.NOT_ONLY, Colour.RED, Shape.CIRCLE)) == PairKey(
        "quantifiers", "not_only", 1, 0
    )
    assert pair_key(FIXTURE, ComparisonQuery(ComparisonRel.MORE, Colour.GREEN, Shape.STAR)) == PairKey(
        "comparison", "default", 2, 1
    )


def test_scopes_cover_tasks():
    assert tuple(SCOPES_BY_TASK) == TASKS
    assert SCOPES_BY_TASK["quantifiers"] == ("all", "not_all", "no", "some", "only", "not_only")


def test_task_of_and_validate():
    assert task_of(CardinalityQuery(1, Shape.STAR)) == "cardinality"
    rc = (Colour.RED, Shape.CIRCLE)
    assert validate_query(SpatialQuery(rc, SpatialRel.ABOVE, rc)) != []
    assert validate_query(CardinalityQuery(37, Shape.STAR)) != []
    assert validate_query(CardinalityQuery(-1, Shape.STAR)) != []
    assert validate_query(QuantifiedQuery(Quantifier.ALL, Colour.RED, Colour.BLUE)) != []
    assert validate_query(ComparisonQuery(ComparisonRel.MORE, Shape.STAR, Shape.CIRCLE)) != []
    assert validate_query(QuantifiedQuery(Quantifier.ALL, Colour.RED, Shape.CIRCLE)) == []


def test_negation_duality_on_random_scenes():
    rnd = random.Random(20260819)
    duals = [
        (Quantifier.ALL, Quantifier.NOT_ALL),
        (Quantifier.NO, Quantifier.SOME),
        (Quantifier.ONLY, Quantifier.NOT_ONLY),
    ]
    for _ in range(300):
        scene = random_scene(rnd)
        colour = Colour(rnd.choice([c.value for c in COLOURS]))
        shape = Shape(rnd.choice([s.value for s in SHAPES]))
        for pos, neg in duals:
            lhs = eval_query(scene, QuantifiedQuery(pos, colour, shape))
            rhs = eval_query(scene, QuantifiedQuery(neg, colour, shape))
            assert lhs != rhs


def test_spatial_antisymmetry_and_comparison_trichotomy():
    rnd = random.Random(77)
    checked = 0
    while checked < 300:
        scene = random_scene(rnd)
        q = random_query_for(scene, "spatiality", rnd)
        if q is None:
            continue
        flipped = {
            SpatialRel.LEFT_OF: SpatialRel.RIGHT_OF,
            SpatialRel.RIGHT_OF: SpatialRel.LEFT_OF,
            SpatialRel.ABOVE: SpatialRel.BELOW,
            SpatialRel.BELOW: SpatialRel.ABOVE,
        }[q.rel]
        mirror = SpatialQuery(q.obj2, flipped, q.obj1)
        assert eval_query(scene, q) == eval_query(scene, mirror)
        checked += 1
    for _ in range(300):
        scene = random_scene(rnd)
        q = random_query_for(scene, "comparison", rnd)
        more = ComparisonQuery(ComparisonRel.MORE, q.attr1, q.attr2)
        fewer = ComparisonQuery(ComparisonRel.FEWER, q.attr1, q.attr2)
        key = pair_key(scene, more)
        states = (eval_query(scene, more), eval_query(scene, fewer), key.a == key.b)
        assert sum(states) == 1


def test_cardinality_true_for_exactly_one_number():
    rnd = random.Random(5)
    for _ in range(200):
        scene = random_scene(rnd)
        shape = Shape(rnd.choice([s.value for s in SHAPES]))
        hits = [n for n in range(0, 37) if eval_query(scene, CardinalityQuery(n, shape))]
        assert hits == [sum(1 for o in scene.objects if o.shape is shape)]


def test_labels_and_pairs_match_oracle_across_tasks():
    rnd = random.Random(987654)
    counts = dict.fromkeys(TASKS, 0)
    while min(counts.values()) < 500:
        scene = random_scene(rnd)
        task = rnd.choice(TASKS)
        query = random_query_for(scene, task, rnd)
        if query is None:
            continue
        assert eval_query(scene, query) == oracle_label(scene, query)
        key = pair_key(scene, query)
        assert (key.task, key.scope, key.a, key.b) == oracle_pair(scene, query)
        counts[task] += 1


@given(scenes(), st.data())
@settings(max_examples=200)
def test_quantifier_pairs_match_oracle_property(scene, data):
    quant = data.draw(st.sampled_from(list(Quantifier)))
    colour = data.draw(st.sampled_from(COLOURS))
    shape = data.draw(st.sampled_from(SHAPES))
    query = (
        QuantifiedQuery(quant, colour, shape)
        if data.draw(st.booleans())
        else QuantifiedQuery(quant, shape, colour)
    )
    key = pair_key(scene, query)
    assert (key.task, key.scope, key.a, key.b) == oracle_pair(scene, query)
    assert eval_query(scene, query) == oracle_label(scene, query)


def test_query_json_round_trip_all_kinds():
    rc, bs = (Colour.RED, Shape.CIRCLE), (Colour.BLUE, Shape.STAR)
    queries = [
        SpatialQuery(rc, SpatialRel.ABOVE, bs),
        CardinalityQuery(4, Shape.HEXAGON),
        QuantifiedQuery(Quantifier.NOT_ALL, Colour.RED, Shape.CIRCLE),
        QuantifiedQuery(Quantifier.ONLY, Shape.CIRCLE, Colour.RED),
        ComparisonQuery(ComparisonRel.FEWER, Colour.YELLOW, Shape.OCTAGON),
    ]
    for query in queries:
        assert query_from_json_dict(query_to_json_dict(query)) == query


def test_query_json_frozen_shape():
    q = QuantifiedQuery(Quantifier.NOT_ALL, Colour.RED, Shape.CIRCLE)
    assert query_to_json_dict(q) == {
        "kind": "quantified",
        "quant": "not_all",
        "attr1": "red",
        "attr2": "circle",
    }
    s = SpatialQuery((Colour.RED, Shape.CIRCLE), SpatialRel.LEFT_OF, (Colour.BLUE, Shape.STAR))
    assert query_to_json_dict(s) == {
        "kind": "spatial",
        "obj1": {"colour": "red", "shape": "circle"},
        "rel": "left_of",
        "obj2": {"colour": "blue", "shape": "star"},
    }


def test_query_json_rejects_malformed():
    with pytest.raises(InvalidInput):
        query_from_json_dict({"kind": "spatial", "obj1": {}})
    with pytest.raises(InvalidInput):
        query_from_json_dict({"kind": "nonsense"})
    with pytest.raises(InvalidInput):
        query_from_json_dict({"kind": "quantified", "quant": "most", "attr1": "red", "attr2": "circle"})


def test_pair_json_round_trip():
    key = PairKey("quantifiers", "some", 2, 0)
    assert pair_from_json_dict(pair_to_json_dict(key)) == key
    with pytest.raises(InvalidInput):
        pair_from_json_dict({"task": "comparison", "a": 1})
