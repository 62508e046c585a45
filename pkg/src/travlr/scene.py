"""Grid-world scene model.

A scene is an ordered collection of coloured shapes on a fixed 6x6 grid.
Columns and rows are 0-indexed internally; the text layer maps them to the
letters A-F and digits 1-6. Positions must be unique: one object per cell.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

GRID_SIZE = 6


class Colour(str, Enum):
    RED = "red"
    BLUE = "blue"
    GREEN = "green"
    YELLOW = "yellow"
    ORANGE = "orange"


class Shape(str, Enum):
    SQUARE = "square"
    CIRCLE = "circle"
    TRIANGLE = "triangle"
    STAR = "star"
    HEXAGON = "hexagon"
    OCTAGON = "octagon"
    PENTAGON = "pentagon"


# Canonical orderings; serialization, pair keys and samplers rely on them.
COLOURS: tuple[Colour, ...] = tuple(Colour)
SHAPES: tuple[Shape, ...] = tuple(Shape)

Attribute = Colour | Shape


@dataclass(frozen=True)
class GridPos:
    col: int
    row: int


@dataclass(frozen=True)
class ObjectSpec:
    colour: Colour
    shape: Shape
    pos: GridPos

    @property
    def description(self) -> tuple[Colour, Shape]:
        return (self.colour, self.shape)


@dataclass(frozen=True)
class Scene:
    objects: tuple[ObjectSpec, ...]


def attribute_family(attr: Attribute) -> str:
    return "colour" if isinstance(attr, Colour) else "shape"


def attribute_matches(obj: ObjectSpec, attr: Attribute) -> bool:
    if isinstance(attr, Colour):
        return obj.colour is attr
    return obj.shape is attr


def select(scene: Scene, attr: Attribute) -> tuple[ObjectSpec, ...]:
    """Objects matching a single attribute, in scene order."""
    return tuple(o for o in scene.objects if attribute_matches(o, attr))


def canonicalize(scene: Scene) -> Scene:
    """Scene with objects in row-major position order (the caption order)."""
    return Scene(tuple(sorted(scene.objects, key=lambda o: (o.pos.row, o.pos.col))))


def validate_scene(scene: Scene) -> list[str]:
    """All constraint violations, as human-readable strings; [] means valid."""
    problems = []
    seen: dict[tuple[int, int], int] = {}
    for i, obj in enumerate(scene.objects):
        if not isinstance(obj.colour, Colour):
            problems.append(f"object {i}: unknown colour {obj.colour!r}")
        if not isinstance(obj.shape, Shape):
            problems.append(f"object {i}: unknown shape {obj.shape!r}")
        col, row = obj.pos.col, obj.pos.row
        if not (0 <= col < GRID_SIZE and 0 <= row < GRID_SIZE):
            problems.append(f"object {i}: position ({col}, {row}) outside the {GRID_SIZE}x{GRID_SIZE} grid")
        elif (col, row) in seen:
            problems.append(f"object {i}: cell ({col}, {row}) already holds object {seen[(col, row)]}")
        else:
            seen[(col, row)] = i
    return problems


def scene_to_json_dict(scene: Scene) -> dict:
    """JSON form, objects in canonical row-major order."""
    return {
        "objects": [
            {"colour": o.colour.value, "shape": o.shape.value, "col": o.pos.col, "row": o.pos.row}
            for o in canonicalize(scene).objects
        ]
    }


def scene_from_json_dict(data: dict) -> Scene:
    """Inverse of scene_to_json_dict; preserves the stored object order."""
    from .errors import InvalidInput

    try:
        objects = tuple(
            ObjectSpec(Colour(d["colour"]), Shape(d["shape"]), GridPos(int(d["col"]), int(d["row"])))
            for d in data["objects"]
        )
    except (KeyError, ValueError, TypeError) as exc:
        raise InvalidInput(f"malformed scene JSON: {exc}") from exc
    return Scene(objects)
