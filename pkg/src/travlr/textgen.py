"""Caption and query text: rendering and strict parsing.

The grammar is deliberately rigid -- fixed preamble, fixed clause templates,
exact agreement -- so that every rendered string parses back to exactly one
AST and any deviation is a ParseError carrying the byte offset where parsing
failed plus the tokens expected there. See the grammar section of the README
for the EBNF.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import InvalidInput, ParseError
from .scene import (
    COLOURS,
    GridPos,
    ObjectSpec,
    Scene,
    SHAPES,
    attribute_family,
    canonicalize,
    validate_scene,
)
from .semantics import (
    CardinalityQuery,
    ComparisonQuery,
    ComparisonRel,
    QuantifiedQuery,
    Quantifier,
    Query,
    SpatialQuery,
    SpatialRel,
    validate_query,
)

PREAMBLE = "Columns, left to right, are ordered A to F. Rows, top to bottom, are ordered 1 to 6."
SEP_TOKEN = "[SEP]"

COLUMN_LABELS = "ABCDEF"
ROW_LABELS = "123456"

REL_PHRASES = {
    SpatialRel.LEFT_OF: "to the left of",
    SpatialRel.RIGHT_OF: "to the right of",
    SpatialRel.ABOVE: "above",
    SpatialRel.BELOW: "below",
}

QUANT_PHRASES = {
    Quantifier.ALL: "All",
    Quantifier.NOT_ALL: "Not all",
    Quantifier.NO: "None of",
    Quantifier.SOME: "Some of",
    Quantifier.ONLY: "Only",
    Quantifier.NOT_ONLY: "Not only",
}

COMP_PHRASES = {ComparisonRel.MORE: "more", ComparisonRel.FEWER: "fewer"}

_COLOUR_WORDS = {c.value: c for c in COLOURS}
_SHAPE_WORDS = {s.value: s for s in SHAPES}
_ATTR_WORDS = {**_COLOUR_WORDS, **_SHAPE_WORDS}


def render_caption(scene: Scene) -> str:
    """Preamble plus one 'a <colour> <shape> at <Col> <Row>' clause per object,
    row-major."""
    problems = validate_scene(scene)
    if problems:
        raise InvalidInput("cannot caption an invalid scene: " + "; ".join(problems))
    if not scene.objects:
        raise InvalidInput("cannot caption an empty scene")
    clauses = ", ".join(
        f"a {o.colour.value} {o.shape.value} at {COLUMN_LABELS[o.pos.col]} {ROW_LABELS[o.pos.row]}"
        for o in canonicalize(scene).objects
    )
    return f"{PREAMBLE} There is {clauses}."


def render_query(query: Query) -> str:
    problems = validate_query(query)
    if problems:
        raise InvalidInput("cannot render an invalid query: " + "; ".join(problems))
    if isinstance(query, SpatialQuery):
        (c1, s1), (c2, s2) = query.obj1, query.obj2
        return f"The {c1.value} {s1.value} is {REL_PHRASES[query.rel]} the {c2.value} {s2.value}."
    if isinstance(query, CardinalityQuery):
        if query.number == 1:
            return f"There is 1 {query.shape.value} object."
        return f"There are {query.number} {query.shape.value} objects."
    if isinstance(query, QuantifiedQuery):
        return (
            f"{QUANT_PHRASES[query.quant]} the {query.attr1.value} objects"
            f" are {query.attr2.value} objects."
        )
    return (
        f"There are {COMP_PHRASES[query.rel]} {query.attr1.value} objects"
        f" than {query.attr2.value} objects."
    )


def concat_text_input(caption: str | None, query: str) -> str:
    """Model text input; caption=None means image-only (query text alone)."""
    if not query:
        raise InvalidInput("query text is required")
    if caption is None:
        return query
    if caption == "":
        raise InvalidInput("pass caption=None for image-only input, not an empty string")
    return f"{caption} {SEP_TOKEN} {query}"


@dataclass
class _Cursor:
    text: str
    pos: int = 0

    def fail(self, message: str, expected: tuple[str, ...] = ()):
        raise ParseError(message, self.pos, expected)

    def literal(self, token: str) -> None:
        if self.text.startswith(token, self.pos):
            self.pos += len(token)
        else:
            self.fail("unexpected text", (token,))

    def try_literal(self, token: str) -> bool:
        if self.text.startswith(token, self.pos):
            self.pos += len(token)
            return True
        return False

    def keyword(self, options: dict):
        for word in sorted(options, key=len, reverse=True):
            if self.text.startswith(word, self.pos):
                self.pos += len(word)
                return options[word]
        self.fail("unexpected word", tuple(options))

    def number(self) -> int:
        end = self.pos
        while end < len(self.text) and "0" <= self.text[end] <= "9":
            end += 1
        if end == self.pos:
            self.fail("expected a number", ("0-9",))
        digits = self.text[self.pos : end]
        if len(digits) > 1 and digits[0] == "0":
            self.fail("numbers are written without leading zeros")
        self.pos = end
        return int(digits)

    def expect_end(self) -> None:
        if self.pos != len(self.text):
            self.fail("trailing text after a complete sentence", ("end of text",))


def parse_caption(text: str) -> Scene:
    """Inverse of render_caption; object order is as written."""
    c = _Cursor(text)
    c.literal(PREAMBLE)
    c.literal(" There is ")
    objects: list[ObjectSpec] = []
    occupied: dict[tuple[int, int], int] = {}
    while True:
        clause_at = c.pos
        c.literal("a ")
        colour = c.keyword(_COLOUR_WORDS)
        c.literal(" ")
        shape = c.keyword(_SHAPE_WORDS)
        c.literal(" at ")
        col = c.keyword({ch: i for i, ch in enumerate(COLUMN_LABELS)})
        c.literal(" ")
        row = c.keyword({ch: i for i, ch in enumerate(ROW_LABELS)})
        if (col, row) in occupied:
            raise ParseError("two objects share one cell", clause_at)
        occupied[(col, row)] = len(objects)
        objects.append(ObjectSpec(colour, shape, GridPos(col, row)))
        if c.try_literal(", "):
            continue
        c.literal(".")
        break
    c.expect_end()
    return Scene(tuple(objects))


def _parse_spatial(c: _Cursor) -> SpatialQuery:
    c.literal("The ")
    colour1 = c.keyword(_COLOUR_WORDS)
    c.literal(" ")
    shape1 = c.keyword(_SHAPE_WORDS)
    c.literal(" is ")
    rel = c.keyword({phrase: r for r, phrase in REL_PHRASES.items()})
    c.literal(" the ")
    second_at = c.pos
    colour2 = c.keyword(_COLOUR_WORDS)
    c.literal(" ")
    shape2 = c.keyword(_SHAPE_WORDS)
    c.literal(".")
    c.expect_end()
    if (colour1, shape1) == (colour2, shape2):
        raise ParseError("spatial referents share one description", second_at)
    return SpatialQuery((colour1, shape1), rel, (colour2, shape2))


def _parse_there(c: _Cursor) -> Query:
    c.literal("There ")
    plural = c.keyword({"is": False, "are": True})
    c.literal(" ")
    number_at = c.pos
    if not plural or (c.pos < len(c.text) and "0" <= c.text[c.pos] <= "9"):
        n = c.number()
        if n > 36:
            raise ParseError(f"count {n} exceeds the grid capacity of 36", number_at)
        if plural == (n == 1):
            raise ParseError("verb does not agree with the number", number_at)
        c.literal(" ")
        shape = c.keyword(_SHAPE_WORDS)
        c.literal(" object")
        if n != 1:
            c.literal("s")
        c.literal(".")
        c.expect_end()
        return CardinalityQuery(n, shape)
    rel = c.keyword({phrase: r for r, phrase in COMP_PHRASES.items()})
    c.literal(" ")
    attr1 = c.keyword(_ATTR_WORDS)
    c.literal(" objects than ")
    second_at = c.pos
    attr2 = c.keyword(_ATTR_WORDS)
    c.literal(" objects.")
    c.expect_end()
    if attribute_family(attr1) == attribute_family(attr2):
        raise ParseError("attributes must pair a colour with a shape", second_at)
    return ComparisonQuery(rel, attr1, attr2)


def _parse_quantified(c: _Cursor) -> QuantifiedQuery:
    quant = c.keyword({phrase: q for q, phrase in QUANT_PHRASES.items()})
    c.literal(" the ")
    attr1 = c.keyword(_ATTR_WORDS)
    c.literal(" objects are ")
    second_at = c.pos
    attr2 = c.keyword(_ATTR_WORDS)
    c.literal(" objects.")
    c.expect_end()
    if attribute_family(attr1) == attribute_family(attr2):
        raise ParseError("attributes must pair a colour with a shape", second_at)
    return QuantifiedQuery(quant, attr1, attr2)


def parse_query(text: str) -> Query:
    """Inverse of render_query; exactly one AST per valid string."""
    c = _Cursor(text)
    if text.startswith("The "):
        return _parse_spatial(c)
    if text.startswith("There "):
        return _parse_there(c)
    return _parse_quantified(c)
