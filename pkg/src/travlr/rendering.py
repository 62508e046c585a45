"""Aliased raster images of scenes.

Each object is drawn alone inside its grid cell with a fixed per-colour RGB
fill, no anti-aliasing, no outlines, on a white canvas. Rendering is a pure
function of (scene, config): the PNG encoder parameters are pinned so the
same scene always produces byte-identical files.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

from PIL import Image, ImageDraw

from .errors import InvalidInput
from .scene import GRID_SIZE, Colour, Scene, Shape, canonicalize, validate_scene

COLOUR_RGB: dict[Colour, tuple[int, int, int]] = {
    Colour.RED: (0xE5, 0x39, 0x35),
    Colour.BLUE: (0x1E, 0x88, 0xE5),
    Colour.GREEN: (0x43, 0xA0, 0x47),
    Colour.YELLOW: (0xFD, 0xD8, 0x35),
    Colour.ORANGE: (0xFB, 0x8C, 0x00),
}

_POLYGON_SIDES = {Shape.TRIANGLE: 3, Shape.PENTAGON: 5, Shape.HEXAGON: 6, Shape.OCTAGON: 8}
_STAR_POINTS = 5
_STAR_INNER_RATIO = 0.5
_PNG_COMPRESS_LEVEL = 1  # fixed for byte determinism; low because encode time dominates builds


@dataclass(frozen=True)
class RenderConfig:
    cell_px: int = 64
    margin_px: int = 8
    inset: float = 0.8
    background: tuple[int, int, int] = (255, 255, 255)
    colour_map: dict[Colour, tuple[int, int, int]] = field(
        default_factory=lambda: dict(COLOUR_RGB)
    )

    def __post_init__(self):
        if self.cell_px < 16:
            raise InvalidInput(f"cell_px {self.cell_px} below the minimum of 16")
        if self.margin_px < 0:
            raise InvalidInput("margin_px must be non-negative")
        if not 0.0 < self.inset <= 1.0:
            raise InvalidInput(f"inset {self.inset} outside (0, 1]")
        missing = [c.value for c in Colour if c not in self.colour_map]
        if missing:
            raise InvalidInput("colour_map missing: " + ", ".join(missing))

    @property
    def canvas_px(self) -> int:
        return GRID_SIZE * self.cell_px + 2 * self.margin_px


DEFAULT_RENDER_CONFIG = RenderConfig()


def _shape_xy(shape: Shape, cx: float, cy: float, radius: float) -> list[tuple[float, float]]:
    """Vertex list for a shape centred at (cx, cy); first vertex at the top."""
    if shape is Shape.SQUARE:
        return [
            (cx - radius, cy - radius),
            (cx + radius, cy - radius),
            (cx + radius, cy + radius),
            (cx - radius, cy + radius),
        ]
    if shape is Shape.STAR:
        xy = []
        for k in range(2 * _STAR_POINTS):
            r = radius if k % 2 == 0 else radius * _STAR_INNER_RATIO
            angle = -math.pi / 2 + k * math.pi / _STAR_POINTS
            xy.append((cx + r * math.cos(angle), cy + r * math.sin(angle)))
        return xy
    sides = _POLYGON_SIDES[shape]
    return [
        (
            cx + radius * math.cos(-math.pi / 2 + 2 * math.pi * k / sides),
            cy + radius * math.sin(-math.pi / 2 + 2 * math.pi * k / sides),
        )
        for k in range(sides)
    ]


def _encode(image: Image.Image) -> bytes:
    buf = io.BytesIO()
    image.save(buf, format="PNG", optimize=False, compress_level=_PNG_COMPRESS_LEVEL)
    return buf.getvalue()


def render_scene(scene: Scene, cfg: RenderConfig = DEFAULT_RENDER_CONFIG) -> bytes:
    """PNG bytes for a scene; each object stays strictly inside its cell."""
    problems = validate_scene(scene)
    if problems:
        raise InvalidInput("cannot render an invalid scene: " + "; ".join(problems))
    image = Image.new("RGB", (cfg.canvas_px, cfg.canvas_px), cfg.background)
    draw = ImageDraw.Draw(image)
    radius = cfg.inset * cfg.cell_px / 2
    for obj in canonicalize(scene).objects:
        cx = cfg.margin_px + (obj.pos.col + 0.5) * cfg.cell_px
        cy = cfg.margin_px + (obj.pos.row + 0.5) * cfg.cell_px
        fill = cfg.colour_map[obj.colour]
        if obj.shape is Shape.CIRCLE:
            draw.ellipse((cx - radius, cy - radius, cx + radius, cy + radius), fill=fill)
        else:
            draw.polygon(_shape_xy(obj.shape, cx, cy, radius), fill=fill)
    return _encode(image)


def blank_image(cfg: RenderConfig = DEFAULT_RENDER_CONFIG) -> bytes:
    """The shared no-scene placeholder: a bare background canvas."""
    return _encode(Image.new("RGB", (cfg.canvas_px, cfg.canvas_px), cfg.background))
