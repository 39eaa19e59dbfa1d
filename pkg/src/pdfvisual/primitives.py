"""Page data model shared by every detector.

Coordinates are PDF points with a top-left origin and y growing downward.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Literal

import numpy as np


class MalformedPdf(ValueError):
    """The byte stream could not be parsed as a PDF."""


class EncryptedPdf(ValueError):
    """The PDF requires a password to open."""


class UndecodableImage(ValueError):
    """An image region has no usable raster."""


@dataclass(frozen=True, slots=True)
class BoundingBox:
    x0: float
    y0: float
    x1: float
    y1: float

    def __post_init__(self) -> None:
        if self.x0 > self.x1 or self.y0 > self.y1:
            raise ValueError(f"inverted bounding box {self.as_tuple()}")

    @classmethod
    def from_points(cls, x0: float, y0: float, x1: float, y1: float) -> BoundingBox:
        """Build a box from two corners given in any order."""
        return cls(min(x0, x1), min(y0, y1), max(x0, x1), max(y0, y1))

    @classmethod
    def union_of(cls, boxes) -> BoundingBox:
        boxes = list(boxes)
        if not boxes:
            raise ValueError("union of no boxes")
        return cls(
            min(b.x0 for b in boxes),
            min(b.y0 for b in boxes),
            max(b.x1 for b in boxes),
            max(b.y1 for b in boxes),
        )

    @property
    def width(self) -> float:
        return self.x1 - self.x0

    @property
    def height(self) -> float:
        return self.y1 - self.y0

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> tuple[float, float]:
        return (self.x0 + self.x1) / 2, (self.y0 + self.y1) / 2

    def intersection(self, other: BoundingBox) -> BoundingBox | None:
        x0, y0 = max(self.x0, other.x0), max(self.y0, other.y0)
        x1, y1 = min(self.x1, other.x1), min(self.y1, other.y1)
        if x0 > x1 or y0 > y1:
            return None
        return BoundingBox(x0, y0, x1, y1)

    def union(self, other: BoundingBox) -> BoundingBox:
        return BoundingBox.union_of((self, other))

    def contains(self, other: BoundingBox, tol: float = 0.0) -> bool:
        return (
            other.x0 >= self.x0 - tol
            and other.y0 >= self.y0 - tol
            and other.x1 <= self.x1 + tol
            and other.y1 <= self.y1 + tol
        )

    def gap(self, other: BoundingBox) -> float:
        """Chebyshev gap between two boxes; 0 when they touch or overlap."""
        dx = max(0.0, other.x0 - self.x1, self.x0 - other.x1)
        dy = max(0.0, other.y0 - self.y1, self.y0 - other.y1)
        return max(dx, dy)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x0, self.y0, self.x1, self.y1)

    def as_list(self) -> list[float]:
        return [self.x0, self.y0, self.x1, self.y1]


@dataclass(frozen=True, slots=True)
class TextLine:
    """One extracted line; style fields come from its dominant span."""

    bbox: BoundingBox
    text: str
    font_size: float = 10.0
    bold: bool = False
    italic: bool = False


@dataclass(frozen=True, slots=True)
class TextBlock:
    bbox: BoundingBox
    text: str
    font_size: float = 10.0
    bold: bool = False
    italic: bool = False
    line_spans: tuple[TextLine, ...] = ()

    @classmethod
    def from_lines(cls, lines) -> TextBlock:
        """Aggregate lines into a block; text is the newline-joined line texts."""
        lines = tuple(lines)
        if not lines:
            raise ValueError("block needs at least one line")
        weights = [max(1, len(ln.text.strip())) for ln in lines]
        total = sum(weights)
        bold = sum(w for w, ln in zip(weights, lines) if ln.bold) * 2 > total
        italic = sum(w for w, ln in zip(weights, lines) if ln.italic) * 2 > total
        return cls(
            bbox=BoundingBox.union_of(ln.bbox for ln in lines),
            text="\n".join(ln.text for ln in lines),
            font_size=max(ln.font_size for ln in lines),
            bold=bold,
            italic=italic,
            line_spans=lines,
        )

    @classmethod
    def single(
        cls,
        bbox: BoundingBox,
        text: str,
        font_size: float = 10.0,
        bold: bool = False,
        italic: bool = False,
    ) -> TextBlock:
        line = TextLine(bbox, text, font_size, bold, italic)
        return cls(bbox, text, font_size, bold, italic, (line,))

    def lines(self) -> tuple[TextLine, ...]:
        if self.line_spans:
            return self.line_spans
        return (TextLine(self.bbox, self.text, self.font_size, self.bold, self.italic),)


DrawingKind = Literal["line", "rectangle", "curve", "other"]


@dataclass(frozen=True, slots=True)
class DrawingPrimitive:
    kind: DrawingKind
    bbox: BoundingBox
    endpoints: tuple[tuple[float, float], ...] = ()

    def __post_init__(self) -> None:
        if self.kind == "line" and len(self.endpoints) != 2:
            raise ValueError("a line primitive needs exactly two endpoints")

    @classmethod
    def line(cls, p: tuple[float, float], q: tuple[float, float]) -> DrawingPrimitive:
        return cls("line", BoundingBox.from_points(p[0], p[1], q[0], q[1]), (tuple(p), tuple(q)))

    @property
    def length(self) -> float:
        if self.kind == "line":
            (ax, ay), (bx, by) = self.endpoints
            return float(np.hypot(bx - ax, by - ay))
        return max(self.bbox.width, self.bbox.height)


def raster_digest(pixels: np.ndarray) -> str:
    """Stable hash of decoded pixels (shape and dtype included)."""
    arr = np.ascontiguousarray(pixels)
    h = hashlib.sha256()
    h.update(repr((arr.shape, arr.dtype.str)).encode())
    h.update(arr.tobytes())
    return h.hexdigest()[:32]


@dataclass(frozen=True, slots=True)
class ImageRegion:
    bbox: BoundingBox
    pixel_width: int
    pixel_height: int
    has_alpha: bool
    content_digest: str
    xref: int = 0
    pixels: np.ndarray | None = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        if self.pixel_width <= 0 or self.pixel_height <= 0:
            raise ValueError("image must have positive pixel dimensions")

    @classmethod
    def from_pixels(cls, bbox: BoundingBox, pixels: np.ndarray, xref: int = 0) -> ImageRegion:
        """Wrap an HxW, HxWx3 or HxWx4 uint8 array; a 4th channel is alpha."""
        pixels = np.array(pixels, dtype=np.uint8)
        if pixels.ndim == 2:
            pixels = pixels[:, :, None]
        h, w = pixels.shape[:2]
        has_alpha = pixels.shape[2] in (2, 4)
        pixels.setflags(write=False)
        return cls(bbox, w, h, has_alpha, raster_digest(pixels), xref, pixels)

    def decode(self) -> np.ndarray:
        if self.pixels is None:
            raise UndecodableImage(f"image xref={self.xref} has no decoded raster")
        return self.pixels

    def alpha(self) -> np.ndarray | None:
        if not self.has_alpha or self.pixels is None:
            return None
        return self.pixels[:, :, -1]


WidgetType = Literal["text", "checkbox", "radio", "combo", "signature", "other"]


@dataclass(frozen=True, slots=True)
class FormWidget:
    field_name: str
    field_type: WidgetType
    rect: BoundingBox

    @property
    def anonymous(self) -> bool:
        return not self.field_name.strip()


@dataclass(frozen=True, slots=True)
class PageModel:
    page_index: int
    width: float
    height: float
    images: tuple[ImageRegion, ...] = ()
    blocks: tuple[TextBlock, ...] = ()
    drawings: tuple[DrawingPrimitive, ...] = ()
    widgets: tuple[FormWidget, ...] = ()
    warnings: tuple[str, ...] = ()

    @property
    def rect(self) -> BoundingBox:
        return BoundingBox(0.0, 0.0, self.width, self.height)

    def lines(self) -> list[TextLine]:
        return [ln for b in self.blocks for ln in b.lines()]


def clamp_to_page(b: BoundingBox, page: PageModel) -> BoundingBox:
    """Intersect ``b`` with the page rectangle; zero-area results are allowed."""
    x0 = min(max(b.x0, 0.0), page.width)
    x1 = min(max(b.x1, 0.0), page.width)
    y0 = min(max(b.y0, 0.0), page.height)
    y1 = min(max(b.y1, 0.0), page.height)
    return BoundingBox(x0, y0, x1, y1)
