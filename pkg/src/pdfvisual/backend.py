"""PDF backend adapter: raw bytes in, PageModel list out.

Only this module touches a PDF library. Detectors consume PageModel.
"""

from __future__ import annotations

import logging
import os
from typing import Protocol

import numpy as np
import pymupdf

from .primitives import (
    BoundingBox,
    DrawingPrimitive,
    EncryptedPdf,
    FormWidget,
    ImageRegion,
    MalformedPdf,
    PageModel,
    TextBlock,
    TextLine,
    clamp_to_page,
)

log = logging.getLogger(__name__)

_BOLD = 1 << 4
_ITALIC = 1 << 1

_WIDGET_TYPES = {
    "Text": "text",
    "CheckBox": "checkbox",
    "RadioButton": "radio",
    "ComboBox": "combo",
    "ListBox": "combo",
    "Signature": "signature",
}


class PdfBackend(Protocol):
    def load(self, data: bytes) -> list[PageModel]: ...

    def render_region(self, data: bytes, page_index: int, bbox: BoundingBox,
                      zoom: float = 2.0) -> np.ndarray: ...


def _read(source: bytes | str | os.PathLike) -> bytes:
    if isinstance(source, (bytes, bytearray, memoryview)):
        return bytes(source)
    with open(source, "rb") as fh:
        return fh.read()


def _open(data: bytes) -> pymupdf.Document:
    if not data.lstrip()[:5].startswith(b"%PDF"):
        raise MalformedPdf("missing %PDF header")
    try:
        doc = pymupdf.open(stream=data, filetype="pdf")
    except Exception as exc:  # pymupdf raises several types for bad input
        raise MalformedPdf(str(exc)) from exc
    if doc.needs_pass:
        doc.close()
        raise EncryptedPdf("document is password protected")
    if doc.is_repaired:
        # MuPDF silently rebuilds broken xref tables; a truncated file is
        # still a malformed input for our purposes.
        doc.close()
        raise MalformedPdf("document structure is damaged")
    return doc


def _box(r, page_w: float, page_h: float) -> BoundingBox:
    x0, y0, x1, y1 = (float(v) for v in r)
    b = BoundingBox.from_points(x0, y0, x1, y1)
    return clamp_to_page(b, _Dims(page_w, page_h))


class _Dims:
    __slots__ = ("width", "height")

    def __init__(self, w: float, h: float):
        self.width, self.height = w, h


def _line_from_dict(line: dict, w: float, h: float) -> TextLine | None:
    spans = [s for s in line["spans"] if s["text"]]
    if not spans:
        return None
    text = "".join(s["text"] for s in spans)
    dominant = max(spans, key=lambda s: len(s["text"].strip()))
    return TextLine(
        bbox=_box(line["bbox"], w, h),
        text=text,
        font_size=round(float(dominant["size"]), 3),
        bold=bool(dominant["flags"] & _BOLD),
        italic=bool(dominant["flags"] & _ITALIC),
    )


def split_side_by_side(lines: list[TextLine]) -> list[list[TextLine]]:
    """Split one native block where consecutive lines sit side by side.

    MuPDF groups horizontally separated cells of a table row into a single
    block (one line per cell). Lines that share a row with the previous line
    and are separated by more than one line height start a new block; lines
    that stack vertically stay together.
    """
    groups: list[list[TextLine]] = []
    for ln in lines:
        if groups:
            prev = groups[-1][-1]
            overlap = min(prev.bbox.y1, ln.bbox.y1) - max(prev.bbox.y0, ln.bbox.y0)
            min_h = max(1e-6, min(prev.bbox.height, ln.bbox.height))
            hgap = ln.bbox.x0 - prev.bbox.x1
            same_row = overlap > 0.5 * min_h
            if not (same_row and (hgap > min_h or hgap < -min_h)):
                groups[-1].append(ln)
                continue
        groups.append([ln])
    return groups


def _pixels(doc: pymupdf.Document, xref: int, smask: int) -> np.ndarray:
    pix = pymupdf.Pixmap(doc, xref)
    if pix.colorspace is not None and pix.colorspace.n not in (1, 3):
        pix = pymupdf.Pixmap(pymupdf.csRGB, pix)
    if pix.alpha:
        # inline alpha comes premultiplied; drop it and rely on the SMask
        pix = pymupdf.Pixmap(pix, 0)
    arr = np.frombuffer(pix.samples, dtype=np.uint8).reshape(pix.height, pix.width, pix.n)
    if arr.shape[2] == 1:
        arr = np.repeat(arr, 3, axis=2)
    if smask:
        mask = pymupdf.Pixmap(doc, smask)
        if (mask.width, mask.height) != (pix.width, pix.height):
            mask = pymupdf.Pixmap(mask, pix.width, pix.height, None)
        alpha = np.frombuffer(mask.samples, dtype=np.uint8).reshape(mask.height, mask.width, mask.n)
        arr = np.concatenate([arr, alpha[:, :, :1]], axis=2)
    return arr


class PyMuPDFBackend:
    """Concrete backend over PyMuPDF."""

    def load(self, data: bytes) -> list[PageModel]:
        doc = _open(data)
        try:
            return [self._page(doc, i) for i in range(doc.page_count)]
        finally:
            doc.close()

    def _page(self, doc: pymupdf.Document, index: int) -> PageModel:
        page = doc[index]
        w, h = float(page.rect.width), float(page.rect.height)
        warnings: list[str] = []

        def guarded(name, fn):
            try:
                return fn()
            except Exception as exc:
                msg = f"page {index}: {name} extraction failed: {exc}"
                log.warning(msg)
                warnings.append(msg)
                return ()

        blocks = guarded("text", lambda: self._blocks(page, w, h))
        images = guarded("image", lambda: self._images(doc, page, w, h))
        drawings = guarded("drawing", lambda: self._drawings(page, w, h))
        widgets = guarded("widget", lambda: self._widgets(page, w, h))
        return PageModel(index, w, h, tuple(images), tuple(blocks), tuple(drawings),
                         tuple(widgets), tuple(warnings))

    def _blocks(self, page, w, h) -> list[TextBlock]:
        out = []
        d = page.get_text("dict", flags=pymupdf.TEXT_PRESERVE_LIGATURES
                          | pymupdf.TEXT_PRESERVE_WHITESPACE
                          | pymupdf.TEXT_MEDIABOX_CLIP)
        for blk in d["blocks"]:
            if blk.get("type") != 0:
                continue
            lines = [ln for ln in (_line_from_dict(l, w, h) for l in blk["lines"]) if ln]
            if not lines:
                continue
            for group in split_side_by_side(lines):
                out.append(TextBlock.from_lines(group))
        return out

    def _images(self, doc, page, w, h) -> list[ImageRegion]:
        out = []
        seen = set()
        for info in page.get_images(full=True):
            xref, smask = info[0], info[1]
            if xref in seen:
                continue
            seen.add(xref)
            try:
                rects = page.get_image_rects(xref)
            except Exception:
                rects = []
            if not rects:
                continue
            pixels = _pixels(doc, xref, smask)
            for r in rects:
                bbox = _box(r, w, h)
                out.append(ImageRegion.from_pixels(bbox, pixels, xref=xref))
        return out

    def _drawings(self, page, w, h) -> list[DrawingPrimitive]:
        out = []
        for path in page.get_drawings():
            for item in path["items"]:
                op = item[0]
                if op == "l":
                    p, q = item[1], item[2]
                    a = (min(max(float(p.x), 0.0), w), min(max(float(p.y), 0.0), h))
                    b = (min(max(float(q.x), 0.0), w), min(max(float(q.y), 0.0), h))
                    out.append(DrawingPrimitive.line(a, b))
                elif op == "re":
                    out.append(DrawingPrimitive("rectangle", _box(item[1], w, h)))
                elif op == "qu":
                    out.append(DrawingPrimitive("other", _box(item[1].rect, w, h)))
                elif op == "c":
                    pts = item[1:5]
                    xs = [float(pt.x) for pt in pts]
                    ys = [float(pt.y) for pt in pts]
                    out.append(DrawingPrimitive("curve",
                                                _box((min(xs), min(ys), max(xs), max(ys)), w, h)))
        return out

    def _widgets(self, page, w, h) -> list[FormWidget]:
        out = []
        for wd in page.widgets() or ():
            kind = _WIDGET_TYPES.get(wd.field_type_string, "other")
            out.append(FormWidget(wd.field_name or "", kind, _box(wd.rect, w, h)))
        return out

    def render_region(self, data: bytes, page_index: int, bbox: BoundingBox,
                      zoom: float = 2.0) -> np.ndarray:
        doc = _open(data)
        try:
            page = doc[page_index]
            clip = pymupdf.Rect(*bbox.as_tuple())
            if clip.is_empty:
                return np.zeros((1, 1, 3), dtype=np.uint8)
            pix = page.get_pixmap(matrix=pymupdf.Matrix(zoom, zoom), clip=clip, alpha=False)
            return np.frombuffer(pix.samples, dtype=np.uint8).reshape(
                pix.height, pix.width, pix.n).copy()
        finally:
            doc.close()


def load_document(source: bytes | str | os.PathLike,
                  backend: PdfBackend | None = None) -> list[PageModel]:
    """Parse a PDF (path or bytes) into one PageModel per page."""
    data = _read(source)
    return (backend or PyMuPDFBackend()).load(data)
