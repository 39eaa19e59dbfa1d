"""Generator for a small annotated PDF corpus.

Every document is drawn programmatically, so its ground truth is exact by
construction. ``generate_corpus`` writes one PDF plus one ground-truth JSON
per document, a logo reference file, and ``corpus.json`` describing it all
(including OCR text planted for watermark rasters, keyed by pixel digest).
"""

from __future__ import annotations

import io
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pymupdf
from PIL import Image, ImageDraw, ImageFont

from .backend import load_document
from .filters import LogoReference, load_logo_references, save_logo_references
from .metrics import GroundTruth, GroundTruthPage, AnnotatedElement
from .primitives import BoundingBox
from .providers import StubEmbeddingProvider

PAGE_W, PAGE_H = 612.0, 792.0
BODY_SIZE = 10.0
LINE_PITCH = 13.0
MARGIN = 72.0

_LIGATURE_FONT = "/usr/share/fonts/truetype/dejavu/DejaVuSans.ttf"
_BOLD_TTF = "/usr/share/fonts/truetype/dejavu/DejaVuSans-Bold.ttf"

_WORDS = (
    "system data model results analysis report design process value network "
    "method table section review budget quarter growth sample region product "
    "service customer support policy request update schedule project metric "
    "signal output input change level period account record summary detail"
).split()

_FONTS: dict[str, pymupdf.Font] = {}


def _font(name: str) -> pymupdf.Font:
    if name not in _FONTS:
        _FONTS[name] = pymupdf.Font(name)
    return _FONTS[name]


def text_box(x: float, baseline: float, text: str, size: float = BODY_SIZE,
             font: str = "helv") -> BoundingBox:
    """Extraction-equivalent bounding box of a single inserted line."""
    f = _font(font)
    width = f.text_length(text, fontsize=size)
    return BoundingBox(x, baseline - f.ascender * size, x + width, baseline - f.descender * size)


def _png(arr: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(arr).save(buf, format="PNG", optimize=False)
    return buf.getvalue()


@dataclass
class _PageBuilder:
    page: pymupdf.Page
    index: int
    texts: list[str] = field(default_factory=list)
    elements: list[AnnotatedElement] = field(default_factory=list)

    def line(self, x: float, baseline: float, text: str, size: float = BODY_SIZE,
             bold: bool = False) -> BoundingBox:
        font = "hebo" if bold else "helv"
        self.page.insert_text((x, baseline), text, fontsize=size, fontname=font)
        self.texts.append(text)
        return text_box(x, baseline, text, size, font)

    def paragraph(self, rng: np.random.Generator, x: float, baseline: float, n_lines: int,
                  width: float = PAGE_W - 2 * MARGIN) -> float:
        """Body text lines; returns the baseline after the last line."""
        f = _font("helv")
        for _ in range(n_lines):
            words = []
            while True:
                w = str(rng.choice(_WORDS))
                if f.text_length(" ".join(words + [w]), fontsize=BODY_SIZE) > width:
                    break
                words.append(w)
            self.line(x, baseline, " ".join(words))
            baseline += LINE_PITCH
        return baseline

    def image(self, rect: BoundingBox, raster: np.ndarray, overlay: bool = True) -> None:
        self.page.insert_image(pymupdf.Rect(*rect.as_tuple()), stream=_png(raster),
                               overlay=overlay, keep_proportion=False)

    def annotate(self, kind: str, bbox: BoundingBox, caption: str | None = None) -> None:
        self.elements.append(AnnotatedElement(kind, bbox, caption, self.index))

    def ground_truth(self) -> GroundTruthPage:
        return GroundTruthPage(self.index, " ".join(self.texts), list(self.elements),
                               PAGE_W, PAGE_H)


class _Doc:
    def __init__(self, name: str, tags: list[str]):
        self.name = name
        self.tags = tags
        self.doc = pymupdf.open()
        self.pages: list[_PageBuilder] = []
        self.ambiguous_caption_pages: list[int] = []
        self.watermark_rects: list[tuple[int, BoundingBox, str]] = []
        self.logo_rects: list[tuple[int, BoundingBox, str]] = []

    def new_page(self) -> _PageBuilder:
        p = _PageBuilder(self.doc.new_page(width=PAGE_W, height=PAGE_H), len(self.pages))
        self.pages.append(p)
        return p

    def to_bytes(self) -> bytes:
        return self.doc.tobytes(garbage=3, deflate=True, no_new_id=True)

    def ground_truth(self) -> GroundTruth:
        return GroundTruth([p.ground_truth() for p in self.pages])


# --- rasters ---------------------------------------------------------------

def figure_raster(rng: np.random.Generator, w: int = 240, h: int = 160) -> np.ndarray:
    """Opaque chart-like raster: gradient background with random bars."""
    yy, xx = np.mgrid[0:h, 0:w]
    base = rng.uniform(0, 1, 3)
    img = np.empty((h, w, 3))
    for c in range(3):
        img[:, :, c] = 200 + 40 * np.sin(xx / (15 + 10 * base[c])) * np.cos(yy / 23.0)
    n_bars = int(rng.integers(4, 9))
    bw = w // (n_bars * 2)
    for k in range(n_bars):
        top = int(rng.integers(h // 5, h - 10))
        color = rng.integers(20, 180, 3)
        img[top:h - 5, 5 + k * 2 * bw: 5 + k * 2 * bw + bw] = color
    return np.clip(img, 0, 255).astype(np.uint8)


def logo_raster(rng: np.random.Generator, w: int = 64, h: int = 48) -> np.ndarray:
    img = np.full((h, w, 3), 255, dtype=np.uint8)
    yy, xx = np.mgrid[0:h, 0:w]
    color = rng.integers(0, 160, 3).astype(np.uint8)
    disk = (xx - w / 3) ** 2 + (yy - h / 2) ** 2 < (h / 3) ** 2
    img[disk] = color
    img[h // 3: 2 * h // 3, w // 2: w - 4] = color[::-1]
    return img


def _truetype(size: int):
    try:
        return ImageFont.truetype(_BOLD_TTF, size)
    except OSError:
        return ImageFont.load_default(size)


def watermark_raster(text: str, w: int = 360, h: int = 480, opacity: float = 0.4) -> np.ndarray:
    """Transparent RGBA raster with a diagonal keyword painted at ``opacity``."""
    band = Image.new("L", (int(w * 1.2), 90), 0)
    ImageDraw.Draw(band).text((10, 10), text, fill=255, font=_truetype(48))
    band = band.rotate(35, expand=True, resample=Image.Resampling.NEAREST)
    canvas = Image.new("L", (w, h), 0)
    canvas.paste(band, ((w - band.width) // 2, (h - band.height) // 2))
    mask = np.asarray(canvas) > 127
    rgba = np.zeros((h, w, 4), dtype=np.uint8)
    rgba[:, :, :3] = 90
    rgba[:, :, 3] = np.where(mask, int(round(opacity * 255)), 0)
    return rgba


# --- documents -------------------------------------------------------------

def _title_and_para(p: _PageBuilder, rng, title: str, n_lines: int = 4) -> float:
    p.line(MARGIN, 80, title, size=14, bold=True)
    return p.paragraph(rng, MARGIN, 104, n_lines)


def _bordered_table(p: _PageBuilder, x0: float, y0: float, rows: int, cols: int,
                    col_w: float, row_h: float, rng) -> BoundingBox:
    x1, y1 = x0 + cols * col_w, y0 + rows * row_h
    for r in range(rows + 1):
        p.page.draw_line((x0, y0 + r * row_h), (x1, y0 + r * row_h), width=0.8)
    for c in range(cols + 1):
        p.page.draw_line((x0 + c * col_w, y0), (x0 + c * col_w, y1), width=0.8)
    headers = ("Region", "Quarter one", "Quarter two", "Quarter three", "Total")
    for r in range(rows):
        for c in range(cols):
            if r == 0:
                val = headers[c % len(headers)]
            else:
                val = f"{rng.integers(100, 99999):,}.{rng.integers(10, 99)}"
            p.line(x0 + c * col_w + 6, y0 + r * row_h + row_h * 0.65, val, size=9)
    return BoundingBox(x0, y0, x1, y1)


def doc_bordered_table(rng) -> _Doc:
    d = _Doc("bordered_table", ["table", "bordered", "caption"])
    p = d.new_page()
    y = _title_and_para(p, rng, "Regional results", 4)
    cap = "Table 1: Quarterly revenue by region"
    cap_box = p.line(MARGIN, y + 24, cap, bold=True)
    grid = _bordered_table(p, MARGIN, cap_box.y1 + 8, 6, 5, 93.0, 22.0, rng)
    p.annotate("table", grid, cap)
    p.paragraph(rng, MARGIN, grid.y1 + 40, 6)
    return d


def _unbordered_cells(p: _PageBuilder, rng, x0: float, y0: float, rows: int, cols: int,
                      pitch_x: float, pitch_y: float) -> BoundingBox:
    boxes = []
    headers = ("Department", "Headcount", "Budget share", "Open roles")
    for r in range(rows):
        for c in range(cols):
            if r == 0:
                text, bold = headers[c % len(headers)], True
            else:
                text, bold = f"{rng.integers(1000, 9999)}.{rng.integers(10, 99)} units", False
            boxes.append(p.line(x0 + c * pitch_x, y0 + r * pitch_y, text, size=10, bold=bold))
    return BoundingBox.union_of(boxes)


def doc_unbordered_table(rng) -> _Doc:
    d = _Doc("aligned_grid", ["table", "unbordered", "caption"])
    p = d.new_page()
    y = _title_and_para(p, rng, "Staffing overview", 5)
    cap = "Table 2: Staffing by department"
    cap_box = p.line(MARGIN, y + 24, cap, bold=True)
    region = _unbordered_cells(p, rng, MARGIN, cap_box.y1 + 22, 6, 4, 86.0, 20.0)
    p.annotate("table", region, cap)
    p.paragraph(rng, MARGIN, region.y1 + 40, 5)
    return d


def doc_acroform(rng) -> _Doc:
    d = _Doc("acroform", ["form", "acroform", "caption"])
    p = d.new_page()
    cap = "Form 2: Newsletter signup"
    p.line(MARGIN, 80, cap, size=12, bold=True)
    p.paragraph(rng, MARGIN, 104, 3)
    specs = [("full_name", pymupdf.PDF_WIDGET_TYPE_TEXT, "Full name", 180),
             ("email", pymupdf.PDF_WIDGET_TYPE_TEXT, "Email address", 214),
             ("subscribe", pymupdf.PDF_WIDGET_TYPE_CHECKBOX, "Subscribe", 248)]
    rects = []
    for name, kind, label, y in specs:
        p.line(MARGIN, y + 12, label)
        w = 16 if kind == pymupdf.PDF_WIDGET_TYPE_CHECKBOX else 260
        rect = BoundingBox(200, y, 200 + w, y + 16)
        widget = pymupdf.Widget()
        widget.field_name = name
        widget.field_type = kind
        widget.rect = pymupdf.Rect(*rect.as_tuple())
        p.page.add_widget(widget)
        rects.append(rect)
    p.annotate("form", BoundingBox.union_of(rects), cap)
    p.paragraph(rng, MARGIN, 320, 4)
    return d


_LABELS = ("Name", "Date", "SSN", "EIN", "City", "Zip", "Tel", "Fax", "Mail", "Addr", "Acct",
           "Ref", "Code", "Type", "Rate", "Qty", "Unit", "Amt", "Sign", "Dept", "Room", "Box",
           "Apt", "Cnty", "St", "Ctry", "Bank", "ABA", "Memo", "Note", "Due", "Paid", "Tax",
           "Fee", "Net", "Sum")


def doc_label_grid(rng) -> _Doc:
    d = _Doc("label_grid_form", ["form", "layout"])
    p = d.new_page()
    cap = "Form 1: Taxpayer identification request"
    p.line(MARGIN, 84, cap, size=12, bold=True)
    boxes = []
    for k, label in enumerate(_LABELS):
        col, row = divmod(k, 18)
        x = MARGIN + col * 250
        base = 130 + row * 34
        boxes.append(p.line(x, base, label))
        p.page.draw_rect(pymupdf.Rect(x + 40, base - 12, x + 220, base + 6), width=0.6)
    p.annotate("form", BoundingBox.union_of(boxes), cap)
    return d


def _fragments(p: _PageBuilder, rng, rect: BoundingBox, n: int) -> None:
    """Place ``n`` horizontally overlapping crops that jointly cover ``rect``."""
    raster = figure_raster(rng, 300, 150)
    step = rect.width / (n + 1)
    px_step = raster.shape[1] / (n + 1)
    for k in range(n):
        frag = BoundingBox(rect.x0 + k * step, rect.y0, rect.x0 + (k + 2) * step, rect.y1)
        crop = raster[:, int(round(k * px_step)): int(round((k + 2) * px_step))]
        p.image(frag, np.ascontiguousarray(crop))


def doc_fragmented(rng, n: int) -> _Doc:
    d = _Doc(f"fragmented_{n}", ["image", "merge", "caption"])
    p = d.new_page()
    y = _title_and_para(p, rng, "Network diagram", 5)
    rect = BoundingBox(126, y + 20, 486, y + 200)
    _fragments(p, rng, rect, n)
    cap = f"Figure {n}: Site topology reassembled from {n} parts"
    p.line(126, rect.y1 + 18, cap)
    p.annotate("image", rect, cap)
    p.paragraph(rng, MARGIN, rect.y1 + 60, 6)
    return d


def doc_watermark(rng) -> _Doc:
    d = _Doc("watermark_all_pages", ["watermark", "frequency", "alpha", "image", "caption"])
    mark = watermark_raster("CONFIDENTIAL")
    mark_rect = BoundingBox(36, 36, PAGE_W - 36, PAGE_H - 36)
    fig = figure_raster(rng)
    for i in range(4):
        p = d.new_page()
        y = _title_and_para(p, rng, f"Internal memo part {i + 1}", 6)
        if i == 1:
            rect = BoundingBox(156, y + 30, 456, y + 230)
            p.image(rect, fig)
            cap = "Figure 6: Incident volume by week"
            p.line(156, rect.y1 + 18, cap)
            p.annotate("image", rect, cap)
            y = rect.y1 + 60
        p.paragraph(rng, MARGIN, y + 20, 8)
        p.image(mark_rect, mark)
        d.watermark_rects.append((i, mark_rect, "CONFIDENTIAL"))
    return d


def doc_corner_logo(rng) -> _Doc:
    d = _Doc("corner_logo", ["logo", "frequency", "size", "image", "caption"])
    logo = logo_raster(rng)
    icon = np.full((16, 16, 3), 30, dtype=np.uint8)
    fig = figure_raster(rng)
    logo_rect = BoundingBox(36, 30, 116, 90)
    for i in range(10):
        p = d.new_page()
        if i < 9:
            p.image(logo_rect, logo)
            d.logo_rects.append((i, logo_rect, "acme"))
        y = p.paragraph(rng, MARGIN, 120, 6)
        if i == 3:
            p.image(BoundingBox(MARGIN, y + 10, MARGIN + 20, y + 30), icon)
            y += 40
        if i == 5:
            rect = BoundingBox(156, y + 30, 456, y + 230)
            p.image(rect, fig)
            cap = "Figure 7: Adoption by customer segment"
            p.line(156, rect.y1 + 18, cap)
            p.annotate("image", rect, cap)
            y = rect.y1 + 40
        p.paragraph(rng, MARGIN, y + 20, 5)
    return d


def doc_figure_caption(rng) -> _Doc:
    d = _Doc("figure_caption", ["image", "caption", "logo"])
    badge = logo_raster(np.random.default_rng(7), 64, 48)
    for i, cap in enumerate(("Figure 1: Monthly active users across regions",
                             "Figure 2: Error rate after the schema migration")):
        p = d.new_page()
        if i == 0:
            # a logo on one page only: not frequent, so the embedding tier must catch it
            rect = BoundingBox(PAGE_W - 116, PAGE_H - 90, PAGE_W - 36, PAGE_H - 30)
            p.image(rect, badge)
            d.logo_rects.append((i, rect, "badge"))
        y = _title_and_para(p, rng, f"Usage report section {i + 1}", 5)
        rect = BoundingBox(156, y + 30, 456, y + 230)
        p.image(rect, figure_raster(rng))
        p.line(156, rect.y1 + 18, cap, bold=(i == 0))
        p.annotate("image", rect, cap)
        p.paragraph(rng, MARGIN, rect.y1 + 60, 6)
    return d


def doc_table_title(rng) -> _Doc:
    d = _Doc("table_title", ["table", "bordered", "caption"])
    p = d.new_page()
    y = p.paragraph(rng, MARGIN, 90, 8)
    cap = "Table 3: Service level targets"
    cap_box = p.line(MARGIN, y + 30, cap, size=11, bold=True)
    grid = _bordered_table(p, MARGIN, cap_box.y1 + 8, 5, 4, 110.0, 24.0, rng)
    p.annotate("table", grid, cap)
    p.paragraph(rng, MARGIN, grid.y1 + 40, 5)
    return d


def doc_caption_conflict(rng) -> _Doc:
    """Stacked figures whose captions sit between them.

    Page 0: the shared caption is nearer to the lower figure, but the upper
    figure claims it with a higher score, so conflict resolution hands the
    lower figure its own caption. Page 1: layout alone prefers the wrong
    caption for the lower figure; only semantic evidence separates them.
    """
    d = _Doc("caption_conflict", ["image", "caption", "conflict"])
    specs = [
        (6.0, 10.0, 14.0, ("Figure 8: Request latency percentiles",
                           "Figure 9: Cache hit ratio by tier")),
        (14.0, 10.0, 14.0, ("Figure 10: Disk usage per cluster",
                            "Figure 11: Replication lag during failover")),
    ]
    for i, (gap_a, gap_b, gap_cap_b, caps) in enumerate(specs):
        p = d.new_page()
        p.line(MARGIN, 60, f"Capacity review {i + 1}", size=14, bold=True)
        a = BoundingBox(156, 80, 456, 240)
        p.image(a, figure_raster(rng))
        cap_a = text_box(156, 0, caps[0])
        base_a = a.y1 + gap_a - cap_a.y0
        box_a = p.line(156, base_a, caps[0])
        b = BoundingBox(156, box_a.y1 + gap_b, 456, box_a.y1 + gap_b + 160)
        p.image(b, figure_raster(rng))
        p.line(156, b.y1 + gap_cap_b - cap_a.y0, caps[1])
        p.annotate("image", a, caps[0])
        p.annotate("image", b, caps[1])
        p.paragraph(rng, MARGIN, b.y1 + 70, 4)
        if i == 1:
            d.ambiguous_caption_pages.append(i)
    return d


def doc_text_cleanup(rng) -> _Doc:
    d = _Doc("ligature_text", ["text"])
    p = d.new_page()
    raw = ["The e\ufb03cient \ufb01lter \ufb02ow is o\ufb00ered to sta\ufb00 at no cost.",
           "Results are shown for the exam-",
           "ple workload and the state-",
           "Of-Art baseline,\u00a0with care."]
    clean = ("The efficient filter flow is offered to staff at no cost. Results are shown for "
             "the example workload and the state- Of-Art baseline, with care.")
    for k, line in enumerate(raw):
        p.page.insert_text((MARGIN, 100 + k * LINE_PITCH), line, fontsize=BODY_SIZE,
                           fontfile=_LIGATURE_FONT, fontname="dejavu")
    p.texts.append(clean)
    return d


def doc_blank(rng) -> _Doc:
    d = _Doc("blank_degenerate", ["degenerate"])
    d.new_page()
    p = d.new_page()
    p.image(BoundingBox(300, 400, 301, 401), np.zeros((1, 1, 3), dtype=np.uint8))
    return d


BUILDERS = (
    doc_bordered_table,
    doc_unbordered_table,
    doc_acroform,
    doc_label_grid,
    lambda rng: doc_fragmented(rng, 2),
    lambda rng: doc_fragmented(rng, 3),
    doc_watermark,
    doc_corner_logo,
    doc_figure_caption,
    doc_table_title,
    doc_caption_conflict,
    doc_text_cleanup,
    doc_blank,
)


def _find_image(pages, page_index: int, rect: BoundingBox):
    for im in pages[page_index].images:
        if all(abs(a - b) < 0.5 for a, b in zip(im.bbox.as_tuple(), rect.as_tuple())):
            return im
    raise RuntimeError(f"fixture image {rect} not found on page {page_index}")


def generate_corpus(seed: int, out_dir: str | os.PathLike) -> dict:
    """Write the fixture corpus to ``out_dir`` and return its descriptor."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    embedder = StubEmbeddingProvider()
    documents, planted, refs = [], {}, {}
    for k, build in enumerate(BUILDERS):
        rng = np.random.default_rng([seed, k])
        d = build(rng)
        data = d.to_bytes()
        (out / f"{d.name}.pdf").write_bytes(data)
        gt = d.ground_truth()
        (out / f"{d.name}.gt.json").write_text(json.dumps(gt.to_dict(), indent=2) + "\n",
                                               encoding="utf-8")
        if d.watermark_rects or d.logo_rects:
            pages = load_document(data)
            for page_index, rect, text in d.watermark_rects:
                planted[_find_image(pages, page_index, rect).content_digest] = text
            for page_index, rect, name in d.logo_rects:
                im = _find_image(pages, page_index, rect)
                refs.setdefault(name, embedder.embed_image(im.decode()))
        documents.append({
            "name": d.name,
            "pdf": f"{d.name}.pdf",
            "ground_truth": f"{d.name}.gt.json",
            "pages": len(d.pages),
            "tags": d.tags,
            "ambiguous_caption_pages": d.ambiguous_caption_pages,
        })
    distractor = np.random.default_rng([seed, 999]).normal(size=embedder.dimension)
    refs["distractor"] = distractor / np.linalg.norm(distractor)
    save_logo_references([LogoReference(k, v) for k, v in sorted(refs.items())],
                         out / "logo_refs.txt")
    descriptor = {
        "seed": seed,
        "documents": documents,
        "logo_refs": "logo_refs.txt",
        "ocr_plants": dict(sorted(planted.items())),
    }
    (out / "corpus.json").write_text(json.dumps(descriptor, indent=2) + "\n", encoding="utf-8")
    return descriptor


def corpus_providers(out_dir: str | os.PathLike):
    """Stub providers primed with a generated corpus's OCR plants and logo references."""
    from .pipeline import Providers

    out = Path(out_dir)
    desc = json.loads((out / "corpus.json").read_text(encoding="utf-8"))
    refs = load_logo_references(out / desc["logo_refs"])
    return Providers.stub(desc["ocr_plants"], refs)
