"""Form page detection: AcroForm widgets, short-label profiling, drawing evidence."""

from __future__ import annotations

from dataclasses import dataclass, field

from .config import PipelineConfig
from .primitives import BoundingBox, FormWidget, PageModel, TextBlock


@dataclass(frozen=True)
class FormDetection:
    is_form_page: bool
    strategy: frozenset[str] = frozenset()
    fields: tuple[FormWidget, ...] = ()
    region: BoundingBox | None = None
    short_block_count: int = 0
    rect_count: int = 0
    line_count: int = 0


def detect_acroform(page: PageModel) -> list[FormWidget]:
    """Interactive widgets on the page, as (name, type, rect) records."""
    return list(page.widgets)


def short_blocks(page: PageModel, cfg: PipelineConfig) -> list[TextBlock]:
    return [b for b in page.blocks
            if b.text.strip() and len(b.text.strip()) < cfg.short_block_chars]


def detect_form_layout(page: PageModel, cfg: PipelineConfig | None = None) -> tuple[bool, int]:
    """Flag pages with more than T_b non-empty blocks shorter than T_t characters."""
    cfg = cfg or PipelineConfig()
    count = len(short_blocks(page, cfg))
    return count > cfg.form_min_short_blocks, count


def form_drawing_evidence(page: PageModel) -> tuple[int, int]:
    rects = sum(1 for d in page.drawings if d.kind == "rectangle")
    lines = sum(1 for d in page.drawings if d.kind == "line")
    return rects, lines


def detect_form(page: PageModel, cfg: PipelineConfig | None = None) -> FormDetection:
    cfg = cfg or PipelineConfig()
    widgets = detect_acroform(page)
    layout_hit, n_short = detect_form_layout(page, cfg)
    rects, lines = form_drawing_evidence(page)

    strategy = set()
    region = None
    if widgets:
        strategy.add("acroform")
        region = BoundingBox.union_of(w.rect for w in widgets)
    if layout_hit:
        strategy.add("layout")
        if region is None:
            region = BoundingBox.union_of(b.bbox for b in short_blocks(page, cfg))
    # drawing counts are recorded as evidence only; no published cutoff makes them a detector
    is_form = bool(widgets) or layout_hit
    return FormDetection(is_form, frozenset(strategy), tuple(widgets), region,
                         n_short, rects, lines)
