"""Caption association: layout heuristics fused with semantic similarity."""

from __future__ import annotations

import logging
import re
from collections.abc import Sequence
from dataclasses import dataclass, field
from statistics import median

import numpy as np
from sklearn.cluster import DBSCAN

from .config import PipelineConfig
from .elements import VisualElement
from .primitives import BoundingBox, PageModel, TextLine
from .providers import EmbeddingProvider, EmbeddingUnavailable

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class WindowLine:
    page_index: int
    line: TextLine
    line_id: int  # index of the line within its page's line list


@dataclass
class CandidateBlock:
    page_index: int
    bbox: BoundingBox
    text: str
    font_size: float
    bold: bool
    italic: bool
    line_ids: frozenset[tuple[int, int]] = frozenset()


@dataclass
class CaptionFeatures:
    keyword_hit: bool
    distance_pts: float
    style_score: float
    enumeration_hit: bool


@dataclass
class CaptionCandidate:
    block: CandidateBlock
    H: float
    S: float
    F: float
    features: CaptionFeatures


@dataclass
class CaptionMatch:
    element_id: str
    candidate: CaptionCandidate
    text: str = field(default="")

    def __post_init__(self) -> None:
        if not self.text:
            self.text = self.candidate.block.text


def page_median_line_height(page: PageModel) -> float:
    heights = [ln.bbox.height for ln in page.lines() if ln.bbox.height > 0]
    return float(median(heights)) if heights else 12.0


def page_median_font(page: PageModel) -> float:
    sizes = [ln.font_size for ln in page.lines() if ln.font_size > 0]
    return float(median(sizes)) if sizes else 10.0


def context_window(el: VisualElement, pages: Sequence[PageModel],
                   cfg: PipelineConfig | None = None) -> list[WindowLine]:
    """Text lines near the element, plus adjoining strips of neighbouring pages.

    On the element's own page the window spans ``window_scale`` element
    heights above and below the box. Lines whose center lies inside the
    element box are content of the element, not captions, and are skipped.
    """
    cfg = cfg or PipelineConfig()
    idx = el.page_index
    page = pages[idx]
    reach = cfg.window_scale * el.bbox.height
    top, bottom = max(0.0, el.bbox.y0 - reach), min(page.height, el.bbox.y1 + reach)
    out: list[WindowLine] = []
    for k, ln in enumerate(page.lines()):
        if ln.bbox.y1 < top or ln.bbox.y0 > bottom:
            continue
        cx, cy = ln.bbox.center
        if el.bbox.x0 < cx < el.bbox.x1 and el.bbox.y0 < cy < el.bbox.y1:
            continue
        out.append(WindowLine(idx, ln, k))
    if idx > 0:
        prev = pages[idx - 1]
        strip_top = prev.height - reach
        out.extend(WindowLine(idx - 1, ln, k) for k, ln in enumerate(prev.lines())
                   if ln.bbox.y1 >= strip_top)
    if idx + 1 < len(pages):
        nxt = pages[idx + 1]
        out.extend(WindowLine(idx + 1, ln, k) for k, ln in enumerate(nxt.lines())
                   if ln.bbox.y0 <= reach)
    return out


def _block_from(lines: list[WindowLine]) -> CandidateBlock:
    lines = sorted(lines, key=lambda w: (round(w.line.bbox.y0, 1), w.line.bbox.x0, w.line_id))
    weights = [max(1, len(w.line.text.strip())) for w in lines]
    total = sum(weights)
    bold = sum(wt for wt, w in zip(weights, lines) if w.line.bold) * 2 > total
    italic = sum(wt for wt, w in zip(weights, lines) if w.line.italic) * 2 > total
    return CandidateBlock(
        page_index=lines[0].page_index,
        bbox=BoundingBox.union_of(w.line.bbox for w in lines),
        text=" ".join(w.line.text.strip() for w in lines if w.line.text.strip()),
        font_size=max(w.line.font_size for w in lines),
        bold=bold,
        italic=italic,
        line_ids=frozenset((w.page_index, w.line_id) for w in lines),
    )


def cluster_lines(lines: Sequence[WindowLine], eps: float,
                  line_height: float | dict[int, float] = 12.0) -> list[CandidateBlock]:
    """Group lines into candidate blocks with DBSCAN (min_pts=1).

    Points are line anchors (x0, vertical center) divided by the median
    line height, so ``eps`` is measured in line heights. Lines on different
    pages never share a block.
    """
    by_page: dict[int, list[WindowLine]] = {}
    for w in lines:
        if w.line.text.strip():
            by_page.setdefault(w.page_index, []).append(w)
    blocks: list[CandidateBlock] = []
    for pidx in sorted(by_page):
        group = by_page[pidx]
        lh = line_height.get(pidx, 12.0) if isinstance(line_height, dict) else line_height
        lh = lh if lh > 0 else 12.0
        pts = np.array([[w.line.bbox.x0 / lh, (w.line.bbox.y0 + w.line.bbox.y1) / 2 / lh]
                        for w in group])
        labels = DBSCAN(eps=eps, min_samples=1).fit_predict(pts)
        clusters: dict[int, list[WindowLine]] = {}
        for lab, w in zip(labels, group):
            clusters.setdefault(int(lab), []).append(w)
        blocks.extend(_block_from(c) for c in clusters.values())
    blocks.sort(key=lambda b: (b.page_index, b.bbox.y0, b.bbox.x0, b.text))
    return blocks


def _keyword_pattern(keywords: Sequence[str]) -> re.Pattern:
    alts = "|".join(re.escape(k) for k in sorted(keywords, key=len, reverse=True))
    return re.compile(rf"^\s*(?:{alts})", re.IGNORECASE)


def _enumeration_pattern(keywords: Sequence[str]) -> re.Pattern:
    stems = sorted({k.rstrip(".") for k in keywords}, key=len, reverse=True)
    alts = "|".join(re.escape(s) for s in stems)
    return re.compile(rf"^\s*(?:{alts})\.?\s*[:.\-\u2013]?\s*\d+", re.IGNORECASE)


def vertical_gap(block: CandidateBlock, el: VisualElement,
                 pages: Sequence[PageModel] | None = None) -> float:
    """Vertical distance in points; blocks on adjoining pages measure across the break."""
    if block.page_index == el.page_index or pages is None:
        return max(0.0, block.bbox.y0 - el.bbox.y1, el.bbox.y0 - block.bbox.y1)
    if block.page_index < el.page_index:
        return (pages[block.page_index].height - block.bbox.y1) + el.bbox.y0
    return (pages[el.page_index].height - el.bbox.y1) + block.bbox.y0


def heuristic_score(block: CandidateBlock, el: VisualElement, cfg: PipelineConfig | None = None,
                    median_font: float = 10.0,
                    pages: Sequence[PageModel] | None = None) -> tuple[float, CaptionFeatures]:
    """Layout score H in [0, 1] from keyword, proximity, style and enumeration cues."""
    cfg = cfg or PipelineConfig()
    w_kw, w_prox, w_style, w_enum = cfg.cue_weights
    text = block.text
    keyword = bool(_keyword_pattern(cfg.caption_keywords).match(text))
    enumeration = bool(_enumeration_pattern(cfg.caption_keywords).match(text))
    gap = vertical_gap(block, el, pages)
    reach = cfg.window_scale * el.bbox.height
    proximity = max(0.0, 1.0 - gap / reach) if reach > 0 else float(gap == 0)
    size_ratio = block.font_size / (1.2 * median_font) if median_font > 0 else 1.0
    style = 0.5 * float(block.bold) + 0.5 * min(1.0, size_ratio)
    h = w_kw * keyword + w_prox * proximity + w_style * style + w_enum * enumeration
    return min(1.0, max(0.0, h)), CaptionFeatures(keyword, gap, style, enumeration)


def semantic_score(block: CandidateBlock, el: VisualElement,
                   provider: EmbeddingProvider | None) -> tuple[float, str | None]:
    """S in [0, 1] as (cosine + 1) / 2; 0.5 when no comparison is possible.

    Returns the score and a warning message when the provider failed.
    """
    if provider is None:
        return 0.5, None
    try:
        sim = provider.similarity(block.text, el)
    except EmbeddingUnavailable as exc:
        return 0.5, f"semantic score unavailable, using neutral 0.5: {exc}"
    if sim is None:
        return 0.5, None
    return (float(np.clip(sim, -1.0, 1.0)) + 1.0) / 2.0, None


def fuse(h: float, s: float, alpha: float) -> float:
    return alpha * h + (1.0 - alpha) * s


def score_candidates(el: VisualElement, pages: Sequence[PageModel],
                     provider: EmbeddingProvider | None,
                     cfg: PipelineConfig | None = None) -> list[CaptionCandidate]:
    """All candidate blocks for one element, best first."""
    cfg = cfg or PipelineConfig()
    window = context_window(el, pages, cfg)
    if not window:
        return []
    heights = {i: page_median_line_height(pages[i]) for i in {w.page_index for w in window}}
    blocks = cluster_lines(window, cfg.dbscan_eps, heights)
    mfont = page_median_font(pages[el.page_index])
    out = []
    for b in blocks:
        h, feats = heuristic_score(b, el, cfg, mfont, pages)
        s, warning = semantic_score(b, el, provider)
        if warning and warning not in el.warnings:
            el.warnings.append(warning)
        out.append(CaptionCandidate(b, h, s, fuse(h, s, cfg.fusion_alpha), feats))
    out.sort(key=_rank_key)
    return out


def _rank_key(c: CaptionCandidate):
    # higher F first; ties go to the nearer block, then the earlier page, then text
    return (-c.F, c.features.distance_pts, c.block.page_index, c.block.text)


def associate_captions(elements: Sequence[VisualElement], pages: Sequence[PageModel],
                       provider: EmbeddingProvider | None,
                       cfg: PipelineConfig | None = None) -> list[CaptionMatch]:
    """Pick one caption block per element; a text line captions at most one element.

    When two elements want overlapping blocks, the pair with the higher
    fused score wins and the other element falls back to its next best.
    """
    cfg = cfg or PipelineConfig()
    pairs = []
    for order, el in enumerate(elements):
        for c in score_candidates(el, pages, provider, cfg):
            pairs.append((_rank_key(c), el.id, order, c))
    pairs.sort(key=lambda p: (p[0], p[2]))
    taken_lines: set[tuple[int, int]] = set()
    chosen: dict[str, CaptionMatch] = {}
    for _, el_id, _, cand in pairs:
        if el_id in chosen or cand.block.line_ids & taken_lines:
            continue
        chosen[el_id] = CaptionMatch(el_id, cand)
        taken_lines |= cand.block.line_ids
    by_id = {el.id: el for el in elements}
    for el_id, match in chosen.items():
        by_id[el_id].caption = match
    return [chosen[el.id] for el in elements if el.id in chosen]
