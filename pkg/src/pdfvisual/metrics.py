"""Evaluation against annotated ground truth.

Ground truth JSON::

    {"pages": [{"index": 0, "text": "...",
                "elements": [{"type": "image", "bbox": [x0, y0, x1, y1],
                              "caption": "Figure 1: ..." | null}]}]}
"""

from __future__ import annotations

import json
import logging
import os
from collections.abc import Sequence
from dataclasses import asdict, dataclass, field
from pathlib import Path

import jsonschema
from rapidfuzz.distance import Levenshtein

from .merge import iou_overlap
from .primitives import BoundingBox
from .providers import EmbeddingProvider, EmbeddingUnavailable, StubEmbeddingProvider, cosine
from .textnorm import normalize_text

log = logging.getLogger(__name__)

ELEMENT_TYPES = ("image", "table", "form")

GROUND_TRUTH_SCHEMA = {
    "type": "object",
    "required": ["pages"],
    "properties": {
        "pages": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["index", "text", "elements"],
                "properties": {
                    "index": {"type": "integer", "minimum": 0},
                    "text": {"type": "string"},
                    "width": {"type": "number"},
                    "height": {"type": "number"},
                    "elements": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["type", "bbox"],
                            "properties": {
                                "type": {"enum": list(ELEMENT_TYPES)},
                                "bbox": {"type": "array", "items": {"type": "number"},
                                         "minItems": 4, "maxItems": 4},
                                "caption": {"type": ["string", "null"]},
                            },
                        },
                    },
                },
            },
        },
    },
}


class EvalInputError(ValueError):
    """Ground truth or manifest is unusable for evaluation."""


@dataclass(frozen=True)
class AnnotatedElement:
    type: str
    bbox: BoundingBox
    caption: str | None = None
    page_index: int = 0


@dataclass
class GroundTruthPage:
    index: int
    text: str
    elements: list[AnnotatedElement] = field(default_factory=list)
    width: float | None = None
    height: float | None = None


@dataclass
class GroundTruth:
    pages: list[GroundTruthPage]

    @classmethod
    def from_dict(cls, data: dict) -> GroundTruth:
        try:
            jsonschema.validate(data, GROUND_TRUTH_SCHEMA)
        except jsonschema.ValidationError as exc:
            raise EvalInputError(f"ground truth does not match schema: {exc.message}") from exc
        pages = []
        for p in data["pages"]:
            els = []
            for e in p["elements"]:
                x0, y0, x1, y1 = e["bbox"]
                if x0 > x1 or y0 > y1:
                    raise EvalInputError(f"inverted bbox on page {p['index']}: {e['bbox']}")
                bbox = BoundingBox(*map(float, e["bbox"]))
                if p.get("width") is not None and p.get("height") is not None:
                    if bbox.x0 < -0.5 or bbox.y0 < -0.5 or bbox.x1 > p["width"] + 0.5 \
                            or bbox.y1 > p["height"] + 0.5:
                        raise EvalInputError(f"bbox outside page {p['index']}: {e['bbox']}")
                els.append(AnnotatedElement(e["type"], bbox, e.get("caption"), p["index"]))
            pages.append(GroundTruthPage(p["index"], p["text"], els, p.get("width"),
                                         p.get("height")))
        return cls(pages)

    def to_dict(self) -> dict:
        out = []
        for p in self.pages:
            d = {"index": p.index, "text": p.text}
            if p.width is not None:
                d["width"], d["height"] = p.width, p.height
            d["elements"] = [{"type": e.type, "bbox": e.bbox.as_list(), "caption": e.caption}
                             for e in p.elements]
            out.append(d)
        return {"pages": out}

    @classmethod
    def load(cls, path: str | os.PathLike) -> GroundTruth:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise EvalInputError(f"cannot read ground truth {path}: {exc}") from exc
        return cls.from_dict(data)


def levenshtein_similarity(a: str, b: str) -> float:
    """1 - edit distance / longer length; two empty strings are identical."""
    longest = max(len(a), len(b))
    if longest == 0:
        return 1.0
    return 1.0 - Levenshtein.distance(a, b) / longest


def match_elements(detected: Sequence, gt: Sequence, tau_match: float = 0.8) -> list[tuple[int, int]]:
    """Greedy one-to-one matching on descending IoU within each element type.

    Elements need ``type`` (or ``kind``), ``bbox`` and optionally
    ``page_index``; only same-page, same-type pairs with IoU >= tau_match
    are eligible. Returns (detected_index, gt_index) pairs.
    """
    def kind(x):
        return getattr(x, "type", None) or getattr(x, "kind")

    cands = []
    for i, d in enumerate(detected):
        for j, g in enumerate(gt):
            if kind(d) != kind(g) or getattr(d, "page_index", 0) != getattr(g, "page_index", 0):
                continue
            iou = iou_overlap(d.bbox, g.bbox)
            if iou >= tau_match:
                cands.append((-iou, i, j))
    cands.sort()
    used_d, used_g, pairs = set(), set(), []
    for _, i, j in cands:
        if i in used_d or j in used_g:
            continue
        used_d.add(i)
        used_g.add(j)
        pairs.append((i, j))
    return sorted(pairs)


def compute_bba(detected: Sequence, gt: Sequence, tau_match: float = 0.8) -> float | None:
    """Matched ground-truth fraction, or None (N/A) when there is no ground truth."""
    if not gt:
        return None
    return len(match_elements(detected, gt, tau_match)) / len(gt)


def compute_dc(detected: Sequence, gt: Sequence, tau_match: float = 0.8) -> float | None:
    """Matched fraction of kept detections, or None (N/A) when nothing was detected."""
    kept = [d for d in detected if getattr(d, "keep", True)]
    if not kept:
        return None
    return len(match_elements(kept, gt, tau_match)) / len(kept)


def caption_similarity(pred: str, gt: str, provider: EmbeddingProvider | None = None) -> float:
    """Cosine of text embeddings mapped onto [0, 1] via (c + 1) / 2.

    Raises EmbeddingUnavailable when the provider fails.
    """
    provider = provider or StubEmbeddingProvider()
    if pred == gt:
        return 1.0
    c = cosine(provider.embed_text(pred), provider.embed_text(gt))
    return (c + 1.0) / 2.0


@dataclass(frozen=True)
class DetectedElement:
    type: str
    bbox: BoundingBox
    page_index: int
    caption: str | None = None
    keep: bool = True


@dataclass
class CategoryCounts:
    detected: int = 0
    ground_truth: int = 0
    matched: int = 0


@dataclass
class EvalReport:
    text_similarity: float | None = None
    caption_similarity: float | None = None
    bba_table: float | None = None
    bba_image: float | None = None
    bba_form: float | None = None
    bba_overall: float | None = None
    dc_overall: float | None = None
    dc_table: float | None = None
    dc_image: float | None = None
    dc_form: float | None = None
    counts: dict[str, CategoryCounts] = field(default_factory=dict)
    captions_scored: int = 0
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _mean(values):
    values = list(values)
    return sum(values) / len(values) if values else None


def evaluate(detected: Sequence[DetectedElement], page_texts: Sequence[str],
             gt: GroundTruth, tau_match: float = 0.8,
             provider: EmbeddingProvider | None = None) -> EvalReport:
    """Score one document's detections and page texts against its ground truth."""
    if len(page_texts) != len(gt.pages):
        raise EvalInputError(f"page count mismatch: {len(page_texts)} extracted vs "
                             f"{len(gt.pages)} annotated")
    provider = provider or StubEmbeddingProvider()
    report = EvalReport()
    report.text_similarity = _mean(
        levenshtein_similarity(normalize_text(t), normalize_text(p.text))
        for t, p in zip(page_texts, sorted(gt.pages, key=lambda p: p.index)))

    kept = [d for d in detected if d.keep]
    gt_els = [e for p in gt.pages for e in p.elements]
    pairs = match_elements(kept, gt_els, tau_match)
    for t in ELEMENT_TYPES:
        det_t = [d for d in kept if d.type == t]
        gt_t = [g for g in gt_els if g.type == t]
        matched = sum(1 for i, _ in pairs if kept[i].type == t)
        report.counts[t] = CategoryCounts(len(det_t), len(gt_t), matched)
        setattr(report, f"bba_{t}", matched / len(gt_t) if gt_t else None)
        setattr(report, f"dc_{t}", matched / len(det_t) if det_t else None)
    report.bba_overall = len(pairs) / len(gt_els) if gt_els else None
    report.dc_overall = len(pairs) / len(kept) if kept else None

    sims = []
    for i, j in pairs:
        want = gt_els[j].caption
        if not want:
            continue
        got = kept[i].caption
        if not got:
            sims.append(0.0)  # a missing caption scores as fully dissimilar
            continue
        try:
            sims.append(caption_similarity(normalize_text(got), normalize_text(want), provider))
        except EmbeddingUnavailable as exc:
            report.warnings.append(f"caption similarity omitted: {exc}")
            sims = []
            break
    report.caption_similarity = _mean(sims)
    report.captions_scored = len(sims)
    return report
