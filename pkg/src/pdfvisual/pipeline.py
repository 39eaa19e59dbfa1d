"""End-to-end orchestration and the JSON manifest format."""

from __future__ import annotations

import hashlib
import json
import logging
import os
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path

from .backend import PdfBackend, PyMuPDFBackend, _read
from .caption import CaptionMatch, associate_captions
from .config import PipelineConfig
from .elements import VisualElement
from .filters import FilterContext, LogoReference, apply_filters, load_logo_references
from .forms import FormDetection, detect_form
from .merge import merge_images
from .metrics import DetectedElement, EvalReport, GroundTruth, evaluate
from .primitives import BoundingBox, PageModel
from .providers import (
    EmbeddingProvider,
    HttpEmbeddingProvider,
    HttpOcrProvider,
    OcrProvider,
    StubEmbeddingProvider,
    StubOcrProvider,
)
from .tables import TableDetection, detect_table
from .textnorm import normalize_text

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1


@dataclass
class Providers:
    embedder: EmbeddingProvider | None = None
    ocr: OcrProvider | None = None
    logo_refs: Sequence[LogoReference] = ()

    @classmethod
    def stub(cls, planted_ocr: dict[str, str] | None = None,
             logo_refs: Sequence[LogoReference] = ()) -> Providers:
        return cls(StubEmbeddingProvider(), StubOcrProvider(planted_ocr), tuple(logo_refs))

    @classmethod
    def from_config(cls, cfg: PipelineConfig) -> Providers:
        """Build providers named by the config (after environment overrides)."""
        cfg = cfg.with_env_overrides()
        if cfg.provider == "remote":
            if not cfg.embed_url:
                raise ValueError("remote provider selected but no embed_url configured")
            embedder = HttpEmbeddingProvider(cfg.embed_url, cfg.provider_timeout, cfg.max_inflight)
            ocr = HttpOcrProvider(cfg.ocr_url or cfg.embed_url, cfg.provider_timeout,
                                  cfg.max_inflight)
        else:
            embedder, ocr = StubEmbeddingProvider(), StubOcrProvider()
        refs = load_logo_references(cfg.logo_refs_path, embedder) if cfg.logo_refs_path else ()
        return cls(embedder, ocr, tuple(refs))


@dataclass
class PageResult:
    page_index: int
    width: float
    height: float
    normalized_text: str
    table: TableDetection
    form: FormDetection
    raw_images: list[dict]
    elements: list[VisualElement]
    warnings: list[str] = field(default_factory=list)


@dataclass
class DocumentManifest:
    source_digest: str
    pages: list[PageResult]
    config: PipelineConfig = field(default_factory=PipelineConfig)

    def kept_elements(self) -> list[VisualElement]:
        return [el for p in self.pages for el in p.elements if el.keep]

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "source_digest": self.source_digest,
            "config": self.config.to_dict(),
            "pages": [_page_dict(p) for p in self.pages],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"

    def write(self, path: str | os.PathLike) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")


def _box(b: BoundingBox | None):
    return None if b is None else b.as_list()


def _caption_dict(m: CaptionMatch | None):
    if m is None:
        return None
    c = m.candidate
    return {"text": normalize_text(m.text), "page_index": c.block.page_index,
            "bbox": _box(c.block.bbox), "H": c.H, "S": c.S, "F": c.F}


def _page_dict(p: PageResult) -> dict:
    t, f = p.table, p.form
    return {
        "page_index": p.page_index,
        "width": p.width,
        "height": p.height,
        "normalized_text": p.normalized_text,
        "table": {
            "present": t.present,
            "kind": t.kind,
            "regions": [_box(r) for r in t.regions],
            "evidence": {"line_count": t.evidence.line_count,
                         "x_alignments": t.evidence.x_alignments,
                         "y_alignments": t.evidence.y_alignments},
        },
        "form": {
            "is_form_page": f.is_form_page,
            "strategy": sorted(f.strategy),
            "fields": [{"field_name": w.field_name, "field_type": w.field_type,
                        "rect": _box(w.rect), "anonymous": w.anonymous} for w in f.fields],
            "region": _box(f.region),
            "short_block_count": f.short_block_count,
            "drawing_evidence": {"rect_count": f.rect_count, "line_count": f.line_count},
        },
        "raw_images": p.raw_images,
        "elements": [
            {
                "id": el.id,
                "type": el.kind,
                "bbox": _box(el.bbox),
                "keep": el.keep,
                "reasons": sorted(el.reasons),
                "merged_from": list(el.merged_from),
                "digest": el.digest,
                "caption": _caption_dict(el.caption),
                "warnings": list(el.warnings),
            }
            for el in p.elements
        ],
        "warnings": p.warnings,
    }


def detect_page_elements(page: PageModel, cfg: PipelineConfig):
    """Per-page stage: table and form detection plus image merging."""
    table = detect_table(page, cfg)
    form = detect_form(page, cfg)
    raw_ids = [f"p{page.page_index}-raw{i}" for i in range(len(page.images))]
    raw = [{"id": rid, "bbox": _box(im.bbox), "digest": im.content_digest,
            "pixel_size": [im.pixel_width, im.pixel_height], "has_alpha": im.has_alpha}
           for rid, im in zip(raw_ids, page.images)]
    elements = merge_images(page.images, cfg.merge_overlap, page.page_index, raw_ids)
    for k, region in enumerate(table.regions):
        elements.append(VisualElement(f"p{page.page_index}-tbl{k}", "table", page.page_index,
                                      region))
    if form.is_form_page and form.region is not None:
        elements.append(VisualElement(f"p{page.page_index}-frm0", "form", page.page_index,
                                      form.region))
    return table, form, raw, elements


def process_pages(pages: Sequence[PageModel], cfg: PipelineConfig | None = None,
                  providers: Providers | None = None, source_digest: str = "") -> DocumentManifest:
    """Run every stage after loading on already-built page models."""
    cfg = cfg or PipelineConfig()
    providers = providers or Providers.stub()

    staged = [detect_page_elements(p, cfg) for p in pages]
    elements = [s[3] for s in staged]

    apply_filters(pages, elements, FilterContext(providers.embedder, providers.ocr,
                                                 providers.logo_refs), cfg)

    kept = [el for els in elements for el in els if el.keep]
    associate_captions(kept, pages, providers.embedder, cfg)

    results = []
    for page, (table, form, raw, els) in zip(pages, staged):
        text = normalize_text("\n".join(b.text for b in page.blocks))
        results.append(PageResult(page.page_index, page.width, page.height, text, table, form,
                                  raw, els, list(page.warnings)))
    return DocumentManifest(source_digest, results, cfg)


def run_pipeline(pdf: bytes | str | os.PathLike, cfg: PipelineConfig | None = None,
                 providers: Providers | None = None,
                 backend: PdfBackend | None = None) -> DocumentManifest:
    """Load a PDF and produce its manifest.

    MalformedPdf and EncryptedPdf propagate; everything else degrades into
    warnings on the manifest.
    """
    cfg = cfg or PipelineConfig()
    data = _read(pdf)
    pages = (backend or PyMuPDFBackend()).load(data)
    return process_pages(pages, cfg, providers, hashlib.sha256(data).hexdigest())


def manifest_detections(manifest: dict) -> tuple[list[DetectedElement], list[str]]:
    """Detected elements and page texts from a manifest JSON object."""
    if manifest.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported manifest schema {manifest.get('schema_version')!r}")
    dets, texts = [], []
    for p in manifest["pages"]:
        texts.append(p["normalized_text"])
        for e in p["elements"]:
            cap = e.get("caption")
            dets.append(DetectedElement(e["type"], BoundingBox(*e["bbox"]), p["page_index"],
                                        cap["text"] if cap else None, e["keep"]))
    return dets, texts


def evaluate_manifest(manifest: dict | DocumentManifest, gt: GroundTruth,
                      tau_match: float = 0.8,
                      provider: EmbeddingProvider | None = None) -> EvalReport:
    if isinstance(manifest, DocumentManifest):
        manifest = manifest.to_dict()
    dets, texts = manifest_detections(manifest)
    return evaluate(dets, texts, gt, tau_match, provider)
