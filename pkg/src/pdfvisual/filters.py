"""Artifact filtering: size, frequency, transparency, watermark and logo tiers."""

from __future__ import annotations

import logging
import os
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from .config import PipelineConfig
from .elements import VisualElement
from .primitives import BoundingBox, ImageRegion, PageModel, UndecodableImage
from .providers import (
    EmbeddingProvider,
    EmbeddingUnavailable,
    OcrProvider,
    OcrUnavailable,
    cosine,
    to_gray,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class FilterVerdict:
    reasons: frozenset[str] = frozenset()

    @property
    def keep(self) -> bool:
        return not self.reasons


@dataclass(frozen=True)
class LogoReference:
    id: str
    embedding: np.ndarray = field(compare=False)

    def __post_init__(self) -> None:
        norm = float(np.linalg.norm(self.embedding))
        if abs(norm - 1.0) > 1e-6:
            raise ValueError(f"logo reference {self.id!r} is not unit length (|e|={norm})")


def load_logo_references(path: str | os.PathLike,
                         provider: EmbeddingProvider | None = None) -> list[LogoReference]:
    """Read logo references.

    ``path`` is either a text file with one ``id v1 v2 ... vd`` record per
    line, or a directory of images that ``provider`` embeds.
    """
    p = Path(path)
    if p.is_dir():
        if provider is None:
            raise ValueError("embedding a logo image directory needs a provider")
        from PIL import Image

        refs = []
        for f in sorted(p.iterdir()):
            if f.suffix.lower() not in (".png", ".jpg", ".jpeg", ".bmp", ".gif"):
                continue
            with Image.open(f) as im:
                arr = np.asarray(im.convert("RGBA"))
            vec = provider.embed_image(arr)
            if np.linalg.norm(vec) > 0:
                refs.append(LogoReference(f.stem, vec))
        return refs
    refs = []
    dim = None
    for lineno, line in enumerate(p.read_text(encoding="utf-8").splitlines(), 1):
        parts = line.split()
        if not parts or parts[0].startswith("#"):
            continue
        vec = np.array([float(x) for x in parts[1:]])
        if dim is None:
            dim = vec.size
        elif vec.size != dim:
            raise ValueError(f"{p}:{lineno}: expected {dim} values, got {vec.size}")
        refs.append(LogoReference(parts[0], vec))
    return refs


def save_logo_references(refs: Sequence[LogoReference], path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in refs:
            fh.write(r.id + " " + " ".join(repr(float(x)) for x in r.embedding) + "\n")


# --- individual tiers -------------------------------------------------------

def filter_by_size(el: VisualElement | BoundingBox, page: PageModel,
                   cfg: PipelineConfig | None = None) -> bool:
    """True when the element is too small to be meaningful content."""
    cfg = cfg or PipelineConfig()
    bbox = el if isinstance(el, BoundingBox) else el.bbox
    frac = cfg.min_size_pct / 100.0
    w, h = bbox.width, bbox.height
    relative = w < frac * page.width or h < frac * page.height
    absolute = w < cfg.min_size_pts and h < cfg.min_size_pts
    return relative or absolute


def in_logo_zone(bbox: BoundingBox, page: PageModel, cfg: PipelineConfig | None = None) -> bool:
    """Box center falls inside one of the four corner zones (edges inclusive)."""
    cfg = cfg or PipelineConfig()
    cx, cy = bbox.center
    zw, zh = cfg.corner_frac * page.width, cfg.corner_frac * page.height
    near_x = cx <= zw or cx >= page.width - zw
    near_y = cy <= zh or cy >= page.height - zh
    return near_x and near_y


def detect_logo(raster: np.ndarray, refs: Sequence[LogoReference],
                provider: EmbeddingProvider, delta: float) -> bool:
    """Max cosine against the reference set reaches ``delta``.

    Raises EmbeddingUnavailable when the provider fails; callers fail open.
    """
    if not refs:
        return False
    vec = provider.embed_image(raster)
    best = max(cosine(vec, r.embedding) for r in refs)
    return best >= delta


def filter_by_frequency(pages: Sequence[Sequence[VisualElement]], q: float) -> set[str]:
    """Digests seen on more than ``q`` percent of pages (documents of 2+ pages only)."""
    n_pages = len(pages)
    if n_pages < 2:
        return set()
    seen: dict[str, set[int]] = {}
    for i, elements in enumerate(pages):
        for el in elements:
            if el.digest is not None:
                seen.setdefault(el.digest, set()).add(i)
    return {d for d, on in seen.items() if len(on) * 100.0 > q * n_pages}


def mean_opacity(alpha: np.ndarray) -> float:
    return float(np.mean(alpha, dtype=float) / 255.0)


def detect_semi_transparent(img: ImageRegion | np.ndarray, opacity_threshold: float) -> bool:
    """Alpha channel present, not fully opaque, and mean opacity below the threshold."""
    try:
        raster = img.decode() if isinstance(img, ImageRegion) else np.asarray(img)
    except UndecodableImage as exc:
        log.warning("transparency check skipped: %s", exc)
        return False
    if raster.ndim != 3 or raster.shape[2] not in (2, 4):
        return False
    alpha = raster[:, :, -1]
    if alpha.min() >= 255:
        return False
    return mean_opacity(alpha) < opacity_threshold


def otsu_threshold(gray: np.ndarray) -> float:
    """Global threshold maximizing between-class variance of a 0-255 histogram."""
    hist = np.bincount(np.clip(gray, 0, 255).astype(np.uint8).ravel(), minlength=256).astype(float)
    total = hist.sum()
    if total == 0:
        return 127.5
    levels = np.arange(256)
    w0 = np.cumsum(hist)
    w1 = total - w0
    s0 = np.cumsum(hist * levels)
    mu_t = s0[-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        m0 = s0 / w0
        m1 = (mu_t - s0) / w1
        between = w0 * w1 * (m0 - m1) ** 2
    between[~np.isfinite(between)] = -1.0
    k = int(np.argmax(between))
    return k + 0.5


def foreground_mask(gray: np.ndarray, cfg: PipelineConfig) -> np.ndarray:
    """Dark-on-light foreground via local-mean thresholding, or Otsu for small images."""
    block = cfg.adaptive_block
    if min(gray.shape) >= block:
        local = ndimage.uniform_filter(gray, size=block, mode="nearest")
        return gray < local - cfg.adaptive_offset
    t = otsu_threshold(gray)
    if gray.max() - gray.min() < 1e-9:
        return np.zeros_like(gray, dtype=bool)
    return gray < t


def component_mask(gray: np.ndarray, cfg: PipelineConfig) -> tuple[np.ndarray, int]:
    """Foreground components with noise and page-sized blobs removed."""
    fg = foreground_mask(gray, cfg)
    labels, n = ndimage.label(fg, structure=np.ones((3, 3), dtype=bool))
    if n == 0:
        return fg, 0
    sizes = np.bincount(labels.ravel())
    keep = (sizes >= cfg.cc_min_px) & (sizes <= cfg.cc_max_frac * gray.size)
    keep[0] = False
    return keep[labels], int(keep.sum())


@dataclass
class WatermarkResult:
    is_watermark: bool
    semi_transparent: bool
    components: int
    text: str = ""
    inconclusive: bool = False
    warnings: list[str] = field(default_factory=list)


def analyze_watermark(img: ImageRegion | np.ndarray, ocr: OcrProvider | None,
                      cfg: PipelineConfig | None = None) -> WatermarkResult:
    """Transparency check, thresholding, component filtering and keyword OCR.

    Only a keyword hit marks a watermark; transparency on its own is
    reported but never sufficient.
    """
    cfg = cfg or PipelineConfig()
    try:
        raster = img.decode() if isinstance(img, ImageRegion) else np.asarray(img)
        gray = to_gray(raster)
    except UndecodableImage as exc:
        return WatermarkResult(False, False, 0, inconclusive=True, warnings=[str(exc)])
    semi = detect_semi_transparent(raster, cfg.opacity_threshold)
    _, n_comp = component_mask(gray, cfg)
    if n_comp == 0:
        return WatermarkResult(False, semi, 0)
    if ocr is None:
        return WatermarkResult(False, semi, n_comp, inconclusive=True,
                               warnings=["no OCR provider; watermark check inconclusive"])
    try:
        text = ocr.ocr_text(raster)
    except OcrUnavailable as exc:
        return WatermarkResult(False, semi, n_comp, inconclusive=True,
                               warnings=[f"OCR unavailable; watermark check inconclusive: {exc}"])
    lowered = text.casefold()
    hit = any(k.casefold() in lowered for k in cfg.resolved_watermark_keywords())
    return WatermarkResult(hit, semi, n_comp, text)


def detect_watermark(img: ImageRegion | np.ndarray, ocr: OcrProvider | None,
                     cfg: PipelineConfig | None = None) -> bool:
    return analyze_watermark(img, ocr, cfg).is_watermark


# --- tier composition ------------------------------------------------------

@dataclass
class FilterContext:
    embedder: EmbeddingProvider | None = None
    ocr: OcrProvider | None = None
    logo_refs: Sequence[LogoReference] = ()


def apply_filters(
    pages: Sequence[PageModel],
    elements: Sequence[Sequence[VisualElement]],
    ctx: FilterContext,
    cfg: PipelineConfig | None = None,
) -> None:
    """Annotate image elements in place; ``elements[i]`` belongs to ``pages[i]``.

    Tiers run cheapest first: size, frequency, transparency and watermark,
    then logo matching, which is skipped for elements already rejected.
    Non-image elements are never filtered.
    """
    cfg = cfg or PipelineConfig()
    images = [[el for el in els if el.kind == "image"] for els in elements]
    frequent = filter_by_frequency(images, cfg.max_page_freq_pct)

    for page, els in zip(pages, images):
        for el in els:
            if filter_by_size(el, page, cfg):
                el.reject("too_small")
            if el.digest in frequent:
                el.reject("frequent")
            if el.raster is None:
                el.warnings.append("no raster; transparency and watermark checks skipped")
            else:
                result = analyze_watermark(el.raster, ctx.ocr, cfg)
                if result.semi_transparent:
                    el.reject("semi_transparent")
                if result.is_watermark:
                    el.reject("watermark")
                el.warnings.extend(result.warnings)
            if el.reasons or el.raster is None or not ctx.logo_refs or ctx.embedder is None:
                continue
            if not in_logo_zone(el.bbox, page, cfg):
                continue
            try:
                if detect_logo(el.raster, ctx.logo_refs, ctx.embedder, cfg.logo_similarity):
                    el.reject("logo")
            except (EmbeddingUnavailable, UndecodableImage) as exc:
                el.warnings.append(f"logo check skipped, kept: {exc}")
