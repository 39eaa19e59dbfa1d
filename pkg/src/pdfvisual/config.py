"""Pipeline configuration.

Defaults for the eleven tuned hyper-parameters are the published values
(K=5, M=2, T_b/T_t=30/5, theta=0.25, p=5, q=80, N=50, delta=0.75,
tau=0.8, alpha=0.45, eps=1.5). Everything else is an engineering default.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

DEFAULT_CAPTION_KEYWORDS = ("Figure", "Fig.", "Table", "Chart", "Diagram", "Form")
DEFAULT_WATERMARK_KEYWORDS = (
    "Confidential",
    "Do Not Copy",
    "Sample",
    "Draft",
    "Internal Use Only",
    "Restricted",
    "Top Secret",
)

ENV_PROVIDER = "PDFVISUAL_PROVIDER"
ENV_EMBED_URL = "PDFVISUAL_EMBED_URL"
ENV_OCR_URL = "PDFVISUAL_OCR_URL"


@dataclass(frozen=True)
class PipelineConfig:
    # tables
    min_table_lines: int = 5  # K
    min_alignments: int = 2  # M
    region_split_gap: float = 36.0
    min_line_length: float = 8.0  # 0 disables the underline guard
    # forms
    form_min_short_blocks: int = 30  # T_b
    short_block_chars: int = 5  # T_t
    # merging
    merge_overlap: float = 0.25  # theta
    # filtering
    min_size_pct: float = 5.0  # p
    max_page_freq_pct: float = 80.0  # q
    min_size_pts: float = 50.0  # N
    logo_similarity: float = 0.75  # delta
    opacity_threshold: float = 0.8  # tau (watermark opacity)
    corner_frac: float = 0.15
    cc_min_px: int = 25
    cc_max_frac: float = 0.9
    adaptive_block: int = 15
    adaptive_offset: float = 10.0
    watermark_keywords: tuple[str, ...] = DEFAULT_WATERMARK_KEYWORDS
    watermark_keywords_path: str | None = None
    logo_refs_path: str | None = None
    # captions
    fusion_alpha: float = 0.45  # alpha
    dbscan_eps: float = 1.5  # epsilon
    window_scale: float = 1.5
    cue_weights: tuple[float, float, float, float] = (0.4, 0.3, 0.2, 0.1)
    caption_keywords: tuple[str, ...] = DEFAULT_CAPTION_KEYWORDS
    # evaluation
    match_iou: float = 0.8  # tau (IoU match)
    # providers
    provider: str = "stub"
    embed_url: str | None = None
    ocr_url: str | None = None
    provider_timeout: float = 10.0
    max_inflight: int = 4
    # rendering of element rasters for output
    render_zoom: float = 2.0

    def __post_init__(self) -> None:
        for name in ("merge_overlap", "logo_similarity", "opacity_threshold", "corner_frac",
                     "cc_max_frac", "fusion_alpha", "match_iou"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                if name == "fusion_alpha" and v == 0.0:
                    continue  # pure semantic ranking is a legitimate setting
                raise ValueError(f"{name} must lie in (0, 1], got {v}")
        for name in ("min_size_pct", "max_page_freq_pct"):
            v = getattr(self, name)
            if not 0.0 < v <= 100.0:
                raise ValueError(f"{name} is a percentage in (0, 100], got {v}")
        for name in ("min_table_lines", "min_alignments", "form_min_short_blocks",
                     "short_block_chars", "cc_min_px", "max_inflight", "adaptive_block"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v <= 0:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")
        for name in ("region_split_gap", "min_size_pts", "dbscan_eps", "window_scale"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.min_line_length < 0:
            raise ValueError("min_line_length must be non-negative")
        if len(self.cue_weights) != 4 or any(w < 0 for w in self.cue_weights):
            raise ValueError("cue_weights needs four non-negative weights")
        if abs(sum(self.cue_weights) - 1.0) > 1e-9:
            raise ValueError("cue_weights must sum to 1 so H stays in [0, 1]")
        if self.provider not in ("stub", "remote"):
            raise ValueError(f"unknown provider {self.provider!r}")

    def to_dict(self) -> dict:
        d = asdict(self)
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = list(v)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> PipelineConfig:
        known = {f.name: f for f in fields(cls)}
        unknown = set(data) - set(known)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        kwargs = {k: tuple(v) if isinstance(v, list) else v for k, v in data.items()}
        return cls(**kwargs)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> PipelineConfig:
        return cls.from_dict(json.loads(text))

    @classmethod
    def load(cls, path: str | os.PathLike) -> PipelineConfig:
        return cls.from_json(Path(path).read_text(encoding="utf-8"))

    def with_env_overrides(self, environ=None) -> PipelineConfig:
        """Apply provider selection from environment variables."""
        env = os.environ if environ is None else environ
        updates = {}
        if env.get(ENV_PROVIDER):
            updates["provider"] = env[ENV_PROVIDER]
        if env.get(ENV_EMBED_URL):
            updates["embed_url"] = env[ENV_EMBED_URL]
        if env.get(ENV_OCR_URL):
            updates["ocr_url"] = env[ENV_OCR_URL]
        if not updates:
            return self
        return PipelineConfig.from_dict({**self.to_dict(), **updates})

    def resolved_watermark_keywords(self) -> tuple[str, ...]:
        if self.watermark_keywords_path:
            return load_keywords(self.watermark_keywords_path)
        return self.watermark_keywords


def load_keywords(path: str | os.PathLike) -> tuple[str, ...]:
    """Read a UTF-8 keyword file, one keyword per line; blank lines ignored."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return tuple(ln.strip() for ln in lines if ln.strip())
