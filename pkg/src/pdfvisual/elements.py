from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .primitives import BoundingBox

ElementKind = Literal["image", "table", "form"]

FILTER_REASONS = ("too_small", "logo", "frequent", "semi_transparent", "watermark")


@dataclass
class VisualElement:
    """A detected region plus the provenance the pipeline attaches to it."""

    id: str
    kind: ElementKind
    page_index: int
    bbox: BoundingBox
    digest: str | None = None
    merged_from: tuple[str, ...] = ()
    reasons: set[str] = field(default_factory=set)
    raster: np.ndarray | None = field(default=None, repr=False, compare=False)
    caption: object | None = None  # CaptionMatch, set by association
    warnings: list[str] = field(default_factory=list)

    @property
    def keep(self) -> bool:
        return not self.reasons

    def reject(self, reason: str) -> None:
        if reason not in FILTER_REASONS:
            raise ValueError(f"unknown filter reason {reason!r}")
        self.reasons.add(reason)
