"""Page-level table detection from ruling lines and text alignment."""

from __future__ import annotations

from collections import Counter
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .config import PipelineConfig
from .primitives import BoundingBox, PageModel, TextBlock

MIN_ALIGNED = 3  # a coordinate must repeat at least this often to count
_CHUNK = 256


@dataclass(frozen=True)
class TableEvidence:
    line_count: int = 0
    x_alignments: int = 0
    y_alignments: int = 0


@dataclass(frozen=True)
class TableDetection:
    present: bool
    kind: Literal["bordered", "unbordered", "none"]
    regions: tuple[BoundingBox, ...] = ()
    evidence: TableEvidence = field(default_factory=TableEvidence)


def _non_empty(blocks: Sequence[TextBlock]) -> list[TextBlock]:
    return [b for b in blocks if b.text.strip()]


def _counts(blocks: Sequence[TextBlock]) -> tuple[Counter, Counter]:
    xs = Counter(round(b.bbox.x0) for b in blocks)
    ys = Counter(round(b.bbox.y0) for b in blocks)
    return xs, ys


def count_alignments(blocks: Sequence[TextBlock]) -> tuple[int, int]:
    """Number of rounded x and y block origins that repeat at least three times."""
    xs, ys = _counts(_non_empty(blocks))
    return (sum(1 for v in xs.values() if v >= MIN_ALIGNED),
            sum(1 for v in ys.values() if v >= MIN_ALIGNED))


def cluster_boxes(boxes: Sequence[BoundingBox], max_gap: float) -> list[BoundingBox]:
    """Single-linkage grouping: boxes within ``max_gap`` of each other share a region."""
    n = len(boxes)
    if n == 0:
        return []
    arr = np.array([b.as_tuple() for b in boxes], dtype=float)
    rows, cols = [], []
    for start in range(0, n, _CHUNK):
        blk = arr[start:start + _CHUNK]
        dx = np.maximum(0.0, np.maximum(arr[None, :, 0] - blk[:, None, 2],
                                        blk[:, None, 0] - arr[None, :, 2]))
        dy = np.maximum(0.0, np.maximum(arr[None, :, 1] - blk[:, None, 3],
                                        blk[:, None, 1] - arr[None, :, 3]))
        i, j = np.nonzero(np.maximum(dx, dy) <= max_gap)
        rows.append(i + start)
        cols.append(j)
    r, c = np.concatenate(rows), np.concatenate(cols)
    graph = coo_matrix((np.ones(len(r), dtype=np.int8), (r, c)), shape=(n, n))
    _, labels = connected_components(graph, directed=False)
    groups: dict[int, list[BoundingBox]] = {}
    for i, lab in enumerate(labels):
        groups.setdefault(int(lab), []).append(boxes[i])
    regions = [BoundingBox.union_of(g) for g in groups.values()]
    return sorted(regions, key=lambda b: (b.y0, b.x0, b.y1, b.x1))


def table_lines(page: PageModel, cfg: PipelineConfig):
    return [d for d in page.drawings
            if d.kind == "line" and d.length >= cfg.min_line_length]


def detect_table(page: PageModel, cfg: PipelineConfig | None = None) -> TableDetection:
    cfg = cfg or PipelineConfig()
    lines = table_lines(page, cfg)
    blocks = _non_empty(page.blocks)
    xs, ys = _counts(blocks)
    qx = {v for v, c in xs.items() if c >= MIN_ALIGNED}
    qy = {v for v, c in ys.items() if c >= MIN_ALIGNED}
    evidence = TableEvidence(len(lines), len(qx), len(qy))

    if len(lines) >= cfg.min_table_lines:
        regions = cluster_boxes([d.bbox for d in lines], cfg.region_split_gap)
        return TableDetection(True, "bordered", tuple(regions), evidence)

    if len(qx) >= cfg.min_alignments and len(qy) >= cfg.min_alignments:
        # cells sit on a qualifying column and a qualifying row at once
        cells = [b.bbox for b in blocks
                 if round(b.bbox.x0) in qx and round(b.bbox.y0) in qy]
        regions = cluster_boxes(cells, cfg.region_split_gap)
        if regions:
            return TableDetection(True, "unbordered", tuple(regions), evidence)

    return TableDetection(False, "none", (), evidence)
