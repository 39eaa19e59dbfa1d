"""Collapse duplicate and fragmented images whose boxes overlap."""

from __future__ import annotations

from collections.abc import Sequence

from .elements import VisualElement
from .primitives import BoundingBox, ImageRegion


def iou_overlap(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection area over union area; 0 when the union is empty."""
    inter = a.intersection(b)
    inter_area = inter.area if inter is not None else 0.0
    union = a.area + b.area - inter_area
    if union <= 0.0:
        return 0.0
    return min(1.0, max(0.0, inter_area / union))


class _DisjointSet:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, i: int) -> int:
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, i: int, j: int) -> None:
        ri, rj = self.find(i), self.find(j)
        if ri != rj:
            self.parent[max(ri, rj)] = min(ri, rj)


def overlap_groups(boxes: Sequence[BoundingBox], theta: float) -> list[list[int]]:
    """Connected components of the graph with an edge where IoU > theta."""
    ds = _DisjointSet(len(boxes))
    for i in range(len(boxes)):
        for j in range(i + 1, len(boxes)):
            if iou_overlap(boxes[i], boxes[j]) > theta:
                ds.union(i, j)
    groups: dict[int, list[int]] = {}
    for i in range(len(boxes)):
        groups.setdefault(ds.find(i), []).append(i)
    return list(groups.values())


def _representative(members: list[ImageRegion]) -> ImageRegion:
    # largest area wins; the digest breaks ties so input order does not matter
    return max(members, key=lambda im: (im.bbox.area, im.pixel_width * im.pixel_height,
                                        im.content_digest, im.bbox.as_tuple()))


def merge_clusters(boxes: Sequence[BoundingBox], theta: float) -> list[list[int]]:
    """Overlap groups iterated until no two group unions overlap by more than theta.

    A single pass is not idempotent: the union boxes of two groups can overlap
    even when none of their members do. Iterating to a fixpoint makes
    merging stable under re-application.
    """
    clusters = [[i] for i in range(len(boxes))]
    hulls = list(boxes)
    while True:
        groups = overlap_groups(hulls, theta)
        if len(groups) == len(clusters):
            return sorted(sorted(c) for c in clusters)
        clusters = [sorted(i for g in grp for i in clusters[g]) for grp in groups]
        hulls = [BoundingBox.union_of(boxes[i] for i in c) for c in clusters]


def merge_images(
    images: Sequence[ImageRegion],
    theta: float,
    page_index: int = 0,
    ids: Sequence[str] | None = None,
) -> list[VisualElement]:
    """Merge image regions into visual elements.

    Regions are linked when their IoU exceeds ``theta``, and linking is
    transitive. Each linked group becomes one element covering the union of
    its members and carrying the raster of its largest member. ``ids`` names
    the input regions so the output can record what was merged away.
    """
    if not 0.0 < theta <= 1.0:
        raise ValueError(f"theta must lie in (0, 1], got {theta}")
    if ids is None:
        ids = [f"p{page_index}-raw{i}" for i in range(len(images))]
    groups = merge_clusters([im.bbox for im in images], theta)
    merged = []
    for members in groups:
        regions = [images[i] for i in members]
        rep = _representative(regions)
        bbox = BoundingBox.union_of(r.bbox for r in regions)
        merged.append((bbox, rep, tuple(sorted(ids[i] for i in members))))
    merged.sort(key=lambda m: (m[0].y0, m[0].x0, m[0].y1, m[0].x1, m[1].content_digest))
    out = []
    for k, (bbox, rep, sources) in enumerate(merged):
        out.append(VisualElement(
            id=f"p{page_index}-img{k}",
            kind="image",
            page_index=page_index,
            bbox=bbox,
            digest=rep.content_digest,
            merged_from=sources,
            raster=rep.pixels,
        ))
    return out


def merge_elements(elements: Sequence[VisualElement], theta: float) -> list[VisualElement]:
    """Re-apply merging to already merged elements (used for idempotence checks)."""
    regions = []
    for el in elements:
        raster = el.raster
        if raster is None:
            regions.append(ImageRegion(el.bbox, 1, 1, False, el.digest or el.id))
        else:
            regions.append(ImageRegion(el.bbox, raster.shape[1], raster.shape[0],
                                       raster.ndim == 3 and raster.shape[2] in (2, 4),
                                       el.digest or el.id, pixels=raster))
    page = elements[0].page_index if elements else 0
    return merge_images(regions, theta, page, ids=[el.id for el in elements])
