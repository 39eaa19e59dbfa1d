from hypothesis import given, settings, strategies as st

from builders import block, grid_lines, page
from pdfvisual.config import PipelineConfig
from pdfvisual.primitives import BoundingBox, DrawingPrimitive
from pdfvisual.tables import cluster_boxes, count_alignments, detect_table

CFG = PipelineConfig()


def _check_invariants(det):
    assert det.present == (det.kind != "none") == bool(det.regions)
    if det.kind == "bordered":
        assert det.evidence.line_count >= CFG.min_table_lines
    if det.kind == "unbordered":
        assert det.evidence.x_alignments >= CFG.min_alignments
        assert det.evidence.y_alignments >= CFG.min_alignments


def test_seven_grid_lines_make_a_bordered_table():
    lines = grid_lines(72, 100, rows=2, cols=3)  # 3 horizontal + 4 vertical
    assert len(lines) == 7
    det = detect_table(page(drawings=lines))
    assert det.kind == "bordered"
    assert det.regions == (BoundingBox(72, 100, 252, 140),)
    _check_invariants(det)


def test_four_lines_are_not_enough():
    det = detect_table(page(drawings=grid_lines(72, 100, 1, 1)))
    assert det.kind == "none" and det.evidence.line_count == 4


def test_short_underlines_are_ignored():
    ticks = [DrawingPrimitive.line((72 + 20 * i, 100), (76 + 20 * i, 100)) for i in range(10)]
    assert detect_table(page(drawings=ticks)).kind == "none"
    assert detect_table(page(drawings=ticks), PipelineConfig(min_line_length=0)).kind == "bordered"


def test_distant_grids_split_into_regions():
    lines = grid_lines(72, 100, 2, 2) + grid_lines(72, 500, 2, 2)
    det = detect_table(page(drawings=lines))
    assert len(det.regions) == 2
    assert det.regions[0].y1 < det.regions[1].y0


def test_aligned_grid_is_unbordered():
    blocks = [block(x, y) for x in (72, 130, 190) for y in (100, 130, 160)]
    det = detect_table(page(blocks=blocks))
    assert det.kind == "unbordered"
    assert det.regions == (BoundingBox(72, 100, 230, 172),)
    _check_invariants(det)


def test_rows_of_two_do_not_qualify():
    # two blocks per row is below the repeat-three rule, so rows never align
    blocks = [block(x, y) for x in (72, 200) for y in (100, 130, 160)]
    det = detect_table(page(blocks=blocks))
    assert det.evidence.x_alignments == 2 and det.evidence.y_alignments == 0
    assert det.kind == "none"


def test_prose_outside_the_grid_is_excluded_from_region():
    cells = [block(x, y) for x in (72, 130, 190) for y in (300, 320, 340)]
    prose = [block(72, 100, "A paragraph", w=460), block(72, 600, "Closing words", w=460)]
    det = detect_table(page(blocks=cells + prose))
    assert det.regions == (BoundingBox(72, 300, 230, 352),)


def test_columns_far_apart_form_separate_regions():
    blocks = [block(x, y) for x in (72, 200, 330) for y in (100, 130, 160)]
    det = detect_table(page(blocks=blocks))
    assert det.kind == "unbordered" and len(det.regions) == 3


def test_blank_page_has_no_table():
    det = detect_table(page())
    assert (det.present, det.kind, det.regions) == (False, "none", ())


def test_count_alignments_cases():
    assert count_alignments([block(72.2, y) for y in (100, 200, 300)]) == (1, 0)
    xs = [72, 72, 72, 200, 200]
    assert count_alignments([block(x, 100 + 40 * i) for i, x in enumerate(xs)]) == (1, 0)
    assert count_alignments([]) == (0, 0)


def test_empty_text_blocks_do_not_count():
    assert count_alignments([block(72, y, text="  ") for y in (1, 2, 3)]) == (0, 0)


def test_cluster_boxes_transitive_chain():
    boxes = [BoundingBox(0, 0, 10, 10), BoundingBox(40, 0, 50, 10), BoundingBox(80, 0, 90, 10)]
    assert cluster_boxes(boxes, 36) == [BoundingBox(0, 0, 90, 10)]
    assert len(cluster_boxes(boxes, 20)) == 3


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(50, 500), st.integers(50, 700)), min_size=0, max_size=25),
       st.lists(st.floats(-0.4, 0.4), min_size=50, max_size=50))
def test_rounding_is_stable_under_small_jitter(points, jitter):
    exact = [block(x, y) for x, y in points]
    moved = [block(x + jitter[i % 50], y + jitter[(i + 7) % 50]) for i, (x, y) in enumerate(points)]
    assert count_alignments(exact) == count_alignments(moved)


@settings(max_examples=40, deadline=None)
@given(st.integers(5, 12), st.integers(0, 6))
def test_adding_lines_never_removes_a_bordered_table(n, extra):
    base = [DrawingPrimitive.line((72, 100 + 10 * i), (300, 100 + 10 * i)) for i in range(n)]
    more = [DrawingPrimitive.line((400, 100 + 10 * i), (500, 100 + 10 * i)) for i in range(extra)]
    assert detect_table(page(drawings=base)).kind == "bordered"
    assert detect_table(page(drawings=base + more)).kind == "bordered"


def test_detection_is_pure():
    p = page(blocks=[block(x, y) for x in (72, 200, 330) for y in (100, 130, 160)])
    assert detect_table(p) == detect_table(p)
