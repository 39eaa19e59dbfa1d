import numpy as np
import pytest
from hypothesis import given, strategies as st

from pdfvisual.metrics import (
    DetectedElement,
    EvalInputError,
    GroundTruth,
    caption_similarity,
    compute_bba,
    compute_dc,
    evaluate,
    levenshtein_similarity,
    match_elements,
)
from pdfvisual.primitives import BoundingBox
from pdfvisual.providers import EmbeddingUnavailable


def edit_distance(a, b):
    d = [[i + j if i * j == 0 else 0 for j in range(len(b) + 1)] for i in range(len(a) + 1)]
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            d[i][j] = min(d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + (a[i - 1] != b[j - 1]))
    return d[-1][-1]


def det(kind, box, page=0, keep=True, caption=None):
    return DetectedElement(kind, BoundingBox(*box), page, caption, keep)


def gt_doc(pages):
    return GroundTruth.from_dict({"pages": pages})


# --- text similarity ------------------------------------------------------------------

def test_levenshtein_examples():
    assert levenshtein_similarity("kitten", "sitting") == pytest.approx(1 - 3 / 7, abs=1e-4)
    assert levenshtein_similarity("same", "same") == 1.0
    assert levenshtein_similarity("abc", "") == 0.0
    assert levenshtein_similarity("", "") == 1.0


@given(st.text("abcd", max_size=10), st.text("abcd", max_size=10))
def test_levenshtein_against_dp(a, b):
    expected = 1.0 if not (a or b) else 1 - edit_distance(a, b) / max(len(a), len(b))
    assert levenshtein_similarity(a, b) == pytest.approx(expected)


# --- matching, BBA and DC ------------------------------------------------------------------

def test_shifted_box_below_threshold_is_unmatched():
    gt = [det("table", (0, 0, 100, 100))]
    # shifting by 12 pt leaves IoU = 88*100 / (112*100) ~ 0.786
    assert match_elements([det("table", (12, 0, 112, 100))], gt) == []
    assert match_elements([det("table", (5, 0, 105, 100))], gt) == [(0, 0)]


def test_matching_is_one_to_one():
    gt = [det("image", (0, 0, 100, 100))]
    pairs = match_elements([det("image", (1, 0, 101, 100)), det("image", (0, 0, 100, 100))], gt)
    assert pairs == [(1, 0)]


def test_type_and_page_must_agree():
    gt = [det("image", (0, 0, 100, 100))]
    assert match_elements([det("table", (0, 0, 100, 100))], gt) == []
    assert match_elements([det("image", (0, 0, 100, 100), page=1)], gt) == []


def test_bba_and_dc_examples():
    gt = [det("image", (0, 0, 100, 100)), det("image", (200, 200, 300, 300))]
    found = [det("image", (0, 0, 100, 100)), det("image", (400, 400, 450, 450)),
             det("image", (200, 200, 300, 300), keep=False)]
    assert compute_bba([d for d in found if d.keep], gt) == 0.5
    assert compute_dc(found, gt) == 0.5


def test_not_applicable_cases():
    assert compute_bba([det("image", (0, 0, 1, 1))], []) is None
    assert compute_dc([], [det("image", (0, 0, 1, 1))]) is None
    assert compute_dc([det("image", (0, 0, 1, 1), keep=False)], []) is None


boxes = st.lists(st.tuples(st.integers(0, 400), st.integers(0, 400),
                           st.integers(5, 200), st.integers(5, 200)), max_size=6)


@given(boxes, boxes, st.randoms(use_true_random=False))
def test_bba_is_permutation_invariant(d, g, rnd):
    dets = [det("image", (x, y, x + w, y + h)) for x, y, w, h in d]
    gts = [det("image", (x, y, x + w, y + h)) for x, y, w, h in g]
    before = (compute_bba(dets, gts), compute_dc(dets, gts))
    rnd.shuffle(dets)
    rnd.shuffle(gts)
    assert (compute_bba(dets, gts), compute_dc(dets, gts)) == before


# --- caption similarity ----------------------------------------------------------------------

class _Axes:
    """Maps each distinct string to its own basis vector."""

    def __init__(self):
        self.seen = {}

    def embed_text(self, text):
        v = np.zeros(8)
        v[self.seen.setdefault(text, len(self.seen))] = 1.0
        return v


def test_caption_similarity_mapping():
    assert caption_similarity("Figure 1", "Figure 1") == 1.0
    assert caption_similarity("Figure 1", "totally else", _Axes()) == pytest.approx(0.5)


def test_caption_similarity_prefers_paraphrase():
    ref = "Figure 2: loss curves"
    assert caption_similarity("Fig 2 loss curves", ref) > caption_similarity("Appendix B", ref)


# --- ground truth parsing and evaluate -------------------------------------------------------

def test_schema_violations():
    with pytest.raises(EvalInputError):
        gt_doc([{"index": 0, "text": "x", "elements": [{"type": "chart", "bbox": [0, 0, 1, 1]}]}])
    with pytest.raises(EvalInputError):
        gt_doc([{"index": 0, "elements": []}])
    with pytest.raises(EvalInputError):
        GroundTruth.from_dict({"pages": "nope"})


def test_bad_boxes():
    with pytest.raises(EvalInputError, match="inverted"):
        gt_doc([{"index": 0, "text": "", "elements": [{"type": "image", "bbox": [10, 0, 5, 5]}]}])
    with pytest.raises(EvalInputError, match="outside"):
        gt_doc([{"index": 0, "text": "", "width": 100, "height": 100,
                 "elements": [{"type": "image", "bbox": [0, 0, 120, 50]}]}])


def test_load_errors(tmp_path):
    with pytest.raises(EvalInputError):
        GroundTruth.load(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(EvalInputError):
        GroundTruth.load(bad)


def test_ground_truth_roundtrip():
    data = {"pages": [{"index": 0, "text": "t", "width": 612, "height": 792,
                       "elements": [{"type": "form", "bbox": [1, 2, 3, 4], "caption": None}]}]}
    assert GroundTruth.from_dict(data).to_dict() == data


def test_page_count_mismatch():
    gt = gt_doc([{"index": 0, "text": "a", "elements": []}])
    with pytest.raises(EvalInputError, match="page count"):
        evaluate([], ["a", "b"], gt)


def test_evaluate_end_to_end():
    gt = gt_doc([
        {"index": 0, "text": "e\ufb03cient text", "elements": [
            {"type": "image", "bbox": [0, 0, 100, 100], "caption": "Figure 1: A"},
            {"type": "table", "bbox": [0, 200, 300, 400], "caption": "Table 1: B"}]},
        {"index": 1, "text": "second", "elements": []},
    ])
    found = [det("image", (0, 0, 100, 100), caption="Figure 1: A"),
             det("table", (0, 200, 300, 400)),
             det("image", (500, 500, 550, 550), page=1, keep=False)]
    r = evaluate(found, ["efficient text", "second"], gt)
    assert r.text_similarity == 1.0
    assert (r.bba_image, r.bba_table, r.bba_form) == (1.0, 1.0, None)
    assert r.dc_overall == 1.0
    # the table caption is missing, which scores zero
    assert r.caption_similarity == pytest.approx(0.5) and r.captions_scored == 2
    assert r.counts["image"].detected == 1


def test_caption_outage_omits_metric():
    class Down:
        def embed_text(self, text):
            raise EmbeddingUnavailable("503")

    gt = gt_doc([{"index": 0, "text": "", "elements": [
        {"type": "image", "bbox": [0, 0, 100, 100], "caption": "Figure 1"}]}])
    r = evaluate([det("image", (0, 0, 100, 100), caption="Fig 1")], [""], gt, provider=Down())
    assert r.caption_similarity is None and r.warnings
