import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from PIL import Image, ImageDraw, ImageFont

from builders import image, page
from pdfvisual.config import PipelineConfig
from pdfvisual.elements import FILTER_REASONS, VisualElement
from pdfvisual.filters import (
    FilterContext,
    LogoReference,
    analyze_watermark,
    apply_filters,
    detect_logo,
    detect_semi_transparent,
    detect_watermark,
    filter_by_frequency,
    filter_by_size,
    in_logo_zone,
    load_logo_references,
    otsu_threshold,
    save_logo_references,
)
from pdfvisual.merge import merge_images
from pdfvisual.primitives import BoundingBox
from pdfvisual.providers import (
    EmbeddingProvider,
    EmbeddingUnavailable,
    StubEmbeddingProvider,
    StubOcrProvider,
    UnavailableOcrProvider,
)

CFG = PipelineConfig()
PAGE = page()
STUB = StubEmbeddingProvider()


def el(bbox, digest="d", raster=None, idx="e"):
    return VisualElement(idx, "image", 0, BoundingBox(*bbox), digest, raster=raster)


def overlay(text="CONFIDENTIAL", opacity=0.4, size=(300, 300)):
    band = Image.new("L", (360, 80), 0)
    ImageDraw.Draw(band).text((5, 5), text, fill=255, font=ImageFont.load_default(44))
    band = band.rotate(35, expand=True)
    canvas = Image.new("L", size, 0)
    canvas.paste(band, ((size[0] - band.width) // 2, (size[1] - band.height) // 2))
    rgba = np.zeros((size[1], size[0], 4), np.uint8)
    rgba[:, :, 3] = np.where(np.asarray(canvas) > 127, int(opacity * 255), 0)
    return rgba


# --- size -------------------------------------------------------------------

def test_size_examples():
    assert filter_by_size(BoundingBox(0, 0, 20, 20), PAGE, CFG)
    assert not filter_by_size(BoundingBox(0, 0, 400, 300), PAGE, CFG)
    # 50 x 50: the absolute clause is strict; 50 > 5% of width, 50 > 5% of height
    assert not filter_by_size(BoundingBox(100, 100, 150, 150), PAGE, CFG)


def test_thin_banner_is_too_small_by_relative_height():
    assert filter_by_size(BoundingBox(0, 0, 500, 30), PAGE, CFG)  # 30 < 39.6


# --- logo zone and matching -----------------------------------------------

def test_logo_zone():
    assert in_logo_zone(BoundingBox(20, 20, 40, 40), PAGE, CFG)
    assert not in_logo_zone(BoundingBox(250, 350, 350, 450), PAGE, CFG)
    zw, zh = 0.15 * 612, 0.15 * 792
    assert in_logo_zone(BoundingBox(zw, zh, zw, zh), PAGE, CFG)  # center exactly on the edge
    assert not in_logo_zone(BoundingBox(zw + 1, zh, zw + 1, zh), PAGE, CFG)


class _FixedProvider(EmbeddingProvider):
    dimension = 2

    def __init__(self, vec):
        self.vec = np.asarray(vec, float)

    def embed_text(self, s):
        return self.vec

    def embed_image(self, raster):
        return self.vec


def test_logo_identity_and_max_rule():
    raster = np.random.default_rng(0).integers(0, 255, (30, 40, 3), dtype=np.uint8)
    ref = LogoReference("acme", STUB.embed_image(raster))
    assert detect_logo(raster, [ref], STUB, 0.75)
    prov = _FixedProvider([1.0, 0.0])
    assert not detect_logo(raster, [LogoReference("o", np.array([0.0, 1.0]))], prov, 0.75)
    refs = [LogoReference("a", np.array([0.3, np.sqrt(1 - 0.09)])),
            LogoReference("b", np.array([0.8, 0.6]))]
    assert detect_logo(raster, refs, prov, 0.75)
    assert not detect_logo(raster, [], prov, 0.75)


def test_reference_must_be_unit_length():
    with pytest.raises(ValueError):
        LogoReference("bad", np.array([2.0, 0.0]))


def test_reference_file_roundtrip(tmp_path):
    refs = [LogoReference("a", np.array([0.6, 0.8])), LogoReference("b", np.array([1.0, 0.0]))]
    path = tmp_path / "refs.txt"
    save_logo_references(refs, path)
    back = load_logo_references(path)
    assert [r.id for r in back] == ["a", "b"]
    assert np.allclose(back[0].embedding, [0.6, 0.8])


def test_reference_directory_is_embedded(tmp_path):
    px = np.random.default_rng(1).integers(0, 255, (20, 20, 3), dtype=np.uint8)
    Image.fromarray(px).save(tmp_path / "brand.png")
    (tmp_path / "notes.txt").write_text("ignored")
    (ref,) = load_logo_references(tmp_path, STUB)
    assert ref.id == "brand"
    assert detect_logo(px, [ref], STUB, 0.99)


def test_noise_rasters_never_match_orthogonalized_references():
    rng = np.random.default_rng(5)
    noise = [rng.integers(0, 255, (24, 24, 3), dtype=np.uint8) for _ in range(20)]
    for raster in noise:
        v = STUB.embed_image(raster)
        other = rng.normal(size=v.size)
        other -= other.dot(v) * v
        ref = LogoReference("o", other / np.linalg.norm(other))
        assert not detect_logo(raster, [ref], STUB, 0.75)


# --- frequency ----------------------------------------------------------------

def _doc_with(digest_pages, n_pages):
    return [[el((0, 0, 100, 100), "logo")] if i in digest_pages else [] for i in range(n_pages)]


def test_frequency_examples():
    assert filter_by_frequency(_doc_with(set(range(9)), 10), 80) == {"logo"}
    assert filter_by_frequency(_doc_with(set(range(8)), 10), 80) == set()
    assert filter_by_frequency(_doc_with({0}, 1), 80) == set()


@given(st.lists(st.booleans(), min_size=2, max_size=12), st.randoms(use_true_random=False))
def test_frequency_permutation_invariant(flags, rnd):
    pages = [[el((0, 0, 9, 9), "x")] if f else [] for f in flags]
    shuffled = list(pages)
    rnd.shuffle(shuffled)
    assert filter_by_frequency(pages, 80) == filter_by_frequency(shuffled, 80)


# --- transparency and watermark ----------------------------------------------

def test_semi_transparency_examples():
    opaque = np.full((10, 10, 4), 255, np.uint8)
    assert not detect_semi_transparent(opaque, 0.8)
    half = opaque.copy()
    half[:, :, 3] = 128
    assert detect_semi_transparent(half, 0.8)
    nearly = opaque.copy()
    nearly[0, 0, 3] = 254
    assert not detect_semi_transparent(nearly, 0.8)
    assert not detect_semi_transparent(np.zeros((10, 10, 3), np.uint8), 0.8)


def test_otsu_splits_bimodal():
    gray = np.array([10] * 50 + [200] * 50, float)
    assert 10 < otsu_threshold(gray) < 200


def test_keyword_overlay_is_watermark():
    mark = overlay()
    ocr = StubOcrProvider()
    ocr.plant(mark, "CONFIDENTIAL")
    result = analyze_watermark(mark, ocr, CFG)
    assert result.semi_transparent and result.components > 0 and result.is_watermark


def test_opaque_photo_without_keywords_is_not_watermark():
    photo = np.random.default_rng(2).integers(0, 255, (64, 64, 3), dtype=np.uint8)
    ocr = StubOcrProvider()
    ocr.plant(photo, "a quiet lake at dusk")
    assert not detect_watermark(photo, ocr, CFG)


def test_transparent_gradient_without_text_is_not_watermark():
    grad = np.zeros((64, 64, 4), np.uint8)
    grad[:, :, :3] = np.linspace(0, 255, 64, dtype=np.uint8)[None, :, None]
    grad[:, :, 3] = 100
    result = analyze_watermark(grad, StubOcrProvider(), CFG)
    assert result.semi_transparent and not result.is_watermark


def test_keyword_match_is_case_insensitive_and_configurable(tmp_path):
    mark = overlay()
    ocr = StubOcrProvider()
    ocr.plant(mark, "internal use only - draft")
    assert detect_watermark(mark, ocr, CFG)
    kw = tmp_path / "kw.txt"
    kw.write_text("embargoed\n\n")
    assert not detect_watermark(mark, ocr, PipelineConfig(watermark_keywords_path=str(kw)))


def test_ocr_outage_is_inconclusive_and_keeps():
    result = analyze_watermark(overlay(), UnavailableOcrProvider(), CFG)
    assert result.inconclusive and not result.is_watermark and result.warnings


# --- composition ---------------------------------------------------------------

def test_small_corner_logo_short_circuits_logo_tier():
    class Exploding(StubEmbeddingProvider):
        def embed_image(self, raster):
            raise AssertionError("logo tier must not run")
    e = el((20, 20, 40, 40), raster=np.zeros((4, 4, 3), np.uint8))
    ref = LogoReference("r", STUB.embed_image(np.eye(4, dtype=np.uint8)[:, :, None] * 255))
    apply_filters([PAGE], [[e]], FilterContext(Exploding(), StubOcrProvider(), [ref]), CFG)
    assert e.reasons == {"too_small"} and not e.keep


def test_full_page_watermark_on_every_page():
    mark = overlay(size=(200, 260))
    ocr = StubOcrProvider()
    ocr.plant(mark, "CONFIDENTIAL")
    pages = [page(i) for i in range(10)]
    els = [[el((36, 36, 576, 756), "wm", mark, f"p{i}")] for i in range(10)]
    apply_filters(pages, els, FilterContext(STUB, ocr, []), CFG)
    for (e,) in els:
        assert {"frequent", "watermark", "semi_transparent"} <= e.reasons


def test_clean_figure_kept():
    fig = np.random.default_rng(3).integers(0, 255, (60, 80, 3), dtype=np.uint8)
    e = el((150, 300, 450, 500), raster=fig)
    apply_filters([PAGE], [[e]], FilterContext(STUB, StubOcrProvider(), []), CFG)
    assert e.keep and e.reasons == set()


def test_corner_logo_matched_by_embedding():
    logo = np.random.default_rng(4).integers(0, 255, (48, 64, 3), dtype=np.uint8)
    e = el((36, 30, 116, 90), raster=logo)
    refs = [LogoReference("brand", STUB.embed_image(logo))]
    apply_filters([PAGE], [[e]], FilterContext(STUB, StubOcrProvider(), refs), CFG)
    assert e.reasons == {"logo"}


def test_logo_provider_failure_fails_open():
    class Down(StubEmbeddingProvider):
        def embed_image(self, raster):
            raise EmbeddingUnavailable("service down")
    logo = np.zeros((48, 64, 3), np.uint8)
    e = el((36, 30, 116, 90), raster=logo)
    ref = LogoReference("r", np.eye(256)[0])
    apply_filters([PAGE], [[e]], FilterContext(Down(), StubOcrProvider(), [ref]), CFG)
    assert e.keep and any("logo check skipped" in w for w in e.warnings)


def test_non_image_elements_untouched():
    t = VisualElement("t", "table", 0, BoundingBox(0, 0, 5, 5))
    apply_filters([PAGE], [[t]], FilterContext(STUB, StubOcrProvider(), []), CFG)
    assert t.keep


def test_unknown_reason_rejected():
    with pytest.raises(ValueError):
        el((0, 0, 1, 1)).reject("ugly")


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 560), st.integers(0, 740), st.integers(1, 300),
                          st.integers(1, 300), st.integers(0, 3), st.booleans()),
                min_size=1, max_size=6),
       st.integers(1, 4))
def test_keep_iff_no_reasons(layout, n_pages):
    pages = [page(i) for i in range(n_pages)]
    per_page = [[] for _ in range(n_pages)]
    for k, (x, y, w, h, seed, alpha) in enumerate(layout):
        im = image(x, y, min(612, x + w), min(792, y + h), seed=seed,
                   alpha=100 if alpha else None)
        per_page[k % n_pages].append(im)
    els = [merge_images(ims, 0.25, i) for i, ims in enumerate(per_page)]
    refs = [LogoReference("r", STUB.embed_image(image(0, 0, 1, 1, seed=0).pixels))]
    apply_filters(pages, els, FilterContext(STUB, StubOcrProvider(), refs), CFG)
    for e in (e for es in els for e in es):
        assert e.keep == (not e.reasons)
        assert e.reasons <= set(FILTER_REASONS)
