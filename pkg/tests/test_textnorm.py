from hypothesis import given, strategies as st

from pdfvisual.textnorm import LIGATURES, SPACE_LIKE, normalize_text


def test_ligature_expansion():
    assert normalize_text("e\ufb03cient") == "efficient"
    assert normalize_text("\ufb01le \ufb02ow \ufb00 \ufb04 \ufb06") == "file flow ff ffl st"


def test_lowercase_continuation_joins_hyphenated_word():
    assert normalize_text("exam-\nple") == "example"


def test_compound_split_is_joined_by_the_rule():
    # the continuation starts lowercase, so the break hyphen is removed
    assert normalize_text("state-\nof-the-art") == "stateof-the-art"


def test_uppercase_continuation_keeps_hyphen():
    assert normalize_text("Anglo-\nSaxon") == "Anglo- Saxon"


def test_space_like_characters():
    assert normalize_text("A\u00a0B") == "A B"
    assert normalize_text("zero\u200bwidth\ufeff") == "zerowidth"
    assert normalize_text("narrow\u202fgap \u2007and figure") == "narrow gap and figure"


def test_line_breaks_become_spaces():
    assert normalize_text("first line\nsecond line\r\nthird") == "first line second line third"
    assert normalize_text("") == ""


text_st = st.text(
    alphabet=st.sampled_from(list("abcXYZ -\n.") + list(LIGATURES) + list(SPACE_LIKE)),
    max_size=60)


@given(text_st)
def test_idempotent(s):
    once = normalize_text(s)
    assert normalize_text(once) == once


@given(text_st)
def test_output_has_no_ligatures_or_odd_spaces(s):
    out = normalize_text(s)
    assert not any(ch in out for ch in LIGATURES)
    assert not any(ch in out for ch in SPACE_LIKE)
    assert "\n" not in out


@given(text_st)
def test_growth_bounded_by_widest_ligature(s):
    # a three-letter ligature is the worst case
    assert len(normalize_text(s)) <= 3 * len(s)
