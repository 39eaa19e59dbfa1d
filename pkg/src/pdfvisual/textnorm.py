"""Post-extraction text cleanup: ligatures, invisible spaces, hyphenation."""

from __future__ import annotations

import re

LIGATURES = {
    "\ufb00": "ff",
    "\ufb01": "fi",
    "\ufb02": "fl",
    "\ufb03": "ffi",
    "\ufb04": "ffl",
    "\ufb05": "st",  # long s + t
    "\ufb06": "st",
}

SPACE_LIKE = {
    "\u00a0": " ",
    "\u2007": " ",
    "\u202f": " ",
    "\u200b": "",
    "\ufeff": "",
}

_TRANSLATION = str.maketrans({**LIGATURES, **SPACE_LIKE})
_SPACES = re.compile(r" {2,}")


def _dehyphenate(text: str) -> str:
    lines = text.replace("\r\n", "\n").replace("\r", "\n").split("\n")
    out = lines[0]
    for nxt in lines[1:]:
        head = out.rstrip(" ")
        cont = nxt.lstrip(" ")
        if head.endswith("-") and cont[:1].islower():
            out = head[:-1] + cont
        else:
            out = out + " " + nxt
    return out


def normalize_text(raw: str) -> str:
    """Return ``raw`` with ligatures expanded, odd spaces fixed and lines rejoined.

    A line ending in ``-`` followed by a line starting with a lowercase
    letter is joined without the hyphen; every other line break becomes a
    space. Runs of spaces collapse to one.
    """
    if not raw:
        return ""
    text = raw.translate(_TRANSLATION)
    text = _dehyphenate(text)
    return _SPACES.sub(" ", text).strip(" ")
