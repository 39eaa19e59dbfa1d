import json
from pathlib import Path

import pytest

from pdfvisual.fixtures import generate_corpus

CORPUS_SEED = 0


@pytest.fixture(scope="session")
def corpus(tmp_path_factory):
    """The generated fixture corpus: (directory, descriptor)."""
    out = tmp_path_factory.mktemp("corpus")
    desc = generate_corpus(CORPUS_SEED, out)
    return Path(out), desc


@pytest.fixture(scope="session")
def corpus_doc(corpus):
    root, desc = corpus
    by_name = {d["name"]: d for d in desc["documents"]}

    def get(name):
        d = by_name[name]
        return root / d["pdf"], json.loads((root / d["ground_truth"]).read_text())

    return get
