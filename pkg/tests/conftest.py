from __future__ import annotations

import pytest

from mdretrieve.data import Corpus, Passage


@pytest.fixture
def tiny_corpus():
    return Corpus("C", [
        Passage("p1", "red apple pie"),
        Passage("p2", "green pear tart"),
        Passage("p3", "blue berry jam"),
    ])
