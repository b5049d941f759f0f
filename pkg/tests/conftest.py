import os
import random

import pytest

from singfol.dsl import build_atlas, build_geometries, load

CORPUS = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "corpus")


def corpus_path(name: str) -> str:
    return os.path.join(CORPUS, name if name.endswith(".fol") else name + ".fol")


def corpus(name: str):
    """(document, atlas, geometries) for a corpus file."""
    doc = load(corpus_path(name))
    atlas = build_atlas(doc)
    return doc, atlas, build_geometries(doc, atlas)


@pytest.fixture
def rng():
    return random.Random(1234)
