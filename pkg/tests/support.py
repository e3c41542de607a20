"""Shared helpers for the test suite."""
from __future__ import annotations

import re
from pathlib import Path

from apac.frontend.lexer import token_texts

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = FIXTURES / "golden"
CORPUS = FIXTURES / "corpus"

_SUFFIX = re.compile(r"(_\d+)+$")

# criterion number -> (passed, detail); filled by test_acceptance
ACCEPTANCE: dict = {}


def normalized_tokens(text: str) -> list[str]:
    """Tokens with generated-name suffixes dropped (``apac_tmp_1_2`` -> ``apac_tmp``)."""
    return [_SUFFIX.sub("", t) if t.startswith("apac_") else t for t in token_texts(text)]


def read(path: Path) -> str:
    return path.read_text(encoding="utf-8")


def corpus_names() -> list[str]:
    return sorted(p.stem for p in CORPUS.glob("*.cpp"))


def corpus_source(name: str) -> str:
    return read(CORPUS / f"{name}.cpp")


GOLDEN_NAMES = ["parallel_region", "assignment_split", "scope_promotion", "coherency", "early_return"]


def golden_pair(name: str) -> tuple[str, str]:
    """(input, expected output) of a golden transformation."""
    return read(GOLDEN / f"{name}_in.cpp"), read(GOLDEN / f"{name}_out.cpp")


def quicksort_source(n: int) -> str:
    """The corpus quicksort with its array length changed to ``n``."""
    src = corpus_source("quicksort")
    assert src.count("32") == 5
    return src.replace("32", str(n))
