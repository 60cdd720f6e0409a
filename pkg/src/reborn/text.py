"""Tokenization shared by the sparse index, the embedder, and the reranker."""
from __future__ import annotations

import re

# Maximal runs of Unicode alphanumerics.  \w covers letters, digits and the
# underscore; subtracting the underscore leaves exactly the alphanumerics.
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Split ``text`` into lowercased alphanumeric tokens.

    No stemming and no stopword removal: the same function feeds indexing
    and querying, which is all BM25 needs to stay consistent.
    """
    return _TOKEN_RE.findall(text.lower())
