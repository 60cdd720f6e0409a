"""Keyword search path: inverted index with BM25 ranking over three fields.

Documents are statements; each carries a ``label`` (the statement sentence),
a ``fulltext`` projection of its evidence, and the parent article's
``abstract``.  Query scores are BM25 sums over fields with per-field boosts.
"""
from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

from .errors import EmptyQuery
from .fusion import PATH_SPARSE, ScoredHit
from .model import Pid
from .text import tokenize

FIELDS = ("label", "fulltext", "abstract")
DEFAULT_BOOSTS: Mapping[str, float] = {"label": 2.0, "fulltext": 1.0, "abstract": 0.5}

DEFAULT_K1 = 1.2
DEFAULT_B = 0.75

_SNAPSHOT_VERSION = 1


@dataclass(frozen=True)
class IndexedDoc:
    doc_id: Pid
    field_texts: Mapping[str, str]

    def __post_init__(self) -> None:
        unknown = set(self.field_texts) - set(FIELDS)
        if unknown:
            raise ValueError(f"unknown fields {sorted(unknown)}; expected {FIELDS}")
        object.__setattr__(self, "field_texts", dict(self.field_texts))

    @classmethod
    def make(cls, doc_id: Pid, label: str = "", fulltext: str = "", abstract: str = "") -> "IndexedDoc":
        return cls(doc_id, {"label": label, "fulltext": fulltext, "abstract": abstract})

    def length_tokens(self, field: str) -> int:
        return len(tokenize(self.field_texts.get(field, "")))


class SparseIndex:
    """Inverted index with BM25 scoring.

    Mutations rebuild the affected postings in place; searches only read.
    Scoring walks fields in declaration order and the query's unique terms in
    first-occurrence order, so per-document float accumulation order — and
    therefore the exact score — is reproducible.
    """

    def __init__(
        self,
        boosts: Mapping[str, float] | None = None,
        k1: float = DEFAULT_K1,
        b: float = DEFAULT_B,
    ) -> None:
        self.boosts = dict(DEFAULT_BOOSTS if boosts is None else boosts)
        self.k1 = float(k1)
        self.b = float(b)
        self._docs: dict[Pid, IndexedDoc] = {}
        # field -> term -> {doc_id: term frequency}
        self._postings: dict[str, dict[str, dict[Pid, int]]] = {f: {} for f in FIELDS}
        # field -> {doc_id: token count}
        self._lengths: dict[str, dict[Pid, int]] = {f: {} for f in FIELDS}

    def __len__(self) -> int:
        return len(self._docs)

    def __contains__(self, doc_id: Pid) -> bool:
        return doc_id in self._docs

    def document(self, doc_id: Pid) -> IndexedDoc | None:
        return self._docs.get(doc_id)

    def get_text(self, doc_id: Pid, field: str) -> str:
        doc = self._docs.get(doc_id)
        if doc is None:
            return ""
        return doc.field_texts.get(field, "")

    def add_document(self, doc: IndexedDoc) -> None:
        if doc.doc_id in self._docs:
            self.remove_document(doc.doc_id)
        self._docs[doc.doc_id] = doc
        for field in FIELDS:
            tokens = tokenize(doc.field_texts.get(field, ""))
            self._lengths[field][doc.doc_id] = len(tokens)
            postings = self._postings[field]
            for term, tf in Counter(tokens).items():
                postings.setdefault(term, {})[doc.doc_id] = tf

    def remove_document(self, doc_id: Pid) -> None:
        doc = self._docs.pop(doc_id, None)
        if doc is None:
            return
        for field in FIELDS:
            self._lengths[field].pop(doc_id, None)
            postings = self._postings[field]
            for term in set(tokenize(doc.field_texts.get(field, ""))):
                entries = postings.get(term)
                if entries is None:
                    continue
                entries.pop(doc_id, None)
                if not entries:
                    del postings[term]

    def search(self, query: str, k: int) -> list[ScoredHit]:
        """Top-k documents by boosted BM25 score; zero-score docs omitted."""
        terms = list(dict.fromkeys(tokenize(query)))
        if not terms:
            raise EmptyQuery("query has no searchable tokens")
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        n_docs = len(self._docs)
        if n_docs == 0:
            return []

        scores: dict[Pid, float] = {}
        for field in FIELDS:
            boost = self.boosts.get(field, 0.0)
            if boost == 0.0:
                continue
            lengths = self._lengths[field]
            avglen = sum(lengths.values()) / n_docs
            postings = self._postings[field]
            for term in terms:
                entries = postings.get(term)
                if not entries:
                    continue
                idf = math.log(1.0 + (n_docs - len(entries) + 0.5) / (len(entries) + 0.5))
                for doc_id, tf in entries.items():
                    denom = tf + self.k1 * (1.0 - self.b + self.b * lengths[doc_id] / avglen)
                    contribution = boost * idf * tf * (self.k1 + 1.0) / denom
                    scores[doc_id] = scores.get(doc_id, 0.0) + contribution

        ranked = sorted(
            (item for item in scores.items() if item[1] > 0.0),
            key=lambda item: (-item[1], item[0].value),
        )
        return [ScoredHit(doc_id, score, PATH_SPARSE) for doc_id, score in ranked[:k]]

    # -- persistence ----------------------------------------------------

    def save(self, path: str | Path) -> None:
        """Write a versioned JSON snapshot; postings are rebuilt on load."""
        payload = {
            "version": _SNAPSHOT_VERSION,
            "k1": self.k1,
            "b": self.b,
            "boosts": self.boosts,
            "docs": [
                {"doc_id": doc.doc_id.value, "fields": dict(doc.field_texts)}
                for doc in sorted(self._docs.values(), key=lambda d: d.doc_id.value)
            ],
        }
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(path.suffix + ".tmp")
        tmp.write_text(
            json.dumps(payload, ensure_ascii=False, sort_keys=True, indent=1),
            encoding="utf-8",
        )
        tmp.replace(path)

    @classmethod
    def load(cls, path: str | Path) -> "SparseIndex":
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        index = cls(boosts=payload["boosts"], k1=payload["k1"], b=payload["b"])
        for entry in payload["docs"]:
            index.add_document(IndexedDoc(Pid(entry["doc_id"]), entry["fields"]))
        return index
