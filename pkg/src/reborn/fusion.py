"""Hybrid search: weighted score fusion of the sparse and dense paths.

Each path returns raw-scored hits on its own scale (BM25 sums vs cosine
similarities).  Scores are min-max normalized per path, blended with convex
weights, and the top-10 aggregated results are re-ranked by a pluggable
higher-precision scorer.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Protocol, Sequence

from .errors import BadWeights, EmptyQuery
from .model import Pid
from .text import tokenize

PATH_SPARSE = "sparse"
PATH_DENSE = "dense"

DEFAULT_RERANK_N = 10
DEFAULT_CANDIDATE_MULTIPLIER = 2


@dataclass(frozen=True)
class ScoredHit:
    """One retrieved document, scored by a single path or by fusion."""

    doc_id: Pid
    raw_score: float
    path: str
    fused_score: float | None = None

    def __post_init__(self) -> None:
        if not math.isfinite(self.raw_score):
            raise ValueError(f"raw_score must be finite, got {self.raw_score!r}")
        if self.fused_score is not None and not -1e-9 <= self.fused_score <= 1 + 1e-9:
            raise ValueError(f"fused_score must lie in [0,1], got {self.fused_score!r}")


@dataclass(frozen=True)
class FusionWeights:
    w_sparse: float = 0.5
    w_dense: float = 0.5

    def __post_init__(self) -> None:
        if not (0.0 <= self.w_sparse <= 1.0 and 0.0 <= self.w_dense <= 1.0):
            raise BadWeights(
                f"weights must lie in [0,1], got ({self.w_sparse}, {self.w_dense})"
            )
        if abs(self.w_sparse + self.w_dense - 1.0) > 1e-9:
            raise BadWeights(
                f"weights must sum to 1, got {self.w_sparse} + {self.w_dense}"
            )

    @classmethod
    def from_sparse(cls, w_sparse: float) -> "FusionWeights":
        return cls(w_sparse=w_sparse, w_dense=1.0 - w_sparse)


def normalize(hits: Sequence[ScoredHit]) -> list[ScoredHit]:
    """Min-max normalize raw scores into ``fused_score``.

    Single-element or all-equal lists map to 1.0; empty input stays empty.
    Order is preserved.
    """
    if not hits:
        return []
    lo = min(h.raw_score for h in hits)
    hi = max(h.raw_score for h in hits)
    if hi - lo <= 0.0:
        return [replace(h, fused_score=1.0) for h in hits]
    span = hi - lo
    return [replace(h, fused_score=(h.raw_score - lo) / span) for h in hits]


def fuse(
    sparse: Sequence[ScoredHit],
    dense: Sequence[ScoredHit],
    weights: FusionWeights,
    k: int,
) -> list[ScoredHit]:
    """Blend normalized path scores: fused = w_s·s_norm + w_d·d_norm.

    A document missing from one path contributes 0 for that path.  Duplicates
    within a path keep the max raw score before normalization.  Output is
    sorted by fused score descending, ties by ascending doc id, truncated to
    ``k``.  Each output hit reports the path that contributed the larger
    normalized score (sparse wins exact ties) along with that path's raw score.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    sparse_best = _dedupe_max(sparse)
    dense_best = _dedupe_max(dense)
    sparse_norm = {h.doc_id: h for h in normalize(list(sparse_best.values()))}
    dense_norm = {h.doc_id: h for h in normalize(list(dense_best.values()))}

    fused: list[ScoredHit] = []
    for doc_id in sparse_norm.keys() | dense_norm.keys():
        s = sparse_norm.get(doc_id)
        d = dense_norm.get(doc_id)
        s_score = s.fused_score if s is not None else 0.0
        d_score = d.fused_score if d is not None else 0.0
        blended = weights.w_sparse * s_score + weights.w_dense * d_score
        winner = s if (s is not None and (d is None or s_score >= d_score)) else d
        assert winner is not None
        fused.append(
            ScoredHit(
                doc_id=doc_id,
                raw_score=winner.raw_score,
                path=winner.path,
                fused_score=min(1.0, max(0.0, blended)),
            )
        )
    fused.sort(key=lambda h: (-(h.fused_score or 0.0), h.doc_id.value))
    return fused[:k]


def _dedupe_max(hits: Iterable[ScoredHit]) -> dict[Pid, ScoredHit]:
    best: dict[Pid, ScoredHit] = {}
    for hit in hits:
        prior = best.get(hit.doc_id)
        if prior is None or hit.raw_score > prior.raw_score:
            best[hit.doc_id] = hit
    return best


class Reranker(Protocol):
    def rescore(
        self,
        query: str,
        hits: Sequence[ScoredHit],
        texts: Mapping[Pid, str],
    ) -> list[ScoredHit]: ...


class LexicalOverlapReranker:
    """Deterministic default reranker.

    Scores each hit by the fraction of query tokens that occur in its text:
    |tokens(query) ∩ tokens(text)| / |tokens(query)|.  Hits are re-ordered by
    that score descending, ties keeping their prior order.
    """

    def rescore(
        self,
        query: str,
        hits: Sequence[ScoredHit],
        texts: Mapping[Pid, str],
    ) -> list[ScoredHit]:
        query_tokens = set(tokenize(query))
        if not query_tokens:
            return list(hits)
        rescored: list[tuple[float, int, ScoredHit]] = []
        for position, hit in enumerate(hits):
            doc_tokens = set(tokenize(texts.get(hit.doc_id, "")))
            overlap = len(query_tokens & doc_tokens) / len(query_tokens)
            rescored.append((overlap, position, replace(hit, fused_score=overlap)))
        rescored.sort(key=lambda t: (-t[0], t[1]))
        return [hit for _, _, hit in rescored]


class RemoteReranker:
    """Cross-encoder style reranker behind an HTTP endpoint.

    POSTs ``{"query": ..., "pairs": [{"id": ..., "text": ...}, ...]}`` and
    expects ``{"scores": [...]}`` aligned with the pairs.  Scores are min-max
    normalized into [0,1] so the fused-score invariant holds regardless of
    the remote model's output scale.
    """

    def __init__(self, endpoint: str, timeout: float = 10.0) -> None:
        self.endpoint = endpoint
        self.timeout = timeout

    def rescore(
        self,
        query: str,
        hits: Sequence[ScoredHit],
        texts: Mapping[Pid, str],
    ) -> list[ScoredHit]:
        if not hits:
            return []
        import httpx

        payload = {
            "query": query,
            "pairs": [
                {"id": h.doc_id.value, "text": texts.get(h.doc_id, "")} for h in hits
            ],
        }
        response = httpx.post(self.endpoint, json=payload, timeout=self.timeout)
        response.raise_for_status()
        scores = [float(s) for s in response.json()["scores"]]
        if len(scores) != len(hits):
            raise ValueError(
                f"reranker returned {len(scores)} scores for {len(hits)} hits"
            )
        lo, hi = min(scores), max(scores)
        span = hi - lo
        normalized = [1.0 if span <= 0 else (s - lo) / span for s in scores]
        rescored = [
            (score, position, replace(hit, fused_score=score))
            for position, (score, hit) in enumerate(zip(normalized, hits))
        ]
        rescored.sort(key=lambda t: (-t[0], t[1]))
        return [hit for _, _, hit in rescored]


def rerank_top(
    query: str,
    fused: Sequence[ScoredHit],
    texts: Mapping[Pid, str],
    n: int = DEFAULT_RERANK_N,
    reranker: Reranker | None = None,
) -> list[ScoredHit]:
    """Re-rank the first min(n, len(fused)) hits; the tail is untouched."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not fused:
        return []
    reranker = reranker if reranker is not None else LexicalOverlapReranker()
    head = list(fused[:n])
    tail = list(fused[n:])
    reranked = reranker.rescore(query, head, texts)
    if sorted(h.doc_id.value for h in reranked) != sorted(h.doc_id.value for h in head):
        raise ValueError("reranker must return a permutation of its input ids")
    return reranked + tail


class HybridSearchPipeline:
    """End-to-end query pipeline over one sparse and one dense index.

    ``search`` fans out to both paths at 2k depth (configurable multiplier),
    fuses, then re-ranks the top ``rerank_n``.  The pipeline is stateless
    between calls; all state lives in the indexes it wraps.
    """

    def __init__(
        self,
        sparse_index,
        dense_index,
        embedder,
        weights: FusionWeights | None = None,
        rerank_n: int = DEFAULT_RERANK_N,
        candidate_multiplier: int = DEFAULT_CANDIDATE_MULTIPLIER,
        reranker: Reranker | None = None,
    ) -> None:
        self.sparse_index = sparse_index
        self.dense_index = dense_index
        self.embedder = embedder
        self.weights = weights if weights is not None else FusionWeights()
        self.rerank_n = rerank_n
        self.candidate_multiplier = candidate_multiplier
        self.reranker = reranker if reranker is not None else LexicalOverlapReranker()

    def search(
        self,
        query: str,
        k: int,
        weights: FusionWeights | None = None,
    ) -> list[ScoredHit]:
        return self.search_with_paths(query, k, weights)[0]

    def search_with_paths(
        self,
        query: str,
        k: int,
        weights: FusionWeights | None = None,
    ) -> tuple[list[ScoredHit], dict[Pid, dict[str, float]]]:
        """Like :meth:`search`, also reporting each hit's per-path raw scores."""
        if not tokenize(query):
            raise EmptyQuery("query has no searchable tokens")
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        weights = weights if weights is not None else self.weights
        depth = max(k * self.candidate_multiplier, k)

        sparse_hits = self.sparse_index.search(query, depth)
        if self.dense_index.count() > 0:
            dense_hits = self.dense_index.search_hnsw(self.embedder.embed(query), depth)
        else:
            dense_hits = []

        fused = fuse(sparse_hits, dense_hits, weights, k)
        texts = {
            h.doc_id: self.sparse_index.get_text(h.doc_id, "fulltext") for h in fused
        }
        reranked = rerank_top(query, fused, texts, n=self.rerank_n, reranker=self.reranker)

        path_scores: dict[Pid, dict[str, float]] = {h.doc_id: {} for h in reranked}
        for path, hits in ((PATH_SPARSE, sparse_hits), (PATH_DENSE, dense_hits)):
            for hit in hits:
                if hit.doc_id in path_scores:
                    scores = path_scores[hit.doc_id]
                    scores[path] = max(hit.raw_score, scores.get(path, float("-inf")))
        return reranked, path_scores
