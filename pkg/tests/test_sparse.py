from __future__ import annotations

import math
import re

import pytest

from reborn.errors import EmptyQuery
from reborn.model import Pid
from reborn.sparse import DEFAULT_BOOSTS, IndexedDoc, SparseIndex

# Five-document hand corpus used for oracle equivalence.
CORPUS = {
    "10.1/d1": {
        "label": "cover crops increase microbial biomass",
        "fulltext": "cover crops increase microbial biomass lme4 lmer soil trial",
        "abstract": "long term field trial of cover crops",
    },
    "10.1/d2": {
        "label": "tillage reduces earthworm abundance",
        "fulltext": "tillage reduces earthworm abundance regression soil",
        "abstract": "conventional tillage field study",
    },
    "10.1/d3": {
        "label": "nitrogen fertilization raises yield",
        "fulltext": "nitrogen fertilization raises yield anova stats field",
        "abstract": "fertilizer rates and grain yield",
    },
    "10.1/d4": {
        "label": "biochar improves water retention",
        "fulltext": "biochar improves soil water retention correlation",
        "abstract": "biochar amendment experiment",
    },
    "10.1/d5": {
        "label": "crop rotation suppresses pathogens",
        "fulltext": "crop rotation suppresses soilborne pathogens multilevel lme4",
        "abstract": "rotation effects on disease pressure",
    },
}

FIELDS = ("label", "fulltext", "abstract")


def oracle_tokens(text: str) -> list[str]:
    return re.findall(r"[^\W_]+", text.lower())


def bm25_oracle(
    corpus: dict[str, dict[str, str]],
    query: str,
    boosts: dict[str, float],
    k1: float = 1.2,
    b: float = 0.75,
) -> dict[str, float]:
    """Brute-force reference: score = Σ_fields boost · Σ_terms BM25(t, d, f)."""
    n = len(corpus)
    scores = {doc: 0.0 for doc in corpus}
    terms = list(dict.fromkeys(oracle_tokens(query)))
    for field in FIELDS:
        lengths = {doc: len(oracle_tokens(texts.get(field, ""))) for doc, texts in corpus.items()}
        avglen = sum(lengths.values()) / n
        for term in terms:
            containing = [doc for doc in corpus if term in oracle_tokens(corpus[doc].get(field, ""))]
            if not containing:
                continue
            idf = math.log(1.0 + (n - len(containing) + 0.5) / (len(containing) + 0.5))
            for doc in containing:
                tf = oracle_tokens(corpus[doc][field]).count(term)
                denom = tf + k1 * (1.0 - b + b * lengths[doc] / avglen)
                scores[doc] += boosts[field] * idf * tf * (k1 + 1.0) / denom
    return {doc: score for doc, score in scores.items() if score > 0.0}


def build_index(corpus=CORPUS) -> SparseIndex:
    index = SparseIndex()
    for doc_id, fields in corpus.items():
        index.add_document(IndexedDoc(Pid(doc_id), fields))
    return index


@pytest.mark.parametrize("query", ["soil", "cover crops", "lme4 soil", "yield", "tillage field"])
def test_scores_match_oracle(query):
    index = build_index()
    hits = index.search(query, k=5)
    expected = bm25_oracle(CORPUS, query, dict(DEFAULT_BOOSTS))
    assert {h.doc_id.value for h in hits} == set(expected)
    for hit in hits:
        assert hit.raw_score == pytest.approx(expected[hit.doc_id.value], abs=1e-9)
    expected_order = sorted(expected, key=lambda d: (-expected[d], d))
    assert [h.doc_id.value for h in hits] == expected_order


def test_single_term_score_by_hand():
    # Two one-field docs make the formula small enough to carry out by hand:
    # idf = ln(1 + (2-1+0.5)/(1+0.5)) = ln 2; len = avglen so the length
    # factor collapses and tf·(k1+1)/(tf+k1) = 2.2/2.2 = 1; boost 2.0.
    index = SparseIndex()
    index.add_document(IndexedDoc.make(Pid("10.1/a"), label="red fox"))
    index.add_document(IndexedDoc.make(Pid("10.1/b"), label="blue fox"))
    hits = index.search("red", k=2)
    assert [h.doc_id.value for h in hits] == ["10.1/a"]
    assert hits[0].raw_score == pytest.approx(2.0 * math.log(2.0), abs=1e-12)


def test_label_boost_outranks_fulltext():
    index = SparseIndex()
    index.add_document(IndexedDoc.make(Pid("10.1/lbl"), label="kudzu spread"))
    index.add_document(IndexedDoc.make(Pid("10.1/ful"), fulltext="kudzu spread"))
    hits = index.search("kudzu", k=2)
    assert [h.doc_id.value for h in hits] == ["10.1/lbl", "10.1/ful"]
    # identical field statistics, so the 2.0 vs 1.0 boost is the only difference
    assert hits[0].raw_score == pytest.approx(2.0 * hits[1].raw_score, rel=1e-9)


def test_zero_score_documents_omitted():
    index = build_index()
    hits = index.search("biochar", k=5)
    assert {h.doc_id.value for h in hits} == {"10.1/d4"}


def test_ties_break_by_ascending_doc_id():
    index = SparseIndex()
    for doc in ("10.1/zz", "10.1/aa", "10.1/mm"):
        index.add_document(IndexedDoc.make(Pid(doc), label="identical text"))
    hits = index.search("identical", k=3)
    assert [h.doc_id.value for h in hits] == ["10.1/aa", "10.1/mm", "10.1/zz"]


def test_k_truncates():
    index = build_index()
    assert len(index.search("soil", k=1)) == 1


def test_empty_query_rejected():
    index = build_index()
    with pytest.raises(EmptyQuery):
        index.search("  __ ", k=3)
    with pytest.raises(ValueError):
        index.search("soil", k=0)


def test_search_on_empty_index_returns_nothing():
    assert SparseIndex().search("anything", k=3) == []


def test_hits_carry_sparse_path():
    hits = build_index().search("soil", k=3)
    assert all(h.path == "sparse" for h in hits)
    assert all(h.fused_score is None for h in hits)


def test_tokenization_is_case_insensitive_and_splits_punctuation():
    index = SparseIndex()
    index.add_document(IndexedDoc.make(Pid("10.1/t1"), label="Mixed-Effects MODELS (lme4)"))
    for query in ("mixed", "effects", "models", "LME4"):
        assert index.search(query, k=1), query


def test_add_document_replaces_previous_version():
    index = build_index()
    index.add_document(IndexedDoc.make(Pid("10.1/d4"), label="completely different now"))
    assert len(index) == 5
    assert index.search("biochar", k=5) == []
    assert index.search("completely", k=5)[0].doc_id.value == "10.1/d4"


def test_remove_document_purges_postings():
    index = build_index()
    index.remove_document(Pid("10.1/d1"))
    assert len(index) == 4
    assert Pid("10.1/d1") not in index
    assert all(h.doc_id.value != "10.1/d1" for h in index.search("cover", k=5))
    # removing again is a no-op
    index.remove_document(Pid("10.1/d1"))
    assert len(index) == 4


def test_get_text_returns_stored_field():
    index = build_index()
    assert index.get_text(Pid("10.1/d1"), "fulltext").startswith("cover crops")
    assert index.get_text(Pid("10.1/nope"), "fulltext") == ""


def test_save_load_answer_equivalence(tmp_path):
    index = build_index()
    path = tmp_path / "sparse.json"
    index.save(path)
    loaded = SparseIndex.load(path)
    assert len(loaded) == len(index)
    for query in ("soil", "cover crops", "lme4 soil", "yield"):
        left = [(h.doc_id.value, h.raw_score) for h in index.search(query, k=5)]
        right = [(h.doc_id.value, h.raw_score) for h in loaded.search(query, k=5)]
        assert left == right


def test_save_is_deterministic(tmp_path):
    index = build_index()
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    index.save(a)
    index.save(b)
    assert a.read_bytes() == b.read_bytes()


def test_custom_boosts_respected():
    # With the label boost zeroed, a label-only match cannot score.
    index = SparseIndex(boosts={"label": 0.0, "fulltext": 1.0, "abstract": 0.5})
    index.add_document(IndexedDoc.make(Pid("10.1/x"), label="orchid"))
    index.add_document(IndexedDoc.make(Pid("10.1/y"), fulltext="orchid"))
    hits = index.search("orchid", k=2)
    assert [h.doc_id.value for h in hits] == ["10.1/y"]


def test_indexed_doc_rejects_unknown_fields():
    with pytest.raises(ValueError):
        IndexedDoc(Pid("10.1/bad"), {"label": "x", "body": "y"})
