"""Semantic search path: text encoder plus flat and HNSW vector indexes.

The flat structure is an exact scan; HNSW is the approximate graph index
described by Malkov & Yashunin — a layered navigable small world where upper
layers hold exponentially fewer nodes and act as express lanes for greedy
descent.  Both run over the same stored vectors, so the flat path doubles as
the recall oracle for the graph.

Similarity is cosine via dot product: every stored vector (and every query)
is L2-normalized.  Vectors are keyed by statement pid and bound to the name
of the encoder that produced them; mixing encoders is rejected.
"""
from __future__ import annotations

import hashlib
import heapq
import io
import math
import random
import struct
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .errors import (
    CorruptIndex,
    DimMismatch,
    EmptyIndex,
    EmptyText,
    EncoderMismatch,
)
from .fusion import PATH_DENSE, ScoredHit
from .model import Pid
from .text import tokenize

DEFAULT_DIM = 384
DEFAULT_EMBED_SEED = 7
DEFAULT_INDEX_SEED = 42

_MAGIC = b"RBVI"
_FORMAT_VERSION = 1


@dataclass(frozen=True)
class HnswParams:
    """Graph construction/search knobs.

    ``M`` caps neighbors per node above layer 0 (2·M at layer 0);
    ``ef_construction`` and ``ef_search`` size the best-first candidate lists
    at build and query time.  ``level_mult`` defaults to 1/ln(M), which keeps
    the expected layer occupancy geometric.
    """

    M: int = 16
    ef_construction: int = 200
    ef_search: int = 64
    level_mult: float | None = None

    def __post_init__(self) -> None:
        if self.M < 2:
            raise ValueError(f"M must be >= 2, got {self.M}")
        if self.ef_construction < self.M:
            raise ValueError("ef_construction must be >= M")
        if self.ef_search < 1:
            raise ValueError("ef_search must be >= 1")
        if self.level_mult is None:
            object.__setattr__(self, "level_mult", 1.0 / math.log(self.M))


# -- embedding ------------------------------------------------------------


@lru_cache(maxsize=65536)
def _token_vector(token: str, dim: int, seed: int) -> np.ndarray:
    digest = hashlib.blake2b(f"{seed}:{token}".encode("utf-8"), digest_size=8).digest()
    rng = np.random.default_rng(int.from_bytes(digest, "big"))
    v = rng.standard_normal(dim)
    v /= np.linalg.norm(v)
    v.setflags(write=False)
    return v


def default_embed(text: str, dim: int = DEFAULT_DIM, seed: int = DEFAULT_EMBED_SEED) -> np.ndarray:
    """Deterministic hashing embedder.

    Each distinct token hashes (with the seed) to a reproducible unit vector;
    the text embedding is the token-frequency-weighted sum, L2-normalized.
    No trained weights, no I/O — a stand-in with the same interface shape as
    a neural sentence encoder.
    """
    tokens = tokenize(text)
    if not tokens:
        raise EmptyText("cannot embed text with no tokens")
    acc = np.zeros(dim, dtype=np.float64)
    for token, tf in Counter(tokens).items():
        acc += tf * _token_vector(token, dim, seed)
    norm = float(np.linalg.norm(acc))
    if norm == 0.0:
        # Astronomically unlikely (exact cancellation); fall back to the
        # first token's direction so the result is still a unit vector.
        return _token_vector(tokens[0], dim, seed).copy()
    return acc / norm


class HashingEmbedder:
    """Default encoder: deterministic, dependency-free, unit-normalized."""

    def __init__(self, dim: int = DEFAULT_DIM, seed: int = DEFAULT_EMBED_SEED) -> None:
        self._dim = int(dim)
        self._seed = int(seed)

    def embed(self, text: str) -> np.ndarray:
        return default_embed(text, self._dim, self._seed)

    def dim(self) -> int:
        return self._dim

    def name(self) -> str:
        return f"hash-v1-d{self._dim}-s{self._seed}"


class RemoteEmbedder:
    """Encoder behind an HTTP endpoint (e.g. a sentence-transformer service).

    POSTs ``{"text": ...}`` and expects ``{"vector": [...]}``.  The returned
    vector is re-normalized defensively so index invariants hold even if the
    service skips normalization.
    """

    def __init__(self, endpoint: str, dim: int, name: str | None = None, timeout: float = 10.0) -> None:
        self.endpoint = endpoint
        self._dim = int(dim)
        self._name = name or f"remote:{endpoint}"
        self.timeout = timeout

    def embed(self, text: str) -> np.ndarray:
        if not tokenize(text):
            raise EmptyText("cannot embed text with no tokens")
        import httpx

        response = httpx.post(self.endpoint, json={"text": text}, timeout=self.timeout)
        response.raise_for_status()
        v = np.asarray(response.json()["vector"], dtype=np.float64)
        if v.shape != (self._dim,):
            raise DimMismatch(f"remote embedder returned dim {v.shape}, expected {self._dim}")
        norm = float(np.linalg.norm(v))
        if norm == 0.0 or not np.isfinite(norm):
            raise ValueError("remote embedder returned a degenerate vector")
        return v / norm


# -- vector index ---------------------------------------------------------


class VectorIndex:
    """Flat + HNSW index over unit vectors keyed by pid.

    Internally nodes are dense integer slots appended in insertion order.
    Vectors are stored in float64 (the canonical values used for final
    scoring and persistence) with a float32 copy for fast graph traversal.
    Removal tombstones a slot: links through it stay navigable, but it can
    no longer appear in results; re-adding an id tombstones the old slot and
    inserts a fresh one.  Level draws come from one seeded generator, one
    draw per insert, so construction is reproducible and resumable.
    """

    def __init__(
        self,
        dim: int = DEFAULT_DIM,
        encoder_name: str = "",
        params: HnswParams | None = None,
        seed: int = DEFAULT_INDEX_SEED,
    ) -> None:
        self.dim = int(dim)
        self.encoder_name = encoder_name
        self.params = params if params is not None else HnswParams()
        self.seed = int(seed)
        self._rng = random.Random(self.seed)
        cap = 256
        self._mat64 = np.zeros((cap, self.dim), dtype=np.float64)
        self._mat32 = np.zeros((cap, self.dim), dtype=np.float32)
        self._links0 = np.zeros((cap, 2 * self.params.M), dtype=np.int32)
        self._cnt0 = np.zeros(cap, dtype=np.int32)
        self._stamp = np.zeros(cap, dtype=np.int64)
        self._cur_stamp = 0
        self._upper: list[list[list[int]]] = []  # node -> layers 1..level -> neighbor ids
        self._levels: list[int] = []
        self._node_ids: list[Pid] = []  # slot -> pid (insertion order, incl. tombstones)
        self._active: list[bool] = []
        self._slot_of: dict[Pid, int] = {}  # pid -> live slot
        self._n = 0
        self._entry = -1
        self._max_level = -1

    # -- bookkeeping --

    def count(self) -> int:
        return len(self._slot_of)

    def __contains__(self, doc_id: Pid) -> bool:
        return doc_id in self._slot_of

    def ids(self) -> list[Pid]:
        return sorted(self._slot_of.keys(), key=lambda p: p.value)

    def vector(self, doc_id: Pid) -> np.ndarray:
        slot = self._slot_of[doc_id]
        return self._mat64[slot].copy()

    def ensure_encoder(self, name: str) -> None:
        if self.encoder_name and name != self.encoder_name:
            raise EncoderMismatch(
                f"index holds {self.encoder_name!r} vectors, got {name!r}",
                expected=self.encoder_name,
                actual=name,
            )

    def _grow(self, need: int) -> None:
        cap = self._mat64.shape[0]
        if need <= cap:
            return
        new_cap = max(need, cap * 2)
        for attr in ("_mat64", "_mat32", "_links0", "_cnt0", "_stamp"):
            old = getattr(self, attr)
            grown = np.zeros((new_cap,) + old.shape[1:], dtype=old.dtype)
            grown[: old.shape[0]] = old
            setattr(self, attr, grown)

    def _check_vector(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=np.float64)
        if v.shape != (self.dim,):
            raise DimMismatch(f"vector has shape {v.shape}, index dim is {self.dim}")
        if not np.all(np.isfinite(v)):
            raise ValueError("vector has non-finite values")
        norm = float(np.linalg.norm(v))
        if norm == 0.0:
            raise ValueError("zero vector cannot be normalized")
        return v / norm

    # -- mutation --

    def add_vector(self, doc_id: Pid, v: np.ndarray) -> None:
        v = self._check_vector(v)
        if doc_id in self._slot_of:
            self.remove_vector(doc_id)
        level = self._draw_level()
        self._insert_node(doc_id, v, level, active=True)

    def remove_vector(self, doc_id: Pid) -> None:
        slot = self._slot_of.pop(doc_id, None)
        if slot is not None:
            self._active[slot] = False

    def _draw_level(self) -> int:
        u = 1.0 - self._rng.random()  # uniform in (0, 1]
        return int(math.floor(-math.log(u) * self.params.level_mult))

    def _insert_node(self, doc_id: Pid, v: np.ndarray, level: int, active: bool) -> None:
        slot = self._n
        self._grow(slot + 1)
        self._mat64[slot] = v
        self._mat32[slot] = v.astype(np.float32)
        self._levels.append(level)
        self._upper.append([[] for _ in range(level)])
        self._node_ids.append(doc_id)
        self._active.append(active)
        if active:
            self._slot_of[doc_id] = slot
        self._n += 1

        if self._entry < 0:
            self._entry = slot
            self._max_level = level
            return

        q32 = self._mat32[slot]
        eps = [(float(self._mat32[self._entry] @ q32), self._entry)]
        for layer in range(self._max_level, level, -1):
            found = self._search_layer(q32, eps, 1, layer, exclude=slot)
            sim, neg_id = max(found)
            eps = [(sim, -neg_id)]
        M = self.params.M
        for layer in range(min(level, self._max_level), -1, -1):
            found = self._search_layer(q32, eps, self.params.ef_construction, layer, exclude=slot)
            candidates = sorted(((s, -neg) for s, neg in found), key=lambda t: (-t[0], t[1]))
            neighbors = [nid for _, nid in candidates[:M]]
            self._set_links(slot, layer, neighbors)
            for neighbor in neighbors:
                self._add_link(neighbor, layer, slot)
            eps = candidates
        if level > self._max_level:
            self._entry = slot
            self._max_level = level

    def _get_links(self, node: int, layer: int) -> np.ndarray:
        if layer == 0:
            return self._links0[node, : self._cnt0[node]]
        layers = self._upper[node]
        if layer > len(layers):
            return np.empty(0, dtype=np.int32)
        return np.asarray(layers[layer - 1], dtype=np.int32)

    def _set_links(self, node: int, layer: int, neighbors: list[int]) -> None:
        if layer == 0:
            self._cnt0[node] = len(neighbors)
            self._links0[node, : len(neighbors)] = neighbors
        else:
            self._upper[node][layer - 1] = list(neighbors)

    def _add_link(self, node: int, layer: int, target: int) -> None:
        cap = 2 * self.params.M if layer == 0 else self.params.M
        if layer == 0:
            c = int(self._cnt0[node])
            if c < cap:
                self._links0[node, c] = target
                self._cnt0[node] = c + 1
                return
            current = self._links0[node, :c].tolist() + [target]
        else:
            layers = self._upper[node][layer - 1]
            if len(layers) < cap:
                layers.append(target)
                return
            current = layers + [target]
        # Over capacity: keep the `cap` nearest neighbors (simple pruning).
        base = self._mat32[node]
        sims = self._mat32[np.asarray(current, dtype=np.int32)] @ base
        ranked = sorted(zip(current, sims.tolist()), key=lambda t: (-t[1], t[0]))
        self._set_links(node, layer, [nid for nid, _ in ranked[:cap]])

    # -- traversal --

    def _search_layer(
        self,
        q32: np.ndarray,
        eps: list[tuple[float, int]],
        ef: int,
        layer: int,
        exclude: int = -1,
    ) -> list[tuple[float, int]]:
        """Best-first beam search on one layer.

        ``eps`` are (similarity, slot) entry points.  Returns a min-heap of
        (similarity, -slot) of size <= ef.  Visited marking uses a stamp
        array so no per-query allocation is needed.
        """
        self._cur_stamp += 1
        stamp_id = self._cur_stamp
        stamp = self._stamp
        for _, slot in eps:
            stamp[slot] = stamp_id
        if exclude >= 0:
            stamp[exclude] = stamp_id
        candidates = [(-sim, slot) for sim, slot in eps]
        heapq.heapify(candidates)
        found = [(sim, -slot) for sim, slot in eps]
        heapq.heapify(found)
        mat32 = self._mat32
        while candidates:
            neg_sim, current = heapq.heappop(candidates)
            if len(found) >= ef and -neg_sim < found[0][0]:
                break
            neighbors = self._get_links(current, layer)
            if neighbors.size == 0:
                continue
            unvisited = neighbors[stamp[neighbors] != stamp_id]
            if unvisited.size == 0:
                continue
            stamp[unvisited] = stamp_id
            sims = mat32[unvisited] @ q32
            if len(found) >= ef:
                # Only candidates that beat the current bar can matter; the
                # bar only rises, so dropping the rest is safe.
                better = sims > found[0][0]
                unvisited = unvisited[better]
                sims = sims[better]
            for slot, sim in zip(unvisited.tolist(), sims.tolist()):
                if len(found) < ef:
                    heapq.heappush(found, (sim, -slot))
                    heapq.heappush(candidates, (-sim, slot))
                elif sim > found[0][0]:
                    heapq.heapreplace(found, (sim, -slot))
                    heapq.heappush(candidates, (-sim, slot))
        return found

    # -- queries --

    def search_flat(self, q: np.ndarray, k: int) -> list[ScoredHit]:
        """Exact top-k by cosine similarity; ties broken by ascending pid."""
        q = self._prepare_query(q, k)
        sims = self._mat64[: self._n] @ q
        scored = [
            (float(sims[slot]), self._node_ids[slot])
            for slot in range(self._n)
            if self._active[slot]
        ]
        scored.sort(key=lambda t: (-t[0], t[1].value))
        return [ScoredHit(doc_id, sim, PATH_DENSE) for sim, doc_id in scored[:k]]

    def search_hnsw(self, q: np.ndarray, k: int, params: HnswParams | None = None) -> list[ScoredHit]:
        """Approximate top-k via the graph.

        Greedy descent (beam 1) through the upper layers, then a best-first
        search with beam max(ef_search, k) at layer 0.  Only ``ef_search``
        from ``params`` applies at query time; construction knobs are fixed
        when the graph is built.  Final candidates are re-scored in float64
        and ordered exactly like search_flat.
        """
        q = self._prepare_query(q, k)
        ef_search = (params or self.params).ef_search
        q32 = q.astype(np.float32)
        eps = [(float(self._mat32[self._entry] @ q32), self._entry)]
        for layer in range(self._max_level, 0, -1):
            found = self._search_layer(q32, eps, 1, layer)
            sim, neg_id = max(found)
            eps = [(sim, -neg_id)]
        found = self._search_layer(q32, eps, max(ef_search, k), 0)
        slots = [-neg for _, neg in found if self._active[-neg]]
        if not slots:
            return []
        sims = self._mat64[slots] @ q
        ranked = sorted(
            zip(slots, sims.tolist()),
            key=lambda t: (-t[1], self._node_ids[t[0]].value),
        )
        return [ScoredHit(self._node_ids[slot], sim, PATH_DENSE) for slot, sim in ranked[:k]]

    def _prepare_query(self, q: np.ndarray, k: int) -> np.ndarray:
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        if not self._slot_of:
            raise EmptyIndex("vector index holds no active vectors")
        return self._check_vector(q)

    # -- diagnostics --

    def check_invariants(self) -> None:
        """Assert graph structure invariants; used by tests after mutations."""
        M = self.params.M
        assert self._n == len(self._levels) == len(self._node_ids) == len(self._active)
        if self._n:
            assert 0 <= self._entry < self._n
            assert self._levels[self._entry] == self._max_level, "entry not on top layer"
            assert self._max_level == max(self._levels)
        for node in range(self._n):
            degree0 = int(self._cnt0[node])
            assert degree0 <= 2 * M, f"node {node} layer-0 degree {degree0} > {2 * M}"
            links = self._links0[node, :degree0]
            assert ((links >= 0) & (links < self._n)).all(), "dangling layer-0 link"
            assert node not in links.tolist(), "self-link at layer 0"
            for layer_links in self._upper[node]:
                assert len(layer_links) <= M
                assert all(0 <= t < self._n and t != node for t in layer_links)

    # -- persistence --

    def save(self, path: str | Path) -> None:
        """Write the checksummed binary snapshot (see module docs).

        The byte stream is fully determined by insertion order and seed, so
        identical build histories produce identical files.
        """
        buf = io.BytesIO()
        buf.write(_MAGIC)
        encoder = self.encoder_name.encode("utf-8")
        buf.write(
            struct.pack(
                "<IIqIIIdI",
                _FORMAT_VERSION,
                self.dim,
                self.seed,
                self.params.M,
                self.params.ef_construction,
                self.params.ef_search,
                self.params.level_mult,
                len(encoder),
            )
        )
        buf.write(encoder)
        buf.write(struct.pack("<Iii", self._n, self._entry, self._max_level))
        for slot in range(self._n):
            pid_bytes = self._node_ids[slot].value.encode("utf-8")
            buf.write(struct.pack("<IBI", len(pid_bytes), int(self._active[slot]), self._levels[slot]))
            buf.write(pid_bytes)
            buf.write(self._mat64[slot].tobytes())
            links0 = self._links0[slot, : self._cnt0[slot]]
            buf.write(struct.pack("<I", links0.size))
            buf.write(links0.astype("<i4").tobytes())
            for layer_links in self._upper[slot]:
                arr = np.asarray(layer_links, dtype="<i4")
                buf.write(struct.pack("<I", arr.size))
                buf.write(arr.tobytes())
        body = buf.getvalue()
        digest = hashlib.sha256(body).digest()
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(path.suffix + ".tmp")
        tmp.write_bytes(body + digest)
        tmp.replace(path)

    @classmethod
    def load(cls, path: str | Path) -> "VectorIndex":
        raw = Path(path).read_bytes()
        if len(raw) < 32 + len(_MAGIC):
            raise CorruptIndex("index file too short")
        body, digest = raw[:-32], raw[-32:]
        if hashlib.sha256(body).digest() != digest:
            raise CorruptIndex("index file checksum mismatch")
        try:
            return cls._decode(body)
        except (struct.error, ValueError, IndexError) as exc:
            raise CorruptIndex(f"index file is not decodable: {exc}") from exc

    @classmethod
    def _decode(cls, body: bytes) -> "VectorIndex":
        view = io.BytesIO(body)
        if view.read(len(_MAGIC)) != _MAGIC:
            raise CorruptIndex("bad magic; not a vector index file")
        version, dim, seed, m, efc, efs, level_mult, enc_len = struct.unpack(
            "<IIqIIIdI", view.read(struct.calcsize("<IIqIIIdI"))
        )
        if version != _FORMAT_VERSION:
            raise CorruptIndex(f"unsupported index format version {version}")
        encoder_name = view.read(enc_len).decode("utf-8")
        params = HnswParams(M=m, ef_construction=efc, ef_search=efs, level_mult=level_mult)
        index = cls(dim=dim, encoder_name=encoder_name, params=params, seed=seed)
        n, entry, max_level = struct.unpack("<Iii", view.read(12))
        index._grow(max(n, 1))
        for slot in range(n):
            pid_len, active, level = struct.unpack("<IBI", view.read(9))
            doc_id = Pid(view.read(pid_len).decode("utf-8"))
            vec = np.frombuffer(view.read(8 * dim), dtype="<f8")
            index._mat64[slot] = vec
            index._mat32[slot] = vec.astype(np.float32)
            (count0,) = struct.unpack("<I", view.read(4))
            links0 = np.frombuffer(view.read(4 * count0), dtype="<i4")
            index._links0[slot, :count0] = links0
            index._cnt0[slot] = count0
            layers = []
            for _ in range(level):
                (count,) = struct.unpack("<I", view.read(4))
                layers.append(np.frombuffer(view.read(4 * count), dtype="<i4").tolist())
            index._upper.append(layers)
            index._levels.append(level)
            index._node_ids.append(doc_id)
            index._active.append(bool(active))
            if active:
                index._slot_of[doc_id] = slot
        if view.read(1):
            raise CorruptIndex("trailing bytes after node records")
        index._n = n
        index._entry = entry
        index._max_level = max_level
        # Replay the level draws so future inserts continue the seeded
        # sequence exactly as if the index had never been saved.
        for _ in range(n):
            index._rng.random()
        return index
