"""Service configuration: defaults, JSON config file, and REBORN_* overrides."""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Mapping

from .catalog import PidMintConfig
from .dense import DEFAULT_DIM, DEFAULT_EMBED_SEED, DEFAULT_INDEX_SEED, HnswParams
from .fusion import DEFAULT_CANDIDATE_MULTIPLIER, DEFAULT_RERANK_N, FusionWeights
from .sparse import DEFAULT_B, DEFAULT_BOOSTS, DEFAULT_K1

EMBEDDER_BUILTIN = "builtin"
EMBEDDER_REMOTE = "remote"

REPOSITORY_LOCAL = "local"
REPOSITORY_HTTP = "http"


@dataclass(frozen=True)
class ServiceConfig:
    data_dir: Path = Path("./reborn-data")
    listen_address: str = "127.0.0.1:8017"
    pid_mint: PidMintConfig = PidMintConfig()
    weights: FusionWeights = FusionWeights()
    rerank_n: int = DEFAULT_RERANK_N
    candidate_multiplier: int = DEFAULT_CANDIDATE_MULTIPLIER
    hnsw: HnswParams = HnswParams()
    index_seed: int = DEFAULT_INDEX_SEED
    sparse_k1: float = DEFAULT_K1
    sparse_b: float = DEFAULT_B
    boosts: Mapping[str, float] | None = None
    embedder_kind: str = EMBEDDER_BUILTIN
    embedder_dim: int = DEFAULT_DIM
    embedder_seed: int = DEFAULT_EMBED_SEED
    embedder_endpoint: str | None = None
    repository_kind: str = REPOSITORY_LOCAL
    repository_path: Path | None = None
    repository_base_url: str | None = None
    ui_dir: Path | None = None

    @property
    def host(self) -> str:
        return self.listen_address.rsplit(":", 1)[0]

    @property
    def port(self) -> int:
        return int(self.listen_address.rsplit(":", 1)[1])

    def effective_boosts(self) -> dict[str, float]:
        return dict(DEFAULT_BOOSTS if self.boosts is None else self.boosts)


def load_config(
    path: str | Path | None = None,
    env: Mapping[str, str] | None = None,
) -> ServiceConfig:
    """Layer config sources: defaults < JSON file < REBORN_* environment."""
    env = os.environ if env is None else env
    config = ServiceConfig()
    if path is None and env.get("REBORN_CONFIG"):
        path = env["REBORN_CONFIG"]
    if path is not None:
        config = _apply_file(config, Path(path))
    return _apply_env(config, env)


def _apply_file(config: ServiceConfig, path: Path) -> ServiceConfig:
    payload = json.loads(path.read_text(encoding="utf-8"))
    if not isinstance(payload, dict):
        raise ValueError(f"config file {path} must hold a JSON object")

    updates: dict[str, Any] = {}
    if "data_dir" in payload:
        updates["data_dir"] = Path(payload["data_dir"])
    if "listen_address" in payload:
        updates["listen_address"] = str(payload["listen_address"])
    if "ui_dir" in payload and payload["ui_dir"] is not None:
        updates["ui_dir"] = Path(payload["ui_dir"])
    if "index_seed" in payload:
        updates["index_seed"] = int(payload["index_seed"])

    mint = payload.get("pid_mint", {})
    if mint:
        updates["pid_mint"] = PidMintConfig(
            prefix=mint.get("prefix", config.pid_mint.prefix),
            suffix_length=int(mint.get("suffix_length", config.pid_mint.suffix_length)),
        )

    fusion = payload.get("fusion", {})
    if "w_sparse" in fusion or "w_dense" in fusion:
        w_sparse = float(fusion.get("w_sparse", 1.0 - float(fusion.get("w_dense", 0.5))))
        updates["weights"] = FusionWeights.from_sparse(w_sparse)
    if "rerank_n" in fusion:
        updates["rerank_n"] = int(fusion["rerank_n"])
    if "candidate_multiplier" in fusion:
        updates["candidate_multiplier"] = int(fusion["candidate_multiplier"])

    sparse = payload.get("sparse", {})
    if "k1" in sparse:
        updates["sparse_k1"] = float(sparse["k1"])
    if "b" in sparse:
        updates["sparse_b"] = float(sparse["b"])
    if "boosts" in sparse:
        updates["boosts"] = {k: float(v) for k, v in sparse["boosts"].items()}

    hnsw = payload.get("hnsw", {})
    if hnsw:
        updates["hnsw"] = HnswParams(
            M=int(hnsw.get("M", config.hnsw.M)),
            ef_construction=int(hnsw.get("ef_construction", config.hnsw.ef_construction)),
            ef_search=int(hnsw.get("ef_search", config.hnsw.ef_search)),
        )

    embedder = payload.get("embedder", {})
    if "kind" in embedder:
        updates["embedder_kind"] = str(embedder["kind"])
    if "dim" in embedder:
        updates["embedder_dim"] = int(embedder["dim"])
    if "seed" in embedder:
        updates["embedder_seed"] = int(embedder["seed"])
    if "endpoint" in embedder:
        updates["embedder_endpoint"] = embedder["endpoint"]

    repository = payload.get("repository", {})
    if "kind" in repository:
        updates["repository_kind"] = str(repository["kind"])
    if repository.get("path") is not None:
        updates["repository_path"] = Path(repository["path"])
    if repository.get("base_url") is not None:
        updates["repository_base_url"] = str(repository["base_url"])

    return replace(config, **updates)


def _apply_env(config: ServiceConfig, env: Mapping[str, str]) -> ServiceConfig:
    updates: dict[str, Any] = {}

    def take(name: str, key: str, convert) -> None:
        if env.get(name):
            updates[key] = convert(env[name])

    take("REBORN_DATA_DIR", "data_dir", Path)
    take("REBORN_LISTEN_ADDRESS", "listen_address", str)
    take("REBORN_RERANK_N", "rerank_n", int)
    take("REBORN_CANDIDATE_MULTIPLIER", "candidate_multiplier", int)
    take("REBORN_INDEX_SEED", "index_seed", int)
    take("REBORN_SPARSE_K1", "sparse_k1", float)
    take("REBORN_SPARSE_B", "sparse_b", float)
    take("REBORN_EMBED_KIND", "embedder_kind", str)
    take("REBORN_EMBED_DIM", "embedder_dim", int)
    take("REBORN_EMBED_SEED", "embedder_seed", int)
    take("REBORN_EMBED_ENDPOINT", "embedder_endpoint", str)
    take("REBORN_REPO_KIND", "repository_kind", str)
    take("REBORN_REPO_PATH", "repository_path", Path)
    take("REBORN_REPO_BASE_URL", "repository_base_url", str)
    take("REBORN_UI_DIR", "ui_dir", Path)
    if env.get("REBORN_W_SPARSE"):
        updates["weights"] = FusionWeights.from_sparse(float(env["REBORN_W_SPARSE"]))
    if env.get("REBORN_PID_PREFIX") or env.get("REBORN_PID_SUFFIX_LENGTH"):
        updates["pid_mint"] = PidMintConfig(
            prefix=env.get("REBORN_PID_PREFIX", config.pid_mint.prefix),
            suffix_length=int(
                env.get("REBORN_PID_SUFFIX_LENGTH", config.pid_mint.suffix_length)
            ),
        )
    if any(env.get(n) for n in ("REBORN_HNSW_M", "REBORN_HNSW_EF_CONSTRUCTION", "REBORN_HNSW_EF_SEARCH")):
        updates["hnsw"] = HnswParams(
            M=int(env.get("REBORN_HNSW_M", config.hnsw.M)),
            ef_construction=int(
                env.get("REBORN_HNSW_EF_CONSTRUCTION", config.hnsw.ef_construction)
            ),
            ef_search=int(env.get("REBORN_HNSW_EF_SEARCH", config.hnsw.ef_search)),
        )
    return replace(config, **updates)
