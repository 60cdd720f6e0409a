"""reborn: a self-contained knowledge database for reborn articles."""
from __future__ import annotations

from .catalog import Catalog, CatalogRecord, PidMintConfig, mint_pid
from .config import ServiceConfig, load_config
from .dense import HashingEmbedder, HnswParams, VectorIndex
from .dtr import DataTypeDefinition, DataTypeRegistry, SchemaProperty, seed_registry
from .engine import KnowledgeService, SearchResult
from .errors import RebornError
from .fusion import FusionWeights, HybridSearchPipeline, ScoredHit, fuse, normalize
from .model import (
    Concept,
    Pid,
    RebornArticle,
    Statement,
    ValidationReport,
    Violation,
    statement_fulltext,
    validate_article,
)
from .rocrate import harvest, parse_rocrate, serialize_rocrate, to_article
from .sparse import SparseIndex
from .text import tokenize

__version__ = "0.1.0"

__all__ = [
    "Catalog",
    "CatalogRecord",
    "Concept",
    "DataTypeDefinition",
    "DataTypeRegistry",
    "FusionWeights",
    "HashingEmbedder",
    "HnswParams",
    "HybridSearchPipeline",
    "KnowledgeService",
    "Pid",
    "PidMintConfig",
    "RebornArticle",
    "RebornError",
    "SchemaProperty",
    "ScoredHit",
    "SearchResult",
    "ServiceConfig",
    "SparseIndex",
    "Statement",
    "ValidationReport",
    "VectorIndex",
    "Violation",
    "fuse",
    "harvest",
    "load_config",
    "mint_pid",
    "normalize",
    "parse_rocrate",
    "seed_registry",
    "serialize_rocrate",
    "statement_fulltext",
    "to_article",
    "tokenize",
    "validate_article",
    "__version__",
]
