"""Sentence-encoder bridge: corpus JSONL in, EMBD embedding file out."""

from .encode import (
    BridgeConfig,
    BridgeDataError,
    BridgeUsageError,
    encode_corpus,
    read_corpus,
    write_embedding_file,
)

__version__ = "0.1.0"

__all__ = [
    "BridgeConfig",
    "BridgeDataError",
    "BridgeUsageError",
    "encode_corpus",
    "read_corpus",
    "write_embedding_file",
    "__version__",
]
