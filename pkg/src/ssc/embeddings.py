"""Pretrained word-embedding tables and fixed-shape word-matrix encoding."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .features import TokenSeq

MAX_TOKENS = 40


class EmbeddingError(ValueError):
    """Malformed embedding file."""


@dataclass
class EmbeddingTable:
    """term -> dense vector, all of length dim."""

    dim: int
    vectors: dict[str, np.ndarray]

    def __post_init__(self):
        if not self.vectors:
            raise EmbeddingError("embedding table must not be empty")
        for term, vec in self.vectors.items():
            if vec.shape != (self.dim,):
                raise EmbeddingError(f"vector for {term!r} has length {vec.shape}, expected {self.dim}")

    def __contains__(self, term: str) -> bool:
        return term in self.vectors

    def __len__(self) -> int:
        return len(self.vectors)


def load_embeddings(path, expected_dim: int) -> EmbeddingTable:
    """Load a whitespace-separated text embedding file.

    An optional header line ``V D`` (two integers) is accepted; data lines are
    ``word v1 ... vD``. Fails fast with the offending line number on a
    dimension mismatch, duplicate word, or non-numeric component.
    """
    vectors: dict[str, np.ndarray] = {}
    declared_count = None
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            parts = raw.split()
            if not parts:
                continue
            if lineno == 1 and len(parts) == 2 and all(p.isdigit() for p in parts):
                declared_count, header_dim = int(parts[0]), int(parts[1])
                if header_dim != expected_dim:
                    raise EmbeddingError(
                        f"line 1: header declares dimension {header_dim}, expected {expected_dim}"
                    )
                continue
            word, comps = parts[0], parts[1:]
            if len(comps) != expected_dim:
                raise EmbeddingError(
                    f"line {lineno}: {len(comps)} components for {word!r}, expected {expected_dim}"
                )
            if word in vectors:
                raise EmbeddingError(f"line {lineno}: duplicate word {word!r}")
            try:
                vec = np.array([float(c) for c in comps])
            except ValueError:
                raise EmbeddingError(f"line {lineno}: non-numeric component for {word!r}") from None
            vectors[word] = vec
    if declared_count is not None and declared_count != len(vectors):
        raise EmbeddingError(
            f"header declares {declared_count} words but file contains {len(vectors)}"
        )
    return EmbeddingTable(expected_dim, vectors)


def save_embeddings(table: EmbeddingTable, path, header: bool = True) -> None:
    """Write a table in the text embedding format load_embeddings reads."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if header:
            fh.write(f"{len(table.vectors)} {table.dim}\n")
        for word, vec in table.vectors.items():
            fh.write(word + " " + " ".join(repr(float(v)) for v in vec) + "\n")


def oov_vector(token: str, dim: int) -> np.ndarray:
    """Deterministic pseudo-random vector for an out-of-vocabulary token.

    Seeded from a content hash of the token so the same token maps to the
    same vector across runs and processes; scaled to unit max-norm.
    """
    digest = hashlib.sha256(token.encode("utf-8")).digest()
    rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
    vec = rng.uniform(-1.0, 1.0, dim)
    peak = np.abs(vec).max()
    return vec / peak if peak > 0 else vec


def embed_words(
    tokens: TokenSeq,
    table: EmbeddingTable,
    max_len: int = MAX_TOKENS,
    dtype=np.float64,
) -> np.ndarray:
    """Encode tokens as a (max_len, dim) matrix.

    Row i is the table vector for token i when present, otherwise its
    deterministic out-of-vocabulary vector. Tokens beyond max_len are
    dropped; rows beyond the token count stay zero.
    """
    out = np.zeros((max_len, table.dim), dtype=dtype)
    for i, tok in enumerate(tokens[:max_len]):
        vec = table.vectors.get(tok)
        if vec is None:
            vec = oov_vector(tok, table.dim)
        out[i] = vec
    return out
