"""Sentence encoders mapping profile text to a fixed 512-d vector."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np

from ..errors import EmbeddingMissing
from .text import tokenize

DIM = 512


class Encoder(Protocol):
    dim: int

    def encode(self, editor: str, text: str) -> np.ndarray: ...


def token_hash(token: str) -> int:
    """64-bit hash: the first 8 bytes of BLAKE2b(token, digest_size=8), little-endian."""
    return int.from_bytes(hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest(), "little")


def bucket_and_sign(token: str, dim: int = DIM) -> tuple[int, int]:
    """Bucket is ``h % dim``; sign is +1 when the top bit of ``h`` is clear, else -1."""
    h = token_hash(token)
    return h % dim, (-1 if h >> 63 else 1)


class HashingEncoder:
    """Signed feature hashing of word tokens, then L2 normalisation."""

    def __init__(self, dim: int = DIM):
        self.dim = dim

    def raw(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dim)
        for tok in tokenize(text):
            b, s = bucket_and_sign(tok, self.dim)
            vec[b] += s
        return vec

    def encode(self, editor: str, text: str) -> np.ndarray:
        vec = self.raw(text)
        norm = float(np.linalg.norm(vec))
        return vec / norm if norm > 0 else vec


class FileEncoder:
    """Lookup of precomputed vectors: ``{"editor": ..., "vector": [...]}`` per line."""

    def __init__(self, path: str | Path, dim: int = DIM):
        self.dim = dim
        self.path = Path(path)
        self.vectors: dict[str, np.ndarray] = {}
        with open(self.path, encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                rec = json.loads(line)
                vec = np.asarray(rec["vector"], dtype=float)
                if vec.shape != (dim,):
                    raise ValueError(f"embedding for {rec['editor']!r} has shape {vec.shape}, expected ({dim},)")
                self.vectors[rec["editor"]] = vec

    def encode(self, editor: str, text: str) -> np.ndarray:
        try:
            return self.vectors[editor].copy()
        except KeyError:
            raise EmbeddingMissing(f"no embedding for editor {editor!r} in {self.path}") from None


def sentence_vector(sentences: Sequence[str], encoder: Encoder, editor: str = "") -> np.ndarray:
    return encoder.encode(editor, " ".join(sentences))
