"""Dense vector features for prompt/paper pairs.

Two sources are supported: a deterministic built-in signed-hash vectorizer
(384 dimensions, matching the external sentence encoder's width), and
externally computed vectors loaded from the binary interchange format.
"""

from __future__ import annotations

import json
import re
import struct
from dataclasses import dataclass, field

import numpy as np

DEFAULT_DIM = 384
MAGIC = b"EMB1"
PAIR_SEPARATOR = " [SEP] "

_TOKEN_SPLIT = re.compile(r"[^0-9a-z]+")

# FNV-1a 64-bit constants; fixed so vectors are stable across platforms.
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_FNV_MASK = 0xFFFFFFFFFFFFFFFF


class EmbeddingError(ValueError):
    """Raised for dimension mismatches, missing rows, or bad store files."""


def _fnv1a64(token: str) -> int:
    h = _FNV_OFFSET
    for byte in token.encode("utf-8"):
        h = ((h ^ byte) * _FNV_PRIME) & _FNV_MASK
    return h


def builtin_vectorize(text: str, dim: int = DEFAULT_DIM) -> np.ndarray:
    """Deterministic signed-hash bag-of-tokens vector, L2-normalized.

    Lowercases, splits on non-alphanumerics, hashes each token to a bucket
    in [0, dim) with a hash-derived sign, accumulates counts, and normalizes.
    Empty token streams map to the zero vector.
    """
    vec = np.zeros(dim, dtype=np.float64)
    for token in _TOKEN_SPLIT.split(text.lower()):
        if not token:
            continue
        h = _fnv1a64(token)
        bucket = h % dim
        sign = 1.0 if (h >> 63) & 1 == 0 else -1.0
        vec[bucket] += sign
    norm = np.linalg.norm(vec)
    if norm > 0:
        vec /= norm
    return vec


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity; defined as 0.0 when either vector is zero."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise EmbeddingError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.dot(u, v) / (nu * nv))


def prompt_key(group_id: str) -> str:
    return f"{group_id}/prompt"


def candidate_key(group_id: str, index: int) -> str:
    return f"{group_id}/candidate_{index}"


def pair_key(group_id: str, index: int) -> str:
    return f"{group_id}/pair_{index}"


@dataclass
class EmbeddingStore:
    """Immutable id-indexed dense vectors with a shared dimension."""

    dim: int
    rows: dict[str, np.ndarray] = field(default_factory=dict)
    provenance: str = "builtin-hash"

    def add(self, key: str, vector: np.ndarray) -> None:
        vector = np.asarray(vector, dtype=np.float32)
        if vector.shape != (self.dim,):
            raise EmbeddingError(
                f"row {key!r} has shape {vector.shape}, store dim is {self.dim}"
            )
        if key in self.rows:
            raise EmbeddingError(f"duplicate store key {key!r}")
        self.rows[key] = vector

    def get(self, key: str) -> np.ndarray:
        try:
            return self.rows[key]
        except KeyError:
            raise EmbeddingError(f"embedding store has no row for key {key!r}") from None

    def __len__(self) -> int:
        return len(self.rows)


def save_store(store: EmbeddingStore, path) -> None:
    """Write the binary interchange format plus its JSON key sidecar.

    Layout: magic ``EMB1``, u32-LE row count, u32-LE dimension, then
    row-major f32-LE values.  Sidecar at ``<path>.keys.json`` holds the row
    keys in file order.
    """
    keys = list(store.rows.keys())
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", len(keys), store.dim))
        for key in keys:
            fh.write(store.rows[key].astype("<f4").tobytes())
    with open(str(path) + ".keys.json", "w", encoding="utf-8") as fh:
        json.dump(keys, fh)


def load_store(path, provenance: str = "external") -> EmbeddingStore:
    """Load the interchange format; round-trips save_store bit-exactly."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MAGIC:
            raise EmbeddingError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
        header = fh.read(8)
        if len(header) != 8:
            raise EmbeddingError(f"{path}: truncated header")
        n_rows, dim = struct.unpack("<II", header)
        payload = fh.read()
    expected = n_rows * dim * 4
    if len(payload) != expected:
        raise EmbeddingError(
            f"{path}: payload is {len(payload)} bytes, expected {expected}"
        )
    with open(str(path) + ".keys.json", "r", encoding="utf-8") as fh:
        keys = json.load(fh)
    if len(keys) != n_rows:
        raise EmbeddingError(
            f"{path}: sidecar has {len(keys)} keys, header says {n_rows} rows"
        )
    values = np.frombuffer(payload, dtype="<f4").reshape(n_rows, dim)
    store = EmbeddingStore(dim=dim, provenance=provenance)
    for key, row in zip(keys, values):
        store.add(key, row.copy())
    return store


class FeatureSource:
    """Resolves feature vectors for pair records.

    mode ``joint`` embeds the concatenated prompt + paper text (dimension d);
    mode ``concat`` concatenates the two separate embeddings (dimension 2d).
    When a store is given, vectors are looked up by key instead of computed.
    """

    def __init__(self, mode: str = "joint", store: EmbeddingStore | None = None,
                 dim: int = DEFAULT_DIM):
        if mode not in ("joint", "concat"):
            raise EmbeddingError(f"unknown feature mode {mode!r}")
        self.mode = mode
        self.store = store
        self.dim = store.dim if store is not None else dim

    @property
    def feature_dim(self) -> int:
        return self.dim if self.mode == "joint" else 2 * self.dim

    @property
    def provenance(self) -> str:
        return self.store.provenance if self.store is not None else "builtin-hash"

    def prompt_vector(self, pair) -> np.ndarray:
        if self.store is not None:
            return np.asarray(self.store.get(prompt_key(pair.group_id)), dtype=np.float64)
        return builtin_vectorize(pair.prompt, self.dim)

    def candidate_vector(self, pair) -> np.ndarray:
        if self.store is not None:
            key = candidate_key(pair.group_id, pair.candidate_index)
            return np.asarray(self.store.get(key), dtype=np.float64)
        return builtin_vectorize(pair.paper_text, self.dim)

    def pair_vector(self, pair) -> np.ndarray:
        if self.mode == "concat":
            return np.concatenate([self.prompt_vector(pair), self.candidate_vector(pair)])
        if self.store is not None:
            key = pair_key(pair.group_id, pair.candidate_index)
            return np.asarray(self.store.get(key), dtype=np.float64)
        return builtin_vectorize(pair.prompt + PAIR_SEPARATOR + pair.paper_text, self.dim)

    def feature_matrix(self, pairs) -> np.ndarray:
        return np.stack([self.pair_vector(p) for p in pairs]) if pairs else \
            np.zeros((0, self.feature_dim))


def pair_features(prompt_text: str, paper_text: str, mode: str = "joint",
                  dim: int = DEFAULT_DIM) -> np.ndarray:
    """Built-in feature vector for a single (prompt, paper) text pair."""
    if mode == "joint":
        return builtin_vectorize(prompt_text + PAIR_SEPARATOR + paper_text, dim)
    if mode == "concat":
        return np.concatenate(
            [builtin_vectorize(prompt_text, dim), builtin_vectorize(paper_text, dim)]
        )
    raise EmbeddingError(f"unknown feature mode {mode!r}")
