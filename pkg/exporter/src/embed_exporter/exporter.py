"""Dataset embedding export into the EMB1 interchange format.

The exporter is a standalone tool: it speaks to the benchmark engine only
through the two documented file contracts, the JSONL instance dataset it
consumes and the EMB1 binary + JSON sidecar it emits.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

MAGIC = b"EMB1"
PAIR_SEPARATOR = " [SEP] "
DEFAULT_MODEL = "sentence-transformers/paraphrase-MiniLM-L6-v2"
DEFAULT_DIM = 384

CATEGORIES = (
    "most_relevant",
    "second_most_relevant",
    "second_least_relevant",
    "least_relevant",
)


class ExportError(ValueError):
    pass


@dataclass
class ExportManifest:
    dataset_path: str
    output_path: str
    model_id: str = DEFAULT_MODEL
    dim: int = DEFAULT_DIM
    batch_size: int = 32
    normalize: bool = True


def load_instances(path) -> list[dict]:
    """Parse the line-delimited instance format."""
    instances = []
    seen = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ExportError(f"line {lineno}: invalid JSON: {exc}") from exc
            for key in ("id", "prompt", *CATEGORIES):
                if key not in record:
                    raise ExportError(f"line {lineno}: missing field {key!r}")
            if record["id"] in seen:
                raise ExportError(f"line {lineno}: duplicate id {record['id']!r}")
            seen.add(record["id"])
            instances.append(record)
    return instances


def paper_text(candidate: dict) -> str:
    """Pair-text serialization matching the engine: newline-joined fields."""
    return "\n".join([
        candidate.get("title", ""),
        candidate.get("abstract", ""),
        candidate.get("related_work", ""),
    ])


def export_rows(instances: list[dict]) -> list[tuple[str, str]]:
    """(key, text) rows in deterministic (instance_id, role) order.

    Per instance: the prompt, each candidate's paper text, and each joint
    prompt + candidate pair text.
    """
    rows = []
    for record in sorted(instances, key=lambda r: str(r["id"])):
        gid = str(record["id"])
        prompt = record["prompt"]
        rows.append((f"{gid}/prompt", prompt))
        for idx, category in enumerate(CATEGORIES):
            rows.append((f"{gid}/candidate_{idx}", paper_text(record[category])))
        for idx, category in enumerate(CATEGORIES):
            rows.append((
                f"{gid}/pair_{idx}",
                prompt + PAIR_SEPARATOR + paper_text(record[category]),
            ))
    return rows


def default_encoder(manifest: ExportManifest):
    """Sentence-transformer encoder; raises ExportError if unavailable."""
    try:
        from sentence_transformers import SentenceTransformer
    except ImportError as exc:
        raise ExportError(f"sentence-transformers not installed: {exc}") from exc
    try:
        model = SentenceTransformer(manifest.model_id)
    except Exception as exc:
        raise ExportError(
            f"embedding model {manifest.model_id!r} unavailable: {exc}"
        ) from exc

    def encode(texts: list[str]) -> np.ndarray:
        return np.asarray(
            model.encode(texts, batch_size=manifest.batch_size,
                         show_progress_bar=False),
            dtype=np.float32,
        )

    return encode


def write_interchange(keys: list[str], vectors: np.ndarray, path) -> None:
    """EMB1 header + f32-LE payload, plus the JSON key sidecar."""
    n_rows, dim = vectors.shape
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", n_rows, dim))
        fh.write(np.ascontiguousarray(vectors, dtype="<f4").tobytes())
    with open(str(path) + ".keys.json", "w", encoding="utf-8") as fh:
        json.dump(keys, fh)


def export_embeddings(manifest: ExportManifest, encoder=None) -> list[str]:
    """Embed every dataset row and write the interchange file.

    encoder is a callable list[str] -> (n, dim) float array; defaults to the
    manifest's sentence-transformer model.  Returns the emitted row keys.
    """
    instances = load_instances(manifest.dataset_path)
    rows = export_rows(instances)
    if encoder is None:
        encoder = default_encoder(manifest)
    keys = [key for key, _ in rows]
    texts = [text for _, text in rows]
    chunks = []
    for start in range(0, len(texts), manifest.batch_size):
        chunks.append(encoder(texts[start:start + manifest.batch_size]))
    vectors = np.vstack(chunks).astype(np.float32)
    if vectors.shape != (len(rows), manifest.dim):
        raise ExportError(
            f"encoder produced shape {vectors.shape}, manifest expects "
            f"({len(rows)}, {manifest.dim})"
        )
    if manifest.normalize:
        norms = np.linalg.norm(vectors, axis=1, keepdims=True)
        norms[norms == 0] = 1.0
        vectors = vectors / norms
    write_interchange(keys, vectors, manifest.output_path)
    return keys
