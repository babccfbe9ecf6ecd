"""Sentence-embedding exporter for the relevance benchmark engine.

Reads the line-delimited instance dataset, embeds every prompt, candidate
paper, and joint prompt+paper text with a sentence encoder, and writes the
engine's binary interchange format (EMB1 + JSON key sidecar).
"""

__version__ = "0.1.0"

from embed_exporter.exporter import ExportManifest, export_embeddings

__all__ = ["ExportManifest", "export_embeddings"]
