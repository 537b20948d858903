"""Transformer-backed CVS1 vector store extractor."""

from .extract import ExtractionJob, ExtractStats, extract
from .manifest import ManifestEntry, read_manifest
from .store import MODE_MASKED, MODE_UNMASKED, write_store

__version__ = "0.1.0"
