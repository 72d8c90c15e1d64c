"""Feature-pack extraction: video frames and query text to embeddings on disk."""

from .encoders import HashEncoder, available_encoders, load_encoder
from .extract import DecodeError, ExtractionJob, extract_queries, extract_video
from .ocfp import pack_bytes, read_pack, write_pack_atomic

__version__ = "0.1.0"

__all__ = [
    "DecodeError",
    "ExtractionJob",
    "HashEncoder",
    "available_encoders",
    "extract_queries",
    "extract_video",
    "load_encoder",
    "pack_bytes",
    "read_pack",
    "write_pack_atomic",
]
