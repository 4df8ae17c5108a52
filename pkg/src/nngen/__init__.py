"""LLM-driven neural architecture generation with hash-based deduplication.

Core pieces: a hash-indexed model registry, whitespace-normalized MD5
fingerprinting, few-shot prompt construction, a chat-completions client
with an offline mock, structural code validation, dataset-balanced
statistics, and the campaign pipeline tying them together.
"""

from .dedup import Decision, NormalizedFingerprint, check_unique, fingerprint, normalize
from .registry import InsertResult, ModelRecord, Registry, VARIANTS, variant_for, variant_n

__version__ = "0.1.0"

__all__ = [
    "Decision",
    "NormalizedFingerprint",
    "check_unique",
    "fingerprint",
    "normalize",
    "InsertResult",
    "ModelRecord",
    "Registry",
    "VARIANTS",
    "variant_for",
    "variant_n",
    "__version__",
]
