"""Stable 64-bit string hashing.

Python's builtin ``hash`` is salted per process, so every hashed feature
space here goes through blake2b with a fixed per-use personalization tag.
The tags below are the seed constants: changing any of them changes every
hashed embedding and every hashed router feature, so they are frozen.
"""

from __future__ import annotations

import hashlib

# Frozen namespace tags (blake2b `person`, max 16 bytes).
EMBED_BUCKET_NS = b"embed.bucket.v1"
EMBED_SIGN_NS = b"embed.sign.v1"
ROUTER_FEATURE_NS = b"router.feat.v1"


def stable_hash64(text: str, namespace: bytes) -> int:
    """Deterministic unsigned 64-bit hash of `text`, independent of platform."""
    h = hashlib.blake2b(
        text.encode("utf-8"),
        digest_size=8,
        person=namespace.ljust(16, b"\0"),
    )
    return int.from_bytes(h.digest(), "little")
