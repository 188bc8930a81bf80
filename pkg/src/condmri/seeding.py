"""Stable seed derivation shared by the evaluation harness and the
inference service.

The noise seed for a corrupted slice must be a pure function of the slice
identity and the noise level (plus any caller-level base seed) so that every
model - and every repeated request - sees the same corruption.
"""

from __future__ import annotations

import hashlib

__all__ = ["stable_seed"]


def stable_seed(*parts) -> int:
    """Deterministic 63-bit seed from the reprs of ``parts``."""
    text = "|".join(repr(p) for p in parts)
    digest = hashlib.sha256(text.encode()).digest()
    return int.from_bytes(digest[:8], "little") >> 1
