"""Deterministic seed derivation for every random draw in the toolkit.

All randomness flows from one master seed. Child seeds are derived by
hashing the master seed together with a path of string labels, so the
same (master, labels) pair yields the same stream on every platform and
Python version (``hash()`` is salted per process and unusable here).
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(master: int, *labels: object) -> int:
    """Derive a 64-bit child seed from a master seed and a label path.

    Labels are stringified and joined, so ``derive_seed(7, "gst", 12)``
    and ``derive_seed(7, "gst", "12")`` coincide by design; keep label
    paths unambiguous at the call site.
    """
    text = str(int(master)) + "/" + "/".join(str(part) for part in labels)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def rng_for(master: int, *labels: object) -> np.random.Generator:
    """Generator seeded from :func:`derive_seed`."""
    return np.random.default_rng(derive_seed(master, *labels))
