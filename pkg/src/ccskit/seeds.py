"""Deterministic, splittable random-stream derivation.

Every stochastic object in the toolkit (parity generator blocks, messages,
noise vectors, sensing-matrix columns) draws from a stream keyed by a
master seed plus a label path, e.g. ``(master, "trial", 7, "noise", 2)``.
Distinct label paths give statistically independent streams and any
object can be regenerated in isolation, which keeps tests and paired
experiments reproducible.

Derivation hashes a canonical encoding of the labels with BLAKE2b, so it
is collision resistant and stable across platforms and runs.
"""

from __future__ import annotations

import hashlib

import numpy as np

Label = "int | str"


def _encode(master: int, labels: tuple) -> bytes:
    parts = [b"ccskit/1", str(int(master)).encode()]
    for lab in labels:
        if isinstance(lab, (bool, float)):
            raise TypeError(f"labels must be int or str, got {type(lab).__name__}")
        if isinstance(lab, (int, np.integer)):
            parts.append(b"i" + str(int(lab)).encode())
        elif isinstance(lab, str):
            parts.append(b"s" + lab.encode())
        else:
            raise TypeError(f"labels must be int or str, got {type(lab).__name__}")
    return b"\x1f".join(parts)


def derive_seed(master: int, *labels) -> int:
    """Derive a 128-bit integer seed from a master seed and a label path."""
    digest = hashlib.blake2b(_encode(master, labels), digest_size=16).digest()
    return int.from_bytes(digest, "little")


def make_rng(master: int, *labels) -> np.random.Generator:
    """A fresh PCG64 generator for the given label path."""
    return np.random.Generator(np.random.PCG64(derive_seed(master, *labels)))


def random_bits(rng: np.random.Generator, nbits: int) -> int:
    """Draw a uniform nbits-bit integer from an open generator."""
    if nbits == 0:
        return 0
    raw = rng.bytes((nbits + 7) // 8)
    return int.from_bytes(raw, "little") & ((1 << nbits) - 1)
