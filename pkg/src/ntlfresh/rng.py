"""Seed derivation and portable random streams.

All randomness in a run flows from one integer master seed:

* ``derive_seed(master, *key)`` maps a master seed and a job key (any sequence
  of ints/strings, e.g. ``("rf", "gts+avg", 3, "fold", 7)``) to a 64-bit seed.
  The mapping is BLAKE2b with an 8-byte digest over the UTF-8 text
  ``"<master>|<k0>/<k1>/..."``, read little-endian. Any port can reproduce it.
* ``make_generator(seed)`` returns a numpy ``Generator`` over the Philox-4x64
  counter-based bit generator keyed by ``seed``. Used for bootstraps, fold
  shuffles, SVM epoch orders and hyperparameter sampling.
* ``SplitMix64`` is the per-node stream used inside the tree kernels to pick
  candidate features. It is reimplemented identically in the compiled core.
"""
from __future__ import annotations

import hashlib

import numpy as np

MASK64 = (1 << 64) - 1


def derive_seed(master: int, *key: object) -> int:
    text = f"{int(master)}|" + "/".join(str(k) for k in key)
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def make_generator(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=int(seed) & MASK64))


class SplitMix64:
    """Steele/Lea/Flood SplitMix64; ``next()`` returns a uint64 as a Python int."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = int(seed) & MASK64

    def next(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def below(self, bound: int) -> int:
        """Integer in ``[0, bound)`` by plain modulo (bias < bound / 2**64)."""
        return self.next() % bound
