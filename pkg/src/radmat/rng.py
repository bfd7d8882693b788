"""Counter-based seeding.

Every random draw in the package comes from a Philox stream keyed by a
tuple ``(root_seed, *counters)``.  A sample's stream depends only on its
counter, never on which worker produced it or in what order, so parallel
runs reproduce serial runs bit for bit.
"""

from __future__ import annotations

import numpy as np

GENERATOR_ID = "numpy-Philox4x32-10/SeedSequence(root,*counter)/raw-uint64-lsb-bits"


def _seed_sequence(seed: int, counter) -> np.random.SeedSequence:
    if seed < 0 or any(c < 0 for c in counter):
        raise ValueError("seeds and counters must be nonnegative")
    return np.random.SeedSequence([int(seed)] + [int(c) for c in counter])


def stream(seed: int, *counter: int) -> np.random.Generator:
    """Independent generator for the given counter under ``seed``."""
    return np.random.Generator(np.random.Philox(_seed_sequence(seed, counter)))


def sign_bits(seed: int, counter: tuple[int, ...], size: int) -> np.ndarray:
    """``size`` Rademacher signs, one raw bit each, least significant bit first.

    Bits are read from consecutive 64-bit Philox outputs; bit ``k`` of word
    ``w`` gives the sign of entry ``64*w + k`` (1 -> +1, 0 -> -1).
    """
    if size == 0:
        return np.zeros(0)
    bitgen = np.random.Philox(_seed_sequence(seed, counter))
    words = bitgen.random_raw((size + 63) // 64)
    words = np.asarray(words, dtype="<u8")
    bits = np.unpackbits(words.view(np.uint8), bitorder="little")[:size]
    return bits.astype(np.float64) * 2.0 - 1.0
