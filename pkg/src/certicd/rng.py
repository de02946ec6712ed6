"""Seeded random streams.

Every stochastic routine in the package draws from ``numpy.random.Generator``
backed by PCG64, seeded with a plain integer. The generator identifier is
written into model files and CSV rows so a run can be replayed.
"""

import hashlib

import numpy as np

GENERATOR_ID = "numpy.PCG64"


def make_rng(seed):
    return np.random.Generator(np.random.PCG64(int(seed)))


def derive_seed(seed, tag):
    """Derive an independent 64-bit seed from ``seed`` and a domain tag.

    Used to split evaluation streams away from training streams without the
    caller having to manage a second seed.
    """
    digest = hashlib.blake2b(f"{int(seed)}:{tag}".encode("ascii"), digest_size=8).digest()
    return int.from_bytes(digest, "little")
