"""Seeded random streams.

All samplers draw scalars one at a time, so they use :class:`random.Random`
(much cheaper per draw than a numpy ``Generator``).  Independent streams are
derived from a tuple of keys; seeding with a string goes through SHA-512, so
the derivation does not depend on ``PYTHONHASHSEED``.
"""

import random


def derive_rng(*keys) -> random.Random:
    return random.Random(":".join(str(k) for k in keys))


def as_rng(seed_or_rng=None) -> random.Random:
    if isinstance(seed_or_rng, random.Random):
        return seed_or_rng
    if seed_or_rng is None:
        return random.Random()
    return derive_rng(seed_or_rng)
