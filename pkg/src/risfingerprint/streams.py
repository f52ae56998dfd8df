"""Deterministic random substreams.

Every random draw in the simulator comes from a generator keyed by
``(master seed, domain tag, index...)``. The tag is hashed with CRC-32 so the
derivation does not depend on Python's randomised ``hash``.
"""

from __future__ import annotations

import zlib

import numpy as np

LOS_MAP = "los-map"
VLOS_MAP = "vlos-map"
SF_LOS = "sf-los"
SF_NLOS = "sf-nlos"
CLUSTERS = "clusters"
SPLIT = "split"
IID = "iid-position"
NOISE = "rss-noise"


def tag_code(tag: str) -> int:
    return zlib.crc32(tag.encode("utf-8"))


def substream(seed: int, tag: str, *index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=(tag_code(tag), *map(int, index)))
    return np.random.Generator(np.random.PCG64(ss))
