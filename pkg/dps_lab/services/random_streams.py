"""
Named random streams
One run seed fans out into independent, individually reproducible generators
"""

import zlib
from typing import Dict

import numpy as np

STREAM_NAMES = ("data", "gumbel", "init", "pattern", "rip", "eval")


def stream_key(name: str) -> int:
    """Stable integer key of a stream name"""
    return zlib.crc32(name.encode("utf-8"))


class RandomStreams:
    """
    Generators derived from one seed, one per component

    The same (seed, name) always yields the same sequence, independent of the
    order in which streams are requested or how much other streams consume.
    """

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._streams: Dict[str, np.random.Generator] = {}

    def seed_sequence(self, name: str) -> np.random.SeedSequence:
        return np.random.SeedSequence(entropy=self.seed, spawn_key=(stream_key(name),))

    def derived_seed(self, name: str) -> int:
        """63-bit integer seed recorded in artifacts for the named stream"""
        return int(self.seed_sequence(name).generate_state(2, dtype=np.uint32).view(np.uint64)[0] >> np.uint64(1))

    def get(self, name: str) -> np.random.Generator:
        if name not in self._streams:
            self._streams[name] = np.random.default_rng(self.seed_sequence(name))
        return self._streams[name]

    def fresh(self, name: str) -> np.random.Generator:
        """New generator at the start of the named stream"""
        return np.random.default_rng(self.seed_sequence(name))

    def recorded_seeds(self) -> Dict[str, int]:
        return {name: self.derived_seed(name) for name in STREAM_NAMES}
