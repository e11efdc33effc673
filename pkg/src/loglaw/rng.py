"""Counter-based, splittable random streams.

Every stream is keyed by ``(master_seed, stream_index)`` and backed by the
Philox4x64 counter generator, so the output is a pure function of the key and
the counter.  Ensembles give trajectory ``i`` the stream ``rng_stream(seed, i)``
which makes results independent of how trajectories are spread over workers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class RngStream:
    master_seed: int
    stream_index: int
    counter: int = 0

    def __post_init__(self):
        object.__setattr__(self, "master_seed", int(self.master_seed) & _MASK64)
        object.__setattr__(self, "stream_index", int(self.stream_index) & _MASK64)
        object.__setattr__(self, "counter", int(self.counter) & _MASK64)

    @property
    def key(self) -> int:
        return self.master_seed | (self.stream_index << 64)

    def generator(self) -> np.random.Generator:
        """A fresh numpy Generator positioned at this stream's counter."""
        return np.random.Generator(np.random.Philox(key=self.key, counter=self.counter))

    def substream(self, tag: int) -> "RngStream":
        # derived key: mix the tag into the index so substreams never collide with
        # ordinary trajectory indices (which are < 2**48 in practice)
        return RngStream(self.master_seed, (self.stream_index ^ ((int(tag) + 1) << 48)) & _MASK64)


def rng_stream(master_seed: int, index: int) -> RngStream:
    return RngStream(master_seed, index)
