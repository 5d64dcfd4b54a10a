"""Seeded binary symmetric channel with noiseless feedback.

The feedback contract is implicit in the call shape: ``transmit`` returns the
received symbol synchronously, so the caller always observes y_t before
choosing x_{t+1}.  Randomness comes from a counter-based Philox generator so
per-trial substreams are reproducible and statistically independent; uniforms
are drawn in chunks (bit-identical to drawing them one at a time) so a
compiled consumer can read the buffer directly.
"""

from __future__ import annotations

import numpy as np

from .core import ChannelParams

_CHUNK = 4096


class BscChannel:
    """One BSC instance: flips each input bit independently with probability p.

    ``crossover`` overrides the flip probability (used by noiseless test
    channels); the posterior arithmetic still uses ``params.p``.
    """

    __slots__ = ("params", "crossover", "rng", "record", "transcript",
                 "uses", "_buf", "_pos")

    def __init__(self, params: ChannelParams, rng: np.random.Generator,
                 crossover: float | None = None, record: bool = False):
        self.params = params
        self.crossover = params.p if crossover is None else crossover
        self.rng = rng
        self.record = record
        self.transcript: list[tuple[int, int]] = []
        self.uses = 0
        self._buf = np.empty(0, dtype=np.float64)
        self._pos = 0

    @classmethod
    def noiseless(cls, params: ChannelParams, record: bool = False) -> "BscChannel":
        """Test-only channel that never flips (posteriors still use params.p)."""
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(0)))
        return cls(params, rng, crossover=0.0, record=record)

    def refill(self) -> None:
        self._buf = self.rng.random(_CHUNK)
        self._pos = 0

    def next_uniform(self) -> float:
        if self._pos >= self._buf.shape[0]:
            self.refill()
        u = self._buf[self._pos]
        self._pos += 1
        return u

    def transmit(self, x: int) -> int:
        """Send one bit; returns the received bit and appends to the transcript."""
        y = x ^ (1 if self.next_uniform() < self.crossover else 0)
        self.uses += 1
        if self.record:
            self.transcript.append((x, y))
        return y


def fork_stream(master_seed: int, trial_id: int, params: ChannelParams,
                crossover: float | None = None, record: bool = False) -> BscChannel:
    """Independent, reproducible channel stream for one trial.

    (master_seed, trial_id) fully determines the noise sequence regardless of
    how trials are sharded across workers.
    """
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=(trial_id,))
    return BscChannel(params, np.random.Generator(np.random.Philox(ss)),
                      crossover=crossover, record=record)


def message_stream(master_seed: int, trial_id: int) -> np.random.Generator:
    """Substream for drawing the trial's message, independent of the noise stream."""
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=(trial_id, 1))
    return np.random.Generator(np.random.Philox(ss))


def draw_message(master_seed: int, trial_id: int, k: int) -> int:
    """Uniform k-bit message for a trial, packed little-endian."""
    bits = message_stream(master_seed, trial_id).integers(0, 2, size=k)
    value = 0
    for j in range(k):
        if bits[j]:
            value |= 1 << j
    return value
