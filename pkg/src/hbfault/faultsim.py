"""Faultable tag: key memory ``w = x || y`` that an adversary can set bit by bit.

Faults land between sessions only. Positions are 1-based at this interface,
matching the attack's ``w[1..2k]`` indexing.
"""

from __future__ import annotations

import numpy as np

from .hbcore import KeyPair, ProtocolParams, RandomSource, as_bits, count_mismatches

__all__ = ["KeyMemory", "FaultableTag", "flip", "reset", "run_auth_with_faulted_key"]


class KeyMemory:
    """Mutable ``2k``-bit key store. ``x = w[1..k]``, ``y = w[k+1..2k]``."""

    def __init__(self, w):
        w = as_bits(w).copy()
        if w.size == 0 or w.size % 2:
            raise ValueError("key memory must hold 2k bits for k >= 1")
        self._w = w
        self.k = w.size // 2
        self._keys: KeyPair | None = None

    @property
    def w(self) -> np.ndarray:
        view = self._w.view()
        view.flags.writeable = False
        return view

    def __len__(self):
        return self._w.size

    def __getitem__(self, i: int) -> int:
        return int(self._w[self._index(i)])

    def _index(self, i: int) -> int:
        if int(i) != i or not 1 <= i <= self._w.size:
            raise IndexError(f"bit index must be in 1..{self._w.size}, got {i}")
        return int(i) - 1

    def set_bit(self, i: int, b: int):
        if b not in (0, 1):
            raise ValueError(f"bit value must be 0 or 1, got {b}")
        self._w[self._index(i)] = b
        self._keys = None

    def keys(self) -> KeyPair:
        if self._keys is None:
            self._keys = KeyPair.from_concatenated(self._w)
        return self._keys


class FaultableTag:
    """An HB+ tag under the adversary's physical control.

    ``fault_count`` counts every :func:`flip` call and survives :func:`reset`,
    since it measures the adversary's effort rather than device state.
    ``fault_reliability`` below 1 makes each flip land only with that
    probability (drawn from ``fault_rng``); the default models the perfectly
    reliable bit-set the attack assumes.
    """

    def __init__(self, keys: KeyPair, eta: float, fault_reliability: float = 1.0,
                 fault_rng: RandomSource | None = None):
        if not 0.0 <= eta < 0.5:
            raise ValueError(f"eta must lie in [0, 1/2), got {eta}")
        if not 0.0 <= fault_reliability <= 1.0:
            raise ValueError("fault_reliability must be a probability")
        if fault_reliability < 1.0 and fault_rng is None:
            raise ValueError("an unreliable fault model needs a fault_rng")
        self.original = keys.concatenated()
        self.original.flags.writeable = False
        self.memory = KeyMemory(self.original)
        self.eta = eta
        self.fault_count = 0
        self.fault_reliability = fault_reliability
        self._fault_rng = fault_rng

    @property
    def k(self) -> int:
        return self.memory.k

    def keys(self) -> KeyPair:
        return self.memory.keys()

    def is_pristine(self) -> bool:
        return bool(np.array_equal(self.memory.w, self.original))


def flip(tag: FaultableTag, i: int, b: int) -> None:
    """Set ``w[i]`` (1-based) to ``b``; every other bit is untouched."""
    tag.memory._index(i)
    if b not in (0, 1):
        raise ValueError(f"bit value must be 0 or 1, got {b}")
    tag.fault_count += 1
    if tag.fault_reliability < 1.0 and tag._fault_rng.uniform() >= tag.fault_reliability:
        return
    tag.memory.set_bit(i, b)


def reset(tag: FaultableTag) -> None:
    tag.memory = KeyMemory(tag.original)


def run_auth_with_faulted_key(tag: FaultableTag, reader_keys: KeyPair, params: ProtocolParams,
                              rng: RandomSource) -> bool:
    """One authentication of the tag's current memory against an honest reader.

    The tag's own noise level drives its responses; ``params`` supplies the
    round count and the reader's threshold.
    """
    if params.k != tag.k:
        raise ValueError(f"tag holds k={tag.k}, params say k={params.k}")
    tag_params = params if params.eta == tag.eta else ProtocolParams(params.k, params.r, tag.eta)
    return count_mismatches(tag.keys(), reader_keys, tag_params, rng) <= params.t
