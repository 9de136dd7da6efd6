"""Fault-and-vote key extraction against a faultable HB+ tag.

For each position of ``w = x || y`` the attacker forces the bit to 0 and runs
``q`` sessions against the honest reader. A tag that still authenticates
most of the time held a 0 there; otherwise the bit was 1 and is set back.
No eavesdropped transcripts are needed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .faultsim import FaultableTag, flip, run_auth_with_faulted_key
from .hbcore import KeyPair, ProtocolParams, RandomSource

__all__ = ["AttackConfig", "AttackResult", "majority_decide", "break_hb_plus"]


@dataclass(frozen=True)
class AttackConfig:
    q: int
    params: ProtocolParams

    def __post_init__(self):
        if int(self.q) != self.q or self.q < 1:
            raise ValueError(f"q must be a positive integer, got {self.q}")


@dataclass(frozen=True)
class AttackResult:
    extracted_x: np.ndarray
    extracted_y: np.ndarray
    votes: np.ndarray
    faults_used: int
    auths_used: int
    first_pass_faults: int
    restoring_faults: int

    @property
    def keys(self) -> KeyPair:
        return KeyPair(self.extracted_x, self.extracted_y)

    @property
    def extracted(self) -> np.ndarray:
        return np.concatenate([self.extracted_x, self.extracted_y])

    def bit_errors(self, truth: KeyPair) -> int:
        return int(np.count_nonzero(self.extracted != truth.concatenated()))


def majority_decide(counter: int, q: int) -> int:
    """0 when ``counter >= q/2`` (ties go to 0), else 1."""
    if not 0 <= counter <= q:
        raise ValueError(f"counter must lie in 0..{q}, got {counter}")
    return 0 if 2 * counter >= q else 1


def break_hb_plus(tag: FaultableTag, reader_keys: KeyPair, config: AttackConfig,
                  rng: RandomSource) -> AttackResult:
    """Recover ``(x, y)`` from ``tag`` with ``2k`` forced-zero faults and ``2kq`` sessions.

    Session ``j`` of position ``i`` (both 1-based) draws from
    ``rng.child(i).child(j)``, so a run is fully determined by ``rng``.
    Sessions for one position run back to back without a device reset.
    """
    params = config.params
    if tag.k != params.k or reader_keys.k != params.k:
        raise ValueError(f"tag and reader keys must have k={params.k}")
    n = 2 * params.k
    extracted = np.zeros(n, dtype=np.uint8)
    votes = np.zeros(n, dtype=np.int64)
    faults_before = tag.fault_count
    auths = 0
    restoring = 0
    for i in range(1, n + 1):
        flip(tag, i, 0)
        bit_rng = rng.child(i)
        counter = 0
        for j in range(1, config.q + 1):
            if run_auth_with_faulted_key(tag, reader_keys, params, bit_rng.child(j)):
                counter += 1
            auths += 1
        votes[i - 1] = counter
        extracted[i - 1] = majority_decide(counter, config.q)
        if extracted[i - 1]:
            flip(tag, i, 1)
            restoring += 1
    keys = KeyPair.from_concatenated(extracted)
    return AttackResult(
        extracted_x=keys.x,
        extracted_y=keys.y,
        votes=votes,
        faults_used=tag.fault_count - faults_before,
        auths_used=auths,
        first_pass_faults=n,
        restoring_faults=restoring,
    )
