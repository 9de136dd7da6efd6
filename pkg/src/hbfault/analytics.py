"""Error and leakage analysis for the fault-and-vote attack.

Two predictions of the per-bit error are provided:

``p_error(q, single_query_error_prob(eta, r))``
    The averaged model. A single fault-plus-session trial misreads a bit with
    probability ``p = (P_FA + P_FR) / 2`` and the ``q`` votes are treated as
    independent Bernoulli(p) errors.

``exact_bit_error(eta, r, q)``
    What the attack actually does. For a fixed key bit the ``q`` votes share
    one error rate: ``P_FR`` when the bit is 0 (tag left valid), the
    corrupted-tag acceptance rate when it is 1. Majority voting is applied per
    case and the two cases are averaged afterwards.

Because averaging before the majority vote is not the same as averaging
after it, the two differ sharply for ``q > 1`` (they agree at ``q = 1``).

Both figures describe a bit read from a tag that is still valid. A misread
bit leaves the tag corrupted for the rest of the run: every later session
then passes only at the corrupted rate and each remaining bit is a coin
flip. :func:`attack_error_profile` follows that chain over all ``2k``
positions.

All entropies are in bits with ``0 log 0 = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hbcore import (
    binomial_range,
    p_accept_corrupted,
    p_false_accept,
    p_false_reject,
)

__all__ = [
    "LeakageReport",
    "SurfaceGrid",
    "TABLE_PARAMS",
    "TABLE_QS",
    "single_query_error_prob",
    "p_error",
    "exact_bit_error",
    "AttackErrorProfile",
    "attack_error_profile",
    "binary_entropy",
    "entropy",
    "conditional_entropy",
    "mutual_information",
    "bsc_joint",
    "leakage_report",
    "published_tables",
    "surface",
]

# (eta, r) sets and vote counts of the published result tables
TABLE_PARAMS = ((0.125, 40), (0.125, 80), (0.25, 80))
TABLE_QS = (7, 11, 17, 19)

_NORM_TOL = 1e-9


def single_query_error_prob(eta: float, r: int) -> float:
    return 0.5 * (p_false_accept(eta, r) + p_false_reject(eta, r))


def p_error(q: int, p: float) -> float:
    """Probability that more than half of ``q`` independent Bernoulli(p) votes are wrong."""
    if int(q) != q or q < 1:
        raise ValueError(f"q must be a positive integer, got {q}")
    if not 0.0 <= p <= 0.5:
        raise ValueError(f"p must lie in [0, 1/2], got {p}")
    return binomial_range(int(q), p, q // 2 + 1, q)


def exact_bit_error(eta: float, r: int, q: int) -> float:
    """Per-bit error of the attack for a uniform key bit, without the averaging shortcut.

    Bit 0: each session succeeds with ``1 - P_FR``; the bit is misread when
    successes fall below ``q/2``. Bit 1: the forced-zero tag is corrupted and
    each session succeeds with the corrupted acceptance rate; the bit is
    misread when successes reach ``q/2``.
    """
    if int(q) != q or q < 1:
        raise ValueError(f"q must be a positive integer, got {q}")
    err_zero, err_one = _vote_errors(int(q), 1.0 - p_false_reject(eta, r), p_accept_corrupted(eta, r))
    return 0.5 * (err_zero + err_one)


def _vote_errors(q: int, pass_valid: float, pass_corrupt: float) -> tuple[float, float]:
    half_up = -(-q // 2)  # smallest count with 2*count >= q
    return (binomial_range(q, pass_valid, 0, half_up - 1),
            binomial_range(q, pass_corrupt, half_up, q))


@dataclass(frozen=True)
class AttackErrorProfile:
    """Error law of one full attack run on a uniform key of ``2k`` bits.

    ``position_error[i]`` is the probability that bit ``i + 1`` is misread.
    """

    position_error: np.ndarray
    isolated_error: float
    full_key_success: float

    @property
    def per_bit_error(self) -> float:
        return float(self.position_error.mean())

    @property
    def expected_bit_errors(self) -> float:
        return float(self.position_error.sum())


def attack_error_profile(eta: float, r: int, q: int, k: int,
                         pass_valid: float | None = None,
                         pass_corrupt: float | None = None) -> AttackErrorProfile:
    """Exact per-position error probabilities of the fault-and-vote attack.

    While the tag is still valid a position is misread with probability
    ``exact_bit_error``, and a misread puts a wrong bit into memory for good.
    From then on every session passes at ``pass_corrupt`` and a position is
    misread with probability 1/2 whatever its value.  The session pass rates
    default to ``1 - P_FR`` and the corrupted acceptance rate for ``(eta, r)``;
    pass them explicitly to study other regimes (for example ``eta = 0``).
    """
    if int(q) != q or q < 1 or int(k) != k or k < 1:
        raise ValueError("q and k must be positive integers")
    if pass_valid is None:
        pass_valid = 1.0 - p_false_reject(eta, r)
    if pass_corrupt is None:
        pass_corrupt = p_accept_corrupted(eta, r)
    err_zero, err_one = _vote_errors(int(q), pass_valid, pass_corrupt)
    isolated = 0.5 * (err_zero + err_one)
    still_valid = (1.0 - isolated) ** np.arange(2 * k)
    position_error = still_valid * isolated + (1.0 - still_valid) * 0.5
    position_error.flags.writeable = False
    return AttackErrorProfile(
        position_error=position_error,
        isolated_error=isolated,
        full_key_success=(1.0 - isolated) ** (2 * k),
    )


def binary_entropy(p: float) -> float:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    if p in (0.0, 1.0):
        return 0.0
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def _xlog2x(p: np.ndarray) -> np.ndarray:
    out = np.zeros_like(p, dtype=float)
    nz = p > 0
    out[nz] = p[nz] * np.log2(p[nz])
    return out


def _check_distribution(dist, what: str) -> np.ndarray:
    arr = np.asarray(dist, dtype=float)
    if arr.size == 0:
        raise ValueError(f"{what} is empty")
    if np.any(arr < 0) or not np.all(np.isfinite(arr)):
        raise ValueError(f"{what} has negative or non-finite entries")
    if abs(arr.sum() - 1.0) > _NORM_TOL:
        raise ValueError(f"{what} sums to {arr.sum()}, not 1")
    return arr


def entropy(dist) -> float:
    p = _check_distribution(dist, "distribution").ravel()
    return float(max(0.0, -_xlog2x(p).sum()))


def conditional_entropy(joint) -> float:
    """Equivocation ``H(X|Y)`` for ``joint[x, y]``."""
    pxy = _check_distribution(joint, "joint distribution")
    if pxy.ndim != 2:
        raise ValueError("joint distribution must be a 2-D table indexed [x, y]")
    py = pxy.sum(axis=0)
    h = 0.0
    for xi, yi in zip(*np.nonzero(pxy)):
        h -= pxy[xi, yi] * (math.log2(pxy[xi, yi]) - math.log2(py[yi]))
    return max(0.0, h)


def mutual_information(joint) -> float:
    pxy = _check_distribution(joint, "joint distribution")
    if pxy.ndim != 2:
        raise ValueError("joint distribution must be a 2-D table indexed [x, y]")
    px = pxy.sum(axis=1)
    py = pxy.sum(axis=0)
    total = 0.0
    for xi, yi in zip(*np.nonzero(pxy)):
        # log differences avoid underflow in px * py
        total += pxy[xi, yi] * (math.log2(pxy[xi, yi]) - math.log2(px[xi]) - math.log2(py[yi]))
    return max(0.0, total)


def bsc_joint(crossover: float, prior_one: float = 0.5) -> np.ndarray:
    """Joint table of (true bit, received bit) through a binary symmetric channel."""
    if not 0.0 <= crossover <= 1.0 or not 0.0 <= prior_one <= 1.0:
        raise ValueError("probabilities must lie in [0, 1]")
    prior = np.array([1 - prior_one, prior_one])
    channel = np.array([[1 - crossover, crossover], [crossover, 1 - crossover]])
    return prior[:, None] * channel


@dataclass(frozen=True)
class LeakageReport:
    eta: float
    r: int
    q: int
    p: float
    p_e: float
    equivocation: float
    mutual_info: float

    def as_dict(self) -> dict:
        return {f: getattr(self, f) for f in self.__dataclass_fields__}


def leakage_report(eta: float, r: int, q: int) -> LeakageReport:
    """One table row: key bit seen through a BSC with crossover ``P_e(q)``."""
    p = single_query_error_prob(eta, r)
    p_e = p_error(q, p)
    h = binary_entropy(p_e)
    return LeakageReport(eta=eta, r=r, q=q, p=p, p_e=p_e, equivocation=h, mutual_info=1.0 - h)


def published_tables(params=TABLE_PARAMS, qs=TABLE_QS) -> list[LeakageReport]:
    return [leakage_report(eta, r, q) for eta, r in params for q in qs]


@dataclass(frozen=True)
class SurfaceGrid:
    eta_axis: tuple[float, ...]
    r_axis: tuple[int, ...]
    values: np.ndarray

    def cells(self):
        for i, eta in enumerate(self.eta_axis):
            for j, r in enumerate(self.r_axis):
                yield eta, r, float(self.values[i, j])


def surface(eta_axis, r_axis) -> SurfaceGrid:
    """Single-query error ``p(eta, r)`` over a grid, rows indexed by ``eta``."""
    etas = tuple(float(e) for e in eta_axis)
    rs = tuple(int(r) for r in r_axis)
    if not etas or not rs:
        raise ValueError("axes must be non-empty")
    values = np.array([[single_query_error_prob(e, r) for r in rs] for e in etas])
    values.flags.writeable = False
    return SurfaceGrid(eta_axis=etas, r_axis=rs, values=values)
