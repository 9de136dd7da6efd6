"""HB+ tag/reader round logic and the closed-form acceptance probabilities.

Bit strings are 1-D ``numpy.uint8`` arrays holding 0/1 values, index 0 first.
Text renderings put index 0 leftmost, so ``"1010"`` has bit 1 (1-based) set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ProtocolParams",
    "acceptance_threshold",
    "KeyPair",
    "RoundRecord",
    "AuthTranscript",
    "RandomSource",
    "as_bits",
    "bits_to_str",
    "inner_product",
    "tag_respond",
    "reader_expect",
    "authenticate",
    "count_mismatches",
    "binomial_range",
    "p_false_reject",
    "p_false_accept",
    "round_mismatch_prob",
    "p_accept_corrupted",
]


def as_bits(value, length: int | None = None) -> np.ndarray:
    """Coerce a ``"0101"`` string, a sequence of 0/1 or an array into a bit array."""
    if isinstance(value, str):
        if value and set(value) - {"0", "1"}:
            raise ValueError(f"not a bit string: {value!r}")
        arr = np.frombuffer(value.encode("ascii"), dtype=np.uint8) - ord("0")
    else:
        arr = np.asarray(value)
        if arr.ndim != 1:
            raise ValueError("bit strings must be one-dimensional")
        if arr.size and not np.all((arr == 0) | (arr == 1)):
            raise ValueError("bit strings may only contain 0 and 1")
        arr = arr.astype(np.uint8)
    if length is not None and arr.size != length:
        raise ValueError(f"expected {length} bits, got {arr.size}")
    return arr


def bits_to_str(bits) -> str:
    return "".join("1" if b else "0" for b in np.asarray(bits).ravel())


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = arr.copy()
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class ProtocolParams:
    """Key length ``k``, round count ``r`` and noise level ``eta``.

    ``eta = 0`` is allowed here so noiseless sessions can be simulated; the
    analytic probability functions still require ``0 < eta < 1/2``.
    """

    k: int
    r: int
    eta: float

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"k must be a positive integer, got {self.k}")
        if int(self.r) != self.r or self.r < 1:
            raise ValueError(f"r must be a positive integer, got {self.r}")
        if not 0.0 <= self.eta < 0.5:
            raise ValueError(f"eta must lie in [0, 1/2), got {self.eta}")

    @property
    def t(self) -> int:
        """Largest mismatch count the reader still accepts."""
        return acceptance_threshold(self.eta, self.r)


def acceptance_threshold(eta: float, r: int) -> int:
    # exact floor of eta*r; guards against 0.1*30 = 3.0000000000000004 style drift
    t = math.floor(eta * r)
    if math.isclose(eta * r, t + 1, rel_tol=0.0, abs_tol=1e-9):
        t += 1
    return t


@dataclass(frozen=True)
class KeyPair:
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = as_bits(self.x)
        y = as_bits(self.y)
        if x.size != y.size or x.size == 0:
            raise ValueError(f"key halves must have equal non-zero length, got {x.size} and {y.size}")
        object.__setattr__(self, "x", _frozen(x))
        object.__setattr__(self, "y", _frozen(y))

    @property
    def k(self) -> int:
        return int(self.x.size)

    @classmethod
    def from_concatenated(cls, w) -> "KeyPair":
        w = as_bits(w)
        if w.size % 2:
            raise ValueError("concatenated key must have even length")
        half = w.size // 2
        return cls(w[:half], w[half:])

    @classmethod
    def random(cls, k: int, rng: "RandomSource") -> "KeyPair":
        return cls.from_concatenated(rng.key_bits(2 * k))

    def concatenated(self) -> np.ndarray:
        return np.concatenate([self.x, self.y])

    def __eq__(self, other):
        if not isinstance(other, KeyPair):
            return NotImplemented
        return np.array_equal(self.x, other.x) and np.array_equal(self.y, other.y)

    def __hash__(self):
        return hash((self.x.tobytes(), self.y.tobytes()))

    def __repr__(self):
        return f"KeyPair(x={bits_to_str(self.x)!r}, y={bits_to_str(self.y)!r})"


class RandomSource:
    """Deterministic randomness for one simulation session.

    A source is addressed by ``(seed, path)``.  Three independent streams
    serve the reader's challenges, the tag's blinding vectors and the tag's
    noise bits; a fourth serves key material.  ``child(i)`` derives a
    substream from the address alone, so children can be created in any order
    or in other processes and still see the same bits.

    Each stream draws one double per bit, so drawing ``n`` sessions in one
    batch consumes the streams exactly like ``n`` sequential sessions.
    """

    _STREAMS = ("challenge", "blinding", "noise", "key")
    # stream ids live above any child index so the two never share a spawn key
    _STREAM_BASE = 2**32

    def __init__(self, seed: int = 0, path: tuple[int, ...] = ()):
        seed = int(seed)
        if not 0 <= seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        self.seed = seed
        self.path = tuple(int(p) for p in path)
        self._gens: dict[str, np.random.Generator] = {}

    def _gen(self, stream: str) -> np.random.Generator:
        gen = self._gens.get(stream)
        if gen is None:
            key = self.path + (self._STREAM_BASE + self._STREAMS.index(stream),)
            gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence(self.seed, spawn_key=key)))
            self._gens[stream] = gen
        return gen

    def child(self, index: int) -> "RandomSource":
        if not 0 <= index < self._STREAM_BASE:
            raise ValueError("child index must lie in [0, 2**32)")
        return RandomSource(self.seed, self.path + (int(index),))

    def __repr__(self):
        return f"RandomSource(seed={self.seed}, path={self.path})"

    def _bits(self, stream: str, shape) -> np.ndarray:
        return (self._gen(stream).random(shape) < 0.5).astype(np.uint8)

    def challenge_bits(self, shape) -> np.ndarray:
        return self._bits("challenge", shape)

    def blinding_bits(self, shape) -> np.ndarray:
        return self._bits("blinding", shape)

    def noise_bits(self, shape, eta: float) -> np.ndarray:
        return (self._gen("noise").random(shape) < eta).astype(np.uint8)

    def key_bits(self, n: int) -> np.ndarray:
        return self._bits("key", n)

    def uniform(self, size=None):
        return self._gen("key").random(size)

    def integers(self, low: int, high: int, size=None):
        return self._gen("key").integers(low, high, size=size)


def _parity(a: np.ndarray, x: np.ndarray) -> np.ndarray:
    # uint8 accumulation wraps mod 256, which keeps the low bit exact
    return (a @ x) & np.uint8(1)


def inner_product(a, x) -> int:
    """XOR over positions of ``a[j] AND x[j]``."""
    a = as_bits(a)
    x = as_bits(x)
    if a.size != x.size:
        raise ValueError(f"length mismatch: {a.size} != {x.size}")
    return int(_parity(a, x))


def tag_respond(keys: KeyPair, a, rng: RandomSource, eta: float) -> tuple[np.ndarray, int, int]:
    """One tag round: draw blinding ``b`` and noise ``v`` and return ``(b, z, v)``."""
    a = as_bits(a, keys.k)
    if not 0.0 <= eta < 0.5:
        raise ValueError(f"eta must lie in [0, 1/2), got {eta}")
    b = rng.blinding_bits(keys.k)
    v = int(rng.noise_bits(1, eta)[0])
    z = int(_parity(a, keys.x)) ^ int(_parity(b, keys.y)) ^ v
    return b, z, v


def reader_expect(keys: KeyPair, a, b) -> int:
    a = as_bits(a, keys.k)
    b = as_bits(b, keys.k)
    return int(_parity(a, keys.x)) ^ int(_parity(b, keys.y))


@dataclass(frozen=True)
class RoundRecord:
    a: np.ndarray
    b: np.ndarray
    z: int
    z_star: int
    noise_bit: int


@dataclass(frozen=True)
class AuthTranscript:
    rounds: tuple[RoundRecord, ...]
    mismatches: int
    accepted: bool
    threshold: int = field(default=0)

    def __post_init__(self):
        counted = sum(rec.z != rec.z_star for rec in self.rounds)
        if counted != self.mismatches:
            raise ValueError("mismatch count disagrees with the recorded rounds")
        if self.accepted != (self.mismatches <= self.threshold):
            raise ValueError("accept flag disagrees with the threshold rule")


def _session_arrays(tag_keys: KeyPair, reader_keys: KeyPair, params: ProtocolParams,
                    rng: RandomSource, sessions: int | None):
    k, r = params.k, params.r
    if tag_keys.k != k or reader_keys.k != k:
        raise ValueError(f"key length must be k={k}")
    shape = (r, k) if sessions is None else (sessions, r, k)
    a = rng.challenge_bits(shape)
    b = rng.blinding_bits(shape)
    v = rng.noise_bits(shape[:-1], params.eta)
    z = _parity(a, tag_keys.x) ^ _parity(b, tag_keys.y) ^ v
    z_star = _parity(a, reader_keys.x) ^ _parity(b, reader_keys.y)
    return a, b, v, z, z_star


def authenticate(tag_keys: KeyPair, reader_keys: KeyPair, params: ProtocolParams,
                 rng: RandomSource) -> AuthTranscript:
    """Run one ``r``-round HB+ session and return the full transcript.

    The tag answers with ``tag_keys`` and the reader checks against
    ``reader_keys``; they differ when the tag's memory has been faulted.
    """
    a, b, v, z, z_star = _session_arrays(tag_keys, reader_keys, params, rng, None)
    rounds = tuple(
        RoundRecord(a=_frozen(a[i]), b=_frozen(b[i]), z=int(z[i]), z_star=int(z_star[i]),
                    noise_bit=int(v[i]))
        for i in range(params.r)
    )
    mismatches = int(np.count_nonzero(z != z_star))
    t = params.t
    return AuthTranscript(rounds=rounds, mismatches=mismatches, accepted=mismatches <= t, threshold=t)


def count_mismatches(tag_keys: KeyPair, reader_keys: KeyPair, params: ProtocolParams,
                     rng: RandomSource, sessions: int | None = None):
    """Mismatch counts only, without building round records.

    Consumes ``rng`` exactly as ``sessions`` back-to-back calls to
    :func:`authenticate` would.  Returns an int, or an array when
    ``sessions`` is given.
    """
    *_, z, z_star = _session_arrays(tag_keys, reader_keys, params, rng, sessions)
    counts = np.count_nonzero(z != z_star, axis=-1)
    return int(counts) if sessions is None else counts


# ---------------------------------------------------------------------------
# binomial tails
# ---------------------------------------------------------------------------

def binomial_range(n: int, p: float, lo: int, hi: int) -> float:
    """``P(lo <= Bin(n, p) <= hi)`` summed term by term in log space.

    Only the requested terms are summed, so small tails keep full relative
    precision instead of being formed as ``1 - (large sum)``.
    """
    if n < 0 or not 0.0 <= p <= 1.0:
        raise ValueError("need n >= 0 and 0 <= p <= 1")
    lo = max(int(lo), 0)
    hi = min(int(hi), n)
    if lo > hi:
        return 0.0
    if p == 0.0:
        return 1.0 if lo == 0 else 0.0
    if p == 1.0:
        return 1.0 if hi == n else 0.0
    i = np.arange(lo, hi + 1)
    log_comb = np.array([math.log(math.comb(n, j)) for j in range(lo, hi + 1)])
    log_terms = log_comb + i * math.log(p) + (n - i) * math.log1p(-p)
    top = log_terms.max()
    return float(min(1.0, math.exp(top) * math.fsum(np.exp(log_terms - top))))


def _check_analytic(eta: float, r: int):
    if not 0.0 < eta < 0.5:
        raise ValueError(f"eta must lie in (0, 1/2), got {eta}")
    if int(r) != r or r < 1:
        raise ValueError(f"r must be a positive integer, got {r}")


def p_false_reject(eta: float, r: int) -> float:
    """Probability an honest tag makes more than ``floor(eta*r)`` mismatches."""
    _check_analytic(eta, r)
    return binomial_range(r, eta, acceptance_threshold(eta, r) + 1, r)


def p_false_accept(eta: float, r: int) -> float:
    """Probability a uniformly random answerer stays within the threshold."""
    _check_analytic(eta, r)
    return binomial_range(r, 0.5, 0, acceptance_threshold(eta, r))


def round_mismatch_prob(eta: float, differing_bits: int) -> float:
    """Per-round mismatch probability for a tag whose key differs in ``differing_bits`` places.

    The key difference contributes the parity of a uniform challenge (or
    blinding) vector over the differing positions, which is a fair coin as soon
    as one position differs; the tag's noise is XORed on top.
    """
    if differing_bits < 0:
        raise ValueError("differing_bits must be non-negative")
    if not 0.0 <= eta <= 1.0:
        raise ValueError("eta must be a probability")
    delta = 0.0 if differing_bits == 0 else 0.5
    return eta * (1 - delta) + (1 - eta) * delta


def p_accept_corrupted(eta: float, r: int, differing_bits: int = 1) -> float:
    """Exact acceptance probability of a tag holding a corrupted key."""
    _check_analytic(eta, r)
    if differing_bits < 1:
        raise ValueError("a corrupted key differs in at least one bit")
    return binomial_range(r, round_mismatch_prob(eta, differing_bits), 0, acceptance_threshold(eta, r))
