"""Experiment orchestration: Monte Carlo campaigns and result serialization.

Every trial draws from ``RandomSource(seed).child(trial_index)``, so a
campaign gives the same numbers whether trials run sequentially or in a
process pool.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import analytics
from .attack import AttackConfig, break_hb_plus
from .faultsim import FaultableTag
from .hbcore import (
    KeyPair,
    ProtocolParams,
    RandomSource,
    count_mismatches,
    p_accept_corrupted,
    p_false_accept,
    p_false_reject,
)

log = logging.getLogger(__name__)

MODES = ("auth-sim", "attack", "tables", "surface", "leakage")
TABLE_COLUMNS = ("eta", "r", "q", "p", "p_e", "equivocation", "mutual_info")


@dataclass
class ExperimentSpec:
    mode: str
    params: ProtocolParams
    q: int = 19
    trials: int = 100
    seed: int = 0
    output_format: str = "csv"
    output_path: str | None = None
    paper_match: bool = False
    jobs: int = 1
    eta_axis: tuple[float, ...] = ()
    r_axis: tuple[int, ...] = ()
    custom_cell: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.q < 1:
            raise ValueError("q must be at least 1")
        if self.output_format not in ("csv", "json"):
            raise ValueError("output format must be csv or json")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


# ---------------------------------------------------------------------------
# attack campaign
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrialOutcome:
    index: int
    bit_errors: int
    faults: int
    first_pass_faults: int
    auths: int
    tag_valid_after: bool


@dataclass
class CampaignSummary:
    k: int
    r: int
    eta: float
    q: int
    trials: int
    seed: int
    per_bit_error_rate: float
    full_key_success_rate: float
    predicted_per_bit_error: float
    isolated_per_bit_error: float
    exact_per_bit_error: float
    predicted_full_key_success: float
    exact_full_key_success: float
    post_attack_tag_valid_rate: float
    faults_total: int
    first_pass_faults_total: int
    auths_total: int
    elapsed: float = field(default=0.0, compare=False)

    def as_dict(self, with_elapsed: bool = False) -> dict:
        d = {f: getattr(self, f) for f in self.__dataclass_fields__ if f != "elapsed"}
        if with_elapsed:
            d["elapsed"] = self.elapsed
        return d


def _run_attack_trial(args) -> TrialOutcome:
    params, q, seed, index = args
    trial_rng = RandomSource(seed, (index,))
    truth = KeyPair.random(params.k, trial_rng)
    tag = FaultableTag(truth, params.eta)
    result = break_hb_plus(tag, truth, AttackConfig(q=q, params=params), trial_rng.child(0))
    return TrialOutcome(
        index=index,
        bit_errors=result.bit_errors(truth),
        faults=result.faults_used,
        first_pass_faults=result.first_pass_faults,
        auths=result.auths_used,
        tag_valid_after=tag.is_pristine(),
    )


def _map_trials(fn, jobs: list, workers: int) -> list:
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(fn, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        out = [fn(j) for j in jobs]
    return sorted(out, key=lambda o: o.index)


def run_attack_campaign(params: ProtocolParams, q: int, trials: int, seed: int,
                        jobs: int = 1) -> CampaignSummary:
    """Plant a fresh uniform key per trial, attack it and tally the outcome.

    Three per-bit error predictions are reported next to the empirical rate:
    the averaged-vote model (``predicted_*``), the exact error of a bit read
    from a still-valid tag (``isolated_*``), and the exact mean over all
    positions including the corruption cascade after a first misread
    (``exact_*``).
    """
    start = time.perf_counter()
    outcomes = _map_trials(_run_attack_trial, [(params, q, seed, i) for i in range(trials)], jobs)
    elapsed = time.perf_counter() - start
    n_bits = 2 * params.k
    errors = sum(o.bit_errors for o in outcomes)
    if params.eta > 0:
        model = analytics.p_error(q, analytics.single_query_error_prob(params.eta, params.r))
        profile = analytics.attack_error_profile(params.eta, params.r, q, params.k)
    else:
        # noiseless tag: honest sessions always pass, corrupted ones with 2^-r
        profile = analytics.attack_error_profile(
            params.eta, params.r, q, params.k, pass_valid=1.0, pass_corrupt=0.5 ** params.r)
        model = profile.isolated_error
    return CampaignSummary(
        k=params.k, r=params.r, eta=params.eta, q=q, trials=trials, seed=seed,
        per_bit_error_rate=errors / (trials * n_bits),
        full_key_success_rate=sum(o.bit_errors == 0 for o in outcomes) / trials,
        predicted_per_bit_error=model,
        isolated_per_bit_error=profile.isolated_error,
        exact_per_bit_error=profile.per_bit_error,
        predicted_full_key_success=(1 - model) ** n_bits,
        exact_full_key_success=profile.full_key_success,
        post_attack_tag_valid_rate=sum(o.tag_valid_after for o in outcomes) / trials,
        faults_total=sum(o.faults for o in outcomes),
        first_pass_faults_total=sum(o.first_pass_faults for o in outcomes),
        auths_total=sum(o.auths for o in outcomes),
        elapsed=elapsed,
    )


# ---------------------------------------------------------------------------
# authentication calibration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _SessionTally:
    index: int
    honest_rejected: int
    corrupted_accepted: int
    sessions: int


_CHUNK = 1000


def _run_session_chunk(args) -> _SessionTally:
    params, seed, index, sessions = args
    chunk_rng = RandomSource(seed, (index,))
    reader = KeyPair.random(params.k, chunk_rng)
    honest = count_mismatches(reader, reader, params, chunk_rng.child(0), sessions)
    w = reader.concatenated()
    w[int(chunk_rng.integers(0, w.size))] ^= 1
    corrupted = count_mismatches(KeyPair.from_concatenated(w), reader, params, chunk_rng.child(1), sessions)
    t = params.t
    return _SessionTally(index, int(np.count_nonzero(honest > t)), int(np.count_nonzero(corrupted <= t)), sessions)


@dataclass
class AuthSimSummary:
    k: int
    r: int
    eta: float
    trials: int
    seed: int
    threshold: int
    honest_rejection_rate: float
    p_false_reject: float
    honest_rejection_sigma: float
    corrupted_acceptance_rate: float
    p_false_accept: float
    exact_corrupted_accept: float

    def as_dict(self) -> dict:
        return {f: getattr(self, f) for f in self.__dataclass_fields__}


def run_auth_sim(params: ProtocolParams, trials: int, seed: int, jobs: int = 1) -> AuthSimSummary:
    """``trials`` honest sessions and ``trials`` one-bit-corrupted sessions.

    Sessions are grouped in chunks of 1000 sharing one random key pair; a
    chunk's corrupted tag differs from its reader in one random bit.
    """
    sizes = [min(_CHUNK, trials - s) for s in range(0, trials, _CHUNK)]
    tallies = _map_trials(_run_session_chunk, [(params, seed, i, n) for i, n in enumerate(sizes)], jobs)
    rejected = sum(t.honest_rejected for t in tallies)
    accepted = sum(t.corrupted_accepted for t in tallies)
    if params.eta > 0:
        pfr = p_false_reject(params.eta, params.r)
        pfa = p_false_accept(params.eta, params.r)
        exact = p_accept_corrupted(params.eta, params.r)
    else:
        pfr, pfa = 0.0, 0.5 ** params.r
        exact = pfa
    return AuthSimSummary(
        k=params.k, r=params.r, eta=params.eta, trials=trials, seed=seed, threshold=params.t,
        honest_rejection_rate=rejected / trials,
        p_false_reject=pfr,
        honest_rejection_sigma=math.sqrt(pfr * (1 - pfr) / trials),
        corrupted_acceptance_rate=accepted / trials,
        p_false_accept=pfa,
        exact_corrupted_accept=exact,
    )


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def format_number(value, paper_match: bool = False) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"refusing to serialize non-finite value {value}")
    if paper_match:
        return f"{value:.4f}"
    return f"{value:.6g}"


def _json_value(value, paper_match: bool):
    if isinstance(value, (int, np.integer)) and not isinstance(value, (bool, np.bool_)):
        return int(value)
    return float(format_number(value, paper_match))


def serialize(rows: list[dict], fmt: str, paper_match: bool = False) -> str:
    """Render rows sharing one column set as CSV (header + LF lines) or JSON."""
    if not rows:
        raise ValueError("nothing to serialize")
    columns = list(rows[0])
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n", quoting=csv.QUOTE_MINIMAL)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_number(row[c], paper_match) for c in columns])
        return buf.getvalue()
    if fmt == "json":
        data = [{c: _json_value(row[c], paper_match) for c in columns} for row in rows]
        return json.dumps(data, indent=2) + "\n"
    raise ValueError(f"unknown format {fmt!r}")


def table_rows(reports) -> list[dict]:
    return [{c: getattr(rep, c) for c in TABLE_COLUMNS} for rep in reports]


def surface_rows(grid: analytics.SurfaceGrid) -> list[dict]:
    return [{"eta": eta, "r": r, "p": p} for eta, r, p in grid.cells()]


def run_experiment(spec: ExperimentSpec) -> str:
    """Execute ``spec`` and return the serialized output text."""
    p = spec.params
    if spec.mode == "tables":
        if spec.custom_cell:
            reports = [analytics.leakage_report(p.eta, p.r, spec.q)]
        else:
            reports = analytics.published_tables()
        rows = table_rows(reports)
    elif spec.mode == "leakage":
        rows = table_rows([analytics.leakage_report(p.eta, p.r, spec.q)])
    elif spec.mode == "surface":
        rows = surface_rows(analytics.surface(spec.eta_axis, spec.r_axis))
    elif spec.mode == "attack":
        summary = run_attack_campaign(p, spec.q, spec.trials, spec.seed, spec.jobs)
        log.info("attack campaign finished in %.3f s", summary.elapsed)
        rows = [summary.as_dict()]
    else:
        rows = [run_auth_sim(p, spec.trials, spec.seed, spec.jobs).as_dict()]
    return serialize(rows, spec.output_format, spec.paper_match)
