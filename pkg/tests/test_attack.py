from fractions import Fraction

import numpy as np
import pytest

from hbfault.analytics import attack_error_profile, exact_bit_error
from hbfault.attack import AttackConfig, break_hb_plus, majority_decide
from hbfault.faultsim import FaultableTag
from hbfault.hbcore import KeyPair, ProtocolParams, RandomSource, bits_to_str

from oracles import attack_outcome_dp, pfa_exact, pfr_exact


class TestMajority:
    @pytest.mark.parametrize("counter, q, bit", [(7, 7, 0), (0, 7, 1), (2, 4, 0), (1, 4, 1), (3, 7, 1), (4, 7, 0)])
    def test_examples(self, counter, q, bit):
        assert majority_decide(counter, q) == bit

    def test_range(self):
        with pytest.raises(ValueError):
            majority_decide(8, 7)


def run(keys, eta, r, q, seed=0):
    tag = FaultableTag(keys, eta)
    result = break_hb_plus(tag, keys, AttackConfig(q=q, params=ProtocolParams(keys.k, r, eta)), RandomSource(seed))
    return tag, result


class TestBreak:
    def test_noiseless_recovers_key(self):
        for seed in range(20):
            keys = KeyPair.random(8, RandomSource(seed))
            tag, res = run(keys, 0.0, 40, 1, seed)
            # only a 2^-40 false accept of a corrupted tag could mislead
            assert res.keys == keys
            assert tag.is_pristine()

    def test_all_zero_key(self):
        keys = KeyPair("0" * 6, "0" * 6)
        tag, res = run(keys, 0.0, 30, 3)
        assert bits_to_str(res.extracted) == "0" * 12
        assert res.restoring_faults == 0
        assert res.faults_used == 12

    def test_counters(self):
        keys = KeyPair.random(5, RandomSource(1))
        tag, res = run(keys, 0.125, 40, 3, seed=4)
        assert res.auths_used == 2 * 5 * 3
        assert res.first_pass_faults == 10
        assert res.faults_used == 10 + int(res.extracted.sum())
        assert res.faults_used == tag.fault_count
        assert np.all((0 <= res.votes) & (res.votes <= 3))

    def test_memory_ends_as_extracted(self):
        for seed in range(10):
            keys = KeyPair.random(6, RandomSource(seed))
            tag, res = run(keys, 0.25, 12, 3, seed)
            assert np.array_equal(tag.memory.w, res.extracted)

    def test_decisions_follow_votes(self):
        keys = KeyPair.random(6, RandomSource(3))
        _, res = run(keys, 0.25, 12, 4, seed=3)
        expected = [majority_decide(int(v), 4) for v in res.votes]
        assert list(res.extracted) == expected

    def test_reproducible(self):
        keys = KeyPair.random(10, RandomSource(7))
        _, a = run(keys, 0.125, 40, 5, seed=11)
        _, b = run(keys, 0.125, 40, 5, seed=11)
        assert np.array_equal(a.extracted, b.extracted) and np.array_equal(a.votes, b.votes)

    def test_shape_check(self):
        keys = KeyPair.random(4, RandomSource())
        tag = FaultableTag(keys, 0.1)
        with pytest.raises(ValueError):
            break_hb_plus(tag, keys, AttackConfig(q=3, params=ProtocolParams(5, 10, 0.1)), RandomSource())

    def test_bad_q(self):
        with pytest.raises(ValueError):
            AttackConfig(q=0, params=ProtocolParams(4, 10, 0.1))


class TestErrorProfileOracle:
    """The cascade model against an exact enumeration of memory states."""

    @pytest.mark.parametrize("k, q", [(1, 1), (1, 3), (2, 1), (2, 2), (2, 3)])
    def test_dp_agreement(self, k, q):
        pass_valid = Fraction(3, 5)
        pass_corrupt = Fraction(1, 7)
        exp_errors, p_perfect = attack_outcome_dp(k, q, pass_valid, pass_corrupt)
        prof = attack_error_profile(0.1, 10, q, k, pass_valid=float(pass_valid), pass_corrupt=float(pass_corrupt))
        assert prof.expected_bit_errors == pytest.approx(float(exp_errors), rel=1e-12)
        assert prof.full_key_success == pytest.approx(float(p_perfect), rel=1e-12)

    def test_dp_with_protocol_rates(self):
        eta, r = 0.25, 8
        pv = 1 - pfr_exact(eta, r)
        pc = pfa_exact(eta, r)
        exp_errors, p_perfect = attack_outcome_dp(2, 3, pv, pc)
        prof = attack_error_profile(eta, r, 3, 2)
        assert prof.expected_bit_errors == pytest.approx(float(exp_errors), rel=1e-12)
        assert prof.full_key_success == pytest.approx(float(p_perfect), rel=1e-12)
        assert prof.isolated_error == pytest.approx(exact_bit_error(eta, r, 3), rel=1e-14)

    def test_monte_carlo_small_r(self):
        # r = 8 makes both error types frequent enough to see in a quick campaign
        eta, r, q, k = 0.25, 8, 3, 3
        prof = attack_error_profile(eta, r, q, k)
        trials = 400
        errors = np.zeros(2 * k)
        for t in range(trials):
            rng = RandomSource(12345, (t,))
            keys = KeyPair.random(k, rng)
            tag = FaultableTag(keys, eta)
            res = break_hb_plus(tag, keys, AttackConfig(q, ProtocolParams(k, r, eta)), rng.child(0))
            errors += res.extracted != keys.concatenated()
        rates = errors / trials
        sigma = np.sqrt(prof.position_error * (1 - prof.position_error) / trials)
        assert np.all(np.abs(rates - prof.position_error) <= 4 * sigma + 1e-12)
