import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from hbfault.analytics import (
    TABLE_PARAMS,
    TABLE_QS,
    attack_error_profile,
    binary_entropy,
    bsc_joint,
    conditional_entropy,
    entropy,
    exact_bit_error,
    leakage_report,
    mutual_information,
    p_error,
    published_tables,
    single_query_error_prob,
    surface,
)

from oracles import p_error_exact

# published single-query error probabilities, one per parameter set
CAPTIONS = {(0.125, 40): 0.1919, (0.125, 80): 0.2084, (0.25, 80): 0.2201}


class TestSingleQuery:
    @pytest.mark.parametrize("params, expected", CAPTIONS.items())
    def test_captions(self, params, expected):
        assert single_query_error_prob(*params) == pytest.approx(expected, abs=5e-4)

    def test_domain(self):
        with pytest.raises(ValueError):
            single_query_error_prob(0.5, 40)


class TestPError:
    @pytest.mark.parametrize("p", [0.0, 0.01, 0.1919, 0.5])
    def test_single_query_collapse(self, p):
        assert p_error(1, p) == pytest.approx(p, abs=1e-16)

    def test_published_rows(self):
        assert p_error(7, 0.1919) == pytest.approx(0.0289, abs=5e-4)
        assert p_error(19, 0.2201) == pytest.approx(0.0033, abs=5e-4)

    @pytest.mark.parametrize("q, p", [(0, 0.1), (3, 0.6), (3, -0.1), (2.5, 0.1)])
    def test_domain(self, q, p):
        with pytest.raises(ValueError):
            p_error(q, p)

    def test_half_is_fixed_point_for_odd_q(self):
        for q in range(1, 42, 2):
            assert p_error(q, 0.5) == pytest.approx(0.5, abs=1e-14)

    @pytest.mark.parametrize("p", [0.01, 0.1, 0.1919, 0.3, 0.45])
    def test_odd_q_monotone_to_zero(self, p):
        values = [p_error(q, p) for q in range(1, 42, 2)]
        assert all(b <= a for a, b in zip(values, values[1:]))
        assert p_error(401, p) < values[-1]
        assert p_error(2001, p) < 1e-3

    @settings(max_examples=200)
    @given(q=st.integers(1, 25), p=st.just(0.0) | st.floats(1e-6, 0.5))
    def test_rational_oracle(self, q, p):
        want = p_error_exact(q, Fraction(p))
        got = p_error(q, p)
        if want == 0:
            assert got == 0.0
        else:
            assert abs(Fraction(got) - want) < Fraction(1, 10**12) * want


class TestEntropy:
    def test_binary(self):
        assert binary_entropy(0.5) == 1.0
        assert binary_entropy(0.0) == 0.0
        assert binary_entropy(1.0) == 0.0
        assert binary_entropy(0.0384) == pytest.approx(0.2348, abs=5e-4)
        with pytest.raises(ValueError):
            binary_entropy(1.5)

    def test_entropy_examples(self):
        assert entropy([0.25] * 4) == pytest.approx(2.0, abs=1e-15)
        assert entropy([0, 1, 0]) == 0.0
        assert entropy([0.1919, 0.8081]) == pytest.approx(binary_entropy(0.1919), abs=1e-15)

    @pytest.mark.parametrize("bad", [[0.5, 0.6], [-0.1, 1.1], [], [np.nan, 1.0]])
    def test_entropy_rejects(self, bad):
        with pytest.raises(ValueError):
            entropy(bad)

    @given(arrays(float, st.integers(1, 12), elements=st.floats(0, 1)).filter(lambda a: a.sum() > 1e-3))
    def test_entropy_bounds(self, raw):
        p = raw / raw.sum()
        h = entropy(p)
        assert -1e-12 <= h <= math.log2(len(p)) + 1e-12


class TestMutualInformation:
    def test_independent(self):
        joint = np.outer([0.3, 0.7], [0.2, 0.5, 0.3])
        assert mutual_information(joint) == pytest.approx(0.0, abs=1e-14)

    def test_copy(self):
        assert mutual_information([[0.5, 0.0], [0.0, 0.5]]) == pytest.approx(1.0, abs=1e-15)

    def test_bsc_table_value(self):
        assert mutual_information(bsc_joint(0.0384)) == pytest.approx(0.7651, abs=5e-4)

    def test_rejects_unnormalized(self):
        with pytest.raises(ValueError):
            mutual_information([[0.5, 0.5], [0.5, 0.5]])
        with pytest.raises(ValueError):
            mutual_information([0.5, 0.5])

    @settings(max_examples=200)
    @given(arrays(float, st.tuples(st.integers(1, 5), st.integers(1, 5)), elements=st.floats(0, 1))
           .filter(lambda a: a.sum() > 1e-3))
    def test_bounds_and_identity(self, raw):
        joint = raw / raw.sum()
        hx = entropy(joint.sum(axis=1))
        hxy = conditional_entropy(joint)
        i = mutual_information(joint)
        assert -1e-12 <= hxy <= hx + 1e-12
        assert -1e-12 <= i <= hx + 1e-12
        assert i == pytest.approx(hx - hxy, abs=1e-10)

    @given(st.floats(0.0, 1.0))
    def test_bsc_equivalence(self, crossover):
        assert mutual_information(bsc_joint(crossover)) == pytest.approx(1 - binary_entropy(crossover), abs=1e-12)


class TestLeakageReport:
    @pytest.mark.parametrize("args, p_e, h, i", [
        ((0.125, 80, 11), 0.0143, 0.1080, 0.8919),
        ((0.25, 80, 17), 0.0051, 0.0465, 0.9535),
    ])
    def test_rows(self, args, p_e, h, i):
        rep = leakage_report(*args)
        assert rep.p_e == pytest.approx(p_e, abs=1e-3)
        assert rep.equivocation == pytest.approx(h, abs=1e-3)
        assert rep.mutual_info == pytest.approx(i, abs=1e-3)

    def test_table_one_row_17(self):
        rep = leakage_report(0.125, 40, 17)
        assert rep.p_e == pytest.approx(0.0019, abs=1e-3)
        assert rep.mutual_info == pytest.approx(0.9800, abs=1e-3)
        assert rep.equivocation == pytest.approx(1 - rep.mutual_info, abs=1e-15)

    @settings(max_examples=150)
    @given(eta=st.floats(0.01, 0.49), r=st.integers(1, 200), q=st.integers(1, 41))
    def test_invariants(self, eta, r, q):
        rep = leakage_report(eta, r, q)
        assert rep.mutual_info + rep.equivocation == 1.0
        assert 0.0 <= rep.equivocation <= 1.0 and 0.0 <= rep.mutual_info <= 1.0
        if q % 2:
            assert 0.0 <= rep.p_e <= rep.p + 1e-15 <= 0.5 + 1e-15

    def test_published_tables_layout(self):
        rows = published_tables()
        assert [(r.eta, r.r, r.q) for r in rows] == [(e, r, q) for e, r in TABLE_PARAMS for q in TABLE_QS]


class TestSurface:
    def test_single_cells(self):
        assert surface([0.125], [40]).values[0, 0] == pytest.approx(0.1919, abs=5e-4)
        assert surface([0.125], [80]).values[0, 0] == pytest.approx(0.2084, abs=5e-4)

    def test_composition(self):
        g = surface([0.2, 0.3], [10, 50, 90])
        for i, eta in enumerate(g.eta_axis):
            for j, r in enumerate(g.r_axis):
                assert g.values[i, j] == single_query_error_prob(eta, r)

    def test_axis_permutation(self):
        etas, rs = [0.1, 0.25, 0.4], [20, 60, 100]
        base = surface(etas, rs)
        perm = surface(etas[::-1], [rs[2], rs[0], rs[1]])
        assert np.array_equal(perm.values, base.values[::-1][:, [2, 0, 1]])

    def test_rejects(self):
        with pytest.raises(ValueError):
            surface([], [10])
        with pytest.raises(ValueError):
            surface([0.6], [10])


class TestExactAnalysis:
    def test_q1_matches_averaged_model(self):
        for eta, r in TABLE_PARAMS:
            assert exact_bit_error(eta, r, 1) == pytest.approx(single_query_error_prob(eta, r), rel=1e-12)

    def test_averaged_model_underestimates(self):
        for eta, r in TABLE_PARAMS:
            p = single_query_error_prob(eta, r)
            for q in TABLE_QS:
                assert exact_bit_error(eta, r, q) > 4 * p_error(q, p)

    def test_profile_shape(self):
        prof = attack_error_profile(0.125, 40, 19, 32)
        assert prof.position_error.shape == (64,)
        assert prof.position_error[0] == pytest.approx(prof.isolated_error)
        assert np.all(np.diff(prof.position_error) > 0)
        assert prof.position_error[-1] < 0.5
