import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from anchors import PRINTED_TABLE
from oracles import btl_rational
from prefagg.core import (
    AlternativeSet,
    AnnotatorType,
    LinearReward,
    Population,
    PreferenceRecord,
    TabularReward,
    WinRateMatrix,
    annotator_reward,
    btl_win_prob,
    empirical_matrix,
    population_win_prob,
    representative_matrix,
    sample_comparison,
    sample_dataset,
)
from prefagg.errors import (
    IncompleteCoverageError,
    InvalidArgumentError,
    UnknownAlternativeError,
)

finite = st.floats(-1e3, 1e3, allow_nan=False)


class TestBTL:
    def test_one_third(self):
        assert btl_win_prob(0.0, math.log(2)) == pytest.approx(1 / 3, abs=1e-15)

    @given(finite)
    def test_equal_rewards(self, t):
        assert btl_win_prob(t, t) == 0.5

    def test_against_rational_oracle(self):
        expected = btl_rational(Fraction(100), Fraction(10))
        assert expected == Fraction(10, 11)
        assert btl_win_prob(math.log(100), math.log(10)) == pytest.approx(float(expected), abs=1e-15)

    @pytest.mark.parametrize("bad", [math.inf, -math.inf, math.nan])
    def test_non_finite(self, bad):
        with pytest.raises(InvalidArgumentError):
            btl_win_prob(bad, 0.0)

    @given(finite, finite)
    def test_complement(self, a, b):
        assert abs(btl_win_prob(a, b) + btl_win_prob(b, a) - 1.0) <= 1e-12

    @given(finite, finite, st.floats(-100, 100))
    def test_shift_invariance(self, a, b, c):
        assert abs(btl_win_prob(a + c, b + c) - btl_win_prob(a, b)) <= 1e-12


class TestRewardFields:
    def test_tabular_lookup(self, cyclic):
        alts, pop = cyclic
        assert annotator_reward(pop.types[0].reward, alts, "a") == pytest.approx(math.log(100))

    def test_constant_linear(self, square):
        field = LinearReward(np.zeros(2), 7.0)
        assert all(annotator_reward(field, square, k) == 7.0 for k in square.ids)

    def test_linear_dot(self):
        alts = AlternativeSet(("x",), np.array([[0.5, 0.25]]))
        assert annotator_reward(LinearReward(np.array([1.0, 2.0])), alts, "x") == 1.0

    def test_unknown_id(self, cyclic):
        alts, pop = cyclic
        with pytest.raises(UnknownAlternativeError):
            annotator_reward(pop.types[0].reward, alts, "zzz")

    def test_dimension_mismatch(self, square):
        with pytest.raises(InvalidArgumentError):
            annotator_reward(LinearReward(np.ones(3)), square, "p00")

    def test_lipschitz(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            theta = rng.normal(size=4)
            field = LinearReward(theta, rng.normal())
            x1, x2 = rng.normal(size=(2, 4))
            assert abs(field.at(x1) - field.at(x2)) <= field.lipschitz * np.linalg.norm(x1 - x2) + 1e-12


class TestTypes:
    def test_duplicate_ids(self):
        with pytest.raises(InvalidArgumentError):
            AlternativeSet(("a", "a"), np.zeros((2, 1)))

    def test_non_finite_context(self):
        with pytest.raises(InvalidArgumentError):
            AlternativeSet(("a",), np.array([[np.nan]]))

    def test_proportions_must_sum_to_one(self):
        with pytest.raises(InvalidArgumentError):
            Population((AnnotatorType(0.5, TabularReward({"a": 0})),))

    def test_record_winner(self):
        with pytest.raises(InvalidArgumentError):
            PreferenceRecord("a", "b", "c")
        with pytest.raises(InvalidArgumentError):
            PreferenceRecord("a", "a", "a")

    def test_matrix_invariants(self):
        with pytest.raises(InvalidArgumentError):
            WinRateMatrix(("a", "b"), np.array([[0.5, 0.7], [0.7, 0.5]]))
        with pytest.raises(InvalidArgumentError):
            WinRateMatrix(("a", "b"), np.array([[0.4, 0.5], [0.5, 0.5]]))


class TestPopulationWinRates:
    def test_printed_entries(self, cyclic):
        alts, pop = cyclic
        assert population_win_prob(pop, alts, "a", "b") == pytest.approx(0.64, abs=0.005)
        assert population_win_prob(pop, alts, "a", "c") == pytest.approx(0.45, abs=0.005)

    def test_single_type(self):
        alts = AlternativeSet(("a", "b"), np.zeros((2, 1)))
        pop = Population((AnnotatorType(1.0, TabularReward({"a": 1.3, "b": -0.2})),))
        assert population_win_prob(pop, alts, "a", "b") == btl_win_prob(1.3, -0.2)

    def test_representative_table(self, cyclic):
        alts, pop = cyclic
        p = representative_matrix(pop, alts)
        np.testing.assert_allclose(p.p, PRINTED_TABLE, atol=0.005)
        assert p.counts is None

    def test_matches_pairwise(self, cyclic):
        alts, pop = cyclic
        p = representative_matrix(pop, alts)
        for x in alts.ids:
            for y in alts.ids:
                if x != y:
                    assert p[x, y] == pytest.approx(population_win_prob(pop, alts, x, y), abs=1e-15)

    def test_indifferent_population(self, square):
        pop = Population((
            AnnotatorType(0.5, LinearReward(np.zeros(2), 1.0)),
            AnnotatorType(0.5, LinearReward(np.zeros(2), -4.0)),
        ))
        p = representative_matrix(pop, square)
        assert np.all(p.p == 0.5)

    def test_impossibility_population_two(self):
        kappa = 4096.0
        alts = AlternativeSet(("a", "b"), np.array([[0.0], [1.0]]))
        pop = Population((
            AnnotatorType(0.5, TabularReward({"a": 0.0, "b": math.log(kappa)})),
            AnnotatorType(0.5, TabularReward({"a": 0.0, "b": math.log(kappa + 4) - math.log(2 * kappa - 1)})),
        ))
        assert representative_matrix(pop, alts)["a", "b"] == pytest.approx(1 / 3, abs=1e-12)


class TestSampling:
    def test_saturated(self):
        alts = AlternativeSet(("a", "b"), np.zeros((2, 1)))
        pop = Population((AnnotatorType(1.0, TabularReward({"a": 1000.0, "b": 0.0})),))
        rng = np.random.default_rng(0)
        assert all(sample_comparison(pop, alts, "a", "b", rng).winner == "a" for _ in range(100))

    def test_replay(self, cyclic):
        alts, pop = cyclic
        seq = lambda: [sample_comparison(pop, alts, "a", "c", np.random.default_rng(11)) for _ in range(5)]
        assert seq() == seq()
        assert sample_dataset(pop, alts, 50, 7) == sample_dataset(pop, alts, 50, 7)

    def test_self_comparison(self, cyclic):
        alts, pop = cyclic
        with pytest.raises(InvalidArgumentError):
            sample_comparison(pop, alts, "a", "a", np.random.default_rng(0))

    def test_frequency(self, cyclic):
        alts, pop = cyclic
        rng = np.random.default_rng(2024)
        n = 20_000
        wins = sum(sample_comparison(pop, alts, "a", "b", rng).winner == "a" for _ in range(n))
        p = population_win_prob(pop, alts, "a", "b")
        assert abs(wins / n - p) <= 3 * math.sqrt(p * (1 - p) / n)

    def test_dataset_size(self, cyclic):
        alts, pop = cyclic
        assert len(sample_dataset(pop, alts, 100, 1)) == 300


class TestEmpiricalMatrix:
    def test_single_record(self):
        alts = AlternativeSet(("a", "b"), np.zeros((2, 1)))
        p = empirical_matrix([PreferenceRecord("a", "b", "a")], alts)
        assert p["a", "b"] == 1.0 and p["b", "a"] == 0.0
        assert p.counts[0, 1] == 1

    def test_balanced(self):
        alts = AlternativeSet(("a", "b"), np.zeros((2, 1)))
        recs = [PreferenceRecord("a", "b", "a"), PreferenceRecord("b", "a", "b")] * 3
        assert empirical_matrix(recs, alts)["a", "b"] == 0.5

    def test_missing_pair(self, cyclic):
        alts, _ = cyclic
        with pytest.raises(IncompleteCoverageError) as info:
            empirical_matrix([PreferenceRecord("a", "b", "a")], alts)
        assert set(info.value.missing) == {("a", "c"), ("b", "c")}

    def test_unknown_id(self, cyclic):
        alts, _ = cyclic
        with pytest.raises(UnknownAlternativeError):
            empirical_matrix([PreferenceRecord("a", "q", "a")], alts)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(2, 5), st.integers(1, 40), st.integers(0, 2**32 - 1))
    def test_invariants(self, m, per_pair, seed):
        rng = np.random.default_rng(seed)
        ids = tuple(f"x{i}" for i in range(m))
        alts = AlternativeSet(ids, rng.random((m, 2)))
        pop = Population((
            AnnotatorType(0.5, LinearReward(rng.normal(size=2))),
            AnnotatorType(0.5, LinearReward(rng.normal(size=2))),
        ))
        p = empirical_matrix(sample_dataset(pop, alts, per_pair, seed), alts)
        assert np.all(np.diag(p.p) == 0.5)
        assert np.max(np.abs(p.p + p.p.T - 1)) <= 1e-12
        assert np.array_equal(p.counts, p.counts.T)
        assert np.all(p.counts[~np.eye(m, dtype=bool)] == per_pair)

    def test_converges_to_representative(self, cyclic):
        alts, pop = cyclic
        n = 20_000
        exact = representative_matrix(pop, alts).p
        emp = empirical_matrix(sample_dataset(pop, alts, n, 5), alts).p
        sigma = np.sqrt(exact * (1 - exact) / n)
        assert np.all(np.abs(emp - exact) <= 3 * sigma + 1e-15)
