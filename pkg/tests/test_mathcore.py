import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chronotag.mathcore import (
    AdamState,
    Rng,
    adam_step,
    log_softmax,
    sgd_step,
    sigmoid,
    stable_softmax,
    tanh,
    xavier_init,
)


class TestRng:
    def test_same_seed_same_stream(self):
        a = Rng(1234).uniform(size=1000)
        b = Rng(1234).uniform(size=1000)
        assert np.array_equal(a, b)

    def test_different_seeds_differ(self):
        assert not np.array_equal(Rng(1).uniform(size=100), Rng(2).uniform(size=100))

    def test_stream_is_counter_based(self):
        # drawing in two chunks equals drawing at once
        r = Rng(77)
        chunked = np.concatenate([r.next_u64(3), r.next_u64(5)])
        assert np.array_equal(chunked, Rng(77).next_u64(8))

    def test_known_stream_values(self):
        # SplitMix64 outputs for seed 0 (frozen; guards the algorithm)
        expected = [0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F]
        assert Rng(0).next_u64(3).tolist() == expected

    def test_uniform_range(self):
        u = Rng(5).uniform(size=10000)
        assert u.min() >= 0.0 and u.max() < 1.0

    def test_normal_moments(self):
        z = Rng(9).normal(size=200_000)
        assert abs(z.mean()) < 0.01
        assert abs(z.std() - 1.0) < 0.01

    def test_fork_independent_and_reproducible(self):
        r = Rng(3)
        child1 = r.fork("word:cat")
        child2 = r.fork("word:cat")
        other = r.fork("word:dog")
        assert child1.seed == child2.seed
        assert child1.seed != other.seed
        assert r.counter == 0  # forking consumes nothing

    def test_permutation_is_permutation(self):
        p = Rng(11).permutation(50)
        assert sorted(p.tolist()) == list(range(50))

    def test_sample_without_replacement(self):
        idx = Rng(4).sample_indices(100, 30)
        assert len(set(idx.tolist())) == 30
        with pytest.raises(ValueError):
            Rng(4).sample_indices(3, 5)


class TestXavier:
    def test_limit_one_when_fan_sum_six(self):
        m = xavier_init(1, 5, Rng(0))
        assert np.all(np.abs(m) <= 1.0)

    def test_limit_for_300_by_300(self):
        m = xavier_init(300, 300, Rng(8))
        limit = np.sqrt(6.0 / 600.0)
        assert limit == pytest.approx(0.1)
        assert np.abs(m).max() <= limit

    def test_deterministic(self):
        assert np.array_equal(xavier_init(7, 9, Rng(2)), xavier_init(7, 9, Rng(2)))

    def test_zero_dimension_rejected(self):
        with pytest.raises(ValueError):
            xavier_init(0, 5, Rng(0))
        with pytest.raises(ValueError):
            xavier_init(5, 0, Rng(0))

    @settings(deadline=None)
    @given(st.integers(1, 40), st.integers(1, 40), st.integers(0, 2**32))
    def test_bound_property(self, rows, cols, seed):
        m = xavier_init(rows, cols, Rng(seed))
        assert np.abs(m).max() <= np.sqrt(6.0 / (rows + cols))


class TestSoftmax:
    def test_uniform_on_equal_logits(self):
        np.testing.assert_allclose(
            stable_softmax(np.zeros(3)), np.full(3, 1 / 3), atol=1e-15
        )

    def test_large_logits_no_overflow(self):
        out = stable_softmax(np.array([1000.0, 1000.0]))
        np.testing.assert_allclose(out, [0.5, 0.5], atol=1e-15)

    def test_hand_computed_quarters(self):
        out = stable_softmax(np.log(np.array([1.0, 3.0])))
        np.testing.assert_allclose(out, [0.25, 0.75], atol=1e-12)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            stable_softmax(np.array([]))

    def test_nan_rejected(self):
        with pytest.raises(ValueError):
            stable_softmax(np.array([1.0, np.nan]))

    def test_log_softmax_consistent(self):
        z = np.array([[0.3, -2.0, 5.0], [1.0, 1.0, 1.0]])
        np.testing.assert_allclose(np.exp(log_softmax(z)), stable_softmax(z), atol=1e-12)

    @settings(deadline=None)
    @given(
        st.lists(st.floats(-50, 50), min_size=1, max_size=20),
        st.floats(-100, 100),
    )
    def test_sums_to_one_and_shift_invariant(self, logits, shift):
        z = np.array(logits)
        p = stable_softmax(z)
        assert abs(p.sum() - 1.0) <= 1e-12
        assert np.all(p > 0)
        np.testing.assert_allclose(p, stable_softmax(z + shift), atol=1e-12)


class TestActivations:
    def test_sigmoid_of_zero(self):
        assert sigmoid(np.array(0.0)) == 0.5

    def test_tanh_of_zero(self):
        assert tanh(np.array(0.0)) == 0.0

    def test_sigmoid_symmetry(self):
        x = np.array(3.7)
        assert sigmoid(x) + sigmoid(-x) == pytest.approx(1.0, abs=1e-15)

    def test_sigmoid_extreme_inputs_finite(self):
        out = sigmoid(np.array([-1e6, 1e6]))
        assert np.all(np.isfinite(out))
        assert out[0] == pytest.approx(0.0) and out[1] == pytest.approx(1.0)

    def test_monotone(self):
        x = np.linspace(-5, 5, 101)
        assert np.all(np.diff(sigmoid(x)) > 0)
        assert np.all(np.diff(tanh(x)) > 0)


class TestAdam:
    def test_first_step_magnitude_is_learning_rate(self):
        p = np.array([1.0])
        state = AdamState(lr=0.001)
        adam_step(p, np.array([0.5]), state)
        assert abs(1.0 - p[0]) == pytest.approx(0.001, rel=1e-6)
        assert state.t == 1

    def test_zero_gradient_is_identity(self):
        p = np.array([[0.3, -0.7], [2.0, 0.0]])
        orig = p.copy()
        state = AdamState(lr=0.1)
        for _ in range(5):
            adam_step(p, np.zeros_like(p), state)
        assert np.array_equal(p, orig)

    def test_descends_against_gradient_sign(self):
        p = np.array([0.0, 0.0])
        adam_step(p, np.array([1.0, -1.0]), AdamState(lr=0.01))
        assert p[0] < 0 < p[1]

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            adam_step(np.zeros(3), np.zeros(4), AdamState())

    def test_state_shape_mismatch_rejected(self):
        state = AdamState()
        adam_step(np.zeros(3), np.zeros(3), state)
        with pytest.raises(ValueError):
            adam_step(np.zeros(4), np.zeros(4), state)

    def test_deterministic(self):
        def run():
            p = np.linspace(-1, 1, 10)
            state = AdamState(lr=0.05)
            for i in range(20):
                adam_step(p, np.sin(p + i), state)
            return p

        assert np.array_equal(run(), run())

    def test_sgd_step(self):
        p = np.array([1.0, 2.0])
        sgd_step(p, np.array([0.5, -0.5]), lr=0.1)
        np.testing.assert_allclose(p, [0.95, 2.05])
