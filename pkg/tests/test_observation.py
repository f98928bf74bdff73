import math
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.stats import chisquare

from randobs.observation import (
    ObservationOperator,
    PoissonSwitcher,
    apply,
    discrete_observation,
    maybe_switch,
    observation_increment,
    sample_subset_uniform,
    sample_subsets,
)
from randobs.rng import stream


def test_trivial_subsets():
    g = stream(0, 0, "obs-index")
    assert sample_subset_uniform(5, 5, g) == (0, 1, 2, 3, 4)
    assert sample_subset_uniform(5, 0, g) == ()
    with pytest.raises(ValueError):
        sample_subset_uniform(5, 6, g)


@given(st.integers(1, 30), st.data())
def test_subsets_sorted_unique_in_range(n_x, data):
    n_j = data.draw(st.integers(0, n_x))
    seed = data.draw(st.integers(0, 1000))
    S = sample_subsets(n_x, n_j, stream(seed, 0, "obs-index"), 20)
    assert S.shape == (20, n_j)
    assert np.all(np.diff(S, axis=1) > 0)
    assert S.size == 0 or (S.min() >= 0 and S.max() < n_x)


def test_subset_frequencies_5_choose_2():
    S = sample_subsets(5, 2, stream(11, 0, "obs-index"), 100_000)
    keys = S[:, 0] * 5 + S[:, 1]
    counts = np.array([np.count_nonzero(keys == a * 5 + b) for a, b in combinations(range(5), 2)])
    assert counts.sum() == 100_000
    np.testing.assert_allclose(counts / 1e5, 0.1, atol=0.01)
    assert chisquare(counts).pvalue > 0.001


def test_single_draw_matches_batch_of_one():
    a = sample_subset_uniform(9, 4, stream(2, 3, "obs-index"))
    b = tuple(sample_subsets(9, 4, stream(2, 3, "obs-index"), 1)[0])
    assert a == b


def test_operator_validation_and_matrix():
    H = ObservationOperator((0, 2), 3)
    np.testing.assert_array_equal(H.matrix, [[1, 0, 0], [0, 0, 1]])
    np.testing.assert_array_equal(H.mask, [1, 0, 1])
    assert ObservationOperator.from_indices([2, 0, 2], 3).indices == (0, 2)
    for bad in [((2, 0), 3), ((0, 0), 3), ((3,), 3), ((-1,), 3)]:
        with pytest.raises(ValueError):
            ObservationOperator(*bad)
    with pytest.raises(ValueError):
        ObservationOperator((0,), 3, eps=-1.0)


def test_apply():
    assert apply(ObservationOperator((2,), 3), [5.0, 6.0, 7.0]).tolist() == [7.0]
    assert apply(ObservationOperator((), 3), [5.0, 6.0, 7.0]).tolist() == []
    assert ObservationOperator((0, 2), 3).apply([1.0, 2.0, 3.0]).tolist() == [1.0, 3.0]
    with pytest.raises(ValueError):
        apply(ObservationOperator((0,), 3), np.ones(4))


def test_discrete_observation():
    x = np.array([1.0, 2.0, 3.0])
    H0 = ObservationOperator((0, 2), 3, eps=0.0)
    np.testing.assert_array_equal(discrete_observation(H0, x, stream(0, 0, "obs-noise")), [1.0, 3.0])
    H = ObservationOperator((0, 1, 2), 3, eps=0.3)
    a = discrete_observation(H, x, stream(4, 0, "obs-noise"))
    b = discrete_observation(H, x, stream(4, 0, "obs-noise"))
    assert np.array_equal(a, b)
    g = stream(5, 0, "obs-noise")
    H1 = ObservationOperator((1,), 3, eps=0.3)
    draws = np.array([discrete_observation(H1, x, g)[0] for _ in range(100_000)]) - 2.0
    assert draws.std() == pytest.approx(0.3, rel=0.02)


def test_observation_increment():
    x = np.array([1.0, 2.0, 3.0])
    H0 = ObservationOperator((2,), 3, eps=0.0)
    np.testing.assert_array_equal(observation_increment(H0, x, 0.01, stream(0)), [0.03])
    H = ObservationOperator((0, 2), 3, eps=0.2)
    np.testing.assert_array_equal(observation_increment(H, x, 0.0, stream(0)), [0.0, 0.0])
    g = stream(6, 0, "obs-noise")
    dt = 1e-3
    inc = np.array([observation_increment(H, x, dt, g) for _ in range(100_000)])
    np.testing.assert_allclose(inc.var(axis=0), 0.2 * dt, rtol=0.02)


def test_switcher_extremes():
    H = ObservationOperator((1,), 5, 0.1)
    sw = PoissonSwitcher(0.0, stream(0, 0, "switch"))
    g = stream(0, 0, "obs-index")
    for _ in range(100):
        switched, out = maybe_switch(sw, H, g)
        assert not switched and out is H
    sw = PoissonSwitcher(1000.0, stream(0, 0, "switch"))
    assert all(maybe_switch(sw, H, g)[0] for _ in range(100))
    with pytest.raises(ValueError):
        PoissonSwitcher(-1.0, stream(0))


def test_switch_frequency_ln2():
    sw = PoissonSwitcher(math.log(2.0), stream(8, 0, "switch"))
    freq = np.mean([sw.draw() for _ in range(100_000)])
    assert abs(freq - 0.5) < 0.01


def test_switch_keeps_or_sets_cardinality():
    H = ObservationOperator((0, 3, 4), 10, 0.1)
    sw = PoissonSwitcher(1000.0, stream(1, 0, "switch"))
    g = stream(1, 0, "obs-index")
    assert maybe_switch(sw, H, g)[1].n_j == 3
    switched, out = maybe_switch(sw, H, g, n_j=5)
    assert switched and out.n_j == 5 and out.eps == 0.1
