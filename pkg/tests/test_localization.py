from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from randobs.localization import (
    LocalizationSpec,
    build_phi,
    cyclic_distance,
    diag_pseudo_inverse,
    gaspari_cohn,
    localize,
)


@pytest.mark.parametrize("i,j,n,d", [(0, 0, 40, 0), (0, 39, 40, 1), (3, 23, 40, 20), (39, 0, 40, 1)])
def test_cyclic_distance(i, j, n, d):
    assert cyclic_distance(i, j, n) == d


def _gc_exact(r):
    # textbook Gaspari-Cohn pieces evaluated in rational arithmetic
    r = Fraction(r)
    if r <= 1:
        return -r**5 / 4 + r**4 / 2 + 5 * r**3 / 8 - 5 * r**2 / 3 + 1
    if r < 2:
        return r**5 / 12 - r**4 / 2 + 5 * r**3 / 8 + 5 * r**2 / 3 - 5 * r + 4 - 2 / (3 * r)
    return Fraction(0)


def test_gc_knots():
    assert gaspari_cohn(0.0) == 1.0
    assert gaspari_cohn(2.5) == 0.0
    assert gaspari_cohn(2.0) == 0.0
    # both pieces meet at r = 1 with value 5/24
    assert _gc_exact(1) == Fraction(5, 24)
    inner = -0.25 + 0.5 + 0.625 - 5 / 3 + 1
    outer = 1 / 12 - 0.5 + 0.625 + 5 / 3 - 5 + 4 - 2 / 3
    assert inner == pytest.approx(5 / 24, abs=1e-15)
    assert outer == pytest.approx(5 / 24, abs=1e-15)
    assert gaspari_cohn(1.0) == pytest.approx(5 / 24, abs=1e-15)


@pytest.mark.parametrize("r", ["0.1", "0.5", "0.999", "1.001", "1.5", "1.9"])
def test_gc_matches_rational_oracle(r):
    assert gaspari_cohn(float(r)) == pytest.approx(float(_gc_exact(Fraction(r))), abs=1e-14)


@given(st.floats(0, 3))
def test_gc_range_and_monotone(r):
    v = gaspari_cohn(r)
    assert 0.0 <= v <= 1.0
    assert gaspari_cohn(r + 1e-3) <= v + 1e-15


def test_phi_uniform():
    np.testing.assert_array_equal(np.asarray(build_phi(LocalizationSpec("uniform", 1.0), 3)), np.ones((3, 3)))


def test_phi_tophat_inclusive():
    phi = np.asarray(build_phi(LocalizationSpec("tophat", 1.0), 4))
    expected = np.array([[1, 1, 0, 1], [1, 1, 1, 0], [0, 1, 1, 1], [1, 0, 1, 1]], dtype=float)
    np.testing.assert_array_equal(phi, expected)


def test_phi_gc_support():
    phi = np.asarray(build_phi(LocalizationSpec("gaspari-cohn", 10.0), 40))
    assert phi[0, 20] == 0.0
    assert phi[0, 19] > 0.0
    np.testing.assert_array_equal(np.diag(phi), np.ones(40))
    np.testing.assert_array_equal(phi, phi.T)
    assert phi.min() >= 0 and phi.max() <= 1


def test_phi_is_read_only():
    phi = build_phi(LocalizationSpec("gaspari-cohn", 2.0), 8)
    with pytest.raises(ValueError):
        phi.phi[0, 0] = 3.0


def test_phi_constants():
    phi = build_phi(LocalizationSpec("tophat", 1.0), 6)
    assert phi.row_sum_max() == 3.0
    assert phi.observed_row_sum_max([0, 1]) == 2.0
    np.testing.assert_array_equal(phi.off_diagonal_observed_sum([0, 1]), [1, 1, 1, 0, 0, 1])


def test_localization_settings_validation():
    with pytest.raises(ValueError):
        LocalizationSpec("box", 1.0)
    with pytest.raises(ValueError):
        LocalizationSpec("tophat", 0.0)
    with pytest.raises(ValueError):
        LocalizationSpec("tophat", 1.0, "euclid")


def test_localize_examples():
    P = np.array([[2.0, 1.0], [1.0, 3.0]])
    np.testing.assert_array_equal(localize(P, np.ones((2, 2))), P)
    np.testing.assert_array_equal(localize(P, np.eye(2)), np.diag([2.0, 3.0]))
    np.testing.assert_array_equal(localize(P, [[1, 0.5], [0.5, 1]]), [[2, 0.5], [0.5, 3]])
    with pytest.raises(ValueError):
        localize(P, np.ones((3, 3)))


@settings(max_examples=50)
@given(st.integers(2, 12), st.floats(0.5, 6), st.integers(0, 2**31))
def test_localized_covariance_stays_psd(n, r_loc, seed):
    # Schur product theorem: GC taper is positive definite, so P o phi is PSD
    A = np.random.default_rng(seed).standard_normal((n + 3, n))
    P = A.T @ A
    PL = localize(P, build_phi(LocalizationSpec("gaspari-cohn", r_loc), n))
    assert np.linalg.eigvalsh(PL).min() > -1e-9 * np.abs(P).max()


def test_diag_pseudo_inverse():
    np.testing.assert_array_equal(diag_pseudo_inverse(np.diag([2.0, 4.0])), np.diag([0.5, 0.25]))
    np.testing.assert_array_equal(diag_pseudo_inverse(np.diag([0.0, 1.0])), np.diag([1e12, 1.0]))
    np.testing.assert_array_equal(diag_pseudo_inverse(np.eye(3)), np.eye(3))


@given(st.lists(st.floats(1e-6, 1e6), min_size=1, max_size=6))
def test_diag_pseudo_inverse_involution(d):
    P = np.diag(d)
    back = diag_pseudo_inverse(diag_pseudo_inverse(P))
    np.testing.assert_allclose(back, P, rtol=4e-16, atol=0)
