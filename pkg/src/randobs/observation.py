"""Partial observation operators, uniform index-set sampling and Poisson switching."""

from dataclasses import dataclass
import math

import numpy as np


def sample_subsets(n_x, n_j, rng, size):
    """Draw ``size`` independent uniform subsets of {0..n_x-1} with ``n_j`` elements.

    Algorithm R (reservoir sampling) run in lockstep over the batch. Returns a
    sorted ``(size, n_j)`` integer array.
    """
    if not 0 <= n_j <= n_x:
        raise ValueError(f"need 0 <= n_j <= n_x, got n_j={n_j}, n_x={n_x}")
    reservoir = np.tile(np.arange(n_j), (size, 1))
    if n_j == 0 or n_j == n_x:
        return reservoir
    # item i replaces slot r when r = U{0..i} lands below n_j
    highs = np.arange(n_j + 1, n_x + 1)
    draws = rng.integers(0, highs, size=(size, n_x - n_j))
    rows = np.arange(size)
    for col, item in enumerate(range(n_j, n_x)):
        r = draws[:, col]
        hit = r < n_j
        reservoir[rows[hit], r[hit]] = item
    reservoir.sort(axis=1)
    return reservoir


def sample_subset_uniform(n_x, n_j, rng):
    """Uniformly random sorted subset of {0..n_x-1} of size ``n_j``."""
    return tuple(int(i) for i in sample_subsets(n_x, n_j, rng, 1)[0])


@dataclass(frozen=True)
class ObservationOperator:
    """Selector H_J for the sorted index set ``indices`` with noise scale ``eps``."""

    indices: tuple
    n_x: int
    eps: float = 1.0

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError("indices must be strictly increasing")
        if idx and (idx[0] < 0 or idx[-1] >= self.n_x):
            raise ValueError(f"indices out of range for n_x={self.n_x}")
        # eps = 0 is allowed so that noiseless observations can be synthesized
        if not (math.isfinite(self.eps) and self.eps >= 0):
            raise ValueError("eps must be finite and nonnegative")
        object.__setattr__(self, "indices", idx)

    @classmethod
    def from_indices(cls, indices, n_x, eps=1.0):
        return cls(tuple(sorted(set(int(i) for i in indices))), n_x, eps)

    @property
    def n_j(self):
        return len(self.indices)

    @property
    def matrix(self):
        H = np.zeros((self.n_j, self.n_x))
        H[np.arange(self.n_j), list(self.indices)] = 1.0
        return H

    @property
    def mask(self):
        m = np.zeros(self.n_x)
        m[list(self.indices)] = 1.0
        return m

    def apply(self, x):
        return apply(self, x)


def apply(H, x):
    """H_J x, i.e. the entries of ``x`` at the observed indices."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != H.n_x:
        raise ValueError(f"state has dimension {x.shape[-1]}, operator expects {H.n_x}")
    return x[..., list(H.indices)]


def discrete_observation(H, x_ref, rng):
    """y = H x_ref + eps * xi, xi ~ N(0, I). Observation covariance is eps^2 I."""
    y = apply(H, x_ref)
    return y + H.eps * rng.standard_normal(y.shape)


def observation_increment(H, x_ref, dt, rng):
    """dY = H x_ref dt + sqrt(eps) sqrt(dt) xi, i.e. R = eps I in the continuous setting."""
    if dt < 0:
        raise ValueError("dt must be nonnegative")
    y = apply(H, x_ref) * dt
    return y + math.sqrt(H.eps * dt) * rng.standard_normal(y.shape)


@dataclass
class PoissonSwitcher:
    """One Poisson(lam) draw per assimilation cycle decides whether J is redrawn."""

    lam: float
    rng: np.random.Generator

    def __post_init__(self):
        if not self.lam >= 0:
            raise ValueError("lam must be nonnegative")

    def draw(self):
        return bool(self.rng.poisson(self.lam) > 0)


def maybe_switch(sw, current, index_rng, n_j=None):
    """Return ``(switched, operator)``.

    On a jump the index set is resampled uniformly, at cardinality ``n_j`` if
    given and at the current cardinality otherwise. Without a jump the very
    same operator object is returned.
    """
    if not sw.draw():
        return False, current
    size = current.n_j if n_j is None else n_j
    idx = sample_subset_uniform(current.n_x, size, index_rng)
    return True, ObservationOperator(idx, current.n_x, current.eps)
