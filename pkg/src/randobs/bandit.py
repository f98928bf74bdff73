"""UCB1 over candidate observation-set sizes, plus the coverage/reward heuristics."""

from dataclasses import dataclass, field
import math

import numpy as np

from randobs.localization import cyclic_distance

CORR_REG = 1e-12


def parse_arm_grid(text):
    """Parse ``start:stride:stop`` into the list ``range(start, stop, stride)``."""
    try:
        start, stride, stop = (int(p) for p in str(text).split(":"))
    except ValueError:
        raise ValueError(f"arm grid must look like start:stride:stop, got {text!r}") from None
    if stride <= 0 or start <= 0:
        raise ValueError("arm grid needs positive start and stride")
    arms = list(range(start, stop, stride))
    if not arms:
        raise ValueError(f"arm grid {text!r} is empty")
    return arms


@dataclass
class BanditState:
    """Per-arm empirical means and play counts. ``arms`` holds the N_J values."""

    arms: list
    c: float = 1.0
    mu_hat: np.ndarray = None
    plays: np.ndarray = None

    def __post_init__(self):
        self.arms = [int(a) for a in self.arms]
        if not self.arms:
            raise ValueError("empty arm list")
        if any(b <= a for a, b in zip(self.arms, self.arms[1:])):
            raise ValueError("arms must be strictly increasing")
        if self.mu_hat is None:
            self.mu_hat = np.zeros(len(self.arms))
        if self.plays is None:
            self.plays = np.zeros(len(self.arms), dtype=np.int64)
        self.mu_hat = np.asarray(self.mu_hat, dtype=float)
        self.plays = np.asarray(self.plays, dtype=np.int64)

    @property
    def t(self):
        return int(self.plays.sum())

    def index_of(self, n_j):
        return self.arms.index(int(n_j))


def ucb_indices(B):
    """mu_hat + c sqrt(2 ln t / plays) for every (already played) arm."""
    t = max(B.t, 1)
    return B.mu_hat + B.c * np.sqrt(2.0 * math.log(t) / B.plays)


def choose_arm(B):
    """Position of the next arm: first unplayed arm, else the UCB1 argmax.

    Ties go to the lowest position, i.e. the smallest N_J.
    """
    if not B.arms:
        raise ValueError("empty arm list")
    unplayed = np.flatnonzero(B.plays == 0)
    if unplayed.size:
        return int(unplayed[0])
    return int(np.argmax(ucb_indices(B)))


def record_pull(B, arm):
    B.plays[arm] += 1
    return B


def update_arm(B, arm, reward):
    """Incremental mean; ``plays[arm]`` must already count this reward."""
    n = B.plays[arm]
    if n < 1:
        raise ValueError("record the pull before updating the mean")
    B.mu_hat[arm] += (reward - B.mu_hat[arm]) / n
    return B


@dataclass(frozen=True)
class RewardParams:
    alpha: float = 3.2
    beta: float = 2.5
    gamma: float = 0.25
    tau_corr: float = 0.30
    r_loc: float = 10.0

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be finite and nonnegative")
        if not 0 < self.tau_corr < 1:
            raise ValueError("tau_corr must lie in (0, 1)")
        if not self.r_loc > 0:
            raise ValueError("r_loc must be positive")


def coverage(J, r_loc, P, tau_corr, n_x=None):
    """Fraction of components k with an observed j, d(k, j) <= r_loc, and
    P[k, j]^2 / (P[k, k]^2 + 1e-12) >= tau_corr."""
    P = np.asarray(P, dtype=float)
    n_x = P.shape[0] if n_x is None else n_x
    J = np.asarray(J, dtype=int)
    if J.size == 0:
        return 0.0
    k = np.arange(n_x)
    diag = np.diagonal(P)
    c = P[:, J] ** 2 / (diag**2 + CORR_REG)[:, None]
    near = cyclic_distance(k[:, None], J[None, :], n_x) <= r_loc
    covered = np.any(near & (c >= tau_corr), axis=1)
    return int(covered.sum()) / n_x


def localized_correlation_q(J, P, phi, r_loc):
    """q_k = min over observed j within r_loc of c_kj * phi_kj (NaN if none in range)."""
    P = np.asarray(P, dtype=float)
    phi = np.asarray(phi, dtype=float)
    n_x = P.shape[0]
    J = np.asarray(J, dtype=int)
    if J.size == 0:
        return np.full(n_x, np.nan)
    c = P[:, J] ** 2 / (np.diagonal(P) ** 2 + CORR_REG)[:, None]
    near = cyclic_distance(np.arange(n_x)[:, None], J[None, :], n_x) <= r_loc
    vals = np.where(near, c * phi[:, J], np.inf)
    q = vals.min(axis=1)
    q[np.isinf(q)] = np.nan
    return q


def reward(kappa, n_j, n_x, trace_p, params):
    """beta kappa - alpha N_J / N_x - gamma trace(P) / N_x."""
    if n_x <= 0:
        raise ValueError("n_x must be positive")
    return params.beta * kappa - params.alpha * n_j / n_x - params.gamma * trace_p / n_x


@dataclass
class BernoulliResult:
    plays: np.ndarray
    total_reward: float
    regret: float
    pseudo_regret: float
    best_fraction: float = field(default=0.0)


def run_bernoulli_ucb(means, n_pulls, rng, c=1.0):
    """Play UCB1 on independent Bernoulli arms.

    ``regret`` is n_pulls * max(means) minus the realized reward;
    ``pseudo_regret`` uses the arm means instead of the draws.
    """
    means = np.asarray(means, dtype=float)
    B = BanditState(list(range(1, len(means) + 1)), c=c)
    draws = rng.random(n_pulls)
    total = 0.0
    pseudo = 0.0
    best = means.max()
    for n in range(n_pulls):
        a = choose_arm(B)
        r = float(draws[n] < means[a])
        record_pull(B, a)
        update_arm(B, a, r)
        total += r
        pseudo += best - means[a]
    frac = B.plays[int(np.argmax(means))] / n_pulls
    return BernoulliResult(B.plays.copy(), total, n_pulls * best - total, pseudo, frac)
