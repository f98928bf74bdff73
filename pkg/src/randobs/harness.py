"""Experiment drivers.

E1  L63, continuous filter, one observed component: fixed J={2} against a
    fresh uniformly drawn component at every step, same truth and noise.
E2  L63, continuous filter, per-step random single component: mean squared
    tracking error against eps, with a log-log slope fit.
E3  L96, LETKF forecast-analysis cycles with Poisson switching and a UCB1
    learner over the number of observed components.

Every random draw comes from ``rng.stream(seed, rep, role)``, so results are a
pure function of the configuration.
"""

from collections import Counter
from dataclasses import dataclass, field
import logging
import math

import numpy as np

from randobs import rng as rngs
from randobs.bandit import BanditState, choose_arm, coverage, record_pull, reward, update_arm
from randobs.dynamics import BlowUpError, DriftModel, drift, integrate_rk4, lipschitz_constant, rk4_step
from randobs.enkbf import ensemble_covariance, enkbf_increment, lemma1_constants
from randobs.letkf import AnalysisConfig, inflate, letkf_analysis
from randobs.localization import LocalizationSpec, build_phi
from randobs.observation import ObservationOperator, PoissonSwitcher, discrete_observation, sample_subsets
from randobs.records import RunRecord

log = logging.getLogger(__name__)

CHUNK = 1000
SPINUP_DT = 0.01


def make_model(cfg):
    if cfg.model == "L63":
        return DriftModel.lorenz63()
    return DriftModel.lorenz96(cfg.n_x)


def make_phi(cfg):
    if cfg.model == "L63":
        return build_phi(LocalizationSpec("uniform", 1.0, "none"), 3)
    return build_phi(LocalizationSpec("gaspari-cohn", cfg.r_loc, "cyclic"), cfg.n_x)


def initial_truth(cfg, model, rep):
    """Spun-up reference state for repetition ``rep``."""
    g = rngs.stream(cfg.seed, rep, "truth-init")
    base = np.ones(model.dim) if model.kind == "L63" else np.full(model.dim, model.params["forcing"])
    x0 = base + g.standard_normal(model.dim)
    return integrate_rk4(model, x0, SPINUP_DT, cfg.spinup_steps)


def initial_ensemble(cfg, truth, rep):
    g = rngs.stream(cfg.seed, rep, "ensemble-init")
    return truth + cfg.init_spread * g.standard_normal((cfg.M, truth.shape[-1]))


def bound_constants(cfg, model=None, phi=None):
    """Covariance-band constants from the configured assumption-level inputs."""
    model = model or make_model(cfg)
    phi = phi if phi is not None else make_phi(cfg)
    return lemma1_constants(
        cfg.eps, cfg.omega_min, cfg.omega_max, cfg.q_min, cfg.q_max,
        lipschitz_constant(model, cfg.state_bound), phi.row_sum_max(),
    )


def mode_of(values):
    """Most frequent value; ties go to the smallest."""
    counts = Counter(values)
    best = max(counts.values())
    return min(v for v, n in counts.items() if n == best)


# ---------------------------------------------------------------------------
# continuous-time filter runs (E1, E2)


@dataclass
class ContinuousRun:
    rep: int
    eps: float
    mode: str
    label: str = ""
    fixed: tuple = (2,)


@dataclass
class ContinuousResult:
    run: ContinuousRun
    diverged: bool = False
    diverged_step: int = None
    mse: float = math.nan
    mean_rmse: float = math.nan
    max_rmse: float = 0.0
    records: list = field(default_factory=list)


class _RunStreams:
    """Chunked noise for one run; each role has its own stream."""

    def __init__(self, cfg, run, n_x, n_j):
        self.truth = rngs.stream(cfg.seed, run.rep, "truth")
        self.obs = rngs.stream(cfg.seed, run.rep, "obs-noise")
        self.index = rngs.stream(cfg.seed, run.rep, "obs-index")
        self.switch = rngs.stream(cfg.seed, run.rep, "switch")
        self.n_x, self.n_j, self.lam, self.mode = n_x, n_j, cfg.lam, run.mode

    def chunk(self, k):
        out = {
            "truth": self.truth.standard_normal((k, self.n_x)),
            "obs": self.obs.standard_normal((k, self.n_x)),
        }
        if self.mode in ("every-step", "poisson"):
            out["subsets"] = sample_subsets(self.n_x, self.n_j, self.index, k)
        if self.mode == "poisson":
            out["switch"] = self.switch.poisson(self.lam, size=k) > 0
        return out


def run_continuous(cfg, runs, record=True):
    """Advance all ``runs`` together with the explicit-Euler EnKBF.

    The truth follows Euler-Maruyama with amplitude ``cfg.noise_amplitude``;
    increments are dY = H X dt + sqrt(eps dt) xi (R = eps I). A record is kept
    at step 0 and every ``cfg.record_every`` steps. A run whose error norm
    exceeds ``cfg.divergence_threshold`` (or turns non-finite) gets a final
    row with rmse = inf and is frozen.
    """
    model = make_model(cfg)
    phi = np.asarray(make_phi(cfg))
    n_x, M, dt, n_steps = model.dim, cfg.M, cfg.dt, cfg.n_cycles
    B = len(runs)
    n_j = {len(r.fixed) if r.mode == "fixed" else cfg.n_j for r in runs}
    if len(n_j) != 1:
        raise ValueError("all runs in a batch must observe the same number of components")
    n_j = n_j.pop()
    params = cfg.reward_params

    truths = {}
    truth = np.empty((B, n_x))
    X = np.empty((B, M, n_x))
    for b, run in enumerate(runs):
        if run.rep not in truths:
            t0 = initial_truth(cfg, model, run.rep)
            truths[run.rep] = (t0, initial_ensemble(cfg, t0, run.rep))
        truth[b], X[b] = truths[run.rep]
    eps = np.array([r.eps for r in runs])
    eps_b = eps[:, None, None]
    obs_scale = np.sqrt(eps * dt)[:, None]
    amp = cfg.noise_amplitude * math.sqrt(dt)

    streams = [_RunStreams(cfg, r, n_x, n_j) for r in runs]
    J = np.empty((B, n_j), dtype=int)
    for b, r in enumerate(runs):
        J[b] = r.fixed if r.mode == "fixed" else np.arange(n_j)
    have_J = np.array([r.mode == "fixed" for r in runs])
    switched = np.zeros(B, dtype=bool)
    rows = np.arange(B)[:, None]

    results = [ContinuousResult(r) for r in runs]
    alive = np.ones(B, dtype=bool)
    sum_e2 = np.zeros(B)
    sum_e = np.zeros(B)
    count = 0
    burn = cfg.burn_in_cycles

    def snapshot(step, which):
        P = ensemble_covariance(X[which])
        err = np.linalg.norm(truth[which] - X[which].mean(axis=1), axis=1)
        for i, b in enumerate(which):
            Jb = tuple(int(j) for j in J[b]) if (have_J[b] or step > 0) else ()
            kap = coverage(list(Jb), cfg.r_loc, P[i], cfg.tau_corr, n_x)
            tr = float(np.trace(P[i]))
            results[b].records.append(RunRecord(
                step, step * dt, float(err[i]), tr, kap,
                reward(kap, len(Jb), n_x, tr, params), len(Jb), Jb, bool(switched[b]),
            ))

    if record:
        snapshot(0, np.arange(B))

    for start in range(0, n_steps, CHUNK):
        k = min(CHUNK, n_steps - start)
        draws = [s.chunk(k) for s in streams]
        noise_truth = np.stack([d["truth"] for d in draws])
        noise_obs = np.stack([d["obs"] for d in draws])
        subsets = [d.get("subsets") for d in draws]
        for s in range(k):
            step = start + s
            for b, r in enumerate(runs):
                if r.mode == "every-step":
                    J[b] = subsets[b][s]
                    switched[b] = True
                elif r.mode == "poisson":
                    switched[b] = bool(draws[b]["switch"][s]) or not have_J[b]
                    if switched[b]:
                        J[b] = subsets[b][s]
            have_J[:] = True
            mask = np.zeros((B, n_x))
            mask[rows, J] = 1.0
            dY = mask * (truth * dt + obs_scale * noise_obs[:, s])
            with np.errstate(over="ignore", invalid="ignore"):
                X, n_cap = enkbf_increment(X, drift(model, X), phi, mask, dY, dt, eps_b)
                truth = truth + dt * drift(model, truth) + amp * noise_truth[:, s]
                e2 = np.sum((truth - X.mean(axis=1)) ** 2, axis=1)
            if n_cap:
                log.debug("spread coefficient capped %d times at step %d", n_cap, step)
            e = np.sqrt(e2)
            done = step + 1
            bad = alive & ~(e <= cfg.divergence_threshold)
            if not cfg.abort_on_divergence:
                finite = np.all(np.isfinite(X), axis=(1, 2)) & np.isfinite(e2)
                bad = alive & ~finite
            for b in np.flatnonzero(alive & ~bad):
                results[b].max_rmse = max(results[b].max_rmse, float(e[b]))
            if done > burn:
                good = alive & ~bad
                sum_e2[good] += e2[good]
                sum_e[good] += e[good]
                count += 1
            if record and done % cfg.record_every == 0:
                live = np.flatnonzero(alive & ~bad)
                if live.size:
                    snapshot(done, live)
            for b in np.flatnonzero(bad):
                res = results[b]
                res.diverged, res.diverged_step = True, done
                res.max_rmse = math.inf
                Jb = tuple(int(j) for j in J[b])
                res.records.append(RunRecord(done, done * dt, math.inf, math.inf, 0.0, -math.inf,
                                             len(Jb), Jb, bool(switched[b])))
            alive &= ~bad
            if not alive.all():
                X[~alive] = 0.0
                truth[~alive] = 0.0
    n_post = n_steps - burn
    for b, res in enumerate(results):
        if not res.diverged and n_post > 0:
            res.mse = sum_e2[b] / n_post
            res.mean_rmse = sum_e[b] / n_post
    return results


@dataclass
class E1Result:
    fixed: list
    random: list


def run_experiment_E1(cfg, record=True):
    """Fixed J = cfg.observe against per-step uniform switching, same seeds."""
    runs = []
    for rep in range(cfg.n_reps):
        runs.append(ContinuousRun(rep, cfg.eps, "fixed", "fixed", tuple(cfg.observe)))
        runs.append(ContinuousRun(rep, cfg.eps, cfg.switch_mode if cfg.switch_mode != "fixed" else "every-step", "random"))
    res = run_continuous(cfg, runs, record=record)
    return E1Result(res[0::2], res[1::2])


@dataclass
class E2Result:
    eps: list
    mse: list
    n_used: list
    n_diverged: list
    slope: float
    intercept: float
    inversions: int
    runs: list


def loglog_slope(x, y):
    x, y = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    slope, intercept = np.polyfit(x, y, 1)
    return float(slope), float(intercept)


def run_experiment_E2(cfg, record=True):
    """Doubly averaged MSE per eps (time after burn-in, then repetitions)."""
    mode = cfg.switch_mode if cfg.switch_mode != "fixed" else "every-step"
    runs = [ContinuousRun(rep, eps, mode, f"eps={eps!r}") for eps in cfg.eps_list for rep in range(cfg.n_reps)]
    res = run_continuous(cfg, runs, record=record)
    eps_out, mse, used, div = [], [], [], []
    for i, eps in enumerate(cfg.eps_list):
        block = res[i * cfg.n_reps:(i + 1) * cfg.n_reps]
        vals = [r.mse for r in block if not r.diverged]
        eps_out.append(eps)
        used.append(len(vals))
        div.append(cfg.n_reps - len(vals))
        mse.append(float(np.mean(vals)) if vals else math.nan)
    ok = [i for i, m in enumerate(mse) if math.isfinite(m)]
    slope, intercept = math.nan, math.nan
    if len({eps_out[i] for i in ok}) >= 2:
        slope, intercept = loglog_slope([eps_out[i] for i in ok], [mse[i] for i in ok])
    order = np.argsort(eps_out)
    seq = [mse[i] for i in order if math.isfinite(mse[i])]
    inversions = sum(1 for a, b in zip(seq, seq[1:]) if b < a)
    return E2Result(eps_out, mse, used, div, slope, intercept, inversions, res)


# ---------------------------------------------------------------------------
# discrete LETKF learning runs (E3)


@dataclass
class DAState:
    truth: np.ndarray
    ensemble: np.ndarray
    bandit: BanditState
    switcher: PoissonSwitcher
    index_rng: np.random.Generator
    obs_rng: np.random.Generator
    operator: ObservationOperator = None
    arm: int = None
    cycle: int = 0
    cov: np.ndarray = None
    diverged: bool = False


def init_da_state(cfg, rep, model=None):
    model = model or make_model(cfg)
    truth = initial_truth(cfg, model, rep)
    return DAState(
        truth=truth,
        ensemble=initial_ensemble(cfg, truth, rep),
        bandit=BanditState(cfg.arm_values, c=cfg.c),
        switcher=PoissonSwitcher(cfg.lam, rngs.stream(cfg.seed, rep, "switch")),
        index_rng=rngs.stream(cfg.seed, rep, "obs-index"),
        obs_rng=rngs.stream(cfg.seed, rep, "obs-noise"),
    )


def da_cycle(state, cfg, model=None):
    """One forecast-analysis cycle; mutates and returns ``state`` with its record.

    Order: Poisson switch draw; on a switch (or the first cycle) a UCB1 arm
    and a fresh uniform subset; play count; ``n_inner`` RK4 steps of truth and
    ensemble; inflation; observation of the forecast truth with R = eps^2 I;
    LETKF analysis; covariance, coverage, reward, mean-reward update; error.
    """
    model = model or make_model(cfg)
    n_x = model.dim
    switched = state.switcher.draw()
    if state.operator is None or switched:
        state.arm = choose_arm(state.bandit)
        n_j = state.bandit.arms[state.arm]
        idx = tuple(int(i) for i in sample_subsets(n_x, n_j, state.index_rng, 1)[0])
        state.operator = ObservationOperator(idx, n_x, cfg.eps)
    H = state.operator
    record_pull(state.bandit, state.arm)
    state.cycle += 1
    t = state.cycle * cfg.n_inner * cfg.dt

    try:
        Z = np.vstack([state.truth[None, :], state.ensemble])
        for s in range(cfg.n_inner):
            Z = rk4_step(model, Z, cfg.dt, step=s)
        state.truth, X = Z[0], Z[1:]
        X = inflate(X, cfg.inflation)
        y = discrete_observation(H, state.truth, state.obs_rng)
        with np.errstate(over="ignore", invalid="ignore"):
            X = letkf_analysis(X, y, H, AnalysisConfig(cfg.inflation, cfg.r_loc, cfg.eps))
    except (BlowUpError, np.linalg.LinAlgError):
        state.diverged = True
        return state, RunRecord(state.cycle, t, math.inf, math.inf, 0.0, -math.inf, H.n_j, H.indices, switched)
    state.ensemble = X
    P = ensemble_covariance(X)
    state.cov = P
    kap = coverage(list(H.indices), cfg.r_loc, P, cfg.tau_corr, n_x)
    tr = float(np.trace(P))
    r = reward(kap, H.n_j, n_x, tr, cfg.reward_params)
    update_arm(state.bandit, state.arm, r)
    err = float(np.linalg.norm(state.truth - X.mean(axis=0)))
    if not err <= cfg.divergence_threshold:
        state.diverged = True
        err = math.inf
    return state, RunRecord(state.cycle, t, err, tr, kap, r, H.n_j, H.indices, switched)


@dataclass
class E3Rep:
    rep: int
    plays: np.ndarray
    mu_hat: np.ndarray
    n_star: int
    diverged: bool
    records: list
    p0_max: float
    p0_min: float
    diag_max: np.ndarray
    diag_min: np.ndarray

    @property
    def total_pulls(self):
        return int(self.plays.sum())


@dataclass
class E3Result:
    arms: list
    reps: list

    @property
    def n_stars(self):
        return [r.n_star for r in self.reps]

    def histogram(self):
        return np.sum([r.plays for r in self.reps], axis=0)


def run_learning_rep(cfg, rep, model=None):
    model = model or make_model(cfg)
    state = init_da_state(cfg, rep, model)
    P0 = np.diagonal(ensemble_covariance(state.ensemble))
    records, dmax, dmin = [], [], []
    for _ in range(cfg.n_cycles):
        state, rec = da_cycle(state, cfg, model)
        records.append(rec)
        if state.cov is not None and not rec.diverged:
            d = np.diagonal(state.cov)
            dmax.append(d.max())
            dmin.append(d.min())
        if state.diverged and (cfg.abort_on_divergence or not math.isfinite(rec.trace_p)):
            log.warning("rep %d diverged at cycle %d", rep, state.cycle)
            break
    B = state.bandit
    n_star = B.arms[int(np.argmax(B.plays))]
    return E3Rep(rep, B.plays.copy(), B.mu_hat.copy(), n_star, state.diverged, records,
                 float(P0.max()), float(P0.min()), np.array(dmax), np.array(dmin))


def run_experiment_E3(cfg, reps=None, progress=None):
    """Sequential N_J learning over ``cfg.n_reps`` repetitions (or the given rep indices)."""
    model = make_model(cfg)
    out = []
    for rep in (range(cfg.n_reps) if reps is None else reps):
        out.append(run_learning_rep(cfg, rep, model))
        if progress:
            progress(out[-1])
    return E3Result(cfg.arm_values, out)


# ---------------------------------------------------------------------------
# synthetic bandit check


@dataclass
class SelfTestResult:
    best_fractions: list
    regrets: list
    pseudo_regrets: list


def run_bandit_selftest(seed=0, n_seeds=20, n_pulls=10_000, means=(0.9, 0.5, 0.1), c=1.0):
    from randobs.bandit import run_bernoulli_ucb

    fr, rg, ps = [], [], []
    for i in range(n_seeds):
        res = run_bernoulli_ucb(means, n_pulls, rngs.stream(seed, i, "bandit"), c=c)
        fr.append(float(res.best_fraction))
        rg.append(float(res.regret))
        ps.append(float(res.pseudo_regret))
    return SelfTestResult(fr, rg, ps)
