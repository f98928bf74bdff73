"""Flat ``key = value`` experiment configuration.

Unset keys fall back to the defaults of the L96 learning runs
(eps=0.25, M=30, dt=0.01, cycles=3000, ...). An experiment preset (E1, E2,
E3) can layer its own defaults underneath explicit user settings. For L96,
``r_loc`` and the arm stride follow ``n_x`` (40/80/120/160 -> 10/20/30/40 and
2/5/7/10) unless set explicitly.
"""

from dataclasses import dataclass, field, fields, replace
import math

from randobs.bandit import RewardParams, parse_arm_grid


class ConfigError(ValueError):
    """Invalid configuration; ``key`` names the offending entry."""

    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key


NX_PAIRING = {40: (10.0, 2), 80: (20.0, 5), 120: (30.0, 7), 160: (40.0, 10)}

ALIASES = {
    "N_x": "n_x",
    "nx": "n_x",
    "cycles": "n_cycles",
    "n_steps": "n_cycles",
    "N_Inner": "n_inner",
    "lambda": "lam",
    "ucb_coeff": "c",
    "epsilon": "eps",
    "N_J": "n_j",
}


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str = "E3"
    model: str = "L96"
    n_x: int = 40
    M: int = 30
    dt: float = 0.01
    n_cycles: int = 3000
    n_inner: int = 5
    eps: float = 0.25
    eps_list: tuple = (0.02, 0.05, 0.1, 0.2, 0.4)
    lam: float = 1000.0
    stride: int = 2
    arms: str = ""
    alpha: float = 3.2
    beta: float = 2.5
    gamma: float = 0.25
    tau_corr: float = 0.30
    c: float = 1.0
    inflation: float = 1.05
    r_loc: float = 10.0
    seed: int = 0
    n_reps: int = 50
    burn_in: float = 0.2
    noise_amplitude: float = math.sqrt(2.0)
    init_spread: float = 1.0
    spinup_steps: int = 1000
    record_every: int = 1
    divergence_threshold: float = 1e3
    abort_on_divergence: bool = True
    n_j: int = 1
    observe: tuple = (2,)
    switch_mode: str = "every-step"
    omega_min: float = 1.0
    omega_max: float = 1.0
    q_min: float = 0.30
    q_max: float = 1.0
    state_bound: float = 16.0
    explicit: frozenset = field(default=frozenset(), compare=False)

    @property
    def arm_values(self):
        return parse_arm_grid(self.arms or f"1:{self.stride}:{self.n_x}")

    @property
    def reward_params(self):
        return RewardParams(self.alpha, self.beta, self.gamma, self.tau_corr, self.r_loc)

    @property
    def burn_in_cycles(self):
        return int(math.floor(self.burn_in * self.n_cycles))

    def to_text(self):
        """Serialize every key (stable order) in the format ``parse_config`` reads."""
        lines = []
        for f in fields(self):
            if f.name == "explicit":
                continue
            lines.append(f"{f.name} = {_format(getattr(self, f.name))}")
        return "\n".join(lines) + "\n"


PRESETS = {
    "E1": {"model": "L63", "n_x": 3, "dt": 0.01, "n_cycles": 20000, "n_reps": 20, "n_inner": 1,
           "eps": 0.25, "observe": (2,), "n_j": 1, "switch_mode": "every-step", "record_every": 10,
           "burn_in": 0.5, "state_bound": 50.0},
    "E2": {"model": "L63", "n_x": 3, "dt": 1e-4, "n_cycles": 200000, "n_reps": 20, "n_inner": 1,
           "n_j": 1, "switch_mode": "every-step", "record_every": 1000, "state_bound": 50.0},
    "E3": {},
}

FULL_SCALE = {
    "E2": {"dt": 5e-6, "n_cycles": 1000000, "n_reps": 50, "record_every": 5000},
    "E1": {},
    "E3": {},
}

_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def _format(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ",".join(_format(v) for v in value)
    return str(value)


def _convert(key, raw, default):
    raw = raw.strip()
    try:
        if isinstance(default, bool):
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if isinstance(default, int):
            val = float(raw)
            if val != int(val):
                raise ValueError(raw)
            return int(val)
        if isinstance(default, float):
            return float(raw)
        if isinstance(default, tuple):
            items = [p for p in raw.replace(";", ",").split(",") if p.strip()]
            conv = int if (default and isinstance(default[0], int)) else float
            return tuple(conv(p) for p in items)
        return raw
    except ValueError:
        raise ConfigError(key, f"cannot parse value {raw!r}") from None


def parse_pairs(text):
    """Parse ``key = value`` lines into an ordered dict; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected key = value, got {line!r}")
        key, value = (p.strip() for p in line.split("=", 1))
        key = ALIASES.get(key, key)
        if key not in _FIELD_TYPES or key == "explicit":
            raise ConfigError(key, "unknown key")
        out[key] = value
    return out


def build_config(pairs, experiment=None, full_scale=False):
    """Resolve defaults < experiment preset < full-size settings < explicit pairs."""
    base = ExperimentConfig()
    explicit = {k: (_convert(k, v, getattr(base, k)) if isinstance(v, str) else v) for k, v in pairs.items()}
    exp = experiment or explicit.get("experiment")
    values = {}
    if exp is not None:
        if exp not in PRESETS:
            raise ConfigError("experiment", f"unknown experiment {exp!r}")
        values["experiment"] = exp
        values.update(PRESETS[exp])
        if full_scale:
            values.update(FULL_SCALE[exp])
    values.update(explicit)
    values["model"] = str(values.get("model", base.model)).upper()
    n_x = values.get("n_x", base.n_x)
    if values["model"] == "L96":
        r_loc, stride = NX_PAIRING.get(n_x, (max(1.0, n_x / 4.0), base.stride))
        values.setdefault("r_loc", r_loc)
        values.setdefault("stride", stride)
    cfg = replace(base, **values, explicit=frozenset(explicit))
    validate(cfg)
    return cfg


def parse_config(text, experiment=None, full_scale=False, overrides=None):
    """Parse config text (plus optional ``key=value`` override strings)."""
    pairs = parse_pairs(text)
    for item in overrides or ():
        pairs.update(parse_pairs(item))
    return build_config(pairs, experiment=experiment, full_scale=full_scale)


def validate(cfg):
    def need(key, ok, what):
        if not ok:
            raise ConfigError(key, what)

    need("experiment", cfg.experiment in PRESETS, "must be E1, E2 or E3")
    need("model", cfg.model in ("L63", "L96"), "must be L63 or L96")
    if cfg.model == "L63":
        need("n_x", cfg.n_x == 3, "L63 has n_x = 3")
    else:
        need("n_x", cfg.n_x >= 4, "L96 needs n_x >= 4")
    need("M", cfg.M >= 2, "must be >= 2")
    for key in ("dt", "eps", "r_loc", "noise_amplitude", "divergence_threshold",
                "omega_min", "omega_max", "q_min", "q_max", "state_bound", "c"):
        v = getattr(cfg, key)
        need(key, math.isfinite(v) and v > 0, "must be positive")
    for key in ("n_cycles", "n_inner", "n_reps", "stride", "record_every"):
        need(key, getattr(cfg, key) >= 1, "must be a positive integer")
    for key in ("seed", "spinup_steps"):
        need(key, getattr(cfg, key) >= 0, "must be nonnegative")
    need("init_spread", cfg.init_spread >= 0, "must be nonnegative")
    need("lam", cfg.lam >= 0, "must be nonnegative")
    need("inflation", cfg.inflation >= 1.0, "must be >= 1")
    need("burn_in", 0 <= cfg.burn_in < 1, "must lie in [0, 1)")
    need("eps_list", len(cfg.eps_list) > 0 and all(e > 0 for e in cfg.eps_list), "needs positive values")
    need("n_j", 0 <= cfg.n_j <= cfg.n_x, "must lie in [0, n_x]")
    need("observe", all(0 <= i < cfg.n_x for i in cfg.observe), "indices out of range")
    need("switch_mode", cfg.switch_mode in ("every-step", "poisson", "fixed"), "every-step, poisson or fixed")
    try:
        cfg.reward_params
    except ValueError as exc:
        raise ConfigError("tau_corr", str(exc)) from None
    try:
        arms = cfg.arm_values
    except ValueError as exc:
        raise ConfigError("arms", str(exc)) from None
    need("arms", all(1 <= a <= cfg.n_x for a in arms), "arm values must lie in [1, n_x]")
