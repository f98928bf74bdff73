"""Lorenz-63 / Lorenz-96 drifts and the fixed-step integrators.

All functions accept states of shape ``(..., N_x)`` so a whole ensemble (or a
batch of ensembles) can be advanced in one call.
"""

from dataclasses import dataclass, field
import functools
import math

import numpy as np


class BlowUpError(FloatingPointError):
    """A state became non-finite during integration."""

    def __init__(self, message, step=None, member=None):
        super().__init__(message)
        self.step = step
        self.member = member


L63_DEFAULTS = {"sigma": 10.0, "rho": 28.0, "beta": 8.0 / 3.0}
L96_DEFAULTS = {"forcing": 8.0}


@dataclass(frozen=True)
class DriftModel:
    """Drift specification.

    ``kind`` is ``"L63"`` or ``"L96"``. Missing parameters take the standard
    chaotic values (sigma=10, rho=28, beta=8/3; forcing=8).
    """

    kind: str
    dim: int = 3
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        kind = self.kind.upper()
        object.__setattr__(self, "kind", kind)
        if kind == "L63":
            if self.dim != 3:
                raise ValueError(f"L63 has dimension 3, got {self.dim}")
            merged = {**L63_DEFAULTS, **self.params}
        elif kind == "L96":
            if self.dim < 4:
                raise ValueError(f"L96 needs dim >= 4, got {self.dim}")
            merged = {**L96_DEFAULTS, **self.params}
        else:
            raise ValueError(f"unknown model kind {self.kind!r}")
        for key, value in merged.items():
            if not math.isfinite(value):
                raise ValueError(f"parameter {key} must be finite")
        object.__setattr__(self, "params", merged)

    @classmethod
    def lorenz63(cls, sigma=10.0, rho=28.0, beta=8.0 / 3.0):
        return cls("L63", 3, {"sigma": sigma, "rho": rho, "beta": beta})

    @classmethod
    def lorenz96(cls, dim=40, forcing=8.0):
        return cls("L96", dim, {"forcing": forcing})


@dataclass(frozen=True)
class DiffusionConfig:
    noise_amplitude: float = math.sqrt(2.0)

    def __post_init__(self):
        if not self.noise_amplitude >= 0:
            raise ValueError("noise_amplitude must be >= 0")


def drift(model, x):
    """Evaluate f(x) for an array of states with trailing dimension ``model.dim``."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != model.dim:
        raise ValueError(f"state has dimension {x.shape[-1]}, model expects {model.dim}")
    p = model.params
    if model.kind == "L63":
        X, Y, Z = x[..., 0], x[..., 1], x[..., 2]
        return np.stack(
            [
                p["sigma"] * (Y - X),
                X * (p["rho"] - Z) - Y,
                X * Y - p["beta"] * Z,
            ],
            axis=-1,
        )
    # (X_{i+1} - X_{i-2}) X_{i-1} - X_i + F, periodic
    ip1, im2, im1 = _l96_stencil(model.dim)
    return (x[..., ip1] - x[..., im2]) * x[..., im1] - x + p["forcing"]


@functools.lru_cache(maxsize=None)
def _l96_stencil(n):
    i = np.arange(n)
    return (i + 1) % n, (i - 2) % n, (i - 1) % n


def _check_finite(x, step=None):
    if not np.all(np.isfinite(x)):
        bad = np.argwhere(~np.isfinite(x))[0]
        member = int(bad[-2]) if x.ndim >= 2 else None
        raise BlowUpError(f"non-finite state at step {step}", step=step, member=member)


def rk4_step(model, x, dt, step=None):
    """One classical fourth-order Runge-Kutta step of the deterministic drift.

    Raises
    ------
    BlowUpError
        If any stage or the result is non-finite.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    with np.errstate(over="ignore", invalid="ignore"):
        k1 = drift(model, x)
        k2 = drift(model, x + 0.5 * dt * k1)
        k3 = drift(model, x + 0.5 * dt * k2)
        k4 = drift(model, x + dt * k3)
        out = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    _check_finite(out, step)
    return out


def euler_maruyama_step(model, x, dt, cfg, rng=None, noise=None, step=None):
    """x + f(x) dt + a sqrt(dt) xi with xi ~ N(0, I).

    Pass either ``rng`` (a numpy Generator) or a pre-drawn standard normal
    ``noise`` array of the same shape as ``x``. With zero amplitude the
    generator is not touched and the result is the explicit Euler step.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    with np.errstate(over="ignore", invalid="ignore"):
        out = x + dt * drift(model, x)
        if cfg.noise_amplitude > 0:
            if noise is None:
                noise = rng.standard_normal(np.shape(x))
            out = out + cfg.noise_amplitude * math.sqrt(dt) * noise
    _check_finite(out, step)
    return out


def integrate_rk4(model, x0, dt, n_steps):
    """Advance ``x0`` by ``n_steps`` RK4 steps and return the final state."""
    x = np.array(x0, dtype=float)
    for k in range(n_steps):
        x = rk4_step(model, x, dt, step=k)
    return x


def lipschitz_constant(model, state_bound):
    """Global Lipschitz constant C_F = max_i sum_j F_{d(i,j)} on the ball |x_j| <= b.

    The row sums are bounds on |df_i/dx_j| over the ball.
    """
    b = float(state_bound)
    p = model.params
    if model.kind == "L63":
        rows = [
            2.0 * abs(p["sigma"]),
            (abs(p["rho"]) + b) + 1.0 + b,
            2.0 * b + abs(p["beta"]),
        ]
        return max(rows)
    # df_i/dx_{i+1} = x_{i-1}, df_i/dx_{i-2} = -x_{i-1},
    # df_i/dx_{i-1} = x_{i+1} - x_{i-2}, df_i/dx_i = -1
    return 1.0 + 4.0 * b
