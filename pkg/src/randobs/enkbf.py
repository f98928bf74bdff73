"""Deterministic localized ensemble Kalman-Bucy filter.

Ensembles are arrays of shape ``(M, N_x)`` (one member per row). The core
update ``enkbf_increment`` also accepts extra leading batch axes so many
independent filters can be advanced together.
"""

from dataclasses import dataclass
import logging
import math

import numpy as np

from randobs.dynamics import BlowUpError, drift
from randobs.localization import DEFAULT_FLOOR

log = logging.getLogger(__name__)


def ensemble_mean(E):
    return np.mean(np.asarray(E, dtype=float), axis=-2)


def ensemble_covariance(E):
    """Sample covariance with 1/(M-1) normalization."""
    E = np.asarray(E, dtype=float)
    M = E.shape[-2]
    if M < 2:
        raise ValueError("ensemble covariance needs at least 2 members")
    A = E - E.mean(axis=-2, keepdims=True)
    return np.einsum("...mi,...mj->...ij", A, A) / (M - 1)


def tracking_error(E, x_ref):
    """e = x_ref - ensemble mean."""
    return np.asarray(x_ref, dtype=float) - ensemble_mean(E)


def covariance_interaction_term(E, model, f=None):
    """F = 1/(M-1) sum_i (X_i - mean)(f(X_i) - mean f)^T.

    ``f`` may be any callable on ``(M, N_x)`` arrays; defaults to the model drift.
    """
    E = np.asarray(E, dtype=float)
    M = E.shape[-2]
    if M < 2:
        raise ValueError("needs at least 2 members")
    fx = drift(model, E) if f is None else f(E)
    A = E - E.mean(axis=-2, keepdims=True)
    B = fx - fx.mean(axis=-2, keepdims=True)
    return np.einsum("...mi,...mj->...ij", A, B) / (M - 1)


def covariance_rhs(E, model, phi, mask, eps, floor=DEFAULT_FLOOR, f=None):
    """Right-hand side of the covariance evolution equation at the current ensemble.

    (F + F^T) + (P^+ P + P P^+) - (P^L H^T H P + P H^T H P^L) / (2 eps), with
    Omega = I so that R = eps I.
    """
    P = ensemble_covariance(E)
    F = covariance_interaction_term(E, model, f=f)
    d = 1.0 / np.maximum(np.diagonal(P, axis1=-2, axis2=-1), floor)
    Pinv_P = d[..., :, None] * P
    PL = P * np.asarray(phi)
    G = (PL * mask[..., None, :]) @ P
    return F + np.swapaxes(F, -1, -2) + Pinv_P + np.swapaxes(Pinv_P, -1, -2) - (G + np.swapaxes(G, -1, -2)) / (2 * eps)


def enkbf_increment(X, fX, phi, mask, dY, dt, eps, floor=DEFAULT_FLOOR):
    """Explicit-Euler update of a (batch of) ensemble(s).

    Parameters
    ----------
    X : ndarray (..., M, N_x)
        Current members.
    fX : ndarray (..., M, N_x)
        Drift evaluated at the members.
    phi : ndarray (N_x, N_x)
        Localization taper.
    mask : ndarray (..., N_x)
        1 where the component is observed during this step, else 0.
    dY : ndarray (..., N_x)
        Observation increments scattered to full length (zero where unobserved).
    dt, eps, floor : float
        Step, observation-noise scale (R = eps I) and P-diagonal floor.

    Returns
    -------
    X_new : ndarray
    n_capped : int
        Number of (batch, component) pairs where the spread coefficient
        dt / P_kk was clipped to 1.
    """
    M = X.shape[-2]
    mean = X.mean(axis=-2, keepdims=True)
    A = X - mean
    P = np.einsum("...mi,...mj->...ij", A, A) / (M - 1)
    var = np.diagonal(P, axis1=-2, axis2=-1)
    coef = dt / np.maximum(var, floor)
    capped = coef > 1.0
    n_capped = int(np.count_nonzero(capped))
    if n_capped:
        coef = np.minimum(coef, 1.0)
    innov = mask[..., None, :] * (X + mean) * dt - 2.0 * dY[..., None, :]
    PL = P * phi
    gain = innov @ PL / (2.0 * eps)
    X_new = X + fX * dt + coef[..., None, :] * A - gain
    return X_new, n_capped


def enkbf_step(E, model, phi, H, dY, dt, floor=DEFAULT_FLOOR, f=None, step=None):
    """Advance an ``(M, N_x)`` ensemble by one step of length ``dt``.

    ``dY`` is the observation increment over the step for the components in
    ``H.indices`` (R = H.eps * I). ``f`` overrides the drift, e.g. for tests.
    """
    E = np.asarray(E, dtype=float)
    if E.ndim != 2 or E.shape[1] != H.n_x:
        raise ValueError(f"ensemble shape {E.shape} does not match n_x={H.n_x}")
    if not dt > 0:
        raise ValueError("dt must be positive")
    dY = np.asarray(dY, dtype=float)
    if dY.shape != (H.n_j,):
        raise ValueError(f"dY must have length {H.n_j}")
    dY_full = np.zeros(H.n_x)
    dY_full[list(H.indices)] = dY
    with np.errstate(over="ignore", invalid="ignore"):
        fX = drift(model, E) if f is None else f(E)
        out, n_capped = enkbf_increment(E, fX, np.asarray(phi), H.mask, dY_full, dt, H.eps, floor)
    if n_capped:
        log.debug("spread coefficient capped on %d components at step %s", n_capped, step)
    bad = ~np.all(np.isfinite(out), axis=1)
    if bad.any():
        member = int(np.flatnonzero(bad)[0])
        raise BlowUpError(f"member {member} non-finite at step {step}", step=step, member=member)
    return out


@dataclass(frozen=True)
class BoundConstants:
    eps: float
    C_F: float
    omega_min: float
    omega_max: float
    q_min: float
    q_max: float
    C_phi_star: float
    lambda_max: float
    lambda_min: float
    t_star: float
    phi_min: float = float("nan")


def lemma1_constants(eps, omega_min, omega_max, q_min, q_max, C_F, C_phi_star, phi_min=float("nan")):
    """Upper/lower covariance levels and the warm-up time for the diagonal of P.

    lambda_max = sqrt((2 eps C_F / (omega_min q_min))^2 + 8 eps / (omega_min q_min))
    lambda_min = min(1 / (4 C_F^2 lambda_max), eps / (C_phi_star omega_max lambda_max))
    t_star     = eps / (omega_min lambda_max q_max)
    """
    for name, value in [("eps", eps), ("omega_min", omega_min), ("omega_max", omega_max),
                        ("q_min", q_min), ("q_max", q_max), ("C_phi_star", C_phi_star)]:
        if not value > 0:
            raise ValueError(f"{name} must be positive, got {value}")
    if not C_F >= 0:
        raise ValueError("C_F must be nonnegative")
    a = eps / (omega_min * q_min)
    lam_max = math.sqrt((2.0 * a * C_F) ** 2 + 8.0 * a)
    first = math.inf if C_F == 0 else 1.0 / (4.0 * C_F**2 * lam_max)
    lam_min = min(first, eps / (C_phi_star * omega_max * lam_max))
    t_star = eps / (omega_min * lam_max * q_max)
    return BoundConstants(eps, C_F, omega_min, omega_max, q_min, q_max, C_phi_star,
                          lam_max, lam_min, t_star, phi_min)


def covariance_bound_violations(diag_max, diag_min, bounds, p0_max, p0_min, tol=0.5):
    """Count cycles where the diagonal of P leaves the covariance band.

    Upper band: max(p0_max, lambda_max) * (1 + tol). Lower band:
    min(p0_min, lambda_min) * (1 - tol). Returns ``(n_upper, n_lower)``.
    """
    upper = max(p0_max, bounds.lambda_max) * (1.0 + tol)
    lower = min(p0_min, bounds.lambda_min) * (1.0 - tol)
    n_up = int(np.count_nonzero(np.asarray(diag_max) > upper))
    n_lo = int(np.count_nonzero(np.asarray(diag_min) < lower))
    if n_up or n_lo:
        log.info("covariance band left: %d above %.3g, %d below %.3g", n_up, upper, n_lo, lower)
    return n_up, n_lo
