"""Local ensemble transform Kalman filter with Gaspari-Cohn R-localization.

Every grid point gets its own ETKF analysis in ensemble space. Observations
enter with error variance eps^2 / gc(d / r_loc), so observations beyond the
Gaspari-Cohn support (2 r_loc) carry zero weight. All local problems are
assembled at once and solved with one batched symmetric eigendecomposition.
"""

from dataclasses import dataclass

import numpy as np

from randobs.localization import cyclic_distance, gaspari_cohn

EIG_FLOOR = 1e-12


@dataclass(frozen=True)
class AnalysisConfig:
    inflation: float = 1.05
    r_loc: float = 10.0
    eps: float = 0.25

    def __post_init__(self):
        if not self.inflation >= 1.0:
            raise ValueError("inflation must be >= 1")
        if not self.r_loc > 0:
            raise ValueError("r_loc must be positive")
        if not self.eps > 0:
            raise ValueError("eps must be positive")


def inflate(E, factor):
    """Scale deviations from the ensemble mean by ``factor``."""
    if not factor >= 1.0:
        raise ValueError("inflation factor must be >= 1")
    E = np.asarray(E, dtype=float)
    if factor == 1.0:
        return E.copy()
    mean = E.mean(axis=-2, keepdims=True)
    return mean + factor * (E - mean)


def observation_weights(indices, n_x, r_loc):
    """(N_x, N_J) Gaspari-Cohn weights gc(d(g, j) / r_loc) on the ring."""
    g = np.arange(n_x)[:, None]
    j = np.asarray(indices, dtype=int)[None, :]
    return gaspari_cohn(cyclic_distance(g, j, n_x) / r_loc)


def etkf_transform(Yb, d, rinv):
    """Batched ETKF weights.

    Parameters
    ----------
    Yb : ndarray (M, N_J)
        Observation-space perturbations.
    d : ndarray (N_J,)
        Innovation y - H mean.
    rinv : ndarray (G, N_J)
        Per-problem diagonal of R^{-1}.

    Returns
    -------
    T : ndarray (G, M, M)
        ``T[g] = wbar[:, None] + W`` so that the analysis members are
        ``mean + Xp^T @ T[g]`` at grid point g.
    """
    M = Yb.shape[0]
    C = Yb[None, :, :] * rinv[:, None, :]  # (G, M, N_J)
    A = C @ Yb.T
    A[:, np.arange(M), np.arange(M)] += M - 1
    if not np.all(np.isfinite(A)):
        raise np.linalg.LinAlgError("non-finite local transform matrix")
    lam, V = np.linalg.eigh(A)
    lam = np.maximum(lam, EIG_FLOOR)
    Pa = (V / lam[:, None, :]) @ np.swapaxes(V, 1, 2)
    wbar = (Pa @ (C @ d)[:, :, None])[:, :, 0]
    W = (V * np.sqrt((M - 1) / lam)[:, None, :]) @ np.swapaxes(V, 1, 2)
    return wbar[:, :, None] + W


def letkf_analysis(E, y, H, cfg, phi_obs_weights=None):
    """LETKF analysis of an ``(M, N_x)`` forecast ensemble.

    ``R = cfg.eps**2 I``. ``phi_obs_weights`` optionally replaces the
    Gaspari-Cohn weights with an ``(N_x, N_J)`` array (all ones means no
    localization). Grid points that see no observation keep the forecast.
    Inflation is not applied here; see ``inflate``.
    """
    E = np.asarray(E, dtype=float)
    M, n_x = E.shape
    if M < 2:
        raise ValueError("LETKF needs at least 2 members")
    if n_x != H.n_x:
        raise ValueError(f"ensemble dimension {n_x} does not match operator n_x={H.n_x}")
    y = np.asarray(y, dtype=float)
    if y.shape != (H.n_j,):
        raise ValueError(f"y must have length {H.n_j}")
    if H.n_j == 0:
        return E.copy()

    idx = list(H.indices)
    if phi_obs_weights is None:
        w = observation_weights(idx, n_x, cfg.r_loc)
    else:
        w = np.broadcast_to(np.asarray(phi_obs_weights, dtype=float), (n_x, H.n_j))

    mean = E.mean(axis=0)
    Xp = E - mean
    Yb = Xp[:, idx]
    d = y - mean[idx]

    out = E.copy()
    active = np.flatnonzero(np.any(w > 0, axis=1))
    if active.size == 0:
        return out
    T = etkf_transform(Yb, d, w[active] / cfg.eps**2)
    # member m at grid g: mean_g + sum_k Xp[k, g] T[g, k, m]
    incr = (Xp[:, active].T[:, None, :] @ T)[:, 0, :]
    out[:, active] = mean[active] + incr.T
    return out
