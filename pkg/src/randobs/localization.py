"""Localization tapers and covariance helpers."""

from dataclasses import dataclass

import numpy as np

KERNELS = ("gaspari-cohn", "uniform", "tophat")
DISTANCES = ("cyclic", "none")
DEFAULT_FLOOR = 1e-12


def cyclic_distance(i, j, n_x):
    """Index distance on a ring of ``n_x`` sites: min(|i-j|, n_x-|i-j|)."""
    d = np.abs(np.asarray(i) - np.asarray(j))
    out = np.minimum(d, n_x - d)
    return int(out) if np.ndim(out) == 0 else out


def gaspari_cohn(r):
    """Gaspari-Cohn fifth-order piecewise rational correlation function.

    ``r`` is distance over the localization radius; the function equals 1 at
    0, 5/24 at 1 and vanishes for r >= 2. Works elementwise on arrays.
    """
    r = np.abs(np.asarray(r, dtype=float))
    out = np.zeros_like(r)
    inner = r <= 1.0
    outer = (r > 1.0) & (r < 2.0)
    z = r[inner]
    out[inner] = (((-0.25 * z + 0.5) * z + 0.625) * z - 5.0 / 3.0) * z**2 + 1.0
    z = r[outer]
    out[outer] = (
        ((((z / 12.0 - 0.5) * z + 0.625) * z + 5.0 / 3.0) * z - 5.0) * z + 4.0 - 2.0 / (3.0 * z)
    )
    # round-off near the knots can leave values a hair outside [0, 1]
    np.clip(out, 0.0, 1.0, out=out)
    return float(out) if out.ndim == 0 else out


def _tophat(r):
    r = np.asarray(r, dtype=float)
    return (np.abs(r) <= 1.0).astype(float)


def _uniform(r):
    return np.ones_like(np.asarray(r, dtype=float))


_KERNEL_FUNCS = {"gaspari-cohn": gaspari_cohn, "uniform": _uniform, "tophat": _tophat}


@dataclass(frozen=True)
class LocalizationSpec:
    kernel: str = "gaspari-cohn"
    r_loc: float = 1.0
    distance: str = "cyclic"

    def __post_init__(self):
        kernel = self.kernel.lower().replace("_", "-")
        if kernel == "gc":
            kernel = "gaspari-cohn"
        if kernel not in KERNELS:
            raise ValueError(f"unknown kernel {self.kernel!r}")
        if self.distance not in DISTANCES:
            raise ValueError(f"unknown distance {self.distance!r}")
        if not self.r_loc > 0:
            raise ValueError("r_loc must be positive")
        object.__setattr__(self, "kernel", kernel)

    def weights(self, r):
        return _KERNEL_FUNCS[self.kernel](r)


def distance_matrix(n_x, distance="cyclic"):
    idx = np.arange(n_x)
    if distance == "none":
        return np.zeros((n_x, n_x), dtype=int)
    return cyclic_distance(idx[:, None], idx[None, :], n_x)


class LocalizationMatrix:
    """Immutable N_x x N_x taper with unit diagonal."""

    def __init__(self, phi):
        phi = np.array(phi, dtype=float)
        if phi.ndim != 2 or phi.shape[0] != phi.shape[1]:
            raise ValueError("phi must be square")
        phi.setflags(write=False)
        self.phi = phi

    @property
    def n_x(self):
        return self.phi.shape[0]

    def row_sum_max(self):
        """C_phi = max_k sum_i phi[k, i]."""
        return float(self.phi.sum(axis=1).max())

    def observed_row_sum_max(self, indices):
        """C_phi* = max_k sum_{j in J} phi[k, j]."""
        if len(indices) == 0:
            return 0.0
        return float(self.phi[:, list(indices)].sum(axis=1).max())

    def off_diagonal_observed_sum(self, indices):
        """Per-row sum over j in J, j != k of phi[k, j] (the diagonal-dominance quantity)."""
        mask = np.zeros(self.n_x, dtype=bool)
        mask[list(indices)] = True
        off = self.phi * mask[None, :]
        return off.sum(axis=1) - np.diag(off)

    def __array__(self, dtype=None, copy=None):
        return self.phi if dtype is None else self.phi.astype(dtype)


def build_phi(spec, n_x):
    """phi[i, j] = kernel(d(i, j) / r_loc)."""
    if n_x < 1:
        raise ValueError("n_x must be >= 1")
    d = distance_matrix(n_x, spec.distance)
    return LocalizationMatrix(spec.weights(d / spec.r_loc))


def localize(P, phi):
    """Schur product P o phi."""
    P = np.asarray(P, dtype=float)
    phi = np.asarray(phi, dtype=float)
    if P.shape[-2:] != phi.shape:
        raise ValueError(f"shape mismatch: P {P.shape} vs phi {phi.shape}")
    return P * phi


def diag_pseudo_inverse(P, floor=DEFAULT_FLOOR):
    """Diagonal matrix with entries 1 / max(P_ii, floor)."""
    P = np.asarray(P, dtype=float)
    d = np.diagonal(P, axis1=-2, axis2=-1)
    inv = 1.0 / np.maximum(d, floor)
    out = np.zeros_like(P)
    idx = np.arange(P.shape[-1])
    out[..., idx, idx] = inv
    return out
