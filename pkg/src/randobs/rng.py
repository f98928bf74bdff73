"""Reproducible random streams.

Every stream is a Philox4x64 counter-based generator keyed by
``(seed, rep, role)``. Keys are derived with numpy's ``SeedSequence`` spawn
mechanism, so creating a new role or repetition never shifts the draws of an
existing one.
"""

import numpy as np

GENERATOR_NAME = "numpy.random.Philox(4x64-10)"

# Stable integer codes; append only.
ROLES = {
    "truth": 0,
    "ensemble-init": 1,
    "obs-noise": 2,
    "obs-index": 3,
    "switch": 4,
    "bandit": 5,
    "truth-init": 6,
}


def generator_manifest():
    """Name and version of the bit generator, for run manifests."""
    return {"rng": GENERATOR_NAME, "numpy": np.__version__}


def stream(seed, rep=0, role="truth"):
    """Return an independent ``numpy.random.Generator`` for one role of one run.

    Parameters
    ----------
    seed : int
        Master seed of the experiment.
    rep : int
        Repetition index.
    role : str or int
        Name from ``ROLES`` (or a raw nonnegative integer code).
    """
    code = ROLES[role] if isinstance(role, str) else int(role)
    if seed < 0 or rep < 0 or code < 0:
        raise ValueError("seed, rep and role code must be nonnegative")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(rep), code))
    return np.random.Generator(np.random.Philox(ss))
