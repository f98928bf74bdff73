import math

import pytest

from randobs.config import ConfigError, parse_config


def test_empty_config_gives_table_defaults():
    cfg = parse_config("")
    assert (cfg.eps, cfg.M, cfg.dt, cfg.n_cycles, cfg.n_reps, cfg.n_inner) == (0.25, 30, 0.01, 3000, 50, 5)
    assert (cfg.alpha, cfg.beta, cfg.gamma, cfg.tau_corr, cfg.c) == (3.2, 2.5, 0.25, 0.30, 1.0)
    assert (cfg.lam, cfg.inflation, cfg.r_loc, cfg.stride) == (1000.0, 1.05, 10.0, 2)
    assert cfg.arm_values == list(range(1, 40, 2))


def test_negative_eps_names_key():
    with pytest.raises(ConfigError) as info:
        parse_config("eps = -1")
    assert info.value.key == "eps"


@pytest.mark.parametrize("text,key", [("bogus = 1", "bogus"), ("M = 2.5", "M"), ("M = x", "M"),
                                      ("burn_in = 1", "burn_in"), ("model = L42", "model")])
def test_bad_entries(text, key):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.key == key


def test_nx_pairing_and_explicit_override():
    cfg = parse_config("", overrides=["N_x=80"])
    assert (cfg.r_loc, cfg.stride) == (20.0, 5)
    cfg = parse_config("N_x = 80\nr_loc = 12  # keep mine")
    assert (cfg.r_loc, cfg.stride) == (12.0, 5)
    assert parse_config("nx = 160").arm_values[:3] == [1, 11, 21]


def test_presets_and_full_scale():
    e2 = parse_config("", experiment="E2")
    assert (e2.model, e2.dt, e2.n_cycles, e2.n_reps) == ("L63", 1e-4, 200000, 20)
    big = parse_config("", experiment="E2", full_scale=True)
    assert (big.dt, big.n_cycles, big.n_reps) == (5e-6, 1000000, 50)
    assert parse_config("dt = 0.001", experiment="E2", full_scale=True).dt == 0.001


def test_manifest_round_trip():
    cfg = parse_config("eps_list = 0.1, 0.2\nlambda = 3\n", experiment="E2", overrides=["seed=9"])
    again = parse_config(cfg.to_text())
    assert again == cfg
    assert again.to_text() == cfg.to_text()


def test_burn_in_cycles():
    assert parse_config("n_cycles = 1000\nburn_in = 0.25").burn_in_cycles == 250
    assert math.isclose(parse_config("").noise_amplitude, math.sqrt(2))
