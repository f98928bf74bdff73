from randobs.cli import main
from randobs.records import read_csv


def test_trajectory_writes_manifest_and_reruns_identically(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    args = ["--reps", "1", "n_cycles=300", "record_every=30"]
    assert main(["trajectory", "--out", str(a), *args]) == 0
    # rerun from the written manifest alone
    assert main(["trajectory", "--config", str(a / "manifest"), "--out", str(b)]) == 0
    names = sorted(p.name for p in a.iterdir())
    assert "manifest" in names and "summary.csv" in names
    for name in names:
        assert (a / name).read_bytes() == (b / name).read_bytes()
    assert read_csv(a / "run_fixed_rep000.csv")[0].cycle == 0


def test_learn_nj_outputs(tmp_path):
    assert main(["learn-nj", "--nx", "40", "--reps", "1", "--out", str(tmp_path), "n_cycles=25"]) == 0
    hist = (tmp_path / "histogram.csv").read_text().splitlines()
    assert hist[0] == "n_j,plays,n_star_count" and len(hist) == 21
    assert "r_loc = 10.0" in (tmp_path / "manifest").read_text()


def test_mse_sweep_and_selftest(tmp_path):
    assert main(["mse-sweep", "--eps-list", "0.1,0.2", "--reps", "1", "--out", str(tmp_path / "s"),
                 "n_cycles=200", "dt=0.001"]) == 0
    assert (tmp_path / "s" / "mse.csv").read_text().count("\n") == 3
    assert main(["bandit-selftest", "--reps", "2", "--pulls", "300", "--out", str(tmp_path / "b")]) == 0


def test_config_error_exit_code(tmp_path, capsys):
    assert main(["learn-nj", "--out", str(tmp_path), "eps=-1"]) == 2
    assert "eps" in capsys.readouterr().err
    assert main(["learn-nj", "--out", str(tmp_path), "nonsense=1"]) == 2
