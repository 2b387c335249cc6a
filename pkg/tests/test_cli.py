import json

import pytest

from gkp_forge import __version__
from gkp_forge.cli import config_digest, load_config, main, thread_count, ConfigError


def run(tmp_path, *args):
    return main([*args, "--out", str(tmp_path)])


def header(path):
    with open(path) as fh:
        return fh.readline().strip()


def test_unknown_key_is_config_error(tmp_path):
    assert run(tmp_path, "evaluate", "--set", "bogus=1") == 2


def test_unreadable_config(tmp_path):
    assert run(tmp_path, "evaluate", "--config", str(tmp_path / "missing.json")) == 2


def test_empty_sweep_range(tmp_path):
    assert run(tmp_path, "sweep", "--set", "start=0.5", "--set", "stop=0.1") == 2


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"steps": 3, "seed": 2}))
    merged = load_config("optimize", str(cfg), ["seed=5"])
    assert merged["steps"] == 3 and merged["seed"] == 5


def test_digest_is_order_independent():
    assert config_digest({"a": 1, "b": 2}) == config_digest({"b": 2, "a": 1})


def test_thread_env(monkeypatch):
    monkeypatch.setenv("GKP_FORGE_THREADS", "3")
    assert thread_count() == 3
    monkeypatch.setenv("GKP_FORGE_THREADS", "zero")
    with pytest.raises(ConfigError):
        thread_count()


def test_bad_thread_env_exits_2(tmp_path, monkeypatch):
    monkeypatch.setenv("GKP_FORGE_THREADS", "0")
    assert run(tmp_path, "verify") == 2


def test_optimize_writes_checkpoint_and_history(tmp_path):
    assert run(tmp_path, "optimize", "--set", "steps=3", "--set", "grid_points=2") == 0
    summary = json.loads((tmp_path / "optimize_summary.json").read_text())
    digest = config_digest(json.loads((tmp_path / "config.optimize.json").read_text()))
    assert header(tmp_path / "history.csv") == f"# gkp-forge {__version__} config_sha256={digest}"
    assert summary["config_sha256"] == digest
    assert json.loads((tmp_path / "checkpoint.json").read_text())["architecture"] == [3, 5, 5, 2]


def test_optimize_is_deterministic(tmp_path):
    for d in ("a", "b"):
        assert run(tmp_path / d, "optimize", "--set", "steps=3", "--set", "grid_points=2") == 0
    s = [json.loads((tmp_path / d / "optimize_summary.json").read_text())["checkpoint_sha256"] for d in "ab"]
    assert s[0] == s[1]


def test_real_coefficients_flag(tmp_path):
    assert run(tmp_path, "optimize", "--real-coefficients", "--set", "steps=2", "--set", "grid_points=2") == 0
    data = json.loads((tmp_path / "checkpoint.json").read_text())
    assert all(im == 0 for _, im in data["derived_coefficients"]["c0"] + data["derived_coefficients"]["c1"])


def test_nan_abort_exit_code(tmp_path):
    assert run(tmp_path, "optimize", "--set", "steps=2", "--set", "learning_rate=1e308", "--set", "grid_points=2") == 3


def test_solver_failure_exit_code(tmp_path, monkeypatch):
    from gkp_forge import recovery, sdp

    real = sdp.solve
    monkeypatch.setattr(recovery.sdp, "solve", lambda *a, **k: real(*a, **{**k, "max_iter": 1}))
    assert run(tmp_path, "recover", "--set", "code=conventional", "--set", "M=2", "--set", "zeta=0.35", "--set", "n_trunc=120") == 4


def test_truncation_exit_code(tmp_path):
    args = ["--set", "code=conventional", "--set", "M=10", "--set", "zeta=0.15", "--set", "points=3"]
    # the Fock space cannot grow past its cap, so the tail check fails
    from gkp_forge import cli

    orig = cli.codeword_vector_auto
    cli.codeword_vector_auto = lambda code, n: orig(code, 40, max_trunc=40)
    try:
        assert run(tmp_path, "wigner", *args) == 5
    finally:
        cli.codeword_vector_auto = orig


def test_sweep_zeta_writes_baseline(tmp_path):
    assert run(tmp_path, "sweep", "--axis", "zeta", "--set", "M=4", "--set", "num=3", "--set", "grid_points=2") == 0
    assert header(tmp_path / "sweep_zeta.csv").startswith("# gkp-forge")
    assert json.loads((tmp_path / "baseline.json").read_text())["l_eg"] <= 1e-6


def test_evaluate_and_report(tmp_path):
    assert run(tmp_path, "evaluate", "--set", "conventional_M=4", "--set", "grid_points=2") == 0
    assert (tmp_path / "gain_map.csv").exists()
    assert run(tmp_path, "report") == 0
    assert "evaluate_summary" in (tmp_path / "report.md").read_text()


def test_recover_transpose_below_sdp(tmp_path):
    assert run(tmp_path, "recover", "--set", "code=conventional", "--set", "M=2", "--set", "zeta=0.35", "--set", "n_trunc=120", "--set", "kappa_tau=0.004") == 0
    lines = (tmp_path / "recover.csv").read_text().splitlines()
    rows = {l.split(",")[0]: l.split(",") for l in lines[2:]}
    assert float(rows["transpose"][7]) <= float(rows["sdp"][7]) + 1e-9


def test_zero_noise_recover(tmp_path):
    assert run(tmp_path, "recover", "--method", "sdp", "--set", "code=conventional", "--set", "M=2", "--set", "zeta=0.35", "--set", "n_trunc=120", "--set", "kappa_tau=0", "--set", "kappa_phi_tau=0") == 0
    row = (tmp_path / "recover.csv").read_text().splitlines()[2].split(",")
    assert all(abs(float(x) - 1) < 1e-8 for x in row[1:7])


def test_simulate_zero_cycles(tmp_path):
    args = ["--set", "code=conventional", "--set", "M=2", "--set", "zeta=0.35", "--set", "n_trunc=120", "--set", "cycles=0", "--set", "compare_conventional=false"]
    assert run(tmp_path, "simulate", *args) == 0
    assert len((tmp_path / "simulate_trace.csv").read_text().splitlines()) == 2


def test_wigner_window_warning(tmp_path, capsys):
    args = ["--set", "code=conventional", "--set", "M=2", "--set", "zeta=0.35", "--set", "r=0.8", "--set", "points=5"]
    assert run(tmp_path, "wigner", *args, "--set", "q_min=-1", "--set", "q_max=1") == 0
    assert "outside the window" in capsys.readouterr().err
    assert run(tmp_path, "wigner", *args, "--set", "q_min=-1", "--set", "q_max=1", "--set", "strict=true") == 1
