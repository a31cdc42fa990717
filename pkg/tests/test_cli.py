import os

import pytest

from rabbi import pricing
from rabbi.sim.cli import main

KNAPSACK_CFG = """
setting = knapsack
weights = 1, 2, 1
rewards = 5, 7, 2
arrival_probs = 0.3, 0.3, 0.4
horizon = 12
budget = 6
scaling_factors = 1, 2
replications = 8
master_seed = 21
"""

PRICING_CFG = """
setting = pricing
prices = 3, 2, 1
support = 1, 2, 3
probabilities = 0.3, 0.4, 0.3
horizon = 10
inventory = 4
scaling_factors = 1
replications = 6
master_seed = 5
policies = rabbi, static
"""


def write_cfg(tmp_path, text, name="exp.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_no_subcommand_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 1
    assert "usage" in capsys.readouterr().err.lower()


def test_unknown_subcommand_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 1


def test_zero_threads_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["--threads", "0", "check-lp"])
    assert exc.value.code == 1


def test_run_missing_config(tmp_path, capsys):
    missing = str(tmp_path / "nope.cfg")
    assert main(["run", missing]) == 1
    assert missing in capsys.readouterr().err


def test_run_writes_csv_and_figure(tmp_path):
    cfg = write_cfg(tmp_path, KNAPSACK_CFG)
    out = tmp_path / "out"
    assert main(["run", cfg, "--output", str(out), "--threads", "1"]) == 0
    csv_path = out / "knapsack_regret.csv"
    png_path = out / "knapsack_regret.png"
    assert csv_path.exists() and png_path.exists()
    lines = csv_path.read_text().splitlines()
    assert lines[0].startswith("setting,policy,k,")
    assert len(lines) == 3  # header + two scaling factors


def test_run_json_format(tmp_path):
    cfg = write_cfg(tmp_path, PRICING_CFG)
    out = tmp_path / "out"
    assert main(["--format", "json", "run", cfg, "--output", str(out)]) == 0
    assert (out / "pricing_regret.json").exists()
    assert not (out / "pricing_regret.csv").exists()


def test_flags_accepted_after_subcommand(tmp_path):
    cfg = write_cfg(tmp_path, PRICING_CFG)
    out = tmp_path / "after"
    assert main(["run", cfg, "--output", str(out), "--format", "json"]) == 0
    assert (out / "pricing_regret.json").exists()


def test_threads_do_not_change_output(tmp_path):
    cfg = write_cfg(tmp_path, KNAPSACK_CFG)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["run", cfg, "--output", str(out1), "--threads", "1"]) == 0
    assert main(["run", cfg, "--output", str(out2), "--threads", "2"]) == 0
    assert (out1 / "knapsack_regret.csv").read_bytes() == \
        (out2 / "knapsack_regret.csv").read_bytes()


def test_threads_env_fallback(tmp_path, monkeypatch):
    monkeypatch.setenv("RABBI_THREADS", "2")
    cfg = write_cfg(tmp_path, KNAPSACK_CFG)
    out = tmp_path / "env"
    assert main(["run", cfg, "--output", str(out)]) == 0
    assert (out / "knapsack_regret.csv").exists()


def test_preset_pricing_demo(tmp_path, capsys):
    out = tmp_path / "demo"
    code = main(["preset", "pricing-demo", "--k-max", "1", "--reps", "10",
                 "--seed", "7", "--output", str(out)])
    assert code == 0
    csv_path = out / "pricing_regret.csv"
    assert csv_path.exists() and (out / "pricing_regret.png").exists()
    lines = csv_path.read_text().splitlines()
    assert len(lines) == 3  # header + rabbi + static at k = 1
    assert "pricing,rabbi,1," in lines[1]
    assert "pricing,static,1," in lines[2]
    assert str(csv_path) in capsys.readouterr().out


def test_preset_reruns_identically(tmp_path):
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    args = ["preset", "pricing-demo", "--k-max", "5", "--reps", "25"]
    assert main(args + ["--output", str(out1), "--threads", "1"]) == 0
    assert main(args + ["--output", str(out2), "--threads", "3"]) == 0
    assert (out1 / "pricing_regret.csv").read_bytes() == \
        (out2 / "pricing_regret.csv").read_bytes()


def test_check_lp(capsys):
    assert main(["check-lp"]) == 0
    assert "pass" in capsys.readouterr().out


def test_check_monotonicity(tmp_path, capsys):
    cfg = write_cfg(tmp_path, """
setting = knapsack
weights = 1, 1, 1
rewards = 5, 3, 1
arrival_probs = 0.3, 0.4, 0.3
horizon = 20
budget = 6
""")
    assert main(["check-monotonicity", cfg]) == 0
    assert "pass" in capsys.readouterr().out.lower()


def test_check_monotonicity_reports_overshoot_failure(tmp_path, capsys):
    # odd residual budget strands a fractional weight-2 unit whose loss
    # exceeds the displacement bound, so the check must exit nonzero
    cfg = write_cfg(tmp_path, """
setting = knapsack
weights = 1, 2, 1
rewards = 5, 7, 2
arrival_probs = 0.3, 0.3, 0.4
horizon = 3
budget = 3
""")
    assert main(["check-monotonicity", cfg]) == 2
    assert "fail" in capsys.readouterr().out.lower()


def test_dp_pricing_matches_oracle(tmp_path, capsys):
    cfg = write_cfg(tmp_path, PRICING_CFG)
    assert main(["dp", cfg]) == 0
    printed = capsys.readouterr().out
    inst = pricing.PricingInstance(prices=(3.0, 2.0, 1.0),
                                   support=(1.0, 2.0, 3.0),
                                   probabilities=(0.3, 0.4, 0.3),
                                   horizon=10, inventory=4)
    assert f"{pricing.dp_pricing_value(inst)[0]:.9g}" in printed


def test_dp_unsupported_setting(tmp_path, capsys):
    cfg = write_cfg(tmp_path, """
setting = probing
rewards = 2, 10
sub_probs = 0.5, 0.5
arrival_probs = 1
horizon = 3
hire_budget = 1
probe_budget = 2
""")
    assert main(["dp", cfg]) == 2
    assert "error" in capsys.readouterr().err
