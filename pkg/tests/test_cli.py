import csv

import numpy as np
import pytest

from mvsac.cli import EXIT_CODES, main
from mvsac.config import DEFAULT_INI, ConfigError, load_config

SMALL = "[experiment]\nepisodes = {episodes}\nmonths = 40\ntrain_months = 24\ntest_months = 6\nrho_sweep = 0.0\n"


def small(tmp_path, episodes=2, extra=""):
    path = tmp_path / "run.ini"
    path.write_text(SMALL.format(episodes=episodes) + extra)
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_defaults_hold_the_study_settings():
    cfg = load_config()
    assert (cfg.gamma, cfg.lam, cfg.w0, cfg.tc, cfg.leverage_cap) == (1.5, 1.0, 1.0, 0.003, 2.0)
    assert cfg.T == pytest.approx(1 / 12) and (cfg.N, cfg.m, cfg.M) == (21, 5, 21)
    np.testing.assert_array_equal(cfg.mu_minus_r, [0.06, 0.08])
    assert cfg.rho[0, 1] == 0.1 and cfg.months == 2500 and cfg.episodes == 3000
    assert (cfg.train_months, cfg.test_months) == (144, 156)


def test_config_example_matches_defaults():
    from pathlib import Path

    shipped = Path(__file__).parents[1] / "configs" / "default.ini"
    assert shipped.read_text() == DEFAULT_INI


def test_simulate_creates_directory_and_refuses_overwrite(tmp_path, capsys):
    out = tmp_path / "deep" / "dir"
    assert main(["simulate", "--config", str(small(tmp_path)), "--out", str(out)]) == 0
    rows = read_csv(out / "panel_0.csv")
    assert len(rows) == 40 * 21 + 1 and list(rows[0]) == ["date", "asset_1", "asset_2"]
    assert main(["simulate", "--config", str(small(tmp_path)), "--out", str(out)]) == EXIT_CODES["io"]
    assert capsys.readouterr().err.startswith("error[io]: ")
    assert main(["simulate", "--config", str(small(tmp_path)), "--out", str(out), "--force"]) == 0


def test_seed_flag_changes_output(tmp_path):
    cfg = small(tmp_path)
    main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "a"), "--seed", "1"])
    main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "b"), "--seed", "2"])
    assert (tmp_path / "a" / "panel_0.csv").read_bytes() != (tmp_path / "b" / "panel_0.csv").read_bytes()


def test_learn_with_zero_episodes_keeps_warm_start(tmp_path):
    out = tmp_path / "o"
    assert main(["learn", "--config", str(small(tmp_path, episodes=0)), "--out", str(out)]) == 0
    rows = read_csv(out / "learning.csv")
    assert len(rows) == 1 and rows[0]["episode"] == "0"
    summary = read_csv(out / "learning_summary.csv")
    assert [r["rho"] for r in summary] == ["0.1", "0.0"]


def test_backtest_zero_cost_matches_gross(tmp_path):
    out = tmp_path / "o"
    cfg = small(tmp_path, extra="\n[learner]\ntc = 0\n")
    assert main(["backtest", "--config", str(cfg), "--out", str(out)]) == 0
    rows = read_csv(out / "report.csv")
    assert [r["strategy"] for r in rows] == ["SAC", "Plug-in", "B-H", "Index"]
    for r in rows:
        assert r["CEQ_TR"] == r["CEQ"] and r["SR_TR"] == r["SR"]
    wealth = read_csv(out / "wealth_SAC.csv")
    assert len(wealth) == 6 * 21 + 1 and float(wealth[0]["wealth"]) == 1.0


def test_single_asset_backtest(tmp_path):
    cfg = small(tmp_path, extra="\n[market]\nmu_minus_r = 0.06\nsigma = 0.1\nrho = 0\n")
    out = tmp_path / "o"
    assert main(["backtest", "--config", str(cfg), "--out", str(out)]) == 0
    assert list(read_csv(out / "wealth_SAC.csv")[0]) == ["time", "wealth", "theta_1", "turnover"]


def test_backtest_from_price_files(tmp_path):
    prices = tmp_path / "prices.csv"
    rng = np.random.default_rng(0)
    level = np.cumprod(1 + 0.01 * rng.standard_normal((30 * 21 + 1, 2)), axis=0) * 50
    with prices.open("w") as fh:
        fh.write("date,x,y\n")
        for k, row in enumerate(level):
            fh.write(f"{k / 252!r},{float(row[0])!r},{float(row[1])!r}\n")
    cfg = tmp_path / "real.ini"
    cfg.write_text("[market]\ndata = prices.csv\n[experiment]\ntrain_months = 24\n")
    assert main(["backtest", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    assert len(read_csv(tmp_path / "o" / "wealth_B-H.csv")) == 6 * 21 + 1


@pytest.mark.parametrize(
    "text,category",
    [
        ("[market]\nsigma = 0.1, -0.2\n", "config"),
        ("[market]\nrho = 1.5\n", "config"),
        ("[market]\nrho = 1, 0.2; 0.2, 1; 0, 0\n", "config"),
        ("[learner]\ngamma = abc\n", "config"),
        ("[learner]\nupdate_every = 40\n", "config"),
        ("[market]\ndata = missing.csv\n", "config"),
        ("not an ini file", "config"),
    ],
)
def test_config_errors(tmp_path, capsys, text, category):
    path = tmp_path / "bad.ini"
    path.write_text(text)
    code = main(["simulate", "--config", str(path), "--out", str(tmp_path / "o")])
    assert code == EXIT_CODES[category]
    err = capsys.readouterr().err.strip()
    assert err.startswith(f"error[{category}]: ") and "\n" not in err


def test_input_errors(tmp_path, capsys):
    (tmp_path / "p.csv").write_text("date,a,b\n0,1,1\n0,2,2\n")
    (tmp_path / "c.ini").write_text("[market]\ndata = p.csv\n")
    assert main(["backtest", "--config", str(tmp_path / "c.ini"), "--out", str(tmp_path / "o")]) == EXIT_CODES["input"]
    assert "row 3" in capsys.readouterr().err


def test_short_data_is_input_error(tmp_path):
    (tmp_path / "p.csv").write_text("date,a,b\n" + "".join(f"{k / 252!r},1,1\n" for k in range(30)))
    (tmp_path / "c.ini").write_text("[market]\ndata = p.csv\n")
    assert main(["backtest", "--config", str(tmp_path / "c.ini"), "--out", str(tmp_path / "o")]) == EXIT_CODES["input"]


def test_usage_errors(capsys):
    assert main(["bogus"]) == EXIT_CODES["usage"]
    assert main([]) == EXIT_CODES["usage"]
    assert main(["simulate", "--config", "/nonexistent.ini"]) == EXIT_CODES["config"]
    assert all(line.startswith("error[") for line in capsys.readouterr().err.splitlines())


def test_learn_needs_two_assets(tmp_path):
    cfg = small(tmp_path, extra="\n[market]\nmu_minus_r = 0.06\nsigma = 0.1\nrho = 0\n")
    assert main(["learn", "--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_CODES["config"]


def test_load_config_rejects_bad_counts(tmp_path):
    p = tmp_path / "c.ini"
    p.write_text("[experiment]\ntest_months = 1\n")
    with pytest.raises(ConfigError):
        load_config(p)
