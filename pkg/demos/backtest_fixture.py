"""Backtest the four strategies on the bundled synthetic price fixture."""

from pathlib import Path

from mvsac.cli import main

root = Path(__file__).resolve().parents[1]
out = Path("backtest_fixture_out")
code = main(["backtest", "--config", str(root / "tests" / "data" / "fixture.ini"), "--out", str(out), "--force"])
if code == 0:
    print((out / "report.csv").read_text())
