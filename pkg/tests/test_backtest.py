import math
from dataclasses import astuple

import numpy as np
import pytest

from mvsac import MarketModel, MVProblem, PricePanel, classical_allocation, profitability, simulate_paths
from mvsac import backtest as bt
from mvsac.execution import StrategyRun, execute

PROBLEM = MVProblem(1.5, 1.0, 21 / 252, MarketModel.two_asset(0.1))


def write(tmp_path, text, name="p.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_ingest_single_return(tmp_path):
    p = bt.ingest_prices(write(tmp_path, "date,a\n0,100\n0.004,101\n"))
    np.testing.assert_allclose(p.returns, [[0.01]], rtol=1e-14)


def test_ingest_discounts(tmp_path):
    p = bt.ingest_prices(write(tmp_path, "date,a\n2020-01-01,100\n2020-12-31,100\n"), r=0.02)
    np.testing.assert_allclose(p.returns[0, 0], math.exp(-0.02) - 1, rtol=1e-12)
    assert p.times[-1] == pytest.approx(1.0)


@pytest.mark.parametrize(
    "body,message",
    [
        ("0,1\n0,2\n", "row 3: duplicate date"),
        ("0,1\n-1,2\n", "row 3: date -1 is earlier"),
        ("0,1\n1,\n", "row 3: missing value"),
        ("0,1\n1,0\n", "row 3: non-positive"),
        ("0,1\n1,x\n", "row 3: non-numeric"),
        ("0,1\n1,2,3\n", "row 3: expected 2 fields"),
        ("0,1\n2020-01-02,2\n", "row 3: mixed date formats"),
        ("0,1\n", "at least two"),
    ],
)
def test_ingest_row_diagnostics(tmp_path, body, message):
    with pytest.raises(bt.IngestError, match=message):
        bt.ingest_prices(write(tmp_path, "date,a\n" + body))


def test_ingest_bad_header(tmp_path):
    with pytest.raises(bt.IngestError, match="header"):
        bt.ingest_prices(write(tmp_path, "time,a\n0,1\n1,1\n"))


@pytest.fixture(scope="module")
def market_panel():
    return simulate_paths(MarketModel.two_asset(0.1), 24 * 21 / 252, 24 * 21, 1, seed=12)[0]


def test_plugin_with_known_parameters_is_classical(market_panel):
    model = PROBLEM.model
    exc, (_, Sinv) = model.excess(0.0), model.covariance(0.0)
    run = bt.run_plugin(market_panel, 12 * 21, PROBLEM, known=(exc, Sinv), leverage_cap=None)
    prof = profitability(PROBLEM)
    base = run.wealth[0]
    for k in range(21):
        W_norm = run.wealth[k] / base
        expected = classical_allocation(W_norm, PROBLEM, prof, exc, Sinv) * base
        np.testing.assert_allclose(run.allocations[k], expected, rtol=1e-12)


def flat_panel(steps=126, n=2):
    return PricePanel(np.arange(steps + 1) / 252, np.ones((steps + 1, n)))


def test_plugin_on_flat_prices_keeps_wealth():
    run = bt.run_plugin(flat_panel(), 63, PROBLEM, tc=0.003)
    np.testing.assert_array_equal(run.wealth, 1.0)


def test_plugin_replay(market_panel):
    a = bt.run_plugin(market_panel, 12 * 21, PROBLEM, tc=0.003)
    b = bt.run_plugin(market_panel, 12 * 21, PROBLEM, tc=0.003)
    np.testing.assert_array_equal(a.wealth, b.wealth)


def test_buy_hold_single_asset_fully_invested(market_panel):
    one = market_panel.select([0])
    run = bt.run_buy_hold(one, 21, PROBLEM)
    np.testing.assert_allclose(run.allocations[:, 0], run.wealth[:-1], rtol=1e-15)


def test_buy_hold_identical_assets_trade_only_drift():
    rng = np.random.default_rng(0)
    col = np.cumprod(np.r_[1.0, 1 + 0.01 * rng.standard_normal(84)])
    panel = PricePanel(np.arange(85) / 252, np.column_stack([col, col]))
    run = bt.run_buy_hold(panel, 21, PROBLEM, tc=0.0)
    assert run.turnover[0] == pytest.approx(1.0)
    # identical assets drift together, so rebalancing back to 1/n never trades
    np.testing.assert_allclose(run.turnover[1:], 0.0, atol=1e-15)


def test_buy_hold_flat_prices_trade_once():
    run = bt.run_buy_hold(flat_panel(), 21, PROBLEM, tc=0.003)
    assert run.turnover[0] > 0 and np.all(run.turnover[1:] == 0)
    m = bt.compute_metrics(run, PROBLEM)
    assert m.TR == pytest.approx(run.turnover[0] / run.wealth[0] / run.n_steps)


def test_index_tracks_single_asset_exactly(market_panel):
    one = market_panel.select([1])
    run = bt.run_index(one, 21, PROBLEM, tc=0.0)
    np.testing.assert_allclose(run.gross_returns, one.returns[21 : 21 + run.n_steps, 0], rtol=1e-12)
    assert np.all(run.turnover[1:] == 0)


def test_index_entry_cost_leaves_no_cash(market_panel):
    one = market_panel.select([1])
    run = bt.run_index(one, 21, PROBLEM, tc=0.003)
    # after paying the entry cost the whole wealth sits in the index
    np.testing.assert_allclose(run.wealth[1:] / run.wealth[1], one.prices[22 : 22 + run.n_steps, 0] / one.prices[22, 0],
                               rtol=1e-12)


def synthetic_run(step_returns, times=None, turnover=None):
    k = len(step_returns)
    times = np.arange(k + 1) / 252 if times is None else times
    wealth = np.r_[1.0, np.cumprod(1 + np.asarray(step_returns))]
    return StrategyRun("x", times, wealth, np.zeros((k, 1)), np.zeros(k) if turnover is None else turnover,
                       np.asarray(step_returns, dtype=float), 0.0)


def test_metrics_deterministic_growth():
    g = 0.01
    step = (1 + g) ** (1 / 21) - 1
    m = bt.compute_metrics(synthetic_run(np.full(63, step)), PROBLEM)
    assert m.STD == pytest.approx(0.0, abs=1e-15)
    assert m.CEQ == pytest.approx(12 * g, rel=1e-12)
    assert math.isnan(m.SR)


def test_metrics_zero_excess_sharpe():
    r = 0.03
    months = [r / 12 + 0.02, r / 12 - 0.02] * 3
    steps, times = [], [0.0]
    for x in months:
        # un-discounting the month must bring the compounded return back to x
        disc = (1 + x) * math.exp(-r * 21 / 252)
        steps += [disc ** (1 / 21) - 1] * 21
    times = np.arange(len(steps) + 1) / 252
    m = bt.compute_metrics(synthetic_run(steps, times), PROBLEM, r=r)
    assert m.MEAN == pytest.approx(r / 12, rel=1e-10)
    assert m.SR == pytest.approx(0.0, abs=1e-10)


def test_half_gamma_flag():
    rng = np.random.default_rng(1)
    run = synthetic_run(0.01 * rng.standard_normal(84))
    full = bt.compute_metrics(run, PROBLEM)
    half = bt.compute_metrics(run, PROBLEM, ceq_half_gamma=True)
    assert half.CEQ - full.CEQ == pytest.approx(12 * 0.75 * full.STD**2, rel=1e-10)


def test_cost_adjusted_metrics_never_better(market_panel):
    for run in (bt.run_plugin(market_panel, 12 * 21, PROBLEM, tc=0.003), bt.run_buy_hold(market_panel, 12 * 21, PROBLEM, tc=0.003)):
        m = bt.compute_metrics(run, PROBLEM)
        assert m.CEQ_TR <= m.CEQ and m.SR_TR <= m.SR
        z = bt.compute_metrics(run, PROBLEM, tc=0.0)
        assert z.CEQ_TR == z.CEQ and z.SR_TR == z.SR


def test_cost_monotonicity(market_panel):
    weights = np.array([1.2, -0.4])
    terminal = []
    for tc in (0.0, 0.001, 0.01):
        run = execute("w", market_panel, lambda j, W, held: W * weights, 1.0, tc, 2.0)
        terminal.append(run.wealth[-1])
    assert terminal[0] >= terminal[1] >= terminal[2]


def test_report_permutation_invariance():
    sym = MarketModel.stationary([0.07, 0.07], [0.12, 0.12], [[1, 0.3], [0.3, 1]])
    problem = MVProblem(1.5, 1.0, 21 / 252, sym)
    panel = simulate_paths(sym, 18 * 21 / 252, 18 * 21, 1, seed=9)[0]
    swapped = panel.select([1, 0])
    for runner in (bt.run_plugin, bt.run_buy_hold, bt.run_index):
        a = bt.compute_metrics(runner(panel, 12 * 21, problem, tc=0.003), problem)
        b = bt.compute_metrics(runner(swapped, 12 * 21, problem, tc=0.003), problem)
        np.testing.assert_allclose(astuple(a)[1:], astuple(b)[1:], rtol=1e-9)


def test_report_csv(tmp_path):
    rows = [bt.MetricsRow("A", 0.01, 0.02, 0.1, 1.0, 0.05, 0.09, 0.9)]
    bt.BacktestReport(rows).to_csv(tmp_path / "r.csv")
    assert (tmp_path / "r.csv").read_text().splitlines() == [
        "strategy,MEAN,STD,CEQ,SR,TR,CEQ_TR,SR_TR",
        "A,0.01,0.02,0.1,1.0,0.05,0.09,0.9",
    ]


def test_metrics_need_two_months():
    with pytest.raises(ValueError):
        bt.compute_metrics(synthetic_run(np.zeros(30)), PROBLEM)
