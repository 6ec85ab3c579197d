"""Price ingestion, baseline strategies and performance criteria."""

from __future__ import annotations

import csv
import math
from dataclasses import astuple, dataclass, fields
from datetime import date
from pathlib import Path

import numpy as np

from .estimation import EstimationWindow, mle_moments, shrink_inverse_covariance
from .execution import StrategyRun, execute
from .market import PricePanel
from .mvcore import MVProblem

MONTH_STEPS = 21
DAYS_PER_YEAR = 365.0


class IngestError(ValueError):
    """Malformed price file; the message names the offending row."""


def _parse_time(text: str, row: int):
    text = text.strip()
    try:
        return float(text), False
    except ValueError:
        pass
    try:
        return date.fromisoformat(text), True
    except ValueError:
        raise IngestError(f"row {row}: cannot parse date {text!r}") from None


def ingest_prices(path, r: float = 0.0) -> PricePanel:
    """Read raw prices and discount them at rate ``r`` from the first date.

    The ``date`` column holds either times in years or ISO dates (converted
    with an actual/365 day count).  Rows are numbered from 1 for the header.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or len(rows[0]) < 2 or rows[0][0].strip().lower() != "date":
        raise IngestError(f"{path}: header must be 'date,<asset>,...'")
    names = tuple(h.strip() for h in rows[0][1:])
    times, prices = [], []
    iso = None
    for row_no, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(names) + 1:
            raise IngestError(f"row {row_no}: expected {len(names) + 1} fields, got {len(row)}")
        t, is_iso = _parse_time(row[0], row_no)
        if iso is None:
            iso = is_iso
        elif iso != is_iso:
            raise IngestError(f"row {row_no}: mixed date formats")
        vals = []
        for name, cell in zip(names, row[1:]):
            cell = cell.strip()
            if cell == "" or cell.lower() in ("nan", "na", "null"):
                raise IngestError(f"row {row_no}: missing value for {name}")
            try:
                v = float(cell)
            except ValueError:
                raise IngestError(f"row {row_no}: non-numeric price {cell!r} for {name}") from None
            if not (math.isfinite(v) and v > 0):
                raise IngestError(f"row {row_no}: non-positive price {cell} for {name}")
            vals.append(v)
        if times:
            if t == times[-1]:
                raise IngestError(f"row {row_no}: duplicate date {row[0].strip()}")
            if t < times[-1]:
                raise IngestError(f"row {row_no}: date {row[0].strip()} is earlier than the previous row")
        times.append(t)
        prices.append(vals)
    if len(times) < 2:
        raise IngestError(f"{path}: need at least two price rows")
    if iso:
        years = np.array([(d - times[0]).days / DAYS_PER_YEAR for d in times])
    else:
        years = np.asarray(times, dtype=float)
    raw = np.asarray(prices)
    disc = raw * np.exp(-r * (years - years[0]))[:, None]
    return PricePanel(years, disc, names)


# ------------------------------------------------------------ strategies


def _test_range(panel: PricePanel, train_steps: int, N: int):
    months = (panel.n_steps - train_steps) // N
    if train_steps < 0 or months < 1:
        raise ValueError("no complete test month after the training window")
    return train_steps, train_steps + months * N


def plugin_allocation(W_norm: float, mu_hat_minus_r, Sigma_inv_hat, problem: MVProblem) -> np.ndarray:
    """Closed-form allocation with estimated inputs, ``tau`` from the estimated profitability."""
    x = np.asarray(mu_hat_minus_r, dtype=float)
    S = np.asarray(Sigma_inv_hat, dtype=float)
    direction = S @ x
    tau = math.exp(float(x @ direction) * problem.T) + 2.0 * problem.gamma * problem.w0
    return (tau / (2.0 * problem.gamma) - W_norm) * direction


def run_plugin(
    panel: PricePanel,
    train_steps: int,
    problem: MVProblem,
    window: int | None = None,
    tc: float = 0.0,
    leverage_cap: float | None = 2.0,
    kappa_max: float = 100.0,
    N: int = MONTH_STEPS,
    known=None,
) -> StrategyRun:
    """Estimate-then-optimise baseline.

    At each horizon start the excess returns and inverse covariance are
    re-estimated on the trailing ``window`` steps (default: the training
    length); within the horizon the closed-form rule is applied daily to
    wealth normalised to ``w0``.  ``known=(mu_minus_r, Sigma_inv)`` skips
    estimation.
    """
    start, stop = _test_range(panel, train_steps, N)
    window = window or train_steps
    if known is None and window < 2:
        raise ValueError("estimation window too short")
    dt = problem.T / N
    state = {"base": problem.w0, "est": known}

    def decide(j, W, held):
        step = (j - start) % N
        if step == 0:
            state["base"] = W
            if known is None:
                lo = max(0, j - window)
                mu, _, cov = mle_moments(EstimationWindow(panel.returns[lo:j], dt))
                state["est"] = (mu, shrink_inverse_covariance(cov, kappa_max))
        W_norm = problem.w0 * W / state["base"]
        mu, S = state["est"]
        return plugin_allocation(W_norm, mu, S, problem) * (state["base"] / problem.w0)

    return execute("Plug-in", panel, decide, problem.w0, tc, leverage_cap, start, stop)


def run_buy_hold(panel: PricePanel, train_steps: int, problem: MVProblem, tc: float = 0.0,
                 leverage_cap: float | None = 2.0, N: int = MONTH_STEPS) -> StrategyRun:
    """Equal-weight portfolio rebalanced to ``1/n`` of wealth at every step.

    Weights refer to wealth after the rebalancing cost, so a portfolio that
    is already balanced does not trade.
    """
    start, stop = _test_range(panel, train_steps, N)
    n = panel.n_assets

    def decide(j, W, held):
        return np.full(n, equal_weight_after_cost(W, held, tc) / n)

    return execute("B-H", panel, decide, problem.w0, tc, leverage_cap, start, stop)


def equal_weight_after_cost(W: float, held, tc: float, iters: int = 60) -> float:
    """Wealth ``x`` left after trading to ``x/n`` per asset: ``x = W - tc * sum|x/n - held|``.

    The map is a contraction with factor ``tc``, so plain iteration converges.
    """
    held = np.asarray(held, dtype=float)
    n = held.size
    x = W
    for _ in range(iters):
        nxt = W - tc * np.abs(x / n - held).sum()
        if abs(nxt - x) <= 1e-15 * max(1.0, abs(W)):
            return float(nxt)
        x = nxt
    return float(x)


def run_index(panel: PricePanel, train_steps: int, problem: MVProblem, tc: float = 0.0,
              N: int = MONTH_STEPS, name: str = "Index") -> StrategyRun:
    """Buy once with all wealth (net of the entry cost) and hold.

    A single-column panel tracks that index exactly; with several columns
    this is an equal-weight basket bought at the start and never traded.
    """
    start, stop = _test_range(panel, train_steps, N)
    n = panel.n_assets

    def decide(j, W, held):
        if j == start:
            return np.full(n, W / (n * (1.0 + tc)))
        return None

    return execute(name, panel, decide, problem.w0, tc, None, start, stop)


# --------------------------------------------------------------- metrics


@dataclass(frozen=True)
class MetricsRow:
    strategy: str
    MEAN: float
    STD: float
    CEQ: float
    SR: float
    TR: float
    CEQ_TR: float
    SR_TR: float


@dataclass
class BacktestReport:
    rows: list

    def row(self, name: str) -> MetricsRow:
        for r in self.rows:
            if r.strategy == name:
                return r
        raise KeyError(name)

    def to_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([f.name for f in fields(MetricsRow)])
            for r in self.rows:
                name, *vals = astuple(r)
                w.writerow([name, *(repr(float(v)) for v in vals)])


def monthly_returns(step_returns, times, r: float = 0.0, N: int = MONTH_STEPS) -> np.ndarray:
    """Compound per-step discounted returns into nominal per-horizon returns."""
    x = np.asarray(step_returns, dtype=float)
    months = x.size // N
    x = x[: months * N].reshape(months, N)
    span = times[N : months * N + 1 : N] - times[0 : months * N : N]
    return np.prod(1.0 + x, axis=1) * np.exp(r * span) - 1.0


def _ceq_sr(monthly: np.ndarray, gamma: float, r: float):
    mean = float(monthly.mean())
    std = float(monthly.std(ddof=1))
    ceq = 12.0 * (mean - gamma * std**2)
    sr = math.sqrt(12.0) * (mean - r / 12.0) / std if std > 0 else float("nan")
    return mean, std, ceq, sr


def compute_metrics(run: StrategyRun, problem: MVProblem, tc: float | None = None, r: float = 0.0,
                    N: int = MONTH_STEPS, ceq_half_gamma: bool = False) -> MetricsRow:
    """Seven performance criteria of one run.

    MEAN and STD are monthly; CEQ and SR are annualised from them; TR is
    the average per-step traded notional over wealth.  The ``_TR``
    variants use returns net of ``tc`` per unit traded (default: the cost
    rate the run was executed with).  SR is NaN when STD is zero.
    """
    if run.n_steps < 2 * N:
        raise ValueError("need at least two complete months")
    tc = run.tc if tc is None else tc
    g = problem.gamma / 2.0 if ceq_half_gamma else problem.gamma
    gross = monthly_returns(run.gross_returns, run.times, r, N)
    net = monthly_returns(run.net_returns(tc), run.times, r, N)
    mean, std, ceq, sr = _ceq_sr(gross, g, r)
    _, _, ceq_tr, sr_tr = _ceq_sr(net, g, r)
    tr = float(np.mean(run.turnover / run.wealth[:-1]))
    return MetricsRow(run.name, mean, std, ceq, sr, tr, ceq_tr, sr_tr)


def write_wealth_csv(run: StrategyRun, path) -> None:
    """One row per step: time, wealth, per-asset allocation and turnover."""
    n = run.allocations.shape[1]
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time", "wealth", *(f"theta_{i + 1}" for i in range(n)), "turnover"])
        for k in range(run.wealth.size):
            alloc = run.allocations[k] if k < run.n_steps else np.full(n, np.nan)
            turn = run.turnover[k] if k < run.n_steps else np.nan
            w.writerow([repr(float(run.times[k])), repr(float(run.wealth[k])),
                        *(repr(float(a)) for a in alloc), repr(float(turn))])
