"""Self-financing execution of allocation rules over a price panel.

All strategies share this engine so that leverage truncation and
transaction-cost accounting are identical across them.  Amounts are
discounted money held in each risky asset; the rest sits in the riskless
asset, which has zero discounted return.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .market import PricePanel

log = logging.getLogger(__name__)


@dataclass
class StrategyRun:
    """Outcome of executing one strategy.

    ``wealth`` has one more entry than the per-step series.  ``turnover`` is
    the traded notional ``sum |theta_j - drifted theta_{j-1}|`` at each step
    and ``gross_returns`` the per-step portfolio return before costs.
    """

    name: str
    times: np.ndarray
    wealth: np.ndarray
    allocations: np.ndarray
    turnover: np.ndarray
    gross_returns: np.ndarray
    tc: float
    ruined: bool = False
    trace: dict = field(default_factory=dict)

    def __post_init__(self):
        k = self.allocations.shape[0]
        if self.wealth.shape[0] != k + 1 or self.turnover.shape[0] != k or self.gross_returns.shape[0] != k:
            raise ValueError("inconsistent series lengths")

    @property
    def n_steps(self) -> int:
        return self.turnover.shape[0]

    def net_returns(self, tc: Optional[float] = None) -> np.ndarray:
        """Per-step returns after charging ``tc`` per unit traded."""
        tc = self.tc if tc is None else tc
        return self.gross_returns - tc * self.turnover / self.wealth[:-1]


def clip_gross_exposure(theta: np.ndarray, wealth: float, cap: float) -> np.ndarray:
    """Scale ``theta`` down proportionally so that ``sum|theta| / wealth <= cap``."""
    if cap <= 0:
        raise ValueError("leverage cap must be positive")
    gross = np.abs(theta).sum()
    if wealth > 0 and gross > cap * wealth:
        return theta * (cap * wealth / gross)
    return theta


# decide(step, wealth, holdings) -> new amounts, or None to keep drifted holdings
Decision = Callable[[int, float, np.ndarray], Optional[np.ndarray]]


def execute(
    name: str,
    panel: PricePanel,
    decide: Decision,
    w0: float = 1.0,
    tc: float = 0.0,
    leverage_cap: Optional[float] = 2.0,
    start: int = 0,
    stop: Optional[int] = None,
) -> StrategyRun:
    """Run ``decide`` over panel steps ``start..stop-1``.

    At step ``j`` the rule sees the current wealth and drifted holdings and
    returns target amounts; costs ``tc * traded`` are paid from wealth and
    the position then earns ``R_j``.  The run stops early (``ruined``) if
    wealth reaches zero.
    """
    if tc < 0:
        raise ValueError("transaction cost must be non-negative")
    stop = panel.n_steps if stop is None else stop
    if not 0 <= start < stop <= panel.n_steps:
        raise ValueError(f"bad step range [{start}, {stop}) for {panel.n_steps} steps")
    n = panel.n_assets
    k = stop - start
    wealth = np.empty(k + 1)
    alloc = np.zeros((k, n))
    traded = np.zeros(k)
    gross = np.zeros(k)
    wealth[0] = w0
    held = np.zeros(n)
    ruined = False
    done = k
    for i in range(k):
        j = start + i
        W = wealth[i]
        target = decide(j, W, held.copy())
        theta = held if target is None else np.asarray(target, dtype=float)
        if leverage_cap is not None and target is not None:
            theta = clip_gross_exposure(theta, W, leverage_cap)
        R = panel.returns[j]
        traded[i] = np.abs(theta - held).sum()
        gross[i] = R @ theta / W
        alloc[i] = theta
        wealth[i + 1] = W - tc * traded[i] + R @ theta
        held = theta * (1.0 + R)
        if not wealth[i + 1] > 0:
            log.warning("%s: wealth %.6g at step %d, stopping", name, wealth[i + 1], j)
            ruined = True
            done = i + 1
            break
    return StrategyRun(
        name,
        panel.times[start : start + done + 1].copy(),
        wealth[: done + 1],
        alloc[:done],
        traded[:done],
        gross[:done],
        tc,
        ruined,
    )
