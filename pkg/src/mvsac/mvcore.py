"""Closed-form classical mean-variance quantities."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curves import StepCurve
from .market import MarketModel, check_correlation


@dataclass(frozen=True)
class MVProblem:
    """Mean-variance problem: risk aversion, initial discounted wealth, horizon."""

    gamma: float
    w0: float
    T: float
    model: MarketModel

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.w0 <= 0:
            raise ValueError("w0 must be positive")
        if self.T <= 0:
            raise ValueError("T must be positive")


@dataclass(frozen=True)
class Profitability:
    """Current profitability curve ``A``, its averages, and the target scalar ``tau``."""

    A: StepCurve
    T: float
    tau: float

    def K(self, t: float, T: float | None = None) -> float:
        return average_K(self.A, t, self.T if T is None else T)

    def integrated(self, t: float) -> float:
        """``K(t,T) * (T - t)``, i.e. the integral of ``A`` over ``[t, T]``."""
        return float(self.A.integral(t, self.T)) if t < self.T else 0.0


def profitability_A(mu_minus_r, Sigma_inv) -> float:
    """Squared Sharpe ratio ``(mu-r)' Sigma^-1 (mu-r)``."""
    x = np.atleast_1d(np.asarray(mu_minus_r, dtype=float))
    S = np.atleast_2d(np.asarray(Sigma_inv, dtype=float))
    if S.shape != (x.size, x.size):
        raise ValueError(f"dimension mismatch: {x.shape} vs {S.shape}")
    return float(x @ S @ x)


def average_K(A: StepCurve, t: float, T: float) -> float:
    """Time average of a piecewise-constant profitability curve over ``[t, T]``."""
    if t >= T:
        raise ValueError(f"average over empty interval: t={t} >= T={T}")
    return float(A.integral(t, T)) / (T - t)


def combine_K(per_asset_K, rho) -> float:
    """Joint average profitability from per-asset ones in a stationary market."""
    k = np.atleast_1d(np.asarray(per_asset_K, dtype=float))
    if np.any(k < 0):
        raise ValueError("per-asset profitabilities must be non-negative")
    rho = check_correlation(rho)
    if rho.shape != (k.size, k.size):
        raise ValueError(f"dimension mismatch: {k.shape} vs {rho.shape}")
    root = np.sqrt(k)
    return float(root @ np.linalg.solve(rho, root))


def tau_from_K(K0T: float, T: float, gamma: float, w0: float) -> float:
    return float(np.exp(K0T * T) + 2.0 * gamma * w0)


def profitability(problem: MVProblem) -> Profitability:
    A = problem.model.profitability_curve()
    K0 = average_K(A, 0.0, problem.T)
    return Profitability(A, problem.T, tau_from_K(K0, problem.T, problem.gamma, problem.w0))


def classical_allocation(w: float, problem: MVProblem, prof: Profitability, mu_minus_r, Sigma_inv) -> np.ndarray:
    """Pre-commitment optimal discounted amounts ``(tau/(2 gamma) - w) Sigma^-1 (mu-r)``."""
    x = np.atleast_1d(np.asarray(mu_minus_r, dtype=float))
    S = np.atleast_2d(np.asarray(Sigma_inv, dtype=float))
    if S.shape != (x.size, x.size):
        raise ValueError(f"dimension mismatch: {x.shape} vs {S.shape}")
    return (prof.tau / (2.0 * problem.gamma) - w) * (S @ x)
