"""Multi-asset market model and discounted price paths."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .curves import StepCurve


class InvalidCorrelation(ValueError):
    """Correlation matrix is not a valid positive-definite correlation."""


def check_correlation(rho) -> np.ndarray:
    rho = np.atleast_2d(np.asarray(rho, dtype=float))
    n = rho.shape[0]
    if rho.shape != (n, n):
        raise InvalidCorrelation(f"correlation must be square, got shape {rho.shape}")
    if not np.allclose(rho, rho.T, atol=1e-12):
        raise InvalidCorrelation("correlation matrix is not symmetric")
    if not np.allclose(np.diag(rho), 1.0, atol=1e-12):
        raise InvalidCorrelation("correlation matrix must have unit diagonal")
    if np.any(np.abs(rho) > 1.0 + 1e-12):
        raise InvalidCorrelation("correlation entries must lie in [-1, 1]")
    eig = np.linalg.eigvalsh(rho)
    if eig[0] <= 1e-12:
        raise InvalidCorrelation(
            f"correlation matrix is not positive definite: smallest eigenvalue {eig[0]:.6g}"
        )
    return rho


def covariance_from(sigma_at_t, rho) -> tuple[np.ndarray, np.ndarray]:
    """Covariance ``D L D`` and its inverse for volatilities ``sigma_at_t``.

    The inverse is assembled as ``D^-1 L^-1 D^-1`` with ``L^-1`` from a
    Cholesky solve, so it never inverts the (possibly badly scaled)
    covariance directly.
    """
    sigma = np.atleast_1d(np.asarray(sigma_at_t, dtype=float))
    rho = check_correlation(rho)
    if sigma.shape != (rho.shape[0],):
        raise ValueError(f"sigma has shape {sigma.shape}, correlation is {rho.shape}")
    if np.any(sigma <= 0):
        raise ValueError("volatilities must be strictly positive")
    chol = np.linalg.cholesky(rho)
    eye = np.eye(rho.shape[0])
    chol_inv = np.linalg.solve(chol, eye)
    rho_inv = chol_inv.T @ chol_inv
    cov = sigma[:, None] * rho * sigma[None, :]
    cov_inv = rho_inv / sigma[:, None] / sigma[None, :]
    return cov, 0.5 * (cov_inv + cov_inv.T)


@dataclass(frozen=True)
class MarketModel:
    """Ground-truth market dynamics.

    ``mu`` and ``sigma`` are per-year step curves of shape ``(n,)`` sharing
    one knot grid; ``r`` is the riskless rate and ``rho`` the constant
    correlation of the driving Brownian motions.
    """

    r: float
    mu: StepCurve
    sigma: StepCurve
    rho: np.ndarray

    def __post_init__(self):
        rho = check_correlation(self.rho)
        object.__setattr__(self, "rho", rho)
        if not np.array_equal(self.mu.knots, self.sigma.knots):
            raise ValueError("mu and sigma must share the same knots")
        n = rho.shape[0]
        if self.mu.value_shape != (n,) or self.sigma.value_shape != (n,):
            raise ValueError(f"curves must hold {n} assets")
        if np.any(self.sigma.values <= 0):
            raise ValueError("volatilities must be strictly positive")

    @classmethod
    def stationary(cls, mu, sigma, rho=None, r: float = 0.0) -> "MarketModel":
        mu = np.atleast_1d(np.asarray(mu, dtype=float))
        rho = np.eye(mu.size) if rho is None else rho
        return cls(r, StepCurve.constant(mu), StepCurve.constant(sigma), rho)

    @classmethod
    def two_asset(cls, rho: float = 0.1, mu_minus_r=(0.06, 0.08), sigma=(0.1, 0.15), r: float = 0.0):
        """Two "typical" stocks used in the simulation studies."""
        mu = np.asarray(mu_minus_r, dtype=float) + r
        return cls.stationary(mu, sigma, [[1.0, rho], [rho, 1.0]], r=r)

    @property
    def n(self) -> int:
        return self.rho.shape[0]

    @property
    def knots(self) -> np.ndarray:
        return self.mu.knots

    @property
    def is_stationary(self) -> bool:
        return self.mu.is_constant

    def excess(self, t) -> np.ndarray:
        return self.mu(t) - self.r

    def covariance(self, t) -> tuple[np.ndarray, np.ndarray]:
        return covariance_from(self.sigma(t), self.rho)

    def excess_curve(self) -> StepCurve:
        return StepCurve(self.knots, self.mu.values - self.r)

    def cov_curve(self) -> StepCurve:
        return StepCurve(self.knots, np.stack([covariance_from(s, self.rho)[0] for s in self.sigma.values]))

    def cov_inv_curve(self) -> StepCurve:
        return StepCurve(self.knots, np.stack([covariance_from(s, self.rho)[1] for s in self.sigma.values]))

    def profitability_curve(self) -> StepCurve:
        """Squared multi-asset Sharpe ratio ``(mu-r)' Sigma^-1 (mu-r)`` per segment."""
        vals = []
        for m, s in zip(self.mu.values, self.sigma.values):
            cov = covariance_from(s, self.rho)[0]
            x = m - self.r
            vals.append(x @ np.linalg.solve(cov, x))
        return StepCurve(self.knots, np.array(vals))

    def asset_profitability_curves(self) -> StepCurve:
        """Per-asset squared Sharpe ratios, shape ``(n,)`` per segment."""
        return StepCurve(self.knots, ((self.mu.values - self.r) / self.sigma.values) ** 2)


@dataclass(frozen=True)
class PricePanel:
    """Discounted prices on an increasing time grid (years)."""

    times: np.ndarray
    prices: np.ndarray
    names: tuple = field(default=())
    returns: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        prices = np.asarray(self.prices, dtype=float)
        if prices.ndim == 1:
            prices = prices[:, None]
        if times.ndim != 1 or times.size != prices.shape[0]:
            raise ValueError("times and prices must have matching lengths")
        if np.any(np.diff(times) <= 0):
            raise ValueError("times must be strictly increasing")
        if np.any(~np.isfinite(prices)) or np.any(prices <= 0):
            raise ValueError("prices must be finite and strictly positive")
        names = tuple(self.names) or tuple(f"asset_{i + 1}" for i in range(prices.shape[1]))
        if len(names) != prices.shape[1]:
            raise ValueError("one name per asset column required")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "prices", prices)
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "returns", prices[1:] / prices[:-1] - 1.0)

    @property
    def n_assets(self) -> int:
        return self.prices.shape[1]

    @property
    def n_steps(self) -> int:
        return self.returns.shape[0]

    def log_returns(self) -> np.ndarray:
        return np.diff(np.log(self.prices), axis=0)

    def window(self, start: int, stop: int) -> "PricePanel":
        """Sub-panel covering grid points ``start..stop`` inclusive."""
        return PricePanel(self.times[start : stop + 1], self.prices[start : stop + 1], self.names)

    def select(self, columns) -> "PricePanel":
        columns = list(columns)
        return PricePanel(self.times, self.prices[:, columns], tuple(self.names[c] for c in columns))

    def to_csv(self, path) -> None:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["date", *self.names])
            for t, row in zip(self.times, self.prices):
                w.writerow([repr(float(t)), *(repr(float(p)) for p in row)])

    @classmethod
    def from_csv(cls, path) -> "PricePanel":
        """Read a panel written by :meth:`to_csv` (``date`` in years)."""
        with Path(path).open(newline="") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], rows[1:]
        data = np.array([[float(x) for x in r] for r in body])
        return cls(data[:, 0], data[:, 1:], tuple(header[1:]))


def simulate_paths(
    model: MarketModel,
    horizon_T: float,
    steps_N: int,
    n_paths: int = 1,
    seed: int = 0,
    s0=1.0,
) -> list[PricePanel]:
    """Simulate discounted GBM price panels with the exact log scheme.

    Correlated shocks come from the Cholesky factor of the correlation
    matrix and are scaled by each asset's volatility, so time-varying
    volatilities leave the correlation untouched.  Path ``k`` draws from its
    own generator spawned from ``seed``; results depend only on the inputs.
    """
    if steps_N < 1 or n_paths < 1:
        raise ValueError("steps_N and n_paths must be at least 1")
    n = model.n
    dt = horizon_T / steps_N
    times = np.linspace(0.0, horizon_T, steps_N + 1)
    chol = np.linalg.cholesky(check_correlation(model.rho))
    idx = model.mu.index(times[:-1])
    vol = model.sigma.values[idx]
    drift = (model.mu.values[idx] - model.r - 0.5 * vol**2) * dt
    s0 = np.broadcast_to(np.asarray(s0, dtype=float), (n,))
    panels = []
    for child in np.random.SeedSequence(seed).spawn(n_paths):
        rng = np.random.default_rng(child)
        z = rng.standard_normal((steps_N, n)) @ chol.T
        logp = np.vstack([np.zeros(n), np.cumsum(drift + vol * np.sqrt(dt) * z, axis=0)])
        panels.append(PricePanel(times, s0 * np.exp(logp)))
    return panels
