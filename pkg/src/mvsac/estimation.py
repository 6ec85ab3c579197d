"""Sample-moment estimators and a condition-capped inverse covariance."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# eigenvalue floor used when a sample covariance is numerically zero
EIG_FLOOR = 1e-12


@dataclass(frozen=True)
class EstimationWindow:
    """Block of per-step simple returns with step length ``dt`` (years)."""

    returns: np.ndarray
    dt: float

    def __post_init__(self):
        R = np.asarray(self.returns, dtype=float)
        if R.ndim == 1:
            R = R[:, None]
        if R.shape[0] < 2:
            raise ValueError(f"need at least 2 observations, got {R.shape[0]}")
        if not np.all(np.isfinite(R)):
            raise ValueError("returns must be finite")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        object.__setattr__(self, "returns", R)


def mle_moments(window: EstimationWindow):
    """Annualised mean, volatility and covariance (``1/M`` normalisation).

    Returns:
        tuple: ``(mu_hat_minus_r, sigma_hat, sample_cov)``.  Prices are taken
        to be discounted already, so the mean is an excess rate.
    """
    R = window.returns
    mean = R.mean(axis=0)
    dev = R - mean
    cov = dev.T @ dev / R.shape[0] / window.dt
    return mean / window.dt, np.sqrt(np.diag(cov)), cov


def log_return_volatility(log_returns, dt: float) -> np.ndarray:
    """MLE volatility of log-returns, per year^(1/2)."""
    x = np.asarray(log_returns, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[0] < 2:
        raise ValueError("need at least 2 observations")
    return np.sqrt(x.var(axis=0) / dt)


def shrink_inverse_covariance(sample_cov, kappa_max: float = 100.0) -> np.ndarray:
    """Inverse of ``sample_cov`` with eigenvalues clipped to ``[l_max/kappa_max, l_max]``.

    The result is symmetric positive definite with condition number at most
    ``kappa_max``, even for rank-deficient input.
    """
    S = np.atleast_2d(np.asarray(sample_cov, dtype=float))
    if S.shape[0] != S.shape[1]:
        raise ValueError("covariance must be square")
    if kappa_max <= 1:
        raise ValueError("kappa_max must exceed 1")
    scale = max(1.0, float(np.abs(S).max()))
    if not np.allclose(S, S.T, rtol=0.0, atol=1e-12 * scale):
        raise ValueError("covariance must be symmetric")
    eig, vec = np.linalg.eigh(0.5 * (S + S.T))
    top = max(float(eig[-1]), EIG_FLOOR)
    clipped = np.clip(eig, top / kappa_max, top)
    inv = (vec / clipped) @ vec.T
    return 0.5 * (inv + inv.T)
