"""Entropy-regularised (exploratory) mean-variance formulation.

Policies are Gaussian, ``N((a0 - w) a1, exp(a2) A3)`` with time-dependent
coefficients stored as :class:`~mvsac.curves.Curve` objects.  Value
functions of such policies are quadratic in wealth,
``V(t, w) = -I(t) w^2 + H(t) w + G(t)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .curves import Curve, StepCurve, merge_breaks
from .market import MarketModel
from .mvcore import MVProblem, Profitability, profitability

LOG_2PI_E = np.log(2.0 * np.pi * np.e)


@dataclass(frozen=True)
class ExploratoryConfig:
    lam: float
    gamma: float
    w0: float
    T: float

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("exploration weight lam must be positive")
        if self.gamma <= 0 or self.w0 <= 0 or self.T <= 0:
            raise ValueError("gamma, w0 and T must be positive")

    @classmethod
    def from_problem(cls, problem: MVProblem, lam: float = 1.0) -> "ExploratoryConfig":
        return cls(lam, problem.gamma, problem.w0, problem.T)

    def problem(self, model: MarketModel) -> MVProblem:
        return MVProblem(self.gamma, self.w0, self.T, model)


@dataclass(frozen=True)
class GaussianPolicy:
    """Gaussian exploratory policy in ``(a0, a1, a2, A3)`` form."""

    a0: Curve
    a1: Curve
    a2: Curve
    A3: Curve

    def __post_init__(self):
        n = self.a1.value_shape[0]
        if self.A3.value_shape != (n, n):
            raise ValueError("A3 must be n x n")
        nodes = np.concatenate([self.A3.nodes(), self.A3.breaks])
        A = self.A3(nodes)
        if not np.allclose(A, np.swapaxes(A, 1, 2), atol=1e-10):
            raise ValueError("A3 must be symmetric")
        try:
            np.linalg.cholesky(A)
        except np.linalg.LinAlgError:
            raise ValueError("A3 must be positive definite on [0, T]") from None

    @classmethod
    def constant(cls, a0, a1, a2, A3, T: float, breaks=None) -> "GaussianPolicy":
        br = np.array([0.0, T]) if breaks is None else np.asarray(breaks, dtype=float)
        return cls(Curve.constant(a0, br), Curve.constant(a1, br), Curve.constant(a2, br), Curve.constant(A3, br))

    @classmethod
    def from_steps(cls, a0: StepCurve, a1: StepCurve, a2: StepCurve, A3: StepCurve, T: float) -> "GaussianPolicy":
        br = merge_breaks(a0.knots, a1.knots, a2.knots, A3.knots, hi=T)
        return cls(*(Curve.from_steps(c, br) for c in (a0, a1, a2, A3)))

    @property
    def n(self) -> int:
        return self.a1.value_shape[0]

    @property
    def T(self) -> float:
        return self.a0.horizon

    def breaks(self) -> np.ndarray:
        return np.unique(np.concatenate([c.breaks for c in (self.a0, self.a1, self.a2, self.A3)]))

    def mean(self, t, w):
        return (self.a0(t) - w) * self.a1(t)

    def cov(self, t):
        return np.exp(self.a2(t)) * self.A3(t)

    def at(self, t: float, w):
        """Mean (broadcast over ``w``) and covariance at time ``t``."""
        w = np.asarray(w, dtype=float)
        mean = (self.a0(t) - w)[..., None] * self.a1(t)
        return mean, self.cov(t)


@dataclass(frozen=True)
class ValueQuadratic:
    """``V(t, w) = -I(t) w^2 + H(t) w + G(t)`` with terminal slope ``tauP``."""

    I: Curve
    H: Curve
    G: Curve
    tauP: float
    expected_terminal: float = field(default=np.nan)

    def __call__(self, t, w):
        return -self.I(t) * np.square(w) + self.H(t) * w + self.G(t)

    def dw(self, t, w):
        return -2.0 * self.I(t) * w + self.H(t)

    def dww(self, t):
        return -2.0 * self.I(t)


def gaussian_entropy(cov) -> float:
    """Differential entropy of ``N(m, cov)``."""
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    if not np.allclose(cov, cov.T, atol=1e-12 * max(1.0, np.abs(cov).max())):
        raise ValueError("covariance must be symmetric")
    try:
        L = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        raise ValueError("covariance must be positive definite") from None
    n = cov.shape[0]
    return 0.5 * n * LOG_2PI_E + float(np.sum(np.log(np.diag(L))))


def optimal_policy(t: float, w, cfg: ExploratoryConfig, prof: Profitability, mu_minus_r, Sigma_inv):
    """Mean and covariance of the optimal Gaussian policy at ``(t, w)``."""
    if not 0.0 <= t <= cfg.T:
        raise ValueError(f"t={t} outside [0, {cfg.T}]")
    direction = np.asarray(Sigma_inv, dtype=float) @ np.asarray(mu_minus_r, dtype=float)
    gap = prof.tau / (2.0 * cfg.gamma) - np.asarray(w, dtype=float)
    mean = gap[..., None] * direction
    cov = 0.5 * cfg.lam * np.exp(prof.integrated(t)) / cfg.gamma * np.asarray(Sigma_inv, dtype=float)
    return mean, cov


def optimal_gaussian_policy(cfg: ExploratoryConfig, model: MarketModel, prof: Profitability | None = None) -> GaussianPolicy:
    """The optimal policy as a full time-curve object."""
    prof = prof or profitability(cfg.problem(model))
    br = merge_breaks(model.knots, hi=cfg.T)
    exc, cinv = model.excess_curve(), model.cov_inv_curve()
    a0 = Curve.constant(prof.tau / (2.0 * cfg.gamma), br)
    a1 = Curve.from_function(lambda t: np.einsum("pij,pj->pi", cinv(t), exc(t)), br)
    A_int = Curve.from_steps(prof.A, br)
    a2 = Curve.from_function(lambda t: np.log(0.5 * cfg.lam / cfg.gamma) + A_int.tail_integral(t), br)
    A3 = Curve.from_steps(cinv, br)
    return GaussianPolicy(a0, a1, a2, A3)


def optimal_value(t: float, w, cfg: ExploratoryConfig, prof: Profitability, model: MarketModel):
    """Optimal exploratory value function, integrals taken segment by segment."""
    if not 0.0 <= t <= cfg.T:
        raise ValueError(f"t={t} outside [0, {cfg.T}]")
    w = np.asarray(w, dtype=float)
    tau, g, lam, n = prof.tau, cfg.gamma, cfg.lam, model.n
    quad = -g * np.exp(-prof.integrated(t)) * (w - tau / (2.0 * g)) ** 2 + tau**2 / (4.0 * g)
    if t >= cfg.T:
        return quad
    logdet_inv = model.cov_inv_curve().map(lambda m: np.linalg.slogdet(m)[1])
    entropy = (
        (cfg.T - t) * np.log(np.pi * lam / g)
        + float(logdet_inv.integral(t, cfg.T)) / n
        + float(prof.A.moment_integral(t, cfg.T))
    )
    return quad + 0.5 * lam * n * entropy


def exploratory_wealth_step(w, mean, cov, mu_minus_r, Sigma, dt: float, noise):
    """One Euler step of the exploratory wealth SDE.

    ``mean`` may carry a leading path axis; ``noise`` holds standard normal
    draws, one per path.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    mean = np.asarray(mean, dtype=float)
    Sigma = np.asarray(Sigma, dtype=float)
    drift = mean @ np.asarray(mu_minus_r, dtype=float)
    var = np.einsum("...i,ij,...j->...", mean, Sigma, mean) + np.einsum("ij,...ji->...", Sigma, cov)
    if np.any(var < -1e-14):
        raise ValueError("negative diffusion variance")
    return w + drift * dt + np.sqrt(np.maximum(var, 0.0) * dt) * noise


def _market_funcs(model: MarketModel):
    exc, cov, cinv = model.excess_curve(), model.cov_curve(), model.cov_inv_curve()
    return exc, cov, cinv


def evaluate_policy(policy: GaussianPolicy, cfg: ExploratoryConfig, model: MarketModel, tau: float | None = None) -> ValueQuadratic:
    """Value function of a Gaussian policy.

    ``tau`` overrides the terminal slope; by default it is
    ``1 + 2 gamma E[W_T]`` under the policy started from ``cfg.w0``.
    """
    if policy.n != model.n:
        raise ValueError("policy and market dimensions differ")
    T, g, lam, n = cfg.T, cfg.gamma, cfg.lam, model.n
    br = merge_breaks(policy.breaks(), model.knots, hi=T)
    exc, cov, _ = _market_funcs(model)

    def b2(t):
        return np.einsum("pi,pi->p", policy.a1(t), exc(t))

    def c(t):
        a1 = policy.a1(t)
        return np.einsum("pi,pij,pj->p", a1, cov(t), a1)

    B2 = Curve.from_function(b2, br)
    drift_gap = Curve.from_function(lambda t: b2(t) - c(t), br)
    growth = Curve.from_function(lambda t: 2.0 * b2(t) - c(t), br)

    # mean wealth: m' = b2 (a0 - m), m(0) = w0
    inflow = Curve.from_function(lambda t: policy.a0(t) * b2(t) * np.exp(-B2.tail_integral(t)), br)
    mean_T = cfg.w0 * np.exp(-B2.total()) + inflow.total()
    tauP = 1.0 + 2.0 * g * mean_T if tau is None else float(tau)

    I = Curve.from_function(lambda t: g * np.exp(-growth.tail_integral(t)), br)
    Q = Curve.from_function(
        lambda t: policy.a0(t) * drift_gap(t) * np.exp(-drift_gap.tail_integral(t)), br
    )
    H = Curve.from_function(lambda t: np.exp(-B2.tail_integral(t)) * (tauP - 2.0 * g * Q.tail_integral(t)), br)

    def running(t):
        a0, a2, A3 = policy.a0(t), policy.a2(t), policy.A3(t)
        entropy = 0.5 * n * LOG_2PI_E + 0.5 * n * a2 + 0.5 * np.linalg.slogdet(A3)[1]
        trace = np.exp(a2) * np.einsum("pij,pji->p", cov(t), A3)
        It = I(t)
        return H(t) * a0 * b2(t) - It * a0**2 * c(t) + lam * entropy - It * trace

    R = Curve.from_function(running, br)
    G = Curve.from_function(R.tail_integral, br)
    return ValueQuadratic(I, H, G, tauP, float(mean_T))


def improve_policy(value: ValueQuadratic, cfg: ExploratoryConfig, model: MarketModel) -> GaussianPolicy:
    """Greedy Gaussian policy with respect to a quadratic value function."""
    br = merge_breaks(value.I.breaks, model.knots, hi=cfg.T)
    probe = np.concatenate([value.I.nodes(), br])
    if np.any(value.I(probe) <= 0):
        raise ValueError("value function is not concave in wealth (I <= 0)")
    exc, _, cinv = _market_funcs(model)
    a0 = Curve.from_function(lambda t: value.H(t) / (2.0 * value.I(t)), br)
    a1 = Curve.from_function(lambda t: np.einsum("pij,pj->pi", cinv(t), exc(t)), br)
    a2 = Curve.from_function(lambda t: np.log(cfg.lam / (2.0 * value.I(t))), br)
    A3 = Curve.from_steps(cinv, br)
    return GaussianPolicy(a0, a1, a2, A3)


@dataclass
class PolicyIteration:
    policies: list
    values: list
    taus: list
    converged: bool
    tau_star: float
    matches_closed_form: bool
    # improved policy evaluated with its predecessor's terminal slope
    dominating_values: list = field(default_factory=list)

    @property
    def contraction_factors(self) -> np.ndarray:
        err = np.abs(np.asarray(self.taus) - self.tau_star)
        with np.errstate(divide="ignore", invalid="ignore"):
            return err[1:] / err[:-1]


def policy_iterate(
    initial: GaussianPolicy,
    cfg: ExploratoryConfig,
    model: MarketModel,
    tol: float = 1e-10,
    max_iter: int = 50,
    track_dominance: bool = False,
) -> PolicyIteration:
    """Alternate evaluation and improvement until ``tau`` settles.

    Stops when successive terminal slopes differ by less than ``tol``.
    ``matches_closed_form`` reports whether the limit equals
    ``exp(K(0,T) T) + 2 gamma w0``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    tau_star = profitability(cfg.problem(model)).tau
    policy = initial
    value = evaluate_policy(policy, cfg, model)
    policies, values, taus, dominating = [policy], [value], [value.tauP], []
    converged = False
    for _ in range(max_iter):
        new_policy = improve_policy(value, cfg, model)
        if track_dominance:
            dominating.append(evaluate_policy(new_policy, cfg, model, tau=value.tauP))
        new_value = evaluate_policy(new_policy, cfg, model)
        policies.append(new_policy)
        values.append(new_value)
        taus.append(new_value.tauP)
        done = abs(new_value.tauP - value.tauP) < tol
        policy, value = new_policy, new_value
        if done:
            converged = True
            break
    matches = converged and abs(taus[-1] - tau_star) <= max(10 * tol, 1e-12 * abs(tau_star))
    return PolicyIteration(policies, values, taus, converged, tau_star, matches, dominating)
