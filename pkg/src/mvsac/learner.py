"""Actor-critic learners for the exploratory mean-variance problem.

Three pieces:

* a one-dimensional learner that estimates an asset's excess return,
* a joint learner that estimates the market's average profitability from
  given return and inverse-covariance estimates,
* an online loop that alternates the two while trading the mean of the
  learned policy.

Both learners share the critic

    v(t, w; psi) = -gamma exp(-psi2 (T-t)) (w - psi1/(2 gamma))^2 + psi3
                   + lam/2 * (psi4 (T-t) + n psi2 (T-t)^2 / 2)

which equals the optimal value function when ``psi`` takes its
ground-truth values.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .estimation import EstimationWindow, log_return_volatility, mle_moments, shrink_inverse_covariance
from .execution import StrategyRun, execute
from .exploratory import LOG_2PI_E, ExploratoryConfig
from .market import PricePanel
from .mvcore import combine_K

log = logging.getLogger(__name__)

#: default critic step sizes for (psi1, psi2, psi3, psi4)
ETA_PSI = (1e-7, 1e-4, 1e-3, 1e-3)
#: default actor step size; the effective rate decays harmonically
ETA_PHI = 1e-4
K_INNER = 10
MAX_HALVINGS = 30
#: volatility estimates below this (per year^(1/2)) are raised to it
VOL_FLOOR = 1e-6


# ---------------------------------------------------------------- critic


def critic_value(psi, s: float, w, cfg: ExploratoryConfig, n: int):
    p1, p2, p3, p4 = psi
    rem = cfg.T - s
    # an overflowing critic yields inf; updates detect it and reject the step
    with np.errstate(over="ignore", invalid="ignore"):
        quad = -cfg.gamma * np.exp(-p2 * rem) * (np.asarray(w) - p1 / (2.0 * cfg.gamma)) ** 2
    return quad + p3 + 0.5 * cfg.lam * (p4 * rem + 0.5 * n * p2 * rem**2)


def critic_truth(tau: float, K: float, logdet_cov_inv: float, cfg: ExploratoryConfig, n: int) -> np.ndarray:
    """Critic parameters that reproduce the optimal value function."""
    return np.array([
        tau,
        K,
        tau**2 / (4.0 * cfg.gamma),
        n * np.log(np.pi * cfg.lam / cfg.gamma) + logdet_cov_inv,
    ])


@dataclass(frozen=True)
class _Residual:
    """Sample-average soft temporal-difference residual at one time point.

    The next-step wealths enter only through their first two sample
    moments, which makes the loss and its gradient cheap scalar formulas.
    """

    t: float
    dt: float
    m1: float
    m2: float
    entropy: float
    v_prev: float
    cfg: ExploratoryConfig
    n: int

    def delta_and_grad(self, psi):
        g, lam = self.cfg.gamma, self.cfg.lam
        p1, p2, p3, p4 = psi
        rem = self.cfg.T - self.t - self.dt
        e1 = np.exp(-p2 * rem)
        c = p1 / (2.0 * g)
        spread = self.m2 - 2.0 * c * self.m1 + c * c
        v_next = -g * e1 * spread + p3 + 0.5 * lam * (p4 * rem + 0.5 * self.n * p2 * rem**2)
        delta = (v_next - self.v_prev) / self.dt + lam * self.entropy
        dv = np.array([
            e1 * (self.m1 - c),
            g * rem * e1 * spread + 0.25 * lam * self.n * rem**2,
            1.0,
            0.5 * lam * rem,
        ])
        return delta, dv

    def loss(self, psi) -> float:
        delta, _ = self.delta_and_grad(psi)
        return 0.5 * self.dt * delta * delta

    def loss_and_grad(self, psi):
        delta, dv = self.delta_and_grad(psi)
        # dL/dpsi = dt * delta * d(delta)/dpsi, and d(delta)/dpsi = dv / dt
        return 0.5 * self.dt * delta * delta, delta * dv


def descend_critic(residual: _Residual, psi, eta, k_inner: int = K_INNER):
    """Gradient descent on the TD loss with per-parameter steps and backtracking.

    Returns ``(psi, losses, ok)``; ``ok`` is False when a non-finite
    gradient was met, in which case the input ``psi`` is returned.
    """
    psi0 = np.asarray(psi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    cur = psi0.copy()
    loss, grad = residual.loss_and_grad(cur)
    losses = [loss]
    if not np.all(eta == 0):
        for _ in range(k_inner):
            if not (np.isfinite(loss) and np.all(np.isfinite(grad))):
                return psi0, losses, False
            step = eta.copy()
            for _ in range(MAX_HALVINGS):
                cand = cur - step * grad
                cand_loss = residual.loss(cand)
                if np.isfinite(cand_loss) and cand_loss <= loss:
                    break
                step *= 0.5
            else:
                break
            cur = cand
            loss, grad = residual.loss_and_grad(cur)
            losses.append(loss)
    if not (np.isfinite(loss) and np.all(np.isfinite(cur))):
        return psi0, losses, False
    return cur, losses, True


# ---------------------------------------------------------- one-dimensional


@dataclass(frozen=True)
class AssetLearnerState:
    """Policy ``N((phi1/(2g) - w) phi4 phi3, lam/(2g) e^{phi2 (T-t)} phi4)`` and its critic."""

    phi1: float
    phi2: float
    phi3: float
    phi4: float
    psi: tuple
    eta_psi: tuple = ETA_PSI
    eta_phi: float = ETA_PHI
    k_inner: int = K_INNER
    updates: int = 0

    def __post_init__(self):
        if not self.phi4 > 0:
            raise ValueError("phi4 (inverse variance) must be positive")
        if len(self.psi) != 4 or len(self.eta_psi) != 4:
            raise ValueError("psi and eta_psi hold four entries")

    def policy(self, t: float, w, cfg: ExploratoryConfig):
        """Mean and variance of the exploratory allocation."""
        mean = (self.phi1 / (2.0 * cfg.gamma) - np.asarray(w)) * self.phi4 * self.phi3
        var = 0.5 * cfg.lam / cfg.gamma * np.exp(self.phi2 * (cfg.T - t)) * self.phi4
        return mean, var


def asset_warm_start(mu_minus_r: float, sigma: float, cfg: ExploratoryConfig, **rates) -> AssetLearnerState:
    """Initialise every parameter at its ground-truth mapping for ``(mu-r, sigma)``."""
    sigma = max(float(sigma), VOL_FLOOR)
    K = (mu_minus_r / sigma) ** 2
    tau = np.exp(K * cfg.T) + 2.0 * cfg.gamma * cfg.w0
    psi = critic_truth(tau, K, -2.0 * np.log(sigma), cfg, 1)
    return AssetLearnerState(tau, K, float(mu_minus_r), 1.0 / sigma**2, tuple(psi), **rates)


@dataclass(frozen=True)
class UpdateInfo:
    loss_before: float
    loss_after: float
    losses: tuple
    accepted: bool


def _draw_1d(state: AssetLearnerState, t, W_t, samples, cfg, rng):
    R = np.asarray(samples, dtype=float).ravel()
    if R.size < 1:
        raise ValueError("need at least one sample")
    mean, var = state.policy(t, W_t, cfg)
    noise = rng.standard_normal(R.size)
    theta = mean + np.sqrt(var) * noise
    return R, noise, theta, var


def td_loss_1d(state: AssetLearnerState, t: float, W_t: float, samples, dt: float, cfg: ExploratoryConfig, rng):
    """TD loss of the current parameters and the simulated next wealths."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    R, _, theta, var = _draw_1d(state, t, W_t, samples, cfg, rng)
    nxt = W_t + R * theta
    entropy = 0.5 * (LOG_2PI_E + np.log(var))
    v_prev = float(critic_value(state.psi, t, W_t, cfg, 1))
    res = _Residual(t, dt, nxt.mean(), np.mean(nxt**2), entropy, v_prev, cfg, 1)
    return res.loss(state.psi), nxt


def update_asset_learner(
    state: AssetLearnerState,
    t: float,
    W_t: float,
    samples,
    dt: float,
    cfg: ExploratoryConfig,
    rng,
    sigma_hat: float | None = None,
):
    """One critic/actor update from ``M`` observed returns of a single asset.

    The critic descends the TD loss; ``phi1, phi2`` then copy ``psi1,
    psi2``; ``phi4`` is refreshed from ``sigma_hat`` when given.  The actor
    takes one curvature-scaled ascent step on the TD residual in
    ``phi3``, with a harmonically decaying step size.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    R, noise, theta, var = _draw_1d(state, t, W_t, samples, cfg, rng)
    nxt = W_t + R * theta
    entropy = 0.5 * (LOG_2PI_E + np.log(var))
    v_prev = float(critic_value(state.psi, t, W_t, cfg, 1))
    res = _Residual(t, dt, nxt.mean(), np.mean(nxt**2), entropy, v_prev, cfg, 1)
    with np.errstate(over="ignore", invalid="ignore"):
        psi, losses, ok = descend_critic(res, state.psi, state.eta_psi, state.k_inner)
    if not ok:
        log.warning("asset learner: non-finite critic gradient at t=%.6g, step rejected", t)
        return state, UpdateInfo(losses[0], losses[0], tuple(losses), False)
    phi4 = state.phi4 if sigma_hat is None else 1.0 / max(float(sigma_hat), VOL_FLOOR) ** 2
    if not (np.isfinite(phi4) and phi4 > 0):
        log.warning("asset learner: unusable volatility estimate %r, keeping phi4", sigma_hat)
        phi4 = state.phi4
    new = replace(state, phi1=float(psi[0]), phi2=float(psi[1]), phi4=phi4, psi=tuple(map(float, psi)),
                  updates=state.updates + 1)
    # the sampled allocations are re-expressed under the refreshed policy
    mean, var = new.policy(t, W_t, cfg)
    theta = mean + np.sqrt(var) * noise
    new = replace(new, phi3=_actor_step(new, t, W_t, R, theta, dt, cfg))
    return new, UpdateInfo(losses[0], losses[-1], tuple(losses), True)


def _actor_step(state: AssetLearnerState, t, W_t, R, theta, dt, cfg) -> float:
    # Ascent on the TD residual in phi3.  The gradient is divided by the
    # residual's expected curvature 2 gamma e^{-psi2 (T-t-dt)} gain^2 / phi4
    # rather than the sampled one, so the expected step vanishes exactly
    # where phi3 phi4 equals the drift-to-variance ratio of the data.
    if state.eta_phi == 0:
        return state.phi3
    gain = (state.phi1 / (2.0 * cfg.gamma) - W_t) * state.phi4
    if gain == 0:
        return state.phi3
    c = state.psi[0] / (2.0 * cfg.gamma)
    direction = -state.phi4 * np.mean(R * (W_t - c + R * theta)) / (gain * dt)
    eta = state.eta_phi / (1.0 + state.eta_phi * (state.updates - 1))
    out = state.phi3 + eta * direction
    if not np.isfinite(out):
        log.warning("asset learner: non-finite actor step at t=%.6g, phi3 kept", t)
        return state.phi3
    return float(out)


# ------------------------------------------------------------------- joint


@dataclass(frozen=True)
class JointLearnerState:
    """Policy ``N((phi1/(2g) - w) S mu_hat, lam/(2g) e^{phi2 (T-t)} S)`` with ``S = Sigma_inv_hat``."""

    phi1: float
    phi2: float
    psi: tuple
    mu_hat_minus_r: np.ndarray
    Sigma_inv_hat: np.ndarray
    eta_psi: tuple = ETA_PSI
    k_inner: int = K_INNER
    updates: int = 0

    def __post_init__(self):
        mu = np.atleast_1d(np.asarray(self.mu_hat_minus_r, dtype=float))
        S = np.atleast_2d(np.asarray(self.Sigma_inv_hat, dtype=float))
        if S.shape != (mu.size, mu.size):
            raise ValueError("Sigma_inv_hat must be n x n")
        if not np.allclose(S, S.T, atol=1e-10 * max(1.0, np.abs(S).max())):
            raise ValueError("Sigma_inv_hat must be symmetric")
        try:
            np.linalg.cholesky(S)
        except np.linalg.LinAlgError:
            raise ValueError("Sigma_inv_hat must be positive definite") from None
        object.__setattr__(self, "mu_hat_minus_r", mu)
        object.__setattr__(self, "Sigma_inv_hat", S)

    @property
    def n(self) -> int:
        return self.mu_hat_minus_r.size

    def direction(self) -> np.ndarray:
        return self.Sigma_inv_hat @ self.mu_hat_minus_r

    def policy(self, t: float, w, cfg: ExploratoryConfig):
        mean = (self.phi1 / (2.0 * cfg.gamma) - np.asarray(w, dtype=float))[..., None] * self.direction()
        cov = 0.5 * cfg.lam / cfg.gamma * np.exp(self.phi2 * (cfg.T - t)) * self.Sigma_inv_hat
        return mean, cov

    def K(self, cfg: ExploratoryConfig) -> float:
        """Average profitability implied by ``phi1``; NaN when ``phi1 <= 2 gamma w0``."""
        return implied_K(self.phi1, cfg)


def implied_K(phi1: float, cfg: ExploratoryConfig) -> float:
    excess = phi1 - 2.0 * cfg.gamma * cfg.w0
    if excess <= 0:
        return float("nan")
    return float(np.log(excess) / cfg.T)


def joint_warm_start(mu_hat_minus_r, Sigma_inv_hat, cfg: ExploratoryConfig, **rates) -> JointLearnerState:
    mu = np.atleast_1d(np.asarray(mu_hat_minus_r, dtype=float))
    S = np.atleast_2d(np.asarray(Sigma_inv_hat, dtype=float))
    K = float(mu @ S @ mu)
    tau = np.exp(K * cfg.T) + 2.0 * cfg.gamma * cfg.w0
    psi = critic_truth(tau, K, np.linalg.slogdet(S)[1], cfg, mu.size)
    return JointLearnerState(tau, K, tuple(psi), mu, S, **rates)


def _draw_joint(state: JointLearnerState, t, W_t, samples, cfg, rng):
    R = np.atleast_2d(np.asarray(samples, dtype=float))
    if R.shape[1] != state.n:
        raise ValueError(f"samples must have {state.n} columns")
    mean, cov = state.policy(t, W_t, cfg)
    chol = np.linalg.cholesky(cov)
    theta = mean + rng.standard_normal((R.shape[0], state.n)) @ chol.T
    entropy = 0.5 * state.n * LOG_2PI_E + float(np.sum(np.log(np.diag(chol))))
    return W_t + np.einsum("ki,ki->k", R, theta), entropy


def td_loss_joint(state: JointLearnerState, t: float, W_t: float, samples, dt: float, cfg: ExploratoryConfig, rng):
    if dt <= 0:
        raise ValueError("dt must be positive")
    nxt, entropy = _draw_joint(state, t, W_t, samples, cfg, rng)
    v_prev = float(critic_value(state.psi, t, W_t, cfg, state.n))
    res = _Residual(t, dt, nxt.mean(), np.mean(nxt**2), entropy, v_prev, cfg, state.n)
    return res.loss(state.psi), nxt


def update_joint_learner(state: JointLearnerState, t: float, W_t: float, samples, dt: float, cfg: ExploratoryConfig, rng):
    """Critic descent on the joint TD loss followed by ``phi1, phi2 <- psi1, psi2``."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    nxt, entropy = _draw_joint(state, t, W_t, samples, cfg, rng)
    v_prev = float(critic_value(state.psi, t, W_t, cfg, state.n))
    res = _Residual(t, dt, nxt.mean(), np.mean(nxt**2), entropy, v_prev, cfg, state.n)
    with np.errstate(over="ignore", invalid="ignore"):
        psi, losses, ok = descend_critic(res, state.psi, state.eta_psi, state.k_inner)
    if not ok:
        log.warning("joint learner: non-finite critic gradient at t=%.6g, step rejected", t)
        return state, UpdateInfo(losses[0], losses[0], tuple(losses), False)
    new = replace(state, phi1=float(psi[0]), phi2=float(psi[1]), psi=tuple(map(float, psi)), updates=state.updates + 1)
    if not np.isfinite(new.K(cfg)):
        log.info("joint learner: phi1=%.6g <= 2*gamma*w0, average profitability unreadable", new.phi1)
    return new, UpdateInfo(losses[0], losses[-1], tuple(losses), True)


# -------------------------------------------------------- simulation study


@dataclass
class LearningCurves:
    """Relative errors per episode; row 0 is the warm start."""

    mu_errors: np.ndarray  # (episodes + 1, n)
    K_errors: np.ndarray  # joint learner
    K_combination_errors: np.ndarray  # per-asset learners combined
    Sigma_inv_error: float
    phi3: np.ndarray = field(repr=False, default=None)
    K_joint: np.ndarray = field(repr=False, default=None)
    K_combination: np.ndarray = field(repr=False, default=None)

    @property
    def episodes(self) -> int:
        return self.K_errors.size - 1


def combination_K(asset_states, rho_hat, cfg: ExploratoryConfig) -> float:
    """Joint profitability assembled from per-asset learners and a correlation estimate."""
    per = np.array([implied_K(s.phi1, cfg) for s in asset_states])
    if np.any(~np.isfinite(per)):
        return float("nan")
    return combine_K(np.maximum(per, 0.0), rho_hat)


def _episode(R, assets, joint, N, M, dt, cfg, rng, sigma_hat, refresh_mu=False):
    n = len(assets)
    W_assets = np.full(n, cfg.w0)
    W_joint = cfg.w0
    for j in range(N):
        t = j * dt
        samples = R[j : j + M]
        for i in range(n):
            assets[i], _ = update_asset_learner(assets[i], t, W_assets[i], samples[:, i], dt, cfg, rng, sigma_hat[i])
            W_assets[i] += R[j, i] * assets[i].policy(t, W_assets[i], cfg)[0]
        if refresh_mu:
            joint = replace(joint, mu_hat_minus_r=np.array([a.phi3 for a in assets]))
        joint, _ = update_joint_learner(joint, t, W_joint, samples, dt, cfg, rng)
        W_joint += R[j] @ joint.policy(t, W_joint, cfg)[0]
    return assets, joint


def learning_study(
    panel: PricePanel,
    cfg: ExploratoryConfig,
    true_mu_minus_r,
    true_K: float,
    episodes: int,
    seed: int = 0,
    steps_per_episode: int = 21,
    M: int = 21,
    kappa_max: float = 100.0,
    true_Sigma_inv=None,
    eta_psi=ETA_PSI,
    eta_phi=ETA_PHI,
    k_inner: int = K_INNER,
) -> LearningCurves:
    """Episode loop of the stationary-market experiment.

    Every parameter starts at the MLE of the whole panel.  Each episode
    draws a random run of ``steps_per_episode`` consecutive returns.  At
    step ``j`` all learners update on the ``M`` returns starting at that
    step, then each learner's own wealth moves with the realised return
    ``R_j`` and its policy mean.  The samples of an update are therefore
    disjoint from the returns that produced the current wealth; reusing
    them would correlate the two and bias the residual.
    """
    if episodes < 0:
        raise ValueError("episodes must be non-negative")
    N = steps_per_episode
    if M < 1:
        raise ValueError("M must be at least 1")
    if panel.n_steps < N - 1 + M:
        raise ValueError("panel shorter than one episode plus its sample window")
    dt = cfg.T / N
    n = panel.n_assets
    mu_hat, _, cov_hat = mle_moments(EstimationWindow(panel.returns, dt))
    sigma_hat = log_return_volatility(panel.log_returns(), dt)
    S_hat = shrink_inverse_covariance(cov_hat, kappa_max)
    sd = np.sqrt(np.diag(cov_hat))
    rho_hat = cov_hat / sd[:, None] / sd[None, :]
    assets = [asset_warm_start(mu_hat[i], sigma_hat[i], cfg, eta_psi=tuple(eta_psi), eta_phi=eta_phi, k_inner=k_inner)
              for i in range(n)]
    joint = joint_warm_start(mu_hat, S_hat, cfg, eta_psi=tuple(eta_psi), k_inner=k_inner)

    truth = np.asarray(true_mu_minus_r, dtype=float)
    phi3 = np.empty((episodes + 1, n))
    K_joint = np.empty(episodes + 1)
    K_comb = np.empty(episodes + 1)

    def record(e):
        phi3[e] = [s.phi3 for s in assets]
        K_joint[e] = joint.K(cfg)
        K_comb[e] = combination_K(assets, rho_hat, cfg)

    record(0)
    rng = np.random.default_rng(seed)
    for e in range(1, episodes + 1):
        start = int(rng.integers(0, panel.n_steps - (N - 1 + M) + 1))
        assets, joint = _episode(panel.returns[start : start + N - 1 + M], assets, joint, N, M, dt, cfg, rng, sigma_hat)
        record(e)

    S_err = np.nan
    if true_Sigma_inv is not None:
        S_true = np.asarray(true_Sigma_inv, dtype=float)
        S_err = float(np.linalg.norm(S_hat - S_true, 2) / np.linalg.norm(S_true, 2))
    return LearningCurves(
        np.abs(phi3 - truth) / np.abs(truth),
        np.abs(K_joint - true_K) / true_K,
        np.abs(K_comb - true_K) / true_K,
        S_err,
        phi3,
        K_joint,
        K_comb,
    )


# ------------------------------------------------------------ online loop


@dataclass(frozen=True)
class OnlineConfig:
    """Online trading loop settings (times in years, counts in steps)."""

    T: float = 21 / 252
    N: int = 21
    m: int = 5
    M: int = 21
    leverage_cap: float = 2.0
    tc: float = 0.003
    kappa_max: float = 100.0
    window: int | None = None
    pretrain_episodes: int = 0
    eta_psi: tuple = ETA_PSI
    eta_phi: float = ETA_PHI
    k_inner: int = K_INNER

    def __post_init__(self):
        if not 1 <= self.m <= self.N:
            raise ValueError("learning cycle m must lie in [1, N]")
        if self.M < 1:
            raise ValueError("M must be at least 1")
        if self.leverage_cap <= 0:
            raise ValueError("leverage_cap must be positive")
        if self.tc < 0:
            raise ValueError("tc must be non-negative")
        if self.window is not None and self.window < 2:
            raise ValueError("window must cover at least 2 steps")

    @property
    def dt(self) -> float:
        return self.T / self.N


def run_online_sac(panel: PricePanel, train_steps: int, cfg: OnlineConfig, xcfg: ExploratoryConfig, seed: int = 0) -> StrategyRun:
    """Trade the learned policy mean over the steps after ``train_steps``.

    Learners start at the MLE of the training window (optionally refined
    by ``pretrain_episodes`` random training months).  During trading every
    ``m`` steps each asset learner updates on the latest ``M`` returns, the
    inverse covariance is re-estimated on the trailing window, and the
    joint learner updates with the assembled excess returns.  Wealth is
    re-normalised to ``w0`` at the start of each ``N``-step horizon, and
    the ``M`` update samples are the returns just before that horizon.
    """
    if train_steps < max(cfg.N - 1 + cfg.M, 2) or train_steps >= panel.n_steps:
        raise ValueError("training window must cover an episode plus M samples and leave test data")
    if abs(xcfg.T - cfg.T) > 1e-12:
        raise ValueError("exploratory and online horizons differ")
    dt, n = cfg.dt, panel.n_assets
    window = cfg.window or train_steps
    train = panel.window(0, train_steps)
    mu_hat, _, cov_hat = mle_moments(EstimationWindow(train.returns, dt))
    sigma_hat = log_return_volatility(train.log_returns(), dt)
    rates = dict(eta_psi=tuple(cfg.eta_psi), k_inner=cfg.k_inner)
    assets = [asset_warm_start(mu_hat[i], sigma_hat[i], xcfg, eta_phi=cfg.eta_phi, **rates) for i in range(n)]
    joint = joint_warm_start(mu_hat, shrink_inverse_covariance(cov_hat, cfg.kappa_max), xcfg, **rates)
    rng = np.random.default_rng(seed)

    for _ in range(cfg.pretrain_episodes):
        start = int(rng.integers(0, train.n_steps - (cfg.N - 1 + cfg.M) + 1))
        R = train.returns[start : start + cfg.N - 1 + cfg.M]
        assets, joint = _episode(R, assets, joint, cfg.N, cfg.M, dt, xcfg, rng, sigma_hat, refresh_mu=True)

    trace = {"time": [], "phi1": [], "K": [], "phi3": []}
    month = {"base": xcfg.w0}

    def decide(j: int, W: float, held):
        nonlocal assets, joint
        k = j - train_steps
        step = k % cfg.N
        if step == 0:
            month["base"] = W
            month["start"] = j
        W_norm = xcfg.w0 * W / month["base"]
        t = step * dt
        if k % cfg.m == 0:
            lo = max(0, j - window)
            # samples end where the horizon began, so they are independent
            # of the normalised wealth reached inside it
            h = month["start"]
            recent = panel.returns[h - cfg.M : h]
            logs = np.diff(np.log(panel.prices[lo : j + 1]), axis=0)
            sig = log_return_volatility(logs, dt)
            for i in range(n):
                assets[i], _ = update_asset_learner(assets[i], t, W_norm, recent[:, i], dt, xcfg, rng, sig[i])
            _, _, cov = mle_moments(EstimationWindow(panel.returns[lo:j], dt))
            joint = replace(
                joint,
                mu_hat_minus_r=np.array([s.phi3 for s in assets]),
                Sigma_inv_hat=shrink_inverse_covariance(cov, cfg.kappa_max),
            )
            joint, _ = update_joint_learner(joint, t, W_norm, recent, dt, xcfg, rng)
        trace["time"].append(panel.times[j])
        trace["phi1"].append(joint.phi1)
        trace["K"].append(joint.K(xcfg))
        trace["phi3"].append([s.phi3 for s in assets])
        mean, _ = joint.policy(t, W_norm, xcfg)
        return mean * (month["base"] / xcfg.w0)

    run = execute("SAC", panel, decide, w0=xcfg.w0, tc=cfg.tc, leverage_cap=cfg.leverage_cap, start=train_steps)
    run.trace = {k: np.asarray(v) for k, v in trace.items()}
    return run
