"""INI run configuration with the simulation-study defaults pre-filled."""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .exploratory import ExploratoryConfig
from .learner import ETA_PHI, ETA_PSI, K_INNER, OnlineConfig
from .market import MarketModel, check_correlation


class ConfigError(ValueError):
    """Invalid or inconsistent configuration value."""


DEFAULT_INI = """\
[market]
# excess return rates and volatilities per year, one entry per asset
mu_minus_r = 0.06, 0.08
sigma = 0.1, 0.15
# off-diagonal correlation for every pair, or a full matrix with rows split by ';'
rho = 0.1
r = 0.0
# price CSV for backtests (date,asset_1,...); simulated when empty
data =
index_data =

[learner]
lambda = 1.0
gamma = 1.5
w0 = 1.0
T = 21/252
# steps per horizon, returns drawn per TD step, steps between online updates
N = 21
sample_size = 21
update_every = 5
eta_psi = {eta_psi}
eta_phi = {eta_phi}
k_inner = {k_inner}
kappa_max = 100
tc = 0.003
leverage_cap = 2.0
window =
pretrain_episodes = 0
seed = 0

[experiment]
episodes = 3000
months = 2500
rho_sweep = 0.0, 0.05, 0.15
paths = 1
train_months = 144
test_months = 156
ceq_half_gamma = false
""".format(eta_psi=", ".join(repr(x) for x in ETA_PSI), eta_phi=repr(ETA_PHI), k_inner=K_INNER)


def _floats(text: str) -> list[float]:
    return [_number(x) for x in text.replace(";", ",").split(",") if x.strip()]


def _number(text: str) -> float:
    text = text.strip()
    try:
        return float(Fraction(text)) if "/" in text else float(text)
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"not a number: {text!r}") from None


def _rho(text: str, n: int) -> np.ndarray:
    if ";" in text:
        rows = [[_number(x) for x in row.split(",")] for row in text.split(";") if row.strip()]
        rho = np.array(rows, dtype=float)
    else:
        off = _number(text)
        rho = np.full((n, n), off)
        np.fill_diagonal(rho, 1.0)
    try:
        return check_correlation(rho)
    except ValueError as exc:
        raise ConfigError(f"market.rho: {exc}") from None


@dataclass
class RunConfig:
    mu_minus_r: np.ndarray
    sigma: np.ndarray
    rho: np.ndarray
    r: float
    data: Path | None
    index_data: Path | None
    lam: float
    gamma: float
    w0: float
    T: float
    N: int
    M: int
    m: int
    eta_psi: tuple
    eta_phi: float
    k_inner: int
    kappa_max: float
    tc: float
    leverage_cap: float
    window: int | None
    pretrain_episodes: int
    seed: int
    episodes: int
    months: int
    rho_sweep: tuple
    paths: int
    train_months: int
    test_months: int
    ceq_half_gamma: bool
    source: str = field(default="<defaults>")

    @property
    def n(self) -> int:
        return self.mu_minus_r.size

    def market(self, rho: np.ndarray | None = None) -> MarketModel:
        return MarketModel.stationary(self.mu_minus_r + self.r, self.sigma, self.rho if rho is None else rho, r=self.r)

    def exploratory(self) -> ExploratoryConfig:
        return ExploratoryConfig(self.lam, self.gamma, self.w0, self.T)

    def online(self) -> OnlineConfig:
        return OnlineConfig(self.T, self.N, self.m, self.M, self.leverage_cap, self.tc, self.kappa_max,
                            self.window, self.pretrain_episodes, self.eta_psi, self.eta_phi, self.k_inner)


def load_config(path=None) -> RunConfig:
    """Read ``path`` over the defaults; missing keys keep their default."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    cp.read_string(DEFAULT_INI)
    source = "<defaults>"
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        with path.open() as fh:
            try:
                cp.read_file(fh)
            except configparser.Error as exc:
                raise ConfigError(f"{path}: {exc}") from None
        source = str(path)
        base = path.parent
    else:
        base = Path.cwd()
    try:
        return _build(cp, base, source)
    except ConfigError:
        raise
    except (ValueError, KeyError) as exc:
        raise ConfigError(str(exc)) from None


def _opt_path(text: str, base: Path) -> Path | None:
    text = text.strip()
    if not text:
        return None
    p = Path(text)
    p = p if p.is_absolute() else base / p
    if not p.is_file():
        raise ConfigError(f"data file not found: {p}")
    return p


def _build(cp, base: Path, source: str) -> RunConfig:
    mk, ln, ex = cp["market"], cp["learner"], cp["experiment"]
    mu = np.array(_floats(mk["mu_minus_r"]))
    sigma = np.array(_floats(mk["sigma"]))
    if mu.size == 0 or mu.size != sigma.size:
        raise ConfigError("market.mu_minus_r and market.sigma need the same non-zero length")
    if np.any(sigma <= 0):
        raise ConfigError("market.sigma entries must be positive")
    eta_psi = tuple(_floats(ln["eta_psi"]))
    if len(eta_psi) != 4 or min(eta_psi) < 0:
        raise ConfigError("learner.eta_psi needs four non-negative step sizes")
    window = ln["window"].strip()
    cfg = RunConfig(
        mu_minus_r=mu,
        sigma=sigma,
        rho=_rho(mk["rho"], mu.size),
        r=_number(mk["r"]),
        data=_opt_path(mk["data"], base),
        index_data=_opt_path(mk["index_data"], base),
        lam=_number(ln["lambda"]),
        gamma=_number(ln["gamma"]),
        w0=_number(ln["w0"]),
        T=_number(ln["T"]),
        N=int(ln["N"]),
        M=int(ln["sample_size"]),
        m=int(ln["update_every"]),
        eta_psi=eta_psi,
        eta_phi=_number(ln["eta_phi"]),
        k_inner=int(ln["k_inner"]),
        kappa_max=_number(ln["kappa_max"]),
        tc=_number(ln["tc"]),
        leverage_cap=_number(ln["leverage_cap"]),
        window=int(window) if window else None,
        pretrain_episodes=int(ln["pretrain_episodes"]),
        seed=int(ln["seed"]),
        episodes=int(ex["episodes"]),
        months=int(ex["months"]),
        rho_sweep=tuple(_floats(ex["rho_sweep"])),
        paths=int(ex["paths"]),
        train_months=int(ex["train_months"]),
        test_months=int(ex["test_months"]),
        ceq_half_gamma=ex.getboolean("ceq_half_gamma"),
        source=source,
    )
    if cfg.rho.shape != (cfg.n, cfg.n):
        raise ConfigError("market.rho size does not match the number of assets")
    for name in ("lam", "gamma", "w0", "T"):
        if not getattr(cfg, name) > 0:
            raise ConfigError(f"{name} must be positive")
    if cfg.kappa_max <= 1:
        raise ConfigError("learner.kappa_max must exceed 1")
    if cfg.episodes < 0 or cfg.months < 1 or cfg.paths < 1:
        raise ConfigError("experiment counts out of range")
    if cfg.train_months < 1 or cfg.test_months < 2:
        raise ConfigError("need at least one training month and two test months")
    try:
        cfg.online()
        cfg.exploratory()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return cfg
