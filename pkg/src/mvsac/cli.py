"""Command-line entry point: ``mvsac simulate|learn|backtest``."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from . import backtest as bt
from .config import ConfigError, RunConfig, load_config
from .exploratory import ExploratoryConfig
from .learner import learning_study, run_online_sac
from .market import MarketModel, simulate_paths
from .mvcore import MVProblem, profitability

EXIT_CODES = {"usage": 2, "config": 3, "input": 4, "io": 5, "numeric": 6, "internal": 1}


class CommandError(Exception):
    def __init__(self, category: str, message: str):
        super().__init__(message)
        self.category = category


def _prepare_out(out: Path, names: list[str], force: bool) -> None:
    out.mkdir(parents=True, exist_ok=True)
    clash = [n for n in names if (out / n).exists()]
    if clash and not force:
        raise CommandError("io", f"{out / clash[0]} exists (use --force to overwrite)")


def _problem(cfg: RunConfig, model: MarketModel) -> MVProblem:
    return MVProblem(cfg.gamma, cfg.w0, cfg.T, model)


def _fmt(x) -> str:
    return repr(float(x))


def cmd_simulate(cfg: RunConfig, out: Path, force: bool) -> list[Path]:
    """Write ``cfg.paths`` seeded daily panels of ``cfg.months`` horizons each."""
    names = [f"panel_{k}.csv" for k in range(cfg.paths)]
    _prepare_out(out, names, force)
    model = cfg.market()
    panels = simulate_paths(model, cfg.T * cfg.months, cfg.N * cfg.months, cfg.paths, cfg.seed)
    written = []
    for name, panel in zip(names, panels):
        panel.to_csv(out / name)
        written.append(out / name)
    return written


def _rho_tag(rho: float) -> str:
    return f"{rho:g}".replace("-", "m")


def cmd_learn(cfg: RunConfig, out: Path, force: bool) -> list[Path]:
    """Learning curves for the configured market and each correlation of the sweep."""
    if cfg.n < 2:
        raise CommandError("config", "learn needs at least two assets (the sweep varies their correlation)")
    rhos = [None, *cfg.rho_sweep]
    names = ["learning.csv", *(f"learning_rho_{_rho_tag(r)}.csv" for r in cfg.rho_sweep), "learning_summary.csv"]
    _prepare_out(out, names, force)
    xcfg = ExploratoryConfig(cfg.lam, cfg.gamma, cfg.w0, cfg.T)
    summary = []
    for name, rho in zip(names, rhos):
        if rho is None:
            rho_mat = cfg.rho
        else:
            rho_mat = np.full((cfg.n, cfg.n), rho)
            np.fill_diagonal(rho_mat, 1.0)
        model = cfg.market(rho_mat)
        K = profitability(_problem(cfg, model)).integrated(0.0) / cfg.T
        panel = simulate_paths(model, cfg.T * cfg.months, cfg.N * cfg.months, 1, cfg.seed)[0]
        curves = learning_study(
            panel, xcfg, model.excess(0.0), K, cfg.episodes, seed=cfg.seed, steps_per_episode=cfg.N, M=cfg.M,
            kappa_max=cfg.kappa_max, true_Sigma_inv=model.covariance(0.0)[1], eta_psi=cfg.eta_psi,
            eta_phi=cfg.eta_phi, k_inner=cfg.k_inner,
        )
        with (out / name).open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["episode", *(f"err_mu_{i + 1}" for i in range(cfg.n)), "err_K", "err_K_combination",
                        *(f"phi3_{i + 1}" for i in range(cfg.n)), "K", "K_combination"])
            for e in range(curves.episodes + 1):
                w.writerow([e, *map(_fmt, curves.mu_errors[e]), _fmt(curves.K_errors[e]),
                            _fmt(curves.K_combination_errors[e]), *map(_fmt, curves.phi3[e]),
                            _fmt(curves.K_joint[e]), _fmt(curves.K_combination[e])])
        label = rho_mat[0, 1]
        summary.append([_fmt(label), *map(_fmt, curves.mu_errors[-1]), _fmt(curves.K_errors[-1]),
                        _fmt(curves.K_combination_errors[-1]), _fmt(curves.Sigma_inv_error)])
    with (out / names[-1]).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["rho", *(f"err_mu_{i + 1}" for i in range(cfg.n)), "err_K", "err_K_combination", "err_Sigma_inv"])
        w.writerows(summary)
    return [out / n for n in names]


def _load_panels(cfg: RunConfig):
    if cfg.data is not None:
        panel = bt.ingest_prices(cfg.data, cfg.r)
        index = bt.ingest_prices(cfg.index_data, cfg.r) if cfg.index_data is not None else None
        if index is not None and (index.n_assets != 1 or not np.allclose(index.times, panel.times)):
            raise CommandError("input", "index file must hold one column on the same dates as the data")
        return panel, index, cfg.train_months * cfg.N
    months = cfg.train_months + cfg.test_months
    panel = simulate_paths(cfg.market(), cfg.T * months, cfg.N * months, 1, cfg.seed)[0]
    return panel, None, cfg.train_months * cfg.N


def cmd_backtest(cfg: RunConfig, out: Path, force: bool) -> list[Path]:
    """Run SAC, Plug-in, B-H and Index on one panel and write the criteria table."""
    strategies = ["SAC", "Plug-in", "B-H", "Index"]
    names = ["report.csv", *(f"wealth_{s}.csv" for s in strategies)]
    _prepare_out(out, names, force)
    panel, index, train = _load_panels(cfg)
    if train >= panel.n_steps:
        raise CommandError("input", f"panel has {panel.n_steps} steps, training alone needs {train}")
    problem = MVProblem(cfg.gamma, cfg.w0, cfg.T, cfg.market())
    xcfg = cfg.exploratory()
    ocfg = cfg.online()
    months = (panel.n_steps - train) // cfg.N
    stop = train + months * cfg.N
    runs = [
        run_online_sac(panel.window(0, stop), train, ocfg, xcfg, seed=cfg.seed),
        bt.run_plugin(panel, train, problem, cfg.window, cfg.tc, cfg.leverage_cap, cfg.kappa_max, cfg.N),
        bt.run_buy_hold(panel, train, problem, cfg.tc, cfg.leverage_cap, cfg.N),
        bt.run_index(index if index is not None else panel, train, problem, cfg.tc, cfg.N),
    ]
    rows = [bt.compute_metrics(run, problem, cfg.tc, cfg.r, cfg.N, cfg.ceq_half_gamma) for run in runs]
    bt.BacktestReport(rows).to_csv(out / "report.csv")
    for name, run in zip(names[1:], runs):
        bt.write_wealth_csv(run, out / name)
    return [out / n for n in names]


COMMANDS = {"simulate": cmd_simulate, "learn": cmd_learn, "backtest": cmd_backtest}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CommandError("usage", message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mvsac", description="Exploratory mean-variance portfolio experiments.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, fn in COMMANDS.items():
        p = sub.add_parser(name, help=fn.__doc__.splitlines()[0])
        p.add_argument("--config", type=Path, help="INI file; omitted keys keep their defaults")
        p.add_argument("--seed", type=int, help="override learner.seed")
        p.add_argument("--out", type=Path, default=Path("out"), help="output directory (created if missing)")
        p.add_argument("--force", action="store_true", help="overwrite existing outputs")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        args = build_parser().parse_args(argv)
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        written = COMMANDS[args.command](cfg, args.out, args.force)
    except CommandError as exc:
        return _fail(exc.category, str(exc))
    except ConfigError as exc:
        return _fail("config", str(exc))
    except bt.IngestError as exc:
        return _fail("input", str(exc))
    except OSError as exc:
        return _fail("io", str(exc))
    except (ValueError, np.linalg.LinAlgError, FloatingPointError) as exc:
        return _fail("numeric", str(exc))
    for path in written:
        print(path)
    return 0


def _fail(category: str, message: str) -> int:
    first = " ".join(message.split())
    print(f"error[{category}]: {first}", file=sys.stderr)
    return EXIT_CODES[category]


if __name__ == "__main__":
    sys.exit(main())
