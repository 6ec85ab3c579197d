"""Short learning study on a simulated two-asset market.

Usage: python learning_curves.py [episodes] [months] [seed]

The full-scale run (3000 episodes, 2500 months) is what ``mvsac learn``
does with the default configuration; this script prints coarse progress
for a quicker look.
"""

import sys

import numpy as np

from mvsac import ExploratoryConfig, MarketModel, MVProblem, learning_study, profitability, simulate_paths

episodes = int(sys.argv[1]) if len(sys.argv) > 1 else 300
months = int(sys.argv[2]) if len(sys.argv) > 2 else 2500
seed = int(sys.argv[3]) if len(sys.argv) > 3 else 0

model = MarketModel.two_asset(rho=0.1)
cfg = ExploratoryConfig(1.0, 1.5, 1.0, 21 / 252)
K = profitability(MVProblem(1.5, 1.0, cfg.T, model)).integrated(0.0) / cfg.T
panel = simulate_paths(model, cfg.T * months, 21 * months, 1, seed=seed)[0]
curves = learning_study(panel, cfg, model.excess(0.0), K, episodes, seed=seed,
                        true_Sigma_inv=model.covariance(0.0)[1])

print(f"true excess returns {model.excess(0.0)}, true K {K:.5f}")
print(f"{'episode':>8} {'err mu1':>8} {'err mu2':>8} {'err K':>8} {'err comb':>9}")
for e in np.linspace(0, episodes, 11).astype(int):
    m1, m2 = curves.mu_errors[e]
    print(f"{e:>8} {m1:8.4f} {m2:8.4f} {curves.K_errors[e]:8.4f} {curves.K_combination_errors[e]:9.4f}")
print(f"inverse covariance error (spectral, relative): {curves.Sigma_inv_error:.4f}")
