"""Stand-alone recomputation of the baseline rows of the fixture report.

Uses only the standard library (no numpy, no mvsac) so that it checks the
package's accounting and metric formulas independently.  Handles two assets
and a single-column index.

    python oracle_report.py > expected_baselines.csv
"""

import csv
import math
import sys
from pathlib import Path

HERE = Path(__file__).parent
R_RATE = 0.02
GAMMA, W0, T, N = 1.5, 1.0, 21 / 252, 21
TC, CAP, KAPPA = 0.003, 2.0, 100.0
TRAIN = 12 * N


def read(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))[1:]
    times = [float(r[0]) for r in rows]
    prices = [[float(x) * math.exp(-R_RATE * (t - times[0])) for x in r[1:]] for t, r in zip(times, rows)]
    rets = [[b / a - 1.0 for a, b in zip(p0, p1)] for p0, p1 in zip(prices, prices[1:])]
    return times, rets


def moments(block, dt):
    m = len(block)
    mean = [sum(r[i] for r in block) / m for i in range(2)]
    cov = [[sum((r[i] - mean[i]) * (r[k] - mean[k]) for r in block) / m / dt for k in range(2)] for i in range(2)]
    return [x / dt for x in mean], cov


def shrunk_inverse(c):
    a, b, d = c[0][0], c[0][1], c[1][1]
    half = math.sqrt(((a - d) / 2) ** 2 + b * b)
    hi, lo = (a + d) / 2 + half, (a + d) / 2 - half
    top = max(hi, 1e-12)
    hi_c, lo_c = min(max(hi, top / KAPPA), top), min(max(lo, top / KAPPA), top)
    if half == 0:
        return [[1 / hi_c, 0.0], [0.0, 1 / hi_c]]
    # spectral projectors of a symmetric 2x2 matrix
    p_hi = [[(c[i][k] - lo * (i == k)) / (hi - lo) for k in range(2)] for i in range(2)]
    p_lo = [[(i == k) - p_hi[i][k] for k in range(2)] for i in range(2)]
    return [[p_hi[i][k] / hi_c + p_lo[i][k] / lo_c for k in range(2)] for i in range(2)]


def run(rets, decide, start, stop, cap):
    W, held = W0, [0.0] * len(rets[0])
    wealth, traded, gross = [W], [], []
    for j in range(start, stop):
        target = decide(j, W, held)
        theta = held if target is None else target
        if cap is not None and target is not None:
            g = sum(abs(x) for x in theta)
            if g > cap * W:
                theta = [x * cap * W / g for x in theta]
        R = rets[j]
        tr = sum(abs(x - h) for x, h in zip(theta, held))
        pnl = sum(r * x for r, x in zip(R, theta))
        traded.append(tr)
        gross.append(pnl / W)
        W = W - TC * tr + pnl
        wealth.append(W)
        held = [x * (1 + r) for x, r in zip(theta, R)]
    return wealth, traded, gross


def metrics(times, wealth, traded, gross, start):
    def monthly(step):
        out = []
        for m in range(len(step) // N):
            prod = 1.0
            for x in step[m * N : (m + 1) * N]:
                prod *= 1 + x
            span = times[start + (m + 1) * N] - times[start + m * N]
            out.append(prod * math.exp(R_RATE * span) - 1)
        return out

    def ceq_sr(x):
        mean = sum(x) / len(x)
        std = math.sqrt(sum((v - mean) ** 2 for v in x) / (len(x) - 1))
        return mean, std, 12 * (mean - GAMMA * std**2), math.sqrt(12) * (mean - R_RATE / 12) / std

    net = [g - TC * t / w for g, t, w in zip(gross, traded, wealth)]
    mean, std, ceq, sr = ceq_sr(monthly(gross))
    _, _, ceq_tr, sr_tr = ceq_sr(monthly(net))
    tr = sum(t / w for t, w in zip(traded, wealth)) / len(traded)
    return [mean, std, ceq, sr, tr, ceq_tr, sr_tr]


def baselines():
    times, rets = read(HERE / "fixture_prices.csv")
    _, index = read(HERE / "fixture_index.csv")
    dt = T / N
    start = TRAIN
    stop = start + (len(rets) - TRAIN) // N * N
    state = {}

    def plugin(j, W, held):
        if (j - start) % N == 0:
            state["base"] = W
            mu, cov = moments(rets[max(0, j - TRAIN) : j], dt)
            state["est"] = (mu, shrunk_inverse(cov))
        mu, S = state["est"]
        d = [S[i][0] * mu[0] + S[i][1] * mu[1] for i in range(2)]
        tau = math.exp((mu[0] * d[0] + mu[1] * d[1]) * T) + 2 * GAMMA * W0
        w_norm = W0 * W / state["base"]
        return [(tau / (2 * GAMMA) - w_norm) * x * state["base"] / W0 for x in d]

    def buy_hold(j, W, held):
        x = W
        for _ in range(60):
            x = W - TC * sum(abs(x / 2 - h) for h in held)
        return [x / 2, x / 2]

    def index_rule(j, W, held):
        return [W / (1 + TC)] if j == start else None

    rows = []
    for name, rule, series, cap in (("Plug-in", plugin, rets, CAP), ("B-H", buy_hold, rets, CAP),
                                    ("Index", index_rule, index, None)):
        wealth, traded, gross = run(series, rule, start, stop, cap)
        rows.append([name, *metrics(times, wealth, traded, gross, start)])
    return rows


if __name__ == "__main__":
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["strategy", "MEAN", "STD", "CEQ", "SR", "TR", "CEQ_TR", "SR_TR"])
    for row in baselines():
        w.writerow([row[0], *(repr(x) for x in row[1:])])
