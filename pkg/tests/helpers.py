"""Independent oracles shared by the unit and acceptance tests."""

import numpy as np

from mvsac import Curve, GaussianPolicy


def random_policy(rng, n, T, time_varying=True):
    """Gaussian policy with random coefficients; optionally linear in time."""
    br = np.array([0.0, T])
    a0, slope0 = rng.uniform(0.5, 3.0), rng.uniform(-2.0, 2.0) if time_varying else 0.0
    a1 = rng.normal(0.0, 3.0, n)
    a2, slope2 = rng.uniform(-3.0, 0.0), rng.uniform(-5.0, 5.0) if time_varying else 0.0
    B = rng.normal(0.0, 1.0, (n, n))
    A3 = B @ B.T + 0.5 * np.eye(n)
    return GaussianPolicy(
        Curve.from_function(lambda t: a0 + slope0 * t, br),
        Curve.constant(a1, br),
        Curve.from_function(lambda t: a2 + slope2 * t, br),
        Curve.constant(A3, br),
    )


def entropy_formula(cov):
    n = cov.shape[0]
    return 0.5 * n * np.log(2 * np.pi * np.e) + 0.5 * np.log(np.linalg.det(cov))


def pde_residual(value, t, w, mean, cov, excess, Sigma, lam, ht=1e-5, hw=1e-3):
    """Finite-difference residual of the linear Gaussian-policy PDE.

    ``value(t, w)`` is any callable; ``mean`` is the policy mean at ``(t, w)``
    and ``cov`` its covariance.  One-sided in time at the interval ends.
    """
    if t - ht < 0:
        vt = (value(t + ht, w) - value(t, w)) / ht
        vt = 2 * vt - (value(t + 2 * ht, w) - value(t, w)) / (2 * ht)
    elif t + ht > T_of(value):
        vt = (value(t, w) - value(t - ht, w)) / ht
        vt = 2 * vt - (value(t, w) - value(t - 2 * ht, w)) / (2 * ht)
    else:
        vt = (value(t + ht, w) - value(t - ht, w)) / (2 * ht)
    vw = (value(t, w + hw) - value(t, w - hw)) / (2 * hw)
    vww = (value(t, w + hw) - 2 * value(t, w) + value(t, w - hw)) / hw**2
    drift = mean @ excess
    var = mean @ Sigma @ mean + np.trace(Sigma @ cov)
    return vt + drift * vw + 0.5 * var * vww + lam * entropy_formula(cov)


def T_of(value):
    return getattr(value, "horizon", np.inf)


class Bound:
    """Attach a horizon to a plain callable so ``pde_residual`` can see the edge."""

    def __init__(self, fn, horizon):
        self.fn, self.horizon = fn, horizon

    def __call__(self, t, w):
        return self.fn(t, w)


def mc_terminal_wealth(policy, excess, Sigma, w0, T, steps, paths, rng):
    """Euler simulation of the exploratory wealth SDE; returns terminal wealth samples."""
    dt = T / steps
    w = np.full(paths, float(w0))
    for k in range(steps):
        t = (k + 0.5) * dt
        a0, a1, cov = policy.a0(t), policy.a1(t), policy.cov(t)
        mean = (a0 - w)[:, None] * a1
        drift = mean @ excess
        var = np.einsum("pi,ij,pj->p", mean, Sigma, mean) + np.trace(Sigma @ cov)
        w = w + drift * dt + np.sqrt(var * dt) * rng.standard_normal(paths)
    return w


#: one (criterion, passed, detail) entry per acceptance check, printed at session end
ACCEPTANCE = []


def verdict(number, label, passed, detail):
    line = f"criterion {number:>2} [{'PASS' if passed else 'FAIL'}] {label}: {detail}"
    ACCEPTANCE.append((number, passed, line))
    print(line)
    return passed
