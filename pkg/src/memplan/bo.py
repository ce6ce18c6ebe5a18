"""Minimal sequential Gaussian-process minimization over a box.

Inputs are normalized to the unit cube before fitting; the acquisition
(expected improvement for minimization) is maximized by scoring a fixed
batch of random samples, which is plenty for the 4-d weight spaces this
is used on.
"""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np
from scipy.stats import norm
from sklearn.gaussian_process import GaussianProcessRegressor
from sklearn.gaussian_process.kernels import RBF


def expected_improvement(mu: np.ndarray, sigma: np.ndarray,
                         best: float) -> np.ndarray:
    imp = best - mu
    out = np.zeros_like(mu)
    pos = sigma > 1e-12
    z = imp[pos] / sigma[pos]
    out[pos] = imp[pos] * norm.cdf(z) + sigma[pos] * norm.pdf(z)
    out[~pos] = np.maximum(imp[~pos], 0.0)
    return out


def minimize(func: Callable[[np.ndarray], float],
             lower: Sequence[float],
             upper: Sequence[float],
             budget: int = 40,
             seed: int = 0,
             init_points: Sequence[Sequence[float]] | None = None,
             min_init: int = 5,
             n_samples: int = 1024) -> tuple[np.ndarray, float]:
    """Return (best_x, best_y) after at most `budget` evaluations."""
    lo = np.asarray(lower, dtype=float)
    hi = np.asarray(upper, dtype=float)
    dim = lo.shape[0]
    rng = np.random.default_rng(seed)

    xs: list[np.ndarray] = []
    ys: list[float] = []

    def evaluate(x: np.ndarray) -> None:
        x = np.clip(x, lo, hi)
        xs.append(x)
        ys.append(float(func(x)))

    for pt in list(init_points or [])[:budget]:
        evaluate(np.asarray(pt, dtype=float))
    while len(xs) < min(max(min_init, 2), budget):
        evaluate(lo + rng.random(dim) * (hi - lo))

    gp = GaussianProcessRegressor(
        kernel=RBF(length_scale=0.5),
        alpha=1e-6,
        normalize_y=True,
        optimizer=None,
    )
    span = np.where(hi > lo, hi - lo, 1.0)
    while len(xs) < budget:
        gp.fit((np.array(xs) - lo) / span, np.array(ys))
        cand = rng.random((n_samples, dim))
        mu, sigma = gp.predict(cand, return_std=True)
        ei = expected_improvement(mu, sigma, min(ys))
        pick = lo + cand[int(np.argmax(ei))] * span
        evaluate(pick)

    k = int(np.argmin(ys))
    return xs[k], ys[k]
