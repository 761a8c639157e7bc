"""Shared goodness-of-fit statistics used by the equivariance diagnostics."""

from __future__ import annotations

import numpy as np

from .errors import PreconditionError
from .wavecore import Grid1D


def ks_statistic(samples: np.ndarray, cdf) -> float:
    """Two-sided Kolmogorov-Smirnov distance of samples against an exact CDF."""
    x = np.sort(np.asarray(samples, dtype=np.float64))
    n = len(x)
    if n < 1:
        raise PreconditionError("KS statistic needs at least one sample")
    f = np.asarray(cdf(x), dtype=np.float64)
    d_plus = np.max(np.arange(1, n + 1) / n - f)
    d_minus = np.max(f - np.arange(0, n) / n)
    return float(max(d_plus, d_minus))


def ks_critical(n: int, alpha: float = 0.01) -> float:
    """Asymptotic critical value c(alpha)/sqrt(n); c(0.01) = 1.6276."""
    c = np.sqrt(-0.5 * np.log(alpha / 2.0))
    return float(c / np.sqrt(n))


def density_cdf(grid: Grid1D, rho: np.ndarray):
    """Exact CDF of the cell-uniform density defined by rho on the grid.

    Matches the sampler's convention: each cell carries mass rho_i * dx,
    spread uniformly across the cell.
    """
    masses = np.asarray(rho, dtype=np.float64) * grid.dx
    total = masses.sum()
    if total <= 0:
        raise PreconditionError("density has no mass")
    masses = masses / total
    cum = np.concatenate([[0.0], np.cumsum(masses)])
    edges = grid.x_min + np.arange(grid.n_points + 1) * grid.dx

    def cdf(x):
        x = np.asarray(x, dtype=np.float64)
        i = np.clip(np.floor((x - grid.x_min) / grid.dx).astype(int),
                    0, grid.n_points - 1)
        frac = np.clip((x - edges[i]) / grid.dx, 0.0, 1.0)
        out = cum[i] + frac * masses[i]
        out = np.where(x <= edges[0], 0.0, out)
        out = np.where(x >= edges[-1], 1.0, out)
        return out

    return cdf


def binomial_band(p: float, n: int, n_sigma: float = 3.0) -> float:
    """Half-width of the n_sigma band for a frequency estimate of p."""
    return float(n_sigma * np.sqrt(p * (1.0 - p) / n))


def multinomial_count_bounds(p, n: int, alpha_per_tail: float = 0.00135):
    """Per-category acceptance interval on counts, exact binomial tails.

    alpha_per_tail = 0.00135 reproduces the two-sided 3-sigma convention
    while staying meaningful for categories with tiny expected counts.
    """
    from scipy.stats import binom
    p = np.asarray(p, dtype=np.float64)
    lo = binom.ppf(alpha_per_tail, n, p)
    hi = binom.ppf(1.0 - alpha_per_tail, n, p)
    return np.nan_to_num(lo, nan=0.0), np.nan_to_num(hi, nan=0.0)


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * float(np.sum(np.abs(np.asarray(p) - np.asarray(q))))
