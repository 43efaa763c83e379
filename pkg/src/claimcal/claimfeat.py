"""Temporal and bibliometric claim features.

Claim counts and densities over sliding year windows, flatness of the
claim-year distribution (one-sample KS statistic against uniform), history
length, mean-claim percentiles, and a lognormal citation-curve fit.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import minimize

from .corpus import ClaimCorpus, CorpusError, InteractionKey, batch

WINDOWS: tuple[int | None, ...] = (1, 3, 5, None)
VARIANTS = ("strict", "rc")

# The citation model's exponent is 2*sigma by default; "2sigma2" switches
# to the conventional 2*sigma^2 parameterization.
EXPONENT_CONVENTIONS = ("2sigma", "2sigma2")
LOG_FLOOR = 1e-6


def claim_count(corpus: ClaimCorpus, alpha: InteractionKey, t: int) -> int:
    """Publications claiming alpha in year exactly t."""
    rec = corpus.interactions.get(alpha)
    if rec is None:
        return 0
    return sum(1 for c in rec.claims if c.year == t)


def claim_popularity(corpus: ClaimCorpus, alpha: InteractionKey, t: int,
                     w: int | None, variant: str = "rc") -> int:
    """Claims in (t-w, t] (rc) or (t-w, t) (strict); w=None is unbounded."""
    if variant not in VARIANTS:
        raise CorpusError(f"variant must be one of {VARIANTS}, got {variant!r}")
    return len(batch(corpus, alpha, t, w, strict=variant == "strict"))


def claim_density(corpus: ClaimCorpus, alpha: InteractionKey, t: int,
                  w: int | None, variant: str = "rc") -> float:
    """Window popularity per year of history since the first claim."""
    t0 = corpus.first_year(alpha)
    if t < t0:
        raise CorpusError(f"t={t} precedes first claim year {t0} of {alpha}")
    cp = claim_popularity(corpus, alpha, t, w, variant)
    return cp / (t - t0 + 1)


def ks_uniform(positions: Sequence[float]) -> float:
    """One-sample KS statistic of points in [0,1] against the uniform law."""
    u = sorted(positions)
    n = len(u)
    if n == 0:
        raise CorpusError("KS statistic of an empty sample")
    d = 0.0
    for i, x in enumerate(u, start=1):
        d = max(d, i / n - x, x - (i - 1) / n)
    return d


def flatness(corpus: ClaimCorpus, alpha: InteractionKey, t: int,
             w: int | None, variant: str = "rc") -> float:
    """KS distance of claim years from uniform over the anchored window.

    The window reaches back w years before the first claim year t0, so the
    claim set is the full history and w controls only the rescaling range;
    w=None anchors at [t0, t]. Empty selections give NaN (missing).
    """
    if variant not in VARIANTS:
        raise CorpusError(f"variant must be one of {VARIANTS}, got {variant!r}")
    rec = corpus.interactions.get(alpha)
    if rec is None or not rec.claims:
        return math.nan
    t0 = min(c.year for c in rec.claims)
    years = [c.year for c in rec.claims
             if (c.year < t if variant == "strict" else c.year <= t)]
    if not years:
        return math.nan
    lo = t0 if w is None else t0 - w
    span = t - lo
    if span <= 0:
        return 1.0  # all mass at a single instant
    return ks_uniform([(y - lo) / span for y in years])


def history_length(corpus: ClaimCorpus, alpha: InteractionKey) -> int:
    """Years between the last and first claim on alpha."""
    rec = corpus.interactions.get(alpha)
    if rec is None or not rec.claims:
        raise CorpusError(f"no claims on {alpha}")
    years = [c.year for c in rec.claims]
    return max(years) - min(years)


def mean_claim_percentile(all_means: Mapping[InteractionKey, float],
                          alpha: InteractionKey) -> tuple[float, float]:
    """(mcp, ammcp): strict-less rank of alpha's mean claim value."""
    if alpha not in all_means:
        raise CorpusError(f"{alpha} missing from the mean table")
    mu = all_means[alpha]
    n = len(all_means)
    below = sum(1 for v in all_means.values() if v < mu)
    mcp = below / n
    return mcp, abs(mcp - 0.5)


def mcp_table(all_means: Mapping[InteractionKey, float]
              ) -> dict[InteractionKey, tuple[float, float]]:
    """Vectorized mean_claim_percentile over every interaction."""
    if not all_means:
        return {}
    ordered = sorted(all_means.values())
    n = len(ordered)
    out = {}
    for key, mu in all_means.items():
        mcp = bisect_left(ordered, mu) / n
        out[key] = (mcp, abs(mcp - 0.5))
    return out


# ---------------------------------------------------------------------------
# Citation lognormal fit

@dataclass(frozen=True)
class CitationFit:
    mu: float
    sigma: float
    amplitude: float
    success: bool
    residual: float = math.nan


def _lognormal_curve(t: np.ndarray, mu: float, sigma: float, amp: float,
                     convention: str) -> np.ndarray:
    denom = 2.0 * sigma if convention == "2sigma" else 2.0 * sigma ** 2
    return amp / (t * sigma * math.sqrt(2.0 * math.pi)) * np.exp(
        -((np.log(t) - mu) ** 2) / denom)


def _moment_start(t: np.ndarray, c: np.ndarray, convention: str,
                  total: float) -> tuple[float, float, float]:
    """Initial guess from log-age moments weighted by counts."""
    logt = np.log(t)
    mu0 = float(np.average(logt, weights=c))
    var0 = float(np.average((logt - mu0) ** 2, weights=c))
    sigma0 = var0 if convention == "2sigma" else math.sqrt(var0)
    return (min(max(mu0, -1.0), 4.0), min(max(sigma0, 0.05), 3.0),
            1.5 * total)


def fit_citation_lognormal(history: Mapping[int, int], pub_year: int,
                           convention: str = "2sigma",
                           fast: bool = False) -> CitationFit:
    """Least-squares lognormal fit of a yearly citation history.

    Age t counts years since publication starting at 1. Multi-start
    downhill simplex inside a fixed box; failure (too few points, zero
    history, or residual above half the data norm) returns fallback
    parameters with success=False. ``fast`` trims the start lattice to a
    moment-based guess plus two coarse starts for bulk feature extraction.
    """
    if convention not in EXPONENT_CONVENTIONS:
        raise CorpusError(f"unknown exponent convention {convention!r}")
    years = sorted(history)
    t = np.array([y - pub_year + 1 for y in years], dtype=float)
    if np.any(t < 1):
        raise CorpusError("citation year precedes publication year")
    c = np.array([history[y] for y in years], dtype=float)
    total = float(c.sum())
    if len(years) < 3:
        return CitationFit(0.0, 1.0, total, False)
    if total == 0.0:
        return CitationFit(0.0, 1.0, 0.0, False)

    c_norm = float(np.linalg.norm(c))

    def objective(params: np.ndarray) -> float:
        mu, sigma, amp = params
        return float(np.sum((c - _lognormal_curve(t, mu, sigma, amp,
                                                  convention)) ** 2))

    starts = [_moment_start(t, c, convention, total)]
    if fast:
        starts += [(0.5, 0.5, 1.2 * total), (2.0, 1.5, 3.0 * total)]
        options = {"xatol": 1e-6, "fatol": 1e-8, "maxiter": 600}
    else:
        starts += [(mu0, sigma0, amp0)
                   for mu0 in (0.0, 1.0, 2.5)
                   for sigma0 in (0.3, 1.0, 2.0)
                   for amp0 in (1.5 * total, 5.0 * total)]
        options = {"xatol": 1e-8, "fatol": 1e-10, "maxiter": 2000}

    bounds = [(-1.0, 4.0), (0.05, 3.0), (total, 20.0 * total)]
    best = None
    for x0 in starts:
        res = minimize(objective, np.array(x0), method="Nelder-Mead",
                       bounds=bounds, options=options)
        if best is None or res.fun < best.fun:
            best = res
    mu, sigma, amp = best.x
    residual = math.sqrt(best.fun)
    if residual > 0.5 * c_norm:
        return CitationFit(0.0, 1.0, total, False, residual)
    return CitationFit(float(mu), float(sigma), float(amp), True, residual)


def citation_features(history: Mapping[int, int], pub_year: int,
                      convention: str = "2sigma",
                      fast: bool = True) -> dict[str, float]:
    """Flat feature dict: fit parameters, their logs, flag, and cit3."""
    fit = fit_citation_lognormal(history, pub_year, convention, fast=fast)
    cit3 = sum(cnt for y, cnt in history.items() if y - pub_year < 3)
    log = lambda x: math.log(max(x, LOG_FLOOR))
    return {
        "cit3": float(cit3),
        "mu": fit.mu,
        "sigma": fit.sigma,
        "A": fit.amplitude,
        "log_mu": log(fit.mu),
        "log_sigma": log(fit.sigma),
        "log_A": log(fit.amplitude),
        "fit_ok": 1.0 if fit.success else 0.0,
    }
