"""Outcome-class partitioning and threshold selection.

Interactions with an experimental strength in [0, 1] are split into
negative / neutral / positive classes by a pair of thresholds. Each class
gets a Beta posterior over claim outcomes, and the thresholds are chosen
to maximize the product of one-sided relative discontinuities of the
Wasserstein distance between the moving class and the neutral class.
"""

from __future__ import annotations

import enum
import math
from bisect import bisect_left
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy import integrate
from scipy.optimize import brentq
from scipy.special import betainc

from .corpus import ClaimCorpus, InteractionKey

DEFAULT_GRID_STEP = 0.001
DEFAULT_FIXED_OTHER = 0.25
DEFAULT_PRIOR = (1.0, 1.0)


class PartitionError(ValueError):
    """Raised for invalid thresholds, posteriors, or degenerate inputs."""


class ClassLabel(enum.Enum):
    NEGATIVE = "negative"
    NEUTRAL = "neutral"
    POSITIVE = "positive"


@dataclass(frozen=True)
class Thresholds:
    """Lower cut theta_minus and upper margin theta_plus.

    Negative below theta_minus, positive at or above 1 - theta_plus.
    """

    theta_minus: float
    theta_plus: float

    def __post_init__(self) -> None:
        if not (0.0 < self.theta_minus < 1.0):
            raise PartitionError(
                f"theta_minus must lie in (0, 1), got {self.theta_minus}"
            )
        if not (0.0 < self.theta_plus < 1.0 - self.theta_minus):
            raise PartitionError(
                f"theta_plus must lie in (0, 1 - theta_minus), got "
                f"{self.theta_plus} with theta_minus={self.theta_minus}"
            )

    @property
    def upper_cut(self) -> float:
        return 1.0 - self.theta_plus


@dataclass(frozen=True)
class BetaPosterior:
    a: float
    b: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise PartitionError(f"non-finite Beta parameters ({self.a}, {self.b})")
        if self.a <= 0 or self.b <= 0:
            raise PartitionError(f"Beta parameters must be positive ({self.a}, {self.b})")

    @property
    def mean(self) -> float:
        return self.a / (self.a + self.b)

    def update(self, outcomes: Sequence[int]) -> "BetaPosterior":
        return beta_update(self.a, self.b, outcomes)


def beta_update(prior_a: float, prior_b: float,
                outcomes: Sequence[int]) -> BetaPosterior:
    """Conjugate update: successes add to a, failures to b."""
    s = sum(outcomes)
    n = len(outcomes)
    if any(o not in (0, 1) for o in outcomes):
        raise PartitionError("outcomes must be binary")
    return BetaPosterior(prior_a + s, prior_b + (n - s))


def beta_cdf(x: float, p: BetaPosterior) -> float:
    if not 0.0 <= x <= 1.0:
        raise PartitionError(f"cdf argument {x} outside [0, 1]")
    return float(betainc(p.a, p.b, x))


def partition_classes(
    strengths: Mapping[InteractionKey, float], th: Thresholds
) -> dict[InteractionKey, ClassLabel]:
    """Assign each interaction a class by where its strength falls."""
    out: dict[InteractionKey, ClassLabel] = {}
    for key, s in strengths.items():
        if s < th.theta_minus:
            out[key] = ClassLabel.NEGATIVE
        elif s < th.upper_cut:
            out[key] = ClassLabel.NEUTRAL
        else:
            out[key] = ClassLabel.POSITIVE
    return out


# ---------------------------------------------------------------------------
# Wasserstein distance between Beta measures on [0, 1]

_N_BRACKET = 513  # coarse grid for locating CDF-difference sign changes


def _cdf_diff(p: BetaPosterior, q: BetaPosterior):
    def diff(x):
        return betainc(p.a, p.b, x) - betainc(q.a, q.b, x)

    return diff


def _crossings(p: BetaPosterior, q: BetaPosterior) -> list[float]:
    diff = _cdf_diff(p, q)
    xs = np.linspace(0.0, 1.0, _N_BRACKET)
    sign = np.sign(diff(xs))
    # Exact-zero plateaus (both CDFs flat at 0 or 1) are smooth and carry no
    # mass; only alternations between nonzero samples need a bracketed root.
    nz = np.flatnonzero(sign)
    roots: list[float] = []
    for i, j in zip(nz[:-1], nz[1:]):
        if sign[i] * sign[j] < 0:
            roots.append(float(brentq(diff, xs[i], xs[j], xtol=1e-14)))
    return sorted(set(roots))


def wasserstein_beta(p: BetaPosterior, q: BetaPosterior) -> float:
    """W1 distance on [0, 1]: integral of |F_p - F_q| by adaptive quadrature.

    Sign changes of the CDF difference are located first so the integrand
    is smooth on every subinterval; absolute error is held below 1e-8.
    """
    if (p.a, p.b) == (q.a, q.b):
        return 0.0
    diff = _cdf_diff(p, q)
    pts = _crossings(p, q)
    val, _ = integrate.quad(
        lambda x: abs(diff(x)), 0.0, 1.0,
        points=pts or None, limit=max(200, 2 * len(pts) + 10),
        epsabs=1e-10, epsrel=1e-10,
    )
    return float(val)


# ---------------------------------------------------------------------------
# Class posteriors

@dataclass(frozen=True)
class ClassPosteriors:
    neg: BetaPosterior
    neu: BetaPosterior
    pos: BetaPosterior
    empty_classes: tuple[str, ...] = ()


def class_posteriors(
    corpus: ClaimCorpus,
    labels: Mapping[InteractionKey, ClassLabel],
    prior: tuple[float, float] = DEFAULT_PRIOR,
) -> ClassPosteriors:
    """Beta posteriors per class.

    Negative and positive classes are updated with claim correctness
    (polarity matched against the class sign); the neutral class has no
    defined sign, so it is updated with raw polarities and that choice is
    surfaced through ``empty_classes``-style flags downstream.
    """
    a0, b0 = prior
    succ = {ClassLabel.NEGATIVE: 0, ClassLabel.NEUTRAL: 0, ClassLabel.POSITIVE: 0}
    tot = dict(succ)
    for key, label in labels.items():
        rec = corpus.interactions.get(key)
        if rec is None:
            continue
        for claim in rec.claims:
            c = claim.polarity
            if label is ClassLabel.POSITIVE:
                y = c
            elif label is ClassLabel.NEGATIVE:
                y = 1 - c
            else:
                y = c  # raw polarity: correctness undefined on neutral
            succ[label] += y
            tot[label] += 1
    empty = tuple(
        lab.value for lab in (ClassLabel.NEGATIVE, ClassLabel.NEUTRAL,
                              ClassLabel.POSITIVE)
        if tot[lab] == 0
    )
    mk = lambda lab: BetaPosterior(a0 + succ[lab], b0 + (tot[lab] - succ[lab]))
    return ClassPosteriors(
        neg=mk(ClassLabel.NEGATIVE),
        neu=mk(ClassLabel.NEUTRAL),
        pos=mk(ClassLabel.POSITIVE),
        empty_classes=empty,
    )


# ---------------------------------------------------------------------------
# Threshold scans

@dataclass
class DistanceCurve:
    """Distance-vs-threshold profile for one moving class boundary."""

    grid: list[float]
    values: list[float]
    counts: list[int]
    side: str = ""
    fixed_other: float = float("nan")

    def __post_init__(self) -> None:
        if not (len(self.grid) == len(self.values) == len(self.counts)):
            raise PartitionError("curve arrays must have equal length")
        if any(b <= a for a, b in zip(self.grid, self.grid[1:])):
            raise PartitionError("curve grid must be strictly ascending")


class _SortedStrengths:
    """Strength-sorted interactions with claim-count/polarity prefix sums."""

    def __init__(self, corpus: ClaimCorpus,
                 strengths: Mapping[InteractionKey, float]):
        keys = sorted(
            (k for k in strengths if k in corpus.interactions),
            key=lambda k: (strengths[k], k),
        )
        self.keys = keys
        self.svals = [strengths[k] for k in keys]
        self.pre_n = [0]
        self.pre_c = [0]
        for k in keys:
            claims = corpus.interactions[k].claims
            self.pre_n.append(self.pre_n[-1] + len(claims))
            self.pre_c.append(self.pre_c[-1] + sum(c.polarity for c in claims))

    def n_distinct(self) -> int:
        return len(set(self.svals))

    def range_counts(self, lo_idx: int, hi_idx: int) -> tuple[int, int]:
        """(claim count, positive-polarity count) over keys[lo_idx:hi_idx]."""
        n = self.pre_n[hi_idx] - self.pre_n[lo_idx]
        c = self.pre_c[hi_idx] - self.pre_c[lo_idx]
        return n, c


def _theta_grid(upper: float, step: float) -> list[float]:
    n = int(round(upper / step))
    return [i * step for i in range(1, n) if i * step < upper]


def scan_thresholds(
    corpus: ClaimCorpus,
    strengths: Mapping[InteractionKey, float],
    side: str = "negative",
    grid_step: float = DEFAULT_GRID_STEP,
    fixed_other: float = DEFAULT_FIXED_OTHER,
    prior: tuple[float, float] = DEFAULT_PRIOR,
    _cache: dict | None = None,
) -> DistanceCurve:
    """Distance between the moving class and the neutral class over a grid.

    ``side='negative'`` moves theta_minus with theta_plus pinned at
    ``fixed_other``; ``side='positive'`` does the reverse. Both grids ascend
    the strength axis: the negative grid holds candidate lower thresholds,
    the positive grid holds candidate lower cuts of the top class (1 - theta
    plus), so a boundary crossing reads as a left drop on one curve and a
    right rise on the other. Values are piecewise constant between
    consecutive strength values.
    """
    if grid_step <= 0:
        raise PartitionError(f"grid_step must be positive, got {grid_step}")
    if side not in ("negative", "positive"):
        raise PartitionError(f"side must be 'negative' or 'positive', got {side!r}")
    ss = _SortedStrengths(corpus, strengths)
    if ss.n_distinct() < 2:
        raise PartitionError("need at least 2 distinct strength values to scan")
    a0, b0 = prior
    N = len(ss.keys)
    cache: dict = _cache if _cache is not None else {}

    def w_cached(g_move: BetaPosterior, g_neu: BetaPosterior) -> float:
        key = (g_move.a, g_move.b, g_neu.a, g_neu.b)
        if key not in cache:
            cache[key] = wasserstein_beta(g_move, g_neu)
        return cache[key]

    values: list[float] = []
    counts: list[int] = []
    if side == "negative":
        grid = _theta_grid(1.0 - fixed_other, grid_step)
        j0 = bisect_left(ss.svals, 1.0 - fixed_other)
        for theta in grid:
            k = bisect_left(ss.svals, theta)
            n_neg, c_neg = ss.range_counts(0, k)
            n_neu, c_neu = ss.range_counts(k, j0)
            g_move = BetaPosterior(a0 + (n_neg - c_neg), b0 + c_neg)
            g_neu = BetaPosterior(a0 + c_neu, b0 + (n_neu - c_neu))
            values.append(w_cached(g_move, g_neu))
            counts.append(n_neg)
    else:
        grid = [fixed_other + t for t in _theta_grid(1.0 - fixed_other,
                                                     grid_step)]
        k0 = bisect_left(ss.svals, fixed_other)
        for cut in grid:
            j = bisect_left(ss.svals, cut)
            n_pos, c_pos = ss.range_counts(j, N)
            n_neu, c_neu = ss.range_counts(k0, j)
            g_move = BetaPosterior(a0 + c_pos, b0 + (n_pos - c_pos))
            g_neu = BetaPosterior(a0 + c_neu, b0 + (n_neu - c_neu))
            values.append(w_cached(g_move, g_neu))
            counts.append(n_pos)
    return DistanceCurve(grid=grid, values=values, counts=counts,
                         side=side, fixed_other=fixed_other)


def relative_discontinuity(
    curve: DistanceCurve, side: str
) -> tuple[list[tuple[float, float]], list[float]]:
    """One-sided relative jumps of a piecewise-constant curve.

    Right at x_j: (f(x_{j+1}) - f(x_j)) / f(x_{j+1});
    left at x_j: (f(x_{j-1}) - f(x_j)) / f(x_{j-1}).
    Only jump points are reported. Returns (deltas, skipped) where skipped
    lists jump points whose denominator was zero.
    """
    if side not in ("left", "right"):
        raise PartitionError(f"side must be 'left' or 'right', got {side!r}")
    f = curve.values
    x = curve.grid
    deltas: list[tuple[float, float]] = []
    skipped: list[float] = []
    n = len(f)
    for j in range(n):
        o = j + 1 if side == "right" else j - 1
        if o < 0 or o >= n or f[o] == f[j]:
            continue
        if f[o] == 0.0:
            skipped.append(x[j])
            continue
        deltas.append((x[j], (f[o] - f[j]) / f[o]))
    return deltas, skipped


def optimize_thresholds(
    corpus: ClaimCorpus,
    strengths: Mapping[InteractionKey, float],
    grid_step: float = DEFAULT_GRID_STEP,
    prior: tuple[float, float] = DEFAULT_PRIOR,
    fixed_other: float = DEFAULT_FIXED_OTHER,
) -> tuple[Thresholds, dict]:
    """Pick thresholds at the argmax of delta_left(neg) * delta_right(pos).

    Ties go to the pair covering more claims, then to the lexicographically
    smallest thresholds. Raises on strength distributions with no jumps.
    """
    ss = _SortedStrengths(corpus, strengths)
    if ss.n_distinct() < 3:
        raise PartitionError("degenerate strength distribution: "
                             "need at least 3 distinct strength values")
    cache: dict = {}
    neg_curve = scan_thresholds(corpus, strengths, "negative", grid_step,
                                fixed_other, prior, _cache=cache)
    pos_curve = scan_thresholds(corpus, strengths, "positive", grid_step,
                                fixed_other, prior, _cache=cache)
    dl_all, dl_skip = relative_discontinuity(neg_curve, "left")
    dr_all, dr_skip = relative_discontinuity(pos_curve, "right")
    # only genuine discontinuities compete: a pair of negative jumps would
    # yield a positive product yet describes the opposite of a class boundary
    dl = [(x, d) for x, d in dl_all if d > 0.0]
    dr = [(x, d) for x, d in dr_all if d > 0.0]
    if not dl or not dr:
        raise PartitionError("degenerate strength distribution: "
                             "no admissible jump pair")
    count_neg = dict(zip(neg_curve.grid, neg_curve.counts))
    count_pos = dict(zip(pos_curve.grid, pos_curve.counts))

    best = None  # (product, claims, -tm, -tp) maximized
    best_pair = None
    for tm, d_left in dl:
        for cut, d_right in dr:
            tp = 1.0 - cut
            if not (0.0 < tp < 1.0 - tm):
                continue
            prod = d_left * d_right
            claims = count_neg[tm] + count_pos[cut]
            rank = (prod, claims, -tm, -tp)
            if best is None or rank > best:
                best = rank
                best_pair = (tm, tp, d_left, d_right)
    if best_pair is None:
        raise PartitionError("degenerate strength distribution: "
                             "no admissible jump pair")
    tm, tp, d_left, d_right = best_pair
    flags = []
    if abs(d_left * d_right) < 1e-12:
        flags.append("near_zero_product")
    if dl_skip or dr_skip:
        flags.append("zero_denominator_points_skipped")
    diagnostics = {
        "negative_curve": neg_curve,
        "positive_curve": pos_curve,
        "delta_left": d_left,
        "delta_right": d_right,
        "objective": d_left * d_right,
        "skipped_left": dl_skip,
        "skipped_right": dr_skip,
        "flags": flags,
        "n_interactions": len(ss.keys),
    }
    return Thresholds(tm, tp), diagnostics


def percentile_thresholds(
    strengths: Mapping[InteractionKey, float] | Sequence[float],
    eps: float,
) -> Thresholds:
    """Percentile baseline: cut the lowest and highest eps mass."""
    if not 0.0 < eps < 0.5:
        raise PartitionError(f"eps must lie in (0, 0.5), got {eps}")
    vals = (list(strengths.values()) if isinstance(strengths, Mapping)
            else list(strengths))
    if not vals:
        raise PartitionError("empty strengths")
    theta_minus = float(np.quantile(vals, eps))
    theta_plus = float(1.0 - np.quantile(vals, 1.0 - eps))
    return Thresholds(theta_minus, theta_plus)
