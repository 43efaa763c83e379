"""Models and aggregation.

A small, fully deterministic learning stack: bounded-depth random forests
with Gini importances, L1 logistic regression driven to an exact nonzero
count by penalty bisection, Mann-Whitney AUC, the hierarchical positive
composition, and Bayesian aggregation of claim-level correctness scores.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.stats import rankdata

from .rng import derive_rng

FOREST_DEPTH = 2
FOREST_TREES = 100
MIN_LEAF_FRACTION = 0.02
LOGIT_TARGET_NNZ = 5
_Q_CLAMP = 1e-6
_GAIN_TOL = 1e-12


class LearnError(ValueError):
    """Raised on degenerate training inputs or failed optimization."""


# ---------------------------------------------------------------------------
# Random forest

@dataclass
class ForestModel:
    trees: list[dict]
    feature_names: list[str]
    n_train: int
    min_leaf: int
    depth: int = FOREST_DEPTH
    seed: int = 0


def _gini_sum(pos: float, n: float) -> float:
    """n * gini impurity of a binary node: 2*pos*neg/n."""
    if n <= 0:
        return 0.0
    return 2.0 * pos * (n - pos) / n


def _best_split(X: np.ndarray, y: np.ndarray, features: Sequence[int],
                min_leaf: int):
    n = len(y)
    if n < 2 * min_leaf:
        return None
    total_pos = float(y.sum())
    node_gini = _gini_sum(total_pos, n)
    best = None
    for f in features:
        xs = X[:, f]
        order = np.argsort(xs, kind="stable")
        xs_s = xs[order]
        cum = np.cumsum(y[order])
        i = np.arange(min_leaf, n - min_leaf + 1)
        distinct = xs_s[i - 1] < xs_s[i]
        if not distinct.any():
            continue
        i = i[distinct]
        pos_l = cum[i - 1]
        gain = (node_gini
                - _gini_sum_arr(pos_l, i)
                - _gini_sum_arr(total_pos - pos_l, n - i))
        k = int(np.argmax(gain))
        if gain[k] > _GAIN_TOL and (best is None or gain[k] > best[0]):
            split_at = int(i[k])
            a, b = xs_s[split_at - 1], xs_s[split_at]
            thr = 0.5 * (a + b)
            if thr >= b:  # midpoint of adjacent floats can round up
                thr = a
            best = (float(gain[k]), f, float(thr))
    return best


def _gini_sum_arr(pos: np.ndarray, n: np.ndarray) -> np.ndarray:
    return 2.0 * pos * (n - pos) / n


def _grow(X: np.ndarray, y: np.ndarray, depth_left: int, min_leaf: int,
          n_root: int, p_sub: int, rng: np.random.Generator) -> dict:
    n = len(y)
    pos = float(y.sum())
    node = {"n": n, "value": pos / n}
    if depth_left == 0 or pos == 0 or pos == n:
        node["leaf"] = True
        return node
    p = X.shape[1]
    features = rng.choice(p, size=min(p_sub, p), replace=False)
    best = _best_split(X, y, features, min_leaf)
    if best is None:
        node["leaf"] = True
        return node
    gain, f, thr = best
    mask = X[:, f] <= thr
    node.update({
        "leaf": False,
        "feature": int(f),
        "threshold": thr,
        # impurity decrease weighted by node share of the training set
        "weighted_gain": gain / n_root,
        "left": _grow(X[mask], y[mask], depth_left - 1, min_leaf, n_root,
                      p_sub, rng),
        "right": _grow(X[~mask], y[~mask], depth_left - 1, min_leaf, n_root,
                       p_sub, rng),
    })
    return node


def train_forest(X: np.ndarray, y: np.ndarray, seed: int,
                 feature_names: Sequence[str] | None = None,
                 n_trees: int = FOREST_TREES, depth: int = FOREST_DEPTH,
                 min_leaf_fraction: float = MIN_LEAF_FRACTION) -> ForestModel:
    """Bootstrap forest of depth-bounded trees with per-leaf size floor."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    if n < 50:
        raise LearnError(f"need at least 50 training samples, got {n}")
    classes = np.unique(y)
    if len(classes) < 2:
        raise LearnError("training labels contain a single class")
    if not set(classes) <= {0.0, 1.0}:
        raise LearnError("labels must be binary 0/1")
    names = list(feature_names) if feature_names is not None else [
        f"f{i}" for i in range(p)]
    if len(names) != p:
        raise LearnError("feature_names length mismatch")
    min_leaf = math.ceil(min_leaf_fraction * n)
    p_sub = math.ceil(math.sqrt(p))
    trees = []
    for tree_i in range(n_trees):
        rng = derive_rng(seed, "tree", tree_i)
        idx = rng.integers(0, n, size=n)
        trees.append(_grow(X[idx], y[idx], depth, min_leaf, n, p_sub, rng))
    return ForestModel(trees=trees, feature_names=names, n_train=n,
                       min_leaf=min_leaf, depth=depth, seed=seed)


def _walk(node: dict, x: np.ndarray) -> float:
    while not node["leaf"]:
        node = node["left"] if x[node["feature"]] <= node["threshold"] \
            else node["right"]
    return node["value"]


def predict_forest(m: ForestModel, x: Mapping[str, float]) -> float:
    """Mean of per-tree leaf probabilities for one feature mapping."""
    missing = [f for f in m.feature_names if f not in x]
    if missing:
        raise LearnError(f"feature vector missing {missing}")
    vec = np.array([x[f] for f in m.feature_names], dtype=float)
    return float(np.mean([_walk(t, vec) for t in m.trees]))


def predict_forest_matrix(m: ForestModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.shape[1] != len(m.feature_names):
        raise LearnError("feature matrix width mismatch")
    out = np.zeros(len(X))
    for tree in m.trees:
        out += _predict_tree_matrix(tree, X)
    return out / len(m.trees)


def _predict_tree_matrix(node: dict, X: np.ndarray) -> np.ndarray:
    if node["leaf"]:
        return np.full(len(X), node["value"])
    out = np.empty(len(X))
    mask = X[:, node["feature"]] <= node["threshold"]
    out[mask] = _predict_tree_matrix(node["left"], X[mask])
    out[~mask] = _predict_tree_matrix(node["right"], X[~mask])
    return out


def gini_importances(m: ForestModel) -> dict[str, float]:
    """Summed weighted impurity decreases, normalized to total 1."""
    raw = np.zeros(len(m.feature_names))

    def visit(node: dict) -> None:
        if node["leaf"]:
            return
        raw[node["feature"]] += node["weighted_gain"]
        visit(node["left"])
        visit(node["right"])

    for tree in m.trees:
        visit(tree)
    total = raw.sum()
    if total > 0:
        raw = raw / total
    return dict(zip(m.feature_names, raw.tolist()))


def forest_to_json(m: ForestModel) -> str:
    return json.dumps({
        "kind": "forest",
        "depth": m.depth,
        "n_trees": len(m.trees),
        "min_leaf": m.min_leaf,
        "n_train": m.n_train,
        "feature_names": m.feature_names,
        "trees": m.trees,
    }, sort_keys=True)


# ---------------------------------------------------------------------------
# L1 logistic regression

@dataclass
class LogitModel:
    weights: dict[str, float]
    intercept: float
    penalty: float
    n_iter: int = 0
    flags: list[str] = field(default_factory=list)

    def nonzero(self) -> list[str]:
        return [f for f, w in self.weights.items() if w != 0.0]


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _logistic_objective(X, y, w, b, lam) -> float:
    z = X @ w + b
    # log(1+exp(z)) - y*z, computed stably
    nll = np.mean(np.logaddexp(0.0, z) - y * z)
    return float(nll + lam * np.abs(w).sum())


def _ista_fit(X: np.ndarray, y: np.ndarray, lam: float,
              w0: np.ndarray, b0: float, tol: float = 1e-6,
              max_iter: int = 100_000) -> tuple[np.ndarray, float, int]:
    n, p = X.shape
    Xa = np.hstack([X, np.ones((n, 1))])
    lip = np.linalg.eigvalsh(Xa.T @ Xa)[-1] / (4.0 * n)
    step = 1.0 / lip
    w, b = w0.copy(), b0
    prev_obj = _logistic_objective(X, y, w, b, lam)
    for it in range(1, max_iter + 1):
        z = X @ w + b
        resid = _sigmoid(z) - y
        gw = X.T @ resid / n
        gb = float(resid.mean())
        w = np.sign(w - step * gw) * np.maximum(
            np.abs(w - step * gw) - step * lam, 0.0)
        b = b - step * gb
        obj = _logistic_objective(X, y, w, b, lam)
        if obj > prev_obj + 1e-10:
            raise LearnError(
                f"logistic objective increased at iter {it}: "
                f"{prev_obj} -> {obj}")
        prev_obj = obj
        # subgradient optimality residual
        z = X @ w + b
        resid = _sigmoid(z) - y
        gw = X.T @ resid / n
        gb = float(resid.mean())
        opt = np.where(w != 0.0, np.abs(gw + lam * np.sign(w)),
                       np.maximum(np.abs(gw) - lam, 0.0))
        if max(opt.max(initial=0.0), abs(gb)) <= tol:
            return w, b, it
    raise LearnError(
        f"ISTA did not converge in {max_iter} iterations at penalty {lam}; "
        f"residual {max(opt.max(initial=0.0), abs(gb)):.3e}")


def train_logit_l1(X: np.ndarray, y: np.ndarray,
                   target_nnz: int = LOGIT_TARGET_NNZ, seed: int = 0,
                   feature_names: Sequence[str] | None = None,
                   max_bisect: int = 80) -> LogitModel:
    """L1 logistic fit whose penalty is bisected to an exact support size.

    Expects standardized features. If the requested count is skipped by a
    simultaneous activation, the closest support below it is returned and
    flagged.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    names = list(feature_names) if feature_names is not None else [
        f"f{i}" for i in range(p)]
    if len(np.unique(y)) < 2:
        raise LearnError("training labels contain a single class")
    if target_nnz > p:
        raise LearnError(f"target_nnz {target_nnz} exceeds {p} features")

    ybar = y.mean()
    lam_max = float(np.abs(X.T @ (np.full(n, ybar) - y) / n).max())
    if lam_max == 0.0:
        raise LearnError("all features orthogonal to labels")

    w0 = np.zeros(p)
    b0 = float(math.log(ybar / (1.0 - ybar)))
    fits: dict[float, tuple[np.ndarray, float, int]] = {}

    def nnz_at(lam: float) -> int:
        if lam not in fits:
            fits[lam] = _ista_fit(X, y, lam, w0, b0)
        return int(np.count_nonzero(fits[lam][0]))

    hi = lam_max  # nnz(hi) == 0 <= target
    lo = lam_max
    for _ in range(60):
        lo /= 2.0
        if nnz_at(lo) >= target_nnz:
            break
    else:
        # target support size unreachable: return the densest model found
        best_lam = min(fits, key=lambda l: (target_nnz - nnz_at(l), l))
        w, b, it = fits[best_lam]
        model = LogitModel(dict(zip(names, w.tolist())), b, best_lam, it,
                           flags=["target_nnz_unreachable"])
        return model

    chosen = None
    nearest_below = (lo if nnz_at(lo) <= target_nnz else hi)
    for _ in range(max_bisect):
        for lam in (lo, hi):
            k = nnz_at(lam)
            if k == target_nnz:
                chosen = lam
                break
        if chosen is not None:
            break
        mid = 0.5 * (lo + hi)
        k = nnz_at(mid)
        if k == target_nnz:
            chosen = mid
            break
        if k > target_nnz:
            lo = mid
        else:
            hi = mid
            nearest_below = mid

    flags = []
    if chosen is None:
        # simultaneous activation skipped the target count
        below = [l for l in fits if nnz_at(l) < target_nnz]
        chosen = max(below, key=lambda l: nnz_at(l)) if below else hi
        flags.append("target_nnz_skipped")
    w, b, it = fits[chosen]
    return LogitModel(dict(zip(names, w.tolist())), float(b), float(chosen),
                      it, flags=flags)


def predict_logit(m: LogitModel, X: np.ndarray,
                  feature_names: Sequence[str] | None = None) -> np.ndarray:
    names = list(feature_names) if feature_names is not None else \
        list(m.weights)
    w = np.array([m.weights[f] for f in names])
    return _sigmoid(np.asarray(X, dtype=float) @ w + m.intercept)


def logit_to_json(m: LogitModel) -> str:
    return json.dumps({
        "kind": "logit_l1",
        "weights": m.weights,
        "intercept": m.intercept,
        "penalty": m.penalty,
        "n_nonzero": len(m.nonzero()),
        "flags": m.flags,
    }, sort_keys=True)


# ---------------------------------------------------------------------------
# Standardization

@dataclass
class Standardizer:
    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> "Standardizer":
        X = np.asarray(X, dtype=float)
        mean = X.mean(axis=0)
        scale = X.std(axis=0)
        scale[scale == 0.0] = 1.0
        return cls(mean=mean, scale=scale)

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.mean) / self.scale


# ---------------------------------------------------------------------------
# Scores and aggregation

def auc(labels: Sequence[int], scores: Sequence[float]) -> float:
    """Mann-Whitney AUC with average ranks on ties; labels first."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=float)
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise LearnError("AUC needs both classes present")
    ranks = rankdata(scores)
    rank_sum = ranks[labels == 1].sum()
    return float((rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def hierarchical_positive(p_pos_given_nonneutral: float,
                          p_nonneutral: float) -> float:
    for v in (p_pos_given_nonneutral, p_nonneutral):
        if not 0.0 <= v <= 1.0:
            raise LearnError(f"probability {v} outside [0, 1]")
    return p_pos_given_nonneutral * p_nonneutral


def bayes_aggregate(claims: Sequence[tuple[int, float]], prior: float) -> float:
    """Posterior positive probability from independent claim likelihoods.

    Each claim contributes odds q/(1-q) when it asserts the positive and
    the reciprocal otherwise; computed in log-odds space with q clamped.
    """
    if not 0.0 < prior < 1.0:
        raise LearnError(f"prior must lie in (0, 1), got {prior}")
    log_odds = math.log(prior / (1.0 - prior))
    for polarity, q in claims:
        if polarity not in (0, 1):
            raise LearnError(f"polarity must be binary, got {polarity!r}")
        if not 0.0 <= q <= 1.0:
            raise LearnError(f"q={q} outside [0, 1]")
        qc = min(max(q, _Q_CLAMP), 1.0 - _Q_CLAMP)
        term = math.log(qc / (1.0 - qc))
        log_odds += term if polarity == 1 else -term
    return 1.0 / (1.0 + math.exp(-log_odds))


def family_importance(
    per_sample: Sequence[Mapping[str, float]],
    family_map: Mapping[str, str],
) -> dict[str, tuple[float, float, float]]:
    """Per-family sums per sample, then mean and normal 95% CI across samples.

    Sums are signed: logistic coefficients keep their sign, forest
    importances are nonnegative anyway.
    """
    if not per_sample:
        raise LearnError("no importance samples")
    families = sorted(set(family_map.values()))
    sums = {fam: [] for fam in families}
    for sample in per_sample:
        acc = {fam: 0.0 for fam in families}
        for feat, val in sample.items():
            fam = family_map.get(feat)
            if fam is None:
                raise LearnError(f"feature {feat!r} has no family")
            acc[fam] += val
        for fam in families:
            sums[fam].append(acc[fam])
    out = {}
    for fam in families:
        arr = np.array(sums[fam])
        mean = float(arr.mean())
        if len(arr) >= 2:
            half = 1.96 * float(arr.std(ddof=1)) / math.sqrt(len(arr))
            out[fam] = (mean, mean - half, mean + half)
        else:
            out[fam] = (mean, math.nan, math.nan)
    return out
