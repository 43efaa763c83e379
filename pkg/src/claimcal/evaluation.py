"""Grouped cross-validation, AUC/information-gain reporting, and the
claim-length / community policies.

All splits are grouped by interaction so no interaction ever contributes
rows to both sides of a fold. Fold AUCs that cannot be computed (a
single-class test fold, or too little training data) are skipped and
flagged rather than silently imputed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy import stats
from scipy.special import zeta

from . import features as ft
from . import learn
from .corpus import (ClaimCorpus, ClaimRecord, InteractionKey,
                     InteractionRecord, subset_by_time)
from .partition import ClassLabel
from .rng import derive_rng, derive_seed

TASKS = ("neutral", "positive_direct", "positive_bayes", "claim_correctness")
MODEL_KINDS = ("forest", "logit")


class EvalError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Fold plans

@dataclass(frozen=True)
class FoldPlan:
    """Grouped k-fold assignment: per repeat, a fold id per interaction."""

    interactions: tuple[InteractionKey, ...]
    assignment: tuple[tuple[int, ...], ...]
    k: int
    seed: int

    @property
    def repeats(self) -> int:
        return len(self.assignment)

    def splits(self):
        """Yield (repeat, fold, train_keys, test_keys), sorted order."""
        for r, folds in enumerate(self.assignment):
            for f in range(self.k):
                train = tuple(k for k, g in zip(self.interactions, folds)
                              if g != f)
                test = tuple(k for k, g in zip(self.interactions, folds)
                             if g == f)
                yield r, f, train, test


def grouped_kfold(interactions: Sequence[InteractionKey], repeats: int = 20,
                  k: int = 3, seed: int = 0) -> FoldPlan:
    keys = tuple(sorted(interactions))
    n = len(keys)
    if n < k:
        raise EvalError(f"need at least {k} interactions, got {n}")
    assignment = []
    for r in range(repeats):
        rng = derive_rng(seed, "fold", r)
        perm = rng.permutation(n)
        folds = np.empty(n, dtype=int)
        base, extra = divmod(n, k)
        start = 0
        for f in range(k):
            size = base + (1 if f < extra else 0)
            folds[perm[start:start + size]] = f
            start += size
        assignment.append(tuple(int(x) for x in folds))
    return FoldPlan(interactions=keys, assignment=tuple(assignment), k=k,
                    seed=seed)


# ---------------------------------------------------------------------------
# Discrete power-law (unit lower cutoff) maximum likelihood

_ZETA_H = 1e-5
_S_LO = 1.0 + 1e-9
_S_HI = 50.0


def _zeta_ratio(s: float) -> float:
    # d/ds log zeta(s), central difference
    num = (zeta(s + _ZETA_H, 1) - zeta(s - _ZETA_H, 1)) / (2 * _ZETA_H)
    return num / zeta(s, 1)


def fit_zipf(popularities: Sequence[int]) -> float:
    """ML exponent of a discrete power law on {1, 2, ...}."""
    xs = np.asarray(list(popularities), dtype=float)
    if xs.size == 0 or np.any(xs < 1):
        raise EvalError("counts must be positive integers")
    if len(np.unique(xs)) < 5:
        raise EvalError("need at least 5 distinct count values to fit"
                        " a power law")
    mean_log = float(np.mean(np.log(xs)))
    if mean_log <= 0:
        raise EvalError("degenerate counts: no spread above 1")

    def g(s: float) -> float:
        return _zeta_ratio(s) + mean_log

    s = 2.0
    for _ in range(100):
        gs = g(s)
        if abs(gs) < 1e-10:
            return float(s)
        dg = (g(s + _ZETA_H) - g(s - _ZETA_H)) / (2 * _ZETA_H)
        step = gs / dg
        s_new = s - step
        if not (_S_LO < s_new < _S_HI):
            break
        if abs(s_new - s) < 1e-12:
            return float(s_new)
        s = s_new
    # bisection fallback: g is increasing in s
    lo, hi = _S_LO + 1e-6, _S_HI
    if g(lo) > 0 or g(hi) < 0:
        raise EvalError("exponent outside supported range (1, 50)")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g(mid) < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-10:
            break
    return float(0.5 * (lo + hi))


def zipf_claim_split(corpus: ClaimCorpus, train_fraction: float,
                     seed: int = 0) -> tuple[list[ClaimRecord],
                                             list[ClaimRecord]]:
    """Popularity-stratified grouped split; claims follow their interaction."""
    if not 0 < train_fraction < 1:
        raise EvalError("train_fraction must lie in (0, 1)")
    ranked = sorted(corpus.interactions,
                    key=lambda k: (len(corpus.interactions[k].claims), k))
    rng = derive_rng(seed, "zipfsplit")
    train: list[ClaimRecord] = []
    test: list[ClaimRecord] = []
    for stratum in np.array_split(np.arange(len(ranked)), 10):
        for i in stratum:
            key = ranked[int(i)]
            side = train if rng.random() < train_fraction else test
            side.extend(corpus.interactions[key].claims)
    return train, test


# ---------------------------------------------------------------------------
# Information gain

def binary_entropy(p: float) -> float:
    p = min(max(float(p), 0.0), 1.0)
    if p in (0.0, 1.0):
        return 0.0
    return -(p * math.log2(p) + (1 - p) * math.log2(1 - p))


def info_gain(predictions: Sequence[float]) -> float:
    """One bit (the flat-coin baseline) minus mean predictive entropy."""
    ps = list(predictions)
    if not ps:
        raise EvalError("empty prediction list")
    return 1.0 - sum(binary_entropy(p) for p in ps) / len(ps)


# ---------------------------------------------------------------------------
# Model fitting per fold

def _fit_predict(Xtr: np.ndarray, ytr: np.ndarray, Xte: np.ndarray,
                 names: list[str], model_kind: str, seed: int):
    """Returns (test scores, per-feature importance dict)."""
    if model_kind == "forest":
        model = learn.train_forest(Xtr, ytr, feature_names=names, seed=seed)
        scores = learn.predict_forest_matrix(model, Xte)
        imp = learn.gini_importances(model)
    elif model_kind == "logit":
        std = learn.Standardizer.fit(Xtr)
        model = learn.train_logit_l1(std.transform(Xtr), ytr,
                                     feature_names=names, seed=seed)
        scores = learn.predict_logit(model, std.transform(Xte))
        total = sum(abs(w) for w in model.weights.values()) or 1.0
        imp = {n: abs(model.weights.get(n, 0.0)) / total for n in names}
    else:
        raise EvalError(f"unknown model kind {model_kind!r}")
    return np.asarray(scores, dtype=float), imp


def _family_shares(imp: Mapping[str, float],
                   families: Mapping[str, str]) -> dict[str, float]:
    out: dict[str, float] = {}
    for name, v in imp.items():
        out[families[name]] = out.get(families[name], 0.0) + float(v)
    return out


@dataclass
class EvalReport:
    task: str
    model_kind: str
    auc_samples: list[float]
    ig_samples: list[float]
    auc_mean: float
    auc_ci95: tuple[float, float]
    ig_mean: float
    family_importances: dict[str, tuple[float, float, float]]
    n_folds: int
    n_skipped: int
    flags: list[str] = field(default_factory=list)

    def to_json(self) -> str:
        d = {
            "task": self.task,
            "model_kind": self.model_kind,
            "auc_samples": self.auc_samples,
            "ig_samples": self.ig_samples,
            "auc_mean": self.auc_mean,
            "auc_ci95": list(self.auc_ci95),
            "ig_mean": self.ig_mean,
            "family_importances": {k: list(v) for k, v in
                                   self.family_importances.items()},
            "n_folds": self.n_folds,
            "n_skipped": self.n_skipped,
            "flags": self.flags,
        }
        return json.dumps(d, sort_keys=True, indent=2)


def _t_ci(samples: Sequence[float]) -> tuple[float, float, float]:
    xs = np.asarray(samples, dtype=float)
    m = float(np.mean(xs))
    if xs.size < 2:
        return m, math.nan, math.nan
    half = float(stats.t.ppf(0.975, xs.size - 1)
                 * np.std(xs, ddof=1) / math.sqrt(xs.size))
    return m, m - half, m + half


def _interaction_xy(features: ft.FeatureTables, keys, task: str):
    """Rows, labels and row ids for an interaction-level task."""
    ids, ys = [], []
    for key in keys:
        lab = features.labels[key]
        if task == "neutral":
            ids.append(str(key))
            ys.append(1.0 if lab is ClassLabel.NEUTRAL else 0.0)
        else:
            if lab is ClassLabel.NEUTRAL:
                continue
            ids.append(str(key))
            ys.append(1.0 if lab is ClassLabel.POSITIVE else 0.0)
    return ids, np.asarray(ys, dtype=float)


def _claim_xy(features: ft.FeatureTables, keys):
    """Claim rows of non-neutral interactions; y = polarity matches class."""
    sub = features.claim[features.claim["interaction"].isin(
        {str(k) for k in keys})]
    mask, ys = [], []
    lab_by_str = {str(k): v for k, v in features.labels.items()}
    for rid, row in zip(sub.index, sub.itertuples(index=False)):
        lab = lab_by_str[row.interaction]
        if lab is ClassLabel.NEUTRAL:
            continue
        mask.append(rid)
        truth = 1 if lab is ClassLabel.POSITIVE else 0
        ys.append(1.0 if row.polarity == truth else 0.0)
    return sub.loc[mask], np.asarray(ys, dtype=float)


def evaluate(corpus: ClaimCorpus, features: ft.FeatureTables, task: str,
             plan: FoldPlan, model_kind: str = "forest",
             oracle_q: float | None = None) -> EvalReport:
    """Cross-validated AUC / IG / family importances for one task."""
    if task not in TASKS:
        raise EvalError(f"unknown task {task!r}")
    aucs: list[float] = []
    igs: list[float] = []
    fold_shares: list[dict[str, float]] = []
    flags: list[str] = []
    n_total = 0
    feat_cols = features.claim_feature_columns()

    for r, f, train_keys, test_keys in plan.splits():
        n_total += 1
        seed = derive_seed(plan.seed, "model", task, r, f)
        try:
            if task in ("neutral", "positive_direct"):
                tr_ids, ytr = _interaction_xy(features, train_keys, task)
                te_ids, yte = _interaction_xy(features, test_keys, task)
                names = list(features.interaction.columns)
                Xtr, Xte = ft.impute_median(
                    features.interaction.loc[tr_ids],
                    features.interaction.loc[te_ids])
                scores, imp = _fit_predict(Xtr, ytr, Xte, names, model_kind,
                                           seed)
            elif task == "claim_correctness":
                tr_df, ytr = _claim_xy(features, train_keys)
                te_df, yte = _claim_xy(features, test_keys)
                names = feat_cols
                Xtr, Xte = ft.impute_median(tr_df[feat_cols],
                                            te_df[feat_cols])
                scores, imp = _fit_predict(Xtr, ytr, Xte, names, model_kind,
                                           seed)
            else:  # positive_bayes
                scores, yte, imp = _positive_bayes_fold(
                    features, train_keys, test_keys, model_kind, seed,
                    oracle_q)
        except learn.LearnError as exc:
            flags.append(f"r{r}f{f}: train skipped ({exc})")
            continue
        if len(set(yte.tolist())) < 2:
            flags.append(f"r{r}f{f}: single-class test fold skipped")
            continue
        aucs.append(learn.auc(yte, scores))
        igs.append(info_gain(scores))
        if imp:
            fold_shares.append(_family_shares(imp, features.families))

    fam: dict[str, tuple[float, float, float]] = {}
    if fold_shares:
        all_fams = sorted({f for d in fold_shares for f in d})
        for name in all_fams:
            vals = [d.get(name, 0.0) for d in fold_shares]
            fam[name] = _t_ci(vals)
    auc_mean, lo, hi = _t_ci(aucs) if aucs else (math.nan, math.nan, math.nan)
    return EvalReport(
        task=task, model_kind=model_kind, auc_samples=aucs, ig_samples=igs,
        auc_mean=auc_mean, auc_ci95=(lo, hi),
        ig_mean=float(np.mean(igs)) if igs else math.nan,
        family_importances=fam, n_folds=n_total,
        n_skipped=n_total - len(aucs), flags=flags)


def _positive_bayes_fold(features: ft.FeatureTables, train_keys, test_keys,
                         model_kind: str, seed: int,
                         oracle_q: float | None):
    """Claim-level correctness scores aggregated to interaction posteriors.

    With oracle_q set, the learned claim model and the neutral-stage
    factor are bypassed so the aggregation arithmetic can be tested in
    isolation.
    """
    feat_cols = features.claim_feature_columns()
    lab_by_str = {str(k): v for k, v in features.labels.items()}
    te_keys_nn = [k for k in test_keys
                  if features.labels[k] is not ClassLabel.NEUTRAL]
    yte = np.asarray([1.0 if features.labels[k] is ClassLabel.POSITIVE
                      else 0.0 for k in te_keys_nn])
    tr_df, ytr = _claim_xy(features, train_keys)
    prior = float(np.mean([1.0 if features.labels[k] is ClassLabel.POSITIVE
                           else 0.0 for k in train_keys
                           if features.labels[k] is not ClassLabel.NEUTRAL]))
    te_df = features.claim[features.claim["interaction"].isin(
        {str(k) for k in te_keys_nn})]

    imp: dict[str, float] = {}
    if oracle_q is None:
        Xtr, Xte = ft.impute_median(tr_df[feat_cols], te_df[feat_cols])
        qs, imp = _fit_predict(Xtr, ytr, Xte, feat_cols, model_kind, seed)
    else:
        qs = np.full(len(te_df), float(oracle_q))
    q_by_row = dict(zip(te_df.index, qs))

    posteriors = []
    for key in te_keys_nn:
        rows = te_df.index[te_df["interaction"] == str(key)]
        pairs = [(int(te_df.at[rid, "polarity"]), float(q_by_row[rid]))
                 for rid in rows]
        posteriors.append(learn.bayes_aggregate(pairs, prior=prior))

    if oracle_q is None:
        # second stage: discount by the modeled odds of being neutral
        tr_ids, ytr_n = _interaction_xy(features, train_keys, "neutral")
        te_ids = [str(k) for k in te_keys_nn]
        Xtr, Xte = ft.impute_median(features.interaction.loc[tr_ids],
                                    features.interaction.loc[te_ids])
        p_neu, _ = _fit_predict(Xtr, ytr_n, Xte,
                                list(features.interaction.columns),
                                model_kind, seed ^ 0x5F5F)
        scores = np.array([learn.hierarchical_positive(1.0 - pn, pb)
                           for pn, pb in zip(p_neu, posteriors)])
    else:
        scores = np.asarray(posteriors)
    return scores, yte, imp


# ---------------------------------------------------------------------------
# Policies

def policy_community_split(scores: Sequence[float], labels: Sequence[float],
                           ccn_values: Sequence[float],
                           threshold: float | None = None) -> dict:
    """Held-out AUC separately for low- and high-community interactions."""
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels, dtype=float)
    c = np.asarray(ccn_values, dtype=float)
    if not (len(s) == len(y) == len(c)):
        raise EvalError("scores, labels and community counts must align")
    if threshold is None:
        threshold = float(np.median(c))
    out: dict = {"threshold": threshold, "flags": []}
    for name, mask in (("low", c <= threshold), ("high", c > threshold)):
        out[f"n_{name}"] = int(mask.sum())
        if mask.sum() == 0 or len(set(y[mask].tolist())) < 2:
            out[f"auc_{name}"] = math.nan
            out["flags"].append(f"{name} group empty or single-class")
        else:
            out[f"auc_{name}"] = learn.auc(y[mask], s[mask])
    return out


def _resampled_counts(counts: dict[InteractionKey, int],
                      gamma: float) -> list[int]:
    return [max(1, round(n ** gamma)) for n in counts.values()]


def policy_resample_lengths(corpus: ClaimCorpus, beta_target: float,
                            seed: int = 0,
                            tol: float = 0.1) -> ClaimCorpus:
    """Subsample claims per interaction until the fitted count-distribution
    exponent matches beta_target.

    Claim counts are shrunk through n -> max(1, round(n^gamma)); gamma is
    found by bisection. Subsampling can only flatten counts toward 1,
    i.e. steepen the fitted exponent, so targets below the corpus's own
    fit are unachievable and raise with the achievable interval.
    """
    counts = {k: len(rec.claims) for k, rec in corpus.interactions.items()}
    beta_now = fit_zipf(list(counts.values()))

    def fitted(gamma: float) -> float:
        # gamma small enough collapses every count to 1: infinitely steep
        try:
            return fit_zipf(_resampled_counts(counts, gamma))
        except EvalError:
            return math.inf

    g_lo = 0.05
    beta_max = fitted(g_lo)
    if beta_target < beta_now - tol or beta_target > beta_max + tol:
        raise EvalError(
            f"target exponent {beta_target:.3f} unachievable; reachable"
            f" interval is [{beta_now:.3f}, {beta_max:.3f}]")

    if abs(beta_target - beta_now) <= tol:
        gamma = 1.0
    else:
        lo, hi = g_lo, 1.0  # fitted() decreasing in gamma
        gamma = 1.0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            b = fitted(mid)
            if abs(b - beta_target) <= tol:
                gamma = mid
                break
            if b > beta_target:
                lo = mid
            else:
                hi = mid
        else:
            gamma = 0.5 * (lo + hi)
            if abs(fitted(gamma) - beta_target) > tol:
                raise EvalError(
                    f"bisection cannot reach exponent {beta_target:.3f}"
                    f" within {tol}; counts too coarse")

    interactions = {}
    used_pubs: set[str] = set()
    for key in sorted(corpus.interactions):
        rec = corpus.interactions[key]
        m = max(1, round(len(rec.claims) ** gamma))
        claims = sorted(rec.claims, key=lambda c: (c.year, c.publication))
        if m < len(claims):
            rng = derive_rng(seed, "resample", str(key))
            idx = sorted(rng.choice(len(claims), size=m, replace=False))
            claims = [claims[i] for i in idx]
        interactions[key] = InteractionRecord(
            key=key, claims=tuple(claims), strength=rec.strength)
        used_pubs.update(c.publication for c in claims)
    pubs = {p: corpus.publications[p] for p in sorted(used_pubs)}
    return ClaimCorpus(interactions=interactions, publications=pubs,
                       ingest_report={"resample_gamma": gamma,
                                      "resample_beta_target": beta_target})


def policy_direction(betas: Sequence[float],
                     samples_per_beta: Sequence[Sequence[float]]
                     ) -> tuple[float, float]:
    """Spearman test that flatter count distributions score higher.

    Pairs (-beta, fold sample) are pooled so flatter (smaller beta) maps
    to larger x; one-sided alternative rho > 0.
    """
    xs, ys = [], []
    for b, samples in zip(betas, samples_per_beta):
        for v in samples:
            xs.append(-float(b))
            ys.append(float(v))
    rho, p = stats.spearmanr(xs, ys, alternative="greater")
    return float(rho), float(p)


# ---------------------------------------------------------------------------
# Temporal discipline audit

def temporal_audit(corpus: ClaimCorpus, seed: int = 0,
                   sample_size: int = 25,
                   convention: str = "2sigma") -> dict:
    """Recompute sampled claim rows on time-truncated corpora.

    Every feature of a claim dated t must be derivable from records dated
    <= t, so recomputing on subset_by_time(corpus, t) must reproduce the
    full-corpus row exactly (NaN compares equal to NaN).
    """
    full_ctx = ft.FeatureContext(corpus, seed, convention)
    all_claims = [(key, c) for key in sorted(corpus.interactions)
                  for c in sorted(corpus.interactions[key].claims,
                                  key=lambda c: (c.year, c.publication))]
    rng = derive_rng(seed, "audit")
    if len(all_claims) > sample_size:
        idx = sorted(rng.choice(len(all_claims), size=sample_size,
                                replace=False))
        all_claims = [all_claims[i] for i in idx]
    worst = 0.0
    offenders: list[str] = []
    for key, claim in all_claims:
        ref = ft.claim_row(full_ctx, key, claim)
        sub = subset_by_time(corpus, claim.year)
        sub_ctx = ft.FeatureContext(sub, seed, convention)
        got = ft.claim_row(sub_ctx, key, claim)
        for col in ref:
            a, b = ref[col], got[col]
            if isinstance(a, float) and isinstance(b, float) \
                    and math.isnan(a) and math.isnan(b):
                continue
            d = abs(float(a) - float(b))
            if d > worst:
                worst = d
            if d > 1e-9:
                offenders.append(f"{key}|{claim.publication}:{col}")
    return {"n_checked": len(all_claims), "max_abs_diff": worst,
            "violations": offenders, "ok": not offenders}
