import json
import math

import numpy as np
import pytest

from claimcal.evaluation import (
    EvalError,
    binary_entropy,
    evaluate,
    fit_zipf,
    grouped_kfold,
    info_gain,
    policy_community_split,
    policy_direction,
    policy_resample_lengths,
    temporal_audit,
    zipf_claim_split,
)
from claimcal.corpus import InteractionKey
from claimcal.features import assemble
from claimcal.rng import derive_rng
from claimcal.synth import GenConfig, generate_corpus


@pytest.fixture(scope="module")
def eval_synth():
    """Large enough that two-thirds training folds clear the forest floor."""
    corpus, _, labels = generate_corpus(GenConfig(n_interactions=90, seed=11))
    return corpus, labels, assemble(corpus, labels, seed=0)


# ---------------------------------------------------------------------------
# Fold plans

def keys(n):
    return [InteractionKey(f"g{i}", f"h{i}") for i in range(n)]


def test_grouped_kfold_partitions():
    plan = grouped_kfold(keys(10), repeats=4, k=3, seed=1)
    assert plan.repeats == 4
    splits = list(plan.splits())
    assert len(splits) == 12
    for _, _, train, test in splits:
        assert not set(train) & set(test)
        assert set(train) | set(test) == set(plan.interactions)
    for folds in plan.assignment:
        sizes = sorted(folds.count(f) for f in range(3))
        assert sizes == [3, 3, 4]


def test_grouped_kfold_deterministic_and_seeded():
    a = grouped_kfold(keys(9), repeats=2, k=3, seed=5)
    b = grouped_kfold(keys(9), repeats=2, k=3, seed=5)
    c = grouped_kfold(keys(9), repeats=2, k=3, seed=6)
    assert a == b
    assert a.assignment != c.assignment


def test_grouped_kfold_too_few():
    with pytest.raises(EvalError, match="at least"):
        grouped_kfold(keys(2), k=3)


# ---------------------------------------------------------------------------
# Power-law exponent fit

def zipf_sample(exponent, n, cap, seed):
    ks = np.arange(1, cap + 1, dtype=float)
    p = ks ** -exponent
    p /= p.sum()
    rng = derive_rng(seed, "zipf-oracle")
    return rng.choice(np.arange(1, cap + 1), size=n, p=p)


@pytest.mark.parametrize("exponent,cap", [(2.0, 5000), (1.5, 50000),
                                          (3.0, 2000)])
def test_fit_zipf_round_trip(exponent, cap):
    xs = zipf_sample(exponent, 200_000, cap, seed=3)
    assert fit_zipf(xs) == pytest.approx(exponent, abs=0.05)


def test_fit_zipf_errors():
    with pytest.raises(EvalError):
        fit_zipf([])
    with pytest.raises(EvalError):
        fit_zipf([0, 1, 2, 3, 4])
    with pytest.raises(EvalError, match="distinct"):
        fit_zipf([1] * 50)
    with pytest.raises(EvalError, match="distinct"):
        fit_zipf([1, 2, 3, 4] * 10)


def test_zipf_claim_split(eval_synth):
    corpus, _, _ = eval_synth
    train, test = zipf_claim_split(corpus, 0.5, seed=0)
    assert len(train) + len(test) == corpus.n_claims()
    tr_keys = {c.interaction for c in train}
    te_keys = {c.interaction for c in test}
    assert not tr_keys & te_keys
    again = zipf_claim_split(corpus, 0.5, seed=0)
    assert again == (train, test)
    with pytest.raises(EvalError):
        zipf_claim_split(corpus, 1.0)


# ---------------------------------------------------------------------------
# Information gain

def test_info_gain_identities():
    assert info_gain([0.5] * 10) == pytest.approx(0.0, abs=1e-12)
    assert info_gain([0.0, 1.0, 1.0, 0.0]) == pytest.approx(1.0)
    assert info_gain([0.9] * 4) == pytest.approx(0.5310044, abs=1e-6)
    assert binary_entropy(0.3) == binary_entropy(0.7)
    with pytest.raises(EvalError):
        info_gain([])


# ---------------------------------------------------------------------------
# Cross-validated evaluation

def test_evaluate_neutral_forest(eval_synth):
    corpus, labels, tabs = eval_synth
    plan = grouped_kfold(sorted(corpus.interactions), repeats=1, k=3, seed=0)
    rep = evaluate(corpus, tabs, "neutral", plan)
    assert rep.task == "neutral" and rep.model_kind == "forest"
    assert rep.n_folds == 3
    assert rep.n_skipped + len(rep.auc_samples) == 3
    assert all(0.0 <= a <= 1.0 for a in rep.auc_samples)
    assert rep.auc_ci95[0] <= rep.auc_mean <= rep.auc_ci95[1]
    assert rep.family_importances
    for _, (m, lo, hi) in rep.family_importances.items():
        if not math.isnan(lo):
            assert lo <= m <= hi
    parsed = json.loads(rep.to_json())
    assert parsed["task"] == "neutral"
    assert parsed["n_folds"] == 3


def test_evaluate_logit_kind(eval_synth):
    corpus, labels, tabs = eval_synth
    plan = grouped_kfold(sorted(corpus.interactions), repeats=1, k=3, seed=2)
    rep = evaluate(corpus, tabs, "neutral", plan, model_kind="logit")
    assert rep.model_kind == "logit"
    assert len(rep.auc_samples) >= 1
    with pytest.raises(EvalError, match="model kind"):
        evaluate(corpus, tabs, "neutral", plan, model_kind="svm")


def test_evaluate_positive_bayes_oracle(eval_synth):
    """Oracle confidence bypasses both learned stages; aggregation only."""
    corpus, labels, tabs = eval_synth
    plan = grouped_kfold(sorted(corpus.interactions), repeats=1, k=3, seed=0)
    rep = evaluate(corpus, tabs, "positive_bayes", plan, oracle_q=0.95)
    # polarity patterns alone separate positives from negatives here
    assert rep.auc_mean > 0.9
    assert rep.family_importances == {}


def test_evaluate_unknown_task(eval_synth):
    corpus, labels, tabs = eval_synth
    plan = grouped_kfold(sorted(corpus.interactions), repeats=1, k=3, seed=0)
    with pytest.raises(EvalError, match="task"):
        evaluate(corpus, tabs, "sentiment", plan)


def test_evaluate_skips_underfilled_folds(eval_synth):
    """Training folds below the forest floor are flagged, not fudged."""
    corpus, labels, tabs = eval_synth
    some = sorted(corpus.interactions)[:30]
    plan = grouped_kfold(some, repeats=1, k=3, seed=0)
    rep = evaluate(corpus, tabs, "neutral", plan)
    assert rep.n_skipped == 3
    assert rep.auc_samples == []
    assert math.isnan(rep.auc_mean)
    assert any("skipped" in f for f in rep.flags)


# ---------------------------------------------------------------------------
# Policies

def test_policy_community_split():
    out = policy_community_split(
        scores=[0.9, 0.8, 0.2, 0.7, 0.3, 0.1],
        labels=[1, 1, 0, 0, 0, 1],
        ccn_values=[1, 1, 1, 3, 3, 3])
    assert out["threshold"] == 2.0
    assert out["n_low"] == 3 and out["n_high"] == 3
    assert out["auc_low"] == 1.0
    assert out["auc_high"] == 0.0
    with pytest.raises(EvalError):
        policy_community_split([0.5], [1, 0], [1, 2])


def test_policy_resample_identity(default_synth):
    corpus, _, _ = default_synth
    counts = {k: len(r.claims) for k, r in corpus.interactions.items()}
    beta_now = fit_zipf(list(counts.values()))
    sub = policy_resample_lengths(corpus, beta_now, seed=0)
    assert sub.ingest_report["resample_gamma"] == 1.0
    assert {k: len(r.claims) for k, r in sub.interactions.items()} == counts


def test_policy_resample_steepens(default_synth):
    corpus, _, _ = default_synth
    sub = policy_resample_lengths(corpus, 2.7, seed=0)
    new_counts = {k: len(r.claims) for k, r in sub.interactions.items()}
    assert fit_zipf(list(new_counts.values())) == pytest.approx(2.7, abs=0.1)
    for k, rec in sub.interactions.items():
        full = corpus.interactions[k]
        assert len(rec.claims) <= len(full.claims)
        assert set(rec.claims) <= set(full.claims)
        assert rec.strength == full.strength
    assert set(sub.publications) == {c.publication
                                     for r in sub.interactions.values()
                                     for c in r.claims}


def test_policy_resample_deterministic(default_synth):
    corpus, _, _ = default_synth
    a = policy_resample_lengths(corpus, 2.7, seed=4)
    b = policy_resample_lengths(corpus, 2.7, seed=4)
    assert {k: r.claims for k, r in a.interactions.items()} == \
           {k: r.claims for k, r in b.interactions.items()}


def test_policy_resample_unachievable(default_synth):
    corpus, _, _ = default_synth
    with pytest.raises(EvalError, match="unachievable"):
        policy_resample_lengths(corpus, 1.5)
    with pytest.raises(EvalError):
        policy_resample_lengths(corpus, 60.0)


def test_policy_direction():
    rho, p = policy_direction(
        [2.0, 3.0, 4.0],
        [[0.90, 0.91, 0.92], [0.80, 0.81, 0.82], [0.70, 0.71, 0.72]])
    assert rho > 0.9 and p < 0.01
    rho, p = policy_direction(
        [2.0, 3.0, 4.0],
        [[0.70, 0.71], [0.80, 0.81], [0.90, 0.91]])
    assert rho < 0 and p > 0.5


# ---------------------------------------------------------------------------
# Temporal discipline

def test_temporal_audit_clean():
    corpus, _, _ = generate_corpus(GenConfig(n_interactions=12, seed=5))
    out = temporal_audit(corpus, seed=0, sample_size=10)
    assert out["ok"] is True
    assert out["violations"] == []
    assert out["n_checked"] == 10
    assert out["max_abs_diff"] <= 1e-9
