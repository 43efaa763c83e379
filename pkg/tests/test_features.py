import math

import numpy as np
import pandas as pd
import pytest

from claimcal.corpus import CorpusError, InteractionKey
from claimcal.features import (
    ID_COLUMNS,
    FeatureTables,
    add_missing_indicators,
    assemble,
    claim_columns,
    claim_features,
    family_map,
    feature_family,
    impute_median,
    interaction_columns,
    interaction_features,
)
from claimcal.partition import ClassLabel
from claimcal.synth import GenConfig, generate_corpus

from conftest import make_corpus


@pytest.fixture(scope="module")
def small_synth():
    return generate_corpus(GenConfig(n_interactions=12, seed=5))


# ---------------------------------------------------------------------------
# Family grouping

def test_feature_family_examples():
    assert feature_family("MCP") == "MCP"
    assert feature_family("MCP_missing") == "MCP"
    assert feature_family("CP_strict_w3") == "popularity (CP), density (CD)"
    assert feature_family("CD_rc_winf") == "popularity (CP), density (CD)"
    assert feature_family("FLAT_rc_w1") == "FLAT"
    assert feature_family("deg_tgt_out") == "degrees"
    assert feature_family("IPS_im_dir_w") == "IPS"
    assert feature_family("CDEP_refs_w5") == "CDEP"
    assert feature_family("log_sigma") == "citations"
    assert feature_family("fit_ok") == "citations"
    assert feature_family("year_off2") == "time"
    assert feature_family("n_authors") == "author count"
    assert feature_family("JQ") == "JQ"
    with pytest.raises(CorpusError):
        feature_family("nonsense_col")


def test_family_map_covers_all_declared_columns():
    fam = family_map(claim_columns() + interaction_columns())
    assert set(fam) == set(claim_columns()) | set(interaction_columns())


def test_column_orders_are_disjoint_unions():
    inter = interaction_columns()
    claim = claim_columns()
    assert len(inter) == len(set(inter))
    assert len(claim) == len(set(claim))
    # the claim table extends the interaction block
    assert set(inter) <= set(claim)
    for extra in ("year_off", "JQ", "cit3", "NW_authors", "BDEP_refs_winf"):
        assert extra in claim and extra not in inter


# ---------------------------------------------------------------------------
# Table shapes and leak guards

def test_interaction_features_shape(small_synth):
    corpus, _, _ = small_synth
    df = interaction_features(corpus)
    assert len(df) == len(corpus.interactions)
    assert list(df.columns) == interaction_columns()
    assert sorted(df.index) == sorted(str(k) for k in corpus.interactions)


def test_claim_features_ids_and_index(three_year_corpus):
    df = claim_features(three_year_corpus)
    assert list(df.columns[:4]) == list(ID_COLUMNS)
    assert list(df.index) == ["A->B|p1", "A->B|p2", "A->B|p3"]
    assert list(df["year"]) == [2000, 2001, 2003]
    assert list(df["polarity"]) == [1, 1, 0]
    assert (df["interaction"] == "A->B").all()


def test_claim_features_evaluated_at_claim_year(three_year_corpus):
    """Per-claim rows must not see later claims."""
    df = claim_features(three_year_corpus)
    assert list(df["year_off"]) == [0.0, 1.0, 3.0]
    assert list(df["year_off2"]) == [0.0, 1.0, 9.0]
    # unbounded relaxed-current popularity counts claims up to the row year
    assert list(df["CP_rc_winf"]) == [1.0, 2.0, 3.0]
    assert list(df["CP_strict_winf"]) == [0.0, 1.0, 2.0]
    # bare publications have no entities, so entity weights stay missing
    assert df["NW_authors"].isna().all()


def test_claim_features_mcp_uses_row_year():
    rows = [("A", "B", "p1", 2000, 1), ("A", "B", "p2", 2001, 1),
            ("C", "D", "q1", 2001, 0)]
    df = claim_features(make_corpus(rows))
    # in 2000 A->B is the only live interaction: no strictly-smaller mean
    assert df.loc["A->B|p1", "MCP"] == 0.0
    # in 2001 C->D (mean 0) ranks below A->B (mean 1)
    assert df.loc["A->B|p2", "MCP"] == 0.5
    assert df.loc["C->D|q1", "MCP"] == 0.0


# ---------------------------------------------------------------------------
# Missing handling

def test_add_missing_indicators():
    df = pd.DataFrame({"a": [1.0, math.nan], "b": [1.0, 2.0]})
    out = add_missing_indicators(df)
    assert list(out.columns) == ["a", "b", "a_missing"]
    assert list(out["a_missing"]) == [0.0, 1.0]
    again = add_missing_indicators(out)
    assert list(again.columns) == list(out.columns)


def test_add_missing_indicators_skip():
    df = pd.DataFrame({"a": [math.nan], "b": [math.nan]})
    out = add_missing_indicators(df, skip=("a",))
    assert "a_missing" not in out.columns
    assert "b_missing" in out.columns


def test_impute_median_fit_on_train_only():
    train = pd.DataFrame({"x": [1.0, 3.0, math.nan]})
    test = pd.DataFrame({"x": [math.nan, 100.0]})
    tr, te = impute_median(train, test)
    assert tr[:, 0].tolist() == [1.0, 3.0, 2.0]
    # the test NaN takes the train median, not the test median
    assert te[:, 0].tolist() == [2.0, 100.0]


def test_impute_median_all_nan_column_zero_fill():
    train = pd.DataFrame({"x": [math.nan, math.nan]})
    test = pd.DataFrame({"x": [math.nan]})
    tr, te = impute_median(train, test)
    assert tr[:, 0].tolist() == [0.0, 0.0]
    assert te[:, 0].tolist() == [0.0]


# ---------------------------------------------------------------------------
# Assembled bundle

def test_assemble_bundle(small_synth):
    corpus, _, labels = small_synth
    tabs = assemble(corpus, labels, seed=0)
    assert isinstance(tabs, FeatureTables)
    assert len(tabs.interaction) == len(corpus.interactions)
    assert len(tabs.claim) == corpus.n_claims()
    assert tabs.labels == labels

    feat_cols = tabs.claim_feature_columns()
    assert not set(ID_COLUMNS) & set(feat_cols)
    # every feature column, including indicators, belongs to a family
    for col in feat_cols:
        assert col in tabs.families
    for col in tabs.interaction.columns:
        assert col in tabs.families
    for col, fam in tabs.families.items():
        if col.endswith("_missing"):
            assert fam == feature_family(col[:-8])


def test_assemble_indicator_alignment(small_synth):
    corpus, _, labels = small_synth
    tabs = assemble(corpus, labels, seed=0)
    claim_feats = tabs.claim[tabs.claim_feature_columns()]
    for col in claim_feats.columns:
        if col.endswith("_missing"):
            base = col[:-8]
            flagged = claim_feats[col] == 1.0
            assert (claim_feats[base].isna() == flagged).all()


def test_assemble_deterministic(small_synth):
    corpus, _, labels = small_synth
    a = assemble(corpus, labels, seed=0)
    b = assemble(corpus, labels, seed=0)
    pd.testing.assert_frame_equal(a.claim, b.claim)
    pd.testing.assert_frame_equal(a.interaction, b.interaction)


def test_assemble_label_classes(small_synth):
    corpus, _, labels = small_synth
    assert set(labels.values()) <= set(ClassLabel)
    assert set(labels) == set(corpus.interactions)
    assert all(isinstance(k, InteractionKey) for k in labels)
