"""Feature table assembly.

Two pandas tables feed the models:

* interaction-level, one row per interaction, computed as of the last
  corpus year (network position, claim-history shape, mean-claim rank);
* claim-level, one row per claim, computed as of the claim's own year so
  nothing later than the claim leaks into its features.

Missing values stay NaN and get a paired ``<name>_missing`` indicator;
median imputation happens per training fold, never globally.
"""

from __future__ import annotations

import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
import pandas as pd

from . import bipartite as bp
from . import claimfeat as cf
from . import netfeat as nf
from .corpus import ClaimCorpus, CorpusError, InteractionKey
from .partition import ClassLabel
from .rng import derive_seed

MODE_TOKENS = {"authors": "authors", "affiliations": "affs",
               "references": "refs"}
WINDOWS = bp.WINDOWS
VARIANTS = cf.VARIANTS


def _wtag(w: int | None) -> str:
    return bp.window_tag(w)


# ---------------------------------------------------------------------------
# Feature families (union of the interaction- and claim-model groupings)

def feature_family(name: str) -> str:
    base = name[:-8] if name.endswith("_missing") else name
    if base in ("MCP",):
        return "MCP"
    if base in ("AMMCP",):
        return "AMMCP"
    if base == "n_affiliations":
        return "affiliation count"
    if base == "n_authors":
        return "author count"
    if base == "JQ":
        return "JQ"
    if base == "AR":
        return "AR"
    if base == "dyear":
        return "dyear"
    if base in ("year_off", "year_off2"):
        return "time"
    if base in ("cit3", "mu", "sigma", "A", "log_mu", "log_sigma", "log_A",
                "fit_ok"):
        return "citations"
    if base.startswith("deg_"):
        return "degrees"
    prefix = base.split("_", 1)[0]
    if prefix in ("CP", "CD"):
        return "popularity (CP), density (CD)"
    if prefix in ("FLAT", "IPS", "IPP", "NW", "NHI", "CCN", "CSI", "CSA",
                  "CDEP", "BDEP"):
        return prefix
    raise CorpusError(f"feature {name!r} has no family")


def family_map(columns) -> dict[str, str]:
    return {c: feature_family(c) for c in columns}


# ---------------------------------------------------------------------------
# Shared per-corpus caches

class FeatureContext:
    """Lazy caches shared across feature rows of one corpus."""

    def __init__(self, corpus: ClaimCorpus, seed: int = 0,
                 convention: str = "2sigma"):
        self.corpus = corpus
        self.seed = seed
        self.convention = convention
        self._graphs: dict[int, tuple] = {}
        self._means: dict[int, tuple[list, dict]] = {}
        self._bip: dict[tuple, dict] = {}
        self._ledgers: dict[tuple, bp.WeightLedger | None] = {}
        self._cit: dict[str, dict] = {}
        self._years = {
            key: sorted(c.year for c in rec.claims)
            for key, rec in corpus.interactions.items()
        }
        self._polsum = {}
        for key, rec in corpus.interactions.items():
            pairs = sorted((c.year, c.polarity) for c in rec.claims)
            years = [y for y, _ in pairs]
            cum = [0]
            for _, pol in pairs:
                cum.append(cum[-1] + pol)
            self._polsum[key] = (years, cum)

    # -- gene graph ----------------------------------------------------
    def graph_bundle(self, t: int):
        if t not in self._graphs:
            g = nf.build_gene_graph(self.corpus, t)
            indeg: dict[str, int] = {u: 0 for u in g.nodes}
            outdeg: dict[str, int] = {u: 0 for u in g.nodes}
            for (u, v) in g.edges:
                outdeg[u] += 1
                indeg[v] += 1
            parts = {
                name: nf.detect_communities(
                    g, method, directed, weighted,
                    seed=derive_seed(self.seed, "net", name))
                for name, (method, directed, weighted)
                in nf.PARTITION_VARIANTS.items()
            } if g.nodes else {}
            self._graphs[t] = (g, indeg, outdeg, parts)
        return self._graphs[t]

    # -- mean claim values restricted to years <= t --------------------
    def means_at(self, t: int):
        if t not in self._means:
            means = {}
            for key, (years, cum) in self._polsum.items():
                n = bisect_right(years, t)
                if n > 0:
                    means[key] = cum[n] / n
            ordered = sorted(means.values())
            self._means[t] = (ordered, means)
        return self._means[t]

    def mcp_at(self, key: InteractionKey, t: int) -> tuple[float, float]:
        ordered, means = self.means_at(t)
        mcp = bisect_left(ordered, means[key]) / len(ordered)
        return mcp, abs(mcp - 0.5)

    # -- bipartite batches ----------------------------------------------
    def bip_bundle(self, key: InteractionKey, t: int, mode: str,
                   w: int | None) -> dict:
        ck = (key, t, mode, w)
        if ck not in self._bip:
            g = bp.build_bipartite(self.corpus, key, t, w, mode)
            ccn, csi, csa = bp.claim_communities(
                bp.jaccard_projection(g),
                seed=derive_seed(self.seed, "ccn", str(key), t, mode,
                                 _wtag(w)))
            self._bip[ck] = {
                "bdep": bp.batch_dependency(g, f=bp.DEFAULT_F[mode]),
                "cdep": {u: bp.claim_dependency(g, u) for u in g.left},
                "ccn": float(ccn),
                "csi": csi,
                "csa": csa,
            }
        return self._bip[ck]

    # -- cumulative entity weights ---------------------------------------
    def ledger(self, key: InteractionKey, t: int, mode: str):
        ck = (key, t, mode)
        if ck not in self._ledgers:
            try:
                self._ledgers[ck] = bp.entity_weights(self.corpus, key, t,
                                                      mode)
            except CorpusError:
                self._ledgers[ck] = None
        return self._ledgers[ck]

    # -- citation fits ----------------------------------------------------
    def citation(self, pub: str) -> dict:
        if pub not in self._cit:
            meta = self.corpus.publications[pub]
            self._cit[pub] = cf.citation_features(
                meta.citation_history, meta.year, self.convention)
        return self._cit[pub]


# ---------------------------------------------------------------------------
# Column orders

def _temporal_columns() -> list[str]:
    return [f"{stat}_{v}_w{_wtag(w)}"
            for stat in ("CP", "CD", "FLAT")
            for v in VARIANTS
            for w in WINDOWS]


def _interaction_block_columns() -> list[str]:
    cols = ["MCP", "AMMCP", "deg_src_in", "deg_src_out", "deg_tgt_in",
            "deg_tgt_out"]
    cols += [f"IPS_{v}" for v in nf.PARTITION_VARIANTS]
    cols += [f"IPP_{v}" for v in nf.PARTITION_VARIANTS]
    cols += ["dyear"]
    return cols


def _bipartite_columns() -> list[str]:
    return [f"{stat}_{MODE_TOKENS[m]}_w{_wtag(w)}"
            for stat in ("CDEP", "BDEP", "CCN", "CSI", "CSA")
            for m in bp.MODES
            for w in WINDOWS]


CITATION_COLUMNS = ["cit3", "mu", "sigma", "A", "log_mu", "log_sigma",
                    "log_A", "fit_ok"]
NW_NHI_COLUMNS = ["NW_authors", "NW_affs", "NHI_authors", "NHI_affs"]


def interaction_columns() -> list[str]:
    return _interaction_block_columns() + _temporal_columns()


def claim_columns() -> list[str]:
    return (_interaction_block_columns() + _temporal_columns()
            + ["year_off", "year_off2", "n_authors", "n_affiliations",
               "JQ", "AR"]
            + CITATION_COLUMNS + NW_NHI_COLUMNS + _bipartite_columns())


# ---------------------------------------------------------------------------
# Row builders

def _interaction_block(ctx: FeatureContext, key: InteractionKey, t: int,
                       mcp: tuple[float, float]) -> dict[str, float]:
    g, indeg, outdeg, parts = ctx.graph_bundle(t)
    row = {"MCP": mcp[0], "AMMCP": mcp[1]}
    row["deg_src_in"] = float(indeg.get(key.source, math.nan))
    row["deg_src_out"] = float(outdeg.get(key.source, math.nan))
    row["deg_tgt_in"] = float(indeg.get(key.target, math.nan))
    row["deg_tgt_out"] = float(outdeg.get(key.target, math.nan))
    for name, part in parts.items():
        try:
            row[f"IPS_{name}"] = nf.interaction_partition_size(part, key)
            row[f"IPP_{name}"] = float(
                nf.interaction_partition_position(part, key))
        except CorpusError:
            row[f"IPS_{name}"] = math.nan
            row[f"IPP_{name}"] = math.nan
    years, _ = ctx._polsum[key]
    hi = bisect_right(years, t)
    row["dyear"] = float(years[hi - 1] - years[0]) if hi else math.nan
    return row


def _temporal_block(ctx: FeatureContext, key: InteractionKey,
                    t: int) -> dict[str, float]:
    corpus = ctx.corpus
    row = {}
    for v in VARIANTS:
        for w in WINDOWS:
            tag = f"{v}_w{_wtag(w)}"
            row[f"CP_{tag}"] = float(cf.claim_popularity(corpus, key, t, w, v))
            row[f"CD_{tag}"] = cf.claim_density(corpus, key, t, w, v)
            row[f"FLAT_{tag}"] = cf.flatness(corpus, key, t, w, v)
    return row


def interaction_features(corpus: ClaimCorpus, seed: int = 0,
                         as_of: int | None = None,
                         ctx: FeatureContext | None = None) -> pd.DataFrame:
    """One row per interaction, evaluated at the last corpus year."""
    if ctx is None:
        ctx = FeatureContext(corpus, seed)
    t = corpus.max_year() if as_of is None else as_of
    rows = {}
    for key in sorted(corpus.interactions):
        row = _interaction_block(ctx, key, t, ctx.mcp_at(key, t))
        row.update(_temporal_block(ctx, key, t))
        rows[str(key)] = row
    df = pd.DataFrame.from_dict(rows, orient="index")
    return df.reindex(columns=interaction_columns())


def claim_row(ctx: FeatureContext, key: InteractionKey, claim) -> dict:
    """Feature dict for one claim, evaluated at the claim's own year."""
    corpus = ctx.corpus
    t = claim.year
    t0 = min(c.year for c in corpus.interactions[key].claims)
    row = _interaction_block(ctx, key, t, ctx.mcp_at(key, t))
    row.update(_temporal_block(ctx, key, t))
    row["year_off"] = float(t - t0)
    row["year_off2"] = float(t - t0) ** 2
    meta = corpus.publications[claim.publication]
    row["n_authors"] = float(len(set(meta.authors)))
    row["n_affiliations"] = float(len(set(meta.affiliations)))
    row["JQ"] = meta.journal_score if meta.journal_score is not None \
        else math.nan
    row["AR"] = float(meta.top_affiliation) \
        if meta.top_affiliation is not None else math.nan
    row.update(ctx.citation(claim.publication))
    row.update(_nw_nhi_block(ctx, key, t, claim.publication))
    row.update(_bipartite_block(ctx, key, t, claim.publication))
    return row


def claim_features(corpus: ClaimCorpus, seed: int = 0,
                   convention: str = "2sigma",
                   ctx: FeatureContext | None = None) -> pd.DataFrame:
    """One row per claim, evaluated at the claim's publication year.

    Index is "source->target|publication"; the identifying columns
    (interaction, publication, year, polarity) ride along for the
    evaluation layer and are not features.
    """
    if ctx is None:
        ctx = FeatureContext(corpus, seed, convention)
    rows = {}
    meta_rows = {}
    for key in sorted(corpus.interactions):
        rec = corpus.interactions[key]
        for claim in sorted(rec.claims, key=lambda c: (c.year, c.publication)):
            rid = f"{key}|{claim.publication}"
            rows[rid] = claim_row(ctx, key, claim)
            meta_rows[rid] = (str(key), claim.publication, claim.year,
                              claim.polarity)
    df = pd.DataFrame.from_dict(rows, orient="index")
    df = df.reindex(columns=claim_columns())
    ids = pd.DataFrame.from_dict(
        meta_rows, orient="index",
        columns=["interaction", "publication", "year", "polarity"])
    return pd.concat([ids, df], axis=1)


def _nw_nhi_block(ctx: FeatureContext, key: InteractionKey, t: int,
                  pub: str) -> dict[str, float]:
    row = {}
    meta = ctx.corpus.publications[pub]
    for mode in ("authors", "affiliations"):
        tok = MODE_TOKENS[mode]
        ledger = ctx.ledger(key, t, mode)
        ents = set(meta.authors if mode == "authors" else meta.affiliations)
        if ledger is None or ledger.K == 0 or not ents:
            row[f"NW_{tok}"] = math.nan
            row[f"NHI_{tok}"] = (math.nan if ledger is None or ledger.K == 0
                                 else bp.herfindahl(ledger)[1])
        else:
            row[f"NW_{tok}"] = sum(ledger.normalized.get(v, 0.0)
                                   for v in ents)
            row[f"NHI_{tok}"] = bp.herfindahl(ledger)[1]
    return row


def _bipartite_block(ctx: FeatureContext, key: InteractionKey, t: int,
                     pub: str) -> dict[str, float]:
    row = {}
    for mode in bp.MODES:
        tok = MODE_TOKENS[mode]
        for w in WINDOWS:
            b = ctx.bip_bundle(key, t, mode, w)
            tag = f"{tok}_w{_wtag(w)}"
            row[f"CDEP_{tag}"] = b["cdep"].get(pub, math.nan)
            row[f"BDEP_{tag}"] = b["bdep"]
            row[f"CCN_{tag}"] = b["ccn"]
            row[f"CSI_{tag}"] = float(b["csi"].get(pub, math.nan))
            row[f"CSA_{tag}"] = b["csa"].get(pub, math.nan)
    return row


# ---------------------------------------------------------------------------
# Missing handling and the assembled bundle

def add_missing_indicators(df: pd.DataFrame,
                           skip: tuple[str, ...] = ()) -> pd.DataFrame:
    """Append <name>_missing flags for every feature column with any NaN."""
    out = df.copy()
    for col in df.columns:
        if col in skip or col.endswith("_missing"):
            continue
        if df[col].isna().any():
            out[f"{col}_missing"] = df[col].isna().astype(float)
    return out


def impute_median(train: pd.DataFrame,
                  test: pd.DataFrame) -> tuple[np.ndarray, np.ndarray]:
    """Median imputation fit on the training rows only."""
    med = train.median(numeric_only=True)
    tr = train.fillna(med).fillna(0.0)
    te = test.fillna(med).fillna(0.0)
    return tr.to_numpy(dtype=float), te.to_numpy(dtype=float)


ID_COLUMNS = ("interaction", "publication", "year", "polarity")


@dataclass
class FeatureTables:
    interaction: pd.DataFrame
    claim: pd.DataFrame
    labels: dict[InteractionKey, ClassLabel]
    families: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.families:
            cols = set(self.interaction.columns) | {
                c for c in self.claim.columns if c not in ID_COLUMNS}
            self.families = family_map(sorted(cols))

    def claim_feature_columns(self) -> list[str]:
        return [c for c in self.claim.columns if c not in ID_COLUMNS]


def assemble(corpus: ClaimCorpus,
             labels: Mapping[InteractionKey, ClassLabel],
             seed: int = 0, convention: str = "2sigma") -> FeatureTables:
    """Build both tables with shared caches and missingness indicators."""
    ctx = FeatureContext(corpus, seed, convention)
    inter = add_missing_indicators(interaction_features(corpus, ctx=ctx))
    claim = claim_features(corpus, ctx=ctx)
    feats = add_missing_indicators(claim[ [c for c in claim.columns
                                           if c not in ID_COLUMNS] ])
    claim = pd.concat([claim[list(ID_COLUMNS)], feats], axis=1)
    return FeatureTables(interaction=inter, claim=claim, labels=dict(labels))
