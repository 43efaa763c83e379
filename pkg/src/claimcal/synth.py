"""Synthetic claim corpora with known ground truth, and a brute-force
feature oracle.

The generator mirrors the modeling assumptions the pipeline is built
around: each interaction gets a latent class, a mean claim probability
drawn from a class-specific beta law, a Zipf claim count, and an
experimental strength placed inside a class band. Signal knobs plant
learnable correlations between the class and network position, timing,
venue, and citations. Everything is a pure function of the seed.

brute_force_reference recomputes every network/temporal feature for a
small corpus slice by direct enumeration, sharing only the seeded
community detector with the main pipeline (an independent detector
would be a different algorithm, not an oracle for this one).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from . import communities as cm
from .corpus import (ClaimCorpus, ClaimRecord, CorpusError, InteractionKey,
                     InteractionRecord, PublicationMeta, save_corpus)
from .features import claim_columns
from .partition import ClassLabel
from .rng import derive_rng, derive_seed

CLASS_ORDER = (ClassLabel.NEGATIVE, ClassLabel.NEUTRAL, ClassLabel.POSITIVE)

DEFAULT_BANDS = {
    ClassLabel.NEGATIVE: (0.0, 0.25),
    ClassLabel.NEUTRAL: (0.35, 0.65),
    ClassLabel.POSITIVE: (0.75, 1.0),
}

# Point masses placed at band edges: (strength value, probability) per class.
# The edge ties give the threshold optimizer O(1) discontinuities to latch
# onto; a continuum alone only moves a few interactions per grid step, so its
# relative jumps drown in small-distance noise. The 0.0 and 1.0 anchors keep
# the scans' moving classes populated from the very first grid point.
DEFAULT_EDGE_TIES = {
    ClassLabel.NEGATIVE: ((0.0, 0.35),),
    ClassLabel.NEUTRAL: ((0.35, 0.25), (0.65, 0.25)),
    ClassLabel.POSITIVE: ((0.75, 0.5), (1.0, 0.3)),
}


@dataclass
class GenConfig:
    n_interactions: int = 400
    class_priors: tuple[float, float, float] = (0.25, 0.5, 0.25)
    beta_params: dict[ClassLabel, tuple[float, float]] | None = None
    signal_strength: float = 1.0
    kappa: float = 10.0
    strength_bands: dict[ClassLabel, tuple[float, float]] = field(
        default_factory=lambda: dict(DEFAULT_BANDS))
    edge_ties: dict[ClassLabel, tuple[tuple[float, float], ...]] = field(
        default_factory=lambda: dict(DEFAULT_EDGE_TIES))
    zipf_exponent: float = 2.0
    max_claims: int = 120
    author_pool: int = 400
    affiliation_pool: int = 80
    reference_pool: int = 2000
    reuse_probability: float = 0.35
    reuse_same_interaction: float = 0.45
    year_range: tuple[int, int] = (1985, 2010)
    n_journals: int = 200
    citation_horizon: int = 12
    seed: int = 0

    def __post_init__(self) -> None:
        if abs(sum(self.class_priors) - 1.0) > 1e-9:
            raise CorpusError("class priors must sum to 1")
        if min(self.class_priors) < 0:
            raise CorpusError("class priors must be nonnegative")
        for name in ("n_interactions", "max_claims", "author_pool",
                     "affiliation_pool", "reference_pool", "n_journals",
                     "citation_horizon"):
            if getattr(self, name) <= 0:
                raise CorpusError(f"{name} must be positive")
        if self.year_range[0] >= self.year_range[1]:
            raise CorpusError("year range must be increasing")
        for lo, hi in self.strength_bands.values():
            if not (0.0 <= lo < hi <= 1.0):
                raise CorpusError("strength bands must sit inside [0, 1]")
        for label, ties in self.edge_ties.items():
            lo, hi = self.strength_bands[label]
            if any(not (lo <= v <= hi) for v, _ in ties):
                raise CorpusError("edge ties must sit inside their band")
            if sum(w for _, w in ties) > 1.0 or any(w < 0 for _, w in ties):
                raise CorpusError("edge tie weights must be a sub-probability")
        if self.beta_params is None:
            s = min(max(self.signal_strength, 0.0), 1.0)
            mus = {
                ClassLabel.NEGATIVE: min(max(0.5 - 0.35 * s, 0.02), 0.98),
                ClassLabel.NEUTRAL: 0.5,
                ClassLabel.POSITIVE: min(max(0.5 + 0.35 * s, 0.02), 0.98),
            }
            self.beta_params = {c: (m * self.kappa, (1 - m) * self.kappa)
                                for c, m in mus.items()}


def _zipf_counts(rng: np.random.Generator, exponent: float, n: int,
                 cap: int) -> np.ndarray:
    ks = np.arange(1, cap + 1, dtype=float)
    p = ks ** -exponent
    p /= p.sum()
    return rng.choice(np.arange(1, cap + 1), size=n, p=p)


class _EntityPool:
    """Preferential-reuse id source for authors/affiliations/references."""

    def __init__(self, prefix: str, size: int, reuse: float,
                 rng: np.random.Generator):
        self.prefix = prefix
        self.size = size
        self.reuse = reuse
        self.rng = rng
        self.used: list[str] = []  # one entry per occurrence
        self.fresh = 0

    def draw(self, same_pool: list[str], p_same: float) -> str:
        r = self.rng.random()
        if same_pool and r < p_same:
            return same_pool[int(self.rng.integers(len(same_pool)))]
        if self.used and r < p_same + self.reuse:
            return self.used[int(self.rng.integers(len(self.used)))]
        if self.fresh < self.size:
            name = f"{self.prefix}{self.fresh}"
            self.fresh += 1
        else:  # pool exhausted: forced uniform reuse
            name = f"{self.prefix}{int(self.rng.integers(self.size))}"
        return name

    def record(self, names: list[str]) -> None:
        self.used.extend(names)


def _draw_entities(pool: _EntityPool, k: int, same_pool: list[str],
                   p_same: float) -> list[str]:
    out: dict[str, None] = {}
    for _ in range(k):
        out[pool.draw(same_pool, p_same)] = None
    names = list(out)
    pool.record(names)
    return names


def _lognormal_rate(dt: int, amp: float) -> float:
    sigma, mu = 0.6, 1.0
    return amp / (dt * sigma * math.sqrt(2 * math.pi)) * math.exp(
        -((math.log(dt) - mu) ** 2) / (2 * sigma ** 2))


def generate_corpus(cfg: GenConfig) -> tuple[
        ClaimCorpus, dict[InteractionKey, float],
        dict[InteractionKey, ClassLabel]]:
    """Draw a full corpus; returns (corpus, strengths, true labels)."""
    rng = derive_rng(cfg.seed, "corpus")
    s = min(max(cfg.signal_strength, 0.0), 1.0)
    y_lo, y_hi = cfg.year_range

    hubs = [f"HUB{i}" for i in range(max(3, cfg.n_interactions // 80))]
    mids = [f"MID{i}" for i in range(max(6, cfg.n_interactions // 6))]
    n_cold = 0

    pools = {
        "authors": _EntityPool("A", cfg.author_pool,
                               cfg.reuse_probability, rng),
        "affiliations": _EntityPool("U", cfg.affiliation_pool,
                                    cfg.reuse_probability, rng),
        "references": _EntityPool("R", cfg.reference_pool,
                                  cfg.reuse_probability, rng),
    }
    ranked_affs = {f"U{i}"
                   for i in range(math.ceil(0.2 * cfg.affiliation_pool))}
    journal_scores = np.sort(rng.lognormal(1.0, 0.75, cfg.n_journals))[::-1]

    classes = rng.choice(3, size=cfg.n_interactions, p=list(cfg.class_priors))
    counts = _zipf_counts(rng, cfg.zipf_exponent, cfg.n_interactions,
                          cfg.max_claims)

    interactions: dict[InteractionKey, InteractionRecord] = {}
    publications: dict[str, PublicationMeta] = {}
    strengths: dict[InteractionKey, float] = {}
    labels: dict[InteractionKey, ClassLabel] = {}
    pub_counter = 0

    for i in range(cfg.n_interactions):
        label = CLASS_ORDER[int(classes[i])]
        a, b = cfg.beta_params[label]
        mu = float(rng.beta(a, b))
        lo, hi = cfg.strength_bands[label]
        u = float(rng.random())
        strength = None
        for value, weight in cfg.edge_ties.get(label, ()):
            if u < weight:
                strength = value
                break
            u -= weight
        if strength is None:
            strength = float(rng.uniform(lo, hi))

        # endpoint genes: positives attach to hubs, negatives to fresh
        # cold genes, neutrals to the mid pool; blend controlled by s
        for _ in range(500):
            use_pool = rng.random() < s
            if label is ClassLabel.POSITIVE and use_pool:
                src = hubs[int(rng.integers(len(hubs)))]
            elif label is ClassLabel.NEGATIVE and use_pool:
                src = f"COLD{n_cold}"
                n_cold += 1
            else:
                src = mids[int(rng.integers(len(mids)))]
            tgt = mids[int(rng.integers(len(mids)))]
            if tgt == src:
                continue
            key = InteractionKey(src, tgt)
            if key not in interactions:
                break
        else:
            key = InteractionKey(f"COLD{n_cold}", f"COLD{n_cold + 1}")
            n_cold += 2

        n_claims = int(counts[i])
        year0 = int(rng.integers(y_lo, y_hi - 2))
        bursty = label is not ClassLabel.NEUTRAL and rng.random() < s
        claims = []
        prev_pubs: dict[str, list[str]] = {m: [] for m in pools}
        for _ in range(n_claims):
            if bursty:
                year = min(year0 + int(rng.poisson(1.2)), y_hi)
            else:
                year = int(rng.integers(year0, y_hi + 1))
            polarity = int(rng.random() < mu)
            if label is ClassLabel.POSITIVE:
                correct: bool | None = polarity == 1
            elif label is ClassLabel.NEGATIVE:
                correct = polarity == 0
            else:
                correct = None

            pub_counter += 1
            pid = f"p{pub_counter:06d}"
            authors = _draw_entities(
                pools["authors"], 1 + min(int(rng.poisson(1.5)), 5),
                prev_pubs["authors"], cfg.reuse_same_interaction)
            affs = _draw_entities(
                pools["affiliations"], 1 + min(int(rng.poisson(0.8)), 3),
                prev_pubs["affiliations"], cfg.reuse_same_interaction)
            if correct is True and rng.random() < 0.4 * s and ranked_affs:
                extra = f"U{int(rng.integers(len(ranked_affs)))}"
                if extra not in affs:
                    affs = affs + [extra]
                    pools["affiliations"].record([extra])
            refs = _draw_entities(
                pools["references"], 5 + min(int(rng.poisson(8.0)), 25),
                prev_pubs["references"], cfg.reuse_same_interaction)
            for m, ents in (("authors", authors), ("affiliations", affs),
                            ("references", refs)):
                prev_pubs[m].extend(ents)

            if correct is True:
                j_frac = rng.beta(1.0, 1.0 + 2.0 * s)
            elif correct is False:
                j_frac = rng.beta(1.0 + 2.0 * s, 1.0)
            else:
                j_frac = rng.random()
            j_idx = min(int(j_frac * cfg.n_journals), cfg.n_journals - 1)
            j_score = (float(journal_scores[j_idx])
                       if rng.random() > 0.05 else None)

            amp = float(rng.lognormal(1.2, 0.8))
            if correct is True:
                amp *= 1.0 + 2.0 * s
            history = {}
            for dt in range(1, cfg.citation_horizon + 1):
                cnt = int(rng.poisson(_lognormal_rate(dt, amp)))
                if cnt > 0:
                    history[year + dt - 1] = cnt

            publications[pid] = PublicationMeta(
                id=pid, year=year, authors=authors, affiliations=affs,
                references=refs,
                journal=f"J{j_idx}", journal_score=j_score,
                top_affiliation=bool(set(affs) & ranked_affs),
                citation_history=history)
            claims.append(ClaimRecord(interaction=key, publication=pid,
                                      year=year, polarity=polarity))

        interactions[key] = InteractionRecord(key=key, claims=tuple(claims),
                                              strength=strength)
        strengths[key] = strength
        labels[key] = label

    corpus = ClaimCorpus(interactions=interactions, publications=publications,
                         ingest_report={"generator_seed": cfg.seed})
    return corpus, strengths, labels


def save_synth(outdir: str | Path, corpus: ClaimCorpus,
               strengths: dict[InteractionKey, float],
               labels: dict[InteractionKey, ClassLabel]) -> None:
    """Write claims.tsv / publications.jsonl / strengths.tsv / truth.tsv."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    save_corpus(corpus, outdir / "claims.tsv", outdir / "publications.jsonl")
    with open(outdir / "strengths.tsv", "w", encoding="utf-8") as fh:
        fh.write("source\ttarget\tstrength\n")
        for key in sorted(strengths):
            fh.write(f"{key.source}\t{key.target}\t{strengths[key]!r}\n")
    with open(outdir / "truth.tsv", "w", encoding="utf-8") as fh:
        fh.write("source\ttarget\tclass\tstrength\tn_claims\n")
        for key in sorted(labels):
            n = len(corpus.interactions[key].claims)
            fh.write(f"{key.source}\t{key.target}\t{labels[key].value}"
                     f"\t{strengths[key]!r}\t{n}\n")


# ---------------------------------------------------------------------------
# Brute-force oracle

_BRUTE_WINDOWS = (1, 3, 5, None)
_BRUTE_MODES = ("authors", "affiliations", "references")
_MODE_TOKEN = {"authors": "authors", "affiliations": "affs",
               "references": "refs"}
_BRUTE_F = {"authors": 0.5, "affiliations": 0.5, "references": 0.2}
_VARIANTS = {
    "im_dir_unw": ("infomap", True, False),
    "im_dir_w": ("infomap", True, True),
    "im_und_unw": ("infomap", False, False),
    "im_und_w": ("infomap", False, True),
    "ml_und_unw": ("labelprop", False, False),
    "ml_und_w": ("labelprop", False, True),
}


def _wtag(w):
    return "inf" if w is None else str(w)


def _all_claims(corpus):
    for key in sorted(corpus.interactions):
        for c in sorted(corpus.interactions[key].claims,
                        key=lambda c: (c.year, c.publication)):
            yield key, c


def _in_window(y: int, t: int, w, strict: bool) -> bool:
    hi_ok = y < t if strict else y <= t
    lo_ok = True if w is None else y > t - w
    return hi_ok and lo_ok


def _pub_entities(meta: PublicationMeta, mode: str) -> set[str]:
    return set(getattr(meta, mode))


def _brute_interaction_block(corpus, key, t, seed):
    row = {}
    # mean claim percentiles over interactions alive by t
    means = {}
    for k2, rec2 in corpus.interactions.items():
        vals = [c.polarity for c in rec2.claims if c.year <= t]
        if vals:
            means[k2] = sum(vals) / len(vals)
    mu = means[key]
    row["MCP"] = sum(1 for v in means.values() if v < mu) / len(means)
    row["AMMCP"] = abs(row["MCP"] - 0.5)

    # distinct-neighbor degrees on the cumulative claim graph
    edges = set()
    for k2, rec2 in corpus.interactions.items():
        if any(c.year <= t for c in rec2.claims):
            edges.add((k2.source, k2.target))
    for tag, gene in (("src", key.source), ("tgt", key.target)):
        row[f"deg_{tag}_in"] = float(sum(1 for (u, v) in edges if v == gene))
        row[f"deg_{tag}_out"] = float(sum(1 for (u, v) in edges if u == gene))

    # community variants on the same graph
    weights = {}
    for k2, rec2 in corpus.interactions.items():
        n = sum(1 for c in rec2.claims if c.year <= t)
        if n:
            weights[(k2.source, k2.target)] = n
    nodes = sorted({u for e in edges for u in e})
    for name, (method, directed, weighted) in _VARIANTS.items():
        adj = {u: {} for u in nodes}
        for (u, v), n in weights.items():
            adj[u][v] = float(n) if weighted else 1.0
        cseed = derive_seed(seed, "net", name)
        if method == "infomap":
            assignment = cm.detect_infomap(adj, directed=directed, seed=cseed)
        else:
            assignment = cm.detect_labelprop(adj, seed=cseed)
        sizes = {}
        for c in assignment.values():
            sizes[c] = sizes.get(c, 0) + 1
        cs, ct = assignment[key.source], assignment[key.target]
        row[f"IPS_{name}"] = math.sqrt(sizes[cs] * sizes[ct])
        row[f"IPP_{name}"] = float(cs == ct)

    years = [c.year for c in corpus.interactions[key].claims if c.year <= t]
    row["dyear"] = float(max(years) - min(years))
    return row


def _brute_temporal_block(corpus, key, t):
    row = {}
    claims = corpus.interactions[key].claims
    t0 = min(c.year for c in claims)
    for variant in ("strict", "rc"):
        strict = variant == "strict"
        for w in _BRUTE_WINDOWS:
            tag = f"{variant}_w{_wtag(w)}"
            cp = sum(1 for c in claims if _in_window(c.year, t, w, strict))
            row[f"CP_{tag}"] = float(cp)
            row[f"CD_{tag}"] = cp / (t - t0 + 1)
            years = [c.year for c in claims
                     if (c.year < t if strict else c.year <= t)]
            if not years:
                row[f"FLAT_{tag}"] = math.nan
                continue
            lo = t0 if w is None else t0 - w
            span = t - lo
            if span <= 0:
                row[f"FLAT_{tag}"] = 1.0
                continue
            us = sorted((y - lo) / span for y in years)
            n = len(us)
            d = 0.0
            for i, x in enumerate(us, start=1):
                d = max(d, i / n - x, x - (i - 1) / n)
            row[f"FLAT_{tag}"] = d
    return row


def _brute_nw_nhi(corpus, key, t, pub):
    row = {}
    claims = corpus.interactions[key].claims
    for mode in ("authors", "affiliations"):
        tok = _MODE_TOKEN[mode]
        weights: dict[str, float] = {}
        any_prior = False
        for c in claims:
            if c.year >= t:
                continue
            any_prior = True
            ents = _pub_entities(corpus.publications[c.publication], mode)
            for e in ents:
                weights[e] = weights.get(e, 0.0) + 1.0 / len(ents)
        if not any_prior or not weights:
            row[f"NW_{tok}"] = math.nan
            row[f"NHI_{tok}"] = math.nan
            continue
        total = sum(weights.values())
        norm = {e: v / total for e, v in weights.items()}
        mine = _pub_entities(corpus.publications[pub], mode)
        row[f"NW_{tok}"] = (sum(norm.get(e, 0.0) for e in mine)
                            if mine else math.nan)
        k = len(norm)
        hi = sum(v * v for v in norm.values())
        row[f"NHI_{tok}"] = 1.0 if k == 1 else (hi - 1 / k) / (1 - 1 / k)
    return row


def _brute_bipartite(corpus, key, t, pub, seed):
    row = {}
    claims = corpus.interactions[key].claims
    for mode in _BRUTE_MODES:
        tok = _MODE_TOKEN[mode]
        for w in _BRUTE_WINDOWS:
            tag = f"{tok}_w{_wtag(w)}"
            us = sorted({c.publication for c in claims
                         if _in_window(c.year, t, w, strict=False)})
            ents = {u: _pub_entities(corpus.publications[u], mode)
                    for u in us}
            vs = sorted(set().union(*ents.values())) if ents else []
            dv = {v: sum(1 for u in us if v in ents[u]) for v in vs}

            if not vs:
                row[f"BDEP_{tag}"] = math.nan
            else:
                m = math.ceil(_BRUTE_F[mode] * len(vs))
                top = sorted(dv.values(), reverse=True)[:m]
                lam = 2.0
                row[f"BDEP_{tag}"] = (
                    sum(d ** lam for d in top)
                    / (_BRUTE_F[mode] * len(vs)) / len(us) ** lam)

            du = len(ents.get(pub, ()))
            if len(us) < 2 or du == 0:
                row[f"CDEP_{tag}"] = math.nan
            else:
                row[f"CDEP_{tag}"] = sum(
                    (dv[v] - 1) for v in ents[pub]) / (du * (len(us) - 1))

            adj = {u: {} for u in us}
            for i, a in enumerate(us):
                for b in us[i + 1:]:
                    inter = ents[a] & ents[b]
                    if inter:
                        jac = len(inter) / len(ents[a] | ents[b])
                        adj[a][b] = jac
                        adj[b][a] = jac
            cseed = derive_seed(seed, "ccn", str(key), t, mode, _wtag(w))
            assignment = cm.detect_infomap(adj, directed=False, seed=cseed)
            sizes: dict[int, int] = {}
            for c in assignment.values():
                sizes[c] = sizes.get(c, 0) + 1
            row[f"CCN_{tag}"] = float(len(sizes))
            row[f"CSI_{tag}"] = float(sizes[assignment[pub]])
            row[f"CSA_{tag}"] = sizes[assignment[pub]] / len(us)
    return row


def brute_force_reference(corpus: ClaimCorpus, seed: int = 0) -> pd.DataFrame:
    """Direct-enumeration recomputation of the claim feature table.

    Covers every network/temporal feature; citation-fit columns and raw
    publication metadata are out of scope (they are either direct field
    copies or a separate numeric optimization with its own oracle).
    """
    n = corpus.n_claims()
    if n > 200:
        raise CorpusError(f"oracle slice limited to 200 claims, got {n}")
    rows = {}
    for key, claim in _all_claims(corpus):
        t = claim.year
        t0 = min(c.year for c in corpus.interactions[key].claims)
        row = _brute_interaction_block(corpus, key, t, seed)
        row.update(_brute_temporal_block(corpus, key, t))
        row["year_off"] = float(t - t0)
        row["year_off2"] = float(t - t0) ** 2
        row.update(_brute_nw_nhi(corpus, key, t, claim.publication))
        row.update(_brute_bipartite(corpus, key, t, claim.publication, seed))
        rows[f"{key}|{claim.publication}"] = row
    cols = [c for c in claim_columns()
            if c in next(iter(rows.values()))] if rows else []
    return pd.DataFrame.from_dict(rows, orient="index").reindex(columns=cols)
