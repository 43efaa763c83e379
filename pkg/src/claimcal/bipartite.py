"""Publication-entity bipartite machinery.

For a batch of publications claiming one interaction inside a time window,
build the publication-{author|affiliation|reference} bipartite graph and
derive: batch and per-claim dependency indices, normalized Herfindahl
weights, and community features of the Jaccard projection onto
publications. Missing values are NaN, never zero.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from itertools import combinations

from .communities import community_sizes, detect_infomap
from .corpus import ClaimCorpus, CorpusError, InteractionKey, batch

MODES = ("authors", "affiliations", "references")
DEFAULT_LAMBDA = 2.0
DEFAULT_F = {"authors": 0.5, "affiliations": 0.5, "references": 0.2}
WINDOWS: tuple[int | None, ...] = (1, 3, 5, None)  # None = unbounded


def window_tag(w: int | None) -> str:
    return "inf" if w is None else str(w)


@dataclass
class BipartiteGraph:
    left: list[str]
    right: list[str]
    edges: set[tuple[str, str]]
    mode: str
    u_nbrs: dict[str, set[str]] = field(default_factory=dict)
    v_deg: dict[str, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.u_nbrs:
            self.u_nbrs = {u: set() for u in self.left}
            self.v_deg = {v: 0 for v in self.right}
            for (u, v) in self.edges:
                if u not in self.u_nbrs or v not in self.v_deg:
                    raise CorpusError(f"edge ({u},{v}) outside vertex sets")
                self.u_nbrs[u].add(v)
                self.v_deg[v] += 1


def _entities(corpus: ClaimCorpus, pub: str, mode: str) -> set[str]:
    meta = corpus.publications[pub]
    if mode == "authors":
        return set(meta.authors)
    if mode == "affiliations":
        return set(meta.affiliations)
    if mode == "references":
        return set(meta.references)
    raise CorpusError(f"unknown bipartite mode {mode!r}")


def build_bipartite(corpus: ClaimCorpus, alpha: InteractionKey, t: int,
                    k: int | None, mode: str) -> BipartiteGraph:
    """Graph over publications claiming ``alpha`` with year in (t-k, t].

    Publications with no listed entities stay in U with no edges; they
    still count toward |U| in the dependency denominators.
    """
    claims = batch(corpus, alpha, t, k)
    pubs = sorted({c.publication for c in claims})
    if not pubs:
        raise CorpusError(
            f"empty batch for {alpha} at t={t}, window={window_tag(k)}")
    edges: set[tuple[str, str]] = set()
    right: set[str] = set()
    for u in pubs:
        for v in _entities(corpus, u, mode):
            edges.add((u, v))
            right.add(v)
    return BipartiteGraph(left=pubs, right=sorted(right), edges=edges,
                          mode=mode)


@dataclass
class WeightLedger:
    weights: dict[str, float]
    normalized: dict[str, float]
    K: int
    n_missing: int = 0


def entity_weights(corpus: ClaimCorpus, alpha: InteractionKey, t: int,
                   mode: str = "affiliations") -> WeightLedger:
    """Cumulative per-entity mass from claims strictly before t.

    Each publication splits unit mass equally over its unique entities;
    publications listing none contribute nothing and are counted missing.
    """
    rec = corpus.interactions.get(alpha)
    if rec is None:
        raise CorpusError(f"unknown interaction {alpha}")
    pubs = sorted({c.publication for c in rec.claims if c.year < t})
    if not pubs:
        raise CorpusError(f"no claims on {alpha} strictly before {t}")
    weights: dict[str, float] = defaultdict(float)
    n_missing = 0
    for u in pubs:
        ents = _entities(corpus, u, mode)
        if not ents:
            n_missing += 1
            continue
        share = 1.0 / len(ents)
        for v in sorted(ents):  # fixed key order keeps later sums exact
            weights[v] += share
    total = sum(weights.values())
    normalized = {v: w / total for v, w in weights.items()} if total > 0 else {}
    return WeightLedger(weights=dict(weights), normalized=normalized,
                        K=len(weights), n_missing=n_missing)


def herfindahl(ledger: WeightLedger) -> tuple[float, float]:
    """(hi, nhi); a single entity is maximal concentration by convention."""
    if ledger.K < 1:
        raise CorpusError("weight ledger has no entities")
    hi = sum(f * f for f in ledger.normalized.values())
    if ledger.K == 1:
        return hi, 1.0
    nhi = (hi - 1.0 / ledger.K) / (1.0 - 1.0 / ledger.K)
    return hi, nhi


def batch_dependency(g: BipartiteGraph, f: float = 0.5,
                     lam: float = DEFAULT_LAMBDA) -> float:
    """Relative lambda-th moment of the top-f entity degrees.

    NaN when there are no entities at all (missing, not zero).
    """
    if not 0.0 < f <= 1.0:
        raise CorpusError(f"f must lie in (0, 1], got {f}")
    if lam < 1.0:
        raise CorpusError(f"lambda must be >= 1, got {lam}")
    n_u = len(g.left)
    if n_u < 1:
        raise CorpusError("batch has no publications")
    n_v = len(g.right)
    if n_v == 0:
        return math.nan
    degs = sorted(g.v_deg.values(), reverse=True)
    top = degs[: math.ceil(f * n_v)]
    moment = sum(d ** lam for d in top) / (f * n_v)
    return moment / n_u ** lam


def claim_dependency(g: BipartiteGraph, u: str) -> float:
    """How much publication u's entities recur in the rest of the batch."""
    if u not in g.u_nbrs:
        raise CorpusError(f"publication {u!r} not in batch")
    n_u = len(g.left)
    d_u = len(g.u_nbrs[u])
    if n_u < 2 or d_u == 0:
        return math.nan
    shared = sum(g.v_deg[v] - 1 for v in g.u_nbrs[u])
    return shared / (d_u * (n_u - 1))


def jaccard_projection(g: BipartiteGraph) -> dict[str, dict[str, float]]:
    """Project onto publications with Jaccard overlap weights."""
    proj: dict[str, dict[str, float]] = {u: {} for u in g.left}
    by_entity: dict[str, list[str]] = defaultdict(list)
    for u in g.left:
        for v in g.u_nbrs[u]:
            by_entity[v].append(u)
    pairs: set[tuple[str, str]] = set()
    for pubs in by_entity.values():
        pairs.update(combinations(sorted(pubs), 2))
    # sorted: neighbor insertion order must not depend on the hash seed,
    # downstream flow sums are order-sensitive in the last ulp
    for a, b in sorted(pairs):
        inter = len(g.u_nbrs[a] & g.u_nbrs[b])
        union = len(g.u_nbrs[a] | g.u_nbrs[b])
        if inter:
            w = inter / union
            proj[a][b] = w
            proj[b][a] = w
    return proj


def claim_communities(
    projected: dict[str, dict[str, float]], seed: int = 0
) -> tuple[int, dict[str, int], dict[str, float]]:
    """(community count, per-publication community size, size fraction)."""
    if not projected:
        raise CorpusError("empty projection")
    assignment = detect_infomap(projected, directed=False, seed=seed)
    sizes = community_sizes(assignment)
    n_u = len(projected)
    csi = {u: sizes[assignment[u]] for u in projected}
    csa = {u: csi[u] / n_u for u in projected}
    return len(sizes), csi, csa
