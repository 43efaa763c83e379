"""Interaction-level features from the directed gene graph.

The gene graph at time t has an edge per claimed interaction, weighted by
the number of distinct publications claiming it up to and including t
(cumulative; nothing is forgotten). Degrees, community partitions in six
variants, and the partition size/position features live here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

from .communities import community_sizes, detect_infomap, detect_labelprop
from .corpus import ClaimCorpus, CorpusError, InteractionKey


@dataclass
class GeneGraph:
    nodes: set[str]
    edges: dict[tuple[str, str], int]
    as_of: int

    def __post_init__(self) -> None:
        for (u, v), w in self.edges.items():
            if w < 1:
                raise CorpusError(f"edge ({u},{v}) has weight {w} < 1")
            if u not in self.nodes or v not in self.nodes:
                raise CorpusError(f"edge ({u},{v}) references missing node")


def build_gene_graph(corpus: ClaimCorpus, t: int) -> GeneGraph:
    """Cumulative claim graph: weight = publications claiming the edge by t."""
    edges: dict[tuple[str, str], int] = {}
    nodes: set[str] = set()
    for key, rec in corpus.interactions.items():
        w = sum(1 for c in rec.claims if c.year <= t)
        if w > 0:
            edges[(key.source, key.target)] = w
            nodes.add(key.source)
            nodes.add(key.target)
    return GeneGraph(nodes=nodes, edges=edges, as_of=t)


def degrees(g: GeneGraph, gene: str) -> tuple[int, int]:
    """(in, out) counts of distinct neighbors; a self-loop adds 1 to both."""
    if gene not in g.nodes:
        raise CorpusError(f"gene {gene!r} not in graph as of {g.as_of}")
    indeg = sum(1 for (u, v) in g.edges if v == gene)
    outdeg = sum(1 for (u, v) in g.edges if u == gene)
    return indeg, outdeg


# Variant id -> (method, directed, weighted). Label propagation is defined
# on undirected graphs only, so it contributes just two variants.
PARTITION_VARIANTS: dict[str, tuple[str, bool, bool]] = {
    "im_dir_unw": ("infomap", True, False),
    "im_dir_w": ("infomap", True, True),
    "im_und_unw": ("infomap", False, False),
    "im_und_w": ("infomap", False, True),
    "ml_und_unw": ("labelprop", False, False),
    "ml_und_w": ("labelprop", False, True),
}


@dataclass
class CommunityPartition:
    assignment: dict[str, int]
    method: str
    directed: bool
    weighted: bool
    sizes: dict[int, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.sizes:
            self.sizes = community_sizes(self.assignment)


def _adjacency(g: GeneGraph, weighted: bool) -> dict[str, dict[str, float]]:
    # sorted: downstream flow accumulation is ulp-sensitive to edge order,
    # so adjacency construction must not follow set iteration order
    adj: dict[str, dict[str, float]] = {u: {} for u in sorted(g.nodes)}
    for (u, v), w in sorted(g.edges.items()):
        adj[u][v] = float(w) if weighted else 1.0
    return adj


def detect_communities(g: GeneGraph, method: str, directed: bool,
                       weighted: bool, seed: int) -> CommunityPartition:
    if not g.nodes:
        raise CorpusError("cannot partition an empty graph")
    adj = _adjacency(g, weighted)
    if method == "infomap":
        assignment = detect_infomap(adj, directed=directed, seed=seed)
    elif method == "labelprop":
        if directed:
            raise CorpusError("label propagation is undirected only")
        assignment = detect_labelprop(adj, seed=seed)
    else:
        raise CorpusError(f"unknown community method {method!r}")
    return CommunityPartition(assignment=assignment, method=method,
                              directed=directed, weighted=weighted)


def partition_variants(g: GeneGraph, seed: int) -> dict[str, CommunityPartition]:
    out = {}
    for name, (method, directed, weighted) in PARTITION_VARIANTS.items():
        out[name] = detect_communities(g, method, directed, weighted,
                                       seed=hash_free_seed(seed, name))
    return out


def hash_free_seed(seed: int, name: str) -> int:
    # variant index keeps streams distinct without hashing strings twice
    return seed * 131 + sorted(PARTITION_VARIANTS).index(name)


def interaction_partition_size(p: CommunityPartition,
                               alpha: InteractionKey) -> float:
    """Geometric mean of the two endpoint community sizes."""
    try:
        cs = p.assignment[alpha.source]
        ct = p.assignment[alpha.target]
    except KeyError as exc:
        raise CorpusError(f"gene {exc.args[0]!r} unassigned in partition") from None
    return math.sqrt(p.sizes[cs] * p.sizes[ct])


def interaction_partition_position(p: CommunityPartition,
                                   alpha: InteractionKey) -> bool:
    """True iff both endpoint genes share a community."""
    try:
        return p.assignment[alpha.source] == p.assignment[alpha.target]
    except KeyError as exc:
        raise CorpusError(f"gene {exc.args[0]!r} unassigned in partition") from None
