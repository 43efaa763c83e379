"""Community detection on weighted graphs.

Two detectors over plain adjacency dicts (node -> {neighbor: weight}):

* a greedy two-level map-equation optimizer (seeded node-move passes plus
  module merges, run to a local optimum), and
* asynchronous label propagation with seeded tie-breaking.

Directed flow uses PageRank with recorded teleportation; undirected flow
is degree-proportional with no teleportation. Self-loops carry no
community information and are dropped up front.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Hashable, Mapping

import numpy as np

from .rng import derive_rng

Adjacency = Mapping[Hashable, Mapping[Hashable, float]]

TELEPORT = 0.15
_PR_TOL = 1e-14
_PR_MAX_ITER = 10_000
_MIN_GAIN = 1e-12  # improvement below this is float noise, not structure


def plogp(x: float) -> float:
    return x * math.log2(x) if x > 0.0 else 0.0


def _collect_nodes(adj: Adjacency) -> list:
    nodes = set(adj)
    for nbrs in adj.values():
        nodes.update(nbrs)
    return sorted(nodes)


def symmetrize(adj: Adjacency) -> dict:
    """Undirected view: weights of both directions summed.

    Output is key-sorted at both levels so downstream float accumulation
    over neighbors never depends on the caller's dict insertion order.
    """
    out: dict = defaultdict(lambda: defaultdict(float))
    for u, nbrs in adj.items():
        out.setdefault(u, defaultdict(float))
        for v, w in nbrs.items():
            if u == v:
                continue
            out[u][v] += w
            out[v][u] += w
    return {u: {v: out[u][v] for v in sorted(out[u])} for u in sorted(out)}


@dataclass
class FlowGraph:
    """Node visit rates and per-edge flows for the map equation."""

    nodes: list
    index: dict
    p: np.ndarray
    dangling: np.ndarray
    out_flow: list[dict[int, float]]
    in_flow: list[dict[int, float]]
    teleport: float

    @property
    def n(self) -> int:
        return len(self.nodes)


def _pagerank(n: int, edges: list[tuple[int, int, float]],
              teleport: float) -> np.ndarray:
    out_strength = np.zeros(n)
    for i, _, w in edges:
        out_strength[i] += w
    src = np.array([e[0] for e in edges], dtype=np.intp)
    dst = np.array([e[1] for e in edges], dtype=np.intp)
    pij = np.array([w / out_strength[i] for i, _, w in edges])
    dangling = out_strength == 0.0
    x = np.full(n, 1.0 / n)
    for _ in range(_PR_MAX_ITER):
        flow = np.zeros(n)
        np.add.at(flow, dst, x[src] * pij)
        d_mass = x[dangling].sum()
        x_new = teleport / n + (1.0 - teleport) * (flow + d_mass / n)
        if np.abs(x_new - x).sum() < _PR_TOL:
            return x_new
        x = x_new
    return x


def build_flow_graph(adj: Adjacency, directed: bool,
                     teleport: float = TELEPORT) -> FlowGraph:
    nodes = _collect_nodes(adj)
    index = {u: i for i, u in enumerate(nodes)}
    n = len(nodes)
    edges = []
    for u, nbrs in adj.items():
        for v, w in nbrs.items():
            if u == v or w <= 0:
                continue
            edges.append((index[u], index[v], float(w)))
    # canonical edge order: flow sums are ulp-sensitive to accumulation
    # order, and callers assemble adjacency dicts in varying orders
    edges.sort(key=lambda e: (e[0], e[1]))

    out_flow: list[dict[int, float]] = [dict() for _ in range(n)]
    in_flow: list[dict[int, float]] = [dict() for _ in range(n)]
    if directed:
        p = _pagerank(n, edges, teleport)
        out_strength = np.zeros(n)
        for i, _, w in edges:
            out_strength[i] += w
        dangling = out_strength == 0.0
        for i, j, w in edges:
            phi = (1.0 - teleport) * p[i] * w / out_strength[i]
            out_flow[i][j] = out_flow[i].get(j, 0.0) + phi
            in_flow[j][i] = in_flow[j].get(i, 0.0) + phi
        tel = teleport
    else:
        total = sum(w for _, _, w in edges)  # both directions counted = 2W
        p = np.zeros(n)
        if total > 0:
            for i, j, w in edges:
                phi = w / total
                p[i] += phi
                out_flow[i][j] = out_flow[i].get(j, 0.0) + phi
                in_flow[j][i] = in_flow[j].get(i, 0.0) + phi
        dangling = np.zeros(n, dtype=bool)
        tel = 0.0
    return FlowGraph(nodes=nodes, index=index, p=p, dangling=dangling,
                     out_flow=out_flow, in_flow=in_flow, teleport=tel)


def _module_exit(fg: FlowGraph, n_m: int, p_m: float, dp_m: float,
                 qlink_m: float) -> float:
    if n_m == 0:
        return 0.0
    tele = (fg.teleport * p_m + (1.0 - fg.teleport) * dp_m)
    return tele * (fg.n - n_m) / fg.n + qlink_m


class _MapState:
    """Partition aggregates with O(1) move evaluation."""

    def __init__(self, fg: FlowGraph, assignment: np.ndarray):
        self.fg = fg
        self.mod = assignment.copy()
        self._rebuild()

    def _rebuild(self) -> None:
        fg = self.fg
        n = fg.n
        self.n_m = np.zeros(n, dtype=np.intp)
        self.p_m = np.zeros(n)
        self.dp_m = np.zeros(n)
        self.qlink_m = np.zeros(n)
        for i in range(n):
            m = self.mod[i]
            self.n_m[m] += 1
            self.p_m[m] += fg.p[i]
            if fg.dangling[i]:
                self.dp_m[m] += fg.p[i]
        for i in range(n):
            mi = self.mod[i]
            for j, phi in fg.out_flow[i].items():
                if self.mod[j] != mi:
                    self.qlink_m[mi] += phi
        self.q_m = np.array([
            _module_exit(fg, self.n_m[m], self.p_m[m], self.dp_m[m],
                         self.qlink_m[m])
            for m in range(n)
        ])
        self.q_tot = float(self.q_m.sum())

    def codelength(self) -> float:
        fg = self.fg
        node_term = sum(plogp(x) for x in fg.p)
        mod2 = sum(plogp(q) for q in self.q_m)
        mod3 = sum(plogp(self.p_m[m] + self.q_m[m]) for m in range(fg.n)
                   if self.n_m[m] > 0)
        return plogp(self.q_tot) - 2.0 * mod2 + mod3 - node_term

    def _neighbor_flows(self, i: int) -> tuple[dict, dict, float]:
        outs: dict[int, float] = defaultdict(float)
        ins: dict[int, float] = defaultdict(float)
        for j, phi in self.fg.out_flow[i].items():
            outs[self.mod[j]] += phi
        for j, phi in self.fg.in_flow[i].items():
            ins[self.mod[j]] += phi
        oi_tot = sum(self.fg.out_flow[i].values())
        return outs, ins, oi_tot

    def _move_delta(self, i: int, b: int, outs, ins, oi_tot) -> tuple[float, tuple]:
        fg = self.fg
        a = self.mod[i]
        pi = fg.p[i]
        dpi = pi if fg.dangling[i] else 0.0

        na2 = self.n_m[a] - 1
        pa2 = self.p_m[a] - pi
        dpa2 = self.dp_m[a] - dpi
        qla2 = self.qlink_m[a] - (oi_tot - outs.get(a, 0.0)) + ins.get(a, 0.0)
        qa2 = _module_exit(fg, na2, pa2, dpa2, qla2)

        nb2 = self.n_m[b] + 1
        pb2 = self.p_m[b] + pi
        dpb2 = self.dp_m[b] + dpi
        qlb2 = self.qlink_m[b] + (oi_tot - outs.get(b, 0.0)) - ins.get(b, 0.0)
        qb2 = _module_exit(fg, nb2, pb2, dpb2, qlb2)

        qa, qb = self.q_m[a], self.q_m[b]
        qtot2 = self.q_tot - qa - qb + qa2 + qb2
        delta = (
            plogp(qtot2) - plogp(self.q_tot)
            - 2.0 * (plogp(qa2) + plogp(qb2) - plogp(qa) - plogp(qb))
            + plogp(pa2 + qa2) + plogp(pb2 + qb2)
            - plogp(self.p_m[a] + qa) - plogp(self.p_m[b] + qb)
        )
        staged = (a, b, na2, pa2, dpa2, qla2, qa2, nb2, pb2, dpb2, qlb2, qb2,
                  qtot2)
        return delta, staged

    def apply(self, i: int, staged: tuple) -> None:
        (a, b, na2, pa2, dpa2, qla2, qa2, nb2, pb2, dpb2, qlb2, qb2,
         qtot2) = staged
        self.mod[i] = b
        self.n_m[a], self.p_m[a], self.dp_m[a] = na2, pa2, dpa2
        self.qlink_m[a], self.q_m[a] = qla2, qa2
        self.n_m[b], self.p_m[b], self.dp_m[b] = nb2, pb2, dpb2
        self.qlink_m[b], self.q_m[b] = qlb2, qb2
        self.q_tot = qtot2


def map_codelength(adj: Adjacency, partition: Mapping[Hashable, int],
                   directed: bool = False,
                   teleport: float = TELEPORT) -> float:
    """Two-level map-equation description length of a partition, in bits."""
    if not directed:
        adj = symmetrize(adj)
    fg = build_flow_graph(adj, directed, teleport)
    labels = sorted({partition[u] for u in fg.nodes})
    relabel = {lab: k for k, lab in enumerate(labels)}
    assignment = np.array([relabel[partition[u]] for u in fg.nodes],
                          dtype=np.intp)
    return _MapState(fg, assignment).codelength()


def _merge_pass(state: _MapState) -> bool:
    """Greedily merge connected module pairs while codelength improves."""
    fg = state.fg
    improved = False
    while True:
        cross: dict[tuple[int, int], float] = defaultdict(float)
        for i in range(fg.n):
            mi = state.mod[i]
            for j, phi in fg.out_flow[i].items():
                mj = state.mod[j]
                if mi != mj:
                    cross[(min(mi, mj), max(mi, mj))] += phi
        best = None
        best_pair = None
        for (a, b), flow_ab in sorted(cross.items()):
            na2 = state.n_m[a] + state.n_m[b]
            pa2 = state.p_m[a] + state.p_m[b]
            dpa2 = state.dp_m[a] + state.dp_m[b]
            qla2 = state.qlink_m[a] + state.qlink_m[b] - flow_ab
            qa2 = _module_exit(fg, na2, pa2, dpa2, qla2)
            qa, qb = state.q_m[a], state.q_m[b]
            qtot2 = state.q_tot - qa - qb + qa2
            delta = (
                plogp(qtot2) - plogp(state.q_tot)
                - 2.0 * (plogp(qa2) - plogp(qa) - plogp(qb))
                + plogp(pa2 + qa2)
                - plogp(state.p_m[a] + qa) - plogp(state.p_m[b] + qb)
            )
            if delta < -_MIN_GAIN and (best is None or delta < best):
                best = delta
                best_pair = (a, b)
        if best_pair is None:
            return improved
        a, b = best_pair
        state.mod[state.mod == b] = a
        state._rebuild()
        improved = True


def detect_infomap(adj: Adjacency, directed: bool = False, seed: int = 0,
                   teleport: float = TELEPORT) -> dict:
    """Greedy map-equation partition; deterministic for a fixed seed."""
    if not directed:
        adj = symmetrize(adj)
    fg = build_flow_graph(adj, directed, teleport)
    if fg.n == 0:
        return {}
    rng = derive_rng(seed, "infomap", directed)
    state = _MapState(fg, np.arange(fg.n, dtype=np.intp))
    while True:
        moved_any = False
        while True:
            moved = False
            for i in rng.permutation(fg.n):
                outs, ins, oi_tot = state._neighbor_flows(i)
                current = state.mod[i]
                candidates = sorted(
                    (set(outs) | set(ins)) - {current})
                best_delta = -_MIN_GAIN
                best_staged = None
                for b in candidates:
                    delta, staged = state._move_delta(i, b, outs, ins, oi_tot)
                    if delta < best_delta:
                        best_delta = delta
                        best_staged = staged
                if best_staged is not None:
                    state.apply(i, best_staged)
                    moved = True
            if not moved:
                break
            moved_any = True
            state._rebuild()  # resync aggregates against float drift
        merged = _merge_pass(state)
        if not (moved_any or merged):
            break
    return _canonical(fg.nodes, state.mod)


def detect_labelprop(adj: Adjacency, seed: int = 0,
                     max_passes: int = 1000) -> dict:
    """Asynchronous label propagation on the undirected view of ``adj``."""
    und = symmetrize(adj)
    nodes = _collect_nodes(adj)
    index = {u: i for i, u in enumerate(nodes)}
    labels = np.arange(len(nodes), dtype=np.intp)
    rng = derive_rng(seed, "labelprop")
    for _ in range(max_passes):
        changed = False
        for i in rng.permutation(len(nodes)):
            nbrs = und.get(nodes[i], {})
            if not nbrs:
                continue
            tally: dict[int, float] = defaultdict(float)
            for v, w in nbrs.items():
                tally[labels[index[v]]] += w
            top = max(tally.values())
            winners = sorted(lab for lab, w in tally.items() if w == top)
            choice = winners[rng.integers(len(winners))] if len(winners) > 1 \
                else winners[0]
            if choice != labels[i]:
                labels[i] = choice
                changed = True
        if not changed:
            break
    return _canonical(nodes, labels)


def _canonical(nodes: list, labels: np.ndarray) -> dict:
    """Relabel communities 0..k-1 by first appearance in node order."""
    relabel: dict[int, int] = {}
    out = {}
    for u, lab in zip(nodes, labels):
        lab = int(lab)
        if lab not in relabel:
            relabel[lab] = len(relabel)
        out[u] = relabel[lab]
    return out


def community_sizes(partition: Mapping[Hashable, int]) -> dict[int, int]:
    sizes: dict[int, int] = defaultdict(int)
    for lab in partition.values():
        sizes[lab] += 1
    return dict(sizes)
