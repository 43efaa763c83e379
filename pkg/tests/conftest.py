"""Shared fixtures: hand-built corpora and the worked dependency graph."""
import pytest

from claimcal.bipartite import BipartiteGraph
from claimcal.corpus import (
    ClaimCorpus,
    ClaimRecord,
    InteractionKey,
    InteractionRecord,
    PublicationMeta,
)


def make_corpus(claim_rows, pubs=None, strengths=None):
    """Corpus from (source, target, pub, year, polarity) rows.

    Publications not described in ``pubs`` get bare metadata with the year
    of their first claim.
    """
    interactions = {}
    pub_years = {}
    for src, tgt, pub, year, pol in claim_rows:
        key = InteractionKey(src, tgt)
        rec = interactions.setdefault(key, InteractionRecord(key=key, claims=[]))
        rec.claims.append(ClaimRecord(interaction=key, publication=pub,
                                      year=year, polarity=pol))
        pub_years.setdefault(pub, year)
    publications = {}
    for pid, year in pub_years.items():
        publications[pid] = PublicationMeta(id=pid, year=year)
    if pubs:
        for meta in pubs:
            publications[meta.id] = meta
    if strengths:
        for key, s in strengths.items():
            interactions[key].strength = s
    return ClaimCorpus(interactions=interactions, publications=publications)


@pytest.fixture
def worked_graph():
    """Three publications sharing authors; degrees 3, 2, 1, 1."""
    return BipartiteGraph(
        left=["c1", "c2", "p3"],
        right=["alice", "bob", "john", "mary"],
        edges={("c1", "alice"), ("c1", "bob"),
               ("c2", "alice"), ("c2", "john"),
               ("p3", "alice"), ("p3", "john"), ("p3", "mary")},
        mode="authors",
    )


@pytest.fixture
def three_year_corpus():
    """One interaction claimed in 2000, 2001 and 2003."""
    return make_corpus([
        ("A", "B", "p1", 2000, 1),
        ("A", "B", "p2", 2001, 1),
        ("A", "B", "p3", 2003, 0),
    ])


@pytest.fixture(scope="session")
def default_synth():
    """Default synthetic corpus, shared across tests that only read it."""
    from claimcal.synth import GenConfig, generate_corpus

    return generate_corpus(GenConfig(seed=0))
