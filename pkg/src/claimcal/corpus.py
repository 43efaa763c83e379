"""Data model and ingestion for claims, publications and outcome strengths.

File formats:
  claims        TSV, header ``source target pmid year polarity``
  publications  JSON lines, one object per publication
  strengths     TSV, header-less ``source target strength``
  journal table TSV ``journal year score``
  rank table    TSV ``affiliation rank``
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping


class CorpusError(ValueError):
    """Raised for malformed or referentially broken corpus inputs."""


def normalize_gene(symbol: str) -> str:
    """Case-normalize a gene token; reject empty or whitespace-bearing ones."""
    token = symbol.strip()
    if not token:
        raise CorpusError("empty gene symbol")
    if any(ch.isspace() for ch in token):
        raise CorpusError(f"gene symbol contains whitespace: {symbol!r}")
    return token.upper()


@dataclass(frozen=True, order=True)
class InteractionKey:
    """Ordered source->target gene pair; (A,B) is distinct from (B,A)."""

    source: str
    target: str

    def __str__(self) -> str:
        return f"{self.source}->{self.target}"


@dataclass(frozen=True)
class ClaimRecord:
    """One publication's Boolean claim about one directed interaction."""

    interaction: InteractionKey
    publication: str
    year: int
    polarity: int

    def __post_init__(self) -> None:
        if self.polarity not in (0, 1):
            raise CorpusError(f"polarity must be 0 or 1, got {self.polarity!r}")


@dataclass
class PublicationMeta:
    id: str
    year: int
    authors: list[str] = field(default_factory=list)
    affiliations: list[str] = field(default_factory=list)
    references: list[str] = field(default_factory=list)
    journal: str | None = None
    journal_score: float | None = None
    top_affiliation: bool | None = None
    citation_history: dict[int, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for y in self.citation_history:
            if y < self.year:
                raise CorpusError(
                    f"publication {self.id}: citation year {y} precedes "
                    f"publication year {self.year}"
                )


@dataclass
class InteractionRecord:
    key: InteractionKey
    claims: list[ClaimRecord] = field(default_factory=list)
    strength: float | None = None


@dataclass
class ClaimCorpus:
    """All interactions and publications, indexed and cross-validated.

    Read-only after construction; safe to share across parallel workers.
    """

    interactions: dict[InteractionKey, InteractionRecord]
    publications: dict[str, PublicationMeta]
    ingest_report: dict = field(default_factory=dict)

    def claims(self) -> Iterator[ClaimRecord]:
        for rec in self.interactions.values():
            yield from rec.claims

    def n_claims(self) -> int:
        return sum(len(r.claims) for r in self.interactions.values())

    def years(self) -> list[int]:
        return sorted({c.year for c in self.claims()})

    def max_year(self) -> int:
        years = self.years()
        if not years:
            raise CorpusError("corpus has no claims")
        return years[-1]

    def first_year(self, key: InteractionKey) -> int:
        rec = self._record(key)
        return min(c.year for c in rec.claims)

    def _record(self, key: InteractionKey) -> InteractionRecord:
        try:
            return self.interactions[key]
        except KeyError:
            raise CorpusError(f"unknown interaction {key}") from None

    def validate(self) -> None:
        for key, rec in self.interactions.items():
            for claim in rec.claims:
                if claim.interaction != key:
                    raise CorpusError(
                        f"claim filed under {key} references {claim.interaction}"
                    )
                if claim.publication not in self.publications:
                    raise CorpusError(
                        f"claim on {key} references unknown publication "
                        f"{claim.publication}"
                    )


def _split_tsv_line(line: str, n_fields: int, path: str, lineno: int) -> list[str]:
    parts = line.rstrip("\n").split("\t")
    if len(parts) != n_fields:
        raise CorpusError(
            f"{path}:{lineno}: expected {n_fields} tab-separated fields, "
            f"got {len(parts)}"
        )
    return parts


CLAIMS_HEADER = ["source", "target", "pmid", "year", "polarity"]


def load_corpus(claims_path: str | Path, pubs_path: str | Path) -> ClaimCorpus:
    """Load and normalize a claim corpus from the claims TSV and pubs JSONL.

    Multiple mentions of the same (interaction, publication) pair collapse
    to a single record carrying the majority polarity; an exact polarity tie
    drops the pair entirely and is counted in ``ingest_report['tie_drops']``.
    """
    claims_path = Path(claims_path)
    pubs_path = Path(pubs_path)

    publications = _load_publications(pubs_path)

    mentions: dict[tuple[InteractionKey, str], list[tuple[int, int]]] = {}
    with open(claims_path, encoding="utf-8") as fh:
        header = fh.readline()
        if header.rstrip("\n").split("\t") != CLAIMS_HEADER:
            raise CorpusError(
                f"{claims_path}:1: bad header, expected "
                + "\t".join(CLAIMS_HEADER)
            )
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            src, tgt, pmid, year_s, pol_s = _split_tsv_line(
                line, 5, str(claims_path), lineno
            )
            try:
                year = int(year_s)
                polarity = int(pol_s)
            except ValueError:
                raise CorpusError(
                    f"{claims_path}:{lineno}: year and polarity must be integers"
                ) from None
            if polarity not in (0, 1):
                raise CorpusError(
                    f"{claims_path}:{lineno}: polarity must be 0 or 1"
                )
            key = InteractionKey(normalize_gene(src), normalize_gene(tgt))
            mentions.setdefault((key, pmid), []).append((year, polarity))

    dangling = sorted({pmid for (_, pmid) in mentions if pmid not in publications})
    if dangling:
        raise CorpusError(
            "claims reference unknown publications: " + ", ".join(dangling)
        )

    interactions: dict[InteractionKey, InteractionRecord] = {}
    tie_drops = 0
    duplicate_mentions = 0
    for (key, pmid), entries in sorted(mentions.items()):
        duplicate_mentions += len(entries) - 1
        n_pos = sum(p for (_, p) in entries)
        n_neg = len(entries) - n_pos
        if n_pos == n_neg:
            tie_drops += 1
            continue
        polarity = 1 if n_pos > n_neg else 0
        year = min(y for (y, _) in entries)
        rec = interactions.setdefault(key, InteractionRecord(key=key))
        rec.claims.append(
            ClaimRecord(interaction=key, publication=pmid, year=year,
                        polarity=polarity)
        )

    corpus = ClaimCorpus(
        interactions=interactions,
        publications=publications,
        ingest_report={
            "tie_drops": tie_drops,
            "duplicate_mentions": duplicate_mentions,
            "n_claims": sum(len(r.claims) for r in interactions.values()),
            "n_interactions": len(interactions),
            "n_publications": len(publications),
        },
    )
    corpus.validate()
    return corpus


def _load_publications(path: Path) -> dict[str, PublicationMeta]:
    pubs: dict[str, PublicationMeta] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}:{lineno}: invalid JSON ({exc})") from None
            try:
                meta = PublicationMeta(
                    id=str(obj["id"]),
                    year=int(obj["year"]),
                    authors=[str(a) for a in obj.get("authors", [])],
                    affiliations=[str(a) for a in obj.get("affiliations", [])],
                    references=[str(r) for r in obj.get("references", [])],
                    journal=obj.get("journal"),
                    citation_history={
                        int(y): int(c)
                        for y, c in obj.get("citation_history", {}).items()
                    },
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise CorpusError(f"{path}:{lineno}: bad publication record ({exc})") from None
            if meta.id in pubs:
                raise CorpusError(f"{path}:{lineno}: duplicate publication id {meta.id}")
            pubs[meta.id] = meta
    return pubs


def save_corpus(corpus: ClaimCorpus, claims_path: str | Path,
                pubs_path: str | Path) -> None:
    """Write a corpus back out in the canonical file formats."""
    with open(claims_path, "w", encoding="utf-8") as fh:
        fh.write("\t".join(CLAIMS_HEADER) + "\n")
        for key in sorted(corpus.interactions):
            for c in sorted(corpus.interactions[key].claims,
                            key=lambda c: (c.publication, c.year)):
                fh.write(f"{key.source}\t{key.target}\t{c.publication}"
                         f"\t{c.year}\t{c.polarity}\n")
    with open(pubs_path, "w", encoding="utf-8") as fh:
        for pid in sorted(corpus.publications):
            m = corpus.publications[pid]
            obj = {
                "id": m.id,
                "year": m.year,
                "authors": m.authors,
                "affiliations": m.affiliations,
                "references": m.references,
                "journal": m.journal,
                "citation_history": {str(y): c for y, c in
                                     sorted(m.citation_history.items())},
            }
            fh.write(json.dumps(obj, sort_keys=True) + "\n")


def load_strengths(path: str | Path) -> dict[InteractionKey, float]:
    """Load the experimental strength table; every value must lie in [0, 1]."""
    path = Path(path)
    out: dict[InteractionKey, float] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            src, tgt, val_s = _split_tsv_line(line, 3, str(path), lineno)
            if lineno == 1 and val_s == "strength":
                continue  # optional header
            try:
                val = float(val_s)
            except ValueError:
                raise CorpusError(
                    f"{path}:{lineno}: strength {val_s!r} is not a number"
                ) from None
            key = InteractionKey(normalize_gene(src), normalize_gene(tgt))
            if not 0.0 <= val <= 1.0:
                raise CorpusError(
                    f"{path}:{lineno}: strength {val} for {key} outside [0, 1]"
                )
            out[key] = val
    return out


def attach_strengths(corpus: ClaimCorpus,
                     strengths: Mapping[InteractionKey, float]) -> int:
    """Attach strengths to matching interaction records; returns match count."""
    n = 0
    for key, val in strengths.items():
        rec = corpus.interactions.get(key)
        if rec is not None:
            rec.strength = val
            n += 1
    return n


def mean_claim(record: InteractionRecord) -> float:
    """Arithmetic mean of claim polarities for one interaction."""
    if not record.claims:
        raise CorpusError(f"no claims on {record.key}")
    return sum(c.polarity for c in record.claims) / len(record.claims)


def claim_correctness(polarity: int, positive: int) -> int:
    """1 iff the claim's polarity agrees with the interaction's sign."""
    if polarity not in (0, 1) or positive not in (0, 1):
        raise CorpusError("polarity and positive must both be binary")
    return 1 - abs(polarity - positive)


def join_metadata(
    corpus: ClaimCorpus,
    journal_scores: Mapping[tuple[str, int], float] | None = None,
    affiliation_ranks: Mapping[str, int] | None = None,
    citations: Mapping[str, Mapping[int, int]] | None = None,
) -> tuple[ClaimCorpus, dict[str, float]]:
    """Join journal scores, affiliation ranks and citation histories.

    Missing joins leave the target fields missing (never zero). Returns the
    corpus together with per-table join coverage fractions.
    """
    n = len(corpus.publications) or 1
    hits = {"journal_score": 0, "top_affiliation": 0, "citations": 0}
    for meta in corpus.publications.values():
        if journal_scores is not None and meta.journal is not None:
            score = journal_scores.get((meta.journal, meta.year))
            if score is not None:
                meta.journal_score = float(score)
                hits["journal_score"] += 1
        if affiliation_ranks is not None and meta.affiliations:
            meta.top_affiliation = any(
                a in affiliation_ranks for a in meta.affiliations
            )
            hits["top_affiliation"] += 1
        if citations is not None:
            hist = citations.get(meta.id)
            if hist is not None:
                meta.citation_history = {int(y): int(c) for y, c in hist.items()}
                hits["citations"] += 1
    coverage = {k: v / n for k, v in hits.items()}
    return corpus, coverage


def load_journal_scores(path: str | Path) -> dict[tuple[str, int], float]:
    """TSV ``journal year score`` keyed by (journal id, year)."""
    out: dict[tuple[str, int], float] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            journal, year_s, score_s = _split_tsv_line(line, 3, str(path), lineno)
            if lineno == 1 and score_s == "score":
                continue
            out[(journal, int(year_s))] = float(score_s)
    return out


def load_affiliation_ranks(path: str | Path) -> dict[str, int]:
    """TSV ``affiliation rank``; presence in the table marks a top affiliation."""
    out: dict[str, int] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            affiliation, rank_s = _split_tsv_line(line, 2, str(path), lineno)
            if lineno == 1 and rank_s == "rank":
                continue
            out[affiliation] = int(rank_s)
    return out


def batch(
    corpus: ClaimCorpus,
    key: InteractionKey,
    t: int,
    w: int | None = None,
    strict: bool = False,
) -> list[ClaimRecord]:
    """Claims on ``key`` with year in (t-w, t], or (t-w, t) when strict.

    ``w=None`` means an unbounded window reaching back to the first claim.
    """
    if w is not None and w <= 0:
        raise CorpusError(f"window must be positive or None, got {w}")
    rec = corpus._record(key)
    lo = t - w if w is not None else None
    out = []
    for c in rec.claims:
        if lo is not None and c.year <= lo:
            continue
        if strict:
            if c.year < t:
                out.append(c)
        elif c.year <= t:
            out.append(c)
    return out


def claims_by_interaction(corpus: ClaimCorpus) -> dict[InteractionKey, list[ClaimRecord]]:
    return {k: list(r.claims) for k, r in corpus.interactions.items()}


def subset_by_time(corpus: ClaimCorpus, t: int) -> ClaimCorpus:
    """Corpus restricted to claims (and their publications) with year <= t.

    Publication records keep their full citation histories: the history is an
    attribute of a record dated at publication time.
    """
    interactions: dict[InteractionKey, InteractionRecord] = {}
    used_pubs: set[str] = set()
    for key, rec in corpus.interactions.items():
        kept = [c for c in rec.claims if c.year <= t]
        if kept:
            interactions[key] = InteractionRecord(
                key=key, claims=kept, strength=rec.strength
            )
            used_pubs.update(c.publication for c in kept)
    pubs = {pid: corpus.publications[pid] for pid in sorted(used_pubs)}
    return ClaimCorpus(interactions=interactions, publications=pubs,
                       ingest_report=dict(corpus.ingest_report))


def subset_interactions(corpus: ClaimCorpus,
                        keys: Iterable[InteractionKey]) -> ClaimCorpus:
    """Corpus restricted to the given interactions and their publications."""
    interactions: dict[InteractionKey, InteractionRecord] = {}
    used_pubs: set[str] = set()
    for key in keys:
        rec = corpus.interactions.get(key)
        if rec is None:
            raise CorpusError(f"unknown interaction {key}")
        interactions[key] = rec
        used_pubs.update(c.publication for c in rec.claims)
    pubs = {pid: corpus.publications[pid] for pid in sorted(used_pubs)}
    return ClaimCorpus(interactions=interactions, publications=pubs,
                       ingest_report=dict(corpus.ingest_report))
