"""Embedding-quality evaluations: relation offsets and verb-particle
paraphrasing.

The relation task asks whether adding a relation vector to a base word
retrieves its target within the top k. The paraphrase task asks whether a
verb plus a particle vector lands near any gold paraphrase. Both report
through emit_report.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .embeddings import EmbeddingTable, nearest
from .report import EvalRecord, emit_report  # re-exported: reports live with eval

logger = logging.getLogger(__name__)

__all__ = [
    "RelationPairSet",
    "VpcEntry",
    "read_relation_pairs",
    "read_vpc_tsv",
    "diff_baseline_vector",
    "split_evaluable_pairs",
    "relation_eval",
    "vpc_paraphrase",
    "vpc_accuracy",
    "prec_at_k",
    "sense_variants",
    "EvalRecord",
    "emit_report",
]

PHRASE_TYPES = ("compositional", "aspectual", "idiomatic")


@dataclass
class RelationPairSet:
    """Named collection of (base, target) word pairs sharing one relation."""

    name: str
    pairs: list[tuple[str, str]]

    def __post_init__(self):
        if not self.name:
            raise ValueError("relation set needs a name")
        if not self.pairs:
            raise ValueError(f"{self.name}: relation set has no pairs")


@dataclass
class VpcEntry:
    """A verb-particle construction with gold paraphrases and usage
    sentences; the verb itself never counts as a paraphrase."""

    verb: str
    particle: str
    gold: set[str]
    sentences: list[str]
    phrase_type: str | None = None

    def __post_init__(self):
        if not self.gold:
            raise ValueError(f"{self.verb} {self.particle}: empty gold set")
        if self.verb in self.gold:
            raise ValueError(f"{self.verb} {self.particle}: verb in its own gold set")
        if not self.sentences:
            raise ValueError(f"{self.verb} {self.particle}: needs a sentence")


def read_relation_pairs(path) -> list[RelationPairSet]:
    """Parse a pairs file: ``: name`` section headers, then base<TAB>target."""
    sets: list[RelationPairSet] = []
    name: str | None = None
    pairs: list[tuple[str, str]] = []

    def flush():
        if name is not None:
            sets.append(RelationPairSet(name=name, pairs=list(pairs)))

    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped:
                continue
            if stripped.startswith(":"):
                flush()
                name = stripped[1:].strip()
                pairs = []
                if not name:
                    raise ValueError(f"{path}:{lineno}: empty relation name")
                continue
            fields = line.rstrip("\n").split("\t")
            if len(fields) != 2 or not fields[0] or not fields[1]:
                raise ValueError(
                    f"{path}:{lineno}: expected 'base<TAB>target', got {stripped!r}"
                )
            if name is None:
                raise ValueError(f"{path}:{lineno}: pair before any ': name' header")
            pairs.append((fields[0], fields[1]))
    flush()
    return sets


def read_vpc_tsv(path) -> list[VpcEntry]:
    """Parse VPC entries: verb, particle, comma-joined gold, then sentences.

    A recognized phrase type (compositional/aspectual/idiomatic) may sit
    between the gold column and the sentences.
    """
    entries: list[VpcEntry] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            fields = line.rstrip("\n").split("\t")
            if len(fields) < 4:
                raise ValueError(
                    f"{path}:{lineno}: expected verb, particle, gold and at "
                    f"least one sentence"
                )
            verb, particle, gold_field = fields[0], fields[1], fields[2]
            rest = fields[3:]
            phrase_type = None
            if rest[0].lower() in PHRASE_TYPES and len(rest) > 1:
                phrase_type = rest[0].lower()
                rest = rest[1:]
            gold = {g.strip() for g in gold_field.split(",") if g.strip()}
            try:
                entries.append(
                    VpcEntry(
                        verb=verb,
                        particle=particle,
                        gold=gold,
                        sentences=rest,
                        phrase_type=phrase_type,
                    )
                )
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    return entries


def split_evaluable_pairs(
    table: EmbeddingTable, pairs: list[tuple[str, str]]
) -> tuple[list[tuple[str, str]], list[tuple[str, str]]]:
    """Pairs with both words in vocabulary, and the skipped remainder."""
    evaluable, skipped = [], []
    for base, target in pairs:
        if base in table and target in table:
            evaluable.append((base, target))
        else:
            skipped.append((base, target))
    return evaluable, skipped


def diff_baseline_vector(
    table: EmbeddingTable, pairs: list[tuple[str, str]]
) -> np.ndarray:
    """Mean of (target - base) over the in-vocabulary pairs."""
    evaluable, skipped = split_evaluable_pairs(table, pairs)
    if skipped:
        logger.warning("diff baseline: skipped %d OOV pairs", len(skipped))
    if not evaluable:
        raise ValueError("diff baseline undefined: every pair has an OOV word")
    diffs = [table.get_vector(t) - table.get_vector(b) for b, t in evaluable]
    return np.mean(diffs, axis=0)


def relation_eval(
    table: EmbeddingTable,
    pairs: list[tuple[str, str]],
    relation_vector: np.ndarray | None = None,
    topk: int = 3,
    holdout: bool = False,
    exclude_tokens: tuple[str, ...] = (),
) -> float:
    """Fraction of pairs whose target appears in the top-k around
    base + relation vector.

    The base word and any ``exclude_tokens`` (for instance the preposition
    token the vector came from) never count as candidates. With
    holdout=True the relation vector argument is ignored and each query
    uses the mean difference over the other in-vocabulary pairs.
    """
    if topk < 1:
        raise ValueError("topk must be at least 1")
    evaluable, skipped = split_evaluable_pairs(table, pairs)
    if skipped:
        logger.warning("relation_eval: skipped %d OOV pairs", len(skipped))
    if not evaluable:
        raise ValueError("relation_eval: no evaluable pairs")
    if not holdout and relation_vector is None:
        raise ValueError("relation_eval needs a relation vector unless holdout=True")

    if holdout and len(evaluable) < 2:
        raise ValueError("holdout needs at least two evaluable pairs")

    diffs = None
    if holdout:
        diffs = np.stack(
            [table.get_vector(t) - table.get_vector(b) for b, t in evaluable]
        )
        total = diffs.sum(axis=0)

    hits = 0
    for i, (base, target) in enumerate(evaluable):
        if holdout:
            vector = (total - diffs[i]) / (len(evaluable) - 1)
        else:
            vector = np.asarray(relation_vector, dtype=np.float64)
        query = table.get_vector(base) + vector
        exclude = {base, *exclude_tokens}
        found = nearest(table, query, topk, exclude=exclude)
        if any(tok == target for tok, _ in found):
            hits += 1
    return hits / len(evaluable)


def sense_variants(table: EmbeddingTable, token: str) -> list[str]:
    """Vocabulary entries that are sense-tagged forms of ``token``."""
    prefix = token + "::"
    return [t for t in table.vocab if t.startswith(prefix)]


def vpc_paraphrase(
    table: EmbeddingTable,
    entry: VpcEntry,
    prep_token: str | None,
    topk: int = 3,
) -> list[tuple[str, float]]:
    """Candidate paraphrases near verb + particle composition.

    ``prep_token`` selects the particle vector (a bare or sense-tagged
    token); None queries the verb vector alone. The verb, the particle
    token, and sense-tagged variants of the verb are excluded.
    """
    if topk < 1:
        raise ValueError("topk must be at least 1")
    v_verb = table.get_vector(entry.verb)
    if v_verb is None:
        raise ValueError(f"verb {entry.verb!r} not in table")
    if prep_token is None:
        query = v_verb
        exclude = {entry.verb, *sense_variants(table, entry.verb)}
    else:
        v_prep = table.get_vector(prep_token)
        if v_prep is None:
            raise ValueError(f"particle token {prep_token!r} not in table")
        query = v_verb + v_prep
        exclude = {entry.verb, prep_token, *sense_variants(table, entry.verb)}
    return nearest(table, query, topk, exclude=exclude)


def vpc_accuracy(
    entries: list[VpcEntry],
    candidates_per_entry: list[list[str]],
    topk: int,
) -> float:
    """Fraction of entries whose top-k candidates meet the gold set."""
    if len(entries) != len(candidates_per_entry):
        raise ValueError("entries and candidate lists length mismatch")
    if not entries:
        raise ValueError("vpc_accuracy undefined for zero entries")
    hits = 0
    for entry, candidates in zip(entries, candidates_per_entry):
        if any(c in entry.gold for c in candidates[:topk]):
            hits += 1
    return hits / len(entries)


def prec_at_k(
    entries: list[VpcEntry],
    candidates_per_entry: list[list[str]],
    k: int,
) -> float:
    """Mean over entries of |top-k candidates meeting gold| / k."""
    if k < 1:
        raise ValueError("k must be at least 1")
    if len(entries) != len(candidates_per_entry):
        raise ValueError("entries and candidate lists length mismatch")
    if not entries:
        raise ValueError("prec_at_k undefined for zero entries")
    total = 0.0
    for entry, candidates in zip(entries, candidates_per_entry):
        total += sum(1 for c in candidates[:k] if c in entry.gold) / k
    return total / len(entries)
