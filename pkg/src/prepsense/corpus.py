"""Corpus handling: tokenization, instance extraction, dataset ingestion,
and sense tagging.

Tagging rewrites each preposition token as ``<prep>::<sense>`` in place, so
token counts and positions are preserved and a tagged corpus feeds straight
back into embedding training.
"""

from __future__ import annotations

import logging
import re
import string
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from typing import Iterable, Iterator

from .classify import KnnModel, instance_triple, knn_predict
from .embeddings import EmbeddingTable
from .features import PrepInstance

logger = logging.getLogger(__name__)

SENSE_DELIMITER = "::"

_SENTENCE_SPLIT = re.compile(r"(?<=[.?!])\s+")
_HEAD_SENTINEL = "zzheadmarkzz"


class CorpusFormatError(ValueError):
    """An input file violates its documented format."""


@dataclass
class Corpus:
    """Tokenized sentences; tokens are non-empty and whitespace-free."""

    sentences: list[list[str]]
    source: str = ""


@dataclass
class TaggedCorpus:
    """Same shape as Corpus, but preposition tokens carry ``::<sense>``."""

    sentences: list[list[str]]
    source: str = ""


def tokenize(text: str, source: str = "") -> Corpus:
    """Split text into sentences on [.?!]+whitespace, lowercase, and strip
    leading/trailing punctuation from each token.

    Internal hyphens and apostrophes survive; tokens that reduce to nothing
    are dropped, as are sentences left empty.
    """
    sentences: list[list[str]] = []
    for raw in _SENTENCE_SPLIT.split(text):
        tokens = []
        for word in raw.lower().split():
            word = word.strip(string.punctuation)
            if word:
                tokens.append(word)
        if tokens:
            sentences.append(tokens)
    return Corpus(sentences=sentences, source=source)


def extract_instances(
    corpus: Corpus | TaggedCorpus, prepositions: Iterable[str]
) -> list[PrepInstance]:
    """One unlabeled instance per occurrence of any listed preposition.

    Instance ids are ``<sentence_index>:<token_index>``.
    """
    wanted = set(prepositions)
    instances: list[PrepInstance] = []
    for si, sentence in enumerate(corpus.sentences):
        for ti, token in enumerate(sentence):
            if token in wanted:
                instances.append(
                    PrepInstance(
                        instance_id=f"{si}:{ti}",
                        tokens=sentence,
                        prep_index=ti,
                        preposition=token,
                    )
                )
    return instances


def write_instances_tsv(instances: list[PrepInstance], path) -> None:
    """Columns: id, preposition, prep_index, sense or ``-``, tokens joined
    by single spaces."""
    with open(path, "w", encoding="utf-8") as fh:
        for inst in instances:
            sense = inst.sense_label if inst.sense_label is not None else "-"
            fh.write(
                f"{inst.instance_id}\t{inst.preposition}\t{inst.prep_index}\t"
                f"{sense}\t{' '.join(inst.tokens)}\n"
            )


def read_instances_tsv(path) -> list[PrepInstance]:
    instances: list[PrepInstance] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            fields = line.rstrip("\n").split("\t")
            if len(fields) != 5:
                raise CorpusFormatError(
                    f"{path}:{lineno}: expected 5 columns, found {len(fields)}"
                )
            instance_id, prep, index_field, sense, token_field = fields
            try:
                prep_index = int(index_field)
            except ValueError:
                raise CorpusFormatError(
                    f"{path}:{lineno}: non-integer prep_index {index_field!r}"
                ) from None
            tokens = token_field.split(" ")
            try:
                instances.append(
                    PrepInstance(
                        instance_id=instance_id,
                        tokens=tokens,
                        prep_index=prep_index,
                        preposition=prep,
                        sense_label=None if sense == "-" else sense,
                    )
                )
            except ValueError as exc:
                raise CorpusFormatError(f"{path}:{lineno}: {exc}") from None
    return instances


def _byte_offset(path, line: int, column: int) -> int:
    try:
        with open(path, "rb") as fh:
            data = fh.read()
        lines = data.split(b"\n")
        return sum(len(ln) + 1 for ln in lines[: line - 1]) + column
    except OSError:
        return -1


def _context_parts(context: ET.Element) -> tuple[str, str, str] | None:
    """Text before the first <head>, the head text, and the text after."""
    head = None
    before: list[str] = [context.text or ""]
    after: list[str] = []
    for child in context:
        if head is None and child.tag == "head":
            head = child
            after.append(child.tail or "")
        elif head is None:
            before.append("".join(child.itertext()))
            before.append(child.tail or "")
        else:
            after.append("".join(child.itertext()))
            after.append(child.tail or "")
    if head is None:
        return None
    return "".join(before), "".join(head.itertext()), "".join(after)


def convert_semeval(
    xml_paths: list, key_paths: list, stats: dict | None = None
) -> list[PrepInstance]:
    """Read lexical-sample XML files plus answer keys into instances.

    Key lines are whitespace separated: either ``<instance_id> <sense>`` or
    ``<lexelt> <instance_id> <sense> ...``; only the first sense is kept.
    Instances whose head token cannot be located after tokenization are
    skipped and counted. Key ids missing from the XML only warn.
    """
    senses: dict[str, str] = {}
    for key_path in key_paths:
        with open(key_path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                fields = line.split()
                if not fields:
                    continue
                if len(fields) < 2:
                    raise CorpusFormatError(
                        f"{key_path}:{lineno}: expected at least 2 fields"
                    )
                if len(fields) == 2:
                    instance_id, sense = fields[0], fields[1]
                else:
                    instance_id, sense = fields[1], fields[2]
                senses[instance_id] = sense

    instances: list[PrepInstance] = []
    seen_ids: set[str] = set()
    skipped = 0
    for xml_path in xml_paths:
        try:
            tree = ET.parse(xml_path)
        except ET.ParseError as exc:
            line, column = exc.position
            raise CorpusFormatError(
                f"{xml_path}: malformed markup at byte offset "
                f"{_byte_offset(xml_path, line, column)} (line {line})"
            ) from None
        for element in tree.getroot().iter("instance"):
            instance_id = element.get("id")
            if instance_id is None:
                skipped += 1
                continue
            seen_ids.add(instance_id)
            context = element.find(".//context")
            parts = _context_parts(context) if context is not None else None
            if parts is None:
                skipped += 1
                continue
            before, head_text, after = parts
            head_tokens = [
                tok
                for sentence in tokenize(head_text).sentences
                for tok in sentence
            ]
            if len(head_tokens) != 1:
                skipped += 1
                continue
            marked = tokenize(f"{before} {_HEAD_SENTINEL} {after}")
            location = None
            for sentence in marked.sentences:
                if _HEAD_SENTINEL in sentence:
                    location = (sentence, sentence.index(_HEAD_SENTINEL))
                    break
            if location is None:
                skipped += 1
                continue
            sentence, prep_index = location
            sentence[prep_index] = head_tokens[0]
            instances.append(
                PrepInstance(
                    instance_id=instance_id,
                    tokens=sentence,
                    prep_index=prep_index,
                    preposition=head_tokens[0],
                    sense_label=senses.get(instance_id),
                )
            )

    unmatched = sorted(set(senses) - seen_ids)
    if unmatched:
        logger.warning(
            "%d key ids missing from the XML (first: %s)", len(unmatched), unmatched[0]
        )
    if stats is not None:
        stats["instances"] = len(instances)
        stats["skipped"] = skipped
        stats["unmatched_keys"] = len(unmatched)
        stats["labeled"] = sum(1 for inst in instances if inst.sense_label)
    return instances


def tag_sentences(
    sentences: Iterable[list[str]],
    models: dict[str, KnnModel],
    table: EmbeddingTable,
) -> Iterator[list[str]]:
    """Streaming core of tag_corpus: yields one tagged sentence per input.

    Every token matching a model key is rewritten as ``token::sense`` using
    that model's own window sizes; everything else passes through.
    """
    for prep, model in models.items():
        if model.preposition != prep:
            raise ValueError(
                f"model for {prep!r} stores preposition {model.preposition!r}"
            )
    for si, sentence in enumerate(sentences):
        tagged = list(sentence)
        for ti, token in enumerate(sentence):
            model = models.get(token)
            if model is None:
                continue
            inst = PrepInstance(
                instance_id=f"{si}:{ti}",
                tokens=sentence,
                prep_index=ti,
                preposition=token,
            )
            triple = instance_triple(
                inst, model.k_left, model.k_right, table, model.feature_mode
            )
            sense = knn_predict(model, triple)
            tagged[ti] = f"{token}{SENSE_DELIMITER}{sense}"
        yield tagged


def tag_corpus(
    corpus: Corpus, models: dict[str, KnnModel], table: EmbeddingTable
) -> TaggedCorpus:
    """Disambiguate every modeled preposition occurrence in the corpus."""
    return TaggedCorpus(
        sentences=list(tag_sentences(corpus.sentences, models, table)),
        source=corpus.source,
    )


def split_sense_token(token: str) -> tuple[str, str | None]:
    """Split ``with::3`` into ("with", "3"); plain tokens give (token, None)."""
    if SENSE_DELIMITER in token:
        prep, sense = token.split(SENSE_DELIMITER, 1)
        return prep, sense
    return token, None


def read_corpus(path) -> Corpus:
    """Read a pretokenized corpus: one sentence per line, space-joined."""
    return Corpus(sentences=list(iter_sentence_file(path)), source=str(path))


def write_corpus(corpus: Corpus | TaggedCorpus, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for sentence in corpus.sentences:
            fh.write(" ".join(sentence) + "\n")


def iter_sentence_file(path) -> Iterator[list[str]]:
    """Yield token lists from a pretokenized file, skipping blank lines."""
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            tokens = line.split()
            if tokens:
                yield tokens
