"""Line-delimited JSON corpus format.

One document per line. Field contract (all names fixed):

    id          string
    domain_tag  string
    label       "low" | "medium" | "high"
                | {"raw": int, "scheme": "gcdc3" | "cohesentia5"}
                | null (unlabeled, inference only)
    sentences   [{"text": str, "tokens": [str, ...]}, ...]   (order = 1-based index)
    annotations {"nouns":       [[sentence_index, [start, end], surface], ...],
                 "coref_links": [[[si, [s, e]], [sj, [s, e]]], ...],
                 "relations":   [[i, sense_name, kind, direction_or_null], ...]}

Raw integer labels are mapped on load; serialization always emits the mapped
string form, making serialize(parse(x)) canonical: writing a parsed document
back out and re-parsing it is byte-stable.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Iterator

from .documents import (
    AnnotationSet,
    Document,
    DocumentStructureError,
    Mention,
    NounAnnotation,
    RelationAnnotation,
    Sentence,
    TokenSpan,
)
from .labels import CoherenceLabel, ScoreScheme, map_raw_score
from .relations import CauseDirection, RelationKind, UnknownSenseError, load_registry


class CorpusFormatError(ValueError):
    """Malformed corpus content; carries the offending 1-based line number."""

    def __init__(self, line_number: int, message: str):
        self.line_number = line_number
        super().__init__(f"line {line_number}: {message}")


def document_from_record(record: dict, line_number: int = 0) -> Document:
    """Build and validate a Document from one decoded JSON record."""
    registry = load_registry()
    try:
        sentences = tuple(
            Sentence(index=k + 1, text=str(s["text"]),
                     tokens=tuple(str(t) for t in s["tokens"]))
            for k, s in enumerate(record["sentences"]))
        ann = record.get("annotations") or {}
        nouns = tuple(
            NounAnnotation(int(i), TokenSpan(int(span[0]), int(span[1])), str(surface))
            for i, span, surface in ann.get("nouns", ()))
        corefs = tuple(
            (Mention(int(a[0]), TokenSpan(int(a[1][0]), int(a[1][1]))),
             Mention(int(b[0]), TokenSpan(int(b[1][0]), int(b[1][1]))))
            for a, b in ann.get("coref_links", ()))
        relations = []
        for entry in ann.get("relations", ()):
            i, name, kind_str = entry[0], entry[1], entry[2]
            direction_str = entry[3] if len(entry) > 3 else None
            sense = registry.lookup(str(name), RelationKind(str(kind_str)))
            direction = CauseDirection(direction_str) if direction_str else None
            relations.append(RelationAnnotation(int(i), sense, direction))
        doc = Document(
            id=str(record["id"]),
            sentences=sentences,
            label=_parse_label(record.get("label")),
            domain_tag=str(record.get("domain_tag", "")),
            annotations=AnnotationSet(nouns, corefs, tuple(relations)),
        )
        return doc.validate()
    except CorpusFormatError:
        raise
    except (KeyError, IndexError, TypeError, ValueError,
            DocumentStructureError, UnknownSenseError) as exc:
        raise CorpusFormatError(line_number, str(exc)) from exc


def _parse_label(raw) -> CoherenceLabel | None:
    if raw is None:
        return None
    if isinstance(raw, str):
        return CoherenceLabel.from_text(raw)
    if isinstance(raw, dict):
        return map_raw_score(ScoreScheme(str(raw["scheme"])), raw["raw"])
    raise ValueError(f"label must be a string, object, or null, got {raw!r}")


def document_to_record(doc: Document) -> dict:
    """Canonical JSON-ready record for a document (label in string form)."""
    return {
        "id": doc.id,
        "domain_tag": doc.domain_tag,
        "label": doc.label.as_text if doc.label is not None else None,
        "sentences": [{"text": s.text, "tokens": list(s.tokens)}
                      for s in doc.sentences],
        "annotations": {
            "nouns": [[n.sentence_index, [n.span.start, n.span.end], n.surface]
                      for n in doc.annotations.nouns],
            "coref_links": [
                [[a.sentence_index, [a.span.start, a.span.end]],
                 [b.sentence_index, [b.span.start, b.span.end]]]
                for a, b in doc.annotations.coref_links],
            "relations": [
                [r.sentence_index, r.sense.name, r.sense.kind.value,
                 r.direction.value if r.direction else None]
                for r in doc.annotations.relations],
        },
    }


def dumps_canonical(record: dict) -> str:
    return json.dumps(record, sort_keys=True, separators=(",", ":"),
                      ensure_ascii=False)


def iter_corpus(path: str | Path) -> Iterator[Document]:
    """Yield validated documents; raises CorpusFormatError with line numbers."""
    with open(path, "r", encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(line_number, f"invalid JSON: {exc}") from exc
            if not isinstance(record, dict):
                raise CorpusFormatError(line_number, "record is not a JSON object")
            yield document_from_record(record, line_number)


def read_corpus(path: str | Path) -> list[Document]:
    return list(iter_corpus(path))


def write_corpus(docs: Iterable[Document], path: str | Path) -> None:
    """Write documents in canonical form, one per line, LF endings."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for doc in docs:
            fh.write(dumps_canonical(document_to_record(doc)))
            fh.write("\n")
