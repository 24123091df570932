"""brat standoff reading and writing, corpus loading and JSON export."""
from __future__ import annotations

import json
import re
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from .docmodel import (AnnotatedDocument, EdgeLabel, Entity, Relation, Span,
                       parse_edge_label, parse_vertex_label)
from .errors import (CorpusError, DanglingReference, MalformedLine, OffsetMismatch,
                     OverlapWarning, SkippedAnnotationLine, SynthflowError)

# Annotation kinds we do not model: attributes, notes, events, modifiers,
# normalisations and equivalence sets.
IGNORABLE_PREFIXES = ("A", "#", "E", "M", "N", "*")

_T_LINE = re.compile(r"^(T\S*)\t(\S+) (\d+ \d+(?:;\d+ \d+)*)\t(.*)$")
_R_LINE = re.compile(r"^(R\S*)\t(\S+) Arg1:(\S+) Arg2:(\S+)\s*$")


def _natural_key(s: str):
    return [int(p) if p.isdigit() else p for p in re.split(r"(\d+)", s)]


def parse_document(txt: str, ann: str, doc_id: str = "", *, flip_condition: bool = False,
                   ignorable: Iterable[str] = IGNORABLE_PREFIXES) -> AnnotatedDocument:
    """Parse a brat text/annotation pair into an :class:`AnnotatedDocument`.

    ``flip_condition`` reverses every Condition relation, for corpora that put
    the property in Arg1.  Overlapping entities are kept and reported with an
    :class:`OverlapWarning`.
    """
    ignorable = tuple(ignorable)
    entities: list[Entity] = []
    raw_relations = []
    for lineno, line in enumerate(ann.splitlines(), 1):
        if not line.strip():
            continue
        if line.startswith("T"):
            m = _T_LINE.match(line)
            if m is None:
                raise MalformedLine(line, lineno)
            eid, label_name, offsets, surface = m.groups()
            label = parse_vertex_label(label_name)
            spans = []
            for frag in offsets.split(";"):
                a, b = frag.split()
                if int(a) >= int(b):
                    raise MalformedLine(line, lineno, "empty or inverted span")
                spans.append(Span(int(a), int(b)))
            if any(s.end > len(txt) for s in spans):
                raise OffsetMismatch(f"{doc_id} line {lineno}: offsets of {eid} exceed text length {len(txt)}")
            actual = " ".join(txt[s.start:s.end] for s in spans)
            if actual != surface:
                raise OffsetMismatch(
                    f"{doc_id} line {lineno}: {eid} surface {surface!r} but text has {actual!r}")
            try:
                entities.append(Entity(eid, label, tuple(spans), surface))
            except SynthflowError as exc:
                raise MalformedLine(line, lineno, str(exc)) from None
        elif line.startswith("R"):
            m = _R_LINE.match(line)
            if m is None:
                raise MalformedLine(line, lineno)
            rid, label_name, arg1, arg2 = m.groups()
            raw_relations.append((lineno, line, rid, parse_edge_label(label_name), arg1, arg2))
        elif line.startswith(ignorable):
            warnings.warn(f"{doc_id} line {lineno}: skipping {line.split(chr(9))[0]} annotation",
                          SkippedAnnotationLine, stacklevel=2)
        else:
            raise MalformedLine(line, lineno, "unknown annotation kind")

    ids = {e.id for e in entities}
    relations = []
    for lineno, line, rid, label, arg1, arg2 in raw_relations:
        for arg in (arg1, arg2):
            if arg not in ids:
                raise DanglingReference(f"{doc_id} line {lineno}: {rid} refers to missing entity {arg}")
        if arg1 == arg2:
            raise MalformedLine(line, lineno, "relation from an entity to itself")
        rel = Relation(rid, label, arg1, arg2)
        if flip_condition and label is EdgeLabel.CONDITION:
            rel = rel.reversed()
        relations.append(rel)

    doc = AnnotatedDocument(doc_id, txt, entities, relations)
    overlaps = doc.overlapping_pairs()
    if overlaps:
        listed = ", ".join(f"{a.id}/{b.id}" for a, b in overlaps)
        warnings.warn(f"{doc_id}: overlapping entities {listed}", OverlapWarning, stacklevel=2)
    return doc


def serialize_document(doc: AnnotatedDocument) -> tuple[str, str]:
    """Render a document as (txt, ann).  Ids are renumbered T1.., R1.."""
    new_ids = {}
    lines = []
    for i, e in enumerate(doc.sorted_entities(), 1):
        new_ids[e.id] = f"T{i}"
        offsets = ";".join(f"{s.start} {s.end}" for s in e.spans)
        lines.append(f"T{i}\t{e.label.value} {offsets}\t{e.text}")
    for i, r in enumerate(sorted(doc.relations, key=lambda r: _natural_key(r.id)), 1):
        lines.append(f"R{i}\t{r.label.value} Arg1:{new_ids[r.source]} Arg2:{new_ids[r.target]}")
    ann = "".join(line + "\n" for line in lines)
    return doc.text, ann


def annotation_signature(doc: AnnotatedDocument):
    """Id-free view of a document's annotations, for equality up to renaming."""
    ents = sorted((e.span_key, e.label.value) for e in doc.entities)
    rels = sorted(
        (r.label.value, doc.entity(r.source).span_key, doc.entity(r.source).label.value,
         doc.entity(r.target).span_key, doc.entity(r.target).label.value)
        for r in doc.relations
    )
    return doc.text, ents, rels


def read_document(ann_path, *, flip_condition: bool = False) -> AnnotatedDocument:
    ann_path = Path(ann_path)
    txt_path = ann_path.with_suffix(".txt")
    if not txt_path.exists():
        raise FileNotFoundError(f"{ann_path} has no sibling {txt_path.name}")
    with open(txt_path, encoding="utf-8", newline="") as f:
        txt = f.read()
    with open(ann_path, encoding="utf-8", newline="") as f:
        ann = f.read()
    return parse_document(txt, ann, ann_path.stem, flip_condition=flip_condition)


def write_document(doc: AnnotatedDocument, directory) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    txt, ann = serialize_document(doc)
    with open(directory / f"{doc.doc_id}.txt", "w", encoding="utf-8", newline="") as f:
        f.write(txt)
    ann_path = directory / f"{doc.doc_id}.ann"
    with open(ann_path, "w", encoding="utf-8", newline="") as f:
        f.write(ann)
    return ann_path


@dataclass
class CorpusHandle:
    documents: list[AnnotatedDocument]
    source_paths: dict[str, Path] = field(default_factory=dict)
    errors: dict[str, Exception] = field(default_factory=dict)

    def __iter__(self):
        return iter(self.documents)

    def __len__(self):
        return len(self.documents)

    def by_id(self) -> dict[str, AnnotatedDocument]:
        return {d.doc_id: d for d in self.documents}

    def subset(self, doc_ids: Iterable[str]) -> CorpusHandle:
        wanted = list(doc_ids)
        index = self.by_id()
        missing = [d for d in wanted if d not in index]
        if missing:
            raise KeyError(f"documents not in corpus: {', '.join(missing)}")
        return CorpusHandle([index[d] for d in wanted],
                            {d: self.source_paths[d] for d in wanted if d in self.source_paths})


def load_corpus(directory, *, fail_fast: bool = False, flip_condition: bool = False,
                include_unannotated: bool = True) -> CorpusHandle:
    """Load every .ann/.txt pair in ``directory`` in filename order.

    A .txt file with no .ann sibling loads as an unannotated document when
    ``include_unannotated`` is set.  Per-file failures are collected in
    ``CorpusHandle.errors`` unless ``fail_fast`` is set, in which case the
    first one is raised.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise NotADirectoryError(str(directory))
    stems = {p.stem for p in directory.glob("*.ann")}
    if include_unannotated:
        stems |= {p.stem for p in directory.glob("*.txt")}
    docs, paths, errors = [], {}, {}
    for stem in sorted(stems):
        ann_path = directory / f"{stem}.ann"
        try:
            if ann_path.exists():
                doc = read_document(ann_path, flip_condition=flip_condition)
            else:
                with open(directory / f"{stem}.txt", encoding="utf-8", newline="") as f:
                    doc = AnnotatedDocument(stem, f.read())
        except (SynthflowError, OSError, ValueError) as exc:
            if fail_fast:
                raise
            errors[str(ann_path)] = exc
            continue
        docs.append(doc)
        paths[stem] = ann_path
    return CorpusHandle(docs, paths, errors)


def load_file_list(path) -> list[str]:
    """Read a split file: one document id per line, '#' comments allowed."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return [l.strip() for l in lines if l.strip() and not l.lstrip().startswith("#")]


def require_clean(corpus: CorpusHandle) -> CorpusHandle:
    if corpus.errors:
        raise CorpusError(corpus.errors)
    return corpus


def document_to_dict(doc: AnnotatedDocument, rules: Mapping[str, str] | None = None) -> dict:
    rules = rules or {}
    rels = []
    for r in doc.relations:
        item = {"id": r.id, "label": r.label.value, "from": r.source, "to": r.target}
        if r.id in rules:
            item["rule"] = rules[r.id]
        rels.append(item)
    return {
        "doc_id": doc.doc_id,
        "text": doc.text,
        "entities": [
            {"id": e.id, "label": e.label.value, "spans": [[s.start, s.end] for s in e.spans],
             "text": e.text}
            for e in doc.sorted_entities()
        ],
        "relations": rels,
    }


def export_json(obj, rules: Mapping[str, str] | None = None) -> str:
    """Stable JSON for a document (optionally with rule attribution) or a graph."""
    if isinstance(obj, AnnotatedDocument):
        payload = document_to_dict(obj, rules)
    elif hasattr(obj, "to_dict"):
        payload = obj.to_dict()
    else:
        raise TypeError(f"cannot export {type(obj).__name__} as JSON")
    return json.dumps(payload, sort_keys=True, ensure_ascii=False, indent=2) + "\n"


def document_from_dict(payload: Mapping) -> AnnotatedDocument:
    ents = [Entity(e["id"], parse_vertex_label(e["label"]), tuple(Span(*s) for s in e["spans"]), e["text"])
            for e in payload["entities"]]
    rels = [Relation(r["id"], parse_edge_label(r["label"]), r["from"], r["to"])
            for r in payload["relations"]]
    return AnnotatedDocument(payload["doc_id"], payload["text"], ents, rels)


def sample_path(name: str) -> Path:
    """Path to a bundled sample ``.ann`` file, e.g. ``sample_path("lto")``."""
    from importlib import resources
    return Path(str(resources.files("synthflow.data").joinpath("samples").joinpath(f"{name}.ann")))


def load_sample(name: str = "lto") -> AnnotatedDocument:
    return read_document(sample_path(name))
