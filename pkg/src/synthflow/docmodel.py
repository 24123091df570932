"""Documents, labels, entities and relations.

All offsets are character offsets into the document text, as in brat
standoff files.  Every type here is frozen; build new objects instead of
mutating existing ones.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import DanglingReference, InvalidAnnotation, OffsetMismatch, UnknownLabel


class CoarseGroup(str, enum.Enum):
    MATERIAL = "Material"
    OPERATION = "Operation"
    PROPERTY = "Property"

    def __str__(self):
        return self.value


class VertexLabel(str, enum.Enum):
    MATERIAL_START = "Material-Start"
    MATERIAL_INTERMEDIUM = "Material-Intermedium"
    MATERIAL_FINAL = "Material-Final"
    MATERIAL_SOLVENT = "Material-Solvent"
    MATERIAL_OTHERS = "Material-Others"
    OPERATION = "Operation"
    PROPERTY_TIME = "Property-Time"
    PROPERTY_TEMP = "Property-Temp"
    PROPERTY_ROT = "Property-Rot"
    PROPERTY_PRESS = "Property-Press"
    PROPERTY_ATMOSPHERE = "Property-Atmosphere"
    PROPERTY_OTHERS = "Property-Others"

    def __str__(self):
        return self.value

    @property
    def coarse(self) -> CoarseGroup:
        return COARSE_OF[self]


class EdgeLabel(str, enum.Enum):
    CONDITION = "Condition"
    NEXT = "Next"
    COREFERENCE = "Coreference"

    def __str__(self):
        return self.value


COARSE_OF = {
    VertexLabel.MATERIAL_START: CoarseGroup.MATERIAL,
    VertexLabel.MATERIAL_INTERMEDIUM: CoarseGroup.MATERIAL,
    VertexLabel.MATERIAL_FINAL: CoarseGroup.MATERIAL,
    VertexLabel.MATERIAL_SOLVENT: CoarseGroup.MATERIAL,
    VertexLabel.MATERIAL_OTHERS: CoarseGroup.MATERIAL,
    VertexLabel.OPERATION: CoarseGroup.OPERATION,
    VertexLabel.PROPERTY_TIME: CoarseGroup.PROPERTY,
    VertexLabel.PROPERTY_TEMP: CoarseGroup.PROPERTY,
    VertexLabel.PROPERTY_ROT: CoarseGroup.PROPERTY,
    VertexLabel.PROPERTY_PRESS: CoarseGroup.PROPERTY,
    VertexLabel.PROPERTY_ATMOSPHERE: CoarseGroup.PROPERTY,
    VertexLabel.PROPERTY_OTHERS: CoarseGroup.PROPERTY,
}

MATERIAL_LABELS = frozenset(l for l, g in COARSE_OF.items() if g is CoarseGroup.MATERIAL)
PROPERTY_LABELS = frozenset(l for l, g in COARSE_OF.items() if g is CoarseGroup.PROPERTY)


def coarse_of(label: VertexLabel) -> CoarseGroup:
    return COARSE_OF[VertexLabel(label)]


_BY_NAME = {l.value: l for l in VertexLabel}
_BY_NAME.update({l.value: l for l in EdgeLabel})


def parse_label(name: str) -> VertexLabel | EdgeLabel:
    """Look up a vertex or edge label by its exact (case-sensitive) name."""
    try:
        return _BY_NAME[name]
    except (KeyError, TypeError):
        raise UnknownLabel(f"unknown label {name!r}") from None


def parse_vertex_label(name: str) -> VertexLabel:
    label = parse_label(name)
    if not isinstance(label, VertexLabel):
        raise UnknownLabel(f"{name!r} is an edge label, expected a vertex label")
    return label


def parse_edge_label(name: str) -> EdgeLabel:
    label = parse_label(name)
    if not isinstance(label, EdgeLabel):
        raise UnknownLabel(f"{name!r} is a vertex label, expected an edge label")
    return label


@dataclass(frozen=True, order=True)
class Span:
    start: int
    end: int

    def __post_init__(self):
        if not (0 <= self.start < self.end):
            raise InvalidAnnotation(f"invalid span [{self.start}, {self.end})")

    def __len__(self):
        return self.end - self.start

    def overlaps(self, other: Span) -> bool:
        return self.start < other.end and other.start < self.end

    def contains(self, other: Span) -> bool:
        return self.start <= other.start and other.end <= self.end


@dataclass(frozen=True)
class Entity:
    id: str
    label: VertexLabel
    spans: tuple[Span, ...]
    text: str

    def __post_init__(self):
        object.__setattr__(self, "label", VertexLabel(self.label))
        spans = tuple(s if isinstance(s, Span) else Span(*s) for s in self.spans)
        if not spans:
            raise InvalidAnnotation(f"entity {self.id} has no spans")
        for a, b in zip(spans, spans[1:]):
            if b.start < a.end:
                raise InvalidAnnotation(f"entity {self.id}: fragments unsorted or overlapping")
        object.__setattr__(self, "spans", spans)

    @classmethod
    def from_text(cls, id: str, label, spans: Iterable, doc_text: str) -> Entity:
        """Build an entity whose surface text is read off ``doc_text``."""
        spans = tuple(s if isinstance(s, Span) else Span(*s) for s in spans)
        return cls(id, label, spans, " ".join(doc_text[s.start:s.end] for s in spans))

    @property
    def start(self) -> int:
        return self.spans[0].start

    @property
    def end(self) -> int:
        return self.spans[-1].end

    @property
    def first_span(self) -> Span:
        return self.spans[0]

    @property
    def coarse(self) -> CoarseGroup:
        return self.label.coarse

    @property
    def span_key(self) -> tuple[tuple[int, int], ...]:
        return tuple((s.start, s.end) for s in self.spans)

    def overlaps(self, other: Entity) -> bool:
        return any(a.overlaps(b) for a in self.spans for b in other.spans)


@dataclass(frozen=True)
class Relation:
    id: str
    label: EdgeLabel
    source: str
    target: str

    def __post_init__(self):
        object.__setattr__(self, "label", EdgeLabel(self.label))
        if self.source == self.target:
            raise InvalidAnnotation(f"relation {self.id} is a self-loop on {self.source}")

    def reversed(self) -> Relation:
        return Relation(self.id, self.label, self.target, self.source)


@dataclass(frozen=True)
class AnnotatedDocument:
    doc_id: str
    text: str
    entities: tuple[Entity, ...] = ()
    relations: tuple[Relation, ...] = ()
    _index: dict = field(default=None, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "entities", tuple(self.entities))
        object.__setattr__(self, "relations", tuple(self.relations))
        index = {}
        n = len(self.text)
        for e in self.entities:
            if e.id in index:
                raise InvalidAnnotation(f"{self.doc_id}: duplicate entity id {e.id}")
            if e.end > n:
                raise InvalidAnnotation(f"{self.doc_id}: entity {e.id} extends past end of text")
            surface = " ".join(self.text[sp.start:sp.end] for sp in e.spans)
            if surface != e.text:
                raise OffsetMismatch(
                    f"{self.doc_id}: entity {e.id} text {e.text!r} != {surface!r} at its offsets"
                )
            index[e.id] = e
        seen = set()
        for r in self.relations:
            if r.id in seen:
                raise InvalidAnnotation(f"{self.doc_id}: duplicate relation id {r.id}")
            seen.add(r.id)
            for end in (r.source, r.target):
                if end not in index:
                    raise DanglingReference(f"{self.doc_id}: relation {r.id} refers to missing entity {end}")
        object.__setattr__(self, "_index", index)

    def entity(self, entity_id: str) -> Entity:
        try:
            return self._index[entity_id]
        except KeyError:
            raise DanglingReference(f"{self.doc_id}: no entity {entity_id}") from None

    def has_entity(self, entity_id: str) -> bool:
        return entity_id in self._index

    def with_annotations(self, entities=None, relations=None) -> AnnotatedDocument:
        return AnnotatedDocument(
            self.doc_id,
            self.text,
            self.entities if entities is None else entities,
            self.relations if relations is None else relations,
        )

    def sorted_entities(self) -> list[Entity]:
        return sorted(self.entities, key=lambda e: (e.start, e.end, e.id))

    def overlapping_pairs(self) -> list[tuple[Entity, Entity]]:
        ents = self.sorted_entities()
        pairs = []
        for i, a in enumerate(ents):
            for b in ents[i + 1:]:
                if b.start >= a.end:
                    break
                if a.overlaps(b):
                    pairs.append((a, b))
        return pairs


def keep_longest(entities: Sequence[Entity]) -> list[Entity]:
    """Resolve overlaps by keeping the longest entity (leftmost on ties)."""
    def extent(e):
        return sum(len(s) for s in e.spans)

    kept: list[Entity] = []
    for e in sorted(entities, key=lambda e: (-extent(e), e.start, e.id)):
        if not any(e.overlaps(k) for k in kept):
            kept.append(e)
    return sorted(kept, key=lambda e: (e.start, e.end, e.id))
