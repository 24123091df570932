import pytest

from synthflow import (AnnotatedDocument, CoarseGroup, EdgeLabel, Entity, Relation, Span,
                       VertexLabel, coarse_of, keep_longest, parse_label)
from synthflow.errors import DanglingReference, InvalidAnnotation, OffsetMismatch, UnknownLabel


@pytest.mark.parametrize("label, group", [
    (VertexLabel.MATERIAL_SOLVENT, CoarseGroup.MATERIAL),
    (VertexLabel.OPERATION, CoarseGroup.OPERATION),
    (VertexLabel.PROPERTY_ROT, CoarseGroup.PROPERTY),
])
def test_coarse_of(label, group):
    assert coarse_of(label) is group
    assert label.coarse is group


def test_label_inventory_sizes():
    groups = [coarse_of(l) for l in VertexLabel]
    assert len(groups) == 12
    assert groups.count(CoarseGroup.MATERIAL) == 5
    assert groups.count(CoarseGroup.OPERATION) == 1
    assert groups.count(CoarseGroup.PROPERTY) == 6
    assert len(EdgeLabel) == 3


def test_parse_label():
    assert parse_label("Property-Atmosphere") is VertexLabel.PROPERTY_ATMOSPHERE
    assert parse_label("Coreference") is EdgeLabel.COREFERENCE
    with pytest.raises(UnknownLabel):
        parse_label("Solvent")
    with pytest.raises(UnknownLabel):
        parse_label("operation")


def test_span_validation():
    with pytest.raises(InvalidAnnotation):
        Span(3, 3)
    with pytest.raises(InvalidAnnotation):
        Span(-1, 2)
    assert Span(0, 4).overlaps(Span(3, 5))
    assert not Span(0, 3).overlaps(Span(3, 5))


def test_entity_fragments_must_be_ordered():
    with pytest.raises(InvalidAnnotation):
        Entity("T1", VertexLabel.OPERATION, (Span(5, 8), Span(0, 2)), "x")


def test_document_checks_surface_text():
    text = "mixed well"
    with pytest.raises(OffsetMismatch):
        AnnotatedDocument("d", text, [Entity("T1", VertexLabel.OPERATION, (Span(0, 5),), "mixes")])
    e = Entity.from_text("T1", VertexLabel.OPERATION, [Span(0, 5)], text)
    with pytest.raises(DanglingReference):
        AnnotatedDocument("d", text, [e], [Relation("R1", EdgeLabel.NEXT, "T1", "T9")])


def test_relation_rejects_self_loop():
    with pytest.raises(InvalidAnnotation):
        Relation("R1", EdgeLabel.NEXT, "T1", "T1")


def test_keep_longest():
    text = "ball-milled powder"
    a = Entity.from_text("T1", VertexLabel.OPERATION, [Span(0, 11)], text)
    b = Entity.from_text("T2", VertexLabel.OPERATION, [Span(5, 11)], text)
    c = Entity.from_text("T3", VertexLabel.MATERIAL_OTHERS, [Span(12, 18)], text)
    assert [e.id for e in keep_longest([b, c, a])] == ["T1", "T3"]
