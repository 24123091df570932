"""Heuristic relation extraction over a linear sequence of tagged phrases.

Five rules connect the phrases of a synthesis paragraph:

``O-O``
    each Operation is linked (Next) to the following Operation.
``M-O``
    each starting material or solvent is linked (Next) to the Operation it
    feeds: the Operation in the bracket group right after it, else the
    closest Operation in its sentence, else the closest in the document.
``O-M``
    the last Operation is linked (Next) to every final material.
``Po-OM``
    a "Property-Others" phrase qualifies (Condition) the closest preceding
    starting material when it sits in brackets, otherwise the closest
    material or Operation.
``P-O``
    time/temperature/rotation/pressure/atmosphere phrases qualify
    (Condition) the closest preceding Operation.

Distance is the number of tokens strictly between two phrases; on a tie the
earlier candidate wins.  Operations inside brackets are kept out of the
main O-O chain and out of M-O searches.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .docmodel import (MATERIAL_LABELS, PROPERTY_LABELS, AnnotatedDocument, CoarseGroup,
                       EdgeLabel, Entity, Relation, VertexLabel, keep_longest)
from .errors import OverlappingEntities, UnbalancedBrackets
from .textprep import TokenizedText, analyze, range_distance

O_O, M_O, O_M, PO_OM, P_O = "O-O", "M-O", "O-M", "Po-OM", "P-O"
RULES = (O_O, M_O, O_M, PO_OM, P_O)
BRACKET_CHAIN_MODES = ("link", "skip", "inline")

M_O_SOURCES = frozenset({VertexLabel.MATERIAL_START, VertexLabel.MATERIAL_SOLVENT})
P_O_SOURCES = PROPERTY_LABELS - {VertexLabel.PROPERTY_OTHERS}


@dataclass(frozen=True)
class RuleConfig:
    enabled_rules: frozenset = frozenset(RULES)
    use_material_sublabels: bool = True
    use_property_sublabels: bool = True
    # how bracketed Operations join the O-O chain
    bracket_chain: str = "link"
    # whether P-O may attach a property to a bracketed Operation
    bracketed_p_o_hosts: bool = True

    def __post_init__(self):
        object.__setattr__(self, "enabled_rules", frozenset(self.enabled_rules))
        unknown = self.enabled_rules - set(RULES)
        if unknown:
            raise ValueError(f"unknown rules: {sorted(unknown)}")
        if self.bracket_chain not in BRACKET_CHAIN_MODES:
            raise ValueError(f"bracket_chain must be one of {BRACKET_CHAIN_MODES}")

    @classmethod
    def preset(cls, name: str, **overrides) -> RuleConfig:
        try:
            base = PRESETS[name]
        except KeyError:
            raise ValueError(f"unknown ablation preset {name!r}; choose from {sorted(PRESETS)}") from None
        return cls(**{**base, **overrides})

    def rule_active(self, rule: str) -> bool:
        if rule not in self.enabled_rules:
            return False
        if rule == O_M and not self.use_material_sublabels:
            return False
        if rule == P_O and not self.use_property_sublabels:
            return False
        return True


PRESETS = {
    "full": {},
    "no-mat-sub": {"use_material_sublabels": False},
    "no-prop-sub": {"use_property_sublabels": False},
    "no-sub": {"use_material_sublabels": False, "use_property_sublabels": False},
}


@dataclass(frozen=True)
class PredictedRelation:
    relation: Relation
    rule: str

    @property
    def label(self) -> EdgeLabel:
        return self.relation.label

    @property
    def source(self) -> str:
        return self.relation.source

    @property
    def target(self) -> str:
        return self.relation.target


@dataclass(frozen=True)
class Diagnostic:
    rule: str
    entity_id: str
    reason: str

    def __str__(self):
        return f"{self.rule}: {self.entity_id} left unconnected ({self.reason})"


class Layout:
    """Entities placed on the token line of one document.

    Holds each entity's inclusive token range, sentence id and bracket
    status.  Entities must be token-disjoint.
    """

    def __init__(self, doc: AnnotatedDocument | str, entities: Sequence[Entity] | None = None,
                 tokens: TokenizedText | None = None):
        text = doc if isinstance(doc, str) else doc.text
        if entities is None:
            entities = doc.entities
        self.tokens = tokens if tokens is not None else analyze(text)
        self.range = {e.id: self.tokens.token_range(e) for e in entities}
        self.entities = sorted(entities, key=lambda e: (self.range[e.id], e.id))
        for a, b in zip(self.entities, self.entities[1:]):
            if self.range[b.id][0] <= self.range[a.id][1]:
                raise OverlappingEntities(f"entities {a.id} and {b.id} share tokens")
        self.sentence = {e.id: self.tokens.tokens[self.range[e.id][0]].sentence_index
                         for e in self.entities}
        self.groups = _bracket_groups(self.tokens)
        self.bracketed = {e.id: self._in_group(e) is not None for e in self.entities}

    def _in_group(self, e: Entity):
        first, last = self.range[e.id]
        best = None
        for open_, close in self.groups:
            if open_ < first and last < close:
                if best is None or open_ > best[0]:
                    best = (open_, close)
        return best

    def of(self, *labels) -> list[Entity]:
        wanted = set(labels)
        return [e for e in self.entities if e.label in wanted]

    def operations(self) -> list[Entity]:
        return self.of(VertexLabel.OPERATION)

    def distance(self, a: Entity, b: Entity) -> int:
        return range_distance(self.range[a.id], self.range[b.id])

    def precedes(self, a: Entity, b: Entity) -> bool:
        return self.range[a.id][0] < self.range[b.id][0]

    def closest(self, target: Entity, candidates: Iterable[Entity]) -> Entity | None:
        """Closest candidate by token distance; the earlier one on a tie."""
        best, best_key = None, None
        for c in candidates:
            if c.id == target.id:
                continue
            key = (self.distance(target, c), 0 if self.precedes(c, target) else 1)
            if best_key is None or key < best_key:
                best, best_key = c, key
        return best

    def closest_preceding(self, target: Entity, candidates: Iterable[Entity]) -> Entity | None:
        before = [c for c in candidates if self.precedes(c, target)]
        return max(before, key=lambda c: self.range[c.id][0], default=None)


def _bracket_groups(tokens: TokenizedText) -> list[tuple[int, int]]:
    groups = []
    stack: list[int] = []
    sentence = None
    unbalanced = False
    for tok in tokens.tokens:
        if tok.sentence_index != sentence:
            unbalanced |= bool(stack)
            stack = []
            sentence = tok.sentence_index
        if tok.text == "(":
            stack.append(tok.index)
        elif tok.text == ")":
            if stack:
                groups.append((stack.pop(), tok.index))
            else:
                unbalanced = True
    if stack or unbalanced:
        warnings.warn("unbalanced brackets; unmatched ones are ignored", UnbalancedBrackets, stacklevel=3)
    return sorted(groups)


def _layout(entities, doc, layout):
    if layout is not None:
        return layout
    return Layout(doc, list(entities))


def is_bracketed(entity: Entity, doc: AnnotatedDocument | str, layout: Layout | None = None) -> bool:
    """True iff the entity sits strictly inside a matched ( ) pair within one sentence."""
    if layout is None:
        tokens = analyze(doc if isinstance(doc, str) else doc.text)
        first, last = tokens.token_range(entity)
        return any(o < first and last < c for o, c in _bracket_groups(tokens))
    return layout.bracketed[entity.id]


def _edge(label, source, target, rule):
    return PredictedRelation(Relation("", label, source.id, target.id), rule)


def rule_o_o(entities, doc, config: RuleConfig | None = None, *, layout: Layout | None = None,
             diagnostics: list | None = None) -> list[PredictedRelation]:
    config = config or RuleConfig()
    lay = _layout(entities, doc, layout)
    ops = lay.operations()
    if config.bracket_chain == "inline":
        main = ops
    else:
        main = [o for o in ops if not lay.bracketed[o.id]]
    out = [_edge(EdgeLabel.NEXT, a, b, O_O) for a, b in zip(main, main[1:])]
    if config.bracket_chain == "link":
        for op in ops:
            if not lay.bracketed[op.id]:
                continue
            following = [m for m in main if lay.precedes(op, m)]
            if following:
                out.append(_edge(EdgeLabel.NEXT, op, following[0], O_O))
    return out


def _op_after_bracket(lay: Layout, material: Entity):
    nxt = lay.range[material.id][1] + 1
    for open_, close in lay.groups:
        if open_ == nxt:
            inside = [o for o in lay.operations()
                      if open_ < lay.range[o.id][0] and lay.range[o.id][1] < close]
            return inside[0] if inside else None
    return None


def rule_m_o(entities, doc, config: RuleConfig | None = None, *, layout: Layout | None = None,
             diagnostics: list | None = None) -> list[PredictedRelation]:
    config = config or RuleConfig()
    lay = _layout(entities, doc, layout)
    sources = M_O_SOURCES if config.use_material_sublabels else MATERIAL_LABELS
    plain_ops = [o for o in lay.operations() if not lay.bracketed[o.id]]
    out = []
    for mat in lay.of(*sources):
        op = _op_after_bracket(lay, mat)
        if op is None:
            same = [o for o in plain_ops if lay.sentence[o.id] == lay.sentence[mat.id]]
            op = lay.closest(mat, same) or lay.closest(mat, plain_ops)
        if op is None:
            if diagnostics is not None:
                diagnostics.append(Diagnostic(M_O, mat.id, "no operation in document"))
            continue
        out.append(_edge(EdgeLabel.NEXT, mat, op, M_O))
    return out


def final_operation(lay: Layout, config: RuleConfig) -> Entity | None:
    ops = lay.operations()
    if config.bracket_chain != "inline":
        ops = [o for o in ops if not lay.bracketed[o.id]]
    return ops[-1] if ops else None


def rule_o_m(entities, doc, config: RuleConfig | None = None, *, layout: Layout | None = None,
             diagnostics: list | None = None) -> list[PredictedRelation]:
    config = config or RuleConfig()
    if not config.use_material_sublabels:
        return []
    lay = _layout(entities, doc, layout)
    finals = lay.of(VertexLabel.MATERIAL_FINAL)
    last = final_operation(lay, config)
    if last is None:
        if diagnostics is not None:
            diagnostics.extend(Diagnostic(O_M, m.id, "no operation in document") for m in finals)
        return []
    return [_edge(EdgeLabel.NEXT, last, m, O_M) for m in finals]


def rule_po_om(entities, doc, config: RuleConfig | None = None, *, layout: Layout | None = None,
               diagnostics: list | None = None) -> list[PredictedRelation]:
    config = config or RuleConfig()
    lay = _layout(entities, doc, layout)
    sources = {VertexLabel.PROPERTY_OTHERS} if config.use_property_sublabels else PROPERTY_LABELS
    hosts = [e for e in lay.entities if e.coarse is not CoarseGroup.PROPERTY]
    starts = lay.of(VertexLabel.MATERIAL_START)
    out = []
    for prop in lay.of(*sources):
        host = None
        if lay.bracketed[prop.id]:
            host = lay.closest_preceding(prop, starts)
        if host is None:
            same = [h for h in hosts if lay.sentence[h.id] == lay.sentence[prop.id]]
            host = lay.closest(prop, same) or lay.closest(prop, hosts)
        if host is None:
            if diagnostics is not None:
                diagnostics.append(Diagnostic(PO_OM, prop.id, "no material or operation to qualify"))
            continue
        out.append(_edge(EdgeLabel.CONDITION, host, prop, PO_OM))
    return out


def rule_p_o(entities, doc, config: RuleConfig | None = None, *, layout: Layout | None = None,
             diagnostics: list | None = None) -> list[PredictedRelation]:
    config = config or RuleConfig()
    if not config.use_property_sublabels:
        return []
    lay = _layout(entities, doc, layout)
    ops = lay.operations()
    if not config.bracketed_p_o_hosts:
        ops = [o for o in ops if not lay.bracketed[o.id]]
    out = []
    for prop in lay.of(*P_O_SOURCES):
        op = lay.closest_preceding(prop, ops)
        if op is None:
            if diagnostics is not None:
                diagnostics.append(Diagnostic(P_O, prop.id, "no preceding operation"))
            continue
        out.append(_edge(EdgeLabel.CONDITION, op, prop, P_O))
    return out


RULE_FUNCTIONS = {O_O: rule_o_o, M_O: rule_m_o, O_M: rule_o_m, PO_OM: rule_po_om, P_O: rule_p_o}


@dataclass
class Extraction:
    doc: AnnotatedDocument
    predictions: list[PredictedRelation]
    diagnostics: list[Diagnostic] = field(default_factory=list)

    @property
    def relations(self) -> list[Relation]:
        return [p.relation for p in self.predictions]

    @property
    def rules(self) -> dict[str, str]:
        return {p.relation.id: p.rule for p in self.predictions}

    def document(self) -> AnnotatedDocument:
        """The input document with the extracted relations as its relation layer."""
        return self.doc.with_annotations(relations=self.relations)


def extract(doc: AnnotatedDocument, entities: Sequence[Entity] | None = None,
            config: RuleConfig | None = None, *, resolve_overlaps: bool = False,
            tokens: TokenizedText | None = None) -> Extraction:
    """Run the enabled rules in the order O-O, M-O, O-M, Po-OM, P-O.

    Duplicate (source, target, label) edges keep the attribution of the rule
    that produced them first.  Relation ids are assigned R1, R2, ... in
    output order.
    """
    config = config or RuleConfig()
    entities = list(doc.entities if entities is None else entities)
    if resolve_overlaps:
        entities = keep_longest(entities)
    lay = Layout(doc.text, entities, tokens)
    diagnostics: list[Diagnostic] = []
    seen = set()
    predictions = []
    for rule in RULES:
        if not config.rule_active(rule):
            continue
        for p in RULE_FUNCTIONS[rule](entities, doc, config, layout=lay, diagnostics=diagnostics):
            key = (p.source, p.target, p.label)
            if key in seen:
                continue
            seen.add(key)
            rel = Relation(f"R{len(predictions) + 1}", p.label, p.source, p.target)
            predictions.append(PredictedRelation(rel, p.rule))
    out_doc = doc if entities == list(doc.entities) else doc.with_annotations(entities=entities, relations=())
    return Extraction(out_doc.with_annotations(relations=()), predictions, diagnostics)
