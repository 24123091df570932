"""Evaluation metrics.

* exact-match entity precision/recall/F1 in a fine (12 labels) or coarse
  (3 groups) setting, micro-pooled per coarse group and macro-averaged over
  the three groups;
* relation F1 for Condition and Next where coreferent mentions count as
  the same phrase;
* per-rule coverage (share of predicted edges) and accuracy;
* Cohen's kappa between two annotators for vertices and edges;
* corpus statistics.

Every ratio uses the 0/0 -> 0 convention.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .docmodel import (COARSE_OF, AnnotatedDocument, CoarseGroup, EdgeLabel, Entity,
                       VertexLabel)
from .errors import DanglingReference, DocumentMismatch, TextMismatch
from .graph import merge_coreference
from .relext import RULES, PredictedRelation
from .textprep import analyze

COARSE_ORDER = (CoarseGroup.MATERIAL, CoarseGroup.OPERATION, CoarseGroup.PROPERTY)
SCORED_EDGES = (EdgeLabel.CONDITION, EdgeLabel.NEXT)
NONE = "NONE"


def _ratio(num, den) -> float:
    return num / den if den else 0.0


@dataclass(frozen=True)
class PRF:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def precision(self) -> float:
        return _ratio(self.tp, self.tp + self.fp)

    @property
    def recall(self) -> float:
        return _ratio(self.tp, self.tp + self.fn)

    @property
    def f1(self) -> float:
        # equals the harmonic mean of P and R, and is 0 when either is 0
        return _ratio(2 * self.tp, 2 * self.tp + self.fp + self.fn)

    def __add__(self, other: PRF) -> PRF:
        return PRF(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)

    def to_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn, "precision": self.precision,
                "recall": self.recall, "f1": self.f1}


@dataclass
class EvalReport:
    setting: str
    per_type: dict[str, PRF]
    per_group: dict[str, PRF]

    @property
    def macro_f1(self) -> float:
        return sum(p.f1 for p in self.per_group.values()) / len(self.per_group) if self.per_group else 0.0

    @property
    def macro_precision(self) -> float:
        return sum(p.precision for p in self.per_group.values()) / len(self.per_group) if self.per_group else 0.0

    @property
    def macro_recall(self) -> float:
        return sum(p.recall for p in self.per_group.values()) / len(self.per_group) if self.per_group else 0.0

    def to_dict(self) -> dict:
        return {
            "setting": self.setting,
            "per_type": {k: v.to_dict() for k, v in self.per_type.items()},
            "per_group": {k: v.to_dict() for k, v in self.per_group.items()},
            "macro": {"precision": self.macro_precision, "recall": self.macro_recall,
                      "f1": self.macro_f1},
        }

    def format_table(self) -> str:
        rows = []
        if self.per_type.keys() != self.per_group.keys():
            rows += [(k, v) for k, v in self.per_type.items()]
        rows += [(k, v) for k, v in self.per_group.items()]
        body = [(k, f"{v.f1:.3f}", f"{v.precision:.3f}", f"{v.recall:.3f}", str(v.tp), str(v.fp), str(v.fn))
                for k, v in rows]
        body.append(("ALL", f"{self.macro_f1:.3f}", f"{self.macro_precision:.3f}",
                     f"{self.macro_recall:.3f}", "", "", ""))
        return format_table(("Type", "F1", "P", "R", "TP", "FP", "FN"), body,
                            title=f"[{self.setting}]")


def format_table(headers, rows, title: str | None = None) -> str:
    rows = [tuple(map(str, r)) for r in rows]
    widths = [max(len(str(h)), *(len(r[i]) for r in rows)) if rows else len(str(h))
              for i, h in enumerate(headers)]

    def fmt(cells):
        first = str(cells[0]).ljust(widths[0])
        rest = [str(c).rjust(w) for c, w in zip(cells[1:], widths[1:])]
        return "  ".join([first, *rest]).rstrip()

    lines = [title] if title else []
    lines.append(fmt(headers))
    lines.append("  ".join("-" * w for w in widths))
    lines.extend(fmt(r) for r in rows)
    return "\n".join(lines) + "\n"


def _as_docs(x) -> list[AnnotatedDocument]:
    if isinstance(x, AnnotatedDocument):
        return [x]
    return list(x)


def _pair_docs(gold, pred, error=DocumentMismatch):
    gold, pred = _as_docs(gold), _as_docs(pred)
    if len(gold) == 1 and len(pred) == 1:
        pairs = [(gold[0], pred[0])]
    else:
        pindex = {d.doc_id: d for d in pred}
        missing = [g.doc_id for g in gold if g.doc_id not in pindex]
        if missing:
            raise error(f"no prediction for documents: {', '.join(missing)}")
        pairs = [(g, pindex[g.doc_id]) for g in gold]
    for g, p in pairs:
        if g.text != p.text:
            raise error(f"document {g.doc_id}: gold and predicted texts differ")
    return pairs


def entity_prf(gold, pred, setting: str = "fine") -> EvalReport:
    """Exact-match entity scores.

    ``gold`` and ``pred`` are documents (or equal-length lists of documents
    paired by ``doc_id``).  A prediction is correct when some unmatched gold
    entity has the same span set and the same fine label (``fine``) or the
    same coarse group (``coarse``).
    """
    if setting not in ("fine", "coarse"):
        raise ValueError("setting must be 'fine' or 'coarse'")

    def key(e: Entity):
        return e.label.value if setting == "fine" else e.coarse.value

    g_count, p_count = Counter(), Counter()
    for g, p in _pair_docs(gold, pred):
        g_count.update((g.doc_id, e.span_key, key(e)) for e in g.entities)
        p_count.update((g.doc_id, e.span_key, key(e)) for e in p.entities)

    tp, gold_n, pred_n = Counter(), Counter(), Counter()
    for k, n in g_count.items():
        gold_n[k[2]] += n
        tp[k[2]] += min(n, p_count.get(k, 0))
    for k, n in p_count.items():
        pred_n[k[2]] += n

    types = [l.value for l in VertexLabel] if setting == "fine" else [c.value for c in COARSE_ORDER]
    per_type = {t: PRF(tp[t], pred_n[t] - tp[t], gold_n[t] - tp[t]) for t in types}
    if setting == "fine":
        per_group = {c.value: sum((per_type[l.value] for l in VertexLabel if COARSE_OF[l] is c), PRF())
                     for c in COARSE_ORDER}
    else:
        per_group = dict(per_type)
    return EvalReport(setting, per_type, per_group)


def _resolver(gold: AnnotatedDocument, pred_doc: AnnotatedDocument | None):
    """Map prediction-side entity ids to gold entity ids."""
    if pred_doc is None:
        def resolve(eid):
            if not gold.has_entity(eid):
                raise DanglingReference(f"{gold.doc_id}: predicted relation refers to unknown entity {eid}")
            return eid
        return resolve
    by_span = {}
    for e in sorted(gold.entities, key=lambda e: e.id):
        by_span.setdefault(e.span_key, e.id)

    def resolve(eid):
        return by_span.get(pred_doc.entity(eid).span_key)
    return resolve


def _gold_edges(gold: AnnotatedDocument, clusters):
    edges = {l: set() for l in SCORED_EDGES}
    for r in gold.relations:
        if r.label in edges:
            edges[r.label].add((gold.doc_id, clusters[r.source], clusters[r.target]))
    return edges


def _lift(resolve, clusters, doc_id, rel):
    a, b = resolve(rel.source), resolve(rel.target)
    ca = clusters[a] if a is not None else ("unmatched", rel.source)
    cb = clusters[b] if b is not None else ("unmatched", rel.target)
    return (doc_id, ca, cb)


def _pred_items(gold, pred):
    """Yield (gold_doc, resolver, relations) for the supported prediction shapes."""
    if isinstance(gold, AnnotatedDocument) and not isinstance(pred, (AnnotatedDocument, Mapping)):
        pred = list(pred)
        if not pred or not isinstance(pred[0], AnnotatedDocument):
            yield gold, _resolver(gold, None), pred
            return
    if isinstance(pred, Mapping):
        for g in _as_docs(gold):
            yield g, _resolver(g, None), list(pred.get(g.doc_id, ()))
        return
    for g, p in _pair_docs(gold, pred):
        yield g, _resolver(g, p), list(p.relations)


def relation_prf(gold, pred) -> EvalReport:
    """Condition/Next scores with coreferent mentions merged.

    ``pred`` is either a list of relations (or predictions) over the gold
    document's entity ids, a mapping ``doc_id -> relations``, or predicted
    documents whose entities are matched to gold ones by span.  Edges are
    compared as sets of (cluster, cluster, label), so duplicates that become
    identical after merging count once.
    """
    gold_sets = {l: set() for l in SCORED_EDGES}
    pred_sets = {l: set() for l in SCORED_EDGES}
    for g, resolve, rels in _pred_items(gold, pred):
        clusters = merge_coreference(g.entities, g.relations)
        for l, s in _gold_edges(g, clusters).items():
            gold_sets[l] |= s
        for item in rels:
            rel = getattr(item, "relation", item)
            if rel.label in pred_sets:
                pred_sets[rel.label].add(_lift(resolve, clusters, g.doc_id, rel))
    per = {}
    for l in SCORED_EDGES:
        tp = len(gold_sets[l] & pred_sets[l])
        per[l.value] = PRF(tp, len(pred_sets[l]) - tp, len(gold_sets[l]) - tp)
    return EvalReport("relations", per, dict(per))


@dataclass
class RuleStats:
    counts: dict[str, int] = field(default_factory=lambda: {r: 0 for r in RULES})
    correct: dict[str, int] = field(default_factory=lambda: {r: 0 for r in RULES})

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    @property
    def coverage(self) -> dict[str, float]:
        return {r: _ratio(n, self.total) for r, n in self.counts.items()}

    @property
    def accuracy(self) -> dict[str, float]:
        return {r: _ratio(self.correct[r], n) for r, n in self.counts.items()}

    def add(self, gold: AnnotatedDocument, predictions: Iterable[PredictedRelation]) -> RuleStats:
        clusters = merge_coreference(gold.entities, gold.relations)
        gold_edges = _gold_edges(gold, clusters)
        resolve = _resolver(gold, None)
        for p in predictions:
            self.counts.setdefault(p.rule, 0)
            self.correct.setdefault(p.rule, 0)
            self.counts[p.rule] += 1
            lifted = _lift(resolve, clusters, gold.doc_id, p.relation)
            if lifted in gold_edges.get(p.relation.label, ()):
                self.correct[p.rule] += 1
        return self

    def to_dict(self) -> dict:
        return {r: {"edges": self.counts[r], "correct": self.correct[r],
                    "coverage": self.coverage[r], "accuracy": self.accuracy[r]}
                for r in self.counts}

    def format_table(self) -> str:
        rows = [(r, f"{self.coverage[r]:.3f}", f"{self.accuracy[r]:.3f}", self.counts[r], self.correct[r])
                for r in self.counts]
        return format_table(("Rule", "Coverage", "Accuracy", "Edges", "Correct"), rows)


def rule_stats(gold: AnnotatedDocument, predictions: Iterable[PredictedRelation]) -> RuleStats:
    return RuleStats().add(gold, predictions)


def corpus_rule_stats(pairs: Iterable[tuple[AnnotatedDocument, Iterable[PredictedRelation]]]) -> RuleStats:
    stats = RuleStats()
    for gold, preds in pairs:
        stats.add(gold, preds)
    return stats


def confusion_kappa(matrix: Sequence[Sequence[int]]) -> float:
    """Cohen's kappa from a square confusion matrix of counts."""
    n = sum(map(sum, matrix))
    if n == 0:
        return 1.0
    diag = sum(matrix[i][i] for i in range(len(matrix)))
    rows = [sum(r) for r in matrix]
    cols = [sum(matrix[i][j] for i in range(len(matrix))) for j in range(len(matrix))]
    chance = sum(r * c for r, c in zip(rows, cols))
    # (po - pe) / (1 - pe) with both ratios scaled by n**2 to stay in integers
    den = n * n - chance
    if den == 0:
        return 1.0 if diag == n else 0.0
    return (n * diag - chance) / den


def kappa(labels_a: Sequence, labels_b: Sequence) -> float:
    if len(labels_a) != len(labels_b):
        raise ValueError("label sequences differ in length")
    cats = sorted(set(labels_a) | set(labels_b), key=str)
    idx = {c: i for i, c in enumerate(cats)}
    m = [[0] * len(cats) for _ in cats]
    for a, b in zip(labels_a, labels_b):
        m[idx[a]][idx[b]] += 1
    return confusion_kappa(m)


def two_way_kappa(labels_a: Sequence, labels_b: Sequence) -> float:
    """Mean of the kappas with either annotator taken as gold."""
    return (kappa(labels_a, labels_b) + kappa(labels_b, labels_a)) / 2


@dataclass(frozen=True)
class KappaReport:
    vertices_all: float
    vertices_type: float
    edges_all: float
    edges_type: float
    n_items: Mapping[str, int] = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict:
        return {"vertices_all": self.vertices_all, "vertices_type": self.vertices_type,
                "edges_all": self.edges_all, "edges_type": self.edges_type,
                "items": dict(self.n_items)}

    def format_table(self, name: str = "A-B") -> str:
        return format_table(
            ("Annotators", "Vertices All", "Vertices Type", "Edges All", "Edges Type"),
            [(name, f"{self.vertices_all:.3f}", f"{self.vertices_type:.3f}",
              f"{self.edges_all:.3f}", f"{self.edges_type:.3f}")])


def _vertex_map(doc):
    out = {}
    for e in sorted(doc.entities, key=lambda e: (e.span_key, e.id)):
        out.setdefault(e.span_key, e.label.value)
    return out


def _edge_map(doc, shared):
    out = {}
    for r in sorted(doc.relations, key=lambda r: r.id):
        a, b = doc.entity(r.source).span_key, doc.entity(r.target).span_key
        if a in shared and b in shared:
            out.setdefault((a, b), r.label.value)
    return out


def cohen_kappa(ann_a, ann_b) -> KappaReport:
    """Agreement between two annotators over the same documents.

    Vertices are identified by their exact span set.  The "all" scores run
    over the union of items either annotator marked, with ``NONE`` for a
    missing annotation; the "type" scores run over items both marked.  Edge
    scores only consider pairs of vertices both annotators marked.
    """
    va_all, vb_all, va_t, vb_t = [], [], [], []
    ea_all, eb_all, ea_t, eb_t = [], [], [], []
    for a, b in _pair_docs(ann_a, ann_b, error=TextMismatch):
        ma, mb = _vertex_map(a), _vertex_map(b)
        for k in sorted(ma.keys() | mb.keys()):
            va_all.append(ma.get(k, NONE))
            vb_all.append(mb.get(k, NONE))
        shared = ma.keys() & mb.keys()
        for k in sorted(shared):
            va_t.append(ma[k])
            vb_t.append(mb[k])
        xa, xb = _edge_map(a, shared), _edge_map(b, shared)
        for k in sorted(xa.keys() | xb.keys()):
            ea_all.append(xa.get(k, NONE))
            eb_all.append(xb.get(k, NONE))
        for k in sorted(xa.keys() & xb.keys()):
            ea_t.append(xa[k])
            eb_t.append(xb[k])
    return KappaReport(
        two_way_kappa(va_all, vb_all), two_way_kappa(va_t, vb_t),
        two_way_kappa(ea_all, eb_all), two_way_kappa(ea_t, eb_t),
        {"vertices_all": len(va_all), "vertices_type": len(va_t),
         "edges_all": len(ea_all), "edges_type": len(ea_t)},
    )


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass
class CorpusStats:
    documents: int = 0
    sentences: int = 0
    tokens: int = 0
    entities: int = 0
    vertex_counts: dict[str, int] = field(default_factory=lambda: {l.value: 0 for l in VertexLabel})
    edge_counts: dict[str, int] = field(default_factory=lambda: {l.value: 0 for l in EdgeLabel})

    vertex_types = len(VertexLabel)
    edge_types = len(EdgeLabel)

    def _avg(self, n):
        return _round_half_up(n / self.documents) if self.documents else 0

    @property
    def avg_sentences(self) -> int:
        return self._avg(self.sentences)

    @property
    def avg_tokens(self) -> int:
        return self._avg(self.tokens)

    @property
    def avg_entities(self) -> int:
        return self._avg(self.entities)

    def group_counts(self) -> dict[str, int]:
        out = {c.value: 0 for c in COARSE_ORDER}
        for l in VertexLabel:
            out[COARSE_OF[l].value] += self.vertex_counts[l.value]
        return out

    def summary_rows(self):
        return [
            ("Documents", self.documents), ("Sentences", self.sentences), ("Tokens", self.tokens),
            ("Entities", self.entities), ("Vertex types", self.vertex_types),
            ("Edge types", self.edge_types), ("Avg. sentences/document", self.avg_sentences),
            ("Avg. tokens/document", self.avg_tokens), ("Avg. entities/document", self.avg_entities),
        ]

    def type_rows(self):
        groups = self.group_counts()
        rows = []
        for c in COARSE_ORDER:
            rows.append((c.value, groups[c.value]))
            rows.extend((l.value, self.vertex_counts[l.value]) for l in VertexLabel
                        if COARSE_OF[l] is c and l.value != c.value)
        rows.extend((l.value, self.edge_counts[l.value]) for l in EdgeLabel)
        rows.append(("TOTAL", self.entities + sum(self.edge_counts.values())))
        return rows

    def to_dict(self) -> dict:
        return {
            "summary": {k: v for k, v in self.summary_rows()},
            "vertices": dict(self.vertex_counts),
            "groups": self.group_counts(),
            "edges": dict(self.edge_counts),
        }

    def format_table(self) -> str:
        return (format_table(("Item", "Count"), [(k, f"{v:,}") for k, v in self.summary_rows()])
                + "\n" + format_table(("Vertex / Edge types", "Count"),
                                      [(k, f"{v:,}") for k, v in self.type_rows()]))


def corpus_stats(corpus: Iterable[AnnotatedDocument]) -> CorpusStats:
    stats = CorpusStats()
    for doc in corpus:
        tt = analyze(doc.text)
        stats.documents += 1
        stats.sentences += len(tt.sentences)
        stats.tokens += len(tt.tokens)
        stats.entities += len(doc.entities)
        for e in doc.entities:
            stats.vertex_counts[e.label.value] += 1
        for r in doc.relations:
            stats.edge_counts[r.label.value] += 1
    return stats
