"""Synthesis flow graphs: coreference merging, lifting, ordering and DOT output."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import networkx as nx

from .docmodel import AnnotatedDocument, CoarseGroup, EdgeLabel, Entity, Relation, VertexLabel
from .errors import (CrossGroupCoreference, CycleDetected, DanglingReference, MixedLabelCluster,
                     SelfLoopDropped)


def _rep_key(e: Entity):
    return (e.start, e.end, e.id)


def merge_coreference(entities: Sequence[Entity], relations: Iterable) -> dict[str, str]:
    """Map every entity id to its coreference cluster id.

    Clusters are the connected components of the undirected Coreference
    graph; a cluster is named after its earliest mention.
    """
    by_id = {e.id: e for e in entities}
    parent = {eid: eid for eid in by_id}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for r in relations:
        r = getattr(r, "relation", r)
        if r.label is not EdgeLabel.COREFERENCE:
            continue
        for end in (r.source, r.target):
            if end not in by_id:
                raise DanglingReference(f"coreference {r.id} refers to missing entity {end}")
        a, b = find(r.source), find(r.target)
        if a != b:
            # keep the earliest mention as root
            if _rep_key(by_id[b]) < _rep_key(by_id[a]):
                a, b = b, a
            parent[b] = a

    clusters = {eid: find(eid) for eid in by_id}
    groups: dict[str, set] = {}
    for eid, root in clusters.items():
        groups.setdefault(root, set()).add(by_id[eid].coarse)
    for root, coarse in groups.items():
        if len(coarse) > 1:
            warnings.warn(f"coreference cluster {root} mixes {sorted(map(str, coarse))}",
                          CrossGroupCoreference, stacklevel=2)
    return clusters


@dataclass(frozen=True)
class Cluster:
    id: str
    representative: Entity
    members: tuple[str, ...]
    label: VertexLabel

    @property
    def coarse(self) -> CoarseGroup:
        return self.label.coarse


@dataclass(frozen=True)
class GraphEdge:
    source: str
    target: str
    label: EdgeLabel
    rule: str | None = None


@dataclass(frozen=True)
class SynthesisGraph:
    doc_id: str
    text: str
    entities: tuple[Entity, ...]
    nodes: tuple[Cluster, ...]
    edges: tuple[GraphEdge, ...]
    cluster_of: dict = field(default_factory=dict, compare=False, hash=False)

    def node(self, cluster_id: str) -> Cluster:
        for n in self.nodes:
            if n.id == cluster_id:
                return n
        raise KeyError(cluster_id)

    def next_edges(self) -> list[GraphEdge]:
        return [e for e in self.edges if e.label is EdgeLabel.NEXT]

    def condition_edges(self) -> list[GraphEdge]:
        return [e for e in self.edges if e.label is EdgeLabel.CONDITION]

    def edge_set(self) -> set[tuple[str, str, str]]:
        return {(e.source, e.target, e.label.value) for e in self.edges}

    def relations(self) -> list[Relation]:
        """Edges as representative-level relations, e.g. for re-lifting."""
        return [Relation(f"R{i}", e.label, e.source, e.target) for i, e in enumerate(self.edges, 1)]

    def to_networkx(self, labels: Iterable[EdgeLabel] = (EdgeLabel.NEXT, EdgeLabel.CONDITION)) -> nx.DiGraph:
        labels = set(labels)
        g = nx.DiGraph()
        for n in self.nodes:
            g.add_node(n.id, label=n.label.value, text=n.representative.text)
        for e in self.edges:
            if e.label in labels:
                g.add_edge(e.source, e.target, label=e.label.value, rule=e.rule)
        return g

    def to_dict(self) -> dict:
        rels = []
        for i, e in enumerate(self.edges, 1):
            item = {"id": f"R{i}", "label": e.label.value, "from": e.source, "to": e.target}
            if e.rule is not None:
                item["rule"] = e.rule
            rels.append(item)
        return {
            "doc_id": self.doc_id,
            "text": self.text,
            "entities": [
                {"id": e.id, "label": e.label.value, "spans": [[s.start, s.end] for s in e.spans],
                 "text": e.text}
                for e in sorted(self.entities, key=_rep_key)
            ],
            "clusters": [
                {"id": n.id, "label": n.label.value, "members": list(n.members),
                 "text": n.representative.text}
                for n in self.nodes
            ],
            "relations": rels,
        }


def _check_acyclic(nodes, edges):
    g = nx.DiGraph()
    g.add_nodes_from(n.id for n in nodes)
    g.add_edges_from((e.source, e.target) for e in edges if e.label is EdgeLabel.NEXT)
    try:
        cycle = nx.find_cycle(g)
    except nx.NetworkXNoCycle:
        return
    raise CycleDetected([u for u, _ in cycle] + [cycle[0][0]])


def build_graph(doc: AnnotatedDocument, entities: Sequence[Entity] | None = None,
                relations: Iterable | None = None) -> SynthesisGraph:
    """Merge coreferent mentions and lift Condition/Next edges onto the clusters.

    ``relations`` may hold plain relations or predictions carrying a rule
    attribution.  Duplicate lifted edges collapse onto the first one; edges
    that become self-loops after merging are dropped with a warning.  The
    Next subgraph must be acyclic.
    """
    entities = list(doc.entities if entities is None else entities)
    relations = list(doc.relations if relations is None else relations)
    by_id = {e.id: e for e in entities}
    cluster_of = merge_coreference(entities, relations)

    members: dict[str, list[Entity]] = {}
    for eid, cid in cluster_of.items():
        members.setdefault(cid, []).append(by_id[eid])
    nodes = []
    for cid, mems in members.items():
        mems.sort(key=_rep_key)
        rep = mems[0]
        same_group = [m for m in mems if m.coarse is rep.coarse]
        if len({m.label for m in same_group}) > 1:
            warnings.warn(f"cluster {cid} mixes labels {sorted({m.label.value for m in same_group})};"
                          f" keeping {rep.label.value}", MixedLabelCluster, stacklevel=2)
        nodes.append(Cluster(cid, rep, tuple(m.id for m in mems), rep.label))
    nodes.sort(key=lambda n: _rep_key(n.representative))

    edges = []
    seen = set()
    for item in relations:
        rel = getattr(item, "relation", item)
        rule = getattr(item, "rule", None)
        if rel.label is EdgeLabel.COREFERENCE:
            continue
        for end in (rel.source, rel.target):
            if end not in by_id:
                raise DanglingReference(f"relation {rel.id} refers to missing entity {end}")
        a, b = cluster_of[rel.source], cluster_of[rel.target]
        if a == b:
            warnings.warn(f"{rel.label.value} edge {rel.id} becomes a self-loop on {a}; dropped",
                          SelfLoopDropped, stacklevel=2)
            continue
        key = (a, b, rel.label)
        if key in seen:
            continue
        seen.add(key)
        edges.append(GraphEdge(a, b, rel.label, rule))

    order = {n.id: i for i, n in enumerate(nodes)}
    edges.sort(key=lambda e: (order[e.source], order[e.target], e.label.value))
    _check_acyclic(nodes, edges)
    return SynthesisGraph(doc.doc_id, doc.text, tuple(entities), tuple(nodes), tuple(edges), cluster_of)


def topo_order(g: SynthesisGraph) -> list[str]:
    """Cluster ids ordered so every Next edge points forward; ties by text position."""
    _check_acyclic(g.nodes, g.edges)
    position = {n.id: i for i, n in enumerate(g.nodes)}
    dg = g.to_networkx([EdgeLabel.NEXT])
    return list(nx.lexicographical_topological_sort(dg, key=position.__getitem__))


def check_order(g: SynthesisGraph, order: Sequence[str]) -> bool:
    pos = {cid: i for i, cid in enumerate(order)}
    if set(pos) != {n.id for n in g.nodes}:
        return False
    return all(pos[e.source] < pos[e.target] for e in g.next_edges())


_STYLE = {
    CoarseGroup.MATERIAL: 'shape=ellipse, style=filled, fillcolor="#f4cccc", color="#cc0000"',
    CoarseGroup.OPERATION: 'shape=box, style=filled, fillcolor="#d9ead3", color="#38761d"',
    CoarseGroup.PROPERTY: 'shape=note, style=filled, fillcolor="#fff2cc", color="#bf9000"',
}


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'


def to_dot(g: SynthesisGraph, name: str | None = None) -> str:
    """Render as a DOT digraph: solid arrows for Next, dashed for Condition."""
    lines = [f"digraph {_quote(name or g.doc_id or 'synthesis')} {{", "  rankdir=LR;"]
    for n in g.nodes:
        text = n.representative.text
        if len(n.members) > 1:
            others = [m for m in n.members if m != n.representative.id]
            text += " / " + " / ".join(e.text for e in g.entities if e.id in others)
        lines.append(f"  {_quote(n.id)} [label={_quote(text)}, tooltip={_quote(n.label.value)}, "
                     f"{_STYLE[n.coarse]}];")
    for e in g.edges:
        style = "solid" if e.label is EdgeLabel.NEXT else "dashed"
        attrs = f"style={style}"
        if e.rule:
            attrs += f", tooltip={_quote(e.rule)}"
        lines.append(f"  {_quote(e.source)} -> {_quote(e.target)} [{attrs}];")
    lines.append("}")
    return "\n".join(lines) + "\n"
