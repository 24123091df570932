"""Merging coreferent mentions into a graph, ordering it and drawing it.

Run: python3 notebooks/04_flow_graph.py  (writes lto.dot next to the current directory)
"""
from pathlib import Path

from synthflow import build_graph, extract, load_sample, to_dot, topo_order

doc = load_sample("lto")
gold = build_graph(doc)
print(len(doc.entities), "mentions ->", len(gold.nodes), "nodes")
print(" -> ".join(gold.node(c).representative.text for c in topo_order(gold)
                  if gold.node(c).coarse.value != "Property"))

x = extract(doc)
pred = build_graph(x.document(), relations=x.predictions)
Path("lto.dot").write_text(to_dot(pred), encoding="utf-8")
print("wrote lto.dot; render with: dot -Tpng lto.dot -o lto.png")
