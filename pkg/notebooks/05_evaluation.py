"""Scores: relation F1 under coreference, rule coverage, agreement and corpus counts.

Run: python3 notebooks/05_evaluation.py
"""
from synthflow import (cohen_kappa, corpus_stats, extract, load_sample, relation_prf,
                       rule_stats)

doc = load_sample("lto")
x = extract(doc)
print(relation_prf(doc, x.predictions).format_table())
print(rule_stats(doc, x.predictions).format_table())

# a second annotator who dropped the two supplier names
other = doc.with_annotations(
    entities=[e for e in doc.entities if e.text != "Aladdin"],
    relations=[r for r in doc.relations
               if "Aladdin" not in (doc.entity(r.source).text, doc.entity(r.target).text)])
print(cohen_kappa(doc, other).format_table())
print(corpus_stats([doc]).format_table())
