"""The lexicon/regex tagger on the bundled paragraph and on a new sentence.

Run: python3 notebooks/02_baseline_tagger.py
"""
from synthflow import BaselineTagger, entity_prf, load_sample

tagger = BaselineTagger()
for e in tagger.tag("The powder was pressed at 300 MPa and annealed under Ar for 2 h."):
    print(f"{e.label.value:20} {e.text}")

doc = load_sample("lto")
pred = doc.with_annotations(entities=tagger.tag_document(doc), relations=())
print(entity_prf(doc, pred, "fine").format_table())
