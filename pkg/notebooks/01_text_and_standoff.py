"""Reading a standoff pair, normalising text and looking at tokens.

Run: python3 notebooks/01_text_and_standoff.py
"""
from synthflow import Span, analyze, load_sample, normalize, serialize_document
from synthflow.standoff import sample_path

doc = load_sample("lto")
print(f"{doc.doc_id}: {len(doc.entities)} entities, {len(doc.relations)} relations")
print(sample_path("lto").read_text(encoding="utf-8").splitlines()[2])

# Raw text from a PDF usually carries a degree sign and odd spaces.
raw = "calcined at 800 °C for 12 h"
text, omap = normalize(raw)
print(repr(raw), "->", repr(text))
start = text.index("800 degC")
span = omap.to_original(Span(start, start + 8))
print("maps back to", repr(raw[span.start:span.end]))

tt = analyze(doc.text)
print(len(tt.tokens), "tokens in", len(tt.sentences), "sentences")
print([t.text for t in tt.tokens[:12]])

# serialization renumbers ids in text order; parsing it back gives the same annotations
txt, ann = serialize_document(doc)
print(ann.splitlines()[0])
