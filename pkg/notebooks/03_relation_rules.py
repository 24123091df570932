"""The five linking rules, one at a time, and the ablation presets.

Run: python3 notebooks/03_relation_rules.py
"""
from synthflow import PRESETS, RuleConfig, extract, load_sample, relation_prf
from synthflow.relext import RULE_FUNCTIONS

doc = load_sample("lto")
text = {e.id: e.text for e in doc.entities}

for rule, fn in RULE_FUNCTIONS.items():
    print(rule)
    for p in fn(doc.entities, doc):
        print(f"   {text[p.source]} -{p.label.value}-> {text[p.target]}")

print()
for name in PRESETS:
    x = extract(doc, config=RuleConfig.preset(name))
    r = relation_prf(doc, x.predictions)
    print(f"{name:12} edges={len(x.predictions):2} "
          f"Condition F1={r.per_type['Condition'].f1:.3f} Next F1={r.per_type['Next'].f1:.3f}")
