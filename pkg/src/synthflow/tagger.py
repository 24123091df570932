"""Entity taggers.

:class:`BaselineTagger` is a lexicon and regular-expression tagger that lets
the pipeline run without a trained sequence model.  It never emits
Material-Intermedium, which needs an understanding of the whole procedure.

:class:`PassthroughTagger` hands back entities that already exist, either on
the document itself (gold) or in a separate set of predicted documents.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping, Protocol, Sequence

from .docmodel import AnnotatedDocument, Entity, Span, VertexLabel
from .errors import DocumentMismatch, NoAnnotations
from .textprep import analyze

ELEMENTS = frozenset("""
H He Li Be B C N O F Ne Na Mg Al Si P S Cl Ar K Ca Sc Ti V Cr Mn Fe Co Ni Cu Zn Ga Ge As Se
Br Kr Rb Sr Y Zr Nb Mo Tc Ru Rh Pd Ag Cd In Sn Sb Te I Xe Cs Ba La Ce Pr Nd Pm Sm Eu Gd Tb Dy
Ho Er Tm Yb Lu Hf Ta W Re Os Ir Pt Au Hg Tl Pb Bi Po At Rn Fr Ra Ac Th Pa U Np Pu Am Cm Bk Cf
Es Fm Md No Lr
""".split())

PATTERN_LABELS = {
    "Time": VertexLabel.PROPERTY_TIME,
    "Temp": VertexLabel.PROPERTY_TEMP,
    "Rot": VertexLabel.PROPERTY_ROT,
    "Press": VertexLabel.PROPERTY_PRESS,
    "Atmosphere": VertexLabel.PROPERTY_ATMOSPHERE,
    "Others": VertexLabel.PROPERTY_OTHERS,
}

_FORMULA_CHARS = re.compile(r"(?:[A-Z][a-z]?|\d+(?:\.\d+)?|[()\[\]·.xyzδ+\-/])+")
_SYMBOL = re.compile(r"[A-Z][a-z]?")
_ALIAS = re.compile(r"[A-Z][A-Za-z0-9\-]*")
_DENOTED = ("denoted", "abbreviated")
_OBJECT_BREAKERS = frozenset("from by using with via through in at for of and , ; ( )".split())


def is_formula(token: str) -> bool:
    """Heuristic test for a chemical formula such as ``Li2CO3`` or ``Li3xLa2/3-xTiO3``."""
    if not token or not (token[0].isupper() or token[0].isdigit() or token[0] == "("):
        return False
    if _FORMULA_CHARS.fullmatch(token) is None:
        return False
    symbols = _SYMBOL.findall(token)
    if not symbols or any(s not in ELEMENTS for s in symbols):
        return False
    if token[0].isdigit() and len(symbols) < 2:
        return False
    return len(symbols) >= 2 or any(c.isdigit() for c in token)


def _read_terms(lines):
    return frozenset(l.strip() for l in lines if l.strip() and not l.lstrip().startswith("#"))


def _read_patterns(lines):
    patterns: dict[str, list[str]] = {}
    for lineno, line in enumerate(lines, 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        name, sep, regex = line.partition("=")
        name = name.strip()
        if not sep or name not in PATTERN_LABELS:
            raise ValueError(f"pattern line {lineno}: expected <name>=<regex> with name in "
                             f"{sorted(PATTERN_LABELS)}, got {line!r}")
        re.compile(regex)
        patterns.setdefault(name, []).append(regex)
    return {k: tuple(v) for k, v in patterns.items()}


_LEXICON_FILES = {
    "operation_verbs": "operations.txt",
    "solvent_names": "solvents.txt",
    "atmosphere_terms": "atmospheres.txt",
    "manufacturer_names": "manufacturers.txt",
    "product_verbs": "product_verbs.txt",
}


@dataclass(frozen=True)
class TaggerLexicon:
    operation_verbs: frozenset[str]
    solvent_names: frozenset[str]
    atmosphere_terms: frozenset[str]
    manufacturer_names: frozenset[str]
    product_verbs: frozenset[str]
    unit_patterns: Mapping[str, tuple[str, ...]] = field(default_factory=dict)

    @classmethod
    def default(cls) -> TaggerLexicon:
        pkg = resources.files("synthflow.data")
        return cls._build(lambda name: pkg.joinpath(name).read_text(encoding="utf-8").splitlines())

    @classmethod
    def load(cls, directory) -> TaggerLexicon:
        """Load lexicon files from ``directory``; missing files fall back to the defaults."""
        directory = Path(directory)
        pkg = resources.files("synthflow.data")

        def read(name):
            path = directory / name
            src = path if path.exists() else pkg.joinpath(name)
            return src.read_text(encoding="utf-8").splitlines()
        return cls._build(read)

    @classmethod
    def _build(cls, read):
        kw = {attr: _read_terms(read(fname)) for attr, fname in _LEXICON_FILES.items()}
        kw["unit_patterns"] = _read_patterns(read("patterns.txt"))
        return cls(**kw)


# a verb form used as a noun modifier ("grinding speed") is not an operation
_MODIFIED_NOUNS = r"(?!\s+(?:speed|rate|time|temperature|media|medium|jar|vessel|machine|step|process)\b)"


def _term_regex(terms, ignore_case, suffix=""):
    if not terms:
        return None
    alt = "|".join(re.escape(t) for t in sorted(terms, key=lambda t: (-len(t), t)))
    return re.compile(rf"(?<![\w\-])(?:{alt})(?![\w\-]){suffix}", re.IGNORECASE if ignore_case else 0)


def _pattern_regex(regexes):
    alt = "|".join(f"(?:{r})" for r in regexes)
    return re.compile(rf"(?<![\w.])(?:{alt})(?![\w])")


class Tagger(Protocol):
    def tag_document(self, doc: AnnotatedDocument) -> list[Entity]:
        ...


class BaselineTagger:
    def __init__(self, lexicon: TaggerLexicon | None = None):
        self.lexicon = lexicon or TaggerLexicon.default()
        lx = self.lexicon
        # earlier sources win ties between equally long candidates at the same offset
        self._sources = [(label, _pattern_regex(regs)) for name, regs in sorted(lx.unit_patterns.items())
                         for label in [PATTERN_LABELS[name]]]
        self._sources += [
            (VertexLabel.PROPERTY_ATMOSPHERE, _term_regex(lx.atmosphere_terms, False)),
            (VertexLabel.PROPERTY_OTHERS, _term_regex(lx.manufacturer_names, False)),
            (VertexLabel.MATERIAL_SOLVENT, _term_regex(lx.solvent_names, True)),
            (VertexLabel.OPERATION, _term_regex(lx.operation_verbs, True, _MODIFIED_NOUNS)),
        ]
        self._sources = [(l, r) for l, r in self._sources if r is not None]
        self._product = {v.lower() for v in lx.product_verbs}

    def tag_document(self, doc: AnnotatedDocument) -> list[Entity]:
        return self.tag(doc.text)

    def tag(self, text: str) -> list[Entity]:
        if not text:
            return []
        tt = analyze(text)
        cands = []
        for priority, (label, regex) in enumerate(self._sources):
            for m in regex.finditer(text):
                if m.end() > m.start():
                    cands.append((m.start(), m.end(), label, priority))
        for tok in tt.tokens:
            if is_formula(tok.text):
                cands.append((tok.start, tok.end, VertexLabel.MATERIAL_OTHERS, len(self._sources)))
        cands.extend(self._aliases(tt))

        chosen = self._resolve(cands, tt)
        chosen = self._assign_roles(chosen, tt)
        return [Entity.from_text(f"T{i}", label, [Span(s, e)], text)
                for i, (s, e, label) in enumerate(chosen, 1)]

    def _aliases(self, tt):
        toks = tt.tokens
        out = []
        for i, tok in enumerate(toks):
            if tok.text.lower() not in _DENOTED:
                continue
            j = i + 1
            if j < len(toks) and toks[j].text.lower() == "as":
                j += 1
            if j < len(toks) and _ALIAS.fullmatch(toks[j].text) and not is_formula(toks[j].text):
                out.append((toks[j].start, toks[j].end, VertexLabel.MATERIAL_FINAL, -1))
        return out

    @staticmethod
    def _resolve(cands, tt):
        """Keep the longest candidates, leftmost on ties, with no shared tokens."""
        taken = set()
        kept = []
        for s, e, label, _ in sorted(cands, key=lambda c: (-(c[1] - c[0]), c[0], c[3])):
            first, last = tt.token_range(Span(s, e))
            toks = set(range(first, last + 1))
            if toks & taken:
                continue
            taken |= toks
            kept.append((s, e, label))
        kept.sort()
        return kept

    def _assign_roles(self, chosen, tt):
        toks = tt.tokens
        tok_index = {t.start: t.index for t in toks}
        op_starts = [s for s, _, l in chosen if l is VertexLabel.OPERATION]
        first_op = op_starts[0] if op_starts else len(tt.text) + 1
        product_tokens = [t for t in toks if t.text.lower() in self._product]
        alias_tokens = {tok_index[s] for s, _, l in chosen if l is VertexLabel.MATERIAL_FINAL}

        out = []
        for s, e, label in chosen:
            if label is VertexLabel.MATERIAL_OTHERS:
                ti = tok_index[s]
                if self._is_product(ti, s, toks, product_tokens, op_starts) or \
                        self._denoted_next(ti, toks, alias_tokens):
                    label = VertexLabel.MATERIAL_FINAL
                elif s < first_op:
                    label = VertexLabel.MATERIAL_START
            out.append((s, e, label))
        return out

    @staticmethod
    def _is_product(ti, start, toks, product_tokens, op_starts):
        sent = toks[ti].sentence_index
        for v in product_tokens:
            if v.sentence_index != sent:
                continue
            if v.index > ti:
                # subject of a passive "X was obtained/prepared ..."
                if not any(start < o < v.start for o in op_starts):
                    between = {t.text.lower() for t in toks[ti + 1:v.index]}
                    if not between & {"from", "by", "using", "with"}:
                        return True
            elif v.index < ti <= v.index + 4:
                # object of "to obtain/prepare X"
                between = [t.text.lower() for t in toks[v.index + 1:ti]]
                if not any(w in _OBJECT_BREAKERS for w in between):
                    return True
        return False

    @staticmethod
    def _denoted_next(ti, toks, alias_tokens):
        # "X, denoted LTO" / "X (denoted as LTO)"
        for j in range(ti + 1, min(ti + 5, len(toks))):
            if toks[j].text.lower() in _DENOTED:
                return any(k in alias_tokens for k in range(j + 1, j + 3))
            if toks[j].text not in {",", "("}:
                return False
        return False


class PassthroughTagger:
    """Return entities that already exist.

    With no ``predictions`` the document's own entities are returned (the
    gold setting); otherwise entities come from the predicted document with
    the same ``doc_id``.
    """

    def __init__(self, predictions: Mapping[str, AnnotatedDocument] | Sequence[AnnotatedDocument] | None = None):
        if predictions is not None and not isinstance(predictions, Mapping):
            predictions = {d.doc_id: d for d in predictions}
        self.predictions = predictions

    def tag_document(self, doc: AnnotatedDocument) -> list[Entity]:
        source = doc
        if self.predictions is not None:
            if doc.doc_id not in self.predictions:
                raise NoAnnotations(f"no predicted annotations for document {doc.doc_id}")
            source = self.predictions[doc.doc_id]
            if source.text != doc.text:
                raise DocumentMismatch(f"predicted text for {doc.doc_id} differs from the input")
        if not source.entities:
            raise NoAnnotations(f"document {doc.doc_id} has no entity annotations")
        return list(source.entities)
