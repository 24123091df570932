"""Text normalisation, tokenisation and sentence splitting.

The relation rules only need word counts and sentence ids, so the rules
here are deliberately simple and fully deterministic:

* ``normalize`` rewrites a small table of orthographic variants (``°C`` to
  ``degC``, exotic spaces, dashes and quotes) and keeps an offset map so
  annotations can be moved between the raw and normalised text.
* ``tokenize`` splits on whitespace and peels ``( ) [ ] , ; : .`` off the
  edges of each chunk.  Hyphens, digits and inner punctuation stay attached
  so ``Li2CO3``, ``ball-milled`` and ``Li:Ti`` are single tokens.
* ``split_sentences`` breaks after ``.``/``!``/``?`` followed by whitespace
  and an upper-case letter or a digit, unless the period closes a known
  abbreviation or sits inside brackets.
"""
from __future__ import annotations

import bisect
import re
from dataclasses import dataclass, field, replace
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Sequence

from .docmodel import Entity, Span
from .errors import InvalidAnnotation, OverlappingEntities

EDGE_PUNCT = frozenset("()[],;:.")
SENTENCE_END = frozenset(".!?")
_OPEN = {"(": ")", "[": "]"}
_CLOSE = {")": "(", "]": "["}


def _read_lines(path):
    if path is None:
        raise ValueError("path required")
    return Path(path).read_text(encoding="utf-8").splitlines()


def _data_lines(name):
    return resources.files("synthflow.data").joinpath(name).read_text(encoding="utf-8").splitlines()


def _parse_rules(lines):
    rules = []
    for lineno, line in enumerate(lines, 1):
        if not line.strip() or line.startswith("#"):
            continue
        if "\t" not in line:
            raise ValueError(f"normalization rule on line {lineno} has no tab separator: {line!r}")
        pattern, repl = line.split("\t", 1)
        rules.append((pattern, repl))
    return tuple(rules)


@lru_cache(maxsize=None)
def default_normalization_rules() -> tuple[tuple[str, str], ...]:
    return _parse_rules(_data_lines("normalization.tsv"))


def load_normalization_rules(path) -> tuple[tuple[str, str], ...]:
    return _parse_rules(_read_lines(path))


def _parse_abbrevs(lines):
    return frozenset(l.strip() for l in lines if l.strip() and not l.startswith("#"))


@lru_cache(maxsize=None)
def default_abbreviations() -> frozenset[str]:
    return _parse_abbrevs(_data_lines("abbreviations.txt"))


def load_abbreviations(path) -> frozenset[str]:
    return _parse_abbrevs(_read_lines(path))


@lru_cache(maxsize=32)
def _compile_rules(rules):
    return re.compile("|".join(f"(?P<r{i}>{p})" for i, (p, _) in enumerate(rules)))


@dataclass(frozen=True)
class OffsetMap:
    """Maps character offsets between an original text and its normalised form.

    Only rewritten segments are stored, as ``(norm_start, norm_end,
    orig_start, orig_end)`` tuples; everything in between is a plain shift.
    Offsets that fall inside a rewritten segment snap outward to the segment
    boundary, so projected spans always cover the characters they came from.
    """

    segments: tuple[tuple[int, int, int, int], ...] = ()
    _norm_ends: tuple[int, ...] = field(default=(), init=False, repr=False, compare=False)
    _orig_ends: tuple[int, ...] = field(default=(), init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_norm_ends", tuple(s[1] for s in self.segments))
        object.__setattr__(self, "_orig_ends", tuple(s[3] for s in self.segments))

    @property
    def is_identity(self) -> bool:
        return not self.segments

    def _project(self, pos, is_end, to_norm):
        # src/dst are the column indices of the segment tuple
        src, dst = (2, 0) if to_norm else (0, 2)
        ends = self._orig_ends if to_norm else self._norm_ends
        i = bisect.bisect_right(ends, pos)
        # segments [0, i) end at or before pos
        if i < len(self.segments):
            seg = self.segments[i]
            if seg[src] < pos < seg[src + 1]:
                return seg[dst + 1] if is_end else seg[dst]
        if i == 0:
            return pos
        prev = self.segments[i - 1]
        return prev[dst + 1] + (pos - prev[src + 1])

    def to_normalized(self, span: Span) -> Span:
        return Span(self._project(span.start, False, True), self._project(span.end, True, True))

    def to_original(self, span: Span) -> Span:
        return Span(self._project(span.start, False, False), self._project(span.end, True, False))

    def position_to_normalized(self, pos: int) -> int:
        return self._project(pos, False, True)

    def position_to_original(self, pos: int) -> int:
        return self._project(pos, False, False)


def normalize(text: str, rules: Sequence[tuple[str, str]] | None = None) -> tuple[str, OffsetMap]:
    rules = tuple(default_normalization_rules() if rules is None else rules)
    if not text or not rules:
        return text, OffsetMap()
    regex = _compile_rules(rules)
    out = []
    segments = []
    pos = 0
    npos = 0
    for m in regex.finditer(text):
        if m.start() == m.end():
            continue
        repl = rules[int(m.lastgroup[1:])][1]
        if repl == m.group(0):
            continue
        out.append(text[pos:m.start()])
        npos += m.start() - pos
        segments.append((npos, npos + len(repl), m.start(), m.end()))
        out.append(repl)
        npos += len(repl)
        pos = m.end()
    out.append(text[pos:])
    return "".join(out), OffsetMap(tuple(segments))


@dataclass(frozen=True)
class Token:
    span: Span
    index: int
    sentence_index: int = 0
    text: str = ""

    @property
    def start(self) -> int:
        return self.span.start

    @property
    def end(self) -> int:
        return self.span.end


def _split_chunk(chunk: str):
    lead = 0
    while lead < len(chunk) and chunk[lead] in EDGE_PUNCT:
        lead += 1
    trail = len(chunk)
    while trail > lead and chunk[trail - 1] in EDGE_PUNCT:
        trail -= 1
    if lead == trail:
        return [(i, i + 1) for i in range(len(chunk))]
    # give brackets back to the core when they close/open one inside it,
    # e.g. "Mg(OH)." or "(OH)2"
    core = chunk[lead:trail]
    changed = True
    while changed:
        changed = False
        depth = core.count("(") - core.count(")")
        if depth > 0 and trail < len(chunk) and chunk[trail] == ")":
            trail += 1
            changed = True
        elif depth < 0 and lead > 0 and chunk[lead - 1] == "(":
            lead -= 1
            changed = True
        core = chunk[lead:trail]
    pieces = [(i, i + 1) for i in range(lead)]
    pieces.append((lead, trail))
    pieces.extend((i, i + 1) for i in range(trail, len(chunk)))
    return pieces


def tokenize(text: str) -> list[Token]:
    tokens = []
    for m in re.finditer(r"\S+", text):
        base = m.start()
        for a, b in _split_chunk(m.group(0)):
            tokens.append(Token(Span(base + a, base + b), len(tokens), 0, text[base + a:base + b]))
    return tokens


@dataclass(frozen=True)
class SentenceMap:
    boundaries: tuple[Span, ...]
    token_sentence: tuple[int, ...]

    def __len__(self):
        return len(self.boundaries)

    def sentence_of(self, token_index: int) -> int:
        return self.token_sentence[token_index]


def _closes_abbreviation(text, period_end, abbreviations):
    head = text[:period_end]
    for abbr in abbreviations:
        if head.endswith(abbr):
            k = period_end - len(abbr)
            if k == 0 or not text[k - 1].isalnum():
                return True
    return False


def split_sentences(text: str, tokens: Sequence[Token] | None = None,
                    abbreviations: frozenset[str] | None = None) -> SentenceMap:
    if tokens is None:
        tokens = tokenize(text)
    if abbreviations is None:
        abbreviations = default_abbreviations()
    if not tokens:
        return SentenceMap((), ())
    sent_ids = []
    boundaries = []
    depth = 0
    current = 0
    first = 0
    for i, tok in enumerate(tokens):
        sent_ids.append(current)
        t = tok.text or text[tok.start:tok.end]
        if t in _OPEN:
            depth += 1
        elif t in _CLOSE:
            depth = max(0, depth - 1)
        if t not in SENTENCE_END or depth > 0 or i + 1 == len(tokens):
            continue
        nxt = tokens[i + 1]
        if nxt.start == tok.end:
            continue
        c = text[nxt.start]
        if not (c.isupper() or c.isdigit()):
            continue
        if t == "." and _closes_abbreviation(text, tok.end, abbreviations):
            continue
        boundaries.append(Span(tokens[first].start, tok.end))
        current += 1
        first = i + 1
    boundaries.append(Span(tokens[first].start, tokens[-1].end))
    return SentenceMap(tuple(boundaries), tuple(sent_ids))


@dataclass(frozen=True)
class TokenizedText:
    """Tokens with sentence ids plus helpers for locating entities on the token line."""

    text: str
    tokens: tuple[Token, ...]
    sentences: SentenceMap
    _starts: tuple[int, ...] = field(default=(), init=False, repr=False, compare=False)
    _ends: tuple[int, ...] = field(default=(), init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_starts", tuple(t.start for t in self.tokens))
        object.__setattr__(self, "_ends", tuple(t.end for t in self.tokens))

    def __len__(self):
        return len(self.tokens)

    def token_range(self, entity: Entity | Span) -> tuple[int, int]:
        """Inclusive (first, last) token indices covering the entity's first fragment."""
        span = entity.first_span if isinstance(entity, Entity) else entity
        first = bisect.bisect_right(self._ends, span.start)
        last = bisect.bisect_left(self._starts, span.end) - 1
        if first > last:
            raise InvalidAnnotation(f"span [{span.start}, {span.end}) covers no token")
        return first, last

    def sentence_of(self, entity: Entity | Span) -> int:
        return self.sentences.sentence_of(self.token_range(entity)[0])


def analyze(text: str, abbreviations: frozenset[str] | None = None) -> TokenizedText:
    tokens = tokenize(text)
    sents = split_sentences(text, tokens, abbreviations)
    tokens = tuple(replace(t, sentence_index=s) for t, s in zip(tokens, sents.token_sentence))
    return TokenizedText(text, tokens, sents)


def _range_of(entity, tokens):
    if isinstance(tokens, TokenizedText):
        return tokens.token_range(entity)
    starts = [t.start for t in tokens]
    ends = [t.end for t in tokens]
    span = entity.first_span
    first = bisect.bisect_right(ends, span.start)
    last = bisect.bisect_left(starts, span.end) - 1
    if first > last:
        raise InvalidAnnotation(f"entity {entity.id} covers no token")
    return first, last


def range_distance(a: tuple[int, int], b: tuple[int, int]) -> int:
    if a[0] > b[0]:
        a, b = b, a
    if b[0] <= a[1]:
        raise OverlappingEntities(f"token ranges {a} and {b} overlap")
    return b[0] - a[1] - 1


def token_distance(a: Entity, b: Entity, tokens) -> int:
    """Number of tokens strictly between two entities (0 when adjacent)."""
    try:
        return range_distance(_range_of(a, tokens), _range_of(b, tokens))
    except OverlappingEntities:
        raise OverlappingEntities(f"entities {a.id} and {b.id} overlap on the token line") from None
