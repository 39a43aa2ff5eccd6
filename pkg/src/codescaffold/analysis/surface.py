"""Lexical surface profiles: statement wording, identifier names, literal values.

The surface scanner is intentionally independent of the strict parser — it
never raises, so profiles can be taken of any text. Comments are excluded;
whitelisted builtin names are excluded from the identifier set because they
are counted as structure, not surface.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .parser import KEYWORDS
from .schema import BUILTIN_WHITELIST

STOPWORDS_VERSION = 1

# Frozen with STOPWORDS_VERSION; do not edit without bumping the version.
STOPWORDS = frozenset("""
a about above after again all also an and any are as at be because been
before being below between both but by can could did do does doing down
during each few for from further had has have having he her here hers him
his how i if in into is it its itself just me more most my no nor not now
of off on once only or other our ours out over own same she should so some
such than that the their theirs them then there these they this those
through to too under until up very was we were what when where which while
who whom why will with you your yours
write using task problem code solution sample example examples given
""".split())

_FENCE_RE = re.compile(r"^\s*(`{3,}|~{3,}).*$", re.MULTILINE)
_IMAGE_RE = re.compile(r"!\[([^\]]*)\]\(([^)]*)\)")
_LINK_RE = re.compile(r"\[([^\]]*)\]\(([^)]*)\)")
_WORD_RE = re.compile(r"[a-z0-9]+")

_CODE_TOKEN_RE = re.compile(
    r"""
    (?P<string>"(?:\\.|[^"\\\n])*"|'(?:\\.|[^'\\\n])*')
  | (?P<number>\d+\.\d*|\.\d+|\d+)
  | (?P<word>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<comment>\#[^\n]*)
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class SurfaceProfile:
    statement_words: frozenset[str]
    identifiers: frozenset[str]
    literals: frozenset[str]


def strip_markdown(text: str) -> str:
    """Drop markup, keep content: fence markers, link targets, emphasis chars."""
    text = _FENCE_RE.sub(" ", text)
    text = _IMAGE_RE.sub(r"\1", text)
    text = _LINK_RE.sub(r"\1", text)
    return re.sub(r"[`*_~#>|]", " ", text)


def statement_words(statement: str) -> frozenset[str]:
    words = _WORD_RE.findall(strip_markdown(statement).lower())
    return frozenset(w for w in words if w not in STOPWORDS)


def surface_features(statement: str, source: str) -> SurfaceProfile:
    """Tokenize a problem statement and code into a surface profile."""
    identifiers = set()
    literals = set()
    for m in _CODE_TOKEN_RE.finditer(source):
        if m.lastgroup == "string":
            literals.add(m.group()[1:-1])
        elif m.lastgroup == "number":
            literals.add(m.group())
        elif m.lastgroup == "word":
            word = m.group()
            if word in ("True", "False"):
                literals.add(word)
            elif word in KEYWORDS or word.lower() in BUILTIN_WHITELIST:
                continue
            else:
                identifiers.add(word.lower())
    return SurfaceProfile(
        statement_words=statement_words(statement),
        identifiers=frozenset(identifiers),
        literals=frozenset(literals),
    )


def set_jaccard(a: frozenset, b: frozenset) -> float:
    """Set Jaccard with the convention J(empty, empty) = 1."""
    if not a and not b:
        return 1.0
    union = a | b
    return len(a & b) / len(union)


W_STATEMENT = 0.40
W_IDENTIFIERS = 0.35
W_LITERALS = 0.25


def surface_similarity(a: SurfaceProfile, b: SurfaceProfile) -> float:
    """Weighted Jaccard blend over statement words, identifiers, literals."""
    return (
        W_STATEMENT * set_jaccard(a.statement_words, b.statement_words)
        + W_IDENTIFIERS * set_jaccard(a.identifiers, b.identifiers)
        + W_LITERALS * set_jaccard(a.literals, b.literals)
    )
