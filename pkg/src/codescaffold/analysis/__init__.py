"""Program-analysis core: parsing, schema normalization, similarity scoring."""

from .parser import Node, ParseError, parse_program, tokenize, walk, node_count
from .schema import (
    BUILTIN_WHITELIST,
    EmptyFingerprint,
    GramMultiset,
    ROOT_MARK,
    gram_label,
    normalize,
    structural_fingerprint,
    structural_similarity,
)
from .surface import (
    STOPWORDS,
    STOPWORDS_VERSION,
    SurfaceProfile,
    set_jaccard,
    strip_markdown,
    surface_features,
    surface_similarity,
)
from .classify import (
    DEFAULT_THRESHOLDS,
    Quadrant,
    Sample,
    SimilarityReport,
    Thresholds,
    classify_pair,
    quadrant_for,
)

__all__ = [
    "BUILTIN_WHITELIST",
    "DEFAULT_THRESHOLDS",
    "EmptyFingerprint",
    "GramMultiset",
    "Node",
    "ParseError",
    "Quadrant",
    "ROOT_MARK",
    "Sample",
    "SimilarityReport",
    "STOPWORDS",
    "STOPWORDS_VERSION",
    "SurfaceProfile",
    "Thresholds",
    "classify_pair",
    "gram_label",
    "node_count",
    "normalize",
    "parse_program",
    "quadrant_for",
    "set_jaccard",
    "strip_markdown",
    "structural_fingerprint",
    "structural_similarity",
    "surface_features",
    "surface_similarity",
    "tokenize",
    "walk",
]
