"""Pair classification into the structural/surface quadrants."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .parser import ParseError, parse_program
from .schema import normalize, structural_fingerprint, structural_similarity
from .surface import set_jaccard, surface_features, W_STATEMENT, W_IDENTIFIERS, W_LITERALS


class Quadrant(str, Enum):
    FAR = "Far"                      # high structural, low surface
    NEAR = "Near"                    # high structural, high surface
    MISLEADING = "Misleading"        # low structural, high surface
    LOW_RELEVANCE = "LowRelevance"   # low on both axes


@dataclass(frozen=True)
class Thresholds:
    """Cutoffs on the two similarity axes; the quadrant axes carry no
    intrinsic numbers, so these defaults were tuned once against the labeled
    pair corpus and then frozen."""

    tau_struct: float = 0.60
    tau_surf: float = 0.35

    def __post_init__(self):
        for name in ("tau_struct", "tau_surf"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")


DEFAULT_THRESHOLDS = Thresholds()


@dataclass(frozen=True)
class Sample:
    """One side of a classification: a problem statement plus solution code."""

    statement: str
    code: str


@dataclass(frozen=True)
class SimilarityReport:
    structural_score: float
    surface_score: float
    statement_jaccard: float
    identifier_jaccard: float
    literal_jaccard: float
    quadrant: Quadrant
    tau_struct: float
    tau_surf: float

    def to_dict(self) -> dict:
        return {
            "structural_score": self.structural_score,
            "surface_score": self.surface_score,
            "components": {
                "statement_jaccard": self.statement_jaccard,
                "identifier_jaccard": self.identifier_jaccard,
                "literal_jaccard": self.literal_jaccard,
            },
            "quadrant": self.quadrant.value,
            "thresholds": {"tau_struct": self.tau_struct, "tau_surf": self.tau_surf},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SimilarityReport":
        comp = data["components"]
        thr = data["thresholds"]
        return cls(
            structural_score=data["structural_score"],
            surface_score=data["surface_score"],
            statement_jaccard=comp["statement_jaccard"],
            identifier_jaccard=comp["identifier_jaccard"],
            literal_jaccard=comp["literal_jaccard"],
            quadrant=Quadrant(data["quadrant"]),
            tau_struct=thr["tau_struct"],
            tau_surf=thr["tau_surf"],
        )


def quadrant_for(structural: float, surface: float, thresholds: Thresholds) -> Quadrant:
    high_struct = structural >= thresholds.tau_struct
    high_surf = surface >= thresholds.tau_surf
    if high_struct and not high_surf:
        return Quadrant.FAR
    if high_struct and high_surf:
        return Quadrant.NEAR
    if not high_struct and high_surf:
        return Quadrant.MISLEADING
    return Quadrant.LOW_RELEVANCE


def _parse_side(code: str, side: str):
    try:
        return parse_program(code)
    except ParseError as exc:
        raise ParseError(exc.message, exc.line, exc.column, origin=side) from None


def classify_pair(target: Sample, candidate: Sample,
                  thresholds: Thresholds = DEFAULT_THRESHOLDS) -> SimilarityReport:
    """Score a (target, candidate) pair on both axes and name its quadrant.

    Parse failures propagate as ParseError with ``origin`` set to "target"
    or "candidate".
    """
    target_tree = _parse_side(target.code, "target")
    candidate_tree = _parse_side(candidate.code, "candidate")

    structural = structural_similarity(
        structural_fingerprint(normalize(target_tree)),
        structural_fingerprint(normalize(candidate_tree)),
    )

    profile_t = surface_features(target.statement, target.code)
    profile_c = surface_features(candidate.statement, candidate.code)
    j_statement = set_jaccard(profile_t.statement_words, profile_c.statement_words)
    j_identifiers = set_jaccard(profile_t.identifiers, profile_c.identifiers)
    j_literals = set_jaccard(profile_t.literals, profile_c.literals)
    surface = W_STATEMENT * j_statement + W_IDENTIFIERS * j_identifiers + W_LITERALS * j_literals

    return SimilarityReport(
        structural_score=structural,
        surface_score=surface,
        statement_jaccard=j_statement,
        identifier_jaccard=j_identifiers,
        literal_jaccard=j_literals,
        quadrant=quadrant_for(structural, surface, thresholds),
        tau_struct=thresholds.tau_struct,
        tau_surf=thresholds.tau_surf,
    )
