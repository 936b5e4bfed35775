"""Three-level coherence labels and raw-score mapping for the supported corpora."""

from __future__ import annotations

import enum


class CoherenceLabel(enum.IntEnum):
    """Document-level coherence rating, totally ordered Low < Medium < High."""

    LOW = 0
    MEDIUM = 1
    HIGH = 2

    @property
    def as_text(self) -> str:
        return _LABEL_TEXT[self]

    @classmethod
    def from_text(cls, text: str) -> "CoherenceLabel":
        try:
            return _TEXT_LABEL[text.strip().lower()]
        except KeyError:
            raise ValueError(f"unknown coherence label {text!r}; "
                             f"expected one of {sorted(_TEXT_LABEL)}") from None


_LABEL_TEXT = {
    CoherenceLabel.LOW: "low",
    CoherenceLabel.MEDIUM: "medium",
    CoherenceLabel.HIGH: "high",
}
_TEXT_LABEL = {v: k for k, v in _LABEL_TEXT.items()}


class ScoreScheme(enum.Enum):
    """Raw annotation scale a corpus uses before mapping to the three levels."""

    GCDC3 = "gcdc3"
    COHESENTIA5 = "cohesentia5"


_SCHEME_RANGES = {
    ScoreScheme.GCDC3: (1, 3),
    ScoreScheme.COHESENTIA5: (1, 5),
}

# Grouping for the 5-point scale: {1,2} -> low, {3,4} -> medium, {5} -> high.
_COHESENTIA_MAP = {
    1: CoherenceLabel.LOW,
    2: CoherenceLabel.LOW,
    3: CoherenceLabel.MEDIUM,
    4: CoherenceLabel.MEDIUM,
    5: CoherenceLabel.HIGH,
}


def map_raw_score(scheme: ScoreScheme, score: int) -> CoherenceLabel:
    """Map a raw integer rating to a CoherenceLabel.

    GCDC uses a 1-3 scale mapped one-to-one; the 5-point scale is grouped to
    counter its skew toward the top score. Raises ValueError for scores
    outside the scheme's range.
    """
    lo, hi = _SCHEME_RANGES[scheme]
    if not isinstance(score, int) or isinstance(score, bool) or not lo <= score <= hi:
        raise ValueError(
            f"score {score!r} out of range [{lo}, {hi}] for scheme {scheme.value}")
    if scheme is ScoreScheme.GCDC3:
        return CoherenceLabel(score - 1)
    return _COHESENTIA_MAP[score]
