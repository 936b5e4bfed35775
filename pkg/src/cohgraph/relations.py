"""PDTB 3.0-style discourse relation sense registry.

The registry is embedded constant data: 15 explicit senses and 15 implicit
senses (14 frequent types plus NoRel for pairs with no relation at all),
each with its fraction in the parser training corpus. The fractions are
metadata consumed only by the synthetic-data generator, never by the model.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass


class RelationKind(enum.Enum):
    EXPLICIT = "explicit"
    IMPLICIT = "implicit"


class CauseDirection(enum.Enum):
    """Directional reading of a Cause relation: the second argument is either
    the cause ("reason") or the effect ("result")."""

    REASON = "reason"
    RESULT = "result"


@dataclass(frozen=True)
class RelationSense:
    """A discourse relation sense, identified by (name, kind).

    Names carry the registry's exact capitalization/hyphenation; construction
    goes through RelationSenseRegistry.lookup so arbitrary casings normalize
    to the canonical spelling.
    """

    name: str
    kind: RelationKind

    @property
    def render(self) -> str:
        """Lowercase presentation form used by prompt rendering."""
        return self.name.lower()


# (name, training-corpus fraction); table order is the canonical order.
_EXPLICIT = (
    ("Asynchronous", 0.0869),
    ("Cause", 0.0787),
    ("Concession", 0.1994),
    ("Condition", 0.0599),
    ("Conjunction", 0.3655),
    ("Contrast", 0.0458),
    ("Disjunction", 0.0123),
    ("Instantiation", 0.0130),
    ("Level-of-detail", 0.0101),
    ("Manner", 0.0123),
    ("Negative-condition", 0.0054),
    ("Purpose", 0.0163),
    ("Similarity", 0.0042),
    ("Substitution", 0.0096),
    ("Synchronous", 0.0807),
)

_IMPLICIT = (
    ("Asynchronous", 0.0464),
    ("Cause", 0.2423),
    ("Cause+Belief", 0.0082),
    ("Concession", 0.0672),
    ("Condition", 0.0085),
    ("Conjunction", 0.2084),
    ("Contrast", 0.0386),
    ("Equivalence", 0.0121),
    ("Instantiation", 0.0684),
    ("Level-of-detail", 0.1460),
    ("Manner", 0.0074),
    ("Purpose", 0.0331),
    ("Substitution", 0.0134),
    ("Synchronous", 0.0235),
    ("NoRel", 0.0818),
)

NO_RELATION_NAME = "NoRel"


class UnknownSenseError(ValueError):
    """Raised when a sense name is not in the registry for its kind."""

    def __init__(self, name: str, kind: RelationKind, valid: tuple[str, ...]):
        self.name = name
        self.kind = kind
        self.valid = valid
        super().__init__(
            f"unknown {kind.value} relation sense {name!r}; "
            f"valid senses: {', '.join(valid)}")


class RelationSenseRegistry:
    """Ordered sense inventories per kind plus their corpus priors."""

    def __init__(self) -> None:
        self._names: dict[RelationKind, tuple[str, ...]] = {
            RelationKind.EXPLICIT: tuple(n for n, _ in _EXPLICIT),
            RelationKind.IMPLICIT: tuple(n for n, _ in _IMPLICIT),
        }
        self._priors: dict[RelationKind, dict[str, float]] = {
            RelationKind.EXPLICIT: dict(_EXPLICIT),
            RelationKind.IMPLICIT: dict(_IMPLICIT),
        }
        self._canonical: dict[RelationKind, dict[str, str]] = {
            kind: {n.lower(): n for n in names}
            for kind, names in self._names.items()
        }

    def names(self, kind: RelationKind) -> tuple[str, ...]:
        return self._names[kind]

    def prior(self, sense: RelationSense) -> float:
        return self._priors[sense.kind][sense.name]

    def priors(self, kind: RelationKind) -> dict[str, float]:
        return dict(self._priors[kind])

    def lookup(self, name: str, kind: RelationKind) -> RelationSense:
        """Case-normalized lookup; raises UnknownSenseError listing valid senses."""
        canonical = self._canonical[kind].get(name.strip().lower())
        if canonical is None:
            raise UnknownSenseError(name, kind, self._names[kind])
        return RelationSense(canonical, kind)

    def contains(self, name: str, kind: RelationKind) -> bool:
        return name.strip().lower() in self._canonical[kind]

    def all_senses(self) -> tuple[RelationSense, ...]:
        """Every sense in canonical order: explicit block, then implicit."""
        out = [RelationSense(n, RelationKind.EXPLICIT)
               for n in self._names[RelationKind.EXPLICIT]]
        out += [RelationSense(n, RelationKind.IMPLICIT)
                for n in self._names[RelationKind.IMPLICIT]]
        return tuple(out)

    def sense_index(self, sense: RelationSense) -> int:
        """Stable embedding-row index of a sense in all_senses() order."""
        offset = 0 if sense.kind is RelationKind.EXPLICIT else len(
            self._names[RelationKind.EXPLICIT])
        return offset + self._names[sense.kind].index(sense.name)


_REGISTRY = RelationSenseRegistry()


def load_registry() -> RelationSenseRegistry:
    """Return the embedded sense registry (shared immutable instance)."""
    return _REGISTRY
