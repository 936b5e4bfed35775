"""Graph-based text coherence assessment toolkit.

Builds sentence/entity/discourse-relation graphs from annotated documents,
flattens them into 2D-positioned sequences for a position-aware fusion
transformer, renders them as triple-augmented prompts, and evaluates both
routes with a cross-validation harness and synthetic corpora.
"""

from .corpus import read_corpus, write_corpus
from .documents import AnnotationSet, Document, Sentence
from .flat import FlatElement, FlatSequence, linearize
from .graph import CoherenceGraph, build_graph
from .labels import CoherenceLabel, ScoreScheme, map_raw_score
from .prompts import Triple, extract_triples, render_prompt
from .relations import RelationKind, RelationSense, load_registry
from .synth import synth_generate
from .variants import Variant

__version__ = "0.1.0"

__all__ = [
    "AnnotationSet", "CoherenceGraph", "CoherenceLabel", "Document",
    "FlatElement", "FlatSequence", "RelationKind", "RelationSense",
    "ScoreScheme", "Sentence", "Triple", "Variant", "build_graph",
    "extract_triples", "linearize", "load_registry", "map_raw_score",
    "read_corpus", "render_prompt", "synth_generate", "write_corpus",
    "__version__",
]
