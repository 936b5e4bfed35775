"""Position-aware fusion transformer: model, training, and checkpointing."""

from .config import ModelConfig, TrainConfig
from .encoder import HashBucketSentenceEncoder
from .masking import masked_softmax, visible_matrix
from .model import DropoutStream, FusionModel, HeadParams, attention_scores
from .positions import PositionEncoder, sinusoid
from .train import EpochMetrics, FusionClassifier, train

__all__ = [
    "DropoutStream", "EpochMetrics", "FusionClassifier", "FusionModel",
    "HashBucketSentenceEncoder", "HeadParams", "ModelConfig",
    "PositionEncoder", "TrainConfig", "attention_scores", "masked_softmax",
    "sinusoid", "train", "visible_matrix",
]
