"""Negation-scope labeling with sequential and dependency-structured taggers."""

__version__ = "0.1.0"

from .corpus import (CorpusError, DependencyTree, NegationInstance, Sentence, Token, TreeError,
                     parse_corpus, parse_string, serialize, to_instances, write_corpus)
from .embeddings import EmbeddingTable, compose_crosslingual, load_vectors
from .ensemble import confidence_vote
from .evaluation import EvalReport, evaluate
from .models import ModelConfig, build_model, load_checkpoint, save_checkpoint
from .training import TrainConfig, train

__all__ = [
    "__version__", "CorpusError", "DependencyTree", "NegationInstance", "Sentence", "Token",
    "TreeError", "parse_corpus", "parse_string", "serialize", "to_instances", "write_corpus",
    "EmbeddingTable", "compose_crosslingual", "load_vectors", "confidence_vote", "EvalReport",
    "evaluate", "ModelConfig", "build_model", "load_checkpoint", "save_checkpoint",
    "TrainConfig", "train",
]
