"""Spectrum-to-SMILES translation: model, training, decoding, metrics."""

from .bleu import BleuError, bleu
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .decode import (
    Candidate,
    CandidateSet,
    DecodeError,
    ModelStepper,
    beam_decode,
    beam_search,
    greedy_decode,
)
from .generate import (
    CandidateGenerator,
    NeuralCandidateGenerator,
    RetrievalCandidateGenerator,
)
from .model import (
    ModelError,
    TranslatorConfig,
    TranslatorModel,
    batch_from_token_lists,
    ce_loss,
    spectrum_tensor,
)
from .train import (
    TrainingConfig,
    TrainingError,
    TrainingResult,
    lr_multiplier,
    token_accuracy,
    train,
    validation_bleu,
)
from .vocab import (
    BOS_ID,
    EOS_ID,
    PAD_ID,
    UNK_ID,
    TokenVocabulary,
    VocabularyError,
    tokenize_smiles,
)

__all__ = [
    "BOS_ID",
    "BleuError",
    "Candidate",
    "CandidateGenerator",
    "CandidateSet",
    "CheckpointError",
    "DecodeError",
    "EOS_ID",
    "ModelError",
    "ModelStepper",
    "NeuralCandidateGenerator",
    "PAD_ID",
    "RetrievalCandidateGenerator",
    "TokenVocabulary",
    "TrainingConfig",
    "TrainingError",
    "TrainingResult",
    "TranslatorConfig",
    "TranslatorModel",
    "UNK_ID",
    "VocabularyError",
    "batch_from_token_lists",
    "beam_decode",
    "beam_search",
    "bleu",
    "ce_loss",
    "greedy_decode",
    "load_checkpoint",
    "lr_multiplier",
    "save_checkpoint",
    "spectrum_tensor",
    "token_accuracy",
    "tokenize_smiles",
    "train",
    "validation_bleu",
]
