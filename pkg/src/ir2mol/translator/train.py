"""Training loop for the spectrum-to-SMILES translator.

Adam with linear warmup then a configurable decay (inverse square root
by default, linear-to-zero behind a flag), validation BLEU per epoch
with patience-based early stopping, best-checkpoint retention, and
deterministic single-threaded execution given a seed.
"""

from __future__ import annotations

import copy
import math
import random
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import torch

from ..spectra import Spectrum
from .bleu import bleu
from .decode import ModelStepper, greedy_decode
from .model import TranslatorModel, batch_from_token_lists, ce_loss, spectrum_tensor
from .vocab import PAD_ID, TokenVocabulary, tokenize_smiles


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainingConfig:
    batch_size: int = 16
    learning_rate: float = 0.001
    warmup_steps: int = 8000
    max_epochs: int = 300
    patience: int = 25
    decay: str = "inverse_sqrt"  # or "linear"
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 1 or self.learning_rate <= 0 or self.warmup_steps < 1:
            raise TrainingError("batch size, learning rate, warmup must be positive")
        if self.max_epochs < 1 or self.patience < 1:
            raise TrainingError("max epochs and patience must be positive")
        if self.decay not in ("inverse_sqrt", "linear"):
            raise TrainingError(f"unknown decay {self.decay!r}")

    def to_dict(self) -> dict:
        return {
            "batch_size": self.batch_size,
            "learning_rate": self.learning_rate,
            "warmup_steps": self.warmup_steps,
            "max_epochs": self.max_epochs,
            "patience": self.patience,
            "decay": self.decay,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrainingConfig":
        return cls(**d)


def lr_multiplier(step: int, warmup: int, decay: str,
                  total_steps: Optional[int] = None) -> float:
    """Warmup ramp step/warmup, continuous at the boundary, then decay."""
    if step <= 0:
        return 0.0
    if step <= warmup:
        return step / warmup
    if decay == "inverse_sqrt":
        return math.sqrt(warmup / step)
    if total_steps is None or total_steps <= warmup:
        return 1.0
    return max(0.0, (total_steps - step) / (total_steps - warmup))


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_bleu: float
    lr: float


@dataclass
class TrainingResult:
    model: TranslatorModel
    history: List[EpochRecord]
    best_epoch: int
    best_bleu: float
    stopped_early: bool

    def loss_history(self) -> List[float]:
        return [r.train_loss for r in self.history]


Example = Tuple[Spectrum, str]


def _encode_dataset(data: Sequence[Example], vocab: TokenVocabulary, max_len: int):
    pairs = []
    for spectrum, smiles in data:
        ids = vocab.encode(smiles)
        if len(ids) > max_len + 1:
            ids = ids[:max_len] + [ids[-1]]  # keep EOS when truncating
        pairs.append((spectrum_tensor(spectrum), ids))
    return pairs


def validation_bleu(model: TranslatorModel, data: Sequence[Example],
                    vocab: TokenVocabulary) -> float:
    """Corpus BLEU of greedy decodes against reference token sequences."""
    hyps, refs = [], []
    for spectrum, smiles in data:
        stepper = ModelStepper(model, spectrum)
        seq, _ = greedy_decode(stepper, model.config.max_target_len)
        hyps.append(vocab.decode_tokens(seq))
        refs.append(tokenize_smiles(smiles))
    return bleu(hyps, refs)


def token_accuracy(model: TranslatorModel, data: Sequence[Example],
                   vocab: TokenVocabulary) -> float:
    """Teacher-forced next-token accuracy over non-PAD positions."""
    encoded = _encode_dataset(data, vocab, model.config.max_target_len)
    correct = 0
    total = 0
    with torch.no_grad():
        for values, ids in encoded:
            inputs, targets = batch_from_token_lists([ids])
            logits = model(values.unsqueeze(0), inputs)
            pred = logits.argmax(dim=-1)
            mask = targets != PAD_ID
            correct += int((pred[mask] == targets[mask]).sum())
            total += int(mask.sum())
    return correct / total if total else 0.0


def train(
    model: TranslatorModel,
    vocab: TokenVocabulary,
    train_data: Sequence[Example],
    valid_data: Sequence[Example],
    cfg: TrainingConfig,
) -> TrainingResult:
    """Train until the epoch cap or until validation BLEU stalls.

    The best-BLEU parameters are restored on the returned model. Raises
    if the loss goes non-finite, naming the epoch and step.
    """
    if not train_data or not valid_data:
        raise TrainingError("train and validation sets must be nonempty")
    train_ids = {s.id for s, _ in train_data if s.id}
    valid_ids = {s.id for s, _ in valid_data if s.id}
    overlap = train_ids & valid_ids
    if overlap:
        raise TrainingError(f"train/valid sets overlap on ids {sorted(overlap)[:5]}")

    torch.set_num_threads(1)  # order-fixed reductions: bitwise reproducibility
    rng = random.Random(cfg.seed)
    encoded = _encode_dataset(train_data, vocab, model.config.max_target_len)
    steps_per_epoch = math.ceil(len(encoded) / cfg.batch_size)
    total_steps = cfg.max_epochs * steps_per_epoch
    opt = torch.optim.Adam(model.parameters(), lr=cfg.learning_rate)

    history: List[EpochRecord] = []
    best_bleu = -math.inf
    best_epoch = 0
    best_state = None
    stopped_early = False
    step = 0
    for epoch in range(1, cfg.max_epochs + 1):
        order = list(range(len(encoded)))
        rng.shuffle(order)
        model.train()
        epoch_loss = 0.0
        mult = 0.0
        for lo in range(0, len(order), cfg.batch_size):
            chunk = order[lo : lo + cfg.batch_size]
            step += 1
            mult = lr_multiplier(step, cfg.warmup_steps, cfg.decay, total_steps)
            for group in opt.param_groups:
                group["lr"] = cfg.learning_rate * mult
            values = torch.stack([encoded[i][0] for i in chunk])
            inputs, targets = batch_from_token_lists([encoded[i][1] for i in chunk])
            logits = model(values, inputs)
            loss = ce_loss(logits, targets)
            if not torch.isfinite(loss):
                raise TrainingError(f"non-finite loss at epoch {epoch}, step {step}")
            opt.zero_grad()
            loss.backward()
            opt.step()
            epoch_loss += float(loss.detach())
        for p in model.parameters():
            if not torch.isfinite(p).all():
                raise TrainingError(f"non-finite parameter after epoch {epoch}")
        model.eval()
        vb = validation_bleu(model, valid_data, vocab)
        history.append(
            EpochRecord(epoch, epoch_loss / steps_per_epoch, vb,
                        cfg.learning_rate * mult)
        )
        if vb > best_bleu:
            best_bleu = vb
            best_epoch = epoch
            best_state = copy.deepcopy(model.state_dict())
        elif epoch - best_epoch >= cfg.patience:
            stopped_early = True
            break
    if best_state is not None:
        model.load_state_dict(best_state)
    model.eval()
    return TrainingResult(
        model=model,
        history=history,
        best_epoch=best_epoch,
        best_bleu=best_bleu,
        stopped_early=stopped_early,
    )
