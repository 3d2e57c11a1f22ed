"""Spectrum-to-SMILES encoder/decoder model.

A spectrum of length L is lifted pointwise to d dimensions by a
learnable 1->d projection, given a learnable positional embedding row
per wavenumber position, and encoded by a small pre-norm transformer.
The decoder generates SMILES tokens autoregressively with causal
self-attention over the prefix and cross-attention over the encoded
spectrum. Attention is written out explicitly (no fused black boxes) so
its weights can be inspected and unit-tested.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import torch
from torch import nn

from ..spectra import Spectrum
from .vocab import PAD_ID, TokenVocabulary


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class TranslatorConfig:
    vocab_size: int
    spectrum_len: int
    d: int = 128
    heads: int = 4
    encoder_layers: int = 2
    decoder_layers: int = 2
    ffn_mult: int = 4
    max_target_len: int = 128
    beam_width: int = 3
    seed: int = 0

    def __post_init__(self):
        for name in ("vocab_size", "spectrum_len", "d", "heads", "encoder_layers",
                     "decoder_layers", "ffn_mult", "max_target_len", "beam_width"):
            if getattr(self, name) < 1:
                raise ModelError(f"{name} must be positive")
        if self.d % self.heads != 0:
            raise ModelError(f"d={self.d} not divisible by heads={self.heads}")

    def to_dict(self) -> dict:
        return {
            "vocab_size": self.vocab_size,
            "spectrum_len": self.spectrum_len,
            "d": self.d,
            "heads": self.heads,
            "encoder_layers": self.encoder_layers,
            "decoder_layers": self.decoder_layers,
            "ffn_mult": self.ffn_mult,
            "max_target_len": self.max_target_len,
            "beam_width": self.beam_width,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TranslatorConfig":
        return cls(**d)


class MultiHeadAttention(nn.Module):
    def __init__(self, d: int, heads: int):
        super().__init__()
        self.d = d
        self.heads = heads
        self.dk = d // heads
        self.wq = nn.Linear(d, d)
        self.wk = nn.Linear(d, d)
        self.wv = nn.Linear(d, d)
        self.wo = nn.Linear(d, d)
        self.last_weights: Optional[torch.Tensor] = None

    def forward(self, query, key, value, mask=None):
        b, tq, _ = query.shape
        tk = key.shape[1]
        q = self.wq(query).view(b, tq, self.heads, self.dk).transpose(1, 2)
        k = self.wk(key).view(b, tk, self.heads, self.dk).transpose(1, 2)
        v = self.wv(value).view(b, tk, self.heads, self.dk).transpose(1, 2)
        scores = q @ k.transpose(-2, -1) / math.sqrt(self.dk)
        if mask is not None:
            scores = scores + mask
        weights = torch.softmax(scores, dim=-1)
        self.last_weights = weights.detach()
        out = (weights @ v).transpose(1, 2).reshape(b, tq, self.d)
        return self.wo(out)


class FeedForward(nn.Module):
    def __init__(self, d: int, mult: int):
        super().__init__()
        self.w1 = nn.Linear(d, d * mult)
        self.w2 = nn.Linear(d * mult, d)
        self.act = nn.GELU()

    def forward(self, x):
        return self.w2(self.act(self.w1(x)))


class EncoderLayer(nn.Module):
    def __init__(self, d: int, heads: int, ffn_mult: int):
        super().__init__()
        self.attn = MultiHeadAttention(d, heads)
        self.ffn = FeedForward(d, ffn_mult)
        self.norm1 = nn.LayerNorm(d)
        self.norm2 = nn.LayerNorm(d)

    def forward(self, x):
        h = self.norm1(x)
        x = x + self.attn(h, h, h)
        x = x + self.ffn(self.norm2(x))
        return x


class DecoderLayer(nn.Module):
    def __init__(self, d: int, heads: int, ffn_mult: int):
        super().__init__()
        self.self_attn = MultiHeadAttention(d, heads)
        self.cross_attn = MultiHeadAttention(d, heads)
        self.ffn = FeedForward(d, ffn_mult)
        self.norm1 = nn.LayerNorm(d)
        self.norm2 = nn.LayerNorm(d)
        self.norm3 = nn.LayerNorm(d)

    def forward(self, x, memory, causal_mask):
        h = self.norm1(x)
        x = x + self.self_attn(h, h, h, mask=causal_mask)
        h = self.norm2(x)
        x = x + self.cross_attn(h, memory, memory)
        x = x + self.ffn(self.norm3(x))
        return x


class TranslatorModel(nn.Module):
    def __init__(self, config: TranslatorConfig):
        super().__init__()
        self.config = config
        d = config.d
        self.input_proj = nn.Linear(1, d)
        self.spectrum_pos = nn.Parameter(torch.zeros(config.spectrum_len, d))
        self.encoder_layers = nn.ModuleList(
            EncoderLayer(d, config.heads, config.ffn_mult)
            for _ in range(config.encoder_layers)
        )
        self.encoder_norm = nn.LayerNorm(d)
        self.token_embed = nn.Embedding(config.vocab_size, d)
        self.target_pos = nn.Parameter(torch.zeros(config.max_target_len + 1, d))
        self.decoder_layers = nn.ModuleList(
            DecoderLayer(d, config.heads, config.ffn_mult)
            for _ in range(config.decoder_layers)
        )
        self.decoder_norm = nn.LayerNorm(d)
        self.output_proj = nn.Linear(d, config.vocab_size)
        self._init_parameters(config.seed)

    def _init_parameters(self, seed: int):
        """Uniform init scaled by fan-in, from a private seeded generator."""
        gen = torch.Generator().manual_seed(seed)
        for name, p in self.named_parameters():
            if p.dim() >= 2:
                bound = 1.0 / math.sqrt(p.shape[-1])
                with torch.no_grad():
                    p.uniform_(-bound, bound, generator=gen)
            elif "norm" in name and name.endswith("weight"):
                with torch.no_grad():
                    p.fill_(1.0)
            else:
                with torch.no_grad():
                    p.zero_()
        with torch.no_grad():
            self.spectrum_pos.uniform_(-0.02, 0.02, generator=gen)
            self.target_pos.uniform_(-0.02, 0.02, generator=gen)

    def encode_input(self, values: torch.Tensor) -> torch.Tensor:
        """Per-position projection plus positional rows: z_i = proj(x_i) + P_i."""
        if values.dim() == 1:
            values = values.unsqueeze(0)
        if values.shape[-1] != self.config.spectrum_len:
            raise ModelError(
                f"spectrum length {values.shape[-1]} does not match "
                f"model length {self.config.spectrum_len}"
            )
        x = self.input_proj(values.unsqueeze(-1))
        return x + self.spectrum_pos

    def encode(self, values: torch.Tensor) -> torch.Tensor:
        x = self.encode_input(values)
        for layer in self.encoder_layers:
            x = layer(x)
        return self.encoder_norm(x)

    def _causal_mask(self, t: int, dtype, device) -> torch.Tensor:
        mask = torch.full((t, t), float("-inf"), dtype=dtype, device=device)
        return torch.triu(mask, diagonal=1)

    def decode(self, memory: torch.Tensor, tokens: torch.Tensor) -> torch.Tensor:
        """Logits over the vocabulary at every prefix position."""
        b, t = tokens.shape
        if t > self.target_pos.shape[0]:
            raise ModelError(f"target length {t} exceeds table {self.target_pos.shape[0]}")
        x = self.token_embed(tokens) + self.target_pos[:t]
        mask = self._causal_mask(t, x.dtype, x.device)
        for layer in self.decoder_layers:
            x = layer(x, memory, mask)
        return self.output_proj(self.decoder_norm(x))

    def forward(self, values: torch.Tensor, tokens: torch.Tensor) -> torch.Tensor:
        return self.decode(self.encode(values), tokens)


def ce_loss(logits: torch.Tensor, targets: torch.Tensor) -> torch.Tensor:
    """Cross entropy: per-example sum over non-PAD tokens, then mean.

    The per-example reduction is a sum (not a token mean) so the batch
    value matches the sequence-likelihood objective exactly.
    """
    if logits.numel() == 0 or logits.shape[0] == 0:
        raise ModelError("empty batch")
    logp = torch.log_softmax(logits, dim=-1)
    nll = -logp.gather(-1, targets.unsqueeze(-1)).squeeze(-1)
    mask = (targets != PAD_ID).to(nll.dtype)
    return (nll * mask).sum(dim=1).mean()


def batch_from_token_lists(token_lists: Sequence[Sequence[int]], device=None):
    """Pad sequences and split into decoder inputs and shifted targets."""
    if not token_lists:
        raise ModelError("empty batch")
    width = max(len(t) for t in token_lists)
    full = torch.full((len(token_lists), width), PAD_ID, dtype=torch.long, device=device)
    for i, toks in enumerate(token_lists):
        full[i, : len(toks)] = torch.as_tensor(toks, dtype=torch.long, device=device)
    return full[:, :-1], full[:, 1:]


def spectrum_tensor(s: Spectrum, dtype=torch.float32) -> torch.Tensor:
    return torch.as_tensor(s.values.copy(), dtype=dtype)
