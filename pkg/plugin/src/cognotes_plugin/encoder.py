"""Small word-level transformer encoder for sequence classification."""
from __future__ import annotations

import torch
from torch import nn

from .data import PAD


class SequenceEncoder(nn.Module):
    def __init__(
        self,
        vocab_size: int,
        dim: int = 64,
        heads: int = 4,
        depth: int = 2,
        max_len: int = 160,
        n_classes: int = 3,
        dropout: float = 0.1,
    ):
        super().__init__()
        self.max_len = max_len
        self.token_embedding = nn.Embedding(vocab_size, dim, padding_idx=PAD)
        self.position_embedding = nn.Embedding(max_len, dim)
        layer = nn.TransformerEncoderLayer(
            d_model=dim,
            nhead=heads,
            dim_feedforward=dim * 4,
            dropout=dropout,
            batch_first=True,
        )
        self.encoder = nn.TransformerEncoder(
            layer, num_layers=depth, enable_nested_tensor=False
        )
        self.head = nn.Linear(dim, n_classes)

    def forward(self, ids: torch.Tensor) -> torch.Tensor:
        pad_mask = ids == PAD
        positions = torch.arange(ids.shape[1], device=ids.device)
        h = self.token_embedding(ids) + self.position_embedding(positions)
        h = self.encoder(h, src_key_padding_mask=pad_mask)
        # mean pool over non-pad positions; all-pad rows fall back to 1
        keep = (~pad_mask).unsqueeze(-1).float()
        denom = keep.sum(dim=1).clamp(min=1.0)
        pooled = (h * keep).sum(dim=1) / denom
        return self.head(pooled)
