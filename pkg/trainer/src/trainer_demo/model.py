"""A deliberately small encoder-decoder: single-layer GRUs joined by
dot-product attention, sized for CPU smoke runs rather than real parsing.
"""

from __future__ import annotations

import torch
from torch import nn


class Seq2Seq(nn.Module):
    def __init__(
        self,
        src_vocab: int,
        tgt_vocab: int,
        embed_dim: int = 64,
        hidden_dim: int = 128,
        pad_id: int = 0,
    ):
        super().__init__()
        self.pad_id = pad_id
        self.src_embed = nn.Embedding(src_vocab, embed_dim, padding_idx=pad_id)
        self.encoder = nn.GRU(embed_dim, hidden_dim, batch_first=True)
        self.tgt_embed = nn.Embedding(tgt_vocab, embed_dim, padding_idx=pad_id)
        self.decoder = nn.GRU(embed_dim, hidden_dim, batch_first=True)
        self.project = nn.Linear(2 * hidden_dim, tgt_vocab)

    def encode(self, src: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        """Returns (memory, initial decoder state, source pad mask).

        Sequences are packed so trailing padding never reaches the final
        encoder state; the mask keeps it out of attention too.
        """
        lengths = src.ne(self.pad_id).sum(dim=1).clamp(min=1)
        packed = nn.utils.rnn.pack_padded_sequence(
            self.src_embed(src), lengths.cpu(), batch_first=True, enforce_sorted=False
        )
        memory_packed, state = self.encoder(packed)
        memory, _ = nn.utils.rnn.pad_packed_sequence(
            memory_packed, batch_first=True, total_length=src.shape[1]
        )
        positions = torch.arange(src.shape[1], device=src.device)
        return memory, state, positions.unsqueeze(0) >= lengths.unsqueeze(1)

    def _attend(
        self,
        queries: torch.Tensor,
        memory: torch.Tensor,
        pad_mask: torch.Tensor,
    ) -> torch.Tensor:
        scores = torch.bmm(queries, memory.transpose(1, 2))
        scores = scores.masked_fill(pad_mask.unsqueeze(1), float("-inf"))
        context = torch.bmm(torch.softmax(scores, dim=-1), memory)
        return self.project(torch.cat([queries, context], dim=-1))

    def forward(self, src: torch.Tensor, tgt_in: torch.Tensor) -> torch.Tensor:
        """Teacher-forced logits, shape (batch, len(tgt_in), tgt_vocab)."""
        memory, state, pad_mask = self.encode(src)
        queries, _ = self.decoder(self.tgt_embed(tgt_in), state)
        return self._attend(queries, memory, pad_mask)

    @torch.no_grad()
    def greedy(
        self,
        src: torch.Tensor,
        start_id: int,
        eos_id: int,
        max_len: int = 128,
    ) -> list[list[int]]:
        """Greedy decode, one step at a time; emitted ids exclude start/eos."""
        memory, state, pad_mask = self.encode(src)
        batch = src.shape[0]
        current = torch.full((batch, 1), start_id, dtype=torch.long, device=src.device)
        done = torch.zeros(batch, dtype=torch.bool, device=src.device)
        out: list[list[int]] = [[] for _ in range(batch)]
        for _ in range(max_len):
            queries, state = self.decoder(self.tgt_embed(current), state)
            logits = self._attend(queries, memory, pad_mask)
            current = logits[:, -1, :].argmax(dim=-1, keepdim=True)
            for i, tok in enumerate(current.squeeze(1).tolist()):
                if done[i]:
                    continue
                if tok == eos_id:
                    done[i] = True
                else:
                    out[i].append(tok)
            if bool(done.all()):
                break
        return out
