"""A small word-level encoder-decoder generator trainable on modest corpora.

Single-layer GRU encoder and decoder with dot-product attention, trained
from random initialisation with teacher forcing. Candidate generation runs
a fixed-width beam search and reports the raw sum of token log probabilities
as the candidate log probability, so ``topk(p, k1)`` is always a prefix of
``topk(p, k2)`` for ``k1 <= k2`` on a fixed model state.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import torch
import torch.nn.functional as F
from torch import nn

from .backends import Candidate, SelectionHook, TrainingConfig, validate_candidate_batch
from .errors import BackendError
from .prompting import TrainingPair
from .tokenization import detokenize, split_tokens

PAD, BOS, EOS, UNK = 0, 1, 2, 3
_SPECIALS = ("<pad>", "<bos>", "<eos>", "<unk>")


@dataclass(frozen=True)
class TinyModelConfig:
    embedding_dim: int = 64
    hidden_dim: int = 128
    beam_width: int = 8
    max_output_tokens: int = 24

    def __post_init__(self) -> None:
        if min(self.embedding_dim, self.hidden_dim, self.beam_width, self.max_output_tokens) < 1:
            raise ValueError("all tiny model dimensions must be positive")


class Vocabulary:
    """Case-preserving word vocabulary with four reserved specials."""

    def __init__(self, tokens: Sequence[str]):
        self.itos = list(_SPECIALS) + sorted(set(tokens) - set(_SPECIALS))
        self.stoi = {tok: i for i, tok in enumerate(self.itos)}

    @classmethod
    def from_texts(cls, texts: Sequence[str]) -> "Vocabulary":
        tokens: list[str] = []
        for text in texts:
            tokens.extend(split_tokens(text, lowercase=False))
        return cls(tokens)

    def __len__(self) -> int:
        return len(self.itos)

    def encode(self, text: str) -> list[int]:
        return [self.stoi.get(t, UNK) for t in split_tokens(text, lowercase=False)]

    def decode(self, ids: Sequence[int]) -> str:
        tokens = [self.itos[i] for i in ids if i not in (PAD, BOS, EOS)]
        return detokenize(tokens)


class _EncoderDecoder(nn.Module):
    def __init__(self, vocab_size: int, config: TinyModelConfig):
        super().__init__()
        self.embedding = nn.Embedding(vocab_size, config.embedding_dim, padding_idx=PAD)
        self.encoder = nn.GRU(config.embedding_dim, config.hidden_dim, batch_first=True)
        self.decoder = nn.GRU(config.embedding_dim, config.hidden_dim, batch_first=True)
        self.out = nn.Linear(2 * config.hidden_dim, vocab_size)

    def encode(self, src: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        # Pack so padding never leaks into the final hidden state.
        lengths = (src != PAD).sum(dim=1).clamp(min=1)
        packed = nn.utils.rnn.pack_padded_sequence(
            self.embedding(src), lengths.cpu(), batch_first=True, enforce_sorted=False
        )
        packed_outputs, hidden = self.encoder(packed)
        outputs, _ = nn.utils.rnn.pad_packed_sequence(
            packed_outputs, batch_first=True, total_length=src.size(1)
        )
        return outputs, hidden

    def decode_step(
        self,
        tokens: torch.Tensor,
        hidden: torch.Tensor,
        enc_outputs: torch.Tensor,
        enc_mask: torch.Tensor,
    ) -> tuple[torch.Tensor, torch.Tensor]:
        """One (or more) decoder steps with dot attention over the encoder."""
        dec_outputs, hidden = self.decoder(self.embedding(tokens), hidden)
        scores = torch.bmm(dec_outputs, enc_outputs.transpose(1, 2))
        scores = scores.masked_fill(~enc_mask.unsqueeze(1), float("-inf"))
        context = torch.bmm(torch.softmax(scores, dim=-1), enc_outputs)
        logits = self.out(torch.cat([dec_outputs, context], dim=-1))
        return logits, hidden


def _pad_batch(sequences: list[list[int]]) -> torch.Tensor:
    width = max(len(s) for s in sequences)
    return torch.tensor(
        [s + [PAD] * (width - len(s)) for s in sequences], dtype=torch.long
    )


class TinySeq2Seq:
    """Trainable generator; must be fine-tuned (or loaded) before ``topk``."""

    def __init__(self, config: TinyModelConfig = TinyModelConfig()):
        self.config = config
        self._vocab: Optional[Vocabulary] = None
        self._model: Optional[_EncoderDecoder] = None

    @property
    def mask_token(self) -> str:
        return "[M]"

    @property
    def is_trained(self) -> bool:
        return self._model is not None

    def fine_tune(
        self,
        pairs: Sequence[TrainingPair],
        config: TrainingConfig,
        *,
        select_by: Optional[SelectionHook] = None,
    ) -> "TinySeq2Seq":
        if not pairs:
            raise ValueError("cannot fine-tune on an empty pair list")
        torch.manual_seed(config.seed)
        self._vocab = Vocabulary.from_texts(
            [p.input_text for p in pairs] + [p.target_text for p in pairs]
        )
        self._model = _EncoderDecoder(len(self._vocab), self.config)
        optimizer = torch.optim.Adam(self._model.parameters(), lr=config.learning_rate)
        sources = [self._vocab.encode(p.input_text) for p in pairs]
        targets = [[BOS] + self._vocab.encode(p.target_text) + [EOS] for p in pairs]
        order = list(range(len(pairs)))
        shuffler = random.Random(config.seed)
        best_state = None
        best_score = -math.inf
        for _ in range(config.epochs):
            shuffler.shuffle(order)
            self._model.train()
            for start in range(0, len(order), config.batch_size):
                batch = order[start : start + config.batch_size]
                src = _pad_batch([sources[i] for i in batch])
                tgt = _pad_batch([targets[i] for i in batch])
                enc_outputs, hidden = self._model.encode(src)
                logits, _ = self._model.decode_step(
                    tgt[:, :-1], hidden, enc_outputs, src != PAD
                )
                loss = F.cross_entropy(
                    logits.reshape(-1, logits.size(-1)),
                    tgt[:, 1:].reshape(-1),
                    ignore_index=PAD,
                )
                optimizer.zero_grad()
                loss.backward()
                optimizer.step()
            if select_by is not None:
                self._model.eval()
                score = float(select_by(self))
                if score > best_score:
                    best_score = score
                    best_state = {
                        k: v.detach().clone() for k, v in self._model.state_dict().items()
                    }
        if select_by is not None and best_state is not None:
            self._model.load_state_dict(best_state)
        self._model.eval()
        return self

    @torch.no_grad()
    def topk(self, prompt: str, k: int) -> list[Candidate]:
        if k < 1:
            raise ValueError("k must be at least 1")
        if self._model is None or self._vocab is None:
            raise BackendError("tiny-seq2seq has not been fine-tuned or loaded yet")
        self._model.eval()
        src = torch.tensor([self._vocab.encode(prompt) or [UNK]], dtype=torch.long)
        enc_outputs, enc_hidden = self._model.encode(src)
        enc_mask = src != PAD
        width = max(self.config.beam_width, k)

        # Each live hypothesis: (token ids, cumulative logprob, hidden state).
        live: list[tuple[list[int], float, torch.Tensor]] = [([BOS], 0.0, enc_hidden)]
        finished: list[tuple[list[int], float]] = []
        for _ in range(self.config.max_output_tokens):
            if not live or len(finished) >= 2 * width:
                break
            expansions: list[tuple[list[int], float, torch.Tensor]] = []
            for ids, logprob, hidden in live:
                step = torch.tensor([[ids[-1]]], dtype=torch.long)
                logits, new_hidden = self._model.decode_step(
                    step, hidden, enc_outputs, enc_mask
                )
                logprobs = F.log_softmax(logits[0, -1], dim=-1)
                logprobs[PAD] = float("-inf")
                logprobs[BOS] = float("-inf")
                top = torch.topk(logprobs, min(width, logprobs.numel()))
                for token_logprob, token in zip(top.values.tolist(), top.indices.tolist()):
                    expansions.append((ids + [token], logprob + token_logprob, new_hidden))
            expansions.sort(key=lambda e: -e[1])
            live = []
            for ids, logprob, hidden in expansions:
                if ids[-1] == EOS:
                    finished.append((ids, logprob))
                elif len(live) < width:
                    live.append((ids, logprob, hidden))
        # Hypotheses that never emitted EOS still count, truncated as-is.
        finished.extend((ids, logprob) for ids, logprob, _ in live)
        finished.sort(key=lambda f: -f[1])

        candidates: list[Candidate] = []
        seen: set[str] = set()
        for ids, logprob in finished:
            text = self._vocab.decode(ids)
            if not text.strip() or text in seen:
                continue
            seen.add(text)
            candidates.append(Candidate(text=text, logprob=min(logprob, 0.0)))
            if len(candidates) == k:
                break
        if not candidates:
            raise BackendError(f"no usable candidates generated for prompt {prompt!r}")
        validate_candidate_batch(candidates)
        return candidates

    def save(self, path: str | Path) -> Path:
        if self._model is None or self._vocab is None:
            raise BackendError("nothing to save: model is untrained")
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        torch.save(
            {
                "itos": self._vocab.itos,
                "config": self.config.__dict__,
                "state_dict": self._model.state_dict(),
            },
            path,
        )
        return path

    @classmethod
    def load(cls, path: str | Path) -> "TinySeq2Seq":
        payload = torch.load(Path(path), weights_only=False)
        generator = cls(TinyModelConfig(**payload["config"]))
        generator._vocab = Vocabulary(payload["itos"])
        generator._model = _EncoderDecoder(len(generator._vocab), generator.config)
        generator._model.load_state_dict(payload["state_dict"])
        generator._model.eval()
        return generator
