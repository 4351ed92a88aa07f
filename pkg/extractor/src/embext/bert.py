"""Frozen BERT token embeddings from the second-to-last hidden layer.

With a local pretrained directory the real model and its WordPiece
tokenizer are used. The `seeded:<int>` backend keeps the interface and
output contract (768-dim vectors per sub-word token, special tokens
excluded, second-to-last layer) over a randomly initialized encoder and
a hash-bucket tokenizer, for pipeline-conformance runs without
checkpoint access.
"""

import hashlib

import numpy as np
import torch
from transformers import (
    AutoModel,
    AutoTokenizer,
    BasicTokenizer,
    BertConfig,
    BertModel,
)

from .errors import ModelLoadError, UtteranceError

HIDDEN_DIM = 768
NOMINAL_HOP_MS = 1.0  # tokens are not isochronous; the hop is nominal

_SEEDED_VOCAB = 30000
_PAD_ID, _CLS_ID, _SEP_ID = 0, 1, 2
_FIRST_CONTENT_ID = 3


class _SeededTokenizer:
    """Lower-cased word tokens mapped to stable hash buckets."""

    def __init__(self):
        self._basic = BasicTokenizer(do_lower_case=True)

    def token_ids(self, text: str):
        tokens = self._basic.tokenize(text)
        ids = []
        for token in tokens:
            digest = hashlib.sha1(token.encode("utf-8")).digest()
            bucket = int.from_bytes(digest[:4], "little")
            span = _SEEDED_VOCAB - _FIRST_CONTENT_ID
            ids.append(_FIRST_CONTENT_ID + bucket % span)
        return ids


class _PretrainedTokenizer:
    def __init__(self, tokenizer):
        self._tokenizer = tokenizer

    def token_ids(self, text: str):
        return self._tokenizer.encode(text, add_special_tokens=False)


class BertEmbedder:
    def __init__(self, model, tokenizer, cls_id: int, sep_id: int,
                 device: str):
        self._model = model
        self._tokenizer = tokenizer
        self._cls_id = cls_id
        self._sep_id = sep_id
        self._device = device

    def embed(self, transcript: str) -> np.ndarray:
        ids = self._tokenizer.token_ids(transcript)
        if not ids:
            raise UtteranceError("transcript has no tokens")
        padded = [self._cls_id, *ids, self._sep_id]
        batch = torch.tensor([padded], dtype=torch.long, device=self._device)
        with torch.no_grad():
            out = self._model(input_ids=batch, output_hidden_states=True)
        # Second-to-last layer, start/end special tokens stripped.
        layer = out.hidden_states[-2][0, 1:-1, :]
        return layer.cpu().numpy().astype(np.float32)


def load_bert(model_id: str, device: str = "cpu") -> BertEmbedder:
    if model_id.startswith("seeded:"):
        try:
            seed = int(model_id.split(":", 1)[1])
        except ValueError:
            raise ModelLoadError(f"bad seeded model identifier {model_id!r}")
        config = BertConfig(vocab_size=_SEEDED_VOCAB, hidden_size=HIDDEN_DIM,
                            num_hidden_layers=4, num_attention_heads=12,
                            intermediate_size=3072)
        with torch.random.fork_rng():
            torch.manual_seed(seed)
            model = BertModel(config)
        tokenizer = _SeededTokenizer()
        cls_id, sep_id = _CLS_ID, _SEP_ID
    else:
        try:
            model = AutoModel.from_pretrained(model_id)
            raw = AutoTokenizer.from_pretrained(model_id)
        except Exception as exc:
            raise ModelLoadError(f"cannot load text model {model_id!r}: {exc}")
        if model.config.hidden_size != HIDDEN_DIM:
            raise ModelLoadError(f"{model_id!r} emits "
                                 f"{model.config.hidden_size}-dim vectors, "
                                 f"expected {HIDDEN_DIM}")
        tokenizer = _PretrainedTokenizer(raw)
        cls_id, sep_id = raw.cls_token_id, raw.sep_token_id
    model.to(device)
    model.eval()
    model.requires_grad_(False)
    return BertEmbedder(model, tokenizer, cls_id, sep_id, device)
