"""Frozen wav2vec-style convolutional encoder (inference only).

Geometry of the published large model: a five-layer strided feature
encoder (kernels 10,8,4,4,4; strides 5,4,2,2,2; 512 channels) producing
one 512-dim vector per 160 samples (10 ms at 16 kHz, ~29 ms receptive
field), followed by a twelve-layer causal context network (kernel sizes
2..13, stride 1, residual connections) that preserves the frame count.

Weights come either from a torch state dict saved for this module's
parameter names (a checkpoint converted offline), or from a seeded
random initialization (`seeded:<int>`) that keeps the full geometry for
pipeline-conformance runs without checkpoint access.
"""

import numpy as np
import torch
from torch import nn

from .errors import ModelLoadError, UtteranceError

ENCODER_KERNELS = (10, 8, 4, 4, 4)
ENCODER_STRIDES = (5, 4, 2, 2, 2)
CONTEXT_KERNELS = tuple(range(2, 14))
CHANNELS = 512
HOP_MS = 10.0
SAMPLES_PER_FRAME = 160
MIN_SAMPLES = 465  # encoder receptive field


def num_output_frames(n_samples: int) -> int:
    """Frame count produced for an input length, from the stride plan."""
    t = n_samples
    for k, s in zip(ENCODER_KERNELS, ENCODER_STRIDES):
        t = (t - k) // s + 1
    return t


class _ConvBlock(nn.Module):
    def __init__(self, c_in, c_out, kernel, stride, causal_pad):
        super().__init__()
        self.causal_pad = causal_pad
        self.conv = nn.Conv1d(c_in, c_out, kernel, stride=stride, bias=False)
        self.norm = nn.GroupNorm(1, c_out)

    def forward(self, x):
        if self.causal_pad:
            x = nn.functional.pad(x, (self.conv.kernel_size[0] - 1, 0))
        return torch.relu(self.norm(self.conv(x)))


class Wav2VecEncoder(nn.Module):
    def __init__(self):
        super().__init__()
        blocks = []
        c_in = 1
        for k, s in zip(ENCODER_KERNELS, ENCODER_STRIDES):
            blocks.append(_ConvBlock(c_in, CHANNELS, k, s, causal_pad=False))
            c_in = CHANNELS
        self.feature_encoder = nn.ModuleList(blocks)
        self.context = nn.ModuleList(
            _ConvBlock(CHANNELS, CHANNELS, k, 1, causal_pad=True)
            for k in CONTEXT_KERNELS)

    def forward(self, x):
        for block in self.feature_encoder:
            x = block(x)
        for block in self.context:
            x = x + block(x)
        return x


def load_wav2vec(model_id: str, device: str = "cpu") -> Wav2VecEncoder:
    model = Wav2VecEncoder()
    if model_id.startswith("seeded:"):
        try:
            seed = int(model_id.split(":", 1)[1])
        except ValueError:
            raise ModelLoadError(f"bad seeded model identifier {model_id!r}")
        with torch.random.fork_rng():
            torch.manual_seed(seed)
            model = Wav2VecEncoder()
    else:
        try:
            state = torch.load(model_id, map_location="cpu",
                               weights_only=True)
            model.load_state_dict(state)
        except Exception as exc:
            raise ModelLoadError(f"cannot load wav2vec checkpoint "
                                 f"{model_id!r}: {exc}")
    model.to(device)
    model.eval()
    model.requires_grad_(False)
    return model


def extract_wav2vec(model: Wav2VecEncoder, samples: np.ndarray) -> np.ndarray:
    """512-dim context vectors, one per 10 ms of 16 kHz audio."""
    if samples.size < MIN_SAMPLES:
        raise UtteranceError(f"clip of {samples.size} samples is shorter "
                             f"than one encoder window ({MIN_SAMPLES})")
    x = torch.from_numpy(np.ascontiguousarray(samples, dtype=np.float32))
    x = x.view(1, 1, -1).to(next(model.parameters()).device)
    with torch.no_grad():
        out = model(x)
    return out[0].T.contiguous().cpu().numpy()
