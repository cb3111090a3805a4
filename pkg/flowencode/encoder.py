"""
Frozen, seeded patch encoder.

Patchify 8x8 -> linear embedding -> learned position embedding -> two
pre-norm transformer blocks -> LayerNorm -> mean over patch tokens. The
weights are drawn from a private RNG stream seeded by ``seed`` and never
receive gradients, so every process that builds the encoder with the same
seed gets bit-identical parameters.
"""

import hashlib
from functools import lru_cache

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from core.exceptions import ValidationFailure


class FrozenEncoder(nn.Module):
    def __init__(
        self,
        seed: int = 0,
        embed_dim: int = 128,
        patch_size: int = 8,
        depth: int = 2,
        heads: int = 4,
        frame_size: int = 64,
    ):
        super().__init__()
        if frame_size % patch_size:
            raise ValidationFailure(
                f"frame size {frame_size} is not divisible by patch size {patch_size}"
            )
        self.seed = seed
        self.embed_dim = embed_dim
        self.patch_size = patch_size
        self.frame_size = frame_size
        num_patches = (frame_size // patch_size) ** 2

        with torch.random.fork_rng(devices=[]):
            torch.manual_seed(seed)
            self.patch_embed = nn.Linear(3 * patch_size * patch_size, embed_dim)
            self.pos_embed = nn.Parameter(torch.randn(1, num_patches, embed_dim) * 0.02)
            self.blocks = nn.ModuleList(
                nn.TransformerEncoderLayer(
                    d_model=embed_dim,
                    nhead=heads,
                    dim_feedforward=4 * embed_dim,
                    dropout=0.0,
                    activation="gelu",
                    batch_first=True,
                    norm_first=True,
                )
                for _ in range(depth)
            )
            self.norm = nn.LayerNorm(embed_dim)
        self.requires_grad_(False)
        super().train(False)

    def train(self, mode: bool = True):
        # always in inference mode
        return super().train(False)

    def patchify(self, pixels: torch.Tensor) -> torch.Tensor:
        """(B, H, W, 3) -> (B, num_patches, 3 * p * p)."""
        images = pixels.permute(0, 3, 1, 2)
        return F.unfold(images, kernel_size=self.patch_size, stride=self.patch_size).transpose(1, 2)

    def forward(self, pixels: torch.Tensor) -> torch.Tensor:
        height, width = pixels.shape[1:3]
        if height % self.patch_size or width % self.patch_size:
            raise ValidationFailure(
                f"frame {height}x{width} is not divisible by patch size {self.patch_size}"
            )
        if height != self.frame_size or width != self.frame_size:
            raise ValidationFailure(
                f"encoder expects {self.frame_size}x{self.frame_size} frames, got {height}x{width}"
            )
        tokens = self.patch_embed(self.patchify(pixels)) + self.pos_embed
        for block in self.blocks:
            tokens = block(tokens)
        return self.norm(tokens).mean(dim=1)

    def parameter_checksum(self) -> str:
        """SHA-256 over every parameter tensor, in registration order."""
        digest = hashlib.sha256()
        for name, tensor in self.state_dict().items():
            digest.update(name.encode("utf-8"))
            digest.update(tensor.detach().cpu().contiguous().numpy().tobytes())
        return digest.hexdigest()


@lru_cache(maxsize=8)
def get_encoder(
    seed: int = 0,
    embed_dim: int = 128,
    patch_size: int = 8,
    depth: int = 2,
    heads: int = 4,
    frame_size: int = 64,
) -> FrozenEncoder:
    """Shared encoder instance per configuration."""
    return FrozenEncoder(seed, embed_dim, patch_size, depth, heads, frame_size)


def encode_pixels(pixels: np.ndarray, encoder: FrozenEncoder) -> np.ndarray:
    """Encode one H x W x 3 frame to a float32 vector."""
    with torch.inference_mode():
        batch = torch.from_numpy(np.ascontiguousarray(pixels, dtype=np.float32))[None]
        return encoder(batch)[0].numpy().astype(np.float32, copy=True)
