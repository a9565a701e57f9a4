"""
Attention primitives shared by the encoder and every boundary learner.

Token sequences are `(..., n, C)` tensors laid out row-major over the
`(h, w)` grid of their scale; feature maps are `(..., C, h, w)`.
"""

from __future__ import annotations

import torch
import torch.nn.functional as F
from torch import Tensor, nn

from xbound_seg.constants import LN_EPS
from xbound_seg.errors import NumericError, ShapeError

WEIGHTING_MODES = ("softmax", "sigmoid")

####################################################################################################
# SPATIAL <-> SEQUENTIAL
####################################################################################################


def sequentialize(feature: Tensor) -> Tensor:
    """
    `(..., C, h, w)` feature map to `(..., h * w, C)` tokens, row-major.
    """
    if feature.ndim not in (3, 4):
        raise ShapeError(f"Expected (C, h, w) or (B, C, h, w), got {tuple(feature.shape)}")
    return feature.flatten(-2).transpose(-1, -2)


def desequentialize(seq: Tensor, h: int, w: int) -> Tensor:
    """
    `(..., h * w, C)` tokens back to a `(..., C, h, w)` feature map.
    """
    if seq.ndim not in (2, 3) or seq.shape[-2] != h * w:
        raise ShapeError(f"Cannot lay {tuple(seq.shape)} tokens onto a {h}x{w} grid")
    return seq.transpose(-1, -2).reshape(*seq.shape[:-2], seq.shape[-1], h, w)


####################################################################################################
# SUB-LAYERS
####################################################################################################


class MultiHeadAttention(nn.Module):
    """
    Multi-head attention with separate query and key/value widths.

    In `softmax` mode each query's weights over the keys are normalised to
    sum to one. In `sigmoid` mode every query-key logit is squashed
    independently, so a single key still yields query-dependent weights.

    Parameters
    ----------
    dim : int
        Query (and output) width.
    heads : int
        Number of heads; must divide `dim`.
    kv_dim : None | int
        Key/value width, defaults to `dim`.
    mode : str
        `softmax` or `sigmoid`.
    """

    def __init__(
        self,
        dim: int,
        heads: int,
        kv_dim: None | int = None,
        mode: str = "softmax",
    ) -> None:
        super().__init__()
        if dim % heads != 0:
            raise ShapeError(f"dim {dim} is not divisible by heads {heads}")
        if mode not in WEIGHTING_MODES:
            raise ValueError(f"mode must be one of {WEIGHTING_MODES}, got {mode}")
        kv_dim = kv_dim or dim
        self.dim = dim
        self.heads = heads
        self.head_dim = dim // heads
        self.mode = mode
        self.q_proj = nn.Linear(dim, dim)
        self.k_proj = nn.Linear(kv_dim, dim)
        self.v_proj = nn.Linear(kv_dim, dim)
        self.out_proj = nn.Linear(dim, dim)

    def _split(self, x: Tensor) -> Tensor:
        # (B, n, dim) -> (B, heads, n, head_dim)
        b, n, _ = x.shape
        return x.view(b, n, self.heads, self.head_dim).transpose(1, 2)

    def attention_weights(
        self, q: Tensor, k: Tensor, attn_mask: None | Tensor = None
    ) -> Tensor:
        """
        `(B, heads, n_q, n_k)` attention weights.
        `attn_mask` is boolean `(n_q, n_k)`; True entries are blocked.
        """
        logits = self._split(self.q_proj(q)) @ self._split(self.k_proj(k)).transpose(-1, -2)
        logits = logits * self.head_dim**-0.5
        if self.mode == "softmax":
            if attn_mask is not None:
                logits = logits.masked_fill(attn_mask, float("-inf"))
            return logits.softmax(dim=-1)
        weights = logits.sigmoid()
        if attn_mask is not None:
            weights = weights.masked_fill(attn_mask, 0.0)
        return weights

    def attend(
        self, q: Tensor, k: Tensor, v: Tensor, attn_mask: None | Tensor = None
    ) -> Tensor:
        """
        Weighted values concatenated over heads, before the output projection.
        """
        weights = self.attention_weights(q, k, attn_mask)
        out = weights @ self._split(self.v_proj(v))
        b, _, n, _ = out.shape
        return out.transpose(1, 2).reshape(b, n, self.dim)

    def forward(
        self, q: Tensor, k: Tensor, v: Tensor, attn_mask: None | Tensor = None
    ) -> Tensor:
        if k.shape[-2] != v.shape[-2]:
            raise ShapeError(f"key and value token counts differ: {k.shape} vs {v.shape}")
        if q.shape[-1] != self.dim:
            raise ShapeError(f"query width {q.shape[-1]} does not match {self.dim}")
        for name, x in (("query", q), ("key", k), ("value", v)):
            if not torch.isfinite(x).all():
                raise NumericError(f"Non-finite values in attention {name}")
        if q.ndim == 2:
            # Unbatched (n, C) sequences
            out = self.attend(q[None], k[None], v[None], attn_mask)
            return self.out_proj(out)[0]
        return self.out_proj(self.attend(q, k, v, attn_mask))


class FeedForward(nn.Module):
    """Two affine maps with a GELU between; hidden width `expansion * dim`."""

    def __init__(self, dim: int, expansion: int = 4) -> None:
        super().__init__()
        self.fc1 = nn.Linear(dim, expansion * dim)
        self.act = nn.GELU()
        self.fc2 = nn.Linear(expansion * dim, dim)

    def forward(self, seq: Tensor) -> Tensor:
        if seq.shape[-1] != self.fc1.in_features:
            raise ShapeError(f"token width {seq.shape[-1]} != {self.fc1.in_features}")
        return self.fc2(self.act(self.fc1(seq)))


class ResidualNorm(nn.Module):
    """`LayerNorm(x + sublayer_output)` over the channel axis of each token."""

    def __init__(self, dim: int) -> None:
        super().__init__()
        self.norm = nn.LayerNorm(dim, eps=LN_EPS)

    def forward(self, x: Tensor, sublayer_output: Tensor) -> Tensor:
        if x.shape != sublayer_output.shape:
            raise ShapeError(f"{tuple(x.shape)} vs {tuple(sublayer_output.shape)}")
        return self.norm(x + sublayer_output)


class PositionEmbedding(nn.Module):
    """
    One learned vector per token position of an `h x w` grid.
    Asking for another grid size resamples the table bilinearly.
    """

    def __init__(self, dim: int, h: int, w: int) -> None:
        super().__init__()
        self.h = h
        self.w = w
        self.table = nn.Parameter(torch.zeros(1, h * w, dim))
        nn.init.trunc_normal_(self.table, std=0.02)

    def resampled(self, h: int, w: int) -> Tensor:
        if (h, w) == (self.h, self.w):
            return self.table
        grid = desequentialize(self.table, self.h, self.w)
        grid = F.interpolate(grid, size=(h, w), mode="bilinear", align_corners=False)
        return sequentialize(grid)

    def forward(self, seq: Tensor, h: int, w: int) -> Tensor:
        return seq + self.resampled(h, w)


####################################################################################################
# BLOCKS
####################################################################################################


class TransformerBlock(nn.Module):
    """
    Self-attention then feed-forward, each followed by `ResidualNorm`.

    With `kv_stride > 1` keys and values come from the average-pooled grid,
    which keeps attention tractable on large scales.
    """

    def __init__(
        self, dim: int, heads: int, expansion: int = 4, kv_stride: int = 1
    ) -> None:
        super().__init__()
        self.kv_stride = kv_stride
        self.attn = MultiHeadAttention(dim, heads)
        self.norm1 = ResidualNorm(dim)
        self.ffn = FeedForward(dim, expansion)
        self.norm2 = ResidualNorm(dim)

    def key_values(self, z: Tensor, h: int, w: int) -> Tensor:
        if self.kv_stride == 1:
            return z
        grid = F.avg_pool2d(desequentialize(z, h, w), self.kv_stride)
        return sequentialize(grid)

    def forward(self, z: Tensor, h: int, w: int) -> Tensor:
        kv = self.key_values(z, h, w)
        x = self.norm1(z, self.attn(z, kv, kv))
        return self.norm2(x, self.ffn(x))
