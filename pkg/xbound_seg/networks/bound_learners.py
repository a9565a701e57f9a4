"""
Boundary learners.

- `ImBoundBlock` refines tokens with self-attention and gates them with its
  own predicted key-point map.
- `ExBoundBlock` distils boundary knowledge into a single per-scale
  embedding with a decoder, then uses it to refine the tokens.
- `XBoundFuse` exchanges the embeddings of two adjacent scales and fuses
  the two feature maps at the finer resolution.
"""

from __future__ import annotations

import torch
import torch.nn.functional as F
from torch import Tensor, nn

from xbound_seg.errors import ShapeError
from xbound_seg.networks.attention_core import (
    FeedForward,
    MultiHeadAttention,
    ResidualNorm,
    TransformerBlock,
    desequentialize,
    sequentialize,
)


def gate(rho: Tensor, key_map: Tensor) -> Tensor:
    """
    Key-point gate `rho + rho * M`, written as `rho * (1 + M)`.
    `key_map` is `(..., n, 1)` and broadcasts over channels.
    """
    return rho * (1.0 + key_map)


class KeypointPredictor(nn.Module):
    """Per-token affine map to one logit followed by a sigmoid."""

    def __init__(self, dim: int) -> None:
        super().__init__()
        self.fc = nn.Linear(dim, 1)

    def forward(self, seq: Tensor) -> Tensor:
        return self.fc(seq).sigmoid()


class ImBoundBlock(nn.Module):
    """
    Implicit boundary learner.

    `rho` is the self-attention / feed-forward refinement of `z`; the block
    predicts a key-point map `M` from `rho` and returns `rho * (1 + M)`.
    """

    def __init__(
        self, dim: int, heads: int, expansion: int = 4, kv_stride: int = 1
    ) -> None:
        super().__init__()
        self.refine = TransformerBlock(dim, heads, expansion, kv_stride)
        self.predictor = KeypointPredictor(dim)

    def forward(self, z: Tensor, h: int, w: int) -> tuple[Tensor, Tensor]:
        """
        Parameters
        ----------
        z : Tensor
            `(B, h * w, C)` tokens.
        h, w : int
            Grid of the scale.

        Returns
        -------
        tuple[Tensor, Tensor]
            Gated tokens `(B, h * w, C)` and key-point map `(B, 1, h, w)`.
        """
        if z.ndim != 3 or z.shape[1] != h * w:
            raise ShapeError(f"tokens {tuple(z.shape)} do not match a {h}x{w} grid")
        rho = self.refine(z, h, w)
        key_map = self.predictor(rho)
        return gate(rho, key_map), desequentialize(key_map, h, w)


class ExBoundBlock(nn.Module):
    """
    Explicit boundary learner.

    Decoder stage: the boundary embedding goes through masked self-attention,
    cross-attention onto the tokens and a feed-forward layer. Refinement
    stage: the tokens attend to the updated embedding, then are gated by the
    predicted key-point map.
    """

    def __init__(self, dim: int, heads: int, expansion: int = 4) -> None:
        super().__init__()
        self.self_attn = MultiHeadAttention(dim, heads)
        self.norm_self = ResidualNorm(dim)
        self.cross_attn = MultiHeadAttention(dim, heads)
        self.norm_cross = ResidualNorm(dim)
        self.ffn = FeedForward(dim, expansion)
        self.norm_ffn = ResidualNorm(dim)
        self.feat_attn = MultiHeadAttention(dim, heads, mode="softmax")
        self.norm_feat = ResidualNorm(dim)
        self.predictor = KeypointPredictor(dim)

    @staticmethod
    def query_mask(n_queries: int, device: torch.device) -> Tensor:
        """Causal mask over the queries (a no-op for a single query)."""
        return torch.ones(n_queries, n_queries, dtype=torch.bool, device=device).triu(1)

    def decode(self, z: Tensor, xi: Tensor) -> Tensor:
        """Updates the boundary embedding `(B, 1, C)` from the tokens."""
        mask = self.query_mask(xi.shape[1], xi.device)
        xi = self.norm_self(xi, self.self_attn(xi, xi, xi, attn_mask=mask))
        xi = self.norm_cross(xi, self.cross_attn(xi, z, z))
        return self.norm_ffn(xi, self.ffn(xi))

    def forward(
        self, z: Tensor, xi: Tensor, h: int, w: int
    ) -> tuple[Tensor, Tensor, Tensor]:
        """
        Parameters
        ----------
        z : Tensor
            `(B, h * w, C)` tokens.
        xi : Tensor
            `(B, 1, C)` boundary embedding.

        Returns
        -------
        tuple[Tensor, Tensor, Tensor]
            Gated tokens, updated embedding and key-point map `(B, 1, h, w)`.
        """
        if z.ndim != 3 or z.shape[1] != h * w:
            raise ShapeError(f"tokens {tuple(z.shape)} do not match a {h}x{w} grid")
        if xi.ndim != 3 or xi.shape[-1] != z.shape[-1]:
            raise ShapeError(
                f"embedding {tuple(xi.shape)} does not match token width {z.shape[-1]}"
            )
        xi = self.decode(z, xi)
        z_ref = self.norm_feat(z, self.feat_attn(z, xi, xi))
        key_map = self.predictor(z_ref)
        return gate(z_ref, key_map), xi, desequentialize(key_map, h, w)


class XBoundFuse(nn.Module):
    """
    Cross-scale boundary fusion of a fine (`low`) and a coarse (`high`) scale.

    Each feature map attends to the other scale's boundary embedding
    (projected to its own width); the attended terms are added, the coarse
    map is upsampled 2x, and a 1x1 projection maps the concatenation back to
    the fine width.
    """

    def __init__(
        self, low_dim: int, high_dim: int, heads_low: int, heads_high: int, mode: str = "sigmoid"
    ) -> None:
        super().__init__()
        self.high_to_low = nn.Linear(high_dim, low_dim)
        self.low_to_high = nn.Linear(low_dim, high_dim)
        self.attn_low = MultiHeadAttention(low_dim, heads_low, mode=mode)
        self.attn_high = MultiHeadAttention(high_dim, heads_high, mode=mode)
        self.fuse = nn.Conv2d(low_dim + high_dim, low_dim, kernel_size=1)

    def boundary_terms(
        self, f_low: Tensor, xi_low: Tensor, f_high: Tensor, xi_high: Tensor
    ) -> tuple[Tensor, Tensor]:
        """
        The attended terms added to each map, as `(B, C, h, w)` feature maps.
        """
        if f_low.ndim != 4 or f_high.ndim != 4:
            raise ShapeError("x_bound_fuse expects (B, C, h, w) feature maps")
        h, w = f_low.shape[-2:]
        hh, wh = f_high.shape[-2:]
        if (hh * 2, wh * 2) != (h, w):
            raise ShapeError(f"coarse grid {hh}x{wh} is not half of fine grid {h}x{w}")
        xi_h2l = self.high_to_low(xi_high)
        xi_l2h = self.low_to_high(xi_low)
        z_low = sequentialize(f_low)
        z_high = sequentialize(f_high)
        term_low = self.attn_low(z_low, xi_h2l, xi_h2l)
        term_high = self.attn_high(z_high, xi_l2h, xi_l2h)
        return desequentialize(term_low, h, w), desequentialize(term_high, hh, wh)

    def forward(
        self, f_low: Tensor, xi_low: Tensor, f_high: Tensor, xi_high: Tensor
    ) -> Tensor:
        term_low, term_high = self.boundary_terms(f_low, xi_low, f_high, xi_high)
        gamma_low = f_low + term_low
        gamma_high = f_high + term_high
        gamma_high = F.interpolate(
            gamma_high, scale_factor=2, mode="bilinear", align_corners=False
        )
        return self.fuse(torch.cat([gamma_low, gamma_high], dim=1))
