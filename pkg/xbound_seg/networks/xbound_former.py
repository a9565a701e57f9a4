"""
The boundary-aware pyramid transformer.

Pipeline per image:

1. a four-stage pyramid encoder produces `f_l^0` at `input_size / 2**(l+1)`,
2. each scale adds position embeddings and runs `n_im` im-Bound then `n_ex`
   ex-Bound blocks, giving `f_l^1`, the embedding `xi_l` and one key-point
   map per block,
3. X-Bound fuses each scale with the next coarser one (`f_l^2`, l = 1..3);
   the deepest scale passes through (`f_4^2 = f_4^1`),
4. a 1x1 head per scale predicts segmentation logits `S_l`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import torch
import torch.nn.functional as F
from torch import Tensor, nn

from xbound_seg.constants import LN_EPS, N_SCALES, SCALE_STRIDES
from xbound_seg.errors import ShapeError
from xbound_seg.networks.attention_core import (
    PositionEmbedding,
    TransformerBlock,
    desequentialize,
    sequentialize,
)
from xbound_seg.networks.bound_learners import ExBoundBlock, ImBoundBlock, XBoundFuse
from xbound_seg.pydantic_models.run_configs import ModelConfigs


@dataclass
class ForwardOutput:
    """
    Everything one forward pass produces, indexed by scale (0-based).

    `key_maps[l][b]` is the map predicted by block `b` (im-Bound blocks first)
    at scale `l`.
    """

    seg_logits: list[Tensor]
    key_maps: list[list[Tensor]]
    embeddings: list[Tensor]
    encoded: list[Tensor] = field(default_factory=list)
    refined: list[Tensor] = field(default_factory=list)
    fused: list[Tensor] = field(default_factory=list)

    @property
    def n_key_maps(self) -> int:
        return sum(len(i) for i in self.key_maps)


####################################################################################################
# ENCODER
####################################################################################################


class PatchEmbed(nn.Module):
    """Non-overlapping strided patch embedding followed by LayerNorm."""

    def __init__(self, in_dim: int, out_dim: int, stride: int) -> None:
        super().__init__()
        self.proj = nn.Conv2d(in_dim, out_dim, kernel_size=stride, stride=stride)
        self.norm = nn.LayerNorm(out_dim, eps=LN_EPS)

    def forward(self, x: Tensor) -> tuple[Tensor, int, int]:
        x = self.proj(x)
        h, w = x.shape[-2:]
        return self.norm(sequentialize(x)), h, w


class PyramidStage(nn.Module):
    """__summary__"""

    def __init__(
        self, in_dim: int, dim: int, stride: int, heads: int, depth: int, expansion: int, kv_stride: int
    ) -> None:
        super().__init__()
        self.embed = PatchEmbed(in_dim, dim, stride)
        self.blocks = nn.ModuleList(
            TransformerBlock(dim, heads, expansion, kv_stride) for _ in range(depth)
        )

    def forward(self, x: Tensor) -> Tensor:
        z, h, w = self.embed(x)
        for block in self.blocks:
            z = block(z, h, w)
        return desequentialize(z, h, w)


class PyramidEncoder(nn.Module):
    """
    Four stages with patch strides 4, 2, 2, 2, trained from scratch.
    """

    def __init__(self, configs: ModelConfigs) -> None:
        super().__init__()
        in_dims = [configs.in_channels] + configs.channels[:-1]
        strides = [4, 2, 2, 2]
        self.stages = nn.ModuleList(
            PyramidStage(
                in_dim,
                dim,
                stride,
                heads,
                configs.encoder_depth,
                configs.mlp_ratio,
                kv_stride,
            )
            for in_dim, dim, stride, heads, kv_stride in zip(
                in_dims, configs.channels, strides, configs.heads, configs.kv_strides
            )
        )

    def forward(self, image: Tensor) -> list[Tensor]:
        features = []
        x = image
        for stage in self.stages:
            x = stage(x)
            features.append(x)
        return features


####################################################################################################
# IN-SCALE BOUNDARY LEARNING
####################################################################################################


class ScaleLearner(nn.Module):
    """
    Position embedding, `n_im` im-Bound blocks and `n_ex` ex-Bound blocks of
    one scale, plus the learned initial boundary query.
    """

    def __init__(
        self, dim: int, side: int, heads: int, n_im: int, n_ex: int, expansion: int, kv_stride: int
    ) -> None:
        super().__init__()
        self.pos = PositionEmbedding(dim, side, side)
        self.im_blocks = nn.ModuleList(
            ImBoundBlock(dim, heads, expansion, kv_stride) for _ in range(n_im)
        )
        self.ex_blocks = nn.ModuleList(
            ExBoundBlock(dim, heads, expansion) for _ in range(n_ex)
        )
        self.query = nn.Parameter(torch.zeros(1, 1, dim))
        nn.init.trunc_normal_(self.query, std=0.02)

    def forward(self, f0: Tensor) -> tuple[Tensor, Tensor, list[Tensor]]:
        h, w = f0.shape[-2:]
        z = self.pos(sequentialize(f0), h, w)
        xi = self.query.expand(f0.shape[0], -1, -1)
        key_maps = []
        for block in self.im_blocks:
            z, key_map = block(z, h, w)
            key_maps.append(key_map)
        for block in self.ex_blocks:
            z, xi, key_map = block(z, xi, h, w)
            key_maps.append(key_map)
        return desequentialize(z, h, w), xi, key_maps


####################################################################################################
# MODEL
####################################################################################################


class XBoundFormer(nn.Module):
    """
    Boundary-aware pyramid transformer for binary lesion segmentation.

    Parameters
    ----------
    configs : ModelConfigs
        Architecture settings; validated on construction.
    """

    def __init__(self, configs: ModelConfigs) -> None:
        super().__init__()
        self.configs = configs
        self.encoder = PyramidEncoder(configs)
        self.learners = nn.ModuleList(
            ScaleLearner(
                dim,
                side,
                heads,
                configs.n_im,
                configs.n_ex,
                configs.mlp_ratio,
                kv_stride,
            )
            for dim, side, heads, kv_stride in zip(
                configs.channels, configs.scale_sides(), configs.heads, configs.kv_strides
            )
        )
        if configs.use_x_bound:
            self.fusers = nn.ModuleList(
                XBoundFuse(
                    configs.channels[l],
                    configs.channels[l + 1],
                    configs.heads[l],
                    configs.heads[l + 1],
                    configs.x_bound_mode,
                )
                for l in range(N_SCALES - 1)
            )
        else:
            self.fusers = nn.ModuleList()
        self.heads = nn.ModuleList(nn.Conv2d(dim, 1, kernel_size=1) for dim in configs.channels)

    def check_image(self, image: Tensor) -> None:
        size = self.configs.input_size
        if image.ndim != 4 or tuple(image.shape[1:]) != (self.configs.in_channels, size, size):
            raise ShapeError(
                f"Expected (B, {self.configs.in_channels}, {size}, {size}) images, "
                f"got {tuple(image.shape)}"
            )

    def pyramid_encode(self, image: Tensor) -> list[Tensor]:
        """`f_1^0 .. f_4^0` for a `(B, 3, H, W)` batch."""
        self.check_image(image)
        return self.encoder(image)

    def forward(self, image: Tensor) -> ForwardOutput:
        encoded = self.pyramid_encode(image)
        refined, embeddings, key_maps = [], [], []
        for learner, f0 in zip(self.learners, encoded):
            f1, xi, maps = learner(f0)
            refined.append(f1)
            embeddings.append(xi)
            key_maps.append(maps)
        if self.configs.use_x_bound:
            fused = [
                self.fusers[l](refined[l], embeddings[l], refined[l + 1], embeddings[l + 1])
                for l in range(N_SCALES - 1)
            ]
            # The deepest scale is passed through unchanged
            fused.append(refined[-1])
        else:
            fused = list(refined)
        seg_logits = [head(f2) for head, f2 in zip(self.heads, fused)]
        return ForwardOutput(
            seg_logits=seg_logits,
            key_maps=key_maps,
            embeddings=embeddings,
            encoded=encoded,
            refined=refined,
            fused=fused,
        )

    @staticmethod
    def logits_to_probs(seg_logits: Tensor) -> Tensor:
        """
        Sigmoid of first-scale logits, upsampled bilinearly to input resolution.
        """
        return F.interpolate(
            seg_logits.sigmoid(),
            scale_factor=SCALE_STRIDES[0],
            mode="bilinear",
            align_corners=False,
        )

    @torch.no_grad()
    def predict_probs(self, image: Tensor) -> Tensor:
        """`(B, 1, H, W)` lesion probabilities from the first-scale head."""
        return self.logits_to_probs(self.forward(image).seg_logits[0])

    @torch.no_grad()
    def predict(self, image: Tensor, threshold: float = 0.5) -> Tensor:
        """`(B, H, W)` uint8 binary masks."""
        return (self.predict_probs(image)[:, 0] > threshold).to(torch.uint8)
