"""
Training objective: multi-scale Dice on the segmentation heads, binary
cross-entropy on every predicted key-point map, and the label pyramid both
are measured against.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
from torch import Tensor

from xbound_seg.constants import BCE_CLAMP, DICE_EPS, N_SCALES, SCALE_STRIDES
from xbound_seg.errors import DimensionError, ShapeError
from xbound_seg.mixins.keypoints_mixin import KeypointsMixin
from xbound_seg.networks.xbound_former import ForwardOutput, XBoundFormer

####################################################################################################
# LABEL PYRAMID
####################################################################################################


@dataclass
class LabelPyramid:
    """
    Ground truth per scale: `seg[l]` and `keypoints[l]` are uint8 maps of
    side `H / 2**(l+2)` for 0-based `l`.
    """

    seg: list[np.ndarray]
    keypoints: list[np.ndarray]

    @staticmethod
    def to_tensors(
        pyramids: list[LabelPyramid], device: None | torch.device = None
    ) -> tuple[list[Tensor], list[Tensor]]:
        """
        Stacks a batch of pyramids into per-scale `(B, 1, h, w)` float tensors.
        """
        seg = [
            torch.as_tensor(np.stack([p.seg[l] for p in pyramids])[:, None], dtype=torch.float32, device=device)
            for l in range(N_SCALES)
        ]
        keypoints = [
            torch.as_tensor(np.stack([p.keypoints[l] for p in pyramids])[:, None], dtype=torch.float32, device=device)
            for l in range(N_SCALES)
        ]
        return seg, keypoints


def build_label_pyramid(mask: np.ndarray, r: int, k: int) -> LabelPyramid:
    """
    Nearest-neighbour downsampled masks and max-pooled key-point maps.

    Nearest-neighbour sampling at rate `f` keeps pixel `(f//2, f//2)` of every
    `f x f` cell, the pixel nearest the cell centre that bilinear upsampling
    of the heads assumes.
    """
    mask = KeypointsMixin.check_mask(mask)
    h, w = mask.shape
    div = SCALE_STRIDES[-1]
    if h % div or w % div:
        raise DimensionError(f"Mask size {h}x{w} is not divisible by {div}")
    seg = [mask[f // 2 :: f, f // 2 :: f].copy() for f in SCALE_STRIDES]
    kp_map = KeypointsMixin.generate_keypoint_map(mask, r, k)
    keypoints = KeypointsMixin.build_keypoint_pyramid(kp_map, N_SCALES)
    return LabelPyramid(seg=seg, keypoints=keypoints)


####################################################################################################
# LOSSES
####################################################################################################


def dice_loss(pred_probs: Tensor, target: Tensor, eps: float = DICE_EPS) -> Tensor:
    """
    Soft Dice loss `1 - (2 sum(p t) + eps) / (sum p + sum t + eps)`.

    Sums run over everything but a leading batch axis when the inputs are
    4-D `(B, 1, h, w)`; the batch is then averaged.
    """
    if pred_probs.shape != target.shape:
        raise ShapeError(f"{tuple(pred_probs.shape)} vs {tuple(target.shape)}")
    if pred_probs.ndim == 4:
        dims = tuple(range(1, pred_probs.ndim))
    else:
        dims = tuple(range(pred_probs.ndim))
    inter = (pred_probs * target).sum(dim=dims)
    total = pred_probs.sum(dim=dims) + target.sum(dim=dims)
    return (1.0 - (2.0 * inter + eps) / (total + eps)).mean()


def binary_cross_entropy(pred: Tensor, target: Tensor) -> Tensor:
    """Mean per-pixel BCE with predictions clamped away from 0 and 1."""
    if pred.shape != target.shape:
        raise ShapeError(f"{tuple(pred.shape)} vs {tuple(target.shape)}")
    pred = pred.clamp(BCE_CLAMP, 1.0 - BCE_CLAMP)
    return -(target * pred.log() + (1.0 - target) * (1.0 - pred).log()).mean()


def map_loss(pred_maps: list[list[Tensor]], target_pyramid: list[Tensor]) -> Tensor:
    """
    Mean BCE over every predicted key-point map against its scale's target.

    Parameters
    ----------
    pred_maps : list[list[Tensor]]
        `pred_maps[l]` holds the maps predicted at scale `l`.
    target_pyramid : list[Tensor]
        One target per scale, same shape as that scale's predictions.
    """
    if len(pred_maps) != len(target_pyramid):
        raise ShapeError(f"{len(pred_maps)} scales of maps vs {len(target_pyramid)} targets")
    losses = [
        binary_cross_entropy(pred, target)
        for maps, target in zip(pred_maps, target_pyramid)
        for pred in maps
    ]
    if not losses:
        # Variants without boundary learners predict no maps
        return target_pyramid[0].new_zeros(())
    return torch.stack(losses).mean()


def total_loss(
    output: ForwardOutput,
    seg_targets: list[Tensor],
    keypoint_targets: list[Tensor],
    lam: float,
    full_res_target: None | Tensor = None,
) -> tuple[Tensor, Tensor, Tensor]:
    """
    `seg + lam * map`, with `seg` the mean Dice loss over the four heads.

    Parameters
    ----------
    output : ForwardOutput
        Model output.
    seg_targets : list[Tensor]
        `S_l` per scale, `(B, 1, h_l, w_l)`.
    keypoint_targets : list[Tensor]
        `M_l` per scale.
    lam : float
        Weight of the key-point map loss.
    full_res_target : None | Tensor
        `(B, 1, H, W)` mask. When given, the first head is scored on its
        upsampled probabilities (the map `predict` thresholds) against this
        mask instead of against `S_1`.

    Returns
    -------
    tuple[Tensor, Tensor, Tensor]
        `(total, seg_component, map_component)`.
    """
    if lam < 0:
        raise ValueError(f"lam must be >= 0, got {lam}")
    if len(output.seg_logits) != len(seg_targets):
        raise ShapeError(f"{len(output.seg_logits)} heads vs {len(seg_targets)} targets")
    probs = [logits.sigmoid() for logits in output.seg_logits]
    targets = list(seg_targets)
    if full_res_target is not None:
        probs[0] = XBoundFormer.logits_to_probs(output.seg_logits[0])
        targets[0] = full_res_target
    seg = torch.stack([dice_loss(p, t) for p, t in zip(probs, targets)]).mean()
    kp = map_loss(output.key_maps, keypoint_targets)
    return seg + lam * kp, seg, kp
