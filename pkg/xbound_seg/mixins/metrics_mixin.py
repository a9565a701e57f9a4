"""
Segmentation metrics: Dice, IoU, ASSD and HD95.

Boundary points are foreground pixels 4-adjacent to background or to the
image border. Distances are Euclidean, in pixels of the evaluated frame.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from typing import Iterable

import numpy as np
from scipy import ndimage

from xbound_seg.errors import ShapeError
from xbound_seg.mixins.keypoints_mixin import KeypointsMixin
from xbound_seg.pydantic_models.metrics_report import SampleMetrics

# hd95 takes the sorted directed distance at index ceil(0.95 * n) - 1
PERCENTILE_NUM = 95
PERCENTILE_DEN = 100


class MetricsMixin:
    """__summary__"""

    ###############################################################################################
    # Area metrics
    ###############################################################################################

    @staticmethod
    def check_pair(pred: np.ndarray, gt: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Checks that both masks are binary with equal shapes; returns them as bool."""
        pred = KeypointsMixin.check_mask(pred).astype(bool)
        gt = KeypointsMixin.check_mask(gt).astype(bool)
        if pred.shape != gt.shape:
            raise ShapeError(f"Shape mismatch: pred {pred.shape} vs gt {gt.shape}")
        return pred, gt

    @classmethod
    def dice_score(cls, pred: np.ndarray, gt: np.ndarray) -> float:
        """
        2 |P ∩ G| / (|P| + |G|); 1.0 when both masks are empty.
        """
        pred, gt = cls.check_pair(pred, gt)
        total = int(pred.sum()) + int(gt.sum())
        if total == 0:
            return 1.0
        return 2.0 * int((pred & gt).sum()) / total

    @classmethod
    def iou_score(cls, pred: np.ndarray, gt: np.ndarray) -> float:
        """
        |P ∩ G| / |P ∪ G|; 1.0 when both masks are empty.
        """
        pred, gt = cls.check_pair(pred, gt)
        union = int((pred | gt).sum())
        if union == 0:
            return 1.0
        return int((pred & gt).sum()) / union

    ###############################################################################################
    # Boundary metrics
    ###############################################################################################

    @staticmethod
    def extract_boundary(mask: np.ndarray) -> np.ndarray:
        """
        Boolean map of boundary points: foreground pixels with a 4-neighbour in
        the background or outside the image.
        """
        fg = KeypointsMixin.check_mask(mask).astype(bool)
        eroded = ndimage.binary_erosion(
            fg, structure=ndimage.generate_binary_structure(2, 1), border_value=0
        )
        return fg & ~eroded

    @classmethod
    def directed_distances(cls, src: np.ndarray, dst: np.ndarray) -> np.ndarray:
        """
        Distance from every boundary point of `src` to the nearest boundary
        point of `dst`. Both masks must be non-empty.
        """
        src_b = cls.extract_boundary(src)
        dst_b = cls.extract_boundary(dst)
        # EDT of the complement gives the distance to the nearest dst boundary pixel
        dt = ndimage.distance_transform_edt(~dst_b)
        return dt[src_b]

    @staticmethod
    def diagonal(shape: tuple[int, ...]) -> float:
        """Image diagonal, the sentinel value for undefined distances."""
        return math.hypot(*shape)

    @classmethod
    def distance_undefined(cls, pred: np.ndarray, gt: np.ndarray) -> bool:
        """True when either mask is empty, so surface distances do not exist."""
        pred, gt = cls.check_pair(pred, gt)
        return not (pred.any() and gt.any())

    @classmethod
    def assd(cls, pred: np.ndarray, gt: np.ndarray) -> float:
        """
        Average symmetric surface distance.

        Returns the image diagonal when either mask is empty
        (see `distance_undefined`).
        """
        if cls.distance_undefined(pred, gt):
            return cls.diagonal(np.shape(pred))
        d_pg = cls.directed_distances(pred, gt)
        d_gp = cls.directed_distances(gt, pred)
        return float((d_pg.sum() + d_gp.sum()) / (d_pg.shape[0] + d_gp.shape[0]))

    @staticmethod
    def percentile95(distances: np.ndarray) -> float:
        """
        Value at index `ceil(0.95 * n) - 1` of the sorted distances.
        """
        n = distances.shape[0]
        idx = -(-PERCENTILE_NUM * n // PERCENTILE_DEN) - 1
        return float(np.sort(distances)[idx])

    @classmethod
    def hd95(cls, pred: np.ndarray, gt: np.ndarray) -> float:
        """
        Symmetric 95th-percentile Hausdorff distance: the larger of the two
        directed 95th percentiles.

        Returns the image diagonal when either mask is empty.
        """
        if cls.distance_undefined(pred, gt):
            return cls.diagonal(np.shape(pred))
        return max(
            cls.percentile95(cls.directed_distances(pred, gt)),
            cls.percentile95(cls.directed_distances(gt, pred)),
        )

    ###############################################################################################
    # Batch evaluation
    ###############################################################################################

    @classmethod
    def evaluate_pair(cls, sample_id: str, pred: np.ndarray, gt: np.ndarray) -> SampleMetrics:
        """
        All four metrics for one pair. Dice and IoU are reported as percentages.
        """
        return SampleMetrics(
            id=sample_id,
            dice=100.0 * cls.dice_score(pred, gt),
            iou=100.0 * cls.iou_score(pred, gt),
            assd=cls.assd(pred, gt),
            hd95=cls.hd95(pred, gt),
            undefined=cls.distance_undefined(pred, gt),
        )

    @classmethod
    def evaluate_pairs(
        cls,
        pairs: Iterable[tuple[str, np.ndarray, np.ndarray]],
        n_workers: int = 1,
    ) -> list[SampleMetrics]:
        """
        Evaluates `(id, pred, gt)` triples, fanning out across `n_workers`
        threads. Results keep the input order.
        """
        pairs = list(pairs)
        if n_workers <= 1:
            return [cls.evaluate_pair(*i) for i in pairs]
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            return list(pool.map(lambda i: cls.evaluate_pair(*i), pairs))
