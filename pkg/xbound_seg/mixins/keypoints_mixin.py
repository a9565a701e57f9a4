"""
Boundary key-point map generation.

Ground-truth masks are turned into sparse key-point maps in four steps:

1. trace the outer border of every foreground component,
2. score each border point by how far the lesion proportion `p` inside a
   radius-`r` digital disk around it deviates from one half (`|p - 0.5|`),
3. keep points whose score is strictly greater than the scores of their `k`
   preceding and `k` following border points,
4. rasterise the kept points into a binary map.

Border pixels that are 4-adjacent to background straddle the lesion edge and
count as half lesion when `p` is measured, so a straight edge has `p = 0.5`
exactly and only corners and bends score above zero.
"""

from __future__ import annotations

import cv2
import numpy as np
from scipy import ndimage

from xbound_seg.constants import CONTOUR_BGR, KEYPOINT_BGR, N_SCALES
from xbound_seg.errors import DimensionError, ShapeError
from xbound_seg.pydantic_models.contours import Contour, ScoredContour


class KeypointsMixin:
    """__summary__"""

    ###############################################################################################
    # Mask helpers
    ###############################################################################################

    @staticmethod
    def check_mask(mask: np.ndarray) -> np.ndarray:
        """
        Checks that `mask` is a non-empty 2-D binary array and returns it as uint8.
        """
        mask = np.asarray(mask)
        if mask.ndim != 2 or mask.shape[0] < 1 or mask.shape[1] < 1:
            raise ShapeError(f"Expected a non-empty 2-D mask, got shape {mask.shape}")
        if mask.dtype != bool and not np.isin(mask, (0, 1)).all():
            raise ValueError("Mask values must be exactly 0 or 1.")
        return mask.astype(np.uint8)

    @staticmethod
    def disk_kernel(r: int) -> np.ndarray:
        """
        Digital disk of radius `r`: offsets with squared distance <= r**2.
        """
        if r < 1:
            raise ValueError(f"Radius must be >= 1, got {r}")
        dr, dc = np.mgrid[-r : r + 1, -r : r + 1]
        return (dr**2 + dc**2 <= r**2).astype(np.float64)

    @classmethod
    def edge_weights(cls, mask: np.ndarray) -> np.ndarray:
        """
        Lesion weight per pixel: 1 inside, 0.5 on foreground pixels 4-adjacent
        to in-bounds background, 0 on background.
        """
        fg = cls.check_mask(mask).astype(bool)
        interior = ndimage.binary_erosion(
            fg, structure=ndimage.generate_binary_structure(2, 1), border_value=1
        )
        return np.where(interior, 1.0, np.where(fg, 0.5, 0.0))

    @classmethod
    def proportion_map(cls, mask: np.ndarray, r: int) -> np.ndarray:
        """
        Lesion proportion `p` of the radius-`r` disk centred on every pixel.
        Disks clipped by the image border are normalised by their in-bounds
        pixel count.
        """
        weights = cls.edge_weights(mask)
        kernel = cls.disk_kernel(r)
        lesion = ndimage.correlate(weights, kernel, mode="constant", cval=0.0)
        area = ndimage.correlate(np.ones_like(weights), kernel, mode="constant", cval=0.0)
        return lesion / area

    ###############################################################################################
    # Key-point generation
    ###############################################################################################

    @classmethod
    def trace_contours(cls, mask: np.ndarray) -> list[Contour]:
        """
        Traces the outer border of every 8-connected foreground component.

        Borders are followed with OpenCV's border-following algorithm and come
        out counter-clockwise as displayed (row axis pointing down), starting
        at the component's top-left pixel. Hole borders are ignored, but
        components nested inside a hole still get their own outer border.

        Parameters
        ----------
        mask : np.ndarray
            (H, W) binary mask.

        Returns
        -------
        list[Contour]
            One closed contour per component, in OpenCV's discovery order.
        """
        mask = cls.check_mask(mask)
        if not mask.any():
            return []
        contours, hierarchy = cv2.findContours(
            mask, cv2.RETR_CCOMP, cv2.CHAIN_APPROX_NONE
        )
        out = []
        for cnt, (_, _, _, parent) in zip(contours, hierarchy[0]):
            # Outer borders sit at the top level in the two-level hierarchy
            if parent != -1:
                continue
            points = [(int(y), int(x)) for x, y in cnt[:, 0, :]]
            out.append(Contour(points=points, closed=True))
        return out

    @classmethod
    def score_contour(cls, mask: np.ndarray, contour: Contour, r: int) -> ScoredContour:
        """
        Scores each contour point as `|p - 0.5|`, where `p` is the lesion
        proportion of the radius-`r` disk around it.
        """
        if len(contour) == 0:
            return ScoredContour(points=[], closed=contour.closed, scores=[])
        p_map = cls.proportion_map(mask, r)
        pts = np.asarray(contour.points)
        h, w = p_map.shape
        if (pts < 0).any() or (pts[:, 0] >= h).any() or (pts[:, 1] >= w).any():
            raise ShapeError("Contour points lie outside the mask.")
        scores = np.abs(p_map[pts[:, 0], pts[:, 1]] - 0.5)
        return ScoredContour(
            points=contour.points, closed=contour.closed, scores=scores.tolist()
        )

    @staticmethod
    def select_keypoints(scored: ScoredContour, k: int) -> list[tuple[int, int]]:
        """
        Non-maximum suppression along the contour.

        A point is kept iff its score is strictly greater than the scores of
        its `k` preceding and `k` following points (wrapping around closed
        contours, truncated at the ends of open ones). Contours with at most
        `2k` points keep only their unique strict maximum, if there is one.
        Ties keep nothing.
        """
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        scores = np.asarray(scored.scores, dtype=np.float64)
        n = scores.shape[0]
        if n == 0:
            return []
        if n <= 2 * k:
            top = scores.max()
            idx = np.flatnonzero(scores == top)
            selected = idx if idx.shape[0] == 1 else np.array([], dtype=int)
        else:
            neighbour_max = np.full(n, -np.inf)
            for shift in range(1, k + 1):
                if scored.closed:
                    before = np.roll(scores, shift)
                    after = np.roll(scores, -shift)
                else:
                    before = np.concatenate((np.full(shift, -np.inf), scores[:-shift]))
                    after = np.concatenate((scores[shift:], np.full(shift, -np.inf)))
                neighbour_max = np.maximum(neighbour_max, np.maximum(before, after))
            selected = np.flatnonzero(scores > neighbour_max)
        # A pixel visited twice by the border walk is reported once
        return list(dict.fromkeys(scored.points[i] for i in selected))

    @classmethod
    def generate_keypoint_map(cls, mask: np.ndarray, r: int, k: int) -> np.ndarray:
        """
        Generates the binary boundary key-point map of `mask`.

        Parameters
        ----------
        mask : np.ndarray
            (H, W) binary mask.
        r : int
            Disk radius for scoring.
        k : int
            Half-window of the non-maximum suppression.

        Returns
        -------
        np.ndarray
            (H, W) uint8 map with ones at the selected key points.
        """
        mask = cls.check_mask(mask)
        kp_map = np.zeros(mask.shape, dtype=np.uint8)
        for contour in cls.trace_contours(mask):
            scored = cls.score_contour(mask, contour, r)
            for row, col in cls.select_keypoints(scored, k):
                kp_map[row, col] = 1
        return kp_map

    @staticmethod
    def build_keypoint_pyramid(
        kp_map: np.ndarray, levels: int = N_SCALES
    ) -> list[np.ndarray]:
        """
        Max-pools the full-resolution key-point map into one map per scale.

        Scale `l` (1-based) uses window and stride `2 ** (l + 1)`, so every
        positive survives at every scale.
        """
        kp_map = np.asarray(kp_map)
        if kp_map.ndim != 2:
            raise ShapeError(f"Expected a 2-D map, got shape {kp_map.shape}")
        h, w = kp_map.shape
        div = 2 ** (levels + 1)
        if h % div or w % div:
            raise DimensionError(f"Map size {h}x{w} is not divisible by {div}")
        pyramid = []
        for l in range(1, levels + 1):
            f = 2 ** (l + 1)
            pyramid.append(kp_map.reshape(h // f, f, w // f, f).max(axis=(1, 3)))
        return pyramid

    ###############################################################################################
    # Visualisation
    ###############################################################################################

    @classmethod
    def render_overlay(
        cls,
        image: np.ndarray,
        mask: np.ndarray,
        kp_map: np.ndarray,
    ) -> np.ndarray:
        """
        Draws the traced contours and the key points over the image.

        Parameters
        ----------
        image : np.ndarray
            (3, H, W) RGB image in [0, 1].
        mask : np.ndarray
            (H, W) binary mask.
        kp_map : np.ndarray
            (H, W) key-point map.

        Returns
        -------
        np.ndarray
            (H, W, 3) uint8 BGR image, ready for `cv2.imwrite`.
        """
        canvas = np.ascontiguousarray(
            (np.clip(image.transpose(1, 2, 0), 0, 1) * 255).astype(np.uint8)[..., ::-1]
        )
        for contour in cls.trace_contours(mask):
            pts = np.asarray(contour.points)
            canvas[pts[:, 0], pts[:, 1]] = CONTOUR_BGR
        rows, cols = np.nonzero(kp_map)
        for row, col in zip(rows, cols):
            cv2.circle(canvas, (int(col), int(row)), 1, KEYPOINT_BGR, -1)
        return canvas
