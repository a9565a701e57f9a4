"""
Synthetic fuzzy-lesion generator.

Each sample is a star-shaped lesion outline built from random Fourier terms,
painted over a textured skin background with a blurred (ambiguous) edge and
optional dark hair strokes. Everything is drawn from
`numpy.random.default_rng(seed)`, so a seed fully determines the sample.
"""

from __future__ import annotations

import cv2
import numpy as np
from scipy import ndimage

from xbound_seg.constants import (
    HAIR_RGB,
    LESION_CHANNEL,
    LESION_RGB,
    SKIN_RGB,
    TEXTURE_AMPLITUDE,
)
from xbound_seg.pydantic_models.sample import Sample
from xbound_seg.pydantic_models.synth_params import SynthParams

N_OUTLINE_POINTS = 360
N_STROKE_POINTS = 64
# Base lesion radius as a fraction of the image side
RADIUS_RANGE = (0.15, 0.35)
CENTRE_RANGE = (0.4, 0.6)
# Amplitude bound of harmonic j is MAX_AMPLITUDE / j; the sum stays below 1
MAX_AMPLITUDE = 0.2
TEXTURE_SIGMA = 2.0


class SynthMixin:
    """__summary__"""

    @staticmethod
    def make_outline(rng: np.random.Generator, params: SynthParams) -> np.ndarray:
        """
        (N, 2) int32 (x, y) polygon of a star-shaped outline
        `r(t) = R (1 + sum_j a_j cos(j t + phi_j))`.
        """
        size = params.size
        j = np.arange(1, params.harmonics + 1)
        radius = rng.uniform(*RADIUS_RANGE) * size
        amps = rng.uniform(0, MAX_AMPLITUDE, params.harmonics) / j
        phases = rng.uniform(0, 2 * np.pi, params.harmonics)
        cy, cx = rng.uniform(*CENTRE_RANGE, size=2) * size
        t = np.linspace(0, 2 * np.pi, N_OUTLINE_POINTS, endpoint=False)
        r = radius * (1 + (amps[:, None] * np.cos(j[:, None] * t + phases[:, None])).sum(0))
        pts = np.stack([cx + r * np.cos(t), cy + r * np.sin(t)], axis=1)
        return np.round(pts).astype(np.int32)

    @staticmethod
    def make_texture(rng: np.random.Generator, size: int) -> np.ndarray:
        """Smooth noise in [-TEXTURE_AMPLITUDE, TEXTURE_AMPLITUDE]."""
        noise = ndimage.gaussian_filter(rng.normal(size=(size, size)), TEXTURE_SIGMA)
        return noise / (np.abs(noise).max() + 1e-12) * TEXTURE_AMPLITUDE

    @staticmethod
    def make_hair(rng: np.random.Generator, size: int, count: int) -> np.ndarray:
        """
        Boolean map of `count` curvilinear strokes (quadratic Bezier curves).
        """
        canvas = np.zeros((size, size), dtype=np.uint8)
        s = np.linspace(0, 1, N_STROKE_POINTS)[:, None]
        for _ in range(count):
            p0, p1, p2 = rng.uniform(0, size, size=(3, 2))
            curve = (1 - s) ** 2 * p0 + 2 * (1 - s) * s * p1 + s**2 * p2
            thickness = int(rng.integers(1, 3))
            cv2.polylines(
                canvas, [np.round(curve).astype(np.int32)], False, 1, thickness
            )
        return canvas.astype(bool)

    @staticmethod
    def lesion_midpoint(contrast: float) -> float:
        """
        Midpoint between skin and lesion levels of the lesion channel.
        """
        skin = SKIN_RGB[LESION_CHANNEL]
        lesion = skin + contrast * (LESION_RGB[LESION_CHANNEL] - skin)
        return (skin + lesion) / 2

    @classmethod
    def synth_lesion(cls, params: SynthParams) -> Sample:
        """
        Generates one synthetic sample.

        Parameters
        ----------
        params : SynthParams
            Size, outline complexity, edge blur, contrast, hair and seed.

        Returns
        -------
        Sample
            Image in [0, 1], binary mask and id `synth_<seed>`.
        """
        rng = np.random.default_rng(params.seed)
        size = params.size
        # Lesion mask
        mask = np.zeros((size, size), dtype=np.uint8)
        cv2.fillPoly(mask, [cls.make_outline(rng, params)], 1)
        # Lesion intensity with an ambiguous edge
        lesion = mask.astype(np.float64)
        if params.blur_sigma > 0:
            lesion = ndimage.gaussian_filter(lesion, params.blur_sigma)
        texture = cls.make_texture(rng, size)
        skin = np.asarray(SKIN_RGB)[:, None, None]
        dark = np.asarray(LESION_RGB)[:, None, None]
        image = skin + params.contrast * lesion[None] * (dark - skin) + texture[None]
        # Hair occlusion
        hair = cls.make_hair(rng, size, params.hair_count)
        image[:, hair] = np.asarray(HAIR_RGB)[:, None]
        return Sample(
            image=np.clip(image, 0, 1).astype(np.float32),
            mask=mask,
            id=f"synth_{params.seed:05d}",
        )

    @classmethod
    def synth_dataset(cls, params: SynthParams, n_samples: int) -> list[Sample]:
        """`n_samples` samples with seeds `params.seed .. params.seed + n - 1`."""
        return [
            cls.synth_lesion(params.model_copy(update={"seed": params.seed + i}))
            for i in range(n_samples)
        ]
