"""
Dataset loading, writing, splitting and augmentation.

Layout on disk:

```
<root>/images/<id>.png
<root>/masks/<id>.png
<root>/train.txt, <root>/val.txt   (optional, one id per line)
```
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor

import cv2
import numpy as np
from pydantic import BaseModel
from tqdm import tqdm

from xbound_seg.constants import FileExts, Folders
from xbound_seg.mixins.io_mixin import IOMixin
from xbound_seg.pydantic_models.sample import Sample

logger = logging.getLogger(__name__)

FLIP_PROB = 0.5
SCALE_RANGE = (0.9, 1.1)


class LoadReport(BaseModel):
    """Stems that could not be paired while loading a dataset."""

    n_loaded: int = 0
    missing_masks: list[str] = []
    missing_images: list[str] = []

    @property
    def n_warnings(self) -> int:
        return len(self.missing_masks) + len(self.missing_images)


class DatasetMixin:
    """__summary__"""

    ###############################################################################################
    # Loading and writing
    ###############################################################################################

    @staticmethod
    def resize_pair(image: np.ndarray, mask: np.ndarray, size: int) -> tuple[np.ndarray, np.ndarray]:
        """
        Resizes image (bilinear) and mask (nearest) to `size x size`.
        """
        if image.shape[1:] == (size, size) and mask.shape == (size, size):
            return image, mask
        image = cv2.resize(image.transpose(1, 2, 0), (size, size), interpolation=cv2.INTER_LINEAR)
        mask = cv2.resize(mask, (size, size), interpolation=cv2.INTER_NEAREST)
        return np.clip(image.transpose(2, 0, 1), 0, 1).astype(np.float32), mask

    @classmethod
    def load_sample(cls, root: str, stem: str, size: None | int = None) -> Sample:
        """Reads and (optionally) resizes one image/mask pair."""
        image = IOMixin.read_image(
            os.path.join(root, Folders.IMAGES.value, f"{stem}{FileExts.IMAGES.value}")
        )
        mask = IOMixin.read_mask(
            os.path.join(root, Folders.MASKS.value, f"{stem}{FileExts.MASKS.value}")
        )
        if size is not None:
            image, mask = cls.resize_pair(image, mask, size)
        return Sample(image=image, mask=mask, id=stem)

    @classmethod
    def load_dataset(
        cls,
        root: str,
        size: None | int = None,
        ids: None | list[str] = None,
        n_workers: int = 1,
    ) -> tuple[list[Sample], LoadReport]:
        """
        Loads every matched image/mask pair under `root`, ordered by stem.

        Parameters
        ----------
        root : str
            Dataset root with `images/` and `masks/`.
        size : None | int
            Resize target; `None` keeps the stored resolution.
        ids : None | list[str]
            Restricts loading to these stems.
        n_workers : int
            Threads used to read files.

        Returns
        -------
        tuple[list[Sample], LoadReport]
            The samples and the stems left unpaired.
        """
        image_stems = set(
            IOMixin.list_stems(os.path.join(root, Folders.IMAGES.value), FileExts.IMAGES.value)
        )
        mask_stems = set(
            IOMixin.list_stems(os.path.join(root, Folders.MASKS.value), FileExts.MASKS.value)
        )
        if ids is not None:
            image_stems &= set(ids)
            mask_stems &= set(ids)
        report = LoadReport(
            missing_masks=sorted(image_stems - mask_stems),
            missing_images=sorted(mask_stems - image_stems),
        )
        for stem in report.missing_masks:
            logger.warning("Image %s has no mask - skipping.", stem)
        for stem in report.missing_images:
            logger.warning("Mask %s has no image - skipping.", stem)
        stems = sorted(image_stems & mask_stems)
        if n_workers > 1:
            with ThreadPoolExecutor(max_workers=n_workers) as pool:
                samples = list(pool.map(lambda i: cls.load_sample(root, i, size), stems))
        else:
            samples = [cls.load_sample(root, i, size) for i in stems]
        report.n_loaded = len(samples)
        return samples, report

    @staticmethod
    def write_sample(sample: Sample, root: str) -> None:
        """__summary__"""
        IOMixin.write_image(
            sample.image,
            os.path.join(root, Folders.IMAGES.value, f"{sample.id}{FileExts.IMAGES.value}"),
        )
        IOMixin.write_mask(
            sample.mask,
            os.path.join(root, Folders.MASKS.value, f"{sample.id}{FileExts.MASKS.value}"),
        )

    @classmethod
    def write_dataset(cls, samples: list[Sample], root: str) -> None:
        """Writes every sample under `root` in the layout `load_dataset` reads."""
        for sample in tqdm(samples, desc="write", leave=False):
            cls.write_sample(sample, root)

    @staticmethod
    def split_ids(ids: list[str], val_frac: float, seed: int) -> tuple[list[str], list[str]]:
        """
        Single seeded train/val split. Both lists come back sorted.
        """
        rng = np.random.default_rng(seed)
        order = rng.permutation(len(ids))
        n_val = int(round(len(ids) * val_frac))
        val = sorted(ids[i] for i in order[:n_val])
        train = sorted(ids[i] for i in order[n_val:])
        return train, val

    ###############################################################################################
    # Augmentation
    ###############################################################################################

    @staticmethod
    def flip(sample: Sample, vertical: bool, horizontal: bool) -> Sample:
        """Flips image and mask identically."""
        image, mask = sample.image, sample.mask
        if vertical:
            image, mask = image[:, ::-1, :], mask[::-1, :]
        if horizontal:
            image, mask = image[:, :, ::-1], mask[:, ::-1]
        return Sample(
            image=np.ascontiguousarray(image),
            mask=np.ascontiguousarray(mask),
            id=sample.id,
        )

    @staticmethod
    def rescale(sample: Sample, scale: float) -> Sample:
        """
        Scales image (bilinear) and mask (nearest) about the centre, then
        centre-crops or pads back to the original size. Padding repeats the
        image edge and is background in the mask.
        """
        h, w = sample.mask.shape
        new_h, new_w = max(1, int(round(h * scale))), max(1, int(round(w * scale)))
        if (new_h, new_w) == (h, w):
            return sample
        image = cv2.resize(
            sample.image.transpose(1, 2, 0), (new_w, new_h), interpolation=cv2.INTER_LINEAR
        ).transpose(2, 0, 1)
        mask = cv2.resize(sample.mask, (new_w, new_h), interpolation=cv2.INTER_NEAREST)
        out_image = np.empty_like(sample.image)
        out_mask = np.zeros_like(sample.mask)
        # Per axis: crop offset when larger, pad offset when smaller
        src_r, dst_r, len_r = max(0, (new_h - h) // 2), max(0, (h - new_h) // 2), min(h, new_h)
        src_c, dst_c, len_c = max(0, (new_w - w) // 2), max(0, (w - new_w) // 2), min(w, new_w)
        crop_image = image[:, src_r : src_r + len_r, src_c : src_c + len_c]
        pad = (
            (0, 0),
            (dst_r, h - dst_r - len_r),
            (dst_c, w - dst_c - len_c),
        )
        out_image[:] = np.pad(crop_image, pad, mode="edge")
        out_mask[dst_r : dst_r + len_r, dst_c : dst_c + len_c] = mask[
            src_r : src_r + len_r, src_c : src_c + len_c
        ]
        return Sample(
            image=np.clip(out_image, 0, 1).astype(np.float32),
            mask=out_mask,
            id=sample.id,
        )

    @classmethod
    def augment(
        cls,
        sample: Sample,
        seed: int,
        flip_prob: float = FLIP_PROB,
        scale_range: tuple[float, float] = SCALE_RANGE,
    ) -> Sample:
        """
        Independent vertical and horizontal flips with probability
        `flip_prob` each, then a uniform random rescale in `scale_range`.
        """
        rng = np.random.default_rng(seed)
        vertical = bool(rng.random() < flip_prob)
        horizontal = bool(rng.random() < flip_prob)
        scale = float(rng.uniform(*scale_range))
        return cls.rescale(cls.flip(sample, vertical, horizontal), scale)
