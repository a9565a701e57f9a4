"""
Utility functions.
"""

from __future__ import annotations

import os
import shutil

import cv2
import numpy as np

from xbound_seg.constants import MASK_BINARY_THRESH, MASK_MAX


class IOMixin:
    """__summary__"""

    @staticmethod
    def silent_rm(fp: str) -> None:
        """
        Removes the given file or dir if it exists.
        Does nothing if not.
        Does not throw any errors,
        """
        try:
            if os.path.isfile(fp):
                os.remove(fp)
            elif os.path.isdir(fp):
                shutil.rmtree(fp)
        except (OSError, FileNotFoundError):
            pass

    @staticmethod
    def get_name(fp: str) -> str:
        """
        Given the filepath, returns the name of the file.
        The name is:
        ```
        <path_to_file>/<name>.<ext>
        ```
        """
        return os.path.splitext(os.path.basename(fp))[0]

    @staticmethod
    def list_stems(my_dir: str, ext: str) -> list[str]:
        """
        Sorted names (without extension) of the `ext` files in `my_dir`.
        Hidden files are skipped. A missing dir gives an empty list.
        """
        if not os.path.isdir(my_dir):
            return []
        return sorted(
            IOMixin.get_name(i)
            for i in os.listdir(my_dir)
            if i.endswith(ext) and not i.startswith(".")
        )

    @staticmethod
    def makedirs_for(fp: str) -> None:
        """Makes the parent directory of `fp` if it doesn't exist."""
        fp_dir = os.path.dirname(fp)
        os.makedirs(fp_dir, exist_ok=True) if fp_dir else None

    ###############################################################################################
    # PNG interchange (8-bit)
    ###############################################################################################

    @staticmethod
    def read_image(fp: str) -> np.ndarray:
        """
        Reads an 8-bit image as float32 (3, H, W) RGB in [0, 1].
        """
        img = cv2.imread(fp, cv2.IMREAD_COLOR)
        if img is None:
            raise ValueError(
                f"The file, {fp}, does not exist or is corrupted. Please check this file."
            )
        return (img[..., ::-1].transpose(2, 0, 1) / 255.0).astype(np.float32)

    @staticmethod
    def read_mask(fp: str) -> np.ndarray:
        """
        Reads an 8-bit mask and binarises it at 128.
        """
        img = cv2.imread(fp, cv2.IMREAD_GRAYSCALE)
        if img is None:
            raise ValueError(
                f"The file, {fp}, does not exist or is corrupted. Please check this file."
            )
        return (img >= MASK_BINARY_THRESH).astype(np.uint8)

    @staticmethod
    def write_image(image: np.ndarray, fp: str) -> None:
        """
        Writes a (3, H, W) RGB float image in [0, 1] as an 8-bit PNG.
        """
        IOMixin.makedirs_for(fp)
        bgr = np.round(np.clip(image, 0, 1).transpose(1, 2, 0)[..., ::-1] * 255)
        cv2.imwrite(fp, np.ascontiguousarray(bgr.astype(np.uint8)))

    @staticmethod
    def write_bgr(image: np.ndarray, fp: str) -> None:
        """Writes an (H, W, 3) uint8 BGR image."""
        IOMixin.makedirs_for(fp)
        cv2.imwrite(fp, image)

    @staticmethod
    def write_mask(mask: np.ndarray, fp: str) -> None:
        """
        Writes a binary (or [0, 1] valued) map as an 8-bit PNG (0/255).
        """
        IOMixin.makedirs_for(fp)
        cv2.imwrite(fp, np.round(np.clip(mask, 0, 1) * MASK_MAX).astype(np.uint8))

    ###############################################################################################
    # Split files
    ###############################################################################################

    @staticmethod
    def read_split(fp: str) -> list[str]:
        """One sample id per line; blank lines are skipped."""
        with open(fp, "r", encoding="utf-8") as f:
            return [i.strip() for i in f.read().splitlines() if i.strip()]

    @staticmethod
    def write_split(ids: list[str], fp: str) -> None:
        """__summary__"""
        IOMixin.makedirs_for(fp)
        with open(fp, "w", encoding="utf-8") as f:
            f.write("".join(f"{i}\n" for i in ids))
