"""
Helpers shared by the CLI processes.
"""

from __future__ import annotations

import logging
import os
import time
from datetime import datetime, timezone

import numpy as np
import torch

from xbound_seg.constants import Artifacts, FileExts, Splits
from xbound_seg.errors import ConfigFileError
from xbound_seg.mixins.dataset_mixin import DatasetMixin
from xbound_seg.mixins.io_mixin import IOMixin
from xbound_seg.networks.xbound_former import XBoundFormer
from xbound_seg.pydantic_models.manifest import Manifest
from xbound_seg.pydantic_models.run_configs import RunConfigs
from xbound_seg.pydantic_models.sample import Sample

logger = logging.getLogger(__name__)


class RunMixin:
    """__summary__"""

    ###############################################################################################
    # Run bookkeeping
    ###############################################################################################

    @staticmethod
    def start_clock() -> tuple[str, float]:
        """Returns the ISO start time and a perf counter reading."""
        return datetime.now(timezone.utc).isoformat(timespec="seconds"), time.perf_counter()

    @staticmethod
    def write_manifest(
        command: str,
        configs: RunConfigs,
        clock: tuple[str, float],
        out_dir: str,
        outputs: None | list[str] = None,
        **extra,
    ) -> str:
        """
        Writes `manifest.json` under `out_dir` and returns its filepath.
        """
        started, t0 = clock
        fp = os.path.join(out_dir, Artifacts.MANIFEST.value)
        Manifest(
            command=command,
            configs=configs,
            started=started,
            elapsed_sec=round(time.perf_counter() - t0, 3),
            outputs=outputs or [],
            extra=extra,
        ).write_json(fp)
        return fp

    @staticmethod
    def require_data(configs: RunConfigs) -> str:
        """The dataset root; a usage error when it is unset or missing."""
        if configs.data is None:
            raise ConfigFileError("A dataset root is required (--data or `data = ...`).")
        if not os.path.isdir(configs.data):
            raise ConfigFileError(f"Dataset root {configs.data} does not exist.")
        return configs.data

    ###############################################################################################
    # Splits
    ###############################################################################################

    @staticmethod
    def split_fp(root: str, split: str) -> str:
        return os.path.join(root, f"{split}{FileExts.SPLIT.value}")

    @classmethod
    def split_samples(
        cls, configs: RunConfigs, samples: list[Sample]
    ) -> tuple[list[Sample], list[Sample]]:
        """
        Train/val samples from the dataset's split files when both exist,
        otherwise from one seeded split with `dataset.val_frac`.
        """
        root = configs.data
        train_fp = cls.split_fp(root, Splits.TRAIN.value)
        val_fp = cls.split_fp(root, Splits.VAL.value)
        if os.path.isfile(train_fp) and os.path.isfile(val_fp):
            train_ids = set(IOMixin.read_split(train_fp))
            val_ids = set(IOMixin.read_split(val_fp))
        else:
            ids = [i.id for i in samples]
            train_list, val_list = DatasetMixin.split_ids(
                ids, configs.dataset.val_frac, configs.seed
            )
            train_ids, val_ids = set(train_list), set(val_list)
        train = [i for i in samples if i.id in train_ids]
        val = [i for i in samples if i.id in val_ids]
        return train, val

    @classmethod
    def select_split(
        cls, configs: RunConfigs, samples: list[Sample], split: None | str
    ) -> list[Sample]:
        """All samples for `split=None`, otherwise the named split."""
        if split is None:
            return samples
        if split not in (Splits.TRAIN.value, Splits.VAL.value):
            raise ConfigFileError(f"Unknown split '{split}'.")
        train, val = cls.split_samples(configs, samples)
        return train if split == Splits.TRAIN.value else val

    ###############################################################################################
    # Batching and inference
    ###############################################################################################

    @staticmethod
    def stack_images(samples: list[Sample], device: torch.device) -> torch.Tensor:
        """`(B, 3, H, W)` float32 batch."""
        return torch.as_tensor(np.stack([i.image for i in samples]), device=device)

    @staticmethod
    def stack_masks(samples: list[Sample], device: torch.device) -> torch.Tensor:
        """`(B, 1, H, W)` float32 masks."""
        return torch.as_tensor(
            np.stack([i.mask for i in samples])[:, None], dtype=torch.float32, device=device
        )

    @classmethod
    def predict_samples(
        cls,
        model: XBoundFormer,
        samples: list[Sample],
        device: torch.device,
        threshold: float = 0.5,
        batch_size: int = 4,
    ) -> tuple[list[np.ndarray], list[None | np.ndarray]]:
        """
        Binary masks and the first-scale key-point map of the last boundary
        block (`None` without boundary blocks) for every sample.
        """
        model.eval()
        masks, key_maps = [], []
        with torch.no_grad():
            for i in range(0, len(samples), batch_size):
                batch = cls.stack_images(samples[i : i + batch_size], device)
                output = model(batch)
                probs = model.logits_to_probs(output.seg_logits[0])[:, 0]
                masks.extend((probs > threshold).to(torch.uint8).cpu().numpy())
                if output.key_maps[0]:
                    key_maps.extend(output.key_maps[0][-1][:, 0].cpu().numpy())
                else:
                    key_maps.extend([None] * batch.shape[0])
        return masks, key_maps
