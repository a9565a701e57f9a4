"""
`keypoints` command: boundary key-point maps and overlays for a dataset.
"""

from __future__ import annotations

import logging
import os

from tqdm import tqdm

from xbound_seg.constants import FileExts, Folders
from xbound_seg.mixins.dataset_mixin import DatasetMixin
from xbound_seg.mixins.io_mixin import IOMixin
from xbound_seg.mixins.keypoints_mixin import KeypointsMixin
from xbound_seg.mixins.run_mixin import RunMixin
from xbound_seg.pydantic_models.run_configs import RunConfigs

logger = logging.getLogger(__name__)


class Keypoints:
    """__summary__"""

    @staticmethod
    def keypoints(configs: RunConfigs) -> str:
        """
        Writes `keypoints/<id>.png` (0/255) and `overlays/<id>.png` under
        `out` for every sample, at the stored resolution.
        """
        clock = RunMixin.start_clock()
        outcome = ""
        root = RunMixin.require_data(configs)
        samples, report = DatasetMixin.load_dataset(root)
        r, k = configs.keypoints.r, configs.keypoints.k
        n_points = 0
        for sample in tqdm(samples, desc="keypoints", leave=False):
            kp_map = KeypointsMixin.generate_keypoint_map(sample.mask, r, k)
            n_points += int(kp_map.sum())
            IOMixin.write_mask(
                kp_map,
                os.path.join(
                    configs.out, Folders.KEYPOINTS.value, f"{sample.id}{FileExts.KEYPOINTS.value}"
                ),
            )
            IOMixin.write_bgr(
                KeypointsMixin.render_overlay(sample.image, sample.mask, kp_map),
                os.path.join(
                    configs.out, Folders.OVERLAYS.value, f"{sample.id}{FileExts.OVERLAYS.value}"
                ),
            )
        outcome += (
            f"Wrote key-point maps for {len(samples)} samples "
            f"({n_points} key points, r={r}, k={k}, {report.n_warnings} unpaired).\n"
        )
        RunMixin.write_manifest(
            "keypoints",
            configs,
            clock,
            configs.out,
            outputs=[Folders.KEYPOINTS.value, Folders.OVERLAYS.value],
            n_keypoints=n_points,
        )
        return outcome
