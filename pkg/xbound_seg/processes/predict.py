"""
`predict` command: mask PNGs, overlays and predicted key-point maps.
"""

from __future__ import annotations

import logging
import os

import cv2
import numpy as np

from xbound_seg.constants import FileExts, Folders, KEYPOINT_BGR
from xbound_seg.mixins.checkpoint_mixin import CheckpointMixin
from xbound_seg.mixins.dataset_mixin import DatasetMixin
from xbound_seg.mixins.io_mixin import IOMixin
from xbound_seg.mixins.keypoints_mixin import KeypointsMixin
from xbound_seg.mixins.metrics_mixin import MetricsMixin
from xbound_seg.mixins.multiproc_mixin import MultiprocMixin
from xbound_seg.mixins.run_mixin import RunMixin
from xbound_seg.processes.evaluate import Evaluate
from xbound_seg.pydantic_models.run_configs import RunConfigs
from xbound_seg.pydantic_models.sample import Sample

logger = logging.getLogger(__name__)

TEXT_SCALE = 0.3
TEXT_ORIGIN = (1, 9)


class Predict:
    """__summary__"""

    @staticmethod
    def annotate(canvas: np.ndarray, pred: np.ndarray, gt: np.ndarray) -> np.ndarray:
        """Writes IoU (%) and ASSD (px) in the top-left corner."""
        iou = 100.0 * MetricsMixin.iou_score(pred, gt)
        assd = MetricsMixin.assd(pred, gt)
        text = f"IoU {iou:.1f} ASSD {assd:.2f}"
        cv2.putText(
            canvas,
            text,
            TEXT_ORIGIN,
            cv2.FONT_HERSHEY_SIMPLEX,
            TEXT_SCALE,
            KEYPOINT_BGR,
            1,
            cv2.LINE_AA,
        )
        return canvas

    @classmethod
    def write_outputs(
        cls,
        configs: RunConfigs,
        sample: Sample,
        pred: np.ndarray,
        key_map: None | np.ndarray,
        has_gt: bool,
    ) -> None:
        """__summary__"""
        out = configs.out
        IOMixin.write_mask(
            pred,
            os.path.join(out, Folders.PREDICTIONS.value, f"{sample.id}{FileExts.PREDICTIONS.value}"),
        )
        # Overlay of the predicted contour and its key points
        kp_map = KeypointsMixin.generate_keypoint_map(
            pred, configs.keypoints.r, configs.keypoints.k
        )
        canvas = KeypointsMixin.render_overlay(sample.image, pred, kp_map)
        if has_gt:
            canvas = cls.annotate(canvas, pred, sample.mask)
        IOMixin.write_bgr(
            canvas,
            os.path.join(out, Folders.OVERLAYS.value, f"{sample.id}{FileExts.OVERLAYS.value}"),
        )
        if key_map is not None:
            IOMixin.write_mask(
                key_map,
                os.path.join(out, Folders.KEYMAPS.value, f"{sample.id}{FileExts.KEYMAPS.value}"),
            )

    @staticmethod
    def load_images(configs: RunConfigs) -> tuple[list[Sample], set[str]]:
        """
        Every image under `data/images`. Images without a mask get an empty
        placeholder mask. Returns the samples and the ids that have a mask.
        """
        root = RunMixin.require_data(configs)
        size = configs.model.input_size
        stems = IOMixin.list_stems(os.path.join(root, Folders.IMAGES.value), FileExts.IMAGES.value)
        mask_stems = set(
            IOMixin.list_stems(os.path.join(root, Folders.MASKS.value), FileExts.MASKS.value)
        )
        samples = []
        for stem in stems:
            if stem in mask_stems:
                samples.append(DatasetMixin.load_sample(root, stem, size))
                continue
            image = IOMixin.read_image(
                os.path.join(root, Folders.IMAGES.value, f"{stem}{FileExts.IMAGES.value}")
            )
            image, mask = DatasetMixin.resize_pair(
                image, np.zeros(image.shape[1:], dtype=np.uint8), size
            )
            samples.append(Sample(image=image, mask=mask, id=stem))
        return samples, mask_stems

    @classmethod
    def predict(cls, configs: RunConfigs) -> str:
        """
        Runs the checkpoint on every image under `data` and writes
        `predictions/`, `overlays/` and `keymaps/` under `out`.
        """
        clock = RunMixin.start_clock()
        outcome = ""
        samples, mask_stems = cls.load_images(configs)
        samples = RunMixin.select_split(configs, samples, configs.eval.split)
        ckpt_fp = Evaluate.checkpoint_fp(configs)
        model, _ = CheckpointMixin.load_checkpoint(ckpt_fp, configs.model)
        device = MultiprocMixin.get_device(configs.device)
        model = model.to(device)
        masks, key_maps = RunMixin.predict_samples(
            model, samples, device, configs.eval.threshold, configs.optim.batch_size
        )
        for sample, pred, key_map in zip(samples, masks, key_maps):
            cls.write_outputs(configs, sample, pred, key_map, sample.id in mask_stems)
        outcome += f"Predicted {len(samples)} masks with {ckpt_fp}.\n"
        RunMixin.write_manifest(
            "predict",
            configs,
            clock,
            configs.out,
            outputs=[Folders.PREDICTIONS.value, Folders.OVERLAYS.value, Folders.KEYMAPS.value],
            checkpoint=ckpt_fp,
        )
        return outcome
