"""
Training loop: deep-supervised Dice plus key-point map BCE, AdamW, periodic
validation with best/last checkpoints.
"""

from __future__ import annotations

import logging
import math
import os
from dataclasses import dataclass

import numpy as np
import torch
from tqdm import trange

from xbound_seg.constants import Artifacts
from xbound_seg.df_classes.loss_log_df import LossLogDf
from xbound_seg.errors import NumericError
from xbound_seg.mixins.checkpoint_mixin import CheckpointMixin
from xbound_seg.mixins.dataset_mixin import DatasetMixin
from xbound_seg.mixins.io_mixin import IOMixin
from xbound_seg.mixins.metrics_mixin import MetricsMixin
from xbound_seg.mixins.misc_mixin import MiscMixin
from xbound_seg.mixins.multiproc_mixin import MultiprocMixin
from xbound_seg.mixins.run_mixin import RunMixin
from xbound_seg.networks.objectives import LabelPyramid, build_label_pyramid, total_loss
from xbound_seg.networks.xbound_former import XBoundFormer
from xbound_seg.pydantic_models.run_configs import RunConfigs
from xbound_seg.pydantic_models.sample import Sample

logger = logging.getLogger(__name__)


@dataclass
class FitResult:
    """What one call to `Train.fit` leaves behind."""

    model: XBoundFormer
    records: list[dict[str, float]]
    best_dice: float
    best_step: int
    n_steps: int


class Train:
    """__summary__"""

    @staticmethod
    def n_steps(configs: RunConfigs, n_train: int) -> int:
        """`epochs * ceil(n_train / batch_size)`, capped by `max_steps`."""
        per_epoch = math.ceil(n_train / configs.optim.batch_size)
        steps = configs.optim.epochs * per_epoch
        if configs.optim.max_steps is not None:
            steps = min(steps, configs.optim.max_steps)
        return steps

    @staticmethod
    def batch_order(rng: np.random.Generator, n_train: int, batch_size: int, n_steps: int):
        """
        Yields index batches: a fresh permutation every epoch, the last
        batch of an epoch may be short.
        """
        step = 0
        while step < n_steps:
            order = rng.permutation(n_train)
            for i in range(0, n_train, batch_size):
                if step >= n_steps:
                    return
                yield order[i : i + batch_size]
                step += 1

    @staticmethod
    def mean_dice(
        model: XBoundFormer, samples: list[Sample], device: torch.device, configs: RunConfigs
    ) -> float:
        """Mean Dice (fraction) of thresholded predictions."""
        masks, _ = RunMixin.predict_samples(
            model, samples, device, configs.eval.threshold, configs.optim.batch_size
        )
        return float(
            np.mean([MetricsMixin.dice_score(p, s.mask) for p, s in zip(masks, samples)])
        )

    @classmethod
    def fit(
        cls,
        configs: RunConfigs,
        train: list[Sample],
        val: list[Sample],
        out_dir: None | str = None,
    ) -> FitResult:
        """
        Trains a fresh model on `train`.

        Parameters
        ----------
        configs : RunConfigs
            Resolved run config.
        train : list[Sample]
            Training samples, already at `model.input_size`.
        val : list[Sample]
            Validation samples. When empty, `train` is used for validation.
        out_dir : None | str
            Where `best.ckpt` and `last.ckpt` go. `None` writes no checkpoints.

        Returns
        -------
        FitResult
            Final model, per-step loss records and the best validation Dice.
        """
        if not train:
            raise ValueError("No training samples.")
        MiscMixin.set_seed(configs.seed)
        device = MultiprocMixin.get_device(configs.device)
        val = val or train
        r, k = configs.keypoints.r, configs.keypoints.k
        # Label pyramids only change with augmentation
        fixed_pyramids = None
        if not configs.optim.augment:
            fixed_pyramids = [build_label_pyramid(i.mask, r, k) for i in train]

        model = XBoundFormer(configs.model).to(device)
        optimiser = torch.optim.AdamW(
            model.parameters(), lr=configs.optim.lr, weight_decay=configs.optim.weight_decay
        )
        rng = np.random.default_rng(configs.seed)
        n_steps = cls.n_steps(configs, len(train))
        batches = cls.batch_order(rng, len(train), configs.optim.batch_size, n_steps)

        if out_dir is not None:
            # A best.ckpt left by an earlier run in out_dir must not survive this one
            IOMixin.silent_rm(os.path.join(out_dir, Artifacts.BEST_CKPT.value))
        records = []
        best_dice, best_step = -1.0, 0
        for step in trange(1, n_steps + 1, desc="train", leave=False):
            idx = next(batches)
            if configs.optim.augment:
                batch = [
                    DatasetMixin.augment(train[i], int(rng.integers(2**31))) for i in idx
                ]
                pyramids = [build_label_pyramid(i.mask, r, k) for i in batch]
            else:
                batch = [train[i] for i in idx]
                pyramids = [fixed_pyramids[i] for i in idx]
            seg_t, kp_t = LabelPyramid.to_tensors(pyramids, device)
            full_t = RunMixin.stack_masks(batch, device) if configs.loss.full_res_head else None

            model.train()
            output = model(RunMixin.stack_images(batch, device))
            total, seg, kp = total_loss(output, seg_t, kp_t, configs.loss.lam, full_t)
            if not torch.isfinite(total):
                raise NumericError(f"Non-finite loss at step {step}: {total.item()}")
            optimiser.zero_grad()
            total.backward()
            optimiser.step()
            records.append(
                {
                    "step": step,
                    "seg_loss": seg.item(),
                    "map_loss": kp.item(),
                    "total": total.item(),
                }
            )

            if step % configs.optim.val_every == 0 or step == n_steps:
                dice = cls.mean_dice(model, val, device, configs)
                logger.info("step %d: total %.4f, val dice %.4f", step, total.item(), dice)
                if dice > best_dice:
                    best_dice, best_step = dice, step
                    if out_dir is not None:
                        CheckpointMixin.save_checkpoint(
                            model,
                            os.path.join(out_dir, Artifacts.BEST_CKPT.value),
                            {"step": step, "val_dice": dice},
                        )
        if out_dir is not None:
            CheckpointMixin.save_checkpoint(
                model,
                os.path.join(out_dir, Artifacts.LAST_CKPT.value),
                {"step": n_steps, "val_dice": best_dice if best_step == n_steps else None},
            )
        return FitResult(
            model=model,
            records=records,
            best_dice=best_dice,
            best_step=best_step,
            n_steps=n_steps,
        )

    @staticmethod
    def write_loss_log(records: list[dict[str, float]], out_dir: str) -> None:
        """`loss.csv` and `loss.png`."""
        df = LossLogDf.from_records(records)
        LossLogDf.write(df, os.path.join(out_dir, Artifacts.LOSS_LOG.value))
        LossLogDf.make_loss_plot(df, os.path.join(out_dir, Artifacts.LOSS_PLOT.value))

    @classmethod
    def train(cls, configs: RunConfigs) -> str:
        """
        `train` command: fits on the dataset under `data` and writes
        checkpoints, the loss log and the manifest under `out`.
        """
        clock = RunMixin.start_clock()
        outcome = ""
        root = RunMixin.require_data(configs)
        samples, report = DatasetMixin.load_dataset(root, configs.model.input_size)
        outcome += f"Loaded {report.n_loaded} samples ({report.n_warnings} unpaired).\n"
        train, val = RunMixin.split_samples(configs, samples)
        outcome += f"Training on {len(train)}, validating on {len(val) or len(train)}.\n"

        result = cls.fit(configs, train, val, configs.out)
        cls.write_loss_log(result.records, configs.out)
        outcome += (
            f"Trained {result.n_steps} steps; best validation Dice "
            f"{result.best_dice:.4f} at step {result.best_step}.\n"
        )
        RunMixin.write_manifest(
            "train",
            configs,
            clock,
            configs.out,
            outputs=[
                Artifacts.BEST_CKPT.value,
                Artifacts.LAST_CKPT.value,
                Artifacts.LOSS_LOG.value,
                Artifacts.LOSS_PLOT.value,
            ],
            n_train=len(train),
            n_val=len(val),
            best_step=result.best_step,
        )
        return outcome
