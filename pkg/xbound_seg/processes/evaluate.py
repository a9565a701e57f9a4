"""
`eval` command: Dice, IoU, ASSD and HD95 against the dataset's masks.
"""

from __future__ import annotations

import logging
import os

import cv2
import numpy as np

from xbound_seg.constants import Artifacts, FileExts
from xbound_seg.df_classes.metrics_df import MetricsDf
from xbound_seg.mixins.checkpoint_mixin import CheckpointMixin
from xbound_seg.mixins.dataset_mixin import DatasetMixin
from xbound_seg.mixins.io_mixin import IOMixin
from xbound_seg.mixins.metrics_mixin import MetricsMixin
from xbound_seg.mixins.multiproc_mixin import MultiprocMixin
from xbound_seg.mixins.run_mixin import RunMixin
from xbound_seg.pydantic_models.metrics_report import MetricsReport
from xbound_seg.pydantic_models.run_configs import RunConfigs
from xbound_seg.pydantic_models.sample import Sample

logger = logging.getLogger(__name__)

METRICS_TABLE = "metrics.csv"


class Evaluate:
    """__summary__"""

    @staticmethod
    def checkpoint_fp(configs: RunConfigs) -> str:
        """`eval.checkpoint`, else `best.ckpt` under `out`."""
        return configs.eval.checkpoint or os.path.join(configs.out, Artifacts.BEST_CKPT.value)

    @staticmethod
    def read_predictions(
        pred_dir: str, samples: list[Sample]
    ) -> list[tuple[str, np.ndarray, np.ndarray]]:
        """
        Pairs `<pred_dir>/<id>.png` with each sample's mask.
        Predictions of another size are resized (nearest) to the mask.
        Samples without a prediction are skipped with a warning.
        """
        pairs = []
        for sample in samples:
            fp = os.path.join(pred_dir, f"{sample.id}{FileExts.PREDICTIONS.value}")
            if not os.path.isfile(fp):
                logger.warning("No prediction for %s - skipping.", sample.id)
                continue
            pred = IOMixin.read_mask(fp)
            if pred.shape != sample.mask.shape:
                h, w = sample.mask.shape
                pred = cv2.resize(pred, (w, h), interpolation=cv2.INTER_NEAREST)
            pairs.append((sample.id, pred, sample.mask))
        return pairs

    @classmethod
    def predict_pairs(
        cls, configs: RunConfigs, samples: list[Sample]
    ) -> list[tuple[str, np.ndarray, np.ndarray]]:
        """Runs the checkpoint on every sample."""
        model, _ = CheckpointMixin.load_checkpoint(cls.checkpoint_fp(configs), configs.model)
        device = MultiprocMixin.get_device(configs.device)
        model = model.to(device)
        masks, _ = RunMixin.predict_samples(
            model, samples, device, configs.eval.threshold, configs.optim.batch_size
        )
        return [(s.id, m, s.mask) for s, m in zip(samples, masks)]

    @staticmethod
    def score(pairs, n_workers: int) -> MetricsReport:
        """__summary__"""
        return MetricsDf.make_report(MetricsMixin.evaluate_pairs(pairs, n_workers))

    @classmethod
    def evaluate(cls, configs: RunConfigs) -> str:
        """
        Writes `report.json` (and the per-sample `metrics.csv`) under `out`.

        With `eval.pred_dir` set, the PNGs there are compared to the masks at
        their stored resolution. Otherwise the checkpoint is run on the
        samples resized to `model.input_size` and compared in that frame.
        """
        clock = RunMixin.start_clock()
        outcome = ""
        root = RunMixin.require_data(configs)
        pred_dir = configs.eval.pred_dir
        size = None if pred_dir else configs.model.input_size
        samples, report = DatasetMixin.load_dataset(
            root, size, n_workers=configs.eval.n_workers
        )
        samples = RunMixin.select_split(configs, samples, configs.eval.split)
        outcome += f"Evaluating {len(samples)} samples ({report.n_warnings} unpaired).\n"
        if pred_dir:
            pairs = cls.read_predictions(pred_dir, samples)
        else:
            pairs = cls.predict_pairs(configs, samples)
        metrics_report = cls.score(pairs, configs.eval.n_workers)
        metrics_report.write_json(os.path.join(configs.out, Artifacts.REPORT.value))
        MetricsDf.write(
            MetricsDf.from_sample_metrics(metrics_report.per_sample),
            os.path.join(configs.out, METRICS_TABLE),
        )
        for name, agg in metrics_report.aggregate.items():
            if agg.mean is None:
                outcome += f"{name}: undefined for every sample\n"
                continue
            outcome += f"{name}: {agg.mean:.4f} (std {agg.std:.4f})\n"
        RunMixin.write_manifest(
            "eval",
            configs,
            clock,
            configs.out,
            outputs=[Artifacts.REPORT.value, METRICS_TABLE],
            n_samples=metrics_report.n_samples,
        )
        return outcome
