"""
`sweep` command: ablation variants x lambda x (N_im, N_ex) grid.

Each grid point trains for `sweep.steps` steps and is evaluated on the
validation split (the training split when there is none).
"""

from __future__ import annotations

import itertools
import logging
import os

import numpy as np
from scipy import stats

from xbound_seg.constants import Artifacts
from xbound_seg.df_classes.metrics_df import MetricColumns
from xbound_seg.df_classes.sweep_df import SweepDf
from xbound_seg.mixins.dataset_mixin import DatasetMixin
from xbound_seg.mixins.multiproc_mixin import MultiprocMixin
from xbound_seg.mixins.run_mixin import RunMixin
from xbound_seg.processes.evaluate import Evaluate
from xbound_seg.processes.train import Train
from xbound_seg.pydantic_models.metrics_report import (
    MetricsReport,
    SweepPoint,
    SweepSummary,
    WilcoxonResult,
)
from xbound_seg.pydantic_models.run_configs import RunConfigs

logger = logging.getLogger(__name__)

BASELINE = "baseline"


class Sweep:
    """__summary__"""

    @staticmethod
    def point_name(variant: str, lam: float, n_im: int, n_ex: int) -> str:
        return f"{variant}_lam{lam:g}_im{n_im}_ex{n_ex}"

    @classmethod
    def grid(cls, configs: RunConfigs) -> list[tuple[str, str, RunConfigs]]:
        """
        `(name, variant, configs)` of every grid point, in grid order.
        Points that collapse to the same config (e.g. the baseline across
        block counts) appear once.
        """
        sweep = configs.sweep
        n_im_values = sweep.n_im_values or [configs.model.n_im]
        n_ex_values = sweep.n_ex_values or [configs.model.n_ex]
        points = {}
        for variant, lam, n_im, n_ex in itertools.product(
            sweep.variants, sweep.lambdas, n_im_values, n_ex_values
        ):
            model = configs.model.model_copy(update={"n_im": n_im, "n_ex": n_ex})
            model = model.as_variant(variant)
            name = cls.point_name(variant, lam, model.n_im, model.n_ex)
            if name in points:
                continue
            points[name] = variant, configs.model_copy(
                update={
                    "model": model,
                    "loss": configs.loss.model_copy(update={"lam": lam}),
                    "optim": configs.optim.model_copy(update={"max_steps": sweep.steps}),
                    "out": os.path.join(configs.out, name),
                },
                deep=True,
            )
        return [(name, *point) for name, point in points.items()]

    @staticmethod
    def wilcoxon(
        reports: dict[str, MetricsReport], variants: dict[str, str]
    ) -> list[WilcoxonResult]:
        """
        Paired signed-rank test of per-sample IoU of every non-baseline point
        against the first baseline point. Degenerate comparisons (no pairs,
        all differences zero) give `None` statistics.
        """
        baselines = [name for name, v in variants.items() if v == BASELINE]
        if not baselines:
            return []
        base = baselines[0]
        base_iou = np.array([i.iou for i in reports[base].per_sample])
        results = []
        for name, report in reports.items():
            if variants[name] == BASELINE:
                continue
            iou = np.array([i.iou for i in report.per_sample])
            statistic, p_value = None, None
            if iou.size and np.any(iou != base_iou):
                res = stats.wilcoxon(iou, base_iou)
                statistic, p_value = float(res.statistic), float(res.pvalue)
            results.append(
                WilcoxonResult(variant=name, baseline=base, statistic=statistic, p_value=p_value)
            )
        return results

    @classmethod
    def sweep(cls, configs: RunConfigs) -> str:
        """
        Writes one subdirectory per grid point (`manifest.json`, `loss.csv`,
        `loss.png`, `report.json`) and `sweep.csv`, `sweep.json` and
        `sweep.png` under `out`.
        """
        clock = RunMixin.start_clock()
        outcome = ""
        root = RunMixin.require_data(configs)
        samples, _ = DatasetMixin.load_dataset(root, configs.model.input_size)
        train, val = RunMixin.split_samples(configs, samples)
        eval_samples = val or train
        device = MultiprocMixin.get_device(configs.device)

        points, reports, variants = [], {}, {}
        for name, variant, point_configs in cls.grid(configs):
            point_clock = RunMixin.start_clock()
            logger.info("Sweep point %s", name)
            result = Train.fit(point_configs, train, val)
            Train.write_loss_log(result.records, point_configs.out)
            masks, _ = RunMixin.predict_samples(
                result.model,
                eval_samples,
                device,
                point_configs.eval.threshold,
                point_configs.optim.batch_size,
            )
            report = Evaluate.score(
                [(s.id, m, s.mask) for s, m in zip(eval_samples, masks)],
                point_configs.eval.n_workers,
            )
            report.write_json(os.path.join(point_configs.out, Artifacts.REPORT.value))
            RunMixin.write_manifest(
                "sweep",
                point_configs,
                point_clock,
                point_configs.out,
                outputs=[Artifacts.LOSS_LOG.value, Artifacts.REPORT.value],
                point=name,
            )
            reports[name], variants[name] = report, variant
            agg = report.aggregate
            points.append(
                SweepPoint(
                    name=name,
                    variant=variant,
                    lam=point_configs.loss.lam,
                    n_im=point_configs.model.n_im,
                    n_ex=point_configs.model.n_ex,
                    **{col.value: agg[col.value].mean for col in MetricColumns if col.value in agg},
                )
            )
            outcome += (
                f"{name}: Dice {agg[MetricColumns.DICE.value].mean:.2f}, "
                f"IoU {agg[MetricColumns.IOU.value].mean:.2f}\n"
            )

        summary = SweepSummary(points=points, wilcoxon=cls.wilcoxon(reports, variants))
        summary.write_json(os.path.join(configs.out, Artifacts.SWEEP_SUMMARY.value))
        df = SweepDf.from_points(points)
        SweepDf.write(df, os.path.join(configs.out, Artifacts.SWEEP_TABLE.value))
        SweepDf.make_sweep_plot(df, os.path.join(configs.out, Artifacts.SWEEP_PLOT.value))
        RunMixin.write_manifest(
            "sweep",
            configs,
            clock,
            configs.out,
            outputs=[
                Artifacts.SWEEP_TABLE.value,
                Artifacts.SWEEP_SUMMARY.value,
                Artifacts.SWEEP_PLOT.value,
            ],
            points=[i.name for i in points],
        )
        return outcome
