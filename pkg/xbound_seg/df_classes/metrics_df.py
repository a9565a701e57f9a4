"""
Per-sample metric tables and their aggregation.
"""

from __future__ import annotations

from enum import Enum

import numpy as np
import pandas as pd

from xbound_seg.df_classes.df_mixin import DFMixin
from xbound_seg.pydantic_models.metrics_report import (
    MetricAggregate,
    MetricsReport,
    SampleMetrics,
)

####################################################################################################
# DF CONSTANTS
####################################################################################################


class SampleIN(Enum):
    ID = "id"


class MetricsCN(Enum):
    MEASURES = "measures"


class MetricColumns(Enum):
    DICE = "dice"
    IOU = "iou"
    ASSD = "assd"
    HD95 = "hd95"
    UNDEFINED = "undefined"


AREA_METRICS = (MetricColumns.DICE.value, MetricColumns.IOU.value)
DISTANCE_METRICS = (MetricColumns.ASSD.value, MetricColumns.HD95.value)


####################################################################################################
# DF CLASS
####################################################################################################


class MetricsDf(DFMixin):
    """__summary__"""

    NULLABLE = False
    IN = SampleIN
    CN = MetricsCN

    @classmethod
    def from_sample_metrics(cls, metrics: list[SampleMetrics]) -> pd.DataFrame:
        """
        One row per sample, indexed by id.
        """
        df = cls.init_df([i.id for i in metrics])
        for col in AREA_METRICS + DISTANCE_METRICS:
            df[col] = np.array([getattr(i, col) for i in metrics], dtype=np.float64)
        df[MetricColumns.UNDEFINED.value] = [i.undefined for i in metrics]
        return df

    @staticmethod
    def agg_metrics(df: pd.DataFrame) -> dict[str, MetricAggregate]:
        """
        Mean and (population) std of each metric.
        Distance metrics of undefined samples are excluded.
        """
        undefined = df[MetricColumns.UNDEFINED.value].to_numpy(dtype=bool)
        aggs = {}
        for col in AREA_METRICS + DISTANCE_METRICS:
            vect = df[col].to_numpy(dtype=np.float64).copy()
            if col in DISTANCE_METRICS:
                vect[undefined] = np.nan
            # Handling edge case where every value is excluded or there are no rows
            if np.isnan(vect).all():
                aggs[col] = MetricAggregate(mean=None, std=None)
                continue
            aggs[col] = MetricAggregate(
                mean=float(np.nanmean(vect)), std=float(np.nanstd(vect))
            )
        return aggs

    @classmethod
    def make_report(cls, metrics: list[SampleMetrics]) -> MetricsReport:
        """__summary__"""
        df = cls.from_sample_metrics(metrics)
        return MetricsReport(
            n_samples=len(metrics),
            undefined_count=int(df[MetricColumns.UNDEFINED.value].sum()),
            aggregate=cls.agg_metrics(df),
            per_sample=metrics,
        )
