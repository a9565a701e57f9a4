"""
Ablation / hyperparameter sweep summary table.
"""

from __future__ import annotations

import os
from enum import Enum

import matplotlib.pyplot as plt
import pandas as pd
import seaborn as sns

from xbound_seg.constants import PLOT_DPI, PLOT_STYLE
from xbound_seg.df_classes.df_mixin import DFMixin
from xbound_seg.pydantic_models.metrics_report import SweepPoint

####################################################################################################
# DF CONSTANTS
####################################################################################################


class PointIN(Enum):
    NAME = "name"


class SweepCN(Enum):
    MEASURES = "measures"


class SweepColumns(Enum):
    VARIANT = "variant"
    LAM = "lam"
    N_IM = "n_im"
    N_EX = "n_ex"
    DICE = "dice"
    IOU = "iou"
    ASSD = "assd"
    HD95 = "hd95"


####################################################################################################
# DF CLASS
####################################################################################################


class SweepDf(DFMixin):
    """One row per grid point with its mean metrics."""

    NULLABLE = True
    IN = PointIN
    CN = SweepCN

    @classmethod
    def from_points(cls, points: list[SweepPoint]) -> pd.DataFrame:
        """__summary__"""
        df = cls.init_df([i.name for i in points])
        for col in SweepColumns:
            df[col.value] = [getattr(i, col.value) for i in points]
        return df

    @staticmethod
    def make_sweep_plot(df: pd.DataFrame, out_fp: str) -> None:
        """
        Bar plot of mean Dice and IoU per grid point.
        """
        sns.set_style(PLOT_STYLE)
        long_df = (
            df[[SweepColumns.DICE.value, SweepColumns.IOU.value]]
            .stack()
            .rename("value")
            .reset_index()
        )
        g = sns.catplot(
            data=long_df,
            x=PointIN.NAME.value,
            y="value",
            hue=SweepCN.MEASURES.value,
            kind="bar",
            height=4,
            aspect=2,
        )
        g.set_xticklabels(rotation=45, ha="right")
        g.figure.subplots_adjust(top=0.9, bottom=0.3)
        g.figure.suptitle("Sweep", fontsize=12)
        # Saving fig
        fp_dir = os.path.dirname(out_fp)
        os.makedirs(fp_dir, exist_ok=True) if fp_dir else None
        g.savefig(out_fp, dpi=PLOT_DPI)
        plt.close(g.figure)
