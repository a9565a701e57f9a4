"""
Training loss log.
"""

from __future__ import annotations

import os
from enum import Enum

import matplotlib.pyplot as plt
import pandas as pd
import seaborn as sns

from xbound_seg.constants import PLOT_DPI, PLOT_STYLE
from xbound_seg.df_classes.df_mixin import DFMixin
from xbound_seg.mixins.misc_mixin import MiscMixin

####################################################################################################
# DF CONSTANTS
####################################################################################################


class StepIN(Enum):
    STEP = "step"


class LossLogCN(Enum):
    MEASURES = "measures"


class LossColumns(Enum):
    SEG_LOSS = "seg_loss"
    MAP_LOSS = "map_loss"
    TOTAL = "total"


####################################################################################################
# DF CLASS
####################################################################################################


class LossLogDf(DFMixin):
    """
    One row per optimisation step with the segmentation, key-point map and
    total losses.
    """

    NULLABLE = False
    IN = StepIN
    CN = LossLogCN

    @classmethod
    def from_records(cls, records: list[dict[str, float]]) -> pd.DataFrame:
        """
        Builds the log from `{"step", "seg_loss", "map_loss", "total"}` dicts.
        """
        df = cls.init_df([int(i[StepIN.STEP.value]) for i in records])
        for col in MiscMixin.enum2tuple(LossColumns):
            df[col] = [float(i[col]) for i in records]
        return df

    @staticmethod
    def make_loss_plot(df: pd.DataFrame, out_fp: str) -> None:
        """
        Line plot of every loss column against the step.
        """
        sns.set_style(PLOT_STYLE)
        long_df = (
            df.stack()
            .rename("value")
            .reset_index()
        )
        g = sns.relplot(
            data=long_df,
            x=StepIN.STEP.value,
            y="value",
            hue=LossLogCN.MEASURES.value,
            kind="line",
            height=4,
            aspect=1.5,
        )
        g.figure.subplots_adjust(top=0.9)
        g.figure.suptitle("Training losses", fontsize=12)
        # Saving fig
        fp_dir = os.path.dirname(out_fp)
        os.makedirs(fp_dir, exist_ok=True) if fp_dir else None
        g.savefig(out_fp, dpi=PLOT_DPI)
        plt.close(g.figure)
