"""
`synth` command: writes a synthetic fuzzy-lesion dataset.
"""

from __future__ import annotations

import logging
import os

from xbound_seg.constants import Folders, Splits
from xbound_seg.mixins.dataset_mixin import DatasetMixin
from xbound_seg.mixins.io_mixin import IOMixin
from xbound_seg.mixins.run_mixin import RunMixin
from xbound_seg.mixins.synth_mixin import SynthMixin
from xbound_seg.pydantic_models.run_configs import RunConfigs

logger = logging.getLogger(__name__)


class Synth:
    """__summary__"""

    @staticmethod
    def synth(configs: RunConfigs) -> str:
        """
        Writes `dataset.n_samples` samples plus `train.txt`/`val.txt` under
        `out`, using the dataset layout that `load_dataset` reads.
        """
        clock = RunMixin.start_clock()
        outcome = ""
        out = configs.out
        samples = SynthMixin.synth_dataset(configs.dataset.synth, configs.dataset.n_samples)
        DatasetMixin.write_dataset(samples, out)
        ids = [i.id for i in samples]
        train, val = DatasetMixin.split_ids(ids, configs.dataset.val_frac, configs.seed)
        IOMixin.write_split(train, RunMixin.split_fp(out, Splits.TRAIN.value))
        IOMixin.write_split(val, RunMixin.split_fp(out, Splits.VAL.value))
        outcome += f"Wrote {len(samples)} samples to {out} ({len(train)} train, {len(val)} val).\n"
        RunMixin.write_manifest(
            "synth",
            configs,
            clock,
            out,
            outputs=[
                Folders.IMAGES.value,
                Folders.MASKS.value,
                os.path.basename(RunMixin.split_fp(out, Splits.TRAIN.value)),
                os.path.basename(RunMixin.split_fp(out, Splits.VAL.value)),
            ],
        )
        return outcome
