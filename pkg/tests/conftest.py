import numpy as np
import pytest
import torch

from xbound_seg.mixins.synth_mixin import SynthMixin
from xbound_seg.pydantic_models.run_configs import ModelConfigs
from xbound_seg.pydantic_models.synth_params import SynthParams


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture(autouse=True)
def seed_torch():
    torch.manual_seed(0)


@pytest.fixture
def square_mask():
    """20x20 solid square at rows/cols 20..39 of a 64x64 mask."""
    mask = np.zeros((64, 64), dtype=np.uint8)
    mask[20:40, 20:40] = 1
    return mask


@pytest.fixture
def blob_masks():
    """50 synthetic 64x64 lesion masks."""
    return [
        SynthMixin.synth_lesion(SynthParams(size=64, seed=i)).mask for i in range(50)
    ]


@pytest.fixture
def desk_configs():
    return ModelConfigs()


@pytest.fixture
def micro_configs():
    """32x32 input with small widths for gradient checks."""
    return ModelConfigs(
        input_size=32,
        channels=[8, 8, 16, 16],
        heads=[1, 1, 2, 2],
        kv_strides=[1, 1, 1, 1],
        encoder_depth=1,
        mlp_ratio=2,
        n_im=1,
        n_ex=1,
    )
