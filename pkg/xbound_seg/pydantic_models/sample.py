"""
_summary_
"""

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator


class Sample(BaseModel):
    """
    One image/mask pair.

    `image` is float32 (3, H, W) in [0, 1]; `mask` is uint8 (H, W) in {0, 1}.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    image: np.ndarray
    mask: np.ndarray
    id: str

    @model_validator(mode="after")
    def validate_arrays(self):
        if self.image.ndim != 3 or self.image.shape[0] != 3:
            raise ValueError(f"image must be (3, H, W), got {self.image.shape}")
        if self.mask.ndim != 2 or self.mask.shape != self.image.shape[1:]:
            raise ValueError(
                f"mask {self.mask.shape} does not match image {self.image.shape[1:]}"
            )
        return self
