"""
Parameters of the synthetic fuzzy-lesion generator.
"""

from pydantic import ConfigDict, Field, field_validator

from xbound_seg.pydantic_models.pydantic_base_model import PydanticBaseModel


class SynthParams(PydanticBaseModel):
    """
    One synthetic sample is fully determined by these parameters.

    `harmonics` is the number of Fourier terms perturbing the lesion outline,
    `blur_sigma` the Gaussian blur (pixels) applied to the lesion intensity,
    `contrast` the lesion/skin intensity gap (1 = full gap) and
    `hair_count` the number of dark curvilinear strokes.
    """

    model_config = ConfigDict(extra="forbid")

    size: int = 64
    harmonics: int = Field(default=4, ge=1)
    blur_sigma: float = Field(default=1.0, ge=0)
    contrast: float = Field(default=0.8, gt=0, le=1)
    hair_count: int = Field(default=2, ge=0)
    seed: int = 0

    @field_validator("size")
    @classmethod
    def validate_size(cls, v):
        if v <= 0 or v % 32 != 0:
            raise ValueError(f"size must be a positive multiple of 32, got {v}")
        return v
