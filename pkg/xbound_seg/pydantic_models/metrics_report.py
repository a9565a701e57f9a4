"""
JSON metric reports.
"""

from pydantic import BaseModel

from xbound_seg.pydantic_models.pydantic_base_model import PydanticBaseModel


class SampleMetrics(BaseModel):
    """
    Metrics of one prediction/ground-truth pair.
    Dice and IoU are percentages; ASSD and HD95 are pixels.
    """

    id: str
    dice: float
    iou: float
    assd: float
    hd95: float
    undefined: bool = False


class MetricAggregate(BaseModel):
    """`None` when every sample was excluded."""

    mean: None | float
    std: None | float


class MetricsReport(PydanticBaseModel):
    """
    Per-sample values plus aggregates.

    Samples whose distances are undefined (an empty mask on either side) are
    excluded from the ASSD and HD95 aggregates and counted in `undefined_count`.
    """

    n_samples: int
    undefined_count: int
    aggregate: dict[str, MetricAggregate]
    per_sample: list[SampleMetrics]


class WilcoxonResult(BaseModel):
    """Paired signed-rank test of per-sample IoU against the baseline."""

    variant: str
    baseline: str
    statistic: None | float
    p_value: None | float


class SweepPoint(BaseModel):
    """__summary__"""

    name: str
    variant: str
    lam: float
    n_im: int
    n_ex: int
    dice: float
    iou: float
    assd: None | float
    hd95: None | float


class SweepSummary(PydanticBaseModel):
    """__summary__"""

    points: list[SweepPoint]
    wilcoxon: list[WilcoxonResult]
