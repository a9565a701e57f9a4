"""
Run manifest written next to every command's artifacts.
"""

from __future__ import annotations

from typing import Any

from pydantic import ConfigDict

from xbound_seg.pydantic_models.pydantic_base_model import PydanticBaseModel
from xbound_seg.pydantic_models.run_configs import RunConfigs


class Manifest(PydanticBaseModel):
    """
    Echo of the fully-resolved config plus timing.

    Timing fields only live here, so the other artifacts of two runs with the
    same config and seed can be compared byte for byte.
    """

    model_config = ConfigDict(extra="forbid")

    command: str
    configs: RunConfigs
    started: str
    elapsed_sec: float
    outputs: list[str] = []
    extra: dict[str, Any] = {}
