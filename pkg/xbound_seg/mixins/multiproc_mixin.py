"""
Utility functions.
"""

from __future__ import annotations

import logging

import torch

logger = logging.getLogger(__name__)


class MultiprocMixin:
    """__summary__"""

    @staticmethod
    def get_gpu_ids() -> list[int]:
        """
        gets list of visible CUDA device IDs
        """
        if not torch.cuda.is_available():
            return []
        return list(range(torch.cuda.device_count()))

    @staticmethod
    def get_device(device: str = "cpu", gputouse: None | int = None) -> torch.device:
        """
        Resolves the run's `device` setting to a torch device.

        Criteria:
        - `cpu` always gives the CPU
        - `accelerator` gives GPU `gputouse` if given, else the first GPU
            - If there are no GPUs available, falls back to the CPU with a warning

        Returns the torch device.
        """
        if device == "cpu":
            return torch.device("cpu")
        # Get list of GPU IDs
        gpu_ids = MultiprocMixin.get_gpu_ids()
        if not gpu_ids:
            logger.warning("No accelerator available - running on cpu.")
            return torch.device("cpu")
        if gputouse is not None:
            # If the gputouse is not in the list, then raise an error
            if gputouse not in gpu_ids:
                raise ValueError(f"GPU {gputouse} not available in {gpu_ids}")
            return torch.device(f"cuda:{gputouse}")
        return torch.device(f"cuda:{gpu_ids[0]}")
