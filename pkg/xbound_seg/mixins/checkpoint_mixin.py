"""
Checkpoint container.

```
magic      4 bytes   b"XBF1"
version    uint16    little-endian
length     uint32    little-endian, bytes of the JSON block
json       length    {"model": <ModelConfigs>, "meta": {...}}
arrays     rest      numpy .npz archive of the named parameter arrays
```
"""

from __future__ import annotations

import io
import json
import logging
import struct
from typing import Any

import numpy as np
import torch

from xbound_seg.constants import CKPT_MAGIC, CKPT_VERSION
from xbound_seg.errors import CheckpointError, ConfigMismatchError
from xbound_seg.mixins.io_mixin import IOMixin
from xbound_seg.networks.xbound_former import XBoundFormer
from xbound_seg.pydantic_models.run_configs import ModelConfigs

logger = logging.getLogger(__name__)

HEADER = struct.Struct("<HI")


class CheckpointMixin:
    """__summary__"""

    @staticmethod
    def save_checkpoint(
        model: XBoundFormer, fp: str, meta: None | dict[str, Any] = None
    ) -> None:
        """
        Writes the model's config and parameters to `fp`.

        Parameters
        ----------
        model : XBoundFormer
            Model whose `configs` and `state_dict` are stored.
        fp : str
            Output filepath.
        meta : None | dict[str, Any]
            JSON-serialisable extras (e.g. step and validation Dice).
        """
        block = json.dumps(
            {"model": model.configs.model_dump(), "meta": meta or {}}, sort_keys=True
        ).encode("utf-8")
        arrays = io.BytesIO()
        np.savez(
            arrays,
            **{k: v.detach().cpu().numpy() for k, v in model.state_dict().items()},
        )
        IOMixin.makedirs_for(fp)
        with open(fp, "wb") as f:
            f.write(CKPT_MAGIC)
            f.write(HEADER.pack(CKPT_VERSION, len(block)))
            f.write(block)
            f.write(arrays.getvalue())

    @staticmethod
    def read_checkpoint(fp: str) -> tuple[ModelConfigs, dict[str, Any], dict[str, np.ndarray]]:
        """
        Parses a checkpoint into `(model_configs, meta, arrays)`.

        Raises
        ------
        CheckpointError
            Bad magic, unsupported version or a truncated file.
        """
        try:
            with open(fp, "rb") as f:
                raw = f.read()
        except OSError as e:
            raise CheckpointError(f"Cannot read checkpoint {fp}: {e}") from e
        if raw[: len(CKPT_MAGIC)] != CKPT_MAGIC:
            raise CheckpointError(f"{fp} is not a checkpoint (bad magic)")
        start = len(CKPT_MAGIC)
        if len(raw) < start + HEADER.size:
            raise CheckpointError(f"{fp} is truncated")
        version, length = HEADER.unpack_from(raw, start)
        if version != CKPT_VERSION:
            raise CheckpointError(
                f"{fp} has format version {version}, expected {CKPT_VERSION}"
            )
        start += HEADER.size
        try:
            block = json.loads(raw[start : start + length].decode("utf-8"))
            configs = ModelConfigs.model_validate(block["model"])
            with np.load(io.BytesIO(raw[start + length :])) as npz:
                arrays = {k: npz[k] for k in npz.files}
        except (ValueError, KeyError, OSError) as e:
            raise CheckpointError(f"{fp} is corrupted: {e}") from e
        return configs, block.get("meta", {}), arrays

    @classmethod
    def load_checkpoint(
        cls, fp: str, configs: None | ModelConfigs = None
    ) -> tuple[XBoundFormer, dict[str, Any]]:
        """
        Builds a model from a checkpoint.

        When `configs` is given it must equal the stored config.

        Raises
        ------
        ConfigMismatchError
            The stored config differs from `configs`.
        """
        stored, meta, arrays = cls.read_checkpoint(fp)
        if configs is not None and configs != stored:
            diff = sorted(
                k
                for k, v in configs.model_dump().items()
                if stored.model_dump()[k] != v
            )
            raise ConfigMismatchError(
                f"Checkpoint {fp} was written with a different model config "
                f"(differing keys: {', '.join(diff)})"
            )
        model = XBoundFormer(stored)
        state = {k: torch.from_numpy(v) for k, v in arrays.items()}
        try:
            model.load_state_dict(state, strict=True)
        except RuntimeError as e:
            raise CheckpointError(f"{fp} parameters do not fit the model: {e}") from e
        logger.debug("Loaded checkpoint %s (%s)", fp, meta)
        return model, meta
