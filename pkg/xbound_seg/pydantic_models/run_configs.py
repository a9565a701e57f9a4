"""
Run configuration: model, loss, optimiser, key-point and data settings.

Configs are read from plain-text `key = value` files. Dotted keys address
nested sections, e.g.

```
# desk overfit run
model.n_im = 2
model.channels = [32, 64, 128, 256]
loss.lam = 2.0
seed = 7
```
"""

from __future__ import annotations

import json
from typing import Any

from pydantic import ConfigDict, Field, field_validator, model_validator

from xbound_seg.constants import N_SCALES, SCALE_STRIDES
from xbound_seg.errors import ConfigFileError
from xbound_seg.pydantic_models.pydantic_base_model import PydanticBaseModel
from xbound_seg.pydantic_models.synth_params import SynthParams

X_BOUND_MODES = ("sigmoid", "softmax")
VARIANTS = ("baseline", "im", "im_ex", "full")
DEVICES = ("cpu", "accelerator")
PRESETS = ("desk", "full")


class ModelConfigs(PydanticBaseModel):
    """Architecture of the boundary-aware pyramid transformer."""

    model_config = ConfigDict(extra="forbid")

    input_size: int = 64
    in_channels: int = 3
    channels: list[int] = [32, 64, 128, 256]
    heads: list[int] = [2, 2, 2, 2]
    kv_strides: list[int] = [4, 2, 1, 1]
    encoder_depth: int = Field(default=2, ge=1)
    mlp_ratio: int = Field(default=4, ge=1)
    n_im: int = Field(default=2, ge=0)
    n_ex: int = Field(default=2, ge=0)
    use_x_bound: bool = True
    x_bound_mode: str = "sigmoid"

    @field_validator("x_bound_mode")
    @classmethod
    def validate_x_bound_mode(cls, v):
        return PydanticBaseModel.validate_attr_closed_set(v, X_BOUND_MODES)

    @model_validator(mode="after")
    def validate_scales(self):
        if self.input_size <= 0 or self.input_size % 32 != 0:
            raise ValueError(
                f"input_size must be a positive multiple of 32, got {self.input_size}"
            )
        for name in ("channels", "heads", "kv_strides"):
            if len(getattr(self, name)) != N_SCALES:
                raise ValueError(f"{name} needs exactly {N_SCALES} entries")
        for l, (c, h, s, stride) in enumerate(
            zip(self.channels, self.heads, self.kv_strides, SCALE_STRIDES), start=1
        ):
            if h < 1 or c % h != 0:
                raise ValueError(f"scale {l}: channels {c} not divisible by heads {h}")
            side = self.input_size // stride
            if s < 1 or side % s != 0:
                raise ValueError(
                    f"scale {l}: grid side {side} not divisible by kv stride {s}"
                )
        return self

    def scale_sides(self) -> list[int]:
        """Grid side length of each scale."""
        return [self.input_size // stride for stride in SCALE_STRIDES]

    def n_key_maps(self) -> int:
        return N_SCALES * (self.n_im + self.n_ex)

    def as_variant(self, variant: str) -> ModelConfigs:
        """
        Returns a copy of the config switched to one of the ablation variants.

        `baseline` drops every boundary learner, `im` keeps only im-Bound,
        `im_ex` adds ex-Bound and `full` adds the cross-scale fusion.
        The block counts of the current config are used for the kept learners.
        """
        PydanticBaseModel.validate_attr_closed_set(variant, VARIANTS)
        n_im = 0 if variant == "baseline" else self.n_im
        n_ex = self.n_ex if variant in ("im_ex", "full") else 0
        return self.model_copy(
            update={"n_im": n_im, "n_ex": n_ex, "use_x_bound": variant == "full"}
        )


class LossWeights(PydanticBaseModel):
    """Weight between the segmentation and key-point map objectives."""

    model_config = ConfigDict(extra="forbid")

    lam: float = Field(default=2.0, ge=0)
    # Score the first head on the upsampled map that prediction thresholds
    full_res_head: bool = True


class OptimConfigs(PydanticBaseModel):
    """AdamW optimisation settings."""

    model_config = ConfigDict(extra="forbid")

    lr: float = Field(default=3e-4, gt=0)
    weight_decay: float = Field(default=0.01, ge=0)
    batch_size: int = Field(default=4, ge=1)
    epochs: int = Field(default=50, ge=1)
    # Caps the number of optimisation steps regardless of epochs
    max_steps: None | int = None
    val_every: int = Field(default=50, ge=1)
    augment: bool = True


class KeypointConfigs(PydanticBaseModel):
    """Boundary key-point generation settings."""

    model_config = ConfigDict(extra="forbid")

    r: int = Field(default=2, ge=1)
    k: int = Field(default=30, ge=1)


class DataConfigs(PydanticBaseModel):
    """Synthetic dataset and split settings."""

    model_config = ConfigDict(extra="forbid")

    n_samples: int = Field(default=8, ge=1)
    val_frac: float = Field(default=0.25, ge=0, lt=1)
    synth: SynthParams = SynthParams()


class EvalConfigs(PydanticBaseModel):
    """Evaluation and prediction settings."""

    model_config = ConfigDict(extra="forbid")

    # Directory of predicted mask PNGs; when unset the checkpoint is run instead
    pred_dir: None | str = None
    checkpoint: None | str = None
    split: None | str = None
    threshold: float = Field(default=0.5, gt=0, lt=1)
    n_workers: int = Field(default=4, ge=1)


class SweepConfigs(PydanticBaseModel):
    """Ablation and hyperparameter grid."""

    model_config = ConfigDict(extra="forbid")

    variants: list[str] = list(VARIANTS)
    lambdas: list[float] = [2.0]
    n_im_values: list[int] = []
    n_ex_values: list[int] = []
    steps: int = Field(default=50, ge=1)

    @field_validator("variants")
    @classmethod
    def validate_variants(cls, v):
        for i in v:
            PydanticBaseModel.validate_attr_closed_set(i, VARIANTS)
        return v


class RunConfigs(PydanticBaseModel):
    """Fully-resolved configuration of one CLI run."""

    model_config = ConfigDict(extra="forbid")

    seed: int = 0
    device: str = "cpu"
    data: None | str = None
    out: str = "out"
    model: ModelConfigs = ModelConfigs()
    loss: LossWeights = LossWeights()
    optim: OptimConfigs = OptimConfigs()
    keypoints: KeypointConfigs = KeypointConfigs()
    dataset: DataConfigs = DataConfigs()
    eval: EvalConfigs = EvalConfigs()
    sweep: SweepConfigs = SweepConfigs()

    @field_validator("device")
    @classmethod
    def validate_device(cls, v):
        return PydanticBaseModel.validate_attr_closed_set(v, DEVICES)

    @classmethod
    def preset(cls, name: str = "desk") -> dict[str, Any]:
        """
        Returns the nested dict of preset values.

        `desk` is the CPU-sized configuration (64 px, batch 4); `full` matches
        the published training setup (512 px, batch 8, 200 epochs).
        """
        PydanticBaseModel.validate_attr_closed_set(name, PRESETS)
        if name == "full":
            return {
                "model": {"input_size": 512},
                "optim": {"batch_size": 8, "epochs": 200},
                "dataset": {"synth": {"size": 512}},
            }
        return {}

    @staticmethod
    def parse_value(raw: str) -> Any:
        """
        Parses a config value as JSON, falling back to the bare string.
        """
        raw = raw.strip()
        try:
            return json.loads(raw)
        except json.JSONDecodeError:
            return raw

    @staticmethod
    def set_dotted(tree: dict, key: str, value: Any) -> None:
        """Sets `tree[a][b][c] = value` for the dotted key `a.b.c`."""
        parts = key.strip().split(".")
        if not all(parts):
            raise ConfigFileError(f"Invalid config key: '{key}'")
        for part in parts[:-1]:
            node = tree.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigFileError(f"Config key '{key}' nests inside a value")
            tree = node
        tree[parts[-1]] = value

    @classmethod
    def parse_lines(cls, lines: list[str], tree: None | dict = None) -> dict:
        """
        Parses `key = value` lines into a nested dict.
        Blank lines and lines starting with `#` are skipped.
        """
        tree = {} if tree is None else tree
        for i, line in enumerate(lines, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigFileError(f"Line {i}: expected `key = value`, got '{line}'")
            key, raw = line.split("=", 1)
            cls.set_dotted(tree, key, cls.parse_value(raw))
        return tree

    @classmethod
    def read_config_file(cls, fp: str, tree: None | dict = None) -> dict:
        """Reads a plain-text config file into a nested dict."""
        try:
            with open(fp, "r", encoding="utf-8") as f:
                lines = f.read().splitlines()
        except OSError as e:
            raise ConfigFileError(f"Cannot read config file {fp}: {e}") from e
        return cls.parse_lines(lines, tree)

    @classmethod
    def resolve(
        cls,
        config_fp: None | str = None,
        overrides: None | list[str] = None,
        preset: str = "desk",
        **flags: Any,
    ) -> RunConfigs:
        """
        Resolves the run config from (in increasing priority) the preset,
        the config file, the `key=value` overrides and the explicit flags
        (`data`, `out`, `seed`, `device`; `None` flags are ignored).
        Unknown keys raise a pydantic `ValidationError`.
        """
        tree = cls.preset(preset)
        if config_fp:
            tree = cls.read_config_file(config_fp, tree)
        for override in overrides or []:
            if "=" not in override:
                raise ConfigFileError(f"Override must be key=value, got '{override}'")
            key, raw = override.split("=", 1)
            cls.set_dotted(tree, key, cls.parse_value(raw))
        for key, value in flags.items():
            if value is not None:
                tree[key] = value
        return cls.model_validate(tree)

    def allowed_keys(self) -> list[str]:
        """Dotted names of every config key."""
        return [".".join(i) for i in self.get_field_names()]
