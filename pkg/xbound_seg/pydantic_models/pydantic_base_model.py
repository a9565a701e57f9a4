"""
Utility functions.
"""

from __future__ import annotations

import os
from typing import Any

from pydantic import BaseModel


class PydanticBaseModel(BaseModel):
    """Mixin class for Pydantic models (i.e. configs and reports)."""

    @classmethod
    def read_json(cls, fp: str):
        """
        Returns the model from the specified JSON file.

        Parameters
        ----------
        fp : str
            Filepath of the JSON file.

        Example
        -------
        >>> configs = RunConfigs.read_json("/path/to/manifest.json")
        """
        with open(fp, "r", encoding="utf-8") as f:
            return cls.model_validate_json(f.read())

    def write_json(self, fp: str, **kwargs: Any) -> None:
        """
        Writes the model to the given JSON file.

        Makes the directory if it doesn't exist.

        Parameters
        ----------
        fp : str
            File to save the model to.
        **kwargs : Any
            Passed to `model_dump_json` (e.g. `exclude`).
        """
        fp_dir = os.path.dirname(fp)
        os.makedirs(fp_dir, exist_ok=True) if fp_dir else None
        with open(fp, "w", encoding="utf-8") as f:
            f.write(self.model_dump_json(indent=2, **kwargs))

    @staticmethod
    def validate_attr_closed_set(v, closed_set):
        """Validate that the attribute is in the given closed set."""
        if v not in closed_set:
            raise ValueError(
                f"Invalid value: {v}.\nOption must be one of: {', '.join(closed_set)}"
            )
        return v

    @classmethod
    def get_field_names(cls) -> list[tuple[str, ...]]:
        """
        Returns the nested field names of the model as
        a list of tuples.
        Each tuple is a nested field name combination.

        For example, the following
        ```
        {
            "model" : {
                "n_im": xxx,
                "n_ex": xxx,
            },
            "seed": xxx
        }
        ```
        Becomes
        ```
        [
            ("model", "n_im"),
            ("model", "n_ex"),
            ("seed",),
        ]
        ```
        """
        fields = []
        for name, info in cls.model_fields.items():
            type_ = info.annotation
            if isinstance(type_, type) and issubclass(type_, PydanticBaseModel):
                for subfield in type_.get_field_names():
                    fields.append((name,) + subfield)
            else:
                fields.append((name,))
        return fields
