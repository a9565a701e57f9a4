"""
Command-line entrypoint.

```
xbound {synth,keypoints,train,eval,predict,sweep}
    [--config PATH] [--set key=value ...] [--preset {desk,full}]
    [--data ROOT] [--out DIR] [--seed N] [--device {cpu,accelerator}]
```

Exit codes: 0 success, 1 usage or config error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Callable

from pydantic import ValidationError

from xbound_seg.errors import ConfigFileError, ConfigMismatchError
from xbound_seg.mixins.diagnostics_mixin import DiagnosticsMixin
from xbound_seg.processes.evaluate import Evaluate
from xbound_seg.processes.keypoints import Keypoints
from xbound_seg.processes.predict import Predict
from xbound_seg.processes.sweep import Sweep
from xbound_seg.processes.synth import Synth
from xbound_seg.processes.train import Train
from xbound_seg.pydantic_models.run_configs import DEVICES, PRESETS, RunConfigs

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2

COMMANDS: dict[str, Callable[[RunConfigs], str]] = {
    "synth": Synth.synth,
    "keypoints": Keypoints.keypoints,
    "train": Train.train,
    "eval": Evaluate.evaluate,
    "predict": Predict.predict,
    "sweep": Sweep.sweep,
}


class UsageError(Exception):
    """Bad command-line usage."""


class ArgumentParser(argparse.ArgumentParser):
    """argparse parser that raises instead of exiting with status 2."""

    def error(self, message: str):
        raise UsageError(message)


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(
        prog="xbound",
        description="Boundary-aware lesion segmentation: data, training and evaluation.",
    )
    parser.add_argument("command", choices=tuple(COMMANDS))
    parser.add_argument("--config", default=None, help="Plain-text `key = value` config file")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="Config override (repeatable)",
    )
    parser.add_argument("--preset", choices=PRESETS, default="desk")
    parser.add_argument("--data", default=None, help="Dataset root")
    parser.add_argument("--out", default=None, help="Output directory")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--device", choices=DEVICES, default=None)
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def run(argv: None | list[str] = None) -> int:
    """
    Parses `argv`, resolves the config and runs the command.

    Returns
    -------
    int
        The process exit code.
    """
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        logger.error("usage error: %s", e)
        return EXIT_USAGE
    logging.getLogger().setLevel(logging.DEBUG if args.verbose else logging.INFO)
    try:
        configs = RunConfigs.resolve(
            args.config,
            args.overrides,
            args.preset,
            data=args.data,
            out=args.out,
            seed=args.seed,
            device=args.device,
        )
    except (ConfigFileError, ValidationError) as e:
        logger.error("config error: %s", e)
        return EXIT_USAGE
    try:
        outcome = COMMANDS[args.command](configs)
    except (ConfigFileError, ConfigMismatchError) as e:
        logger.error("config error: %s", e)
        return EXIT_USAGE
    except Exception as e:
        logger.exception("%s failed: %s", args.command, e)
        return EXIT_RUNTIME
    logger.info("%s%s", outcome, DiagnosticsMixin.success_msg())
    return EXIT_OK


def main() -> None:
    logging.basicConfig(
        level=logging.INFO,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )
    sys.exit(run())


if __name__ == "__main__":
    main()
