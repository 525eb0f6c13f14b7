"""Command-line entry point.

    bpnp train|denoise|deblur|sample-noise --config <file> [flags]

Flags mirror config-file keys and override them.  Exit codes: 0 success,
2 configuration error, 3 numeric/domain failure, 4 I/O failure.
"""

import argparse
import sys

from ..errors import (
    BacktrackExhausted,
    ConfigError,
    DomainError,
    FormatError,
    ParameterError,
    ShapeError,
)
from .config import TASKS, ExperimentConfig
from .experiment import run_experiment

__all__ = ["main", "build_parser"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_IO = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bpnp",
        description=(
            "Bregman Plug-and-Play restoration for Poisson inverse problems: "
            "train the denoiser, denoise, deblur, or sample the noise model."
        ),
    )
    sub = parser.add_subparsers(dest="task", required=True, metavar="task")
    helps = {
        "train": "train a Bregman score denoiser on an image directory",
        "denoise": "apply the denoiser to a synthetically degraded image",
        "deblur": "run the iterative solver on a blurred Poisson observation",
        "sample-noise": "draw one multiplicative-noise realization",
    }
    for task in TASKS:
        p = sub.add_parser(task, help=helps[task])
        p.add_argument("--config", metavar="FILE", help="key=value config file")
        p.add_argument("--seed", type=int, metavar="N", help="base random seed")
        p.add_argument("--mode", choices=("bred", "bpnp"), help="solver mode")
        p.add_argument("--alpha", type=float, metavar="A", help="photon scale")
        p.add_argument("--gamma", type=float, metavar="G", help="noise/denoiser level")
        p.add_argument("--lam", type=float, metavar="L", help="regularization weight")
        p.add_argument("--kernel", metavar="SPEC",
                       help="uniform9 | gaussian25 | file:<path>")
        p.add_argument("--image", metavar="PATH",
                       help="input image (bundled64, bundled128, or a file)")
        p.add_argument("--model", metavar="PATH",
                       help="denoiser checkpoint (bundled or a file)")
        p.add_argument("--dataset", metavar="DIR", help="training image directory")
        p.add_argument("--out", metavar="DIR", help="output directory")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {
        key: getattr(args, key.replace("-", "_"))
        for key in ("seed", "mode", "alpha", "gamma", "lam", "kernel",
                    "image", "model", "dataset", "out")
    }
    try:
        cfg = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
        cfg = cfg.override(task=args.task, **overrides)
        summary = run_experiment(cfg)
    except (ConfigError, ParameterError) as exc:
        print(f"bpnp: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FormatError, OSError) as exc:
        print(f"bpnp: i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (DomainError, ShapeError, BacktrackExhausted,
            FloatingPointError, ZeroDivisionError) as exc:
        print(f"bpnp: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    for key in sorted(summary):
        print(f"{key}={summary[key]}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
