"""Command-line entry point: ``h2h run|grid|extract|inspect``.

Exit codes: 0 success, 1 configuration error, 2 data error, 3 numerical failure.
"""

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import experiment
from .container import FEATURE_MAGIC, WEIGHT_MAGIC, read_features, read_header, read_weights
from .errors import ConfigError, DataError, H2HError, NumericalError, ParameterError

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERICAL = 0, 1, 2, 3


def _cmd_run(args):
    report = experiment.run(experiment.load_config(args.config))
    print(report.table(), end="")
    print(report.timing_table(), end="")
    return EXIT_OK


def _cmd_grid(args):
    best, report = experiment.grid_search(experiment.load_config(args.config))
    print(report.table(), end="")
    print(f"best: point {best['point']} cell={best['cell']} bins={best['bins']} "
          f"lambda={best['lambda']:g} alpha={best['alpha']:g} "
          f"rate={best['recognition_rate']:.2f}%")
    return EXIT_OK


def _cmd_extract(args):
    paths = experiment.extract(experiment.load_config(args.config), args.output, args.csv)
    for p in paths:
        magic, version, rows, cols = read_header(p)
        print(f"{p}: {rows} x {cols}")
    return EXIT_OK


def _describe_image(path, cell, bins):
    from .dataset import load_image
    from .descriptor import h2h_descriptor
    from .gradients import gradient_fields

    img = load_image(path)
    fields = gradient_fields(img)
    desc = h2h_descriptor(img, cell, bins)
    block_norms = np.linalg.norm(desc.blocks(), axis=1)
    print(f"image       {path}  {img.shape[0]}x{img.shape[1]}  "
          f"range [{img.min():.4f}, {img.max():.4f}]")
    print(f"magnitude   mean {fields.magnitude.mean():.5f}  max {fields.magnitude.max():.5f}")
    print(f"strength    mean {fields.strength.mean():.5f}  max {fields.strength.max():.5f}")
    print(f"descriptor  cell={cell} bins={bins} grid={desc.n_y}x{desc.n_x} "
          f"blocks={desc.n_blocks} length={desc.values.size}")
    print(f"blocks      zero={int(np.sum(block_norms == 0))} "
          f"unit={int(np.sum(np.abs(block_norms - 1) < 1e-9))}")


def _cmd_inspect(args):
    path = Path(args.path)
    try:
        with open(path, "rb") as fh:
            magic = fh.read(4)
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc}") from exc
    if magic == FEATURE_MAGIC:
        x = read_features(path)
        norms = np.linalg.norm(x, axis=0)
        print(f"features {path}: d={x.shape[0]} n={x.shape[1]} "
              f"column norms [{norms.min():.6f}, {norms.max():.6f}]")
    elif magic == WEIGHT_MAGIC:
        w = read_weights(path)
        print(f"weights {path}: c={w.w.shape[0]} n={w.w.shape[1]} eta={w.eta:g}")
        print("classes: " + ", ".join(w.class_names))
    else:
        _describe_image(path, args.cell, args.bins)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="h2h", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one configuration (or every grid point)")
    p.add_argument("config")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("grid", help="grid search and report the best point")
    p.add_argument("config")
    p.set_defaults(func=_cmd_grid)

    p = sub.add_parser("extract", help="write feature matrices to .h2hf containers")
    p.add_argument("config")
    p.add_argument("-o", "--output", help="output directory (default: config output dir)")
    p.add_argument("--csv", action="store_true", help="also write CSV copies")
    p.set_defaults(func=_cmd_extract)

    p = sub.add_parser("inspect", help="describe an image or a container file")
    p.add_argument("path")
    p.add_argument("--cell", type=int, default=8)
    p.add_argument("--bins", type=int, default=9)
    p.set_defaults(func=_cmd_inspect)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except H2HError as exc:
        stage = getattr(exc, "stage", None)
        prefix = f"error in {stage} stage" if stage else "error"
        print(f"{prefix}: {exc}", file=sys.stderr)
        return exit_code(exc)


def exit_code(exc):
    if isinstance(exc, (ConfigError, ParameterError)):
        return EXIT_CONFIG
    if isinstance(exc, NumericalError):
        return EXIT_NUMERICAL
    return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
