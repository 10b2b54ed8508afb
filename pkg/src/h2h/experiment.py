"""Config-driven recognition experiments and parameter sweeps.

A configuration is an INI-style file::

    [dataset]
    protocol = EYB            ; AR | EYB | LFW | custom
    manifest = manifest.csv   ; relative to the config file
    test_role = test1
    crop = 96x84              ; optional, overrides the protocol crop
    max_subjects = 0          ; >0 samples that many subjects using `seed`

    [descriptor]
    cell = 8
    bins = 9
    normalize = true

    [solver]
    lambda = 0.01
    alpha = 1
    mu0 = 0.1
    rho = 1.1
    mu_max = 1e10
    tol = 1e-6
    max_iter = 500
    batch_size = 0            ; >0 solves test columns in independent batches
    trace = false

    [classifier]
    eta = 1
    exclude_self = false

    [grid]                    ; optional; comma-separated candidate lists
    cell = 6, 8
    bins = 8, 10
    lambda = 0.01, 0.1
    alpha = 1, 10

    [output]
    dir = results
    seed = 0
    workers = 1               ; threads for image loading / extraction
    parallel = 1              ; grid points evaluated concurrently
"""

import configparser
import csv
import io
import itertools
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import classifier, dataset
from .descriptor import feature_matrix
from .errors import ConfigError, H2HError, ProtocolError
from .linalg import gram_inverse
from .solver import SolverConfig, solve, solve_batched

logger = logging.getLogger(__name__)

GRID_KEYS = ("cell", "bins", "lambda", "alpha")
RESULT_COLUMNS = ("point", "cell", "bins", "lambda", "alpha", "n_train", "n_test",
                  "correct", "recognition_rate", "train_iterations", "train_converged",
                  "test_iterations", "test_converged", "test_feasibility", "joint_solve")
TIMING_COLUMNS = ("point", "extract_s", "solve_s", "classify_s", "total_s")


@dataclass
class ExperimentConfig:
    manifest: Path
    protocol: str = "custom"
    test_role: str = "test1"
    crop: tuple = None
    max_subjects: int = 0
    cell: int = 8
    bins: int = 9
    normalize: bool = True
    solver: SolverConfig = field(default_factory=SolverConfig)
    batch_size: int = 0
    trace: bool = False
    eta: float = 1.0
    exclude_self: bool = False
    grid: dict = None
    output_dir: Path = Path("results")
    seed: int = 0
    workers: int = 1
    parallel: int = 1
    source: str = ""

    def points(self):
        """Every (cell, bins, lambda, alpha) combination, grid lists varying fastest last."""
        grid = self.grid or {}
        lists = [grid.get("cell", [self.cell]), grid.get("bins", [self.bins]),
                 grid.get("lambda", [self.solver.lam]), grid.get("alpha", [self.solver.alpha])]
        return list(itertools.product(*lists))

    def echo(self):
        return self.source


def _parse_crop(text):
    try:
        h, w = (int(v) for v in text.lower().replace(",", "x").split("x"))
    except ValueError as exc:
        raise ConfigError(f"crop must look like HEIGHTxWIDTH, got {text!r}") from exc
    return h, w


def _parse_list(text, kind):
    values = [v.strip() for v in text.replace(";", ",").split(",") if v.strip()]
    if not values:
        raise ConfigError("grid lists must be non-empty")
    return [kind(v) for v in values]


def parse_config(text, base_dir=None):
    """Parse configuration text into an :class:`ExperimentConfig`.

    Relative paths are taken relative to `base_dir` (default: cwd).
    """
    base_dir = Path(base_dir or ".")
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text)
        if not cp.has_option("dataset", "manifest"):
            raise ConfigError("[dataset] manifest is required")
        ds = cp["dataset"]
        desc = cp["descriptor"] if cp.has_section("descriptor") else cp["DEFAULT"]
        sol = cp["solver"] if cp.has_section("solver") else cp["DEFAULT"]
        clf = cp["classifier"] if cp.has_section("classifier") else cp["DEFAULT"]
        out = cp["output"] if cp.has_section("output") else cp["DEFAULT"]
        solver_cfg = SolverConfig(
            lam=sol.getfloat("lambda", 0.01), alpha=sol.getfloat("alpha", 1.0),
            mu0=sol.getfloat("mu0", 0.1), rho=sol.getfloat("rho", 1.1),
            mu_max=sol.getfloat("mu_max", 1e10), tol=sol.getfloat("tol", 1e-6),
            max_iter=sol.getint("max_iter", 500),
        )
        grid = None
        if cp.has_section("grid"):
            kinds = {"cell": int, "bins": int, "lambda": float, "alpha": float}
            unknown = set(cp["grid"]) - set(kinds) - set(cp.defaults())
            if unknown:
                raise ConfigError(f"unknown grid keys {sorted(unknown)}")
            grid = {k: _parse_list(cp["grid"][k], kinds[k]) for k in kinds if k in cp["grid"]}
            for k in ("lambda", "alpha"):
                if any(v <= 0 for v in grid.get(k, [])):
                    raise ConfigError(f"grid {k} values must be positive")
        cfg = ExperimentConfig(
            manifest=base_dir / ds["manifest"],
            protocol=ds.get("protocol", "custom"),
            test_role=ds.get("test_role", "test1"),
            crop=_parse_crop(ds["crop"]) if ds.get("crop") else None,
            max_subjects=ds.getint("max_subjects", 0),
            cell=int(desc.get("cell", 8)), bins=int(desc.get("bins", 9)),
            normalize=str(desc.get("normalize", "true")).lower() in ("1", "true", "yes", "on"),
            solver=solver_cfg,
            batch_size=sol.getint("batch_size", 0),
            trace=sol.getboolean("trace", False),
            eta=clf.getfloat("eta", 1.0),
            exclude_self=clf.getboolean("exclude_self", False),
            grid=grid,
            output_dir=base_dir / out.get("dir", "results"),
            seed=out.getint("seed", 0),
            workers=out.getint("workers", 1),
            parallel=out.getint("parallel", 1),
            source=text,
        )
    except ConfigError:
        raise
    except (configparser.Error, ValueError, KeyError) as exc:
        raise ConfigError(f"invalid configuration: {exc}") from exc
    if cfg.eta <= 0:
        raise ConfigError("classifier eta must be positive")
    if cfg.cell < 2 or cfg.bins < 2:
        raise ConfigError("cell and bins must both be >= 2")
    try:
        dataset.get_protocol(cfg.protocol)
    except ProtocolError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def load_config(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, path.parent)


@dataclass
class RunReport:
    rows: list
    timings: list
    config_echo: str
    manifest_sha256: str
    traces: dict = field(default_factory=dict, repr=False)

    def table(self):
        """Human-readable summary; contains no wall-clock values."""
        buf = io.StringIO()
        buf.write(f"manifest sha256: {self.manifest_sha256}\n\n")
        header = f"{'point':>5} {'cell':>4} {'bins':>4} {'lambda':>10} {'alpha':>10} " \
                 f"{'rate %':>8} {'correct':>9} {'iters':>6} {'conv':>5}\n"
        buf.write(header)
        buf.write("-" * (len(header) - 1) + "\n")
        for r in self.rows:
            buf.write(f"{r['point']:>5} {r['cell']:>4} {r['bins']:>4} {r['lambda']:>10.4g} "
                      f"{r['alpha']:>10.4g} {r['recognition_rate']:>8.2f} "
                      f"{r['correct']:>4}/{r['n_test']:<4} {r['test_iterations']:>6} "
                      f"{str(r['test_converged']):>5}\n")
        buf.write("\n[config]\n")
        buf.write(self.config_echo.rstrip() + "\n")
        return buf.getvalue()

    def timing_table(self):
        lines = [" ".join(f"{c:>10}" for c in TIMING_COLUMNS)]
        for t in self.timings:
            lines.append(f"{t['point']:>10} " + " ".join(f"{t[c]:>10.3f}" for c in TIMING_COLUMNS[1:]))
        return "\n".join(lines) + "\n"

    def best(self):
        """Highest recognition rate; ties go to the faster configuration."""
        total = {t["point"]: t["total_s"] for t in self.timings}
        return max(self.rows, key=lambda r: (r["recognition_rate"], -total.get(r["point"], 0.0)))

    def write(self, output_dir):
        out = Path(output_dir)
        out.mkdir(parents=True, exist_ok=True)
        _write_csv(out / "results.csv", RESULT_COLUMNS, self.rows)
        _write_csv(out / "timings.csv", TIMING_COLUMNS, self.timings)
        (out / "report.txt").write_text(self.table())
        (out / "timings.txt").write_text(self.timing_table())
        for name, rep in self.traces.items():
            rep.write_trace(out / f"trace_{name}.csv")
        return out


def _write_csv(path, columns, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})


def _sample_subjects(manifest, max_subjects, seed):
    subjects = manifest.subjects("train")
    if not max_subjects or max_subjects >= len(subjects):
        return manifest
    rng = np.random.default_rng(seed)
    keep = set(rng.choice(subjects, size=max_subjects, replace=False).tolist())
    return replace(manifest, entries=[e for e in manifest.entries if e.subject in keep])


class _Pipeline:
    """Holds the loaded images and per-(cell, bins) feature cache of one run."""

    def __init__(self, config):
        self.config = config
        manifest = dataset.read_manifest(config.manifest)
        self.manifest = _sample_subjects(manifest, config.max_subjects, config.seed)
        self.protocol = dataset.get_protocol(config.protocol)
        dataset.check_protocol(self.manifest, self.protocol, config.test_role)
        self.crop = dataset.resolve_crop(self.protocol, config.crop)
        self.images = None
        self.features = {}

    def load(self):
        if self.images is None:
            cfg = self.config
            tr, tr_lab = dataset.load_role_images(self.manifest, "train", self.crop, cfg.workers)
            tt, tt_lab = dataset.load_role_images(self.manifest, cfg.test_role, self.crop,
                                                  cfg.workers)
            self.images = (tr, tt)
            self.labels = (tr_lab, tt_lab)

    def extract(self, cell, bins):
        key = (cell, bins)
        if key not in self.features:
            self.load()
            cfg = self.config
            tr, tt = self.images
            x_tr = feature_matrix(tr, cell, bins, cfg.normalize, cfg.workers)
            y = feature_matrix(tt, cell, bins, cfg.normalize, cfg.workers)
            self.features[key] = (x_tr, y, gram_inverse(x_tr))
        return self.features[key]


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except H2HError as exc:
        exc.stage = name
        raise


def _evaluate(pipe, index, point):
    cfg = pipe.config
    cell, bins, lam, alpha = point
    solver_cfg = replace(cfg.solver, lam=lam, alpha=alpha)
    t0 = time.perf_counter()
    x_tr, y, c = _stage("extract", pipe.extract, cell, bins)
    t1 = time.perf_counter()
    train_rep = _stage("solve", solve, x_tr, x_tr, solver_cfg, c=c, record_trace=cfg.trace)
    if cfg.batch_size:
        test_rep = _stage("solve", solve_batched, x_tr, y, solver_cfg, cfg.batch_size)
    else:
        test_rep = _stage("solve", solve, x_tr, y, solver_cfg, c=c, record_trace=cfg.trace)
    t2 = time.perf_counter()
    z_tr = train_rep.z
    if cfg.exclude_self:
        z_tr = z_tr.copy()
        np.fill_diagonal(z_tr, 0.0)
    train_labels, test_labels = pipe.labels
    weights = _stage("classify", classifier.fit, z_tr, train_labels, cfg.eta)
    predicted = _stage("classify", classifier.predict, weights, test_rep.z)
    correct = sum(p == t for p, t in zip(predicted, test_labels))
    t3 = time.perf_counter()
    row = {
        "point": index, "cell": cell, "bins": bins, "lambda": lam, "alpha": alpha,
        "n_train": x_tr.shape[1], "n_test": y.shape[1], "correct": correct,
        "recognition_rate": classifier.recognition_rate(predicted, test_labels),
        "train_iterations": train_rep.iterations, "train_converged": train_rep.converged,
        "test_iterations": test_rep.iterations, "test_converged": test_rep.converged,
        "test_feasibility": test_rep.feasibility, "joint_solve": not cfg.batch_size,
    }
    timing = {"point": index, "extract_s": t1 - t0, "solve_s": t2 - t1,
              "classify_s": t3 - t2, "total_s": t3 - t0}
    traces = {}
    if cfg.trace:
        traces = {f"{index}_train": train_rep, f"{index}_test": test_rep}
    return row, timing, traces


def run(config, write=True):
    """Run every configuration point (one, or the grid) and return a :class:`RunReport`.

    Stage errors carry a ``stage`` attribute (``load``, ``extract``, ``solve``
    or ``classify``); rows finished before the failure are written first.
    """
    if not isinstance(config, ExperimentConfig):
        config = load_config(config)
    pipe = _stage("load", _Pipeline, config)
    _stage("load", pipe.load)
    points = config.points()
    report = RunReport([], [], config.echo(), pipe.manifest.digest)

    def collect(result):
        row, timing, traces = result
        report.rows.append(row)
        report.timings.append(timing)
        report.traces.update(traces)

    try:
        if config.parallel > 1 and len(points) > 1:
            for cell, bins in dict.fromkeys((p[0], p[1]) for p in points):
                _stage("extract", pipe.extract, cell, bins)
            with ThreadPoolExecutor(max_workers=config.parallel) as pool:
                for result in pool.map(lambda ip: _evaluate(pipe, *ip), enumerate(points)):
                    collect(result)
        else:
            for index, point in enumerate(points):
                collect(_evaluate(pipe, index, point))
    except H2HError:
        if write and report.rows:
            report.write(config.output_dir)
        raise
    if write:
        report.write(config.output_dir)
    return report


def grid_search(config, write=True):
    """Evaluate the Cartesian grid and return ``(best_row, report)``."""
    if not isinstance(config, ExperimentConfig):
        config = load_config(config)
    if not config.grid:
        raise ConfigError("grid search needs a [grid] section")
    report = run(config, write=write)
    best = report.best()
    if write:
        _write_csv(Path(config.output_dir) / "best.csv", RESULT_COLUMNS, [best])
    return best, report


def extract(config, output_dir=None, csv_too=False):
    """Write train/test feature matrices of one (cell, bins) setting to containers."""
    from .container import write_features, write_features_csv

    if not isinstance(config, ExperimentConfig):
        config = load_config(config)
    out = Path(output_dir or config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    pipe = _stage("load", _Pipeline, config)
    x_tr, y, _ = _stage("extract", pipe.extract, config.cell, config.bins)
    train_labels, test_labels = pipe.labels
    paths = []
    for name, x, labels in (("train", x_tr, train_labels),
                            (config.test_role, y, test_labels)):
        write_features(out / f"{name}.h2hf", x)
        paths.append(out / f"{name}.h2hf")
        with open(out / f"{name}_labels.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["column", "subject"])
            writer.writerows(enumerate(labels))
        if csv_too:
            write_features_csv(out / f"{name}.csv", x, labels)
    return paths
