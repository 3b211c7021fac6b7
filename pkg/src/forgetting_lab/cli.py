"""Command-line harness: simulate, sweep, figure data and acceptance checks.

Exit codes: 0 ok, 2 config error, 3 collection fails validation, 4 collection not
realizable, 5 check failure.
"""

import argparse
import copy
import csv
import io
import itertools
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import bounds, checks, constructions, linalg
from .errors import InvalidInputError
from .metrics import default_workers, forgetting_curve, random_trial_curves
from .orderings import KINDS, Ordering, realize
from .tasks import TaskCollection

CONFIG_SCHEMA = "forgetting-lab/config/v1"
BASE_COLUMNS = ["iteration", "forgetting", "forgetting_std", "distance_sq", "residual_bound"]
OVERLAYS = ("two_task", "two_task_worst_case", "distance", "cyclic_lower", "cyclic_upper", "random_expected")

EXIT_OK, EXIT_CONFIG, EXIT_VALIDATION, EXIT_INFEASIBLE, EXIT_CHECK = 0, 2, 3, 4, 5


class ConfigError(Exception):
    pass


class CollectionRejected(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


@dataclass
class ExperimentConfig:
    experiment_name: str
    collection: dict
    ordering: dict | None
    horizon: int
    record_every: int | None = None
    trials: int = 1
    seed_base: int = 0
    bounds_overlay: list = field(default_factory=list)
    output_path: str | None = None

    @classmethod
    def from_dict(cls, doc):
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        if doc.get("schema") != CONFIG_SCHEMA:
            raise ConfigError(f"expected schema {CONFIG_SCHEMA!r}, got {doc.get('schema')!r}")
        try:
            cfg = cls(
                experiment_name=str(doc.get("experiment_name", "experiment")),
                collection=dict(doc["collection"]),
                ordering=dict(doc["ordering"]) if doc.get("ordering") is not None else None,
                horizon=int(doc["horizon"]),
                record_every=int(doc["record_every"]) if doc.get("record_every") is not None else None,
                trials=int(doc.get("trials", 1)),
                seed_base=int(doc.get("seed_base", 0)),
                bounds_overlay=list(doc.get("bounds_overlay", [])),
                output_path=doc.get("output_path"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad config field: {exc}") from exc
        if cfg.horizon < 1:
            raise ConfigError("horizon must be >= 1")
        if cfg.record_every is not None and cfg.record_every < 1:
            raise ConfigError("record_every must be >= 1")
        if cfg.trials < 1:
            raise ConfigError("trials must be >= 1")
        unknown = [b for b in cfg.bounds_overlay if b not in OVERLAYS]
        if unknown:
            raise ConfigError(f"unknown bounds_overlay entries {unknown}; known: {list(OVERLAYS)}")
        return cfg


def load_config(path):
    """Parse a config file; a relative collection ``file`` is taken relative to the config's directory."""
    try:
        with open(path) as f:
            doc = json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    src = doc.get("collection") if isinstance(doc, dict) else None
    if isinstance(src, dict) and isinstance(src.get("file"), str):
        src["file"] = os.path.join(os.path.dirname(os.path.abspath(path)), src["file"])
    return doc


def build_collection(cfg):
    src = cfg.collection
    try:
        if "file" in src:
            s, default = TaskCollection.load(src["file"]), None
        elif "construction" in src:
            s, default = constructions.build(src["construction"], **src.get("params", {}))
        else:
            raise ConfigError("collection needs either 'file' or 'construction'")
    except (OSError, json.JSONDecodeError, InvalidInputError) as exc:
        raise ConfigError(f"cannot build collection: {exc}") from exc
    report = s.validation
    if not report.realizable:
        raise CollectionRejected("; ".join(report.reasons()), EXIT_INFEASIBLE)
    if not report.passed:
        raise CollectionRejected("; ".join(report.reasons()), EXIT_VALIDATION)

    spec = cfg.ordering
    if spec is None:
        if default is None:
            raise ConfigError("no ordering given and the collection source has no default")
        ordering = default
    else:
        kind = spec.get("kind")
        if kind not in KINDS:
            raise ConfigError(f"ordering kind must be one of {KINDS}")
        try:
            ordering = Ordering(kind, len(s), seed=spec.get("seed", cfg.seed_base if kind == "random" else None),
                                sequence=tuple(spec["sequence"]) if spec.get("sequence") else None)
        except InvalidInputError as exc:
            raise ConfigError(str(exc)) from exc
    if ordering.task_count != len(s):
        raise ConfigError("ordering task count does not match the collection")
    return s, ordering


def record_points(k, stride):
    pts = list(range(stride, k + 1, stride))
    if not pts or pts[-1] != k:
        pts.append(k)
    return pts


def overlay_value(name, s, ordering, k):
    """Analytic overlay at iteration ``k``, or None outside the bound's regime."""
    T, d = len(s), s.dimension
    cyclic = ordering.kind == "cyclic"
    if name in ("two_task", "distance", "two_task_worst_case"):
        if not (cyclic and T == 2 and k % 2 == 0):
            return None
        if name == "two_task_worst_case":
            return bounds.two_task_worst_case(k)[0]
        angles = linalg.task_angles(s[1].data, s[2].data)
        theta_f = linalg.friedrichs_angle(angles)
        if theta_f is None:
            return 0.0
        if name == "two_task":
            return bounds.two_task_forgetting_bound(k, angles[angles > linalg.ANGLE_ZERO_TOLERANCE])
        return bounds.distance_bound(k, theta_f, float(np.linalg.norm(s.offline_solution)))
    if name in ("cyclic_lower", "cyclic_upper"):
        if not (cyclic and T >= 3 and k % T == 0 and k >= T * T and s.max_rank < d):
            return None
        lo, hi = bounds.cyclic_bounds(T, k, d, s.max_rank)
        return lo if name == "cyclic_lower" else hi
    if name == "random_expected":
        if ordering.kind != "random" or s.average_rank >= d:
            return None
        return bounds.random_expected_bound(k, d, s.average_rank)
    raise ConfigError(f"unknown overlay {name!r}")


def simulate_rows(cfg):
    """Rows (as dicts) for one config: one row per recorded iteration."""
    s, ordering = build_collection(cfg)
    k = cfg.horizon
    stride = cfg.record_every or (len(s) if ordering.kind == "cyclic" else 1)
    points = record_points(k, stride)
    rows = []
    if ordering.kind == "random":
        curves = random_trial_curves(s, points, cfg.trials, ordering.seed)
        for j, it in enumerate(points):
            f = curves["forgetting"][:, j]
            rows.append({
                "iteration": it,
                "forgetting": float(f.mean()),
                "forgetting_std": float(f.std(ddof=1)) if cfg.trials > 1 else 0.0,
                "distance_sq": float(curves["distance_sq"][:, j].mean()),
                "residual_bound": float(curves["residual_bound"][:, j].mean()),
            })
    else:
        try:
            seq = realize(ordering, k)
        except InvalidInputError as exc:
            raise ConfigError(str(exc)) from exc
        for rec in forgetting_curve(s, seq, points):
            rows.append({
                "iteration": rec.iteration,
                "forgetting": rec.forgetting,
                "forgetting_std": None,
                "distance_sq": rec.distance_sq,
                "residual_bound": rec.residual_bound,
            })
    for row in rows:
        for name in cfg.bounds_overlay:
            row[name] = overlay_value(name, s, ordering, row["iteration"])
    return rows


def fmt(x):
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_csv(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(row.get(h)) for h in header])
    if path in (None, "-"):
        sys.stdout.write(buf.getvalue())
    else:
        with open(path, "w", newline="") as f:
            f.write(buf.getvalue())


def cmd_simulate(config_path, out=None):
    cfg = ExperimentConfig.from_dict(load_config(config_path))
    rows = simulate_rows(cfg)
    write_csv(out or cfg.output_path, BASE_COLUMNS + cfg.bounds_overlay, rows)


def _set_path(doc, dotted, value):
    keys = dotted.split(".")
    node = doc
    for key in keys[:-1]:
        node = node.setdefault(key, {})
    node[keys[-1]] = value


def expand_sweep(doc):
    """Cartesian product over the ``sweep`` mapping of dotted config paths to value lists."""
    sweep = doc.get("sweep") or {}
    if not isinstance(sweep, dict) or not all(isinstance(v, list) and v for v in sweep.values()):
        raise ConfigError("'sweep' must map dotted config paths to non-empty lists")
    names = list(sweep)
    base = {k: v for k, v in doc.items() if k != "sweep"}
    out = []
    for combo in itertools.product(*(sweep[n] for n in names)):
        d = copy.deepcopy(base)
        for n, v in zip(names, combo):
            _set_path(d, n, v)
        out.append((dict(zip(names, combo)), d))
    return names, out


def cmd_sweep(config_path, out=None):
    doc = load_config(config_path)
    names, variants = expand_sweep(doc)
    cfgs = [ExperimentConfig.from_dict(d) for _, d in variants]
    overlays = list(dict.fromkeys(b for c in cfgs for b in c.bounds_overlay))

    def one(i):
        return i, simulate_rows(cfgs[i])

    with ThreadPoolExecutor(max_workers=default_workers()) as pool:
        results = sorted(pool.map(one, range(len(cfgs))))
    rows = []
    for i, part in results:
        for row in part:
            rows.append({"config_index": i, **{n: json.dumps(variants[i][0][n]) for n in names}, **row})
    header = ["config_index", *names, *BASE_COLUMNS, *overlays]
    write_csv(out or doc.get("output_path"), header, rows)


def figure_rows(name):
    if name == "fig3a":
        thetas = (math.pi / 2) * np.arange(0, 1001) / 1000
        rows = []
        for k in (2, 4, 8, 16, 32, 64, 128):
            c2 = np.cos(thetas) ** 2
            vals = c2 ** (k - 1) * (1 - c2)
            rows += [{"theta": t, "k": k, "forgetting": v} for t, v in zip(thetas, vals)]
        return ["theta", "k", "forgetting"], rows
    if name == "fig3b":
        thetas = [math.pi / 32, math.pi / 16, math.pi / 8, math.pi / 4, 3 * math.pi / 8]
        ks = list(range(2, 201, 2))
        sims = checks.simulate_two_task_grid(np.array(thetas), ks)
        cols = [f"theta_{t:.6f}" for t in thetas]
        rows = []
        for k in ks:
            row = {"k": k, "worst_case": bounds.two_task_worst_case(k)[0]}
            row.update(zip(cols, sims[k]))
            rows.append(row)
        return ["k", *cols, "worst_case"], rows
    if name == "fig5":
        T = 128
        s = constructions.fig5_collection(T)
        horizon = 2 * T * T
        points = record_points(horizon, T)
        cyc = forgetting_curve(s, realize(Ordering.cyclic(T), horizon), points)
        rnd = random_trial_curves(s, points, 5, 0)["forgetting"]
        d, r = s.dimension, s.max_rank
        rows = []
        for j, rec in enumerate(cyc):
            k = rec.iteration
            in_regime = k >= T * T
            rows.append({
                "iteration": k,
                "cyclic_forgetting": rec.forgetting,
                "random_mean": float(rnd[:, j].mean()),
                "random_std": float(rnd[:, j].std(ddof=1)),
                "cyclic_lower": bounds.cyclic_lower(T, k) if in_regime else None,
                "cyclic_upper_sqrt": T * T / math.sqrt(k) if in_regime else None,
                "cyclic_upper_rank": T * T * (d - r) / (2 * k) if in_regime else None,
                "random_upper": bounds.random_expected_bound(k, d, s.average_rank),
            })
        header = ["iteration", "cyclic_forgetting", "random_mean", "random_std", "cyclic_lower",
                  "cyclic_upper_sqrt", "cyclic_upper_rank", "random_upper"]
        return header, rows
    raise ConfigError(f"unknown figure {name!r}; choose fig3a, fig3b or fig5")


def cmd_figure(name, out):
    header, rows = figure_rows(name)
    write_csv(out, header, rows)


def cmd_check(suite):
    results = checks.run_suite(suite)
    failed = [r.name for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed" + (f"; failed: {', '.join(failed)}" if failed else ""))
    return EXIT_CHECK if failed else EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="forgetting-lab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sp = sub.add_parser("simulate", help="run one experiment config and write CSV")
    sp.add_argument("config")
    sp.add_argument("--out", help="override output_path ('-' for stdout)")
    sw = sub.add_parser("sweep", help="run a config with a 'sweep' section of value lists")
    sw.add_argument("config")
    sw.add_argument("--out")
    fg = sub.add_parser("figure", help="write the data behind a figure as CSV")
    fg.add_argument("name", choices=["fig3a", "fig3b", "fig5"])
    fg.add_argument("--out", required=True)
    ck = sub.add_parser("check", help="run the acceptance checks")
    ck.add_argument("--suite", choices=sorted(checks.SUITES), default="all")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            cmd_simulate(args.config, args.out)
        elif args.command == "sweep":
            cmd_sweep(args.config, args.out)
        elif args.command == "figure":
            cmd_figure(args.name, args.out)
        elif args.command == "check":
            return cmd_check(args.suite)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CollectionRejected as exc:
        print(f"collection rejected: {exc}", file=sys.stderr)
        return exc.code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
