"""Command-line entry point.

    aero-ftc run --preset fig7 --out results/
    aero-ftc run --config healthy.json --seed 3
    aero-ftc run --manifest batch.json
    aero-ftc compare results/healthy_trace.csv results/fig7_trace.csv
    aero-ftc release --pitch-deg 10

Exit codes: 0 success, 2 invalid input (config, manifest, trace files),
3 simulation divergence.  Failures print one JSON line to stderr.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import config as cfgmod
from . import metrics
from .model import DEFAULT_TS, nominal_model
from .sim import ConfigError, ScenarioConfig, SimulationDiverged, open_loop_release, run_batch
from .tracefile import TraceFormatError, read_trace_csv, write_rows_csv, write_trace_csv

log = logging.getLogger("aero_ftc")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_DIVERGED = 3
OUT_ENV = "AERO_FTC_OUT"


@dataclass(frozen=True)
class RunManifest:
    scenarios: dict[str, Path]
    out_dir: Path
    seed: int | None = None

    @classmethod
    def load(cls, path) -> "RunManifest":
        doc = cfgmod.load_document(path)
        base = Path(path).parent
        entries = doc.get("scenarios")
        if not isinstance(entries, list) or not entries:
            raise ConfigError("scenarios", "expected a non-empty list of {name, config}")
        scenarios: dict[str, Path] = {}
        for i, e in enumerate(entries):
            if not isinstance(e, dict) or "name" not in e or "config" not in e:
                raise ConfigError(f"scenarios[{i}]", "expected {name, config}")
            if e["name"] in scenarios:
                raise ConfigError(f"scenarios[{i}].name", f"duplicate scenario name {e['name']!r}")
            scenarios[e["name"]] = base / e["config"]
        seed = doc.get("seed")
        if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int) or seed < 0):
            raise ConfigError("seed", "expected a non-negative integer")
        return cls(scenarios, Path(doc.get("out_dir", ".")), seed)


def _fail(kind: str, message: str, code: int, **extra) -> int:
    print(json.dumps({"error": kind, "message": message, **extra}), file=sys.stderr)
    return code


def _out_dir(arg) -> Path:
    out = Path(arg or os.environ.get(OUT_ENV) or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _apply_flags(cfg: ScenarioConfig, args) -> ScenarioConfig:
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.no_estimator:
        changes["estimator_enabled"] = False
    if args.no_accommodation:
        changes["accommodation"] = dataclasses.replace(cfg.accommodation, enabled=False)
    return dataclasses.replace(cfg, **changes) if changes else cfg


def write_outputs(name: str, columns, out: Path) -> tuple[Path, Path]:
    trace_path = write_trace_csv(out / f"{name}_trace.csv", columns)
    rows = metrics.metrics_rows(columns)
    fields = ["axis", "segment", "t_start", "rise_time", "overshoot", "sse", "angle_sd", "voltage_sd"]
    metrics_path = write_rows_csv(out / f"{name}_metrics.csv", rows, fields)
    return trace_path, metrics_path


def cmd_run(args) -> int:
    sources = [bool(args.config), bool(args.preset), bool(args.manifest)]
    if sum(sources) != 1:
        return _fail("usage", "give exactly one of --config, --preset or --manifest", EXIT_INPUT)
    try:
        if args.manifest:
            manifest = RunManifest.load(args.manifest)
            out = _out_dir(args.out or manifest.out_dir)
            seed = args.seed if args.seed is not None else manifest.seed
            named = [(n, cfgmod.load_scenario(p, seed)) for n, p in manifest.scenarios.items()]
        elif args.config:
            out = _out_dir(args.out)
            named = [(args.name or Path(args.config).stem, cfgmod.load_scenario(args.config))]
        else:
            out = _out_dir(args.out)
            named = [(args.name or args.preset,
                      cfgmod.scenario_from_dict(cfgmod.preset(args.preset)))]
        named = [(n, _apply_flags(c, args)) for n, c in named]
    except ConfigError as exc:
        return _fail("config", str(exc), EXIT_INPUT, key=exc.key)

    try:
        traces = run_batch([c for _, c in named], max_workers=args.jobs)
    except SimulationDiverged as exc:
        name = named[0][0] if len(named) == 1 else "diverged"
        path = write_trace_csv(out / f"{name}_trace.csv", exc.trace.columns())
        return _fail("diverged", str(exc), EXIT_DIVERGED, partial_trace=str(path))

    for (name, _), tr in zip(named, traces):
        cols = tr.columns()
        trace_path, metrics_path = write_outputs(name, cols, out)
        print(metrics.format_table(metrics.summarize(cols), title=f"[{name}]"))
        print(f"wrote {trace_path} and {metrics_path}")
    return EXIT_OK


def compare_summaries(baseline, candidate, t_from: float = -math.inf):
    """Per-axis metric summaries of both traces and their differences (candidate - baseline)."""
    for key in ("t",):
        a, b = baseline[key], candidate[key]
        if len(a) != len(b) or not np.allclose(a, b, rtol=0, atol=1e-9):
            raise TraceFormatError("traces do not share the same time grid (T_s and duration)")
    sb = metrics.summarize(baseline, t_from)
    sc = metrics.summarize(candidate, t_from)
    delta = {ax: {k: sc[ax][k] - sb[ax][k] for k in sb[ax]} for ax in sb}
    return sb, sc, delta


def cmd_compare(args) -> int:
    try:
        base = read_trace_csv(args.baseline)
        cand = read_trace_csv(args.candidate)
        sb, sc, delta = compare_summaries(base, cand, args.t_from)
    except (OSError, TraceFormatError) as exc:
        return _fail("trace", str(exc), EXIT_INPUT)
    print(metrics.format_table(sb, title=f"baseline  {args.baseline}"))
    print()
    print(metrics.format_table(sc, title=f"candidate {args.candidate}"))
    print()
    print(metrics.format_table(delta, title="delta (candidate - baseline)"))
    if args.out:
        rows = [{"axis": ax, "metric": k, "baseline": sb[ax][k], "candidate": sc[ax][k],
                 "delta": delta[ax][k]} for ax in delta for k in delta[ax]]
        write_rows_csv(args.out, rows)
    return EXIT_OK


def cmd_release(args) -> int:
    x0 = np.radians([args.pitch_deg, 0.0, 0.0, 0.0])
    tr = open_loop_release(nominal_model(), x0, args.duration, args.ts)
    try:
        w = metrics.natural_frequency(tr.t, tr.pitch)
    except metrics.MetricsError as exc:
        return _fail("metrics", str(exc), EXIT_INPUT)
    print(f"damped natural frequency of pitch: {w:.5f} rad/s")
    if args.out:
        write_trace_csv(Path(args.out), tr.columns())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="aero-ftc", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate scenario(s) and write trace/metrics CSVs")
    run.add_argument("--config", type=Path)
    run.add_argument("--preset", choices=sorted(cfgmod.PRESETS))
    run.add_argument("--manifest", type=Path, help="JSON batch: {scenarios: [{name, config}], out_dir, seed}")
    run.add_argument("--name", help="output file prefix (single scenario)")
    run.add_argument("--out", type=Path, help=f"output directory (default ${OUT_ENV} or .)")
    run.add_argument("--seed", type=int)
    run.add_argument("--no-estimator", action="store_true")
    run.add_argument("--no-accommodation", action="store_true")
    run.add_argument("--jobs", type=int, default=None, help="concurrent scenarios in a batch")
    run.set_defaults(func=cmd_run)

    cmp_ = sub.add_parser("compare", help="metric deltas between two trace CSVs")
    cmp_.add_argument("baseline", type=Path)
    cmp_.add_argument("candidate", type=Path)
    cmp_.add_argument("--t-from", type=float, default=-math.inf,
                      help="ignore reference steps before this time (s)")
    cmp_.add_argument("--out", type=Path, help="write the comparison as CSV")
    cmp_.set_defaults(func=cmd_compare)

    rel = sub.add_parser("release", help="open-loop pitch release and its damped frequency")
    rel.add_argument("--pitch-deg", type=float, default=10.0)
    rel.add_argument("--duration", type=float, default=60.0)
    rel.add_argument("--ts", type=float, default=DEFAULT_TS)
    rel.add_argument("--out", type=Path)
    rel.set_defaults(func=cmd_release)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
