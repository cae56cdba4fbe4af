"""Command-line front end: ``dcergm {sample,test,risk,phase,oracle}``.

Exit codes: 0 success, 1 configuration error, 2 runtime failure,
3 a check the command ran did not pass.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import oracle
from .config import ConfigError, RunConfig, load_config, threads_from_env
from .detectors import Anchored, DetectorKind, calibrate_threshold, detector_report, statistic
from .experiments import (estimate_risk, phase_diagram, signal_size, signal_strength, to_json)
from .graph import Encoding, GraphParseError, read_graph
from .model import AlternativeSpec, Model
from .motifs import NAMED
from .samplers import dump_samples, run_chain

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_CHECK = 0, 1, 2, 3


def _model(cfg: RunConfig) -> Model:
    m = cfg.model
    return Model(m.n, m.theta, np.full(m.n, m.beta0), NAMED[m.motif], Encoding.parse(m.encoding))


def _write(out: Path, name: str, text: str) -> Path:
    path = out / name
    path.write_text(text)
    return path


def _rows_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    return buf.getvalue()


def cmd_sample(cfg: RunConfig, out: Path) -> int:
    model = _model(cfg)
    kind = cfg.sampler.kind
    if kind == "exact":
        raise ConfigError("sample supports the aux and glauber chains")
    samples = run_chain(kind, model, cfg.sampler.burnin, cfg.n_samples, cfg.sampler.thinning,
                        cfg.seed, cfg.sampler.shift_moves)
    fmt = "csv" if cfg.format == "csv" else "jsonl"
    path = _write(out, f"samples.{fmt}", dump_samples(samples, model, fmt, cfg.include_graph))
    print(f"wrote {cfg.n_samples} samples to {path}")
    return EXIT_OK


def cmd_test(cfg: RunConfig, out: Path) -> int:
    model = _model(cfg)
    g = read_graph(cfg.input, model.encoding)
    if g.n != model.n:
        raise ConfigError(f"graph has n={g.n} but model.n={model.n}")
    reports = []
    for det in cfg.detector_configs():
        if isinstance(det.threshold, Anchored):
            raise ConfigError("anchored thresholds need an alternative; use risk or phase")
        L = calibrate_threshold(det, model, cfg.sampler.kind, cfg.seed, cfg.plan())
        stat = statistic(det.kind, g, model.theta, cfg.model.beta0, model.motif)
        reports.append(detector_report(det, model.n, model.theta, cfg.model.beta0, L, stat))
    text = json.dumps(reports if len(reports) > 1 else reports[0], indent=2)
    print(text)
    _write(out, "decision.json", text + "\n")
    return EXIT_OK


def _alternative(cfg: RunConfig, n: int) -> AlternativeSpec:
    a = cfg.alternative
    if "s" in a:
        return AlternativeSpec(cfg.model.beta0, int(a["s"]), float(a["A"]))
    return AlternativeSpec(cfg.model.beta0, signal_size(n, a["b"]), signal_strength(n, a["t"]))


def cmd_risk(cfg: RunConfig, out: Path) -> int:
    model = _model(cfg)
    if not model.is_two_star:
        raise ConfigError("risk estimation runs on the plus-minus two-star model")
    alt = _alternative(cfg, model.n)
    rows = []
    for det in cfg.detector_configs():
        rep = estimate_risk(model, alt, det, cfg.grid.reps, cfg.seed, cfg.plan())
        row = {"detector": det.kind.value, "n": model.n, "s": alt.s, "A": alt.A,
               "type1": rep.type1, "type2": rep.type2, "risk": rep.risk,
               "se_risk": rep.se_risk, "threshold": rep.threshold}
        rows.append(row)
        print(json.dumps(row))
    if cfg.format == "csv":
        _write(out, "risk.csv", _rows_csv(rows))
    else:
        _write(out, "risk.json", to_json(rows) + "\n")
    return EXIT_OK


def cmd_phase(cfg: RunConfig, out: Path) -> int:
    m = cfg.model
    table = phase_diagram(cfg.grid.cells, cfg.grid.n_list, m.theta, m.beta0, cfg.detector_configs(),
                          cfg.grid.reps, cfg.seed, cfg.plan())
    _write(out, "phase.csv", table.to_csv())
    _write(out, "phase_trends.json", to_json(table.trends) + "\n")
    print(f"wrote {len(table.points)} rows to {out / 'phase.csv'}")
    return EXIT_OK


def cmd_oracle(cfg: RunConfig, out: Path) -> int:
    m = cfg.model
    rep = oracle.oracle_suite(m.n, m.theta, m.beta0, int(cfg.oracle.get("s", 1)),
                              float(cfg.oracle.get("A", 0.3)))
    text = oracle.to_json(rep)
    _write(out, "oracle.json", text + "\n")
    for c in rep["checks"]:
        print(f"{'PASS' if c['pass'] else 'FAIL'} {c['check']} value={c['value']:.3e}")
    return EXIT_OK if rep["pass"] else EXIT_CHECK


COMMANDS = {"sample": cmd_sample, "test": cmd_test, "risk": cmd_risk, "phase": cmd_phase,
            "oracle": cmd_oracle}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dcergm", description=__doc__.splitlines()[0])
    p.add_argument("subcommand", choices=sorted(COMMANDS))
    p.add_argument("--config", type=Path, help="YAML or JSON run configuration")
    p.add_argument("--preset", action="append", default=[],
                   help="named preset (theta1, theta2, theta3, figure1); repeatable")
    p.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
    p.add_argument("--threads", type=int, help="worker threads")
    p.add_argument("--out", type=Path, help="output directory")
    p.add_argument("--no-mkdir", action="store_true", help="fail if --out does not exist")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--input", type=Path, help="graph file for the test subcommand")
    return p


def resolve_config(args) -> RunConfig:
    raw = load_config(args.config) if args.config else {}
    raw = dict(raw)
    raw["subcommand"] = args.subcommand
    if args.preset:
        existing = raw.get("preset") or []
        raw["preset"] = ([existing] if isinstance(existing, str) else list(existing)) + args.preset
    for key in ("seed", "threads", "format"):
        if getattr(args, key) is not None:
            raw[key] = getattr(args, key)
    if args.out is not None:
        raw["out"] = str(args.out)
    if args.input is not None:
        raw["input"] = str(args.input)
    cfg = RunConfig.from_dict(raw)
    cfg.threads = threads_from_env(cfg.threads)
    return cfg.validate()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        out = Path(cfg.out)
        if not out.exists():
            if args.no_mkdir:
                raise ConfigError(f"output directory {out} does not exist")
            out.mkdir(parents=True)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        code = COMMANDS[cfg.subcommand](cfg, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GraphParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (RuntimeError, ValueError, OSError, ArithmeticError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    manifest = {"config": cfg.to_dict(), "exit_code": code,
                "detector_kinds": [k.value for k in DetectorKind]}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
