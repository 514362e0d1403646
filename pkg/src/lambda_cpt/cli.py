"""Command-line front end.

    lambda-cpt simulate --config FILE [--out DIR]
    lambda-cpt steady --config FILE
    lambda-cpt sweep --config FILE [--out DIR]
    lambda-cpt dressed --config FILE
    lambda-cpt scenarios --list | --run NAME|all [--out DIR]

Exit codes: 0 success, 1 assertion failure, 2 config error, 3 numeric failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import emit
from .config import ConfigError, parse_config
from .dressed import DressedBasis, decay_rates, dressed_rates, to_dressed
from .errors import LambdaCPTError, NumericalError, ValidationError
from .integrator import IntegratorConfig
from .scenarios import (
    ScenarioSpec,
    builtin_scenarios,
    get_scenario,
    integrated_report,
    predict_steady,
    run_scenario,
    sweep,
)
from .steady import uniqueness

log = logging.getLogger("lambda_cpt")

EXIT_OK, EXIT_ASSERT, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


def _load(path, command):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return parse_config(text, command=command)


def _write(out_dir, name, text):
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / name
    path.write_text(text, encoding="utf-8")
    log.info("wrote %s", path)
    return path


def _out_dir(args, cfg):
    raw = getattr(args, "out", None) or cfg.output.dir
    return Path(raw) if raw else None


def _spec_from_config(cfg):
    if cfg.scenario is not None:
        base = get_scenario(cfg.scenario)
        # expectations only hold for the preset's own parameters and initial state
        unchanged = base.params == cfg.params and np.array_equal(base.initial.data, cfg.initial.data)
        return replace(
            base,
            params=cfg.params,
            initial=cfg.initial,
            horizon=cfg.integrator.horizon,
            expected=base.expected if unchanged else (),
            c0=base.c0 if unchanged else None,
        )
    return ScenarioSpec(name="custom", params=cfg.params, initial=cfg.initial, horizon=cfg.integrator.horizon)


def cmd_simulate(args):
    cfg = _load(args.config, "simulate")
    spec = _spec_from_config(cfg)
    result = run_scenario(spec, cfg.integrator)
    summary = emit.scenario_summary(result)
    out_dir = _out_dir(args, cfg) or Path(".")
    _write(out_dir, cfg.output.csv, emit.trajectory_csv(spec.params, result.trajectory))
    _write(out_dir, cfg.output.json, emit.to_json(summary))
    for c in result.checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name}  ({c.detail})")
    return EXIT_OK if result.passed else EXIT_ASSERT


def cmd_steady(args):
    cfg = _load(args.config, "steady")
    report = predict_steady(cfg.params, cfg.initial)
    if report is None:
        if cfg.initial is None:
            raise ValidationError("initial state given", "steady state depends on the initial state here")
        from .integrator import integrate

        report = integrated_report(cfg.params, integrate(cfg.params, cfg.initial, cfg.integrator)).report
    uq = uniqueness(cfg.params)
    summary = {
        "params": emit.params_dict(cfg.params),
        "time_unit": emit.time_unit_label(cfg.params),
        "steady": report.as_dict(),
        "classification": report.classification.value,
        "provenance": report.provenance.value,
        "uniqueness": uq.as_dict(),
    }
    text = emit.to_json(summary)
    print(text)
    out_dir = _out_dir(args, cfg)
    if out_dir is not None:
        _write(out_dir, cfg.output.json, text)
    return EXIT_OK


def cmd_sweep(args):
    cfg = _load(args.config, "sweep")
    if cfg.initial is None:
        from .scenarios import INITIAL_PRESETS

        initial = INITIAL_PRESETS["case1a"]
    else:
        initial = cfg.initial
    rows = sweep(cfg.sweep_grid(), initial, cfg.integrator)
    text = emit.sweep_csv(rows)
    out_dir = _out_dir(args, cfg)
    if out_dir is None:
        sys.stdout.write(text)
    else:
        _write(out_dir, "sweep.csv", text)
    return EXIT_OK


def cmd_dressed(args):
    cfg = _load(args.config, "dressed")
    r1, r2 = cfg.dressed_basis or (cfg.params.r1, cfg.params.r2)
    basis = DressedBasis(r1, r2)
    rho_d = to_dressed(basis, cfg.initial)
    summary = {
        "basis": {"r1": r1, "r2": r2, "order": ["a", "D", "B"]},
        "params": emit.params_dict(cfg.params),
        "initial_dressed": {
            "rho_aa": rho_d.entry("a", "a").real,
            "rho_DD": rho_d.entry("D", "D").real,
            "rho_BB": rho_d.entry("B", "B").real,
            "re_rho_DB": rho_d.entry("D", "B").real,
            "im_rho_DB": rho_d.entry("D", "B").imag,
        },
    }
    if cfg.params.is_ideal() and cfg.params.r1 + cfg.params.r2 > 0:
        rates = dressed_rates(cfg.params, cfg.initial)
        summary["rates"] = {
            "d_DD": rates.d_DD,
            "d_BB": rates.d_BB,
            "d_aa": rates.d_aa,
            "re_d_DB": rates.d_DB.real,
            "im_d_DB": rates.d_DB.imag,
        }
        summary["decay_rates"] = decay_rates(cfg.params)
    print(emit.to_json(summary))
    return EXIT_OK


def cmd_scenarios(args):
    if args.list:
        for spec in builtin_scenarios():
            print(f"{spec.name:16s} {spec.description}")
        return EXIT_OK
    specs = builtin_scenarios() if args.run == "all" else [get_scenario(args.run)]
    out_dir = Path(args.out) if args.out else None
    failed = 0
    for spec in specs:
        result = run_scenario(spec, IntegratorConfig(horizon=spec.horizon))
        status = "PASS" if result.passed else "FAIL"
        print(f"{status}  {spec.name}")
        for c in result.checks:
            print(f"    {'ok ' if c.passed else 'BAD'} {c.name}: {c.detail}")
        if out_dir is not None:
            _write(out_dir, f"{spec.name}.csv", emit.trajectory_csv(spec.params, result.trajectory))
            _write(out_dir, f"{spec.name}.json", emit.to_json(emit.scenario_summary(result)))
        failed += not result.passed
    return EXIT_OK if failed == 0 else EXIT_ASSERT


def build_parser():
    parser = argparse.ArgumentParser(prog="lambda-cpt", description="Incoherently pumped Λ-atom simulator")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, func in (("simulate", cmd_simulate), ("steady", cmd_steady), ("sweep", cmd_sweep)):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--out", default=None, help="output directory")
        p.set_defaults(func=func)

    p = sub.add_parser("dressed")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_dressed)

    p = sub.add_parser("scenarios")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--list", action="store_true")
    group.add_argument("--run", metavar="NAME|all")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_scenarios)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (ConfigError, ValidationError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except LambdaCPTError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
