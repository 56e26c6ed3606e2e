"""Command-line front end.

Subcommands `run`, `calibrate`, and `sweep` all read one JSON
configuration file (schema-validated, unknown keys rejected) and write
CSV traces plus a JSON metadata sidecar into the output directory.

Overrides: repeated `--set KEY=VALUE` flags mutate the loaded config in
memory (dotted keys reach into nested objects); the file on disk is
never touched. The environment variable ANC_SEED overrides the config
seed and is itself overridden by an explicit `--set seed=...`.

Exit codes: 0 success, 2 configuration or schema error, 3 numeric or
calibration failure, 4 I/O failure.
"""

import argparse
import json
import math
import os
import sys

import jsonschema
import numpy as np

from . import harness, plotting
from .acoustics import ArrayGeometry
from .errors import AncradError, ConfigError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_IO = 4

_AMPLITUDE = {
    "oneOf": [
        {"type": "number"},
        {"type": "array", "items": {"type": "number"},
         "minItems": 2, "maxItems": 2},
    ]
}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "frequency": {"type": "number", "exclusiveMinimum": 0},
        "frequencies": {"type": "array", "minItems": 1,
                        "items": {"type": "number", "exclusiveMinimum": 0}},
        "source_amplitudes": {"type": "array", "minItems": 1,
                              "items": _AMPLITUDE},
        "snr_db": {"type": ["number", "null"]},
        "seed": {"type": "integer"},
        "n_iterations": {"type": "integer", "minimum": 1},
        "algorithm": {"enum": list(harness.ALGORITHMS)},
        "gamma": {"type": ["number", "null"], "minimum": 0},
        "lambda": {"type": ["number", "null"], "minimum": 0},
        "mu0": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 2},
        "C": {"type": ["number", "null"], "exclusiveMinimum": 0},
        "moving_average_window": {"type": "integer", "minimum": 1},
        "muted_update": {"enum": ["predicted", "measured", "skip"]},
        "switch": {
            "type": ["object", "null"],
            "additionalProperties": False,
            "required": ["iteration", "new_amplitudes"],
            "properties": {
                "iteration": {"type": "integer", "minimum": 0},
                "new_amplitudes": {"type": "array", "minItems": 1,
                                   "items": _AMPLITUDE},
            },
        },
        "geometry": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "ring_radii": {"type": "array", "items": {"type": "number"}},
                "ring_counts": {"type": "array", "items": {"type": "integer"}},
                "ring_offsets_deg": {"type": "array",
                                     "items": {"type": "number"}},
                "primary_positions": {"type": "array"},
                "error_positions": {"type": "array"},
            },
        },
    },
}


def _parse_amplitude(a):
    if isinstance(a, (int, float)):
        return complex(a)
    return complex(a[0], a[1])


def load_config(path):
    """Read and schema-validate a config file. Raises ConfigError."""
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"config {path} failed schema validation: "
                          f"{exc.message}") from exc
    return cfg


def apply_overrides(cfg, sets, env=None):
    """Apply ANC_SEED then --set overrides; returns a validated copy."""
    cfg = json.loads(json.dumps(cfg))  # deep copy
    env = os.environ if env is None else env
    if "ANC_SEED" in env:
        try:
            cfg["seed"] = int(env["ANC_SEED"])
        except ValueError as exc:
            raise ConfigError(f"ANC_SEED must be an integer: "
                              f"{env['ANC_SEED']!r}") from exc
    for item in sets or []:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, _, raw = item.partition("=")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = cfg
        parts = key.split(".")
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError(f"--set key {key!r} does not address an object")
        node[parts[-1]] = value
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"overridden config failed schema validation: "
                          f"{exc.message}") from exc
    return cfg


def scenario_from_config(cfg, frequency=None):
    """Build a Scenario from a validated config dict."""
    geo_cfg = cfg.get("geometry", {})
    secondary = harness.build_ring_positions(
        radii=tuple(geo_cfg.get("ring_radii", (1.0, 1.2))),
        counts=tuple(geo_cfg.get("ring_counts", (6, 6))),
        offsets_deg=tuple(geo_cfg.get("ring_offsets_deg", (0.0, 30.0))),
    )
    geometry = ArrayGeometry(
        dimension=2,
        primary_positions=np.asarray(
            geo_cfg.get("primary_positions", [[-3.0, 0.5], [3.0, 0.0]])),
        secondary_positions=secondary,
        error_positions=np.asarray(
            geo_cfg.get("error_positions",
                        [[0.5, 0.5], [0.5, -0.5], [-0.5, 0.5], [-0.5, -0.5]])),
    )
    freq = frequency if frequency is not None else cfg.get("frequency")
    if freq is None:
        raise ConfigError("config must provide a frequency")
    switch = None
    if cfg.get("switch") is not None:
        sw = cfg["switch"]
        switch = harness.SwitchSpec(
            iteration=sw["iteration"],
            new_amplitudes=tuple(_parse_amplitude(a)
                                 for a in sw["new_amplitudes"]),
        )
    return harness.Scenario(
        geometry=geometry,
        medium=harness.Medium(),
        frequency=float(freq),
        source_amplitudes=tuple(_parse_amplitude(a) for a in
                                cfg.get("source_amplitudes", (10.0, 5.0))),
        snr_db=cfg.get("snr_db", 40.0),
        seed=cfg.get("seed", 0),
        n_iterations=cfg.get("n_iterations", 50000),
        algorithm=cfg.get("algorithm", "nlms"),
        gamma=cfg.get("gamma"),
        lam=cfg.get("lambda", 0.0),
        mu0=cfg.get("mu0", 1.0),
        C=cfg.get("C"),
        moving_average_window=cfg.get("moving_average_window", 100),
        muted_update=cfg.get("muted_update", "predicted"),
        switch_spec=switch,
    )


def cmd_run(args):
    cfg = apply_overrides(load_config(args.config), args.set)
    scenario = scenario_from_config(cfg)
    trace = harness.run(scenario)
    os.makedirs(args.out, exist_ok=True)
    trace_path = os.path.join(args.out, "trace.csv")
    meta_path = os.path.join(args.out, "meta.json")
    harness.write_trace_csv(trace, trace_path)
    harness.write_meta_json(trace, meta_path)
    conv = trace.meta["converged"]
    print(f"algorithm={scenario.algorithm} frequency={scenario.frequency} "
          f"converged P_red={conv['p_red_db']:.2f} dB "
          f"epsilon={conv['epsilon_mean']:.4e}")
    print(f"wrote {trace_path} and {meta_path}")
    if args.plot:
        gp = plotting.emit_run_plots({scenario.algorithm: trace_path}, args.out)
        print(f"wrote {gp}")
    return EXIT_OK


def cmd_calibrate(args):
    cfg = apply_overrides(load_config(args.config), args.set)
    scenario = scenario_from_config(cfg)
    cal_c = harness.calibrate_C(scenario)
    cal_l = harness.calibrate_lambda(scenario, target_ratio=args.target_ratio)
    ratio_c = _riemannian_check_ratio(scenario, cal_c)
    out = {
        "C": cal_c["C"],
        "C_validation_ratio": ratio_c,
        "lambda": cal_l["lam"],
        "lambda_ratio": cal_l["ratio"],
        "lambda_validation_ratio": cal_l["validation_ratio"],
        "target_ratio": args.target_ratio,
        "diagnostics": {"C": cal_c, "lambda": cal_l},
    }
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "calibration.json")
    with open(path, "w") as fh:
        json.dump(out, fh, indent=2, sort_keys=True,
                  default=harness._json_default)
        fh.write("\n")
    print(f"C = {out['C']:.6e} (constrained-run ratio {ratio_c:.4f})")
    print(f"lambda = {out['lambda']:.6e} (ratio {cal_l['ratio']:.4f}, "
          f"held-out {cal_l['validation_ratio']:.4f})")
    print(f"wrote {path}")
    return EXIT_OK


def _riemannian_check_ratio(scenario, cal_c):
    """Closed-loop validation of C: ratio of constrained to baseline radiation."""
    from dataclasses import replace

    base = replace(scenario, algorithm="nlms", lam=0.0, C=None, switch_spec=None)
    tr = harness.run(replace(base, algorithm="riemannian", C=cal_c["C"]))
    w = scenario.moving_average_window
    return float(np.mean(tr.epsilon[-w:])) / cal_c["epsilon_mean"]


def cmd_sweep(args):
    cfg = apply_overrides(load_config(args.config), args.set)
    freqs = cfg.get("frequencies")
    if not freqs:
        raise ConfigError("sweep config must provide a non-empty 'frequencies' list")
    base = scenario_from_config(cfg, frequency=freqs[0])
    result = harness.frequency_sweep(freqs, base, jobs=args.jobs)
    os.makedirs(args.out, exist_ok=True)
    summary = os.path.join(args.out, "sweep.csv")
    harness.write_sweep_csv(result["rows"], summary)
    for freq, traces in sorted(result["traces"].items()):
        for name, tr in sorted(traces.items()):
            harness.write_trace_csv(
                tr, os.path.join(args.out, f"trace_{freq:g}_{name}.csv"))
    for freq, stage, msg in result["failures"]:
        print(f"FAILED cell ({freq} Hz, {stage}): {msg}", file=sys.stderr)
    print(f"wrote {summary} ({len(result['rows'])} rows, "
          f"{len(result['failures'])} failures)")
    if args.plot and result["rows"]:
        gp = plotting.emit_sweep_plots(result["rows"], args.out)
        print(f"wrote {gp}")
    if not result["rows"]:
        return EXIT_NUMERIC
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ancrad",
        description="Frequency-domain multichannel ANC simulation runner",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="JSON configuration file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config entry (repeatable)")
        p.add_argument("--out", default="out", help="output directory")

    p_run = sub.add_parser("run", help="run one experiment and write its trace")
    common(p_run)
    p_run.add_argument("--plot", action="store_true",
                       help="emit gnuplot files next to the CSV")
    p_run.set_defaults(func=cmd_run)

    p_cal = sub.add_parser("calibrate",
                           help="calibrate the radiation target C and penalty weight")
    common(p_cal)
    p_cal.add_argument("--target-ratio", type=float, default=0.5,
                       help="radiation ratio against the baseline (default 0.5)")
    p_cal.set_defaults(func=cmd_calibrate)

    p_sweep = sub.add_parser("sweep", help="calibrated sweep over frequencies")
    common(p_sweep)
    p_sweep.add_argument("--jobs", type=int, default=1,
                         help="parallel worker processes")
    p_sweep.add_argument("--plot", action="store_true",
                         help="emit gnuplot files next to the CSVs")
    p_sweep.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except AncradError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
