"""Command-line front end: JSON experiment configs in, CSV/JSON artifacts out.

Every subcommand reads ``--config``, validates it against a JSON schema
that rejects unknown keys, and writes its outputs into ``--out``.
Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from typing import Iterable, List, Sequence

import jsonschema
import numpy as np

from . import arma, bounds, composite, montecarlo, optimizer
from .arma import ArmaModel
from .control import NoiseModel, PulseSequence, filter_functions, infidelity_full, uniform_sequence
from .errors import NumericalError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

DEFAULT_GRID_POINTS = 512

_number_list = {"type": "array", "items": {"type": "number"}}

_ARMA = {
    "type": "object",
    "properties": {"ar": _number_list, "ma": _number_list, "sigma_w2": {"type": "number", "minimum": 0}},
    "additionalProperties": False,
}
_DC = {
    "type": "object",
    "properties": {"dc_variance": {"type": "number", "minimum": 0}},
    "required": ["dc_variance"],
    "additionalProperties": False,
}
_PROCESS = {"oneOf": [_DC, _ARMA]}
_NOISE = {
    "type": "object",
    "properties": {
        "control": _PROCESS,
        "dephasing_mean": {"type": "number"},
        "dephasing_residual": {"oneOf": [_ARMA, {"type": "null"}]},
    },
    "required": ["control"],
    "additionalProperties": False,
}
_SEQUENCE = {
    "type": "object",
    "properties": {"thetas": _number_list, "target_angle": {"type": "number"}},
    "required": ["thetas"],
    "additionalProperties": False,
}
_GRID = {
    "omegas": _number_list,
    "num_points": {"type": "integer", "minimum": 1},
}
_SEED = {"type": "integer", "minimum": 0}
_POS_INT = {"type": "integer", "minimum": 1}


def _schema(properties: dict, required: Sequence[str]) -> dict:
    return {
        "type": "object",
        "properties": properties,
        "required": list(required),
        "additionalProperties": False,
    }


SCHEMAS = {
    "optimize": _schema(
        {
            "noise": _NOISE,
            "theta_q": {"type": "number"},
            "n_min": _POS_INT,
            "n_max": _POS_INT,
            "max_iters": _POS_INT,
            "tol": {"type": "number", "exclusiveMinimum": 0},
        },
        ["noise", "theta_q", "n_min", "n_max"],
    ),
    "evaluate": _schema(
        {"noise": _NOISE, "sequences": {"type": "array", "items": _SEQUENCE, "minItems": 1}},
        ["noise", "sequences"],
    ),
    "simulate": _schema(
        {
            "cases": {
                "type": "array",
                "minItems": 1,
                "items": _schema({"label": {"type": "string"}, "noise": _NOISE}, ["label", "noise"]),
            },
            "theta_q": {"type": "number"},
            "lengths": {"type": "array", "items": _POS_INT, "minItems": 1},
            "sequence": {"enum": ["optimal", "uniform"]},
            "num_trajectories": _POS_INT,
            "seed": _SEED,
            "burn_in": {"type": "integer", "minimum": 0},
        },
        ["cases", "theta_q", "lengths"],
    ),
    "compare-cp": _schema(
        {
            "a1_grid": {**_number_list, "minItems": 1},
            "b1_grid": {**_number_list, "minItems": 1},
            "theta_q": {"type": "number"},
            "total_power": {"type": "number", "exclusiveMinimum": 0},
            "kind": {"enum": ["SK1", "BB1"]},
            "k": _POS_INT,
        },
        ["a1_grid", "b1_grid", "theta_q", "total_power", "kind"],
    ),
    "sweep-robustness": _schema(
        {
            "base_models": {
                "type": "array",
                "minItems": 1,
                "items": _schema(
                    {"a1": {"type": "number"}, "b1": {"type": "number"}, "sigma_w2": {"type": "number", "minimum": 0}},
                    ["a1", "b1"],
                ),
            },
            "deviations": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1},
            "samples_per_eps": _POS_INT,
            "theta_q": {"type": "number"},
            "n": _POS_INT,
            "seed": _SEED,
        },
        ["base_models", "deviations", "samples_per_eps", "theta_q", "n"],
    ),
    "spectrum": _schema({"model": _PROCESS, **_GRID}, ["model"]),
    "filter-function": _schema(
        {
            "sequence": _SEQUENCE,
            "theta_q": {"type": "number"},
            "n": _POS_INT,
            **_GRID,
        },
        [],
    ),
}


class ConfigError(ValueError):
    """Raised for configurations that pass the schema but are inconsistent."""


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.17g" % value
    return str(value)


def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def write_json(path: str, data) -> None:
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _grid(cfg: dict) -> np.ndarray:
    if "omegas" in cfg:
        return np.asarray(cfg["omegas"], dtype=float)
    count = cfg.get("num_points", DEFAULT_GRID_POINTS)
    return np.pi * np.arange(1, count + 1) / count


def _has_dephasing(noise: NoiseModel) -> bool:
    return noise.dephasing_mean != 0.0 or noise.dephasing_residual is not None


def _optimal_sequence(noise: NoiseModel, theta_q: float, n: int, threads: int = 1) -> PulseSequence:
    if not _has_dephasing(noise):
        gammas = noise.control_gammas(n)
        if not np.any(gammas):
            # every feasible sequence is optimal without noise
            return uniform_sequence(theta_q, n)
        return optimizer.solve_qp(optimizer.QpProblem(arma.covariance_matrix(gammas, n), theta_q))
    return optimizer.optimize_full(noise, theta_q, n)[0]


def cmd_optimize(cfg: dict, out: str, threads: int, seed=None) -> List[str]:
    noise = NoiseModel.from_dict(cfg["noise"])
    theta_q, n_min, n_max = cfg["theta_q"], cfg["n_min"], cfg["n_max"]
    if n_max < n_min:
        raise ConfigError("n_max must be >= n_min")
    rows, sequences = [], []
    if _has_dephasing(noise):
        sweep = optimizer.sweep_lengths(
            noise, theta_q, n_min, n_max, cfg.get("max_iters", 100_000), cfg.get("tol", 1e-10), threads
        )
        entries = [(n, sweep.best[n].sequence, sweep.best[n].direction) for n in sweep.lengths]
    else:
        entries = [(n, _optimal_sequence(noise, theta_q, n), "qp") for n in range(n_min, n_max + 1)]
    for n, seq, method in entries:
        bd = infidelity_full(seq, noise)
        uniform = infidelity_full(uniform_sequence(theta_q, n), noise).total
        rows.append((n, bd.total, uniform, *bd.shares(), method))
        sequences.append({"n": n, **seq.to_dict()})
    paths = [os.path.join(out, "sweep.csv"), os.path.join(out, "sequences.json")]
    write_csv(paths[0], ["n", "infidelity", "uniform_infidelity", "share_a", "share_b", "share_c", "method"], rows)
    write_json(paths[1], sequences)
    return paths


def cmd_evaluate(cfg: dict, out: str, threads: int, seed=None) -> List[str]:
    noise = NoiseModel.from_dict(cfg["noise"])
    rows, reports = [], []
    for idx, raw in enumerate(cfg["sequences"]):
        seq = PulseSequence.from_dict(raw)
        bd = infidelity_full(seq, noise)
        rows.append((idx, seq.n, *bd.as_row()))
        reports.append({"index": idx, **bounds.weak_noise_regime_report(noise, seq).to_dict()})
    paths = [os.path.join(out, "evaluate.csv"), os.path.join(out, "report.json")]
    write_csv(paths[0], ["index", "n", "term_a", "term_b", "term_c", "total"], rows)
    write_json(paths[1], reports)
    return paths


def cmd_simulate(cfg: dict, out: str, threads: int, seed=None) -> List[str]:
    sim = montecarlo.SimConfig(
        cfg.get("num_trajectories", 10_000),
        cfg.get("seed", 0) if seed is None else seed,
        cfg.get("burn_in"),
    )
    kind = cfg.get("sequence", "optimal")
    rows = []
    for case in cfg["cases"]:
        noise = NoiseModel.from_dict(case["noise"])
        for n in cfg["lengths"]:
            if kind == "optimal":
                seq = _optimal_sequence(noise, cfg["theta_q"], n)
            else:
                seq = uniform_sequence(cfg["theta_q"], n)
            rows.append(montecarlo.validate_sequence(case["label"], seq, noise, sim, threads))
    path = os.path.join(out, "simulate.csv")
    write_csv(path, ["label", "n", "analytic_infid", "mc_infid", "mc_se", "second_order_bound"], rows)
    return [path]


def cmd_compare_cp(cfg: dict, out: str, threads: int, seed=None) -> List[str]:
    kind = cfg["kind"]
    expected = composite.SEGMENTS[kind]
    if cfg.get("k", expected) != expected:
        raise ConfigError(f"{kind} has {expected} segments, config asks for k = {cfg['k']}")
    rows = composite.comparison_map(
        cfg["a1_grid"], cfg["b1_grid"], cfg["theta_q"], cfg["total_power"], kind, threads
    )
    path = os.path.join(out, f"compare_{kind}.csv")
    write_csv(path, ["a1", "b1", "infid_opt", "infid_cp", "diff", "l2_to_dc"], rows)
    return [path]


def cmd_sweep_robustness(cfg: dict, out: str, threads: int, seed=None) -> List[str]:
    models = [ArmaModel((m["a1"],), (m["b1"],), m.get("sigma_w2", 1.0)) for m in cfg["base_models"]]
    rows = montecarlo.robustness_sweep(
        models,
        cfg["deviations"],
        cfg["samples_per_eps"],
        cfg["theta_q"],
        cfg["n"],
        cfg.get("seed", 0) if seed is None else seed,
    )
    path = os.path.join(out, "robustness.csv")
    write_csv(path, ["a1", "b1", "deviation", "worst_increase", "mean_increase", "num_valid"], rows)
    return [path]


def cmd_spectrum(cfg: dict, out: str, threads: int, seed=None) -> List[str]:
    model = arma.model_from_dict(cfg["model"])
    omegas = _grid(cfg)
    power = arma.power_spectrum(model, omegas)
    path = os.path.join(out, "spectrum.csv")
    write_csv(path, ["omega", "power"], zip(omegas, power))
    return [path]


def cmd_filter_function(cfg: dict, out: str, threads: int, seed=None) -> List[str]:
    if "sequence" in cfg:
        if "n" in cfg or "theta_q" in cfg:
            raise ConfigError("give either 'sequence' or 'theta_q' and 'n', not both")
        seq = PulseSequence.from_dict(cfg["sequence"])
    elif "theta_q" in cfg and "n" in cfg:
        seq = uniform_sequence(cfg["theta_q"], cfg["n"])
    else:
        raise ConfigError("need 'sequence' or both 'theta_q' and 'n'")
    omegas = _grid(cfg)
    f_xx, f_zy = filter_functions(seq, omegas)
    path = os.path.join(out, "filter_function.csv")
    write_csv(path, ["omega", "f_xx", "f_zy"], zip(omegas, np.sqrt(f_xx), np.sqrt(f_zy)))
    return [path]


COMMANDS = {
    "optimize": cmd_optimize,
    "evaluate": cmd_evaluate,
    "simulate": cmd_simulate,
    "compare-cp": cmd_compare_cp,
    "sweep-robustness": cmd_sweep_robustness,
    "spectrum": cmd_spectrum,
    "filter-function": cmd_filter_function,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="armapulse", description="Optimal pulse sequences under ARMA-correlated control noise."
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--out", default=".", help="output directory (created if missing)")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--threads", type=int, default=1, help="worker threads")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise ConfigError("--seed must be an unsigned 64-bit integer")
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        with open(args.config) as fh:
            cfg = json.load(fh)
        jsonschema.validate(cfg, SCHEMAS[args.command])
        os.makedirs(args.out, exist_ok=True)
        COMMANDS[args.command](cfg, args.out, args.threads, args.seed)
    except NumericalError as exc:
        print(f"armapulse: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (OSError, json.JSONDecodeError, jsonschema.ValidationError, ValueError, KeyError) as exc:
        message = exc.message if isinstance(exc, jsonschema.ValidationError) else str(exc)
        print(f"armapulse: config error: {message}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
