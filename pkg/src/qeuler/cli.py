"""Configuration-driven experiment runner.

One JSON config document describes the system, the run parameters and the
output paths; the subcommand picks the operation.  Identical config and seed
produce byte-identical reports: all randomness flows through counter-based
streams derived from run.seed, and reports contain no timestamps.

Exit codes: 0 success, 1 algorithm failure (branching-process failure,
blow-up, vanishing success probability), 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._util import complex_pairs, pairs_complex, rng_stream
from . import observables as obs_mod
from .euler_driver import (NoiseModel, integrate, noise_study, plan_resources,
                           report_to_doc, run_deterministic, run_montecarlo,
                           write_trajectory_csv)
from .nonlin_step import make_step_operator
from .polysys import (OdeSystem, PolynomialMap, check_ode_measure_preserving,
                      euler_map, map_from_doc, random_unit, system_from_doc,
                      validate)
from .qstate import dump_state_csv, encode
from .systems import (GraphSpec, discrete_nls, identity_map, lorenz,
                      orszag_mclaughlin, permutation_map, power_map,
                      random_unitary_map)

SCHEMA_VERSION = 1

COMMANDS = ("validate", "plan", "iterate", "integrate", "noise-study", "observe")


class ConfigError(ValueError):
    """Schema violation; message names the offending field."""


@dataclass
class ExperimentConfig:
    system_kind: str            # "map" or "ode"
    system: PolynomialMap | OdeSystem
    run: dict
    observe: dict | None
    output: dict
    resolved: dict = field(default_factory=dict)  # echo for reports


# ---------------------------------------------------------------------------
# Schema checking

_RUN_DEFAULTS = {
    "mode": "deterministic",
    "m": None,
    "t": None,
    "epsilon": "auto",
    "plan_base": 16.0,
    "lambda": "auto",
    "seed": 0,
    "eta": None,
    "trials": None,
    "z0": "seeded",
    "samples": 200,
    "tol": 1e-9,
}

_OUTPUT_DEFAULTS = {
    "dir": ".",
    "json": "report.json",
    "csv": "trajectory.csv",
    "state_csv": None,
}

_MODES = ("deterministic", "montecarlo", "noise_study")

_ODE_BUILTINS = {
    "orszag_mclaughlin": (orszag_mclaughlin, {"n": 5}),
    "lorenz": (lorenz, {"sigma": 10.0, "rho": 28.0, "beta": 8.0 / 3.0}),
}

_MAP_BUILTINS = {
    "identity": (identity_map, {"n": 2}),
    "permutation": (permutation_map, {"perm": [2, 1]}),
    "power": (power_map, {"k": 2}),
    "random_unitary": (random_unitary_map,
                       {"n": 3, "rotations": None, "rng": 0, "scale": 1.0}),
}


def _reject_unknown(section: dict, allowed, path: str):
    for key in section:
        if key not in allowed:
            raise ConfigError(f"unknown key '{path}{key}'")


def _number(value, path, allow_none=False):
    if value is None and allow_none:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"'{path}' must be a number, got {value!r}")
    return value


def _resolve_system(section) -> tuple[str, object, dict]:
    if isinstance(section, str):
        section = {"name": section}
    if not isinstance(section, dict):
        raise ConfigError("'system' must be a name or an object")
    keys = set(section)
    if "name" in keys:
        name = section["name"]
        params = {k: v for k, v in section.items() if k != "name"}
        if name == "discrete_nls":
            _reject_unknown(params, ("vertices", "edges", "k", "nonlinear_scale"),
                            "system.")
            g = GraphSpec(int(params.get("vertices", 2)),
                          tuple(tuple(e) for e in params.get("edges", [[0, 1]])))
            sys_obj = discrete_nls(g, int(params.get("k", 2)),
                                   nonlinear_scale=float(params.get("nonlinear_scale", 1.0)))
            return "ode", sys_obj, {"name": name, **params}
        if name in _ODE_BUILTINS:
            fn, defaults = _ODE_BUILTINS[name]
            _reject_unknown(params, defaults, "system.")
            return "ode", fn(**{**defaults, **params}), {"name": name, **params}
        if name in _MAP_BUILTINS:
            fn, defaults = _MAP_BUILTINS[name]
            _reject_unknown(params, defaults, "system.")
            return "map", fn(**{**defaults, **params}), {"name": name, **params}
        raise ConfigError(f"unknown builtin system '{name}'")
    if keys == {"map"}:
        return "map", map_from_doc(section["map"]), section
    if keys == {"map_path"}:
        with open(section["map_path"]) as f:
            return "map", map_from_doc(json.load(f)), section
    if keys == {"ode"}:
        return "ode", system_from_doc(section["ode"]), section
    if keys == {"ode_path"}:
        with open(section["ode_path"]) as f:
            return "ode", system_from_doc(json.load(f)), section
    raise ConfigError(
        "'system' must carry 'name', 'map', 'map_path', 'ode' or 'ode_path'")


def parse_config(document: dict) -> ExperimentConfig:
    """Validate a config document, fill defaults, reject unknown keys."""
    if not isinstance(document, dict):
        raise ConfigError("config document must be an object")
    _reject_unknown(document, ("system", "run", "observe", "output"), "")
    if "system" not in document:
        raise ConfigError("missing required section 'system'")
    kind, system, system_echo = _resolve_system(document["system"])

    run_section = document.get("run", {})
    if not isinstance(run_section, dict):
        raise ConfigError("'run' must be an object")
    _reject_unknown(run_section, _RUN_DEFAULTS, "run.")
    run = {**_RUN_DEFAULTS, **run_section}
    if run["mode"] not in _MODES:
        raise ConfigError(f"'run.mode' must be one of {_MODES}, got {run['mode']!r}")
    for key in ("m", "trials", "samples", "seed"):
        if run[key] is not None:
            value = _number(run[key], f"run.{key}")
            if value != int(value):
                raise ConfigError(f"'run.{key}' must be an integer")
            run[key] = int(value)
    for key in ("t", "eta", "plan_base", "tol"):
        run[key] = _number(run[key], f"run.{key}", allow_none=True)
    if run["epsilon"] != "auto":
        run["epsilon"] = _number(run["epsilon"], "run.epsilon")
    if run["lambda"] != "auto":
        run["lambda"] = _number(run["lambda"], "run.lambda")
    if run["mode"] == "noise_study":
        for key in ("eta", "trials"):
            if run[key] is None:
                raise ConfigError(f"mode 'noise_study' requires 'run.{key}'")
    if not (isinstance(run["z0"], str) and run["z0"] == "seeded"):
        if not isinstance(run["z0"], list):
            raise ConfigError("'run.z0' must be 'seeded' or a list of [re, im] pairs")

    observe_section = document.get("observe")
    if observe_section is not None:
        _reject_unknown(observe_section, ("observables", "delta", "alpha"),
                        "observe.")
        if not isinstance(observe_section.get("observables"), list):
            raise ConfigError("'observe.observables' must be a list")

    output_section = document.get("output", {})
    _reject_unknown(output_section, _OUTPUT_DEFAULTS, "output.")
    output = {**_OUTPUT_DEFAULTS, **output_section}

    resolved = {"system": system_echo, "run": dict(run),
                "observe": observe_section, "output": dict(output)}
    return ExperimentConfig(kind, system, run, observe_section, output, resolved)


# ---------------------------------------------------------------------------
# Execution

def _initial_state(config: ExperimentConfig, n: int, real: bool) -> np.ndarray:
    z0 = config.run["z0"]
    if isinstance(z0, str):
        return random_unit(n, rng_stream(config.run["seed"], 0), real=real)
    z = pairs_complex(z0)
    if z.shape != (n,):
        raise ConfigError(f"'run.z0' has {z.shape[0]} entries, system needs {n}")
    return z


def _resolve_epsilon(config: ExperimentConfig, pmap: PolynomialMap):
    """Build the step operator, resolving epsilon = auto to 0.9 / norm bound."""
    eps = config.run["epsilon"]
    op = make_step_operator(pmap, None if eps == "auto" else float(eps))
    config.resolved["run"]["epsilon"] = op.epsilon
    return op

def _require(config, command, **fields):
    for name, value in fields.items():
        if value is None:
            raise ConfigError(f"'{command}' requires 'run.{name}'")


def _the_map(config: ExperimentConfig, command: str) -> PolynomialMap:
    if config.system_kind != "map":
        raise ConfigError(f"'{command}' needs a polynomial map system")
    return config.system


def _the_ode(config: ExperimentConfig, command: str) -> OdeSystem:
    if config.system_kind != "ode":
        raise ConfigError(f"'{command}' needs an ODE system")
    return config.system


def _lam(config):
    lam = config.run["lambda"]
    return None if lam == "auto" else lam


def execute(command: str, config: ExperimentConfig, out_dir: Path) -> int:
    """Dispatch a subcommand; writes the JSON report (and CSV for runs)."""
    out_dir.mkdir(parents=True, exist_ok=True)
    run = config.run
    seed = run["seed"]
    result: dict = {}
    report = None
    exit_code = 0

    if command == "validate":
        if config.system_kind == "map":
            pmap = config.system
        else:
            h = (run["t"] / run["m"]) if (run["t"] and run["m"]) else 0.01
            pmap = euler_map(config.system, h)
            preserving, residual = check_ode_measure_preserving(
                config.system, samples=run["samples"], rng_seed=seed)
            result["ode"] = {"measure_preserving": preserving,
                             "residual": residual, "h": h}
        rep = validate(pmap, run["samples"], rng_seed=seed)
        op = _resolve_epsilon(config, pmap)
        result["map"] = {
            "s_row": rep.s_row, "s_col": rep.s_col,
            "a_max_observed": rep.a_max_observed,
            "measure_deviation": rep.measure_deviation,
            "lipschitz_estimate": rep.lipschitz_estimate,
            "h_norm": op.h_norm, "h_norm_bound": op.h_norm_bound,
        }

    elif command == "plan":
        _require(config, command, m=run["m"])
        if run["epsilon"] == "auto":
            if config.system_kind == "ode":
                _require(config, command, t=run["t"])
                pmap = euler_map(config.system, run["t"] / run["m"])
            else:
                pmap = config.system
            epsilon = _resolve_epsilon(config, pmap).epsilon
        else:
            epsilon = run["epsilon"]
        plan = plan_resources(run["m"], epsilon, base=run["plan_base"],
                              lam=_lam(config))
        result["plan"] = {
            "m": plan.m, "epsilon": plan.epsilon, "p": plan.p,
            "lambda": plan.lam, "base": plan.base,
            "n0": str(plan.n0), "log10_n0": plan.log10_n0,
            "n0_proof": str(plan.n0_proof),
            "n0_algorithm": str(plan.n0_algorithm),
            "gamma": plan.gamma, "float_exact": plan.float_exact,
        }

    elif command == "iterate":
        _require(config, command, m=run["m"])
        pmap = _the_map(config, command)
        op = _resolve_epsilon(config, pmap)
        z0 = _initial_state(config, pmap.n, real=False)
        if run["mode"] == "montecarlo":
            plan = plan_resources(run["m"], op.epsilon, base=run["plan_base"],
                                  lam=_lam(config))
            report = run_montecarlo(op, z0, plan, rng=rng_stream(seed, 1))
        else:
            report = run_deterministic(op, z0, run["m"])

    elif command == "integrate":
        _require(config, command, m=run["m"], t=run["t"])
        sys_obj = _the_ode(config, command)
        real = sys_obj.real_coefficients
        z0 = _initial_state(config, sys_obj.n, real=real)
        eps = None if run["epsilon"] == "auto" else run["epsilon"]
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            report = integrate(sys_obj, z0, run["t"], run["m"], epsilon=eps,
                               mode=run["mode"], rng=rng_stream(seed, 1),
                               plan_base=run["plan_base"], lam=_lam(config))
        config.resolved["run"]["epsilon"] = report.epsilon

    elif command == "noise-study":
        _require(config, command, m=run["m"], eta=run["eta"], trials=run["trials"])
        pmap = _the_map(config, command)
        op = _resolve_epsilon(config, pmap)
        z0 = _initial_state(config, pmap.n, real=False)
        report = noise_study(op, z0, run["m"], None,
                             NoiseModel(run["eta"], stream=2), run["trials"],
                             rng=seed)

    elif command == "observe":
        if config.observe is None:
            raise ConfigError("'observe' requires an 'observe' section")
        pmap = _the_map(config, command)
        op = _resolve_epsilon(config, pmap)
        z0 = _initial_state(config, pmap.n, real=False)
        if run["m"]:
            report = run_deterministic(op, z0, run["m"])
            state = encode(report.iterates[-1] /
                           np.linalg.norm(report.iterates[-1]))
        else:
            state = encode(z0)
        result["observations"] = _observe(config, state, pmap.n)

    else:
        raise ConfigError(f"unknown command '{command}'")

    if report is not None:
        result["run"] = report_to_doc(report)
        write_trajectory_csv(report, out_dir / config.output["csv"])
        if config.output["state_csv"]:
            final = report.iterates[-1]
            dump_state_csv(encode(final / np.linalg.norm(final)),
                           out_dir / config.output["state_csv"])
        if not report.success:
            exit_code = 1

    doc = {"schema_version": SCHEMA_VERSION, "command": command,
           "config": config.resolved, "result": result}
    with open(out_dir / config.output["json"], "w") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")
    return exit_code


def _observe(config: ExperimentConfig, state, n: int) -> list[dict]:
    section = config.observe
    delta, alpha = section.get("delta"), section.get("alpha")
    rng = rng_stream(config.run["seed"], 3)
    out = []
    for spec in section["observables"]:
        kind = spec.get("kind")
        if kind == "fourier_spectrum":
            from .qstate import decode

            s = obs_mod.fourier_spectrum(decode(state))
            out.append({"kind": kind, "spectrum": complex_pairs(s)})
            continue
        if kind == "identity":
            ob = obs_mod.identity_observable(n)
        elif kind == "projector":
            ob = obs_mod.projector(n, int(spec["j"]))
        elif kind == "fourier_mode":
            ob = obs_mod.fourier_mode(n, int(spec["k"]))
        elif kind == "csv":
            ob = obs_mod.load_observable_csv(spec["path"], n + 1)
        else:
            raise ConfigError(f"unknown observable kind {kind!r}")
        entry = {"kind": kind, "name": ob.name,
                 "expectation": obs_mod.expectation(state, ob),
                 "coordinate_expectation":
                     obs_mod.coordinate_expectation(state, ob)}
        if delta is not None and alpha is not None:
            est, shots = obs_mod.sample_expectation(state, ob, delta, alpha, rng)
            entry |= {"estimate": est, "shots": shots,
                      "delta": delta, "alpha": alpha}
        out.append(entry)
    return out


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="qeuler",
        description="Config-driven experiments for post-selected polynomial "
                    "amplitude maps and quantum Euler integration.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="JSON config document")
    parser.add_argument("--seed", type=int, default=None,
                        help="override run.seed")
    parser.add_argument("--out", default=None, help="report directory")
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)

    try:
        with open(args.config) as f:
            document = json.load(f)
        config = parse_config(document)
        if args.seed is not None:
            config.run["seed"] = args.seed
            config.resolved["run"]["seed"] = args.seed
        # --out only routes files; report content must not depend on it.
        out_dir = Path(args.out if args.out is not None else config.output["dir"])
    except (ConfigError, OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        code = execute(args.command, config, out_dir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return 1
    if args.verbose:
        print(f"{args.command}: exit {code}, reports in {out_dir}")
    return code


if __name__ == "__main__":
    raise SystemExit(main())
