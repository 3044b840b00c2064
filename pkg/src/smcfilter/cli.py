"""Command-line front end: scenario configs, runs, and golden-vector replay.

Exit codes are scriptable: 0 success, 1 config/validation failure or golden
mismatch, 2 I/O failure or malformed fixture.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .core import ParticleSet, RngStream
from .filter import FilterState, GaussianPrior, step_with_injected_noise
from .models import ConstantVelocity2D, RandomWalk1D
from .resampling import SCHEMES, ResamplePolicy
from .sim import Scenario, Trace, rmse, run_scenario


class ConfigError(ValueError):
    """Invalid run configuration; the message carries the field path."""


class FixtureError(ValueError):
    """Fixture file missing, unparseable, or schema-invalid."""


# (key, minimum, strict lower bound) per scenario's model block
_MODEL_FIELDS = {
    "rw1d": (("q", 0.0, False), ("r", 0.0, True)),
    "cv2d": (("dt", 0.0, False), ("q_pos", 0.0, False), ("q_vel", 0.0, False), ("r", 0.0, True)),
}
_STATE_DIMS = {"rw1d": 1, "cv2d": 4}


@dataclass
class RunConfig:
    scenario: str
    t_steps: int
    n_particles: int
    model: dict
    prior_mean: list
    prior_std: list
    initial_truth: list
    resampler: str = "systematic"
    threshold_fraction: float = 0.5
    estimator: str = "weighted_mean"
    seed: int | None = None
    dump_particles: list = field(default_factory=list)


def _fail(path: str, message: str):
    raise ConfigError(f"{path}: {message}")


def _number(value, path: str, minimum=None, strict=False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(path, f"must be a number, got {value!r}")
    value = float(value)
    if minimum is not None:
        if strict and value <= minimum:
            _fail(path, f"must be > {minimum}, got {value}")
        if not strict and value < minimum:
            _fail(path, f"must be >= {minimum}, got {value}")
    return value


def _integer(value, path: str, minimum: int) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        _fail(path, f"must be an integer, got {value!r}")
    if value < minimum:
        _fail(path, f"must be >= {minimum}, got {value}")
    return int(value)


def _float_list(value, path: str, length: int) -> list:
    if not isinstance(value, list):
        _fail(path, f"must be a list of {length} numbers, got {value!r}")
    if len(value) != length:
        _fail(path, f"must have length {length}, got {len(value)}")
    return [_number(v, f"{path}[{i}]") for i, v in enumerate(value)]


def parse_config(data: dict) -> RunConfig:
    """Validate a config mapping and build a RunConfig; errors carry field paths."""
    if not isinstance(data, dict):
        raise ConfigError(f"config root: must be a JSON object, got {type(data).__name__}")

    known = {
        "scenario", "T", "N", "model", "prior", "initial_truth", "resampler",
        "threshold_fraction", "estimator", "seed", "dump_particles",
    }
    for key in data:
        if key not in known:
            _fail(key, "unknown field")
    for key in ("scenario", "T", "N", "model", "prior", "initial_truth"):
        if key not in data:
            _fail(key, "missing required field")

    scenario = data["scenario"]
    if scenario not in _MODEL_FIELDS:
        _fail("scenario", f"must be one of {sorted(_MODEL_FIELDS)}, got {scenario!r}")
    dim = _STATE_DIMS[scenario]

    t_steps = _integer(data["T"], "T", minimum=1)
    n_particles = _integer(data["N"], "N", minimum=1)

    model_block = data["model"]
    if not isinstance(model_block, dict):
        _fail("model", f"must be an object, got {model_block!r}")
    fields = _MODEL_FIELDS[scenario]
    for key in model_block:
        if key not in {f[0] for f in fields}:
            _fail(f"model.{key}", f"unknown field for scenario {scenario!r}")
    model = {}
    for key, minimum, strict in fields:
        if key not in model_block:
            _fail(f"model.{key}", "missing required field")
        model[key] = _number(model_block[key], f"model.{key}", minimum, strict)

    prior = data["prior"]
    if not isinstance(prior, dict) or set(prior) != {"mean", "std"}:
        _fail("prior", "must be an object with exactly the fields 'mean' and 'std'")
    prior_mean = _float_list(prior["mean"], "prior.mean", dim)
    prior_std = _float_list(prior["std"], "prior.std", dim)
    for i, v in enumerate(prior_std):
        if v < 0:
            _fail(f"prior.std[{i}]", f"must be >= 0, got {v}")

    initial_truth = _float_list(data["initial_truth"], "initial_truth", dim)

    resampler = data.get("resampler", "systematic")
    if resampler not in SCHEMES:
        _fail("resampler", f"must be one of {list(SCHEMES)}, got {resampler!r}")
    threshold = _number(data.get("threshold_fraction", 0.5), "threshold_fraction")
    if not 0.0 <= threshold <= 1.0:
        _fail("threshold_fraction", f"must be in [0, 1], got {threshold}")
    estimator = data.get("estimator", "weighted_mean")
    if estimator not in ("weighted_mean", "map"):
        _fail("estimator", f"must be 'weighted_mean' or 'map', got {estimator!r}")

    seed = data.get("seed")
    if seed is not None:
        seed = _integer(seed, "seed", minimum=0)
        if seed >= 2**64:
            _fail("seed", "must fit in 64 unsigned bits")

    dump = data.get("dump_particles", [])
    if not isinstance(dump, list):
        _fail("dump_particles", f"must be a list of step indices, got {dump!r}")
    dump = [_integer(v, f"dump_particles[{i}]", minimum=0) for i, v in enumerate(dump)]
    for i, v in enumerate(dump):
        if v >= t_steps:
            _fail(f"dump_particles[{i}]", f"step {v} outside horizon T={t_steps}")

    return RunConfig(
        scenario=scenario,
        t_steps=t_steps,
        n_particles=n_particles,
        model=model,
        prior_mean=prior_mean,
        prior_std=prior_std,
        initial_truth=initial_truth,
        resampler=resampler,
        threshold_fraction=threshold,
        estimator=estimator,
        seed=seed,
        dump_particles=dump,
    )


def serialize_config(cfg: RunConfig) -> dict:
    """Inverse of parse_config: parse_config(serialize_config(cfg)) == cfg."""
    return {
        "scenario": cfg.scenario,
        "T": cfg.t_steps,
        "N": cfg.n_particles,
        "model": dict(cfg.model),
        "prior": {"mean": list(cfg.prior_mean), "std": list(cfg.prior_std)},
        "initial_truth": list(cfg.initial_truth),
        "resampler": cfg.resampler,
        "threshold_fraction": cfg.threshold_fraction,
        "estimator": cfg.estimator,
        "seed": cfg.seed,
        "dump_particles": list(cfg.dump_particles),
    }


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    return parse_config(data)


def build_model(cfg: RunConfig):
    if cfg.scenario == "rw1d":
        return RandomWalk1D(q=cfg.model["q"], r=cfg.model["r"])
    return ConstantVelocity2D(
        dt=cfg.model["dt"],
        q_pos=cfg.model["q_pos"],
        q_vel=cfg.model["q_vel"],
        r_meas=cfg.model["r"],
    )


def build_scenario(cfg: RunConfig) -> Scenario:
    return Scenario(
        model=build_model(cfg),
        t_steps=cfg.t_steps,
        prior=GaussianPrior(np.array(cfg.prior_mean), np.array(cfg.prior_std)),
        initial_truth=np.array(cfg.initial_truth),
        n_particles=cfg.n_particles,
        policy=ResamplePolicy(cfg.resampler, cfg.threshold_fraction),
        estimator=cfg.estimator,
    )


def demo_1d_config() -> RunConfig:
    return RunConfig(
        scenario="rw1d",
        t_steps=15,
        n_particles=200,
        model={"q": 1.0, "r": 4.0},
        prior_mean=[0.0],
        prior_std=[2.0],
        initial_truth=[0.0],
    )


def demo_2d_config() -> RunConfig:
    return RunConfig(
        scenario="cv2d",
        t_steps=30,
        n_particles=500,
        model={"dt": 1.0, "q_pos": 0.2, "q_vel": 0.05, "r": 2.0},
        prior_mean=[0.0, 0.0, 0.0, 0.0],
        prior_std=[2.0, 2.0, 2.0, 2.0],
        initial_truth=[0.0, 0.0, 1.0, 0.5],
    )


def _fmt(value: float) -> str:
    return f"{value:.9g}"


def write_trace_csv(path, trace: Trace, model) -> None:
    """Fixed column order: k, truth_*, meas_*, est_*, ess, resampled, degenerate."""
    columns = (
        ["k"]
        + [f"truth_{c}" for c in model.state_labels]
        + [f"meas_{c}" for c in model.obs_labels]
        + [f"est_{c}" for c in model.state_labels]
        + ["ess", "resampled", "degenerate"]
    )
    lines = [",".join(columns)]
    for rec in trace.records:
        row = [str(rec.k)]
        row += [_fmt(v) for v in rec.truth]
        row += [_fmt(v) for v in rec.measurement]
        row += [_fmt(v) for v in rec.estimate]
        row += [_fmt(rec.ess), "1" if rec.resampled else "0", "1" if rec.degenerate else "0"]
        lines.append(",".join(row))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_particles_csv(path, trace: Trace, model) -> None:
    columns = ["k", "i", "weight"] + list(model.state_labels)
    lines = [",".join(columns)]
    for k in sorted(trace.snapshots):
        particles, weights = trace.snapshots[k]
        for i in range(particles.shape[0]):
            row = [str(k), str(i), _fmt(weights[i])] + [_fmt(v) for v in particles[i]]
            lines.append(",".join(row))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _resolve_seed(cli_seed, cfg_seed) -> int:
    if cli_seed is not None:
        return cli_seed
    if cfg_seed is not None:
        return cfg_seed
    env = os.environ.get("SMC_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"SMC_SEED: must be an integer, got {env!r}") from None
    return 0


def _run_summary(trace: Trace, model) -> str:
    final = trace.records[-1].estimate
    resamples = sum(1 for rec in trace.records if rec.resampled)
    if len(trace.records) > 1:
        truth_obs = np.stack([model.h(rec.truth) for rec in trace.records[1:]])
        est_obs = np.stack([model.h(rec.estimate) for rec in trace.records[1:]])
        meas = trace.stack("measurement")[1:]
        rmse_truth = rmse(est_obs, truth_obs)
        rmse_meas = rmse(meas, truth_obs)
    else:
        rmse_truth = rmse_meas = float("nan")
    est_txt = "[" + ", ".join(_fmt(v) for v in final) + "]"
    return (
        f"final_estimate={est_txt} rmse_vs_truth={_fmt(rmse_truth)} "
        f"rmse_vs_measurements={_fmt(rmse_meas)} resamples={resamples}"
    )


def _parse_dump_list(text: str) -> list:
    try:
        return [int(part) for part in text.split(",") if part.strip() != ""]
    except ValueError:
        raise ConfigError(f"--dump-particles: must be comma-separated integers, got {text!r}") from None


def cmd_run(cfg: RunConfig, seed_override, out_path, dump_override=None) -> int:
    try:
        seed = _resolve_seed(seed_override, cfg.seed)
        RngStream(seed)  # validate range before running
        dumps = cfg.dump_particles if dump_override is None else dump_override
        scenario = build_scenario(cfg)
        trace = run_scenario(scenario, seed, dump_steps=dumps)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        write_trace_csv(out_path, trace, scenario.model)
        if dumps:
            write_particles_csv(f"{out_path}.particles.csv", trace, scenario.model)
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return 2
    print(_run_summary(trace, scenario.model))
    return 0


def _bundled_fixture(name: str):
    candidate = resources.files("smcfilter").joinpath("fixtures", name)
    return candidate if candidate.is_file() else None


def _load_fixture(path_arg: str) -> dict:
    path = Path(path_arg)
    if path.is_file():
        text = path.read_text()
    else:
        bundled = _bundled_fixture(path.name)
        if bundled is None:
            raise FixtureError(f"fixture not found: {path_arg}")
        text = bundled.read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FixtureError(f"fixture {path_arg} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise FixtureError(f"fixture {path_arg}: root must be a JSON object")
    required = {"initial_particles", "noises", "z", "expected_predicted", "expected_weights", "tolerance"}
    missing = required - set(data)
    if missing:
        raise FixtureError(f"fixture {path_arg}: missing fields {sorted(missing)}")
    return data


def _tolerances(tol) -> tuple[float, float]:
    if isinstance(tol, (int, float)) and not isinstance(tol, bool):
        return float(tol), float(tol)
    if isinstance(tol, dict) and set(tol) <= {"predicted", "weights"}:
        return float(tol.get("predicted", 1e-9)), float(tol.get("weights", 1e-9))
    raise FixtureError(f"tolerance: must be a number or {{'predicted': .., 'weights': ..}}, got {tol!r}")


def cmd_golden(fixture_arg: str) -> int:
    try:
        data = _load_fixture(fixture_arg)
        tol_predicted, tol_weights = _tolerances(data["tolerance"])
        initial = np.asarray(data["initial_particles"], dtype=float)
        noises = np.asarray(data["noises"], dtype=float)
        z = np.asarray(data["z"], dtype=float)
        expected_predicted = np.asarray(data["expected_predicted"], dtype=float)
        expected_weights = np.asarray(data["expected_weights"], dtype=float)
        model = RandomWalk1D(q=1.0, r=float(data.get("r", 4.0)))
        pset = ParticleSet.uniform(initial if initial.ndim > 1 else initial[:, np.newaxis])
        # threshold 0 keeps the post-step set equal to the predicted/weighted one
        state = FilterState(
            set=pset,
            model=model,
            policy=ResamplePolicy("systematic", 0.0),
            rng=RngStream(0),
        )
        step_with_injected_noise(state, z, noises)
    except (FixtureError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    predicted = state.set.particles.reshape(expected_predicted.shape)
    weights = state.set.weights
    failures = []
    for name, actual, expected, tol in (
        ("predicted", predicted, expected_predicted, tol_predicted),
        ("weights", weights, expected_weights, tol_weights),
    ):
        if actual.shape != expected.shape:
            failures.append(f"{name}: shape {actual.shape} vs expected {expected.shape}")
            continue
        bad = np.flatnonzero(~(np.abs(actual - expected) <= tol))
        for i in bad:
            failures.append(
                f"{name}[{i}]: expected {expected.flat[i]:.6g} "
                f"actual {actual.flat[i]:.6g} (tolerance {tol:g})"
            )
    if failures:
        for line in failures:
            print(f"MISMATCH {line}")
        print(f"golden fixture FAILED: {fixture_arg} ({len(failures)} mismatches)")
        return 1
    print(f"golden fixture ok: {fixture_arg}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="smcfilter",
        description="Particle-filter tracking simulations with CSV trace output.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a scenario described by a JSON config")
    run_p.add_argument("--config", required=True, help="path to the JSON run config")
    run_p.add_argument("--seed", type=int, default=None, help="seed override (u64)")
    run_p.add_argument("--out", required=True, help="trace CSV output path")
    run_p.add_argument("--dump-particles", default=None, metavar="K1,K2,...",
                       help="steps whose particle clouds go to <out>.particles.csv")

    golden_p = sub.add_parser("golden", help="replay a golden-vector fixture")
    golden_p.add_argument("fixture", help="fixture path or bundled fixture name")

    for name, helptext in (("demo-1d", "random-walk tracking preset"),
                           ("demo-2d", "constant-velocity tracking preset")):
        demo_p = sub.add_parser(name, help=helptext)
        demo_p.add_argument("--seed", type=int, default=None)
        demo_p.add_argument("--out", default=f"{name}.csv")
        demo_p.add_argument("--dump-particles", default=None, metavar="K1,K2,...")

    args = parser.parse_args(argv)

    if args.command == "golden":
        return cmd_golden(args.fixture)

    try:
        if args.command == "run":
            cfg = load_config(args.config)
        elif args.command == "demo-1d":
            cfg = demo_1d_config()
        else:
            cfg = demo_2d_config()
        dump_override = None
        if args.dump_particles is not None:
            dump_override = _parse_dump_list(args.dump_particles)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return cmd_run(cfg, args.seed, args.out, dump_override)


if __name__ == "__main__":
    sys.exit(main())
