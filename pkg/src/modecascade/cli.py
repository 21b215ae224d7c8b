"""Batch experiment runner.

One JSON config document drives each run; long-form flags override
top-level scalar fields (flag name equals field name).  Every run emits
its artifacts plus a ``manifest.json`` echoing the fully resolved
configuration and the tool version; re-running from a manifest
reproduces the outputs bit for bit.

Exit codes: 0 success, 1 configuration/validation error (the message
names the offending field), 2 numerical failure (blow-up or
non-convergence) with partial results still written.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .forcing import (ForcingProgram, Oscillatory, chattering_approximation,
                      program_from_json, program_to_json, relaxation_distance,
                      zero_program)
from .integrator import BlowUpError, IntegratorConfig, integrate
from .lattice import (chain_to_json, norm_sq, parse_mode_set, saturation_chain,
                      symmetrize)
from .spectral import (SimParams, SpectralState, random_decaying_state,
                       sobolev_norm, state_from_csv, state_from_json,
                       state_to_csv)
from .steering import (ConvergenceError, SteeringConfig, averaging_experiment,
                       coverage_check, coverage_grid, near_identity_gap,
                       report_to_dict, steer_in_projection, steer_to_target,
                       subspace_setup)


class ConfigError(Exception):
    pass


_OVERRIDABLE = {
    "saturate": ["mode_set", "radius", "max_levels", "seed", "output_dir"],
    "simulate": ["radius", "nu", "duration", "dt_base", "oscillation_resolution",
                 "record_stride", "state", "program", "amplitude", "decay",
                 "seed", "output_dir"],
    "steer": ["mode_set", "observed", "radius", "nu", "tau", "gamma", "omega",
              "correction_tau", "max_fp_iters", "fp_tol", "chatter_windows",
              "construction", "dt_base", "oscillation_resolution", "state",
              "amplitude", "decay", "seed", "output_dir"],
    "average": ["amplitude", "duration", "nu", "radius", "dt_base",
                "oscillation_resolution", "construction", "state", "seed",
                "output_dir"],
    "chatter": ["program", "amplitude", "windows", "slack_channel", "seed",
                "output_dir"],
    "cover": ["mode_set", "observed", "radius", "nu", "tau", "gamma", "omega",
              "correction_tau", "max_fp_iters", "fp_tol", "chatter_windows",
              "construction", "dt_base", "oscillation_resolution",
              "target_radius", "grid_density", "state", "amplitude", "decay",
              "seed", "output_dir"],
    "rxprobe": ["mode", "duration", "nu", "radius", "dt_base",
                "oscillation_resolution", "state", "amplitude", "decay",
                "seed", "output_dir"],
    "project": ["mode_set", "basis", "epsilon", "radius", "nu", "tau", "gamma",
                "omega", "correction_tau", "max_fp_iters", "fp_tol",
                "chatter_windows", "construction", "dt_base",
                "oscillation_resolution", "state", "amplitude", "decay",
                "seed", "output_dir"],
}


# ---------------------------------------------------------------------------
# config plumbing


def _load_config(path: str, command: str) -> dict:
    p = Path(path)
    if not p.exists():
        raise ConfigError("field 'config': file not found: %s" % path)
    with open(p) as fh:
        data = json.load(fh)
    if "config" in data and "command" in data:        # manifest round-trip
        if data["command"] != command:
            raise ConfigError("manifest was produced by '%s', not '%s'"
                              % (data["command"], command))
        data = data["config"]
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return data


def _require(cfg: dict, field: str):
    if field not in cfg or cfg[field] is None:
        raise ConfigError("missing required field '%s'" % field)
    return cfg[field]


def _existing_path(cfg: dict, field: str) -> Path:
    p = Path(str(_require(cfg, field)))
    if not p.exists():
        raise ConfigError("field '%s': file not found: %s" % (field, p))
    return p


def _rng(cfg: dict) -> np.random.Generator:
    return np.random.default_rng(int(cfg.get("seed", 0)))


def _load_state(cfg: dict, radius: int) -> SpectralState:
    source = cfg.get("state", "rest")
    if source == "rest":
        return SpectralState.zeros(radius)
    if source == "random":
        return random_decaying_state(radius, float(cfg.get("amplitude", 0.3)),
                                     float(cfg.get("decay", 3.0)), _rng(cfg))
    p = Path(str(source))
    if not p.exists():
        raise ConfigError("field 'state': file not found: %s" % p)
    text = p.read_text()
    state = state_from_json(text) if p.suffix == ".json" else state_from_csv(text)
    if state.radius < radius:
        from .spectral import resize
        state = resize(state, radius)
    return state


def _integrator_config(cfg: dict) -> IntegratorConfig:
    return IntegratorConfig(
        dt_base=float(cfg.get("dt_base", 1e-3)),
        oscillation_resolution=int(cfg.get("oscillation_resolution", 40)),
        record_stride=int(cfg.get("record_stride", 1)))


def _steering_config(cfg: dict) -> SteeringConfig:
    return SteeringConfig(
        tau=float(cfg.get("tau", 0.02)),
        gamma=float(cfg.get("gamma", 1.1)),
        radius=float(cfg.get("target_radius", cfg.get("radius", 0.5))),
        omega=float(cfg.get("omega", 400.0)),
        correction_tau=(None if cfg.get("correction_tau") is None
                        else float(cfg["correction_tau"])),
        max_fp_iters=int(cfg.get("max_fp_iters", 20)),
        fp_tol=float(cfg.get("fp_tol", 1e-3)),
        chatter_windows=int(cfg.get("chatter_windows", 4)),
        construction=str(cfg.get("construction", "counter_rotating")),
        integrator=_integrator_config(cfg))


def _chain_for(cfg: dict, observed: frozenset):
    k1 = parse_mode_set(_existing_path(cfg, "mode_set").read_text())
    need = max(1, int(np.ceil(np.sqrt(max(norm_sq(k) for k in observed)))))
    return saturation_chain(k1, radius=need, max_levels=int(cfg.get("max_levels", 16)))


class _Emitter:
    """Atomic output writing plus the closing manifest."""

    def __init__(self, cfg: dict, command: str):
        self.cfg = cfg
        self.command = command
        self.out_dir = Path(str(cfg.get("output_dir", "out")))
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.written: list[str] = []

    def write(self, name: str, text: str):
        path = self.out_dir / name
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_text(text)
        os.replace(tmp, path)
        self.written.append(name)

    def write_json(self, name: str, payload: dict):
        payload = dict(payload)
        payload.setdefault("seed", int(self.cfg.get("seed", 0)))
        self.write(name, json.dumps(payload, indent=2) + "\n")

    def write_csv(self, name: str, text: str):
        self.write(name, "# seed=%d\n" % int(self.cfg.get("seed", 0)) + text)

    def manifest(self):
        body = {"command": self.command, "version": __version__,
                "config": self.cfg, "outputs": sorted(self.written)}
        self.write("manifest.json", json.dumps(body, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# subcommands


def _run_saturate(cfg: dict) -> int:
    modes = parse_mode_set(_existing_path(cfg, "mode_set").read_text())
    chain = saturation_chain(modes, radius=int(_require(cfg, "radius")),
                             max_levels=int(cfg.get("max_levels", 32)))
    em = _Emitter(cfg, "saturate")
    em.write("chain.json", chain_to_json(chain, indent=2) + "\n")
    em.manifest()
    print("saturate: status=%s covered_radius=%d levels=%d"
          % (chain.status, chain.covered_radius, len(chain.levels)))
    return 0


def _run_simulate(cfg: dict) -> int:
    radius = int(_require(cfg, "radius"))
    state0 = _load_state(cfg, radius)
    params = SimParams(nu=float(cfg.get("nu", 0.0)))
    if cfg.get("program"):
        program = program_from_json(_existing_path(cfg, "program").read_text())
    else:
        program = zero_program(float(_require(cfg, "duration")))
    em = _Emitter(cfg, "simulate")
    code = 0
    try:
        traj = integrate(state0, params, program, _integrator_config(cfg))
    except BlowUpError as exc:
        em.write_json("failure.json", {"error": str(exc), "time": exc.time})
        em.manifest()
        print("simulate: blow-up at t=%g" % exc.time, file=sys.stderr)
        return 2
    em.write_csv("trajectory.csv", traj.to_csv())
    em.write_csv("summary.csv", traj.summary_to_csv())
    em.write_csv("final_state.csv", state_to_csv(traj.final))
    em.manifest()
    summary = traj.summary()
    print("simulate: %d records, final enstrophy %.6g" % (len(traj), summary[-1, 2]))
    return code


def _observed_set(cfg: dict) -> frozenset:
    observed = cfg.get("observed")
    if observed is None:
        return symmetrize(parse_mode_set(_existing_path(cfg, "mode_set").read_text()))
    p = Path(str(observed))
    if not p.exists():
        raise ConfigError("field 'observed': file not found: %s" % p)
    return symmetrize(parse_mode_set(p.read_text()))


def _run_steer(cfg: dict) -> int:
    observed = _observed_set(cfg)
    chain = _chain_for(cfg, observed)
    radius = int(_require(cfg, "radius"))
    state0 = _load_state(cfg, radius)
    params = SimParams(nu=float(cfg.get("nu", 0.0)))
    target = np.asarray(_require(cfg, "target"), dtype=float)
    scfg = _steering_config(cfg)
    em = _Emitter(cfg, "steer")
    code = 0
    try:
        report = steer_to_target(target, chain, observed, state0, params, scfg)
    except ConvergenceError as exc:
        report = exc.report
        code = 2
    except BlowUpError as exc:
        em.write_json("failure.json", {"error": str(exc), "time": exc.time})
        em.manifest()
        print("steer: blow-up at t=%g" % exc.time, file=sys.stderr)
        return 2
    em.write("program.json", program_to_json(report.program, indent=2) + "\n")
    em.write_json("report.json", report_to_dict(report, program_ref="program.json"))
    em.manifest()
    print("steer: error=%.3g iterations=%d converged=%s"
          % (report.error_norm, report.iterations, report.converged))
    return code


def _run_average(cfg: dict) -> int:
    k = tuple(int(x) for x in _require(cfg, "k"))
    pair_raw = _require(cfg, "pair")
    pair = (tuple(int(x) for x in pair_raw[0]), tuple(int(x) for x in pair_raw[1]))
    omegas = [float(w) for w in _require(cfg, "omegas")]
    radius = int(_require(cfg, "radius"))
    state0 = _load_state(cfg, radius)
    params = SimParams(nu=float(cfg.get("nu", 0.0)))
    em = _Emitter(cfg, "average")
    try:
        devs = averaging_experiment(
            k, pair, float(cfg.get("amplitude", 1.0)), omegas,
            float(_require(cfg, "duration")), state0, params,
            _integrator_config(cfg),
            construction=str(cfg.get("construction", "counter_rotating")))
    except BlowUpError as exc:
        em.write_json("failure.json", {"error": str(exc), "time": exc.time})
        em.manifest()
        return 2
    lines = ["omega,deviation"]
    lines += ["%r,%r" % (w, d) for w, d in zip(omegas, devs)]
    em.write_csv("deviations.csv", "\n".join(lines) + "\n")
    em.manifest()
    print("average: " + ", ".join("D(%g)=%.4g" % (w, d)
                                  for w, d in zip(omegas, devs)))
    return 0


def _run_chatter(cfg: dict) -> int:
    program = program_from_json(_existing_path(cfg, "program").read_text())
    amplitude = float(_require(cfg, "amplitude"))
    windows = int(_require(cfg, "windows"))
    out = chattering_approximation(program, amplitude, windows,
                                   int(cfg.get("slack_channel", 0)))
    rx = relaxation_distance(out, program)
    # kappa real channels = number of support modes
    bound = 2.0 * amplitude * np.sqrt(len(program.support)) \
        * program.total_duration / windows
    em = _Emitter(cfg, "chatter")
    em.write("chattered.json", program_to_json(out, indent=2) + "\n")
    em.write_json("chatter_report.json", {
        "rx_distance": rx, "bound": float(bound), "windows": windows,
        "amplitude": amplitude, "segments": len(out.segments)})
    em.manifest()
    print("chatter: rx=%.4g bound=%.4g segments=%d" % (rx, bound, len(out.segments)))
    return 0


def _run_cover(cfg: dict) -> int:
    observed = _observed_set(cfg)
    chain = _chain_for(cfg, observed)
    radius = int(_require(cfg, "radius"))
    state0 = _load_state(cfg, radius)
    params = SimParams(nu=float(cfg.get("nu", 0.0)))
    scfg = _steering_config(cfg)
    target_radius = float(_require(cfg, "target_radius"))
    grid_density = int(cfg.get("grid_density", 2))
    result = coverage_check(chain, observed, target_radius, grid_density,
                            state0, params, scfg)
    em = _Emitter(cfg, "cover")
    em.write_csv("coverage.csv", result.to_csv())
    em.write_json("coverage.json", {"fraction": result.fraction,
                                    "targets": int(len(result.targets))})
    if cfg.get("tau_ladder"):
        targets = coverage_grid(result.targets.shape[1], target_radius,
                                grid_density)
        lines = ["tau,near_identity_gap"]
        for tau in cfg["tau_ladder"]:
            gap = near_identity_gap(observed, targets, float(tau), state0,
                                    params, scfg.integrator)
            lines.append("%r,%r" % (float(tau), gap))
        em.write_csv("near_identity.csv", "\n".join(lines) + "\n")
    em.manifest()
    print("cover: fraction=%.3f over %d targets" % (result.fraction,
                                                    len(result.targets)))
    return 0


def _run_rxprobe(cfg: dict) -> int:
    """Relaxation-metric probes.

    mode "law": rx distance of v = sqrt(omega) cos(omega t) to zero for a
    frequency ladder, against the omega^(-1/2) law.  mode "trajectory":
    oscillatory forcings at prescribed rx distances (frequency scaling),
    reporting the sup-in-time H0 deviation of the driven trajectory from
    the unforced one.
    """
    mode = str(cfg.get("mode", "trajectory"))
    duration = float(cfg.get("duration", 1.0))
    single = symmetrize({(1, 0)})
    em = _Emitter(cfg, "rxprobe")
    if mode == "law":
        lines = ["omega,rx,expected"]
        for omega in cfg.get("omegas", [1e2, 1e3, 1e4]):
            omega = float(omega)
            seg = Oscillatory.from_cos_pairs(duration, omega,
                                             [((1, 0), omega ** -0.5)])
            rx = relaxation_distance(ForcingProgram(single, [seg]),
                                     zero_program(duration, single))
            lines.append("%r,%r,%r" % (omega, rx, omega ** -0.5))
        em.write_csv("rxprobe.csv", "\n".join(lines) + "\n")
        em.manifest()
        print("rxprobe law: " + lines[-1])
        return 0
    if mode != "trajectory":
        raise ConfigError("field 'mode': expected 'law' or 'trajectory', got %r"
                          % mode)
    radius = int(_require(cfg, "radius"))
    state0 = _load_state(cfg, radius)
    params = SimParams(nu=float(cfg.get("nu", 0.0)))
    icfg = _integrator_config(cfg)
    sample = np.linspace(0.0, duration, 41)
    base = integrate(state0, params, zero_program(duration, single), icfg, sample)
    lines = ["delta,rx,sup_deviation"]
    for delta in cfg.get("deltas", [0.1, 0.05, 0.025]):
        delta = float(delta)
        omega = 1.0 / delta ** 2
        seg = Oscillatory.from_cos_pairs(duration, omega, [((1, 0), delta)])
        prog = ForcingProgram(single, [seg])
        rx = relaxation_distance(prog, zero_program(duration, single))
        traj = integrate(state0, params, prog, icfg, sample)
        dev = max(sobolev_norm(traj.at(t) - base.at(t), 0) for t in sample)
        lines.append("%r,%r,%r" % (delta, rx, dev))
    em.write_csv("rxprobe.csv", "\n".join(lines) + "\n")
    em.manifest()
    print("rxprobe trajectory: %d deltas" % (len(lines) - 1))
    return 0


def _run_project(cfg: dict) -> int:
    basis_path = _existing_path(cfg, "basis")
    entries = json.loads(basis_path.read_text())
    basis = [state_from_json(json.dumps(e)) for e in entries]
    observed_radius = max(s.radius for s in basis)
    radius = int(cfg.get("radius", max(observed_radius, 4)))
    state0 = _load_state(cfg, radius)
    params = SimParams(nu=float(cfg.get("nu", 0.0)))
    epsilon = float(_require(cfg, "epsilon"))
    proj, S = subspace_setup(basis, epsilon)
    chain = _chain_for(cfg, S)
    target = np.asarray(_require(cfg, "target"), dtype=float)
    scfg = _steering_config(cfg)
    em = _Emitter(cfg, "project")
    code = 0
    try:
        report = steer_in_projection(proj, target, chain, state0, params,
                                     scfg, epsilon)
    except ConvergenceError as exc:
        report = exc.report
        code = 2
    except BlowUpError as exc:
        em.write_json("failure.json", {"error": str(exc), "time": exc.time})
        em.manifest()
        return 2
    em.write("program.json", program_to_json(report.program, indent=2) + "\n")
    em.write_json("report.json", report_to_dict(report, program_ref="program.json"))
    em.manifest()
    print("project: error=%.3g tail_growth=%.3g converged=%s"
          % (report.error_norm, report.q_tail_growth, report.converged))
    return code


_RUNNERS = {
    "saturate": _run_saturate,
    "simulate": _run_simulate,
    "steer": _run_steer,
    "average": _run_average,
    "chatter": _run_chatter,
    "cover": _run_cover,
    "project": _run_project,
    "rxprobe": _run_rxprobe,
}


def _coerce(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="modecascade",
        description="Spectral vorticity simulation and low-mode steering experiments")
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command", required=True)
    for name, fields in _OVERRIDABLE.items():
        sp = subs.add_parser(name)
        sp.add_argument("--config", required=True, help="JSON config (or manifest)")
        for fieldname in fields:
            sp.add_argument("--" + fieldname.replace("_", "-"), dest=fieldname,
                            default=None, metavar="V")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load_config(args.config, args.command)
        for fieldname in _OVERRIDABLE[args.command]:
            value = getattr(args, fieldname, None)
            if value is not None:
                cfg[fieldname] = _coerce(value)
        cfg.setdefault("seed", 0)
        return _RUNNERS[args.command](cfg)
    except ConfigError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1
    except (ValueError, KeyError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
