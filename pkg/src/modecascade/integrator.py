"""Time integration of the truncated vorticity system under forcing programs.

The scheme is an integrating-factor Runge-Kutta of order four: with the
substitution q_k = exp(-nu |k|^2 t) a_k the stiff viscous part is
propagated exactly and the quadratic term plus forcing are advanced by
classical RK4 in the transformed variable.  For nu = 0 this reduces to
plain RK4.  On oscillatory segments the step is capped to a fixed
number of steps per period of the fastest harmonic; steps never cross
segment boundaries.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .forcing import Constant, ForcingProgram, Oscillatory, Segment, Zero
from .spectral import (SimParams, SpectralState, _tables, energy, enstrophy,
                       sobolev_norm)

__all__ = ["IntegratorConfig", "Trajectory", "BlowUpError", "step",
           "integrate", "convergence_order"]

BLOWUP_LIMIT = 1e12


class BlowUpError(RuntimeError):
    """Raised when a coefficient leaves the finite range; carries the time."""

    def __init__(self, time: float):
        self.time = float(time)
        super().__init__("non-finite state at t=%.9g (blow-up or user error)" % time)


@dataclass(frozen=True)
class IntegratorConfig:
    dt_base: float = 1e-3
    oscillation_resolution: int = 40     # steps per period of the fastest harmonic
    record_stride: int = 1
    max_steps: int = 2_000_000           # guards runaway oscillation frequencies

    def __post_init__(self):
        if self.dt_base <= 0:
            raise ValueError("dt_base must be positive")
        if self.oscillation_resolution < 1:
            raise ValueError("oscillation_resolution must be >= 1")
        if self.record_stride < 1:
            raise ValueError("record_stride must be >= 1")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")


class Trajectory:
    """Recorded (t, state) samples of one integration run."""

    def __init__(self, times: Sequence[float], states: Sequence[SpectralState],
                 program: ForcingProgram | None = None):
        self.times = np.asarray(times, dtype=float)
        self.states = list(states)
        self.program = program
        if len(self.times) != len(self.states):
            raise ValueError("times and states must align")
        if len(self.times) == 0 or self.times[0] != 0.0:
            raise ValueError("trajectories start at t = 0")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("record times must be strictly increasing")

    def __len__(self):
        return len(self.states)

    @property
    def final(self) -> SpectralState:
        return self.states[-1]

    def at(self, t: float, tol: float = 1e-9) -> SpectralState:
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) > tol * max(1.0, abs(t)):
            raise KeyError("no state recorded at t=%g" % t)
        return self.states[i]

    def summary(self) -> np.ndarray:
        """Rows (t, energy, enstrophy, h1, h2)."""
        rows = np.empty((len(self), 5))
        for i, (t, s) in enumerate(zip(self.times, self.states)):
            rows[i] = (t, energy(s), enstrophy(s),
                       sobolev_norm(s, 1), sobolev_norm(s, 2))
        return rows

    def to_csv(self) -> str:
        """Long format "t,kx,ky,re,im" over stored representatives."""
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["t", "kx", "ky", "re", "im"])
        for t, s in zip(self.times, self.states):
            for k, v in s.items():
                writer.writerow([repr(float(t)), k[0], k[1],
                                 repr(float(v.real)), repr(float(v.imag))])
        return buf.getvalue()

    def summary_to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["t", "energy", "enstrophy", "h1", "h2"])
        for row in self.summary():
            writer.writerow([repr(float(x)) for x in row])
        return buf.getvalue()


# ---------------------------------------------------------------------------
# forcing evaluation in representative space


def _segment_evaluator(seg: Segment, tab) -> Callable[[float], np.ndarray | float]:
    """Segment-local forcing as a function of local time, folded onto the
    stored representatives of the state's resolution."""
    if isinstance(seg, Zero) or not seg.modes:
        return lambda tloc: 0.0
    for k in seg.modes:
        if (k[0] ** 2 + k[1] ** 2) > tab.radius ** 2:
            raise ValueError("forcing mode %s outside resolution radius %d"
                             % (k, tab.radius))
    if isinstance(seg, Constant):
        vec = np.zeros(tab.n_reps, dtype=np.complex128)
        for rep, v in seg.values.items():
            vec[tab.rep_index[rep]] = v
        return lambda tloc: vec
    assert isinstance(seg, Oscillatory)
    idx = np.array([tab.rep_index[k] for k, _, _ in seg.components], dtype=np.intp)
    freq = np.array([h * seg.omega for _, h, _ in seg.components])
    coef = np.array([c * 1j * h * seg.omega for _, h, c in seg.components])
    n = tab.n_reps

    def ev(tloc: float) -> np.ndarray:
        out = np.zeros(n, dtype=np.complex128)
        np.add.at(out, idx, coef * np.exp(1j * freq * tloc))
        return out

    return ev


def _segment_dt(seg: Segment, config: IntegratorConfig) -> float:
    dt = config.dt_base
    if isinstance(seg, Oscillatory):
        h_max = max(abs(h) for _, h, _ in seg.components)
        period = 2.0 * math.pi / (seg.omega * h_max)
        dt = min(dt, period / config.oscillation_resolution)
    return dt


def _lawson_rk4(q: np.ndarray, tloc: float, h: float, decay: np.ndarray | None,
                half_decay: np.ndarray | None, nl, ev) -> np.ndarray:
    k1 = nl(q) + ev(tloc)
    if decay is None:
        k2 = nl(q + 0.5 * h * k1) + ev(tloc + 0.5 * h)
        k3 = nl(q + 0.5 * h * k2) + ev(tloc + 0.5 * h)
        k4 = nl(q + h * k3) + ev(tloc + h)
        return q + (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
    u2 = half_decay * (q + 0.5 * h * k1)
    k2 = nl(u2) + ev(tloc + 0.5 * h)
    u3 = half_decay * q + 0.5 * h * k2
    k3 = nl(u3) + ev(tloc + 0.5 * h)
    u4 = decay * q + h * half_decay * k3
    k4 = nl(u4) + ev(tloc + h)
    return decay * q + (h / 6.0) * (decay * k1 + 2.0 * half_decay * (k2 + k3) + k4)


def _check_finite(q: np.ndarray, t: float):
    if not np.all(np.isfinite(q)) or np.max(np.abs(q)) > BLOWUP_LIMIT:
        raise BlowUpError(t)


def step(state: SpectralState, t: float, dt: float, params: SimParams,
         program: ForcingProgram) -> SpectralState:
    """One integrating-factor RK4 step; [t, t+dt] must sit inside a single
    forcing segment (callers split at boundaries)."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    i, tloc = program.segment_index(t)
    seg = program.segments[i]
    if tloc + dt > seg.duration * (1 + 1e-12) + 1e-15:
        raise ValueError("step crosses a forcing segment boundary; split the step")
    tab = _tables(state.radius)
    ev = _segment_evaluator(seg, tab)
    if params.nu:
        decay = np.exp(-params.nu * tab.norm_sq * dt)
        half = np.exp(-params.nu * tab.norm_sq * dt / 2.0)
    else:
        decay = half = None
    q = _lawson_rk4(state.data, tloc, dt, decay, half, tab.nonlinear, ev)
    _check_finite(q, t + dt)
    return SpectralState(state.radius, q, _copy=False)


def integrate(state0: SpectralState, params: SimParams, program: ForcingProgram,
              config: IntegratorConfig = IntegratorConfig(),
              sample_times: Sequence[float] | None = None) -> Trajectory:
    """Advance over all segments of the program, splitting steps at segment
    boundaries and at any requested sample times.

    Records the initial state, every ``record_stride``-th step, all
    boundary/sample instants and the final state.  Deterministic for a
    fixed configuration.
    """
    tab = _tables(state0.radius)
    T = program.total_duration
    samples = np.array([] if sample_times is None
                       else sorted(set(float(s) for s in sample_times)))
    if samples.size and (samples.min() < 0 or samples.max() > T * (1 + 1e-12)):
        raise ValueError("sample times escape the program horizon")

    planned = sum(math.ceil(seg.duration / _segment_dt(seg, config) - 1e-9)
                  for seg in program.segments)
    if planned > config.max_steps:
        raise RuntimeError("step budget exceeded: %d steps planned, %d allowed "
                           "(reduce the horizon or oscillation frequencies)"
                           % (planned, config.max_steps))

    times = [0.0]
    states = [state0]
    q = state0.data
    step_count = 0

    def record(t_now: float, force: bool):
        nonlocal step_count
        if force or (step_count % config.record_stride == 0):
            if t_now > times[-1]:
                times.append(t_now)
                states.append(SpectralState(state0.radius, q))

    for i, seg in enumerate(program.segments):
        t0 = float(program.starts[i])
        t1 = float(program.starts[i + 1])
        ev = _segment_evaluator(seg, tab)
        dt_seg = _segment_dt(seg, config)
        inner = samples[(samples > t0 + 1e-15) & (samples < t1 - 1e-15)] - t0
        brk = np.unique(np.concatenate([[0.0, seg.duration], inner]))
        if params.nu:
            cache: dict[float, tuple[np.ndarray, np.ndarray]] = {}
        for a, b in zip(brk[:-1], brk[1:]):
            span = float(b - a)
            if span <= 0:
                continue
            n = max(1, math.ceil(span / dt_seg - 1e-9))
            h = span / n
            if params.nu:
                if h not in cache:
                    cache[h] = (np.exp(-params.nu * tab.norm_sq * h),
                                np.exp(-params.nu * tab.norm_sq * h / 2.0))
                decay, half = cache[h]
            else:
                decay = half = None
            for j in range(n):
                tloc = float(a) + j * h
                q = _lawson_rk4(q, tloc, h, decay, half, tab.nonlinear, ev)
                step_count += 1
                at_break = j == n - 1
                t_now = t0 + (float(b) if at_break else tloc + h)
                try:
                    _check_finite(q, t_now)
                except BlowUpError:
                    record(t_now, force=True)
                    raise
                record(t_now, force=at_break)
    return Trajectory(times, states, program)


def convergence_order(state0: SpectralState, params: SimParams,
                      program: ForcingProgram, dts: Sequence[float],
                      config: IntegratorConfig = IntegratorConfig()
                      ) -> tuple[float, np.ndarray]:
    """Self-convergence estimate: least-squares slope of log error against
    log dt, errors measured in the H0 norm of the final state against a
    reference run at a quarter of the finest dt.

    Returns (order, errors); the order is NaN when every error sits at
    round-off, i.e. the problem is integrated exactly (linear-only runs).
    """
    dts = [float(d) for d in dts]
    if len(dts) < 3 or any(b >= a for a, b in zip(dts, dts[1:])):
        raise ValueError("insufficient dt ladder: need >= 3 strictly decreasing steps")

    def run(dt: float) -> SpectralState:
        cfg = IntegratorConfig(dt_base=dt,
                               oscillation_resolution=config.oscillation_resolution,
                               record_stride=10 ** 9)
        return integrate(state0, params, program, cfg).final

    ref = run(dts[-1] / 4.0)
    errs = np.array([sobolev_norm(run(dt) - ref, 0) for dt in dts])
    scale = 1.0 + sobolev_norm(ref, 0)
    if errs.max() <= 1e-13 * scale:
        return float("nan"), errs
    slope = np.polyfit(np.log(dts), np.log(np.maximum(errs, 1e-300)), 1)[0]
    return float(slope), errs
