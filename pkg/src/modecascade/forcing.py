"""Degenerate forcing programs and their control-theoretic metrics.

A program is a finite sequence of timed segments over a symmetric
support set of modes: constant vectors, zero stretches, or packets of
fast harmonic oscillations.  Controls are identified with real vectors
through a :class:`ChannelMap`: each {k, -k} pair of the support
contributes two real channels, the real and imaginary parts of v_k.

Oscillatory segments are stored through their primitives.  A component
``(k, h, c)`` contributes ``c * (exp(i h w t) - 1)`` to the primitive
V_k on the segment-local clock (so primitives start at zero at every
segment start) and ``c * i h w * exp(i h w t)`` to the forcing itself.
The plain single-harmonic cosine pair of the cascade construction and
the counter-rotating two-harmonic packets are both special cases.

Why two-harmonic packets exist: forcing a mode pair (m, n) with equal
plain cosines pumps, through the quadratic term, not only the sum mode
m+n but also the difference mode m-n with a mean drive of the same
magnitude and opposite sign (a product of standing waves carries both
sum and difference harmonics).  Counter-rotating packets with the
harmonic pattern {+1, +2} on m and {-1, -2} on n have zero-mean
primitives, start and end at zero, drive the sum mode with a constant
(time-independent) rate, and leave the difference mode with no mean
drive at all.  See :func:`cascade_packet`.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import optimize

from .lattice import (Mode, canonical_rep, check_mode, neg, norm_sq,
                      rep_modes, symmetrize, wedge)

__all__ = [
    "ChannelMap", "Constant", "Oscillatory", "Zero", "ForcingProgram",
    "ExtremeSet", "zero_program", "constant_program",
    "relaxation_distance", "delta_distance",
    "oscillatory_amplitudes", "cascade_packet", "cos_pair_segment",
    "chattering_approximation",
    "program_to_dict", "program_from_dict", "program_to_json", "program_from_json",
]

def _as_rep_values(values: Mapping[Mode, complex]) -> dict[Mode, complex]:
    """Fold a conjugate-symmetric mode map onto canonical representatives."""
    out: dict[Mode, complex] = {}
    for k, v in values.items():
        k = check_mode(k)
        r = canonical_rep(k)
        val = complex(v) if k == r else complex(v).conjugate()
        if r in out:
            if abs(out[r] - val) > 1e-9 * max(1.0, abs(val)):
                raise ValueError("asymmetric forcing: v(-k) != conj(v(k)) at %s" % (k,))
        else:
            out[r] = val
    return {r: v for r, v in out.items() if v != 0}


class ChannelMap:
    """Ordered identification of a symmetric mode set with R^kappa.

    Representatives are sorted lexicographically; each contributes the
    channel pair (Re v_k, Im v_k) in that order, so kappa equals the
    number of modes in the set.
    """

    def __init__(self, support: Iterable[Mode]):
        self.support = symmetrize(support) if support else frozenset()
        self.reps: tuple[Mode, ...] = rep_modes(self.support)
        self.size = 2 * len(self.reps)
        self._rep_pos = {r: i for i, r in enumerate(self.reps)}

    def channel(self, index: int) -> tuple[Mode, str]:
        rep = self.reps[index // 2]
        return rep, ("re" if index % 2 == 0 else "im")

    def index(self, rep: Mode, part: str) -> int:
        i = self._rep_pos[canonical_rep(rep)]
        if canonical_rep(rep) != check_mode(rep):
            raise ValueError("channel addressing uses canonical representatives only")
        return 2 * i + (0 if part == "re" else 1)

    def rep_position(self, rep: Mode) -> int:
        return self._rep_pos[rep]

    def vector_to_rep_coeffs(self, vec: np.ndarray) -> dict[Mode, complex]:
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (self.size,):
            raise ValueError("channel vector must have length %d" % self.size)
        return {r: complex(vec[2 * i], vec[2 * i + 1])
                for i, r in enumerate(self.reps)
                if vec[2 * i] != 0 or vec[2 * i + 1] != 0}

    def vector_to_coeffs(self, vec: np.ndarray) -> dict[Mode, complex]:
        out = {}
        for r, v in self.vector_to_rep_coeffs(vec).items():
            out[r] = v
            out[neg(r)] = v.conjugate()
        return out

    def coeffs_to_vector(self, values: Mapping[Mode, complex]) -> np.ndarray:
        vec = np.zeros(self.size)
        for r, v in _as_rep_values(values).items():
            if r not in self._rep_pos:
                raise ValueError("mode %s outside the channel support" % (r,))
            i = self._rep_pos[r]
            vec[2 * i] = v.real
            vec[2 * i + 1] = v.imag
        return vec

    def complex_to_vector(self, arr: np.ndarray) -> np.ndarray:
        vec = np.empty(self.size)
        vec[0::2] = arr.real
        vec[1::2] = arr.imag
        return vec


# ---------------------------------------------------------------------------
# segments


class Constant:
    """Constant conjugate-symmetric forcing vector held for a duration."""

    __slots__ = ("duration", "values")

    def __init__(self, duration: float, values: Mapping[Mode, complex]):
        if duration <= 0:
            raise ValueError("segment duration must be positive")
        self.duration = float(duration)
        self.values = _as_rep_values(values)

    @property
    def modes(self) -> frozenset[Mode]:
        return symmetrize(self.values) if self.values else frozenset()

    def rep_value(self, rep: Mode, tloc: float) -> complex:
        return self.values.get(rep, 0j)

    def rep_primitive(self, rep: Mode, tloc: float) -> complex:
        return self.values.get(rep, 0j) * tloc

    def integral(self) -> dict[Mode, complex]:
        return {r: v * self.duration for r, v in self.values.items()}

    def __eq__(self, other):
        return (isinstance(other, Constant) and self.values == other.values
                and self.duration == other.duration)

    def same_value(self, other) -> bool:
        return isinstance(other, Constant) and self.values == other.values

    def __repr__(self):
        return "Constant(duration=%g, modes=%s)" % (self.duration, sorted(self.values))


class Oscillatory:
    """Harmonic packet: per representative mode a set of harmonics of a
    shared base frequency, parameterized by the primitive coefficients."""

    __slots__ = ("duration", "omega", "components")

    def __init__(self, duration: float, omega: float,
                 components: Iterable[tuple[Mode, int, complex]]):
        if duration <= 0:
            raise ValueError("segment duration must be positive")
        if omega <= 0:
            raise ValueError("oscillation frequency must be positive")
        self.duration = float(duration)
        self.omega = float(omega)
        merged: dict[tuple[Mode, int], complex] = {}
        for k, h, c in components:
            k = check_mode(k)
            h = int(h)
            if h == 0:
                raise ValueError("harmonic index must be nonzero")
            c = complex(c)
            if canonical_rep(k) != k:
                k, h, c = canonical_rep(k), -h, c.conjugate()
            merged[(k, h)] = merged.get((k, h), 0j) + c
        self.components = tuple(sorted(
            ((k, h, c) for (k, h), c in merged.items() if c != 0),
            key=lambda item: (item[0], item[1])))

    @classmethod
    def from_cos_pairs(cls, duration: float, omega: float,
                       pairs: Sequence[tuple[Mode, float]],
                       phase: float = 0.0) -> "Oscillatory":
        """Plain cosine bundle: v_k(t) = A * omega * cos(omega t
        + phase) on each listed mode and its conjugate partner."""
        comps = []
        for k, amp in pairs:
            c_plus = complex(amp) / 2j * cmath.exp(1j * phase)
            comps.append((k, +1, c_plus))
            comps.append((k, -1, c_plus.conjugate()))
        return cls(duration, omega, comps)

    @property
    def modes(self) -> frozenset[Mode]:
        return symmetrize(k for k, _, _ in self.components)

    def rep_value(self, rep: Mode, tloc: float) -> complex:
        w = self.omega
        return sum(c * 1j * h * w * cmath.exp(1j * h * w * tloc)
                   for k, h, c in self.components if k == rep)

    def rep_primitive(self, rep: Mode, tloc: float) -> complex:
        w = self.omega
        return sum(c * (cmath.exp(1j * h * w * tloc) - 1.0)
                   for k, h, c in self.components if k == rep)

    def integral(self) -> dict[Mode, complex]:
        out: dict[Mode, complex] = {}
        for k, h, c in self.components:
            out[k] = out.get(k, 0j) + c * (cmath.exp(1j * h * self.omega * self.duration) - 1.0)
        return out

    def value_bound(self) -> float:
        """Upper bound on sum over modes of |v_k(t)|, for hull checks."""
        per_mode: dict[Mode, float] = {}
        for k, h, c in self.components:
            per_mode[k] = per_mode.get(k, 0.0) + abs(c) * abs(h) * self.omega
        return sum(per_mode.values())

    def same_value(self, other) -> bool:
        return False

    def __repr__(self):
        return "Oscillatory(duration=%g, omega=%g, components=%d)" % (
            self.duration, self.omega, len(self.components))


class Zero:
    __slots__ = ("duration",)

    def __init__(self, duration: float):
        if duration <= 0:
            raise ValueError("segment duration must be positive")
        self.duration = float(duration)

    modes = frozenset()

    def rep_value(self, rep: Mode, tloc: float) -> complex:
        return 0j

    def rep_primitive(self, rep: Mode, tloc: float) -> complex:
        return 0j

    def integral(self) -> dict[Mode, complex]:
        return {}

    def same_value(self, other) -> bool:
        return isinstance(other, Zero)

    def __repr__(self):
        return "Zero(duration=%g)" % self.duration


Segment = Constant | Oscillatory | Zero


# ---------------------------------------------------------------------------
# programs


class ForcingProgram:
    """Piecewise-in-time forcing over a symmetric support mode set."""

    def __init__(self, support: Iterable[Mode], segments: Sequence[Segment]):
        self.support = symmetrize(support) if support else frozenset()
        self.segments = tuple(segments)
        if not self.segments:
            raise ValueError("a program needs at least one segment")
        for seg in self.segments:
            if not seg.modes <= self.support:
                raise ValueError("segment modes %s escape the program support"
                                 % sorted(seg.modes - self.support))
        self.starts = np.concatenate([[0.0], np.cumsum([s.duration for s in self.segments])])

    @property
    def total_duration(self) -> float:
        return float(self.starts[-1])

    @cached_property
    def _offsets(self) -> tuple[dict[Mode, complex], ...]:
        """Accumulated primitive at each segment start."""
        offsets = [dict()]
        for seg in self.segments:
            nxt = dict(offsets[-1])
            for k, v in seg.integral().items():
                nxt[k] = nxt.get(k, 0j) + v
            offsets.append(nxt)
        return tuple(offsets)

    def segment_index(self, t: float) -> tuple[int, float]:
        """Segment containing t (left-closed; t == total hits the last)."""
        T = self.total_duration
        if t < -1e-12 or t > T + max(1e-12, 1e-12 * T):
            raise ValueError("time out of range: t=%g not in [0, %g]" % (t, T))
        t = min(max(t, 0.0), T)
        i = int(np.searchsorted(self.starts, t, side="right")) - 1
        i = min(max(i, 0), len(self.segments) - 1)
        return i, t - float(self.starts[i])

    def evaluate(self, t: float) -> dict[Mode, complex]:
        """Forcing vector at time t, over the full symmetric support."""
        i, tloc = self.segment_index(t)
        seg = self.segments[i]
        out = {}
        for rep in rep_modes(seg.modes):
            v = seg.rep_value(rep, tloc)
            out[rep] = v
            out[neg(rep)] = v.conjugate()
        return out

    def primitive(self, t: float) -> dict[Mode, complex]:
        """Exact closed-form primitive of the forcing at time t."""
        i, tloc = self.segment_index(t)
        seg = self.segments[i]
        out = dict(self._offsets[i])
        for rep in rep_modes(seg.modes):
            out[rep] = out.get(rep, 0j) + seg.rep_primitive(rep, tloc)
        full = {}
        for rep, v in out.items():
            full[rep] = v
            full[neg(rep)] = v.conjugate()
        return full

    # vectorized representative-space evaluation ----------------------------

    def _rep_matrix(self, times: np.ndarray, cmap: ChannelMap,
                    primitive: bool) -> np.ndarray:
        """Complex (len(times), len(cmap.reps)) matrix of v or V values."""
        times = np.asarray(times, dtype=float)
        T = self.total_duration
        if times.size and (times.min() < -1e-12 or times.max() > T + max(1e-12, 1e-12 * T)):
            raise ValueError("time out of range")
        clipped = np.clip(times, 0.0, T)
        idx = np.clip(np.searchsorted(self.starts, clipped, side="right") - 1,
                      0, len(self.segments) - 1)
        out = np.zeros((times.size, len(cmap.reps)), dtype=np.complex128)
        for i, seg in enumerate(self.segments):
            mask = idx == i
            if not mask.any():
                continue
            tloc = clipped[mask] - float(self.starts[i])
            block = np.zeros((tloc.size, len(cmap.reps)), dtype=np.complex128)
            if isinstance(seg, Constant):
                for rep, v in seg.values.items():
                    p = cmap.rep_position(rep)
                    block[:, p] = v * tloc if primitive else v
            elif isinstance(seg, Oscillatory):
                w = seg.omega
                for rep, h, c in seg.components:
                    p = cmap.rep_position(rep)
                    phase = np.exp(1j * h * w * tloc)
                    block[:, p] += c * (phase - 1.0) if primitive else c * 1j * h * w * phase
            if primitive:
                for rep, v in self._offsets[i].items():
                    block[:, cmap.rep_position(rep)] += v
            out[mask] = block
        return out

    def channel_values(self, times: np.ndarray, cmap: ChannelMap) -> np.ndarray:
        return _interleave(self._rep_matrix(times, cmap, primitive=False))

    def channel_primitive(self, times: np.ndarray, cmap: ChannelMap) -> np.ndarray:
        return _interleave(self._rep_matrix(times, cmap, primitive=True))

    def is_piecewise_constant(self) -> bool:
        return all(isinstance(s, (Constant, Zero)) for s in self.segments)

    def value_l1_bound(self) -> float:
        """Bound on sup_t of the channel-space l1 norm of the forcing."""
        worst = 0.0
        for seg in self.segments:
            if isinstance(seg, Constant):
                worst = max(worst, sum(abs(v.real) + abs(v.imag)
                                       for v in seg.values.values()))
            elif isinstance(seg, Oscillatory):
                worst = max(worst, math.sqrt(2.0) * seg.value_bound())
        return worst

    def extended(self, extra: Sequence[Segment],
                 extra_support: Iterable[Mode] = ()) -> "ForcingProgram":
        return ForcingProgram(self.support | symmetrize(extra_support)
                              if extra_support else self.support,
                              self.segments + tuple(extra))

    def __repr__(self):
        return "ForcingProgram(support=%d modes, segments=%d, T=%g)" % (
            len(self.support), len(self.segments), self.total_duration)


def _interleave(rep_matrix: np.ndarray) -> np.ndarray:
    out = np.empty((rep_matrix.shape[0], 2 * rep_matrix.shape[1]))
    out[:, 0::2] = rep_matrix.real
    out[:, 1::2] = rep_matrix.imag
    return out


def zero_program(duration: float, support: Iterable[Mode] = ()) -> ForcingProgram:
    return ForcingProgram(support, [Zero(duration)])


def constant_program(support: Iterable[Mode], values: Mapping[Mode, complex],
                     duration: float) -> ForcingProgram:
    return ForcingProgram(support, [Constant(duration, values)])


# ---------------------------------------------------------------------------
# metrics


def _boundary_and_extremum_times(program: ForcingProgram) -> list[float]:
    cands = list(program.starts)
    for i, seg in enumerate(program.segments):
        t0 = float(program.starts[i])
        if isinstance(seg, Oscillatory):
            for _, h, c in seg.components:
                # channel extrema of c*(exp(i h w t) - 1): solve sin/cos peaks
                w_eff = abs(h) * seg.omega
                phi = cmath.phase(c)
                # peaks of Re and Im parts, every half period
                n_half = int(w_eff * seg.duration / math.pi) + 2
                for fam in (0.5 * math.pi, 0.0):
                    base = (fam - phi) / w_eff
                    for j in range(-1, n_half + 1):
                        t = base + j * math.pi / w_eff
                        if 0.0 <= t <= seg.duration:
                            cands.append(t0 + t)
    return cands


def relaxation_distance(f: ForcingProgram, g: ForcingProgram,
                        grid: int = 4096) -> float:
    """Relaxation pseudometric: max over time of the Euclidean channel
    norm of the difference of control primitives.

    Primitives are exact; the time search uses a uniform grid enriched
    with segment boundaries and per-channel oscillation extrema, then a
    bounded local refinement, so single-harmonic cases are resolved to
    machine accuracy.
    """
    T = f.total_duration
    if abs(T - g.total_duration) > 1e-9 * max(1.0, T):
        raise ValueError("duration mismatch: %g vs %g" % (T, g.total_duration))
    cmap = ChannelMap(f.support | g.support)
    if cmap.size == 0:
        return 0.0

    def dist_many(ts: np.ndarray) -> np.ndarray:
        diff = f.channel_primitive(ts, cmap) - g.channel_primitive(ts, cmap)
        return np.sqrt((diff * diff).sum(axis=1))

    if f.is_piecewise_constant() and g.is_piecewise_constant():
        # primitives are piecewise linear and the norm is convex on each
        # piece, so the breakpoint maximum is exact
        cands = np.unique(np.clip(np.concatenate([f.starts, g.starts]), 0, T))
        return float(dist_many(cands).max())

    cands = np.linspace(0.0, T, grid + 1)
    cands = np.concatenate([cands,
                            np.clip(_boundary_and_extremum_times(f), 0, T),
                            np.clip(_boundary_and_extremum_times(g), 0, T)])
    cands = np.unique(cands)
    vals = dist_many(cands)
    best = float(vals.max())
    order = np.argsort(vals)[::-1][:8]
    for i in order:
        lo = cands[max(i - 1, 0)]
        hi = cands[min(i + 1, len(cands) - 1)]
        if hi - lo <= 1e-14 * max(1.0, T):
            continue
        res = optimize.minimize_scalar(
            lambda t: -dist_many(np.array([t]))[0],
            bounds=(lo, hi), method="bounded",
            options={"xatol": 1e-13 * max(1.0, T)})
        best = max(best, float(-res.fun))
    return best


def delta_distance(f: ForcingProgram, g: ForcingProgram) -> float:
    """Lebesgue measure of the set where two piecewise-constant programs
    differ, computed exactly from the segment breakpoints."""
    if not (f.is_piecewise_constant() and g.is_piecewise_constant()):
        raise ValueError("non-piecewise-constant input")
    T = f.total_duration
    if abs(T - g.total_duration) > 1e-9 * max(1.0, T):
        raise ValueError("duration mismatch")
    edges = np.unique(np.concatenate([f.starts, g.starts]))
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        if b - a <= 0:
            continue
        mid = 0.5 * (a + b)
        if f.evaluate(mid) != g.evaluate(mid):
            total += b - a
    return float(total)


# ---------------------------------------------------------------------------
# cascade amplitudes


def _interaction_coeff(m: Mode, n: Mode) -> float:
    return wedge(m, n) * (1.0 / norm_sq(m) - 1.0 / norm_sq(n))


def oscillatory_amplitudes(k: Mode, m: Mode, n: Mode, amplitude: float
                           ) -> tuple[float, float]:
    """Equal-magnitude cosine amplitudes (A_m, A_n) solving

        A_m * A_n * wedge(m, n) * (|m|^-2 - |n|^-2) = 2 * amplitude

    with A_m > 0 and the sign carried by A_n.  This is the amplitude
    condition of the plain single-harmonic cascade step.
    """
    k = check_mode(k)
    if (m[0] + n[0], m[1] + n[1]) != k:
        raise ValueError("pair does not sum to the target mode")
    if amplitude == 0:
        raise ValueError("amplitude must be nonzero")
    coeff = _interaction_coeff(m, n)
    if coeff == 0.0:
        raise ValueError("inadmissible pair: collinear or equal-length modes")
    product = 2.0 * amplitude / coeff
    mag = math.sqrt(abs(product))
    return mag, math.copysign(mag, product)


def snap_omega(omega: float, duration: float, period_fraction: float = 2.0 * math.pi,
               min_cycles: int = 1) -> float:
    """Smallest frequency >= omega whose phase advance over the segment is
    an exact multiple of period_fraction (so primitives close up)."""
    cycles = max(min_cycles, math.ceil(omega * duration / period_fraction - 1e-9))
    return period_fraction * cycles / duration


def cascade_packet(k: Mode, m: Mode, n: Mode, target: complex, omega: float,
                   duration: float) -> Segment:
    """Counter-rotating two-harmonic packet on the pair (m, n) whose mean
    quadratic drive on mode k = m+n equals ``target``.

    Primitives are V_m = a (e^{iwt} - e^{2iwt}) and V_n = a (e^{-iwt} -
    e^{-2iwt}); the packet drives mode m+n at constant rate
    2 * coeff * a^2 while the difference mode m-n sees only zero-mean
    harmonics.  The base frequency is snapped up so whole cycles fit the
    segment and the primitives return exactly to zero.
    """
    k = check_mode(k)
    if (m[0] + n[0], m[1] + n[1]) != k:
        raise ValueError("pair does not sum to the target mode")
    coeff = _interaction_coeff(m, n)
    if coeff == 0.0:
        raise ValueError("inadmissible pair: collinear or equal-length modes")
    target = complex(target)
    if target == 0:
        return Zero(duration)
    z = target / (2.0 * coeff)
    a = math.sqrt(abs(z)) * cmath.exp(1j * cmath.phase(z) / 2.0)
    w = snap_omega(omega, duration)
    return Oscillatory(duration, w, [
        (m, +1, a), (m, +2, -a),
        (n, -1, a), (n, -2, -a),
    ])


def cos_pair_segment(k: Mode, m: Mode, n: Mode, amplitude: float, omega: float,
                     duration: float) -> Oscillatory:
    """Plain construction: equal cosines A_m w cos(wt), A_n w cos(wt) on the
    pair, with amplitudes from :func:`oscillatory_amplitudes`.  Drives the
    real channel of k = m+n at mean rate ``amplitude`` but also the
    difference pair m-n at the opposite rate; kept for comparison runs."""
    a_m, a_n = oscillatory_amplitudes(k, m, n, amplitude)
    w = snap_omega(omega, duration, period_fraction=math.pi)
    return Oscillatory.from_cos_pairs(duration, w, [(m, a_m), (n, a_n)])


# ---------------------------------------------------------------------------
# chattering


@dataclass(frozen=True)
class ExtremeSet:
    """The 2*kappa signed axis vectors {+-A e_j} of the control polytope."""
    amplitude: float
    dimension: int

    def __post_init__(self):
        if self.amplitude <= 0:
            raise ValueError("extreme amplitude must be positive")
        if self.dimension < 1:
            raise ValueError("dimension must be a positive integer")

    def vectors(self) -> np.ndarray:
        eye = self.amplitude * np.eye(self.dimension)
        return np.concatenate([eye, -eye])

    def contains(self, v: np.ndarray) -> bool:
        """Convex hull membership: l1 norm at most A."""
        return float(np.abs(np.asarray(v)).sum()) <= self.amplitude * (1 + 1e-12)


def _channel_constant(cmap: ChannelMap, channel: int, value: float,
                      duration: float) -> Constant:
    rep, part = cmap.channel(channel)
    return Constant(duration, {rep: value if part == "re" else 1j * value})


def merge_constant_runs(segments: Sequence[Segment]) -> list[Segment]:
    """Coalesce adjacent segments holding the same value."""
    merged: list[Segment] = []
    for seg in segments:
        if merged and merged[-1].same_value(seg):
            prev = merged.pop()
            if isinstance(prev, Zero):
                merged.append(Zero(prev.duration + seg.duration))
            else:
                merged.append(Constant(prev.duration + seg.duration, prev.values))
        else:
            merged.append(seg)
    return merged


def chattering_approximation(program: ForcingProgram, amplitude: float,
                             windows: int, slack_channel: int = 0
                             ) -> ForcingProgram:
    """Approximate a convex-body-valued program by an extreme-valued
    piecewise-constant one, close in the relaxation metric.

    The horizon is cut into ``windows`` equal windows.  Each window
    average (computed exactly from the primitives) is decomposed as a
    convex combination of the signed axis vectors, channels in
    ascending order, and idle time is spent as an equal +-A pair on
    ``slack_channel`` so the window's primitive increment is preserved
    exactly.  The relaxation distance to the input is at most
    2 * A * sqrt(kappa) * T / windows.
    """
    if windows < 1:
        raise ValueError("window count must be >= 1")
    cmap = ChannelMap(program.support)
    if cmap.size == 0:
        raise ValueError("cannot chatter a program with empty support")
    extreme = ExtremeSet(amplitude, cmap.size)
    if not (0 <= slack_channel < cmap.size):
        raise ValueError("slack channel out of range")
    bound = program.value_l1_bound()
    if bound > amplitude * (1 + 1e-9):
        raise ValueError("value outside convex hull: l1 bound %g exceeds %g"
                         % (bound, amplitude))
    T = program.total_duration
    edges = np.linspace(0.0, T, windows + 1)
    prim = program.channel_primitive(edges, cmap)
    segments: list[Segment] = []
    for i in range(windows):
        t_w = edges[i + 1] - edges[i]
        vbar = (prim[i + 1] - prim[i]) / t_w
        used = 0.0
        for c in range(cmap.size):
            lam = abs(vbar[c]) / amplitude
            if lam * t_w <= 1e-15 * max(1.0, T):
                continue
            segments.append(_channel_constant(
                cmap, c, math.copysign(amplitude, vbar[c]), lam * t_w))
            used += lam * t_w
        slack = t_w - used
        if slack > 1e-14 * max(1.0, T):
            for sign in (+1.0, -1.0):
                segments.append(_channel_constant(
                    cmap, slack_channel, sign * amplitude, slack / 2.0))
    return ForcingProgram(program.support, merge_constant_runs(segments))


# ---------------------------------------------------------------------------
# serialization


def _mode_key(k: Mode) -> str:
    return "%d,%d" % k


def _cos_pairs_form(seg: Oscillatory):
    """Recover the (pairs, phase) form when the packet is a plain cosine
    bundle on real channels; None otherwise."""
    by_mode: dict[Mode, dict[int, complex]] = {}
    for k, h, c in seg.components:
        by_mode.setdefault(k, {})[h] = c
    pairs = []
    phase = None
    for k, comps in by_mode.items():
        if set(comps) != {1, -1}:
            return None
        c_plus, c_minus = comps[1], comps[-1]
        if abs(c_minus - c_plus.conjugate()) > 1e-12 * max(1.0, abs(c_plus)):
            return None
        amp = 2.0 * abs(c_plus)
        phi = cmath.phase(c_plus) + math.pi / 2.0
        phi = math.remainder(phi, 2.0 * math.pi)
        if phase is None:
            phase = phi
        elif abs(math.remainder(phi - phase, 2.0 * math.pi)) > 1e-12:
            return None
        pairs.append({"mode": list(k), "amp": amp})
    return pairs, (phase or 0.0)


def program_to_dict(program: ForcingProgram) -> dict:
    segs = []
    for seg in program.segments:
        if isinstance(seg, Zero):
            segs.append({"kind": "zero", "duration": seg.duration})
        elif isinstance(seg, Constant):
            values = {}
            for rep, v in seg.values.items():
                values[_mode_key(rep)] = [v.real, v.imag]
                values[_mode_key(neg(rep))] = [v.real, -v.imag]
            segs.append({"kind": "constant", "duration": seg.duration,
                         "values": values})
        else:
            entry = {"kind": "oscillatory", "duration": seg.duration,
                     "omega": seg.omega}
            plain = _cos_pairs_form(seg)
            if plain is not None:
                entry["phase"] = plain[1]
                entry["pairs"] = plain[0]
            else:
                entry["components"] = [
                    {"mode": list(k), "harmonic": h, "coeff": [c.real, c.imag]}
                    for k, h, c in seg.components]
            segs.append(entry)
    return {"support": [list(k) for k in sorted(program.support)],
            "segments": segs}


def program_from_dict(data: dict) -> ForcingProgram:
    support = frozenset(tuple(k) for k in data["support"])
    segments: list[Segment] = []
    for entry in data["segments"]:
        kind = entry["kind"]
        dur = float(entry["duration"])
        if kind == "zero":
            segments.append(Zero(dur))
        elif kind == "constant":
            values = {}
            for key, (re, im) in entry["values"].items():
                kx, ky = key.split(",")
                values[(int(kx), int(ky))] = complex(float(re), float(im))
            segments.append(Constant(dur, values))
        elif kind == "oscillatory":
            omega = float(entry["omega"])
            if "pairs" in entry:
                pairs = [(tuple(p["mode"]), float(p["amp"])) for p in entry["pairs"]]
                segments.append(Oscillatory.from_cos_pairs(
                    dur, omega, pairs, phase=float(entry.get("phase", 0.0))))
            else:
                comps = [(tuple(c["mode"]), int(c["harmonic"]),
                          complex(float(c["coeff"][0]), float(c["coeff"][1])))
                         for c in entry["components"]]
                segments.append(Oscillatory(dur, omega, comps))
        else:
            raise ValueError("unknown segment kind %r" % kind)
    return ForcingProgram(support, segments)


def program_to_json(program: ForcingProgram, indent: int | None = None) -> str:
    return json.dumps(program_to_dict(program), indent=indent)


def program_from_json(text: str) -> ForcingProgram:
    return program_from_dict(json.loads(text))
