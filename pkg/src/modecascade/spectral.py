"""Galerkin vorticity states and the spectral vector field on the torus.

A state holds the Fourier coefficients q_k of a real scalar vorticity
field over the symmetric ball 1 <= |k|^2 <= R^2.  Realness means
q_{-k} = conj(q_k), so only one canonical representative of each
{k, -k} pair is stored; the conjugate half is implicit and the
symmetry invariant is structural rather than checked.

The quadratic term is evaluated in the rearranged single-sum form

    N_k = sum over m+n=k, |m| < |n| of  wedge(m,n) (|m|^-2 - |n|^-2) q_m q_n,

which is algebraically equal to the naive double sum
sum_{m+n=k} wedge(m,n) |m|^-2 q_m q_n and makes the vanishing of
equal-length interactions explicit.  Triad index tables are built once
per resolution and cached, so a field evaluation is a handful of numpy
gathers and two bincounts.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Mapping

import numpy as np

from .lattice import (Mode, ball, canonical_rep, check_mode, is_symmetric,
                      neg, norm_sq, wedge)

__all__ = [
    "SimParams", "SpectralState", "vector_field", "nonlinear_term",
    "energy", "enstrophy", "sobolev_norm", "inner0",
    "velocity_from_vorticity", "project", "project_complement",
    "random_decaying_state", "resize",
    "state_to_csv", "state_from_csv", "state_to_json", "state_from_json",
]


@dataclass(frozen=True)
class SimParams:
    """Physical parameters: nu >= 0 is the viscosity, nu == 0 the ideal case."""
    nu: float = 0.0

    def __post_init__(self):
        if self.nu < 0:
            raise ValueError("viscosity must be nonnegative")


class _Tables:
    """Per-resolution mode bookkeeping and triad interaction tables."""

    def __init__(self, radius: int):
        self.radius = radius
        modes = ball(radius)
        self.reps: tuple[Mode, ...] = tuple(sorted({canonical_rep(k) for k in modes}))
        self.n_reps = len(self.reps)
        self.rep_index = {k: i for i, k in enumerate(self.reps)}
        # full layout: reps first, then their negatives
        self.full_modes: tuple[Mode, ...] = self.reps + tuple(neg(k) for k in self.reps)
        self.full_index = {k: i for i, k in enumerate(self.full_modes)}
        self.norm_sq = np.array([norm_sq(k) for k in self.reps], dtype=np.float64)
        self.kx = np.array([k[0] for k in self.reps], dtype=np.float64)
        self.ky = np.array([k[1] for k in self.reps], dtype=np.float64)
        self._build_triads(modes)

    def _build_triads(self, modes: frozenset[Mode]):
        rows_k, rows_m, rows_n, rows_c = [], [], [], []
        full = self.full_index
        for k in self.reps:
            ki = self.rep_index[k]
            for m in self.full_modes:
                n = (k[0] - m[0], k[1] - m[1])
                if n == (0, 0) or n not in full:
                    continue
                nm, nn = norm_sq(m), norm_sq(n)
                if nm >= nn:          # one representative per unordered pair
                    continue
                w = wedge(m, n)
                if w == 0:
                    continue
                rows_k.append(ki)
                rows_m.append(full[m])
                rows_n.append(full[n])
                rows_c.append(w * (1.0 / nm - 1.0 / nn))
        self.tri_k = np.array(rows_k, dtype=np.intp)
        self.tri_m = np.array(rows_m, dtype=np.intp)
        self.tri_n = np.array(rows_n, dtype=np.intp)
        self.tri_c = np.array(rows_c, dtype=np.float64)

    def full_vector(self, data: np.ndarray) -> np.ndarray:
        return np.concatenate([data, np.conj(data)])

    def nonlinear(self, data: np.ndarray) -> np.ndarray:
        """Quadratic term over the stored representatives."""
        f = self.full_vector(data)
        prod = self.tri_c * f[self.tri_m] * f[self.tri_n]
        re = np.bincount(self.tri_k, weights=prod.real, minlength=self.n_reps)
        im = np.bincount(self.tri_k, weights=prod.imag, minlength=self.n_reps)
        return re + 1j * im


@lru_cache(maxsize=None)
def _tables(radius: int) -> _Tables:
    if radius < 1:
        raise ValueError("resolution radius must be >= 1")
    return _Tables(radius)


class SpectralState:
    """Immutable vorticity state at a fixed resolution radius."""

    __slots__ = ("radius", "data")

    def __init__(self, radius: int, data: np.ndarray | None = None, _copy: bool = True):
        tab = _tables(radius)
        object.__setattr__(self, "radius", radius)
        if data is None:
            arr = np.zeros(tab.n_reps, dtype=np.complex128)
        else:
            arr = np.asarray(data, dtype=np.complex128)
            if arr.shape != (tab.n_reps,):
                raise ValueError("coefficient vector has wrong length for radius %d" % radius)
            if _copy:
                arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    def __setattr__(self, name, value):
        raise AttributeError("SpectralState is immutable")

    # -- construction -------------------------------------------------------

    @classmethod
    def zeros(cls, radius: int) -> "SpectralState":
        return cls(radius)

    @classmethod
    def from_coeffs(cls, coeffs: Mapping[Mode, complex], radius: int) -> "SpectralState":
        """Build a state from a mode -> coefficient map.

        Entries may be given on either member of a {k, -k} pair (or both,
        in which case they must be conjugate to round-off).
        """
        tab = _tables(radius)
        data = np.zeros(tab.n_reps, dtype=np.complex128)
        seen: dict[int, complex] = {}
        for k, v in coeffs.items():
            k = check_mode(k)
            if norm_sq(k) > radius * radius:
                raise ValueError("mode %s outside resolution radius %d" % (k, radius))
            r = canonical_rep(k)
            val = complex(v) if k == r else np.conj(complex(v))
            i = tab.rep_index[r]
            if i in seen:
                if abs(seen[i] - val) > 1e-12 * max(1.0, abs(val)):
                    raise ValueError("conjugate-symmetry violation at mode %s" % (k,))
            else:
                seen[i] = val
                data[i] = val
        return cls(radius, data, _copy=False)

    # -- access -------------------------------------------------------------

    @property
    def reps(self) -> tuple[Mode, ...]:
        return _tables(self.radius).reps

    def coeff(self, k: Mode) -> complex:
        """Coefficient q_k for any mode in the ball (0 outside)."""
        k = check_mode(k)
        tab = _tables(self.radius)
        r = canonical_rep(k)
        i = tab.rep_index.get(r)
        if i is None:
            return 0.0 + 0.0j
        v = self.data[i]
        return complex(v) if k == r else complex(np.conj(v))

    def items(self):
        """Iterate (rep mode, coefficient) over stored representatives."""
        return zip(self.reps, self.data)

    def full_items(self):
        """Iterate (mode, coefficient) over the whole symmetric ball."""
        for k, v in self.items():
            yield k, complex(v)
            yield neg(k), complex(np.conj(v))

    # -- arithmetic (pointwise on coefficients) ------------------------------

    def _binary(self, other: "SpectralState", op) -> "SpectralState":
        if not isinstance(other, SpectralState) or other.radius != self.radius:
            raise ValueError("states must share a resolution radius")
        return SpectralState(self.radius, op(self.data, other.data), _copy=False)

    def __add__(self, other):
        return self._binary(other, np.add)

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __mul__(self, scalar):
        return SpectralState(self.radius, self.data * float(scalar), _copy=False)

    __rmul__ = __mul__

    def __repr__(self):
        return "SpectralState(radius=%d, modes=%d, |w|_0=%.3g)" % (
            self.radius, 2 * len(self.data), sobolev_norm(self, 0))


# ---------------------------------------------------------------------------
# operations


def _forcing_rep_vector(forcing: Mapping[Mode, complex], tab: _Tables) -> np.ndarray:
    """Validate a conjugate-symmetric forcing map and fold it onto reps."""
    vec = np.zeros(tab.n_reps, dtype=np.complex128)
    seen: dict[int, complex] = {}
    for k, v in forcing.items():
        k = check_mode(k)
        r = canonical_rep(k)
        i = tab.rep_index.get(r)
        if i is None:
            raise ValueError("forcing mode %s outside resolution radius %d"
                             % (k, tab.radius))
        val = complex(v) if k == r else np.conj(complex(v))
        if i in seen:
            if abs(seen[i] - val) > 1e-9 * max(1.0, abs(val)):
                raise ValueError("asymmetric forcing: v(-k) != conj(v(k)) at %s" % (k,))
        else:
            seen[i] = val
            vec[i] = val
    return vec


def nonlinear_term(state: SpectralState) -> SpectralState:
    """Quadratic advection term of the vorticity equation, as a state-shaped
    derivative."""
    tab = _tables(state.radius)
    return SpectralState(state.radius, tab.nonlinear(state.data), _copy=False)


def vector_field(state: SpectralState, params: SimParams,
                 forcing: Mapping[Mode, complex] | None = None) -> SpectralState:
    """Right-hand side dq_k/dt = N_k(q) - nu |k|^2 q_k + v_k."""
    tab = _tables(state.radius)
    out = tab.nonlinear(state.data)
    if params.nu:
        out = out - params.nu * tab.norm_sq * state.data
    if forcing:
        out = out + _forcing_rep_vector(forcing, tab)
    return SpectralState(state.radius, out, _copy=False)


def sobolev_norm(state: SpectralState, order: int = 0) -> float:
    """Norm sqrt(sum_k |k|^(2*order) |q_k|^2) over the full symmetric ball."""
    if order not in (0, 1, 2):
        raise ValueError("Sobolev order must be 0, 1 or 2")
    tab = _tables(state.radius)
    w = tab.norm_sq ** order
    return float(np.sqrt(2.0 * np.sum(w * np.abs(state.data) ** 2)))


def enstrophy(state: SpectralState) -> float:
    """Squared H0 norm of the vorticity."""
    return sobolev_norm(state, 0) ** 2


def energy(state: SpectralState) -> float:
    """Energy sum_k |k|^-2 |q_k|^2 of the velocity field recovered from w."""
    tab = _tables(state.radius)
    return float(2.0 * np.sum(np.abs(state.data) ** 2 / tab.norm_sq))


def inner0(a: SpectralState, b: SpectralState) -> float:
    """H0 inner product sum_k a_k conj(b_k); real for real fields."""
    if a.radius != b.radius:
        raise ValueError("states must share a resolution radius")
    return float(2.0 * np.sum(a.data * np.conj(b.data)).real)


def velocity_from_vorticity(state: SpectralState) -> tuple[dict[Mode, complex],
                                                           dict[Mode, complex]]:
    """Spectra of the divergence-free velocity (u1, u2) with curl w.

    Per mode: u1_k = q_k * i k2 / |k|^2 and u2_k = -q_k * i k1 / |k|^2,
    so i k1 u2_k - i k2 u1_k = q_k and k . u_k = 0 hold exactly.
    """
    u1: dict[Mode, complex] = {}
    u2: dict[Mode, complex] = {}
    for k, q in state.full_items():
        n2 = norm_sq(k)
        u1[k] = q * 1j * k[1] / n2
        u2[k] = -q * 1j * k[0] / n2
    return u1, u2


def _rep_mask(tab: _Tables, modes: Iterable[Mode]) -> np.ndarray:
    mode_set = frozenset(check_mode(k) for k in modes)
    if not is_symmetric(mode_set):
        raise ValueError("asymmetric target set: projection requires k in S => -k in S")
    mask = np.zeros(tab.n_reps, dtype=bool)
    for k in mode_set:
        i = tab.rep_index.get(canonical_rep(k))
        if i is not None:
            mask[i] = True
    return mask


def project(state: SpectralState, modes: Iterable[Mode]) -> SpectralState:
    """Zero every coefficient outside the given symmetric mode set."""
    tab = _tables(state.radius)
    mask = _rep_mask(tab, modes)
    return SpectralState(state.radius, np.where(mask, state.data, 0.0), _copy=False)


def project_complement(state: SpectralState, modes: Iterable[Mode]) -> SpectralState:
    """Zero every coefficient inside the given symmetric mode set."""
    tab = _tables(state.radius)
    mask = _rep_mask(tab, modes)
    return SpectralState(state.radius, np.where(mask, 0.0, state.data), _copy=False)


def resize(state: SpectralState, radius: int) -> SpectralState:
    """Re-embed a state at another resolution (coefficients outside the
    new ball are dropped)."""
    if radius == state.radius:
        return state
    tab = _tables(radius)
    data = np.zeros(tab.n_reps, dtype=np.complex128)
    for k, v in state.items():
        i = tab.rep_index.get(k)
        if i is not None:
            data[i] = v
    return SpectralState(radius, data, _copy=False)


def random_decaying_state(radius: int, amplitude: float = 0.3, decay: float = 3.0,
                          rng: np.random.Generator | None = None) -> SpectralState:
    """Random smooth state with |q_k| = amplitude * |k|^-decay and uniform
    random phases; the seed is the caller's responsibility to record."""
    if rng is None:
        rng = np.random.default_rng(0)
    tab = _tables(radius)
    phases = rng.uniform(0.0, 2.0 * np.pi, tab.n_reps)
    mags = amplitude * tab.norm_sq ** (-decay / 2.0)
    return SpectralState(radius, mags * np.exp(1j * phases), _copy=False)


# ---------------------------------------------------------------------------
# serialization


def state_to_csv(state: SpectralState) -> str:
    """CSV "kx,ky,re,im", one stored representative per line, with the
    resolution radius in a leading comment row."""
    buf = io.StringIO()
    buf.write("# radius=%d\n" % state.radius)
    writer = csv.writer(buf)
    writer.writerow(["kx", "ky", "re", "im"])
    for k, v in state.items():
        writer.writerow([k[0], k[1], repr(float(v.real)), repr(float(v.imag))])
    return buf.getvalue()


def state_from_csv(text: str) -> SpectralState:
    radius = None
    rows = []
    for line in text.splitlines():
        if line.startswith("#"):
            meta = line[1:].strip()
            if meta.startswith("radius="):
                radius = int(meta.split("=", 1)[1])
            continue
        rows.append(line)
    if radius is None:
        raise ValueError("missing '# radius=R' metadata row")
    reader = csv.reader(rows)
    header = next(reader)
    if header != ["kx", "ky", "re", "im"]:
        raise ValueError("unexpected CSV header %r" % header)
    coeffs = {}
    for row in reader:
        if not row:
            continue
        coeffs[(int(row[0]), int(row[1]))] = float(row[2]) + 1j * float(row[3])
    return SpectralState.from_coeffs(coeffs, radius)


def state_to_json(state: SpectralState) -> str:
    return json.dumps({
        "radius": state.radius,
        "coeffs": {"%d,%d" % k: [float(v.real), float(v.imag)]
                   for k, v in state.items() if v != 0},
    })


def state_from_json(text: str) -> SpectralState:
    data = json.loads(text)
    coeffs = {}
    for key, (re, im) in data["coeffs"].items():
        kx, ky = key.split(",")
        coeffs[(int(kx), int(ky))] = float(re) + 1j * float(im)
    return SpectralState.from_coeffs(coeffs, int(data["radius"]))
