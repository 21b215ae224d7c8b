"""Integer-lattice mode algebra for the forced vorticity system.

Modes are points of Z^2 \\ {0}, addressed as plain ``(kx, ky)`` tuples.
This module provides the wedge product, the admissible-pair test, the
level iteration K -> next_level(K), saturation decisions for symmetric
sets, and the generating-pair lookup used by the mode-cascade control
synthesis.  All norm comparisons are exact integer arithmetic on
``kx^2 + ky^2``; no floating point is involved anywhere here.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable

Mode = tuple[int, int]

_STATUS_COVERED = "covered"
_STATUS_STATIONARY = "stationary"
_STATUS_BUDGET = "budget"


def check_mode(k: Mode) -> Mode:
    """Validate a lattice mode: integer components, not the zero mode."""
    kx, ky = k
    if kx == 0 and ky == 0:
        raise ValueError("zero mode is not a valid forcing/vorticity mode")
    return (int(kx), int(ky))


def norm_sq(k: Mode) -> int:
    return k[0] * k[0] + k[1] * k[1]


def wedge(m: Mode, n: Mode) -> int:
    """External product m1*n2 - m2*n1; antisymmetric in its arguments."""
    return m[0] * n[1] - m[1] * n[0]


def admissible_pair(m: Mode, n: Mode) -> bool:
    """True iff m, n are non-collinear and have different Euclidean lengths.

    These are exactly the pairs whose quadratic interaction coefficient
    wedge(m, n) * (|m|^-2 - |n|^-2) is nonzero, so only they can feed a
    new mode m+n through the nonlinearity.
    """
    return norm_sq(m) != norm_sq(n) and wedge(m, n) != 0


def neg(k: Mode) -> Mode:
    return (-k[0], -k[1])


def is_symmetric(modes: Iterable[Mode]) -> bool:
    s = frozenset(modes)
    return all(neg(k) in s for k in s)


def symmetrize(modes: Iterable[Mode]) -> frozenset[Mode]:
    s = set()
    for k in modes:
        k = check_mode(k)
        s.add(k)
        s.add(neg(k))
    return frozenset(s)


def canonical_rep(k: Mode) -> Mode:
    """Canonical representative of the pair {k, -k}: upper half-plane,
    positive x-axis included."""
    kx, ky = check_mode(k)
    if ky > 0 or (ky == 0 and kx > 0):
        return (kx, ky)
    return (-kx, -ky)


def rep_modes(modes: Iterable[Mode]) -> tuple[Mode, ...]:
    """Sorted canonical representatives of a symmetric mode set."""
    return tuple(sorted({canonical_rep(k) for k in modes}))


def ball(radius: int) -> frozenset[Mode]:
    """All modes k with 1 <= |k|^2 <= radius^2."""
    if radius < 1:
        return frozenset()
    r2 = radius * radius
    out = set()
    for kx in range(-radius, radius + 1):
        for ky in range(-radius, radius + 1):
            if 0 < kx * kx + ky * ky <= r2:
                out.add((kx, ky))
    return frozenset(out)


def next_level(modes: Iterable[Mode]) -> frozenset[Mode]:
    """One step of the level iteration.

    Returns K together with every nonzero sum m+n over admissible pairs
    m, n in K.  The result always contains K, so iterating is monotone.
    """
    k_set = frozenset(check_mode(k) for k in modes)
    if len(k_set) > 48:
        return _next_level_bulk(k_set)
    out = set(k_set)
    members = sorted(k_set)
    for i, m in enumerate(members):
        for n in members[i + 1:]:
            if not admissible_pair(m, n):
                continue
            s = (m[0] + n[0], m[1] + n[1])
            if s != (0, 0):
                out.add(s)
    return frozenset(out)


def _next_level_bulk(k_set: frozenset[Mode]) -> frozenset[Mode]:
    """Vectorized pair enumeration for large sets."""
    import numpy as np

    arr = np.array(sorted(k_set), dtype=np.int64)
    norms = (arr * arr).sum(axis=1)
    w = arr[:, None, 0] * arr[None, :, 1] - arr[:, None, 1] * arr[None, :, 0]
    ok = (norms[:, None] != norms[None, :]) & (w != 0)
    sums = arr[:, None, :] + arr[None, :, :]
    cand = sums[ok]
    cand = cand[(cand[:, 0] != 0) | (cand[:, 1] != 0)]
    out = set(k_set)
    out.update(map(tuple, np.unique(cand, axis=0).tolist()))
    return frozenset(out)


@dataclass(frozen=True)
class SaturationChain:
    """Monotone sequence of mode-set levels with a termination status.

    ``levels[0]`` is the seed set of controlled modes; each further
    entry is ``next_level`` of the previous one.  ``status`` is one of
    "covered" (every mode of the requested ball reached), "stationary"
    (the iteration stopped growing before covering the ball, which is
    definitive within that ball) or "budget" (level budget exhausted,
    inconclusive).  ``covered_radius`` is the largest integer r not
    exceeding the requested radius with ball(r) inside the top level.
    """

    levels: tuple[frozenset[Mode], ...]
    status: str
    covered_radius: int
    requested_radius: int

    @property
    def top(self) -> frozenset[Mode]:
        return self.levels[-1]

    def level_containing(self, modes: Iterable[Mode]) -> int:
        """Index of the first level containing every given mode."""
        need = frozenset(check_mode(k) for k in modes)
        for j, level in enumerate(self.levels):
            if need <= level:
                return j
        raise ValueError("chain too shallow: modes %s not covered by any level"
                         % sorted(need - self.levels[-1]))


def _covered_radius(modes: frozenset[Mode], radius: int) -> int:
    best = 0
    for r in range(1, radius + 1):
        if ball(r) <= modes:
            best = r
        else:
            break
    return best


def saturation_chain(k1: Iterable[Mode], radius: int, max_levels: int = 32,
                     work_radius: int | None = None) -> SaturationChain:
    """Iterate next_level until the radius ball is covered, the chain is
    stationary, or the level budget runs out.

    The iteration is restricted to a working ball (twice the larger of
    the requested radius and the seed extent unless given explicitly):
    new sums outside it are discarded, which keeps runtimes bounded.  A
    "covered" verdict is always sound; "stationary" means no further
    progress is possible using modes inside the working ball.
    """
    if radius < 1:
        raise ValueError("radius must be >= 1")
    if max_levels < 1:
        raise ValueError("max_levels must be >= 1")
    seed = frozenset(check_mode(k) for k in k1)
    if work_radius is None:
        extent = max((norm_sq(k) for k in seed), default=1)
        work_radius = 2 * max(radius, int(extent ** 0.5) + 1)
    clip = ball(work_radius) | seed
    target = ball(radius)
    levels = [seed]
    status = _STATUS_BUDGET
    for _ in range(max_levels):
        current = levels[-1]
        if target <= current:
            status = _STATUS_COVERED
            break
        grown = next_level(current) & clip
        if grown == current:
            status = _STATUS_STATIONARY
            break
        levels.append(grown)
    if target <= levels[-1]:
        status = _STATUS_COVERED
    return SaturationChain(
        levels=tuple(levels),
        status=status,
        covered_radius=_covered_radius(levels[-1], radius),
        requested_radius=radius,
    )


def _generates_full_lattice(members: list[Mode]) -> bool:
    """Whether the integer span of the set is all of Z^2: the gcd of all
    pairwise wedge products must be 1 (Smith-form index of the sublattice)."""
    import math

    g = 0
    for i, m in enumerate(members):
        for n in members[i + 1:]:
            g = math.gcd(g, abs(wedge(m, n)))
            if g == 1:
                return True
    return g == 1


def is_saturating_symmetric(k1: Iterable[Mode]) -> bool:
    """Saturation test for symmetric sets.

    True iff the set contains two non-collinear members of different
    lengths and its integer span is all of Z^2.  The span condition is
    necessary: every sum the iteration can form stays inside the
    sublattice generated by the seed, so e.g. {(0,1),(0,-1),(2,0),(-2,0)}
    never reaches odd first components despite holding a non-collinear
    pair of different lengths.

    Only valid for symmetric sets (k in K implies -k in K); asymmetric
    input raises ValueError.
    """
    s = frozenset(check_mode(k) for k in k1)
    if not is_symmetric(s):
        raise ValueError("asymmetric set: saturation test requires k in K => -k in K")
    members = sorted(s)
    has_pair = any(admissible_pair(m, n)
                   for i, m in enumerate(members) for n in members[i + 1:])
    return has_pair and _generates_full_lattice(members)


def find_generating_pair(k: Mode, modes: Iterable[Mode]) -> tuple[Mode, Mode]:
    """Deterministic admissible decomposition k = m + n with m, n in the
    given set; smallest m in lexicographic order wins."""
    k = check_mode(k)
    k_set = frozenset(check_mode(j) for j in modes)
    for m in sorted(k_set):
        n = (k[0] - m[0], k[1] - m[1])
        if n == (0, 0) or n not in k_set:
            continue
        if admissible_pair(m, n):
            return m, n
    raise ValueError("no generating pair: %s is not an admissible sum over the set" % (k,))


# ---------------------------------------------------------------------------
# text / JSON formats

def parse_mode_set(text: str) -> frozenset[Mode]:
    """Parse the one-mode-per-line "kx ky" format; '#' starts a comment."""
    out = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError("line %d: expected 'kx ky', got %r" % (lineno, raw))
        try:
            k = (int(parts[0]), int(parts[1]))
        except ValueError as exc:
            raise ValueError("line %d: non-integer component in %r" % (lineno, raw)) from exc
        out.add(check_mode(k))
    return frozenset(out)


def format_mode_set(modes: Iterable[Mode]) -> str:
    return "\n".join("%d %d" % k for k in sorted(frozenset(modes))) + "\n"


def chain_to_dict(chain: SaturationChain) -> dict:
    return {
        "levels": [[list(k) for k in sorted(level)] for level in chain.levels],
        "covered_radius": chain.covered_radius,
        "status": chain.status,
    }


def chain_to_json(chain: SaturationChain, indent: int | None = None) -> str:
    return json.dumps(chain_to_dict(chain), indent=indent)


def chain_from_dict(data: dict, requested_radius: int | None = None) -> SaturationChain:
    levels = tuple(frozenset(tuple(k) for k in level) for level in data["levels"])
    return SaturationChain(
        levels=levels,
        status=data["status"],
        covered_radius=int(data["covered_radius"]),
        requested_radius=int(requested_radius if requested_radius is not None
                             else data["covered_radius"]),
    )
