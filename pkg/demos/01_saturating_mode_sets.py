"""Which small mode sets can control the whole flow?

The quadratic term couples modes m, n into m+n only when the pair is
non-collinear and of different lengths.  Iterating that coupling from a
seed set of directly forced modes grows a chain of reachable-mode
levels; a seed whose chain eventually swallows every lattice mode is
called saturating, and saturation is what makes low-mode control of the
vorticity equation possible.

This script grows chains from a few seeds and prints the verdicts,
including the classic four-mode saturating set and two instructive
failures: an all-unit-length set (no admissible pairs at all) and a set
that traps the chain inside a proper sublattice.
"""

import modecascade as mc

FOUR = mc.symmetrize({(1, 0), (1, 1)})
UNIT = mc.symmetrize({(1, 0), (0, 1)})
SUBLATTICE = mc.symmetrize({(0, 1), (2, 0)})


def show(name, seed, radius=6):
    chain = mc.saturation_chain(seed, radius=radius, max_levels=32)
    print("%-22s %-11s levels=%d sizes=%s" % (
        name, chain.status, len(chain.levels), [len(l) for l in chain.levels]))
    print("%22s saturating (symmetric criterion): %s" % (
        "", mc.is_saturating_symmetric(seed)))


print("=== chain growth from three seeds (ball radius 6) ===")
show("four modes", FOUR)
show("unit lengths", UNIT)
show("even-x sublattice", SUBLATTICE)

print()
print("=== the four-mode chain, level by level ===")
chain = mc.saturation_chain(FOUR, radius=3, max_levels=10)
for j, level in enumerate(chain.levels):
    fresh = sorted(level - (chain.levels[j - 1] if j else frozenset()))
    print("level %d: %2d modes, new: %s" % (j + 1, len(level), fresh))

print()
print("=== generating pairs used by the cascade synthesis ===")
for k in ((2, 1), (0, 1)):
    m, n = mc.find_generating_pair(k, FOUR)
    coeff = mc.wedge(m, n) * (1 / mc.norm_sq(m) - 1 / mc.norm_sq(n))
    print("mode %s = %s + %s, interaction coefficient %.3f" % (k, m, n, coeff))

print()
print("=== why the sublattice seed fails ===")
top = mc.saturation_chain(SUBLATTICE, radius=4, max_levels=32).top
odd = [k for k in sorted(top) if k[0] % 2]
print("modes with odd first component reached:", odd or "none")
print("the chain lives in the even-x sublattice; (1, 0) is unreachable.")
