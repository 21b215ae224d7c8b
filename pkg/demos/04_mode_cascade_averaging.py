"""Driving an unforced mode through the average of a fast pair oscillation.

Mode k = m+n is not directly forced, but oscillating modes m and n fast
makes the quadratic term deposit a steady drive on k: the product of the
two oscillating primitives has a nonzero mean.  This script measures how
well that emulation matches a genuinely forced reference as the
frequency grows, and shows the one real subtlety of the construction.

Two packet shapes are compared.  Equal plain cosines on m and n (the
textbook choice) pump the sum mode at the right rate but also pump the
difference mode m-n at the opposite rate; the deviation from the
reference then never decays.  Counter-rotating two-harmonic packets
cancel the difference-mode average exactly, and the deviation falls
like 1/omega.
"""

import numpy as np

import modecascade as mc

K, M, N = (2, 1), (1, 0), (1, 1)
DIFF = (M[0] - N[0], M[1] - N[1])
s0 = mc.SpectralState.zeros(6)
icfg = mc.IntegratorConfig(dt_base=1e-3, record_stride=10)
omegas = [50, 100, 200, 400]

print("target: emulate constant unit forcing on mode %s via pair %s, %s"
      % (K, M, N))
print("difference mode %s is the potential casualty" % (DIFF,))
print()

for construction in ("counter_rotating", "plain"):
    print("=== %s packets ===" % construction)
    on_pair = []
    devs = mc.averaging_experiment(K, (M, N), 1.0, omegas, 0.5, s0,
                                   mc.SimParams(), icfg,
                                   construction=construction,
                                   pair_deviation=on_pair)
    for w, d, p in zip(omegas, devs, on_pair):
        print("  omega=%4d  off-pair D = %.4f   on-pair mismatch = %.4f"
              % (w, d, p))
    print("  (the on-pair mismatch is where the oscillation rides; the")
    print("   steering synthesis settles it with a terminal ramp)")
    print()

print("=== where does the plain construction's deviation live? ===")
seg = mc.cos_pair_segment(K, M, N, 1.0, 400.0, 0.5)
prog = mc.ForcingProgram(mc.symmetrize({M, N}), [seg])
final = mc.integrate(s0, mc.SimParams(), prog, icfg).final
print("plain run, final |q| per mode:")
for mode in (K, DIFF, (0, 1)):
    print("  q%s = %.4f" % (mode, abs(final.coeff(mode))))
print("the difference pair carries an O(1) spurious component; the")
print("counter-rotating packet leaves it empty:")
seg = mc.cascade_packet(K, M, N, 1.0, 400.0, 0.5)
prog = mc.ForcingProgram(mc.symmetrize({M, N}), [seg])
final = mc.integrate(s0, mc.SimParams(), prog, icfg).final
for mode in (K, DIFF):
    print("  q%s = %.4f" % (mode, abs(final.coeff(mode))))
