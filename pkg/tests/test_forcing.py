"""Forcing programs: primitives against quadrature, relaxation and delta
metrics, cascade amplitudes, packet averaging, chattering."""

import json
import math

import numpy as np
import pytest
from scipy.integrate import quad

from modecascade.forcing import (ChannelMap, Constant, ExtremeSet,
                                 ForcingProgram, Oscillatory, Zero,
                                 cascade_packet, chattering_approximation,
                                 constant_program, cos_pair_segment,
                                 delta_distance, oscillatory_amplitudes,
                                 program_from_json, program_to_json,
                                 relaxation_distance, zero_program)
from modecascade.lattice import norm_sq, symmetrize, wedge

PAIR_SUPPORT = symmetrize({(1, 0), (1, 1)})
SINGLE = symmetrize({(1, 0)})


def single_channel_program(value, duration, support=SINGLE, mode=(1, 0)):
    return constant_program(support, {mode: value}, duration)


# ---------------------------------------------------------------------------
# evaluate / primitive


def test_evaluate_constant_segment():
    prog = single_channel_program(1 + 0j, 2.0)
    assert prog.evaluate(0.7)[(1, 0)] == 1 + 0j
    assert prog.evaluate(0.7)[(-1, 0)] == 1 - 0j


def test_evaluate_oscillatory_at_zero():
    seg = Oscillatory.from_cos_pairs(1.0, 10.0, [((1, 0), 2.0)])
    prog = ForcingProgram(SINGLE, [seg])
    assert prog.evaluate(0.0)[(1, 0)] == pytest.approx(20.0)   # A*omega*cos(0)


def test_evaluate_out_of_range():
    prog = single_channel_program(1.0, 1.0)
    with pytest.raises(ValueError, match="time out of range"):
        prog.evaluate(1.5)


def test_primitive_of_base_ramp_reaches_p():
    # constant v = p / tau integrates to exactly p at tau
    tau, p = 0.01, 0.375 - 0.5j
    prog = single_channel_program(p / tau, tau)
    assert prog.primitive(tau)[(1, 0)] == pytest.approx(p)


def test_primitive_oscillatory_closed_form_and_bound():
    omega, amp = 37.0, 1.5
    seg = Oscillatory.from_cos_pairs(1.0, omega, [((1, 0), amp)])
    prog = ForcingProgram(SINGLE, [seg])
    for t in (0.0, 0.1, 0.31, 1.0):
        assert prog.primitive(t)[(1, 0)] == pytest.approx(amp * math.sin(omega * t))
        assert abs(prog.primitive(t)[(1, 0)]) <= amp + 1e-12


def test_primitive_zero_program():
    prog = zero_program(1.0, SINGLE)
    assert prog.primitive(0.6) == {}


def test_primitive_matches_quadrature():
    rng = np.random.default_rng(4)
    segs = [
        Constant(0.3, {(1, 0): 0.7 - 0.2j, (1, 1): 0.1j}),
        Oscillatory.from_cos_pairs(0.45, 21.0, [((1, 0), 0.8), ((1, 1), -0.3)],
                                   phase=0.4),
        Zero(0.25),
    ]
    prog = ForcingProgram(PAIR_SUPPORT, segs)
    for rep in ((1, 0), (1, 1)):
        for t in rng.uniform(0, 1.0, 5):
            brk = [float(b) for b in prog.starts if 0 < b < t]
            re = quad(lambda s: prog.evaluate(s).get(rep, 0j).real, 0, t,
                      limit=400, epsabs=1e-10, points=brk)[0]
            im = quad(lambda s: prog.evaluate(s).get(rep, 0j).imag, 0, t,
                      limit=400, epsabs=1e-10, points=brk)[0]
            assert prog.primitive(t).get(rep, 0j) == pytest.approx(
                re + 1j * im, abs=1e-8)


def test_primitive_continuous_across_segments():
    segs = [Constant(0.5, {(1, 0): 1.0}),
            Oscillatory.from_cos_pairs(0.5, 30.0, [((1, 0), 0.5)])]
    prog = ForcingProgram(SINGLE, segs)
    below = prog.primitive(0.5 - 1e-9)[(1, 0)]
    above = prog.primitive(0.5 + 1e-9)[(1, 0)]
    assert abs(above - below) < 1e-6


# ---------------------------------------------------------------------------
# relaxation metric


def test_relaxation_fast_oscillation_law():
    # v = omega^(1/2) cos(omega t): rx norm is exactly omega^(-1/2) once a
    # quarter period fits the horizon
    for omega in (1e2, 1e3, 1e4):
        seg = Oscillatory.from_cos_pairs(1.0, omega, [((1, 0), omega ** -0.5)])
        f = ForcingProgram(SINGLE, [seg])
        assert relaxation_distance(f, zero_program(1.0, SINGLE)) == pytest.approx(
            omega ** -0.5, abs=1e-9)


def test_relaxation_identical_programs():
    f = single_channel_program(0.3 + 0.1j, 1.0)
    assert relaxation_distance(f, f) == 0.0


def test_relaxation_constant_vs_zero():
    c, T = 0.75, 2.0
    f = single_channel_program(c, T)
    assert relaxation_distance(f, zero_program(T, SINGLE)) == pytest.approx(c * T)


def test_relaxation_duration_mismatch():
    with pytest.raises(ValueError, match="duration mismatch"):
        relaxation_distance(single_channel_program(1.0, 1.0),
                            zero_program(2.0, SINGLE))


def test_relaxation_below_l1_distance():
    rng = np.random.default_rng(17)
    cmap = ChannelMap(PAIR_SUPPORT)
    for _ in range(20):
        def random_pwc():
            fracs = rng.dirichlet(np.ones(rng.integers(1, 5)))
            segs = [Constant(fr, cmap.vector_to_rep_coeffs(rng.uniform(-1, 1, 4)))
                    for fr in fracs]
            return ForcingProgram(PAIR_SUPPORT, segs)

        f, g = random_pwc(), random_pwc()
        rx = relaxation_distance(f, g)
        edges = np.unique(np.concatenate([f.starts, g.starts]))
        l1 = sum(np.linalg.norm(cmap.coeffs_to_vector(f.evaluate(0.5 * (a + b)))
                                - cmap.coeffs_to_vector(g.evaluate(0.5 * (a + b))))
                 * (b - a) for a, b in zip(edges[:-1], edges[1:]))
        assert rx <= l1 + 1e-12


def test_fast_oscillation_rx_decay_uniform_in_omega():
    amp = 0.8
    prev = math.inf
    for omega in (10, 20, 40, 80, 160):
        seg = Oscillatory.from_cos_pairs(1.0, omega, [((1, 0), amp)])
        rx = relaxation_distance(ForcingProgram(SINGLE, [seg]),
                                 zero_program(1.0, SINGLE))
        assert rx <= amp + 1e-12
        assert rx <= prev + 1e-12
        prev = rx


# ---------------------------------------------------------------------------
# delta metric


def test_delta_distance_cases():
    a = single_channel_program(1.0, 1.0)
    b = single_channel_program(2.0, 1.0)
    assert delta_distance(a, a) == 0.0
    assert delta_distance(a, b) == pytest.approx(1.0)
    first = ForcingProgram(SINGLE, [Constant(0.25, {(1, 0): 3.0}),
                                    Constant(0.75, {(1, 0): 1.0})])
    assert delta_distance(first, a) == pytest.approx(0.25)


def test_delta_distance_rejects_oscillatory():
    seg = Oscillatory.from_cos_pairs(1.0, 10.0, [((1, 0), 1.0)])
    with pytest.raises(ValueError, match="non-piecewise-constant"):
        delta_distance(ForcingProgram(SINGLE, [seg]), zero_program(1.0, SINGLE))


# ---------------------------------------------------------------------------
# cascade amplitudes


def test_oscillatory_amplitudes_hand_values():
    assert oscillatory_amplitudes((2, 1), (1, 0), (1, 1), 1.0) == (2.0, 2.0)
    assert oscillatory_amplitudes((2, 1), (1, 0), (1, 1), -1.0) == (2.0, -2.0)


def test_oscillatory_amplitudes_solve_the_product_equation():
    for amp in (0.5, -2.0, 3.7):
        a_m, a_n = oscillatory_amplitudes((2, 1), (1, 0), (1, 1), amp)
        coeff = wedge((1, 0), (1, 1)) * (1 / norm_sq((1, 0)) - 1 / norm_sq((1, 1)))
        assert a_m * a_n * coeff == pytest.approx(2 * amp)
        assert abs(a_m) == pytest.approx(abs(a_n))
        assert a_m > 0


def test_oscillatory_amplitudes_inadmissible():
    with pytest.raises(ValueError, match="inadmissible"):
        oscillatory_amplitudes((1, 1), (1, 0), (0, 1), 1.0)


def packet_mean_drives(seg, m, n, duration, points=200001):
    """Quadrature oracle for the averaged quadratic drive of a packet."""
    ts = np.linspace(0, duration, points)

    def prim(rep):
        out = np.zeros_like(ts, dtype=complex)
        for k, h, c in seg.components:
            if k == rep:
                out += c * (np.exp(1j * h * seg.omega * ts) - 1)
        return out

    vm, vn = prim(m), prim(n)
    coeff = wedge(m, n) * (1 / norm_sq(m) - 1 / norm_sq(n))
    on_sum = coeff * np.trapezoid(vm * vn, ts) / duration
    on_diff = -coeff * np.trapezoid(vm * np.conj(vn), ts) / duration
    return on_sum, on_diff, vm, vn


@pytest.mark.parametrize("target", [1.0, -0.6, 0.8j, 0.3 - 0.4j])
def test_cascade_packet_drives_sum_mode_only(target):
    m, n = (1, 0), (1, 1)
    seg = cascade_packet((2, 1), m, n, target, 150.0, 0.5)
    on_sum, on_diff, vm, vn = packet_mean_drives(seg, m, n, 0.5)
    assert on_sum == pytest.approx(target, abs=1e-8)
    assert abs(on_diff) < 1e-8                       # no difference-mode drive
    assert abs(vm[-1]) < 1e-10 and abs(vn[-1]) < 1e-10   # primitives close up
    ts = np.linspace(0, 0.5, len(vm))
    assert abs(np.trapezoid(vm, ts)) < 1e-8          # zero-mean primitives


def test_plain_cos_pair_has_difference_byproduct():
    # the single-harmonic construction drives the difference pair with the
    # opposite mean rate; this is why the packet construction exists
    m, n = (1, 0), (1, 1)
    seg = cos_pair_segment((2, 1), m, n, 1.0, 150.0, 0.5)
    on_sum, on_diff, _, _ = packet_mean_drives(seg, m, n, 0.5)
    assert on_sum == pytest.approx(1.0, abs=1e-6)
    assert on_diff == pytest.approx(-1.0, abs=1e-6)


def test_cascade_packet_zero_target_is_zero_segment():
    assert isinstance(cascade_packet((2, 1), (1, 0), (1, 1), 0.0, 100.0, 0.5), Zero)


# ---------------------------------------------------------------------------
# chattering


def test_extreme_set_geometry():
    es = ExtremeSet(2.0, 3)
    assert es.vectors().shape == (6, 3)
    assert es.contains(np.array([1.0, -0.5, 0.5]))
    assert not es.contains(np.array([1.5, -1.0, 0.0]))


def test_chattering_extreme_input_unchanged():
    cmap = ChannelMap(PAIR_SUPPORT)
    prog = constant_program(PAIR_SUPPORT, {(1, 0): 1.0}, 1.0)
    out = chattering_approximation(prog, 1.0, 7)
    assert len(out.segments) == 1
    assert relaxation_distance(out, prog) <= 1e-12
    assert out.total_duration == pytest.approx(1.0)


def test_chattering_zero_program_half_segments():
    prog = constant_program(PAIR_SUPPORT, {}, 1.0)
    L = 4
    out = chattering_approximation(prog, 1.0, L)
    assert len(out.segments) == 2 * L
    rx = relaxation_distance(out, prog)
    assert rx <= 1.0 * 1.0 / (2 * L) + 1e-12


def test_chattering_bound_and_window_endpoints():
    rng = np.random.default_rng(42)
    cmap = ChannelMap(PAIR_SUPPORT)
    kappa, T, A = 4, 1.0, 1.0
    for _ in range(10):
        fracs = rng.dirichlet(np.ones(rng.integers(1, 5)))
        segs = []
        for fr in fracs:
            v = rng.uniform(-1, 1, kappa)
            v *= rng.uniform(0, 1) / np.abs(v).sum()
            segs.append(Constant(fr * T, cmap.vector_to_rep_coeffs(v)))
        prog = ForcingProgram(PAIR_SUPPORT, segs)
        last = math.inf
        for L in (5, 20, 100):
            out = chattering_approximation(prog, A, L)
            rx = relaxation_distance(out, prog)
            assert rx <= 2 * A * math.sqrt(kappa) * T / L + 1e-12
            assert rx <= last + 1e-12
            last = rx
            edges = np.linspace(0, T, L + 1)
            gap = np.abs(out.channel_primitive(edges, cmap)
                         - prog.channel_primitive(edges, cmap)).max()
            assert gap <= 1e-12


def test_chattering_rejects_values_outside_hull():
    prog = constant_program(PAIR_SUPPORT, {(1, 0): 2.0}, 1.0)
    with pytest.raises(ValueError, match="outside convex hull"):
        chattering_approximation(prog, 1.0, 4)


def test_chattering_slack_channel_is_respected():
    prog = constant_program(PAIR_SUPPORT, {}, 1.0)
    out = chattering_approximation(prog, 1.0, 1, slack_channel=2)
    cmap = ChannelMap(PAIR_SUPPORT)
    rep, part = cmap.channel(2)
    assert all(set(seg.values) == {rep} for seg in out.segments)


# ---------------------------------------------------------------------------
# serialization


def test_program_json_round_trip_all_kinds():
    segs = [
        Constant(0.25, {(1, 0): 1 - 1j}),
        Oscillatory.from_cos_pairs(0.25, 50.0, [((1, 0), 2.0), ((1, 1), -1.0)],
                                   phase=0.3),
        cascade_packet((2, 1), (1, 0), (1, 1), 0.5j, 80.0, 0.25),
        Zero(0.25),
    ]
    prog = ForcingProgram(symmetrize({(1, 0), (1, 1), (2, 1)}), segs)
    text = program_to_json(prog)
    back = program_from_json(text)
    assert program_to_json(back) == text
    cmap = ChannelMap(prog.support)
    ts = np.linspace(0, 1.0, 301)
    assert np.abs(back.channel_primitive(ts, cmap)
                  - prog.channel_primitive(ts, cmap)).max() < 1e-12


def test_plain_oscillatory_serializes_with_pairs_schema():
    seg = Oscillatory.from_cos_pairs(1.0, 10.0, [((1, 0), 2.0)], phase=0.1)
    data = json.loads(program_to_json(ForcingProgram(SINGLE, [seg])))
    entry = data["segments"][0]
    assert entry["kind"] == "oscillatory"
    assert "pairs" in entry and entry["phase"] == pytest.approx(0.1)
    assert entry["pairs"][0]["amp"] == pytest.approx(2.0)


def test_constant_segment_requires_conjugate_symmetry():
    with pytest.raises(ValueError, match="asymmetric forcing"):
        Constant(1.0, {(1, 0): 1.0, (-1, 0): 2.0})


def test_channel_map_round_trip():
    cmap = ChannelMap(PAIR_SUPPORT)
    vec = np.array([0.5, -0.25, 1.5, 2.0])
    coeffs = cmap.vector_to_coeffs(vec)
    assert coeffs[(1, 0)] == 0.5 - 0.25j
    assert coeffs[(-1, 0)] == 0.5 + 0.25j
    assert np.allclose(cmap.coeffs_to_vector(coeffs), vec)


def test_program_json_unknown_kind_rejected():
    with pytest.raises(ValueError, match="unknown segment kind"):
        program_from_json(json.dumps({"support": [[1, 0], [-1, 0]],
                                      "segments": [{"kind": "wavelet",
                                                    "duration": 1.0}]}))


def test_extreme_set_validation():
    with pytest.raises(ValueError):
        ExtremeSet(-1.0, 4)
    with pytest.raises(ValueError):
        ExtremeSet(1.0, 0)
