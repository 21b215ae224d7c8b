"""Spectral states, the quadratic term against a brute-force oracle, norms,
velocity recovery and projections."""

import numpy as np
import pytest

from modecascade.lattice import norm_sq, wedge
from modecascade.spectral import (SimParams, SpectralState, energy, enstrophy,
                                  inner0, nonlinear_term, project,
                                  project_complement, random_decaying_state,
                                  resize, sobolev_norm, state_from_csv,
                                  state_from_json, state_to_csv, state_to_json,
                                  vector_field, velocity_from_vorticity,
                                  _tables)


def naive_double_sum(state):
    """Independent oracle: dq_k = sum over ordered pairs m+n=k of
    wedge(m,n) |m|^-2 q_m q_n, everything inside the resolution ball."""
    coeffs = dict(state.full_items())
    out = {}
    for k in coeffs:
        acc = 0j
        for m, qm in coeffs.items():
            n = (k[0] - m[0], k[1] - m[1])
            if n == (0, 0) or n not in coeffs:
                continue
            acc += wedge(m, n) / norm_sq(m) * qm * coeffs[n]
        out[k] = acc
    return out


# ---------------------------------------------------------------------------
# state basics


def test_conjugate_symmetry_is_structural():
    s = SpectralState.from_coeffs({(1, 0): 1 + 2j, (-1, -1): 0.5j}, 3)
    assert s.coeff((-1, 0)) == (1 + 2j).conjugate()
    assert s.coeff((1, 1)) == -0.5j
    assert s.coeff((3, 0)) == 0          # representable, unset
    assert s.coeff((5, 5)) == 0          # outside the ball


def test_conflicting_conjugate_entries_rejected():
    with pytest.raises(ValueError, match="conjugate"):
        SpectralState.from_coeffs({(1, 0): 1.0, (-1, 0): 2.0}, 3)


def test_out_of_ball_coefficients_rejected():
    with pytest.raises(ValueError, match="outside"):
        SpectralState.from_coeffs({(4, 0): 1.0}, 3)


def test_states_are_immutable():
    s = SpectralState.zeros(3)
    with pytest.raises((AttributeError, ValueError)):
        s.data[0] = 1.0


# ---------------------------------------------------------------------------
# norms


def test_norms_unit_pair():
    s = SpectralState.from_coeffs({(1, 0): 1.0}, 3)
    assert enstrophy(s) == pytest.approx(2.0, abs=1e-14)
    assert sobolev_norm(s, 1) ** 2 == pytest.approx(2.0, abs=1e-14)
    assert sobolev_norm(s, 2) ** 2 == pytest.approx(2.0, abs=1e-14)
    assert energy(s) == pytest.approx(2.0, abs=1e-14)


def test_norms_mode_21():
    s = SpectralState.from_coeffs({(2, 1): 1.0}, 3)
    assert sobolev_norm(s, 1) ** 2 == pytest.approx(10.0, rel=1e-14)
    assert energy(s) == pytest.approx(0.4, rel=1e-14)


def test_norms_zero_state():
    s = SpectralState.zeros(4)
    assert enstrophy(s) == 0 and energy(s) == 0 and sobolev_norm(s, 2) == 0


# ---------------------------------------------------------------------------
# quadratic term


def test_nonlinear_hand_example():
    s = SpectralState.from_coeffs({(1, 0): 1.0, (1, 1): 1.0}, 3)
    n = nonlinear_term(s)
    assert n.coeff((2, 1)) == pytest.approx(0.5)
    assert n.coeff((0, -1)) == pytest.approx(-0.5)
    # conjugate symmetry forces N(-k) = conj(N(k))
    assert n.coeff((-2, -1)) == pytest.approx(np.conj(n.coeff((2, 1))))


def test_nonlinear_equal_norm_pair_vanishes():
    s = SpectralState.from_coeffs({(1, 0): 1.0, (0, 1): 1.0}, 3)
    assert max(abs(v) for _, v in nonlinear_term(s).items()) == 0.0


def test_rearranged_sum_equals_double_sum_oracle():
    rng = np.random.default_rng(1234)
    checked = 0
    for trial in range(100):
        radius = 3 + trial % 4           # resolutions 3..6
        s = random_decaying_state(radius, amplitude=0.7, decay=1.5, rng=rng)
        got = nonlinear_term(s)
        want = naive_double_sum(s)
        scale = max(max(abs(v) for v in want.values()), 1e-30)
        for k, v in want.items():
            assert abs(got.coeff(k) - v) <= 1e-12 * scale
        checked += 1
    assert checked == 100


def test_vector_field_single_pair_linear():
    s = SpectralState.from_coeffs({(1, 0): 1.0}, 3)
    f = vector_field(s, SimParams(nu=0.1))
    assert f.coeff((1, 0)) == pytest.approx(-0.1)


def test_vector_field_zero_state():
    f = vector_field(SpectralState.zeros(3), SimParams(nu=0.5))
    assert enstrophy(f) == 0.0


def test_vector_field_forcing_and_asymmetry_error():
    s = SpectralState.zeros(3)
    f = vector_field(s, SimParams(), {(1, 0): 2.0 + 1.0j})
    assert f.coeff((1, 0)) == 2.0 + 1.0j
    assert f.coeff((-1, 0)) == 2.0 - 1.0j
    with pytest.raises(ValueError, match="asymmetric forcing"):
        vector_field(s, SimParams(), {(1, 0): 1.0, (-1, 0): 1.0 + 0.5j})


def test_triad_conservation_identities():
    rng = np.random.default_rng(77)
    for _ in range(100):
        s = random_decaying_state(5, amplitude=0.5, decay=2.0, rng=rng)
        n = nonlinear_term(s)
        tab = _tables(5)
        inv_lap = SpectralState(5, s.data / tab.norm_sq)
        scale = sobolev_norm(n, 0) * sobolev_norm(s, 0) + 1e-30
        assert abs(inner0(n, s)) <= 1e-12 * scale
        assert abs(inner0(n, inv_lap)) <= 1e-12 * scale


def test_enstrophy_dissipation_identity():
    rng = np.random.default_rng(8)
    s = random_decaying_state(4, amplitude=0.4, rng=rng)
    nu = 0.3
    f = vector_field(s, SimParams(nu=nu))
    assert inner0(f, s) == pytest.approx(-nu * sobolev_norm(s, 1) ** 2, rel=1e-12)


# ---------------------------------------------------------------------------
# velocity recovery


def test_velocity_cosine_column():
    s = SpectralState.from_coeffs({(1, 0): 1.0}, 3)   # w = 2 cos x1
    u1, u2 = velocity_from_vorticity(s)
    assert u1[(1, 0)] == 0
    assert u2[(1, 0)] == pytest.approx(-1j)
    assert u2[(-1, 0)] == pytest.approx(1j)


def test_velocity_identities_random():
    rng = np.random.default_rng(21)
    s = random_decaying_state(5, amplitude=0.8, decay=1.0, rng=rng)
    u1, u2 = velocity_from_vorticity(s)
    for k, q in s.full_items():
        curl = 1j * k[0] * u2[k] - 1j * k[1] * u1[k]
        div = 1j * k[0] * u1[k] + 1j * k[1] * u2[k]
        assert curl == pytest.approx(q, rel=1e-13, abs=1e-15)
        assert abs(div) <= 1e-15


def test_velocity_zero_state():
    u1, u2 = velocity_from_vorticity(SpectralState.zeros(3))
    assert all(v == 0 for v in u1.values())


# ---------------------------------------------------------------------------
# projections


def test_projection_identity_and_partition():
    rng = np.random.default_rng(3)
    s = random_decaying_state(4, amplitude=0.5, rng=rng)
    full = frozenset(k for k, _ in s.full_items())
    assert sobolev_norm(project(s, full) - s, 0) == 0
    sub = frozenset({(1, 0), (-1, 0), (2, 1), (-2, -1)})
    back = project(s, sub) + project_complement(s, sub)
    assert sobolev_norm(back - s, 0) == 0
    # idempotent
    assert sobolev_norm(project(project(s, sub), sub) - project(s, sub), 0) == 0


def test_projection_disjoint_support():
    s = SpectralState.from_coeffs({(1, 0): 1.0}, 3)
    p = project(s, {(1, 1), (-1, -1)})
    assert enstrophy(p) == 0.0


def test_projection_asymmetric_set_rejected():
    s = SpectralState.zeros(3)
    with pytest.raises(ValueError, match="asymmetric"):
        project(s, {(1, 0)})


def test_resize_round_trip():
    s = SpectralState.from_coeffs({(1, 0): 1 + 1j, (2, 1): 0.25}, 3)
    up = resize(s, 6)
    assert up.coeff((2, 1)) == 0.25
    down = resize(up, 3)
    assert sobolev_norm(down - s, 0) == 0


# ---------------------------------------------------------------------------
# serialization


def test_csv_round_trip():
    rng = np.random.default_rng(9)
    s = random_decaying_state(4, amplitude=0.3, rng=rng)
    back = state_from_csv(state_to_csv(s))
    assert back.radius == s.radius
    assert sobolev_norm(back - s, 0) == 0


def test_json_round_trip():
    s = SpectralState.from_coeffs({(1, 0): 1 - 2j, (1, 2): 0.125j}, 4)
    back = state_from_json(state_to_json(s))
    assert back.radius == 4
    assert sobolev_norm(back - s, 0) == 0
