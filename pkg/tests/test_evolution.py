import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mkdv5.core import InvalidArgument, make_uniform_grid
from mkdv5.evolution import (Absorber, EvolutionConfig, FieldSnapshot, StepSizeError,
                             etdrk4_coefficients, energy, evolve, mass, nonlinearity,
                             read_checkpoint, read_snapshot, rescaled_profile, spectral_derivative,
                             spectral_eval, write_checkpoint, write_snapshot)
from mkdv5.scattering import InitialProfile, gauss_profile, sech_profile


def test_spectral_derivative_sine():
    g = make_uniform_grid(math.pi, 32)
    x = g.points
    np.testing.assert_allclose(spectral_derivative(np.sin(3 * x), g), 3 * np.cos(3 * x), atol=1e-12)
    np.testing.assert_allclose(spectral_derivative(np.sin(3 * x), g, 2), -9 * np.sin(3 * x), atol=1e-11)


def test_spectral_eval_reproduces_nodes_and_derivatives():
    g = make_uniform_grid(math.pi, 16)
    u = np.cos(2 * g.points) + 0.3 * np.sin(5 * g.points) + 0.1 * np.cos(8 * g.points)
    uh = np.fft.rfft(u)
    np.testing.assert_allclose(spectral_eval(uh, g, g.points), u, atol=1e-13)
    xs = np.array([0.123, -2.5, 3.0])
    want = -2 * np.sin(2 * xs) + 1.5 * np.cos(5 * xs)
    np.testing.assert_allclose(spectral_eval(uh[:-1].tolist() + [0], g, xs, 1), want, atol=1e-12)


# --- nonlinearity ---------------------------------------------------------------

def test_constant_field_has_no_nonlinearity():
    g = make_uniform_grid(5.0, 64)
    for form in ("expanded", "divergence"):
        np.testing.assert_allclose(nonlinearity(np.full(g.n, 0.7), g, form), 0.0, atol=1e-13)


def test_forms_agree_on_sine():
    g = make_uniform_grid(math.pi, 64)
    u = np.sin(g.points)
    d = nonlinearity(u, g, "divergence") - nonlinearity(u, g, "expanded")
    assert np.max(np.abs(d)) <= 1e-10


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=12, max_size=12))
def test_forms_agree_band_limited(coef):
    g = make_uniform_grid(math.pi, 128)
    x = g.points
    u = sum(c * (np.cos(j // 2 * x + 1) if j % 2 else np.sin((j // 2 + 1) * x))
            for j, c in enumerate(coef)) / 3
    d = nonlinearity(u, g, "divergence") - nonlinearity(u, g, "expanded")
    scale = max(1.0, float(np.max(np.abs(nonlinearity(u, g, "expanded")))))
    assert np.max(np.abs(d)) <= 1e-9 * scale


def test_nonlinearity_rejects():
    g = make_uniform_grid(1.0, 8)
    with pytest.raises(InvalidArgument):
        nonlinearity(np.full(8, np.nan), g)
    with pytest.raises(InvalidArgument):
        nonlinearity(np.zeros(8), g, "weak")
    with pytest.raises(InvalidArgument):
        nonlinearity(np.zeros(4), g)


# --- conserved quantities ----------------------------------------------------------

def test_mass_energy_zero():
    g = make_uniform_grid(4.0, 32)
    s = FieldSnapshot(g, 0.0, np.zeros(g.n))
    assert mass(s) == 0 and energy(s) == 0


def test_mass_energy_sech():
    g = make_uniform_grid(40.0, 1024)
    s = FieldSnapshot(g, 0.0, 1 / np.cosh(g.points))
    assert mass(s) == pytest.approx(2.0, abs=1e-12)
    assert energy(s) == pytest.approx(2.0, abs=1e-12)


# --- ETDRK4 -------------------------------------------------------------------------

def test_etdrk4_coefficients_vs_closed_form():
    lin = np.array([-2.0j, 5.0j, -40.0j, -1.0 + 3.0j])
    dt = 0.5
    E, E2, Q, f1, f2, f3 = etdrk4_coefficients(lin, dt)
    z = dt * lin
    np.testing.assert_allclose(Q, dt * (np.exp(z / 2) - 1) / z, rtol=1e-12)
    np.testing.assert_allclose(f1, dt * (-4 - z + np.exp(z) * (4 - 3 * z + z ** 2)) / z ** 3, rtol=1e-11)
    np.testing.assert_allclose(f2, dt * (2 + z + np.exp(z) * (-2 + z)) / z ** 3, rtol=1e-11)
    np.testing.assert_allclose(f3, dt * (-4 - 3 * z - z ** 2 + np.exp(z) * (4 - z)) / z ** 3, rtol=1e-11)


def test_etdrk4_coefficients_at_zero():
    E, E2, Q, f1, f2, f3 = etdrk4_coefficients(np.array([0.0 + 0j]), 0.1)
    assert Q[0] == pytest.approx(0.05, rel=1e-13)
    assert f1[0] == pytest.approx(0.1 / 6, rel=1e-13)
    assert f2[0] == pytest.approx(0.1 / 6, rel=1e-13)
    assert f3[0] == pytest.approx(0.1 / 6, rel=1e-13)


# --- time stepping --------------------------------------------------------------------

def test_zero_stays_zero():
    g = make_uniform_grid(10.0, 64)
    snaps = evolve(InitialProfile(g, np.zeros(g.n)), EvolutionConfig(dt=0.01, t_end=0.5))
    assert all(np.all(s.values == 0) for s in snaps)


def test_linear_mode_small_amplitude():
    g = make_uniform_grid(math.pi, 32)
    eps = 1e-4
    p = InitialProfile(g, eps * np.cos(g.points), require_decay=False)
    u = evolve(p, EvolutionConfig(dt=1e-3, t_end=0.5))[-1].values
    np.testing.assert_allclose(u, eps * np.cos(g.points - 0.5), atol=1e-11)


def test_snapshot_stride():
    g = make_uniform_grid(32.0, 256)
    snaps = evolve(sech_profile(g, 0.2), EvolutionConfig(dt=0.01, t_end=0.1, snapshot_stride=5,
                                                          conservation_tol=None))
    assert [s.t for s in snaps] == pytest.approx([0.0, 0.05, 0.1])


def test_conservation_short_run():
    g = make_uniform_grid(32.0, 512)
    snaps = evolve(sech_profile(g, 0.3), EvolutionConfig(dt=1e-4, t_end=0.02))
    s0, s1 = snaps[0], snaps[-1]
    assert abs(s1.mass - s0.mass) <= 1e-10 * s0.mass
    assert abs(s1.energy - s0.energy) <= 1e-10 * s0.energy


def test_conservation_drift_raises_step_size_error():
    g = make_uniform_grid(32.0, 512)
    with pytest.raises(StepSizeError, match="smaller dt"):
        evolve(sech_profile(g, 0.3), EvolutionConfig(dt=1e-2, t_end=0.5, conservation_tol=1e-12))


def test_forms_give_same_evolution():
    # resolved grid: the forms then differ only by rounding
    g = make_uniform_grid(32.0, 512)
    p = sech_profile(g, 0.3)
    a = evolve(p, EvolutionConfig(dt=1e-3, t_end=0.05, form="divergence",
                                    conservation_tol=None))[-1].values
    b = evolve(p, EvolutionConfig(dt=1e-3, t_end=0.05, form="expanded",
                                    conservation_tol=None))[-1].values
    assert np.max(np.abs(a - b)) < 1e-12


def test_config_validation():
    with pytest.raises(InvalidArgument):
        EvolutionConfig(dt=0.0, t_end=1.0)
    with pytest.raises(InvalidArgument):
        EvolutionConfig(dt=0.1, t_end=1.0, dealias_fraction=1.5)
    with pytest.raises(InvalidArgument):
        EvolutionConfig(dt=0.1, t_end=1.0, scheme="rk4")
    with pytest.raises(InvalidArgument):
        Absorber(0.0)
    assert EvolutionConfig(dt=0.1, t_end=1.0).steps == 10


def test_absorber_layer():
    g = make_uniform_grid(100.0, 512)
    sig = Absorber(20.0, 50.0).sigma(g)
    assert np.all(sig[np.abs(g.points) < 80] == 0)
    assert sig[0] == pytest.approx(50.0)
    # a right-moving packet is removed once it reaches the seam
    xi0 = 2.0  # group velocity 5 xi0^4 = 80
    u0 = 0.01 * np.exp(-(g.points / 5) ** 2) * np.cos(xi0 * g.points)
    cfg = EvolutionConfig(dt=0.005, t_end=5.0, absorber=Absorber(40.0))
    out = evolve(InitialProfile(g, u0), cfg)[-1]
    assert out.mass < 1e-3 * mass(FieldSnapshot(g, 0.0, u0))


# --- rescaling ------------------------------------------------------------------------

def test_rescale_identity_and_group():
    g = make_uniform_grid(64.0, 1024)
    p = gauss_profile(g, 0.1, 4.0)
    np.testing.assert_array_equal(rescaled_profile(p, 1.0).values, p.values)
    twice = rescaled_profile(rescaled_profile(p, 2.0), 2.0)
    np.testing.assert_allclose(twice.values, rescaled_profile(p, 4.0).values, atol=1e-12)
    np.testing.assert_allclose(rescaled_profile(p, 2.0).values,
                               gauss_profile(g, 0.2, 2.0).values, atol=1e-14)


def test_rescale_overflow():
    g = make_uniform_grid(16.0, 256)
    with pytest.raises(InvalidArgument):
        rescaled_profile(gauss_profile(g, 0.1, 3.0), 0.25)
    with pytest.raises(InvalidArgument):
        rescaled_profile(gauss_profile(g, 0.1, 1.0), -1.0)


# --- file surfaces ---------------------------------------------------------------------

def _snap():
    g = make_uniform_grid(8.0, 64)
    return FieldSnapshot(g, 1.25, 0.3 / np.cosh(g.points) + 1e-17 * g.points, dt=0.005)


def test_snapshot_round_trip(tmp_path):
    s = _snap()
    write_snapshot(s, tmp_path / "s.csv", tmp_path / "s.json")
    back = read_snapshot(tmp_path / "s.csv", tmp_path / "s.json")
    np.testing.assert_array_equal(back.values, s.values)
    assert (back.t, back.dt, back.grid) == (s.t, s.dt, s.grid)
    assert back.mass == s.mass


def test_checkpoint_round_trip(tmp_path):
    s = _snap()
    write_checkpoint(s, tmp_path / "c.bin")
    raw = (tmp_path / "c.bin").read_bytes()
    assert raw[:5] == b"MKDV5" and raw[5] == 1
    assert len(raw) == 5 + 1 + 8 + 3 * 8 + 8 * 64
    back = read_checkpoint(tmp_path / "c.bin")
    np.testing.assert_array_equal(back.values, s.values)
    assert (back.t, back.dt, back.grid) == (s.t, s.dt, s.grid)


def test_checkpoint_bad_magic(tmp_path):
    (tmp_path / "c.bin").write_bytes(b"XXXXX" + bytes(100))
    with pytest.raises(InvalidArgument):
        read_checkpoint(tmp_path / "c.bin")
