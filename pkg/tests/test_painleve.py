import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra import numpy as hnp

from mkdv5.core import InvalidArgument, make_uniform_grid
from mkdv5.evolution import FieldSnapshot
from mkdv5.painleve import (DivergenceError, PainleveProfile, extract_self_similar, fd_derivative,
                            integrate_ivp, linear_oracle, ode_residual, read_profile_csv,
                            self_similar_field, write_profile_csv)

Y = np.linspace(-3.0, 3.0, 61)


def test_fd_derivative_polynomial_exact():
    y = np.linspace(-1, 2, 31)
    np.testing.assert_allclose(fd_derivative(y ** 8, y[1] - y[0]), 8 * y ** 7, atol=1e-9)


def test_residual_zero():
    z = np.zeros_like(Y)
    assert np.all(ode_residual(PainleveProfile(Y, z, z, z, z)) == 0)


def test_residual_substitution():
    z = np.zeros_like(Y)
    p = PainleveProfile(Y, Y.copy(), np.ones_like(Y), z, z)
    want = -40 * Y + 96 * Y ** 5 - 4 * Y ** 2
    np.testing.assert_allclose(ode_residual(p), want, rtol=1e-14, atol=1e-14 * np.max(np.abs(want)))


@given(hnp.arrays(float, (4, Y.size), elements=st.floats(-10, 10)))
def test_residual_odd(a):
    p = PainleveProfile(Y, *a)
    np.testing.assert_array_equal(ode_residual(-p), -ode_residual(p))


def test_profile_validation():
    z = np.zeros(20)
    with pytest.raises(InvalidArgument):
        PainleveProfile(np.linspace(0, 1, 19), z, z, z, z)
    with pytest.raises(InvalidArgument):
        PainleveProfile(np.geomspace(1, 2, 20), z, z, z, z)
    with pytest.raises(InvalidArgument):
        PainleveProfile(np.linspace(0, 1, 20), z, z, z, z, source="guess")
    with pytest.raises(InvalidArgument):
        PainleveProfile(np.linspace(0, 1, 8), z[:8], z[:8], z[:8], z[:8])


# --- integration -------------------------------------------------------------------

def test_integrate_zero_state():
    p = integrate_ivp(0.0, [0, 0, 0, 0], 4.0)
    assert np.all(p.u == 0) and p.source == "integrated"


@pytest.mark.parametrize("state", [[0.1, 0.0, -0.2, 0.05], [1e-3, -1e-3, 0.0, 0.0]])
def test_integrate_residual_consistent(state):
    tol = 1e-10
    p = integrate_ivp(0.0, state, 1.5, tol=tol)
    assert np.max(np.abs(ode_residual(p))) <= 10 * tol


def test_integrate_backward_sorted():
    p = integrate_ivp(1.0, [0.01, 0, 0, 0], -1.0)
    assert p.y[0] == -1.0 and p.y[-1] == 1.0
    assert p.u[-1] == pytest.approx(0.01)


def test_integrate_blowup():
    with pytest.raises(DivergenceError) as err:
        integrate_ivp(0.0, [10, 10, 10, 10], 5.0)
    assert 0 < err.value.y < 5


def test_integrate_guards():
    with pytest.raises(InvalidArgument):
        integrate_ivp(0.0, [0, 0, 0], 1.0)
    with pytest.raises(InvalidArgument):
        integrate_ivp(0.0, [0, 0, 0, 0], 60.0)
    with pytest.raises(InvalidArgument):
        integrate_ivp(0.0, [np.nan, 0, 0, 0], 1.0)


def test_small_data_follows_linear_oracle():
    # frozen constant: |nonlinear - linear| / eps^3 on [0, 5] from a 1e-13 run
    ys = np.linspace(0.0, 5.0, 501)
    for eps in (1e-4, 2e-4):
        lin = linear_oracle(ys, eps)
        state = [lin.u[0], lin.du[0], lin.d2u[0], lin.d3u[0]]
        p = integrate_ivp(0.0, state, 5.0, tol=1e-13)
        ratio = np.max(np.abs(p.u - lin.u)) / eps ** 3
        assert ratio == pytest.approx(8517.25, rel=1e-3)


# --- linear oracle ------------------------------------------------------------------

def test_linear_oracle_basics():
    y = np.linspace(-5, 8, 1301)
    assert np.all(linear_oracle(y, 0.0).u == 0)
    a, b = linear_oracle(y, 1e-3), linear_oracle(y, 2e-3)
    np.testing.assert_allclose(b.u, 2 * a.u, rtol=0, atol=1e-18)
    i0 = int(np.argmin(np.abs(y)))
    assert a.u[i0] == pytest.approx(1e-3, rel=1e-12)
    with pytest.raises(InvalidArgument):
        linear_oracle(y, 0.5)


def test_linear_oracle_residual():
    y = np.linspace(-5, 8, 1301)
    s = 1e-2
    p = linear_oracle(y, s)
    r = fd_derivative(p.d3u, p.dy) - 4 * y * p.u
    assert np.max(np.abs(r)) / s < 1e-8
    # decays toward +inf
    assert abs(p.u[-1]) < 1e-6 * s


# --- extraction ---------------------------------------------------------------------

def _g(y):
    return 0.3 * np.exp(-y ** 2 / 2) * np.cos(y)


def test_extract_synthetic():
    g = make_uniform_grid(256.0, 2048)
    t = 30.0
    snap = FieldSnapshot(g, t, self_similar_field(g, t, _g))
    p = extract_self_similar(snap, y_max=6.0, dy=0.05)
    np.testing.assert_allclose(p.u, _g(p.y), atol=1e-8)
    dg = 0.3 * np.exp(-p.y ** 2 / 2) * (-p.y * np.cos(p.y) - np.sin(p.y))
    np.testing.assert_allclose(p.du, dg, atol=1e-8)
    assert p.source == "extracted" and p.t == t


def test_extract_zero_and_errors():
    g = make_uniform_grid(64.0, 256)
    z = extract_self_similar(FieldSnapshot(g, 10.0, np.zeros(g.n)))
    assert np.all(z.u == 0)
    with pytest.raises(InvalidArgument):
        extract_self_similar(FieldSnapshot(g, 1e4, np.zeros(g.n)))
    with pytest.raises(InvalidArgument):
        extract_self_similar(FieldSnapshot(g, 0.5, np.zeros(g.n)))


@settings(deadline=None, max_examples=20)
@given(hnp.arrays(float, (5, 12), elements=st.floats(-1e3, 1e3)))
def test_profile_csv_round_trip(a):
    y = np.linspace(-1.0, 1.0, 12)
    p = PainleveProfile(y, *a[:4], source="extracted", t=50.0)
    buf = io.StringIO()
    write_profile_csv(p, buf)
    buf.seek(0)
    q = read_profile_csv(buf)
    for name in ("y", "u", "du", "d2u", "d3u"):
        np.testing.assert_array_equal(getattr(q, name), getattr(p, name))
    assert (q.source, q.t) == ("extracted", 50.0)
