import numpy as np
import pytest
import scipy.linalg

from gfcount.engine import (
    TruncationWarning,
    evolve,
    evolve_factorial_moments,
    evolve_pn,
    evolve_samples,
    moment_generator,
)
from gfcount.generator import assemble_generators
from gfcount.models import AtomModel, DriveConfig, build_double_lambda, build_n_type
from gfcount.oracle import pn_from_contour


@pytest.fixture(scope="module")
def kerr():
    m, d = build_n_type()
    return assemble_generators(m, d), m.initial_density()


def test_zero_time_returns_initial_state(kerr):
    gen, g0 = kerr
    st = evolve(gen, 0.7, g0, 0.0)
    assert np.array_equal(st.entries, g0)


def test_undriven_atom_stays_in_ground_state():
    m = AtomModel(kind="n_type")
    gen = assemble_generators(m, DriveConfig())
    st = evolve(gen, 1.0, m.initial_density(), 50.0)
    assert np.abs(st.entries - m.initial_density()).max() < 1e-14


@pytest.mark.parametrize("s", [0.0, 0.5, 1.0, 1.3])
def test_rk45_agrees_with_expm(kerr, s):
    gen, g0 = kerr
    a = evolve(gen, s, g0, 30.0)
    b = evolve(gen, s, g0, 30.0, method="expm")
    assert np.abs(a.entries - b.entries).max() < 1e-8


def test_double_lambda_short_horizon():
    m, d = build_double_lambda()
    gen = assemble_generators(m, d)
    a = evolve(gen, 1.0, m.initial_density(), 2.0)
    b = evolve(gen, 1.0, m.initial_density(), 2.0, method="expm")
    assert np.abs(a.entries - b.entries).max() < 1e-7
    assert abs(a.trace() - 1) < 1e-10
    assert a.hermiticity_defect() < 1e-10


def test_samples_are_ordered(kerr):
    gen, g0 = kerr
    states = evolve_samples(gen, 1.0, g0, [0.0, 1.0, 2.0])
    assert [s.time for s in states] == [0.0, 1.0, 2.0]


def test_invalid_inputs(kerr):
    gen, g0 = kerr
    with pytest.raises(ValueError):
        evolve(gen, 1.0, np.ones(5), 1.0)
    with pytest.raises(ValueError):
        evolve_samples(gen, 1.0, g0, [2.0, 1.0])
    with pytest.raises(ValueError):
        evolve(gen, 1.0, g0, -1.0)
    with pytest.raises(ValueError):
        evolve(gen, 1.0, g0, 1.0, rtol=0.0)
    with pytest.raises(ValueError):
        evolve(gen, 1.0, g0, 1.0, method="euler")


def test_moment_generator_is_block_lower_triangular(kerr):
    gen, _ = kerr
    M = moment_generator(gen)
    assert np.all(M[:16, 16:] == 0) and np.all(M[16:32, 32:] == 0)


def test_moments_rk45_vs_expm(kerr):
    gen, g0 = kerr
    times = [1.0, 10.0, 40.0]
    a = evolve_factorial_moments(gen, g0, times)
    b = evolve_factorial_moments(gen, g0, times, method="expm")
    assert np.allclose(a.N1, b.N1, rtol=1e-8, atol=1e-12)
    assert np.allclose(a.N2, b.N2, rtol=1e-8, atol=1e-12)
    assert np.allclose(a.Y, 1.0, atol=1e-10)
    assert np.all(np.diff(a.N1) > 0)


def test_moments_match_derivatives_of_expm(kerr):
    """N1 = dY/ds at s = 1 via the Frechet derivative of expm."""
    gen, g0 = kerr
    T = 12.0
    y0 = g0.ravel(order="F").astype(complex)
    _, dE = scipy.linalg.expm_frechet(gen.A * T, gen.A1 * T)
    n1 = np.trace((dE @ y0).reshape(4, 4, order="F")).real
    mom = evolve_factorial_moments(gen, g0, [T])
    assert mom.N1[-1] == pytest.approx(n1, rel=1e-8)


def test_pn_matches_contour_oracle(kerr):
    gen, g0 = kerr
    T, n_max = 8.0, 40
    pn = evolve_pn(gen, g0, T, n_max)
    ref = pn_from_contour(gen, g0, T, n_max, nodes=256)
    assert np.abs(pn.probabilities - ref).max() < 1e-9
    assert abs(pn.deficit) < 1e-9
    mom = evolve_factorial_moments(gen, g0, [T])
    assert pn.factorial_moment(1) == pytest.approx(mom.N1[-1], rel=1e-7)
    assert pn.factorial_moment(2) == pytest.approx(mom.N2[-1], rel=1e-7)


def test_pn_truncation_warns(kerr):
    gen, g0 = kerr
    with pytest.warns(TruncationWarning):
        pn = evolve_pn(gen, g0, 40.0, 3)
    assert pn.deficit > 1e-3


def test_pn_probabilities_clamp_only_roundoff(kerr):
    gen, g0 = kerr
    pn = evolve_pn(gen, g0, 5.0, 60)
    assert np.all(pn.probabilities >= 0)
    assert np.all(pn.raw_probabilities > -1e-9)


def test_pn_rejects_negative_nmax(kerr):
    gen, g0 = kerr
    with pytest.raises(ValueError):
        evolve_pn(gen, g0, 1.0, -1)


def test_counting_is_monotone(kerr):
    gen, g0 = kerr
    times = np.linspace(0.0, 30.0, 301)
    mom = evolve_factorial_moments(gen, g0, times)
    assert np.all(np.diff(mom.N1) >= -1e-10)


def test_zero_photon_truncation_is_legal(kerr):
    gen, g0 = kerr
    with pytest.warns(TruncationWarning):
        pn = evolve_pn(gen, g0, 2.0, 0)
    assert pn.sigma_n.shape == (1, 16)
    assert 0 < pn.probabilities[0] < 1


def test_hierarchy_sums_to_unresolved_state(kerr):
    gen, g0 = kerr
    pn = evolve_pn(gen, g0, 5.0, 120)
    assert abs(pn.deficit) < 1e-7
    full = evolve(gen, 1.0, g0, 5.0).entries.ravel(order="F")
    assert np.abs(pn.total_state - full).max() < 1e-7
