import numpy as np
import pytest
import scipy.linalg

from gfcount import kernels
from gfcount.engine import NonFiniteState, StepSizeUnderflow, integrate_chain
from gfcount.generator import assemble_generators
from gfcount.models import build_n_type


def _system():
    m, d = build_n_type()
    return assemble_generators(m, d), m.initial_density().ravel(order="F")


def test_chain_rhs_matches_block_product():
    rng = np.random.default_rng(3)
    A = rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16))
    B = rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16))
    Y = rng.normal(size=(3, 16)) + 1j * rng.normal(size=(3, 16))
    coup = np.array([0.0, 1.0, 2.0])
    F = kernels.chain_rhs(A.T.copy(), B.T.copy(), coup, Y)
    assert np.allclose(F[0], A @ Y[0])
    assert np.allclose(F[1], A @ Y[1] + B @ Y[0])
    assert np.allclose(F[2], A @ Y[2] + 2 * B @ Y[1])


def test_dopri5_matches_matrix_exponential():
    gen, y0 = _system()
    times = np.array([0.0, 0.5, 3.0, 20.0])
    out, _ = integrate_chain(gen.A, gen.A1, np.zeros(1), y0[None, :], times)
    for t, y in zip(times, out[:, 0]):
        ref = scipy.linalg.expm(gen.A * t) @ y0
        assert np.abs(y - ref).max() < 1e-8


def test_output_times_hit_exactly_with_repeats():
    gen, y0 = _system()
    out, _ = integrate_chain(gen.A, gen.A1, np.zeros(1), y0[None, :], [0.0, 1.0, 1.0, 2.0])
    assert np.array_equal(out[0, 0], y0)
    assert np.array_equal(out[1], out[2])


def test_python_and_compiled_paths_agree():
    gen, y0 = _system()
    args = (gen.A.T.copy(), gen.A1.T.copy(), np.zeros(1), y0[None, :].copy(),
            np.array([5.0]), 1e-9, 1e-12, 1e-3, np.inf, 10_000_000)
    fast = kernels.dopri5_chain(*args)
    slow = kernels.dopri5_chain.py_func(*args)
    assert fast[1] == slow[1] == kernels.OK
    assert np.abs(fast[0] - slow[0]).max() < 1e-13


def test_non_finite_state_is_reported():
    A = np.eye(16, dtype=complex) * 800.0
    with pytest.raises(NonFiniteState):
        integrate_chain(A, A, np.zeros(1), np.ones((1, 16), dtype=complex), [5.0],
                        rtol=1e-3, atol=1e-3)


def test_step_size_underflow_is_reported():
    gen, y0 = _system()
    with pytest.raises(StepSizeUnderflow):
        integrate_chain(gen.A, gen.A1, np.zeros(1), y0[None, :], [1.0], rtol=1e-300, atol=1e-300)


def test_window_slopes_linear_counter():
    # y = (1, t): the counter grows at exactly rate 1 (y[1] += dt * y[0])
    dt = 0.1
    P = np.array([[1.0, 0.0], [dt, 1.0]], dtype=complex)
    slopes, n, converged, _ = kernels.window_slopes(
        P, np.array([1.0, 0.0], dtype=complex), np.array([1]), 8, dt, 50, 1e-9, 1e-12, 2)
    assert converged and n == 3
    assert np.allclose(slopes[:n], 1.0)


def test_window_slopes_reports_non_convergence():
    dt = 0.1
    P = np.array([[np.exp(dt), 0.0], [dt, 1.0]], dtype=complex)  # exponentially growing rate
    _, n, converged, _ = kernels.window_slopes(
        P, np.array([1.0, 0.0], dtype=complex), np.array([1]), 8, dt, 5, 1e-6, 1e-12, 2)
    assert not converged and n == 5
