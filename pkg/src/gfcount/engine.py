"""Time evolution of the generating function, its s-derivatives and the P_n hierarchy.

Two integration routes are available everywhere a generator is constant in
time:

``"rk45"``
    adaptive Dormand-Prince 5(4) with mixed relative/absolute error control
    (the default; see :mod:`gfcount.kernels`).
``"expm"``
    exact propagation with the matrix exponential, used by the scan code for
    long horizons where explicit stepping through GHz-scale detunings would
    need millions of steps.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import kernels
from .generator import DIAGONAL, NSTATE, GeneratorPair, flatten, unflatten

RTOL = 1e-9
ATOL = 1e-12
MAX_STEPS = 50_000_000


class IntegrationError(RuntimeError):
    """The ODE integrator could not produce a trustworthy state."""


class StepSizeUnderflow(IntegrationError):
    pass


class NonFiniteState(IntegrationError):
    pass


class TruncationWarning(UserWarning):
    """The photon-number hierarchy misses a noticeable part of the probability."""


@dataclass(frozen=True)
class GfState:
    """Generating-function matrix G_ij at a given time (in microseconds)."""

    entries: np.ndarray
    time: float
    s: float = 1.0
    stats: dict = field(default_factory=dict, compare=False)

    @property
    def flat(self) -> np.ndarray:
        return flatten(self.entries)

    def trace(self) -> complex:
        return complex(np.trace(self.entries))

    def hermiticity_defect(self) -> float:
        return float(np.max(np.abs(self.entries - self.entries.conj().T)))

    def populations(self) -> np.ndarray:
        return np.diag(self.entries).real.copy()


@dataclass(frozen=True)
class MomentTrajectory:
    """Y, <N^(1)> and <N^(2)> of the counted photons on a time grid."""

    times: np.ndarray
    Y: np.ndarray
    N1: np.ndarray
    N2: np.ndarray
    final: np.ndarray  # (3, 16): g, dg/ds, d2g/ds2 at the last time
    stats: dict = field(default_factory=dict, compare=False)

    @property
    def Q(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return (self.N2 - self.N1 ** 2) / self.N1


@dataclass(frozen=True)
class PnHierarchy:
    """Photon-number resolved states sigma^(n), n = 0..n_max, at one time."""

    sigma_n: np.ndarray  # (n_max + 1, 16)
    time: float
    tol: float
    stats: dict = field(default_factory=dict, compare=False)

    @property
    def raw_probabilities(self) -> np.ndarray:
        return self.sigma_n[:, DIAGONAL].sum(axis=1).real

    @property
    def probabilities(self) -> np.ndarray:
        p = self.raw_probabilities.copy()
        p[(p < 0) & (p > -self.tol)] = 0.0
        return p

    @property
    def deficit(self) -> float:
        return float(1.0 - self.raw_probabilities.sum())

    @property
    def total_state(self) -> np.ndarray:
        return self.sigma_n.sum(axis=0)

    def factorial_moment(self, order: int) -> float:
        n = np.arange(self.sigma_n.shape[0], dtype=float)
        weight = np.ones_like(n)
        for k in range(order):
            weight *= n - k
        return float(np.dot(weight, self.probabilities))


def as_flat_state(g0) -> np.ndarray:
    arr = np.asarray(g0, dtype=complex)
    if arr.shape == (4, 4):
        return flatten(arr)
    if arr.shape == (NSTATE,):
        return arr.copy()
    raise ValueError(f"state must be 4x4 or flat of length 16, got shape {arr.shape}")


def frequency_scale(A: np.ndarray) -> float:
    """Largest entry modulus of a generator; bounds the first RK step."""
    return max(float(np.max(np.abs(A))), 1e-12)


def _check_times(times) -> np.ndarray:
    t = np.atleast_1d(np.asarray(times, dtype=float))
    if t.ndim != 1:
        raise ValueError("time grid must be one-dimensional")
    if np.any(~np.isfinite(t)) or np.any(t < 0):
        raise ValueError("times must be finite and non-negative")
    if np.any(np.diff(t) < 0):
        raise ValueError("time grid must be sorted")
    return t


def _check_tolerances(rtol, atol):
    if not (rtol > 0 and atol > 0):
        raise ValueError("tolerances must be positive")


def integrate_chain(A, B, coup, Y0, times, rtol=RTOL, atol=ATOL, first_step=None,
                    max_steps=MAX_STEPS):
    """Integrate the chained system dY_k/dt = A Y_k + coup_k B Y_{k-1}.

    Returns the samples with shape ``(len(times), m, 16)`` and a stats dict.
    Raises :class:`StepSizeUnderflow` or :class:`NonFiniteState` on failure.
    """
    _check_tolerances(rtol, atol)
    times = _check_times(times)
    A = np.asarray(A, dtype=complex)
    B = np.asarray(B, dtype=complex)
    Y0 = np.ascontiguousarray(Y0, dtype=complex)
    coup = np.ascontiguousarray(coup, dtype=float)
    scale = max(frequency_scale(A), frequency_scale(B) if coup[1:].any() else 0.0)
    h0 = first_step if first_step is not None else 0.05 / scale
    samples, status, n_acc, n_rej = kernels.dopri5_chain(
        np.ascontiguousarray(A.T), np.ascontiguousarray(B.T), coup, Y0, times,
        float(rtol), float(atol), float(h0), math.inf, int(max_steps),
    )
    stats = {"method": "rk45", "accepted_steps": int(n_acc), "rejected_steps": int(n_rej),
             "first_step": h0}
    if status == kernels.STEP_UNDERFLOW:
        raise StepSizeUnderflow(f"step size underflow after {n_acc} steps (stiff system?)")
    if status == kernels.NON_FINITE:
        raise NonFiniteState(f"non-finite state encountered after {n_acc} steps")
    if status == kernels.MAX_STEPS:
        raise IntegrationError(f"step budget of {max_steps} exhausted")
    return samples, stats


def _propagate_expm(M, y0, times):
    out = np.empty((len(times), y0.size), dtype=complex)
    y = y0.copy()
    t_prev = 0.0
    for i, t in enumerate(times):
        if t > t_prev:
            y = scipy.linalg.expm(M * (t - t_prev)) @ y
        out[i] = y
        t_prev = t
    if not np.all(np.isfinite(out)):
        raise NonFiniteState("non-finite state from matrix exponential")
    return out


def evolve_samples(gen: GeneratorPair, s: float, g0, times, *, rtol=RTOL, atol=ATOL,
                   method="rk45") -> list[GfState]:
    """G(s, t) on a sorted time grid starting from G(s, 0) = g0."""
    y0 = as_flat_state(g0)
    times = _check_times(times)
    A = gen.at(float(s))
    if method == "rk45":
        samples, stats = integrate_chain(A, np.zeros_like(A), np.zeros(1), y0[None, :],
                                         times, rtol, atol)
        flat = samples[:, 0, :]
    elif method == "expm":
        _check_tolerances(rtol, atol)
        flat = _propagate_expm(A, y0, times)
        stats = {"method": "expm"}
    else:
        raise ValueError(f"unknown method {method!r}")
    return [GfState(unflatten(v).copy(), float(t), float(s), stats) for v, t in zip(flat, times)]


def evolve(gen: GeneratorPair, s: float, g0, T: float, *, rtol=RTOL, atol=ATOL,
           method="rk45") -> GfState:
    """Generating function G(s, T) for the initial condition G(s, 0) = g0.

    At ``s = 1`` this is the ordinary density matrix.  ``T = 0`` returns the
    initial condition unchanged.
    """
    return evolve_samples(gen, s, g0, [T], rtol=rtol, atol=atol, method=method)[0]


def moment_generator(gen: GeneratorPair) -> np.ndarray:
    """48x48 block-triangular generator of (g, dg/ds, d2g/ds2) at s = 1."""
    A, A1 = gen.A, gen.A1
    Z = np.zeros_like(A)
    return np.block([[A, Z, Z], [A1, A, Z], [Z, 2 * A1, A]])


def evolve_factorial_moments(gen: GeneratorPair, g0, times, *, rtol=RTOL, atol=ATOL,
                             method="rk45") -> MomentTrajectory:
    """Factorial moments of the counted photon number on a time grid.

    Differentiating dg/dt = (A0 + s A1) g in s gives the exact auxiliary
    blocks dg1/dt = A1 g + A(1) g1 and dg2/dt = 2 A1 g1 + A(1) g2, which are
    integrated together with g at s = 1.
    """
    y0 = as_flat_state(g0)
    times = _check_times(times)
    Y0 = np.zeros((3, NSTATE), dtype=complex)
    Y0[0] = y0
    if method == "rk45":
        samples, stats = integrate_chain(gen.A, gen.A1, np.array([0.0, 1.0, 2.0]), Y0,
                                         times, rtol, atol)
    elif method == "expm":
        _check_tolerances(rtol, atol)
        flat = _propagate_expm(moment_generator(gen), Y0.ravel(), times)
        samples = flat.reshape(len(times), 3, NSTATE)
        stats = {"method": "expm"}
    else:
        raise ValueError(f"unknown method {method!r}")
    traces = samples[:, :, DIAGONAL].sum(axis=2)
    return MomentTrajectory(
        times=times,
        Y=traces[:, 0].real.copy(),
        N1=traces[:, 1].real.copy(),
        N2=traces[:, 2].real.copy(),
        final=samples[-1].copy(),
        stats={**stats, "max_imag_N1": float(np.max(np.abs(traces[:, 1].imag)))},
    )


def evolve_pn(gen: GeneratorPair, g0, T: float, n_max: int, *, rtol=RTOL, atol=ATOL,
              warn_deficit=1e-3) -> PnHierarchy:
    """Photon-number resolved states sigma^(n)(T) for n = 0..n_max.

    Uses the coefficient hierarchy dsigma_n/dt = A0 sigma_n + A1 sigma_{n-1}
    (sigma_{-1} = 0) obtained by expanding G in powers of s.  Emits a
    :class:`TruncationWarning` when 1 - sum(P_n) exceeds ``warn_deficit``.
    """
    n_max = int(n_max)
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    Y0 = np.zeros((n_max + 1, NSTATE), dtype=complex)
    Y0[0] = as_flat_state(g0)
    coup = np.ones(n_max + 1)
    coup[0] = 0.0
    samples, stats = integrate_chain(gen.A0, gen.A1, coup, Y0, [T], rtol, atol)
    result = PnHierarchy(samples[0], float(T), max(rtol, atol), stats)
    if result.deficit > warn_deficit:
        warnings.warn(
            f"P_n truncated at n_max={n_max} misses {result.deficit:.3g} of the probability",
            TruncationWarning,
            stacklevel=2,
        )
    return result
