"""Brute-force cross-checks that avoid the engine's ODE machinery.

* steady states from a direct linear solve of A(1) sigma = 0 with tr(sigma) = 1;
* factorial moments from finite differences of Y(s, T) = tr exp(A(s) T) g0;
* photon-number probabilities from a discrete Fourier transform of Y(s, T)
  on a circle in the complex s plane.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .engine import as_flat_state, evolve, evolve_factorial_moments, evolve_pn
from .generator import DIAGONAL, GeneratorPair, flat_index, trace_of, unflatten

log = logging.getLogger(__name__)

NULL_RTOL = 1e-10


class OracleError(RuntimeError):
    pass


@dataclass(frozen=True)
class SteadyState:
    sigma_ss: np.ndarray  # flattened, length 16
    residual: float
    trace_error: float
    nullity: int = 1

    @property
    def degenerate(self) -> bool:
        return self.nullity > 1

    @property
    def matrix(self) -> np.ndarray:
        return unflatten(self.sigma_ss)

    @property
    def populations(self) -> np.ndarray:
        return self.sigma_ss[DIAGONAL].real.copy()


def _ground_state() -> np.ndarray:
    g = np.zeros(16, dtype=complex)
    g[flat_index(1, 1)] = 1.0
    return g


def null_space_steady_state(gen: GeneratorPair, g0=None) -> SteadyState:
    """Stationary state of A(1) with unit trace.

    For a one-dimensional null space the G_11 row (redundant, since the rows at
    diagonal positions sum to zero) is replaced by the trace condition and the
    system is solved directly.  A degenerate null space, which appears at
    ideal dark-state points, is resolved by projecting the initial state
    ``g0`` (default |1><1|) with the spectral projector onto the null space,
    i.e. the t -> infinity limit of the evolution started from ``g0``.
    """
    A = gen.A
    seed = _ground_state() if g0 is None else as_flat_state(g0)
    sv = scipy.linalg.svdvals(A)
    nullity = int(np.sum(sv <= NULL_RTOL * sv[0])) if sv[0] > 0 else A.shape[0]
    if nullity == 0:
        raise OracleError("generator has no stationary state (full rank)")
    if nullity == 1:
        M = A.copy()
        r = flat_index(1, 1)
        M[r, :] = 0.0
        M[r, DIAGONAL] = 1.0
        rhs = np.zeros(16, dtype=complex)
        rhs[r] = 1.0
        sigma = np.linalg.solve(M, rhs)
    else:
        right = scipy.linalg.null_space(A, rcond=NULL_RTOL)
        left = scipy.linalg.null_space(A.conj().T, rcond=NULL_RTOL)
        if right.shape[1] != left.shape[1]:
            raise OracleError("left and right null spaces differ in dimension")
        overlap = left.conj().T @ right
        if np.linalg.cond(overlap) > 1e12:
            raise OracleError("zero eigenvalue is defective; no stationary projector")
        sigma = right @ np.linalg.solve(overlap, left.conj().T @ seed)
        tr = trace_of(sigma)
        if abs(tr) < 1e-12:
            raise OracleError("projected seed has vanishing trace")
        sigma = sigma / tr
        log.debug("degenerate null space of dimension %d", nullity)
    # symmetrise away roundoff in the Hermiticity of the solution
    mat = unflatten(sigma)
    mat = 0.5 * (mat + mat.conj().T)
    sigma = mat.ravel(order="F")
    return SteadyState(
        sigma_ss=sigma,
        residual=float(np.linalg.norm(A @ sigma)),
        trace_error=float(abs(trace_of(sigma) - 1.0)),
        nullity=nullity,
    )


def steady_rate(gen: GeneratorPair, ss: SteadyState | None = None) -> float:
    """Stationary counting rate tr(A1 sigma_ss) in counts per microsecond."""
    if ss is None:
        ss = null_space_steady_state(gen)
    return float(trace_of(gen.A1 @ ss.sigma_ss).real)


def working_gf(gen: GeneratorPair, s: complex, g0, T: float) -> complex:
    """Y(s, T) = tr exp(A(s) T) g0 by dense matrix exponential."""
    y0 = as_flat_state(g0)
    return complex(trace_of(scipy.linalg.expm((gen.A0 + s * gen.A1) * T) @ y0))


def finite_difference_moments(gen: GeneratorPair, g0, T: float, h: float = 1e-4):
    """(<N^(1)>, <N^(2)>) at time T from finite differences of Y in s.

    The first moment uses the central difference over s = 1 -+ h, the second
    the five-point stencil over s = 1 + {-2h, -h, 0, h, 2h}.
    """
    if not 1e-6 <= h <= 1e-2:
        raise ValueError("h must lie in [1e-6, 1e-2]")
    ys = {k: working_gf(gen, 1.0 + k * h, g0, T).real for k in (-2, -1, 0, 1, 2)}
    n1 = (ys[1] - ys[-1]) / (2 * h)
    n2 = (-ys[2] + 16 * ys[1] - 30 * ys[0] + 16 * ys[-1] - ys[-2]) / (12 * h * h)
    return n1, n2


def pn_from_contour(gen: GeneratorPair, g0, T: float, n_max: int, nodes: int | None = None,
                    radius: float = 1.0) -> np.ndarray:
    """P_0..P_{n_max} as Taylor coefficients of Y(s, T) via a DFT on |s| = radius.

    Aliasing adds P_{n + k*nodes} radius^(k*nodes), so ``nodes`` should exceed
    the range of photon numbers carrying appreciable probability.
    """
    nodes = nodes or max(64, 4 * (n_max + 1))
    if nodes <= n_max:
        raise ValueError("need more contour nodes than coefficients")
    s = radius * np.exp(2j * np.pi * np.arange(nodes) / nodes)
    y0 = as_flat_state(g0)
    vals = np.array([trace_of(scipy.linalg.expm((gen.A0 + sk * gen.A1) * T) @ y0) for sk in s])
    coeffs = np.fft.fft(vals) / nodes
    return (coeffs[: n_max + 1] / radius ** np.arange(n_max + 1)).real


@dataclass
class HierarchyReport:
    consistent: bool
    skipped: bool
    deficit: float
    max_state_error: float = float("nan")
    worst_component: tuple | None = None
    n1_hierarchy: float = float("nan")
    n1_moments: float = float("nan")
    n2_hierarchy: float = float("nan")
    n2_moments: float = float("nan")
    messages: list = field(default_factory=list)


def hierarchy_consistency(gen: GeneratorPair, g0, T: float, n_max: int,
                          state_tol: float = 1e-7, deficit_tol: float = 1e-7,
                          moment_rtol: float = 1e-6) -> HierarchyReport:
    """Check sum_n sigma^(n)(T) against the s = 1 state and the moment sums.

    When the hierarchy is truncated too early (deficit above ``deficit_tol``)
    the checks are skipped and the report says so.
    """
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        pn = evolve_pn(gen, g0, T, n_max)
    deficit = pn.deficit
    if deficit > deficit_tol:
        msg = f"deficit {deficit:.3g} exceeds {deficit_tol:g}; consistency check skipped"
        log.warning(msg)
        return HierarchyReport(consistent=False, skipped=True, deficit=deficit, messages=[msg])
    total = pn.total_state
    ref = evolve(gen, 1.0, g0, T).flat
    err = np.abs(total - ref)
    worst = int(np.argmax(err))
    i, j = worst % 4 + 1, worst // 4 + 1
    mom = evolve_factorial_moments(gen, g0, [T])
    n1h, n2h = pn.factorial_moment(1), pn.factorial_moment(2)
    n1m, n2m = float(mom.N1[-1]), float(mom.N2[-1])
    messages = []
    ok = True
    if err[worst] >= state_tol:
        ok = False
        messages.append(f"component G_{i}{j} differs by {err[worst]:.3g}")
    for name, a, b in (("N1", n1h, n1m), ("N2", n2h, n2m)):
        if abs(a - b) > moment_rtol * max(abs(b), 1.0) + deficit * max(n_max, 1) ** 2:
            ok = False
            messages.append(f"{name}: hierarchy {a:.10g} vs moments {b:.10g}")
    return HierarchyReport(
        consistent=ok, skipped=False, deficit=deficit, max_state_error=float(err[worst]),
        worst_component=(i, j), n1_hierarchy=n1h, n1_moments=n1m,
        n2_hierarchy=n2h, n2_moments=n2m, messages=messages,
    )
