"""Steady-state absorption line shapes, Mandel Q and parameter scans.

The probe absorption is read off the fluorescence into level |1>, i.e. the
long-time slope of the mean counted photon number.  Every scan point is an
independent computation, so scans can be spread over worker processes
without changing a single bit of the result.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np
import scipy.linalg

from . import kernels
from .engine import MomentTrajectory, evolve_factorial_moments, moment_generator
from .generator import DIAGONAL, NSTATE, assemble_generators, flatten
from .models import AtomModel, DriveConfig

DARK_THRESHOLD = 1e-6  # counts per microsecond
Q_UNDEFINED = float("nan")

DRIVE_PARAMS = ("omega_p", "omega_c", "omega_s", "delta_p", "delta_c", "delta_s")
MODEL_PARAMS = ("beta", "gamma31", "gamma32", "gamma41", "gamma42", "omega")


class InsufficientCounts(ValueError):
    """Too few photons were counted by T_eval for a meaningful Q."""


@dataclass(frozen=True)
class ScanOptions:
    """Numerical settings shared by all points of a scan (times in microseconds).

    ``window`` and ``t_max`` default to 20/Gamma_3 and 2000/Gamma_3.
    """

    rate_rtol: float = 1e-5
    rate_atol: float = 1e-10
    window: float | None = None
    samples_per_window: int = 64
    confirm_windows: int = 2  # minimum agreement span, in windows
    t_max: float | None = None
    compute_q: bool = True
    q_tol: float = 1e-2
    q_min_counts: float = 50.0
    t_eval: float | None = None
    t_eval_max: float = 1e6
    dark_threshold: float = DARK_THRESHOLD

    def resolved(self, model: AtomModel) -> "ScanOptions":
        g3 = model.Gamma3 if model.Gamma3 > 0 else max(model.Gamma4, 1.0)
        return replace(
            self,
            window=self.window if self.window is not None else 20.0 / g3,
            t_max=self.t_max if self.t_max is not None else 2000.0 / g3,
        )


@dataclass(frozen=True)
class EmissionRate:
    rate: float
    converged: bool
    t_final: float
    windows: int
    slopes: np.ndarray = field(repr=False, compare=False)

    def __float__(self):
        return self.rate


@dataclass(frozen=True)
class MandelQ:
    q: float
    n1: float
    n2: float
    t_eval: float
    converged: bool
    defined: bool
    q_late: float = float("nan")

    def __float__(self):
        return self.q


@dataclass(frozen=True)
class PointResult:
    rate: float
    converged: bool
    dark: bool
    q: float
    q_defined: bool
    q_converged: bool
    t_eval: float
    n1_at_t_eval: float
    windows: int


def apply_param(model: AtomModel, drive: DriveConfig, name: str, value: float):
    if name in DRIVE_PARAMS:
        return model, drive.replace(**{name: value})
    if name in MODEL_PARAMS:
        return model.replace(**{name: value}), drive
    raise ValueError(f"cannot scan unknown parameter {name!r}")


def relaxation_time(A: np.ndarray) -> float:
    """1/|Re lambda| of the slowest decaying eigenmode of A (stationary modes excluded)."""
    ev = np.linalg.eigvals(A)
    scale = max(float(np.max(np.abs(ev))), 1.0)
    decay = -ev.real[np.abs(ev) > 1e-10 * scale]
    decay = decay[decay > 0]
    return float(1.0 / decay.min()) if decay.size else 0.0


def steady_emission_rate(model: AtomModel, drive: DriveConfig, tol: float = 1e-5,
                         options: ScanOptions | None = None) -> EmissionRate:
    """Long-time slope of <N^(1)>(t), i.e. the stationary photon counting rate.

    <N^(1)> is propagated exactly over windows of length 20/Gamma_3 and a
    least-squares slope is fitted per window.  The estimate is accepted once
    the window slopes agree to ``tol`` (relative) over a stretch at least as
    long as the slowest relaxation time of the atom, so that slowly decaying
    or slowly oscillating transients cannot fake convergence.  If that does
    not happen before ``t_max`` the last slope is returned with
    ``converged=False``.
    """
    opts = (options or ScanOptions()).resolved(model)
    gen = assemble_generators(model, drive)
    n_per = int(opts.samples_per_window)
    dt = opts.window / n_per
    A, A1 = gen.A, gen.A1
    M = np.block([[A, np.zeros_like(A)], [A1, A]])
    P = np.ascontiguousarray(scipy.linalg.expm(M * dt))
    y0 = np.zeros(2 * NSTATE, dtype=complex)
    y0[:NSTATE] = flatten(model.initial_density())
    max_windows = max(2, int(math.ceil(opts.t_max / opts.window)))
    tau = relaxation_time(A)
    n_span = max(int(opts.confirm_windows), int(math.ceil(min(tau, opts.t_max) / opts.window)))
    slopes, n_win, converged, _ = kernels.window_slopes(
        P, y0, (NSTATE + DIAGONAL).astype(np.int64), n_per, dt, max_windows,
        float(tol), float(opts.rate_atol), n_span,
    )
    return EmissionRate(
        rate=float(slopes[n_win - 1]),
        converged=bool(converged),
        t_final=n_win * opts.window,
        windows=int(n_win),
        slopes=np.array(slopes[:n_win]),
    )


def _moments_at(model, drive, times) -> MomentTrajectory:
    gen = assemble_generators(model, drive)
    return evolve_factorial_moments(gen, model.initial_density(), times, method="expm")


def mandel_q(model: AtomModel, drive: DriveConfig, T_eval: float, tol: float = 1e-2,
             min_counts: float = 10.0, dark_threshold: float = DARK_THRESHOLD) -> MandelQ:
    """Mandel Q of the photons counted in [0, T_eval].

    Q is also evaluated at 1.5*T_eval; ``converged`` reports whether the two
    agree to ``tol`` (absolute).  A dark point, whose counting rate between
    the two times is below ``dark_threshold``, yields ``q = nan`` and
    ``defined = False``.  Otherwise fewer than ``min_counts`` photons by
    T_eval raise :class:`InsufficientCounts`.
    """
    if not T_eval > 0:
        raise ValueError("T_eval must be positive")
    mt = _moments_at(model, drive, [T_eval, 1.5 * T_eval])
    n1, n1_late = mt.N1
    late_rate = (n1_late - n1) / (0.5 * T_eval)
    if late_rate < dark_threshold:
        return MandelQ(Q_UNDEFINED, float(n1), float(mt.N2[0]), float(T_eval),
                       converged=False, defined=False)
    if n1 <= min_counts:
        raise InsufficientCounts(
            f"<N> = {n1:.3g} at T_eval = {T_eval:g} us; need more than {min_counts:g}"
        )
    q, q_late = mt.Q
    return MandelQ(float(q), float(n1), float(mt.N2[0]), float(T_eval),
                   converged=bool(abs(q_late - q) < tol), defined=True, q_late=float(q_late))


def choose_t_eval(model, drive, rate: float, opts: ScanOptions) -> float:
    """Smallest time (within bounds) at which roughly ``q_min_counts`` photons are counted."""
    t = opts.t_eval if opts.t_eval is not None else 0.0
    if rate > 0:
        t = max(t, opts.q_min_counts / rate)
    t = min(max(t, opts.window), opts.t_eval_max)
    for _ in range(8):
        n1 = _moments_at(model, drive, [t]).N1[0]
        if n1 >= opts.q_min_counts or t >= opts.t_eval_max:
            break
        t = min(t * max(1.2, 1.1 * opts.q_min_counts / max(n1, 1e-300)), opts.t_eval_max)
    return float(t)


def evaluate_point(model: AtomModel, drive: DriveConfig, options: ScanOptions | None = None
                   ) -> PointResult:
    opts = (options or ScanOptions()).resolved(model)
    er = steady_emission_rate(model, drive, opts.rate_rtol, opts)
    dark = abs(er.rate) < opts.dark_threshold
    q, q_def, q_conv, t_eval, n1 = Q_UNDEFINED, False, False, float("nan"), float("nan")
    if opts.compute_q and not dark:
        t_eval = choose_t_eval(model, drive, er.rate, opts)
        mq = mandel_q(model, drive, t_eval, opts.q_tol, min_counts=0.0,
                      dark_threshold=opts.dark_threshold)
        n1 = mq.n1
        if mq.defined and mq.n1 > 10.0:
            q, q_def, q_conv = mq.q, True, mq.converged
    return PointResult(
        rate=er.rate, converged=er.converged, dark=bool(dark), q=q, q_defined=q_def,
        q_converged=q_conv, t_eval=t_eval, n1_at_t_eval=n1, windows=er.windows,
    )


def _eval_task(args):
    model, drive, opts = args
    return evaluate_point(model, drive, opts)


def _run_points(tasks, workers: int):
    if workers and workers > 1 and len(tasks) > 1:
        chunk = max(1, len(tasks) // (8 * workers))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_eval_task, tasks, chunksize=chunk))
    return [_eval_task(t) for t in tasks]


def normalize(values: np.ndarray, dark_threshold: float = DARK_THRESHOLD):
    """Divide by the maximum unless everything is below the dark threshold.

    Returns ``(normalized, all_dark)``.  Applying it to an already normalized
    array returns the same numbers.
    """
    values = np.asarray(values, dtype=float)
    peak = float(np.max(values)) if values.size else 0.0
    if peak < dark_threshold:
        return values.copy(), True
    return values / peak, False


@dataclass
class ScanResult:
    """Per-point rates, normalized intensities and Mandel Q of a 1D or 2D scan.

    2D arrays are indexed ``[i2, i1]``: rows follow ``axis2`` and columns
    ``axis1``.
    """

    axis1_name: str
    axis1: np.ndarray
    rate: np.ndarray
    intensity: np.ndarray
    q: np.ndarray
    converged: np.ndarray
    dark: np.ndarray
    q_defined: np.ndarray
    q_converged: np.ndarray
    t_eval: np.ndarray
    all_dark: bool
    axis2_name: str | None = None
    axis2: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def is_2d(self) -> bool:
        return self.axis2 is not None

    def renormalized(self) -> "ScanResult":
        norm, all_dark = normalize(self.intensity, self.meta.get("dark_threshold", DARK_THRESHOLD))
        return replace(self, intensity=norm, all_dark=all_dark)


def _check_grid(grid) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("scan grid empty")
    if grid.size > 1:
        d = np.diff(grid)
        if not (np.all(d > 0) or np.all(d < 0)):
            raise ValueError("scan grid must be strictly monotone")
    return grid


def _assemble(points, shape, opts, model, drive, axis1_name, axis1, axis2_name=None, axis2=None):
    field_of = lambda name, dtype: np.array([getattr(p, name) for p in points], dtype=dtype).reshape(shape)
    rate = field_of("rate", float)
    intensity, all_dark = normalize(rate, opts.dark_threshold)
    meta = {
        "model": model.to_dict(),
        "drive": drive.to_dict(),
        "options": asdict(opts),
        "dark_threshold": opts.dark_threshold,
        "points": int(rate.size),
        "converged_points": int(field_of("converged", bool).sum()),
        "q_defined_points": int(field_of("q_defined", bool).sum()),
        "max_windows": int(field_of("windows", int).max()),
        "peak_rate": float(rate.max()),
    }
    return ScanResult(
        axis1_name=axis1_name, axis1=axis1, rate=rate, intensity=intensity,
        q=field_of("q", float), converged=field_of("converged", bool),
        dark=field_of("dark", bool), q_defined=field_of("q_defined", bool),
        q_converged=field_of("q_converged", bool), t_eval=field_of("t_eval", float),
        all_dark=all_dark, axis2_name=axis2_name, axis2=axis2, meta=meta,
    )


def line_shape_scan(model: AtomModel, drive_template: DriveConfig, param: str, grid,
                    options: ScanOptions | None = None, workers: int = 1) -> ScanResult:
    """Absorption line shape and Mandel Q along one parameter (default use: delta_p)."""
    grid = _check_grid(grid)
    opts = (options or ScanOptions()).resolved(model)
    tasks = [(*apply_param(model, drive_template, param, v), opts) for v in grid]
    points = _run_points(tasks, workers)
    return _assemble(points, grid.shape, opts, model, drive_template, param, grid)


def scan_2d(model: AtomModel, drive_template: DriveConfig, param1: str, grid1, param2: str,
            grid2, options: ScanOptions | None = None, workers: int = 1) -> ScanResult:
    """Map over two parameters; result arrays have shape (len(grid2), len(grid1))."""
    grid1 = _check_grid(grid1)
    grid2 = _check_grid(grid2)
    if param1 == param2:
        raise ValueError("the two scan axes must differ")
    opts = (options or ScanOptions()).resolved(model)
    tasks = []
    for v2 in grid2:
        m2, d2 = apply_param(model, drive_template, param2, v2)
        for v1 in grid1:
            tasks.append((*apply_param(m2, d2, param1, v1), opts))
    points = _run_points(tasks, workers)
    return _assemble(points, (grid2.size, grid1.size), opts, model, drive_template,
                     param1, grid1, param2, grid2)


def detuning_map_2d(model: AtomModel, drive_template: DriveConfig, grid_p, grid_c,
                    options: ScanOptions | None = None, workers: int = 1) -> ScanResult:
    """I and Q over the (delta_p, delta_c) plane; rows are delta_c, columns delta_p."""
    return scan_2d(model, drive_template, "delta_p", grid_p, "delta_c", grid_c, options, workers)


# -- line-shape analysis -----------------------------------------------------

def find_peaks(x, y, min_height: float = 0.0):
    """Local maxima refined by a parabola through each discrete maximum and its neighbours.

    Returns a list of ``(position, height)`` sorted by position.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    peaks = []
    for i in range(1, len(y) - 1):
        if y[i] > y[i - 1] and y[i] >= y[i + 1] and y[i] >= min_height:
            h = x[i + 1] - x[i]
            denom = y[i - 1] - 2 * y[i] + y[i + 1]
            off = 0.5 * (y[i - 1] - y[i + 1]) / denom if denom != 0 else 0.0
            off = min(max(off, -1.0), 1.0)
            height = y[i] - 0.25 * (y[i - 1] - y[i + 1]) * off
            peaks.append((x[i] + off * h, height))
    return peaks


def outer_peak_separation(x, y, min_height: float = 0.05) -> float:
    """Distance between the outermost significant peaks (the AT doublet)."""
    peaks = find_peaks(x, y, min_height * float(np.max(y)))
    if len(peaks) < 2:
        return float("nan")
    return peaks[-1][0] - peaks[0][0]


def central_peak_fwhm(x, y, center: float = 0.0) -> float:
    """Full width at half maximum of the peak located at ``center``.

    The half-height crossings are linearly interpolated; if the curve does not
    fall below half height before the next local minimum, the width is taken
    up to that minimum.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    i0 = int(np.argmin(np.abs(x - center)))
    half = 0.5 * y[i0]

    def crossing(step):
        i = i0
        while 0 <= i + step < len(y):
            j = i + step
            if y[j] <= half:
                frac = (y[i] - half) / (y[i] - y[j])
                return x[i] + frac * (x[j] - x[i])
            if y[j] > y[i]:
                return x[i]
            i = j
        return x[i]

    return abs(crossing(1) - crossing(-1))


def half_depth_width(x, y, center: float = 0.0) -> float:
    """Full width at half depth of a transparency dip at ``center``.

    Depth is measured from the dip floor to the lower of the two flanking maxima.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    i0 = int(np.argmin(np.abs(x - center)))
    left = int(np.argmax(y[: i0 + 1]))
    right = i0 + int(np.argmax(y[i0:]))
    floor = y[i0]
    level = floor + 0.5 * (min(y[left], y[right]) - floor)

    def crossing(lo, hi, step):
        i = i0
        while i != hi:
            j = i + step
            if y[j] >= level:
                frac = (level - y[i]) / (y[j] - y[i])
                return x[i] + frac * (x[j] - x[i])
            i = j
        return x[hi]

    return abs(crossing(i0, right, 1) - crossing(i0, left, -1))
