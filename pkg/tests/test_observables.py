import math

import numpy as np
import pytest

from gfcount.generator import assemble_generators
from gfcount.models import AtomModel, DriveConfig, build_n_type
from gfcount.observables import (
    InsufficientCounts,
    ScanOptions,
    central_peak_fwhm,
    evaluate_point,
    find_peaks,
    half_depth_width,
    line_shape_scan,
    mandel_q,
    normalize,
    outer_peak_separation,
    scan_2d,
    steady_emission_rate,
)
from gfcount.oracle import steady_rate


def test_emission_rate_matches_steady_state():
    m, d = build_n_type(delta_p=3.0)
    er = steady_emission_rate(m, d)
    assert er.converged
    exact = steady_rate(assemble_generators(m, d))
    assert er.rate == pytest.approx(exact, rel=1e-5)
    assert float(er) == er.rate


def test_emission_rate_of_undriven_atom_is_zero():
    m = AtomModel(kind="n_type")
    er = steady_emission_rate(m, DriveConfig())
    assert er.converged and er.rate == 0.0


def test_emission_rate_non_convergence_is_flagged():
    m, d = build_n_type(delta_p=3.0)
    er = steady_emission_rate(m, d, options=ScanOptions(t_max=1.0, window=0.5))
    assert not er.converged


def test_mandel_q_kerr_center_is_sub_poissonian():
    m, d = build_n_type()
    mq = mandel_q(m, d, 400.0)
    assert mq.defined and mq.converged
    assert mq.q < 0
    assert mq.q == pytest.approx((mq.n2 - mq.n1 ** 2) / mq.n1)


def test_mandel_q_dark_point_sentinel():
    m, d = build_n_type(omega_s=0.0)
    mq = mandel_q(m, d, 400.0)
    assert not mq.defined and math.isnan(mq.q)


def test_mandel_q_needs_counts():
    m, d = build_n_type(delta_p=15.0)
    with pytest.raises(InsufficientCounts):
        mandel_q(m, d, 1.0, min_counts=10)
    with pytest.raises(ValueError):
        mandel_q(m, d, 0.0)


def test_point_without_q():
    m, d = build_n_type()
    p = evaluate_point(m, d, ScanOptions(compute_q=False))
    assert math.isnan(p.q) and not p.q_defined and p.converged


def test_normalize_is_idempotent_and_flags_dark_scans():
    v = np.array([0.1, 0.5, 0.25])
    n, dark = normalize(v)
    assert not dark and n.max() == 1.0
    n2, _ = normalize(n)
    assert np.array_equal(n, n2)
    z, dark = normalize(np.full(3, 1e-9))
    assert dark and np.array_equal(z, np.full(3, 1e-9))


@pytest.mark.parametrize("grid", [[], [1.0, 0.0, 2.0]])
def test_bad_grids_rejected(grid):
    m, d = build_n_type()
    with pytest.raises(ValueError):
        line_shape_scan(m, d, "delta_p", grid)


def test_unknown_scan_parameter():
    m, d = build_n_type()
    with pytest.raises(ValueError):
        line_shape_scan(m, d, "temperature", [0.0, 1.0])


def test_scan_shape_and_symmetry():
    m, d = build_n_type(omega_s=0.0)
    grid = np.linspace(-10, 10, 11)
    res = line_shape_scan(m, d, "delta_p", grid, ScanOptions(compute_q=False))
    assert res.rate.shape == (11,)
    assert res.converged.all()
    assert np.allclose(res.intensity, res.intensity[::-1], atol=1e-8)
    assert res.dark[5] and res.intensity.max() == 1.0


def test_parallel_scan_is_bitwise_identical():
    m, d = build_n_type()
    grid = np.linspace(-8, 8, 6)
    serial = line_shape_scan(m, d, "delta_p", grid)
    parallel = line_shape_scan(m, d, "delta_p", grid, workers=2)
    assert np.array_equal(serial.rate, parallel.rate)
    assert np.array_equal(serial.q, parallel.q, equal_nan=True)


def test_scan_2d_layout():
    m, d = build_n_type()
    res = scan_2d(m, d, "delta_p", [-1.0, 0.0, 1.0], "omega_c", [5.0, 11.0],
                  ScanOptions(compute_q=False))
    assert res.rate.shape == (2, 3)
    single = evaluate_point(m, d.replace(delta_p=1.0, omega_c=5.0), ScanOptions(compute_q=False))
    assert res.rate[0, 2] == single.rate
    with pytest.raises(ValueError):
        scan_2d(m, d, "delta_p", [0.0, 1.0], "delta_p", [0.0, 1.0])


def _lorentz(x, x0, w, a=1.0):
    return a * (0.5 * w) ** 2 / ((x - x0) ** 2 + (0.5 * w) ** 2)


def test_peak_helpers_on_synthetic_triplet():
    x = np.linspace(-30, 30, 601)
    y = _lorentz(x, -12.0, 3.0) + _lorentz(x, 12.0, 3.0) + _lorentz(x, 0.0, 2.0, 0.6)
    peaks = find_peaks(x, y, 0.1)
    assert len(peaks) == 3
    assert peaks[0][0] == pytest.approx(-12.0, abs=0.02)
    assert outer_peak_separation(x, y) == pytest.approx(24.0, abs=0.05)
    assert central_peak_fwhm(x, y) == pytest.approx(2.0, rel=0.1)


def test_half_depth_width_of_dip():
    x = np.linspace(-20, 20, 401)
    y = 1.0 - _lorentz(x, 0.0, 4.0)
    assert half_depth_width(x, y) == pytest.approx(4.0, rel=0.02)


def _excited_population(model, drive):
    from gfcount.oracle import null_space_steady_state
    ss = null_space_steady_state(assemble_generators(model, drive), model.initial_density())
    return ss.populations[2] + ss.populations[3]


def test_dark_points_have_empty_excited_levels():
    from gfcount.models import build_double_lambda
    m, d = build_n_type(omega_s=0.0)
    p = evaluate_point(m, d, ScanOptions(compute_q=False))
    assert p.dark and _excited_population(m, d) < 1e-6
    # two-photon resonance of the double-Lambda map, both values of beta
    w = 814.5
    for beta in (0.0, 1.0):
        m, d = build_double_lambda(beta=beta)
        for x in (0.2 * w, 0.7 * w):
            dd = d.replace(delta_p=x, delta_c=x)
            p = evaluate_point(m, dd, ScanOptions(compute_q=False, t_max=1e5))
            assert p.dark and _excited_population(m, dd) < 1e-6


def test_interference_dark_point_traps_excited_population():
    # with beta = 1 the extra dark lines come from a non-emitting excited
    # superposition, so the excited levels stay populated
    from gfcount.models import build_double_lambda
    w = 814.5
    m, d = build_double_lambda(beta=1.0)
    dd = d.replace(delta_p=0.0, delta_c=0.5 * w)
    p = evaluate_point(m, dd, ScanOptions(compute_q=False, t_max=1e5))
    assert p.dark
    assert _excited_population(m, dd) > 0.5


def test_beta_zero_map_symmetry():
    from gfcount.models import build_double_lambda
    w = 814.5
    m, d = build_double_lambda()
    grid = np.linspace(-0.5 * w, 1.5 * w, 9)
    res = scan_2d(m, d, "delta_p", grid, "delta_c", grid, ScanOptions(compute_q=False))
    assert np.abs(res.intensity - res.intensity[::-1, ::-1]).max() < 1e-6
