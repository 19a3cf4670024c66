"""Oracle suite for one configured model point, as run by ``gfcount validate``."""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .engine import evolve, evolve_factorial_moments
from .generator import assemble_generators
from .models import AtomModel, DriveConfig
from .observables import steady_emission_rate
from .oracle import (
    OracleError,
    finite_difference_moments,
    hierarchy_consistency,
    null_space_steady_state,
    steady_rate,
    working_gf,
)


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str


def _rel(a, b):
    return abs(a - b) / abs(b) if b != 0 else abs(a - b)


def run_validation(model: AtomModel, drive: DriveConfig, cfg=None) -> list[Check]:
    numeric = cfg.numeric if cfg is not None else {}
    rtol = float(numeric.get("rtol", 1e-9))
    atol = float(numeric.get("atol", 1e-12))
    n_max = int(numeric.get("n_max", 200))
    gen = assemble_generators(model, drive)
    g0 = model.initial_density()
    g31 = model.gamma31 if model.gamma31 > 0 else 1.0
    checks: list[Check] = []

    t0 = time.perf_counter()
    try:
        ss = null_space_steady_state(gen, g0)
    except OracleError as exc:
        checks.append(Check("steady state", False, str(exc)))
        ss = None
    else:
        mat = ss.matrix
        herm = float(np.max(np.abs(mat - mat.conj().T)))
        pops = ss.populations
        ok = (ss.residual < 1e-10 and ss.trace_error < 1e-12 and herm < 1e-12
              and pops.min() >= -1e-10 and pops.max() <= 1 + 1e-10)
        deg = f", degenerate (nullity {ss.nullity})" if ss.degenerate else ""
        checks.append(Check(
            "steady state", ok,
            f"residual {ss.residual:.2e}, |tr-1| {ss.trace_error:.2e}{deg}, "
            f"{1e3 * (time.perf_counter() - t0):.1f} ms"))
        late = evolve(gen, 1.0, g0, 200.0, method="expm").flat
        err = float(np.max(np.abs(late - ss.sigma_ss)))
        checks.append(Check("steady state vs evolution to 200 us", err < 1e-6,
                            f"max deviation {err:.2e}"))

    T = 100.0 / g31
    st = evolve(gen, 1.0, g0, T, rtol=rtol, atol=atol)
    tr_err = abs(st.trace() - 1.0)
    herm = st.hermiticity_defect()
    checks.append(Check(f"trace/Hermiticity at T={T:.4g} us", tr_err < 1e-8 and herm < 1e-8,
                        f"|tr-1| {tr_err:.2e}, defect {herm:.2e}"))

    Tm = 10.0 / g31
    mom = evolve_factorial_moments(gen, g0, [Tm], rtol=rtol, atol=atol)
    n1, n2 = float(mom.N1[-1]), float(mom.N2[-1])
    h = 1e-4
    f1, f2 = finite_difference_moments(gen, g0, Tm, h=h)
    # the stencil amplifies the propagator's roundoff, measured here by |Y(1, T) - 1|
    noise = abs(working_gf(gen, 1.0, g0, Tm) - 1.0)
    floor1, floor2 = noise / h, 64.0 / 12.0 * noise / h ** 2
    e1, e2 = abs(f1 - n1), abs(f2 - n2)
    ok = e1 <= 1e-4 * abs(n1) + floor1 and e2 <= 1e-4 * abs(n2) + floor2
    detail = (f"N1 rel {_rel(f1, n1):.2e}, N2 rel {_rel(f2, n2):.2e}"
              f" (roundoff floor {floor2:.1e})")
    checks.append(Check(f"moments vs s-stencil at T={Tm:.4g} us", ok, detail))

    # enough photon numbers to hold all but ~1e-9 of the probability
    need = int(np.ceil(n1 + 12.0 * np.sqrt(max(n2 + n1 - n1 * n1, n1, 1.0)) + 20))
    rep = hierarchy_consistency(gen, g0, Tm, min(n_max, need))
    if rep.skipped:
        checks.append(Check("P_n hierarchy", False, rep.messages[0]))
    else:
        checks.append(Check(
            "P_n hierarchy", rep.consistent,
            "; ".join(rep.messages) or
            f"state error {rep.max_state_error:.2e}, deficit {rep.deficit:.2e}"))

    if ss is not None:
        exact = steady_rate(gen, ss)
        est = steady_emission_rate(model, drive)
        if not est.converged:
            checks.append(Check("windowed slope vs tr(A1 sigma_ss)", False,
                                f"slope did not converge by t={est.t_final:.4g} us"))
        elif exact < 1e-10:
            checks.append(Check("windowed slope vs tr(A1 sigma_ss)", abs(est.rate) < 1e-8,
                                f"dark point, slope {est.rate:.2e}"))
        else:
            e = _rel(est.rate, exact)
            checks.append(Check("windowed slope vs tr(A1 sigma_ss)", e < 1e-3,
                                f"rate {exact:.6g} /us, rel {e:.2e}"))
    return checks
