"""Reference generators built the textbook way, for cross-checking the row transcriptions.

The counting master equation is assembled from operators: a rotating-frame
Hamiltonian H and, for each lower level i, a Kossakowski dissipator with rate
matrix 2*gamma_{k i i l} over the excited levels k, l in {3, 4}.  Jumps into
|1> are the counted ones and are scaled by s.  Vectorisation is column-major,
vec(X rho Y) = (Y^T kron X) vec(rho), matching ``ravel("F")``.
"""
import numpy as np

from gfcount.models import ModelKind


def ket_bra(a, b):
    m = np.zeros((4, 4), dtype=complex)
    m[a - 1, b - 1] = 1.0
    return m


def _left(X):
    return np.kron(np.eye(4), X)


def _right(Y):
    return np.kron(Y.T, np.eye(4))


def rotating_frame(model, drive):
    """Diagonal frame energies and the Rabi matrix of the chosen level scheme."""
    Om = np.zeros((4, 4))
    if ModelKind.parse(model.kind) is ModelKind.DOUBLE_LAMBDA:
        energies = [drive.delta_p, drive.delta_c, 0.0, model.omega]
        for lower, rabi in ((1, drive.omega_p), (2, drive.omega_c)):
            for upper in (3, 4):
                Om[lower - 1, upper - 1] = Om[upper - 1, lower - 1] = rabi
    else:
        energies = [drive.delta_p, drive.delta_c, 0.0, drive.delta_c - drive.delta_s]
        for a, b, rabi in ((1, 3, drive.omega_p), (2, 3, drive.omega_c), (2, 4, drive.omega_s)):
            Om[a - 1, b - 1] = Om[b - 1, a - 1] = rabi
    return np.diag(energies).astype(complex), Om


def decay_matrix(model, lower):
    """gamma_{k i i l} for k, l in (3, 4) and lower level i."""
    if lower == 1:
        g3, g4 = model.gamma31, model.gamma41
    else:
        g3, g4 = model.gamma32, model.gamma42
    cross = model.beta * np.sqrt(g3 * g4)
    return np.array([[g3, cross], [cross, g4]])


def reference_generators(model, drive):
    """(A0, A1) of the counting master equation, from operators."""
    E, Om = rotating_frame(model, drive)
    H = E - 0.5 * Om
    A0 = -1j * (_left(H) - _right(H))
    A1 = np.zeros_like(A0)
    for lower in (1, 2):
        rates = decay_matrix(model, lower)
        for a, k in enumerate((3, 4)):
            for b, l in enumerate((3, 4)):
                c = 2.0 * rates[a, b]
                if c == 0:
                    continue
                # sigma_{i k} rho sigma_{l i}
                jump = c * _left(ket_bra(lower, k)) @ _right(ket_bra(l, lower))
                anti = 0.5 * c * ket_bra(l, k)
                A0 -= _left(anti) + _right(anti)
                if lower == 1:
                    A1 += jump
                else:
                    A0 += jump
    return A0, A1
