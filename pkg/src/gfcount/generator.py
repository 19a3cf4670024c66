"""Counting-field generator A(s) = A0 + s*A1 of the four-level atom.

The 4x4 generating function G is flattened column-major (``G.ravel("F")``),
so entry G_ij (1-based) sits at position ``(i - 1) + 4 * (j - 1)``.  Each
model below lists the ten upper-triangle rows of its equation set; the
remaining six rows follow from G_ji = conj(G_ij).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .models import AtomModel, DriveConfig, ModelKind

DIM = 4
NSTATE = DIM * DIM


def flat_index(i: int, j: int) -> int:
    """Position of the 1-based entry G_ij in the flattened state."""
    return (i - 1) + DIM * (j - 1)


DIAGONAL = np.array([flat_index(k, k) for k in range(1, DIM + 1)])


def flatten(mat: np.ndarray) -> np.ndarray:
    return np.asarray(mat, dtype=complex).ravel(order="F")


def unflatten(vec: np.ndarray) -> np.ndarray:
    return np.asarray(vec).reshape((DIM, DIM), order="F")


def trace_of(vec: np.ndarray) -> complex:
    """Trace of a flattened state, or of each row for a stacked array."""
    return np.asarray(vec)[..., DIAGONAL].sum(axis=-1)


@dataclass(frozen=True)
class GeneratorPair:
    """Affine-in-s generator of the flattened generating function.

    ``A1`` holds only the counted gain terms feeding G_11; everything else
    lives in ``A0``.
    """

    A0: np.ndarray
    A1: np.ndarray

    def __post_init__(self):
        for arr in (self.A0, self.A1):
            arr.setflags(write=False)

    def at(self, s: float) -> np.ndarray:
        return self.A0 + s * self.A1

    @property
    def A(self) -> np.ndarray:
        """Generator of the ordinary master equation, A(1)."""
        return self.A0 + self.A1


class _RowBuilder:
    """Accumulates right-hand sides of dG_ij/dt written in 1-based indices."""

    def __init__(self):
        self.A0 = np.zeros((NSTATE, NSTATE), dtype=complex)
        self.A1 = np.zeros((NSTATE, NSTATE), dtype=complex)
        self.rows: dict[tuple[int, int], list[tuple[complex, tuple[int, int], bool]]] = {}

    def row(self, i, j, *terms):
        """Register the RHS of dG_ij/dt as (coefficient, (k, l)[, counted]) terms."""
        entries = self.rows.setdefault((i, j), [])
        for term in terms:
            coef, kl = term[0], term[1]
            counted = term[2] if len(term) > 2 else False
            if coef != 0:
                entries.append((complex(coef), kl, counted))

    def build(self) -> GeneratorPair:
        for (i, j), terms in self.rows.items():
            self._scatter(i, j, terms)
            if i != j:
                # dG_ji/dt = conj(dG_ij/dt) with G_kl -> G_lk
                mirrored = [(c.conjugate(), (l, k), cnt) for c, (k, l), cnt in terms]
                self._scatter(j, i, mirrored)
        return GeneratorPair(self.A0, self.A1)

    def _scatter(self, i, j, terms):
        r = flat_index(i, j)
        for coef, (k, l), counted in terms:
            target = self.A1 if counted else self.A0
            target[r, flat_index(k, l)] += coef


def _double_lambda(b: _RowBuilder, m: AtomModel, d: DriveConfig):
    g31, g32, g41, g42 = m.gamma31, m.gamma32, m.gamma41, m.gamma42
    g314, g324 = m.gamma314, m.gamma324
    G3, G4, G34 = m.Gamma3, m.Gamma4, m.Gamma34
    Op, Oc = d.omega_p, d.omega_c
    Dp, Dc, w = d.delta_p, d.delta_c, m.omega
    h = 0.5j  # i/2

    b.row(1, 1,
          (2 * g31, (3, 3), True), (2 * g314, (3, 4), True),
          (2 * g314, (4, 3), True), (2 * g41, (4, 4), True),
          (-h * Op, (1, 3)), (-h * Op, (1, 4)), (h * Op, (3, 1)), (h * Op, (4, 1)))
    b.row(2, 2,
          (2 * g32, (3, 3)), (2 * g324, (3, 4)), (2 * g324, (4, 3)), (2 * g42, (4, 4)),
          (-h * Oc, (2, 3)), (-h * Oc, (2, 4)), (h * Oc, (3, 2)), (h * Oc, (4, 2)))
    b.row(3, 3,
          (-2 * G3, (3, 3)), (-G34, (3, 4)), (-G34, (4, 3)),
          (-h * Op, (3, 1)), (h * Op, (1, 3)),
          (-h * Oc, (3, 2)), (h * Oc, (2, 3)))
    b.row(4, 4,
          (-2 * G4, (4, 4)), (-G34, (3, 4)), (-G34, (4, 3)),
          (-h * Op, (4, 1)), (h * Op, (1, 4)),
          (-h * Oc, (4, 2)), (h * Oc, (2, 4)))
    b.row(1, 2,
          (-1j * (Dp - Dc), (1, 2)),
          (-h * Oc, (1, 3)), (-h * Oc, (1, 4)),
          (h * Op, (3, 2)), (h * Op, (4, 2)))
    b.row(1, 3,
          (-1j * Dp - G3, (1, 3)), (-G34, (1, 4)),
          (-h * Op, (1, 1)), (h * Op, (3, 3)), (h * Op, (4, 3)),
          (-h * Oc, (1, 2)))
    b.row(1, 4,
          (-1j * (Dp - w) - G4, (1, 4)), (-G34, (1, 3)),
          (-h * Op, (1, 1)), (h * Op, (3, 4)), (h * Op, (4, 4)),
          (-h * Oc, (1, 2)))
    b.row(2, 3,
          (-1j * Dc - G3, (2, 3)), (-G34, (2, 4)),
          (-h * Oc, (2, 2)), (h * Oc, (3, 3)), (h * Oc, (4, 3)),
          (-h * Op, (2, 1)))
    b.row(2, 4,
          (-1j * (Dc - w) - G4, (2, 4)), (-G34, (2, 3)),
          (-h * Oc, (2, 2)), (h * Oc, (3, 4)), (h * Oc, (4, 4)),
          (-h * Op, (2, 1)))
    b.row(3, 4,
          (1j * w - (G3 + G4), (3, 4)), (-G34, (3, 3)), (-G34, (4, 4)),
          (-h * Op, (3, 1)), (h * Op, (1, 4)),
          (-h * Oc, (3, 2)), (h * Oc, (2, 4)))


def _n_type(b: _RowBuilder, m: AtomModel, d: DriveConfig):
    g31, g32, g41, g42 = m.gamma31, m.gamma32, m.gamma41, m.gamma42
    g314, g324 = m.gamma314, m.gamma324
    G3, G4, G34 = m.Gamma3, m.Gamma4, m.Gamma34
    Op, Oc, Os = d.omega_p, d.omega_c, d.omega_s
    Dp, Dc, Ds = d.delta_p, d.delta_c, d.delta_s
    h = 0.5j

    b.row(1, 1,
          (2 * g31, (3, 3), True), (2 * g314, (3, 4), True),
          (2 * g314, (4, 3), True), (2 * g41, (4, 4), True),
          (-h * Op, (1, 3)), (h * Op, (3, 1)))
    b.row(2, 2,
          (2 * g32, (3, 3)), (2 * g324, (3, 4)), (2 * g324, (4, 3)), (2 * g42, (4, 4)),
          (-h * Oc, (2, 3)), (h * Oc, (3, 2)),
          (-h * Os, (2, 4)), (h * Os, (4, 2)))
    b.row(3, 3,
          (-2 * G3, (3, 3)), (-G34, (3, 4)), (-G34, (4, 3)),
          (-h * Op, (3, 1)), (h * Op, (1, 3)),
          (-h * Oc, (3, 2)), (h * Oc, (2, 3)))
    b.row(4, 4,
          (-2 * G4, (4, 4)), (-G34, (3, 4)), (-G34, (4, 3)),
          (-h * Os, (4, 2)), (h * Os, (2, 4)))
    b.row(1, 2,
          (-1j * (Dp - Dc), (1, 2)),
          (-h * Oc, (1, 3)), (-h * Os, (1, 4)), (h * Op, (3, 2)))
    b.row(1, 3,
          (-1j * Dp - G3, (1, 3)), (-G34, (1, 4)),
          (-h * Op, (1, 1)), (h * Op, (3, 3)),
          (-h * Oc, (1, 2)))
    b.row(1, 4,
          (-1j * (Dp - Dc + Ds) - G4, (1, 4)), (-G34, (1, 3)),
          (-h * Os, (1, 2)), (h * Op, (3, 4)))
    b.row(2, 3,
          (-1j * Dc - G3, (2, 3)), (-G34, (2, 4)),
          (-h * Oc, (2, 2)), (h * Oc, (3, 3)),
          (-h * Op, (2, 1)), (h * Os, (4, 3)))
    b.row(2, 4,
          (-1j * Ds - G4, (2, 4)), (-G34, (2, 3)),
          (-h * Os, (2, 2)), (h * Os, (4, 4)),
          (h * Oc, (3, 4)))
    b.row(3, 4,
          (-1j * (Ds - Dc) - (G3 + G4), (3, 4)), (-G34, (3, 3)), (-G34, (4, 4)),
          (-h * Os, (3, 2)), (h * Op, (1, 4)), (h * Oc, (2, 4)))


_TRANSCRIPTIONS = {
    ModelKind.DOUBLE_LAMBDA: _double_lambda,
    ModelKind.N_TYPE: _n_type,
}


def assemble_generators(model: AtomModel, drive: DriveConfig) -> GeneratorPair:
    """Build (A0, A1) so that dg/dt = (A0 + s*A1) g for the flattened G.

    Parameters are validated by the ``AtomModel``/``DriveConfig``
    constructors; an unrecognised kind raises ``ValueError``.
    """
    try:
        fill = _TRANSCRIPTIONS[ModelKind.parse(model.kind)]
    except KeyError:
        raise ValueError(f"unknown model kind {model.kind!r}") from None
    builder = _RowBuilder()
    fill(builder, model, drive)
    return builder.build()
