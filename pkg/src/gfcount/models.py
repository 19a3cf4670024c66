"""Parameter containers and builders for the double-Lambda and N-type atoms.

All frequency-like quantities (decay rates, Rabi frequencies, detunings and
the excited-state splitting) share a single unit, MHz, which the evolution
code reads as inverse microseconds.  No factor of 2*pi is applied anywhere.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, fields, asdict

import numpy as np


class ModelKind(str, enum.Enum):
    DOUBLE_LAMBDA = "double_lambda"
    N_TYPE = "n_type"

    @classmethod
    def parse(cls, value) -> "ModelKind":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "_").replace(" ", "_")
        aliases = {
            "double_lambda": cls.DOUBLE_LAMBDA,
            "doublelambda": cls.DOUBLE_LAMBDA,
            "lambda2": cls.DOUBLE_LAMBDA,
            "n_type": cls.N_TYPE,
            "ntype": cls.N_TYPE,
            "n": cls.N_TYPE,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown model kind {value!r}") from None


# Rb-87 D-line values used by the bundled configs (MHz).
RB87_GAMMA_D1 = 1.4375
RB87_GAMMA_D2 = 1.5167
RB87_HFS_SPLITTING = 814.5


def _check_rate(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value}")
    if value < 0.0:
        raise ValueError(f"{name} must be non-negative, got {value}")
    return value


def _check_beta(beta: float) -> float:
    beta = float(beta)
    if not math.isfinite(beta) or not 0.0 <= beta <= 1.0:
        raise ValueError(f"beta must lie in [0, 1], got {beta}")
    return beta


def _check_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value}")
    return value


def gdc_cross(beta: float, gamma_a: float, gamma_b: float) -> float:
    """Cross-damping rate beta * sqrt(gamma_a * gamma_b) between two dipoles.

    ``beta`` is the alignment factor of the two transition dipoles: 0 for
    perpendicular dipoles (no vacuum-induced coherence), 1 for parallel ones.
    """
    beta = _check_beta(beta)
    gamma_a = _check_rate("gamma_a", gamma_a)
    gamma_b = _check_rate("gamma_b", gamma_b)
    return beta * math.sqrt(gamma_a * gamma_b)


@dataclass(frozen=True)
class AtomModel:
    """Level structure and spontaneous-decay data of a four-level atom.

    Levels 1 and 2 are ground states, 3 and 4 excited states.  ``gamma_ij``
    is the decay constant of the ``i -> j`` channel as it enters the
    generating-function equations (populations decay at twice the sum).
    """

    kind: ModelKind
    gamma31: float = RB87_GAMMA_D1
    gamma32: float = RB87_GAMMA_D1
    gamma41: float = RB87_GAMMA_D1
    gamma42: float = RB87_GAMMA_D1
    beta: float = 0.0
    omega: float = RB87_HFS_SPLITTING
    initial_populations: tuple = (1.0, 0.0, 0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "kind", ModelKind.parse(self.kind))
        for name in ("gamma31", "gamma32", "gamma41", "gamma42"):
            object.__setattr__(self, name, _check_rate(name, getattr(self, name)))
        object.__setattr__(self, "beta", _check_beta(self.beta))
        object.__setattr__(self, "omega", _check_finite("omega", self.omega))
        pops = tuple(float(x) for x in self.initial_populations)
        if len(pops) != 4 or not all(math.isfinite(x) and x >= 0.0 for x in pops):
            raise ValueError("initial_populations must be four non-negative numbers")
        if abs(sum(pops) - 1.0) > 1e-12:
            raise ValueError("initial_populations must sum to one")
        object.__setattr__(self, "initial_populations", pops)

    @property
    def gamma314(self) -> float:
        return gdc_cross(self.beta, self.gamma31, self.gamma41)

    @property
    def gamma324(self) -> float:
        return gdc_cross(self.beta, self.gamma32, self.gamma42)

    @property
    def Gamma3(self) -> float:
        return self.gamma31 + self.gamma32

    @property
    def Gamma4(self) -> float:
        return self.gamma41 + self.gamma42

    @property
    def Gamma34(self) -> float:
        return self.gamma314 + self.gamma324

    def initial_density(self) -> np.ndarray:
        """4x4 initial density matrix (defaults to the pure state |1>)."""
        return np.diag(np.array(self.initial_populations, dtype=complex))

    def replace(self, **changes) -> "AtomModel":
        data = {f.name: getattr(self, f.name) for f in fields(self)}
        data.update(changes)
        return AtomModel(**data)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "gamma31": self.gamma31,
            "gamma32": self.gamma32,
            "gamma41": self.gamma41,
            "gamma42": self.gamma42,
            "beta": self.beta,
            "omega": self.omega,
        }


@dataclass(frozen=True)
class DriveConfig:
    """Rabi frequencies and detunings of the probe, coupling and switching fields.

    The switching field (``omega_s``, ``delta_s``) only acts in the N-type model.
    """

    omega_p: float = 0.0
    omega_c: float = 0.0
    omega_s: float = 0.0
    delta_p: float = 0.0
    delta_c: float = 0.0
    delta_s: float = 0.0

    def __post_init__(self):
        for name in ("omega_p", "omega_c", "omega_s"):
            object.__setattr__(self, name, _check_rate(name, getattr(self, name)))
        for name in ("delta_p", "delta_c", "delta_s"):
            object.__setattr__(self, name, _check_finite(name, getattr(self, name)))

    def replace(self, **changes) -> "DriveConfig":
        data = asdict(self)
        data.update(changes)
        return DriveConfig(**data)

    def to_dict(self) -> dict:
        return asdict(self)


def max_frequency(model: AtomModel, drive: DriveConfig) -> float:
    """Largest frequency scale of a configuration, used to bound the first step."""
    scales = [
        abs(drive.delta_p), abs(drive.delta_c), abs(drive.delta_s),
        drive.omega_p, drive.omega_c, drive.omega_s,
        2 * model.Gamma3, 2 * model.Gamma4,
    ]
    if model.kind is ModelKind.DOUBLE_LAMBDA:
        scales.append(abs(model.omega))
        scales.append(abs(drive.delta_p - model.omega))
        scales.append(abs(drive.delta_c - model.omega))
    else:
        scales.append(abs(drive.delta_p - drive.delta_c + drive.delta_s))
    return max(max(scales), 1e-12)


def build_double_lambda(
    gamma31: float = RB87_GAMMA_D1,
    gamma32: float = RB87_GAMMA_D1,
    gamma41: float = RB87_GAMMA_D1,
    gamma42: float = RB87_GAMMA_D1,
    beta: float = 0.0,
    omega: float = RB87_HFS_SPLITTING,
    omega_p: float | None = None,
    omega_c: float | None = None,
    delta_p: float = 0.0,
    delta_c: float = 0.0,
) -> tuple[AtomModel, DriveConfig]:
    """Double-Lambda atom: probe on 1-3 and 1-4, coupling on 2-3 and 2-4.

    Without explicit Rabi frequencies the Rb-87 D1 setting is used,
    ``omega_p = 0.1 * omega`` and ``omega_c = omega``.
    """
    if omega_p is None:
        omega_p = 0.1 * omega
    if omega_c is None:
        omega_c = omega
    model = AtomModel(
        kind=ModelKind.DOUBLE_LAMBDA,
        gamma31=gamma31, gamma32=gamma32, gamma41=gamma41, gamma42=gamma42,
        beta=beta, omega=omega,
    )
    drive = DriveConfig(omega_p=omega_p, omega_c=omega_c, delta_p=delta_p, delta_c=delta_c)
    return model, drive


def build_n_type(
    gamma31: float = RB87_GAMMA_D1,
    gamma32: float = RB87_GAMMA_D1,
    gamma41: float = RB87_GAMMA_D2,
    gamma42: float = RB87_GAMMA_D2,
    beta: float = 0.0,
    omega_p: float = 1.5,
    omega_c: float = 11.0,
    omega_s: float = 14.0,
    delta_p: float = 0.0,
    delta_c: float = 0.0,
    delta_s: float = 0.0,
) -> tuple[AtomModel, DriveConfig]:
    """N-type atom: probe on 1-3, coupling on 2-3, switching field on 2-4."""
    model = AtomModel(
        kind=ModelKind.N_TYPE,
        gamma31=gamma31, gamma32=gamma32, gamma41=gamma41, gamma42=gamma42,
        beta=beta, omega=0.0,
    )
    drive = DriveConfig(
        omega_p=omega_p, omega_c=omega_c, omega_s=omega_s,
        delta_p=delta_p, delta_c=delta_c, delta_s=delta_s,
    )
    return model, drive
