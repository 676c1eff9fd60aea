"""Four-site lattice, Gross-Pitaevskii parameters and conserved quantities.

Everything is dimensionless. Energies are measured in units of the hopping
scale ``eps = hbar**2 / (2 m dx**2)`` and time in ``tau = t * eps / hbar``, so
``hbar``, ``m`` and ``dx`` never appear at runtime. In these units the
equation of motion for the amplitude on site ``(q0, q1)`` reads::

    i dpsi/dtau = -[psi(1-q0, q1) + psi(q0, 1-q1) - 2 psi(q0, q1)]
                  + [V(q0, q1) + alpha |psi(q0, q1)|**2] psi(q0, q1)

Sites are stored in linear order ``2*q0 + q1``: (0,0), (0,1), (1,0), (1,1).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple

import numpy as np

NORM_TOL = 1e-12

# linear index order used by every array, file and report
SITE_LABELS = ("00", "01", "10", "11")


class NormError(ValueError):
    """Raised when a state violates the unit-norm invariant."""


class SiteIndex(NamedTuple):
    q0: int
    q1: int

    @property
    def linear(self) -> int:
        return 2 * self.q0 + self.q1

    @classmethod
    def from_linear(cls, index: int) -> "SiteIndex":
        if index not in (0, 1, 2, 3):
            raise ValueError(f"linear site index must be in 0..3, got {index}")
        return cls(index // 2, index % 2)

    @classmethod
    def parse(cls, value) -> "SiteIndex":
        """Accept a SiteIndex, a ``(q0, q1)`` pair or a label such as ``"11"``."""
        if isinstance(value, SiteIndex):
            return value
        if isinstance(value, str):
            if value not in SITE_LABELS:
                raise ValueError(f"unknown site label {value!r}")
            return cls(int(value[0]), int(value[1]))
        q0, q1 = value
        if q0 not in (0, 1) or q1 not in (0, 1):
            raise ValueError(f"site bits must be 0 or 1, got {(q0, q1)}")
        return cls(int(q0), int(q1))

    def __str__(self) -> str:
        return f"{self.q0}{self.q1}"


SITES = tuple(SiteIndex.from_linear(i) for i in range(4))
READOUT_SITE = SiteIndex(1, 1)


def _readonly(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype).reshape(4)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class StateVector:
    """Four complex amplitudes on the 2x2 lattice, unit norm.

    Construction checks the norm; pass ``check=False`` only for intermediate
    vectors that are not physical states (e.g. Runge-Kutta stages).
    """

    amplitudes: np.ndarray
    check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        amps = _readonly(self.amplitudes, complex)
        object.__setattr__(self, "amplitudes", amps)
        if not np.all(np.isfinite(amps)):
            raise NormError("state has non-finite amplitudes")
        if self.check:
            err = abs(norm(self) - 1.0)
            if err > NORM_TOL:
                raise NormError(f"state norm deviates from 1 by {err:.3e}")

    @classmethod
    def from_sites(cls, values: Mapping) -> "StateVector":
        """Build from ``{site: amplitude}``; unspecified sites are empty."""
        amps = np.zeros(4, complex)
        for site, value in values.items():
            amps[SiteIndex.parse(site).linear] = value
        return cls(amps)

    @classmethod
    def basis(cls, site) -> "StateVector":
        return cls.from_sites({site: 1.0})

    @classmethod
    def uniform(cls) -> "StateVector":
        return cls(np.full(4, 0.5, complex))

    def amplitude(self, site) -> complex:
        return complex(self.amplitudes[SiteIndex.parse(site).linear])

    @property
    def occupations(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def conjugate(self) -> "StateVector":
        return StateVector(self.amplitudes.conj())

    def __eq__(self, other):
        if not isinstance(other, StateVector):
            return NotImplemented
        return bool(np.array_equal(self.amplitudes, other.amplitudes))

    def __hash__(self):
        return hash(self.amplitudes.tobytes())


@dataclass(frozen=True)
class SystemParams:
    """Nonlinearity ``alpha`` and on-site potentials, both in units of eps.

    The potential on site (1,1) is the energy reference and is normally 0;
    other values are allowed but reported via :attr:`reference_shifted`.
    """

    alpha: float
    potential: np.ndarray = field(default_factory=lambda: np.zeros(4))

    def __post_init__(self):
        object.__setattr__(self, "alpha", float(self.alpha))
        pot = _readonly(self.potential, float)
        object.__setattr__(self, "potential", pot)
        if not np.isfinite(self.alpha) or not np.all(np.isfinite(pot)):
            raise ValueError("SystemParams must be finite")

    @property
    def reference_shifted(self) -> bool:
        return self.potential[READOUT_SITE.linear] != 0.0

    def with_alpha(self, alpha: float) -> "SystemParams":
        return SystemParams(alpha, self.potential)

    def __eq__(self, other):
        if not isinstance(other, SystemParams):
            return NotImplemented
        return self.alpha == other.alpha and np.array_equal(self.potential, other.potential)

    def __hash__(self):
        return hash((self.alpha, self.potential.tobytes()))


@dataclass(frozen=True)
class EvolutionParams:
    """Nominal step ``dtau``, final time and trajectory sampling stride.

    The integrator takes ``step_count = round(tau_final / dtau)`` steps of
    size ``tau_final / step_count`` so that the run ends exactly at
    ``tau_final``.
    """

    dtau: float
    tau_final: float
    sample_stride: int = 10

    def __post_init__(self):
        if not (np.isfinite(self.dtau) and self.dtau > 0):
            raise ValueError(f"dtau must be finite and positive, got {self.dtau}")
        if not (np.isfinite(self.tau_final) and self.tau_final >= 0):
            raise ValueError(f"tau_final must be finite and >= 0, got {self.tau_final}")
        if int(self.sample_stride) != self.sample_stride or self.sample_stride < 1:
            raise ValueError(f"sample_stride must be a positive integer, got {self.sample_stride}")

    @property
    def step_count(self) -> int:
        if self.tau_final == 0:
            return 0
        return max(1, int(round(self.tau_final / self.dtau)))

    @property
    def step_size(self) -> float:
        n = self.step_count
        return self.tau_final / n if n else 0.0


def hopping_matrix() -> np.ndarray:
    """Kinetic stencil ``K`` with ``(K psi)(q) = 2 psi(q) - psi(flip q0) - psi(flip q1)``."""
    X = np.array([[0.0, 1.0], [1.0, 0.0]])
    I = np.eye(2)
    return 2.0 * np.eye(4) - np.kron(X, I) - np.kron(I, X)


def linear_hamiltonian(params: SystemParams) -> np.ndarray:
    """Hermitian 4x4 matrix of the alpha = 0 problem, ``K + diag(V)``."""
    return hopping_matrix() + np.diag(params.potential)


def _amps(state) -> np.ndarray:
    if isinstance(state, StateVector):
        return state.amplitudes
    return np.asarray(state, dtype=complex)


def _hop(psi: np.ndarray) -> np.ndarray:
    p = psi.reshape(2, 2)
    return (2.0 * p - p[::-1, :] - p[:, ::-1]).reshape(4)


def norm(state) -> float:
    """Total occupation ``sum_s |psi_s|**2``."""
    psi = _amps(state)
    return float(np.sum(psi.real**2 + psi.imag**2))


def gp_energy(state, params: SystemParams) -> float:
    """Conserved Gross-Pitaevskii energy in units of eps.

    ``E = <psi|K|psi> + sum_s V_s |psi_s|**2 + (alpha/2) sum_s |psi_s|**4``
    """
    psi = _amps(state)
    dens = psi.real**2 + psi.imag**2
    kinetic = np.vdot(psi, _hop(psi)).real
    return float(kinetic + np.dot(params.potential, dens) + 0.5 * params.alpha * np.sum(dens**2))


def rhs(state, params: SystemParams) -> np.ndarray:
    """Time derivative ``dpsi/dtau`` of the lattice equation of motion."""
    psi = _amps(state)
    dens = psi.real**2 + psi.imag**2
    return -1j * (_hop(psi) + (params.potential + params.alpha * dens) * psi)


def random_state(rng: np.random.Generator) -> StateVector:
    """Haar-ish random normalized state; handy for property tests."""
    z = rng.normal(size=4) + 1j * rng.normal(size=4)
    return StateVector(z / np.linalg.norm(z))


def site_map(values: Iterable) -> dict[str, float]:
    """``{"00": v0, ...}`` view of a length-4 per-site array."""
    return {label: float(v) for label, v in zip(SITE_LABELS, values)}
