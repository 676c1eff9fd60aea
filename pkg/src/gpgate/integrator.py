"""Split-operator time evolution on the four-site lattice.

The Hamiltonian splits into a site-diagonal part (potential plus the
``alpha |psi|**2`` self-interaction) and the hopping part. Both are solved
exactly: the diagonal flow is a pure phase rotation at fixed ``|psi_s|``,
and the hopping flow factorizes over the two lattice axes with

    exp(-i h (I - X)) = exp(-i h) (cos h I + i sin h X).

A fixed-step RK4 integrator on the full right-hand side and a dense
eigendecomposition propagator for the linear problem are kept as
independent references.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numba
import numpy as np

from .lattice import (
    NORM_TOL,
    EvolutionParams,
    StateVector,
    SystemParams,
    linear_hamiltonian,
    rhs,
)

RK4_NORM_TOL = 1e-6


class NonFiniteState(ArithmeticError):
    """An amplitude became NaN or infinite during evolution."""


class NormDrift(ArithmeticError):
    """The norm left its tolerance band during evolution."""


class SplittingScheme(str, enum.Enum):
    STRANG_DIAGONAL_FIRST = "strang_diagonal_first"
    STRANG_KINETIC_FIRST = "strang_kinetic_first"
    LIE = "lie"

    @classmethod
    def parse(cls, value) -> "SplittingScheme":
        return value if isinstance(value, cls) else cls(value)


_SCHEME_CODE = {
    SplittingScheme.STRANG_DIAGONAL_FIRST: 0,
    SplittingScheme.STRANG_KINETIC_FIRST: 1,
    SplittingScheme.LIE: 2,
}

DEFAULT_SCHEME = SplittingScheme.STRANG_DIAGONAL_FIRST


@dataclass(frozen=True)
class Trajectory:
    """Sampled occupations of one evolution.

    ``occupations[i]`` holds ``|psi_s|**2`` in linear site order at time
    ``tau[i]``. ``max_norm_error`` is taken over every step, not only the
    sampled ones.
    """

    tau: np.ndarray
    occupations: np.ndarray
    norm: np.ndarray
    final_state: StateVector
    max_norm_error: float

    def __len__(self):
        return len(self.tau)


# -- exact sub-flows on raw arrays -------------------------------------------


def _diagonal(psi: np.ndarray, potential: np.ndarray, alpha: float, h: float) -> np.ndarray:
    dens = psi.real**2 + psi.imag**2
    return psi * np.exp(-1j * h * (potential + alpha * dens))


def _kinetic(psi: np.ndarray, h: float) -> np.ndarray:
    # exp(-ih(I - X)) = P+ + exp(-2ih) P- on each axis; this form keeps the
    # norm to a few ulps over long runs, unlike the cos/sin rotation
    z = np.exp(-2j * h)
    p = psi.reshape(2, 2)
    plus, minus = 0.5 * (p[0] + p[1]), 0.5 * z * (p[0] - p[1])
    p = np.stack([plus + minus, plus - minus])
    plus, minus = 0.5 * (p[:, 0] + p[:, 1]), 0.5 * z * (p[:, 0] - p[:, 1])
    return np.stack([plus + minus, plus - minus], axis=1).reshape(4)


def _step(psi, potential, alpha, h, scheme):
    if scheme is SplittingScheme.STRANG_DIAGONAL_FIRST:
        psi = _diagonal(psi, potential, alpha, 0.5 * h)
        psi = _kinetic(psi, h)
        return _diagonal(psi, potential, alpha, 0.5 * h)
    if scheme is SplittingScheme.STRANG_KINETIC_FIRST:
        psi = _kinetic(psi, 0.5 * h)
        psi = _diagonal(psi, potential, alpha, h)
        return _kinetic(psi, 0.5 * h)
    # Lie: hopping, then the diagonal flow
    return _diagonal(_kinetic(psi, h), potential, alpha, h)


def diagonal_flow(state: StateVector, params: SystemParams, h: float) -> StateVector:
    """Exact flow of the site-local terms for time ``h``; occupations are unchanged."""
    return StateVector(_diagonal(state.amplitudes, params.potential, params.alpha, h))


def kinetic_flow(state: StateVector, h: float) -> StateVector:
    """Exact hopping flow ``exp(-i h K)`` for time ``h``."""
    return StateVector(_kinetic(state.amplitudes, h))


def step(state: StateVector, params: SystemParams, h: float, scheme=DEFAULT_SCHEME) -> StateVector:
    """One splitting step of size ``h``."""
    scheme = SplittingScheme.parse(scheme)
    return StateVector(_step(state.amplitudes, params.potential, params.alpha, h, scheme))


def _sample_indices(n_steps: int, stride: int) -> list[int]:
    idx = list(range(0, n_steps + 1, stride))
    if idx[-1] != n_steps:
        idx.append(n_steps)
    return idx


def evolve(
    state: StateVector,
    params: SystemParams,
    evo: EvolutionParams,
    scheme=DEFAULT_SCHEME,
) -> Trajectory:
    """Integrate with the split-operator method and sample the occupations.

    Samples are taken at step 0, every ``evo.sample_stride`` steps and at the
    final step. The norm is checked after every step.

    Raises
    ------
    NonFiniteState
        If an amplitude becomes NaN or infinite.
    NormDrift
        If the norm leaves ``1 +- 1e-12``.
    """
    scheme = SplittingScheme.parse(scheme)
    n_steps, h = evo.step_count, evo.step_size
    samples = set(_sample_indices(n_steps, evo.sample_stride))
    potential, alpha = params.potential, params.alpha

    psi = state.amplitudes.copy()
    taus, occs, norms = [], [], []
    max_err = 0.0

    def record(k, dens, nrm):
        taus.append(k * h)
        occs.append(dens)
        norms.append(nrm)

    dens = psi.real**2 + psi.imag**2
    record(0, dens, dens.sum())
    for k in range(1, n_steps + 1):
        with np.errstate(invalid="ignore", over="ignore"):
            psi = _step(psi, potential, alpha, h, scheme)
        dens = psi.real**2 + psi.imag**2
        nrm = dens.sum()
        if not np.isfinite(nrm):
            raise NonFiniteState(f"non-finite amplitude at step {k} (tau={k * h:.6g})")
        err = abs(nrm - 1.0)
        if err > NORM_TOL:
            raise NormDrift(f"norm error {err:.3e} at step {k}")
        max_err = max(max_err, err)
        if k in samples:
            record(k, dens, nrm)

    tau = np.array(taus)
    if n_steps:
        tau[-1] = evo.tau_final
    return Trajectory(
        tau=tau,
        occupations=np.array(occs),
        norm=np.array(norms),
        final_state=StateVector(psi),
        max_norm_error=max_err,
    )


def rk4_evolve(state: StateVector, params: SystemParams, evo: EvolutionParams) -> Trajectory:
    """Classical fixed-step RK4 on the full nonlinear right-hand side.

    Reference integrator for cross-validation only. RK4 is not norm
    preserving; a drift beyond 1e-6 means ``dtau`` is too coarse and raises
    :class:`NormDrift`.
    """
    n_steps, h = evo.step_count, evo.step_size
    samples = set(_sample_indices(n_steps, evo.sample_stride))
    psi = state.amplitudes.copy()
    taus, occs, norms = [0.0], [np.abs(psi) ** 2], [1.0]
    max_err = 0.0
    for k in range(1, n_steps + 1):
        k1 = rhs(psi, params)
        k2 = rhs(psi + 0.5 * h * k1, params)
        k3 = rhs(psi + 0.5 * h * k2, params)
        k4 = rhs(psi + h * k3, params)
        psi = psi + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        dens = psi.real**2 + psi.imag**2
        nrm = dens.sum()
        if not np.isfinite(nrm):
            raise NonFiniteState(f"non-finite amplitude at step {k}")
        err = abs(nrm - 1.0)
        if err > RK4_NORM_TOL:
            raise NormDrift(f"RK4 norm error {err:.3e} at step {k}; reduce dtau")
        max_err = max(max_err, err)
        if k in samples:
            taus.append(k * h)
            occs.append(dens)
            norms.append(nrm)
    tau = np.array(taus)
    if n_steps:
        tau[-1] = evo.tau_final
    return Trajectory(
        tau=tau,
        occupations=np.array(occs),
        norm=np.array(norms),
        final_state=StateVector(psi, check=False),
        max_norm_error=max_err,
    )


def dense_linear_propagator(params: SystemParams, tau: float) -> np.ndarray:
    """``exp(-i tau H)`` for the alpha = 0 Hamiltonian via Hermitian eigendecomposition.

    Test oracle; the nonlinearity is ignored.
    """
    w, U = np.linalg.eigh(linear_hamiltonian(params))
    return (U * np.exp(-1j * tau * w)) @ U.conj().T


@dataclass(frozen=True)
class OrderEstimate:
    """Result of a step-size convergence study.

    ``slope`` is the fitted exponent ``p`` in ``error ~ h**p``; it is NaN when
    every error sits at the round-off floor (``at_floor``).
    """

    slope: float
    step_sizes: np.ndarray
    errors: np.ndarray
    at_floor: bool


FLOOR = 1e-12


def measure_order(
    params: SystemParams,
    initial: StateVector,
    scheme,
    tau_final: float,
    h_list,
    reference_factor: int = 100,
) -> OrderEstimate:
    """Fit the global convergence order of a splitting scheme.

    The reference solution comes from :func:`rk4_evolve` at
    ``min(h_list) / reference_factor``. Errors are max-abs amplitude
    differences at ``tau_final``; the slope is a least-squares fit in log-log.
    """
    h_list = sorted((float(h) for h in h_list), reverse=True)
    if len(h_list) < 3:
        raise ValueError("measure_order needs at least three step sizes")
    ref_evo = EvolutionParams(h_list[-1] / reference_factor, tau_final, sample_stride=10**9)
    reference = rk4_evolve(initial, params, ref_evo).final_state.amplitudes

    hs, errs = [], []
    for h in h_list:
        evo = EvolutionParams(h, tau_final, sample_stride=10**9)
        final = evolve(initial, params, evo, scheme).final_state.amplitudes
        hs.append(evo.step_size)
        errs.append(np.max(np.abs(final - reference)))
    hs, errs = np.array(hs), np.array(errs)

    if np.all(errs < FLOOR):
        return OrderEstimate(float("nan"), hs, errs, True)
    slope = np.polyfit(np.log(hs), np.log(np.maximum(errs, np.finfo(float).tiny)), 1)[0]
    return OrderEstimate(float(slope), hs, errs, False)


# -- compiled batch kernel -----------------------------------------------------


@numba.njit(cache=True, nogil=True)
def _propagate_batch(psi, potential, alpha, h, n_steps, scheme_code):
    """Advance every row of ``psi`` (shape (B, 4)) by ``n_steps`` splitting steps."""
    out = psi.copy()
    if scheme_code == 1:
        hk, hd = 0.5 * h, h
    elif scheme_code == 2:
        hk, hd = h, h
    else:
        hk, hd = h, 0.5 * h
    z = 0.5 * np.exp(-2j * hk)
    for row in range(out.shape[0]):
        x0, x1, x2, x3 = out[row, 0], out[row, 1], out[row, 2], out[row, 3]
        for _ in range(n_steps):
            if scheme_code == 0 or scheme_code == 2:
                if scheme_code == 0:
                    x0 *= np.exp(-1j * hd * (potential[0] + alpha * (x0.real**2 + x0.imag**2)))
                    x1 *= np.exp(-1j * hd * (potential[1] + alpha * (x1.real**2 + x1.imag**2)))
                    x2 *= np.exp(-1j * hd * (potential[2] + alpha * (x2.real**2 + x2.imag**2)))
                    x3 *= np.exp(-1j * hd * (potential[3] + alpha * (x3.real**2 + x3.imag**2)))
                # hopping along q0 (pairs 0-2, 1-3) then q1 (pairs 0-1, 2-3)
                u, v = 0.5 * (x0 + x2), z * (x0 - x2)
                x0, x2 = u + v, u - v
                u, v = 0.5 * (x1 + x3), z * (x1 - x3)
                x1, x3 = u + v, u - v
                u, v = 0.5 * (x0 + x1), z * (x0 - x1)
                x0, x1 = u + v, u - v
                u, v = 0.5 * (x2 + x3), z * (x2 - x3)
                x2, x3 = u + v, u - v
                x0 *= np.exp(-1j * hd * (potential[0] + alpha * (x0.real**2 + x0.imag**2)))
                x1 *= np.exp(-1j * hd * (potential[1] + alpha * (x1.real**2 + x1.imag**2)))
                x2 *= np.exp(-1j * hd * (potential[2] + alpha * (x2.real**2 + x2.imag**2)))
                x3 *= np.exp(-1j * hd * (potential[3] + alpha * (x3.real**2 + x3.imag**2)))
            else:
                u, v = 0.5 * (x0 + x2), z * (x0 - x2)
                x0, x2 = u + v, u - v
                u, v = 0.5 * (x1 + x3), z * (x1 - x3)
                x1, x3 = u + v, u - v
                u, v = 0.5 * (x0 + x1), z * (x0 - x1)
                x0, x1 = u + v, u - v
                u, v = 0.5 * (x2 + x3), z * (x2 - x3)
                x2, x3 = u + v, u - v
                x0 *= np.exp(-1j * hd * (potential[0] + alpha * (x0.real**2 + x0.imag**2)))
                x1 *= np.exp(-1j * hd * (potential[1] + alpha * (x1.real**2 + x1.imag**2)))
                x2 *= np.exp(-1j * hd * (potential[2] + alpha * (x2.real**2 + x2.imag**2)))
                x3 *= np.exp(-1j * hd * (potential[3] + alpha * (x3.real**2 + x3.imag**2)))
                u, v = 0.5 * (x0 + x2), z * (x0 - x2)
                x0, x2 = u + v, u - v
                u, v = 0.5 * (x1 + x3), z * (x1 - x3)
                x1, x3 = u + v, u - v
                u, v = 0.5 * (x0 + x1), z * (x0 - x1)
                x0, x1 = u + v, u - v
                u, v = 0.5 * (x2 + x3), z * (x2 - x3)
                x2, x3 = u + v, u - v
        out[row, 0], out[row, 1], out[row, 2], out[row, 3] = x0, x1, x2, x3
    return out


def propagate_final(states, params: SystemParams, evo: EvolutionParams, scheme=DEFAULT_SCHEME) -> np.ndarray:
    """Final amplitudes for a batch of initial states, without sampling.

    Same splitting as :func:`evolve`, compiled; used wherever only the end
    state matters (gate scoring, synthesis). Rows that turn non-finite are
    returned as is; callers decide how to flag them.
    """
    scheme = SplittingScheme.parse(scheme)
    psi = np.atleast_2d(np.asarray(
        [s.amplitudes if isinstance(s, StateVector) else s for s in states], dtype=complex))
    return _propagate_batch(
        psi, params.potential.astype(float), params.alpha, evo.step_size, evo.step_count,
        _SCHEME_CODE[scheme])
