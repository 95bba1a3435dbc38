"""Reduction to the local 2x2 density matrix and derived quantities.

The reduced state of the spin is the bath trace of the full projector.
In the block layout of `dynamics` this needs no matrix algebra: the
excited population is the squared weight of the two excited blocks, and
the off-diagonal element pairs ground and excited amplitudes over a
common bath index,

    rho01 = sum_b  <ground,b|Psi> * conj(<excited,b|Psi>).

With this orientation the free phase of rho01 advances as exp(+i*delta_e*t),
matching the rate-equation convention used in `ham`.

Also provided: the band kernel f(t), the normalized free phase sum over
the lower band. Its decay width sets the bath correlation time (~1/band
width) and, for equidistant levels, it recurs exactly with period
2*pi*n1/band_width.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

from .dynamics import PureState, SpectralPropagator, evolve_grid
from .model import FiniteBathModel

_NORM_TOL = 1e-6


@dataclass(frozen=True)
class ReducedState:
    """2x2 spin density matrix, basis order (ground, excited)."""

    rho: np.ndarray

    @classmethod
    def from_elements(cls, rho11: float, rho01: complex) -> "ReducedState":
        m = np.array([[1.0 - rho11, rho01], [np.conj(rho01), rho11]], dtype=complex)
        m.setflags(write=False)
        return cls(m)

    @property
    def rho00(self) -> float:
        return float(self.rho[0, 0].real)

    @property
    def rho11(self) -> float:
        return float(self.rho[1, 1].real)

    @property
    def rho01(self) -> complex:
        return complex(self.rho[0, 1])

    def eigenvalues(self) -> np.ndarray:
        """Closed-form eigenvalues 1/2 +- sqrt((rho11-1/2)^2 + |rho01|^2)."""
        half_split = np.sqrt((self.rho11 - 0.5) ** 2 + abs(self.rho01) ** 2)
        return np.array([0.5 - half_split, 0.5 + half_split])

    def validate(self, trace_tol: float = 1e-10, psd_tol: float = 1e-10) -> None:
        if np.abs(self.rho[0, 1] - np.conj(self.rho[1, 0])) > 1e-12:
            raise ValueError("reduced state is not Hermitian")
        trace = self.rho[0, 0].real + self.rho[1, 1].real
        if abs(trace - 1.0) > trace_tol:
            raise ValueError(f"reduced state trace {trace} deviates from 1")
        if self.eigenvalues()[0] < -psd_tol:
            raise ValueError(f"reduced state has negative eigenvalue {self.eigenvalues()[0]}")


def reduce_state(state: PureState) -> ReducedState:
    """Trace out the bath. Rejects unnormalized input."""
    nrm = state.norm()
    if abs(nrm - 1.0) > _NORM_TOL:
        raise ValueError(f"state norm {nrm} is not 1 within {_NORM_TOL}")
    rho11 = np.sum(np.abs(state.excited_lower) ** 2) + np.sum(np.abs(state.excited_upper) ** 2)
    rho01 = np.sum(state.ground_lower * np.conj(state.excited_lower)) + np.sum(
        state.ground_upper * np.conj(state.excited_upper)
    )
    return ReducedState.from_elements(float(rho11), complex(rho01))


def entropy(reduced: ReducedState) -> float:
    """Von Neumann entropy in nats; eigenvalues clamped to [0, 1] first."""
    p = np.clip(reduced.eigenvalues(), 0.0, 1.0)
    p = p[p > 0.0]
    return float(-np.sum(p * np.log(p)))


def purity(reduced: ReducedState) -> float:
    """Tr rho^2, in [1/2, 1] for a qubit."""
    return float(np.trace(reduced.rho @ reduced.rho).real)


def coherence(reduced: ReducedState) -> float:
    """Squared modulus of the off-diagonal element."""
    return float(abs(reduced.rho01) ** 2)


def coupled_probability(state: PureState) -> float:
    """Total weight in the resonant block; conserved along any trajectory."""
    return float(np.sum(np.abs(state.coupled) ** 2))


@dataclass(frozen=True)
class Trajectory:
    """Reduced-state samples on a time grid, with derived scalars."""

    t_grid: np.ndarray
    rho11: np.ndarray
    rho01: np.ndarray      # complex series
    entropy: np.ndarray
    purity: np.ndarray
    coherence: np.ndarray  # |rho01|^2
    p_coupled: np.ndarray

    def __len__(self) -> int:
        return int(self.t_grid.size)

    def reduced_state(self, i: int) -> ReducedState:
        return ReducedState.from_elements(float(self.rho11[i]), complex(self.rho01[i]))

    def reduced_states(self) -> Iterator[ReducedState]:
        for i in range(len(self)):
            yield self.reduced_state(i)


def _scalars_from_series(rho11: np.ndarray, rho01: np.ndarray):
    coh = np.abs(rho01) ** 2
    half_split = np.sqrt((rho11 - 0.5) ** 2 + coh)
    lo = np.clip(0.5 - half_split, 0.0, 1.0)
    hi = np.clip(0.5 + half_split, 0.0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        ent = -(np.where(lo > 0, lo * np.log(np.where(lo > 0, lo, 1.0)), 0.0)
                + np.where(hi > 0, hi * np.log(np.where(hi > 0, hi, 1.0)), 0.0))
    pur = rho11**2 + (1.0 - rho11) ** 2 + 2.0 * coh
    return ent, pur, coh


def sample_trajectory(
    propagator: SpectralPropagator, state0: PureState, t_grid
) -> Trajectory:
    """Propagate and reduce on the whole grid in one batched pass."""
    t = np.asarray(t_grid, dtype=float)
    amps = evolve_grid(propagator, state0, t)
    n1, n2 = propagator.n1, propagator.n2
    nc = n1 + n2
    exc_low = amps[:n1]
    gnd_up = amps[n1:nc]
    gnd_low = amps[nc : nc + n1]
    exc_up = amps[nc + n1 :]

    rho11 = np.sum(np.abs(exc_low) ** 2, axis=0) + np.sum(np.abs(exc_up) ** 2, axis=0)
    rho01 = np.sum(gnd_low * np.conj(exc_low), axis=0) + np.sum(gnd_up * np.conj(exc_up), axis=0)
    p_c = np.sum(np.abs(exc_low) ** 2, axis=0) + np.sum(np.abs(gnd_up) ** 2, axis=0)
    ent, pur, coh = _scalars_from_series(rho11, rho01)
    for arr in (rho11, rho01, ent, pur, coh, p_c):
        arr.setflags(write=False)
    t = t.copy()
    t.setflags(write=False)
    return Trajectory(t, rho11, rho01, ent, pur, coh, p_c)


def excitation_series(
    propagator: SpectralPropagator,
    state0: PureState,
    t_grid,
    phases: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Excited-state population only; the lean path for large ensembles.

    Touches just the excited-lower rows of the eigenvector matrix. The
    eigenphase table exp(-i E_k t_j) may be precomputed once per grid
    and shared across ensemble members.
    """
    t = np.asarray(t_grid, dtype=float)
    u = propagator.eigenvectors
    a0 = u.conj().T @ state0.coupled
    if phases is None:
        phases = np.exp(-1j * np.outer(propagator.eigenvalues, t))
    exc_low = u[: propagator.n1] @ (phases * a0[:, None])
    const = float(np.sum(np.abs(state0.excited_upper) ** 2))
    return np.sum(np.abs(exc_low) ** 2, axis=0) + const


def band_kernel(model: FiniteBathModel, t_grid) -> np.ndarray:
    """Normalized free phase sum over the lower band, f(t).

    f(0) = 1; for equidistant levels |f| decays on the scale
    1/band_width and recurs exactly at 2*pi*n1/band_width.
    """
    t = np.asarray(t_grid, dtype=float)
    return np.exp(-1j * np.outer(model.lower_levels, t)).mean(axis=0)


def kernel_recurrence_time(model: FiniteBathModel) -> Optional[float]:
    """Exact recurrence period of the band kernel for equidistant levels."""
    if model.params.band_width == 0:
        return None
    return 2.0 * np.pi * model.params.n1 / model.params.band_width
