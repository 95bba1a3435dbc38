"""Exact propagation of the full pure state.

Basis ordering contract for the length 2*(n1+n2) amplitude vector, in
four contiguous blocks:

    [|excited, lower_k>  (n1)]   resonant, coupled by the interaction
    [|ground,  upper_k>  (n2)]   resonant, coupled by the interaction
    [|ground,  lower_k>  (n1)]   annihilated by the interaction
    [|excited, upper_k>  (n2)]   annihilated by the interaction

The interaction only connects the first two blocks, so the Hamiltonian
splits into one dense Hermitian block of size n1+n2 plus two diagonal
sectors. Propagation diagonalizes the coupled block once and applies
spectral phases; the time direction enters only through the sign of t.
The dense eigendecomposition is exact for arbitrary time spans, which
matters here because runs extend to t ~ 1e4 while phases oscillate on
the scale 1/delta_e.

An independent adaptive ODE integration of the same Schroedinger
equation is provided as a cross-check oracle for small models.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from ._rand import haar_unit_vector, philox
from .model import FiniteBathModel


@dataclass(frozen=True)
class PureState:
    """Normalized amplitude vector over the product basis (block order above)."""

    amplitudes: np.ndarray
    n1: int
    n2: int

    @property
    def coupled(self) -> np.ndarray:
        """Amplitudes of the resonant block, |excited,lower> then |ground,upper>."""
        return self.amplitudes[: self.n1 + self.n2]

    @property
    def excited_lower(self) -> np.ndarray:
        return self.amplitudes[: self.n1]

    @property
    def ground_upper(self) -> np.ndarray:
        return self.amplitudes[self.n1 : self.n1 + self.n2]

    @property
    def ground_lower(self) -> np.ndarray:
        nc = self.n1 + self.n2
        return self.amplitudes[nc : nc + self.n1]

    @property
    def excited_upper(self) -> np.ndarray:
        return self.amplitudes[self.n1 + self.n2 + self.n1 :]

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


def _assemble(n1: int, n2: int, excited_lower, ground_upper, ground_lower, excited_upper) -> PureState:
    psi = np.zeros(2 * (n1 + n2), dtype=complex)
    nc = n1 + n2
    psi[:n1] = excited_lower
    psi[n1:nc] = ground_upper
    psi[nc : nc + n1] = ground_lower
    psi[nc + n1 :] = excited_upper
    psi.setflags(write=False)
    return PureState(psi, n1, n2)


def initial_state_excited(model: FiniteBathModel, bath_seed: int) -> PureState:
    """Spin excited, bath in a Haar-random pure state on the lower band."""
    p = model.params
    chi = haar_unit_vector(philox(bath_seed), p.n1)
    return _assemble(p.n1, p.n2, chi, 0.0, 0.0, 0.0)


def initial_state_superposition(model: FiniteBathModel, bath_seed: int) -> PureState:
    """(|ground> + |excited>)/sqrt(2) times a random lower-band bath state."""
    p = model.params
    chi = haar_unit_vector(philox(bath_seed), p.n1)
    return _assemble(p.n1, p.n2, chi / np.sqrt(2.0), 0.0, chi / np.sqrt(2.0), 0.0)


def initial_state_subspace_random(model: FiniteBathModel, p_excited: float, seed: int) -> PureState:
    """Entangled initial state with exact weights on the two resonant manifolds.

    sqrt(p_excited) on a Haar-random |excited,lower-band> vector plus
    sqrt(1-p_excited) on an independent Haar-random |ground,upper-band>
    vector; both weights are exact, not sampled.
    """
    if not 0.0 <= p_excited <= 1.0:
        raise ValueError(f"p_excited must lie in [0, 1], got {p_excited}")
    p = model.params
    gen = philox(seed)
    a = haar_unit_vector(gen, p.n1)
    b = haar_unit_vector(gen, p.n2)
    return _assemble(p.n1, p.n2, np.sqrt(p_excited) * a, np.sqrt(1.0 - p_excited) * b, 0.0, 0.0)


@dataclass(frozen=True)
class BlockDecomposition:
    """Coupled-block Hamiltonian plus the two diagonal decoupled sectors."""

    h_coupled: np.ndarray          # Hermitian, (n1+n2) x (n1+n2)
    ground_lower_energies: np.ndarray
    excited_upper_energies: np.ndarray
    n1: int
    n2: int


def block_decomposition(model: FiniteBathModel) -> BlockDecomposition:
    p = model.params
    nc = p.n1 + p.n2
    h = np.zeros((nc, nc), dtype=complex)
    idx = np.arange(p.n1)
    h[idx, idx] = p.delta_e + model.lower_levels
    jdx = np.arange(p.n1, nc)
    h[jdx, jdx] = model.upper_levels
    h[: p.n1, p.n1 :] = p.lam * model.coupling.entries
    h[p.n1 :, : p.n1] = p.lam * model.coupling.entries.conj().T
    h.setflags(write=False)
    ground_lower = model.lower_levels
    excited_upper = p.delta_e + model.upper_levels
    excited_upper.setflags(write=False)
    return BlockDecomposition(h, ground_lower, excited_upper, p.n1, p.n2)


@dataclass(frozen=True)
class SpectralPropagator:
    """Eigenpairs of the coupled block plus decoupled sector energies."""

    eigenvalues: np.ndarray        # (n1+n2,)
    eigenvectors: np.ndarray       # unitary, columns are eigenvectors
    ground_lower_energies: np.ndarray
    excited_upper_energies: np.ndarray
    n1: int
    n2: int


def build_propagator(model: FiniteBathModel) -> SpectralPropagator:
    """Full Hermitian eigendecomposition of the coupled block."""
    dec = block_decomposition(model)
    try:
        evals, evecs = np.linalg.eigh(dec.h_coupled)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        p = model.params
        raise RuntimeError(
            f"eigensolver failed on coupled block (n1={p.n1}, n2={p.n2}, "
            f"lam={p.lam}, seed={p.seed_coupling}): {exc}"
        ) from exc
    evals.setflags(write=False)
    evecs.setflags(write=False)
    return SpectralPropagator(
        evals, evecs, dec.ground_lower_energies, dec.excited_upper_energies, dec.n1, dec.n2
    )


def evolve(propagator: SpectralPropagator, state0: PureState, t: float) -> PureState:
    """Propagate by time t (negative t propagates backward)."""
    u = propagator.eigenvectors
    a = u.conj().T @ state0.coupled
    coupled = u @ (np.exp(-1j * propagator.eigenvalues * t) * a)
    gl = np.exp(-1j * propagator.ground_lower_energies * t) * state0.ground_lower
    eu = np.exp(-1j * propagator.excited_upper_energies * t) * state0.excited_upper
    n1, n2 = propagator.n1, propagator.n2
    return _assemble(n1, n2, coupled[:n1], coupled[n1:], gl, eu)


def evolve_grid(propagator: SpectralPropagator, state0: PureState, t_grid: np.ndarray) -> np.ndarray:
    """Amplitudes at every grid time, shape (2*(n1+n2), len(t_grid)).

    One matrix product for the coupled block; the decoupled sectors are
    pure phase evolution. Column j is the state at t_grid[j].
    """
    t = np.asarray(t_grid, dtype=float)
    u = propagator.eigenvectors
    a0 = u.conj().T @ state0.coupled
    phases = np.exp(-1j * np.outer(propagator.eigenvalues, t))
    out = np.empty((2 * (propagator.n1 + propagator.n2), t.size), dtype=complex)
    nc = propagator.n1 + propagator.n2
    out[:nc] = u @ (phases * a0[:, None])
    out[nc : nc + propagator.n1] = (
        np.exp(-1j * np.outer(propagator.ground_lower_energies, t)) * state0.ground_lower[:, None]
    )
    out[nc + propagator.n1 :] = (
        np.exp(-1j * np.outer(propagator.excited_upper_energies, t)) * state0.excited_upper[:, None]
    )
    return out


def full_hamiltonian(model: FiniteBathModel) -> np.ndarray:
    """Dense Hamiltonian over the full product basis (block order contract)."""
    p = model.params
    dec = block_decomposition(model)
    dim = p.dim
    nc = p.n1 + p.n2
    h = np.zeros((dim, dim), dtype=complex)
    h[:nc, :nc] = dec.h_coupled
    idx = np.arange(nc, nc + p.n1)
    h[idx, idx] = dec.ground_lower_energies
    jdx = np.arange(nc + p.n1, dim)
    h[jdx, jdx] = dec.excited_upper_energies
    h.setflags(write=False)
    return h


def evolve_ode(model: FiniteBathModel, state0: PureState, t_grid) -> list[PureState]:
    """Independent oracle: adaptive high-order integration of the
    Schroedinger equation from t = 0. Intended for small models only
    (the dense Hamiltonian is materialized).
    """
    t = np.asarray(t_grid, dtype=float)
    if t.size == 0:
        return []
    if np.any(np.diff(t) <= 0):
        raise ValueError("t_grid must be strictly increasing")
    if t[0] < 0:
        raise ValueError("t_grid must start at or after 0")

    h = full_hamiltonian(model)

    def rhs(_t, psi):
        return -1j * (h @ psi)

    if t[-1] == 0.0:
        return [state0]
    sol = solve_ivp(
        rhs,
        (0.0, float(t[-1])),
        state0.amplitudes.astype(complex),
        method="DOP853",
        t_eval=t,
        rtol=1e-10,
        atol=1e-12,
    )
    if not sol.success:
        raise RuntimeError(f"ODE propagation failed: {sol.message}")
    states = []
    for j in range(t.size):
        psi = sol.y[:, j].copy()
        psi.setflags(write=False)
        states.append(PureState(psi, model.params.n1, model.params.n2))
    return states
