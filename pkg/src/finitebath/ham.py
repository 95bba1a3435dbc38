"""Closed-form rate-equation predictions and the weak-coupling contrast.

The statistical ("best guess") reduced dynamics of this model is a pair
of golden-rule-type rates,

    r01 = 2*pi*lam^2*n2 / band_width      (excited -> ground)
    r10 = 2*pi*lam^2*n1 / band_width      (ground -> excited)

driving

    d rho11 / dt = -(r01 + r10) rho11(t) + r10 * source
    d rho01 / dt = (i*delta_e - r01/2) rho01(t)

where the literal scheme uses source = rho11(0). The `p_c0` argument
generalizes the source to the initial probability inside the resonant
block, which is the conserved weight actually redistributed by the
interaction; with p_c0 = rho11(0) the literal scheme is recovered
exactly. Both variants are emitted by the run harness so the difference
is observable for entangled initial states.

The rates are undefined for zero band width (the non-statistical
regime); `rates` then raises NonMarkovianError carrying the validity
report rather than returning infinities.

The standard weak-coupling (Born) treatment would instead relax the spin
to the bath temperature; only its equilibrium occupation is implemented,
as the contrast value.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.special import expit

from .model import CRITERION_TWO_MAX, ConditionReport, ModelParams, check_conditions

__all__ = [
    "HamRates",
    "HamPrediction",
    "NonMarkovianError",
    "rates",
    "predict_rho11",
    "predict_rho01",
    "prediction",
    "integrate_rate_equation",
    "ba_equilibrium",
]


class NonMarkovianError(ValueError):
    """The rate scheme does not apply; carries the validity report."""

    def __init__(self, message: str, conditions: ConditionReport):
        super().__init__(message)
        self.conditions = conditions


@dataclass(frozen=True)
class HamRates:
    """Downward (r01) and upward (r10) transition rates, units u/hbar."""

    r01: float
    r10: float

    @property
    def total(self) -> float:
        return self.r01 + self.r10

    def equilibrium(self, p_c0: float) -> float:
        """Stationary excited population for block weight p_c0 (= n1/(n1+n2) * p_c0)."""
        if self.total == 0.0:
            return float("nan")
        return p_c0 * self.r10 / self.total


def rates(params: ModelParams) -> HamRates:
    if params.band_width <= 0:
        report = check_conditions(params)
        raise NonMarkovianError(
            "rates undefined for zero band width (non-Markovian regime); "
            f"validity criteria: one={report.criterion_one}, "
            f"two={report.criterion_two} (required <= {CRITERION_TWO_MAX})",
            report,
        )
    pref = 2.0 * np.pi * params.lam**2 / params.band_width
    return HamRates(r01=pref * params.n2, r10=pref * params.n1)


def _check_populations(rho11_0: float, p_c0: float) -> None:
    eps = 1e-12
    if not (-eps <= rho11_0 <= p_c0 + eps and p_c0 <= 1.0 + eps):
        raise ValueError(
            f"need 0 <= rho11_0 <= p_c0 <= 1, got rho11_0={rho11_0}, p_c0={p_c0}"
        )


def predict_rho11(
    ham_rates: HamRates, rho11_0: float, p_c0: Optional[float], t_grid
) -> np.ndarray:
    """Closed-form excited population on the grid.

    rho11(t) = rho_inf + (rho11(0) - rho_inf) * exp(-(r01+r10) t) with
    rho_inf = p_c0 * r10/(r01+r10). p_c0 = None uses the literal scheme
    (source weight equal to rho11(0)).
    """
    if p_c0 is None:
        p_c0 = rho11_0
    _check_populations(rho11_0, p_c0)
    t = np.asarray(t_grid, dtype=float)
    if ham_rates.total == 0.0:
        return np.full(t.shape, rho11_0)
    rho_inf = ham_rates.equilibrium(p_c0)
    return rho_inf + (rho11_0 - rho_inf) * np.exp(-ham_rates.total * t)


def predict_rho01(ham_rates: HamRates, rho01_0: complex, delta_e: float, t_grid) -> np.ndarray:
    """Closed-form off-diagonal element: free rotation at delta_e, decay at r01/2."""
    if abs(rho01_0) > 0.5 + 1e-12:
        raise ValueError(f"|rho01_0| must be <= 1/2, got {abs(rho01_0)}")
    t = np.asarray(t_grid, dtype=float)
    return rho01_0 * np.exp((1j * delta_e - 0.5 * ham_rates.r01) * t)


@dataclass(frozen=True)
class HamPrediction:
    """Predicted reduced-state series plus the stationary population."""

    t_grid: np.ndarray
    rho11: np.ndarray
    rho01: np.ndarray
    rho11_infinity: float


def prediction(
    ham_rates: HamRates,
    rho11_0: float,
    rho01_0: complex,
    p_c0: Optional[float],
    delta_e: float,
    t_grid,
) -> HamPrediction:
    """Bundle both closed-form series for a run."""
    t = np.asarray(t_grid, dtype=float)
    r11 = predict_rho11(ham_rates, rho11_0, p_c0, t)
    r01 = predict_rho01(ham_rates, rho01_0, delta_e, t)
    rho_inf = ham_rates.equilibrium(rho11_0 if p_c0 is None else p_c0)
    if ham_rates.total == 0.0:
        rho_inf = rho11_0
    return HamPrediction(t, r11, r01, float(rho_inf))


def integrate_rate_equation(
    ham_rates: HamRates, rho11_0: float, p_c0: Optional[float], t_grid
) -> np.ndarray:
    """Numerical integration of the population rate equation (cross-check).

    Matches the closed form to better than 1e-9 in sup norm.
    """
    if p_c0 is None:
        p_c0 = rho11_0
    _check_populations(rho11_0, p_c0)
    t = np.asarray(t_grid, dtype=float)
    source = ham_rates.r10 * p_c0

    def rhs(_t, y):
        return -ham_rates.total * y + source

    if t.size == 1 and t[0] == 0.0:
        return np.array([rho11_0])
    sol = solve_ivp(
        rhs,
        (float(t[0]), float(t[-1])),
        [rho11_0],
        method="DOP853",
        t_eval=t,
        rtol=1e-12,
        atol=1e-14,
    )
    if not sol.success:
        raise RuntimeError(f"rate-equation integration failed: {sol.message}")
    return sol.y[0]


def ba_equilibrium(delta_e: float, k_t_bath: float) -> float:
    """Excited population of a two-level Boltzmann state at bath temperature."""
    if not k_t_bath > 0:
        raise ValueError(f"k_t_bath must be > 0, got {k_t_bath}")
    return float(expit(-delta_e / k_t_bath))
