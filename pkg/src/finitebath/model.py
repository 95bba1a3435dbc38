"""Two-band finite-bath model: parameters, coupling matrix, validity checks.

Conventions used throughout the package: hbar = 1, energies in an
arbitrary unit u, times in 1/u. The two-level system ("spin") has its
ground level at energy 0 and its excited level at delta_e, in resonance
with the separation of the two bath bands. The lower band holds n1 levels
at (band_width/n1)*k for k = 1..n1, the upper band n2 levels at
delta_e + (band_width/n2)*k, so each band spans an interval of width
band_width and the bands never overlap while band_width < delta_e.

The spin flip couples the bands through a random matrix: independent
Gaussian real and imaginary parts, rescaled so the mean squared element
is exactly one. A single realization is simulated, never an ensemble
average over coupling matrices.

The degenerate limit band_width = 0 (all levels of a band exactly
degenerate) is permitted; it breaks the rate-equation regime and is used
as a contrast case.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._rand import complex_normal, philox

#: Threshold standing in for "much smaller than one" in the second
#: validity criterion; raw values are always reported alongside.
CRITERION_TWO_MAX = 0.01

#: Default homogeneity probe: window width as a fraction of the band width.
HOMOGENEITY_WINDOW_FRACTION = 0.1


@dataclass(frozen=True)
class ModelParams:
    """Model parameters. Validated on construction.

    delta_e: spin splitting = band separation (> 0).
    band_width: width of each bath band (>= 0, < delta_e).
    n1, n2: number of levels in the lower / upper band (>= 1).
    lam: interaction strength multiplying the normalized coupling matrix.
    seed_coupling: seed for the coupling-matrix draw (64-bit unsigned).
    """

    delta_e: float
    band_width: float
    n1: int
    n2: int
    lam: float
    seed_coupling: int

    def __post_init__(self):
        if not (isinstance(self.n1, int) and isinstance(self.n2, int)):
            raise ValueError("n1 and n2 must be integers")
        if self.n1 < 1 or self.n2 < 1:
            raise ValueError(f"band level counts must be >= 1, got n1={self.n1}, n2={self.n2}")
        if not self.delta_e > 0:
            raise ValueError(f"delta_e must be > 0, got {self.delta_e}")
        if self.band_width < 0:
            raise ValueError(f"band_width must be >= 0, got {self.band_width}")
        if self.band_width >= self.delta_e:
            raise ValueError(
                f"bands must not overlap: band_width={self.band_width} "
                f"must be < delta_e={self.delta_e}"
            )
        if self.lam < 0:
            raise ValueError(f"lam must be >= 0, got {self.lam}")
        if not isinstance(self.seed_coupling, int) or not (0 <= self.seed_coupling < 2**64):
            raise ValueError(f"seed_coupling must be an unsigned 64-bit integer, got {self.seed_coupling}")

    @property
    def dim(self) -> int:
        """Dimension of the full product basis, 2*(n1+n2)."""
        return 2 * (self.n1 + self.n2)


@dataclass(frozen=True)
class CouplingMatrix:
    """Random band-to-band coupling, rescaled to unit mean squared element."""

    entries: np.ndarray  # complex, shape (n1, n2)

    @property
    def mean_square(self) -> float:
        n1, n2 = self.entries.shape
        return float(np.sum(np.abs(self.entries) ** 2)) / (n1 * n2)


@dataclass(frozen=True)
class FiniteBathModel:
    """Immutable model: parameters, band level energies, coupling matrix.

    Safe to share across worker processes; all arrays are read-only.
    """

    params: ModelParams
    lower_levels: np.ndarray  # shape (n1,), energies in (0, band_width]
    upper_levels: np.ndarray  # shape (n2,), energies in (delta_e, delta_e + band_width]
    coupling: CouplingMatrix


def build_model(params: ModelParams) -> FiniteBathModel:
    """Construct the model for one coupling realization.

    The coupling matrix has independently sampled Gaussian real and
    imaginary parts (mean zero), then is rescaled so that the sum of
    squared moduli equals n1*n2 exactly. Bit-identical for equal params.
    """
    gen = philox(params.seed_coupling)
    raw = complex_normal(gen, (params.n1, params.n2))
    scale = np.sqrt(params.n1 * params.n2 / np.sum(np.abs(raw) ** 2))
    entries = raw * scale

    lower = (params.band_width / params.n1) * np.arange(1, params.n1 + 1, dtype=float)
    upper = params.delta_e + (params.band_width / params.n2) * np.arange(1, params.n2 + 1, dtype=float)
    for arr in (entries, lower, upper):
        arr.setflags(write=False)
    return FiniteBathModel(params, lower, upper, CouplingMatrix(entries))


@dataclass(frozen=True)
class BandHomogeneity:
    """Sliding-window level tally for one band."""

    band: str
    window_starts: np.ndarray
    level_counts: np.ndarray
    count_ratio: Optional[float]  # max/min window count; None when degenerate


@dataclass(frozen=True)
class HomogeneityReport:
    """How evenly levels and coupling weights spread over each band.

    Ratios are max/min over window positions. Aggregate ratios sum the
    squared couplings over all source states; worst-source ratios take
    the least homogeneous single source state. Degenerate layouts (a
    band with fewer than two levels, or zero band width) carry None
    ratios and set the degenerate flag.
    """

    interval_width: float
    lower: BandHomogeneity
    upper: BandHomogeneity
    weight_ratio_into_upper: Optional[float]
    weight_ratio_into_lower: Optional[float]
    worst_source_ratio_into_upper: Optional[float]
    worst_source_ratio_into_lower: Optional[float]
    degenerate: bool


def _window_starts(levels: np.ndarray, width: float) -> np.ndarray:
    """Half-overlapping window start positions covering the level span."""
    lo, hi = float(levels[0]), float(levels[-1])
    if hi - lo <= width:
        return np.array([lo])
    n = int(np.floor((hi - lo - width) / (width / 2.0))) + 1
    return lo + (width / 2.0) * np.arange(n + 1)


def _window_slices(levels: np.ndarray, starts: np.ndarray, width: float):
    """Index ranges [i0, i1) of levels falling in [start, start + width).

    Both boundaries are shifted down by a sliver of the window width so
    that a level coinciding with an edge lands on one deterministic side
    regardless of float rounding (an equidistant layout then tallies the
    same count for every window position).
    """
    tol = 1e-9 * width
    i0 = np.searchsorted(levels, starts - tol, side="left")
    i1 = np.searchsorted(levels, starts + width - tol, side="left")
    return i0, i1


def _ratio(values: np.ndarray) -> float:
    vmin = float(values.min())
    vmax = float(values.max())
    if vmin <= 0.0:
        return float("inf")
    return vmax / vmin


def homogeneity_diagnostic(model: FiniteBathModel, interval_width: float) -> HomogeneityReport:
    """Windowed level counts and coupling-weight sums over each band.

    Slides a window of the given width across each band (half-width
    steps) and tallies the number of levels inside, plus, for the
    opposite band, the squared coupling weight reachable from inside the
    window. Raises when the window is wider than the band.
    """
    width = float(interval_width)
    deps = model.params.band_width
    if not width > 0:
        raise ValueError(f"interval_width must be > 0, got {interval_width}")
    if width > deps:
        raise ValueError(
            f"interval wider than band: interval_width={interval_width} > band_width={deps}"
        )

    w2 = np.abs(model.coupling.entries) ** 2  # (n1, n2)
    bands = []
    weight_aggregate: list[Optional[float]] = []
    weight_worst: list[Optional[float]] = []
    degenerate = False
    for name, levels, weights_axis in (
        ("lower", model.lower_levels, 0),
        ("upper", model.upper_levels, 1),
    ):
        starts = _window_starts(levels, width)
        i0, i1 = _window_slices(levels, starts, width)
        counts = i1 - i0
        if levels.size < 2:
            bands.append(BandHomogeneity(name, starts, counts, None))
            weight_aggregate.append(None)
            weight_worst.append(None)
            degenerate = True
            continue
        bands.append(BandHomogeneity(name, starts, counts, _ratio(counts.astype(float))))
        # Summed |coupling|^2 from each source state in the opposite band
        # into this band's windows, via prefix sums along this band's axis.
        pref = np.concatenate(
            [np.zeros_like(w2.take([0], axis=weights_axis)), np.cumsum(w2, axis=weights_axis)],
            axis=weights_axis,
        )
        if weights_axis == 0:
            windowed = pref[i1, :] - pref[i0, :]  # (windows, n2 sources)
        else:
            windowed = (pref[:, i1] - pref[:, i0]).T  # (windows, n1 sources)
        weight_aggregate.append(_ratio(windowed.sum(axis=1)))
        mins = windowed.min(axis=0)
        maxs = windowed.max(axis=0)
        per_source = np.where(mins > 0, maxs / np.where(mins > 0, mins, 1.0), np.inf)
        weight_worst.append(float(per_source.max()))

    return HomogeneityReport(
        interval_width=width,
        lower=bands[0],
        upper=bands[1],
        weight_ratio_into_lower=weight_aggregate[0],
        weight_ratio_into_upper=weight_aggregate[1],
        worst_source_ratio_into_lower=weight_worst[0],
        worst_source_ratio_into_upper=weight_worst[1],
        degenerate=degenerate,
    )


@dataclass(frozen=True)
class ConditionReport:
    """Validity criteria for the statistical (rate-equation) regime.

    criterion_one = 2*lam*N/band_width, required >= 1.
    criterion_two = lam^2*N/band_width^2, required well below 1
    (the pass flag uses <= CRITERION_TWO_MAX).
    N is the level count of the band with the larger state density;
    for equal band widths that is simply max(n1, n2).
    tau_c_estimate: bath correlation time, 1/band_width.
    tau_r_estimate: system relaxation time, 1/(downward rate).
    """

    criterion_one: float
    criterion_two: float
    n_used: int
    tau_c_estimate: float
    tau_r_estimate: float
    homogeneity: Optional[HomogeneityReport]
    passed: bool


def check_conditions(params: ModelParams, homogeneity_window: Optional[float] = None) -> ConditionReport:
    """Evaluate the validity criteria; degenerate inputs fail, never raise.

    A zero band width makes the second criterion infinite (and the
    homogeneity probe meaningless); zero coupling zeroes the first.
    """
    n = max(params.n1, params.n2)
    if params.band_width > 0:
        c1 = 2.0 * params.lam * n / params.band_width
        c2 = params.lam**2 * n / params.band_width**2
        tau_c = 1.0 / params.band_width
    else:
        c1 = float("inf") if params.lam > 0 else 0.0
        c2 = float("inf") if params.lam > 0 else 0.0
        tau_c = float("inf")

    r01 = 2.0 * np.pi * params.lam**2 * params.n2 / params.band_width if params.band_width > 0 else 0.0
    tau_r = 1.0 / r01 if r01 > 0 else float("inf")

    homogeneity = None
    if params.band_width > 0:
        window = homogeneity_window if homogeneity_window is not None else (
            HOMOGENEITY_WINDOW_FRACTION * params.band_width
        )
        homogeneity = homogeneity_diagnostic(build_model(params), window)

    passed = (c1 >= 1.0) and (c2 <= CRITERION_TWO_MAX)
    return ConditionReport(
        criterion_one=float(c1),
        criterion_two=float(c2),
        n_used=n,
        tau_c_estimate=float(tau_c),
        tau_r_estimate=float(tau_r),
        homogeneity=homogeneity,
        passed=passed,
    )
