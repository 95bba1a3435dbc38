"""Scenario orchestration: configuration, runs, and file outputs.

A run is described by a JSON config (see CONFIG_KEYS below for the
schema); every random draw is tied to an explicit seed so that a config
reproduces its data files byte for byte. Scenarios:

    check     validity criteria and homogeneity only
    evolve    one trajectory plus rate-equation overlay and deviation
    ensemble  many entangled initial states, per-state deviation histogram
    sweep     one evolution per bath size, deviation scaling fit
    kernel    band-kernel series and timescale diagnostics
    reverse   two-sided trajectory (backward and forward), plus an
              optional degenerate zero-band-width variant run

Ensemble members and sweep points always execute in spawned worker
processes pinned to single-threaded BLAS, so results are independent of
the worker count; they are merged in task-index order. Outputs are CSV
data files, a report.json, a plot script (plain text, never executed),
and a manifest with content digests. No timestamps are written.
"""

from __future__ import annotations

import contextlib
import difflib
import hashlib
import json
import math
import multiprocessing
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .dynamics import (
    PureState,
    build_propagator,
    initial_state_excited,
    initial_state_subspace_random,
    initial_state_superposition,
)
from .ham import HamRates, NonMarkovianError, predict_rho01, predict_rho11, ba_equilibrium, rates
from .metrics import best_exponential_fit, deviation_d2, histogram, scaling_fit
from .model import FiniteBathModel, ModelParams, build_model, check_conditions
from .observables import Trajectory, band_kernel, excitation_series, kernel_recurrence_time, sample_trajectory

SCENARIOS = ("check", "evolve", "ensemble", "sweep", "kernel", "reverse")
INITIAL_STATE_KINDS = ("excited", "superposition", "subspace_random")

#: Exact column contract for trajectory CSV files.
TRAJECTORY_HEADER = (
    "t", "rho11_exact", "re_rho01", "im_rho01", "abs_rho01_sq",
    "entropy", "purity", "p_coupled", "rho11_ham", "abs_rho01_sq_ham",
)

#: Length of the time window used for equilibrium means.
EQUILIBRIUM_WINDOW = 500.0

#: Default histogram bin width on the deviation axis.
D_BIN_WIDTH = 0.005

_SEED_MOD = 2**64


class ConfigError(ValueError):
    """Configuration rejected; message names the offending key."""


@dataclass(frozen=True)
class InitialStateSpec:
    kind: str = "excited"
    bath_seed: int = 0
    p_excited: float = 0.75


@dataclass(frozen=True)
class DegenerateVariantSpec:
    """Zero-band-width contrast run attached to the reverse scenario."""

    enabled: bool = False
    lam: float = 1e-4
    band_width: float = 0.0


@dataclass(frozen=True)
class RunConfig:
    model: ModelParams
    scenario: str = "evolve"
    initial_state: InitialStateSpec = InitialStateSpec()
    t_max: float = 3000.0
    sample_step: float = 1.0
    tau: float = 2000.0
    ensemble_size: int = 100
    sweep_n: tuple[int, ...] = (10, 25, 50, 100, 200, 400, 500, 800)
    kt_bath: float = 5.0
    workers: int = 1
    out_dir: Optional[str] = None
    degenerate_variant: DegenerateVariantSpec = DegenerateVariantSpec()

    def to_json_dict(self) -> dict:
        """Echo in the JSON schema (model key 'lambda', not 'lam')."""
        return {
            "model": {
                "delta_e": self.model.delta_e,
                "band_width": self.model.band_width,
                "n1": self.model.n1,
                "n2": self.model.n2,
                "lambda": self.model.lam,
                "seed_coupling": self.model.seed_coupling,
            },
            "scenario": self.scenario,
            "initial_state": {
                "kind": self.initial_state.kind,
                "bath_seed": self.initial_state.bath_seed,
                "p_excited": self.initial_state.p_excited,
            },
            "t_max": self.t_max,
            "sample_step": self.sample_step,
            "tau": self.tau,
            "ensemble_size": self.ensemble_size,
            "sweep_n": list(self.sweep_n),
            "kt_bath": self.kt_bath,
            "workers": self.workers,
            "out_dir": self.out_dir,
            "degenerate_variant": {
                "enabled": self.degenerate_variant.enabled,
                "lambda": self.degenerate_variant.lam,
                "band_width": self.degenerate_variant.band_width,
            },
        }


CONFIG_KEYS = {
    "": ("model", "scenario", "initial_state", "t_max", "sample_step", "tau",
         "ensemble_size", "sweep_n", "kt_bath", "workers", "out_dir",
         "degenerate_variant"),
    "model": ("delta_e", "band_width", "n1", "n2", "lambda", "seed_coupling"),
    "initial_state": ("kind", "bath_seed", "p_excited"),
    "degenerate_variant": ("enabled", "lambda", "band_width"),
}


def _reject_unknown_keys(obj: dict, section: str) -> None:
    allowed = CONFIG_KEYS[section]
    prefix = f"{section}." if section else ""
    for key in obj:
        if key not in allowed:
            hint = difflib.get_close_matches(key, allowed, n=1)
            suggestion = f" (did you mean '{hint[0]}'?)" if hint else ""
            raise ConfigError(f"unknown config key '{prefix}{key}'{suggestion}")


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ConfigError(message)


def _as_int(value, key: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{key}: expected an integer, got {value!r}")
    return value


def _as_number(value, key: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key}: expected a number, got {value!r}")
    return float(value)


def config_from_dict(raw: dict) -> RunConfig:
    """Validate a parsed JSON object into a RunConfig."""
    if not isinstance(raw, dict):
        raise ConfigError(f"config root must be an object, got {type(raw).__name__}")
    _reject_unknown_keys(raw, "")
    _require("model" in raw, "missing required 'model' section")
    model_raw = raw["model"]
    if not isinstance(model_raw, dict):
        raise ConfigError("model: expected an object")
    _reject_unknown_keys(model_raw, "model")
    for key in CONFIG_KEYS["model"]:
        _require(key in model_raw, f"model.{key}: missing required key")
    try:
        model = ModelParams(
            delta_e=_as_number(model_raw["delta_e"], "model.delta_e"),
            band_width=_as_number(model_raw["band_width"], "model.band_width"),
            n1=_as_int(model_raw["n1"], "model.n1"),
            n2=_as_int(model_raw["n2"], "model.n2"),
            lam=_as_number(model_raw["lambda"], "model.lambda"),
            seed_coupling=_as_int(model_raw["seed_coupling"], "model.seed_coupling"),
        )
    except ValueError as exc:
        raise ConfigError(f"model: {exc}") from exc

    scenario = raw.get("scenario", "evolve")
    _require(scenario in SCENARIOS, f"scenario: must be one of {SCENARIOS}, got {scenario!r}")

    init_raw = raw.get("initial_state", {})
    if not isinstance(init_raw, dict):
        raise ConfigError("initial_state: expected an object")
    _reject_unknown_keys(init_raw, "initial_state")
    kind = init_raw.get("kind", "excited")
    _require(kind in INITIAL_STATE_KINDS,
             f"initial_state.kind: must be one of {INITIAL_STATE_KINDS}, got {kind!r}")
    bath_seed = _as_int(init_raw.get("bath_seed", 0), "initial_state.bath_seed")
    _require(0 <= bath_seed < _SEED_MOD, "initial_state.bath_seed: must be an unsigned 64-bit integer")
    p_excited = _as_number(init_raw.get("p_excited", 0.75), "initial_state.p_excited")
    _require(0.0 <= p_excited <= 1.0, f"initial_state.p_excited: must lie in [0, 1], got {p_excited}")

    t_max = _as_number(raw.get("t_max", 3000.0), "t_max")
    sample_step = _as_number(raw.get("sample_step", 1.0), "sample_step")
    tau = _as_number(raw.get("tau", 2000.0), "tau")
    _require(sample_step > 0, f"sample_step: must be > 0, got {sample_step}")
    _require(t_max > 0, f"t_max: must be > 0, got {t_max}")
    _require(tau > 0, f"tau: must be > 0, got {tau}")
    _require(tau <= t_max, f"tau={tau} must not exceed t_max={t_max}")
    for name, value in (("t_max", t_max), ("tau", tau)):
        ratio = value / sample_step
        _require(abs(ratio - round(ratio)) < 1e-9,
                 f"{name}={value} must be a whole number of sample steps ({sample_step})")

    ensemble_size = _as_int(raw.get("ensemble_size", 100), "ensemble_size")
    _require(ensemble_size >= 1, f"ensemble_size: must be >= 1, got {ensemble_size}")

    sweep_raw = raw.get("sweep_n", [10, 25, 50, 100, 200, 400, 500, 800])
    if not isinstance(sweep_raw, (list, tuple)) or not sweep_raw:
        raise ConfigError("sweep_n: expected a non-empty list of integers")
    sweep_n = tuple(_as_int(v, "sweep_n") for v in sweep_raw)
    _require(all(n >= 1 for n in sweep_n), "sweep_n: all entries must be >= 1")

    kt_bath = _as_number(raw.get("kt_bath", 5.0), "kt_bath")
    _require(kt_bath > 0, f"kt_bath: must be > 0, got {kt_bath}")

    workers = _as_int(raw.get("workers", 1), "workers")
    _require(workers >= 1, f"workers: must be >= 1, got {workers}")

    out_dir = raw.get("out_dir")
    if out_dir is not None and not isinstance(out_dir, str):
        raise ConfigError(f"out_dir: expected a string or null, got {out_dir!r}")

    dv_raw = raw.get("degenerate_variant", {})
    if not isinstance(dv_raw, dict):
        raise ConfigError("degenerate_variant: expected an object")
    _reject_unknown_keys(dv_raw, "degenerate_variant")
    dv_enabled = dv_raw.get("enabled", False)
    if not isinstance(dv_enabled, bool):
        raise ConfigError(f"degenerate_variant.enabled: expected a boolean, got {dv_enabled!r}")
    dv_lam = _as_number(dv_raw.get("lambda", 1e-4), "degenerate_variant.lambda")
    _require(dv_lam >= 0, "degenerate_variant.lambda: must be >= 0")
    dv_bw = _as_number(dv_raw.get("band_width", 0.0), "degenerate_variant.band_width")
    _require(0 <= dv_bw < model.delta_e,
             "degenerate_variant.band_width: must be >= 0 and below model.delta_e")

    config = RunConfig(
        model=model,
        scenario=scenario,
        initial_state=InitialStateSpec(kind=kind, bath_seed=bath_seed, p_excited=p_excited),
        t_max=t_max,
        sample_step=sample_step,
        tau=tau,
        ensemble_size=ensemble_size,
        sweep_n=sweep_n,
        kt_bath=kt_bath,
        workers=workers,
        out_dir=out_dir,
        degenerate_variant=DegenerateVariantSpec(enabled=dv_enabled, lam=dv_lam, band_width=dv_bw),
    )
    if scenario in ("ensemble", "sweep") and model.band_width <= 0:
        raise ConfigError(f"scenario '{scenario}' needs model.band_width > 0 (rates undefined)")
    return config


def load_config(path) -> RunConfig:
    """Load and validate a JSON config file."""
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {p} is not valid JSON: {exc}") from exc
    try:
        return config_from_dict(raw)
    except ConfigError as exc:
        raise ConfigError(f"{p}: {exc}") from exc


def paper_preset() -> RunConfig:
    """The bundled full-scale parameter set."""
    with resources.files("finitebath").joinpath("presets/paper.json").open() as fh:
        return config_from_dict(json.load(fh))


def preset_path(name: str = "paper") -> Path:
    """Filesystem path of a bundled preset (for the CLI --config option)."""
    return Path(str(resources.files("finitebath").joinpath(f"presets/{name}.json")))


# --------------------------------------------------------------------------
# scenario execution


@dataclass(frozen=True)
class CsvTable:
    name: str
    columns: tuple[tuple[str, np.ndarray], ...]
    validate_reduced: bool = False


@dataclass(frozen=True)
class ScenarioResult:
    config: RunConfig
    report: dict
    tables: tuple[CsvTable, ...]


def _initial_state(model: FiniteBathModel, spec: InitialStateSpec) -> PureState:
    if spec.kind == "excited":
        return initial_state_excited(model, spec.bath_seed)
    if spec.kind == "superposition":
        return initial_state_superposition(model, spec.bath_seed)
    if spec.kind == "subspace_random":
        return initial_state_subspace_random(model, spec.p_excited, spec.bath_seed)
    raise ConfigError(f"unknown initial state kind {spec.kind!r}")


def _grid(t_lo: float, t_hi: float, step: float) -> np.ndarray:
    return np.arange(t_lo, t_hi + 0.5 * step, step)


def _window_mean(t: np.ndarray, series: np.ndarray, lo: float, hi: float) -> float:
    mask = (t >= lo - 1e-9) & (t <= hi + 1e-9)
    return float(series[mask].mean())


def _deviation_dict(report) -> dict:
    return {
        "d": report.d,
        "d_squared": report.d_squared,
        "tau": report.tau,
        "n_samples": report.n_samples,
        "grid_step": report.grid_step,
    }


def _exponential_fit_dict(fit) -> dict:
    return {
        "rate": fit.rate,
        "asymptote": fit.asymptote,
        "initial": fit.initial,
        "deviation_d": fit.deviation.d,
    }


def _conditions_dict(report) -> dict:
    hom = None
    if report.homogeneity is not None:
        h = report.homogeneity
        hom = {
            "interval_width": h.interval_width,
            "degenerate": h.degenerate,
            "lower_count_ratio": h.lower.count_ratio,
            "upper_count_ratio": h.upper.count_ratio,
            "weight_ratio_into_upper": h.weight_ratio_into_upper,
            "weight_ratio_into_lower": h.weight_ratio_into_lower,
            "worst_source_ratio_into_upper": h.worst_source_ratio_into_upper,
            "worst_source_ratio_into_lower": h.worst_source_ratio_into_lower,
        }
    return {
        "criterion_one": report.criterion_one,
        "criterion_two": report.criterion_two,
        "n_used": report.n_used,
        "tau_c_estimate": report.tau_c_estimate,
        "tau_r_estimate": report.tau_r_estimate,
        "passed": report.passed,
        "homogeneity": hom,
    }


def _json_safe(value):
    """Replace non-finite floats (JSON has no inf/nan) recursively."""
    if isinstance(value, float):
        return value if math.isfinite(value) else repr(value)
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    return value


def _base_report(config: RunConfig) -> dict:
    try:
        r = rates(config.model)
        rates_dict = {"r01": r.r01, "r10": r.r10, "total": r.total}
    except NonMarkovianError:
        rates_dict = None
    return {
        "package_version": __version__,
        "scenario": config.scenario,
        "config": config.to_json_dict(),
        "conditions": _conditions_dict(check_conditions(config.model)),
        "rates": rates_dict,
        "ba_equilibrium": ba_equilibrium(config.model.delta_e, config.kt_bath),
    }


def _trajectory_table(
    name: str,
    traj: Trajectory,
    rho11_ham: Optional[np.ndarray],
    abs01sq_ham: Optional[np.ndarray],
) -> CsvTable:
    nan = np.full(traj.t_grid.shape, np.nan)
    return CsvTable(
        name=name,
        columns=(
            ("t", traj.t_grid),
            ("rho11_exact", traj.rho11),
            ("re_rho01", traj.rho01.real),
            ("im_rho01", traj.rho01.imag),
            ("abs_rho01_sq", traj.coherence),
            ("entropy", traj.entropy),
            ("purity", traj.purity),
            ("p_coupled", traj.p_coupled),
            ("rho11_ham", rho11_ham if rho11_ham is not None else nan),
            ("abs_rho01_sq_ham", abs01sq_ham if abs01sq_ham is not None else nan),
        ),
        validate_reduced=True,
    )


def _ham_overlay(config: RunConfig, traj: Trajectory):
    """Closed-form overlay on the trajectory grid.

    Returns (block-weighted rho11 series, |rho01|^2 series, info dict,
    literal rho11 series); the first element is None when the rates are
    undefined. On two-sided grids the prediction is mirrored around
    t = 0: the scheme is forward-time, and the exact dynamics shows no
    time asymmetry.
    """
    try:
        r = rates(config.model)
    except NonMarkovianError:
        return None, None, {"available": False}, None
    t = traj.t_grid
    i0 = int(np.argmin(np.abs(t)))  # anchor at t = 0, not the first grid point
    rho11_0 = float(traj.rho11[i0])
    rho01_0 = complex(traj.rho01[i0])
    p_c0 = float(traj.p_coupled[i0])
    abs_t = np.abs(t)
    literal = predict_rho11(r, rho11_0, None, abs_t)
    blockw = predict_rho11(r, rho11_0, p_c0, abs_t)
    abs01sq = np.abs(predict_rho01(r, rho01_0, config.model.delta_e, abs_t)) ** 2
    info = {
        "available": True,
        "mirrored_for_negative_t": bool(np.any(t < 0)),
        "rho11_0": rho11_0,
        "p_c0": p_c0,
        "equilibrium_literal": r.equilibrium(rho11_0),
        "equilibrium_block_weighted": r.equilibrium(p_c0),
    }
    return blockw, abs01sq, info, literal


def _run_check(config: RunConfig) -> ScenarioResult:
    return ScenarioResult(config, _base_report(config), ())


def _run_evolve(config: RunConfig) -> ScenarioResult:
    model = build_model(config.model)
    prop = build_propagator(model)
    state0 = _initial_state(model, config.initial_state)
    t = _grid(0.0, config.t_max, config.sample_step)
    traj = sample_trajectory(prop, state0, t)

    report = _base_report(config)
    overlay = _ham_overlay(config, traj)
    window = (max(0.0, config.t_max - EQUILIBRIUM_WINDOW), config.t_max)
    exact_mean = _window_mean(t, traj.rho11, *window)
    ba = report["ba_equilibrium"]
    report["initial"] = {
        "rho11": float(traj.rho11[0]),
        "abs_rho01_sq": float(traj.coherence[0]),
        "p_coupled": float(traj.p_coupled[0]),
    }
    report["equilibria"] = {
        "window": list(window),
        "exact_window_mean": exact_mean,
        "ba": ba,
        "exact_over_ba_ratio": exact_mean / ba if ba > 0 else None,
    }
    entropy_mean = _window_mean(t, traj.entropy, *window)
    report["entropy"] = {
        "window_mean": entropy_mean,
        "window_mean_over_ln2": entropy_mean / math.log(2),
        "max": float(traj.entropy.max()),
    }

    rho11_ham = abs01sq_ham = None
    if overlay[0] is not None:
        rho11_ham, abs01sq_ham, info, literal = overlay
        report["ham"] = info
        report["equilibria"]["ham_literal"] = info["equilibrium_literal"]
        report["equilibria"]["ham_block_weighted"] = info["equilibrium_block_weighted"]
        report["deviation"] = {
            "vs_block_weighted": _deviation_dict(deviation_d2(traj.rho11, rho11_ham, t, config.tau)),
            "vs_literal": _deviation_dict(deviation_d2(traj.rho11, literal, t, config.tau)),
        }
    else:
        report["ham"] = {"available": False}
    report["exponential_fit"] = _exponential_fit_dict(
        best_exponential_fit(traj.rho11, t, config.tau)
    )
    if traj.coherence[0] > 1e-6:
        coh_fit = best_exponential_fit(traj.coherence, t, config.tau)
        report["coherence"] = {
            "initial": float(traj.coherence[0]),
            "fit_rate": coh_fit.rate,
            "fit_deviation_d": coh_fit.deviation.d,
            "predicted_rate": report["rates"]["r01"] if report["rates"] else None,
        }
    report["trajectory_csv"] = "trajectory.csv"
    table = _trajectory_table("trajectory.csv", traj, rho11_ham, abs01sq_ham)
    return ScenarioResult(config, report, (table,))


# ---- ensemble worker machinery (module level: must be picklable by name)

_ENSEMBLE_CTX: dict = {}


def _ensemble_init(model_params: ModelParams, p_excited: float, tau: float, step: float):
    model = build_model(model_params)
    prop = build_propagator(model)
    t = _grid(0.0, tau, step)
    phases = np.exp(-1j * np.outer(prop.eigenvalues, t))
    r = rates(model_params)
    ham = predict_rho11(r, p_excited, 1.0, t)
    _ENSEMBLE_CTX.update(
        model=model, prop=prop, t=t, phases=phases, ham=ham,
        p_excited=p_excited, tau=tau,
    )


def _ensemble_member(args: tuple[int, int]) -> tuple[int, int, float]:
    index, seed = args
    ctx = _ENSEMBLE_CTX
    state = initial_state_subspace_random(ctx["model"], ctx["p_excited"], seed)
    series = excitation_series(ctx["prop"], state, ctx["t"], phases=ctx["phases"])
    dev = deviation_d2(series, ctx["ham"], ctx["t"], ctx["tau"])
    return index, seed, dev.d_squared


_BLAS_ENV_VARS = (
    "OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS",
)


@contextlib.contextmanager
def _single_threaded_worker_env():
    """Pin BLAS threading in spawned children (inherited via os.environ),
    so numerical results cannot depend on the worker count."""
    saved = {k: os.environ.get(k) for k in _BLAS_ENV_VARS}
    os.environ.update({k: "1" for k in _BLAS_ENV_VARS})
    try:
        yield
    finally:
        for k, v in saved.items():
            if v is None:
                os.environ.pop(k, None)
            else:
                os.environ[k] = v


def _map_in_workers(fn, tasks, workers: int, initializer=None, initargs=()):
    """Run tasks in spawned single-threaded workers; results in task order."""
    ctx = multiprocessing.get_context("spawn")
    with _single_threaded_worker_env():
        with ProcessPoolExecutor(
            max_workers=max(1, workers), mp_context=ctx,
            initializer=initializer, initargs=initargs,
        ) as ex:
            return list(ex.map(fn, tasks))


def _run_ensemble(config: RunConfig) -> ScenarioResult:
    """Member k draws an entangled subspace-random state from seed
    bath_seed + k (the initial_state.kind setting does not apply here);
    each is compared against the block-weighted closed form."""
    spec = config.initial_state
    seeds = [(k, (spec.bath_seed + k) % _SEED_MOD) for k in range(config.ensemble_size)]
    results = _map_in_workers(
        _ensemble_member,
        seeds,
        config.workers,
        initializer=_ensemble_init,
        initargs=(config.model, spec.p_excited, config.tau, config.sample_step),
    )
    d_squared = np.array([r[2] for r in results])
    d_values = np.sqrt(d_squared)
    hist = histogram(d_values, D_BIN_WIDTH)
    r = rates(config.model)

    report = _base_report(config)
    report["ham_reference"] = {
        "rho11_0": spec.p_excited,
        "p_c0": 1.0,
        "equilibrium_literal": r.equilibrium(spec.p_excited),
        "equilibrium_block_weighted": r.equilibrium(1.0),
    }
    report["members"] = {
        "count": config.ensemble_size,
        "median_d": float(np.median(d_values)),
        "mean_d": float(d_values.mean()),
        "max_d": float(d_values.max()),
        "quantiles_d": {
            "q10": float(np.quantile(d_values, 0.10)),
            "q90": float(np.quantile(d_values, 0.90)),
        },
    }
    report["histogram"] = {
        "bin_width": hist.bin_width,
        "left_edges": [float(x) for x in hist.left_edges],
        "counts": [int(c) for c in hist.counts],
    }
    report["members_csv"] = "members.csv"
    table = CsvTable(
        name="members.csv",
        columns=(
            ("member_index", np.array([r[0] for r in results], dtype=float)),
            ("bath_seed", np.array([r[1] for r in results], dtype=float)),
            ("d", d_values),
            ("d_squared", d_squared),
        ),
    )
    return ScenarioResult(config, report, (table,))


# ---- sweep worker machinery

def sweep_lambda(base: ModelParams, n: int) -> float:
    """Coupling for bath size n: holds the first validity ratio
    2*lam*N/band_width at the base model's value while n1 = n2 = n."""
    c1 = 2.0 * base.lam * max(base.n1, base.n2) / base.band_width
    return c1 * base.band_width / (2.0 * n)


def _sweep_point(args) -> dict:
    (n, base, bath_seed_base, t_max, step, tau) = args
    lam_n = sweep_lambda(base, n)
    params = replace(base, n1=n, n2=n, lam=lam_n,
                     seed_coupling=(base.seed_coupling + n) % _SEED_MOD)
    model = build_model(params)
    prop = build_propagator(model)
    state0 = initial_state_excited(model, (bath_seed_base + n) % _SEED_MOD)
    t = _grid(0.0, t_max, step)
    traj = sample_trajectory(prop, state0, t)
    r = rates(params)
    ham = predict_rho11(r, float(traj.rho11[0]), float(traj.p_coupled[0]), t)
    dev = deviation_d2(traj.rho11, ham, t, tau)
    cond = check_conditions(params)
    return {
        "n": n,
        "lam": lam_n,
        "d_squared": dev.d_squared,
        "d": dev.d,
        "criterion_one": cond.criterion_one,
        "criterion_two": cond.criterion_two,
        "conditions_passed": cond.passed,
        "t": traj.t_grid,
        "rho11": traj.rho11,
        "rho01": traj.rho01,
        "entropy": traj.entropy,
        "purity": traj.purity,
        "coherence": traj.coherence,
        "p_coupled": traj.p_coupled,
        "rho11_ham": ham,
        "abs01sq_ham": np.abs(predict_rho01(r, complex(traj.rho01[0]), params.delta_e, t)) ** 2,
    }


def _run_sweep(config: RunConfig) -> ScenarioResult:
    tasks = [
        (n, config.model, config.initial_state.bath_seed, config.t_max,
         config.sample_step, config.tau)
        for n in config.sweep_n
    ]
    points = _map_in_workers(_sweep_point, tasks, config.workers)

    report = _base_report(config)
    fit = scaling_fit([(p["n"], p["d_squared"]) for p in points])
    report["scaling"] = {
        "slope": fit.slope,
        "intercept": fit.intercept,
        "residual": fit.residual,
    }
    report["sweep_protocol"] = {
        "criterion_one_target":
            2.0 * config.model.lam * max(config.model.n1, config.model.n2) / config.model.band_width,
        "lam_rule": "lam(n) = criterion_one_target * band_width / (2 n)",
    }
    tables = []
    point_summaries = []
    for p in points:
        csv_name = f"trajectory_n{p['n']}.csv"
        traj = Trajectory(p["t"], p["rho11"], p["rho01"], p["entropy"],
                          p["purity"], p["coherence"], p["p_coupled"])
        tables.append(_trajectory_table(csv_name, traj, p["rho11_ham"], p["abs01sq_ham"]))
        point_summaries.append({
            "n": p["n"],
            "lambda": p["lam"],
            "d_squared": p["d_squared"],
            "d": p["d"],
            "criterion_one": p["criterion_one"],
            "criterion_two": p["criterion_two"],
            "conditions_passed": p["conditions_passed"],
            "csv": csv_name,
        })
    report["points"] = point_summaries
    return ScenarioResult(config, report, tuple(tables))


def _run_kernel(config: RunConfig) -> ScenarioResult:
    model = build_model(config.model)
    t = _grid(0.0, config.t_max, config.sample_step)
    f = band_kernel(model, t)
    abs_f = np.abs(f)

    report = _base_report(config)
    t_rec = kernel_recurrence_time(model)
    kernel_info: dict = {
        "abs_f0": float(abs_f[0]),
        "recurrence_time": t_rec,
    }
    for label, threshold in (("half", 0.5), ("one_over_e", 1.0 / np.e), ("p3", 0.3)):
        below = np.nonzero(abs_f < threshold)[0]
        kernel_info[f"first_time_below_{label}"] = float(t[below[0]]) if below.size else None
    if t_rec is not None:
        kernel_info["abs_f_at_recurrence"] = float(np.abs(band_kernel(model, [t_rec])[0]))
        lo = kernel_info["first_time_below_p3"]
        hi = min(config.t_max, 0.95 * t_rec)
        if lo is not None and hi > lo:
            mask = (t >= lo) & (t <= hi)
            kernel_info["max_abs_f_after_decay"] = {
                "window": [lo, hi],
                "value": float(abs_f[mask].max()),
            }
    report["kernel"] = kernel_info
    report["kernel_csv"] = "kernel.csv"
    table = CsvTable(
        name="kernel.csv",
        columns=(("t", t), ("re_f", f.real), ("im_f", f.imag), ("abs_f", abs_f)),
    )
    return ScenarioResult(config, report, (table,))


def _run_reverse(config: RunConfig) -> ScenarioResult:
    model = build_model(config.model)
    prop = build_propagator(model)
    state0 = _initial_state(model, config.initial_state)
    t = _grid(-config.t_max, config.t_max, config.sample_step)
    traj = sample_trajectory(prop, state0, t)

    report = _base_report(config)
    overlay = _ham_overlay(config, traj)
    rho11_ham = abs01sq_ham = None
    if overlay[0] is not None:
        rho11_ham, abs01sq_ham, info, _literal = overlay
        report["ham"] = info
    else:
        report["ham"] = {"available": False}

    window = EQUILIBRIUM_WINDOW
    report["windows"] = {
        "backward_mean": _window_mean(t, traj.rho11, -config.t_max, -config.t_max + window),
        "forward_mean": _window_mean(t, traj.rho11, config.t_max - window, config.t_max),
        "window_length": window,
    }
    report["exponential_fit_forward"] = _exponential_fit_dict(
        best_exponential_fit(traj.rho11, t, config.tau)
    )
    report["trajectory_csv"] = "trajectory.csv"
    tables = [_trajectory_table("trajectory.csv", traj, rho11_ham, abs01sq_ham)]

    dv = config.degenerate_variant
    if dv.enabled:
        dv_params = replace(config.model, band_width=dv.band_width, lam=dv.lam)
        dv_model = build_model(dv_params)
        dv_prop = build_propagator(dv_model)
        dv_state0 = _initial_state(dv_model, config.initial_state)
        dv_traj = sample_trajectory(dv_prop, dv_state0, t)
        dv_fit = best_exponential_fit(dv_traj.rho11, t, config.tau)
        dv_report = {
            "model": {"band_width": dv.band_width, "lambda": dv.lam},
            "conditions": _conditions_dict(check_conditions(dv_params)),
            "equilibrium_window_mean": _window_mean(t, dv_traj.rho11, 0.75 * config.tau, config.tau),
            "equilibrium_window": [0.75 * config.tau, config.tau],
            "exponential_fit": _exponential_fit_dict(dv_fit),
            "trajectory_csv": "trajectory_degenerate.csv",
        }
        report["degenerate_variant"] = dv_report
        tables.append(_trajectory_table("trajectory_degenerate.csv", dv_traj, None, None))
    else:
        report["degenerate_variant"] = None
    return ScenarioResult(config, report, tuple(tables))


_SCENARIO_RUNNERS = {
    "check": _run_check,
    "evolve": _run_evolve,
    "ensemble": _run_ensemble,
    "sweep": _run_sweep,
    "kernel": _run_kernel,
    "reverse": _run_reverse,
}


def run_scenario(config: RunConfig) -> ScenarioResult:
    runner = _SCENARIO_RUNNERS.get(config.scenario)
    if runner is None:
        raise ConfigError(f"scenario must be one of {SCENARIOS}, got {config.scenario!r}")
    result = runner(config)
    result.report["report_schema"] = 1
    return result


# --------------------------------------------------------------------------
# outputs


def _format_value(x: float) -> str:
    return repr(float(x))


def _validate_trajectory_columns(table: CsvTable) -> None:
    cols = dict(table.columns)
    rho11 = cols["rho11_exact"]
    coh = cols["abs_rho01_sq"]
    tol = 1e-10
    if np.any(rho11 < -tol) or np.any(rho11 > 1.0 + tol):
        raise ValueError(f"{table.name}: excited population outside [0, 1]")
    half_split_sq = (rho11 - 0.5) ** 2 + coh
    if np.any(half_split_sq > 0.25 + tol):
        raise ValueError(f"{table.name}: reduced state not positive semidefinite")


def write_csv(path: Path, table: CsvTable) -> None:
    if table.validate_reduced:
        _validate_trajectory_columns(table)
    headers = [name for name, _ in table.columns]
    arrays = [np.asarray(col, dtype=float) for _, col in table.columns]
    length = arrays[0].size
    if any(a.size != length for a in arrays):
        raise ValueError(f"{table.name}: ragged columns")
    lines = [",".join(headers)]
    for i in range(length):
        lines.append(",".join(_format_value(a[i]) for a in arrays))
    path.write_text("\n".join(lines) + "\n")


_PLOT_TEMPLATE = '''#!/usr/bin/env python3
"""Plot helper generated alongside the data files. Run it manually:

    python plot.py

Reads the CSV files listed below from its own directory.
"""
import csv
from pathlib import Path

import matplotlib.pyplot as plt

HERE = Path(__file__).parent
TRAJECTORIES = {trajectories!r}
KERNELS = {kernels!r}
MEMBER_TABLES = {members!r}


def read_csv(name):
    with open(HERE / name, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {{k: [float(r[k]) for r in rows] for k in rows[0]}}


for name in TRAJECTORIES:
    data = read_csv(name)
    fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True, figsize=(8, 6))
    ax1.plot(data["t"], data["rho11_exact"], lw=0.8, label="exact")
    ax1.plot(data["t"], data["rho11_ham"], lw=1.2, ls="--", label="rate equation")
    ax1.set_ylabel("excited population")
    ax1.legend()
    ax2.plot(data["t"], data["abs_rho01_sq"], lw=0.8, label="exact")
    ax2.plot(data["t"], data["abs_rho01_sq_ham"], lw=1.2, ls="--", label="rate equation")
    ax2.set_ylabel("|rho01|^2")
    ax2.set_xlabel("t")
    ax2.legend()
    fig.suptitle(name)
    fig.savefig(HERE / (name.replace(".csv", "") + ".png"), dpi=150)

for name in KERNELS:
    data = read_csv(name)
    fig, ax = plt.subplots(figsize=(8, 4))
    ax.plot(data["t"], data["abs_f"], lw=0.8)
    ax.set_xlabel("t")
    ax.set_ylabel("|f(t)|")
    fig.suptitle(name)
    fig.savefig(HERE / (name.replace(".csv", "") + ".png"), dpi=150)

for name in MEMBER_TABLES:
    data = read_csv(name)
    fig, ax = plt.subplots(figsize=(8, 4))
    ax.hist(data["d"], bins=40)
    ax.set_xlabel("D")
    ax.set_ylabel("count")
    fig.suptitle(name)
    fig.savefig(HERE / (name.replace(".csv", "") + ".png"), dpi=150)

print("wrote figures next to the CSV files")
'''


def _plot_script(result: ScenarioResult) -> str:
    trajectories = [t.name for t in result.tables if t.validate_reduced]
    kernels = [t.name for t in result.tables if t.name.startswith("kernel")]
    members = [t.name for t in result.tables if t.name.startswith("members")]
    return _PLOT_TEMPLATE.format(
        trajectories=trajectories, kernels=kernels, members=members
    )


def write_outputs(result: ScenarioResult, out_dir) -> dict:
    """Write CSVs, report.json, plot script, and a digest manifest.

    Returns the manifest dict. Trajectory tables are re-validated
    (trace and positivity of every sample) before writing.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    for table in result.tables:
        path = out / table.name
        write_csv(path, table)
        written.append(path)

    report_path = out / "report.json"
    report_path.write_text(
        json.dumps(_json_safe(result.report), indent=2, sort_keys=True) + "\n"
    )
    written.append(report_path)

    plot_path = out / "plot.py"
    plot_path.write_text(_plot_script(result))
    written.append(plot_path)

    files = []
    for path in sorted(written, key=lambda p: p.name):
        data = path.read_bytes()
        files.append({
            "name": path.name,
            "bytes": len(data),
            "sha256": hashlib.sha256(data).hexdigest(),
        })
    manifest = {"files": files}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest
