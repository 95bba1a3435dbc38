"""Full-scale acceptance runs.

One test per criterion, each printing a pass line with the measured
numbers (visible with -s). The heavy fixtures are module-scoped so the
full-scale model is diagonalized only a handful of times.
"""

import json
import math
from dataclasses import replace

import numpy as np
import pytest

from finitebath import (
    band_kernel,
    best_exponential_fit,
    build_model,
    build_propagator,
    check_conditions,
    deviation_d2,
    evolve,
    evolve_ode,
    excitation_series,
    initial_state_excited,
    initial_state_superposition,
    integrate_rate_equation,
    full_hamiltonian,
    paper_preset,
    predict_rho11,
    rates,
    reduce_state,
    run_scenario,
    sample_trajectory,
    write_outputs,
)
from finitebath.harness import config_from_dict

from conftest import make_params, paper_params


def ok(num: int, name: str, details: str) -> None:
    print(f"ACCEPTANCE {num:02d} {name}: PASS | {details}")


@pytest.fixture(scope="module")
def paper():
    return paper_preset()


@pytest.fixture(scope="module")
def evolve_run(tmp_path_factory, paper):
    config = replace(paper, scenario="evolve")
    result = run_scenario(config)
    out = tmp_path_factory.mktemp("evolve")
    write_outputs(result, out)
    return result, out


@pytest.fixture(scope="module")
def paper_system(paper):
    model = build_model(paper.model)
    return model, build_propagator(model)


def test_criterion_01_relaxation(evolve_run):
    result, _ = evolve_run
    eq = result.report["equilibria"]
    window_mean = eq["exact_window_mean"]
    assert eq["window"] == [2500.0, 3000.0]
    assert abs(window_mean - 0.5) <= 0.05

    dev = result.report["deviation"]
    d = dev["vs_block_weighted"]["d"]
    assert d <= 0.05
    # excited product start: the literal and block-weighted schemes coincide
    assert dev["vs_literal"]["d"] == pytest.approx(d, abs=1e-12)
    ok(1, "relaxation", f"window mean rho11 = {window_mean:.4f}, D = {d:.4f}")


def test_criterion_02_ba_contrast(evolve_run):
    _, out = evolve_run
    report = json.loads((out / "report.json").read_text())
    ba = report["ba_equilibrium"]
    exact = report["equilibria"]["exact_window_mean"]
    ratio = report["equilibria"]["exact_over_ba_ratio"]
    assert ba == pytest.approx(0.00669, abs=1e-5)
    assert exact == pytest.approx(0.5, abs=0.05)
    assert ratio > 50.0
    ok(2, "ba-contrast", f"exact = {exact:.4f} vs ba = {ba:.5f} ({ratio:.0f}x)")


def test_criterion_03_coherence_decay(paper, paper_system):
    model, prop = paper_system
    state0 = initial_state_superposition(model, paper.initial_state.bath_seed)
    t = np.arange(0.0, paper.tau + 0.5, 1.0)
    traj = sample_trajectory(prop, state0, t)
    assert traj.coherence[0] == pytest.approx(0.25, abs=1e-9)

    fit = best_exponential_fit(traj.coherence, t, paper.tau)
    r01 = rates(paper.model).r01
    assert abs(fit.rate - r01) <= 0.15 * r01
    ok(3, "coherence-decay",
       f"|rho01|^2(0) = {traj.coherence[0]:.6f}, fit rate = {fit.rate:.3e} "
       f"vs r01 = {r01:.3e} ({fit.rate / r01:.3f}x)")


def test_criterion_04_entropy_growth(evolve_run):
    result, _ = evolve_run
    window_mean = result.report["entropy"]["window_mean"]
    assert window_mean >= math.log(2) - 0.02
    ok(4, "entropy-growth", f"window mean entropy = {window_mean:.4f} (ln 2 = {math.log(2):.4f})")


def test_criterion_05_ensemble_histogram(paper):
    config = replace(paper, scenario="ensemble")
    assert config.ensemble_size == 100
    result = run_scenario(config)
    table = dict(result.tables[0].columns)
    d_values = np.asarray(table["d"])
    median = float(np.median(d_values))
    frac_small = float(np.mean(d_values <= 0.05))
    assert 0.007 <= median <= 0.03
    assert frac_small >= 0.90
    mode_left = result.report["histogram"]["left_edges"][
        int(np.argmax(result.report["histogram"]["counts"]))
    ]
    assert 0.005 <= mode_left <= 0.04
    ok(5, "ensemble-histogram",
       f"median D = {median:.4f}, {100 * frac_small:.0f}% below 0.05, mode bin at {mode_left:.3f}")


def test_criterion_06_deviation_scaling(paper):
    config = replace(paper, scenario="sweep")
    assert config.sweep_n == (10, 25, 50, 100, 200, 400, 500, 800)
    result = run_scenario(config)
    slope = result.report["scaling"]["slope"]
    assert -1.3 <= slope <= -0.7

    by_n = {p["n"]: p for p in result.report["points"]}
    assert not by_n[10]["conditions_passed"]   # small baths leave the valid regime
    assert by_n[500]["conditions_passed"]
    ok(6, "deviation-scaling", f"log-log slope = {slope:.3f} over n = 10..800")


def test_criterion_07_timescales(paper, paper_system):
    model, prop = paper_system
    config = replace(paper, scenario="kernel", t_max=7000.0)
    info = run_scenario(config).report["kernel"]
    assert info["first_time_below_p3"] <= 15.0
    assert info["recurrence_time"] == pytest.approx(6283.185307179586, rel=1e-12)
    assert info["abs_f_at_recurrence"] >= 0.99

    window = np.arange(15.0, 6000.5, 1.0)
    max_abs = float(np.max(np.abs(band_kernel(model, window))))
    assert max_abs <= 0.3

    state0 = initial_state_excited(model, paper.initial_state.bath_seed)
    late = np.arange(3000.0, 10000.0 + 1.0, 2.0)
    rho11_late = excitation_series(prop, state0, late)
    assert float(rho11_late.max()) <= 0.6
    ok(7, "timescales",
       f"|f| below 0.3 by t = {info['first_time_below_p3']:.0f}, "
       f"|f(t_rec)| = {info['abs_f_at_recurrence']:.4f}, "
       f"max |f| on [15, 6000] = {max_abs:.3f}, "
       f"max rho11 on [3000, 1e4] = {rho11_late.max():.3f}")


def test_criterion_08_reversal(paper):
    config = replace(paper, scenario="reverse")
    assert config.degenerate_variant.enabled
    report = run_scenario(config).report

    backward = report["windows"]["backward_mean"]
    assert abs(backward - 0.5) <= 0.05

    variant = report["degenerate_variant"]
    d_exp = variant["exponential_fit"]["deviation_d"]
    eq_mean = variant["equilibrium_window_mean"]
    assert variant["equilibrium_window"] == [1500.0, 2000.0]
    assert d_exp >= 0.05
    assert 0.35 <= eq_mean <= 0.65
    ok(8, "reversal",
       f"backward window mean = {backward:.4f}; degenerate variant: "
       f"best-exponential D = {d_exp:.4f}, late mean = {eq_mean:.4f}")


def test_criterion_09_property_suites():
    # conservation laws on a mid-size model
    params = make_params(n1=50, n2=50, lam=0.005, seed_coupling=5)
    model = build_model(params)
    prop = build_propagator(model)
    h = full_hamiltonian(model)
    state0 = initial_state_superposition(model, 17)
    e0 = np.real(np.vdot(state0.amplitudes, h @ state0.amplitudes))
    blocks = ("coupled", "ground_lower", "excited_upper")
    p0 = {b: np.sum(np.abs(getattr(state0, b)) ** 2) for b in blocks}
    for t in (1.0, 100.0, -400.0, 2500.0):
        st = evolve(prop, state0, t)
        assert abs(st.norm() - 1.0) <= 1e-10
        rho = reduce_state(st)
        rho.validate(trace_tol=1e-10, psd_tol=1e-10)
        for b in blocks:
            assert abs(np.sum(np.abs(getattr(st, b)) ** 2) - p0[b]) <= 1e-10
        et = np.real(np.vdot(st.amplitudes, h @ st.amplitudes))
        assert abs(et - e0) <= 1e-9 * abs(e0)

    # spectral propagation against the independent integrator
    params20 = make_params()
    model20 = build_model(params20)
    prop20 = build_propagator(model20)
    s0 = initial_state_superposition(model20, 8)
    t_grid = np.array([0.0, 100.0, 300.0, 500.0])
    for t, ode_state in zip(t_grid, evolve_ode(model20, s0, t_grid)):
        a = reduce_state(evolve(prop20, s0, float(t)))
        b = reduce_state(ode_state)
        assert abs(a.rho11 - b.rho11) <= 1e-6
        assert abs(a.rho01 - b.rho01) <= 1e-6

    # rate-equation closed form against its own integrator
    r = rates(paper_params())
    t = np.linspace(0.0, 2000.0, 401)
    assert np.max(np.abs(predict_rho11(r, 1.0, 1.0, t)
                         - integrate_rate_equation(r, 1.0, 1.0, t))) <= 1e-9

    # validity checker on the full-scale parameter set
    report = check_conditions(paper_params())
    assert report.criterion_one == pytest.approx(1.0, abs=1e-12)
    assert report.criterion_two == pytest.approx(5e-4, abs=1e-12)

    # quadratic deviation on the analytic constant-offset case
    grid = np.arange(0.0, 2001.0, 1.0)
    y = np.sin(grid / 100.0)
    assert deviation_d2(y, y + 0.02, grid, 2000.0).d_squared == pytest.approx(4e-4, abs=1e-12)
    ok(9, "property-suites", "conservation, oracle agreement, checker arithmetic all within bounds")


def test_criterion_10_determinism(tmp_path):
    raw = {
        "model": {"delta_e": 25.0, "band_width": 0.5, "n1": 30, "n2": 30,
                  "lambda": 0.009, "seed_coupling": 61},
        "initial_state": {"kind": "subspace_random", "bath_seed": 8, "p_excited": 0.75},
        "t_max": 200.0, "sample_step": 1.0, "tau": 100.0,
        "ensemble_size": 6, "sweep_n": [10, 15, 20], "workers": 1,
    }

    def digests(scenario, workers, tag):
        config = replace(config_from_dict(raw), scenario=scenario, workers=workers)
        manifest = write_outputs(run_scenario(config), tmp_path / tag)
        return {f["name"]: f["sha256"] for f in manifest["files"] if f["name"].endswith(".csv")}

    for scenario in ("evolve", "ensemble", "sweep"):
        first = digests(scenario, 1, f"{scenario}-a")
        again = digests(scenario, 1, f"{scenario}-b")
        parallel = digests(scenario, 2, f"{scenario}-c")
        assert first == again, f"{scenario}: rerun changed data files"
        assert first == parallel, f"{scenario}: worker count changed data files"
    ok(10, "determinism", "rerun and 1-vs-2-worker data files byte-identical (evolve, ensemble, sweep)")
