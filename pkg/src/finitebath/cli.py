"""Command-line interface.

One subcommand per scenario. The config is a JSON file (see the bundled
preset for the schema); `--config paper` resolves to the bundled
full-scale preset, which is also the default. Exit codes: 0 success,
2 configuration/validation error, 1 runtime failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .harness import (
    SCENARIOS,
    ConfigError,
    RunConfig,
    load_config,
    preset_path,
    run_scenario,
    write_outputs,
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="finitebath",
        description="Thermalization of a two-level system coupled to a two-band finite bath.",
    )
    parser.add_argument(
        "--config", default="paper",
        help="path to a JSON config, or the name of a bundled preset (default: paper)",
    )
    parser.add_argument("--out", default=None, help="output directory (default: out/<scenario>)")
    parser.add_argument("--workers", type=int, default=None, help="worker process count")

    sub = parser.add_subparsers(dest="scenario", required=True, metavar="|".join(SCENARIOS))
    common_seed_help = "override model.seed_coupling / initial_state.bath_seed"
    for name, extra in (
        ("check", ()),
        ("evolve", ("init", "p_excited", "t_max")),
        ("ensemble", ("members", "p_excited")),
        ("sweep", ("n_list",)),
        ("kernel", ("t_max",)),
        ("reverse", ("t_max", "variant")),
    ):
        p = sub.add_parser(name, help=f"run the {name} scenario")
        p.add_argument("--seed-coupling", type=int, default=None, help=common_seed_help)
        p.add_argument("--bath-seed", type=int, default=None, help=common_seed_help)
        if "init" in extra:
            p.add_argument(
                "--init", choices=("excited", "superposition", "subspace_random"),
                default=None, help="initial state kind",
            )
        if "p_excited" in extra:
            p.add_argument("--p-excited", type=float, default=None,
                           help="excited weight for subspace_random states")
        if "t_max" in extra:
            p.add_argument("--t-max", type=float, default=None, help="trajectory end time")
        if "members" in extra:
            p.add_argument("--members", type=int, default=None, help="ensemble size")
        if "n_list" in extra:
            p.add_argument("--n-list", default=None,
                           help="comma-separated bath sizes, e.g. 10,25,50")
        if "variant" in extra:
            p.add_argument("--no-degenerate-variant", action="store_true",
                           help="skip the zero-band-width contrast run")
    return parser


def _apply_overrides(config: RunConfig, args: argparse.Namespace) -> RunConfig:
    config = replace(config, scenario=args.scenario)
    if args.workers is not None:
        if args.workers < 1:
            raise ConfigError(f"workers: must be >= 1, got {args.workers}")
        config = replace(config, workers=args.workers)
    if getattr(args, "seed_coupling", None) is not None:
        config = replace(config, model=replace(config.model, seed_coupling=args.seed_coupling))
    if getattr(args, "bath_seed", None) is not None:
        config = replace(config, initial_state=replace(config.initial_state, bath_seed=args.bath_seed))
    if getattr(args, "init", None) is not None:
        config = replace(config, initial_state=replace(config.initial_state, kind=args.init))
    if getattr(args, "p_excited", None) is not None:
        if not 0.0 <= args.p_excited <= 1.0:
            raise ConfigError(f"p-excited: must lie in [0, 1], got {args.p_excited}")
        config = replace(config, initial_state=replace(config.initial_state, p_excited=args.p_excited))
    if getattr(args, "t_max", None) is not None:
        if args.t_max <= 0:
            raise ConfigError(f"t-max: must be > 0, got {args.t_max}")
        config = replace(config, t_max=args.t_max, tau=min(config.tau, args.t_max))
    if getattr(args, "members", None) is not None:
        if args.members < 1:
            raise ConfigError(f"members: must be >= 1, got {args.members}")
        config = replace(config, ensemble_size=args.members)
    if getattr(args, "n_list", None) is not None:
        try:
            ns = tuple(int(part) for part in args.n_list.split(","))
        except ValueError as exc:
            raise ConfigError(f"n-list: expected comma-separated integers, got {args.n_list!r}") from exc
        if not ns or any(n < 1 for n in ns):
            raise ConfigError("n-list: all bath sizes must be >= 1")
        config = replace(config, sweep_n=ns)
    if getattr(args, "no_degenerate_variant", False):
        config = replace(config, degenerate_variant=replace(config.degenerate_variant, enabled=False))
    return config


def _summarize(report: dict) -> list[str]:
    lines = []
    cond = report["conditions"]
    lines.append(
        f"validity: criterion_one={cond['criterion_one']:.4g} "
        f"criterion_two={cond['criterion_two']:.4g} passed={cond['passed']}"
    )
    if report.get("rates"):
        lines.append(f"rates: r01={report['rates']['r01']:.4g} r10={report['rates']['r10']:.4g}")
    if "equilibria" in report:
        eq = report["equilibria"]
        lines.append(
            f"equilibrium: exact={eq['exact_window_mean']:.4f} "
            f"ba={eq['ba']:.5f}"
        )
    if "deviation" in report:
        lines.append(f"deviation d={report['deviation']['vs_block_weighted']['d']:.4g}")
    if "members" in report:
        m = report["members"]
        lines.append(f"ensemble: median d={m['median_d']:.4g} max d={m['max_d']:.4g}")
    if "scaling" in report:
        lines.append(f"scaling slope={report['scaling']['slope']:.3f}")
    if "kernel" in report:
        k = report["kernel"]
        rec = k.get("abs_f_at_recurrence")
        lines.append(
            f"kernel: first |f|<0.3 at t={k.get('first_time_below_p3')}"
            + (f", |f(t_rec)|={rec:.4f}" if rec is not None else "")
        )
    if "windows" in report:
        w = report["windows"]
        lines.append(f"reverse: backward mean={w['backward_mean']:.4f} forward mean={w['forward_mean']:.4f}")
    return lines


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        candidate = Path(args.config)
        if candidate.exists():
            path = candidate
        elif candidate.suffix == "" and candidate.name == args.config:
            path = preset_path(args.config)  # bare name: bundled preset
        else:
            raise ConfigError(f"config file not found: {args.config}")
        config = load_config(path)
        config = _apply_overrides(config, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out_dir = args.out or config.out_dir or f"out/{config.scenario}"
    try:
        result = run_scenario(config)
        write_outputs(result, out_dir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for line in _summarize(result.report):
        print(line)
    print(f"wrote {out_dir}/report.json (+ data files, plot.py, manifest.json)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
