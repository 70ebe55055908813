"""Command-line front end: ``funcpd {test,simulate,mc,bandwidth}``."""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
import time
from dataclasses import replace
from pathlib import Path

from . import __version__
from .bootstrap import BootstrapConfig, PValueRule, run_test
from .core import CSVFormatError, GridWeighting, parse_csv, write_csv
from .kernels import KernelKind, KernelSpec
from .multiplier import LagConvention, MultiplierConfig, adaptive_bandwidth
from .simulate import (
    ALPHA_GRID,
    SCENARIO_IDS,
    ScenarioSpec,
    SimConfig,
    Study,
    generate,
    monte_carlo,
    null_companion,
)

EXIT_OK, EXIT_ERROR, EXIT_REJECT = 0, 1, 2


class CLIError(Exception):
    pass


def _common(parser: argparse.ArgumentParser) -> None:
    g = parser.add_argument_group("global options")
    g.add_argument("--seed", type=int, default=0, help="master RNG seed")
    g.add_argument("--threads", type=int, default=1, help="worker cap; never changes results")
    g.add_argument("--weighting", choices=[w.value for w in GridWeighting], default="euclidean")
    g.add_argument("--lag-convention", choices=["standard", "paper"], default="standard")


def _kernel_args(parser):
    parser.add_argument("--kernel", choices=["cusum", "sign", "clipped"], default="sign")
    parser.add_argument("--clip-c", type=float, default=1.0, help="c for the clipped kernel")


def _bootstrap_args(parser, reps_default):
    parser.add_argument("--reps", type=int, default=reps_default, help="bootstrap replicates m")
    parser.add_argument("--bandwidth", default="auto", help="'auto' or a fixed q >= 1")
    parser.add_argument("--pvalue-rule", choices=[r.value for r in PValueRule], default="plain")
    parser.add_argument(
        "--cache-budget-mb", type=float, default=None,
        help="memory for the pairwise kernel table (default $FUNCPD_CACHE_BUDGET_MB or 256)",
    )


def _sim_args(parser, scenario_default):
    parser.add_argument("--scenario", default=scenario_default, help="one of: " + ", ".join(SCENARIO_IDS))
    parser.add_argument("--n", type=int, default=200)
    parser.add_argument("--d", type=int, default=100)
    parser.add_argument("--a", type=float, default=1.0, help="AR parameter")
    parser.add_argument("--burn-in", type=int, default=100)
    parser.add_argument("--gamma", type=float, default=0.3, help="change fraction for s5")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="funcpd",
        description="Robust change-point tests for functional time series (U-statistics + dependent wild bootstrap).",
    )
    parser.add_argument("--version", action="version", version=f"funcpd {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("test", help="run the bootstrap change-point test on a CSV sample")
    p.add_argument("--input", required=True, help="CSV file, one row per time point ('-' for stdin)")
    p.add_argument("--date-column", default=None, help="name or 0-based index of a label column")
    _kernel_args(p)
    p.add_argument("--alpha", type=float, default=0.05)
    _bootstrap_args(p, 1000)
    p.add_argument("--out", default=None, help="write the JSON report here")
    p.add_argument("--exit-on-reject", action="store_true", help="exit with status 2 when H0 is rejected")
    p.add_argument("--timing", action="store_true", help="embed wall-clock duration in the report manifest")
    _common(p)

    p = sub.add_parser("bandwidth", help="show the data-adaptive bandwidth")
    p.add_argument("--input", required=True)
    p.add_argument("--date-column", default=None)
    _kernel_args(p)
    p.add_argument("--json", action="store_true", help="print JSON instead of text")
    _common(p)

    p = sub.add_parser("simulate", help="simulate an fAR(1) sample under a scenario")
    _sim_args(p, "null")
    p.add_argument("--out", default=None, help="CSV output (default stdout)")
    _common(p)

    p = sub.add_parser("mc", help="Monte Carlo size/power study")
    _sim_args(p, "null")
    p.add_argument("--studies", type=int, default=100, help="number of simulated samples S")
    p.add_argument("--kernels", default="cusum,sign", help="comma-separated kernels")
    p.add_argument("--clip-c", type=float, default=1.0)
    _bootstrap_args(p, 300)
    p.add_argument("--out", required=True, help="rejection table CSV")
    p.add_argument("--size-power", default=None, help="size-power CSV (default <out>_sizepower.csv)")
    p.add_argument("--no-size-power", action="store_true", help="skip the companion null study")
    _common(p)
    return parser


def _lag(args) -> LagConvention:
    return LagConvention.parse(args.lag_convention)


def _kernel(name: str, c: float, weighting: str) -> KernelSpec:
    try:
        return KernelSpec(KernelKind.parse(name), c=c, weighting=weighting)
    except ValueError as exc:
        raise CLIError(str(exc)) from None


def _bandwidth(value: str) -> float | None:
    if value == "auto":
        return None
    try:
        q = float(value)
    except ValueError:
        raise CLIError(f"--bandwidth must be 'auto' or a number >= 1, got {value!r}") from None
    if not q >= 1:
        raise CLIError(f"--bandwidth must be >= 1, got {q}")
    return q


def _scenario(args) -> ScenarioSpec:
    try:
        spec = ScenarioSpec(args.scenario, gamma=args.gamma)
    except ValueError as exc:
        raise CLIError(str(exc)) from None
    return spec


def _read_input(path: str, date_column):
    if path == "-":
        raw = sys.stdin.buffer.read()
        source = "<stdin>"
    else:
        try:
            raw = Path(path).read_bytes()
        except OSError as exc:
            raise CLIError(f"cannot read {path}: {exc.strerror or exc}") from None
        source = path
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise CLIError(f"{source}: not UTF-8: {exc}") from None
    try:
        sample = parse_csv(text, date_column=date_column, source=source)
    except CSVFormatError as exc:
        raise CLIError(str(exc)) from None
    return sample, hashlib.sha256(raw).hexdigest()


def _manifest(command: str, flags: dict, seed: int, checksum: str | None) -> dict:
    return {
        "command": command,
        "flags": flags,
        "version": __version__,
        "seed": seed,
        "input_sha256": checksum,
    }


def _flags(args, drop=("threads", "command", "timing", "out", "size_power")) -> dict:
    # only result-determining flags; output paths and worker counts stay out
    return {k: v for k, v in sorted(vars(args).items()) if k not in drop}


def cmd_test(args) -> int:
    start = time.perf_counter()
    sample, checksum = _read_input(args.input, args.date_column)
    spec = _kernel(args.kernel, args.clip_c, args.weighting)
    try:
        config = BootstrapConfig(
            m=args.reps,
            alpha=args.alpha,
            multiplier=MultiplierConfig(q=_bandwidth(args.bandwidth), lag_convention=_lag(args)),
            seed=args.seed,
            p_value_rule=args.pvalue_rule,
            workers=max(1, args.threads),
            cache_budget_mb=args.cache_budget_mb,
        )
    except ValueError as exc:
        raise CLIError(str(exc)) from None
    report = run_test(sample, spec, config)
    out = report.to_dict()
    if sample.labels is not None:
        out["k_hat_label"] = sample.labels[report.k_hat - 1]
    manifest = _manifest("test", _flags(args), args.seed, checksum)
    if args.timing:
        manifest["duration_s"] = time.perf_counter() - start
    out["manifest"] = manifest
    text = json.dumps(out, indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")

    where = f" ({out['k_hat_label']})" if "k_hat_label" in out else ""
    print(f"kernel        {spec.kind.value}")
    print(f"n, d          {sample.n}, {sample.d}")
    print(f"statistic     {report.statistic:.6g}")
    print(f"critical val  {report.critical_value:.6g}  (alpha={report.alpha}, m={report.m}, q={report.q_used:g})")
    print(f"p-value       {report.p_value:.4f}")
    print(f"k_hat         {report.k_hat}{where}")
    print(f"decision      {'reject H0' if report.reject else 'do not reject H0'}")
    print(f"elapsed       {time.perf_counter() - start:.2f}s", file=sys.stderr)
    if args.exit_on_reject and report.reject:
        return EXIT_REJECT
    return EXIT_OK


def cmd_bandwidth(args) -> int:
    sample, checksum = _read_input(args.input, args.date_column)
    spec = _kernel(args.kernel, args.clip_c, args.weighting)
    rep = adaptive_bandwidth(sample, spec)
    if args.json:
        out = rep.to_dict()
        out["manifest"] = _manifest("bandwidth", _flags(args), args.seed, checksum)
        print(json.dumps(out, indent=2, sort_keys=True))
    else:
        print(f"q_adpt    {rep.q_adpt}")
        print(f"q0        {rep.q0:.6g}")
        print(f"cp0_sum   {rep.cp0_sum:.6g}")
        print(f"cp1_sum   {rep.cp1_sum:.6g}")
        print(f"cp0_diag2 {rep.cp0_diag_sq_sum:.6g}")
        print(f"clamped   {str(rep.clamped).lower()}")
    return EXIT_OK


def _sim_config(args) -> SimConfig:
    try:
        return SimConfig(n=args.n, d=args.d, a=args.a, burn_in=args.burn_in, seed=args.seed)
    except ValueError as exc:
        raise CLIError(str(exc)) from None


def cmd_simulate(args) -> int:
    scenario = _scenario(args)
    sample = generate(scenario, _sim_config(args))
    flags = _flags(args)
    flags["scenario"] = scenario.id.value
    if scenario.n is not None:
        flags["n"], flags["d"] = scenario.n, scenario.d
    manifest = _manifest("simulate", flags, args.seed, None)
    text = write_csv(sample, args.out, manifest=manifest)
    if not args.out:
        sys.stdout.write(text)
    return EXIT_OK


def _write_rows(path, rows, fields, manifest):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("# funcpd-manifest: " + json.dumps(manifest, sort_keys=True) + "\n")
        w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})


def cmd_mc(args) -> int:
    scenario = _scenario(args)
    if args.studies < 1:
        raise CLIError("--studies must be >= 1")
    kernels = tuple(_kernel(k.strip(), args.clip_c, args.weighting) for k in args.kernels.split(",") if k.strip())
    if not kernels:
        raise CLIError("--kernels is empty")
    try:
        boot = BootstrapConfig(
            m=args.reps,
            multiplier=MultiplierConfig(q=_bandwidth(args.bandwidth), lag_convention=_lag(args)),
            p_value_rule=args.pvalue_rule,
            cache_budget_mb=args.cache_budget_mb,
        )
    except ValueError as exc:
        raise CLIError(str(exc)) from None
    sim = _sim_config(args)
    study = Study(scenario, sim, boot, S=args.studies, kernels=kernels, seed=args.seed, workers=max(1, args.threads))
    res = monte_carlo(study)
    manifest = _manifest("mc", _flags(args), args.seed, None)
    fields = ["scenario", "kernel", "alpha", "rejection_rate", "mc_stderr"]
    _write_rows(args.out, res.table(), fields, manifest)
    for r in res.table():
        print(f"{r['scenario']:<22} {r['kernel']:<13} alpha={r['alpha']:<6} rate={r['rejection_rate']:.4f} se={r['mc_stderr']:.4f}")

    if not args.no_size_power:
        comp = null_companion(scenario)
        if comp == scenario:
            null_res = res
        else:
            # the null study uses the same seeds so size and power share data draws
            null_res = monte_carlo(replace(study, scenario=comp))
        rows = []
        for ki, k in enumerate(kernels):
            for a in ALPHA_GRID:
                rows.append({
                    "scenario": scenario.id.value,
                    "null_scenario": comp.id.value,
                    "kernel": k.kind.value,
                    "alpha": a,
                    "size": null_res.rate(ki, a),
                    "power": res.rate(ki, a),
                })
        sp_path = args.size_power or str(Path(args.out).with_name(Path(args.out).stem + "_sizepower.csv"))
        _write_rows(sp_path, rows, list(rows[0]), manifest)
    return EXIT_OK


COMMANDS = {"test": cmd_test, "bandwidth": cmd_bandwidth, "simulate": cmd_simulate, "mc": cmd_mc}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except CLIError as exc:
        print(f"funcpd: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
