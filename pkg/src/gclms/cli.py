"""Command-line interface: run, sweep, report, validate.

Config files are line-oriented ``key = value`` text; ``#`` starts a comment.
Scalar keys (each at most once): ``n_taps``, ``sigma_x2``, ``sigma_v2``,
``ensemble``, ``seed``.  Repeatable keys::

    phase = n_active=1 duration=1000 magnitude=1.0
    algorithm = gc-lms mu=0.05 rho=0.0005

Phases run in file order; active taps are evenly spaced with alternating
signs.  Algorithms are ``lms`` (no rho), ``za-lms``, ``gc-lms``; ``mu``
defaults to 0.05 and ``rho`` to 0.0005 for the attractor algorithms.  An
empty or missing config falls back to the default three-phase scenario with
all three algorithms.  Unknown keys are rejected with their line number.

Exit codes: 0 success, 2 config parse error, 3 filter divergence, 4 I/O
failure (including a missing config file).

Outputs land in ``--out`` (created on demand): ``run`` writes
``learning_curve.csv``, ``sweep`` writes ``sweep.csv``, ``report`` writes
``report.csv``; with ``--plots`` each verb adds a matching SVG figure.
MSE columns also appear in dB (10 log10); an exact zero leaves the dB field
empty.  Identical config and seed produce byte-identical CSVs.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DivergenceError
from .experiments import (
    DEFAULT_SEED,
    DESK_ENSEMBLE,
    DESK_MU,
    DESK_N_TAPS,
    DESK_RHO,
    DESK_SIGMA_V2,
    DESK_SIGMA_X2,
    EnsembleStats,
    SweepRow,
    TheorySimReport,
    run_ensemble,
    sparsity_sweep,
    theory_vs_sim_report,
)
from .filters import Algorithm, FilterParams
from .signals import Scenario, SystemPhase, make_sparse_system

DEFAULT_SWEEP_GRID = (0.0, 0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875, 0.9375)

_SCALAR_KEYS = ("n_taps", "sigma_x2", "sigma_v2", "ensemble", "seed")
_DEFAULT_PHASES = ((1, 1.0, 1000), (8, 1.0, 1000), (16, 1.0, 1000))

_LEARNING_HEADER = [
    "iter", "mse_lms", "mse_zalms", "mse_gclms",
    "mse_lms_db", "mse_zalms_db", "mse_gclms_db",
]
_SWEEP_HEADER = [
    "sparsity", "emse_lms_meas", "emse_za_meas", "emse_gc_meas",
    "emse_za_pred", "emse_gc_pred", "beta2_sign",
]
_REPORT_HEADER = [
    "algorithm", "emse_measured", "emse_measured_se", "emse_predicted",
    "rel_gap", "quad_moment", "l1_gain", "l1_gain_sign", "rho_window_upper",
    "rho_in_window", "degenerate", "bias_gated", "bias_ungated", "bias_holds",
]


@dataclass(frozen=True)
class PhaseSpec:
    """A phase as written in config: active taps, magnitude, duration."""

    n_active: int
    magnitude: float
    duration: int


@dataclass(frozen=True, eq=False)
class ParsedConfig:
    """A config file after parsing: the scenario plus what built it."""

    scenario: Scenario
    algorithms: tuple[FilterParams, ...]
    phase_specs: tuple[PhaseSpec, ...]


@dataclass(frozen=True, eq=False)
class RunConfig:
    """One CLI invocation's resolved inputs."""

    scenario: Scenario
    algorithms: tuple[FilterParams, ...]
    out_dir: Path
    emit_plots: bool = False
    config_path: Path | None = None
    seed_override: int | None = None


def _parse_number(text: str, kind, key: str, lineno: int):
    try:
        value = kind(text)
    except ValueError:
        raise ConfigError(f"{key} expects a {kind.__name__}, got {text!r}", lineno) from None
    if kind is float and not math.isfinite(value):
        raise ConfigError(f"{key} must be finite, got {text!r}", lineno)
    return value


def _parse_tokens(value: str, lineno: int, allowed: dict[str, type]) -> dict:
    found: dict = {}
    for token in value.split():
        key, sep, raw = token.partition("=")
        if not sep:
            raise ConfigError(f"expected key=value tokens, got {token!r}", lineno)
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r}; expected one of {sorted(allowed)}", lineno)
        if key in found:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        found[key] = _parse_number(raw, allowed[key], key, lineno)
    return found


def parse_config(text: str) -> ParsedConfig:
    """Parse config text into a scenario and algorithm list.

    Raises ConfigError carrying the offending 1-based line number for unknown
    keys, malformed values, duplicates, or any violated model invariant.
    """
    scalars: dict[str, tuple[float, int]] = {}
    phase_lines: list[tuple[dict, int]] = []
    algo_lines: list[tuple[str, dict, int]] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"expected 'key = value', got {line!r}", lineno)
        key = key.strip()
        value = value.strip()
        if key in _SCALAR_KEYS:
            if key in scalars:
                raise ConfigError(f"duplicate key {key!r}", lineno)
            kind = float if key.startswith("sigma") else int
            scalars[key] = (_parse_number(value, kind, key, lineno), lineno)
        elif key == "phase":
            tokens = _parse_tokens(
                value, lineno, {"n_active": int, "magnitude": float, "duration": int}
            )
            if "n_active" not in tokens or "duration" not in tokens:
                raise ConfigError("phase needs n_active=... and duration=...", lineno)
            tokens.setdefault("magnitude", 1.0)
            phase_lines.append((tokens, lineno))
        elif key == "algorithm":
            name, _, rest = value.partition(" ")
            if not name:
                raise ConfigError("algorithm needs a name (lms, za-lms, gc-lms)", lineno)
            tokens = _parse_tokens(rest.strip(), lineno, {"mu": float, "rho": float})
            algo_lines.append((name, tokens, lineno))
        else:
            raise ConfigError(
                f"unknown key {key!r}; expected one of "
                f"{sorted((*_SCALAR_KEYS, 'phase', 'algorithm'))}",
                lineno,
            )

    def scalar(key: str, default):
        return scalars.get(key, (default, 0))[0]

    n_taps = scalar("n_taps", DESK_N_TAPS)
    if not phase_lines:
        phase_lines = [
            ({"n_active": a, "magnitude": m, "duration": d}, 0) for a, m, d in _DEFAULT_PHASES
        ]

    phase_specs = []
    phases = []
    for tokens, lineno in phase_lines:
        spec = PhaseSpec(
            n_active=tokens["n_active"],
            magnitude=tokens["magnitude"],
            duration=tokens["duration"],
        )
        try:
            w0 = make_sparse_system(n_taps, spec.n_active, spec.magnitude, "alternating")
            phases.append(SystemPhase(w0=w0, duration=spec.duration))
        except ValueError as exc:
            raise ConfigError(str(exc), lineno or None) from exc
        phase_specs.append(spec)

    try:
        scenario = Scenario(
            n_taps=n_taps,
            sigma_x2=scalar("sigma_x2", DESK_SIGMA_X2),
            sigma_v2=scalar("sigma_v2", DESK_SIGMA_V2),
            phases=tuple(phases),
            ensemble=scalar("ensemble", DESK_ENSEMBLE),
            seed=scalar("seed", DEFAULT_SEED),
        )
    except ValueError as exc:
        lineno = max((ln for _, ln in scalars.values()), default=None)
        raise ConfigError(str(exc), lineno) from exc

    if not algo_lines:
        algo_lines = [("lms", {}, 0), ("za-lms", {}, 0), ("gc-lms", {}, 0)]
    algorithms = []
    seen: set[Algorithm] = set()
    for name, tokens, lineno in algo_lines:
        try:
            alg = Algorithm.from_name(name)
        except ValueError as exc:
            raise ConfigError(str(exc), lineno or None) from exc
        if alg in seen:
            raise ConfigError(f"duplicate algorithm {alg.value!r}", lineno or None)
        seen.add(alg)
        if alg is Algorithm.LMS and tokens.get("rho", 0.0) != 0.0:
            raise ConfigError("lms takes no rho", lineno or None)
        default_rho = 0.0 if alg is Algorithm.LMS else DESK_RHO
        try:
            algorithms.append(
                FilterParams(
                    mu=tokens.get("mu", DESK_MU),
                    rho=tokens.get("rho", default_rho),
                    algorithm=alg,
                )
            )
        except ValueError as exc:
            raise ConfigError(str(exc), lineno or None) from exc

    return ParsedConfig(
        scenario=scenario, algorithms=tuple(algorithms), phase_specs=tuple(phase_specs)
    )


def render_config(parsed: ParsedConfig) -> str:
    """Canonical config text for a parsed config; parse_config round-trips it."""
    scenario = parsed.scenario
    lines = [
        f"n_taps = {scenario.n_taps}",
        f"sigma_x2 = {scenario.sigma_x2!r}",
        f"sigma_v2 = {scenario.sigma_v2!r}",
        f"ensemble = {scenario.ensemble}",
        f"seed = {scenario.seed}",
    ]
    for spec in parsed.phase_specs:
        lines.append(
            f"phase = n_active={spec.n_active} magnitude={spec.magnitude!r} "
            f"duration={spec.duration}"
        )
    for params in parsed.algorithms:
        lines.append(
            f"algorithm = {params.algorithm.value} mu={params.mu!r} rho={params.rho!r}"
        )
    return "\n".join(lines) + "\n"


def _fmt(value) -> str:
    """CSV cell for a value; empty for missing (None or NaN)."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if math.isnan(value):
        return ""
    return repr(value)


def _db(mse: float) -> str:
    """dB cell: 10 log10(mse), empty for an exact zero."""
    if mse == 0.0:
        return ""
    return repr(10.0 * math.log10(mse))


def _open_writer(path: Path):
    path.parent.mkdir(parents=True, exist_ok=True)
    handle = open(path, "w", newline="")
    return handle, csv.writer(handle, lineterminator="\n")


def emit_learning_curve_csv(stats: EnsembleStats, path: Path) -> None:
    """Per-iteration ensemble-mean MSE, linear and dB, one row per iteration."""
    path = Path(path)
    by_column = {alg.column: stats.mse[alg] for alg in stats.algorithms}
    total = stats.scenario.total_iterations
    if total == 0:
        raise ValueError("no iterations to write")
    handle, writer = _open_writer(path)
    with handle:
        writer.writerow(_LEARNING_HEADER)
        for n in range(total):
            values = [by_column[key][n] if key in by_column else None
                      for key in ("lms", "zalms", "gclms")]
            writer.writerow(
                [str(n)]
                + [_fmt(v) for v in values]
                + [_db(v) if v is not None else "" for v in values]
            )


def emit_sweep_csv(rows: list[SweepRow], path: Path) -> None:
    """One row per sparsity level: measured and predicted EMSE, beta2 sign."""
    if not rows:
        raise ValueError("no sweep rows to write")
    path = Path(path)
    handle, writer = _open_writer(path)
    with handle:
        writer.writerow(_SWEEP_HEADER)
        for row in rows:
            writer.writerow(
                [
                    _fmt(row.sparsity),
                    _fmt(row.emse_measured.get(Algorithm.LMS, math.nan)),
                    _fmt(row.emse_measured.get(Algorithm.ZA_LMS, math.nan)),
                    _fmt(row.emse_measured.get(Algorithm.GC_LMS, math.nan)),
                    _fmt(row.emse_predicted.get(Algorithm.ZA_LMS, math.nan)),
                    _fmt(row.emse_predicted.get(Algorithm.GC_LMS, math.nan)),
                    _fmt(row.beta2_sign) if not math.isnan(row.beta2) else "",
                ]
            )


def emit_report_csv(report: TheorySimReport, path: Path) -> None:
    """One row per algorithm: measured vs predicted EMSE and moment diagnostics."""
    if not report.rows:
        raise ValueError("no report rows to write")
    path = Path(path)
    bias = report.bias_comparison
    handle, writer = _open_writer(path)
    with handle:
        writer.writerow(_REPORT_HEADER)
        for row in report.rows:
            writer.writerow(
                [
                    row.algorithm.value,
                    _fmt(row.emse_measured),
                    _fmt(row.emse_stderr),
                    _fmt(row.emse_predicted),
                    _fmt(row.rel_gap),
                    _fmt(row.quad_moment),
                    _fmt(row.l1_gain),
                    _fmt(int(np.sign(row.l1_gain)) if not math.isnan(row.l1_gain) else None),
                    _fmt(row.rho_window_upper),
                    _fmt(row.rho_in_window),
                    _fmt(row.degenerate),
                    _fmt(bias.gated if bias else None),
                    _fmt(bias.ungated if bias else None),
                    _fmt(bias.holds if bias else None),
                ]
            )


def _load_run_config(args: argparse.Namespace) -> RunConfig:
    if args.config is not None:
        text = Path(args.config).read_text()
    else:
        text = ""
    parsed = parse_config(text)
    scenario = parsed.scenario
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError(f"seed must be >= 0, got {args.seed}")
        scenario = dataclasses.replace(scenario, seed=args.seed)
    return RunConfig(
        scenario=scenario,
        algorithms=parsed.algorithms,
        out_dir=Path(args.out),
        emit_plots=bool(args.plots),
        config_path=Path(args.config) if args.config is not None else None,
        seed_override=args.seed,
    )


def _cmd_run(args: argparse.Namespace) -> int:
    config = _load_run_config(args)
    stats = run_ensemble(config.scenario, config.algorithms)
    csv_path = config.out_dir / "learning_curve.csv"
    emit_learning_curve_csv(stats, csv_path)
    print(f"wrote {csv_path}")
    if config.emit_plots:
        from .plots import learning_curve_figure, save_svg

        svg_path = config.out_dir / "learning_curves.svg"
        save_svg(learning_curve_figure(stats), svg_path)
        print(f"wrote {svg_path}")
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    config = _load_run_config(args)
    rows = sparsity_sweep(config.scenario, DEFAULT_SWEEP_GRID, config.algorithms)
    csv_path = config.out_dir / "sweep.csv"
    emit_sweep_csv(rows, csv_path)
    print(f"wrote {csv_path}")
    if config.emit_plots:
        from .plots import save_svg, sweep_figure

        svg_path = config.out_dir / "sweep.svg"
        save_svg(sweep_figure(rows), svg_path)
        print(f"wrote {svg_path}")
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    config = _load_run_config(args)
    stats = run_ensemble(config.scenario, config.algorithms)
    report = theory_vs_sim_report(stats)
    csv_path = config.out_dir / "report.csv"
    emit_report_csv(report, csv_path)
    print(f"wrote {csv_path}")
    for row in report.rows:
        predicted = "-" if math.isnan(row.emse_predicted) else f"{row.emse_predicted:.4e}"
        print(
            f"{row.algorithm.value:>6}: measured {row.emse_measured:.4e} "
            f"(se {row.emse_stderr:.1e}), predicted {predicted}"
        )
    if report.bias_comparison is not None:
        bias = report.bias_comparison
        verdict = "<" if bias.holds else ">="
        print(f"active-tap bias: gated {bias.gated:.4e} {verdict} ungated {bias.ungated:.4e}")
    if config.emit_plots:
        from .plots import report_figure, save_svg

        svg_path = config.out_dir / "report.svg"
        save_svg(report_figure(report), svg_path)
        print(f"wrote {svg_path}")
    return 0


def _cmd_validate(args: argparse.Namespace) -> int:
    config = _load_run_config(args)
    scenario = config.scenario
    print(
        f"config ok: {scenario.n_taps} taps, {len(scenario.phases)} phase(s), "
        f"{scenario.total_iterations} iterations, ensemble {scenario.ensemble}, "
        f"seed {scenario.seed}"
    )
    for i, phase in enumerate(scenario.phases):
        active = int(np.count_nonzero(phase.w0))
        print(f"  phase {i}: {active}/{scenario.n_taps} active taps, {phase.duration} iterations")
    for params in config.algorithms:
        print(f"  algorithm {params.algorithm.value}: mu={params.mu!r} rho={params.rho!r}")
    return 0


_COMMANDS = {
    "run": _cmd_run,
    "sweep": _cmd_sweep,
    "report": _cmd_report,
    "validate": _cmd_validate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gclms",
        description="Sparse-aware LMS filtering: simulate, sweep, and check theory.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "run": "run the configured ensemble and write the learning curve",
        "sweep": "re-run across sparsity levels and write the sweep table",
        "report": "compare measured and predicted steady state",
        "validate": "parse the config and print what it resolves to",
    }
    for name, help_text in helps.items():
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", type=Path, default=None, help="config file path")
        cmd.add_argument("--out", type=Path, default=Path("out"), help="output directory")
        cmd.add_argument("--seed", type=int, default=None, help="override the scenario seed")
        cmd.add_argument("--plots", action="store_true", help="also render SVG figures")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4


def entry() -> None:
    raise SystemExit(main())
