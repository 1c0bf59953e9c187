"""Command-line front end.

Commands::

    lamshoot explicit    closed-form line and circle solutions, with residuals
    lamshoot shoot       one shot from the diagonal, written as a trajectory table
    lamshoot sweep       outcome table over a range of starting radii
    lamshoot find-rstar  critical radius and the closed generating curve
    lamshoot verify      run the lemma checks and print a report table
    lamshoot export      plot data or ambient point samples from a curve file

Settings are resolved as built-in defaults, then an optional ``key=value``
config file, then command-line flags.  Exit codes: 0 success, 1 invalid
arguments, 2 numerical failure, 3 tolerance not met.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np

from .analysis import GuaranteeError, LemmaReport, run_all
from .core import (
    DomainError,
    Params,
    TrajectorySample,
    explicit_solutions,
    theta_dot,
    to_diagonal,
)
from .integrator import IntegrationError, IntegratorConfig
from .shooting import (
    BracketFailure,
    ClosedCurve,
    ShotSpec,
    ToleranceNotMet,
    find_rstar,
    shoot,
    sweep,
)

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NUMERICAL = 2
EXIT_TOLERANCE = 3

TRAJECTORY_HEADER = ("t", "x", "y", "theta", "r", "s", "phi", "theta_dot")
SWEEP_HEADER = ("R", "outcome", "phi_end", "s_max", "T")
DEFAULT_SEED = 20240917
EXPLICIT_SAMPLES = 1000
EXPLICIT_TOL = 1e-10

_INTEGRATOR_DEFAULTS = IntegratorConfig()

# Every setting with its default; flags, config keys and RunConfig fields share these names.
DEFAULTS: dict[str, Any] = {
    "m": 2,
    "n": 2,
    "lam": -0.5,
    "rel_tol": _INTEGRATOR_DEFAULTS.rel_tol,
    "abs_tol": _INTEGRATOR_DEFAULTS.abs_tol,
    "y_stop": _INTEGRATOR_DEFAULTS.y_stop,
    "t_max": _INTEGRATOR_DEFAULTS.t_max,
    "out": None,
    "format": "csv",
    "R": 8.0,
    "r_from": 2.2,
    "r_to": 8.0,
    "count": 20,
    "workers": 1,
    "r_tol": 1e-10,
    "max_iter": 200,
    "spacing": 1e-3,
    "curve_out": None,
    "input": None,
    "mode": "plot",
    "samples": 10,
    "seed": DEFAULT_SEED,
}

_CONVERTERS = {
    "m": int,
    "n": int,
    "lam": float,
    "rel_tol": float,
    "abs_tol": float,
    "y_stop": float,
    "t_max": float,
    "out": str,
    "format": str,
    "R": float,
    "r_from": float,
    "r_to": float,
    "count": int,
    "workers": int,
    "r_tol": float,
    "max_iter": int,
    "spacing": float,
    "curve_out": str,
    "input": str,
    "mode": str,
    "samples": int,
    "seed": int,
}

_CHOICES = {"format": ("csv", "json"), "mode": ("plot", "ambient")}
# config-file spellings that differ from the internal names
_KEY_ALIASES = {"lambda": "lam", "r": "R"}


class UsageError(Exception):
    """Invalid command line, config file or parameter value."""


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved settings of one invocation."""

    command: str
    params: Params
    integrator: IntegratorConfig
    out: Optional[str] = None
    format: str = "csv"
    R: float = DEFAULTS["R"]
    r_from: float = DEFAULTS["r_from"]
    r_to: float = DEFAULTS["r_to"]
    count: int = DEFAULTS["count"]
    workers: int = DEFAULTS["workers"]
    r_tol: float = DEFAULTS["r_tol"]
    max_iter: int = DEFAULTS["max_iter"]
    spacing: float = DEFAULTS["spacing"]
    curve_out: Optional[str] = None
    input: Optional[str] = None
    mode: str = DEFAULTS["mode"]
    samples: int = DEFAULTS["samples"]
    seed: int = DEFAULTS["seed"]


# -- argument parsing ---------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse would exit with status 2
        raise UsageError(message)


def _help(text: str, key: str) -> str:
    return f"{text} (default: {DEFAULTS[key]})"


def _common_parent() -> argparse.ArgumentParser:
    # Defaults are left as None so that a config file value is not masked.
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("model and integrator")
    g.add_argument("--m", type=int, help=_help("dimension of the first rotation factor", "m"))
    g.add_argument("--n", type=int, help=_help("dimension of the second rotation factor", "n"))
    g.add_argument("--lambda", dest="lam", type=float, help=_help("lambda, must be <= 0", "lam"))
    g.add_argument("--rel-tol", type=float, help=_help("relative step tolerance", "rel_tol"))
    g.add_argument("--abs-tol", type=float, help=_help("absolute step tolerance", "abs_tol"))
    g.add_argument("--y-stop", type=float, help=_help("x-axis guard height", "y_stop"))
    g.add_argument("--t-max", type=float, help=_help("arclength budget per trajectory", "t_max"))
    g = p.add_argument_group("input/output")
    g.add_argument("--out", help="output file (default: standard output)")
    g.add_argument("--format", choices=_CHOICES["format"], help=_help("output format", "format"))
    g.add_argument("--config", help="key=value settings file; flags override it")
    g.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    return p


def build_parser() -> argparse.ArgumentParser:
    parent = _common_parent()
    parser = _Parser(
        prog="lamshoot",
        description="Shooting construction of closed rotational lambda-hypersurfaces.",
    )
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    sub.add_parser("explicit", parents=[parent], help="closed-form solutions and their residuals")

    p = sub.add_parser("shoot", parents=[parent], help="integrate one shot from the diagonal")
    p.add_argument("--R", type=float, help=_help("starting distance from the origin", "R"))

    p = sub.add_parser("sweep", parents=[parent], help="classify shots over a radius range")
    p.add_argument("--r-from", type=float, help=_help("first radius", "r_from"))
    p.add_argument("--r-to", type=float, help=_help("last radius", "r_to"))
    p.add_argument("--count", type=int, help=_help("number of radii", "count"))
    p.add_argument("--workers", type=int, help=_help("worker processes", "workers"))

    p = sub.add_parser("find-rstar", parents=[parent], help="bisect for the critical radius")
    p.add_argument("--r-tol", type=float, help=_help("bracket width to reach", "r_tol"))
    p.add_argument("--max-iter", type=int, help=_help("bisection step limit", "max_iter"))
    p.add_argument("--spacing", type=float, help=_help("arclength spacing of the curve table", "spacing"))
    p.add_argument("--curve-out", help="closed-curve CSV (default: next to --out as <stem>_curve.csv)")

    sub.add_parser("verify", parents=[parent], help="run the lemma checks")

    p = sub.add_parser("export", parents=[parent], help="plot data or ambient samples from a curve file")
    p.add_argument("--input", help="curve CSV with x and y columns (required)")
    p.add_argument("--mode", choices=_CHOICES["mode"], help=_help("export mode", "mode"))
    p.add_argument("--samples", type=int, help=_help("ambient points per curve point", "samples"))
    p.add_argument("--seed", type=int, help=_help("random seed for ambient sampling", "seed"))
    return parser


def read_config_file(path: str) -> dict[str, Any]:
    """Parse ``key = value`` lines; ``#`` starts a comment.  Keys use flag names."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc.strerror}") from None
    values: dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.lstrip("-").replace("-", "_")
        key = _KEY_ALIASES.get(key.lower(), key)
        if key not in _CONVERTERS:
            raise UsageError(f"{path}:{lineno}: unknown setting {key!r}")
        try:
            values[key] = _CONVERTERS[key](value)
        except ValueError:
            raise UsageError(f"{path}:{lineno}: bad value for {key}: {value!r}") from None
        if key in _CHOICES and values[key] not in _CHOICES[key]:
            raise UsageError(f"{path}:{lineno}: {key} must be one of {', '.join(_CHOICES[key])}")
    return values


def resolve(args: argparse.Namespace) -> RunConfig:
    """Merge defaults, config file and flags, and validate the result."""
    merged = dict(DEFAULTS)
    if getattr(args, "config", None):
        merged.update(read_config_file(args.config))
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value

    try:
        params = Params(merged["m"], merged["n"], merged["lam"])
        integrator = IntegratorConfig(
            rel_tol=merged["rel_tol"],
            abs_tol=merged["abs_tol"],
            y_stop=merged["y_stop"],
            t_max=merged["t_max"],
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None

    names = {f.name for f in fields(RunConfig)} - {"command", "params", "integrator"}
    return RunConfig(
        command=args.command,
        params=params,
        integrator=integrator,
        **{k: merged[k] for k in names},
    )


# -- serialization ------------------------------------------------------------

def fmt(value: Optional[float]) -> str:
    """Full double precision; empty for a missing value."""
    if value is None:
        return ""
    return format(value, ".17g")


def _json_safe(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    return value


def dumps(obj: Any) -> str:
    """Canonical JSON text: non-finite numbers become null, trailing newline."""
    return json.dumps(_json_safe(obj), indent=2, allow_nan=False) + "\n"


def trajectory_rows(samples: Sequence[TrajectorySample]) -> list[list[str]]:
    rows = []
    for smp in samples:
        st = smp.state
        d = to_diagonal(st)
        rows.append([fmt(v) for v in (smp.t, st.x, st.y, st.theta, d.r, d.s, d.phi, smp.theta_dot)])
    return rows


def csv_text(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _emit(text: str, path: Optional[str]) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _say(cfg: RunConfig, text: str) -> None:
    # Summaries go to stdout unless stdout is carrying the data itself.
    stream = sys.stdout if cfg.out is not None else sys.stderr
    print(text, file=stream)


def _params_dict(params: Params) -> dict:
    return {"m": params.m, "n": params.n, "lambda": params.lam}


# -- commands -----------------------------------------------------------------

def explicit_residuals(params: Params, count: int = EXPLICIT_SAMPLES) -> dict[str, float]:
    """Largest |theta' residual| over ``count`` points on each closed-form solution."""
    sol = explicit_solutions(params)
    m, n, lam = params.m, params.n, params.lam
    grid = [(i + 0.5) / count for i in range(count)]
    horiz = max(abs(theta_dot(0.05 + 10 * u, sol.line_y, 0.0, m, n, lam)) for u in grid)
    vert = max(abs(theta_dot(sol.line_x, 0.05 + 10 * u, -0.5 * math.pi, m, n, lam)) for u in grid)
    rho = sol.circle_radius
    circ = 0.0
    for u in grid:
        a = 0.5 * math.pi * u
        model = theta_dot(rho * math.cos(a), rho * math.sin(a), a - 0.5 * math.pi, m, n, lam)
        circ = max(circ, abs(model + 1.0 / rho))
    return {"line_y": horiz, "line_x": vert, "circle": circ}


def cmd_explicit(cfg: RunConfig) -> int:
    sol = explicit_solutions(cfg.params)
    res = explicit_residuals(cfg.params)
    ok = max(res.values()) < EXPLICIT_TOL
    if cfg.format == "json":
        _emit(
            dumps(
                {
                    "params": _params_dict(cfg.params),
                    "line_x": sol.line_x,
                    "line_y": sol.line_y,
                    "circle_radius": sol.circle_radius,
                    "max_residual": res,
                    "passed": ok,
                }
            ),
            cfg.out,
        )
    else:
        rows = [
            ["line_x", fmt(sol.line_x), fmt(res["line_x"])],
            ["line_y", fmt(sol.line_y), fmt(res["line_y"])],
            ["circle_radius", fmt(sol.circle_radius), fmt(res["circle"])],
        ]
        _emit(csv_text(("solution", "value", "max_residual"), rows), cfg.out)
    if not ok:
        print(f"residual above {EXPLICIT_TOL:g}: {res}", file=sys.stderr)
    return EXIT_OK if ok else EXIT_NUMERICAL


def cmd_shoot(cfg: RunConfig) -> int:
    try:
        spec = ShotSpec(cfg.R, cfg.params, cfg.integrator)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    result = shoot(spec)
    term = result.terminal
    if cfg.format == "json":
        doc = {
            "params": _params_dict(cfg.params),
            "R": result.R,
            "outcome": result.outcome.value,
            "T": result.T,
            "terminal": {"r": term.r, "s": term.s, "phi": term.phi},
            "s_max": result.s_max,
            "r_at_smax": result.r_at_smax,
            "trajectory": [dict(zip(TRAJECTORY_HEADER, map(float, row)))
                           for row in trajectory_rows(result.trajectory.samples)],
        }
        _emit(dumps(doc), cfg.out)
    else:
        _emit(csv_text(TRAJECTORY_HEADER, trajectory_rows(result.trajectory.samples)), cfg.out)
    _say(
        cfg,
        f"outcome={result.outcome.value} T={fmt(result.T)} "
        f"r={fmt(term.r)} s={fmt(term.s)} phi={fmt(term.phi)}",
    )
    return EXIT_OK


def _radii(cfg: RunConfig) -> list[float]:
    if cfg.count < 0:
        raise UsageError("count must be >= 0")
    if cfg.count == 0:
        return []
    if not (cfg.r_from > 0 and cfg.r_to > 0):
        raise UsageError("R must be positive")
    if cfg.count == 1:
        return [cfg.r_from]
    step = (cfg.r_to - cfg.r_from) / (cfg.count - 1)
    return [cfg.r_from + i * step for i in range(cfg.count)]


def cmd_sweep(cfg: RunConfig) -> int:
    if cfg.params.m != cfg.params.n:
        raise UsageError("shooting requires m = n")
    radii = _radii(cfg)
    rows = sweep(cfg.params, cfg.integrator, radii, max_workers=cfg.workers)
    if cfg.format == "json":
        doc = {
            "params": _params_dict(cfg.params),
            "rows": [
                {
                    "R": r.R,
                    "outcome": r.outcome.value if r.outcome else None,
                    "phi_end": r.phi_end,
                    "s_max": r.s_max,
                    "T": r.T,
                    "error": r.error,
                }
                for r in rows
            ],
        }
        _emit(dumps(doc), cfg.out)
    else:
        table = []
        for r in rows:
            # a failed shot carries its error message in the outcome column
            outcome = r.outcome.value if r.outcome else f"error: {r.error}"
            table.append([fmt(r.R), outcome, fmt(r.phi_end), fmt(r.s_max), fmt(r.T)])
        _emit(csv_text(SWEEP_HEADER, table), cfg.out)
    failed = sum(r.outcome is None for r in rows)
    _say(cfg, f"{len(rows)} shots, {failed} failed")
    if rows and failed == len(rows):
        return EXIT_NUMERICAL
    return EXIT_OK


def curve_document(params: Params, curve: ClosedCurve) -> dict:
    return {
        "params": _params_dict(params),
        "r_star": curve.r_star,
        "bracket": list(curve.bracket),
        "iterations": curve.iterations,
        "closure_gap": curve.closure_gap,
        "perp_residual": curve.perp_residual,
        "max_eq_residual": curve.max_eq_residual,
        "n_samples": len(curve.samples),
    }


def _curve_path(cfg: RunConfig) -> Optional[str]:
    if cfg.curve_out is not None:
        return cfg.curve_out
    if cfg.out is None:
        return None
    out = Path(cfg.out)
    return str(out.with_name(out.stem + "_curve.csv"))


def cmd_find_rstar(cfg: RunConfig) -> int:
    if cfg.params.m != cfg.params.n:
        raise UsageError("shooting requires m = n")
    if not cfg.params.within_guarantees:
        raise UsageError("lemma guarantees require lambda < 0")
    if not cfg.r_tol > 0 or cfg.max_iter < 1 or not cfg.spacing > 0:
        raise UsageError("r-tol and spacing must be positive and max-iter at least 1")

    code = EXIT_OK
    try:
        curve = find_rstar(
            cfg.params, cfg.integrator, r_tol=cfg.r_tol, max_iter=cfg.max_iter, spacing=cfg.spacing
        )
    except ToleranceNotMet as exc:
        print(f"tolerance not met: {exc}", file=sys.stderr)
        curve, code = exc.curve, EXIT_TOLERANCE

    _emit(dumps(curve_document(cfg.params, curve)), cfg.out)
    path = _curve_path(cfg)
    if path is not None:
        Path(path).write_text(csv_text(TRAJECTORY_HEADER, trajectory_rows(curve.samples)))
    _say(cfg, f"r_star={fmt(curve.r_star)} perp_residual={curve.perp_residual:.3e}")
    return code


def report_table(reports: Sequence[LemmaReport]) -> str:
    lines = [f"{'check':<14}{'status':<9}{'cases':>7}  violations"]
    for rep in reports:
        lines.append(f"{rep.lemma.value:<14}{rep.status:<9}{rep.cases:>7}  {len(rep.violations)}")
        for v in rep.violations[:5]:
            lines.append(f"    {v.where}: measured {v.measured:.6g}, threshold {v.threshold:.6g}")
        if len(rep.violations) > 5:
            lines.append(f"    ... {len(rep.violations) - 5} more")
    return "\n".join(lines) + "\n"


def cmd_verify(cfg: RunConfig) -> int:
    try:
        reports = run_all(cfg.params, cfg.integrator)
    except GuaranteeError as exc:
        print(f"warning: {exc}; the checks assume lambda < 0", file=sys.stderr)
        return EXIT_INVALID
    doc = {"params": _params_dict(cfg.params), "reports": [r.to_dict() for r in reports]}
    table = report_table(reports)
    if cfg.format == "json" and cfg.out is None:
        sys.stdout.write(dumps(doc))
        sys.stderr.write(table)
    else:
        sys.stdout.write(table)
        if cfg.out is not None:
            Path(cfg.out).write_text(dumps(doc))
    ok = all(r.passed for r in reports if not r.skipped)
    return EXIT_OK if ok else EXIT_NUMERICAL


def read_curve(path: str) -> list[tuple[float, float]]:
    """The (x, y) columns of a CSV curve table."""
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if not reader.fieldnames or not {"x", "y"} <= set(reader.fieldnames):
                raise UsageError(f"{path}: expected columns named x and y")
            points = [(float(row["x"]), float(row["y"])) for row in reader]
    except OSError as exc:
        raise UsageError(f"cannot read input {path}: {exc.strerror}") from None
    except (ValueError, TypeError):
        raise UsageError(f"{path}: non-numeric x or y value") from None
    if not points:
        raise UsageError(f"{path}: no curve points")
    if any(not (x > 0 and y > 0) for x, y in points):
        raise UsageError(f"{path}: curve points must lie in the open first quadrant")
    return points


def mirror_across_line(points: Sequence[tuple[float, float]], params: Params) -> list[tuple[float, float]]:
    """Reflect across (n-1) y^2 = (m-1) x^2; for m = n this swaps x and y."""
    if params.m == params.n:
        return [(y, x) for x, y in points]
    k = math.sqrt((params.m - 1) / (params.n - 1))
    c, s = (1 - k * k) / (1 + k * k), 2 * k / (1 + k * k)
    return [(c * x + s * y, s * x - c * y) for x, y in points]


def ambient_samples(
    points: Sequence[tuple[float, float]], params: Params, k: int, seed: int
) -> np.ndarray:
    """``k`` uniform points of S^{m-1}(x) x S^{n-1}(y) for each curve point, in order."""
    rng = np.random.default_rng(seed)
    m, n = params.m, params.n
    out = np.empty((len(points) * k, m + n))
    for i, (x, y) in enumerate(points):
        g = rng.standard_normal((k, m + n))
        a = g[:, :m] / np.linalg.norm(g[:, :m], axis=1, keepdims=True)
        b = g[:, m:] / np.linalg.norm(g[:, m:], axis=1, keepdims=True)
        out[i * k : (i + 1) * k, :m] = x * a
        out[i * k : (i + 1) * k, m:] = y * b
    return out


def cmd_export(cfg: RunConfig) -> int:
    if cfg.input is None:
        raise UsageError("export needs --input")
    points = read_curve(cfg.input)
    if cfg.mode == "plot":
        mirrored = mirror_across_line(points, cfg.params)
        polygon = points + mirrored[::-1] + [points[0]]
        rows = [[fmt(x), fmt(y)] for x, y in polygon]
        _emit(csv_text(("x", "y"), rows), cfg.out)
        _say(cfg, f"{len(polygon)} plot points")
        return EXIT_OK
    if cfg.samples < 1:
        raise UsageError("samples must be >= 1")
    data = ambient_samples(points, cfg.params, cfg.samples, cfg.seed)
    header = [f"p{i + 1}" for i in range(cfg.params.m + cfg.params.n)]
    rows = [[fmt(float(v)) for v in row] for row in data]
    _emit(csv_text(header, rows), cfg.out)
    _say(cfg, f"{len(rows)} ambient points (seed {cfg.seed})")
    return EXIT_OK


COMMANDS = {
    "explicit": cmd_explicit,
    "shoot": cmd_shoot,
    "sweep": cmd_sweep,
    "find-rstar": cmd_find_rstar,
    "verify": cmd_verify,
    "export": cmd_export,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = resolve(args)
        return COMMANDS[cfg.command](cfg)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except BracketFailure as exc:
        print(f"bracket failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (IntegrationError, DomainError) as exc:
        print(f"integration failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
