"""Command-line front end: figure tables, single-point reports and Cramer-Rao checks.

Every run emits a table (CSV by default, JSON with ``--format json``) and a
run manifest. With ``--out PATH`` the manifest goes to ``PATH.manifest.json``;
otherwise the table goes to stdout and the manifest to stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import re
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .errors import InsufficientPoints, InvalidInput, WVAError
from .fisher import Scheme, conventional_qfi
from .mc import TrialConfig, run_experiments
from .postselect import success_probability
from .sweep import (
    PointParams,
    SweepSpec,
    default_angle_grid,
    default_lambda_grid,
    default_threads,
    evaluate,
    evaluate_point,
    loglog_slope,
    pa_linear_fit,
    run_sweep,
)

PI = math.pi

# compiled-in figure defaults (mirroring the figure captions)
FIG2 = {"theta_i": PI / 2, "phi0": PI, "alpha": 2.0, "theta_f": (3 * PI / 2, PI / 2)}
FIG3 = {"theta_i": PI / 2, "phi0": PI, "alpha": 2.0, "lambdas": (0.01, 0.05, 0.1, 1.0)}
FIG4 = {"theta_i": PI / 2, "phi0": PI, "alpha": 2.0, "theta_f": (PI / 2, PI, 3 * PI / 2), "lambdas": (0.05, 0.1, 1.0)}
FIG5 = {"theta_i": PI / 2, "phi0": PI / 2, "alpha": 0.1, "nbar": 3.0, "lambdas": (1e-4, 1e-3, 1e-2)}
# n-bar window: see README; the 1e2..1e4 window is available through --nbar-min/--nbar-max
FIG6 = {
    "theta_i": PI / 2,
    "theta_f": PI / 2,
    "phi0": PI / 2,
    "alpha": 0.1,
    "lambdas": (1e-3, 1e-2),
    "nbar_min": 5.0,
    "nbar_max": 40.0,
    "nbar_points": 25,
}
CRLB = {"theta_i": PI / 2, "theta_f": 3 * PI / 2, "phi0": PI, "alpha": 2.0, "lambda": 0.1}

COLUMNS = {
    "fig2": ["lambda", "pa_qa_tf_3pi2", "pa_qa_tf_pi2"],
    "fig3": ["lambda", "theta_f", "p_a", "pa_fn", "pa_fx", "phi_opt", "pa_qa", "q_cm"],
    "fig4": ["theta_f", "lambda", "phi", "pa_fx", "pa_qa"],
    "fig5": ["lambda", "theta_f", "pt_a", "mixed_pa_fn", "aav_pa_fn", "pure_pa_qa"],
    "fig6": ["lambda", "nbar", "pt_a", "mixed_pa_fn", "pure_pa_fn"],
    "crlb": [
        "scheme",
        "variant",
        "true_lambda",
        "experiments",
        "shots",
        "p_a",
        "acceptance_fraction",
        "acceptance_sigma",
        "acceptance_within_3sigma",
        "mean_lambda_hat",
        "empirical_variance",
        "crlb",
        "ratio",
        "variance_status",
    ],
    "point": [
        "theta_i",
        "theta_f",
        "phi0",
        "alpha_re",
        "alpha_im",
        "nbar",
        "lambda",
        "phi",
        "p_a",
        "f_n",
        "f_x",
        "q_a",
        "pa_fn",
        "pa_fx",
        "pa_qa",
        "q_cm",
        "f_cm",
    ],
}


# -- argument parsing -------------------------------------------------------

_ANGLE = re.compile(r"^\s*([+-]?(?:\d+\.?\d*|\.\d+)?)\s*\*?\s*pi\s*(?:/\s*(\d+\.?\d*))?\s*$")


def parse_angle(text: str) -> float:
    """Float, or a multiple of pi such as ``3pi/2``, ``-pi``, ``0.5*pi``."""
    m = _ANGLE.match(str(text).lower())
    if m:
        coef = m.group(1)
        if coef in ("", "+"):
            c = 1.0
        elif coef == "-":
            c = -1.0
        else:
            c = float(coef)
        div = float(m.group(2)) if m.group(2) else 1.0
        if div == 0:
            raise argparse.ArgumentTypeError(f"division by zero in {text!r}")
        return c * PI / div
    try:
        value = float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a number or multiple of pi: {text!r}") from exc
    if not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"value must be finite: {text!r}")
    return value


def parse_list(text: str) -> list[float]:
    items = [s for s in str(text).split(",") if s.strip()]
    if not items:
        raise argparse.ArgumentTypeError("empty list")
    return [parse_angle(s) for s in items]


def parse_phi(text: str):
    return None if str(text).strip().lower() == "opt" else parse_angle(text)


def parse_complex(text: str) -> complex:
    try:
        value = complex(str(text).replace(" ", "").replace("i", "j"))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from exc
    if not (math.isfinite(value.real) and math.isfinite(value.imag)):
        raise argparse.ArgumentTypeError(f"value must be finite: {text!r}")
    return value


def positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from exc
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1: {text!r}")
    return value


def _add_output(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", type=Path, default=None, help="table path (manifest goes to PATH.manifest.json)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--threads", type=positive_int, default=None, help="worker threads (env WVA_FISHER_THREADS)")


def _add_state(p: argparse.ArgumentParser, defaults: dict, theta_f: bool = True, nbar_help: str | None = None) -> None:
    p.add_argument("--theta-i", type=parse_angle, default=defaults["theta_i"])
    if theta_f:
        p.add_argument("--theta-f", type=parse_angle, default=defaults.get("theta_f"))
    p.add_argument("--phi0", type=parse_angle, default=defaults["phi0"], help="relative phase phi_i - phi_f")
    p.add_argument("--alpha", type=parse_complex, default=defaults["alpha"])
    p.add_argument("--nbar", type=float, default=defaults.get("nbar"), help=nbar_help or "sets alpha = sqrt(nbar)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wva-fisher", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fig2", help="p_a Q_a versus lambda; columns: " + ", ".join(COLUMNS["fig2"]))
    _add_state(p, FIG2, theta_f=False)
    p.add_argument("--lambda-min", type=float, default=1e-4)
    p.add_argument("--lambda-max", type=float, default=1.5)
    p.add_argument("--lambda-points", type=positive_int, default=200)
    p.add_argument("--lambda-grid", type=parse_list, default=None, help="explicit comma-separated lambda grid")
    _add_output(p)

    p = sub.add_parser("fig3", help="weighted FI and QFI versus theta_f; columns: " + ", ".join(COLUMNS["fig3"]))
    _add_state(p, FIG3, theta_f=False)
    p.add_argument("--lambda", dest="lambdas", type=parse_list, default=list(FIG3["lambdas"]))
    p.add_argument("--theta-points", type=positive_int, default=720)
    p.add_argument("--phi", type=parse_phi, default=None, help="homodyne phase, or 'opt' (default)")
    _add_output(p)

    p = sub.add_parser("fig4", help="homodyne FI versus phase; columns: " + ", ".join(COLUMNS["fig4"]))
    _add_state(p, {k: v for k, v in FIG4.items() if k != "theta_f"}, theta_f=False)
    p.add_argument("--theta-f", dest="theta_fs", type=parse_list, default=list(FIG4["theta_f"]))
    p.add_argument("--lambda", dest="lambdas", type=parse_list, default=list(FIG4["lambdas"]))
    p.add_argument("--phi-points", type=positive_int, default=720)
    _add_output(p)

    p = sub.add_parser("fig5", help="mixed versus pure meters; columns: " + ", ".join(COLUMNS["fig5"]))
    _add_state(p, FIG5, theta_f=False, nbar_help="mean photon number shared by the mixed and pure meters")
    p.add_argument("--lambda", dest="lambdas", type=parse_list, default=list(FIG5["lambdas"]))
    p.add_argument("--theta-points", type=positive_int, default=720)
    p.add_argument("--aav-order", choices=("leading", "next"), default="leading")
    _add_output(p)

    p = sub.add_parser("fig6", help="nbar scaling; columns: " + ", ".join(COLUMNS["fig6"]))
    _add_state(p, FIG6, nbar_help="unused; the nbar grid is set by --nbar-min/--nbar-max/--nbar-points")
    p.add_argument("--lambda", dest="lambdas", type=parse_list, default=list(FIG6["lambdas"]))
    p.add_argument("--nbar-min", type=float, default=FIG6["nbar_min"])
    p.add_argument("--nbar-max", type=float, default=FIG6["nbar_max"])
    p.add_argument("--nbar-points", type=positive_int, default=FIG6["nbar_points"])
    p.add_argument("--nbar-grid", type=parse_list, default=None, help="explicit comma-separated nbar grid")
    _add_output(p)

    p = sub.add_parser("crlb", help="Monte-Carlo variance versus the Cramer-Rao bound")
    _add_state(p, CRLB)
    p.add_argument("--lambda", dest="lam", type=parse_angle, default=CRLB["lambda"], help="true lambda")
    p.add_argument("--scheme", choices=("photon_number", "quadrature"), default="photon_number")
    p.add_argument("--phi", type=parse_angle, default=0.0, help="homodyne phase for --scheme quadrature")
    p.add_argument("--experiments", type=positive_int, default=200)
    p.add_argument("--shots", type=positive_int, default=20000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--meter-only", action="store_true", help="drop the binomial acceptance term from the likelihood")
    p.add_argument("--window", type=float, default=0.1, help="MLE search half-width around the true lambda")
    _add_output(p)

    p = sub.add_parser("point", help="every scheme at one parameter point")
    _add_state(p, {**FIG3, "theta_f": 3 * PI / 2})
    p.add_argument("--lambda", dest="lam", type=parse_angle, default=0.1)
    p.add_argument("--phi", type=parse_phi, default=None, help="homodyne phase, or 'opt' (default)")
    _add_output(p)

    p = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    p.add_argument("manifest", type=Path)
    p.add_argument("--out", type=Path, default=None, help="override the recorded output path")
    return parser


# -- tables -----------------------------------------------------------------


@dataclass
class Table:
    columns: list[str]
    rows: list[list] = field(default_factory=list)
    comments: list[str] = field(default_factory=list)
    fits: list[dict] = field(default_factory=list)


def format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    return str(v)


def to_csv(table: Table) -> str:
    lines = [",".join(table.columns)]
    lines += [",".join(format_value(v) for v in row) for row in table.rows]
    lines += ["# " + c for c in table.comments]
    return "\n".join(lines) + "\n"


def parse_csv(text: str) -> tuple[list[str], list[list]]:
    """Inverse of :func:`to_csv` for the data rows (comment lines are skipped)."""
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    columns = lines[0].split(",")

    def cell(s: str):
        if s == "":
            return None
        if s in ("true", "false"):
            return s == "true"
        try:
            return int(s) if re.fullmatch(r"[+-]?\d+", s) else float(s)
        except ValueError:
            return s

    return columns, [[cell(s) for s in ln.split(",")] for ln in lines[1:]]


def _json_value(v):
    if isinstance(v, (np.floating, float)):
        return float(v) if math.isfinite(v) else None
    if isinstance(v, np.integer):
        return int(v)
    return v


def to_json(table: Table, manifest: dict) -> str:
    rows = [{c: _json_value(v) for c, v in zip(table.columns, row)} for row in table.rows]
    return json.dumps({"manifest": manifest, "rows": rows, "fits": table.fits}, indent=1) + "\n"


# -- commands ---------------------------------------------------------------


def _alpha(args) -> complex:
    if args.nbar is None:
        return complex(args.alpha)
    if args.nbar < 0:
        raise InvalidInput("--nbar must be non-negative")
    return complex(math.sqrt(args.nbar))


def _weighted(report):
    return None if report is None else report.weighted


def _check_lambdas(values) -> None:
    for v in values:
        if not math.isfinite(v):
            raise InvalidInput(f"lambda must be finite, got {v}")


def cmd_fig2(args):
    if args.lambda_grid is not None:
        grid = sorted(args.lambda_grid)
        grids = {"lambda": {"values": grid}}
    else:
        if not (0 < args.lambda_min < args.lambda_max) and args.lambda_points > 1:
            raise InvalidInput("need 0 < --lambda-min < --lambda-max")
        grid = list(default_lambda_grid(args.lambda_points, args.lambda_min, args.lambda_max))
        grids = {"lambda": {"log_uniform": [args.lambda_min, args.lambda_max], "points": args.lambda_points}}
    _check_lambdas(grid)
    alpha = _alpha(args)
    cols = []
    for tf in FIG2["theta_f"]:
        spec = SweepSpec("lambda", tuple(grid), PointParams(args.theta_i, tf, args.phi0, grid[0], alpha))
        cols.append(run_sweep(spec, [Scheme.QFI], args.threads))
    table = Table(COLUMNS["fig2"])
    for a, b in zip(*cols):
        table.rows.append([a.value, _weighted(a.reports[Scheme.QFI]), _weighted(b.reports[Scheme.QFI])])
    return table, grids


def cmd_fig3(args):
    _check_lambdas(args.lambdas)
    alpha = _alpha(args)
    thetas = default_angle_grid(args.theta_points)
    q_cm = conventional_qfi(alpha).fisher
    table = Table(COLUMNS["fig3"])
    quantities = [Scheme.PHOTON_NUMBER, Scheme.QUADRATURE, Scheme.QFI]
    for lam in args.lambdas:
        fixed = PointParams(args.theta_i, float(thetas[0]), args.phi0, lam, alpha, args.phi)
        for row in run_sweep(SweepSpec("theta_f", tuple(thetas), fixed), quantities, args.threads):
            p = row.params
            fx = row.reports[Scheme.QUADRATURE]
            phi = None if fx is None else fx.meta.get("phi")
            p_a = success_probability(p.psi_i, p.psi_f, p.nbar, lam)
            table.rows.append(
                [
                    lam,
                    row.value,
                    p_a,
                    _weighted(row.reports[Scheme.PHOTON_NUMBER]),
                    _weighted(fx),
                    phi,
                    _weighted(row.reports[Scheme.QFI]),
                    q_cm,
                ]
            )
    grids = {"theta_f": {"uniform": [0.0, 2 * PI], "points": args.theta_points, "endpoint": False}}
    return table, grids


def cmd_fig4(args):
    _check_lambdas(args.lambdas)
    alpha = _alpha(args)
    phis = default_angle_grid(args.phi_points)
    table = Table(COLUMNS["fig4"])
    for tf in args.theta_fs:
        for lam in args.lambdas:
            fixed = PointParams(args.theta_i, tf, args.phi0, lam, alpha, float(phis[0]))
            qa = evaluate_point(fixed, [Scheme.QFI])[Scheme.QFI]
            for row in run_sweep(SweepSpec("varphi", tuple(phis), fixed), [Scheme.QUADRATURE], args.threads):
                table.rows.append([tf, lam, row.value, _weighted(row.reports[Scheme.QUADRATURE]), _weighted(qa)])
    grids = {"phi": {"uniform": [0.0, 2 * PI], "points": args.phi_points, "endpoint": False}}
    return table, grids


def cmd_fig5(args):
    _check_lambdas(args.lambdas)
    nbar = FIG5["nbar"] if args.nbar is None else args.nbar
    if nbar < abs(args.alpha) ** 2:
        raise InvalidInput(f"--nbar {nbar:g} is below |alpha|^2 = {abs(args.alpha) ** 2:g}")
    thetas = default_angle_grid(args.theta_points)
    aav = Scheme.AAV_LEADING if args.aav_order == "leading" else Scheme.AAV_NEXT
    table = Table(COLUMNS["fig5"])
    for lam in args.lambdas:
        fixed = PointParams(args.theta_i, float(thetas[0]), args.phi0, lam, math.sqrt(nbar), None, args.alpha)
        spec = SweepSpec("theta_f", tuple(thetas), fixed)
        for row in run_sweep(spec, [Scheme.MIXED_PHOTON_NUMBER, aav, Scheme.QFI], args.threads):
            mixed = row.reports[Scheme.MIXED_PHOTON_NUMBER]
            table.rows.append(
                [
                    lam,
                    row.value,
                    None if mixed is None else mixed.p_a,
                    _weighted(mixed),
                    _weighted(row.reports[aav]),
                    _weighted(row.reports[Scheme.QFI]),
                ]
            )
    grids = {"theta_f": {"uniform": [0.0, 2 * PI], "points": args.theta_points, "endpoint": False}}
    return table, grids


def cmd_fig6(args):
    _check_lambdas(args.lambdas)
    if args.nbar_grid is not None:
        grid = sorted(args.nbar_grid)
        grids = {"nbar": {"values": grid}}
    else:
        if not (0 < args.nbar_min < args.nbar_max) and args.nbar_points > 1:
            raise InvalidInput("need 0 < --nbar-min < --nbar-max")
        grid = list(np.logspace(math.log10(args.nbar_min), math.log10(args.nbar_max), args.nbar_points))
        grids = {"nbar": {"log_uniform": [args.nbar_min, args.nbar_max], "points": args.nbar_points}}
    if grid[0] < abs(args.alpha) ** 2:
        raise InvalidInput(f"nbar grid starts below |alpha|^2 = {abs(args.alpha) ** 2:g}")
    table = Table(COLUMNS["fig6"])
    theta_f = FIG6["theta_f"] if args.theta_f is None else args.theta_f
    for lam in args.lambdas:
        fixed = PointParams(args.theta_i, theta_f, args.phi0, lam, math.sqrt(grid[0]), None, args.alpha)
        rows = run_sweep(SweepSpec("n_bar", tuple(grid), fixed), [Scheme.MIXED_PHOTON_NUMBER, Scheme.PHOTON_NUMBER], args.threads)
        mixed_pts, pure_pts, pa_pts = [], [], []
        for row in rows:
            mixed = row.reports[Scheme.MIXED_PHOTON_NUMBER]
            pure = row.reports[Scheme.PHOTON_NUMBER]
            pt_a = None if mixed is None else mixed.p_a
            table.rows.append([lam, row.value, pt_a, _weighted(mixed), _weighted(pure)])
            mixed_pts.append((row.value, _weighted(mixed)))
            pure_pts.append((row.value, _weighted(pure)))
            pa_pts.append((row.value, pt_a))
        for label, pts in (("mixed", mixed_pts), ("pure", pure_pts)):
            try:
                fit = loglog_slope(pts)
            except InsufficientPoints as exc:
                table.comments.append(f"fit lambda={format_value(lam)} meter={label} unavailable: {exc}")
                continue
            table.fits.append({"kind": "loglog", "lambda": lam, "meter": label, **asdict(fit)})
            table.comments.append(
                f"fit lambda={format_value(lam)} meter={label} k={format_value(fit.slope_k)} "
                f"intercept={format_value(fit.intercept)} r2={format_value(fit.r_squared)} "
                f"range={format_value(fit.fit_range[0])}..{format_value(fit.fit_range[1])} points={fit.n_points}"
            )
        try:
            lin = pa_linear_fit(pa_pts)
        except InsufficientPoints as exc:
            table.comments.append(f"pa_fit lambda={format_value(lam)} unavailable: {exc}")
            continue
        table.fits.append({"kind": "pa_linear", "lambda": lam, **asdict(lin)})
        table.comments.append(
            f"pa_fit lambda={format_value(lam)} d={format_value(lin.d)} b={format_value(lin.b)} "
            f"residual={format_value(lin.residual)} points={lin.n_points}"
        )
    return table, grids


def cmd_crlb(args):
    _check_lambdas([args.lam])
    if not args.window > 0:
        raise InvalidInput("--window must be positive")
    cfg = TrialConfig(
        true_lambda=args.lam,
        shots=args.shots,
        seed=args.seed,
        scheme=args.scheme,
        theta_i=args.theta_i,
        theta_f=args.theta_f,
        phi0=args.phi0,
        alpha=_alpha(args),
        phi=args.phi,
    )
    include = not args.meter_only
    window = (args.lam - args.window, args.lam + args.window)
    threads = default_threads() if args.threads is None else args.threads
    s = run_experiments(cfg, args.experiments, include_acceptance=include, window=window, threads=threads)
    table = Table(COLUMNS["crlb"])
    table.rows.append(
        [
            cfg.scheme,
            "with_acceptance" if include else "meter_only",
            cfg.true_lambda,
            s.experiments,
            int(cfg.shots),
            s.p_a,
            s.acceptance_fraction,
            s.acceptance_sigma,
            s.acceptance_within_3sigma,
            float(np.mean(s.estimates)),
            s.empirical_variance,
            s.crlb,
            s.ratio,
            "ok" if s.empirical_variance is not None else "insufficient",
        ]
    )
    return table, {"experiments": {"count": args.experiments, "seed_spawn": "SeedSequence(seed).spawn"}}


def cmd_point(args):
    _check_lambdas([args.lam])
    alpha = _alpha(args)
    p = PointParams(args.theta_i, args.theta_f, args.phi0, args.lam, alpha, args.phi)
    fn = evaluate(p, Scheme.PHOTON_NUMBER)
    fx = evaluate(p, Scheme.QUADRATURE)
    qa = evaluate(p, Scheme.QFI)
    cm = evaluate(p, Scheme.CONVENTIONAL_QUADRATURE)
    phi = fx.meta.get("phi")
    table = Table(COLUMNS["point"])
    table.rows.append(
        [
            p.theta_i,
            p.theta_f,
            p.phi0,
            alpha.real,
            alpha.imag,
            p.nbar,
            p.lam,
            phi,
            fn.p_a,
            fn.fisher,
            fx.fisher,
            qa.fisher,
            fn.weighted,
            fx.weighted,
            qa.weighted,
            conventional_qfi(alpha).fisher,
            cm.fisher,
        ]
    )
    return table, {}


COMMANDS = {
    "fig2": cmd_fig2,
    "fig3": cmd_fig3,
    "fig4": cmd_fig4,
    "fig5": cmd_fig5,
    "fig6": cmd_fig6,
    "crlb": cmd_crlb,
    "point": cmd_point,
}


# -- manifest and driver ----------------------------------------------------


@dataclass(frozen=True)
class RunManifest:
    command: list
    subcommand: str
    parameters: dict
    grids: dict
    columns: list
    version: str
    seed: int | None
    timestamp: str
    format: str

    def to_dict(self) -> dict:
        return asdict(self)


def _param_echo(args) -> dict:
    out = {}
    for k, v in sorted(vars(args).items()):
        if k in ("out",):
            out[k] = None if v is None else str(v)
        elif isinstance(v, complex):
            out[k] = [v.real, v.imag]
        elif isinstance(v, (list, tuple)):
            out[k] = [float(x) for x in v]
        else:
            out[k] = v
    return out


def _strip_out(argv: list) -> list:
    out, skip = [], False
    for a in argv:
        if skip:
            skip = False
        elif a == "--out":
            skip = True
        elif not a.startswith("--out="):
            out.append(a)
    return out


def _emit(args, argv, table: Table, grids: dict) -> None:
    manifest = RunManifest(
        command=list(argv),
        subcommand=args.command,
        parameters=_param_echo(args),
        grids=grids,
        columns=table.columns,
        version=__version__,
        seed=getattr(args, "seed", None),
        timestamp=datetime.now(timezone.utc).isoformat(),
        format=args.format,
    ).to_dict()
    # the embedded copy drops the timestamp and output path so a replay reproduces the table byte for byte
    stable = {k: v for k, v in manifest.items() if k != "timestamp"}
    stable["command"] = _strip_out(stable["command"])
    stable["parameters"] = {k: v for k, v in stable["parameters"].items() if k != "out"}
    text = to_csv(table) if args.format == "csv" else to_json(table, stable)
    mtext = json.dumps(manifest, indent=1) + "\n"
    if args.out is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        sys.stderr.write(mtext)
    else:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(text)
        Path(str(args.out) + ".manifest.json").write_text(mtext)


def _replay(args) -> int:
    try:
        manifest = json.loads(args.manifest.read_text())
        argv = list(manifest["command"])
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise InvalidInput(f"cannot read manifest {args.manifest}: {exc}") from exc
    if args.out is not None:
        if "--out" in argv:
            i = argv.index("--out")
            argv[i + 1] = str(args.out)
        else:
            argv += ["--out", str(args.out)]
    return main(argv)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "replay":
            return _replay(args)
        table, grids = COMMANDS[args.command](args)
        _emit(args, argv, table, grids)
    except WVAError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (FloatingPointError, ArithmeticError) as exc:
        print(f"error: numeric failure: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
