"""
Command line front end of ustat-lil.

Every subcommand loads kernel specification files, runs one family of
library operations and writes a flat report keyed by
``(command, spec, n, u, t, p)``. Installed as the ``ustat-lil`` console
script (see ``[options.entry_points]`` in ``setup.cfg``)::

    ustat-lil norms kernel.json --u 1 2 4
    ustat-lil simulate kernel.json --n 64 --p 2 4 --t 1 --lil 12
    ustat-lil selftest

All randomness flows from ``--seed`` (default 20240917), so a command re-run
with the same arguments writes a byte-identical report for any ``--threads``.

Exit codes: 0 success, 2 input error, 3 guard violation, 4 selftest failure.
"""

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ustat_lil import __version__

from .bounds import (
    BoundMode,
    HypothesisRejection,
    decoupling_comparison,
    moment_bound,
    norm_table,
    pz_lower,
    tail_bound_canonical,
    tail_bound_projected,
    variance_bound,
    verify_bounds,
)
from .errors import DYADIC_CAP, ENUMERATION_CAP, GuardViolation, UStatError, check_cap, enforce
from .indexing import enumerate_partition_specs
from .kernel import CalibrationConstants, Kernel, hoeffding_project, is_canonical, load_kernel, save_kernel, second_moment
from .lilcheck import lil_certificate, truncation_trend
from .norms import norm_kj, norm_kju
from .rng import DEFAULT_SEED
from .selftest import run_selftest
from .simulate import (
    REP_CHUNK,
    SampleConfig,
    UStatKind,
    enumeration_size,
    exact_moment,
    exact_tail,
    lil_ratio_sequence,
    sample_norms,
    summarize_moment,
    summarize_tail,
)

__author__ = "Wai-Shing Luk"
__copyright__ = "Wai-Shing Luk"
__license__ = "MIT"

_logger = logging.getLogger(__name__)

DEFAULT_REPS = 256
DEFAULT_THREADS = 1
DEFAULT_TOL = 1e-10
DEFAULT_LD = 1.0
FORMATS = ("csv", "text-summary")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_GUARD = 3
EXIT_SELFTEST = 4

COLUMNS = ("command", "spec", "n", "u", "t", "p", "quantity", "value")


@dataclass(frozen=True)
class RunConfig:
    """Everything a subcommand needs, echoed at the top of every report."""

    command: str
    kernels: Tuple[str, ...] = ()
    seed: int = DEFAULT_SEED
    reps: int = DEFAULT_REPS
    threads: int = DEFAULT_THREADS
    tol: float = DEFAULT_TOL
    Ld: float = DEFAULT_LD
    out: Optional[str] = None
    fmt: str = "csv"
    n: Optional[int] = None
    kind: str = UStatKind.DECOUPLED.value
    p: Tuple[float, ...] = ()
    t: Tuple[float, ...] = ()
    u: Tuple[float, ...] = ()
    spec: Optional[str] = None
    n_max: Optional[int] = None
    exact: bool = False
    verify: bool = False
    decoupling: bool = False
    mode: str = BoundMode.DETERMINISTIC.value
    pz: Optional[Tuple[float, float]] = None
    save: Optional[str] = None

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        pz = getattr(args, "pz", None)
        return cls(
            command=args.command,
            kernels=tuple(getattr(args, "kernels", ()) or ()),
            seed=args.seed,
            reps=args.reps,
            threads=args.threads,
            tol=args.tol,
            Ld=args.Ld,
            out=args.out,
            fmt=args.format,
            n=getattr(args, "n", None),
            kind=getattr(args, "kind", UStatKind.DECOUPLED.value),
            p=tuple(getattr(args, "p", None) or ()),
            t=tuple(getattr(args, "t", None) or ()),
            u=tuple(getattr(args, "u", None) or ()),
            spec=getattr(args, "spec", None),
            n_max=getattr(args, "lil", None),
            exact=getattr(args, "exact", False),
            verify=getattr(args, "verify", False),
            decoupling=getattr(args, "decoupling", False),
            mode=getattr(args, "mode", BoundMode.DETERMINISTIC.value),
            pz=tuple(pz) if pz else None,
            save=getattr(args, "save", None),
        )

    def echo(self) -> Dict[str, Any]:
        """Settings that shape the results; output path and thread cap stay out."""
        doc = asdict(self)
        doc.pop("out")
        doc.pop("threads")
        return doc


@dataclass
class Report:
    config: RunConfig
    constants: CalibrationConstants
    rows: List[Tuple[Any, ...]] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)
    failed: bool = False

    def add(self, spec: str = "", n=None, u=None, t=None, p=None, *, quantity: str, value: Any) -> None:
        self.rows.append((self.config.command, spec, n, u, t, p, quantity, value))

    def warn(self, message: str) -> None:
        _logger.warning(message)
        self.warnings.append(message)


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _echo_cell(value: Any) -> str:
    if isinstance(value, tuple):
        return " ".join(_cell(v) for v in value)
    return _cell(value)


def render(report: Report) -> str:
    """The report as CSV (``csv``) or as a JSON summary (``text-summary``)."""
    config = report.config
    if config.fmt == "csv":
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(COLUMNS)
        for key, value in sorted(config.echo().items()):
            writer.writerow(("config", "", "", "", "", "", key, _echo_cell(value)))
        for key, value in report.constants.as_dict().items():
            writer.writerow(("constants", "", "", "", "", "", key, _cell(value)))
        for message in report.warnings:
            writer.writerow(("warning", "", "", "", "", "", "message", message))
        for row in report.rows:
            writer.writerow([_cell(v) for v in row])
        return buffer.getvalue()
    doc = {
        "config": config.echo(),
        "constants_used": report.constants.as_dict(),
        "warnings": report.warnings,
        "rows": [dict(zip(COLUMNS, (_plain(v) for v in row))) for row in report.rows],
    }
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def _plain(value: Any) -> Any:
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    return value


# ---- subcommands ----


def _one_kernel(kernels: Sequence[Kernel]) -> Kernel:
    if len(kernels) != 1:
        raise ValueError(f"this command takes exactly one kernel, got {len(kernels)}")
    return kernels[0]


def _project(config: RunConfig, kernels: Sequence[Kernel], report: Report) -> None:
    h = _one_kernel(kernels)
    before = is_canonical(h, config.tol)
    projected = hoeffding_project(h)
    after = is_canonical(projected, config.tol)
    report.add(quantity="canonical_input", value=before.canonical)
    report.add(quantity="violation_input", value=before.violation)
    report.add(quantity="canonical", value=after.canonical)
    report.add(quantity="violation", value=after.violation)
    report.add(quantity="max_abs", value=float(np.max(np.abs(projected.values), initial=0.0)))
    report.add(quantity="second_moment", value=second_moment(projected))
    if config.save:
        save_kernel(projected, config.save)


def _norm_options(config: RunConfig) -> Dict[str, Any]:
    return {"seed": config.seed, "tol": config.tol, "workers": config.threads}


def _norms(config: RunConfig, kernels: Sequence[Kernel], report: Report) -> None:
    h = _one_kernel(kernels)
    specs = enumerate_partition_specs(h.d)
    if config.spec is not None:
        specs = [s for s in specs if s.label() == config.spec]
        if not specs:
            raise ValueError(f"unknown partition spec {config.spec!r} for order {h.d}")
    levels: Sequence[Optional[float]] = config.u or (None,)
    for spec in specs:
        for u in levels:
            if u is None:
                result = norm_kj(h, spec, **_norm_options(config))
            else:
                result = norm_kju(h, spec, u, **_norm_options(config))
            report.add(spec.label(), u=u, quantity="norm", value=result.value)
            report.add(spec.label(), u=u, quantity="converged", value=result.converged)
            if not result.converged:
                report.warn(f"norm {spec.label()} at u={u} did not converge (gap {result.gap_estimate:.3g})")


def _simulate(config: RunConfig, kernels: Sequence[Kernel], report: Report) -> None:
    h = _one_kernel(kernels)
    kind = UStatKind(config.kind)
    if config.p or config.t:
        n = _require_n(config)
        norms = sample_norms(h, SampleConfig(n, config.reps, config.seed, kind), config.threads)
        for p in config.p:
            mc = summarize_moment(norms, p, config.seed)
            report.add(n=n, p=p, quantity="moment", value=mc.estimates["moment"])
            report.add(n=n, p=p, quantity="moment_ci", value=mc.ci_half_widths["moment"])
            if config.exact:
                report.add(n=n, p=p, quantity="exact_moment", value=exact_moment(h, n, p, kind))
        for t in config.t:
            mc = summarize_tail(norms, t, config.seed)
            report.add(n=n, t=t, quantity="tail", value=mc.estimates["tail"])
            report.add(n=n, t=t, quantity="tail_ci", value=mc.ci_half_widths["tail"])
            if config.exact:
                report.add(n=n, t=t, quantity="exact_tail", value=exact_tail(h, n, t, kind))
    if config.n_max is not None:
        lil = lil_ratio_sequence(h, kind, config.n_max, config.reps, config.seed, config.threads)
        for level in lil.levels:
            report.add(n=level.n, quantity="lil_median", value=level.median)
            report.add(n=level.n, quantity="lil_max", value=level.maximum)
        report.add(quantity="lil_slope", value=lil.slope)
        report.add(quantity="lil_divergent", value=lil.trend == "divergent")


def _bounds(config: RunConfig, kernels: Sequence[Kernel], report: Report) -> None:
    h = _one_kernel(kernels)
    n = _require_n(config)
    consts = report.constants
    if not is_canonical(h, config.tol).canonical:
        report.warn("kernel is not canonical; moment and tail bounds assume complete degeneracy")
    norms = norm_table(h, **_norm_options(config))
    for p in config.p:
        bound = moment_bound(h, n, p, consts, BoundMode(config.mode), norms=norms, reps=config.reps, seed=config.seed)
        report.add(n=n, p=p, quantity="moment_bound", value=bound.bound_value)
        if config.decoupling:
            comparison = decoupling_comparison(h, n, p)
            report.add(n=n, p=p, quantity="decoupling_lhs", value=comparison.lhs)
            report.add(n=n, p=p, quantity="decoupling_rhs", value=comparison.rhs)
            report.add(n=n, p=p, quantity="decoupling_holds", value=comparison.holds)
    for t in config.t:
        tail = tail_bound_canonical(h, n, t, consts, norms=norms)
        report.add(n=n, t=t, quantity="tail_threshold", value=tail.threshold)
        report.add(n=n, t=t, quantity="tail_bound", value=tail.bound)
        projected = tail_bound_projected(h, n, t, consts, norms=norms)
        report.add(n=n, t=t, quantity="tail_projected_threshold", value=projected.threshold)
        report.add(n=n, t=t, quantity="tail_projected_bound", value=projected.bound)
        if config.pz is not None:
            a, lam = config.pz
            pz = pz_lower(h, n, a, t, lam)
            if isinstance(pz, HypothesisRejection):
                report.warn(f"Paley-Zygmund at t={t!r}: {pz}")
                report.add(n=n, t=t, quantity="pz_rejected", value=True)
            else:
                report.add(n=n, t=t, quantity="pz_level", value=pz.level)
                report.add(n=n, t=t, quantity="pz_probability", value=pz.probability)
    if h.q == 1:
        report.add(n=n, quantity="variance_bound", value=variance_bound(h, n))
    if config.verify:
        for index, p in enumerate(config.p or (2.0,)):
            t_grid = config.t if index == 0 else ()
            for record in verify_bounds([h], consts, n, p, t_grid, config.reps, config.seed, config.threads):
                t = record.t if record.quantity != "moment" else None
                report.add(n=n, t=t, p=p, quantity=f"observed_{record.quantity}", value=record.observed)
                report.add(n=n, t=t, p=p, quantity=f"observed_{record.quantity}_ci", value=record.ci_half_width)
                report.add(n=n, t=t, p=p, quantity=f"verified_{record.quantity}", value=record.passed)
                if not record.passed:
                    report.warn(f"{record.quantity} bound {record.bound!r} below observed {record.observed!r}")


def _lil_check(config: RunConfig, kernels: Sequence[Kernel], report: Report) -> None:
    grid = config.u or None
    if len(kernels) > 1:
        for spec in enumerate_partition_specs(kernels[0].d):
            trend = truncation_trend(kernels, spec, grid, seed=config.seed, tol=config.tol)
            for index, value in enumerate(trend.maxima):
                report.add(spec.label(), quantity=f"normalized_max_{index}", value=value)
            report.add(spec.label(), quantity="trend", value=trend.trend)
        return
    h = kernels[0]
    cert = lil_certificate(
        h, grid, report.constants, n_max=config.n_max, reps=config.reps, seed=config.seed, workers=config.threads, tol=config.tol
    )
    report.add(quantity="canonical", value=cert.degenerate)
    report.add(quantity="canonical_violation", value=cert.canonical.violation)
    report.add(quantity="symmetric", value=cert.symmetric)
    report.add(quantity="integrability", value=cert.integrability_value)
    for curve in cert.curves:
        for point in curve.points:
            report.add(curve.spec.label(), u=point.u, quantity="growth_value", value=point.value)
            report.add(curve.spec.label(), u=point.u, quantity="growth_normalized", value=point.normalized)
        report.add(curve.spec.label(), quantity="saturation_u", value=curve.saturation_u)
        report.add(curve.spec.label(), quantity="normalized_max", value=curve.maximum)
        if not curve.converged:
            report.warn(f"growth curve {curve.spec.label()} has unconverged points")
    report.add(quantity="d_star", value=cert.d_star)
    if cert.envelope is not None:
        report.add(quantity="envelope", value=cert.envelope)
    report.add(quantity="decoupled_only", value=not cert.symmetric)
    report.add(quantity="holds", value=cert.holds)


def _selftest(config: RunConfig, kernels: Sequence[Kernel], report: Report) -> None:
    for record in run_selftest(config.seed):
        report.add(record.name, quantity="passed", value=record.passed)
        if not record.passed:
            report.warn(f"selftest {record.name}: {record.detail}")
            report.failed = True


COMMANDS = {
    "project": _project,
    "norms": _norms,
    "simulate": _simulate,
    "bounds": _bounds,
    "lil-check": _lil_check,
    "selftest": _selftest,
}


def _require_n(config: RunConfig) -> int:
    if config.n is None:
        raise ValueError(f"{config.command} needs --n")
    return config.n


def check_guards(config: RunConfig, kernels: Sequence[Kernel]) -> None:
    """Refuse requests beyond the documented caps before any work starts."""
    for h in kernels:
        check_cap("kernel cells", h.m**h.d * h.q, ENUMERATION_CAP)
    if config.n_max is not None:
        check_cap("dyadic exponent", config.n_max, DYADIC_CAP)
    if config.n is not None:
        check_cap("sample size", config.n, 2**DYADIC_CAP)
        for h in kernels:
            if config.command == "simulate" and config.exact:
                check_cap("enumeration", enumeration_size(h, config.n, UStatKind(config.kind)), ENUMERATION_CAP)
            if config.command == "bounds" and config.decoupling:
                size = enumeration_size(h, config.n, UStatKind.RANDOMIZED_DECOUPLED)
                check_cap("enumeration", size, ENUMERATION_CAP)
            if config.command == "simulate" or config.verify or config.mode == BoundMode.STOCHASTIC.value:
                # one chunk of replications is held in memory at a time
                check_cap("sample cells", min(config.reps, REP_CHUNK) * h.d * config.n, ENUMERATION_CAP)


@enforce(check_guards)
def dispatch(config: RunConfig, kernels: Sequence[Kernel]) -> Report:
    report = Report(config, CalibrationConstants(L_d=config.Ld))
    COMMANDS[config.command](config, kernels, report)
    return report


# ---- CLI ----


def parse_args(args):
    """Parse command line parameters

    Args:
      args (List[str]): command line parameters as list of strings
          (for example  ``["--help"]``).

    Returns:
      :obj:`argparse.Namespace`: command line parameters namespace
    """
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=DEFAULT_SEED, help="master seed (default %(default)s)")
    common.add_argument("--reps", type=int, default=DEFAULT_REPS, help="Monte Carlo replications")
    common.add_argument("--threads", type=int, default=DEFAULT_THREADS, help="worker threads")
    common.add_argument("--tol", type=float, default=DEFAULT_TOL, help="solver and canonicality tolerance")
    common.add_argument("--Ld", type=float, default=DEFAULT_LD, help="constant L_d of the bounds")
    common.add_argument("--out", help="report path (default: stdout)")
    common.add_argument("--format", choices=FORMATS, default="csv", help="report format")
    common.add_argument(
        "-v",
        "--verbose",
        dest="loglevel",
        help="set loglevel to INFO",
        action="store_const",
        const=logging.INFO,
    )
    common.add_argument(
        "-vv",
        "--very-verbose",
        dest="loglevel",
        help="set loglevel to DEBUG",
        action="store_const",
        const=logging.DEBUG,
    )

    parser = argparse.ArgumentParser(description="U-statistics norms, bounds and LIL diagnostics")
    parser.add_argument(
        "--version",
        action="version",
        version=f"ustat-lil {__version__}",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    project = sub.add_parser("project", parents=[common], help="Hoeffding projection and canonicality")
    project.add_argument("kernels", nargs=1, metavar="KERNEL")
    project.add_argument("--save", help="write the projected kernel to this path")

    norms = sub.add_parser("norms", parents=[common], help="partition norms")
    norms.add_argument("kernels", nargs=1, metavar="KERNEL")
    norms.add_argument("--spec", help="a single spec label such as 'K={};J={{1},{2}}'")
    norms.add_argument("--u", type=float, nargs="+", help="truncation levels")

    simulate = sub.add_parser("simulate", parents=[common], help="moments, tails and LIL ratios")
    simulate.add_argument("kernels", nargs=1, metavar="KERNEL")
    simulate.add_argument("--n", type=int, help="sample size")
    simulate.add_argument("--kind", choices=[k.value for k in UStatKind], default=UStatKind.DECOUPLED.value)
    simulate.add_argument("--p", type=float, nargs="+", help="moment orders")
    simulate.add_argument("--t", type=float, nargs="+", help="tail thresholds")
    simulate.add_argument("--exact", action="store_true", help="add exact enumeration")
    simulate.add_argument("--lil", type=int, metavar="K", help="LIL ratios up to n = 2^K")

    bounds = sub.add_parser("bounds", parents=[common], help="moment, tail, variance and anti-concentration bounds")
    bounds.add_argument("kernels", nargs=1, metavar="KERNEL")
    bounds.add_argument("--n", type=int, help="sample size")
    bounds.add_argument("--p", type=float, nargs="+", help="moment orders")
    bounds.add_argument("--t", type=float, nargs="+", help="tail parameters")
    bounds.add_argument("--verify", action="store_true", help="compare with Monte Carlo")
    bounds.add_argument("--decoupling", action="store_true", help="exact decoupling comparison")
    bounds.add_argument(
        "--mode",
        choices=[m.value for m in BoundMode],
        default=BoundMode.DETERMINISTIC.value,
        help="sup terms of the moment bound: exact or sampled (default %(default)s)",
    )
    bounds.add_argument("--pz", type=float, nargs=2, metavar=("A", "LAMBDA"), help="Paley-Zygmund bound")

    lil = sub.add_parser("lil-check", parents=[common], help="LIL certificate or truncation trend")
    lil.add_argument("kernels", nargs="+", metavar="KERNEL")
    lil.add_argument("--u", type=float, nargs="+", help="truncation grid")
    lil.add_argument("--lil", type=int, metavar="K", help="also simulate LIL ratios up to n = 2^K")

    sub.add_parser("selftest", parents=[common], help="run the oracle suite")
    return parser.parse_args(args)


def setup_logging(loglevel):
    """Setup basic logging

    Args:
      loglevel (int): minimum loglevel for emitting messages
    """
    logformat = "[%(asctime)s] %(levelname)s:%(name)s:%(message)s"
    logging.basicConfig(
        level=loglevel, stream=sys.stdout, format=logformat, datefmt="%Y-%m-%d %H:%M:%S"
    )


def main(args) -> int:
    """Run one subcommand and write its report.

    Args:
      args (List[str]): command line parameters as list of strings
          (for example  ``["norms", "kernel.json", "--u", "1", "2"]``).

    Returns:
      int: the exit code
    """
    args = parse_args(args)
    setup_logging(args.loglevel)
    config = RunConfig.from_args(args)
    try:
        kernels = [load_kernel(path) for path in config.kernels]
        report = dispatch(config, kernels)
    except GuardViolation as err:
        _logger.error("%s", err)
        print(f"error: {err}", file=sys.stderr)
        return EXIT_GUARD
    except (UStatError, ValueError, OSError) as err:
        _logger.error("%s", err)
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT
    text = render(report)
    if config.out:
        Path(config.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    _logger.info("%s finished with %d rows", config.command, len(report.rows))
    return EXIT_SELFTEST if report.failed else EXIT_OK


def run():
    """Calls :func:`main` passing the CLI arguments extracted from :obj:`sys.argv`

    This function can be used as entry point to create console scripts with setuptools.
    """
    sys.exit(main(sys.argv[1:]))


if __name__ == "__main__":
    run()
