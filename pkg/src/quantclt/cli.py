"""Interfaz de línea de comandos: ``quantclt run | tables | selftest``.

Códigos de salida:
    0  todo correcto
    1  algún veredicto falló (los resultados ya están escritos)
    2  configuración o parámetros inválidos
    3  error de infraestructura
"""
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple
import argparse
import csv
import hashlib
import logging
import math
import sys

import numpy as np
from scipy import stats

from . import __version__, analytic
from .config import load_config, resolve_threads
from .errors import ConfigError, QuantCLTError
from .harness import run_experiment, run_identity_suite
from .models import (
    FAIL,
    PASS,
    ExperimentConfig,
    ExperimentKind,
    Report,
    ReportRow,
    RunManifest,
)

LOGGER = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VERDICT = 1
EXIT_CONFIG = 2
EXIT_INFRA = 3

ORACLE_TOLERANCE = 1e-8
SCALING_TOLERANCE = 1e-10


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def configure_logging(verbose: bool):
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    package = logging.getLogger("quantclt")
    package.handlers[:] = [handler]
    package.setLevel(logging.DEBUG if verbose else logging.WARNING)
    package.propagate = False
    if not verbose:
        logging.getLogger(__name__).setLevel(logging.INFO)


# --------------------------------------------------------------------------
# run
# --------------------------------------------------------------------------

def write_report_csv(report: Report, path: Path):
    """CSV con cabecera fija; flotantes con 17 cifras significativas."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(ReportRow.CSV_COLUMNS)
        for row in report.rows:
            writer.writerow(row.csv_fields())


def _write_manifest(manifest: RunManifest, path: Path):
    path.write_text(manifest.to_json(indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


def print_summary(report: Report):
    marks = {PASS: "✓", FAIL: "✗"}
    for row in report.rows:
        mark = marks.get(row.verdict, "·")
        print(f"{mark} {row.experiment} ({row.pair_s:g},{row.pair_beta:g})-"
              f"({row.pair_t:g},{row.pair_alpha:g}) n={row.n}: "
              f"estimación={row.estimate:.6g} ee={row.se:.3g} "
              f"analítico={row.analytic:.6g} z={row.z:.3g}")
    for note in report.notes:
        print(f"  nota: {note}")
    print("✓ Todos los veredictos pasan" if report.passed
          else f"✗ {len(report.failures())} veredicto(s) fallidos")


def cmd_run(config_file: str, overrides: Sequence[str] = (), out: str = "out",
            seed: Optional[int] = None, threads: Optional[int] = None) -> int:
    """Ejecuta el experimento del fichero de configuración y escribe manifest.json y report.csv."""
    try:
        overrides = list(overrides)
        if seed is not None:
            overrides.append(f"seed={seed}")
        config = load_config(config_file, overrides)
        workers = resolve_threads(threads)
    except ConfigError as exc:
        print(f"error de configuración: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out_dir = Path(out)
    manifest_path = out_dir / "manifest.json"
    report_path = out_dir / "report.csv"
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        manifest = RunManifest(
            config_path=str(config_file),
            config=config.to_dict(),
            tool_version=__version__,
            master_seed=config.seed,
            started_at=_now(),
        )
        _write_manifest(manifest, manifest_path)
        LOGGER.info("Ejecutando %s con %d hilo(s)", config.experiment.value, workers)
        report = run_experiment(config, workers)
        write_report_csv(report, report_path)
        manifest.finished_at = _now()
        manifest.outputs = [str(report_path)]
        manifest.notes = list(report.notes)
        _write_manifest(manifest, manifest_path)
    except Exception as exc:  # noqa: BLE001 - cualquier fallo aquí es de infraestructura
        LOGGER.exception("La ejecución falló")
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFRA

    print_summary(report)
    return EXIT_OK if report.passed else EXIT_VERDICT


# --------------------------------------------------------------------------
# tables
# --------------------------------------------------------------------------

def _x_values(args) -> List[float]:
    if args.x:
        return list(args.x)
    if args.x_min is None or args.x_max is None:
        raise ConfigError("Indique --x o bien --x-min y --x-max")
    return list(np.linspace(args.x_min, args.x_max, args.points))


def _covariance_model(args) -> analytic.CovarianceModel:
    if args.model == "fbm":
        if args.gamma is None:
            raise ConfigError("--kind fbm necesita --gamma")
        return analytic.CovarianceModel.fbm(args.gamma)
    return analytic.CovarianceModel.stable(args.r, args.c)


def table_rows(args) -> Tuple[List[str], List[list]]:
    """Cabecera y filas de la tabla pedida."""
    kind = args.table
    if kind in ("density", "cdf"):
        fn = analytic.stable_density if kind == "density" else analytic.stable_cdf
        return (["r", "c", "t", "x", kind],
                [[args.r, args.c, args.t, x, fn(args.r, args.c, args.t, x)] for x in _x_values(args)])
    if kind == "quantile":
        alphas = args.alpha or [0.5]
        return (["r", "c", "t", "alpha", "quantile"],
                [[args.r, args.c, args.t, a, analytic.stable_quantile(args.r, args.c, args.t, a)]
                 for a in alphas])
    if kind in ("covariance", "distance"):
        model = _covariance_model(args)
        alpha = (args.alpha or [0.5])[0]
        beta = args.beta if args.beta is not None else alpha
        s = args.s if args.s is not None else args.t
        if kind == "covariance":
            value = model(s, beta, args.t, alpha)
        else:
            value = analytic.quantile_limit_distance(model, (s, beta), (args.t, alpha))
        return ["s", "beta", "t", "alpha", kind], [[s, beta, args.t, alpha, value]]
    if kind == "tail":
        bound = analytic.tail_bound_constants(args.r, args.c, args.alpha_star, args.n, args.c_r)
        us = args.u or [bound.threshold * math.sqrt(bound.n)]
        return (["lambda_r", "n0", "threshold", "u", "bound", "quadratic_bound"],
                [[bound.lambda_r, bound.n0, bound.threshold, u, bound.bound(u),
                  bound.quadratic_bound(u)] for u in us])
    raise ConfigError(f"Tabla desconocida '{kind}'")


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    return format(float(value), ".17g")


def cmd_tables(args) -> int:
    """Imprime (o escribe en --out) una tabla CSV de un objeto analítico."""
    try:
        header, rows = table_rows(args)
    except QuantCLTError as exc:
        print(f"error en tables {args.table} (r={args.r}, c={args.c}, t={args.t}): {exc}",
              file=sys.stderr)
        return EXIT_CONFIG
    handle = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    finally:
        if args.out:
            handle.close()
    return EXIT_OK


# --------------------------------------------------------------------------
# selftest
# --------------------------------------------------------------------------

def _oracle_checks(density_tolerance: float) -> List[Tuple[str, Callable[[], float], float]]:
    """(nombre, función que devuelve la discrepancia máxima, tolerancia)."""
    xs = np.linspace(-10.0, 10.0, 41)
    alphas = np.linspace(0.05, 0.95, 19)
    lattice_t = np.linspace(0.1, 4.0, 20)
    laws = ((2.0, 0.5, stats.norm()), (1.0, 1.0, stats.cauchy()))

    def density():
        return max(abs(analytic.stable_density(r, c, 1.0, x) - d.pdf(x)) for r, c, d in laws for x in xs)

    def cdf():
        return max(abs(analytic.stable_cdf(r, c, 1.0, x) - d.cdf(x)) for r, c, d in laws for x in xs)

    def quantile():
        return max(abs(analytic.stable_quantile(r, c, 1.0, a) - d.ppf(a)) for r, c, d in laws for a in alphas)

    # la ley en t con escala c es la ley en 1 con escala c*t: se resuelve por separado
    def quantile_scaling():
        return max(abs(analytic.stable_quantile(1.5, t, 1.0, a)
                       - t ** (1.0 / 1.5) * analytic.stable_quantile(1.5, 1.0, 1.0, a))
                   for t in lattice_t for a in np.linspace(0.05, 0.95, 20))

    def density_scaling():
        worst = 0.0
        for t in lattice_t:
            scale = t ** (1.0 / 1.5)
            for x in np.linspace(-5.0, 5.0, 20):
                direct = analytic.stable_density(1.5, t, 1.0, x)
                worst = max(worst, abs(direct - analytic.stable_density(1.5, 1.0, 1.0, x / scale) / scale))
        return worst

    def orthant():
        exact = 0.25 + math.asin(math.sqrt(0.5)) / (2.0 * math.pi)
        return abs(analytic.joint_prob_stable(2.0, 0.5, 0.5, 1.0, 0.0, 0.0) - exact)

    def median_cov():
        arcsine_cov = math.sqrt(0.5) * math.asin(math.sqrt(0.5))
        return max(abs(analytic.limit_cov_quantile_stable(2.0, 0.5, 1.0, 0.5, 1.0, 0.5) - math.pi / 2.0),
                   abs(analytic.limit_cov_quantile_fbm(0.5, 0.5, 0.5, 1.0, 0.5) - arcsine_cov),
                   abs(analytic.stable_median_covariance(2.0, 0.5, 0.5, 1.0) - arcsine_cov))

    return [
        ("stable_density oracle", density, density_tolerance),
        ("stable_cdf oracle", cdf, ORACLE_TOLERANCE),
        ("true_quantile oracle", quantile, ORACLE_TOLERANCE),
        ("quantile scaling", quantile_scaling, SCALING_TOLERANCE),
        ("density scaling", density_scaling, 1e-9),
        ("bivariate orthant oracle", orthant, 1e-7),
        ("median covariance oracle", median_cov, 1e-6),
    ]


def cmd_selftest(seed: int = 0, corrupt_density_tolerance: bool = False) -> int:
    """Suite de identidades exactas más oráculos analíticos; imprime un hash del resumen."""
    digest = hashlib.sha256()
    first_failure = None

    def record(name: str, value: float, ok: bool):
        nonlocal first_failure
        print(f"{'✓' if ok else '✗'} {name}: {value:.3g}")
        digest.update(f"{name}={value!r};{ok}\n".encode("utf-8"))
        if not ok and first_failure is None:
            first_failure = name

    suite = run_identity_suite(ExperimentConfig(ExperimentKind.IDENTITY_SUITE, n=2, R=1, seed=seed))
    for row in suite.rows:
        record(row.experiment, row.estimate, row.verdict == PASS)

    tolerance = -1.0 if corrupt_density_tolerance else ORACLE_TOLERANCE
    for name, check, tol in _oracle_checks(tolerance):
        try:
            value = float(check())
        except QuantCLTError as exc:
            LOGGER.error("%s: %s", name, exc)
            value = math.inf
        record(name, value, value <= tol)

    print(f"resumen: {digest.hexdigest()}")
    if first_failure is not None:
        print(f"✗ selftest falló: {first_failure}", file=sys.stderr)
        return EXIT_VERDICT
    print("✓ selftest correcto")
    return EXIT_OK


# --------------------------------------------------------------------------
# argparse
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="quantclt", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="registro DEBUG en stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="ejecuta un experimento descrito en TOML")
    run.add_argument("--config", required=True, help="fichero TOML con la tabla [experiment]")
    run.add_argument("--out", default="out", help="directorio de salida")
    run.add_argument("--seed", type=int, help="sustituye la semilla maestra")
    run.add_argument("--threads", type=int, help="hilos de trabajo (por defecto $QUANTCLT_THREADS o 1)")
    run.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                     help="sustituye una clave de la configuración (repetible)")

    tables = sub.add_parser("tables", help="tablas de objetos analíticos")
    tables.add_argument("table", choices=["density", "cdf", "quantile", "covariance", "distance", "tail"])
    tables.add_argument("--r", type=float, default=2.0)
    tables.add_argument("--c", type=float, default=0.5)
    tables.add_argument("--t", type=float, default=1.0)
    tables.add_argument("--s", type=float)
    tables.add_argument("--x", type=float, action="append")
    tables.add_argument("--x-min", type=float)
    tables.add_argument("--x-max", type=float)
    tables.add_argument("--points", type=int, default=101)
    tables.add_argument("--alpha", type=float, action="append")
    tables.add_argument("--beta", type=float)
    tables.add_argument("--kind", dest="model", choices=["stable", "fbm"], default="stable")
    tables.add_argument("--gamma", type=float)
    tables.add_argument("--alpha-star", type=float, default=0.75)
    tables.add_argument("--n", type=int, default=100)
    tables.add_argument("--c-r", type=float, default=1.0)
    tables.add_argument("--u", type=float, action="append")
    tables.add_argument("--out", help="fichero CSV de salida (por defecto stdout)")

    selftest = sub.add_parser("selftest", help="identidades exactas y oráculos analíticos")
    selftest.add_argument("--seed", type=int, default=0)
    selftest.add_argument("--corrupt-density-tolerance", action="store_true", help=argparse.SUPPRESS)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)
    if args.command == "run":
        return cmd_run(args.config, args.override, args.out, args.seed, args.threads)
    if args.command == "tables":
        return cmd_tables(args)
    return cmd_selftest(args.seed, args.corrupt_density_tolerance)
