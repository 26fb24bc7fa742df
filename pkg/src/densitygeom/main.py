import argparse
import json
import logging
import logging.config
import os
import sys
import time
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import yaml

from densitygeom.bloch.mesh import s3_mesh
from densitygeom.bloch.s3 import QubitDensityParams, sqrt_preimages
from densitygeom.core.algebra import DensityMatrix, SqrtState, hs_norm, principal_sqrt
from densitygeom.core.codec import dump_matrix, parse_matrix, read_matrix, write_matrix
from densitygeom.core.config import (
    ExperimentConfig,
    build_experiment_config,
    ensemble_specs,
    load_config,
)
from densitygeom.core.ensembles import make_rng, random_density_hs, random_hermitian, random_pure
from densitygeom.core.errors import ConfigError, DensityGeomError, InvalidInputError
from densitygeom.experiments.reporting import render_markdown, write_csv, write_json, write_jsonl
from densitygeom.experiments.suite import SUMMARY_HEADER, BoundSuite
from densitygeom.geometry.calibration import calibrate_dual_constant, calibrate_kappa, trace_ratio
from densitygeom.geometry.families import (
    ParamFamily,
    constant_family,
    qubit_mixed_family,
    qubit_pure_family,
    unitary_curve_family,
)
from densitygeom.geometry.metric import fisher_rao_analytic
from densitygeom.geometry.montecarlo import fisher_rao_mc

LOG_FORMAT = "%(asctime)s - %(name)s - [%(levelname)s] - %(message)s"

logger = logging.getLogger("DensityGeom.CLI")
audit = logging.getLogger("DensityGeomAudit")

DEFAULT_THETA = {
    "qubit-pure": [np.pi / 3, np.pi / 4],
    "qubit-mixed": [0.3, np.pi / 3, np.pi / 4],
    "unitary-curve": [0.0],
    "constant": [0.0],
}


def setup_logging(config_path: str = "config/logging.yaml") -> None:
    """
    Настраивает логирование из YAML-конфига (dictConfig).

    Директории файловых обработчиков создаются заранее. При любой ошибке
    используется basicConfig в stderr.
    """
    try:
        with open(config_path, "rt", encoding="utf-8") as f:
            log_config = yaml.safe_load(f.read())
        for handler in log_config.get("handlers", {}).values():
            filename = handler.get("filename")
            if filename:
                os.makedirs(os.path.dirname(filename) or ".", exist_ok=True)
        logging.config.dictConfig(log_config)
        logger.debug(f"✅ Logging configured from {config_path}")
    except Exception as e:
        logging.basicConfig(level=logging.INFO, format=LOG_FORMAT, stream=sys.stderr)
        logger.warning(f"🔥 Failed to configure logging from {config_path}: {e}. Using basic config.")


def _global_flags(parser: argparse.ArgumentParser, default: Any) -> None:
    parser.add_argument("--seed", type=int, default=default, help="64-bit seed (mandatory for stochastic commands)")
    parser.add_argument("--samples", type=int, default=default, help="Monte-Carlo sample count")
    parser.add_argument("--dim", type=int, default=default, help="Hilbert space dimension")
    parser.add_argument("--out", default=default, help="Output file or directory")
    parser.add_argument("--config", default=default, help="YAML/JSON config file")
    parser.add_argument("--threads", type=int, default=default, help="Worker threads")
    parser.add_argument("--log-config", dest="log_config", default=default, help="Logging YAML config")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="densitygeom",
        description="Information geometry of density matrices via Hermitian square roots",
    )
    _global_flags(parser, None)
    # Глобальные флаги допустимы и после имени команды
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    _global_flags(common, argparse.SUPPRESS)

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sqrt", parents=[common], help="Principal square root of a density matrix")
    p.add_argument("input", help="Matrix JSON file")

    p = sub.add_parser("metric", parents=[common], help="Monte-Carlo vs analytic Fisher-Rao metric")
    p.add_argument("--family", choices=sorted(DEFAULT_THETA), default=None)
    p.add_argument("--theta", type=float, nargs="+", default=None)

    p = sub.add_parser("preimages", parents=[common], help="All Hermitian square roots of a qubit density")
    p.add_argument("a", type=float)
    p.add_argument("b", type=float)
    p.add_argument("c", type=float)
    p.add_argument("--mesh", default=None, help="Also write the S3 mesh CSV to this path")
    p.add_argument("--resolution", type=int, default=None)

    sub.add_parser("bounds", parents=[common], help="Theorem suite over random ensembles")
    sub.add_parser("calibrate", parents=[common], help="Calibrate kappa and the dual constant")
    return parser


def _emit(doc: Dict[str, Any], out: Optional[str]) -> None:
    if out:
        write_json(out, doc)
    else:
        print(json.dumps(doc, indent=2, ensure_ascii=False))


def _out_dir(exp: ExperimentConfig) -> str:
    return exp.output_path or exp.section("paths").get("output", "out")


# --- Команды ---

def cmd_sqrt(exp: ExperimentConfig, args: argparse.Namespace) -> int:
    tol = exp.tolerances
    rho = DensityMatrix(read_matrix(exp.input_path), tol.psd_clamp, tol.trace_tol, strict_tol=tol.hermitian_tol)
    xi = principal_sqrt(rho)
    residual = hs_norm(xi.data @ xi.data - rho.data)
    if exp.output_path:
        write_matrix(exp.output_path, xi)
        print(f"residual {residual:.3e}")
    else:
        _emit({"sqrt": dump_matrix(xi), "residual": residual}, None)
    logger.info(f"Square root: dim={rho.dim}, residual={residual:.3e}")
    return 0


def build_family(exp: ExperimentConfig, args: argparse.Namespace, rng: np.random.Generator) -> Tuple[ParamFamily, List[float]]:
    """Семейство и точка θ из секции ``metric`` конфига с учётом флагов."""
    section = exp.section("metric")
    name = getattr(args, "family", None) or section.get("family", "qubit-pure")
    if name not in DEFAULT_THETA:
        raise ConfigError(f"Unknown family '{name}'. Expected one of {sorted(DEFAULT_THETA)}")
    xi0_doc = section.get("xi0")

    if name in ("qubit-pure", "qubit-mixed"):
        if exp.dim != 2:
            raise ConfigError(f"Family '{name}' is defined for dim 2 (got --dim {exp.dim})")
        family = qubit_pure_family() if name == "qubit-pure" else qubit_mixed_family()
    elif name == "constant":
        xi0 = SqrtState(parse_matrix(xi0_doc)) if xi0_doc else SqrtState(np.eye(exp.dim) / np.sqrt(exp.dim))
        family = constant_family(xi0)
    else:
        h_doc = section.get("hamiltonian")
        h = parse_matrix(h_doc) if h_doc else random_hermitian(exp.dim, rng).data
        xi0 = SqrtState(parse_matrix(xi0_doc)) if xi0_doc else principal_sqrt(random_density_hs(exp.dim, rng))
        family = unitary_curve_family(xi0, h)
    if section.get("finite_difference"):
        family = family.without_exact_derivative(exp.tolerances.fd_step)

    # θ флага проверяется семейством; θ конфига другой длины (от другого семейства) заменяется
    theta = getattr(args, "theta", None)
    if theta is None:
        theta = section.get("theta")
        if theta is None or len(theta) != family.param_dim:
            theta = DEFAULT_THETA[name]
    return family, [float(t) for t in theta]


def cmd_metric(exp: ExperimentConfig, args: argparse.Namespace) -> int:
    started = time.perf_counter()
    rng = make_rng(exp.seed)
    family, theta = build_family(exp, args, rng)

    analytic = fisher_rao_analytic(family, theta)
    mc = fisher_rao_mc(
        family, theta, exp.samples, rng, exp.batches, exp.threads, exp.rejection_threshold, seed=exp.seed
    )

    an_trace = float(np.trace(analytic.components))
    kappa: Optional[float] = None
    kappa_err: Optional[float] = None
    if an_trace > 0:
        kappa, kappa_err = trace_ratio(float(np.trace(mc.components)), mc.trace_stderr, an_trace)
    expected = (kappa or 0.0) * analytic.components
    z = np.where(mc.stderr > 0, (mc.components - expected) / np.where(mc.stderr > 0, mc.stderr, 1.0), 0.0)

    doc = {
        "command": "metric",
        "family": family.name,
        "derivative_mode": family.mode.value,
        "dim": exp.dim,
        "theta": [float(t) for t in theta],
        "seed": exp.seed,
        "samples": exp.samples,
        "analytic": analytic.components.tolist(),
        "monte_carlo": mc.to_dict(),
        "kappa": kappa,
        "kappa_stderr": kappa_err,
        "z_scores": z.tolist(),
        "wall_ms": (time.perf_counter() - started) * 1000.0,
    }
    _emit(doc, exp.output_path)
    if np.any(np.abs(z) > 3):
        logger.warning(f"[Metric] z-scores exceed 3: max |z| = {float(np.max(np.abs(z))):.2f}")
    return 0


def cmd_preimages(exp: ExperimentConfig, args: argparse.Namespace) -> int:
    params = QubitDensityParams(args.a, args.b, args.c)
    result = sqrt_preimages(params, eps=exp.tolerances.classify_eps)
    doc = {"command": "preimages", **result.to_dict()}
    if args.mesh:
        resolution = args.resolution or int(exp.section("mesh").get("resolution", 8))
        rows = s3_mesh(resolution, args.mesh, n_jobs=exp.threads, eps=exp.tolerances.classify_eps)
        doc["mesh"] = {"path": args.mesh, "rows": len(rows), "resolution": resolution}
    _emit(doc, exp.output_path)
    return 0


def kappa_points(dim: int, count: int, rng: np.random.Generator) -> List[Tuple[ParamFamily, List[float]]]:
    """
    Точки калибровки κ на чистых состояниях: для кубита чередуются сферическая
    параметризация и унитарные кривые, для n > 2 используются только унитарные кривые.
    """
    points = []
    for i in range(count):
        if dim == 2 and i % 2 == 0:
            theta = [float(rng.uniform(0.2, np.pi - 0.2)), float(rng.uniform(0.0, 2 * np.pi))]
            points.append((qubit_pure_family(), theta))
        else:
            xi0 = random_pure(dim, rng).sqrt_state()
            h = random_hermitian(dim, rng)
            points.append((unitary_curve_family(xi0, h), [float(rng.uniform(0.0, 1.0))]))
    return points


def cmd_calibrate(exp: ExperimentConfig, args: argparse.Namespace) -> int:
    started = time.perf_counter()
    rng = make_rng(exp.seed)
    section = exp.section("calibrate")
    points = kappa_points(exp.dim, int(section.get("points", 20)), rng)
    kappa = calibrate_kappa(points, exp.samples, rng, exp.batches, exp.threads)
    dual = calibrate_dual_constant(exp.dim, exp.samples, rng, int(section.get("dual_validation", 16)), exp.batches, exp.threads)
    doc = {
        "command": "calibrate",
        "dim": exp.dim,
        "seed": exp.seed,
        "samples": exp.samples,
        "kappa": kappa.to_dict(),
        "dual": dual.to_dict(),
        "wall_ms": (time.perf_counter() - started) * 1000.0,
    }
    _emit(doc, exp.output_path)
    return 0


def cmd_bounds(exp: ExperimentConfig, args: argparse.Namespace) -> int:
    started = time.perf_counter()
    section = exp.section("bounds")
    specs = ensemble_specs(exp)
    if getattr(args, "dim", None) is not None:
        for spec in specs:
            spec["dim"] = args.dim
    max_order = int(section.get("max_order", 3))
    spread_trials = int(section.get("spread_trials", 8))

    suite = BoundSuite(
        specs,
        exp.seed,
        max_order=max_order,
        n_jobs=exp.threads,
        slack=exp.tolerances.slack,
        spread_trials=spread_trials,
    )
    result = suite.run()

    kappa_doc = None
    n_kappa = int(section.get("kappa_points", 0) or 0)
    if n_kappa > 0:
        rng = np.random.default_rng(np.random.SeedSequence(exp.seed).spawn(len(specs) + 1)[-1])
        kappa_doc = calibrate_kappa(kappa_points(exp.dim, n_kappa, rng), exp.samples, rng, exp.batches, exp.threads).to_dict()

    out_dir = _out_dir(exp)
    jsonl_path = os.path.join(out_dir, "bounds.jsonl")
    csv_path = os.path.join(out_dir, "bounds_summary.csv")
    write_jsonl(jsonl_path, result.records)
    write_csv(csv_path, SUMMARY_HEADER, result.summary)
    context = {
        "command": "bounds",
        "seed": exp.seed,
        "max_order": max_order,
        "total_records": len(result.records),
        "violations": result.violations,
        "summary": result.summary,
        "kappa": kappa_doc,
        "jsonl_path": jsonl_path,
        "csv_path": csv_path,
    }
    render_markdown(context, os.path.join(out_dir, "bounds_summary.md"))
    write_json(
        os.path.join(out_dir, "bounds_run.json"),
        {**context, "wall_ms": (time.perf_counter() - started) * 1000.0},
    )
    print(f"bounds: {len(result.records)} records, {result.violations} violations -> {out_dir}")
    return 1 if result.violations else 0


HANDLERS = {
    "sqrt": cmd_sqrt,
    "metric": cmd_metric,
    "preimages": cmd_preimages,
    "bounds": cmd_bounds,
    "calibrate": cmd_calibrate,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Точка входа CLI. Возвращает код выхода: 0 успех, 1 внутренний или
    численный сбой, 2 некорректный ввод.
    """
    args = build_parser().parse_args(argv)
    setup_logging(args.log_config or "config/logging.yaml")

    try:
        config = load_config(args.config)
        overrides = {
            "seed": args.seed,
            "samples": args.samples,
            "dim": args.dim,
            "threads": args.threads,
            "output_path": args.out,
            "input_path": getattr(args, "input", None),
        }
        exp = build_experiment_config(args.command, config, overrides)
    except FileNotFoundError as e:
        logger.critical(f"🔥 Configuration file not found: {e}. Exiting.")
        print(f"error: configuration file not found: {e}", file=sys.stderr)
        return 2
    except DensityGeomError as e:
        logger.critical(f"🔥 Invalid configuration: {e}. Exiting.")
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code

    logger.info("========================================")
    logger.info(f"🔮 Starting densitygeom '{exp.command}' (seed={exp.seed}, threads={exp.threads})...")
    logger.info("========================================")
    started = time.perf_counter()
    audit.info(
        "Run started",
        extra={"command": exp.command, "seed": exp.seed, "samples": exp.samples, "dim": exp.dim, "threads": exp.threads},
    )
    try:
        code = HANDLERS[exp.command](exp, args)
    except FileNotFoundError as e:
        logger.critical(f"🔥 Input file not found: {e}")
        print(f"error: input file not found: {e}", file=sys.stderr)
        return 2
    except InvalidInputError as e:
        logger.critical(f"🔥 Invalid input: {e}")
        print(f"error: {e}", file=sys.stderr)
        return 2
    except DensityGeomError as e:
        logger.critical(f"🔥 Numerical failure in '{exp.command}': {e}")
        print(f"error: {e}", file=sys.stderr)
        return 1
    except Exception as e:
        logger.critical(f"🔥 A critical error occurred in '{exp.command}': {e}", exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        return 1

    wall_ms = (time.perf_counter() - started) * 1000.0
    if code == 0:
        logger.info(f"✅ '{exp.command}' completed in {wall_ms:.0f} ms.")
    else:
        logger.warning(f"🛑 '{exp.command}' finished with exit code {code} after {wall_ms:.0f} ms.")
    audit.info("Run finished", extra={"command": exp.command, "exit_code": code})
    return code


def run() -> None:
    """Console-script entry point."""
    sys.exit(main())


if __name__ == "__main__":
    run()
