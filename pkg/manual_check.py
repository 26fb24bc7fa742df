"""
manual_check.py
====================================
Скрипт для ручной приёмочной проверки densitygeom без pytest.
Печатает таблицу статусов по основным операциям библиотеки.
"""

import os
import sys
import shutil
import logging
import tempfile

# --- Настройка путей импорта ---
current_dir = os.getcwd()
src_path = os.path.join(current_dir, 'src')
if src_path not in sys.path:
    sys.path.insert(0, src_path)

try:
    import numpy as np

    from densitygeom.bloch.mesh import s3_mesh
    from densitygeom.bloch.s3 import QubitDensityParams, sqrt_preimages
    from densitygeom.core.algebra import hs_norm, principal_sqrt
    from densitygeom.core.ensembles import make_rng, random_density_hs
    from densitygeom.experiments.suite import BoundSuite
    from densitygeom.geometry.families import constant_family
    from densitygeom.geometry.montecarlo import fisher_rao_mc
except ImportError as e:
    sys.stderr.write(f"[CRITICAL] Import failed: {e}\n")
    sys.exit(1)

# 1. Настройка логирования
logging.basicConfig(
    level=logging.INFO,
    format='[%(asctime)s] [%(levelname)s] %(message)s',
    datefmt='%Y-%m-%d %H:%M:%S'
)
logger = logging.getLogger("TestRunner")

SEED = 20240601
MESH_DIR = tempfile.mkdtemp(prefix="densitygeom-check-")


def check_sqrt():
    """Невязка ||ξ² − ρ|| для случайных ρ размерностей 2..8."""
    rng = make_rng(SEED)
    worst = 0.0
    for dim in range(2, 9):
        rho = random_density_hs(dim, rng)
        xi = principal_sqrt(rho)
        worst = max(worst, hs_norm(xi.data @ xi.data - rho.data))
    return worst <= 1e-10, f"max residual {worst:.2e}"


def check_preimages():
    """Число изолированных прообразов для каждого класса вырождения."""
    expected = {
        (0.25, 0.0, 0.0): ("generic", 4),
        (0.5, 0.0, 0.0): ("pure", 2),
        (0.0, 0.0, 0.0): ("fully_mixed", 2),
    }
    details = []
    ok = True
    for abc, (case, count) in expected.items():
        result = sqrt_preimages(QubitDensityParams(*abc))
        got = (result.case_tag.value, len(result.isolated_points))
        ok = ok and got == (case, count) and max(result.residuals()) <= 1e-10
        details.append(f"{case}:{got[1]}")
    return ok, " ".join(details)


def check_mesh():
    """Сетка S³ при разрешении 8 содержит 1712 строк."""
    path = os.path.join(MESH_DIR, "mesh.csv")
    rows = s3_mesh(8, path)
    return len(rows) == 1712 and os.path.exists(path), f"rows {len(rows)}"


def check_constant_metric():
    """Метрика постоянного семейства тождественно нулевая."""
    xi = principal_sqrt(np.diag([0.6, 0.3, 0.1]))
    est = fisher_rao_mc(constant_family(xi), [0.0], 2000, make_rng(SEED), seed=SEED)
    norm = float(np.max(np.abs(est.components)))
    return norm == 0.0, f"max |G| {norm:.1e}"


def check_bounds():
    """Небольшой прогон набора неравенств без нарушений."""
    specs = [
        {"id": "qubit", "dim": 2, "count": 4, "kind": "full_rank", "perturb": True},
        {"id": "qutrit", "dim": 3, "count": 3, "kind": "full_rank", "perturb": True},
        {"id": "pure", "dim": 2, "count": 2, "kind": "pure"},
    ]
    result = BoundSuite(specs, seed=SEED).run()
    return result.violations == 0, f"{len(result.records)} records, {result.violations} violations"


CHECKS = [
    ("sqrt", check_sqrt),
    ("preimages", check_preimages),
    ("s3_mesh", check_mesh),
    ("constant_metric", check_constant_metric),
    ("bounds", check_bounds),
]


def run_checks():
    print("\n--- ACCEPTANCE CHECK REPORT ---")
    print(f"{'STATUS':<10} {'CHECK':<20} {'DETAILS'}")
    print("-" * 80)

    issues = 0
    for name, check in CHECKS:
        try:
            ok, details = check()
        except Exception as e:
            ok, details = False, f"EXCEPTION: {e}"
        status_tag = "[OK]" if ok else "[FAIL]"
        if not ok:
            issues += 1
        print(f"{status_tag:<10} {name:<20} {details}")
    return issues


def main():
    logger.info("Initiating acceptance check sequence...")
    try:
        issues = run_checks()

        print("\n" + "=" * 40)
        if issues == 0:
            logger.info("CHECK PASSED: All operations behave as expected.")
        else:
            logger.warning(f"CHECK COMPLETED WITH FINDINGS: {issues} failing checks.")
    except Exception as e:
        logger.critical(f"System exception: {e}", exc_info=True)
    finally:
        shutil.rmtree(MESH_DIR, ignore_errors=True)


if __name__ == "__main__":
    main()
