import os
import traceback
from typing import Any, Callable, Dict, Optional

from threadpoolctl import threadpool_limits

from logger_config import setup_logger
from parsers.scenario_parser import Scenario
from usecases.linear_runs import check_lightcone, run_linear, steady_linear
from usecases.reporting import checks_frame, prepare_output
from usecases.steady_states import steady_vmfp, steady_vnfp
from usecases.verification import check_invariance, check_oracles
from utils.io_utils import write_failure, write_frame

logger = setup_logger("scenario_runner")

RUNNERS: Dict[str, Callable[..., Dict[str, Any]]] = {
    "run-linear": run_linear,
    "steady-linear": steady_linear,
    "steady-vmfp": steady_vmfp,
    "steady-vnfp": steady_vnfp,
    "check-invariance": check_invariance,
    "check-lightcone": check_lightcone,
    "check-oracles": check_oracles,
}
PARALLEL_KINDS = ("steady-vmfp", "steady-vnfp")


def run_scenario(scenario: Scenario, out_dir: Optional[str] = None, threads: int = 1) -> Dict[str, Any]:
    """
    Запуск сценария по его kind

    Ошибки не пробрасываются: пишется failure.json и возвращается status = error.

    Args:
        scenario: Проверенный сценарий
        out_dir: Директория результатов (по умолчанию из секции [output])
        threads: Предел потоков BLAS и число процессов joblib

    Returns:
        Dict[str, Any]: Итог сценария
    """
    out_dir = out_dir or scenario.output.dir
    prepare_output(out_dir)
    runner = RUNNERS[scenario.kind]
    kwargs = {"n_jobs": threads} if scenario.kind in PARALLEL_KINDS else {}
    logger.info(f"Запуск сценария {scenario.kind} -> {out_dir} (потоков: {threads})")
    try:
        with threadpool_limits(limits=threads):
            result = runner(scenario, out_dir, **kwargs)
    except Exception as e:
        details = {"out_dir": out_dir, "traceback": traceback.format_exc(limit=5)}
        for attr in ("line", "residual", "iterations", "ratio", "limit", "direction"):
            if hasattr(e, attr):
                details[attr] = getattr(e, attr)
        path = write_failure(out_dir, scenario.kind, e, details)
        return {
            "status": "error",
            "command": scenario.kind,
            "passed": False,
            "error": f"{type(e).__name__}: {str(e)}",
            "checks": [],
            "artifacts": [path],
            "summary": {},
        }
    result["artifacts"].append(write_frame(checks_frame(result["checks"]), os.path.join(out_dir, "checks.csv"),
                                           scenario.output.float_format))
    verdict = "пройдены" if result["passed"] else "не пройдены"
    logger.info(f"Сценарий {scenario.kind} завершен, проверки {verdict}")
    return result
