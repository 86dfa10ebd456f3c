import os
import time
from typing import Any, Dict, Optional

from celery.utils.log import get_task_logger

from celery_app import app
from parsers.scenario_parser import ConfigError, parse_config
from usecases.scenario_runner import run_scenario
from utils.io_utils import write_failure

logger = get_task_logger(__name__)

RESULT_KEYS = ("status", "command", "passed", "checks", "artifacts", "summary", "error")


@app.task(bind=True, name='celery_app.tasks.scenario_tasks.run_scenario_task')
def run_scenario_task(self, config_text: str, kind: str, out_dir: str, threads: int = 1,
                      overrides: Optional[Dict[str, Any]] = None) -> dict:
    """
    Отложенный запуск сценария

    Args:
        config_text: Текст сценария
        kind: Подкоманда
        out_dir: Директория результатов
        threads: Предел потоков
        overrides: Подмены параметров из командной строки

    Returns:
        dict: Итог сценария, пригодный для json
    """
    start_time = time.time()
    logger.info(f"=== Задача {self.request.id} (PID: {os.getpid()}): сценарий {kind} -> {out_dir} ===")
    try:
        scenario = parse_config(config_text, kind).with_overrides(overrides or {})
    except ConfigError as e:
        path = write_failure(out_dir, kind, e, {"line": e.line})
        return {"status": "error", "command": kind, "passed": False, "checks": [],
                "artifacts": [path], "summary": {}, "error": str(e)}

    result = run_scenario(scenario, out_dir, threads)
    execution_time = time.time() - start_time
    logger.info(f"=== Задача {self.request.id} завершена за {execution_time:.2f} секунд, "
                f"статус {result['status']}, проверки {'пройдены' if result['passed'] else 'не пройдены'} ===")
    return {key: result[key] for key in RESULT_KEYS if key in result}
