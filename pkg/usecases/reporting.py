import os
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from logger_config import setup_logger

logger = setup_logger("reporting")


def prepare_output(out_dir: str) -> str:
    os.makedirs(out_dir, exist_ok=True)
    return out_dir


def check_row(name: str, value: float, limit: Optional[float], passed: bool) -> Dict[str, Any]:
    """
    Одна проверка сценария

    Args:
        name: Название проверки
        value: Измеренное значение
        limit: Порог (None, если проверка качественная)
        passed: Итог

    Returns:
        Dict[str, Any]: Строка таблицы проверок
    """
    value = float(value) if value is not None else float("nan")
    return {"name": name, "value": value, "limit": limit, "passed": bool(passed)}


def build_result(command: str, checks: List[Dict[str, Any]], artifacts: List[str],
                 summary: Dict[str, Any]) -> Dict[str, Any]:
    """Итог сценария: passed, только если прошли все проверки."""
    passed = all(c["passed"] for c in checks)
    for c in checks:
        mark = "OK" if c["passed"] else "FAIL"
        logger.info(f"[{command}] {c['name']}: {c['value']:.6g} (порог {c['limit']}) {mark}")
    return {
        "status": "success",
        "command": command,
        "passed": passed,
        "checks": checks,
        "artifacts": artifacts,
        "summary": summary,
    }


def checks_frame(checks: List[Dict[str, Any]]) -> pd.DataFrame:
    return pd.DataFrame(checks, columns=["name", "value", "limit", "passed"])


def relative_error(value: float, expected: float) -> float:
    scale = max(abs(expected), np.finfo(float).tiny)
    return abs(value - expected) / scale
