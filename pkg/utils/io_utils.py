"""
Запись результатов сценариев: снимки сетки (CSV и сырой блок), таблицы,
manifest и запись об ошибке failure.json.
"""
import hashlib
import json
import os
import platform
from datetime import datetime
from typing import Any, Dict, Iterable, List, Tuple

import numpy as np
import pandas as pd

from logger_config import setup_logger
from phase_grid import DistributionField, PhaseGrid

logger = setup_logger("io_utils")

RAW_MAGIC = b"RFPGRID1"
RAW_HEADER_SIZE = 64
RAW_HEADER = np.dtype([
    ("magic", "S8"),
    ("d", "<i4"),
    ("n_x", "<i4"),
    ("n_p", "<i4"),
    ("reserved", "<i4"),
    ("x_min", "<f8"),
    ("x_max", "<f8"),
    ("p_max", "<f8"),
    ("t", "<f8"),
    ("padding", "V8"),
])


def snapshot_name(index: int) -> str:
    return f"snapshot_t{index:04d}"


def write_frame(frame: pd.DataFrame, path: str, float_format: str = "%.17g") -> str:
    frame.to_csv(path, index=False, float_format=float_format)
    logger.info(f"Записан файл {path} ({len(frame)} строк)")
    return path


def write_snapshot_csv(f: DistributionField, path: str, float_format: str = "%.17g") -> str:
    """
    CSV снимок с колонками x, p, f (d = 1)

    Args:
        f: Функция распределения
        path: Путь к файлу
        float_format: Формат чисел

    Returns:
        str: Путь к файлу
    """
    grid = f.grid
    if grid.d != 1:
        raise ValueError("CSV снимок поддерживается только для d = 1")
    x, p = np.meshgrid(grid.x_centers, grid.p_centers, indexing="ij")
    frame = pd.DataFrame({"x": x.ravel(), "p": p.ravel(), "f": f.values.ravel()})
    return write_frame(frame, path, float_format)


def write_snapshot_raw(f: DistributionField, t: float, path: str) -> str:
    """Сырой блок little-endian float64 с 64-байтовым заголовком."""
    grid = f.grid
    header = np.zeros(1, dtype=RAW_HEADER)
    header["magic"] = RAW_MAGIC
    header["d"] = grid.d
    header["n_x"] = grid.n_x
    header["n_p"] = grid.n_p
    header["x_min"] = grid.x_min
    header["x_max"] = grid.x_max
    header["p_max"] = grid.p_max
    header["t"] = t
    with open(path, "wb") as fh:
        fh.write(header.tobytes())
        fh.write(np.ascontiguousarray(f.values, dtype="<f8").tobytes())
    return path


def read_snapshot_raw(path: str) -> Tuple[DistributionField, float]:
    """
    Чтение сырого снимка

    Returns:
        Tuple: (поле, время)
    """
    with open(path, "rb") as fh:
        payload = fh.read()
    if len(payload) < RAW_HEADER_SIZE:
        raise ValueError(f"Файл {path} короче заголовка")
    header = np.frombuffer(payload[:RAW_HEADER_SIZE], dtype=RAW_HEADER)[0]
    if bytes(header["magic"]) != RAW_MAGIC:
        raise ValueError(f"Файл {path} не является снимком сетки")
    grid = PhaseGrid(
        d=int(header["d"]),
        x_min=float(header["x_min"]),
        x_max=float(header["x_max"]),
        p_max=float(header["p_max"]),
        n_x=int(header["n_x"]),
        n_p=int(header["n_p"]),
    )
    values = np.frombuffer(payload[RAW_HEADER_SIZE:], dtype="<f8")
    if values.size != int(np.prod(grid.shape)):
        raise ValueError(f"Размер данных {values.size} не совпадает с сеткой {grid.shape}")
    return DistributionField(grid, values.reshape(grid.shape).copy()), float(header["t"])


def write_snapshots(snapshots: Iterable[Tuple[float, DistributionField]], out_dir: str,
                    write_raw: bool = True, float_format: str = "%.17g") -> List[str]:
    """Снимки snapshot_tXXXX.csv/.raw и индекс snapshots.csv (index -> t)."""
    artifacts = []
    index_rows = []
    for index, (t, f) in enumerate(snapshots):
        base = os.path.join(out_dir, snapshot_name(index))
        artifacts.append(write_snapshot_csv(f, base + ".csv", float_format))
        if write_raw:
            artifacts.append(write_snapshot_raw(f, t, base + ".raw"))
        index_rows.append({"index": index, "t": t})
    if index_rows:
        artifacts.append(write_frame(pd.DataFrame(index_rows), os.path.join(out_dir, "snapshots.csv"),
                                     float_format))
    return artifacts


def config_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _versions() -> Dict[str, str]:
    import click
    import pydantic
    import scipy

    return {
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "pandas": pd.__version__,
        "pydantic": pydantic.VERSION,
        "click": click.__version__,
    }


def write_manifest(out_dir: str, command: str, config_text: str, info: Dict[str, Any]) -> str:
    """
    Текстовый manifest: команда, хэш конфигурации, параметры и версии

    Args:
        out_dir: Директория результатов
        command: Подкоманда
        config_text: Исходный текст конфигурации
        info: Дополнительные пары ключ-значение

    Returns:
        str: Путь к manifest
    """
    path = os.path.join(out_dir, "manifest")
    lines = [
        f"command = {command}",
        f"config_sha256 = {config_hash(config_text)}",
        f"created = {datetime.now().isoformat(timespec='seconds')}",
    ]
    lines += [f"{key} = {value}" for key, value in info.items()]
    lines += [f"version.{name} = {version}" for name, version in _versions().items()]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def write_failure(out_dir: str, command: str, error: BaseException, details: Dict[str, Any] = None) -> str:
    """Машиночитаемая запись об ошибке failure.json."""
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "failure.json")
    record = {
        "error_type": type(error).__name__,
        "message": str(error),
        "command": command,
        "details": details or {},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(record, fh, ensure_ascii=False, indent=2, default=str)
    logger.error(f"Сценарий {command} завершился ошибкой: {record['error_type']}: {record['message']}")
    return path
