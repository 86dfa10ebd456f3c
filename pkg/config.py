import os
from typing import Dict, Any
from dotenv import load_dotenv

# Загружаем переменные окружения
load_dotenv()

# Параметры процесса
LOG_DIR = os.getenv("RFP_LOG_DIR", "logs")
LOG_LEVEL = os.getenv("RFP_LOG_LEVEL", "INFO").upper()
DEFAULT_THREADS = int(os.getenv("RFP_THREADS", "1"))
DEFAULT_OUTPUT_DIR = os.getenv("RFP_OUTPUT_DIR", "output")

CELERY_BROKER_URL = os.getenv("CELERY_BROKER_URL", "redis://localhost:6379/0")
CELERY_RESULT_BACKEND = os.getenv("CELERY_RESULT_BACKEND", "redis://localhost:6379/0")

SCENARIO_KINDS = (
    "run-linear",
    "steady-linear",
    "steady-vmfp",
    "steady-vnfp",
    "check-invariance",
    "check-lightcone",
    "check-oracles",
)

SCENARIO_DEFAULTS = {
    "seed": 0,
    "mass": 1.0,
}

# Эталонная сетка фазового пространства (d = 1)
GRID_DEFAULTS = {
    "d": 1,
    "x_min": -8.0,
    "x_max": 8.0,
    "p_max": 8.0,
    "n_x": 128,
    "n_p": 128,
    # радиальная сетка и импульсная квадратура стационарных задач
    "r_max": 10.0,
    "n_r": 400,
    "s_max": 5.0,
    "n_s": 100,
}

POTENTIAL_DEFAULTS = {
    "kind": "harmonic",
    "strength": 1.0,
    "table_r": None,
    "table_v": None,
}

SOLVER_DEFAULTS = {
    "dt": 1e-3,
    "t_end": 1.0,
    "cfl_transport": 1.0,
    "splitting": "strang",
    "collision_weights": "chang_cooper",
    "collision_time_scheme": "backward_euler",
    "transport_scheme": "upwind1",
    "collisions_enabled": True,
    "transport_enabled": True,
    "superluminal_factor": 1.0,
    "record_every": 10,
    "snapshot_times": (),
    "initial": "shifted_juttner",
    "p_shift": 2.0,
    "x_center": 0.0,
    "x_width": 1.0,
    "support_halfwidth": 1.0,
    "lightcone_step": False,
}

STEADY_DEFAULTS = {
    "damping": 0.5,
    "tol": 1e-10,
    "max_iter": 500,
    "continuation_stages": 5,
    "continuation_seed_mass": 0.1,
    "n_perturbations": 100,
    "epsilons": (0.1, 0.5),
}

CHECK_DEFAULTS = {
    "mass_tolerance": 1e-12,
    "entropy_tolerance": 0.05,
    "residual_tolerance": 1e-6,
    "oracle_tolerance": 1e-8,
    "invariance_tolerance": 1e-8,
    "n_points": 20,
    "fd_step": 1e-2,
    "boost": (0.3,),
    "galilean_boost": (1.0,),
    "support_threshold": 1e-14,
    "monotone_free_energy": True,
    "chi2_contraction": True,
}

OUTPUT_DEFAULTS = {
    "dir": DEFAULT_OUTPUT_DIR,
    "write_raw": True,
    "float_format": "%.17g",
}

SECTION_DEFAULTS = {
    "scenario": SCENARIO_DEFAULTS,
    "grid": GRID_DEFAULTS,
    "potential": POTENTIAL_DEFAULTS,
    "solver": SOLVER_DEFAULTS,
    "steady": STEADY_DEFAULTS,
    "checks": CHECK_DEFAULTS,
    "output": OUTPUT_DEFAULTS,
}


def get_section_defaults(section: str) -> Dict[str, Any]:
    """
    Получение значений по умолчанию для секции сценария

    Args:
        section: Название секции (scenario, grid, potential, solver, steady, checks, output)

    Returns:
        Dict[str, Any]: Копия словаря значений по умолчанию
    """
    if section not in SECTION_DEFAULTS:
        raise ValueError(f"Неизвестная секция конфигурации: {section}")
    return dict(SECTION_DEFAULTS[section])
