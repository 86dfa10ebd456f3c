"""
Разбор текстовых сценариев вида

    [scenario]
    kind = run-linear
    [grid]
    n_x = 128

Секции проверяются моделями pydantic; ошибки указывают номер строки.
"""
import difflib
import re
from typing import Annotated, Any, Dict, Literal, Optional, Tuple

from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, ValidationError, field_validator, model_validator

from config import SCENARIO_KINDS, get_section_defaults
from fp_solver import SolverConfig
from logger_config import setup_logger
from mean_field_steady import FixedPointConfig, MomentumGrid, RadialGrid
from phase_grid import ExternalPotential, PhaseGrid, make_potential

logger = setup_logger("scenario_parser")

SECTION_RE = re.compile(r"^\[\s*([A-Za-z_]+)\s*\]$")
KEY_RE = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(.*)$")


class ConfigError(ValueError):
    """Ошибка сценария с номером строки и подсказкой."""

    def __init__(self, message: str, line: Optional[int] = None, suggestion: Optional[str] = None):
        self.line = line
        self.suggestion = suggestion
        text = f"строка {line}: {message}" if line else message
        if suggestion:
            text += f" (возможно, имелось в виду '{suggestion}')"
        super().__init__(text)


def _split_list(value):
    if isinstance(value, str):
        return [item.strip() for item in value.split(",") if item.strip()]
    return value


FloatList = Annotated[Tuple[float, ...], BeforeValidator(_split_list)]


_SCENARIO = get_section_defaults("scenario")
_GRID = get_section_defaults("grid")
_POTENTIAL = get_section_defaults("potential")
_SOLVER = get_section_defaults("solver")
_STEADY = get_section_defaults("steady")
_CHECKS = get_section_defaults("checks")
_OUTPUT = get_section_defaults("output")


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ScenarioSection(_Section):
    kind: Optional[Literal[SCENARIO_KINDS]] = None
    seed: int = Field(_SCENARIO["seed"], ge=0)
    mass: float = Field(_SCENARIO["mass"], gt=0)


class GridSection(_Section):
    d: int = Field(_GRID["d"], ge=1, le=3)
    x_min: float = _GRID["x_min"]
    x_max: float = _GRID["x_max"]
    p_max: float = Field(_GRID["p_max"], gt=0)
    n_x: int = Field(_GRID["n_x"], ge=1)
    n_p: int = Field(_GRID["n_p"], ge=2)
    r_max: float = Field(_GRID["r_max"], gt=0)
    n_r: int = Field(_GRID["n_r"], ge=2)
    s_max: float = Field(_GRID["s_max"], gt=0)
    n_s: int = Field(_GRID["n_s"], ge=2)

    @model_validator(mode="after")
    def _check_extent(self):
        if not self.x_max > self.x_min:
            raise ValueError("x_max должен быть больше x_min")
        return self


class PotentialSection(_Section):
    kind: Literal["free", "harmonic", "quartic", "tabulated"] = _POTENTIAL["kind"]
    strength: float = Field(_POTENTIAL["strength"], gt=0)
    table_r: Optional[FloatList] = _POTENTIAL["table_r"]
    table_v: Optional[FloatList] = _POTENTIAL["table_v"]

    @model_validator(mode="after")
    def _check_table(self):
        if self.kind == "tabulated" and (self.table_r is None or self.table_v is None):
            raise ValueError("для tabulated нужны table_r и table_v")
        return self


class SolverSection(_Section):
    dt: float = Field(_SOLVER["dt"], gt=0)
    t_end: float = Field(_SOLVER["t_end"], gt=0)
    cfl_transport: float = Field(_SOLVER["cfl_transport"], gt=0, le=1)
    splitting: Literal["lie", "strang"] = _SOLVER["splitting"]
    collision_weights: Literal["chang_cooper", "centered"] = _SOLVER["collision_weights"]
    collision_time_scheme: Literal["backward_euler", "crank_nicolson"] = _SOLVER["collision_time_scheme"]
    transport_scheme: Literal["upwind1", "muscl_minmod"] = _SOLVER["transport_scheme"]
    collisions_enabled: bool = _SOLVER["collisions_enabled"]
    transport_enabled: bool = _SOLVER["transport_enabled"]
    superluminal_factor: float = Field(_SOLVER["superluminal_factor"], gt=0)
    record_every: int = Field(_SOLVER["record_every"], ge=1)
    snapshot_times: FloatList = _SOLVER["snapshot_times"]
    initial: Literal["equilibrium", "shifted_juttner", "gaussian", "compact", "random"] = _SOLVER["initial"]
    p_shift: float = _SOLVER["p_shift"]
    x_center: float = _SOLVER["x_center"]
    x_width: float = Field(_SOLVER["x_width"], gt=0)
    support_halfwidth: float = Field(_SOLVER["support_halfwidth"], gt=0)
    lightcone_step: bool = _SOLVER["lightcone_step"]


class SteadySection(_Section):
    damping: float = Field(_STEADY["damping"], gt=0, le=1)
    tol: float = Field(_STEADY["tol"], gt=0)
    max_iter: int = Field(_STEADY["max_iter"], ge=1)
    continuation_stages: int = Field(_STEADY["continuation_stages"], ge=1)
    continuation_seed_mass: float = Field(_STEADY["continuation_seed_mass"], gt=0)
    n_perturbations: int = Field(_STEADY["n_perturbations"], ge=0)
    epsilons: FloatList = _STEADY["epsilons"]

    @field_validator("epsilons")
    @classmethod
    def _check_epsilons(cls, value):
        if any(not 0 < abs(eps) < 1 for eps in value):
            raise ValueError("амплитуды возмущений должны лежать в (0, 1) по модулю")
        return value


class ChecksSection(_Section):
    mass_tolerance: float = Field(_CHECKS["mass_tolerance"], gt=0)
    entropy_tolerance: float = Field(_CHECKS["entropy_tolerance"], gt=0)
    residual_tolerance: float = Field(_CHECKS["residual_tolerance"], gt=0)
    oracle_tolerance: float = Field(_CHECKS["oracle_tolerance"], gt=0)
    invariance_tolerance: float = Field(_CHECKS["invariance_tolerance"], gt=0)
    n_points: int = Field(_CHECKS["n_points"], ge=1)
    fd_step: float = Field(_CHECKS["fd_step"], gt=0)
    boost: FloatList = _CHECKS["boost"]
    galilean_boost: FloatList = _CHECKS["galilean_boost"]
    support_threshold: float = Field(_CHECKS["support_threshold"], gt=0)
    monotone_free_energy: bool = _CHECKS["monotone_free_energy"]
    chi2_contraction: bool = _CHECKS["chi2_contraction"]


class OutputSection(_Section):
    dir: str = _OUTPUT["dir"]
    write_raw: bool = _OUTPUT["write_raw"]
    float_format: str = _OUTPUT["float_format"]


SECTION_MODELS = {
    "scenario": ScenarioSection,
    "grid": GridSection,
    "potential": PotentialSection,
    "solver": SolverSection,
    "steady": SteadySection,
    "checks": ChecksSection,
    "output": OutputSection,
}


class Scenario(BaseModel):
    """Полностью проверенный сценарий."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    kind: Literal[SCENARIO_KINDS]
    seed: int = Field(_SCENARIO["seed"], ge=0)
    mass: float = Field(_SCENARIO["mass"], gt=0)
    grid: GridSection = GridSection()
    potential: PotentialSection = PotentialSection()
    solver: SolverSection = SolverSection()
    steady: SteadySection = SteadySection()
    checks: ChecksSection = ChecksSection()
    output: OutputSection = OutputSection()
    source: str = ""

    def phase_grid(self) -> PhaseGrid:
        g = self.grid
        return PhaseGrid(d=g.d, x_min=g.x_min, x_max=g.x_max, p_max=g.p_max, n_x=g.n_x, n_p=g.n_p)

    def external_potential(self) -> ExternalPotential:
        p = self.potential
        table = (p.table_r, p.table_v) if p.kind == "tabulated" else None
        return make_potential(p.kind, p.strength, table)

    def solver_config(self) -> SolverConfig:
        s = self.solver
        return SolverConfig(
            dt=s.dt, t_end=s.t_end, cfl_transport=s.cfl_transport, splitting=s.splitting,
            collision_weights=s.collision_weights, collision_time_scheme=s.collision_time_scheme,
            transport_scheme=s.transport_scheme, collisions_enabled=s.collisions_enabled,
            transport_enabled=s.transport_enabled, superluminal_factor=s.superluminal_factor,
        )

    def fixed_point_config(self) -> FixedPointConfig:
        s = self.steady
        return FixedPointConfig(
            damping=s.damping, tol=s.tol, max_iter=s.max_iter,
            grid=RadialGrid(self.grid.r_max, self.grid.n_r),
            momentum=MomentumGrid(self.grid.s_max, self.grid.n_s),
            continuation_stages=s.continuation_stages, seed_mass=s.continuation_seed_mass,
        )

    def with_overrides(self, overrides: Dict[str, Any]) -> "Scenario":
        """
        Копия с подмененными значениями; ключи вида "mass" или "steady.tol"

        Значения None пропускаются, результат проверяется заново.
        """
        data = self.model_dump()
        for key, value in overrides.items():
            if value is None:
                continue
            if "." in key:
                section, name = key.split(".", 1)
                data[section][name] = value
            else:
                data[key] = value
        try:
            return Scenario(**data)
        except ValidationError as e:
            first = e.errors()[0]
            location = ".".join(str(part) for part in first["loc"])
            raise ConfigError(f"параметр '{location}': {first['msg']}") from e


def _suggest(word: str, options) -> Optional[str]:
    matches = difflib.get_close_matches(word, list(options), n=1, cutoff=0.5)
    return matches[0] if matches else None


def _tokenize(text: str) -> Tuple[Dict[str, Dict[str, Tuple[str, int]]], Dict[str, int]]:
    sections: Dict[str, Dict[str, Tuple[str, int]]] = {}
    headers: Dict[str, int] = {}
    current = None
    for number, raw in enumerate(text.splitlines(), start=1):
        line = re.split(r"[#;]", raw, maxsplit=1)[0].strip()
        if not line:
            continue
        header = SECTION_RE.match(line)
        if header:
            name = header.group(1).lower()
            if name not in SECTION_MODELS:
                raise ConfigError(f"неизвестная секция [{name}]", number, _suggest(name, SECTION_MODELS))
            if name in headers:
                raise ConfigError(f"секция [{name}] повторяется", number)
            headers[name] = number
            sections[name] = {}
            current = name
            continue
        pair = KEY_RE.match(line)
        if not pair:
            raise ConfigError(f"ожидалось 'ключ = значение', получено '{raw.strip()}'", number)
        if current is None:
            raise ConfigError(f"ключ '{pair.group(1)}' вне секции", number)
        key, value = pair.group(1), pair.group(2).strip()
        fields = SECTION_MODELS[current].model_fields
        if key not in fields:
            raise ConfigError(f"неизвестный ключ '{key}' в секции [{current}]", number, _suggest(key, fields))
        if key in sections[current]:
            raise ConfigError(f"ключ '{key}' повторяется в секции [{current}]", number)
        if value == "":
            raise ConfigError(f"пустое значение ключа '{key}'", number)
        sections[current][key] = (value, number)
    return sections, headers


def _validate_section(name: str, entries: Dict[str, Tuple[str, int]], header_line: Optional[int]):
    model = SECTION_MODELS[name]
    values = {key: value for key, (value, _) in entries.items()}
    try:
        return model(**values)
    except ValidationError as e:
        first = e.errors()[0]
        key = str(first["loc"][0]) if first["loc"] else None
        line = entries[key][1] if key in entries else header_line
        label = f"ключ '{key}'" if key else f"секция [{name}]"
        raise ConfigError(f"{label}: {first['msg']}", line) from e


def parse_config(text: str, kind: Optional[str] = None) -> Scenario:
    """
    Разбор текста сценария

    Args:
        text: Текст в формате секций [name] и пар key = value
        kind: Подкоманда, если сценарий запускается из CLI

    Returns:
        Scenario: Проверенный сценарий
    """
    sections, headers = _tokenize(text)
    models = {
        name: _validate_section(name, entries, headers.get(name))
        for name, entries in sections.items()
    }
    head = models.get("scenario", ScenarioSection())
    declared = head.kind
    if declared and kind and declared != kind:
        line = sections["scenario"]["kind"][1]
        raise ConfigError(f"сценарий объявлен как '{declared}', а запущен как '{kind}'", line)
    resolved = declared or kind
    if resolved is None:
        raise ConfigError("отсутствует обязательный ключ 'kind' в секции [scenario]", headers.get("scenario"))

    scenario = Scenario(
        kind=resolved,
        seed=head.seed,
        mass=head.mass,
        source=text,
        **{name: model for name, model in models.items() if name != "scenario"},
    )
    logger.info(f"Сценарий {scenario.kind} разобран: секции {sorted(sections)}")
    return scenario


def load_config(path: str, kind: Optional[str] = None) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read(), kind)
