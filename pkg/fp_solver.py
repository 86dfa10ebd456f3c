"""
Решатель линейного релятивистского уравнения Фоккера-Планка в фазовом
пространстве d = 1:

    df/dt + v(p) df/dx - V'(x) df/dp = d/dp ( D(p) df/dp + p f ),  D = sqrt(1 + p^2)

Перенос и столкновения разделены (Ли или Стрэнг). Перенос записан в конечных
объемах относительно равновесия e^{-p0 - V}: потоки на гранях несут f,
пересчитанную к грани множителем равновесия, а скорости ячеек равны
дискретным логарифмическим производным равновесия. Поэтому дискретное m_M
аннулируется оператором переноса точно. Столкновительный шаг неявный,
с экспоненциальными весами Чанга-Купера.
"""
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import LinAlgError, solve_banded
from scipy.special import exprel

from diagnostics import DiagnosticSeries, continuity_residual, record
from kinematics import energy
from logger_config import setup_logger
from phase_grid import (
    DistributionField,
    ExternalPotential,
    PhaseGrid,
    check_confinement,
    mass,
)

logger = setup_logger("fp_solver")

SPLITTINGS = ("lie", "strang")
COLLISION_WEIGHTS = ("chang_cooper", "centered")
COLLISION_TIME_SCHEMES = ("backward_euler", "crank_nicolson")
TRANSPORT_SCHEMES = ("upwind1", "muscl_minmod")

# Отрицательные значения такого относительного размера считаются округлением
ROUNDING_FLOOR = 1e-14


class CFLViolationError(ValueError):
    """Явный шаг переноса нарушает условие положительности."""

    def __init__(self, ratio: float, limit: float, x_part: float, p_part: float):
        self.ratio = ratio
        self.limit = limit
        self.x_part = x_part
        self.p_part = p_part
        self.direction = "x" if x_part >= p_part else "p"
        super().__init__(
            f"Нарушено условие CFL: dt*max(скорость оттока) = {ratio:.6g} > {limit:.6g} "
            f"(вклад x-переноса {x_part:.6g}, вклад p-переноса {p_part:.6g})"
        )


class CollisionSolveError(RuntimeError):
    """Не удалось решить трехдиагональную систему столкновительного шага."""


class SteadyStateError(RuntimeError):
    """Нормировка стационарного состояния не определена."""


@dataclass(frozen=True)
class SolverConfig:
    """
    Параметры шага по времени

    Args:
        dt: Шаг по времени
        t_end: Конечное время
        cfl_transport: Запас по условию положительности явного переноса (<= 1)
        splitting: lie или strang
        collision_weights: chang_cooper или centered
        collision_time_scheme: backward_euler или crank_nicolson
        transport_scheme: upwind1 или muscl_minmod
        collisions_enabled: Включить столкновительный шаг
        transport_enabled: Включить перенос (однородная релаксация при False)
        superluminal_factor: Множитель скорости переноса, только для контрольных тестов

    Второй порядок по dt при расщеплении Стрэнга получается только в паре
    muscl_minmod + crank_nicolson; upwind1 или backward_euler дают первый порядок.
    """
    dt: float = 1e-3
    t_end: float = 1.0
    cfl_transport: float = 1.0
    splitting: str = "strang"
    collision_weights: str = "chang_cooper"
    collision_time_scheme: str = "backward_euler"
    transport_scheme: str = "upwind1"
    collisions_enabled: bool = True
    transport_enabled: bool = True
    superluminal_factor: float = 1.0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt должен быть положительным, получено {self.dt}")
        if not self.t_end > 0:
            raise ValueError(f"t_end должен быть положительным, получено {self.t_end}")
        if not 0 < self.cfl_transport <= 1:
            raise ValueError(f"cfl_transport должен лежать в (0, 1], получено {self.cfl_transport}")
        if self.splitting not in SPLITTINGS:
            raise ValueError(f"Неподдерживаемое расщепление: {self.splitting}")
        if self.collision_weights not in COLLISION_WEIGHTS:
            raise ValueError(f"Неподдерживаемые веса потока: {self.collision_weights}")
        if self.collision_time_scheme not in COLLISION_TIME_SCHEMES:
            raise ValueError(f"Неподдерживаемая схема по времени: {self.collision_time_scheme}")
        if self.transport_scheme not in TRANSPORT_SCHEMES:
            raise ValueError(f"Неподдерживаемая схема переноса: {self.transport_scheme}")
        if not self.superluminal_factor > 0:
            raise ValueError("superluminal_factor должен быть положительным")

    @property
    def n_steps(self) -> int:
        return max(1, int(np.ceil(self.t_end / self.dt - 1e-9)))


@dataclass
class SolverState:
    """Текущее состояние: f, время, число шагов, потенциал и необязательный хук."""
    f: DistributionField
    potential: ExternalPotential
    t: float = 0.0
    step_count: int = 0
    hook: Optional[Callable[["SolverState"], None]] = None


@dataclass
class RunResult:
    """Итог прогона решателя."""
    state: SolverState
    series: DiagnosticSeries
    snapshots: List[Tuple[float, DistributionField]] = field(default_factory=list)
    # max |невязка неразрывности| по шагам, дивергенция от потоков схемы
    continuity_max: float = 0.0


def _minmod(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.where(a * b > 0.0, np.sign(a) * np.minimum(np.abs(a), np.abs(b)), 0.0)


def _enforce_nonnegative(values: np.ndarray, reference: float) -> np.ndarray:
    negative = values.min() if values.size else 0.0
    if negative < 0.0:
        if negative < -ROUNDING_FLOOR * max(reference, np.finfo(float).tiny):
            raise RuntimeError(f"Схема потеряла положительность: min f = {negative:.3e}")
        values = np.maximum(values, 0.0)
    return values


def _interior_face_states(values: np.ndarray, cell_log: np.ndarray, face_log: np.ndarray,
                          limited: bool) -> Tuple[np.ndarray, np.ndarray]:
    """
    Состояния слева и справа от внутренних граней вдоль оси 0

    Значение ячейки m на грани k равно f_m * exp(cell_log[m] - face_log[k]),
    т.е. f, пересчитанная к равновесию на этой грани.
    """
    inner = face_log[1:-1]
    left = values[:-1] * np.exp(cell_log[:-1] - inner)[:, None]
    right = values[1:] * np.exp(cell_log[1:] - inner)[:, None]
    if not limited or values.shape[0] < 3:
        return left, right

    left_slope = np.zeros_like(left)
    far_left = values[:-2] * np.exp(cell_log[:-2] - inner[1:])[:, None]
    left_slope[1:] = _minmod(left[1:] - far_left, right[1:] - left[1:])

    right_slope = np.zeros_like(right)
    far_right = values[2:] * np.exp(cell_log[2:] - inner[:-1])[:, None]
    right_slope[:-1] = _minmod(right[:-1] - left[:-1], far_right - right[:-1])

    return left + 0.5 * left_slope, right - 0.5 * right_slope


class TransportOperator:
    """
    Консервативный перенос в (x, p) с точным дискретным равновесием

    Скорости ячеек:
        v_j = (e^{E_j - E_{j-1/2}} - e^{E_j - E_{j+1/2}}) / dp      (~ p/p0)
        w_i = (e^{V_i - V_{i+1/2}} - e^{V_i - V_{i-1/2}}) / dx      (~ -V')
    Грани x на концах области закрыты; грани p = +-p_max замкнуты друг на друга
    в каждом столбце x.
    """

    def __init__(self, grid: PhaseGrid, potential: ExternalPotential, config: SolverConfig):
        if grid.d != 1:
            raise ValueError("Решатель по времени поддерживает только d = 1")
        self.grid = grid
        self.config = config
        self.limited = config.transport_scheme == "muscl_minmod"

        p_faces = np.linspace(-grid.p_max, grid.p_max, grid.n_p + 1)
        self.energy_cells = np.asarray(energy(grid.p_centers[:, None]))
        self.energy_faces = np.asarray(energy(p_faces[:, None]))
        # обе граничные грани p отождествлены
        self.energy_faces[-1] = self.energy_faces[0]

        x_faces = grid.x_faces
        self.potential_cells = potential.radial(np.abs(grid.x_centers))
        self.potential_faces = potential.radial(np.abs(x_faces))

        e_c, e_f = self.energy_cells, self.energy_faces
        self.x_velocity = config.superluminal_factor * (
            np.exp(e_c - e_f[:-1]) - np.exp(e_c - e_f[1:])
        ) / grid.dp
        v_c, v_f = self.potential_cells, self.potential_faces
        self.p_velocity = (np.exp(v_c - v_f[1:]) - np.exp(v_c - v_f[:-1])) / grid.dx

        self.x_part, self.p_part, self.outflow_rate = self._outflow_rates()
        # интеграл по p и по времени потока через внутренние грани x за последний advance
        self.last_x_transfer = np.zeros(max(grid.n_x - 1, 0))

    def _outflow_rates(self) -> Tuple[float, float, np.ndarray]:
        grid = self.grid
        v = self.x_velocity
        v_c, v_f = self.potential_cells, self.potential_faces
        right_exit = np.exp(v_c - v_f[1:])
        right_exit[-1] = 0.0
        left_exit = np.exp(v_c - v_f[:-1])
        left_exit[0] = 0.0
        x_rate = (np.maximum(v, 0.0)[None, :] * right_exit[:, None]
                  + np.maximum(-v, 0.0)[None, :] * left_exit[:, None]) / grid.dx

        w = self.p_velocity
        e_c, e_f = self.energy_cells, self.energy_faces
        up_exit = np.exp(e_c - e_f[1:])
        down_exit = np.exp(e_c - e_f[:-1])
        p_rate = (np.maximum(w, 0.0)[:, None] * up_exit[None, :]
                  + np.maximum(-w, 0.0)[:, None] * down_exit[None, :]) / grid.dp

        total = x_rate + p_rate
        return float(x_rate.max()), float(p_rate.max()), total

    def positivity_ratio(self, dt: float) -> float:
        factor = 2.0 if self.limited else 1.0
        return float(factor * dt * self.outflow_rate.max())

    def check_cfl(self, dt: float):
        ratio = self.positivity_ratio(dt)
        if ratio > self.config.cfl_transport * (1.0 + 1e-12):
            factor = 2.0 if self.limited else 1.0
            raise CFLViolationError(ratio, self.config.cfl_transport,
                                    factor * dt * self.x_part, factor * dt * self.p_part)

    def x_face_flux(self, values: np.ndarray) -> np.ndarray:
        """Поток F на внутренних гранях x, форма (n_x - 1, n_p)."""
        v = self.x_velocity[None, :]
        left, right = _interior_face_states(values, self.potential_cells,
                                            self.potential_faces, self.limited)
        return np.maximum(v, 0.0) * left + np.minimum(v, 0.0) * right

    def rate(self, values: np.ndarray) -> np.ndarray:
        """Правая часть -(div_x F + div_p G) для массива формы (n_x, n_p)."""
        grid = self.grid
        out = np.zeros_like(values)

        if grid.n_x > 1:
            flux = self.x_face_flux(values)
            out[:-1] -= flux / grid.dx
            out[1:] += flux / grid.dx

        w = self.p_velocity[None, :]
        columns = values.T
        e_c, e_f = self.energy_cells, self.energy_faces
        low, high = _interior_face_states(columns, e_c, e_f, self.limited)
        flux = np.maximum(w, 0.0) * low + np.minimum(w, 0.0) * high
        rate_t = out.T
        rate_t[:-1] -= flux / grid.dp
        rate_t[1:] += flux / grid.dp

        # грань p = +-p_max: отток через верх входит снизу и наоборот
        top = columns[-1] * np.exp(e_c[-1] - e_f[-1])
        bottom = columns[0] * np.exp(e_c[0] - e_f[0])
        wrap = np.maximum(self.p_velocity, 0.0) * top + np.minimum(self.p_velocity, 0.0) * bottom
        rate_t[-1] -= wrap / grid.dp
        rate_t[0] += wrap / grid.dp
        return out

    def _p_integrated_flux(self, values: np.ndarray) -> np.ndarray:
        if self.grid.n_x < 2:
            return np.zeros(0)
        return self.x_face_flux(values).sum(axis=1) * self.grid.dp

    def advance(self, values: np.ndarray, dt: float) -> np.ndarray:
        self.check_cfl(dt)
        reference = float(values.max()) if values.size else 0.0
        transfer = dt * self._p_integrated_flux(values)
        stage = values + dt * self.rate(values)
        if self.limited:
            stage = _enforce_nonnegative(stage, reference)
            # SSP-RK2: средний поток двух стадий
            transfer = 0.5 * (transfer + dt * self._p_integrated_flux(stage))
            stage = 0.5 * values + 0.5 * (stage + dt * self.rate(stage))
        self.last_x_transfer = transfer
        return _enforce_nonnegative(stage, reference)


def _bernoulli(z: np.ndarray) -> np.ndarray:
    # z / (e^z - 1), гладко в нуле
    return 1.0 / exprel(z)


class CollisionOperator:
    """
    Трехдиагональный оператор d/dp (D df/dp + p f) с нулевым потоком на +-p_max

    Поток на грани k между ячейками k-1 и k: J_k = cR_k f_k - cL_k f_{k-1}.
    Веса Чанга-Купера: cR = (D/dp) B(-dE), cL = (D/dp) B(dE), B(z) = z/(e^z - 1),
    dE = p0_k - p0_{k-1}; поток обращается в ноль на e^{-p0} тождественно.
    """

    def __init__(self, grid: PhaseGrid, config: SolverConfig):
        if grid.d != 1:
            raise ValueError("Столкновительный шаг реализован для d = 1")
        self.grid = grid
        self.config = config
        self.theta = 1.0 if config.collision_time_scheme == "backward_euler" else 0.5
        self.lower, self.main, self.upper = collision_matrix(grid, config.collision_weights)

    def apply(self, values: np.ndarray) -> np.ndarray:
        """A f по последней оси."""
        out = self.main * values
        out[..., :-1] += self.upper[1:] * values[..., 1:]
        out[..., 1:] += self.lower[:-1] * values[..., :-1]
        return out

    def _banded(self, dt: float) -> np.ndarray:
        scale = self.theta * dt
        n = self.grid.n_p
        ab = np.zeros((3, n))
        ab[0, 1:] = -scale * self.upper[1:]
        ab[1, :] = 1.0 - scale * self.main
        ab[2, :-1] = -scale * self.lower[:-1]
        return ab

    def advance(self, values: np.ndarray, dt: float) -> np.ndarray:
        if np.any(self.upper[1:] < 0.0) or np.any(self.lower[:-1] < 0.0):
            raise CollisionSolveError(
                "Матрица столкновительного шага не является M-матрицей: "
                "уменьшите dp или используйте веса chang_cooper"
            )
        rhs = values
        if self.theta < 1.0:
            explicit_diag = 1.0 + (1.0 - self.theta) * dt * self.main
            if explicit_diag.min() < 0.0:
                raise CollisionSolveError(
                    f"Шаг dt = {dt:g} слишком велик для схемы Кранка-Николсон: "
                    f"min диагонали явной части {explicit_diag.min():.3e}"
                )
            rhs = values + (1.0 - self.theta) * dt * self.apply(values)

        try:
            solution = solve_banded((1, 1), self._banded(dt), rhs.T, check_finite=True)
        except (LinAlgError, ValueError) as e:
            raise CollisionSolveError(f"Ошибка трехдиагонального решения: {str(e)}") from e
        reference = float(values.max()) if values.size else 0.0
        return _enforce_nonnegative(np.ascontiguousarray(solution.T), reference)


def collision_matrix(grid: PhaseGrid, weights: str = "chang_cooper") -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Диагонали столкновительного оператора A

    Args:
        grid: Сетка (d = 1)
        weights: chang_cooper или centered

    Returns:
        Tuple: (lower, main, upper), где lower[j] = A[j+1, j], upper[j] = A[j-1, j]
    """
    if weights not in COLLISION_WEIGHTS:
        raise ValueError(f"Неподдерживаемые веса потока: {weights}")
    n = grid.n_p
    dp = grid.dp
    p_faces = grid.p_faces[1:-1]
    e_cells = np.asarray(energy(grid.p_centers[:, None]))
    d_faces = np.sqrt(1.0 + p_faces ** 2)

    if weights == "chang_cooper":
        delta = np.diff(e_cells)
        c_right = d_faces / dp * _bernoulli(-delta)
        c_left = d_faces / dp * _bernoulli(delta)
    else:
        c_right = d_faces / dp + 0.5 * p_faces
        c_left = d_faces / dp - 0.5 * p_faces

    # потоки на гранях 0..n, крайние нулевые
    c_r = np.zeros(n + 1)
    c_l = np.zeros(n + 1)
    c_r[1:-1] = c_right
    c_l[1:-1] = c_left

    main = -(c_l[1:] + c_r[:-1]) / dp
    upper = np.zeros(n)
    lower = np.zeros(n)
    upper[1:] = c_r[1:-1] / dp      # A[j-1, j]
    lower[:-1] = c_l[1:-1] / dp     # A[j+1, j]
    return lower, main, upper


class FokkerPlanckSolver:
    """
    Шаг расщепления: перенос(dt/2) -> столкновения(dt) -> перенос(dt/2) (Стрэнг)
    или перенос(dt) -> столкновения(dt) (Ли)
    """

    def __init__(self, grid: PhaseGrid, potential: ExternalPotential, config: SolverConfig):
        if grid.d != 1:
            raise ValueError("Решатель по времени поддерживает только d = 1")
        self.grid = grid
        self.potential = potential
        self.config = config
        self.transport = TransportOperator(grid, potential, config) if config.transport_enabled else None
        self.collision = CollisionOperator(grid, config) if config.collisions_enabled else None
        if self.transport is not None:
            self.transport.check_cfl(self.transport_substep)
        # средний за последний шаг поток массы через внутренние грани x
        self.last_x_flux = np.zeros(max(grid.n_x - 1, 0))

    @property
    def transport_substep(self) -> float:
        return 0.5 * self.config.dt if self.config.splitting == "strang" else self.config.dt

    def _transport(self, values: np.ndarray, dt: float) -> np.ndarray:
        values = self.transport.advance(values, dt)
        self.last_x_flux = self.last_x_flux + self.transport.last_x_transfer / self.config.dt
        return values

    def advance_values(self, values: np.ndarray) -> np.ndarray:
        dt = self.config.dt
        self.last_x_flux = np.zeros(max(self.grid.n_x - 1, 0))
        if self.config.splitting == "strang":
            if self.transport is not None:
                values = self._transport(values, 0.5 * dt)
            if self.collision is not None:
                values = self.collision.advance(values, dt)
            if self.transport is not None:
                values = self._transport(values, 0.5 * dt)
        else:
            if self.transport is not None:
                values = self._transport(values, dt)
            if self.collision is not None:
                values = self.collision.advance(values, dt)
        return values

    def step(self, state: SolverState) -> SolverState:
        values = self.advance_values(state.f.values)
        new_state = replace(state, f=DistributionField(self.grid, values),
                            t=state.t + self.config.dt,
                            step_count=state.step_count + 1)
        if new_state.hook is not None:
            new_state.hook(new_state)
        return new_state

    def run(self, state: SolverState, m_ref: Optional[DistributionField] = None,
            record_every: int = 10, snapshot_times: Sequence[float] = (),
            x0: float = 0.0, log_every: int = 1000) -> RunResult:
        """
        Прогон до t_end с записью диагностик и снимков

        Args:
            state: Начальное состояние
            m_ref: Равновесие для chi^2 (None, если потенциал не удерживающий)
            record_every: Период записи диагностик в шагах
            snapshot_times: Моменты снимков (берется первый шаг с t >= момента)
            x0: Центр для радиуса носителя
            log_every: Период записи прогресса в лог

        Returns:
            RunResult: Конечное состояние, ряд диагностик и снимки
        """
        n_steps = self.config.n_steps
        series = DiagnosticSeries()
        pending = sorted(float(t) for t in snapshot_times)
        snapshots: List[Tuple[float, DistributionField]] = []
        mass0 = mass(state.f)

        def take_snapshots(current: SolverState):
            while pending and current.t >= pending[0] - 1e-12:
                snapshots.append((current.t, current.f.copy()))
                pending.pop(0)

        logger.info(f"Старт прогона: {n_steps} шагов, dt = {self.config.dt:g}, "
                    f"расщепление {self.config.splitting}, масса {mass0:.6g}")
        record(series, state.t, state.f, self.potential, m_ref, x0)
        take_snapshots(state)

        continuity_max = 0.0
        for _ in range(n_steps):
            previous = state.f
            state = self.step(state)
            if self.grid.n_x > 1:
                residual = continuity_residual(previous, state.f, self.config.dt, face_flux=self.last_x_flux)
                continuity_max = max(continuity_max, float(np.abs(residual).max()))
            take_snapshots(state)
            if state.step_count % record_every == 0 or state.step_count == n_steps:
                record(series, state.t, state.f, self.potential, m_ref, x0)
            if log_every and state.step_count % log_every == 0:
                logger.info(f"Шаг {state.step_count}/{n_steps}, t = {state.t:.4f}")

        drift = abs(mass(state.f) - mass0) / mass0 if mass0 > 0 else 0.0
        logger.info(f"Прогон завершен: t = {state.t:.6g}, относительный дрейф массы {drift:.3e}")
        return RunResult(state=state, series=series, snapshots=snapshots, continuity_max=continuity_max)


def transport_step(f: DistributionField, V: ExternalPotential, dt: float,
                   config: Optional[SolverConfig] = None) -> DistributionField:
    """
    Один явный шаг переноса

    Args:
        f: Функция распределения (d = 1)
        V: Внешний потенциал
        dt: Длительность шага
        config: Схема переноса и запас CFL (по умолчанию upwind1, cfl = 1)

    Returns:
        DistributionField: Новое поле
    """
    config = config or SolverConfig(dt=dt)
    operator = TransportOperator(f.grid, V, config)
    return f.with_values(operator.advance(f.values, dt))


def collision_step(f: DistributionField, dt: float,
                   config: Optional[SolverConfig] = None) -> DistributionField:
    """
    Один неявный столкновительный шаг по каждому столбцу x

    Args:
        f: Функция распределения (d = 1)
        dt: Длительность шага
        config: Веса потока и схема по времени

    Returns:
        DistributionField: Новое поле
    """
    config = config or SolverConfig(dt=dt)
    operator = CollisionOperator(f.grid, config)
    return f.with_values(operator.advance(f.values, dt))


def step(state: SolverState, config: SolverConfig) -> SolverState:
    """Один полный шаг расщепления для состояния state."""
    return FokkerPlanckSolver(state.f.grid, state.potential, config).step(state)


def steady_state_linear(M: float, V: ExternalPotential, grid: PhaseGrid) -> DistributionField:
    """
    Дискретное стационарное состояние m_M = (M/Theta) exp(-p0 - V)

    Theta вычисляется той же квадратурой сетки, поэтому mass(m_M) = M.

    Args:
        M: Масса (> 0)
        V: Удерживающий потенциал
        grid: Сетка фазового пространства

    Returns:
        DistributionField: m_M
    """
    if not M > 0:
        raise ValueError(f"Масса должна быть положительной, получено {M}")
    check_confinement(V, grid)
    spatial = np.exp(-V.on_grid(grid))
    momentum = np.exp(-grid.energy_mesh())
    profile = np.multiply.outer(spatial, momentum)
    theta = float(profile.sum() * grid.cell_volume)
    if not np.isfinite(theta) or theta <= 0.0:
        raise SteadyStateError(f"Нормировка Theta некорректна: {theta}")
    return DistributionField(grid, (M / theta) * profile)


def make_initial_field(kind: str, grid: PhaseGrid, V: ExternalPotential, total_mass: float = 1.0,
                       p_shift: float = 2.0, x_center: float = 0.0, x_width: float = 1.0,
                       support_halfwidth: float = 1.0, rng: Optional[np.random.Generator] = None) -> DistributionField:
    """
    Начальные данные для сценариев

    Args:
        kind: equilibrium, shifted_juttner, gaussian, compact или random
        grid: Сетка (d = 1)
        V: Потенциал (для equilibrium и shifted_juttner)
        total_mass: Масса начальных данных
        p_shift: Сдвиг по импульсу для shifted_juttner и compact
        x_center: Центр по x
        x_width: Ширина гауссова профиля по x
        support_halfwidth: Полуширина носителя для compact
        rng: Генератор для random

    Returns:
        DistributionField: Нормированное начальное поле
    """
    x = grid.x_centers[:, None]
    p = grid.p_centers[None, :]
    if kind == "equilibrium":
        return steady_state_linear(total_mass, V, grid)
    if kind == "shifted_juttner":
        spatial = np.exp(-V.radial(np.abs(x))) if V.confining else np.exp(-0.5 * ((x - x_center) / x_width) ** 2)
        values = spatial * np.exp(-np.sqrt(1.0 + (p - p_shift) ** 2))
    elif kind == "gaussian":
        values = np.exp(-0.5 * ((x - x_center) / x_width) ** 2 - 0.5 * (p - p_shift) ** 2)
    elif kind == "compact":
        bump = np.clip(1.0 - ((x - x_center) / support_halfwidth) ** 2, 0.0, None) ** 2
        values = bump * np.exp(-np.sqrt(1.0 + (p - p_shift) ** 2))
    elif kind == "random":
        rng = rng or np.random.default_rng(0)
        values = rng.random(grid.shape) * np.exp(-0.5 * (x / max(x_width, 1e-12)) ** 2)
    else:
        raise ValueError(f"Неподдерживаемые начальные данные: {kind}")
    total = float(values.sum() * grid.cell_volume)
    if total <= 0.0:
        raise ValueError("Начальные данные имеют нулевую массу на сетке")
    return DistributionField(grid, values * (total_mass / total))


def lightcone_step(grid: PhaseGrid, potential: ExternalPotential, config: SolverConfig) -> float:
    """
    Наибольший dt, при котором численная область зависимости лежит в световом конусе

    Противопотоковый шаг переноса расширяет носитель не более чем на одну ячейку,
    поэтому каждый подшаг переноса должен длиться не меньше dx, а условие
    положительности ограничивает его сверху.

    Returns:
        float: Шаг dt для данной схемы расщепления
    """
    if config.transport_scheme != "upwind1":
        raise ValueError("Согласованный со световым конусом шаг определен только для upwind1")
    operator = TransportOperator(grid, potential, config)
    rate = float(operator.outflow_rate.max())
    substep = min(grid.dx, config.cfl_transport / rate) if rate > 0 else grid.dx
    return substep * (2.0 if config.splitting == "strang" else 1.0)


def run(state: SolverState, config: SolverConfig, m_ref: Optional[DistributionField] = None,
        record_every: int = 10, snapshot_times: Sequence[float] = (), x0: float = 0.0) -> RunResult:
    """Прогон до config.t_end с потенциалом из state.potential."""
    solver = FokkerPlanckSolver(state.f.grid, state.potential, config)
    return solver.run(state, m_ref=m_ref, record_every=record_every,
                      snapshot_times=snapshot_times, x0=x0)
