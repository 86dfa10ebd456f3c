"""
Дискретизация фазового пространства: равномерные сетки с центрами ячеек,
функция распределения на сетке, внешний потенциал и моменты rho, j.
"""
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy.interpolate import CubicSpline

from kinematics import energy, rel_velocity
from logger_config import setup_logger

logger = setup_logger("phase_grid")

POTENTIAL_KINDS = ("free", "harmonic", "quartic", "tabulated")
CONFINEMENT_TOLERANCE = 1e-12


class GridError(ValueError):
    """Некорректные параметры сетки или несовместимое поле."""


class PotentialError(ValueError):
    """Потенциал не удерживает массу на данной сетке."""


@dataclass(frozen=True)
class PhaseGrid:
    """
    Равномерная сетка с центрами ячеек в x и p

    Ячейки: x_i = x_min + (i + 1/2) dx, p_j = -p_max + (j + 1/2) dp по каждой оси.
    Значения хранятся массивом формы (n_x,)*d + (n_p,)*d, x-оси первыми.
    """
    d: int = 1
    x_min: float = -8.0
    x_max: float = 8.0
    p_max: float = 8.0
    n_x: int = 128
    n_p: int = 128

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise GridError(f"Размерность d должна быть 1, 2 или 3, получено {self.d}")
        if not self.x_max > self.x_min:
            raise GridError(f"x_max ({self.x_max}) должен быть больше x_min ({self.x_min})")
        if not self.p_max > 0:
            raise GridError(f"p_max должен быть положительным, получено {self.p_max}")
        if self.n_x < 1 or self.n_p < 2:
            raise GridError(f"Недопустимое число ячеек: n_x={self.n_x}, n_p={self.n_p}")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n_x

    @property
    def dp(self) -> float:
        return 2.0 * self.p_max / self.n_p

    @property
    def x_centers(self) -> np.ndarray:
        return self.x_min + (np.arange(self.n_x) + 0.5) * self.dx

    @property
    def p_centers(self) -> np.ndarray:
        return -self.p_max + (np.arange(self.n_p) + 0.5) * self.dp

    @property
    def x_faces(self) -> np.ndarray:
        return self.x_min + np.arange(self.n_x + 1) * self.dx

    @property
    def p_faces(self) -> np.ndarray:
        return -self.p_max + np.arange(self.n_p + 1) * self.dp

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.n_x,) * self.d + (self.n_p,) * self.d

    @property
    def spatial_shape(self) -> Tuple[int, ...]:
        return (self.n_x,) * self.d

    @property
    def momentum_axes(self) -> Tuple[int, ...]:
        return tuple(range(self.d, 2 * self.d))

    @property
    def cell_volume(self) -> float:
        return self.dx ** self.d * self.dp ** self.d

    def momentum_mesh(self) -> np.ndarray:
        """Векторы импульса в центрах ячеек, форма (n_p,)*d + (d,)."""
        axes = np.meshgrid(*([self.p_centers] * self.d), indexing="ij")
        return np.stack(axes, axis=-1)

    def position_mesh(self) -> np.ndarray:
        """Координаты центров пространственных ячеек, форма (n_x,)*d + (d,)."""
        axes = np.meshgrid(*([self.x_centers] * self.d), indexing="ij")
        return np.stack(axes, axis=-1)

    def energy_mesh(self) -> np.ndarray:
        """p0 в центрах импульсных ячеек, форма (n_p,)*d."""
        return np.asarray(energy(self.momentum_mesh()))

    def describe(self) -> dict:
        return {
            "d": self.d,
            "x_min": self.x_min,
            "x_max": self.x_max,
            "p_max": self.p_max,
            "n_x": self.n_x,
            "n_p": self.n_p,
            "dx": self.dx,
            "dp": self.dp,
        }


@dataclass
class DistributionField:
    """Неотрицательная функция распределения f(x, p) на PhaseGrid."""
    grid: PhaseGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=float)
        if values.shape != self.grid.shape:
            raise GridError(
                f"Форма значений {values.shape} не совпадает с формой сетки {self.grid.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise GridError("Функция распределения содержит нечисловые значения")
        if values.size and values.min() < 0.0:
            raise GridError(f"Функция распределения отрицательна: min f = {values.min():.3e}")
        self.values = values

    def copy(self) -> "DistributionField":
        return DistributionField(self.grid, self.values.copy())

    def with_values(self, values: np.ndarray) -> "DistributionField":
        return DistributionField(self.grid, values)


@dataclass
class ExternalPotential:
    """
    Радиально-симметричный внешний потенциал V(x) = profile(|x|)

    Args:
        kind: Тег встроенного потенциала (free, harmonic, quartic, tabulated)
        profile: V как функция радиуса
        derivative: dV/dr как функция радиуса
        params: Параметры, из которых построен потенциал
    """
    kind: str
    profile: Callable[[np.ndarray], np.ndarray]
    derivative: Callable[[np.ndarray], np.ndarray]
    params: dict = field(default_factory=dict)

    @property
    def confining(self) -> bool:
        return self.kind != "free"

    def radial(self, r) -> np.ndarray:
        return np.asarray(self.profile(np.asarray(r, dtype=float)), dtype=float)

    def radial_derivative(self, r) -> np.ndarray:
        return np.asarray(self.derivative(np.asarray(r, dtype=float)), dtype=float)

    def value(self, x) -> np.ndarray:
        """V в точках x формы (..., d)."""
        x = np.asarray(x, dtype=float)
        return self.radial(np.sqrt(np.sum(x * x, axis=-1)))

    def gradient(self, x) -> np.ndarray:
        """grad V = V'(r) x / r, форма (..., d)."""
        x = np.asarray(x, dtype=float)
        r = np.sqrt(np.sum(x * x, axis=-1))
        dv = self.radial_derivative(r)
        safe = np.where(r > 0.0, r, 1.0)
        return np.where((r > 0.0)[..., None], (dv / safe)[..., None] * x, 0.0)

    def on_grid(self, grid: PhaseGrid) -> np.ndarray:
        """V в центрах пространственных ячеек, форма (n_x,)*d."""
        return self.value(grid.position_mesh())

    def describe(self) -> dict:
        info = {"kind": self.kind}
        info.update({k: v for k, v in self.params.items() if k != "table"})
        return info


def make_potential(kind: str = "harmonic", strength: float = 1.0,
                   table: Optional[Tuple[Sequence[float], Sequence[float]]] = None) -> ExternalPotential:
    """
    Построение встроенного потенциала

    Args:
        kind: free, harmonic (s r^2/2), quartic (s r^4/4) или tabulated
        strength: Множитель s для harmonic и quartic
        table: Пара (r, V) для tabulated; профиль интерполируется кубическим сплайном

    Returns:
        ExternalPotential: Потенциал
    """
    if kind not in POTENTIAL_KINDS:
        raise PotentialError(f"Неподдерживаемый потенциал: {kind}")
    if kind in ("harmonic", "quartic") and not strength > 0:
        raise PotentialError(f"Сила потенциала должна быть положительной, получено {strength}")

    if kind == "free":
        return ExternalPotential(kind, lambda r: np.zeros_like(r), lambda r: np.zeros_like(r))
    if kind == "harmonic":
        return ExternalPotential(kind, lambda r: 0.5 * strength * r ** 2,
                                 lambda r: strength * r, {"strength": strength})
    if kind == "quartic":
        return ExternalPotential(kind, lambda r: 0.25 * strength * r ** 4,
                                 lambda r: strength * r ** 3, {"strength": strength})

    if table is None:
        raise PotentialError("Для tabulated нужна таблица (r, V)")
    r_nodes = np.asarray(table[0], dtype=float)
    v_nodes = np.asarray(table[1], dtype=float)
    if r_nodes.ndim != 1 or r_nodes.shape != v_nodes.shape or r_nodes.size < 4:
        raise PotentialError("Таблица потенциала должна содержать не менее 4 пар (r, V)")
    if np.any(np.diff(r_nodes) <= 0) or r_nodes[0] < 0:
        raise PotentialError("Узлы r таблицы должны быть неотрицательными и возрастать")
    spline = CubicSpline(r_nodes, v_nodes, bc_type="natural", extrapolate=True)
    slope = spline.derivative()
    return ExternalPotential(kind, spline, slope, {"nodes": int(r_nodes.size), "table": table})


def confinement_weight(V: ExternalPotential, grid: PhaseGrid) -> float:
    """
    Относительный вес e^{-V} на границе пространственной области

    Returns:
        float: max по граничным ячейкам exp(-(V_edge - V_min))
    """
    values = V.on_grid(grid)
    v_min = values.min()
    edge = np.concatenate([np.take(values, [0, -1], axis=axis).ravel() for axis in range(grid.d)])
    return float(np.exp(-(edge.min() - v_min)))


def check_confinement(V: ExternalPotential, grid: PhaseGrid,
                      tolerance: float = CONFINEMENT_TOLERANCE) -> float:
    """
    Проверка интегрируемости e^{-V} на протяженности сетки

    Args:
        V: Потенциал
        grid: Сетка
        tolerance: Допустимый относительный вес на границе

    Returns:
        float: Пространственный интеграл e^{-V} по сетке
    """
    if not V.confining:
        raise PotentialError("Потенциал free не удерживает массу: e^{-V} не интегрируема")
    integral = float(np.sum(np.exp(-V.on_grid(grid))) * grid.dx ** grid.d)
    if not np.isfinite(integral) or integral <= 0.0:
        raise PotentialError(f"Интеграл e^(-V) по сетке некорректен: {integral}")
    weight = confinement_weight(V, grid)
    if weight > tolerance:
        logger.warning(
            f"Вес e^(-V) на границе сетки {weight:.3e} превышает {tolerance:.0e}: "
            f"расширьте область по x"
        )
    return integral


def momentum_tail_bound(grid: PhaseGrid) -> float:
    """Отношение веса Юттнера на обрезке p_max к его максимуму e^{-1}."""
    return float(np.exp(-(np.sqrt(1.0 + grid.p_max ** 2) - 1.0)))


def density(f: DistributionField) -> np.ndarray:
    """
    Плотность rho(x) = sum_p f dp^d

    Args:
        f: Функция распределения

    Returns:
        np.ndarray: rho формы (n_x,)*d
    """
    grid = f.grid
    return f.values.sum(axis=grid.momentum_axes) * grid.dp ** grid.d


def current(f: DistributionField) -> np.ndarray:
    """
    Ток j(x) = sum_p v(p) f dp^d, v = p/p0

    Args:
        f: Функция распределения

    Returns:
        np.ndarray: j формы (n_x,)*d + (d,)
    """
    grid = f.grid
    velocity = rel_velocity(grid.momentum_mesh())
    flux = np.tensordot(f.values, velocity, axes=(grid.momentum_axes, tuple(range(grid.d))))
    return flux * grid.dp ** grid.d


def mass(f: DistributionField) -> float:
    """Полная масса по квадратуре средней точки."""
    return float(f.values.sum() * f.grid.cell_volume)
