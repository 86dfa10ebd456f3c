"""
Стационарные состояния систем среднего поля в сферической симметрии (3D):

- VMFP (плазма): -Laplace U = rho,  rho = (M/Theta) e^{-U-V} int e^{-p0} dp
- VNFP (скалярная гравитация Нордстрема), u = -phi0 >= 0:
      -Laplace u = (M/Theta[u]) e^{-V} e^{-2u} int e^{-sqrt(e^{-2u}+p^2)} / sqrt(e^{-2u}+p^2) dp

Уравнение Пуассона решается консервативной конечно-объемной схемой с точным
замыканием монополя на r_max. Импульсные интегралы берутся одной фиксированной
квадратурой MomentumGrid, поэтому найденные неподвижные точки являются точными
критическими точками дискретных функционалов.
"""
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from scipy.integrate import quad
from scipy.linalg import solve_banded
from scipy.special import kve, xlogy

from logger_config import setup_logger
from phase_grid import ExternalPotential, PotentialError

logger = setup_logger("mean_field_steady")

FAR_FIELD_TAGS = ("decaying_1_over_r", "zero")
POISSON_METHODS = ("fv", "green")
SOBOLEV_ETA = (2.0 / np.sqrt(3.0)) * np.pi ** (-2.0 / 3.0)
RADIAL_CONFINEMENT = 1e-12


class ConvergenceError(RuntimeError):
    """Итерация неподвижной точки не сошлась за max_iter."""

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class FixedPointDivergenceError(ConvergenceError):
    """Итерация устойчиво расходится."""


class ContinuationError(ConvergenceError):
    """Продолжение по массе оборвалось; continuation хранит пройденные этапы."""

    def __init__(self, message: str, residual: float, iterations: int, continuation):
        super().__init__(message, residual, iterations)
        self.continuation = continuation


@dataclass(frozen=True)
class RadialGrid:
    """Ячейки r_k = (k + 1/2) dr на [0, r_max], веса 4 pi r_k^2 dr."""
    r_max: float = 10.0
    n_r: int = 400

    def __post_init__(self):
        if not self.r_max > 0 or self.n_r < 2:
            raise ValueError(f"Некорректная радиальная сетка: r_max={self.r_max}, n_r={self.n_r}")

    @property
    def dr(self) -> float:
        return self.r_max / self.n_r

    @property
    def r(self) -> np.ndarray:
        return (np.arange(self.n_r) + 0.5) * self.dr

    @property
    def weights(self) -> np.ndarray:
        return 4.0 * np.pi * self.r ** 2 * self.dr


@dataclass(frozen=True)
class MomentumGrid:
    """
    Квадратура по |p| в R^3: p = sinh s, трапеции по s на [0, s_max]

    Подынтегральная функция четна по s, поэтому правило трапеций сходится
    экспоненциально.
    """
    s_max: float = 5.0
    n_s: int = 100

    def __post_init__(self):
        if not self.s_max > 0 or self.n_s < 2:
            raise ValueError(f"Некорректная импульсная сетка: s_max={self.s_max}, n_s={self.n_s}")

    @property
    def s(self) -> np.ndarray:
        return np.linspace(0.0, self.s_max, self.n_s + 1)

    @property
    def p(self) -> np.ndarray:
        return np.sinh(self.s)

    @property
    def weights(self) -> np.ndarray:
        h = self.s_max / self.n_s
        w = 4.0 * np.pi * self.p ** 2 * np.cosh(self.s) * h
        w[0] *= 0.5
        w[-1] *= 0.5
        return w

    def density_integral(self, a) -> np.ndarray:
        """sum w e^{-sqrt(a^2 + p^2)} для массива a."""
        a = np.asarray(a, dtype=float)
        energy = np.sqrt(a[..., None] ** 2 + self.p ** 2)
        return np.exp(-energy) @ self.weights

    def number_integral(self, a) -> np.ndarray:
        """sum w e^{-sqrt(a^2 + p^2)} / sqrt(a^2 + p^2) для массива a."""
        a = np.asarray(a, dtype=float)
        energy = np.sqrt(a[..., None] ** 2 + self.p ** 2)
        return (np.exp(-energy) / energy) @ self.weights


@dataclass
class RadialField:
    """Сферически-симметричное скалярное поле на RadialGrid."""
    grid: RadialGrid
    values: np.ndarray
    far_field: str = "decaying_1_over_r"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n_r,):
            raise ValueError(f"Форма поля {self.values.shape} не совпадает с сеткой ({self.grid.n_r},)")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("Радиальное поле содержит нечисловые значения")
        if self.far_field not in FAR_FIELD_TAGS:
            raise ValueError(f"Неизвестное поведение на бесконечности: {self.far_field}")

    def integral(self) -> float:
        """int values dx по R^3."""
        return float(np.dot(self.values, self.grid.weights))

    def monopole_spread(self, fraction: float = 0.1) -> float:
        """Относительный разброс r * values на внешней доле сетки."""
        tail = max(2, int(self.grid.n_r * fraction))
        moment = self.grid.r[-tail:] * self.values[-tail:]
        scale = np.max(np.abs(moment))
        return float((moment.max() - moment.min()) / scale) if scale > 0 else 0.0


@dataclass(frozen=True)
class FixedPointConfig:
    """
    Параметры итерации неподвижной точки

    Args:
        damping: Коэффициент релаксации theta в (0, 1]
        tol: Порог sup|u_{n+1} - u_n|
        max_iter: Предел числа итераций
        grid: Радиальная сетка
        momentum: Квадратура по импульсу
        continuation_stages: Число этапов продолжения по массе
        seed_mass: Масса первого этапа продолжения
        divergence_patience: Число подряд идущих итераций с ростом невязки до ошибки
        log_every: Период записи в лог
    """
    damping: float = 0.5
    tol: float = 1e-10
    max_iter: int = 500
    grid: RadialGrid = field(default_factory=RadialGrid)
    momentum: MomentumGrid = field(default_factory=MomentumGrid)
    continuation_stages: int = 5
    seed_mass: float = 0.1
    divergence_patience: int = 8
    log_every: int = 50

    def __post_init__(self):
        if not 0 < self.damping <= 1:
            raise ValueError(f"damping должен лежать в (0, 1], получено {self.damping}")
        if not self.tol > 0:
            raise ValueError(f"tol должен быть положительным, получено {self.tol}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter должен быть >= 1, получено {self.max_iter}")
        if self.continuation_stages < 1:
            raise ValueError("continuation_stages должен быть >= 1")
        if not self.seed_mass > 0:
            raise ValueError("seed_mass должен быть положительным")


@dataclass
class RadialDistribution:
    """f(r, |p|) на RadialGrid x MomentumGrid."""
    grid: RadialGrid
    momentum: MomentumGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        expected = (self.grid.n_r, self.momentum.n_s + 1)
        if self.values.shape != expected:
            raise ValueError(f"Форма распределения {self.values.shape} != {expected}")
        if np.any(self.values < 0.0) or not np.all(np.isfinite(self.values)):
            raise ValueError("Распределение должно быть конечным и неотрицательным")

    def density(self) -> np.ndarray:
        return self.values @ self.momentum.weights

    def mass(self) -> float:
        return float(np.dot(self.density(), self.grid.weights))

    def current(self) -> np.ndarray:
        """
        Радиальная компонента j(r)

        f хранится как функция |p|, интеграл p/p0 по направлениям равен нулю,
        поэтому j = 0 тождественно для любого такого распределения.
        """
        return np.zeros(self.grid.n_r)

    def scaled(self, factor: float) -> "RadialDistribution":
        return RadialDistribution(self.grid, self.momentum, self.values * factor)


class FixedPointStep(NamedTuple):
    iteration: int
    residual: float
    ratio: float


@dataclass
class FixedPointResult:
    field: RadialField
    iterations: int
    contraction_ratio: float
    history: List[FixedPointStep]
    stayed_in_unit_interval: bool = True

    def history_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.history, columns=["iter", "residual", "ratio"])


@dataclass
class SteadyState:
    """Стационарная пара: распределение и поле (U для vmfp, phi0 для vnfp)."""
    kind: str
    mass: float
    potential: ExternalPotential
    distribution: RadialDistribution
    field: RadialField
    fixed_point: FixedPointResult
    elliptic_residual: float
    continuation: Optional["ContinuationResult"] = None

    def profile_frame(self) -> pd.DataFrame:
        name = "U" if self.kind == "vmfp" else "phi0"
        return pd.DataFrame({"r": self.field.grid.r, name: self.field.values,
                             "rho": self.distribution.density()})


def _check_positive(a) -> np.ndarray:
    arr = np.asarray(a, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr <= 0.0):
        raise ValueError(f"Параметр a должен быть положительным, получено {a}")
    return arr


def momentum_number_integral(a: float) -> float:
    """
    int_{R^3} e^{-sqrt(a^2+|p|^2)} / sqrt(a^2+|p|^2) dp адаптивной квадратурой

    Args:
        a: Масса на оболочке (> 0)

    Returns:
        float: Значение интеграла (точно 4 pi a K1(a))
    """
    a = float(_check_positive(a))

    def integrand(p):
        e = np.sqrt(a * a + p * p)
        return 4.0 * np.pi * p * p * np.exp(-e) / e

    value, _ = quad(integrand, 0.0, np.inf, limit=64, epsabs=1e-13, epsrel=1e-12)
    return float(value)


def momentum_density_integral(a: float, d: int = 3) -> float:
    """
    int_{R^d} e^{-sqrt(a^2+|p|^2)} dp для d = 3 или d = 1

    Returns:
        float: Значение (4 pi a^2 K2(a) при d = 3, 2 a K1(a) при d = 1)
    """
    a = float(_check_positive(a))
    if d == 3:
        def integrand(p):
            return 4.0 * np.pi * p * p * np.exp(-np.sqrt(a * a + p * p))
    elif d == 1:
        def integrand(p):
            return 2.0 * np.exp(-np.sqrt(a * a + p * p))
    else:
        raise ValueError(f"Поддерживаются d = 1 и d = 3, получено {d}")
    value, _ = quad(integrand, 0.0, np.inf, limit=64, epsabs=1e-13, epsrel=1e-12)
    return float(value)


def number_integral_closed_form(a) -> np.ndarray:
    a = _check_positive(a)
    return 4.0 * np.pi * a * kve(1, a) * np.exp(-a)


def density_integral_closed_form(a, d: int = 3) -> np.ndarray:
    a = _check_positive(a)
    if d == 3:
        return 4.0 * np.pi * a ** 2 * kve(2, a) * np.exp(-a)
    if d == 1:
        return 2.0 * a * kve(1, a) * np.exp(-a)
    raise ValueError(f"Поддерживаются d = 1 и d = 3, получено {d}")


def _poisson_coefficients(grid: RadialGrid) -> Tuple[np.ndarray, float]:
    r = grid.r
    return r[:-1] * r[1:] / grid.dr, float(r[-1])


def poisson_stiffness_apply(U: np.ndarray, grid: RadialGrid) -> np.ndarray:
    """K U, где K U = g r^2 dr - конечно-объемная форма -Laplace U = g."""
    face, outer = _poisson_coefficients(grid)
    flux = np.zeros(grid.n_r + 1)
    flux[1:-1] = face * np.diff(U)
    flux[-1] = -outer * U[-1]
    return -(flux[1:] - flux[:-1])


def poisson_radial(g: RadialField, method: str = "fv") -> RadialField:
    """
    Решение -Laplace U = g с U -> 0 на бесконечности

    fv: консервативная схема с потоком r_k r_{k+1} (U_{k+1} - U_k)/dr, нулевым
    потоком в центре и внешним потоком -r_{n-1} U_{n-1} (точный монополь).
    green: U(r) = (1/r) int_0^r s^2 g ds + int_r^inf s g ds по средним точкам.

    Args:
        g: Источник
        method: fv или green

    Returns:
        RadialField: Потенциал U
    """
    if method not in POISSON_METHODS:
        raise ValueError(f"Неподдерживаемый метод Пуассона: {method}")
    grid = g.grid
    r, dr = grid.r, grid.dr
    source = g.values

    if method == "green":
        inner_density = source * r ** 2 * dr
        enclosed = np.cumsum(inner_density) - 0.5 * inner_density
        outer_density = source * r * dr
        exterior = np.cumsum(outer_density[::-1])[::-1] - 0.5 * outer_density
        return RadialField(grid, enclosed / r + exterior)

    face, outer = _poisson_coefficients(grid)
    n = grid.n_r
    ab = np.zeros((3, n))
    main = np.zeros(n)
    main[:-1] += face
    main[1:] += face
    main[-1] += outer
    ab[0, 1:] = -face
    ab[1, :] = main
    ab[2, :-1] = -face
    U = solve_banded((1, 1), ab, source * r ** 2 * dr)
    return RadialField(grid, U)


def poisson_residual(U: RadialField, g: RadialField) -> float:
    """Взвешенная L2-норма невязки -Laplace U - g."""
    grid = U.grid
    laplace = poisson_stiffness_apply(U.values, grid) / (grid.r ** 2 * grid.dr)
    return float(np.sqrt(np.dot((laplace - g.values) ** 2, grid.weights)))


def field_energy(phi: RadialField) -> float:
    """1/2 int |grad phi|^2 dx, включая внешний хвост монополя."""
    grid = phi.grid
    face, outer = _poisson_coefficients(grid)
    values = phi.values
    return float(2.0 * np.pi * (np.dot(face, np.diff(values) ** 2) + outer * values[-1] ** 2))


def _radial_potential(V: ExternalPotential, grid: RadialGrid) -> np.ndarray:
    if not V.confining:
        raise PotentialError("Стационарные задачи требуют удерживающего потенциала")
    values = V.radial(grid.r)
    weight = float(np.exp(-(values[-1] - values.min())))
    if weight > RADIAL_CONFINEMENT:
        logger.warning(f"e^(-V(r_max)) = {weight:.3e} больше {RADIAL_CONFINEMENT:.0e}: увеличьте r_max")
    return values


def _iterate(update, initial: np.ndarray, config: FixedPointConfig, label: str,
             unit_interval: bool = False) -> FixedPointResult:
    grid = config.grid
    current = initial.copy()
    history: List[FixedPointStep] = []
    previous_residual = None
    ratio = 0.0
    growth = 0
    inside = True

    for iteration in range(1, config.max_iter + 1):
        target = update(current)
        new = (1.0 - config.damping) * current + config.damping * target
        residual = float(np.max(np.abs(new - current)))
        ratio = residual / previous_residual if previous_residual else 0.0
        history.append(FixedPointStep(iteration, residual, ratio))
        current = new
        if unit_interval and (current.min() < -1e-14 or current.max() > 1.0):
            inside = False

        if config.log_every and iteration % config.log_every == 0:
            logger.info(f"{label}: итерация {iteration}, невязка {residual:.3e}, отношение {ratio:.4f}")
        if residual < config.tol:
            logger.info(f"{label}: сходимость за {iteration} итераций, невязка {residual:.3e}")
            return FixedPointResult(RadialField(grid, current), iteration, ratio, history, inside)
        if not np.all(np.isfinite(current)):
            raise FixedPointDivergenceError(
                f"{label}: итерация дала нечисловые значения; уменьшите M или увеличьте релаксацию",
                residual, iteration)

        growth = growth + 1 if previous_residual is not None and ratio > 1.0 else 0
        if growth >= config.divergence_patience:
            raise FixedPointDivergenceError(
                f"{label}: невязка растет {growth} итераций подряд (отношение {ratio:.3f}); "
                f"уменьшите M или увеличьте релаксацию", residual, iteration)
        previous_residual = residual

    raise ConvergenceError(
        f"{label}: нет сходимости за {config.max_iter} итераций, невязка {history[-1].residual:.3e}",
        history[-1].residual, config.max_iter)


def _vmfp_density(U: np.ndarray, V_r: np.ndarray, M: float, config: FixedPointConfig) -> np.ndarray:
    shape = np.exp(-(U + V_r) + np.min(U + V_r))
    theta = float(np.dot(shape, config.grid.weights))
    return M * shape / theta


def vmfp_steady(M: float, V: ExternalPotential, config: Optional[FixedPointConfig] = None) -> SteadyState:
    """
    Стационарное состояние VMFP: U <- (1 - theta) U + theta * poisson(rho[U])

    Args:
        M: Масса (> 0)
        V: Удерживающий потенциал
        config: Параметры итерации

    Returns:
        SteadyState: m_M на радиальной сетке и U
    """
    if not M > 0:
        raise ValueError(f"Масса должна быть положительной, получено {M}")
    config = config or FixedPointConfig()
    grid, momentum = config.grid, config.momentum
    V_r = _radial_potential(V, grid)

    def update(U):
        rho = _vmfp_density(U, V_r, M, config)
        return poisson_radial(RadialField(grid, rho)).values

    logger.info(f"VMFP: M = {M:g}, потенциал {V.kind}, damping = {config.damping}")
    result = _iterate(update, np.zeros(grid.n_r), config, "VMFP")
    U = result.field

    rho = _vmfp_density(U.values, V_r, M, config)
    juttner = np.exp(-np.sqrt(1.0 + momentum.p ** 2))
    profile = np.outer(rho / float(juttner @ momentum.weights), juttner)
    distribution = RadialDistribution(grid, momentum, profile)
    residual = poisson_residual(U, RadialField(grid, distribution.density()))
    return SteadyState("vmfp", M, V, distribution, U, result, residual)


def _vnfp_source(u: np.ndarray, V_r: np.ndarray, M: float, config: FixedPointConfig) -> np.ndarray:
    momentum = config.momentum
    a = np.exp(-u)
    weight = np.exp(-(V_r - V_r.min()))
    theta = float(np.dot(weight * momentum.density_integral(a), config.grid.weights))
    return (M / theta) * weight * np.exp(-2.0 * u) * momentum.number_integral(a)


def vnfp_fixed_point(M: float, V: ExternalPotential, config: Optional[FixedPointConfig] = None,
                     initial: Optional[np.ndarray] = None) -> FixedPointResult:
    """
    Неподвижная точка u = K[u] для u = -phi0

    Theta[u] пересчитывается на каждой итерации. Отношение сжатия
    sup|u_{n+1} - u_n| / sup|u_n - u_{n-1}| сохраняется в истории.

    Args:
        M: Масса (> 0)
        V: Удерживающий потенциал
        config: Параметры итерации
        initial: Начальное приближение (по умолчанию u = 0)

    Returns:
        FixedPointResult: u, число итераций, последнее отношение сжатия
    """
    if not M > 0:
        raise ValueError(f"Масса должна быть положительной, получено {M}")
    config = config or FixedPointConfig()
    grid = config.grid
    V_r = _radial_potential(V, grid)

    def update(u):
        return poisson_radial(RadialField(grid, _vnfp_source(u, V_r, M, config))).values

    start = np.zeros(grid.n_r) if initial is None else np.asarray(initial, dtype=float)
    logger.info(f"VNFP: M = {M:g}, потенциал {V.kind}, damping = {config.damping}")
    return _iterate(update, start, config, f"VNFP(M={M:g})", unit_interval=True)


class ContinuationStage(NamedTuple):
    mass: float
    iterations: int
    ratio: float
    residual: float
    converged: bool


@dataclass
class ContinuationResult:
    target_mass: float
    fixed_point: Optional[FixedPointResult]
    stages: List[ContinuationStage]
    success: bool
    failed_mass: Optional[float] = None

    def stages_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.stages, columns=list(ContinuationStage._fields))


def vnfp_continuation(M_target: float, V: ExternalPotential, config: Optional[FixedPointConfig] = None,
                      stages: Optional[int] = None) -> ContinuationResult:
    """
    Продолжение по массе от seed_mass до M_target с теплым стартом

    Returns:
        ContinuationResult: success=False и failed_mass, если этап не сошелся
    """
    config = config or FixedPointConfig()
    stages = stages or config.continuation_stages
    start_mass = min(config.seed_mass, M_target)
    masses = np.geomspace(start_mass, M_target, stages) if stages > 1 else np.array([M_target])

    u = None
    result: Optional[FixedPointResult] = None
    log: List[ContinuationStage] = []
    for stage_mass in masses:
        try:
            result = vnfp_fixed_point(float(stage_mass), V, config, initial=u)
        except ConvergenceError as e:
            logger.error(f"Продолжение оборвалось на M = {stage_mass:.4g}: {str(e)}")
            log.append(ContinuationStage(float(stage_mass), e.iterations, float("nan"), e.residual, False))
            return ContinuationResult(M_target, result, log, success=False, failed_mass=float(stage_mass))
        u = result.field.values
        last = result.history[-1].residual
        log.append(ContinuationStage(float(stage_mass), result.iterations, result.contraction_ratio, last, True))
    return ContinuationResult(M_target, result, log, success=True)


def vnfp_distribution(u: RadialField, M: float, V: ExternalPotential, momentum: MomentumGrid) -> RadialDistribution:
    """m_M = (M/Theta) exp(-sqrt(e^{-2u} + p^2) - V) с нормировкой той же квадратурой."""
    grid = u.grid
    V_r = V.radial(grid.r)
    energy = np.sqrt(np.exp(-2.0 * u.values)[:, None] + momentum.p[None, :] ** 2)
    shape = np.exp(-(V_r - V_r.min()))[:, None] * np.exp(-energy)
    total = float(grid.weights @ (shape @ momentum.weights))
    return RadialDistribution(grid, momentum, shape * (M / total))


def vnfp_steady(M: float, V: ExternalPotential, config: Optional[FixedPointConfig] = None) -> SteadyState:
    """
    Стационарное состояние VNFP: phi0 = -u и m_M

    При M больше seed_mass используется продолжение по массе; обрыв
    продолжения поднимает ConvergenceError.

    Returns:
        SteadyState: m_M и phi0
    """
    config = config or FixedPointConfig()
    continuation = None
    if M <= config.seed_mass or config.continuation_stages == 1:
        result = vnfp_fixed_point(M, V, config)
    else:
        continuation = vnfp_continuation(M, V, config)
        if not continuation.success:
            last = continuation.stages[-1]
            raise ContinuationError(
                f"Продолжение VNFP до M = {M:g} оборвалось на M = {continuation.failed_mass:.4g}",
                last.residual, last.iterations, continuation)
        result = continuation.fixed_point

    u = result.field
    distribution = vnfp_distribution(u, M, V, config.momentum)
    phi0 = RadialField(u.grid, -u.values)
    residual = vnfp_elliptic_residual(u, distribution)
    return SteadyState("vnfp", M, V, distribution, phi0, result, residual, continuation)


def vnfp_elliptic_residual(u: RadialField, f: RadialDistribution) -> float:
    """Невязка -Laplace u = e^{-2u} int f / sqrt(e^{-2u} + p^2) dp."""
    energy = np.sqrt(np.exp(-2.0 * u.values)[:, None] + f.momentum.p[None, :] ** 2)
    source = np.exp(-2.0 * u.values) * ((f.values / energy) @ f.momentum.weights)
    return poisson_residual(u, RadialField(u.grid, source))


def lambda_phi(p, phi) -> np.ndarray:
    """Матрица Lambda_phi = (e^{4 phi} I + e^{2 phi} p p^T) / sqrt(e^{2 phi} + |p|^2)."""
    p = np.asarray(p, dtype=float)
    phi = np.asarray(phi, dtype=float)
    d = p.shape[-1]
    scale = np.exp(2.0 * phi)
    root = np.sqrt(scale + np.sum(p * p, axis=-1))
    outer = p[..., :, None] * p[..., None, :]
    return ((scale ** 2)[..., None, None] * np.eye(d) + scale[..., None, None] * outer) / root[..., None, None]


def vnfp_static_residual(state: SteadyState) -> Tuple[float, float]:
    """
    Невязки статического уравнения VNFP для собранной пары (m_M, phi0)

    Returns:
        Tuple: (нечетная по p часть переноса p.(grad alpha + alpha grad V) / alpha,
                столкновительный поток Lambda grad_p f + e^{2 phi} p f относительно f)
    """
    f = state.distribution
    phi = state.field.values
    grid = f.grid
    p = f.momentum.p
    energy = np.sqrt(np.exp(2.0 * phi)[:, None] + p[None, :] ** 2)
    alpha = f.values * np.exp(energy)
    log_alpha = np.log(alpha.mean(axis=1))
    V_r = state.potential.radial(grid.r)
    transport = np.gradient(log_alpha + V_r, grid.dr)
    transport_residual = float(np.max(np.abs(transport)))

    vectors = np.stack([p, np.zeros_like(p), np.zeros_like(p)], axis=-1)
    grad_p = -(vectors / energy[..., None]) * f.values[..., None]
    matrix = lambda_phi(vectors[None, :, :], phi[:, None])
    flux = np.einsum("...ij,...j->...i", matrix, grad_p) + np.exp(2.0 * phi)[:, None, None] * vectors * f.values[..., None]
    scale = np.maximum(f.values, np.finfo(float).tiny)
    collision_residual = float(np.max(np.abs(flux[..., 0]) / (scale * (1.0 + p[None, :] ** 2))))
    return transport_residual, collision_residual


def _matter_entropy(f: RadialDistribution, V_r: np.ndarray, energy: np.ndarray) -> float:
    integrand = f.values * (energy + V_r[:, None]) + xlogy(f.values, f.values)
    return float(f.grid.weights @ (integrand @ f.momentum.weights))


def reduced_entropy_vmfp(f: RadialDistribution, V: ExternalPotential) -> float:
    """K_red = int f (p0 + U/2 + V + log f), U = poisson(rho[f])."""
    energy = np.broadcast_to(np.sqrt(1.0 + f.momentum.p ** 2), f.values.shape)
    rho = RadialField(f.grid, f.density())
    U = poisson_radial(rho)
    return _matter_entropy(f, V.radial(f.grid.r), energy) + 0.5 * float(f.grid.weights @ (rho.values * U.values))


def vmfp_entropy(f: RadialDistribution, V: ExternalPotential) -> float:
    """Q[f] + 1/2 int |E|^2, E = -grad U."""
    energy = np.broadcast_to(np.sqrt(1.0 + f.momentum.p ** 2), f.values.shape)
    U = poisson_radial(RadialField(f.grid, f.density()))
    return _matter_entropy(f, V.radial(f.grid.r), energy) + field_energy(U)


def energy_vnfp(f: RadialDistribution, phi: RadialField, V: ExternalPotential) -> float:
    """E(f, phi) = int f (sqrt(e^{2 phi} + p^2) + V + log f) + 1/2 int |grad phi|^2."""
    energy = np.sqrt(np.exp(2.0 * phi.values)[:, None] + f.momentum.p[None, :] ** 2)
    return _matter_entropy(f, V.radial(f.grid.r), energy) + field_energy(phi)


def entropy_lower_bound(M: float, V: ExternalPotential, grid: Optional[RadialGrid] = None,
                        momentum: Optional[MomentumGrid] = None) -> float:
    """M log(M / int e^{-|p| - V}) той же квадратурой."""
    grid = grid or RadialGrid()
    momentum = momentum or MomentumGrid()
    spatial = float(grid.weights @ np.exp(-V.radial(grid.r)))
    kinetic = float(momentum.weights @ np.exp(-momentum.p))
    return float(M * np.log(M / (spatial * kinetic)))


def sobolev_check(phi: RadialField) -> Tuple[float, float, bool]:
    """
    Дискретное неравенство ||phi||_6 <= eta ||grad phi||_2

    Returns:
        Tuple: (||phi||_6, eta ||grad phi||_2, passed)
    """
    grid = phi.grid
    values = phi.values
    tail_moment = grid.r[-1] * values[-1]
    l6 = (float(grid.weights @ values ** 6) + 4.0 * np.pi * tail_moment ** 6 / (3.0 * grid.r_max ** 3)) ** (1.0 / 6.0)
    gradient = np.sqrt(2.0 * field_energy(phi))
    bound = SOBOLEV_ETA * gradient
    return l6, bound, bool(l6 <= bound)


@dataclass
class CertificateReport:
    """Итог проверки минимальности стационарной пары."""
    kind: str
    base_value: float
    epsilons: Tuple[float, ...]
    values: np.ndarray
    labels: List[str]
    first_variation: np.ndarray
    second_difference: float
    # допуск на |первую вариацию| относительно max(|base_value|, 1)
    stationarity_tol: float = 1e-2

    @property
    def gaps(self) -> np.ndarray:
        return self.values - self.base_value

    @property
    def min_gap(self) -> float:
        return float(self.gaps.min()) if self.gaps.size else float("inf")

    @property
    def stationary(self) -> bool:
        limit = self.stationarity_tol * max(abs(self.base_value), 1.0)
        return bool(np.all(np.abs(self.first_variation) <= limit))

    @property
    def passed(self) -> bool:
        return self.min_gap > 0.0 and self.second_difference > 0.0 and self.stationary

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"perturbation": self.labels, "value": self.values, "gap": self.gaps})


def _perturb_distribution(f: RadialDistribution, eta: np.ndarray, eps: float) -> RadialDistribution:
    values = f.values * (1.0 + eps * eta)
    perturbed = RadialDistribution(f.grid, f.momentum, values)
    return perturbed.scaled(f.mass() / perturbed.mass())


def _bump(grid: RadialGrid, radius: float) -> np.ndarray:
    r = grid.r
    return np.where(r < radius, (1.0 - (r / radius) ** 2) ** 3, 0.0)


def _field_bumps(rng: np.random.Generator, n: int, scale: float, r_max: float) -> List[Tuple[float, float]]:
    """Пары (амплитуда, радиус); знак и модуль амплитуды выбираются отдельно, |амплитуда| >= scale/2."""
    return [(scale * rng.choice((-1.0, 1.0)) * rng.uniform(0.5, 1.0), rng.uniform(0.5, 0.5 * r_max))
            for _ in range(n)]


def minimizer_certificate(state: SteadyState, n_perturbations: int = 100,
                          epsilons: Tuple[float, ...] = (0.1, 0.5),
                          rng: Optional[np.random.Generator] = None, n_jobs: int = 1) -> CertificateReport:
    """
    Сравнение функционала в стационарной паре и в возмущениях

    Возмущения f сохраняют массу: f_eps = m (1 + eps eta) с перенормировкой.
    Для vnfp дополнительно возмущается phi0 компактными функциями
    (1 - (r/R)^2)^3 при фиксированном f.

    Args:
        state: Сошедшееся стационарное состояние
        n_perturbations: Число случайных направлений eta
        epsilons: Амплитуды возмущений (|eps| < 1)
        rng: Генератор случайных чисел
        n_jobs: Число процессов joblib

    Returns:
        CertificateReport: Значения функционала и вариации
    """
    rng = rng or np.random.default_rng(0)
    f = state.distribution
    V = state.potential
    grid = f.grid

    if state.kind == "vmfp":
        def functional(dist: RadialDistribution, phi: Optional[RadialField] = None) -> float:
            return reduced_entropy_vmfp(dist, V)
    else:
        def functional(dist: RadialDistribution, phi: Optional[RadialField] = None) -> float:
            return energy_vnfp(dist, phi if phi is not None else state.field, V)

    base = functional(f)
    directions = [rng.uniform(-1.0, 1.0, size=f.values.shape) for _ in range(n_perturbations)]
    jobs = [(eta, eps) for eta in directions for eps in epsilons]
    values = Parallel(n_jobs=n_jobs)(
        delayed(functional)(_perturb_distribution(f, eta, eps)) for eta, eps in jobs
    )
    labels = [f"f:{i // len(epsilons)}:eps={eps}" for i, (_, eps) in enumerate(jobs)]

    if state.kind == "vnfp":
        scale = max(float(np.max(np.abs(state.field.values))), 1e-3)
        bumps = _field_bumps(rng, n_perturbations, scale, grid.r_max)
        field_jobs = [(amp, radius, eps) for amp, radius in bumps for eps in epsilons]
        values += Parallel(n_jobs=n_jobs)(
            delayed(functional)(f, RadialField(grid, state.field.values + eps * amp * _bump(grid, radius)))
            for amp, radius, eps in field_jobs
        )
        labels += [f"phi:{i // len(epsilons)}:eps={eps}" for i, (_, _, eps) in enumerate(field_jobs)]

    eta = directions[0] if directions else rng.uniform(-1.0, 1.0, size=f.values.shape)
    small = np.array([1e-2, 1e-3])
    first_variation = np.array([(functional(_perturb_distribution(f, eta, e)) - base) / e for e in small])
    h = 1e-2
    second = (functional(_perturb_distribution(f, eta, h)) + functional(_perturb_distribution(f, eta, -h))
              - 2.0 * base) / h ** 2

    report = CertificateReport(state.kind, base, tuple(epsilons), np.asarray(values, dtype=float),
                               labels, first_variation, float(second))
    logger.info(f"Сертификат {state.kind} (M = {state.mass:g}): {len(values)} возмущений, "
                f"минимальный зазор {report.min_gap:.3e}, вторая разность {report.second_difference:.3e}")
    return report
