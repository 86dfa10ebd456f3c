"""
Функционалы решения: масса, свободная энергия Q и Q+, диссипация энтропии,
нижняя оценка энтропийного зазора, chi^2, невязка уравнения неразрывности
и проверка светового конуса.
"""
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.integrate import trapezoid
from scipy.special import xlogy

from kinematics import diffusion_matrix
from logger_config import setup_logger
from phase_grid import DistributionField, ExternalPotential, current, density, mass

logger = setup_logger("diagnostics")

SERIES_COLUMNS = ["t", "mass", "Q", "Qplus", "dissipation", "chi2", "support_radius"]
SUPPORT_THRESHOLD = 1e-14
MASS_MATCH_TOLERANCE = 1e-8
SQRT_FLOOR = 1e-300


class MassMismatchError(ValueError):
    """Массы сравниваемых распределений не совпадают."""


class DiagnosticRecord(NamedTuple):
    t: float
    mass: float
    Q: float
    Qplus: float
    dissipation: float
    chi2: float
    support_radius: float


class LightconeResult(NamedTuple):
    passed: bool
    margin: float


@dataclass
class DiagnosticSeries:
    """Записи диагностик с возрастающим временем."""
    records: List[DiagnosticRecord] = field(default_factory=list)

    def append(self, rec: DiagnosticRecord):
        if self.records and not rec.t > self.records[-1].t:
            raise ValueError(
                f"Время записи {rec.t} не больше предыдущего {self.records[-1].t}"
            )
        self.records.append(rec)

    def __len__(self) -> int:
        return len(self.records)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records], dtype=float)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.records, columns=SERIES_COLUMNS)

    def to_csv(self, path: str, float_format: str = "%.17g"):
        self.to_frame().to_csv(path, index=False, float_format=float_format)


def _integrand_sum(values: np.ndarray, f: DistributionField) -> float:
    return float(values.sum() * f.grid.cell_volume)


def _energy_plus_potential(f: DistributionField, V: ExternalPotential) -> np.ndarray:
    grid = f.grid
    return np.add.outer(V.on_grid(grid), grid.energy_mesh())


def free_energy(f: DistributionField, V: ExternalPotential) -> float:
    """
    Свободная энергия Q[f] = sum f (p0 + V + log f) по квадратуре сетки

    Args:
        f: Функция распределения
        V: Внешний потенциал

    Returns:
        float: Q (f log f = 0 при f = 0)
    """
    values = f.values
    return _integrand_sum(values * _energy_plus_potential(f, V) + xlogy(values, values), f)


def free_energy_plus(f: DistributionField, V: ExternalPotential) -> float:
    """Q+[f] с log+ f = max(0, log f)."""
    values = f.values
    log_plus = np.log(np.maximum(values, 1.0))
    return _integrand_sum(values * (_energy_plus_potential(f, V) + log_plus), f)


def entropy_dissipation(f: DistributionField) -> float:
    """
    Диссипация 4 sum D grad sqrt(f/J) . grad sqrt(f/J) J, J = e^{-p0}

    Градиент по импульсу берется центральными разностями, под корнем
    f ограничена снизу 1e-300.

    Args:
        f: Функция распределения

    Returns:
        float: Неотрицательная диссипация
    """
    grid = f.grid
    energy = grid.energy_mesh()
    root = np.sqrt(np.maximum(f.values, SQRT_FLOOR)) * np.exp(0.5 * energy)
    grads = np.gradient(root, grid.dp, axis=grid.momentum_axes)
    if grid.d == 1:
        grads = [grads]
    gradient = np.stack(grads, axis=-1)
    matrix = diffusion_matrix(grid.momentum_mesh())
    quadratic = np.einsum("...i,...ij,...j->...", gradient, matrix, gradient)
    return _integrand_sum(4.0 * quadratic * np.exp(-energy), f)


def entropy_gap_lower_bound(f: DistributionField, m: DistributionField) -> Tuple[float, float]:
    """
    Обе части неравенства Q[f] - Q[m] >= 1/2 sum (sqrt f - sqrt m)^2

    Args:
        f: Функция распределения
        m: Равновесие той же массы

    Returns:
        Tuple: (lhs, rhs)
    """
    mass_f, mass_m = mass(f), mass(m)
    scale = max(abs(mass_m), np.finfo(float).tiny)
    if abs(mass_f - mass_m) / scale > MASS_MATCH_TOLERANCE:
        raise MassMismatchError(f"Масса f ({mass_f:.12g}) не совпадает с массой m ({mass_m:.12g})")
    if np.any(m.values <= 0.0):
        raise ValueError("Равновесие m должно быть строго положительным")
    lhs = _integrand_sum(xlogy(f.values, f.values / m.values), f)
    rhs = 0.5 * _integrand_sum((np.sqrt(f.values) - np.sqrt(m.values)) ** 2, f)
    return lhs, rhs


def chi2_divergence(f: DistributionField, m: DistributionField) -> float:
    """sum (f/m)^2 m по сетке; m > 0."""
    if np.any(m.values <= 0.0):
        raise ValueError("chi^2 требует m > 0 во всех ячейках")
    return _integrand_sum(f.values ** 2 / m.values, f)


def continuity_residual(f_prev: DistributionField, f_next: DistributionField, dt: float,
                        face_flux: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Невязка уравнения неразрывности за один шаг

    Без face_flux: (rho_next - rho_prev)/dt + div((j_next + j_prev)/2), дивергенция
    центральными разностями момента j. Порядок сходимости совпадает с порядком
    схемы переноса (для upwind1 первый).
    С face_flux (d = 1): дивергенция берется от потоков схемы на гранях x,
    и невязка равна нулю с точностью до округления.

    Args:
        f_prev: Поле до шага
        f_next: Поле после шага
        dt: Шаг по времени
        face_flux: Средний за шаг поток массы через внутренние грани x, форма (n_x - 1,)

    Returns:
        np.ndarray: Поле невязки на пространственной сетке
    """
    if f_prev.grid != f_next.grid:
        raise ValueError("Поля заданы на разных сетках")
    grid = f_prev.grid
    rate = (density(f_next) - density(f_prev)) / dt
    if face_flux is not None:
        face_flux = np.asarray(face_flux, dtype=float)
        if grid.d != 1 or face_flux.shape != (max(grid.n_x - 1, 0),):
            raise ValueError(f"Поток на гранях должен иметь форму ({grid.n_x - 1},) при d = 1")
        # крайние грани закрыты
        closed = np.concatenate(([0.0], face_flux, [0.0]))
        return rate + np.diff(closed) / grid.dx
    flux = 0.5 * (current(f_next) + current(f_prev))
    divergence = np.zeros_like(rate)
    if grid.n_x > 1:
        for axis in range(grid.d):
            divergence += np.gradient(flux[..., axis], grid.dx, axis=axis)
    return rate + divergence


def support_radius(f: DistributionField, x0: float = 0.0, threshold: float = SUPPORT_THRESHOLD) -> float:
    """
    Наибольшее расстояние |x_i - x0| до ячейки, где f превышает threshold * max f

    Returns:
        float: Радиус носителя (0 для нулевого поля)
    """
    grid = f.grid
    peak = float(f.values.max()) if f.values.size else 0.0
    if peak <= 0.0:
        return 0.0
    occupied = (f.values > threshold * peak).any(axis=grid.momentum_axes)
    offsets = np.sqrt(np.sum((grid.position_mesh() - x0) ** 2, axis=-1))
    return float(offsets[occupied].max())


def lightcone_check(snapshots: Sequence[Tuple[float, DistributionField]], t0: float, x0: float = 0.0,
                    threshold: float = SUPPORT_THRESHOLD) -> LightconeResult:
    """
    Проверка того, что носитель не выходит за |x - x0| <= R + (t - t0) + dx

    Args:
        snapshots: Пары (t, f), первая при t = t0 задает радиус R
        t0: Начальное время
        x0: Центр
        threshold: Относительный порог носителя

    Returns:
        LightconeResult: (passed, margin)
    """
    if not snapshots:
        raise ValueError("Нужен хотя бы один снимок")
    radius0 = support_radius(snapshots[0][1], x0, threshold)
    dx = snapshots[0][1].grid.dx
    margins = [radius0 + (t - t0) + dx - support_radius(f, x0, threshold) for t, f in snapshots]
    margin = float(min(margins))
    if margin < 0.0:
        logger.warning(f"Носитель вышел за световой конус: запас {margin:.4g}")
    return LightconeResult(passed=margin >= 0.0, margin=margin)


def record(series: DiagnosticSeries, t: float, f: DistributionField, V: ExternalPotential,
           m_ref: Optional[DistributionField] = None, x0: float = 0.0) -> DiagnosticRecord:
    """Вычисление и добавление одной записи диагностик."""
    rec = DiagnosticRecord(
        t=float(t),
        mass=mass(f),
        Q=free_energy(f, V),
        Qplus=free_energy_plus(f, V),
        dissipation=entropy_dissipation(f),
        chi2=chi2_divergence(f, m_ref) if m_ref is not None else float("nan"),
        support_radius=support_radius(f, x0),
    )
    series.append(rec)
    return rec


def entropy_identity_residual(series: DiagnosticSeries) -> Tuple[float, float, float]:
    """
    Баланс Q(t_end) - Q(0) + int dissipation dt

    Returns:
        Tuple: (delta_Q, интеграл диссипации, относительная невязка)
    """
    if len(series) < 2:
        raise ValueError("Для баланса энтропии нужны хотя бы две записи")
    q = series.column("Q")
    integral = float(trapezoid(series.column("dissipation"), series.column("t")))
    delta = float(q[-1] - q[0])
    relative = abs(delta + integral) / integral if integral > 0 else abs(delta)
    return delta, integral, relative


def relative_mass_drift(series: DiagnosticSeries) -> float:
    masses = series.column("mass")
    if masses.size == 0 or masses[0] == 0.0:
        return 0.0
    return float(np.max(np.abs(masses - masses[0])) / masses[0])


def is_non_increasing(values: np.ndarray, rtol: float = 1e-12) -> bool:
    """Невозрастание с допуском на округление."""
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        return True
    slack = rtol * np.maximum(np.abs(values[:-1]), 1.0)
    return bool(np.all(np.diff(values) <= slack))
