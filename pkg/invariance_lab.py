"""
Проверка лоренцевой и галилеевой инвариантности операторов Фоккера-Планка
без трения по невязкам на замкнутых пробных функциях в двух системах отсчета.

Производные берутся центральными разностями с шагом h, по умолчанию с
экстраполяцией Ричардсона по шагам h и h/2.
"""
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np
import pandas as pd

from kinematics import energy, galilean_boost, lorentz_boost
from logger_config import setup_logger
from phase_grid import ExternalPotential

logger = setup_logger("invariance_lab")

DEFAULT_STEP = 1e-2
SAMPLE_RADIUS = 3.0


class Points(NamedTuple):
    """Пакет точек (t, x, p): t формы (n,), x и p формы (n, d)."""
    t: np.ndarray
    x: np.ndarray
    p: np.ndarray


@dataclass
class TestFunction:
    """
    Замкнутая пробная функция f(t, x, p), векторизованная по точкам

    Args:
        name: Имя для отчетов
        evaluate: f(t, x, p) для t формы (...), x и p формы (..., d)
        d: Размерность
    """
    __test__ = False

    name: str
    evaluate: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]
    d: int = 1

    def __call__(self, t, x, p) -> np.ndarray:
        return self.evaluate(np.asarray(t, dtype=float), np.asarray(x, dtype=float),
                             np.asarray(p, dtype=float))


def gaussian_function(d: int = 1, x_center=None, p_center=None, drift=None,
                      width_x: float = 2.0, width_p: float = 1.5) -> TestFunction:
    """
    Гауссиан в (x, p) с центром по x, движущимся со скоростью drift

    Args:
        d: Размерность
        x_center: Центр по x в момент t = 0
        p_center: Центр по p
        drift: Скорость центра по x
        width_x: Ширина по x
        width_p: Ширина по p

    Returns:
        TestFunction: Пробная функция
    """
    x_c = np.zeros(d) if x_center is None else np.asarray(x_center, dtype=float)
    p_c = np.zeros(d) if p_center is None else np.asarray(p_center, dtype=float)
    w = np.full(d, 0.2) if drift is None else np.asarray(drift, dtype=float)

    def evaluate(t, x, p):
        shift = x - x_c - t[..., None] * w
        return np.exp(-0.5 * np.sum(shift ** 2, axis=-1) / width_x ** 2
                      - 0.5 * np.sum((p - p_c) ** 2, axis=-1) / width_p ** 2)

    return TestFunction("gaussian", evaluate, d)


def juttner_function(d: int = 1, gamma: float = 1.0) -> TestFunction:
    def evaluate(t, x, p):
        return np.exp(-gamma * np.asarray(energy(p)))

    return TestFunction("juttner", evaluate, d)


def equilibrium_function(V: ExternalPotential, d: int = 1) -> TestFunction:
    """e^{-p0 - V(x)} без нормировки."""
    def evaluate(t, x, p):
        return np.exp(-np.asarray(energy(p)) - V.value(x))

    return TestFunction(f"equilibrium_{V.kind}", evaluate, d)


def boosted_function(f: TestFunction, u) -> TestFunction:
    """f~(t~, x~, p~) = f(L_{-u}(t~, x~, p~))."""
    back = -np.asarray(u, dtype=float)

    def evaluate(t, x, p):
        t0, x0, p0 = lorentz_boost(back, t, x, p)
        return f(t0, x0, p0)

    return TestFunction(f"{f.name}_lorentz", evaluate, f.d)


def galilean_shifted_function(f: TestFunction, u) -> TestFunction:
    """f~(t~, x~, p~) = f(t~, x~ + u t~, p~ + u)."""
    back = -np.asarray(u, dtype=float)

    def evaluate(t, x, p):
        t0, x0, p0 = galilean_boost(back, t, x, p)
        return f(t0, x0, p0)

    return TestFunction(f"{f.name}_galilean", evaluate, f.d)


class Derivatives(NamedTuple):
    value: np.ndarray
    dt: np.ndarray
    grad_x: np.ndarray
    grad_p: np.ndarray
    hess_p: np.ndarray


def _central_derivatives(f: TestFunction, points: Points, h: float) -> Derivatives:
    t, x, p = points
    d = x.shape[-1]
    eye = np.eye(d)
    value = f(t, x, p)
    dt = (f(t + h, x, p) - f(t - h, x, p)) / (2.0 * h)

    grad_x = np.empty(x.shape)
    grad_p = np.empty(p.shape)
    hess_p = np.empty(p.shape + (d,))
    for k in range(d):
        e_k = h * eye[k]
        grad_x[..., k] = (f(t, x + e_k, p) - f(t, x - e_k, p)) / (2.0 * h)
        plus = f(t, x, p + e_k)
        minus = f(t, x, p - e_k)
        grad_p[..., k] = (plus - minus) / (2.0 * h)
        hess_p[..., k, k] = (plus - 2.0 * value + minus) / h ** 2
        for m in range(k):
            e_m = h * eye[m]
            mixed = (f(t, x, p + e_k + e_m) - f(t, x, p + e_k - e_m)
                     - f(t, x, p - e_k + e_m) + f(t, x, p - e_k - e_m)) / (4.0 * h ** 2)
            hess_p[..., k, m] = mixed
            hess_p[..., m, k] = mixed
    return Derivatives(value, dt, grad_x, grad_p, hess_p)


def derivatives(f: TestFunction, points: Points, h: float = DEFAULT_STEP,
                richardson: bool = True) -> Derivatives:
    """Производные в точках: центральные разности, при richardson=True (4 D(h/2) - D(h)) / 3."""
    coarse = _central_derivatives(f, points, h)
    if not richardson:
        return coarse
    fine = _central_derivatives(f, points, 0.5 * h)
    return Derivatives(*[(4.0 * b - a) / 3.0 for a, b in zip(coarse, fine)])


def relativistic_operator_residual(f: TestFunction, points: Points, beta: float = 1.0,
                                   V: Optional[ExternalPotential] = None, h: float = DEFAULT_STEP,
                                   richardson: bool = True) -> np.ndarray:
    """
    Невязка df/dt + v.grad_x f - grad V.grad_p f - div_p(beta p f + D grad_p f)

    div_p(D grad_p f) = (d/p0) p.grad_p f + D : hess_p f.

    Args:
        f: Пробная функция
        points: Точки (t, x, p)
        beta: Коэффициент трения
        V: Внешний потенциал (None = без потенциала)
        h: Шаг разностей
        richardson: Экстраполяция Ричардсона

    Returns:
        np.ndarray: Невязка в каждой точке
    """
    der = derivatives(f, points, h, richardson)
    p = points.p
    d = p.shape[-1]
    p0 = np.sqrt(1.0 + np.sum(p * p, axis=-1))
    p_dot_grad = np.sum(p * der.grad_p, axis=-1)

    transport = der.dt + np.sum(p * der.grad_x, axis=-1) / p0
    if V is not None:
        transport = transport - np.sum(V.gradient(points.x) * der.grad_p, axis=-1)
    trace_identity = np.trace(der.hess_p, axis1=-2, axis2=-1)
    p_hess_p = np.einsum("...i,...ij,...j->...", p, der.hess_p, p)
    diffusion = (d / p0) * p_dot_grad + (trace_identity + p_hess_p) / p0
    friction = beta * (d * der.value + p_dot_grad)
    return transport - friction - diffusion


def classical_operator_residual(f: TestFunction, points: Points, beta: float = 1.0,
                                h: float = DEFAULT_STEP, richardson: bool = True) -> np.ndarray:
    """Невязка df/dt + p.grad_x f - div_p(beta p f + grad_p f)."""
    der = derivatives(f, points, h, richardson)
    p = points.p
    d = p.shape[-1]
    transport = der.dt + np.sum(p * der.grad_x, axis=-1)
    friction = beta * (d * der.value + np.sum(p * der.grad_p, axis=-1))
    laplacian = np.trace(der.hess_p, axis1=-2, axis2=-1)
    return transport - friction - laplacian


@dataclass
class InvarianceReport:
    """Сравнение невязок в исходной и преобразованной системах отсчета."""
    kind: str
    u: np.ndarray
    beta: float
    h: float
    r_original: np.ndarray
    r_boosted: np.ndarray
    weight: np.ndarray
    tolerance: float = 1e-8
    discrepancy: np.ndarray = field(init=False)

    def __post_init__(self):
        self.discrepancy = np.abs(self.r_original * self.weight - self.r_boosted)

    @property
    def max_discrepancy(self) -> float:
        return float(self.discrepancy.max()) if self.discrepancy.size else 0.0

    @property
    def passed(self) -> bool:
        return self.max_discrepancy <= self.tolerance

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "point": np.arange(self.discrepancy.size),
            "r_original": self.r_original,
            "r_boosted": self.r_boosted,
            "weight": self.weight,
            "diff": self.discrepancy,
            "pass": self.discrepancy <= self.tolerance,
        })


def sample_points(n: int, d: int = 1, rng: Optional[np.random.Generator] = None,
                  radius: float = SAMPLE_RADIUS) -> Points:
    """Случайные точки: t в [0, 1], x и p в кубе [-radius, radius]^d."""
    rng = rng or np.random.default_rng(0)
    return Points(
        t=rng.uniform(0.0, 1.0, size=n),
        x=rng.uniform(-radius, radius, size=(n, d)),
        p=rng.uniform(-radius, radius, size=(n, d)),
    )


def lorentz_invariance_residual(u, f: TestFunction, points: Points, beta: float = 0.0,
                                h: float = DEFAULT_STEP, richardson: bool = True,
                                tolerance: float = 1e-8) -> InvarianceReport:
    """
    Невязки f в прообразах точек и f~ = f o L_{-u} в самих точках

    Точки points заданы в преобразованной системе. Форма p^mu d_mu инвариантна,
    поэтому r_original * p0 / p0~ должна совпасть с r_boosted.

    Args:
        u: Скорость буста
        f: Пробная функция
        points: Точки в преобразованной системе
        beta: Трение (beta > 0 - отрицательный контроль)
        h: Шаг разностей
        richardson: Экстраполяция Ричардсона
        tolerance: Допуск на расхождение

    Returns:
        InvarianceReport: Отчет
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    t0, x0, p0 = lorentz_boost(-u, points.t, points.x, points.p)
    original = Points(np.asarray(t0, dtype=float), x0, p0)
    r_original = relativistic_operator_residual(f, original, beta, h=h, richardson=richardson)
    r_boosted = relativistic_operator_residual(boosted_function(f, u), points, beta,
                                               h=h, richardson=richardson)
    weight = np.asarray(energy(p0)) / np.asarray(energy(points.p))
    report = InvarianceReport("lorentz", u, beta, h, r_original, r_boosted, weight, tolerance)
    logger.info(f"Лоренц u={u.tolist()}, beta={beta}: max расхождение {report.max_discrepancy:.3e}")
    return report


def galilean_invariance_residual(u, f: TestFunction, points: Points, beta: float = 0.0,
                                 h: float = DEFAULT_STEP, richardson: bool = True,
                                 tolerance: float = 1e-8) -> InvarianceReport:
    """То же для классического оператора и замены (t, x - u t, p - u); вес равен 1."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    t0, x0, p0 = galilean_boost(-u, points.t, points.x, points.p)
    original = Points(np.asarray(t0, dtype=float), x0, p0)
    r_original = classical_operator_residual(f, original, beta, h=h, richardson=richardson)
    r_boosted = classical_operator_residual(galilean_shifted_function(f, u), points, beta,
                                            h=h, richardson=richardson)
    weight = np.ones_like(r_original)
    report = InvarianceReport("galilean", u, beta, h, r_original, r_boosted, weight, tolerance)
    logger.info(f"Галилей u={u.tolist()}, beta={beta}: max расхождение {report.max_discrepancy:.3e}")
    return report


def convergence_order(coarse: InvarianceReport, fine: InvarianceReport) -> float:
    """Наблюдаемый порядок log2(max расхождение(h) / max расхождение(h/2))."""
    a, b = coarse.max_discrepancy, fine.max_discrepancy
    if b <= 0.0 or a <= 0.0:
        return float("inf")
    return float(np.log(a / b) / np.log(coarse.h / fine.h))
