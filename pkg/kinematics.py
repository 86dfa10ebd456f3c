"""
Релятивистская кинематика частицы единичной массы (c = 1).

Все функции принимают как одиночный вектор импульса формы (d,), так и
пакет векторов формы (..., d): импульс всегда лежит на последней оси.
"""
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

ArrayLike = Union[float, np.ndarray]

# Ниже этого |u| множитель (u0 - 1)/|u|^2 считается рядом
BOOST_SERIES_THRESHOLD = 1e-4


@dataclass(frozen=True)
class MetricSample:
    """Гиперболическая метрика массовой оболочки в точке p."""
    h: np.ndarray
    h_inv: np.ndarray
    det_h: Union[float, np.ndarray]


def _as_momentum(p) -> np.ndarray:
    arr = np.asarray(p, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if not np.all(np.isfinite(arr)):
        raise ValueError("Компоненты импульса должны быть конечными")
    return arr


def _scalar_if_single(value: np.ndarray) -> ArrayLike:
    return float(value) if np.ndim(value) == 0 else value


def energy(p) -> ArrayLike:
    """
    Энергия p0 = sqrt(1 + |p|^2)

    Args:
        p: Импульс формы (d,) или (..., d)

    Returns:
        float | np.ndarray: Энергия (>= 1)
    """
    arr = _as_momentum(p)
    return _scalar_if_single(np.sqrt(1.0 + np.sum(arr * arr, axis=-1)))


def conformal_energy(p, phi) -> ArrayLike:
    """
    Энергия на конформной оболочке sqrt(e^{2 phi} + |p|^2)

    Args:
        p: Импульс формы (..., d)
        phi: Скалярное поле, согласованное по форме с p[..., 0]

    Returns:
        float | np.ndarray: Энергия
    """
    arr = _as_momentum(p)
    return _scalar_if_single(np.sqrt(np.exp(2.0 * np.asarray(phi, dtype=float))
                                     + np.sum(arr * arr, axis=-1)))


def rel_velocity(p) -> np.ndarray:
    """Релятивистская скорость p / p0, всегда |v| < 1."""
    arr = _as_momentum(p)
    p0 = np.sqrt(1.0 + np.sum(arr * arr, axis=-1, keepdims=True))
    return arr / p0


def diffusion_matrix(p) -> np.ndarray:
    """
    Релятивистская матрица диффузии D = (I + p p^T) / p0

    Args:
        p: Импульс формы (d,) или (..., d)

    Returns:
        np.ndarray: Матрицы формы (..., d, d)
    """
    arr = _as_momentum(p)
    d = arr.shape[-1]
    p0 = np.asarray(np.sqrt(1.0 + np.sum(arr * arr, axis=-1)))
    outer = arr[..., :, None] * arr[..., None, :]
    return (np.eye(d) + outer) / p0[..., None, None]


def hyperbolic_metric(p) -> MetricSample:
    """
    Метрика h = I - v v^T (v = p/p0), обратная к ней h^-1 = I + p p^T и det h

    Args:
        p: Импульс формы (d,) или (..., d)

    Returns:
        MetricSample: h, h_inv и определитель 1/(1 + |p|^2)
    """
    arr = _as_momentum(p)
    d = arr.shape[-1]
    sq = np.asarray(np.sum(arr * arr, axis=-1))
    v = arr / np.sqrt(1.0 + sq)[..., None]
    h = np.eye(d) - v[..., :, None] * v[..., None, :]
    h_inv = np.eye(d) + arr[..., :, None] * arr[..., None, :]
    return MetricSample(h=h, h_inv=h_inv, det_h=_scalar_if_single(1.0 / (1.0 + sq)))


def juttner(p, gamma: float = 1.0) -> ArrayLike:
    """
    Распределение Юттнера exp(-gamma * p0)

    Args:
        p: Импульс
        gamma: Обратная температура (> 0)

    Returns:
        float | np.ndarray: Значение веса
    """
    if not gamma > 0:
        raise ValueError(f"gamma должно быть положительным, получено {gamma}")
    return _scalar_if_single(np.exp(-gamma * np.asarray(energy(p))))


def boost_energy(u) -> ArrayLike:
    """u0 = sqrt(1 + |u|^2) для скорости буста u."""
    return energy(u)


def _boost_factor(u_sq: np.ndarray) -> np.ndarray:
    # (u0 - 1)/|u|^2 = 1/(u0 + 1); вблизи нуля ряд 1/2 - s/8 + s^2/16
    u_sq = np.asarray(u_sq, dtype=float)
    series = 0.5 - u_sq / 8.0 + u_sq * u_sq / 16.0
    safe = np.where(u_sq > 0.0, u_sq, 1.0)
    exact = (np.sqrt(1.0 + u_sq) - 1.0) / safe
    return np.where(u_sq < BOOST_SERIES_THRESHOLD ** 2, series, exact)


def lorentz_boost(u, t, x, p) -> Tuple[ArrayLike, np.ndarray, np.ndarray]:
    """
    Преобразование Лоренца события (t, x, p) со скоростью буста u

    t~ = u0 t - u.x
    x~ = x - u t + k u (u.x)
    p~ = p - u p0 + k u (u.p),   k = (u0 - 1)/|u|^2

    Args:
        u: Скорость буста формы (d,)
        t: Время (скаляр или массив формы (...))
        x: Координаты формы (..., d)
        p: Импульсы формы (..., d)

    Returns:
        Tuple: (t~, x~, p~)
    """
    u = _as_momentum(u)
    x = _as_momentum(x)
    p = _as_momentum(p)
    t = np.asarray(t, dtype=float)

    u_sq = float(np.dot(u, u))
    u0 = np.sqrt(1.0 + u_sq)
    k = float(_boost_factor(u_sq))
    p0 = np.asarray(np.sqrt(1.0 + np.sum(p * p, axis=-1)))

    u_dot_x = np.asarray(x @ u)
    u_dot_p = np.asarray(p @ u)
    t_new = u0 * t - u_dot_x
    x_new = x - t[..., None] * u + k * u_dot_x[..., None] * u
    p_new = p - p0[..., None] * u + k * u_dot_p[..., None] * u
    return _scalar_if_single(t_new), x_new, p_new


def galilean_boost(u, t, x, p) -> Tuple[ArrayLike, np.ndarray, np.ndarray]:
    """Преобразование Галилея: (t, x - u t, p - u)."""
    u = _as_momentum(u)
    x = _as_momentum(x)
    p = _as_momentum(p)
    t = np.asarray(t, dtype=float)
    return _scalar_if_single(t), x - t[..., None] * u, p - u
