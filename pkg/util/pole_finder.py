# util/pole_finder.py
import sys,os
sys.path.append(os.path.abspath(os.path.dirname(__file__) + '/' + '..'))

import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np
from scipy.optimize import brentq

from config.config import K_MIN, RESCALE_IM_QA
from util.log_utils import logger
from util.scattering_core import PotentialWell, closed_forms
from util.utils import require


class PoleKind(str, Enum):
    BOUND = 'bound'
    RESONANCE = 'resonance'


@dataclass(frozen=True)
class PoleK:
    """S 矩阵分母 D(k) 在复 k 平面上的一个零点。

    Attributes:
        value: 复波数 K。
        kappa: Re K。
        modulus: |K|。
        kind: bound（正虚轴）或 resonance（下半平面）。
        residual: 收敛时缩放后的 |D(K)|。
    """
    value: complex
    kappa: float
    modulus: float
    kind: PoleKind
    residual: float


@dataclass(frozen=True)
class PoleSearchConfig:
    """极点搜索矩形 Re ∈ (0, re_max]、Im ∈ [im_min, 0) 以及牛顿迭代参数。"""
    re_max: float = 4.0
    im_min: float = -2.0
    grid_nx: int = 64
    grid_ny: int = 32
    newton_tol: float = 1e-11
    max_iter: int = 60
    dedup_tol: float = 1e-8
    include_bound: bool = False

    def validate(self) -> None:
        require(self.re_max > 0, f"re_max must be positive, got {self.re_max}")
        require(self.im_min < 0, f"im_min must be negative, got {self.im_min}")
        require(self.grid_nx >= 8 and self.grid_ny >= 8, "pole search grid needs at least 8x8 nodes")
        require(self.newton_tol > 0, "newton_tol must be positive")
        require(self.dedup_tol > 0, "dedup_tol must be positive")
        require(self.max_iter > 0, "max_iter must be positive")


def _scaled_trig(z: np.ndarray, rescale_above: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """返回 (cos z·f, sin z·f, 是否缩放)，|Im z| > rescale_above 时 f = e^{-|Im z|}，否则 f = 1。"""
    shrink = np.abs(z.imag)
    scaled = shrink > rescale_above
    shift = np.where(scaled, shrink, 0.0)
    e_plus = np.exp(1j * z - shift)
    e_minus = np.exp(-1j * z - shift)
    return 0.5 * (e_plus + e_minus), (e_plus - e_minus) / 2j, scaled


def _denominator_and_derivative(well: PotentialWell, k: np.ndarray, rescale_above: float):
    """D(k) = cos(qa) - i(k/q)sin(qa) 与 dD/dk（dq/dk = k/q），两者乘同一个缩放因子。"""
    k = np.asarray(k, dtype=complex)
    q = np.sqrt(k * k + 2.0 * well.v0)
    c, s, scaled = _scaled_trig(q * well.a, rescale_above)
    with np.errstate(divide='ignore', invalid='ignore'):
        # q = 0 时 sin(qa)/q -> a（此时 Im(qa) = 0，不涉及缩放）
        sinc = np.where(q == 0, well.a, s / q)
        value = c - 1j * k * sinc
        derivative = (-(well.a * k / q) * s
                      - 1j * (sinc + (k * k / (q * q)) * (well.a * c - sinc)))
    return value, derivative, scaled


def denominator(well: PotentialWell, k: complex, rescale_above: float = RESCALE_IM_QA) -> Tuple[complex, bool]:
    """S 矩阵分母 D(k)。

    cos(qa) 与 sin(qa)/q 都只依赖 q²，D 是 k 的整函数，q 取哪个分支都一样。|Im(qa)| 超过 rescale_above 时
    返回 D·e^{-|Im(qa)|}，零点位置不变。

    Returns:
        Tuple[complex, bool]: (D 或缩放后的 D, 是否缩放)。
    """
    value, _, scaled = _denominator_and_derivative(well, np.asarray([k]), rescale_above)
    return complex(value[0]), bool(scaled[0])


def _newton(well: PotentialWell, seeds: np.ndarray, max_iter: int) -> Tuple[np.ndarray, np.ndarray]:
    """对全部种子同时做牛顿迭代；返回 (根, 缩放残差)，发散的种子残差为 inf。"""
    z = np.asarray(seeds, dtype=complex).copy()
    for _ in range(max_iter):
        value, derivative, _ = _denominator_and_derivative(well, z, 0.0)
        with np.errstate(divide='ignore', invalid='ignore'):
            step = value / derivative
        step = np.where(np.isfinite(step), step, 0.0)
        # 限制单步长度，避免飞出搜索区域
        size = np.abs(step)
        step = np.where(size > 0.5, step * (0.5 / np.maximum(size, 1e-300)), step)
        z = z - step
        if np.all(np.abs(step) <= 1e-15 * np.maximum(np.abs(z), 1.0)):
            break
    value, _, _ = _denominator_and_derivative(well, z, 0.0)
    residual = np.abs(value)
    residual = np.where(np.isfinite(residual), residual, np.inf)
    return z, residual


def polish(well: PotentialWell, seed: complex, tol: float = 1e-11, max_iter: int = 60) -> Optional[complex]:
    """从单个种子出发做牛顿修正，残差不满足 tol 时返回 None。"""
    roots, residual = _newton(well, np.asarray([seed]), max_iter)
    return complex(roots[0]) if residual[0] < tol else None


def _traversal_peak_seeds(well: PotentialWell, re_max: float) -> np.ndarray:
    # 极点实部靠近 l(k) 的极大处，粗扫一遍即可
    ks = np.linspace(K_MIN, re_max, max(512, int(1024 * re_max)))
    ell = closed_forms(well, ks)['ell']
    interior = np.flatnonzero((ell[1:-1] > ell[:-2]) & (ell[1:-1] > ell[2:])) + 1
    depths = np.array([-0.01, -0.1, -0.3, -0.6])
    return (ks[interior][:, None] + 1j * depths[None, :]).ravel()


def find_poles(well: PotentialWell, cfg: PoleSearchConfig = PoleSearchConfig()) -> List[PoleK]:
    """在搜索矩形内寻找共振极点（可选附带束缚态极点），按 Re K 排序。

    种子：矩形上的均匀网格 + 实轴上 l(k) 的极大位置。不收敛的种子直接丢弃；
    复距离小于 dedup_tol 的根合并。
    """
    cfg.validate()
    xs = np.linspace(cfg.re_max / cfg.grid_nx, cfg.re_max, cfg.grid_nx)
    ys = np.linspace(cfg.im_min, cfg.im_min / cfg.grid_ny, cfg.grid_ny)
    grid = (xs[None, :] + 1j * ys[:, None]).ravel()
    seeds = np.concatenate((grid, _traversal_peak_seeds(well, cfg.re_max)))

    roots, residual = _newton(well, seeds, cfg.max_iter)
    edge = 1e-9
    inside = ((residual < cfg.newton_tol)
              & (roots.real > edge) & (roots.real <= cfg.re_max + edge)
              & (roots.imag >= cfg.im_min - edge) & (roots.imag < -edge))
    candidates = sorted(zip(roots[inside], residual[inside]), key=lambda item: item[0].real)

    poles: List[PoleK] = []
    for value, res in candidates:
        duplicate = next((i for i, p in enumerate(poles) if abs(p.value - value) < cfg.dedup_tol), None)
        if duplicate is None:
            poles.append(_make_pole(value, res, PoleKind.RESONANCE))
        elif res < poles[duplicate].residual:
            poles[duplicate] = _make_pole(value, res, PoleKind.RESONANCE)

    poles.sort(key=lambda p: p.kappa)
    logger.log_info(f"【pole_finder】alpha={well.alpha:.6g}: {len(poles)} resonance poles from {seeds.size} seeds")
    if cfg.include_bound:
        bound = [_make_pole(1j * kappa, abs(denominator(well, 1j * kappa, 0.0)[0]), PoleKind.BOUND)
                 for kappa in bound_states(well)]
        poles = bound + poles
    return poles


def _make_pole(value: complex, residual: float, kind: PoleKind) -> PoleK:
    value = complex(value)
    if kind is PoleKind.BOUND:
        value = complex(0.0, value.imag)
    return PoleK(value=value, kappa=value.real, modulus=abs(value), kind=kind, residual=float(residual))


def nearest_pole(poles: List[PoleK], k: float) -> Optional[PoleK]:
    """与实波数 k 复距离最近的共振极点。"""
    resonances = [p for p in poles if p.kind is PoleKind.RESONANCE]
    if not resonances:
        return None
    return min(resonances, key=lambda p: abs(p.value - k))


def bound_states(well: PotentialWell) -> List[float]:
    """正虚轴上的束缚态 κ_b（D(iκ_b) = 0），按 κ 从大到小（由深到浅）排列。

    令 x = qa ∈ (0, α)，κa = sqrt(α² - x²)，条件化为
    g(x) = x·cos x + sqrt(α² - x²)·sin x = 0。每个 ((2n-1)π/2, nπ) ∩ (0, α)
    恰有一个变号，用 brentq 求根。
    """
    alpha = well.alpha
    g = lambda x: x * math.cos(x) + math.sqrt(max(alpha * alpha - x * x, 0.0)) * math.sin(x)
    breaks = [m * 0.5 * math.pi for m in range(1, int(alpha / (0.5 * math.pi)) + 1) if m * 0.5 * math.pi < alpha]
    breaks = [1e-12] + breaks + [alpha]

    kappas = []
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        g_lo, g_hi = g(lo), g(hi)
        if g_lo == 0.0 or g_hi == 0.0 or (g_lo > 0) == (g_hi > 0):
            continue
        x = brentq(g, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
        kappa = math.sqrt(max(alpha * alpha - x * x, 0.0)) / well.a
        if kappa > 0:
            kappas.append(kappa)
    kappas.sort(reverse=True)
    if len(kappas) != well.bound_state_estimate:
        logger.log_warning(f"【pole_finder】{len(kappas)} bound states but floor(Q_B)={well.bound_state_estimate}")
    return kappas
