# util/peak_finder.py
import sys,os
sys.path.append(os.path.abspath(os.path.dirname(__file__) + '/' + '..'))

import math
from dataclasses import dataclass, asdict, field
from typing import Callable, Dict, List, NamedTuple, Optional

import numpy as np
from scipy.optimize import brentq

from config.config import GOLDEN_TOL, GRID_DENSITY, GRID_MAX_DOUBLINGS, K_MIN, MAX_WORKERS, SWEEP_POINTS_PER_ALPHA
from util.log_utils import logger
from util.pole_finder import PoleSearchConfig, find_poles, nearest_pole
from util.scattering_core import (PotentialWell, closed_form_slopes, closed_forms, first_sigma_peaks,
                                  sigma_peak_positions, unwrap_resonant_phase)
from util.utils import ConvergenceError, NumericalError, batch_map, doubling, require

INVPHI = (math.sqrt(5) - 1) / 2  # 1 / phi
INVPHI2 = (3 - math.sqrt(5)) / 2  # 1 / phi^2

QUANTITIES = ('ell', 'tau', 'p_trap', 'sigma_phi', 'a2')


class Peak(NamedTuple):
    k: float
    value: float
    boundary: bool


@dataclass
class KGrid:
    """[k_min, k_max] 上的采样以及细化所需的函数。

    Attributes:
        ks, values: 严格递增的采样点与函数值。
        adaptive: 是否经过自适应加倍。
        func: 向量化的被采样函数，None 时不做细化。
        key: 细化时最小化的目标（-func 的单调变换），None 表示 -func。
        slope: func 的解析导数；给出时在黄金分割的结果附近再求一次导数零点。
    """
    ks: np.ndarray
    values: np.ndarray
    adaptive: bool = False
    func: Optional[Callable] = field(default=None, repr=False)
    key: Optional[Callable] = field(default=None, repr=False)
    slope: Optional[Callable] = field(default=None, repr=False)

    def __post_init__(self):
        self.ks = np.asarray(self.ks, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        require(self.ks.ndim == 1 and self.ks.size == self.values.size, "grid samples and values must align")
        require(self.ks.size >= 3, "a grid needs at least 3 samples")
        require(bool(np.all(np.diff(self.ks) > 0)), "grid k values must be strictly increasing")
        require(self.ks[0] > 0, "grid k values must be positive")

    @property
    def k_min(self) -> float:
        return float(self.ks[0])

    @property
    def k_max(self) -> float:
        return float(self.ks[-1])

    @property
    def samples(self):
        return list(zip(self.ks.tolist(), self.values.tolist()))


@dataclass(frozen=True)
class ResonanceRecord:
    """一个共振的峰位（l、τ、P、σ_φ）与最近极点；即势阱表的一行。

    k_tau = 0 且 tau_boundary = True 表示 τ 的极大位于 k -> 0 的边界。
    """
    n: int
    k_star: float
    k_tau: float
    k_p: float
    k_sigma: float
    phi_at_kstar: float
    ell_ratio: float
    kappa: float
    modulus: float
    tau_boundary: bool = False

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)


def golden_section_min(f, a, b, tol=GOLDEN_TOL):
    """黄金分割搜索单峰函数 f 在 [a, b] 上的极小，返回最后一个宽度 <= tol 的区间中点。"""
    (a, b) = (min(a, b), max(a, b))
    h = b - a
    if h <= tol:
        return 0.5 * (a + b)

    n = int(math.ceil(math.log(tol / h) / math.log(INVPHI)))
    c = a + INVPHI2 * h
    d = a + INVPHI * h
    yc = f(c)
    yd = f(d)

    for _ in range(n - 1):
        if yc < yd:
            b = d
            d = c
            yd = yc
            h = INVPHI * h
            c = a + INVPHI2 * h
            yc = f(c)
        else:
            a = c
            c = d
            yc = yd
            h = INVPHI * h
            d = a + INVPHI * h
            yd = f(d)

    if yc < yd:
        return 0.5 * (a + d)
    return 0.5 * (c + b)


def golden_section_max(f, lo, hi, tol=GOLDEN_TOL):
    """在 [lo, hi] 上用黄金分割寻找单峰函数 f 的极大，返回 (k, f(k))。"""
    k = golden_section_min(lambda x: -float(f(x)), lo, hi, tol)
    return k, float(f(k))


def _polish_with_slope(slope, k: float, lo: float, hi: float) -> float:
    """在 k 附近的小区间内求 slope 的零点；区间两端不变号时保留 k。"""
    width = max(1e-7, 1e-6 * k)
    left, right = max(lo, k - width), min(hi, k + width)
    s_left, s_right = float(slope(left)), float(slope(right))
    if not (s_left > 0 > s_right):
        return k
    return float(brentq(lambda x: float(slope(x)), left, right, xtol=1e-15, rtol=4 * np.finfo(float).eps))


def local_maxima(grid: KGrid) -> List[Peak]:
    """找出采样中的局部极大。

    中间值严格大于两侧的三元组以黄金分割细化到 |Δk| < GOLDEN_TOL，
    有解析导数时再用 brentq 把位置修正到导数零点；
    端点处的极大以 boundary=True 报告，不做细化。
    """
    ks, v = grid.ks, grid.values
    interior = np.flatnonzero((v[1:-1] > v[:-2]) & (v[1:-1] > v[2:])) + 1
    peaks = []
    if v[0] > v[1]:
        peaks.append(Peak(float(ks[0]), float(v[0]), True))
    for i in interior:
        if grid.func is None:
            peaks.append(Peak(float(ks[i]), float(v[i]), False))
            continue
        key = grid.key if grid.key is not None else (lambda x: -float(grid.func(x)))
        k = golden_section_min(lambda x: float(key(x)), ks[i - 1], ks[i + 1])
        if grid.slope is not None:
            k = _polish_with_slope(grid.slope, k, ks[i - 1], ks[i + 1])
        peaks.append(Peak(float(k), float(grid.func(k)), False))
    if v[-1] > v[-2]:
        peaks.append(Peak(float(ks[-1]), float(v[-1]), True))
    return peaks


def quantity(well: PotentialWell, name: str):
    """返回 (func, key, slope)：name 对应的向量化函数、细化目标与解析导数。"""
    require(name in QUANTITIES, f"unknown quantity {name!r}, expected one of {QUANTITIES}")
    func = lambda k: closed_forms(well, k)[name]
    # σ_φ = 4 - 4cos²φ：在峰顶用 4cos²φ 比较，避免 4 附近的舍入平台
    key = (lambda k: closed_forms(well, k)['cos2_phi']) if name == 'sigma_phi' else None
    slope = lambda k: closed_form_slopes(well, k)[name]
    return func, key, slope


def _interior_count(grid: KGrid) -> int:
    v = grid.values
    return int(np.count_nonzero((v[1:-1] > v[:-2]) & (v[1:-1] > v[2:])))


def _sampled_grid(well: PotentialWell, name: str, k_min: float, k_max: float, density: int) -> KGrid:
    n = max(3, int(math.ceil((k_max - k_min) * density)) + 1)
    ks = np.linspace(k_min, k_max, n)
    func, key, slope = quantity(well, name)
    return KGrid(ks=ks, values=func(ks), adaptive=True, func=func, key=key, slope=slope)


_adaptive_grid = doubling('density', retries=GRID_MAX_DOUBLINGS,
                          same=lambda prev, cur: _interior_count(prev) == _interior_count(cur),
                          logger=logger)(_sampled_grid)


def scan_grid(well: PotentialWell, name: str, k_min: float = K_MIN, k_max: float = 3.5,
              density: int = GRID_DENSITY) -> KGrid:
    """对一个散射函数在 [k_min, k_max] 上采样，密度不断加倍直到局部极大的个数稳定。"""
    require(k_min >= K_MIN, f"k_min must be at least {K_MIN}, got {k_min}")
    require(k_max > k_min, f"k_max={k_max} must exceed k_min={k_min}")
    try:
        return _adaptive_grid(well, name, k_min, k_max, density)
    except ConvergenceError:
        logger.log_warning(f"【peak_finder】{name} maxima count did not settle; using the finest grid")
        return _sampled_grid(well, name, k_min, k_max, density * 2 ** GRID_MAX_DOUBLINGS)


def _match(anchors: List[float], candidates: List[Peak], k_low: float, name: str) -> List[Optional[Peak]]:
    """把候选峰分配给最近的 l 峰；距离超过相邻 l 峰间距一半的视为未匹配。"""
    matched: List[Optional[Peak]] = [None] * len(anchors)
    anchor_array = np.asarray(anchors)
    for peak in candidates:
        if peak.boundary and peak.k > k_low:
            continue
        j = int(np.argmin(np.abs(anchor_array - peak.k)))
        neighbours = [abs(anchors[j] - anchors[i]) for i in (j - 1, j + 1) if 0 <= i < len(anchors)]
        spacing = min(neighbours) if neighbours else math.inf
        distance = abs(peak.k - anchors[j])
        if distance > 0.5 * spacing:
            logger.log_info(f"【peak_finder】{name} peak at k={peak.k:.8g} left unmatched")
            continue
        if matched[j] is None or distance < abs(matched[j].k - anchors[j]):
            matched[j] = peak
    return matched


def _resonant_maximum(ell_peaks: List[Peak], lo: Optional[float], hi: float) -> Optional[Peak]:
    """(lo, hi] 内 l 最大的那个极大；lo 为 None 时也接受下边界极大。

    σ_φ 峰处 l = 2a 且 dl/dk < 0，相邻两个 σ_φ 峰之间必有一个 l > 2a 的极大；
    阈值附近 l 在 2a 以下的宽鼓包不算共振。
    """
    lower = lo if lo is not None else 0.0
    window = [p for p in ell_peaks if p.k <= hi and
              ((not p.boundary and p.k > lower) or (lo is None and p.boundary and p.k <= K_MIN))]
    return max(window, key=lambda p: p.value) if window else None


def resonance_report(well: PotentialWell, k_max: float, density: int = GRID_DENSITY,
                     pole_cfg: Optional[PoleSearchConfig] = None) -> List[ResonanceRecord]:
    """扫描 l、τ、P、σ_φ，按解析 σ_φ 峰编号，组装每个共振的 ResonanceRecord。

    第 n 个共振的 k* 取 (k_{n-1}ˢ, k_nˢ] 内 l 最大的极大；τ、P、σ_φ 的峰再按距离分配给各 k*。

    Args:
        well: 势阱。
        k_max: 扫描上限。
        density: 每单位 k 的初始采样数。
        pole_cfg: 极点搜索配置，默认搜索 Re ∈ (0, k_max]、Im ∈ [-2, 0)。

    Returns:
        List[ResonanceRecord]: 按 n 递增。
    """
    require(k_max > K_MIN, f"k_max must exceed {K_MIN}, got {k_max}")
    sigma_ks = [float(k) for k in sigma_peak_positions(well, k_max) if k > K_MIN]
    if not sigma_ks:
        logger.log_info(f"【peak_finder】no sigma_phi peak below k={k_max}")
        return []
    names = ('ell', 'tau', 'p_trap', 'sigma_phi')
    grids = batch_map(lambda name: scan_grid(well, name, K_MIN, k_max, density), names, max_workers=MAX_WORKERS)
    peaks = {name: local_maxima(grid) for name, grid in zip(names, grids)}

    l_peaks = []
    for lo, hi in zip([None] + sigma_ks[:-1], sigma_ks):
        peak = _resonant_maximum(peaks['ell'], lo, hi)
        if peak is None:
            logger.log_warning(f"【peak_finder】no maximum of l below the sigma_phi peak at k={hi:.8g}")
            continue
        l_peaks.append(peak.k)
    if not l_peaks:
        return []
    matched = {name: _match(l_peaks, peaks[name], K_MIN, name) for name in names[1:]}

    poles = find_poles(well, pole_cfg or PoleSearchConfig(re_max=k_max))
    phis = np.mod(unwrap_resonant_phase(well, l_peaks), np.pi)
    ells = closed_forms(well, np.asarray(l_peaks))['ell']

    records = []
    for n, k_star in enumerate(l_peaks, 1):
        tau_peak, p_peak, sigma_peak = (matched[name][n - 1] for name in names[1:])
        pole = nearest_pole(poles, k_star)
        tau_boundary = tau_peak is not None and tau_peak.boundary
        records.append(ResonanceRecord(
            n=n,
            k_star=k_star,
            k_tau=0.0 if tau_boundary else (tau_peak.k if tau_peak else math.nan),
            k_p=p_peak.k if p_peak else math.nan,
            k_sigma=sigma_peak.k if sigma_peak else math.nan,
            phi_at_kstar=float(phis[n - 1]),
            ell_ratio=float(ells[n - 1]) / (2.0 * well.a),
            kappa=pole.kappa if pole else math.nan,
            modulus=pole.modulus if pole else math.nan,
            tau_boundary=tau_boundary,
        ))
    logger.log_info(f"【peak_finder】alpha={well.alpha:.6g}: {len(records)} resonances below k={k_max}")
    return records


def first_traversal_maximum(well: PotentialWell, n_samples: int = SWEEP_POINTS_PER_ALPHA) -> Peak:
    """第一个共振的 l 极大（内部或 k_min 边界），只在第一个 σ_φ 峰之前找。"""
    k_sigma = float(first_sigma_peaks(well, 1)[0])
    if k_sigma <= K_MIN:
        raise NumericalError(f"first sigma_phi peak k={k_sigma:.3g} is below k_min (alpha={well.alpha:.12g})")
    ks = np.linspace(K_MIN, k_sigma, n_samples)
    func, _, slope = quantity(well, 'ell')
    peak = _resonant_maximum(local_maxima(KGrid(ks=ks, values=func(ks), func=func, slope=slope)), None, k_sigma)
    if peak is None:
        raise NumericalError(f"no maximum of l found below k={k_sigma:.8g} (alpha={well.alpha:.8g})")
    return peak
