# util/scattering_core.py
import sys,os
sys.path.append(os.path.abspath(os.path.dirname(__file__) + '/' + '..'))

import math
from dataclasses import dataclass, asdict
from functools import lru_cache
from typing import Dict, Optional, Tuple

import numpy as np
import pandas as pd
from scipy.special import roots_legendre

from config.config import K_MIN, QUAD_ORDER, QUAD_TOL, QUAD_MAX_DOUBLINGS, UNWRAP_MAX_REFINE
from util.log_utils import logger
from util.utils import DomainError, PhaseUnwrapError, doubling, require

SCAN_COLUMNS = ['k', 'q', 'theta', 'phi', 'sigma', 'sigma_theta', 'sigma_phi',
                'tau', 'ell', 'p_trap', 'a2', 'r0', 'theta_mod_pi', 'phi_mod_pi']


@dataclass(frozen=True)
class PotentialWell:
    """球对称吸引方势阱 V(r) = -v0 (r < a)。

    Attributes:
        a: 阱半径。
        v0: 阱深 |V0|。
        alpha: 无量纲强度，alpha² = 2·a²·v0。
        qb: 束缚态数目估计 alpha/π + 1/2，其整数部分即束缚态个数。
    """
    a: float
    v0: float
    alpha: float
    qb: float

    @property
    def bound_state_estimate(self) -> int:
        return int(math.floor(self.qb))


@dataclass(frozen=True)
class ScatterSample:
    """单个实波数 k 上的全部散射函数。"""
    k: float
    q: float
    theta: float
    phi: float
    sigma: float
    sigma_theta: float
    sigma_phi: float
    tau: float
    ell: float
    p_trap: float
    a2: float
    r0: float

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)


@dataclass(frozen=True)
class RadiusExtendedSample:
    """在半径 r >= a 处计算的共振相位、有效穿越距离与俘获概率。"""
    k: float
    r: float
    phi_r: float
    ell_r: float
    p_r: float


def make_well(a: float, v0: float) -> PotentialWell:
    """按半径与阱深构造势阱。

    Args:
        a: 阱半径，必须为正。
        v0: 阱深 |V0|，必须为正。

    Returns:
        PotentialWell: alpha 与 qb 已按定义算好。

    Raises:
        DomainError: a 或 v0 非正或非有限。
    """
    require(a is not None and math.isfinite(a) and a > 0, f"well radius a must be positive, got {a}")
    require(v0 is not None and math.isfinite(v0) and v0 > 0, f"well depth v0 must be positive, got {v0}")
    alpha = math.sqrt(2.0 * a * a * v0)
    return PotentialWell(a=float(a), v0=float(v0), alpha=alpha, qb=alpha / math.pi + 0.5)


def make_well_from_alpha(a: float, alpha: float) -> PotentialWell:
    """固定半径 a，按强度 alpha 反推阱深 v0 = alpha²/(2a²)。"""
    require(alpha is not None and math.isfinite(alpha) and alpha > 0, f"strength alpha must be positive, got {alpha}")
    require(a is not None and math.isfinite(a) and a > 0, f"well radius a must be positive, got {a}")
    return make_well(a, alpha * alpha / (2.0 * a * a))


def _positive_k(k) -> np.ndarray:
    k = np.asarray(k, dtype=float)
    if k.size == 0 or not np.all(np.isfinite(k)) or np.any(k <= 0):
        raise DomainError("wave number k must be positive and finite")
    return k


def closed_forms(well: PotentialWell, k) -> Dict[str, np.ndarray]:
    """在实波数 k（标量或数组）上计算所有闭式量，不涉及相位展开。

    返回的字典包含 q, qa, cos, sin, den, a2, p_trap, ell, tau, sigma_phi,
    phi_principal, sin2phi。其中 den = k²sin²(qa) + q²cos²(qa)，
    phi_principal 取在 (-π/2, π/2] 内。
    """
    k = _positive_k(k)
    q = np.sqrt(k * k + 2.0 * well.v0)
    qa = q * well.a
    c = np.cos(qa)
    s = np.sin(qa)
    den = (k * s) ** 2 + (q * c) ** 2
    sin_2qa = np.sin(2.0 * qa)

    a2 = 4.0 * k * k / den
    p_trap = 0.5 * a2 * (1.0 - sin_2qa / (2.0 * qa))
    # l = 2a·(|A|²/4)·(1 + (2v0/k²)·sin(2qa)/(2qa))，把 1/k² 与 |A|² 中的 k² 约掉
    ell = 0.5 * well.a * a2 + 2.0 * well.v0 * sin_2qa / (q * den)
    tau = (ell - 2.0 * well.a) / k

    sign = np.where(c < 0, -1.0, 1.0)
    phi_principal = np.arctan2(k * s * sign, q * np.abs(c))
    return {
        'k': k, 'q': q, 'qa': qa, 'cos': c, 'sin': s, 'den': den,
        'a2': a2, 'p_trap': p_trap, 'ell': ell, 'tau': tau,
        'sigma_phi': a2 * s * s,
        'cos2_phi': 4.0 * (q * c) ** 2 / den,
        'phi_principal': phi_principal,
        'sin2phi': 2.0 * k * q * s * c / den,
    }


def closed_form_slopes(well: PotentialWell, k) -> Dict[str, np.ndarray]:
    """closed_forms 中各量对 k 的解析导数（键 a2, ell, tau, p_trap, sigma_phi）。"""
    forms = closed_forms(well, k)
    k, q, qa, den = forms['k'], forms['q'], forms['qa'], forms['den']
    a2, ell = forms['a2'], forms['ell']
    dqa = well.a * k / q
    sin_2qa = np.sin(2.0 * qa)
    cos_2qa = np.cos(2.0 * qa)

    dden = 2.0 * k - 2.0 * well.a * k * well.v0 * sin_2qa / q
    da2 = (8.0 * k - a2 * dden) / den
    q_den = q * den
    dq_den = (k / q) * den + q * dden
    dell = 0.5 * well.a * da2 + 2.0 * well.v0 * (2.0 * cos_2qa * dqa * q_den - sin_2qa * dq_den) / (q_den * q_den)

    ratio = sin_2qa / (2.0 * qa)
    dratio = dqa * (2.0 * qa * cos_2qa - sin_2qa) / (2.0 * qa * qa)
    return {
        'a2': da2,
        'ell': dell,
        'tau': (dell - forms['tau']) / k,
        'p_trap': 0.5 * da2 * (1.0 - ratio) - 0.5 * a2 * dratio,
        # dσ_φ/dk = 4·sin2φ·dφ/dk = 2·sin2φ·l
        'sigma_phi': 2.0 * forms['sin2phi'] * ell,
    }


def unwrap_resonant_phase(well: PotentialWell, ks) -> np.ndarray:
    """沿自适应 k 网格展开共振相位 φ，锚定 φ(K_MIN) ≈ 0。

    每一步用解析的 dφ/dk = l/2（梯形）预测增量，选取与预测最接近的 π 分支；
    预测增量 >= π/2 或与所选分支相差 >= π/4 的区间对半细分。

    Args:
        well: 势阱。
        ks: 任意顺序的正波数。

    Returns:
        np.ndarray: 与 ks 同序的连续分支 φ。

    Raises:
        PhaseUnwrapError: 细分到步长下溢仍无法满足条件。
    """
    ks = np.atleast_1d(_positive_k(ks))
    order = np.argsort(ks, kind='stable')
    sorted_ks = ks[order]
    path = np.union1d([min(K_MIN, sorted_ks[0])], sorted_ks)

    for _ in range(UNWRAP_MAX_REFINE):
        forms = closed_forms(well, path)
        principal = forms['phi_principal']
        if path.size == 1:
            branches = np.empty(0)
            break
        half_slope = 0.5 * forms['ell']
        predicted = 0.5 * (half_slope[:-1] + half_slope[1:]) * np.diff(path)
        raw = np.diff(principal)
        branches = np.round((predicted - raw) / np.pi)
        steps_phi = raw + np.pi * branches
        bad = (np.abs(predicted) >= 0.5 * np.pi) | (np.abs(steps_phi - predicted) >= 0.25 * np.pi)
        if not bad.any():
            break
        left, right = path[:-1][bad], path[1:][bad]
        if np.any(right - left <= 1e-14 * np.maximum(right, 1.0)):
            raise PhaseUnwrapError(f"phase unwrap step underflow near k={left[0]:.10g}")
        path = np.union1d(path, 0.5 * (left + right))
    else:
        raise PhaseUnwrapError(f"phase unwrap did not settle after {UNWRAP_MAX_REFINE} refinements")

    # 分支数是整数，累加不引入舍入误差
    phi_path = principal + np.pi * np.concatenate(([0.0], np.cumsum(branches)))
    phi = np.empty_like(ks)
    phi[order] = phi_path[np.searchsorted(path, sorted_ks)]
    return phi


def phase_resonant(well: PotentialWell, k: float) -> float:
    """共振相位 φ(k) 的连续分支，tan φ = k·tan(qa)/q。"""
    return float(unwrap_resonant_phase(well, [k])[0])


def scatter_sample(well: PotentialWell, k: float) -> ScatterSample:
    """在单个 k 上计算 ScatterSample。

    l 直接用 |A|² 闭式给出（不做数值微分），τ = (l - 2a)/k。
    """
    row = scan(well, [k]).iloc[0]
    return ScatterSample(**{name: float(row[name]) for name in ScatterSample.__dataclass_fields__})


def scan(well: PotentialWell, ks) -> pd.DataFrame:
    """在一组 k 上计算所有散射函数（一次展开相位）。

    Returns:
        pd.DataFrame: 列为 SCAN_COLUMNS，行顺序与 ks 一致。
    """
    forms = closed_forms(well, np.atleast_1d(ks))
    k = forms['k']
    phi = unwrap_resonant_phase(well, k)
    theta = -k * well.a + phi
    sin_theta2 = np.sin(theta) ** 2
    with np.errstate(divide='ignore'):
        r0 = forms['sin'] / (forms['q'] * forms['cos'])
    return pd.DataFrame({
        'k': k,
        'q': forms['q'],
        'theta': theta,
        'phi': phi,
        'sigma': 4.0 * np.pi * sin_theta2 / (k * k),
        'sigma_theta': 4.0 * sin_theta2,
        'sigma_phi': 4.0 * np.sin(phi) ** 2,
        'tau': forms['tau'],
        'ell': forms['ell'],
        'p_trap': forms['p_trap'],
        'a2': forms['a2'],
        'r0': r0,
        'theta_mod_pi': np.mod(theta, np.pi),
        'phi_mod_pi': np.mod(phi, np.pi),
    }, columns=SCAN_COLUMNS)


def s_matrix(well: PotentialWell, k):
    """S = -e^{-2ika}·(cos qa + i(k/q) sin qa)/(cos qa - i(k/q) sin qa)。"""
    forms = closed_forms(well, k)
    kq = forms['k'] / forms['q']
    numerator = forms['cos'] + 1j * kq * forms['sin']
    denominator = forms['cos'] - 1j * kq * forms['sin']
    return -np.exp(-2j * forms['k'] * well.a) * numerator / denominator


def reaction_function(well: PotentialWell, k) -> Tuple[np.ndarray, np.ndarray]:
    """反应函数 R0 = ψ/ψ' |_{r=a} = tan(qa)/q 及其对 k 的导数。cos(qa)=0 处为 ±inf。"""
    forms = closed_forms(well, k)
    q, c, s = forms['q'], forms['cos'], forms['sin']
    with np.errstate(divide='ignore', invalid='ignore'):
        r0 = s / (q * c)
        dr0 = (forms['k'] / q) * (well.a / (q * c * c) - s / (q * q * c))
    return r0, dr0


def traversal_distance_from_reaction(well: PotentialWell, k) -> Tuple[np.ndarray, np.ndarray]:
    """由 R0 与 R0' 计算 (l, a·P)：l = 2(R0 + kR0')/(1+(kR0)²)，aP = 2kR0'/(1+(kR0)²)。"""
    k = _positive_k(k)
    r0, dr0 = reaction_function(well, k)
    denom = 1.0 + (k * r0) ** 2
    return 2.0 * (r0 + k * dr0) / denom, 2.0 * k * dr0 / denom


def traversal_distance_alt(well: PotentialWell, k) -> np.ndarray:
    # l = a·P + q·sin(2qa)/den
    forms = closed_forms(well, k)
    return well.a * forms['p_trap'] + forms['q'] * np.sin(2.0 * forms['qa']) / forms['den']


def wavefunction(well: PotentialWell, k: float, r):
    """散射波函数 ψ(k; r)：阱内 A·sin(qr)，阱外 e^{-ikr} + S·e^{ikr}。

    Raises:
        DomainError: k <= 0 或 r < 0。
    """
    k = float(_positive_k(k))
    r = np.asarray(r, dtype=float)
    require(np.all(np.isfinite(r)) and np.all(r >= 0), "radius r must be nonnegative")
    q = math.sqrt(k * k + 2.0 * well.v0)
    qa = q * well.a
    kq = k / q
    denominator = math.cos(qa) - 1j * kq * math.sin(qa)
    amplitude = -2j * kq * np.exp(-1j * k * well.a) / denominator
    s = complex(s_matrix(well, k))
    inside = amplitude * np.sin(q * r)
    outside = np.exp(-1j * k * r) + s * np.exp(1j * k * r)
    value = np.where(r <= well.a, inside, outside)
    return complex(value) if value.ndim == 0 else value


@lru_cache(maxsize=8)
def _legendre(order: int) -> Tuple[np.ndarray, np.ndarray]:
    nodes, weights = roots_legendre(order)
    return nodes, weights


def gauss_legendre(func, lo: float, hi: float, n_points: int, order: int = QUAD_ORDER) -> float:
    """复合 Gauss-Legendre 求积：n_points // order 个等宽子区间，每段 order 个节点。"""
    if hi <= lo:
        return 0.0
    nodes, weights = _legendre(order)
    panels = max(1, n_points // order)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)[:, None]
    mid = 0.5 * (edges[:-1] + edges[1:])[:, None]
    x = mid + half * nodes[None, :]
    return float(np.sum(half * weights[None, :] * func(x)))


@doubling('n_points', retries=QUAD_MAX_DOUBLINGS, same=lambda prev, cur: abs(prev - cur) < QUAD_TOL, logger=logger)
def _density_integral(well: PotentialWell, k: float, radius: float, n_points: int) -> float:
    density = lambda r: np.abs(wavefunction(well, k, r)) ** 2
    total = gauss_legendre(density, 0.0, well.a, n_points)
    if radius > well.a:
        total += gauss_legendre(density, well.a, radius, n_points)
    return total / radius


def trapping_probability_quadrature(well: PotentialWell, k: float, n_points: int = 256,
                                    r: Optional[float] = None) -> float:
    """俘获概率的求积“神谕”：(1/r)∫₀ʳ|ψ|²dr，默认 r = a。

    直接对波函数求积，与闭式 P(k) 相互独立；节点数从 n_points 起不断翻倍，
    直到相邻两次结果之差 < QUAD_TOL。

    Args:
        well: 势阱。
        k: 正波数。
        n_points: 初始节点总数，至少 16。
        r: 积分上限，None 表示 a；必须 >= a。
    """
    _positive_k(k)
    require(int(n_points) >= 16, f"n_points must be at least 16, got {n_points}")
    radius = well.a if r is None else float(r)
    require(radius >= well.a, f"radius r={radius} must not be smaller than a={well.a}")
    return _density_integral(well, float(k), radius, int(n_points))


def radius_extended(well: PotentialWell, k: float, r: float) -> RadiusExtendedSample:
    """把共振相位、l 与 P 的计算半径从 a 移到 r >= a。

    φ_r = θ + k·r，l_r = l_a + 2(r - a)，
    r·P_r = a·P_a + 2(r - a) - [sin(2φ_r) - sin(2φ_a)]/k。
    """
    require(r is not None and math.isfinite(r) and r >= well.a, f"radius r={r} must not be smaller than a={well.a}")
    sample = scatter_sample(well, k)
    phi_r = sample.theta + k * r
    ell_r = sample.ell + 2.0 * (r - well.a)
    p_r = (well.a * sample.p_trap + 2.0 * (r - well.a)
           - (math.sin(2.0 * phi_r) - math.sin(2.0 * sample.phi)) / k) / r
    return RadiusExtendedSample(k=float(k), r=float(r), phi_r=phi_r, ell_r=ell_r, p_r=p_r)


def radius_profile(well: PotentialWell, r: float, ks) -> pd.DataFrame:
    """radius_extended 的向量化版本，列为 k, phi_r_mod_pi, ell_r, p_r。"""
    require(r is not None and math.isfinite(r) and r >= well.a, f"radius r={r} must not be smaller than a={well.a}")
    frame = scan(well, ks)
    k = frame['k'].to_numpy()
    phi_r = frame['theta'].to_numpy() + k * r
    p_r = (well.a * frame['p_trap'].to_numpy() + 2.0 * (r - well.a)
           - (np.sin(2.0 * phi_r) - np.sin(2.0 * frame['phi'].to_numpy())) / k) / r
    return pd.DataFrame({
        'k': k,
        'phi_r_mod_pi': np.mod(phi_r, np.pi),
        'ell_r': frame['ell'].to_numpy() + 2.0 * (r - well.a),
        'p_r': p_r,
    })


def sigma_peak_positions(well: PotentialWell, k_max: float) -> np.ndarray:
    """σ_φ 的解析极大位置：cos(qa) = 0 且 qa > α 的全部 k <= k_max。"""
    q_max_a = math.sqrt(k_max * k_max + 2.0 * well.v0) * well.a
    m = math.floor(well.alpha / math.pi - 0.5) + 1
    qa = (np.arange(m, math.floor(q_max_a / math.pi - 0.5) + 1) + 0.5) * np.pi
    # sqrt((qa-α)(qa+α)) 在近阈值处避免相消
    ks = np.sqrt((qa - well.alpha) * (qa + well.alpha)) / well.a
    return ks[(ks > 0) & (ks <= k_max)]


def first_sigma_peaks(well: PotentialWell, count: int = 2) -> np.ndarray:
    """前 count 个 σ_φ 解析极大（不受 k 上限约束）。"""
    m = math.floor(well.alpha / math.pi - 0.5) + 1
    qa = (np.arange(m, m + count) + 0.5) * np.pi
    return np.sqrt((qa - well.alpha) * (qa + well.alpha)) / well.a


def zero_energy_traversal_ratio(well: PotentialWell) -> float:
    # k -> 0 时 l/2a = tan(α)/α
    return math.tan(well.alpha) / well.alpha
