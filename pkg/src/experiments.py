# src/experiments.py
import sys,os
sys.path.append(os.path.abspath(os.path.dirname(__file__) + '/' + '..'))

import math
from dataclasses import dataclass, asdict
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

from config.config import FIGURE_POINTS, GRID_DENSITY, K_MIN, MAX_WORKERS, SWEEP_POINTS_PER_ALPHA
from util.log_utils import logger
from util.peak_finder import ResonanceRecord, first_traversal_maximum, local_maxima, resonance_report, scan_grid
from util.pole_finder import PoleKind, PoleSearchConfig, bound_states, find_poles
from util.scattering_core import (PotentialWell, first_sigma_peaks, make_well, make_well_from_alpha, scan,
                                  sigma_peak_positions)
from util.utils import batch_map, require

FIGURE_COLUMNS = ['k', 'tau', 'ell', 'p_trap', 'sigma', 'sigma_theta', 'sigma_phi', 'theta_mod_pi', 'phi_mod_pi']
RECORD_K_COLUMNS = ('k_star', 'k_tau', 'k_p', 'k_sigma', 'kappa', 'modulus')
TABLE1_LABELS = ('I', 'II', 'III', 'IV', 'V', 'VI', 'VII')

# 已发表的七个势阱：参数、第一个共振的峰位、最近极点、l(k*)/2a、φ(k*) mod π 与束缚态个数
PUBLISHED_TABLE1: Dict[str, Dict[str, float]] = {
    'I':   dict(a=2.4, v0=10.0, alpha=10.733, qb=3.91, k_star=0.8983, k_tau=0.8934, k_p=0.9990, k_sigma=0.9950,
                kappa=0.8994, modulus=0.9936, ell_ratio=1.0486, phi=1.33, bound_states=3),
    'II':  dict(a=12.0, v0=10.0, alpha=53.666, qb=17.58, k_star=0.9915, k_tau=0.9915, k_p=0.9952, k_sigma=0.9950,
                kappa=0.9913, modulus=0.9949, ell_ratio=1.0014, phi=1.53, bound_states=17),
    'III': dict(a=12.0, v0=0.4, alpha=10.733, qb=3.91, k_star=0.1797, k_tau=0.1787, k_p=0.1990, k_sigma=0.1990,
                kappa=0.1799, modulus=0.1987, ell_ratio=1.0486, phi=1.33, bound_states=3),
    'IV':  dict(a=8.7326, v0=10.0, alpha=39.0535, qb=12.931, k_star=0.4572, k_tau=0.4570, k_p=0.4716,
                k_sigma=0.4714, kappa=0.4572, modulus=0.4714, ell_ratio=1.0153, phi=0.68, bound_states=12),
    'V':   dict(a=8.7766, v0=10.0, alpha=39.2505, qb=12.994, k_star=0.0585, k_tau=0.0, k_p=0.1407, k_sigma=0.1406,
                kappa=0.0825, modulus=0.1407, ell_ratio=1.352, phi=1.39, bound_states=12),
    'VI':  dict(a=8.7546, v0=10.0, alpha=39.1520, qb=12.962, k_star=0.3274, k_tau=0.3269, k_p=0.3475,
                k_sigma=0.3474, kappa=0.3279, modulus=0.3473, ell_ratio=1.0293, phi=1.44, bound_states=12),
    'VII': dict(a=8.7987, v0=10.0, alpha=39.3489, qb=13.025, k_star=1.7948, k_tau=1.7948, k_p=1.7991,
                k_sigma=1.7985, kappa=1.7943, modulus=1.7983, ell_ratio=1.0009, phi=1.54, bound_states=13),
}


def table1_well(label: str) -> PotentialWell:
    """按标签 I–VII 构造七个代表性势阱之一。

    I–III 直接用 (a, |V0|)；IV–VII 的半径只印了四位小数，改用 (a, α) 反推 v0，
    否则靠近阈值的 V 号阱第一个 σ_φ 峰会偏移 1e-3 以上。
    """
    require(label in PUBLISHED_TABLE1, f"unknown well label {label!r}, expected one of {TABLE1_LABELS}")
    row = PUBLISHED_TABLE1[label]
    if label in ('I', 'II', 'III'):
        return make_well(row['a'], row['v0'])
    return make_well_from_alpha(row['a'], row['alpha'])


@dataclass(frozen=True)
class Table1Row:
    well_label: str
    a: float
    v0: float
    alpha: float
    qb: float
    bound_states: int
    record: ResonanceRecord

    def to_dict(self) -> Dict[str, float]:
        row = {'well': self.well_label, 'a': self.a, 'v0': self.v0, 'alpha': self.alpha, 'qb': self.qb,
               'bound_states': self.bound_states}
        row.update(self.record.to_dict())
        return row


@dataclass(frozen=True)
class SweepPoint:
    alpha: float
    k_star_1: float
    ell_ratio_1: float
    boundary: bool = False


@dataclass(frozen=True)
class ScalingReport:
    """势阱缩放 a -> f·a、v0 -> v0/f² 前后各散射函数的最大偏差。

    φ、σ_φ、P 比较绝对差；l、τ 先乘以 f、f² 再比较相对差。
    record_diff 为第一个共振记录（k 列乘回 f）各字段的最大差，未比较时为 NaN。
    """
    factor: float
    original: PotentialWell
    scaled: PotentialWell
    phi_diff: float
    sigma_phi_diff: float
    p_trap_diff: float
    ell_rel_diff: float
    tau_rel_diff: float
    record_diff: float
    tol: float
    record_tol: float

    @property
    def passed(self) -> bool:
        curves = max(self.phi_diff, self.sigma_phi_diff, self.p_trap_diff, self.ell_rel_diff, self.tau_rel_diff)
        records = math.isnan(self.record_diff) or self.record_diff <= self.record_tol
        return curves <= self.tol and records

    def to_frame(self) -> pd.DataFrame:
        checks = [('phi', self.phi_diff, self.tol), ('sigma_phi', self.sigma_phi_diff, self.tol),
                  ('p_trap', self.p_trap_diff, self.tol), ('ell', self.ell_rel_diff, self.tol),
                  ('tau', self.tau_rel_diff, self.tol), ('record', self.record_diff, self.record_tol)]
        return pd.DataFrame({
            'check': [name for name, _, _ in checks],
            'max_diff': [value for _, value, _ in checks],
            'tolerance': [tol for _, _, tol in checks],
            'passed': [bool(math.isnan(value) or value <= tol) for _, value, tol in checks],
        })


@dataclass(frozen=True)
class FigureData:
    curves: pd.DataFrame
    markers: pd.DataFrame


def report_k_max(well: PotentialWell) -> float:
    # 扫到第二个 σ_φ 峰之后一点，保证第一个共振两侧都有相邻的 l 峰可供匹配
    return 1.05 * float(first_sigma_peaks(well, 2)[1])


def first_resonance(well: PotentialWell, k_max: Optional[float] = None,
                    density: int = GRID_DENSITY) -> ResonanceRecord:
    records = resonance_report(well, report_k_max(well) if k_max is None else k_max, density)
    require(len(records) > 0, f"no resonance found for alpha={well.alpha:.8g}")
    return records[0]


def _table1_row(label: str) -> Table1Row:
    well = table1_well(label)
    record = first_resonance(well)
    logger.log_info(f"【experiments】well {label}: k*={record.k_star:.6g} k_sigma={record.k_sigma:.6g} "
                    f"ratio={record.ell_ratio:.6g}")
    return Table1Row(well_label=label, a=well.a, v0=well.v0, alpha=well.alpha, qb=well.qb,
                     bound_states=len(bound_states(well)), record=record)


def table1(labels=TABLE1_LABELS) -> List[Table1Row]:
    """从头计算势阱表的各行（默认全部七个势阱），顺序与 labels 一致。"""
    return batch_map(_table1_row, labels, max_workers=MAX_WORKERS, logger=logger)


def table1_frame(rows: List[Table1Row]) -> pd.DataFrame:
    return pd.DataFrame([row.to_dict() for row in rows])


def alpha_sweep(alpha_min: float, alpha_max: float, n: int, a_fixed: float = 1.0,
                n_samples: int = SWEEP_POINTS_PER_ALPHA) -> List[SweepPoint]:
    """固定半径 a_fixed，在 [alpha_min, alpha_max] 上等距取 n 个 α，记录 l 的第一个极大与 l/2a。

    Raises:
        DomainError: alpha_max <= alpha_min <= 0 或 n < 2。
    """
    require(alpha_min > 0, f"--alpha-min must be positive, got {alpha_min}")
    require(alpha_max > alpha_min, f"--alpha-max={alpha_max} must exceed --alpha-min={alpha_min}")
    require(int(n) >= 2, f"--n must be at least 2, got {n}")
    require(a_fixed > 0, f"--a must be positive, got {a_fixed}")

    def sweep_point(alpha: float) -> SweepPoint:
        well = make_well_from_alpha(a_fixed, alpha)
        peak = first_traversal_maximum(well, n_samples)
        return SweepPoint(alpha=float(alpha), k_star_1=peak.k, ell_ratio_1=peak.value / (2.0 * well.a),
                          boundary=peak.boundary)

    alphas = np.linspace(alpha_min, alpha_max, int(n))
    points = batch_map(sweep_point, alphas.tolist(), max_workers=MAX_WORKERS)
    logger.log_info(f"【experiments】alpha sweep [{alpha_min}, {alpha_max}] with {n} points, "
                    f"min ratio {min(p.ell_ratio_1 for p in points):.12g}")
    return points


def sweep_frame(points: List[SweepPoint]) -> pd.DataFrame:
    return pd.DataFrame([asdict(p) for p in points], columns=['alpha', 'k_star_1', 'ell_ratio_1', 'boundary'])


def bound_state_thresholds(alpha_min: float, alpha_max: float) -> List[float]:
    """(alpha_min, alpha_max] 内 Q_B 穿过整数的 α，即 α = (N - 1/2)π。"""
    first = math.floor(alpha_min / math.pi + 0.5) + 1
    last = math.floor(alpha_max / math.pi + 0.5)
    return [(n - 0.5) * math.pi for n in range(first, last + 1)]


def sawtooth_drops(points: List[SweepPoint], fraction: float = 0.5) -> List[float]:
    """锯齿下降的位置：l/2a - 1 相对前一个点缩小超过 fraction 的 α。"""
    drops = []
    for prev, cur in zip(points[:-1], points[1:]):
        excess = prev.ell_ratio_1 - 1.0
        if excess > 0 and cur.ell_ratio_1 - 1.0 < (1.0 - fraction) * excess:
            drops.append(cur.alpha)
    return drops


def _mapped_max_diff(original: np.ndarray, scaled: np.ndarray, power: float, factor: float) -> float:
    expected = original * factor ** power
    return float(np.max(np.abs(scaled - expected) / np.maximum(1.0, np.abs(expected))))


def scaling_check(well: PotentialWell, factor: float, ks=None, compare_records: bool = True,
                  tol: float = 1e-12, record_tol: float = 1e-8) -> ScalingReport:
    """检查缩放律：a' = f·a、v0' = v0/f²、k' = k/f 时 φ、σ_φ、P 不变，l' = f·l，τ' = f²·τ。

    Args:
        well: 原势阱。
        factor: 缩放因子 f > 0。
        ks: 原势阱上的比较点，默认取 [0.01, 第三个 σ_φ 峰] 上的 1025 个点。
        compare_records: 是否同时比较第一个共振的 ResonanceRecord。
        tol, record_tol: 曲线与记录的容差。
    """
    require(factor is not None and math.isfinite(factor) and factor > 0, f"--factor must be positive, got {factor}")
    scaled_well = make_well(factor * well.a, well.v0 / (factor * factor))
    if ks is None:
        ks = np.linspace(0.01, float(first_sigma_peaks(well, 3)[-1]), 1025)
    ks = np.asarray(ks, dtype=float)

    base, mapped = scan(well, ks), scan(scaled_well, ks / factor)
    diff = lambda column: float(np.max(np.abs(base[column].to_numpy() - mapped[column].to_numpy())))

    record_diff = math.nan
    if compare_records:
        original_record = first_resonance(well)
        # 缩小 k 轴时同比加密网格，两边每个共振的采样点数一致
        scaled_record = first_resonance(scaled_well, report_k_max(well) / factor,
                                        int(round(GRID_DENSITY * max(1.0, factor))))
        record_diff = 0.0
        for name, value in original_record.to_dict().items():
            other = scaled_record.to_dict()[name]
            if name in RECORD_K_COLUMNS:
                other = other * factor
            if isinstance(value, bool) or name == 'n':
                record_diff = max(record_diff, 0.0 if value == other else math.inf)
            elif not (math.isnan(value) and math.isnan(other)):
                record_diff = max(record_diff, abs(value - other))

    report = ScalingReport(
        factor=float(factor), original=well, scaled=scaled_well,
        phi_diff=diff('phi'), sigma_phi_diff=diff('sigma_phi'), p_trap_diff=diff('p_trap'),
        ell_rel_diff=_mapped_max_diff(base['ell'].to_numpy(), mapped['ell'].to_numpy(), 1.0, factor),
        tau_rel_diff=_mapped_max_diff(base['tau'].to_numpy(), mapped['tau'].to_numpy(), 2.0, factor),
        record_diff=record_diff, tol=tol, record_tol=record_tol,
    )
    logger.log_info(f"【experiments】scaling by {factor}: passed={report.passed}")
    return report


def figure_data(well: PotentialWell, k_min: float, k_max: float, n: int = FIGURE_POINTS,
                pole_cfg: Optional[PoleSearchConfig] = None) -> FigureData:
    """图用数据：等距 k 网格上的各散射函数，以及 l 峰、σ_φ 峰与极点实部的标记。"""
    require(int(n) >= 3, f"--n must be at least 3, got {n}")
    markers = figure_markers(well, k_min, k_max, pole_cfg)
    curves = scan(well, np.linspace(k_min, k_max, int(n)))[FIGURE_COLUMNS]
    return FigureData(curves=curves.reset_index(drop=True), markers=markers)


def figure_markers(well: PotentialWell, k_min: float, k_max: float,
                   pole_cfg: Optional[PoleSearchConfig] = None) -> pd.DataFrame:
    """[k_min, k_max] 内的标记表（列 marker, n, k）。"""
    require(k_min >= K_MIN, f"--kmin must be at least {K_MIN}, got {k_min}")
    require(k_max > k_min, f"--kmax={k_max} must exceed --kmin={k_min}")
    markers = []
    ell_peaks = [p for p in local_maxima(scan_grid(well, 'ell', k_min, k_max)) if not p.boundary]
    markers += [('ell_peak', i, p.k) for i, p in enumerate(ell_peaks, 1)]
    markers += [('sigma_peak', i, float(k)) for i, k in enumerate(sigma_peak_positions(well, k_max), 1)
                if k >= k_min]
    poles = find_poles(well, pole_cfg or PoleSearchConfig(re_max=k_max))
    resonances = [p for p in poles if p.kind is PoleKind.RESONANCE and k_min <= p.kappa <= k_max]
    markers += [('pole_re', i, p.kappa) for i, p in enumerate(resonances, 1)]
    return pd.DataFrame(markers, columns=['marker', 'n', 'k'])
