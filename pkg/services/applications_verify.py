"""
偏微分方程验证服务
θ函数的热方程残差、热传导边值问题的级数解与显式差分对比、非线性薛定谔方程周期解的约定搜索
"""

import logging
import math
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from models.exceptions import DomainError, NonConvergence, UnstableScheme
from models.lattice import LatticeParameter, TruncationPolicy
from models.pde_types import (
    BoundaryCondition, GridSpec1D, ModulusArgument, NLSCandidate, PhaseGrouping,
)
from models.verification_report import Measurement, MeasurementKind, VerificationReport
from services.elliptic import cn_theta, dn_theta, elliptic_point, sn_theta
from services.theta_classical import agm_K, lattice_from_modulus, theta_series
from utils.complex_core import (
    DEFAULT_POLICY, complex_cos, second_difference, sum_until_negligible,
)

logger = logging.getLogger(__name__)

# 显式格式稳定性上限 κ·dt/Δv²
STABILITY_LIMIT = 0.4
NLS_TIME_STEP = 1e-5


def heat_residual_theta(which: int, v: complex, lat: LatticeParameter,
                        h_v: float = 1e-4, h_tau: float = 1e-4,
                        policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
    """∂²θ/∂v² - 4iπ·∂θ/∂τ, τ 导数取实方向与虚方向中心差分的平均"""
    if lat.is_degenerate:
        return 0j
    if lat.tau_im <= 10 * h_tau:
        raise DomainError(f"Im τ = {lat.tau_im:.3g} 过小, τ 差分步长 {h_tau} 需小于其 1/10")
    v = complex(v)

    def theta_at(x: complex, lattice: LatticeParameter = lat) -> complex:
        return theta_series(which, x, lattice, policy)

    d2v = second_difference(theta_at, v, h_v)
    d_tau_real = (theta_at(v, lat.shifted(h_tau)) - theta_at(v, lat.shifted(-h_tau))) / (2 * h_tau)
    d_tau_imag = (theta_at(v, lat.shifted(1j * h_tau))
                  - theta_at(v, lat.shifted(-1j * h_tau))) / (2j * h_tau)
    d_tau = (d_tau_real + d_tau_imag) / 2
    return d2v - 4j * math.pi * d_tau


def heat_mode_residual(n: int, v: complex, lat: LatticeParameter,
                       half_integer: bool = False) -> complex:
    """单个 Fourier 模 2q^{m²}cos(2mπv) 的解析残差, m = n 或 n+½"""
    m = n + 0.5 if half_integer else float(n)
    mode = 2 * lat.nome_power(m * m) * complex_cos(2 * m * math.pi * complex(v))
    d2v = -(2 * m * math.pi) ** 2 * mode
    d_tau = 1j * math.pi * m * m * mode
    return complex(d2v - 4j * math.pi * d_tau)


def heat_theta_report(lat: LatticeParameter, points: Sequence[complex],
                      h: float = 1e-4, policy: TruncationPolicy = DEFAULT_POLICY,
                      tolerance: float = 1e-5, mode_tolerance: float = 1e-10,
                      artifact_version: str = "") -> VerificationReport:
    """θ1-θ4 满足 ∂²θ/∂v² = 4iπ ∂θ/∂τ"""
    measurements = []
    for which in (1, 2, 3, 4):
        residuals = [abs(heat_residual_theta(which, v, lat, h, h, policy)) for v in points]
        worst = max(residuals)
        measurements.append(Measurement(f"heat_residual_theta{which}", "d2_dv2", "4i_pi_d_dtau",
                                        worst, worst, len(residuals), tolerance=tolerance))
    for label, half in (("integer", False), ("half_integer", True)):
        residuals = [abs(heat_mode_residual(1, v, lat, half)) for v in points]
        worst = max(residuals)
        measurements.append(Measurement(f"heat_mode_residual_{label}", "mode_d2_dv2",
                                        "mode_4i_pi_d_dtau", worst, worst, len(residuals),
                                        tolerance=mode_tolerance))
    parameters = {"q": lat.nome, "h": h, "n_points": len(points)}
    return VerificationReport.build("heat_theta", ["∂²y/∂v² = 4iπ ∂y/∂τ"], parameters,
                                    measurements, artifact_version)


def heat_bvp_series(v: float, t: float, kappa: float = 1.0,
                    policy: TruncationPolicy = DEFAULT_POLICY,
                    boundary: BoundaryCondition = BoundaryCondition.DIRICHLET) -> float:
    """δ(v-½) 初值的级数解

    dirichlet: 2 Σ (-1)ⁿ e^{-(2n+1)²π²κt} sin((2n+1)πv), 即 θ1(v, 4iπκt)
    neumann:   1 + 2 Σ (-1)ⁿ e^{-4n²π²κt} cos(2nπv), 即 θ4(v, 4iπκt)
    """
    if t <= 0:
        raise NonConvergence(f"t = {t} 时级数不收敛")
    if kappa <= 0:
        raise DomainError(f"扩散系数 κ 必须为正: {kappa}")
    decay = math.pi ** 2 * kappa * t

    def dirichlet_terms():
        for n in range(policy.max_terms):
            sign = -1 if n % 2 else 1
            yield 2 * sign * math.exp(-(2 * n + 1) ** 2 * decay) * math.sin((2 * n + 1) * math.pi * v)

    def neumann_terms():
        yield 1.0
        for n in range(1, policy.max_terms):
            sign = -1 if n % 2 else 1
            yield 2 * sign * math.exp(-4 * n * n * decay) * math.cos(2 * n * math.pi * v)

    terms = dirichlet_terms() if boundary is BoundaryCondition.DIRICHLET else neumann_terms()
    return sum_until_negligible(terms, policy).real


def heat_bvp_fd_solve(grid: GridSpec1D, kappa: float, t_final: float, dt: float,
                      boundary: BoundaryCondition = BoundaryCondition.DIRICHLET,
                      mass: float = 1.0) -> np.ndarray:
    """显式差分推进 κ∂²y/∂v² = ∂y/∂t, 初值为 ½ 附近节点上质量为 mass 的尖峰"""
    dv = grid.spacing
    limit = STABILITY_LIMIT * dv * dv / kappa
    if dt > limit:
        raise UnstableScheme(f"dt={dt:.3e} 超过稳定上限 {limit:.3e} (Δv={dv:.3e}, κ={kappa})")
    if t_final <= 0:
        raise DomainError(f"终止时间必须为正: {t_final}")
    n_steps = math.ceil(t_final / dt)
    r = kappa * (t_final / n_steps) / (dv * dv)

    nodes = grid.nodes()
    u = np.zeros(grid.points)
    u[int(np.argmin(np.abs(nodes - 0.5)))] = mass / dv
    for _ in range(n_steps):
        laplacian = np.zeros_like(u)
        laplacian[1:-1] = u[2:] - 2 * u[1:-1] + u[:-2]
        if boundary is BoundaryCondition.NEUMANN:
            # 镜像虚节点
            laplacian[0] = 2 * (u[1] - u[0])
            laplacian[-1] = 2 * (u[-2] - u[-1])
        u = u + r * laplacian
        if boundary is BoundaryCondition.DIRICHLET:
            u[0] = 0.0
            u[-1] = 0.0
    logger.debug(f"差分推进完成: {n_steps} 步, r={r:.4f}, 边界 {boundary.value}")
    return u


def _fd_series_deviation(grid: GridSpec1D, kappa: float, t_final: float, dt: float,
                         boundary: BoundaryCondition, policy: TruncationPolicy,
                         mass: float = 1.0) -> Tuple[float, float, int]:
    solution = heat_bvp_fd_solve(grid, kappa, t_final, dt, boundary, mass)
    nodes = grid.nodes()
    interior = slice(1, -1) if boundary is BoundaryCondition.DIRICHLET else slice(None)
    series = np.array([heat_bvp_series(v, t_final, kappa, policy, boundary) for v in nodes])
    difference = np.abs(solution[interior] - series[interior])
    worst_abs = float(np.max(difference))
    worst_rel = float(np.max(difference / np.maximum(1.0, np.abs(series[interior]))))
    return worst_abs, worst_rel, int(difference.size)


def heat_bvp_fd_compare(grid: GridSpec1D, kappa: float = 1.0, t_final: float = 0.01,
                        dt: float = 1e-6,
                        boundary: BoundaryCondition = BoundaryCondition.DIRICHLET,
                        policy: TruncationPolicy = DEFAULT_POLICY, tolerance: float = 5e-3,
                        artifact_version: str = "") -> VerificationReport:
    """差分解与级数解在 t_final 的最大偏差, 加密一倍后的改进, 以及印刷质量 π 的偏差"""
    if t_final * kappa * math.pi ** 2 < 0.05:
        logger.warning(f"κ·t·π² = {t_final * kappa * math.pi ** 2:.3g} 偏小, 初始尖峰尚未充分平滑")
    coarse_abs, coarse_rel, n_interior = _fd_series_deviation(
        grid, kappa, t_final, dt, boundary, policy)
    measurements = [Measurement("fd_vs_series", "explicit_fd", "series", coarse_abs, coarse_rel,
                                n_interior, tolerance=tolerance)]

    refined = GridSpec1D(grid.start, grid.end, 2 * grid.points - 1)
    refined_limit = STABILITY_LIMIT * refined.spacing ** 2 / kappa
    refined_dt = dt if dt <= refined_limit else refined_limit / 2
    fine_abs, fine_rel, fine_n = _fd_series_deviation(
        refined, kappa, t_final, refined_dt, boundary, policy)
    measurements.append(Measurement("fd_vs_series_refined", "explicit_fd", "series", fine_abs,
                                    fine_rel, fine_n, tolerance=tolerance))
    increase = max(0.0, fine_abs - coarse_abs)
    measurements.append(Measurement("refinement_monotone", "refined_deviation",
                                    "coarse_deviation", increase, increase, 1, tolerance=0.0))

    printed_abs, printed_rel, _ = _fd_series_deviation(
        grid, kappa, t_final, dt, boundary, policy, mass=math.pi)
    measurements.append(Measurement("printed_mass_pi", "explicit_fd_mass_pi", "series",
                                    printed_abs, printed_rel, n_interior, tolerance=tolerance,
                                    kind=MeasurementKind.PRINTED_FORM))
    parameters = {"grid": grid.to_dict(), "refined_points": refined.points, "kappa": kappa,
                  "t_final": t_final, "dt": dt, "refined_dt": refined_dt,
                  "boundary": boundary.value, "coarse_deviation": coarse_abs,
                  "refined_deviation": fine_abs}
    return VerificationReport.build(
        f"heat_bvp_{boundary.value}",
        ["κ∂²y/∂v² = ∂y/∂t", "θ(v,0) = πδ(v-½)", "heat boundary-value series"],
        parameters, measurements, artifact_version)


class _DnProfile:
    """dn(ξ, m) 及其对 ξ 的一、二阶导数"""

    def __init__(self, modulus: float, policy: TruncationPolicy):
        self.modulus = modulus
        self.lat = lattice_from_modulus(modulus)
        self.policy = policy

    def evaluate(self, xi: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        m2 = self.modulus ** 2
        dn = np.empty(xi.shape, dtype=complex)
        d1 = np.empty(xi.shape, dtype=complex)
        d2 = np.empty(xi.shape, dtype=complex)
        for i, value in enumerate(xi):
            pt = elliptic_point(complex(value), self.lat, self.policy)
            sn = sn_theta(pt, self.policy)
            cn = cn_theta(pt, self.policy)
            d = dn_theta(pt, self.policy)
            dn[i] = d
            d1[i] = -m2 * sn * cn
            d2[i] = -m2 * d * (cn * cn - sn * sn)
        return dn, d1, d2


def _psi(cand: NLSCandidate, profile: _DnProfile, x: np.ndarray, t: float) -> np.ndarray:
    xi = cand.r * x - 2 * cand.p_wave * cand.r * t
    dn, _, _ = profile.evaluate(xi)
    return cand.r * np.exp(1j * cand.phase(x, t)) * dn


def nls_residual(cand: NLSCandidate, x_grid: GridSpec1D, t_sample: float = 0.3,
                 h: float = NLS_TIME_STEP, policy: TruncationPolicy = DEFAULT_POLICY) -> float:
    """max |S·i·∂ψ/∂t + ∂²ψ/∂x² + 2|ψ|²ψ|, 空间导数解析求得, 时间导数中心差分"""
    profile = _DnProfile(cand.dn_modulus, policy)
    x = x_grid.nodes()
    r = cand.r
    xi = r * x - 2 * cand.p_wave * r * t_sample
    dn, d1, d2 = profile.evaluate(xi)
    carrier = np.exp(1j * cand.phase(x, t_sample))
    psi = r * carrier * dn
    phi_x = cand.phase_dx(t_sample)
    psi_xx = r * carrier * (-phi_x ** 2 * dn + 2j * phi_x * r * d1 + r * r * d2)
    psi_t = (_psi(cand, profile, x, t_sample + h) - _psi(cand, profile, x, t_sample - h)) / (2 * h)
    residual = cand.sign_time * 1j * psi_t + psi_xx + 2 * np.abs(psi) ** 2 * psi
    return float(np.max(np.abs(residual)))


def nls_default_grid(r: float, k: float, points: int = 400) -> GridSpec1D:
    """一个 dn 周期 [0, 2K(k)/r]"""
    return GridSpec1D(0.0, 2 * agm_K(k).real / r, points)


def nls_candidates(r: float, p_wave: float, k: float) -> List[NLSCandidate]:
    """{S=±1} × {A,B,C} × {k, k²} 共 12 种读法"""
    return [NLSCandidate(r, p_wave, k, sign, grouping, modulus)
            for sign in (1, -1) for grouping in PhaseGrouping for modulus in ModulusArgument]


def nls_convention_search(r: float, p_wave: float, k: float,
                          x_grid: Optional[GridSpec1D] = None, t_sample: float = 0.3,
                          policy: TruncationPolicy = DEFAULT_POLICY, tolerance: float = 1e-5,
                          separation: float = 1e4, h: float = NLS_TIME_STEP,
                          artifact_version: str = "") -> VerificationReport:
    """按残差给全部读法排序并声明最优者, 平局只记录不拆分"""
    grid = x_grid or nls_default_grid(r, k)
    residuals: Dict[str, float] = {}
    candidates = {}
    for cand in nls_candidates(r, p_wave, k):
        residuals[cand.label] = nls_residual(cand, grid, t_sample, h, policy)
        candidates[cand.label] = cand
        logger.debug(f"NLS 读法 {cand.label}: 残差 {residuals[cand.label]:.3e}")
    ranking = sorted(residuals, key=lambda label: (residuals[label], label))
    winner = ranking[0]
    ties = [label for label in ranking if residuals[label] <= max(tolerance, residuals[winner])]

    measurements = [Measurement(f"residual/{label}", label, "nls_equation", residuals[label],
                                residuals[label], grid.points, kind=MeasurementKind.INFO)
                    for label in ranking]
    measurements.append(Measurement("winning_convention", winner, "nls_equation",
                                    residuals[winner], residuals[winner], grid.points,
                                    tolerance=tolerance))
    winner_sign = candidates[winner].sign_time
    opposite = min(residuals[label] for label in ranking
                   if candidates[label].sign_time != winner_sign)
    ratio = residuals[winner] / opposite if opposite > 0 else math.inf
    # p = 0 时共轭读法与最优者并列, 比值不作判定
    measurements.append(Measurement(
        "sign_separation_ratio", winner, "best_opposite_sign", ratio, ratio, grid.points,
        tolerance=1.0 / separation,
        kind=MeasurementKind.INFO if p_wave == 0 else MeasurementKind.CHECK))
    printed = NLSCandidate(r, p_wave, k, 1, PhaseGrouping.C, ModulusArgument.K_SQUARED).label
    measurements.append(Measurement("printed_reading", printed, "nls_equation",
                                    residuals[printed], residuals[printed], grid.points,
                                    tolerance=tolerance, kind=MeasurementKind.PRINTED_FORM))
    parameters = {"r": r, "p_wave": p_wave, "k": k, "t_sample": t_sample, "h": h,
                  "grid": grid.to_dict(), "winner": winner, "ranking": ranking, "ties": ties}
    return VerificationReport.build(
        "nls_convention_search",
        ["i∂ψ/∂t + ∂²ψ/∂x² + 2|ψ|²ψ = 0", "ψ = r·e^{iφ}·dn(rx - 2prt)"],
        parameters, measurements, artifact_version)


def nls_plane_wave_check(r: float = 1.0, k: float = 1e-6, x_grid: Optional[GridSpec1D] = None,
                         t_sample: float = 0.3, policy: TruncationPolicy = DEFAULT_POLICY,
                         tolerance: float = 1e-6, h: float = NLS_TIME_STEP) -> Measurement:
    """k→0, p=0 时 ψ = r·e^{i(2-k²)r²t}, 频率应为 2r²"""
    grid = x_grid or nls_default_grid(r, k)
    cand = NLSCandidate(r, 0.0, k, 1, PhaseGrouping.B, ModulusArgument.K)
    residual = nls_residual(cand, grid, t_sample, h, policy)
    return Measurement("plane_wave_dispersion", cand.label, "omega_2r2", residual, residual,
                       grid.points, tolerance=tolerance)
