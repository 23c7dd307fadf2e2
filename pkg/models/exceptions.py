"""
数值计算异常
θ函数、椭圆函数与验证流程共用的异常类型
"""


class ThetaComputationError(Exception):
    """数值计算异常基类"""
    pass


class NonConvergence(ThetaComputationError):
    """级数在截断上限内未收敛"""
    pass


class DomainError(ThetaComputationError):
    """参数超出定义域(如 log(0)、Im τ ≤ 0)"""
    pass


class NumericOverflow(ThetaComputationError):
    """运算结果溢出或出现 NaN/Inf"""
    pass


class DegenerateModulus(ThetaComputationError):
    """模数退化(k = ±1 时 K 发散)"""
    pass


class OutsideStrip(ThetaComputationError):
    """自变量位于展开式声明的有效带之外"""
    pass


class OutsideConvergenceRegion(ThetaComputationError):
    """自变量位于幂级数收敛圆之外"""
    pass


class IllConditioned(ThetaComputationError):
    """线性求解残差过大"""
    pass


class PoleEncountered(ThetaComputationError):
    """分母接近零(θ4 的零点或有理式的极点)"""
    pass


class NearZeroOfNumerator(ThetaComputationError):
    """展开式无法取到分子零点处的值"""
    pass


class UnstableScheme(ThetaComputationError):
    """显式差分格式违反稳定性条件"""
    pass


class ConfigurationError(Exception):
    """配置或命令行参数错误"""
    pass
