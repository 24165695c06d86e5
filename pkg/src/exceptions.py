"""
统一异常定义

库中所有模块只抛出这些异常，命令行把它们映射为退出码。
"""


class TrineError(Exception):
    """容量计算库所有异常的基类"""


class DomainError(TrineError, ValueError):
    """参数超出允许范围"""


class DimensionMismatchError(DomainError):
    """向量、矩阵或系综的维度不一致"""


class ConstraintViolationError(DomainError):
    """测量不满足某个完备性条件"""

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class SingularChannelError(TrineError, ArithmeticError):
    """闭式先验优化遇到零分母 (delta == epsilon)"""


class ConvergenceError(TrineError, RuntimeError):
    """迭代方法未达到容差"""


class InfeasibleError(TrineError):
    "Raised when the linear program has no feasible point."


class UnboundedError(TrineError):
    "Raised when the linear program objective is unbounded."


class TreeInvariantError(TrineError, ValueError):
    """测量树节点违反某个定义等式"""

    def __init__(self, path, equality, residual=None):
        detail = f"node {path}: {equality}"
        if residual is not None:
            detail += f" (residual {residual:.3e})"
        super().__init__(detail)
        self.path = path
        self.equality = equality
        self.residual = residual


class CacheCorruptionError(TrineError):
    """缓存条目存在但无法解析"""


class UsageError(TrineError, ValueError):
    """命令行参数或配置文件条目错误"""


class ConfigKeyError(UsageError, KeyError):
    """配置文件中出现 RunConfig 没有的字段"""

    def __str__(self):
        return str(self.args[0]) if self.args else ""
