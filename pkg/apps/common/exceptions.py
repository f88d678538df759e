"""
实验室统一异常体系

所有异常都继承自 LabError，管理命令据此统一转换为退出码 1；
配置、输入、定义域类错误同时是 ValueError，方便按 Python 习惯捕获。
"""
from typing import Any, Optional


class LabError(Exception):
    """实验室异常基类"""


class ConfigurationError(LabError, ValueError):
    """配置错误：分辨率过低、格式不支持、表达式不在白名单内等"""


class InputError(LabError, ValueError):
    """输入错误：网格不匹配、密度低于下界或未归一化、文件读写失败等"""


class DomainError(LabError, ValueError):
    """定义域错误：t < 0、m < n、m = n 但 Ψ ≠ 0、CD 参数不可行等"""


class UnsupportedSpaceError(DomainError):
    """当前模型空间不支持该操作（例如球面上的 Hodge 流）"""


class PreconditionError(DomainError):
    """不等式的前提条件不满足（例如两时刻界要求 R ≥ 0）"""


class ConvergenceError(LabError, RuntimeError):
    """
    迭代求解器未在最大迭代次数内收敛

    Attributes:
        last_iterate: 最后一次迭代的状态（势函数、ε、边缘误差等）
    """

    def __init__(self, message: str, last_iterate: Optional[Any] = None):
        super().__init__(message)
        self.last_iterate = last_iterate
