"""
闭式表达式解析

JSON 配置里的 Ψ 与初始密度用字符串给出，例如 "a*cos(theta)"。
为了安全，先用 ast 做白名单检查，再交给 sympy 解析；sympy 同时负责求导。

白名单：数值常数、pi、坐标符号、命名参数、+ - * /、非负整数次幂、cos、sin，
密度表达式额外允许 exp（von Mises 型峰）。
"""
import ast
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
import sympy

from apps.common.exceptions import ConfigurationError

WEIGHT_FUNCTIONS = ('cos', 'sin')
DENSITY_FUNCTIONS = ('cos', 'sin', 'exp')

_SYMPY_FUNCTIONS = {
    'cos': sympy.cos,
    'sin': sympy.sin,
    'exp': sympy.exp,
}

_ALLOWED_NODES = (
    ast.Expression, ast.BinOp, ast.UnaryOp, ast.Call, ast.Name, ast.Load, ast.Constant,
    ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.USub, ast.UAdd,
)


@dataclass(frozen=True, eq=False)
class ClosedForm:
    """
    已解析的闭式表达式

    Attributes:
        text: 原始字符串
        expr: sympy 表达式（参数已代入）
        symbols: 坐标符号，顺序与空间坐标一致
    """
    text: str
    expr: sympy.Expr
    symbols: Tuple[sympy.Symbol, ...]

    @property
    def is_zero(self) -> bool:
        return bool(self.expr == 0)

    def derivative(self, *names: str) -> 'ClosedForm':
        lookup = {s.name: s for s in self.symbols}
        expr = self.expr
        for name in names:
            expr = sympy.diff(expr, lookup[name])
        label = f"d({self.text})/d{''.join(names)}"
        return ClosedForm(text=label, expr=expr, symbols=self.symbols)

    def evaluate(self, *coords: np.ndarray) -> np.ndarray:
        """在节点坐标上求值，常数表达式也返回完整形状的数组"""
        func = sympy.lambdify(self.symbols, self.expr, modules='numpy')
        shape = np.broadcast(*coords).shape if coords else ()
        values = np.asarray(func(*coords), dtype=float)
        return np.array(np.broadcast_to(values, shape), dtype=float)


def _check_tree(tree: ast.AST, allowed_names: Sequence[str], functions: Sequence[str], text: str):
    call_targets = set()
    for node in ast.walk(tree):
        if not isinstance(node, _ALLOWED_NODES):
            raise ConfigurationError(
                f'expression {text!r}: {type(node).__name__} is not allowed'
            )
        if isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in functions:
                raise ConfigurationError(
                    f'expression {text!r}: only {", ".join(functions)} may be called'
                )
            if node.keywords or len(node.args) != 1:
                raise ConfigurationError(f'expression {text!r}: functions take one argument')
            call_targets.add(id(node.func))
        elif isinstance(node, ast.Constant):
            if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
                raise ConfigurationError(f'expression {text!r}: non-numeric constant')
        elif isinstance(node, ast.BinOp) and isinstance(node.op, ast.Pow):
            exponent = node.right
            if not (isinstance(exponent, ast.Constant) and isinstance(exponent.value, int)
                    and not isinstance(exponent.value, bool) and exponent.value >= 0):
                raise ConfigurationError(
                    f'expression {text!r}: only non-negative integer powers are allowed'
                )

    for node in ast.walk(tree):
        if isinstance(node, ast.Name) and id(node) not in call_targets:
            if node.id not in allowed_names:
                raise ConfigurationError(f'expression {text!r}: unknown name {node.id!r}')


def parse_closed_form(
    text: str,
    coordinate_names: Sequence[str],
    params: Optional[Dict[str, float]] = None,
    functions: Sequence[str] = WEIGHT_FUNCTIONS,
) -> ClosedForm:
    """
    解析白名单闭式表达式

    Args:
        text: 表达式字符串
        coordinate_names: 坐标符号名，如 ('theta',) 或 ('x', 'y')
        params: 命名参数取值，如 {'a': 0.1}
        functions: 允许调用的函数名

    Returns:
        ClosedForm
    """
    params = dict(params or {})
    if not isinstance(text, str) or not text.strip():
        raise ConfigurationError('expression must be a non-empty string')

    clash = set(params) & (set(coordinate_names) | set(_SYMPY_FUNCTIONS) | {'pi'})
    if clash:
        raise ConfigurationError(f'parameter names clash with reserved names: {sorted(clash)}')

    try:
        tree = ast.parse(text.strip(), mode='eval')
    except SyntaxError as exc:
        raise ConfigurationError(f'expression {text!r} is not valid: {exc.msg}') from exc

    _check_tree(tree, tuple(coordinate_names) + tuple(params) + ('pi',), functions, text)

    symbols = tuple(sympy.Symbol(name, real=True) for name in coordinate_names)
    namespace = {s.name: s for s in symbols}
    namespace.update({name: sympy.Float(float(value)) for name, value in params.items()})
    namespace.update({name: _SYMPY_FUNCTIONS[name] for name in functions})
    namespace['pi'] = sympy.pi

    try:
        expr = sympy.sympify(text.strip(), locals=namespace)
    except (sympy.SympifyError, TypeError, ValueError) as exc:
        raise ConfigurationError(f'expression {text!r} could not be parsed: {exc}') from exc

    return ClosedForm(text=text.strip(), expr=expr, symbols=symbols)
