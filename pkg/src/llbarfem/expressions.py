"""Initial data: named presets and ``f_x; f_y; f_z`` expression triples.

Expressions use the variables ``x`` and ``y``, the constant ``pi``, the
functions ``sin`` and ``cos``, numeric literals and ``+ - * / ^``. They are
parsed with sympy, differentiated symbolically for the Ritz projection and
compiled to vectorised numpy callables.
"""

from dataclasses import dataclass
from tokenize import TokenError

import numpy as np
import sympy
from sympy.parsing.sympy_parser import convert_xor, parse_expr, standard_transformations

from llbarfem.errors import InvalidValueError
from llbarfem.logging import get_logger

logger = get_logger(__name__)

X, Y = sympy.symbols("x y", real=True)

PRESET_EXPRESSIONS: dict[str, str] = {
    "sim1": "cos(2*pi*x); sin(2*pi*y); 2*cos(2*pi*x)*sin(2*pi*y)",
    "sim2": "-2*y*cos(2*pi*x); 4*x^2*sin(2*pi*y); 2*cos(2*pi*x)*sin(2*pi*y)",
    "zero": "0; 0; 0",
}

_ALLOWED_FUNCTIONS = {sympy.sin, sympy.cos}
_NAMESPACE = {
    "__builtins__": {},
    "x": X,
    "y": Y,
    "pi": sympy.pi,
    "sin": sympy.sin,
    "cos": sympy.cos,
    "Integer": sympy.Integer,
    "Float": sympy.Float,
    "Rational": sympy.Rational,
    "Symbol": sympy.Symbol,
}
_TRANSFORMATIONS = standard_transformations + (convert_xor,)
_PARSE_ERRORS = (
    SyntaxError,
    TokenError,
    TypeError,
    ValueError,
    AttributeError,
    NameError,
    sympy.SympifyError,
)


def parse_component(text: str) -> sympy.Expr:
    """Parse one scalar expression in x and y.

    Raises:
        InvalidValueError: Syntax error, unknown name or unsupported function
    """
    try:
        expr = parse_expr(text, local_dict={}, global_dict=dict(_NAMESPACE), transformations=_TRANSFORMATIONS)
    except _PARSE_ERRORS as e:
        raise InvalidValueError(f"cannot parse expression {text!r}: {e}", key="initial_data") from e

    if not isinstance(expr, sympy.Expr):
        raise InvalidValueError(f"expression {text!r} is not arithmetic", key="initial_data")
    unknown = expr.free_symbols - {X, Y}
    if unknown:
        names = ", ".join(sorted(str(s) for s in unknown))
        raise InvalidValueError(f"unknown variable(s) {names} in {text!r}", key="initial_data")
    if any(f.func not in _ALLOWED_FUNCTIONS for f in expr.atoms(sympy.Function)):
        raise InvalidValueError(f"unsupported function in {text!r}", key="initial_data")
    return expr


def parse_vector_expression(text: str) -> tuple[sympy.Expr, sympy.Expr, sympy.Expr]:
    """Parse ``f_x; f_y; f_z`` into three sympy expressions."""
    parts = [part.strip() for part in text.split(";")]
    if len(parts) != 3 or not all(parts):
        raise InvalidValueError(
            f"initial data needs three ';'-separated components, got {text!r}", key="initial_data"
        )
    fx, fy, fz = (parse_component(part) for part in parts)
    return fx, fy, fz


def _vectorise(expr: sympy.Expr):
    f = sympy.lambdify((X, Y), expr, modules="numpy")

    def evaluate(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.broadcast_to(np.asarray(f(x, y), dtype=float), x.shape)

    return evaluate


@dataclass(frozen=True)
class InitialData:
    """Vector function u0 with its gradient, usable on 1D and 2D point sets.

    Points are (P, dim) arrays; in 1D the variable ``y`` is zero.
    """

    components: tuple[sympy.Expr, sympy.Expr, sympy.Expr]

    def _coordinates(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        points = np.asarray(points, dtype=float)
        x = points[:, 0]
        y = points[:, 1] if points.shape[1] > 1 else np.zeros_like(x)
        return x, y

    def __call__(self, points: np.ndarray) -> np.ndarray:
        x, y = self._coordinates(points)
        return np.stack([_vectorise(c)(x, y) for c in self.components], axis=1)

    def gradient(self, points: np.ndarray) -> np.ndarray:
        """(P, 3, dim) array; row c is the gradient of component c."""
        dim = np.asarray(points).shape[1]
        x, y = self._coordinates(points)
        variables = (X, Y)[:dim]
        rows = [
            np.stack([_vectorise(sympy.diff(c, v))(x, y) for v in variables], axis=1) for c in self.components
        ]
        return np.stack(rows, axis=1)

    def __str__(self) -> str:
        return "; ".join(str(c) for c in self.components)


def resolve_initial_data(source: str, mu: float = 0.0) -> InitialData:
    """Initial data for a preset name or an expression triple.

    ``constant`` is the uniform field (sqrt(mu), 0, 0), which the LLBar flow
    keeps fixed when beta = 0 (zero when mu <= 0).
    """
    name = source.strip()
    if name == "constant":
        value = float(np.sqrt(mu)) if mu > 0 else 0.0
        return InitialData((sympy.Float(value), sympy.Integer(0), sympy.Integer(0)))
    text = PRESET_EXPRESSIONS.get(name, name)
    data = InitialData(parse_vector_expression(text))
    logger.debug("initial_data_resolved", source=name, expression=str(data))
    return data
