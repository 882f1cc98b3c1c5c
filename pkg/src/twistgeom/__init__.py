"""Deformation series, abelian twists, star-product geometry and field theory."""

from .series import (
    ComplexRational,
    LambdaSeries,
    LeadingNotUnit,
    NotInvertible,
    QQI,
    RationalComplexDomain,
)
from .symbolic import (
    Chart,
    Expr,
    ExprDomain,
    UnknownCoordinate,
    UnknownSymbol,
    UnsupportedExpression,
    canon,
    differentiate,
    expr_equal,
    substitute,
)
from .twistalg import (
    AbelianTwist,
    ChartMismatch,
    StarContext,
    VectorField,
    canonical_theta,
    lie_bracket,
)

__version__ = "0.1.0"
