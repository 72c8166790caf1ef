"""
Piecewise cubic Hermite splines.

Used as random nonlinear mechanisms for synthetic cause-effect pairs and
as the heteroscedastic noise profile.
"""

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from utils.errors import OutOfSupport

ArrayLike = Union[float, Sequence[float], np.ndarray]


@dataclass(frozen=True, eq=False)
class HermiteSpline:
    """Cubic Hermite interpolant through knots with prescribed tangents.

    Each segment [x_j, x_{j+1}] uses the standard basis on the local
    coordinate t in [0, 1]:

        p(t) = h00(t) y_j + h10(t) d_j m_j + h01(t) y_{j+1} + h11(t) d_j m_{j+1}

    with d_j = x_{j+1} - x_j. Values at knots are reproduced exactly.
    """

    knots_x: np.ndarray
    knots_y: np.ndarray
    tangents: np.ndarray

    def __post_init__(self) -> None:
        kx = np.asarray(self.knots_x, dtype=np.float64)
        ky = np.asarray(self.knots_y, dtype=np.float64)
        m = np.asarray(self.tangents, dtype=np.float64)
        if kx.ndim != 1 or kx.shape != ky.shape or kx.shape != m.shape or kx.size < 2:
            raise ValueError("knots_x, knots_y and tangents must be 1-D of equal length >= 2")
        if np.any(np.diff(kx) <= 0):
            raise ValueError("knots_x must be strictly increasing")
        object.__setattr__(self, "knots_x", kx)
        object.__setattr__(self, "knots_y", ky)
        object.__setattr__(self, "tangents", m)

    @property
    def support(self) -> tuple:
        return float(self.knots_x[0]), float(self.knots_x[-1])

    def __call__(self, x: ArrayLike) -> np.ndarray:
        """Evaluate the spline.

        Raises:
            OutOfSupport: If any point lies outside [knots_x[0], knots_x[-1]].
        """
        xs = np.asarray(x, dtype=np.float64)
        lo, hi = self.support
        if np.any(xs < lo) or np.any(xs > hi) or np.any(np.isnan(xs)):
            raise OutOfSupport(f"Spline evaluated outside its support [{lo}, {hi}]")

        seg = np.clip(np.searchsorted(self.knots_x, xs, side="right") - 1, 0, len(self.knots_x) - 2)
        x0 = self.knots_x[seg]
        width = self.knots_x[seg + 1] - x0
        t = (xs - x0) / width
        t2 = t * t
        t3 = t2 * t

        h00 = 2 * t3 - 3 * t2 + 1
        h10 = t3 - 2 * t2 + t
        h01 = -2 * t3 + 3 * t2
        h11 = t3 - t2
        return (
            h00 * self.knots_y[seg]
            + h10 * width * self.tangents[seg]
            + h01 * self.knots_y[seg + 1]
            + h11 * width * self.tangents[seg + 1]
        )


def hermite_spline(
    knots_x: Sequence[float],
    knots_y: Sequence[float],
    tangents: Sequence[float],
    x: float,
) -> float:
    """Evaluate a cubic Hermite spline at a single point.

    Args:
        knots_x: Strictly increasing knot positions.
        knots_y: Values at the knots.
        tangents: Derivatives at the knots.
        x: Evaluation point inside the knot range.

    Returns:
        Interpolated value.

    Raises:
        OutOfSupport: If ``x`` is outside [knots_x[0], knots_x[-1]].
    """
    return float(HermiteSpline(knots_x, knots_y, tangents)(x))
