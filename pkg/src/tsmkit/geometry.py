"""Coordinate compactification and time homogenization of right-hand sides.

The compactification sends ``[0, inf)^n`` onto ``[0, 1)^n`` one coordinate at
a time via ``x -> x / (x_mid + x)``; ``x_mid`` is the scale that lands on 1/2.
Homogenization rescales time by ``F / (|F| + eps)`` so that every speed lies
below one while orbits and zeros of ``F`` are kept.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .system import ControlledSystem, DomainError, ParameterError

DEFAULT_EPSILON = 1e-4
NORM = "euclidean"


@dataclass(frozen=True)
class CompactMap:
    x_mid: tuple[float, ...]

    def __post_init__(self):
        mid = np.asarray(self.x_mid, dtype=float)
        if mid.ndim != 1 or mid.size == 0:
            raise ParameterError("x_mid must be a nonempty vector")
        if not np.all(np.isfinite(mid)) or np.any(mid <= 0):
            raise ParameterError("every x_mid component must be positive and finite")
        object.__setattr__(self, "x_mid", tuple(float(v) for v in mid))

    @property
    def dimension(self) -> int:
        return len(self.x_mid)

    @property
    def mid(self) -> np.ndarray:
        return np.asarray(self.x_mid)


def compactify(x, cmap: CompactMap) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != cmap.dimension:
        raise DomainError(f"state dimension {x.shape[-1]} != map dimension {cmap.dimension}")
    if not np.all(np.isfinite(x)) or np.any(x < 0):
        raise DomainError("compactify needs finite, nonnegative coordinates")
    return x / (cmap.mid + x)


def decompactify(y, cmap: CompactMap) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.shape[-1] != cmap.dimension:
        raise DomainError(f"state dimension {y.shape[-1]} != map dimension {cmap.dimension}")
    if not np.all(np.isfinite(y)) or np.any(y < 0) or np.any(y >= 1):
        raise DomainError("decompactify needs coordinates in [0, 1); y = 1 has no finite preimage")
    return cmap.mid * y / (1.0 - y)


def _match_points(y: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Boolean mask over the leading axes of ``y``: row equals one of ``points``."""
    if points.size == 0:
        return np.zeros(y.shape[:-1], dtype=bool)
    return np.any(np.all(y[..., None, :] == points, axis=-1), axis=-1)


@dataclass(frozen=True, kw_only=True)
class TransformedSystem(ControlledSystem):
    """``F(y) = (D Phi . f)(Phi^-1(y))`` on the compactified cube."""

    inner: ControlledSystem
    compact_map: CompactMap


def transform_rhs(f: ControlledSystem, cmap: CompactMap,
                  boundary_fixed_points=()) -> TransformedSystem:
    """Push ``f`` through the compactification ``cmap``.

    ``boundary_fixed_points`` lists points with some coordinate equal to 1
    (images of points at infinity) where the RHS is formally extended by zero.
    Evaluating at any other point with a unit coordinate is a domain error.
    """
    if f.dimension != cmap.dimension:
        raise ParameterError("system and map dimensions differ")
    registered = np.asarray(boundary_fixed_points, dtype=float).reshape(-1, f.dimension)
    mid = cmap.mid

    def rhs(y, u):
        if np.any(y < 0) or np.any(y > 1) or not np.all(np.isfinite(y)):
            raise DomainError("transformed coordinates must lie in [0, 1]")
        at_face = np.any(y >= 1, axis=-1)
        fixed = _match_points(y, registered)
        if np.any(at_face & ~fixed):
            raise DomainError("evaluation at y_i = 1 outside registered boundary fixed points")
        inside = ~at_face
        out = np.zeros_like(y)
        yi = y[inside]
        x = mid * yi / (1.0 - yi)
        out[inside] = (1.0 - yi) ** 2 / mid * f.rhs(x, u)
        return out

    return TransformedSystem(
        dimension=f.dimension,
        controls=f.controls,
        default=f.default,
        rhs=rhs,
        boundary_fixed_points=tuple(map(tuple, registered.tolist())),
        name=f"compact({f.name})",
        inner=f,
        compact_map=cmap,
    )


@dataclass(frozen=True, kw_only=True)
class HomogenizedSystem(ControlledSystem):
    inner: ControlledSystem
    epsilon: float = DEFAULT_EPSILON
    norm: str = field(default=NORM)


def homogenize(F: ControlledSystem, epsilon: float = DEFAULT_EPSILON) -> HomogenizedSystem:
    """Rescale time so that the RHS becomes ``F / (|F|_2 + epsilon)``."""
    if not (np.isfinite(epsilon) and epsilon > 0):
        raise ParameterError("epsilon must be positive")

    def rhs(y, u):
        v = F.rhs(y, u)
        speed = np.linalg.norm(v, axis=-1, keepdims=True)
        return v / (speed + epsilon)

    return HomogenizedSystem(
        dimension=F.dimension,
        controls=F.controls,
        default=F.default,
        rhs=rhs,
        boundary_fixed_points=F.boundary_fixed_points,
        name=f"homog({F.name})",
        inner=F,
        epsilon=float(epsilon),
    )
