"""Controlled dynamical systems over a finite control set."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np


class DomainError(ValueError):
    """A state lies outside the domain on which a map or RHS is defined."""


class ParameterError(ValueError):
    """A configuration or model parameter is out of its valid range."""


class UsageError(ValueError):
    """Operands are incompatible (e.g. point sets on different grids)."""


Rhs = Callable[[np.ndarray, str], np.ndarray]


@dataclass(frozen=True)
class ControlledSystem:
    """Right-hand side ``f(x, u)`` evaluated over a finite set of controls.

    ``rhs`` must accept states with shape ``(..., n)`` and return tangent
    vectors of the same shape. ``default`` is the distinguished control
    whose flow defines the default dynamics.
    """

    dimension: int
    controls: tuple[str, ...]
    default: str
    rhs: Rhs
    boundary_fixed_points: tuple[tuple[float, ...], ...] = field(default=())
    name: str = "system"

    def __post_init__(self):
        if self.dimension < 1:
            raise ParameterError("dimension must be positive")
        if not self.controls:
            raise ParameterError("control set must be nonempty")
        if len(set(self.controls)) != len(self.controls):
            raise ParameterError("duplicate control identifiers")
        if self.controls.count(self.default) != 1:
            raise ParameterError(f"default control {self.default!r} not in control set")

    def __call__(self, x, u: str | None = None) -> np.ndarray:
        u = self.default if u is None else u
        if u not in self.controls:
            raise ParameterError(f"unknown control {u!r}")
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dimension:
            raise DomainError(f"expected states of dimension {self.dimension}, got shape {x.shape}")
        return np.asarray(self.rhs(x, u), dtype=float)

    def check_controls(self, controls: Sequence[str] | None) -> tuple[str, ...]:
        """Validate a control subset; ``None`` means the full set."""
        if controls is None:
            return self.controls
        controls = tuple(controls)
        if not controls:
            raise UsageError("control subset must be nonempty")
        unknown = [u for u in controls if u not in self.controls]
        if unknown:
            raise UsageError(f"unknown controls {unknown}")
        return controls


def affine_1d(slope: float, offset: float = 0.0) -> ControlledSystem:
    """Scalar system ``x' = slope * x + offset`` with a single control."""

    def rhs(x, u):
        return slope * x + offset

    return ControlledSystem(1, ("default",), "default", rhs, name=f"affine1d({slope},{offset})")
