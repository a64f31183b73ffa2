"""The AYS climate-economy model: excess atmospheric carbon ``A`` (GtC),
economic output ``Y`` (US$/a) and renewable-energy knowledge ``S`` (GJ).

Four controls are available: ``default`` (business as usual), ``LG`` (low
growth, ``beta -> beta_lg``), ``ET`` (energy transformation,
``sigma -> sigma_et``) and their combination ``LG+ET``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from .geometry import CompactMap, TransformedSystem
from .system import ControlledSystem, DomainError, ParameterError

DEFAULT = "default"
LG = "LG"
ET = "ET"
LG_ET = "LG+ET"
CONTROLS = (DEFAULT, LG, ET, LG_ET)

# offset used to evaluate the continuous extension on the upper faces y_i = 1
FACE_INSET = 1e-9


@dataclass(frozen=True)
class AYSParams:
    tau_A: float = 50.0             # a
    tau_S: float = 50.0             # a
    beta: float = 0.03              # 1/a
    beta_lg: float = 0.015          # 1/a
    theta: float = 8.57e-5          # 1/(GtC a)
    epsilon_energy: float = 147.0   # US$/GJ
    phi: float = 4.7e10             # GJ/GtC
    sigma: float = 4e12             # GJ
    sigma_et: float = 2.83e12       # GJ
    rho: float = 2.0
    A_mid: float = 240.0            # GtC
    Y_mid: float = 7e13             # US$/a
    S_mid: float = 5e11             # GJ
    A_PB: float = 345.0             # GtC
    Y_SF: float = 4e13              # US$/a

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not (np.isfinite(v) and v > 0):
                raise ParameterError(f"AYS parameter {f.name} must be positive and finite, got {v}")

    def for_control(self, u: str) -> tuple[float, float]:
        """Effective ``(beta, sigma)`` under control ``u``."""
        if u == DEFAULT:
            return self.beta, self.sigma
        if u == LG:
            return self.beta_lg, self.sigma
        if u == ET:
            return self.beta, self.sigma_et
        if u == LG_ET:
            return self.beta_lg, self.sigma_et
        raise ParameterError(f"unknown AYS control {u!r}")

    def replace(self, **changes) -> "AYSParams":
        return replace(self, **changes)

    def as_dict(self) -> dict[str, float]:
        return asdict(self)

    @property
    def compact_map(self) -> CompactMap:
        return CompactMap((self.A_mid, self.Y_mid, self.S_mid))


def ays_rhs(x, u: str = DEFAULT, p: AYSParams = AYSParams()) -> np.ndarray:
    """Evaluate ``(dA/dt, dY/dt, dS/dt)`` for states of shape ``(..., 3)``."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or not np.all(np.isfinite(x)):
        raise DomainError("AYS states must be finite and nonnegative")
    beta, sigma = p.for_control(u)
    A, Y, S = x[..., 0], x[..., 1], x[..., 2]
    gamma = 1.0 / (1.0 + (S / sigma) ** p.rho)
    energy = Y / p.epsilon_energy
    fossil = gamma * energy
    renewable = (1.0 - gamma) * energy
    emissions = fossil / p.phi
    dA = emissions - A / p.tau_A
    dY = beta * Y - p.theta * A * Y
    dS = renewable - S / p.tau_S
    return np.stack([dA, dY, dS], axis=-1)


def ays_rhs_transformed(y, u: str = DEFAULT, p: AYSParams = AYSParams(),
                        face: str = "error") -> np.ndarray:
    """RHS in compactified coordinates ``(a, y, s)`` with ``x_mid = (A_mid, Y_mid, S_mid)``.

    The green fixed point ``(0, 1, 1)`` always evaluates to zero. Other points
    on an upper face raise :class:`DomainError` unless ``face="limit"``, in
    which case the coordinate is pulled in by ``FACE_INSET`` (the continuous
    extension once the field is homogenized).
    """
    y = np.asarray(y, dtype=float)
    if np.any(y < 0) or np.any(y > 1) or not np.all(np.isfinite(y)):
        raise DomainError("transformed AYS coordinates must lie in [0, 1]")
    green = np.all(y == (0.0, 1.0, 1.0), axis=-1)
    on_face = np.any(y >= 1.0, axis=-1) & ~green
    if np.any(on_face):
        if face != "limit":
            raise DomainError("upper face y_i = 1 is only defined at the green fixed point")
        y = np.minimum(y, 1.0 - FACE_INSET)
    beta, sigma = p.for_control(u)
    a, w, s = y[..., 0], y[..., 1], y[..., 2]
    # the green point itself gives inf * 0 below; it is overwritten afterwards
    with np.errstate(divide="ignore", invalid="ignore"):
        wr = w / (1.0 - w)
        ar = a / (1.0 - a)
        num = (1.0 - s) ** p.rho
        gamma = num / (num + (p.S_mid * s / sigma) ** p.rho)
        da = (p.Y_mid / (p.phi * p.epsilon_energy * p.A_mid)) * gamma * (1.0 - a) ** 2 * wr \
            - a * (1.0 - a) / p.tau_A
        dw = w * (1.0 - w) * (beta - p.theta * p.A_mid * ar)
        ds = (1.0 - gamma) * (p.Y_mid / (p.epsilon_energy * p.S_mid)) * (1.0 - s) ** 2 * wr \
            - s * (1.0 - s) / p.tau_S
    out = np.stack([da, dw, ds], axis=-1)
    out[green] = 0.0
    return out


def desirable(x, p: AYSParams = AYSParams()) -> np.ndarray | bool:
    """Inside both the climate boundary and the social foundation (strictly)."""
    x = np.asarray(x, dtype=float)
    res = (x[..., 0] < p.A_PB) & (x[..., 1] > p.Y_SF)
    return bool(res) if res.ndim == 0 else res


def desirable_transformed(y, p: AYSParams = AYSParams()) -> np.ndarray | bool:
    """:func:`desirable` expressed in compactified coordinates."""
    y = np.asarray(y, dtype=float)
    a_pb = p.A_PB / (p.A_mid + p.A_PB)
    y_sf = p.Y_SF / (p.Y_mid + p.Y_SF)
    res = (y[..., 0] < a_pb) & (y[..., 1] > y_sf)
    return bool(res) if res.ndim == 0 else res


def current_state(p: AYSParams = AYSParams()) -> np.ndarray:
    return np.array([240.0, 7e13, 5e11])


@dataclass(frozen=True)
class FixedPoint:
    name: str
    state: tuple[float, float, float]
    boundary: bool = False


def fixed_points(p: AYSParams = AYSParams(), u: str = DEFAULT) -> list[FixedPoint]:
    """Black fixed point for control ``u`` and the green point at infinity."""
    beta, _ = p.for_control(u)
    black = (beta / p.theta, p.phi * p.epsilon_energy * beta / (p.theta * p.tau_A), 0.0)
    return [
        FixedPoint("black", black),
        FixedPoint("green", (0.0, float("inf"), float("inf")), boundary=True),
    ]


def black_fixed_point_transformed(p: AYSParams = AYSParams(), u: str = DEFAULT) -> np.ndarray:
    beta, _ = p.for_control(u)
    pe = p.phi * p.epsilon_energy
    return np.array([
        beta / (beta + p.theta * p.A_mid),
        pe * beta / (pe * beta + p.Y_mid * p.theta * p.tau_A),
        0.0,
    ])


GREEN_TRANSFORMED = (0.0, 1.0, 1.0)


def ays_system(p: AYSParams = AYSParams(), controls=CONTROLS) -> ControlledSystem:
    return ControlledSystem(3, tuple(controls), DEFAULT, lambda x, u: ays_rhs(x, u, p), name="AYS")


def ays_transformed_system(p: AYSParams = AYSParams(), controls=CONTROLS,
                           face: str = "limit") -> TransformedSystem:
    return TransformedSystem(
        dimension=3,
        controls=tuple(controls),
        default=DEFAULT,
        rhs=lambda y, u: ays_rhs_transformed(y, u, p, face=face),
        boundary_fixed_points=(GREEN_TRANSFORMED,),
        name="AYS-compact",
        inner=ays_system(p, controls),
        compact_map=p.compact_map,
    )
