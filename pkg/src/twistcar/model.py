"""Parameter containers and the dimensional <-> dimensionless scaling layer.

The reduced Twistcar model has a single massive body (rotor plus rider) of
mass ``m_r`` and inertia ``I_r`` mounted at distance ``d1`` ahead of the rear
axle.  Link masses and inertias are taken to be zero, so only four ratios
survive the scaling::

    alpha = s / l1, beta = l2 / l1, delta = d1 / l1, eta = I_r / (m_r l1^2)

Times are measured in units of the viscous relaxation time ``t_c = m_r / c``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import Mapping, NamedTuple

__all__ = [
    "PhysicalParams",
    "DimlessParams",
    "ReducedState",
    "Pose",
    "nondimensionalize",
    "redimensionalize",
    "dimensional_frequency",
    "TABLE1",
    "ParameterError",
]


class ParameterError(ValueError):
    """Raised for physically inadmissible parameter values."""


@dataclass(frozen=True)
class PhysicalParams:
    """Dimensional parameters in SI units.

    Attributes
    ----------
    l1, l2 : float
        Main body and front link lengths [m].
    d1 : float
        Offset of the rotor/rider center of mass from the rear axle [m].
    d2 : float
        Front link COM offset [m].  Carried so parameter tables parse
        verbatim, the zero-mass front link makes it dynamically inert.
    s : float
        Half of the rear wheel track [m].  Zero is admitted as the
        degenerate single-track limit.
    m_r, I_r : float
        Mass [kg] and inertia [kg m^2] of the rotor/rider body.
    c : float
        Rolling dissipation coefficient [N s/m].
    A : float
        Rotor oscillation amplitude [rad].
    """

    l1: float
    l2: float
    d1: float
    d2: float
    s: float
    m_r: float
    I_r: float
    c: float
    A: float

    def __post_init__(self):
        for f in fields(self):
            val = getattr(self, f.name)
            if not isinstance(val, (int, float)) or not math.isfinite(val):
                raise ParameterError(f"{f.name} must be a finite number, got {val!r}")
            object.__setattr__(self, f.name, float(val))
        for name in ("l1", "l2", "m_r", "I_r", "c"):
            if getattr(self, name) <= 0:
                raise ParameterError(f"{name} must be positive, got {getattr(self, name)}")
        for name in ("d1", "d2", "s", "A"):
            if getattr(self, name) < 0:
                raise ParameterError(f"{name} must be non-negative, got {getattr(self, name)}")

    @property
    def t_c(self) -> float:
        return self.m_r / self.c

    @classmethod
    def from_mapping(cls, data: Mapping, path: str = "params") -> "PhysicalParams":
        """Build from a mapping with exactly the nine field names."""
        if not isinstance(data, Mapping):
            raise ParameterError(f"{path}: expected an object")
        names = [f.name for f in fields(cls)]
        unknown = sorted(set(data) - set(names))
        if unknown:
            raise ParameterError(f"{path}.{unknown[0]}: unknown key")
        for name in names:
            if name not in data:
                raise ParameterError(f"{path}.{name}: missing required key")
        try:
            return cls(**{n: data[n] for n in names})
        except ParameterError as exc:
            raise ParameterError(f"{path}: {exc}") from None

    def to_mapping(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def replace(self, **changes) -> "PhysicalParams":
        kw = self.to_mapping()
        kw.update(changes)
        return PhysicalParams(**kw)


#: Reference robot parameters (rotor amplitude 1 rad).
TABLE1 = PhysicalParams(l1=0.6, l2=0.2, d1=0.06, d2=0.1, s=0.2,
                        m_r=40.0, I_r=0.1695, c=10.0, A=1.0)


@dataclass(frozen=True)
class DimlessParams:
    """Dimensionless parameters of the reduced system.

    ``t_c`` and ``l1`` are kept only to map results back to SI units; the
    dynamics never read them.
    """

    alpha: float
    beta: float
    delta: float
    eta: float
    A: float
    omega: float
    t_c: float = 1.0
    l1: float = 1.0

    def __post_init__(self):
        for f in fields(self):
            val = getattr(self, f.name)
            if not isinstance(val, (int, float)) or not math.isfinite(val):
                raise ParameterError(f"{f.name} must be a finite number, got {val!r}")
            object.__setattr__(self, f.name, float(val))
        if self.beta <= 0 or self.eta <= 0:
            raise ParameterError("beta and eta must be positive")
        if self.alpha < 0 or self.delta < 0 or self.A < 0:
            raise ParameterError("alpha, delta and A must be non-negative")
        if self.omega <= 0:
            raise ParameterError(f"omega must be positive, got {self.omega}")
        if self.t_c <= 0 or self.l1 <= 0:
            raise ParameterError("t_c and l1 must be positive")

    @property
    def alpha1(self) -> float:
        return 1.0 + 4.0 * self.alpha ** 2

    @property
    def period(self) -> float:
        """Forcing period ``2 pi / omega`` in units of t_c."""
        return 2.0 * math.pi / self.omega

    @property
    def epsilon(self) -> float:
        """Small parameter ``A eta omega^2`` of the perturbation expansion."""
        return self.A * self.eta * self.omega ** 2

    def replace(self, **changes) -> "DimlessParams":
        kw = {f.name: getattr(self, f.name) for f in fields(self)}
        kw.update(changes)
        return DimlessParams(**kw)

    def as_tuple(self):
        """(alpha, beta, delta, eta, A, omega), the layout used by the kernels."""
        return (self.alpha, self.beta, self.delta, self.eta, self.A, self.omega)


class ReducedState(NamedTuple):
    """Reduced state z = (phi, sigma, v) in dimensionless units."""

    phi: float
    sigma: float
    v: float


class Pose(NamedTuple):
    """Planar pose of the rear axle midpoint, lengths in units of l1."""

    x: float
    y: float
    theta: float


def nondimensionalize(p: PhysicalParams, Omega: float) -> DimlessParams:
    """Scale physical parameters and the rotor frequency ``Omega`` [rad/s].

    Examples
    --------
    >>> dp = nondimensionalize(TABLE1, 1.72)
    >>> round(dp.omega, 12), round(dp.delta, 12)
    (6.88, 0.1)
    """
    if not isinstance(p, PhysicalParams):
        raise TypeError("expected PhysicalParams")
    if not Omega > 0:
        raise ParameterError(f"Omega must be positive, got {Omega}")
    t_c = p.m_r / p.c
    return DimlessParams(
        alpha=p.s / p.l1,
        beta=p.l2 / p.l1,
        delta=p.d1 / p.l1,
        eta=p.I_r / (p.m_r * p.l1 ** 2),
        A=p.A,
        omega=t_c * Omega,
        t_c=t_c,
        l1=p.l1,
    )


def redimensionalize(dp: DimlessParams, v_bar: float) -> float:
    """Convert a dimensionless speed to m/s, ``v = v_bar l1 / t_c``."""
    return v_bar * dp.l1 / dp.t_c


def dimensional_frequency(dp: DimlessParams) -> float:
    """Rotor frequency in rad/s, ``Omega = omega / t_c``."""
    return dp.omega / dp.t_c
