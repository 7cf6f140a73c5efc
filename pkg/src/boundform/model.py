"""Physical constants and the static well-in-a-box configuration.

Units: energies in MeV, lengths and times in fm. Time is measured in fm
(i.e. as c*t), so a frequency is an energy divided by ``HBAR_C``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DomainError


@dataclass(frozen=True)
class UnitSystem:
    hbar_c: float = 197.327
    proton_mass_energy: float = 938.272


UNITS = UnitSystem()
HBAR_C = UNITS.hbar_c


@dataclass(frozen=True)
class WellConfig:
    """Attractive square well of half-width ``a`` inside a hard box [-L, L].

    ``V0`` is the (negative) potential value inside the well. The defaults
    are the deuteron-like parameters: one bound state near -2.3 MeV.
    """

    V0: float = -18.0
    a: float = 0.6
    L: float = 100.0
    m: float = UNITS.proton_mass_energy / 2.0
    n_basis: int = 110

    def __post_init__(self):
        if not self.V0 < 0:
            raise ConfigurationError(f"V0 must be negative, got {self.V0}")
        if not 0 < self.a < self.L:
            raise ConfigurationError(f"need 0 < a < L, got a={self.a}, L={self.L}")
        if not self.m > 0:
            raise ConfigurationError(f"mass must be positive, got {self.m}")
        if int(self.n_basis) != self.n_basis or self.n_basis < 1:
            raise ConfigurationError(f"n_basis must be an integer >= 1, got {self.n_basis}")

    @property
    def kinetic_scale(self) -> float:
        """2m/(hbar c)^2 in 1/(MeV fm^2): converts an energy to k^2."""
        return 2.0 * self.m / HBAR_C**2


def static_potential(cfg: WellConfig, x):
    """Unperturbed potential; ``np.inf`` marks the hard walls outside [-L, L]."""
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    out = np.where(ax <= cfg.a, cfg.V0, 0.0)
    out = np.where(ax > cfg.L, np.inf, out)
    return out[()] if out.ndim == 0 else out


def check_in_box(cfg: WellConfig, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    # tolerate the last ulp at the walls
    if np.any(np.abs(x) > cfg.L * (1 + 1e-12)):
        raise DomainError(f"x outside the box [-{cfg.L}, {cfg.L}]")
    return x
