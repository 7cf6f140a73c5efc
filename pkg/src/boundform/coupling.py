"""Spatial coupling matrix M[j, n] = <psi_j | V exp(-(x-x0)^2/2sx^2) | psi_n>."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .eigen import SpectralBasis
from .errors import GridResolutionError
from .pulses import SpatialProfile


@dataclass(frozen=True, eq=False)
class CouplingMatrix:
    m: np.ndarray
    profile: SpatialProfile
    basis_id: str = ""

    @property
    def n_basis(self) -> int:
        return self.m.shape[0]

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["j", "n", "M_MeV"])
            for j in range(self.n_basis):
                for n in range(self.n_basis):
                    w.writerow([j, n, f"{self.m[j, n]:.12g}"])


def basis_id(basis: SpectralBasis) -> str:
    c = basis.cfg
    return f"V0={c.V0},a={c.a},L={c.L},m={c.m},n={c.n_basis},grid={basis.grid.size}"


def compute_coupling(basis: SpectralBasis, profile: SpatialProfile) -> CouplingMatrix:
    """Simpson quadrature on the basis grid, symmetrized to kill rounding."""
    if profile.sigma_x < 4.0 * basis.h:
        raise GridResolutionError(
            f"sigma_x={profile.sigma_x} fm is below 4 grid spacings ({4 * basis.h:.4g} fm)"
        )
    psi = basis.sampled_psi
    w = basis.weights * profile.shape(basis.grid)
    m = (psi * w) @ psi.T
    m = 0.5 * (m + m.T) * profile.V
    m.setflags(write=False)
    return CouplingMatrix(m=m, profile=profile, basis_id=basis_id(basis))
