"""Stationary states of the square well inside a hard box.

Inside the well (|x| <= a) the states are ``cos(k2 x)`` (symmetric) or
``sin(k2 x)`` (antisymmetric). Between the well and the wall the state is
``sin(k1 (L - |x|))`` above threshold and ``sinh(k1 (L - |x|))`` below it,
so the wall condition psi(+-L) = 0 holds by construction. Matching the
logarithmic derivative at x = a gives one scalar equation per parity.

The matching functions are written without poles and divided by k1, which
makes them continuous across E = 0. Roots are bracketed on a fine scan of
the signed wavenumber ``s`` (``s = k1`` for E > 0, ``s = -k1`` for E < 0)
and refined with Brent's method.
"""
from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import ConfigurationError, ContractViolation, NumericalError
from .model import WellConfig, check_in_box
from .quadrature import simpson_weights

# the matching functions are O(1) near roots; this is an absolute bound
RESIDUAL_TOL = 1e-10
_MAX_CEILING_DOUBLINGS = 8


class Parity(str, enum.Enum):
    SYMMETRIC = "symmetric"
    ANTISYMMETRIC = "antisymmetric"

    @property
    def sign(self) -> int:
        return 1 if self is Parity.SYMMETRIC else -1


def _as_parity(parity) -> Parity:
    if isinstance(parity, Parity):
        return parity
    p = str(parity).lower()
    if p in ("s", "sym", "symmetric", "even", "+1", "1"):
        return Parity.SYMMETRIC
    if p in ("a", "anti", "antisymmetric", "odd", "-1"):
        return Parity.ANTISYMMETRIC
    raise ValueError(f"unknown parity {parity!r}")


def _wavenumbers(cfg: WellConfig, energy):
    kappa = cfg.kinetic_scale
    k1 = np.sqrt(kappa * np.abs(energy))
    k2 = np.sqrt(kappa * (np.asarray(energy) - cfg.V0))
    return k1, k2


def _signed_k1_to_energy(cfg: WellConfig, s):
    return np.sign(s) * s * s / cfg.kinetic_scale


def _outer_ratio(s, d):
    """Outer factor divided by k1 and its companion, continuous in ``s``.

    Returns ``(r, c)`` with ``r = sin(y)/k1, c = cos(y)`` above threshold
    and ``r = tanh(y)/k1, c = 1`` below it, where ``y = k1 d``.
    """
    s = np.asarray(s, dtype=float)
    k1 = np.abs(s)
    y = k1 * d
    safe_y = np.where(y == 0, 1.0, y)
    above = s > 0
    ratio_up = np.where(y == 0, 1.0, np.sin(safe_y) / safe_y)
    ratio_dn = np.where(y == 0, 1.0, np.tanh(safe_y) / safe_y)
    r = d * np.where(above, ratio_up, ratio_dn)
    c = np.where(above, np.cos(y), 1.0)
    return r, c


def matching_function(cfg: WellConfig, s, parity) -> np.ndarray:
    """Pole-free matching condition as a function of the signed wavenumber.

    Zero exactly at the eigenvalues of the given parity.
    """
    parity = _as_parity(parity)
    s = np.asarray(s, dtype=float)
    d = cfg.L - cfg.a
    energy = _signed_k1_to_energy(cfg, s)
    k2 = np.sqrt(cfg.kinetic_scale * (energy - cfg.V0))
    r, c = _outer_ratio(s, d)
    ka = k2 * cfg.a
    if parity is Parity.SYMMETRIC:
        return k2 * np.sin(ka) * r - np.cos(ka) * c
    return k2 * np.cos(ka) * r + np.sin(ka) * c


def matching_residual(cfg: WellConfig, energy: float, parity) -> float:
    s = np.sign(energy) * np.sqrt(cfg.kinetic_scale * abs(energy))
    return float(matching_function(cfg, s, parity))


def _scan_roots(cfg: WellConfig, parity: Parity, s_lo: float, s_hi: float, ds: float):
    n = max(int(np.ceil((s_hi - s_lo) / ds)), 2)
    s = np.linspace(s_lo, s_hi, n + 1)
    f = matching_function(cfg, s, parity)
    roots = []
    exact = np.flatnonzero(f == 0)
    roots.extend(s[exact].tolist())
    change = np.flatnonzero(np.sign(f[:-1]) * np.sign(f[1:]) < 0)
    for i in change:
        lo, hi = s[i], s[i + 1]
        try:
            r, info = brentq(
                lambda z: float(matching_function(cfg, z, parity)),
                lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps,
                maxiter=200, full_output=True,
            )
        except (RuntimeError, ValueError) as exc:
            raise NumericalError(f"root refinement failed in bracket [{lo}, {hi}]: {exc}") from exc
        if not info.converged:
            raise NumericalError(f"root refinement did not converge in bracket [{lo}, {hi}]")
        roots.append(r)
    return sorted(roots)


def solve_eigenvalues(cfg: WellConfig) -> list[tuple[float, Parity]]:
    """Lowest ``cfg.n_basis`` eigenvalues, energy-sorted, with their parity."""
    d = cfg.L - cfg.a
    # roots are spaced ~pi/L in k1 per parity; the scan step must stay below that
    ds = np.pi / (8.0 * max(d, cfg.a))
    s_floor = -np.sqrt(cfg.kinetic_scale * -cfg.V0)
    # at E = V0 the antisymmetric function vanishes trivially (k2 = 0)
    s_lo = s_floor * (1.0 - 1e-12)
    s_hi = np.pi * (cfg.n_basis + 8) / (2.0 * d)
    for _ in range(_MAX_CEILING_DOUBLINGS):
        found = []
        for parity in Parity:
            found.extend((_signed_k1_to_energy(cfg, r), parity) for r in _scan_roots(cfg, parity, s_lo, s_hi, ds))
        if len(found) >= cfg.n_basis:
            found.sort(key=lambda t: t[0])
            return [(float(e), p) for e, p in found[: cfg.n_basis]]
        s_hi *= 2.0
    ceiling = float(_signed_k1_to_energy(cfg, s_hi / 2.0))
    raise ConfigurationError(
        f"found only {len(found)} of {cfg.n_basis} eigenvalues below {ceiling:.6g} MeV"
    )


def _x_minus_sin(z):
    """z - sin(z) without cancellation for small z."""
    if abs(z) < 1e-2:
        z2 = z * z
        return z * z2 / 6.0 * (1.0 - z2 / 20.0 * (1.0 - z2 / 42.0))
    return z - np.sin(z)


def _sinh_minus_x(z):
    if abs(z) < 1e-2:
        z2 = z * z
        return z * z2 / 6.0 * (1.0 + z2 / 20.0 * (1.0 + z2 / 42.0))
    return np.sinh(z) - z


@dataclass(frozen=True)
class EigenState:
    """One normalized stationary state.

    ``inner_coef`` multiplies cos(k2 x) or sin(k2 x) for |x| <= a and
    ``outer_coef`` multiplies the outer shape for a < x <= L (the x < -a
    branch follows from parity). ``norm_constant`` is the factor that was
    applied to the unnormalized shape.
    """

    n: int
    parity: Parity
    energy: float
    k1: float
    k2: float
    norm_constant: float
    inner_coef: float
    outer_coef: float
    cfg: WellConfig = field(repr=False)

    def __call__(self, x):
        return evaluate_psi(self, x)


def _outer_shape(k1: float, energy: float, d: float, u):
    """Outer shape as a function of the distance u = L - |x| from the wall.

    Scaled so the value at u = d is O(1) even for deeply bound states.
    """
    if energy > 0:
        return np.sin(k1 * u)
    if energy < 0:
        y = k1 * d
        # sinh(k1 u)/cosh(y), overflow-free since u <= d
        return (np.exp(k1 * u - y) - np.exp(-k1 * u - y)) / (1.0 + np.exp(-2.0 * y))
    return u


def build_state(cfg: WellConfig, energy: float, parity, n: int = 0, tol: float = 1e-8) -> EigenState:
    """Construct the normalized eigenfunction for a solved eigenvalue.

    The global sign is fixed so that psi > 0 just inside the left wall.
    """
    parity = _as_parity(parity)
    resid = matching_residual(cfg, energy, parity)
    if not abs(resid) <= tol:
        raise ContractViolation(
            f"energy {energy} MeV does not solve the {parity.value} matching condition (residual {resid:.3e})"
        )
    a, d = cfg.a, cfg.L - cfg.a
    k1, k2 = (float(v) for v in _wavenumbers(cfg, energy))
    y = k1 * d
    if energy > 0:
        phi, dphi = np.sin(y), -k1 * np.cos(y)
    elif energy < 0:
        phi, dphi = np.tanh(y), -k1
    else:
        phi, dphi = d, -1.0
    ka = k2 * a
    if parity is Parity.SYMMETRIC:
        inner_val, inner_der = np.cos(ka), -k2 * np.sin(ka)
    else:
        inner_val, inner_der = np.sin(ka), k2 * np.cos(ka)
    # value matching: alpha*inner_val = beta*phi; slope matching is the other option
    scale = max(k1, k2, 1.0 / d)
    pair_val = (phi, inner_val)
    pair_der = (dphi / scale, inner_der / scale)
    alpha, beta = pair_val if np.hypot(*pair_val) >= np.hypot(*pair_der) else pair_der

    if parity is Parity.SYMMETRIC:
        i_in = a / 2.0 + np.sin(2 * ka) / (4 * k2)
    else:
        i_in = _x_minus_sin(2 * ka) / (4 * k2)
    if energy > 0:
        i_out = _x_minus_sin(2 * y) / (4 * k1)
    elif energy < 0:
        c = np.cosh(y) if y < 350 else np.inf
        if np.isinf(c):
            i_out = 1.0 / (2 * k1)
        else:
            i_out = _sinh_minus_x(2 * y) / (4 * k1 * c * c)
    else:
        i_out = d**3 / 3.0
    norm2 = 2.0 * (alpha**2 * i_in + beta**2 * i_out)
    A = 1.0 / np.sqrt(norm2)
    if parity.sign * beta < 0:
        A = -A
    return EigenState(
        n=int(n), parity=parity, energy=float(energy), k1=k1, k2=k2,
        norm_constant=float(abs(A)), inner_coef=float(A * alpha), outer_coef=float(A * beta), cfg=cfg,
    )


def evaluate_psi(state: EigenState, x):
    """Evaluate the piecewise eigenfunction; raises DomainError for |x| > L."""
    cfg = state.cfg
    x = check_in_box(cfg, x)
    ax = np.minimum(np.abs(x), cfg.L)
    sgn = np.where(x < 0, state.parity.sign, 1.0)
    if state.parity is Parity.SYMMETRIC:
        inner = state.inner_coef * np.cos(state.k2 * x)
    else:
        inner = state.inner_coef * np.sin(state.k2 * x)
    outer = sgn * state.outer_coef * _outer_shape(state.k1, state.energy, cfg.L - cfg.a, cfg.L - ax)
    out = np.where(ax <= cfg.a, inner, outer)
    return out[()] if out.ndim == 0 else out


def count_nodes(values: np.ndarray, rel_tol: float = 1e-9) -> int:
    """Sign changes of a sampled function, ignoring near-zero samples."""
    v = np.asarray(values)
    v = v[np.abs(v) > rel_tol * np.max(np.abs(v))]
    return int(np.count_nonzero(np.signbit(v[1:]) != np.signbit(v[:-1])))


class SpectralBasis:
    """Energy-ordered truncated eigenbasis sampled on a uniform grid.

    Parameters
    ----------
    cfg : WellConfig
    states : list of EigenState
    grid_points : int
        Number of uniform sample points on [-L, L].
    """

    def __init__(self, cfg: WellConfig, states, grid_points: int):
        self.cfg = cfg
        self.states = tuple(states)
        self.grid = np.linspace(-cfg.L, cfg.L, int(grid_points))
        self.h = float(self.grid[1] - self.grid[0])
        self.weights = simpson_weights(self.grid.size, self.h)
        psi = np.empty((len(self.states), self.grid.size))
        for i, st in enumerate(self.states):
            psi[i] = evaluate_psi(st, self.grid)
        psi[:, 0] = psi[:, -1] = 0.0
        psi.setflags(write=False)
        self.sampled_psi = psi
        self.energies = np.array([st.energy for st in self.states])
        self.energies.setflags(write=False)

    def __len__(self):
        return len(self.states)

    @property
    def n_basis(self) -> int:
        return len(self.states)

    @property
    def parities(self) -> np.ndarray:
        return np.array([st.parity.sign for st in self.states])

    def overlap_matrix(self) -> np.ndarray:
        return (self.sampled_psi * self.weights) @ self.sampled_psi.T

    def orthonormality_defect(self) -> float:
        return float(np.max(np.abs(self.overlap_matrix() - np.eye(self.n_basis))))

    def transition_frequencies(self, hbar_c: float | None = None) -> np.ndarray:
        """omega[j, n] = (E_j - E_n)/hbar in 1/fm."""
        from .model import HBAR_C

        hc = HBAR_C if hbar_c is None else hbar_c
        return (self.energies[:, None] - self.energies[None, :]) / hc

    def to_csv(self, path, include_psi: bool = False, psi_stride: int = 1):
        """Write (n, parity, E_n) rows; optionally a second file of sampled psi."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n", "parity", "energy_MeV"])
            for st in self.states:
                w.writerow([st.n, st.parity.value, f"{st.energy:.12g}"])
        if include_psi:
            psi_path = str(path).rsplit(".", 1)[0] + "_psi.csv"
            with open(psi_path, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["x_fm"] + [f"psi_{st.n}" for st in self.states])
                for i in range(0, self.grid.size, psi_stride):
                    w.writerow([f"{self.grid[i]:.12g}"] + [f"{v:.12g}" for v in self.sampled_psi[:, i]])
            return psi_path
        return None


DEFAULT_GRID_POINTS = 8001


def build_basis(cfg: WellConfig, grid_points: int = DEFAULT_GRID_POINTS, check: bool = True,
                tol: float = 1e-6) -> SpectralBasis:
    """Solve, build and sample the truncated eigenbasis.

    ``grid_points`` defaults to 8001, which for the default geometry puts
    the well edges x = +-a on even Simpson nodes so no panel straddles the
    kink of psi''.
    """
    if grid_points < 2001:
        raise ConfigurationError(f"grid_points must be >= 2001, got {grid_points}")
    roots = solve_eigenvalues(cfg)
    states = [build_state(cfg, e, p, n=i) for i, (e, p) in enumerate(roots)]
    basis = SpectralBasis(cfg, states, grid_points)
    if check:
        defect = basis.orthonormality_defect()
        if defect > tol:
            raise NumericalError(f"orthonormality defect {defect:.3e} exceeds {tol:.1e}; refine the grid")
    return basis
