"""Post-processing of occupation distributions."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.signal import find_peaks

from .errors import NotSettledError, UndefinedInputError
from .model import HBAR_C

SETTLE_DRIFT_TOL = 1e-6


def _energies(basis):
    return np.asarray(getattr(basis, "energies", basis), dtype=float)


def _weights(occupations):
    w = np.asarray(occupations, dtype=float)
    if np.any(w < 0):
        raise UndefinedInputError("occupations must be non-negative")
    total = w.sum(axis=-1, keepdims=True)
    if np.any(total <= 0):
        raise UndefinedInputError("all-zero occupations have no mean energy")
    return w / total


def mean_energy(basis, occupations):
    """sum E_n |c_n|^2 / sum |c_n|^2 (last axis indexes states)."""
    w = _weights(occupations)
    out = w @ _energies(basis)
    return out[()] if np.ndim(out) == 0 else out


def energy_spread(basis, occupations):
    """Standard deviation of the energy over the normalized distribution."""
    w = _weights(occupations)
    e = _energies(basis)
    mu = w @ e
    # centered two-pass form; the one-pass E[E^2]-E[E]^2 cancels for narrow distributions
    if np.ndim(mu) == 0:
        var = float(w @ (e - mu) ** 2)
    else:
        var = np.einsum("...n,...n->...", w, (e - mu[..., None]) ** 2)
    out = np.sqrt(np.maximum(var, 0.0))
    return out[()] if np.ndim(out) == 0 else out


def uncertainty_product(delta_E: float, sigma_t: float, hbar_c: float = HBAR_C) -> float:
    """Dimensionless delta_E * sigma_t / hbar; the bound is 1/2."""
    return delta_E * sigma_t / hbar_c


@dataclass
class DistributionSummary:
    occupations: np.ndarray
    energies: np.ndarray
    include_initial: bool
    initial_index: int | None
    mean_energy: float
    energy_std: float
    uncertainty_product: float | None = None
    sigma_t: float | None = None
    drift: float = 0.0

    @property
    def energy_spread_2x(self) -> float:
        return 2.0 * self.energy_std

    @property
    def uncertainty_product_2x(self) -> float | None:
        return None if self.uncertainty_product is None else 2.0 * self.uncertainty_product

    def peaks(self, prominence: float = 0.1):
        """Indices of local maxima of the distribution (initial state excluded)."""
        return find_distribution_peaks(self.occupations, self.initial_index, prominence)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n", "energy_MeV", "occupation"])
            for n, (e, p) in enumerate(zip(self.energies, self.occupations)):
                w.writerow([n, f"{e:.12g}", f"{p:.12g}"])

    def summary_row(self) -> dict:
        return {
            "include_initial": int(self.include_initial),
            "mean_energy_MeV": self.mean_energy,
            "energy_std_MeV": self.energy_std,
            "energy_spread_2x_MeV": self.energy_spread_2x,
            "sigma_t_fm": self.sigma_t if self.sigma_t is not None else float("nan"),
            "uncertainty_product_std": self.uncertainty_product if self.uncertainty_product is not None else float("nan"),
            "uncertainty_product_2x": self.uncertainty_product_2x if self.uncertainty_product is not None else float("nan"),
            "settle_drift": self.drift,
        }


def write_summary_csv(path, summaries):
    rows = [s.summary_row() for s in summaries]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(list(rows[0]))
        for r in rows:
            w.writerow([f"{v:.12g}" if isinstance(v, float) else v for v in r.values()])


def find_distribution_peaks(occupations, initial_index=None, prominence: float = 0.1):
    occ = np.asarray(occupations, dtype=float).copy()
    if initial_index is not None:
        occ[initial_index] = 0.0
    top = occ.max()
    if top <= 0:
        return np.array([], dtype=int)
    # pad so that edge maxima count as peaks
    padded = np.concatenate(([0.0], occ, [0.0]))
    idx, _ = find_peaks(padded, prominence=prominence * top)
    return idx - 1


def settle_drift(trajectory, margin: float) -> float:
    """Largest change of any occupation over the last ``margin`` fm."""
    t = trajectory.times
    sel = t >= t[-1] - margin - 1e-12
    occ = trajectory.occupations[sel]
    return float(np.max(occ.max(axis=0) - occ.min(axis=0)))


def final_distribution(trajectory, settle_margin: float | None = None, schedule=None,
                       include_initial: bool = True, drift_tol: float = SETTLE_DRIFT_TOL) -> DistributionSummary:
    """Snapshot of the final occupations, checked for post-pulse constancy.

    ``settle_margin`` defaults to 10 sigma_t of a Gaussian ``schedule``.
    Raises NotSettledError if the trajectory does not extend that far past
    the last pulse or if any occupation drifts by more than ``drift_tol``
    over the margin.
    """
    sigma_t = getattr(schedule, "sigma_t", None)
    if settle_margin is None:
        if sigma_t is None:
            raise UndefinedInputError("settle_margin is required without a Gaussian schedule")
        settle_margin = 10.0 * sigma_t
    if schedule is not None and trajectory.times[-1] < schedule.last_pulse_time + settle_margin - 1e-9:
        raise NotSettledError(
            f"trajectory ends at {trajectory.times[-1]} fm, before last pulse + margin "
            f"({schedule.last_pulse_time + settle_margin} fm)"
        )
    drift = settle_drift(trajectory, settle_margin)
    if drift > drift_tol:
        raise NotSettledError(f"occupations drift by {drift:.3e} over the last {settle_margin} fm")
    occ = trajectory.occupations[-1].copy()
    init = trajectory.initial_index
    dist = occ.copy()
    if not include_initial and init is not None:
        dist[init] = 0.0
    e = np.asarray(trajectory.energies)
    mu = float(mean_energy(e, dist))
    sd = float(energy_spread(e, dist))
    up = uncertainty_product(sd, sigma_t) if sigma_t is not None else None
    return DistributionSummary(
        occupations=occ, energies=e, include_initial=include_initial, initial_index=init,
        mean_energy=mu, energy_std=sd, uncertainty_product=up, sigma_t=sigma_t, drift=drift,
    )


def response_time(trajectory, index: int, fraction: float = 0.01) -> float:
    """First sampled time at which |c_index|^2 has moved by ``fraction`` of its total change."""
    occ = trajectory.occupations[:, index]
    total = occ[-1] - occ[0]
    if total == 0:
        raise UndefinedInputError(f"occupation of state {index} never changes")
    moved = np.abs(occ - occ[0]) > fraction * abs(total)
    return float(trajectory.times[np.argmax(moved)])
