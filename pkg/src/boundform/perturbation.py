"""First-order time-dependent perturbation theory.

For an initial eigenstate i the first-order amplitudes are

    c_f = delta_fi - (i/hbar) M_fi * I_f,   I_f = int_{t_start}^{t} g(t') exp(i w_fi t') dt'

and N = 1/sqrt(sum_f |c_f|^2) measures how far the (unnormalized)
first-order state is from unit norm.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .coupling import CouplingMatrix, compute_coupling
from .errors import ContractViolation
from .evolution import DEFAULT_DT_GAUSSIAN, evolve, pulse_timing
from .model import HBAR_C
from .pulses import GaussianTrain, SpatialProfile, StochasticSquareTrain
from .quadrature import simpson_weights

_CHUNK = 4096


@dataclass
class PerturbativeResult:
    c1: np.ndarray
    norm_constant_N: float
    probabilities: np.ndarray
    initial_index: int
    t_final: float

    @property
    def transition_probabilities(self) -> np.ndarray:
        """|c_f|^2 with the initial state zeroed (pure first-order transitions)."""
        p = self.probabilities.copy()
        p[self.initial_index] = 0.0
        return p


def gaussian_pulse_integral(omega, sigma_t: float, t0: float):
    """Closed form of int_{-inf}^{inf} exp(-(t-t0)^2/2s^2) exp(i w t) dt."""
    omega = np.asarray(omega, dtype=float)
    return np.sqrt(2 * np.pi) * sigma_t * np.exp(-0.5 * (sigma_t * omega) ** 2) * np.exp(1j * omega * t0)


def gaussian_transition_probability(M_fi, sigma_t, omega_fi, hbar_c: float = HBAR_C):
    """|S_fi|^2 = 2 pi M_fi^2 sigma_t^2 / hbar^2 * exp(-sigma_t^2 w_fi^2)."""
    M_fi = np.asarray(M_fi, dtype=float)
    omega_fi = np.asarray(omega_fi, dtype=float)
    return 2 * np.pi * (M_fi * sigma_t / hbar_c) ** 2 * np.exp(-((sigma_t * omega_fi) ** 2))


def _gaussian_time_integrals(schedule: GaussianTrain, omega: np.ndarray, t_start: float, t_final: float,
                             dt: float) -> np.ndarray:
    n_int = max(int(np.ceil((t_final - t_start) / dt)), 2)
    n_int += n_int % 2
    t = np.linspace(t_start, t_final, n_int + 1)
    w = simpson_weights(t.size, t[1] - t[0]) * schedule.signal(t)
    out = np.zeros(omega.size, dtype=complex)
    for lo in range(0, t.size, _CHUNK):
        sl = slice(lo, lo + _CHUNK)
        out += np.exp(1j * np.outer(omega, t[sl])) @ w[sl]
    return out


def _window_integrals(schedule: StochasticSquareTrain, omega: np.ndarray, t_start: float,
                      t_final: float) -> np.ndarray:
    """Exact integrals of the piecewise-constant drive against exp(i w t)."""
    if not schedule.is_realized:
        raise ContractViolation("stochastic schedule has not been realized")
    edges = np.arange(schedule.n_pulses + 1) * schedule.window
    lo = np.clip(edges[:-1], t_start, t_final)
    hi = np.clip(edges[1:], t_start, t_final)
    amp = np.asarray(schedule.amplitudes)
    out = np.zeros(omega.size, dtype=complex)
    for j, wj in enumerate(omega):
        if wj == 0.0:
            out[j] = np.sum(amp * (hi - lo))
        else:
            out[j] = np.sum(amp * (np.exp(1j * wj * hi) - np.exp(1j * wj * lo))) / (1j * wj)
    return out


def first_order_amplitudes(basis, M, schedule, initial_index: int = 0, t_final: float | None = None,
                           dt: float = DEFAULT_DT_GAUSSIAN, t_start: float = 0.0) -> PerturbativeResult:
    """First-order amplitudes at ``t_final`` for a Gaussian or stochastic drive.

    Gaussian trains use composite Simpson in time with step <= ``dt``;
    stochastic trains use the exact per-window antiderivative. The default
    ``t_final`` is 10 sigma_t after the last pulse (end of noise otherwise).
    """
    m = M.m if isinstance(M, CouplingMatrix) else np.asarray(M, dtype=float)
    e = np.asarray(basis.energies, dtype=float)
    if not 0 <= initial_index < e.size:
        raise ContractViolation(f"initial_index {initial_index} outside basis of size {e.size}")
    if t_final is None:
        if isinstance(schedule, GaussianTrain):
            t_final = schedule.last_pulse_time + 10 * schedule.sigma_t
        else:
            t_final = schedule.duration
    omega = (e - e[initial_index]) / HBAR_C
    if isinstance(schedule, StochasticSquareTrain):
        integrals = _window_integrals(schedule, omega, t_start, t_final)
    else:
        integrals = _gaussian_time_integrals(schedule, omega, t_start, t_final, dt)
    c1 = (-1j / HBAR_C) * m[:, initial_index] * integrals
    c1[initial_index] += 1.0
    probs = np.abs(c1) ** 2
    return PerturbativeResult(
        c1=c1, norm_constant_N=float(1.0 / np.sqrt(probs.sum())), probabilities=probs,
        initial_index=int(initial_index), t_final=float(t_final),
    )


@dataclass
class ValidityRow:
    V: float
    sigma_t: float
    sigma_x: float
    N: float
    breakdown: bool
    max_ratio: float
    states: np.ndarray = field(repr=False)
    ratios: np.ndarray = field(repr=False)


def validity_report(basis, scan, initial_index: int = 0, dt: float = DEFAULT_DT_GAUSSIAN,
                    n_compare: int = 20, x0: float = 0.0, exact: bool = True):
    """Compare first-order and exact final distributions over a parameter scan.

    Parameters
    ----------
    scan : iterable of (V, sigma_t, sigma_x)
        One single-pulse run per entry, timed by ``pulse_timing``.
    n_compare : int
        Number of most-populated exact final states (initial excluded) used
        for the perturbative/exact ratio table.

    Returns
    -------
    list of ValidityRow
        ``breakdown`` flags N outside [0.5, 2].
    """
    rows = []
    for V, sigma_t, sigma_x in scan:
        profile = SpatialProfile(V=float(V), x0=x0, sigma_x=float(sigma_x))
        M = compute_coupling(basis, profile)
        t0, t_final = pulse_timing(sigma_t, dt)
        schedule = GaussianTrain(profile, float(sigma_t), (t0,))
        pert = first_order_amplitudes(basis, M, schedule, initial_index, t_final, dt)
        N = pert.norm_constant_N
        states = np.array([], dtype=int)
        ratios = np.array([])
        max_ratio = np.nan
        if exact:
            steps = int(round(t_final / dt))
            traj = evolve(basis, M, schedule, initial_index, t_final, dt, sample_every=steps)
            final = traj.occupations[-1].copy()
            final[initial_index] = -1.0
            states = np.argsort(final)[::-1][:n_compare]
            ratios = pert.probabilities[states] / final[states]
            max_ratio = float(np.max(np.maximum(ratios, 1.0 / ratios)))
        rows.append(ValidityRow(float(V), float(sigma_t), float(sigma_x), N, bool(N > 2.0 or N < 0.5),
                                max_ratio, states, ratios))
    return rows


def write_validity_csv(path, rows):
    n_states = max((len(r.states) for r in rows), default=0)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["V_MeV", "sigma_t_fm", "sigma_x_fm", "N", "breakdown", "max_ratio"]
                   + [f"state_{k}" for k in range(n_states)] + [f"ratio_{k}" for k in range(n_states)])
        for r in rows:
            w.writerow([f"{r.V:.12g}", f"{r.sigma_t:.12g}", f"{r.sigma_x:.12g}", f"{r.N:.12g}",
                        int(r.breakdown), f"{r.max_ratio:.12g}"]
                       + [int(s) for s in r.states] + [f"{q:.12g}" for q in r.ratios])
