"""Time evolution of the expansion coefficients.

The interaction-picture amplitudes c~_j = c_j exp(i E_j t / hbar) obey

    dc~_j/dt = -(i/hbar) g(t) sum_n M_jn exp(i w_jn t) c~_n,

which is integrated with fixed-step classic RK4. The right-hand side is
evaluated as phase rotation, dense real mat-vec, rotation back, and works
on a batch of K independent columns at once (the ensemble runs K members
through a single mat-mat product per stage).

A Schrodinger-picture propagator built from matrix exponentials of the
piecewise-constant Hamiltonian serves as an independent oracle.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .coupling import CouplingMatrix
from .eigen import SpectralBasis
from .errors import ContractViolation, IntegrationQualityError
from .model import HBAR_C
from .pulses import StochasticSquareTrain

NORM_TOL = 1e-4
DEFAULT_DT_GAUSSIAN = 0.005
DEFAULT_DT_STOCHASTIC = 0.004


@dataclass
class Trajectory:
    """Sampled occupations |c_n(t)|^2 with norm defect and mean energy."""

    times: np.ndarray
    occupations: np.ndarray
    norm_defect: np.ndarray
    mean_energy: np.ndarray
    energies: np.ndarray
    final_state: np.ndarray
    initial_index: int | None = None
    seed: int | None = None
    meta: dict = field(default_factory=dict)

    @property
    def n_basis(self) -> int:
        return self.occupations.shape[1]

    def to_csv(self, path):
        write_trajectory_csv(path, self.times, self.norm_defect, self.mean_energy, self.occupations)


def write_trajectory_csv(path, times, norm_defect, mean_energy, occupations, extra=None):
    """Shared CSV layout: t, norm_defect, mean_energy, occ_0..occ_{n-1}[, extra...]."""
    n = occupations.shape[1]
    header = ["t_fm", "norm_defect", "mean_energy_MeV"] + [f"occ_{i}" for i in range(n)]
    if extra:
        for name, arr in extra.items():
            header += [f"{name}_{i}" for i in range(arr.shape[1])] if arr.ndim == 2 else [name]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for k in range(len(times)):
            row = [times[k], norm_defect[k], mean_energy[k], *occupations[k]]
            if extra:
                for arr in extra.values():
                    row += list(arr[k]) if arr.ndim == 2 else [arr[k]]
            w.writerow([f"{v:.12g}" for v in row])


def _matvec(m: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Real matrix times complex array using a real BLAS product."""
    zr = np.ascontiguousarray(z)
    out = m @ zr.view(np.float64).reshape(zr.shape[0], -1)
    return out.view(np.complex128).reshape(zr.shape)


def rhs(c_tilde, t, M, g, energies, hbar_c: float = HBAR_C):
    """Interaction-picture derivative dc~/dt.

    Parameters
    ----------
    c_tilde : complex array, shape (n,) or (n, K)
    t : float
        Time in fm.
    M : CouplingMatrix or ndarray
        Spatial coupling in MeV.
    g : float, array of shape (K,), or callable
        Drive multiplier at time ``t``; a callable is evaluated at ``t``.
    energies : array, shape (n,)
        Eigenvalues in MeV; the transition frequencies follow from them.
    """
    m = M.m if isinstance(M, CouplingMatrix) else np.asarray(M)
    if callable(g):
        g = g(t)
    phase = np.exp(1j * (np.asarray(energies) * (t / hbar_c)))
    c = np.asarray(c_tilde, dtype=complex)
    if c.ndim == 2:
        phase = phase[:, None]
    out = phase * _matvec(m, np.conj(phase) * c)
    return (-1j / hbar_c) * np.asarray(g) * out


def _check_norm(defect, t, seed=None):
    defect = np.abs(np.atleast_1d(defect))
    worst = float(np.max(defect))
    if worst > NORM_TOL:
        if isinstance(seed, (list, tuple)):
            seed = seed[int(np.argmax(defect))]
        who = f" (member seed {seed})" if seed is not None else ""
        raise IntegrationQualityError(
            f"norm defect {worst:.3e} at t={t:.6g} fm exceeds {NORM_TOL:.0e}{who}; reduce dt"
        )


def _step_count(t_start, t_stop, dt):
    span = abs(t_stop - t_start)
    n = int(round(span / dt))
    if n < 1 or abs(n * dt - span) > 1e-9 * max(span, 1.0):
        raise ContractViolation(f"dt={dt} does not divide the interval length {span}")
    return n


def _check_alignment(schedule, dt):
    if isinstance(schedule, StochasticSquareTrain):
        ratio = schedule.window / dt
        if abs(ratio - round(ratio)) > 1e-9 * ratio:
            raise ContractViolation(
                f"dt={dt} fm must divide the stochastic window {schedule.window} fm"
            )


def propagate(basis: SpectralBasis, M, signal_fn, c0, t_start: float, t_stop: float, dt: float,
              sample_every: int = 1, on_sample=None, seeds=None, check_norm: bool = True):
    """Batched RK4 from ``t_start`` to ``t_stop`` (which may lie in the past).

    ``signal_fn(t, dt)`` returns the drive at the stage times t, t+dt/2, t+dt
    as an array of shape (3,) or (3, K). ``on_sample(step, t, c)`` is called
    at step 0, every ``sample_every`` steps and at the final step.

    Returns the final amplitudes.
    """
    if not dt > 0:
        raise ContractViolation(f"dt must be positive, got {dt}")
    n_steps = _step_count(t_start, t_stop, dt)
    h = dt if t_stop >= t_start else -dt
    m = M.m if isinstance(M, CouplingMatrix) else np.asarray(M, dtype=float)
    m = np.ascontiguousarray(m)
    e = np.asarray(basis.energies if hasattr(basis, "energies") else basis, dtype=float)
    c = np.array(c0, dtype=complex)
    batched = c.ndim == 2
    w = e / HBAR_C
    if batched:
        w = w[:, None]
    scale = -1j / HBAR_C

    def f(cv, t, gv):
        ph = np.exp(1j * w * t)
        return (scale * gv) * (ph * _matvec(m, np.conj(ph) * cv))

    def sample(k, t, cv):
        if check_norm:
            _check_norm(1.0 - np.sum(np.abs(cv) ** 2, axis=0), t, seeds)
        if on_sample is not None:
            on_sample(k, t, cv)

    sample(0, t_start, c)
    for k in range(n_steps):
        t = t_start + k * h
        g0, g1, g2 = signal_fn(t, h)
        k1 = f(c, t, g0)
        k2 = f(c + (0.5 * h) * k1, t + 0.5 * h, g1)
        k3 = f(c + (0.5 * h) * k2, t + 0.5 * h, g1)
        k4 = f(c + h * k3, t + h, g2)
        c = c + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if (k + 1) % sample_every == 0 or k + 1 == n_steps:
            sample(k + 1, t_start + (k + 1) * h, c)
    return c


class _Recorder:
    def __init__(self, energies):
        self.energies = energies
        self.times, self.occ = [], []

    def __call__(self, k, t, c):
        self.times.append(t)
        self.occ.append(np.abs(c) ** 2)

    def trajectory(self, final, initial_index=None, seed=None, meta=None):
        occ = np.array(self.occ)
        total = occ.sum(axis=1)
        return Trajectory(
            times=np.array(self.times), occupations=occ, norm_defect=1.0 - total,
            mean_energy=occ @ self.energies / total, energies=self.energies,
            final_state=final, initial_index=initial_index, seed=seed, meta=meta or {},
        )


def unit_vector(n: int, index: int) -> np.ndarray:
    if not 0 <= index < n:
        raise ContractViolation(f"initial_index {index} outside basis of size {n}")
    c = np.zeros(n, dtype=complex)
    c[index] = 1.0
    return c


def evolve(basis: SpectralBasis, M, schedule, initial_index: int = 0, t_end: float = 100.0,
           dt: float | None = None, sample_every: int = 100, initial_state=None) -> Trajectory:
    """Integrate from t = 0 to ``t_end`` starting in eigenstate ``initial_index``.

    Raises IntegrationQualityError when the norm defect exceeds 1e-4 at a
    sample, and ContractViolation when ``dt`` does not tile the interval or
    the stochastic windows.
    """
    if dt is None:
        dt = DEFAULT_DT_STOCHASTIC if isinstance(schedule, StochasticSquareTrain) else DEFAULT_DT_GAUSSIAN
    if not t_end > 0:
        raise ContractViolation(f"t_end must be positive, got {t_end}")
    _check_alignment(schedule, dt)
    n = len(basis.energies)
    c0 = unit_vector(n, initial_index) if initial_state is None else np.asarray(initial_state, dtype=complex)
    rec = _Recorder(np.asarray(basis.energies))
    seed = getattr(schedule, "seed", None)
    final = propagate(basis, M, schedule.step_signal, c0, 0.0, t_end, dt, sample_every, rec,
                      seeds=seed)
    return rec.trajectory(final, initial_index, seed, {"dt": dt, "t_end": t_end})


def _expm_hermitian(h: np.ndarray, tau: float) -> np.ndarray:
    """exp(-i h tau) for real symmetric h via eigendecomposition."""
    lam, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * lam * tau)) @ v.T


def evolve_oracle(basis: SpectralBasis, M, schedule, initial_index: int = 0, t_end: float = 100.0,
                  dt: float = 0.01, substeps: int = 1, sample_every: int = 1,
                  initial_state=None) -> Trajectory:
    """Piecewise-constant-Hamiltonian propagator in the Schrodinger picture.

    H is frozen at the midpoint of each of the ``substeps`` sub-intervals of
    every ``dt`` step and applied exactly via its eigendecomposition, so each
    step is unitary to rounding. Occupations are sampled on the ``dt`` grid.
    """
    _check_alignment(schedule, dt)
    m = M.m if isinstance(M, CouplingMatrix) else np.asarray(M, dtype=float)
    e = np.asarray(basis.energies, dtype=float)
    n = e.size
    c = unit_vector(n, initial_index) if initial_state is None else np.array(initial_state, dtype=complex)
    n_steps = _step_count(0.0, t_end, dt)
    tau = dt / substeps
    h0 = np.diag(e)
    rec = _Recorder(e)
    rec(0, 0.0, c)
    for k in range(n_steps):
        for s in range(substeps):
            tm = k * dt + (s + 0.5) * tau
            g = float(schedule.signal(tm))
            c = _expm_hermitian(h0 + g * m, tau / HBAR_C) @ c
        if (k + 1) % sample_every == 0 or k + 1 == n_steps:
            t = (k + 1) * dt
            # report interaction-picture amplitudes for comparability
            rec(k + 1, t, c)
    t_final = n_steps * dt
    c_tilde = c * np.exp(1j * e * t_final / HBAR_C)
    return rec.trajectory(c_tilde, initial_index, getattr(schedule, "seed", None),
                          {"dt": dt, "t_end": t_end, "substeps": substeps})


def pulse_timing(sigma_t: float, dt: float):
    """Pulse center and end time used for single-pulse scans.

    The pulse sits at max(50, 10 sigma_t) fm so g(0) is negligible. The run
    stops 20 sigma_t after it, leaving a 10 sigma_t window past the pulse
    tail for the settle check. Both are rounded onto the dt grid.
    """
    t0 = max(50.0, 10.0 * sigma_t)
    t_end = t0 + 20.0 * sigma_t
    return round(t0 / dt) * dt, round(t_end / dt) * dt


def run_single_pulse(basis: SpectralBasis, V: float, sigma_t: float, sigma_x: float, initial_index: int = 0,
                     dt: float = DEFAULT_DT_GAUSSIAN, x0: float = 0.0, sample_every: int = 100):
    """Evolve through one Gaussian pulse; returns (schedule, coupling, trajectory)."""
    from .coupling import compute_coupling
    from .pulses import GaussianTrain, SpatialProfile

    profile = SpatialProfile(V=V, x0=x0, sigma_x=sigma_x)
    M = compute_coupling(basis, profile)
    t0, t_end = pulse_timing(sigma_t, dt)
    schedule = GaussianTrain(profile, sigma_t, (t0,))
    return schedule, M, evolve(basis, M, schedule, initial_index, t_end, dt, sample_every)
