"""Monte-Carlo averages over realizations of the stochastic drive."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, replace

import numpy as np

from .errors import ConfigurationError
from .evolution import DEFAULT_DT_STOCHASTIC, _check_alignment, propagate, write_trajectory_csv
from .pulses import StochasticSquareTrain, realize


@dataclass(frozen=True)
class EnsembleSpec:
    """Member k uses seed ``schedule.seed + k``."""

    schedule: StochasticSquareTrain
    n_realizations: int = 200

    def __post_init__(self):
        if int(self.n_realizations) != self.n_realizations or self.n_realizations < 1:
            raise ConfigurationError(f"n_realizations must be an integer >= 1, got {self.n_realizations}")

    @property
    def base_seed(self) -> int:
        return int(self.schedule.seed)

    def member_seeds(self) -> list[int]:
        return [self.base_seed + k for k in range(self.n_realizations)]

    def member(self, k: int) -> StochasticSquareTrain:
        return realize(replace(self.schedule, seed=self.base_seed + k, amplitudes=()))


@dataclass
class EnsembleResult:
    times: np.ndarray
    mean_occupations: np.ndarray
    mean_energy: np.ndarray
    stderr_occupations: np.ndarray
    stderr_energy: np.ndarray
    n_members: int
    base_seed: int
    initial_index: int
    energies: np.ndarray

    @property
    def norm_defect(self) -> np.ndarray:
        return 1.0 - self.mean_occupations.sum(axis=1)

    def to_csv(self, path):
        write_trajectory_csv(
            path, self.times, self.norm_defect, self.mean_energy, self.mean_occupations,
            extra={"stderr_mean_energy": self.stderr_energy, "stderr_occ": self.stderr_occupations},
        )

    def write_manifest(self, path, spec: EnsembleSpec, **extra):
        sched = asdict(spec.schedule)
        sched.pop("amplitudes", None)
        payload = {
            "base_seed": self.base_seed,
            "n_members": self.n_members,
            "member_seeds": [self.base_seed, self.base_seed + self.n_members - 1],
            "initial_index": self.initial_index,
            "schedule": sched,
            **extra,
        }
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True, default=str)


class _Accumulator:
    """Running sums over members, evaluated at the sample instants."""

    def __init__(self, energies):
        self.energies = energies
        self.times = []
        self.s1 = []
        self.s2 = []
        self.e1 = []
        self.e2 = []
        self._k = 0

    def start_batch(self):
        self._k = 0

    def __call__(self, step, t, c):
        occ = np.abs(c) ** 2  # (n, K)
        en = (self.energies @ occ) / occ.sum(axis=0)
        row = (occ.sum(axis=1), (occ * occ).sum(axis=1), en.sum(), (en * en).sum())
        if self._k == len(self.times):
            self.times.append(t)
            self.s1.append(row[0])
            self.s2.append(row[1])
            self.e1.append(row[2])
            self.e2.append(row[3])
        else:
            i = self._k
            self.s1[i] = self.s1[i] + row[0]
            self.s2[i] = self.s2[i] + row[1]
            self.e1[i] += row[2]
            self.e2[i] += row[3]
        self._k += 1


def _stderr(s1, s2, k):
    if k < 2:
        return np.zeros_like(s1)
    mean = s1 / k
    var = np.maximum(s2 / k - mean * mean, 0.0) * k / (k - 1)
    return np.sqrt(var / k)


def run_ensemble(basis, M, spec: EnsembleSpec, initial_index: int = 0, t_end: float | None = None,
                 dt: float = DEFAULT_DT_STOCHASTIC, sample_every: int | None = None,
                 batch_size: int = 50) -> EnsembleResult:
    """Evolve every member and average occupations and mean energy in time.

    Members are propagated ``batch_size`` at a time as columns of one
    amplitude matrix; per-sample sums are accumulated batch by batch in
    member order, so a given (spec, batch_size) is bit-reproducible.
    ``t_end`` defaults to the end of the noise (n_pulses windows) and
    ``sample_every`` to one sample per window.
    """
    sched = spec.schedule
    _check_alignment(sched, dt)
    if t_end is None:
        t_end = sched.duration
    if sample_every is None:
        sample_every = max(int(round(sched.window / dt)), 1)
    e = np.asarray(basis.energies, dtype=float)
    n = e.size
    if not 0 <= initial_index < n:
        raise ConfigurationError(f"initial_index {initial_index} outside basis of size {n}")
    acc = _Accumulator(e)
    K = spec.n_realizations
    window = sched.window
    for lo in range(0, K, batch_size):
        ks = range(lo, min(lo + batch_size, K))
        members = [spec.member(k) for k in ks]
        amps = np.array([m.amplitudes for m in members])  # (B, n_pulses)
        n_pulses = amps.shape[1]

        def signal_fn(t, h, amps=amps, n_pulses=n_pulses):
            j = int(np.floor((t + 0.5 * h) / window))
            g = amps[:, j] if 0 <= j < n_pulses else np.zeros(amps.shape[0])
            return (g, g, g)

        c0 = np.zeros((n, len(members)), dtype=complex)
        c0[initial_index] = 1.0
        acc.start_batch()
        seeds = [m.seed for m in members]
        propagate(e, M, signal_fn, c0, 0.0, t_end, dt, sample_every, acc,
                  seeds=seeds if len(seeds) > 1 else seeds[0])
    s1, s2 = np.array(acc.s1), np.array(acc.s2)
    e1, e2 = np.array(acc.e1), np.array(acc.e2)
    return EnsembleResult(
        times=np.array(acc.times), mean_occupations=s1 / K, mean_energy=e1 / K,
        stderr_occupations=_stderr(s1, s2, K), stderr_energy=_stderr(e1, e2, K),
        n_members=K, base_seed=spec.base_seed, initial_index=initial_index, energies=e,
    )


def mean_energy_curve(result: EnsembleResult):
    """Ensemble mean energy and the slope (MeV/fm) of its linear fit."""
    slope = np.polyfit(result.times, result.mean_energy, 1)[0] if result.times.size > 1 else 0.0
    return result.mean_energy, float(slope)
