"""Time-dependent drives V(x, t) = spatial(x) * g(t).

Two schedule types share one Gaussian spatial profile:

* ``GaussianTrain``: g(t) = sum_k exp(-(t - t_k)^2 / (2 sigma_t^2)), with the
  amplitude ``V`` carried by the profile.
* ``StochasticSquareTrain``: piecewise-constant g(t) whose value on the j-th
  window [j*n*dt, (j+1)*n*dt) is an independent Normal(0, sigma_V) amplitude
  in MeV; the profile amplitude is 1.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigurationError, ContractViolation
from .model import WellConfig, check_in_box


@dataclass(frozen=True)
class SpatialProfile:
    V: float = 100.0
    x0: float = 0.0
    sigma_x: float = 1.2

    def __post_init__(self):
        if not self.sigma_x > 0:
            raise ConfigurationError(f"sigma_x must be positive, got {self.sigma_x}")

    def shape(self, x):
        """Unit-height Gaussian exp(-(x - x0)^2 / (2 sigma_x^2))."""
        x = np.asarray(x, dtype=float)
        return np.exp(-((x - self.x0) ** 2) / (2.0 * self.sigma_x**2))

    def __call__(self, x):
        return self.V * self.shape(x)


@dataclass(frozen=True)
class GaussianTrain:
    profile: SpatialProfile
    sigma_t: float
    centers: tuple = (50.0,)

    def __post_init__(self):
        object.__setattr__(self, "centers", tuple(float(c) for c in np.atleast_1d(self.centers)))
        if not self.sigma_t > 0:
            raise ConfigurationError(f"sigma_t must be positive, got {self.sigma_t}")
        if len(self.centers) == 0:
            raise ConfigurationError("a Gaussian train needs at least one pulse center")
        if np.any(np.diff(self.centers) <= 0):
            raise ConfigurationError("pulse centers must be strictly increasing")

    @property
    def b(self) -> float:
        return 1.0 / (2.0 * self.sigma_t**2)

    @property
    def last_pulse_time(self) -> float:
        return self.centers[-1]

    def signal(self, t):
        t = np.asarray(t, dtype=float)
        c = np.asarray(self.centers)
        g = np.exp(-self.b * (t[..., None] - c) ** 2).sum(axis=-1)
        return g[()] if g.ndim == 0 else g

    def step_signal(self, t: float, dt: float):
        """g at the three RK4 stage times t, t + dt/2, t + dt."""
        return self.signal(np.array([t, t + 0.5 * dt, t + dt]))

    def single_pulses(self):
        return [replace(self, centers=(c,)) for c in self.centers]


@dataclass(frozen=True)
class StochasticSquareTrain:
    """Square-pulse noise with i.i.d. Normal(0, sigma_V) amplitudes.

    ``amplitudes`` is empty until :func:`realize` is called.
    """

    profile: SpatialProfile = field(default_factory=lambda: SpatialProfile(V=1.0))
    sigma_V: float = 50.0
    delta_t: float = 0.02
    hold_factor: int = 5
    n_pulses: int = 2000
    seed: int = 0
    amplitudes: tuple = ()

    def __post_init__(self):
        if not self.sigma_V >= 0:
            raise ConfigurationError(f"sigma_V must be non-negative, got {self.sigma_V}")
        if not self.delta_t > 0:
            raise ConfigurationError(f"delta_t must be positive, got {self.delta_t}")
        if int(self.hold_factor) != self.hold_factor or self.hold_factor < 1:
            raise ConfigurationError(f"hold_factor must be an integer >= 1, got {self.hold_factor}")
        if int(self.n_pulses) != self.n_pulses or self.n_pulses < 1:
            raise ConfigurationError(f"n_pulses must be an integer >= 1, got {self.n_pulses}")
        if self.profile.V != 1.0:
            raise ConfigurationError("stochastic schedules carry their amplitude in g(t); profile.V must be 1")
        if self.amplitudes and len(self.amplitudes) != self.n_pulses:
            raise ConfigurationError("number of amplitudes does not match n_pulses")

    @property
    def window(self) -> float:
        return self.hold_factor * self.delta_t

    @property
    def duration(self) -> float:
        return self.n_pulses * self.window

    @property
    def last_pulse_time(self) -> float:
        return self.duration

    @property
    def is_realized(self) -> bool:
        return len(self.amplitudes) == self.n_pulses

    def _require_realized(self):
        if not self.is_realized:
            raise ContractViolation("stochastic schedule has not been realized; call realize() first")

    def window_index(self, t):
        return np.floor(np.asarray(t, dtype=float) / self.window).astype(np.int64)

    def signal(self, t):
        self._require_realized()
        t = np.asarray(t, dtype=float)
        j = self.window_index(t)
        inside = (t >= 0) & (j < self.n_pulses)
        amp = np.asarray(self.amplitudes)
        g = np.where(inside, amp[np.clip(j, 0, self.n_pulses - 1)], 0.0)
        return g[()] if g.ndim == 0 else g

    def step_signal(self, t: float, dt: float):
        # constant over a step: the window containing the step midpoint
        g = float(self.signal(t + 0.5 * dt))
        return np.array([g, g, g])

    def to_csv(self, path):
        self._require_realized()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["window", "t_start_fm", "t_end_fm", "amplitude_MeV", "seed"])
            for j, v in enumerate(self.amplitudes):
                w.writerow([j, f"{j * self.window:.12g}", f"{(j + 1) * self.window:.12g}", f"{v:.12g}", self.seed])


def realize(schedule: StochasticSquareTrain) -> StochasticSquareTrain:
    """Draw the window amplitudes from the schedule's seed (deterministic)."""
    rng = np.random.default_rng(int(schedule.seed) & 0xFFFFFFFFFFFFFFFF)
    amps = rng.normal(0.0, schedule.sigma_V, size=int(schedule.n_pulses))
    return replace(schedule, amplitudes=tuple(float(v) for v in amps))


def time_signal(schedule, t):
    """Dimensionless multiplier g(t) (MeV for stochastic schedules)."""
    return schedule.signal(t)


def potential_at(schedule, x, t, cfg: WellConfig | None = None):
    """Full drive V(x, t) in MeV. ``cfg`` enables the box-domain check."""
    if cfg is not None:
        x = check_in_box(cfg, x)
    x = np.asarray(x, dtype=float)
    return schedule.profile(x) * schedule.signal(t)
