from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import eigh_tridiagonal, solve_banded

from boundform import (HBAR_C, GaussianTrain, SpatialProfile, StochasticSquareTrain, compute_coupling, evolve,
                       evolve_oracle, realize, rhs)
from boundform.errors import ContractViolation, IntegrationQualityError
from boundform.evolution import propagate, pulse_timing, run_single_pulse


def _pulse(V=100.0, sigma_x=1.2, sigma_t=1.0, t0=50.0, x0=0.0):
    return GaussianTrain(SpatialProfile(V, x0, sigma_x), sigma_t, (t0,))


def _constant(t, h):
    return np.ones(3)


@pytest.mark.parametrize("detuning", [0.0, 0.05, 0.3])
def test_rabi_two_level(detuning):
    # constant coupling mu between two levels split by hbar*delta: closed-form Rabi formula
    mu = 3.0
    e = np.array([0.0, detuning * HBAR_C])
    m = np.array([[0.0, mu], [mu, 0.0]])
    c0 = np.array([1.0, 0.0], dtype=complex)
    t = 20.0
    c = propagate(e, m, _constant, c0, 0.0, t, 0.002, check_norm=False)
    omega = 2 * mu / HBAR_C
    gen = np.hypot(omega, detuning)
    p1 = (omega / gen) ** 2 * np.sin(gen * t / 2) ** 2
    assert abs(c[1]) ** 2 == pytest.approx(p1, abs=1e-12)


def test_no_drive_keeps_state(basis):
    M = compute_coupling(basis, SpatialProfile(0.0))
    traj = evolve(basis, M, _pulse(V=0.0), 7, 10.0, 0.01, sample_every=50)
    assert np.all(traj.occupations[:, 7] == 1.0)
    assert np.all(traj.mean_energy == basis.energies[7])
    assert traj.final_state[7] == 1.0


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.0, 200.0), st.floats(-50.0, 50.0))
def test_rhs_is_anti_hermitian(seed, t, g):
    rng = np.random.default_rng(seed)
    n = 12
    a = rng.normal(size=(n, n))
    m = a + a.T
    e = np.sort(rng.uniform(-5, 100, n))
    c = rng.normal(size=n) + 1j * rng.normal(size=n)
    d = rhs(c, t, m, g, e)
    bound = abs(g) * np.linalg.norm(m, 2) * np.vdot(c, c).real / HBAR_C
    assert abs(np.vdot(c, d).real) <= 1e-13 * bound


def test_rhs_callable_and_batched():
    rng = np.random.default_rng(0)
    m = rng.normal(size=(5, 5))
    m = m + m.T
    e = np.linspace(-2, 40, 5)
    c = rng.normal(size=(5, 3)) + 0j
    b = rhs(c, 1.5, m, lambda t: 2 * t, e)
    for k in range(3):
        np.testing.assert_allclose(b[:, k], rhs(c[:, k], 1.5, m, 3.0, e), rtol=1e-14)


def test_time_reversal(basis):
    s = _pulse()
    M = compute_coupling(basis, s.profile)
    c0 = np.zeros(len(basis), dtype=complex)
    c0[0] = 1.0
    fwd = propagate(basis, M, s.step_signal, c0, 40.0, 60.0, 0.005)
    back = propagate(basis, M, s.step_signal, fwd, 60.0, 40.0, 0.005)
    assert np.max(np.abs(back - c0)) < 1e-10


def test_picture_equivalence(basis):
    # interaction-picture RK4 vs Schrodinger-picture exponentials, complex amplitudes
    sb = SimpleNamespace(energies=basis.energies[:8])
    s = _pulse(V=300.0)
    M = compute_coupling(basis, s.profile).m[:8, :8]
    a = evolve(sb, M, s, 0, 60.0, 0.005, sample_every=10**6).final_state
    b = evolve_oracle(sb, M, s, 0, 60.0, 0.01, substeps=4, sample_every=10**6).final_state
    assert np.max(np.abs(a - b)) < 1e-8


def test_norm_conserved(basis):
    _, _, traj = run_single_pulse(basis, 100.0, 1.0, 1.2, 0, 0.005, sample_every=10)
    assert np.max(np.abs(traj.norm_defect)) < 1e-10


def test_batched_matches_single(basis):
    s = _pulse()
    M = compute_coupling(basis, s.profile)
    c0 = np.zeros((len(basis), 2), dtype=complex)
    c0[0, 0] = 1.0
    c0[5, 1] = 1.0

    def sig2(t, h):
        return np.repeat(s.step_signal(t, h)[:, None], 2, axis=1)

    batch = propagate(basis, M, sig2, c0, 45.0, 55.0, 0.01)
    for k in range(2):
        one = propagate(basis, M, s.step_signal, c0[:, k], 45.0, 55.0, 0.01)
        np.testing.assert_allclose(batch[:, k], one, atol=1e-14)


def test_against_grid_crank_nicolson(basis):
    # full TDSE on a fine grid, no eigenbasis: bound-state loss after one pulse
    L, a = basis.cfg.L, basis.cfg.a
    x = np.linspace(-L, L, 20001)[1:-1]
    h = x[1] - x[0]
    kin = HBAR_C**2 / (2 * basis.cfg.m * h * h)
    d = 2 * kin + np.where(np.abs(x) <= a, basis.cfg.V0, 0.0)
    off = -kin * np.ones(x.size - 1)
    _, v = eigh_tridiagonal(d, off, select="i", select_range=(0, 0))
    psi0 = v[:, 0].astype(complex)
    prof = 100.0 * np.exp(-(x**2) / (2 * 1.2**2))
    dt, r = 0.004, 0.5j * 0.004 / HBAR_C
    psi = psi0.copy()
    ab = np.zeros((3, x.size), complex)
    ab[0, 1:] = r * off
    ab[2, :-1] = r * off
    for k in range(5000):
        dd = d + prof * np.exp(-((40.0 + (k + 0.5) * dt - 50.0) ** 2) / 2)
        ab[1] = 1 + r * dd
        rhs_ = (1 - r * dd) * psi
        rhs_[:-1] -= r * off * psi[1:]
        rhs_[1:] -= r * off * psi[:-1]
        psi = solve_banded((1, 1), ab, rhs_)
    loss_grid = 1 - abs(np.vdot(psi0, psi)) ** 2
    _, _, traj = run_single_pulse(basis, 100.0, 1.0, 1.2, 0, 0.005, sample_every=10**6)
    loss = 1 - traj.occupations[-1, 0]
    assert loss_grid == pytest.approx(0.2058, abs=2e-3)
    assert loss == pytest.approx(loss_grid, abs=3e-3)


def test_stochastic_deterministic(basis):
    s = realize(StochasticSquareTrain(SpatialProfile(1.0, 0.0, 1.2), n_pulses=20, seed=5))
    M = compute_coupling(basis, s.profile)
    a = evolve(basis, M, s, 0, 2.0, 0.004, sample_every=25)
    b = evolve(basis, M, s, 0, 2.0, 0.004, sample_every=25)
    np.testing.assert_array_equal(a.occupations, b.occupations)
    assert a.seed == 5
    assert a.times[1] == pytest.approx(0.1)


def test_contracts(basis):
    s = _pulse()
    M = compute_coupling(basis, s.profile)
    with pytest.raises(ContractViolation):
        evolve(basis, M, s, 0, 1.0, 0.3)
    with pytest.raises(ContractViolation):
        evolve(basis, M, s, 0, -1.0)
    with pytest.raises(ContractViolation):
        evolve(basis, M, s, 110, 1.0)
    noise = realize(StochasticSquareTrain(n_pulses=10))
    with pytest.raises(ContractViolation):
        evolve(basis, M, noise, 0, 1.0, 0.03)
    with pytest.raises(ContractViolation):
        evolve(basis, M, StochasticSquareTrain(n_pulses=10), 0, 1.0, 0.005)


def test_integration_quality_error(basis):
    s = _pulse(V=5000.0)
    M = compute_coupling(basis, s.profile)
    with pytest.raises(IntegrationQualityError, match="norm defect"):
        evolve(basis, M, s, 0, 100.0, 0.5, sample_every=1)


def test_pulse_timing():
    assert pulse_timing(1.0, 0.005) == (50.0, 70.0)
    assert pulse_timing(30.0, 0.01) == pytest.approx((300.0, 900.0))


def test_trajectory_csv(basis, tmp_path):
    _, _, traj = run_single_pulse(basis, 100.0, 1.0, 1.2, 0, 0.01, sample_every=1000)
    traj.to_csv(tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    head = lines[0].split(",")
    assert head[:4] == ["t_fm", "norm_defect", "mean_energy_MeV", "occ_0"] and len(head) == 113
    assert len(lines) == 1 + traj.times.size
    assert float(lines[-1].split(",")[3]) == pytest.approx(traj.occupations[-1, 0], rel=1e-11)
