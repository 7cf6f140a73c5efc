import numpy as np
import pytest
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from boundform import Parity, WellConfig, build_basis, build_state, evaluate_psi, solve_eigenvalues
from boundform.eigen import count_nodes, matching_function, matching_residual
from boundform.errors import ConfigurationError, ContractViolation, DomainError
from boundform.quadrature import simpson

CFG = WellConfig()


def _shoot(cfg, energy, parity):
    """Integrate from the right wall to x = 0; zero at an eigenvalue."""
    kappa = cfg.kinetic_scale

    def f(x, y, v):
        return [y[1], kappa * (v - energy) * y[0]]

    kw = dict(method="DOP853", rtol=1e-12, atol=1e-14)
    out = solve_ivp(f, (cfg.L, cfg.a), [0.0, -1.0], args=(0.0,), **kw)
    inner = solve_ivp(f, (cfg.a, 0.0), out.y[:, -1], args=(cfg.V0,), **kw)
    psi0, dpsi0 = inner.y[:, -1]
    scale = np.hypot(psi0, dpsi0 / np.sqrt(kappa * (energy - cfg.V0)))
    return (dpsi0 / np.sqrt(kappa * (energy - cfg.V0)) if Parity(parity) is Parity.SYMMETRIC else psi0) / scale


@pytest.fixture(scope="module")
def spectrum():
    return solve_eigenvalues(CFG)


def test_spectrum_shape(spectrum):
    e = np.array([v for v, _ in spectrum])
    assert len(spectrum) == 110
    assert np.all(np.diff(e) > 0)
    assert np.sum(e < 0) == 1
    assert e[0] == pytest.approx(-2.3, abs=0.1)
    # parities alternate starting from symmetric
    assert [p for _, p in spectrum[:6]] == [Parity.SYMMETRIC, Parity.ANTISYMMETRIC] * 3


@pytest.mark.parametrize("n", [0, 1, 2, 7, 50])
def test_shooting_oracle_brackets_roots(spectrum, n):
    e, p = spectrum[n]
    d = 1e-7 * max(abs(e), 1.0)
    lo, hi = _shoot(CFG, e - d, p), _shoot(CFG, e + d, p)
    assert lo * hi < 0


def test_bound_state_against_open_well():
    # for k1 (L - a) >> 1 the box is invisible to the bound state
    kappa = CFG.kinetic_scale

    def g(E):
        k1, k2 = np.sqrt(-kappa * E), np.sqrt(kappa * (E - CFG.V0))
        return k2 * np.sin(k2 * CFG.a) - k1 * np.cos(k2 * CFG.a)

    E_open = brentq(g, -17.9, -0.01, xtol=1e-14)
    assert solve_eigenvalues(CFG)[0][0] == pytest.approx(E_open, rel=1e-10)
    assert E_open == pytest.approx(-2.33694, abs=1e-5)


@pytest.mark.parametrize("n", [0, 3, 4, 40, 41, 109])
def test_literal_log_derivative_conditions(spectrum, n):
    # inner and outer logarithmic derivatives agree at x = a
    e, p = spectrum[n]
    kappa = CFG.kinetic_scale
    k1, k2 = np.sqrt(kappa * abs(e)), np.sqrt(kappa * (e - CFG.V0))
    d = CFG.L - CFG.a
    outer = -k1 / np.tanh(k1 * d) if e < 0 else -k1 / np.tan(k1 * d)
    inner = -k2 * np.tan(k2 * CFG.a) if p is Parity.SYMMETRIC else k2 / np.tan(k2 * CFG.a)
    assert inner == pytest.approx(outer, rel=1e-8, abs=1e-8 * k2)


def test_matching_continuous_through_threshold():
    s = np.linspace(-1e-3, 1e-3, 201)
    for p in Parity:
        f = matching_function(CFG, s, p)
        assert np.all(np.isfinite(f))
        # no jump at s = 0: second differences stay at the smooth level
        d2 = np.abs(np.diff(f, 2))
        assert d2[99] < 10 * np.median(d2) + 1e-9


def test_residual_small_at_roots(spectrum):
    assert max(abs(matching_residual(CFG, e, p)) for e, p in spectrum) < 1e-9


def test_build_state_rejects_non_root():
    with pytest.raises(ContractViolation):
        build_state(CFG, 5.0, Parity.SYMMETRIC)


@pytest.mark.parametrize("n", [0, 1, 25, 109])
def test_normalization_refined_grid(spectrum, n):
    e, p = spectrum[n]
    st = build_state(CFG, e, p, n)
    x = np.linspace(-CFG.L, CFG.L, 80001)
    assert simpson(st(x) ** 2, x[1] - x[0]) == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("n", [0, 1, 30, 77])
def test_continuity_at_edge(spectrum, n):
    e, p = spectrum[n]
    st = build_state(CFG, e, p, n)
    eps = 1e-7
    a = CFG.a
    left, right = st(a - eps), st(a + eps)
    assert left == pytest.approx(right, abs=1e-5 * st.norm_constant)
    dl = (st(a - eps) - st(a - 2 * eps)) / eps
    dr = (st(a + 2 * eps) - st(a + eps)) / eps
    assert dl == pytest.approx(dr, rel=1e-4, abs=1e-4 * st.k2 * st.norm_constant)


def test_parity_and_sign_convention(spectrum):
    x = np.linspace(0.0, CFG.L, 501)
    for n in (0, 1, 10, 11):
        e, p = spectrum[n]
        st = build_state(CFG, e, p, n)
        np.testing.assert_allclose(st(-x), p.sign * st(x), atol=1e-14)
        assert st(-CFG.L + 1e-3) > 0
        assert st(CFG.L) == pytest.approx(0.0, abs=1e-12)


def test_evaluate_outside_box(spectrum):
    st = build_state(CFG, *spectrum[0])
    with pytest.raises(DomainError):
        evaluate_psi(st, 101.0)


def test_nodes(basis):
    for n in range(31):
        assert count_nodes(basis.sampled_psi[n, 1:-1]) == n


def test_orthonormality(basis):
    assert basis.orthonormality_defect() < 1e-6
    assert basis.sampled_psi.flags.writeable is False


def test_transition_frequencies(basis):
    w = basis.transition_frequencies()
    assert w[3, 1] == pytest.approx((basis.energies[3] - basis.energies[1]) / 197.327)
    np.testing.assert_allclose(w, -w.T)


def test_grid_too_coarse():
    with pytest.raises(ConfigurationError):
        build_basis(CFG, grid_points=1000)


def test_larger_basis_extends_spectrum(spectrum):
    big = solve_eigenvalues(WellConfig(n_basis=300))
    assert len(big) == 300
    np.testing.assert_allclose([e for e, _ in big[:110]], [e for e, _ in spectrum], rtol=1e-12)


def test_ceiling_doubling_gives_up(monkeypatch):
    import boundform.eigen as eigen

    monkeypatch.setattr(eigen, "_scan_roots", lambda *a, **k: [])
    with pytest.raises(ConfigurationError, match="found only 0"):
        solve_eigenvalues(CFG)


def test_csv(basis, tmp_path):
    path = tmp_path / "basis.csv"
    psi = basis.to_csv(path, include_psi=True, psi_stride=100)
    rows = path.read_text().strip().splitlines()
    assert len(rows) == 111
    assert float(rows[1].split(",")[2]) == pytest.approx(-2.33694, abs=1e-5)
    assert psi and str(psi).endswith("_psi.csv")
