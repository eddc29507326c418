import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from mrgan.analysis import (DiracModel, GanSystem, block_identities, build_uniform_mixture, dirac_gan, dirac_wgan,
                            dirac_wgan_spectrum, eigenvalues, estimate_lipschitz, fit_decay_rate,
                            fit_point_generator, gradient_field, hessenberg, hurwitz_check, integrate_dynamics,
                            jacobian_at, objective_gap, running_ratio_max, verify_equilibrium)
from mrgan.analysis.eigen import EigenNonConvergence, hqr
from mrgan.datasets import MixtureSpec, sample_mixture
from mrgan.nets import MlpNetwork
from mrgan.objective import MeasuringFunction, affinity_weights

IDENT = MeasuringFunction("identity")
LOGD = MeasuringFunction("log_delta", 0.1)


class Linear:
    """gradient_field-compatible system with h(theta) = A theta."""

    def __init__(self, A):
        self.A, self.n_u, self.dim = np.asarray(A, float), 0, len(A)

    def value_and_grad(self, theta):
        return 0.0, self.A @ theta


# --- Lipschitz ---------------------------------------------------------------------------

def test_measuring_constants():
    e = estimate_lipschitz(MlpNetwork.init([2, 3], np.random.default_rng(0)), IDENT, probe_count=10)
    assert (e.L_phi.value, e.Delta.value, e.M.value) == (1.0, 1.0, 1.0)
    e = estimate_lipschitz(MlpNetwork.init([2, 3], np.random.default_rng(0)), LOGD, probe_count=10)
    assert e.L_phi.value == pytest.approx(10.0)
    assert e.Delta.value == pytest.approx(2.302585, abs=1e-6)
    assert e.M.value == pytest.approx(9.0)


def test_linear_generator_input_constant_is_spectral_norm():
    W = np.array([[2.0, 0.5, 0.0], [0.3, -1.0, 0.7]])
    g = MlpNetwork([2, 3], [W], [np.zeros(3)], "tanh", "identity")
    # oracle: power iteration on W^T W
    x = np.ones(2)
    for _ in range(200):
        x = W @ (W.T @ x)
        x /= np.linalg.norm(x)
    sigma = np.sqrt(x @ W @ W.T @ x)
    est = estimate_lipschitz(g, IDENT, probe_count=10_000, rng=np.random.default_rng(0)).L_prime.value
    assert sigma * 0.95 <= est <= sigma * (1 + 1e-9)


def test_estimates_monotone_in_probe_count():
    g = MlpNetwork.init([2, 8, 3], np.random.default_rng(1))
    a = estimate_lipschitz(g, LOGD, probe_count=100, rng=np.random.default_rng(9))
    b = estimate_lipschitz(g, LOGD, probe_count=400, rng=np.random.default_rng(9))
    for name in ("L", "L_prime"):
        ha, hb = getattr(a, name).history, getattr(b, name).history
        assert np.array_equal(ha, hb[:100])
        assert np.all(np.diff(hb) >= 0)


def test_running_ratio_rejects_coincident():
    z = np.zeros((3, 2))
    with pytest.raises(ValueError):
        running_ratio_max(z, z, z, z)


# --- eigenvalues --------------------------------------------------------------------------

def test_minus_identity_is_hurwitz():
    rep = hurwitz_check(-np.eye(4))
    assert rep.is_hurwitz and np.allclose(rep.spectrum, -1)


def test_rotation_is_not_hurwitz():
    rep = hurwitz_check(np.array([[0.0, -1.0], [1.0, 0.0]]))
    assert not rep.is_hurwitz
    np.testing.assert_allclose(rep.spectrum, [-1j, 1j], atol=1e-14)


@pytest.mark.parametrize("seed", range(20))
def test_eigenvalues_match_characteristic_roots(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 9))
    A = rng.standard_normal((n, n))
    ours = eigenvalues(A)
    ref = np.roots(np.poly(A))
    ref = ref[np.lexsort((ref.imag, ref.real))]
    np.testing.assert_allclose(ours, ref, atol=1e-6)
    assert np.sum(ours).real == pytest.approx(np.trace(A), abs=1e-9)


def test_hessenberg_is_similar():
    A = np.random.default_rng(0).standard_normal((6, 6))
    H = hessenberg(A)
    assert np.allclose(np.tril(H, -2), 0)
    assert np.trace(H) == pytest.approx(np.trace(A))
    assert np.linalg.norm(H) == pytest.approx(np.linalg.norm(A))


def test_non_convergence_is_reported():
    A = np.random.default_rng(0).standard_normal((8, 8))
    with pytest.raises(EigenNonConvergence):
        hqr(hessenberg(A), max_iter=1)
    rep = hurwitz_check(A, max_iter=1)
    assert not rep.converged and not rep.is_hurwitz and "converge" in rep.message


def test_eigen_input_validation():
    with pytest.raises(ValueError):
        eigenvalues(np.ones((2, 3)))
    with pytest.raises(ValueError):
        eigenvalues(np.array([[np.nan]]))


# --- Dirac fixtures ------------------------------------------------------------------------

def test_dirac_wgan_spectra():
    J0 = jacobian_at(dirac_wgan(0.0), np.zeros(2))
    rep0 = hurwitz_check(J0)
    assert not rep0.is_hurwitz
    np.testing.assert_allclose(rep0.spectrum, [-1j, 1j], atol=1e-9)
    rep = hurwitz_check(jacobian_at(dirac_wgan(0.5), np.zeros(2)))
    assert rep.is_hurwitz
    np.testing.assert_allclose(rep.spectrum, [(-1 - 1j * np.sqrt(3)) / 2, (-1 + 1j * np.sqrt(3)) / 2], atol=1e-6)


def test_regularization_strictly_helps():
    maxre = [hurwitz_check(jacobian_at(dirac_wgan(lam), np.zeros(2))).max_real for lam in (0, 0.1, 0.5, 1.0)]
    assert all(b < a for a, b in zip(maxre, maxre[1:]))
    closed = [dirac_wgan_spectrum(lam).real.max() for lam in (0, 0.1, 0.5, 1.0)]
    np.testing.assert_allclose(maxre, closed, atol=1e-6)


@given(arrays(float, 2, elements=st.floats(-2, 2)), st.floats(0, 2), st.sampled_from(["gan", "wgan"]))
def test_dirac_field_matches_closed_form(theta, lam, kind):
    model = dirac_gan(lam, (0.7,), reg="pointwise") if kind == "gan" else dirac_wgan(lam, (0.7,))
    np.testing.assert_allclose(gradient_field(model, theta), model.analytic_field(theta), rtol=1e-10, atol=1e-12)


def test_field_zero_at_equilibrium():
    for model in (dirac_gan(0.5, (0.3, -0.2)), dirac_wgan(0.5, (0.0,))):
        assert np.all(np.abs(gradient_field(model, model.equilibrium())) <= 1e-12)


def test_linear_field_jacobian():
    A = np.random.default_rng(0).standard_normal((4, 4))
    np.testing.assert_allclose(jacobian_at(Linear(A), np.ones(4)), A, atol=1e-6)


@pytest.mark.parametrize("target", [(0.0,), (0.5,), (1.0, -0.5), (0.2, 0.3, -0.4)])
@pytest.mark.parametrize("lam", [0.0, 0.5, 2.0])
def test_block_identities_on_dirac_gan(target, lam):
    model = dirac_gan(lam, target)
    theta = model.equilibrium()
    assert np.linalg.norm(gradient_field(model, theta)) <= 1e-8
    J = jacobian_at(model, theta)
    ids = block_identities(J, model.n_u)
    assert ids["antisymmetry"] <= 1e-4
    assert ids["uu_norm"] <= 1e-4 * ids["jacobian_norm"]
    np.testing.assert_allclose(J, model.analytic_jacobian(theta), atol=1e-7)


def test_pointwise_bound_has_nonzero_uu_block():
    model = dirac_gan(0.5, (0.3,), reg="pointwise")
    J = jacobian_at(model, model.equilibrium())
    assert J[0, 0] == pytest.approx(-1.0, abs=1e-7)        # -2 lambda


def test_dirac_rejects_bad_state():
    with pytest.raises(ValueError):
        dirac_gan(0.1).split(np.zeros(3))


# --- trajectories ---------------------------------------------------------------------------

def test_equilibrium_is_fixed():
    model = dirac_wgan(0.5)
    tr = integrate_dynamics(model, model.equilibrium(), 0.01, 10_000, model.equilibrium())
    assert np.max(tr.distances) <= 1e-9


def test_rotation_keeps_radius():
    tr = integrate_dynamics(dirac_wgan(0.0), [1.0, 1.0], 0.01, 2000, np.zeros(2))
    sel = (tr.times >= 5) & (tr.times <= 20)
    r = tr.distances[sel]
    assert r.max() / r.min() - 1 <= 0.01


def test_regularized_decay_rate():
    model = dirac_wgan(0.5)
    tr = integrate_dynamics(model, [1.0, 1.0], 0.01, 2000, np.zeros(2))
    c = fit_decay_rate(tr.times, tr.distances, 5, 20)
    assert abs(c - 0.5) <= 0.2 * 0.5


def test_divergence_is_flagged():
    tr = integrate_dynamics(Linear(np.eye(2)), [1.0, 1.0], 0.1, 1000, ceiling=1e3)
    assert tr.divergent and len(tr.states) < 1001


def test_mlp_system_rejects_empty_batch():
    rng = np.random.default_rng(0)
    u, v = MlpNetwork.init([2, 3], rng), MlpNetwork.init([3, 1], rng, "tanh", "sigmoid")
    with pytest.raises(ValueError):
        GanSystem(u, v, np.zeros((0, 3)), np.zeros((0, 2)), LOGD)


def test_mlp_jacobian_antisymmetry_at_generic_point():
    """J_uv = -J_vu^T holds for any theta when F is smooth (mixed partials commute)."""
    rng = np.random.default_rng(1)
    u, v = MlpNetwork.init([2, 3, 3], rng), MlpNetwork.init([3, 3, 1], rng, "tanh", "sigmoid")
    x, h = rng.standard_normal((8, 3)), rng.standard_normal((8, 2))
    sys_ = GanSystem(u, v, x, h, LOGD, affinity_weights(x, 4.0).weights, lam=0.5)
    J = jacobian_at(sys_, sys_.state())
    assert block_identities(J, sys_.n_u)["antisymmetry"] <= 1e-6


# --- gap ------------------------------------------------------------------------------------

@pytest.fixture(scope="module")
def nets_and_pool():
    rng = np.random.default_rng(0)
    u = MlpNetwork.init([2, 16, 3], rng)
    v = MlpNetwork.init([3, 16, 1], rng, "tanh", "sigmoid")
    pool = sample_mixture(MixtureSpec(), 6400, np.random.default_rng(1)).samples
    return u, v, pool


def test_gap_zero_at_population(nets_and_pool):
    u, v, pool = nets_and_pool
    tab = objective_gap(u, v, pool, LOGD, m_values=[64], population_m=64, trials=3)
    assert tab.rows[0].mean == 0.0


def test_gap_trend_and_scaling(nets_and_pool):
    u, v, pool = nets_and_pool
    tab = objective_gap(u, v, pool, LOGD, m_values=[16, 64, 256], population_m=6400, trials=50, seed=3)
    assert tab.inversions <= 1
    assert tab.scaling_ratio <= 3.0
    assert tab.to_csv().splitlines()[0] == "m,mean_gap,std_gap,gap_sqrt_m"


def test_gap_validation(nets_and_pool):
    u, v, pool = nets_and_pool
    with pytest.raises(ValueError):
        objective_gap(u, v, pool[:100], LOGD, m_values=[16], population_m=200)


# --- mixtures and equilibrium ------------------------------------------------------------------

def test_single_target_linear_generator():
    g, err = fit_point_generator(np.zeros(3), hidden=(), iters=1500, seed=0)
    mix = build_uniform_mixture([np.zeros(3)], fit_iters=1500, hidden=(), eps_fit=0.01)
    assert np.linalg.norm(mix.sample(5000, np.random.default_rng(0)).mean(0)) <= 0.01
    assert err <= 0.05


def test_one_component_mixture_equals_component():
    mix = build_uniform_mixture([[1.0, 2.0]], fit_iters=50)
    out, comp = mix.sample(10, np.random.default_rng(4), return_components=True)
    assert np.all(comp == 0)
    rng = np.random.default_rng(4)
    rng.integers(0, 1, size=10)                  # the component draw
    np.testing.assert_array_equal(out, mix.components[0](rng.standard_normal((10, 2))))


def test_ring_mixture_occupancy():
    spec = MixtureSpec()
    mix = build_uniform_mixture(spec.centers(), fit_iters=20)
    _, comp = mix.sample(10_000, np.random.default_rng(0), return_components=True)
    assert np.all(np.abs(np.bincount(comp, minlength=8) / 10_000 - 1 / 8) <= 0.03)


def test_fit_report_flags_unconverged():
    mix = build_uniform_mixture([[5.0, 5.0]], fit_iters=1, eps_fit=1e-6)
    assert mix.fit_report()[0]["converged"] is False


@pytest.mark.parametrize("phi", [IDENT, LOGD])
def test_half_payoff_independent_of_mixture_when_lam_zero(phi):
    real = sample_mixture(MixtureSpec(), 2000, np.random.default_rng(0)).samples
    for targets in ([[0.0, 0.0, 0.0]], MixtureSpec().centers()):
        mix = build_uniform_mixture(targets, fit_iters=5)
        rep = verify_equilibrium(mix, real, phi, lam=0.0, adversary_budget=0, payoff_batches=5)
        assert rep.half_payoff == pytest.approx(phi.value_at_equilibrium, abs=1e-14)
        assert rep.lower_ok


def test_identity_value_is_one():
    assert IDENT.value_at_equilibrium == 1.0


def test_epsilon_must_be_positive():
    mix = build_uniform_mixture([[0.0, 0.0]], fit_iters=1)
    with pytest.raises(ValueError):
        verify_equilibrium(mix, np.zeros((10, 2)), IDENT, epsilon=0.0)


def test_regularizer_small_for_matching_mixture():
    spec = MixtureSpec(sigma=0.0)
    real = sample_mixture(spec, 4000, np.random.default_rng(0)).samples
    mix = build_uniform_mixture(spec.centers(), fit_iters=1000)
    rep = verify_equilibrium(mix, real, LOGD, lam=0.5, epsilon=0.1, adversary_budget=0, payoff_batches=20)
    assert 0.5 * rep.regularizer <= 0.05
