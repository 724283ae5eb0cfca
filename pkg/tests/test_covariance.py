import numpy as np
import pytest

from _ensembles import random_complete_network, random_moment_params
from oscbath.covariance import (
    MomentParams,
    beta_from_params,
    covariance_rhs,
    damped_generator,
    default_dt,
    energy_norm,
    gamma_matrix,
    gibbs_covariance,
    integrate_covariance,
    kicked_index,
    lyapunov_functional,
    lyapunov_rate,
    lyapunov_to_csv,
    mean_dynamics,
)
from oscbath.dissipative import neutral_subspace_basis
from oscbath.errors import NumericalAbort
from oscbath.laws import Exponential, GaussianVelocity
from oscbath.collisions import OneDimElastic
from oscbath.network import (
    OscillatorNetwork,
    PhaseState,
    chain_stiffness,
    generator_matrix,
    propagate,
)
from oscbath.pdmp import EventSchedule, simulate_continuous


def chain3_net():
    return OscillatorNetwork(3, 1, 1.0, chain_stiffness(3))


STANDARD = MomentParams(lam=1.0, alpha=1.0 / 3.0, sigma2=1.0, mass=1.0)


# --- beta ---------------------------------------------------------------------


def test_beta_alpha_to_zero_limit():
    params = MomentParams(lam=1.0, alpha=1e-9, sigma2=1.0, mass=1.0)
    assert beta_from_params(params) == pytest.approx(1.0, abs=1e-8)


def test_beta_equals_inverse_external_mass_times_sigma2():
    # with M=1, m=1/2: alpha=1/3 and beta = 2 = 1/(m sigma2)
    beta = beta_from_params(STANDARD)
    assert beta == pytest.approx(2.0)
    assert beta == pytest.approx(1.0 / (0.5 * 1.0))


def test_beta_general_mass():
    params = MomentParams(lam=1.0, alpha=1.0 / 3.0, sigma2=0.5, mass=2.0)
    assert beta_from_params(params) == pytest.approx(2.0)


def test_beta_rejects_zero_noise():
    with pytest.raises(ValueError):
        beta_from_params(MomentParams(lam=1.0, alpha=0.5, sigma2=0.0, mass=1.0))


def test_moment_params_validation():
    with pytest.raises(ValueError):
        MomentParams(lam=-1.0, alpha=0.5, sigma2=1.0)
    with pytest.raises(ValueError):
        MomentParams(lam=1.0, alpha=1.0, sigma2=1.0)
    with pytest.raises(ValueError):
        MomentParams(lam=1.0, alpha=0.5, sigma2=1.0, mass=0.0)


# --- Gibbs covariance ------------------------------------------------------------


def test_gibbs_covariance_identity_stiffness():
    net = OscillatorNetwork(2, 1, 1.0, np.eye(2))
    assert np.allclose(gibbs_covariance(net, 1.0), np.eye(4), atol=1e-14)


def test_gibbs_covariance_diagonal_example():
    net = OscillatorNetwork(2, 1, 1.0, np.diag([1.0, 4.0]))
    c = gibbs_covariance(net, 2.0)
    assert np.allclose(c, np.diag([0.5, 0.125, 0.5, 0.5]), atol=1e-14)


def test_gibbs_covariance_position_block_inverts_stiffness():
    net = random_complete_network(3)
    beta = 1.7
    c = gibbs_covariance(net, beta)
    dof = net.dof
    assert np.allclose(c[:dof, :dof] @ net.stiffness, np.eye(dof) / beta, atol=1e-12)


# --- covariance ODE ---------------------------------------------------------------


def test_rhs_vanishes_at_gibbs_fixed_point():
    net = chain3_net()
    beta = beta_from_params(STANDARD)
    target = gibbs_covariance(net, beta)
    residual = np.abs(covariance_rhs(target, net, STANDARD)).max()
    assert residual <= 1e-12 * STANDARD.lam * STANDARD.mass**2 * STANDARD.sigma2


def test_rhs_fixed_point_random_ensemble():
    for seed in range(5):
        net = random_complete_network(seed)
        params = random_moment_params(100 + seed, net.mass)
        target = gibbs_covariance(net, beta_from_params(params))
        residual = np.abs(covariance_rhs(target, net, params)).max()
        assert residual <= 1e-12 * params.lam * params.mass**2 * params.sigma2


def test_rhs_without_collisions_is_lyapunov_bracket():
    net = chain3_net()
    params = MomentParams(lam=0.0, alpha=0.5, sigma2=1.0, mass=1.0)
    rng = np.random.default_rng(0)
    c = rng.standard_normal((6, 6))
    c = c @ c.T
    a = generator_matrix(net)
    assert np.allclose(covariance_rhs(c, net, params), a @ c + c @ a.T, atol=1e-12)


def test_rhs_at_zero_is_pure_source():
    net = chain3_net()
    rhs = covariance_rhs(np.zeros((6, 6)), net, STANDARD)
    expected = STANDARD.lam * (1 - STANDARD.alpha) ** 2 * STANDARD.sigma2
    k = kicked_index(3)
    assert rhs[k, k] == pytest.approx(expected)
    rhs[k, k] = 0.0
    assert np.abs(rhs).max() == 0.0


def test_gamma_matrix_selector():
    g = gamma_matrix(3)
    assert g[3, 3] == 1.0
    assert np.sum(g) == 1.0


def test_integrate_holds_fixed_point():
    net = chain3_net()
    target = gibbs_covariance(net, beta_from_params(STANDARD))
    traj = integrate_covariance(target, net, STANDARD, t_end=10.0)
    assert np.abs(traj.final - target).max() < 1e-9


def test_integrate_converges_from_zero():
    net = chain3_net()
    target = gibbs_covariance(net, beta_from_params(STANDARD))
    traj = integrate_covariance(np.zeros((6, 6)), net, STANDARD, t_end=150.0)
    assert np.abs(traj.final - target).max() <= 1e-6


def test_homogeneous_equation_decays_to_zero():
    net = chain3_net()
    rng = np.random.default_rng(4)
    g = rng.standard_normal((6, 6))
    c0 = g @ g.T
    traj = integrate_covariance(c0, net, STANDARD, t_end=150.0, include_source=False)
    assert np.abs(traj.final).max() <= 1e-6 * np.abs(c0).max()


def test_integrate_aborts_on_indefinite_start():
    net = chain3_net()
    with pytest.raises(NumericalAbort, match="t="):
        integrate_covariance(-np.eye(6), net, STANDARD, t_end=1.0)


# --- Lyapunov functional -----------------------------------------------------------


def test_lyapunov_of_gibbs_matrix_counts_degrees():
    net = chain3_net()
    c_g = gibbs_covariance(net, 1.0)  # beta-free normalization
    assert lyapunov_functional(c_g, net) == pytest.approx(2 * net.dof)
    assert lyapunov_functional(np.zeros((6, 6)), net) == 0.0


def test_lyapunov_rate_identity():
    # Tr(C_G^{-1} L(C)) collapses to the single kicked entry, exactly
    net = random_complete_network(9)
    params = random_moment_params(9, net.mass)
    rng = np.random.default_rng(2)
    dof = net.dof
    g = rng.standard_normal((2 * dof, 2 * dof))
    c = g @ g.T
    lhs = lyapunov_functional(covariance_rhs(c, net, params, include_source=False), net)
    rhs = lyapunov_rate(c, net, params)
    assert lhs == pytest.approx(rhs, rel=1e-10)


def test_lyapunov_constant_without_collisions():
    # lam = 0 removes the only dissipative term, so F is a flow invariant
    net = chain3_net()
    params = MomentParams(lam=0.0, alpha=0.5, sigma2=1.0, mass=1.0)
    c0 = gibbs_covariance(net, 2.0)
    traj = integrate_covariance(c0, net, params, t_end=20.0, sample_every=20)
    f = np.array([lyapunov_functional(c, net) for c in traj.matrices])
    assert np.abs(f - f[0]).max() <= 1e-9 * abs(f[0])


def test_lyapunov_decreases_along_homogeneous_flow():
    net = chain3_net()
    rng = np.random.default_rng(7)
    g = rng.standard_normal((6, 6))
    c0 = g @ g.T
    traj = integrate_covariance(
        c0, net, STANDARD, t_end=40.0, include_source=False, sample_every=5
    )
    f = [lyapunov_functional(c, net) for c in traj.matrices]
    assert max(np.diff(f)) <= 1e-10


def test_lyapunov_finite_difference_matches_rate():
    net = chain3_net()
    target = gibbs_covariance(net, 2.0)
    rate0 = lyapunov_rate(target, net, STANDARD)
    errs = []
    for dt in (1e-2, 5e-3):
        traj = integrate_covariance(
            target, net, STANDARD, t_end=dt, dt=dt, include_source=False
        )
        fd = (
            lyapunov_functional(traj.final, net)
            - lyapunov_functional(target, net)
        ) / dt
        errs.append(abs(fd - rate0))
    assert errs[0] < 0.05 * abs(rate0)
    assert errs[1] < 0.6 * errs[0]  # shrinks with dt


def test_lyapunov_csv_export(tmp_path):
    net = chain3_net()
    traj = integrate_covariance(
        gibbs_covariance(net, 2.0), net, STANDARD, t_end=1.0, include_source=False
    )
    path = tmp_path / "lyapunov.csv"
    lyapunov_to_csv(traj, net, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,F,C_q11,C_p11"
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    assert data.shape[1] == 4
    assert data[0, 1] == pytest.approx(lyapunov_functional(traj.matrices[0], net))


# --- mean dynamics -----------------------------------------------------------------


def test_mean_dynamics_without_damping_matches_exact_flow():
    net = chain3_net()
    params = MomentParams(lam=0.0, alpha=0.5, sigma2=1.0, mass=1.0)
    psi0 = PhaseState(q=[1.0, -0.3, 0.2], p=[0.0, 0.4, -0.1])
    traj = mean_dynamics(net, params, psi0, t_end=10.0, dt=1e-3, sample_every=1000)
    for t, state in zip(traj.times, traj.states):
        exact = propagate(net, psi0, float(t)).vector
        assert np.abs(state - exact).max() <= 1e-8


def test_mean_decay_for_complete_network():
    net = chain3_net()
    psi0 = PhaseState(q=[1.0, 1.0, 1.0], p=[1.0, 1.0, 1.0])
    traj = mean_dynamics(net, STANDARD, psi0, t_end=200.0)
    ratio = energy_norm(net, traj.final) / energy_norm(net, psi0.vector)
    assert ratio <= 1e-3


def test_mean_on_neutral_subspace_does_not_decay():
    # diag stiffness is incomplete from site 0; a neutral-subspace start
    # feels no damping, so its energy norm is conserved
    net = OscillatorNetwork(2, 1, 1.0, np.diag([1.0, 4.0]))
    basis = neutral_subspace_basis(net.stiffness, [0])
    vec = basis @ np.array([0.8, -0.6])
    psi0 = PhaseState(q=vec[:2], p=vec[2:])
    traj = mean_dynamics(net, STANDARD, psi0, t_end=200.0, dt=1e-2)
    n0 = energy_norm(net, psi0.vector)
    ratios = np.array([energy_norm(net, s) / n0 for s in traj.states])
    assert np.abs(ratios - 1.0).max() <= 1e-6


def test_damped_generator_layout():
    net = chain3_net()
    a_d = damped_generator(net, STANDARD)
    a = generator_matrix(net)
    diff = a - a_d
    assert diff[3, 3] == pytest.approx(STANDARD.lam * (1 - STANDARD.alpha))
    diff[3, 3] = 0.0
    assert np.abs(diff).max() == 0.0


def test_mean_decay_rate_matches_damped_spectrum():
    # independent oracle: the decay exponent fitted from |psi(t)|_H agrees
    # with the spectral abscissa of the damped generator
    net = chain3_net()
    a_d = damped_generator(net, STANDARD)
    slowest = np.max(np.linalg.eigvals(a_d).real)
    assert slowest < 0
    psi0 = PhaseState(q=[1.0, 1.0, 1.0], p=[1.0, 1.0, 1.0])
    traj = mean_dynamics(net, STANDARD, psi0, t_end=400.0, sample_every=100)
    norms = np.array([energy_norm(net, s) for s in traj.states])
    window = traj.times >= 100.0
    fit = np.polyfit(traj.times[window], np.log(norms[window]), 1)[0]
    assert fit == pytest.approx(slowest, rel=0.05)


# --- Monte Carlo consistency ---------------------------------------------------------


def test_ode_matches_ensemble_covariance():
    # ensemble second moments of the simulator follow the covariance ODE
    net = chain3_net()
    model = OneDimElastic(external_mass=0.5, velocity_law=GaussianVelocity(1.0))
    sched = EventSchedule(tau_law=Exponential(rate=1.0))
    psi0 = PhaseState.zero(3)
    n_runs = 400
    t_end, sample_dt = 20.0, 5.0
    states = np.stack(
        [
            simulate_continuous(net, model, sched, psi0, t_end, sample_dt, seed).states
            for seed in range(n_runs)
        ]
    )  # (runs, times, 6)
    ode = integrate_covariance(np.zeros((6, 6)), net, STANDARD, t_end=t_end, dt=5e-3)
    for j, t in enumerate([5.0, 10.0, 20.0]):
        k_traj = int(t / sample_dt)
        x = states[:, k_traj, :]
        second = np.einsum("ni,nj->nij", x, x)
        emp = second.mean(axis=0)
        se = second.std(axis=0, ddof=1) / np.sqrt(n_runs)
        k_ode = int(np.argmin(np.abs(ode.times - t)))
        assert np.allclose(ode.times[k_ode], t, atol=1e-6)
        gap = np.abs(emp - ode.matrices[k_ode])
        assert np.all(gap <= 5.0 * se + 1e-12)


def test_default_dt_heuristic():
    net = chain3_net()
    dt = default_dt(net, STANDARD)
    assert dt == pytest.approx(min(1e-2, 0.1 / (1.0 + net.mode_frequencies[-1])))
