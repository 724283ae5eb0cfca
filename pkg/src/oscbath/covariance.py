"""Deterministic second-moment analysis of the collisional dynamics.

For the 1-D elastic model with exponential waiting times the mean and
covariance of the process obey closed linear ODEs:

    mean:        psi_dot = (A - lam*(1-alpha)*Gamma) psi
    covariance:  C_dot = A C + C A^T
                 - lam*(1-alpha) * (Gamma C + C Gamma - (1-alpha) Gamma C Gamma)
                 + lam*(1-alpha)^2 * M^2 * sigma2 * Gamma

where Gamma = g g^T selects the first momentum coordinate of the kicked
particle. The stationary point is beta^{-1} diag(V^{-1}, M I) with
beta = (1+alpha)/(M (1-alpha) sigma2), and F(C) = Tr(diag(V, I/M) C) is a
Lyapunov functional of the homogeneous equation with
dF/dt = -lam*(1-alpha^2)/M * C[g, g].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalAbort
from .network import OscillatorNetwork, PhaseState, generator_matrix

#: relative slack for the positive-semidefiniteness guard during integration
PSD_GUARD_TOL = 1e-8


@dataclass(frozen=True)
class MomentParams:
    """Rate/contraction/noise parameters of the kicked-momentum moment ODEs.

    ``lam`` is the exponential collision rate (0 selects the collision-free
    reduction), ``alpha`` = (M-m)/(M+m) strictly inside (0, 1), ``sigma2``
    the external-velocity variance (0 gives the homogeneous covariance
    equation), and ``mass`` the particle mass M.
    """

    lam: float
    alpha: float
    sigma2: float
    mass: float = 1.0

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("collision rate must be nonnegative")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie strictly in (0, 1)")
        if self.sigma2 < 0:
            raise ValueError("sigma2 must be nonnegative")
        if not self.mass > 0:
            raise ValueError("mass must be positive")


def beta_from_params(params: MomentParams) -> float:
    """Inverse temperature beta = (1+alpha) / (M (1-alpha) sigma2)."""
    if params.sigma2 == 0:
        raise ValueError("beta is undefined for zero noise variance")
    return (1.0 + params.alpha) / (
        params.mass * (1.0 - params.alpha) * params.sigma2
    )


def kicked_index(dof: int) -> int:
    """0-based position of p_{1,1} in the (q, p) phase vector: index dof."""
    return dof


def gamma_matrix(dof: int) -> np.ndarray:
    """Rank-one selector Gamma = g g^T for the kicked momentum coordinate."""
    g = np.zeros((2 * dof, 2 * dof))
    k = kicked_index(dof)
    g[k, k] = 1.0
    return g


def gibbs_covariance(net: OscillatorNetwork, beta: float) -> np.ndarray:
    """Stationary covariance beta^{-1} diag(V^{-1}, M I) (symmetric PD)."""
    if not beta > 0:
        raise ValueError("beta must be positive")
    q = net.spectrum.eigenvectors
    v_inv = (q / net.spectrum.eigenvalues) @ q.T
    dof = net.dof
    c = np.zeros((2 * dof, 2 * dof))
    c[:dof, :dof] = v_inv / beta
    c[dof:, dof:] = (net.mass / beta) * np.eye(dof)
    return c


def _rhs(c, a_mat, dof, params, include_source):
    k = kicked_index(dof)
    rhs = a_mat @ c + c @ a_mat.T
    if params.lam > 0:
        damp = np.zeros_like(c)
        damp[k, :] += c[k, :]
        damp[:, k] += c[:, k]
        damp[k, k] -= (1.0 - params.alpha) * c[k, k]
        rhs -= params.lam * (1.0 - params.alpha) * damp
        if include_source:
            rhs[k, k] += (
                params.lam
                * (1.0 - params.alpha) ** 2
                * params.mass**2
                * params.sigma2
            )
    return 0.5 * (rhs + rhs.T)


def covariance_rhs(
    c: np.ndarray,
    net: OscillatorNetwork,
    params: MomentParams,
    include_source: bool = True,
) -> np.ndarray:
    """Right-hand side of the covariance ODE, symmetrized.

    With ``include_source=False`` this is the homogeneous operator L(C)
    whose flow drives any PSD matrix to zero when the stiffness is complete.
    """
    c = np.asarray(c, dtype=float)
    dof = net.dof
    if c.shape != (2 * dof, 2 * dof):
        raise ValueError(f"covariance must be ({2 * dof}, {2 * dof}), got {c.shape}")
    return _rhs(c, generator_matrix(net), dof, params, include_source)


def default_dt(net: OscillatorNetwork, params: MomentParams) -> float:
    """Step heuristic min(1e-2, 0.1/(lam + omega_max)) for the moment ODEs."""
    omega_max = float(net.mode_frequencies[-1])
    return min(1e-2, 0.1 / (params.lam + omega_max))


@dataclass(frozen=True, eq=False)
class CovarianceTrajectory:
    """Sampled solution C(t) of the covariance ODE."""

    times: np.ndarray
    matrices: np.ndarray

    @property
    def final(self) -> np.ndarray:
        return self.matrices[-1]


def integrate_covariance(
    c0: np.ndarray,
    net: OscillatorNetwork,
    params: MomentParams,
    t_end: float,
    dt: float | None = None,
    include_source: bool = True,
    sample_every: int | None = None,
) -> CovarianceTrajectory:
    """Classical RK4 on the matrix ODE, re-symmetrized every step.

    The iterate is required to stay PSD up to roundoff; a violation beyond
    the guard tolerance aborts with the offending time stamp. Samples are
    kept every ``sample_every`` steps (auto-chosen to ~1000 samples when
    None) plus the final state.
    """
    dof = net.dof
    c = 0.5 * (np.asarray(c0, dtype=float) + np.asarray(c0, dtype=float).T)
    if c.shape != (2 * dof, 2 * dof):
        raise ValueError(f"covariance must be ({2 * dof}, {2 * dof}), got {c.shape}")
    if dt is None:
        dt = default_dt(net, params)
    if not dt > 0:
        raise ValueError("dt must be positive")
    n_steps = max(1, int(np.ceil(t_end / dt - 1e-12)))
    dt = t_end / n_steps
    if sample_every is None:
        sample_every = max(1, n_steps // 1000)
    a_mat = generator_matrix(net)
    times = [0.0]
    samples = [c.copy()]
    scale_floor = params.lam * (1.0 - params.alpha) ** 2 * params.mass**2 * params.sigma2
    for step in range(1, n_steps + 1):
        k1 = _rhs(c, a_mat, dof, params, include_source)
        k2 = _rhs(c + 0.5 * dt * k1, a_mat, dof, params, include_source)
        k3 = _rhs(c + 0.5 * dt * k2, a_mat, dof, params, include_source)
        k4 = _rhs(c + dt * k3, a_mat, dof, params, include_source)
        c = c + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        c = 0.5 * (c + c.T)
        t = step * dt
        scale = max(float(np.abs(c).max()), scale_floor, 1e-300)
        min_eig = float(np.linalg.eigvalsh(c)[0])
        if min_eig < -PSD_GUARD_TOL * scale:
            raise NumericalAbort(
                f"covariance lost positive semidefiniteness at t={t:.6g} "
                f"(min eigenvalue {min_eig:.3e})"
            )
        if step % sample_every == 0 or step == n_steps:
            times.append(t)
            samples.append(c.copy())
    return CovarianceTrajectory(times=np.array(times), matrices=np.array(samples))


def lyapunov_functional(c: np.ndarray, net: OscillatorNetwork) -> float:
    """F(C) = Tr(diag(V, I/M) C), the beta-free Lyapunov functional."""
    c = np.asarray(c, dtype=float)
    dof = net.dof
    qq = c[:dof, :dof]
    pp = c[dof:, dof:]
    return float(np.trace(net.stiffness @ qq) + np.trace(pp) / net.mass)


def lyapunov_rate(c: np.ndarray, net: OscillatorNetwork, params: MomentParams) -> float:
    """Analytic dF/dt along the homogeneous flow: -lam (1-alpha^2)/M * C[g, g]."""
    k = kicked_index(net.dof)
    return (
        -params.lam
        * (1.0 - params.alpha**2)
        / params.mass
        * float(np.asarray(c)[k, k])
    )


def damped_generator(net: OscillatorNetwork, params: MomentParams) -> np.ndarray:
    """Mean-dynamics generator A - lam*(1-alpha)*Gamma."""
    a = generator_matrix(net)
    k = kicked_index(net.dof)
    a[k, k] -= params.lam * (1.0 - params.alpha)
    return a


@dataclass(frozen=True, eq=False)
class MeanTrajectory:
    """Sampled mean dynamics (Q(t), P(t))."""

    times: np.ndarray
    states: np.ndarray

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def mean_dynamics(
    net: OscillatorNetwork,
    params: MomentParams,
    psi0: PhaseState,
    t_end: float,
    dt: float | None = None,
    sample_every: int = 1,
) -> MeanTrajectory:
    """RK4 integration of the damped linear mean equations.

    With lam = 0 this reproduces the exact flow up to RK4 error; with a
    complete stiffness matrix and lam*(1-alpha) > 0 the mean decays to zero.
    """
    if psi0.q.shape[0] != net.dof:
        raise ValueError("initial state does not match the network")
    if dt is None:
        dt = default_dt(net, params)
    if not dt > 0:
        raise ValueError("dt must be positive")
    a_d = damped_generator(net, params)
    n_steps = max(1, int(np.ceil(t_end / dt - 1e-12)))
    dt = t_end / n_steps
    x = psi0.vector
    times = [0.0]
    states = [x.copy()]
    for step in range(1, n_steps + 1):
        k1 = a_d @ x
        k2 = a_d @ (x + 0.5 * dt * k1)
        k3 = a_d @ (x + 0.5 * dt * k2)
        k4 = a_d @ (x + dt * k3)
        x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if step % sample_every == 0 or step == n_steps:
            times.append(step * dt)
            states.append(x.copy())
    return MeanTrajectory(times=np.array(times), states=np.array(states))


def energy_norm(net: OscillatorNetwork, vec: np.ndarray) -> float:
    """sqrt(2 H) of a phase vector: the flow-invariant metric on states."""
    v = np.asarray(vec, dtype=float).ravel()
    dof = net.dof
    q, p = v[:dof], v[dof:]
    return float(np.sqrt(p @ p / net.mass + q @ (net.stiffness @ q)))


def lyapunov_to_csv(
    traj: CovarianceTrajectory, net: OscillatorNetwork, path
) -> None:
    """Write `t,F,C_q11,C_p11` rows at full double precision."""
    dof = net.dof
    f_vals = np.array([lyapunov_functional(c, net) for c in traj.matrices])
    q11 = traj.matrices[:, 0, 0]
    p11 = traj.matrices[:, dof, dof]
    data = np.column_stack([traj.times, f_vals, q11, p11])
    np.savetxt(
        path, data, fmt="%.17g", delimiter=",", header="t,F,C_q11,C_p11", comments=""
    )
