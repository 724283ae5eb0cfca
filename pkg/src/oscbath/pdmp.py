"""Piecewise-deterministic dynamics: exact free flow punctuated by jumps.

Between random collision times the state follows the exact Hamiltonian flow
(no integrator error); at a collision only the particle-1 momentum block
changes, via the collision model's jump map. Trajectories are
right-continuous: a sample taken exactly at a jump time sees the post-jump
state.

The stepping engine works in the eigenbasis of the stiffness matrix, where
the flow is a family of independent mode rotations; states are transformed
back to physical coordinates only when stored.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .collisions import CollisionModel, OneDimElastic, TwoDimBall, model_dim
from .errors import NumericalAbort
from .network import OscillatorNetwork, PhaseState, energy, propagate

#: numerical-rank threshold for the controllability probe
RANK_SV_THRESHOLD = 1e-6


@dataclass(frozen=True)
class EventSchedule:
    """Waiting-time law plus (optionally) an override collision-input law.

    ``tau_law`` must expose ``sample(rng, size=None)`` and a finite ``mean``
    (checked at construction). ``xi_law`` is any object with ``sample(rng)``
    returning a collision input matching the model; ``None`` means "use the
    model's own input law".
    """

    tau_law: object
    xi_law: object | None = None

    def __post_init__(self):
        mean = getattr(self.tau_law, "mean", None)
        if mean is None or not np.isfinite(mean) or mean <= 0:
            raise ValueError("waiting-time law must have a finite positive mean")


@dataclass(frozen=True, eq=False)
class EmbeddedChain:
    """States observed immediately after each collision.

    ``states`` has shape (n_steps + 1, 2*dof) with row 0 the initial state;
    ``jump_times`` are the partial sums of the waiting times.
    """

    states: np.ndarray
    jump_times: np.ndarray
    seed: int

    def __post_init__(self):
        if self.states.shape[0] != self.jump_times.shape[0] + 1:
            raise ValueError("need exactly one state per jump plus the start")
        if np.any(np.diff(self.jump_times) < 0):
            raise ValueError("jump times must be nondecreasing")

    def state(self, m: int) -> PhaseState:
        return PhaseState.from_vector(self.states[m])


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Uniform-grid samples of the continuous-time process."""

    times: np.ndarray
    states: np.ndarray
    events: int
    seed: int

    def __post_init__(self):
        if self.times.shape[0] != self.states.shape[0]:
            raise ValueError("one state row per sample time required")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("sample times must be strictly ascending")

    @property
    def dof(self) -> int:
        return self.states.shape[1] // 2

    def state(self, k: int) -> PhaseState:
        return PhaseState.from_vector(self.states[k])

    def phase_states(self):
        for row in self.states:
            yield PhaseState.from_vector(row)


class _EigenEngine:
    """Mode-space stepping: rotation per mode, rank-d update per jump."""

    def __init__(self, net: OscillatorNetwork, model: CollisionModel):
        d = model_dim(model)
        if d != net.dim:
            raise ValueError(
                f"model acts in dimension {d} but the network has d={net.dim}"
            )
        self.modes = net.spectrum.eigenvectors
        self.omega = net.mode_frequencies
        self.momega = net.mass * self.omega
        self.mass = net.mass
        self.contact_rows = self.modes[:d, :]  # particle-1 momentum rows
        self.model = model

    def eigen_coords(self, psi: PhaseState):
        return self.modes.T @ psi.q, self.modes.T @ psi.p

    def flow(self, qh, ph, t: float):
        wt = self.omega * t
        c = np.cos(wt)
        s = np.sin(wt)
        return c * qh + s * (ph / self.momega), c * ph - s * (self.momega * qh)

    def flow_batch(self, qh, ph, dts):
        wt = np.multiply.outer(dts, self.omega)
        c = np.cos(wt)
        s = np.sin(wt)
        return c * qh + s * (ph / self.momega), c * ph - s * (self.momega * qh)

    def kick(self, ph, xi):
        p1 = self.contact_rows @ ph
        p1_new = self.model.jump(xi, p1, self.mass)
        return ph + self.contact_rows.T @ (p1_new - p1)


def _input_sampler(model: CollisionModel, sched: EventSchedule):
    if sched.xi_law is not None:
        return sched.xi_law.sample
    return model.sample_input


def simulate_embedded(
    net: OscillatorNetwork,
    model: CollisionModel,
    sched: EventSchedule,
    psi0: PhaseState,
    n_steps: int,
    seed: int,
) -> EmbeddedChain:
    """Run the post-collision chain psi_m = J(xi_m; e^{tau_m A} psi_{m-1}).

    Reproducible per seed: one waiting-time draw then one input draw per
    step. Aborts with the step index if the state overflows.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    engine = _EigenEngine(net, model)
    draw_xi = _input_sampler(model, sched)
    rng = np.random.default_rng(seed)
    qh, ph = engine.eigen_coords(psi0)
    dof = net.dof
    states = np.empty((n_steps + 1, 2 * dof))
    jump_times = np.empty(n_steps)
    states[0, :dof] = qh
    states[0, dof:] = ph
    t = 0.0
    for m in range(1, n_steps + 1):
        tau = float(sched.tau_law.sample(rng))
        qh, ph = engine.flow(qh, ph, tau)
        ph = engine.kick(ph, draw_xi(rng))
        if not np.all(np.isfinite(ph)) or not np.all(np.isfinite(qh)):
            raise NumericalAbort(f"non-finite state at step {m}")
        t += tau
        jump_times[m - 1] = t
        states[m, :dof] = qh
        states[m, dof:] = ph
    # one transform back to physical coordinates for the whole chain
    states[:, :dof] = states[:, :dof] @ engine.modes.T
    states[:, dof:] = states[:, dof:] @ engine.modes.T
    return EmbeddedChain(states=states, jump_times=jump_times, seed=seed)


def simulate_continuous(
    net: OscillatorNetwork,
    model: CollisionModel,
    sched: EventSchedule,
    psi0: PhaseState,
    t_end: float,
    sample_dt: float,
    seed: int,
) -> Trajectory:
    """Sample the process on the grid k*sample_dt, k = 0..floor(t_end/dt).

    Grid states are computed by exact flow from the most recent post-jump
    state; a grid point coinciding with a jump time reports the post-jump
    state (right continuity). ``events`` counts collisions in [0, t_end].
    """
    if not 0 < sample_dt <= t_end:
        raise ValueError("need 0 < sample_dt <= t_end")
    engine = _EigenEngine(net, model)
    draw_xi = _input_sampler(model, sched)
    rng = np.random.default_rng(seed)
    qh, ph = engine.eigen_coords(psi0)
    dof = net.dof
    n_samples = int(np.floor(t_end / sample_dt + 1e-12)) + 1
    times = np.arange(n_samples) * sample_dt
    qh_s = np.empty((n_samples, dof))
    ph_s = np.empty((n_samples, dof))
    t_cur = 0.0
    idx = 0
    events = 0
    while True:
        tau = float(sched.tau_law.sample(rng))
        t_next = t_cur + tau
        hi = int(np.searchsorted(times, t_next, side="left"))
        if hi > idx:
            qh_s[idx:hi], ph_s[idx:hi] = engine.flow_batch(
                qh, ph, times[idx:hi] - t_cur
            )
            idx = hi
        if t_next > t_end:
            break
        qh, ph = engine.flow(qh, ph, tau)
        ph = engine.kick(ph, draw_xi(rng))
        events += 1
        if not np.all(np.isfinite(ph)) or not np.all(np.isfinite(qh)):
            raise NumericalAbort(
                f"non-finite state after event {events} at t={t_next:.6g}"
            )
        t_cur = t_next
    if idx < n_samples:  # grid points rounding a hair past t_end
        qh_s[idx:], ph_s[idx:] = engine.flow_batch(qh, ph, times[idx:] - t_cur)
    states = np.empty((n_samples, 2 * dof))
    states[:, :dof] = qh_s @ engine.modes.T
    states[:, dof:] = ph_s @ engine.modes.T
    return Trajectory(times=times, states=states, events=events, seed=seed)


def time_average(traj: Trajectory, f, burn_in: float = 0.0) -> float:
    """Trapezoidal time average of an observable after a burn-in.

    ``f`` maps a PhaseState to a float. The window is all samples with
    t >= burn_in; it must contain at least two samples.
    """
    mask = traj.times >= burn_in
    if int(mask.sum()) < 2:
        raise ValueError("averaging window is empty (burn_in too late)")
    t = traj.times[mask]
    rows = traj.states[mask]
    vals = np.array([f(PhaseState.from_vector(row)) for row in rows])
    return float(np.trapezoid(vals, t) / (t[-1] - t[0]))


def empirical_covariance(traj: Trajectory, burn_in: float = 0.0):
    """Sample mean and covariance of the phase vector after burn-in.

    Returns (mean, cov, n) where cov uses the 1/n normalization; the
    accumulated sums merge associatively across trajectories.
    """
    mask = traj.times >= burn_in
    n = int(mask.sum())
    if n < 2:
        raise ValueError("averaging window is empty (burn_in too late)")
    x = traj.states[mask]
    mean = x.mean(axis=0)
    cov = (x.T @ x) / n - np.outer(mean, mean)
    return mean, cov, n


@dataclass(frozen=True)
class DriftEstimate:
    """Monte Carlo estimate of the one-step mean energy change."""

    energy_before: float
    mean_change: float
    std_error: float

    @property
    def relative_change(self) -> float:
        return self.mean_change / self.energy_before


def drift_estimate(
    net: OscillatorNetwork,
    model: CollisionModel,
    sched: EventSchedule,
    psi: PhaseState,
    n_mc: int = 10_000,
    seed: int = 0,
) -> DriftEstimate:
    """Estimate E{H(psi_1) | psi_0 = psi} - H(psi) over n_mc (tau, xi) draws.

    Energies after the jump are evaluated from scratch (not through the
    energy-bookkeeping identity), so this is an independent check of the
    one-step energy drift.
    """
    engine = _EigenEngine(net, model)
    draw_xi = _input_sampler(model, sched)
    rng = np.random.default_rng(seed)
    h0 = energy(net, psi)
    qh, ph = engine.eigen_coords(psi)
    taus = np.asarray(sched.tau_law.sample(rng, size=n_mc), dtype=float)
    qh_t, ph_t = engine.flow_batch(qh, ph, taus)
    # potential term is basis-independent: q^T V q = sum lambda_k qh_k^2
    lam = net.spectrum.eigenvalues
    h_after = np.empty(n_mc)
    for k in range(n_mc):
        ph_k = engine.kick(ph_t[k], draw_xi(rng))
        h_after[k] = 0.5 * float(lam @ (qh_t[k] ** 2)) + float(
            ph_k @ ph_k
        ) / (2.0 * net.mass)
    change = h_after - h0
    return DriftEstimate(
        energy_before=h0,
        mean_change=float(change.mean()),
        std_error=float(change.std(ddof=1) / np.sqrt(n_mc)),
    )


def _composed_reachability_map(net, model, psi0, m, point):
    """(t_1, u_1, ..., t_m, u_m) -> state after m flow-and-jump legs."""
    l = model.xi_dim
    coords = np.asarray(point, dtype=float).ravel()
    if coords.size != m * (1 + l):
        raise ValueError(
            f"point must have m*(1+l) = {m * (1 + l)} coordinates, got {coords.size}"
        )
    state = psi0
    d = model_dim(model)
    for k in range(m):
        t_k = coords[k * (1 + l)]
        u_k = coords[k * (1 + l) + 1 : (k + 1) * (1 + l)]
        state = propagate(net, state, t_k)
        p = state.p.copy()
        p[:d] = model.jump(u_k, p[:d], net.mass)
        state = PhaseState(q=state.q, p=p)
    return state.vector


def jacobian_rank_probe(
    net: OscillatorNetwork,
    model: CollisionModel,
    psi0: PhaseState,
    m: int,
    point,
    h: float = 1e-5,
    central: bool = False,
) -> int:
    """Numerical rank of the m-leg reachability map at the given point.

    The map composes m segments of (free flow for t_k, jump with input u_k)
    and is differentiated by finite differences with per-coordinate step
    h*(1 + |x_i|) (one-sided by default). Rank counts singular values above
    1e-6 times the largest. m = 0 is the constant map with rank 0; the rank
    never exceeds min(m*(1+l), 2dN) by construction.
    """
    if not isinstance(model, (OneDimElastic, TwoDimBall)):
        raise ValueError("rank probe supports the finite-input elastic models only")
    if m < 0:
        raise ValueError("m must be nonnegative")
    if not h > 0:
        raise ValueError("step h must be positive")
    if m == 0:
        return 0
    coords = np.asarray(point, dtype=float).ravel()
    base = _composed_reachability_map(net, model, psi0, m, coords)
    n_in = coords.size
    jac = np.empty((base.size, n_in))
    for i in range(n_in):
        step = h * (1.0 + abs(coords[i]))
        bumped = coords.copy()
        bumped[i] += step
        forward = _composed_reachability_map(net, model, psi0, m, bumped)
        if central:
            bumped[i] = coords[i] - step
            backward = _composed_reachability_map(net, model, psi0, m, bumped)
            jac[:, i] = (forward - backward) / (2.0 * step)
        else:
            jac[:, i] = (forward - base) / step
    sv = np.linalg.svd(jac, compute_uv=False)
    if sv.size == 0 or sv[0] == 0.0:
        return 0
    return int(np.sum(sv > RANK_SV_THRESHOLD * sv[0]))


def trajectory_to_csv(traj: Trajectory, path) -> None:
    """Write `t,q_1..q_dN,p_1..p_dN` rows at full double precision."""
    dof = traj.dof
    header = ",".join(
        ["t"]
        + [f"q_{i + 1}" for i in range(dof)]
        + [f"p_{i + 1}" for i in range(dof)]
    )
    data = np.column_stack([traj.times, traj.states])
    np.savetxt(path, data, fmt="%.17g", delimiter=",", header=header, comments="")
