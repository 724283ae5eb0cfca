"""Shared deterministic test ensembles."""

import numpy as np

from oscbath.covariance import MomentParams
from oscbath.network import OscillatorNetwork
from oscbath.spectral import krylov_basis


def conditioned_pd_matrix(order, seed, eig_range=(0.5, 5.0)):
    """Random PD matrix with Haar-like eigenvectors and bounded condition
    number (log-uniform eigenvalues), so float tolerances stay meaningful."""
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((order, order)))
    lo, hi = eig_range
    eigs = np.exp(rng.uniform(np.log(lo), np.log(hi), size=order))
    return (q * eigs) @ q.T


def random_complete_network(seed, max_order=8, dim=1, mass=None):
    """Seeded draw of a well-conditioned network verified complete from site 0."""
    rng = np.random.default_rng(seed)
    while True:
        order = int(rng.integers(2, max_order + 1))
        v = conditioned_pd_matrix(order, int(rng.integers(0, 2**31)))
        if krylov_basis(v, [0])[1] == order:
            m = mass if mass is not None else float(rng.uniform(0.5, 2.0))
            return OscillatorNetwork(order, dim, m, v)


def random_moment_params(seed, mass):
    """Moment parameters drawn away from degenerate corners."""
    rng = np.random.default_rng(seed)
    return MomentParams(
        lam=float(rng.uniform(0.5, 2.0)),
        alpha=float(rng.uniform(0.2, 0.8)),
        sigma2=float(rng.uniform(0.5, 2.0)),
        mass=mass,
    )
