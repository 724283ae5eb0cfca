"""Experiment configuration: JSON schema, validation, provenance hashing.

A configuration file is a JSON object with the sections below; every
referenced constraint is re-validated by the owning module's constructor at
load time, so a config that loads is a config that runs.

    {
      "network": {"n_particles": 3, "dim": 1, "mass": 1.0,
                  "stiffness": {"kind": "chain", "coupling": 1.0, "pinning": 0.5}},
      "model": {"kind": "one_dim_elastic", "external_mass": 0.5,
                "velocity_law": {"kind": "gaussian", "sigma2": 1.0}},
      "schedule": {"tau": {"kind": "exponential", "rate": 1.0}},
      "run": {"t_end": 200.0, "sample_dt": 0.25, "n_steps": 1000,
              "burn_in": 20.0, "seeds": [0, 1, 2, 3]},
      "contact_sites": [0],
      "analysis": {"covariance_ode": true, "stationarity": true,
                   "dissipative": true, "drift_check": true}
    }

Stiffness kinds: "chain" (nearest-neighbor + pinning), "explicit"
(row-major "matrix"), "random" (seeded G G^T + jitter draw). Velocity-law
kinds: "gaussian" {sigma2}, "uniform" {half_width}, "two_point" {magnitude}.
Tau kinds: "exponential" {rate}, "gamma" {shape, rate}, "uniform"
{low, high}. ``run.n_steps`` is the post-collision chain length summarized
per seed. All indices (contact_sites) are 0-based.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import laws
from .collisions import ContractiveAffine, OneDimElastic, TwoDimBall
from .errors import ConfigError
from .network import OscillatorNetwork, PhaseState, chain_stiffness
from .pdmp import EventSchedule
from .spectral import random_pd_matrix


def _require(mapping: dict, key: str, where: str):
    if key not in mapping:
        raise ConfigError(f"missing '{key}' in {where} section")
    return mapping[key]


def _build_network(section: dict) -> OscillatorNetwork:
    n = int(_require(section, "n_particles", "network"))
    d = int(_require(section, "dim", "network"))
    mass = float(_require(section, "mass", "network"))
    stiff = _require(section, "stiffness", "network")
    kind = _require(stiff, "kind", "network.stiffness")
    dof = n * d
    if kind == "chain":
        matrix = chain_stiffness(
            dof,
            coupling=float(stiff.get("coupling", 1.0)),
            pinning=float(stiff.get("pinning", 0.5)),
        )
    elif kind == "explicit":
        matrix = np.asarray(_require(stiff, "matrix", "network.stiffness"), dtype=float)
    elif kind == "random":
        matrix = random_pd_matrix(dof, int(stiff.get("seed", 0)))
    else:
        raise ConfigError(f"unknown stiffness kind '{kind}'")
    try:
        return OscillatorNetwork(n_particles=n, dim=d, mass=mass, stiffness=matrix)
    except ValueError as exc:
        raise ConfigError(f"invalid network: {exc}") from exc


def _build_velocity_law(section: dict):
    kind = _require(section, "kind", "model.velocity_law")
    try:
        if kind == "gaussian":
            return laws.GaussianVelocity(sigma2=float(section.get("sigma2", 1.0)))
        if kind == "uniform":
            return laws.UniformSymmetricVelocity(
                half_width=float(_require(section, "half_width", "velocity_law"))
            )
        if kind == "two_point":
            return laws.TwoPointVelocity(
                magnitude=float(_require(section, "magnitude", "velocity_law"))
            )
    except ValueError as exc:
        raise ConfigError(f"invalid velocity law: {exc}") from exc
    raise ConfigError(f"unknown velocity law kind '{kind}'")


def _build_model(section: dict):
    kind = _require(section, "kind", "model")
    try:
        if kind == "one_dim_elastic":
            law_section = section.get("velocity_law", {"kind": "gaussian", "sigma2": 1.0})
            law = _build_velocity_law(law_section)
            model = OneDimElastic(
                external_mass=float(_require(section, "external_mass", "model")),
                velocity_law=law,
            )
            return model, law
        if kind == "contractive_affine":
            model = ContractiveAffine(
                reflection=np.asarray(
                    _require(section, "reflection", "model"), dtype=float
                ),
                noise_law=laws.IsotropicGaussianVector(
                    dim=len(section["reflection"]),
                    sigma2=float(section.get("noise_sigma2", 1.0)),
                ),
            )
            return model, None
        if kind == "two_dim_ball":
            model = TwoDimBall(
                external_mass=float(_require(section, "external_mass", "model")),
                velocity_law=laws.IsotropicGaussianVector(
                    dim=2, sigma2=float(section.get("velocity_sigma2", 1.0))
                ),
            )
            return model, None
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"invalid model: {exc}") from exc
    raise ConfigError(f"unknown model kind '{kind}'")


def _build_tau_law(section: dict):
    kind = _require(section, "kind", "schedule.tau")
    try:
        if kind == "exponential":
            return laws.Exponential(rate=float(_require(section, "rate", "tau")))
        if kind == "gamma":
            return laws.GammaLaw(
                shape=float(_require(section, "shape", "tau")),
                rate=float(_require(section, "rate", "tau")),
            )
        if kind == "uniform":
            return laws.UniformPositive(
                low=float(_require(section, "low", "tau")),
                high=float(_require(section, "high", "tau")),
            )
    except ValueError as exc:
        raise ConfigError(f"invalid waiting-time law: {exc}") from exc
    raise ConfigError(f"unknown waiting-time law kind '{kind}'")


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment description plus its canonical JSON form."""

    network: OscillatorNetwork
    model: object
    velocity_law: object | None
    schedule: EventSchedule
    t_end: float
    sample_dt: float
    n_steps: int
    burn_in: float
    seeds: tuple
    contact_sites: tuple
    analysis: dict
    psi0: PhaseState
    raw: dict = field(repr=False)

    @property
    def config_hash(self) -> str:
        canonical = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()


def load_config(source) -> ExperimentConfig:
    """Parse and validate a configuration from a dict, JSON text, or path."""
    if isinstance(source, dict):
        raw = source
    else:
        text = Path(source).read_text() if Path(str(source)).exists() else str(source)
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")

    net = _build_network(_require(raw, "network", "config"))
    model, vel_law = _build_model(_require(raw, "model", "config"))
    tau_law = _build_tau_law(_require(_require(raw, "schedule", "config"), "tau", "schedule"))

    try:
        schedule = EventSchedule(tau_law=tau_law)
    except ValueError as exc:
        raise ConfigError(f"invalid schedule: {exc}") from exc

    run = raw.get("run", {})
    omega_max = float(net.mode_frequencies[-1])
    t_end = float(run.get("t_end", 100.0))
    sample_dt = float(run.get("sample_dt", (2.0 * np.pi / omega_max) / 8.0))
    n_steps = int(run.get("n_steps", 1000))
    burn_in = float(run.get("burn_in", 0.1 * t_end))
    seeds = run.get("seeds", None)
    if seeds is None or len(seeds) == 0:
        raise ConfigError("run.seeds must be a non-empty list of integers")
    seeds = tuple(int(s) for s in seeds)
    if len(set(seeds)) != len(seeds):
        raise ConfigError("run.seeds must not contain duplicates")
    if not 0 < sample_dt <= t_end:
        raise ConfigError("need 0 < run.sample_dt <= run.t_end")
    if not 0 <= burn_in < t_end:
        raise ConfigError("need 0 <= run.burn_in < run.t_end")
    if n_steps < 1:
        raise ConfigError("run.n_steps must be >= 1")

    sites = raw.get("contact_sites", [0])
    sites = tuple(sorted(set(int(i) for i in sites)))
    if not sites or sites[0] < 0 or sites[-1] >= net.dof:
        raise ConfigError(f"contact_sites {sites} out of range for dof {net.dof}")

    psi0_section = raw.get("psi0")
    if psi0_section is None:
        psi0 = PhaseState.zero(net.dof)
    else:
        try:
            psi0 = PhaseState(
                q=np.asarray(psi0_section["q"], dtype=float),
                p=np.asarray(psi0_section["p"], dtype=float),
            )
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"invalid psi0: {exc}") from exc
        if psi0.q.shape[0] != net.dof:
            raise ConfigError("psi0 dimension does not match the network")

    analysis = {
        "covariance_ode": bool(raw.get("analysis", {}).get("covariance_ode", True)),
        "stationarity": bool(raw.get("analysis", {}).get("stationarity", True)),
        "dissipative": bool(raw.get("analysis", {}).get("dissipative", True)),
        "drift_check": bool(raw.get("analysis", {}).get("drift_check", True)),
    }

    return ExperimentConfig(
        network=net,
        model=model,
        velocity_law=vel_law,
        schedule=schedule,
        t_end=t_end,
        sample_dt=sample_dt,
        n_steps=n_steps,
        burn_in=burn_in,
        seeds=seeds,
        contact_sites=sites,
        analysis=analysis,
        psi0=psi0,
        raw=raw,
    )
