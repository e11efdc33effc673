"""A model whose hitting times and cylinder measures are known exactly."""

import numpy as np

from loglaw.core import FLOW, SystemModel


class PowerLawModel(SystemModel):
    """States are uniforms u; tau(u, B_l) = u * l^-power, and an orbit
    enters B_l within time eps iff u < eps * l^power."""

    kind = FLOW
    dimension = 1
    velocity_bound = 1.0

    def __init__(self, power=2.0):
        self.power = power

    @property
    def name(self):
        return "power-law"

    def sample(self, rng, n):
        return rng.generator().random((n, 1))

    def _advance(self, x, dt):
        return x

    def ensemble_hits(self, target, radii, t_max, states):
        u = np.asarray(states, dtype=float)[:, :1]
        taus = u * np.asarray(radii)[None, :] ** (-self.power)
        cens = taus > np.asarray(t_max)[None, :]
        return np.where(cens, np.inf, taus), cens


class ExactTauModel(PowerLawModel):
    """Every orbit has tau = l^-power exactly."""

    def ensemble_hits(self, target, radii, t_max, states):
        n = len(states)
        taus = np.broadcast_to(np.asarray(radii)[None, :] ** (-self.power), (n, len(radii))).copy()
        return taus, taus > np.asarray(t_max)[None, :]


class SampledPowerLawModel(PowerLawModel):
    """PowerLawModel with an importance sampler concentrated on [0, 2 eps l^power)."""

    def cylinder_states(self, target, l, eps, gen, m):
        top = min(1.0, 2 * eps * l**self.power)
        return top * gen.random((m, 1)), np.full(m, top), "synthetic"
