"""Brute-force oracles, independent of the library's ODE and simulation paths.

The transient oracle enumerates the full aggregated state space of a small
model from hand-written transition rules, builds the generator matrix, and
solves the transient distribution by uniformization. Moments are then exact
sums over the distribution.
"""

import numpy as np
from scipy.stats import poisson


def enumerate_states(init, transitions):
    """Reachable integer states under hand-written (jump, rate_fn) rules."""
    init = tuple(int(x) for x in init)
    states = [init]
    index = {init: 0}
    frontier = [init]
    while frontier:
        s = frontier.pop()
        arr = np.array(s)
        for jump, rate_fn in transitions:
            if rate_fn(arr) <= 0:
                continue
            t = tuple(arr + jump)
            if min(t) < 0:
                raise AssertionError(f"negative state {t} reached from {s}")
            if t not in index:
                index[t] = len(states)
                states.append(t)
                frontier.append(t)
    return states, index


def generator_matrix(states, index, transitions):
    n = len(states)
    Q = np.zeros((n, n))
    for i, s in enumerate(states):
        arr = np.array(s)
        for jump, rate_fn in transitions:
            r = rate_fn(arr)
            if r <= 0:
                continue
            j = index[tuple(arr + jump)]
            Q[i, j] += r
            Q[i, i] -= r
    return Q


def transient_distribution(Q, p0, t, tol=1e-10):
    """Uniformization: p(t) = sum_k Poisson(k; lam*t) * p0 P^k."""
    if t == 0:
        return p0.copy()
    lam = max(-np.diag(Q).min(), 1e-12) * 1.0001
    P = np.eye(Q.shape[0]) + Q / lam
    mean = lam * t
    kmax = int(mean + 14 * np.sqrt(mean) + 40)
    weights = poisson.pmf(np.arange(kmax + 1), mean)
    out = np.zeros_like(p0)
    v = p0.copy()
    for k in range(kmax + 1):
        if weights[k] > 0:
            out += weights[k] * v
        v = v @ P
    remainder = 1.0 - weights.sum()
    assert remainder < tol, f"Poisson tail {remainder} above tolerance"
    out += remainder * v
    return out


class TransientOracle:
    """Exact transient moments of a small chain from hand-written rules."""

    def __init__(self, init, transitions):
        self.states, self.index = enumerate_states(init, transitions)
        self.Q = generator_matrix(self.states, self.index, transitions)
        self.state_array = np.array(self.states, dtype=float)
        self.p0 = np.zeros(len(self.states))
        self.p0[self.index[tuple(int(x) for x in init)]] = 1.0

    def distribution(self, t):
        return transient_distribution(self.Q, self.p0, t)

    def moment(self, t, exps, dist=None):
        p = self.distribution(t) if dist is None else dist
        vals = np.ones(len(self.states))
        for d, e in enumerate(exps):
            if e:
                vals *= self.state_array[:, d] ** e
        return float(p @ vals)

    def mean(self, t, dim, dist=None):
        exps = [0] * self.state_array.shape[1]
        exps[dim] = 1
        return self.moment(t, exps, dist)

    def variance(self, t, dim, dist=None):
        p = self.distribution(t) if dist is None else dist
        mu = self.mean(t, dim, p)
        return self.moment(t, self._sq(dim), p) - mu * mu

    def central(self, t, dim, order, dist=None):
        p = self.distribution(t) if dist is None else dist
        mu = self.mean(t, dim, p)
        vals = (self.state_array[:, dim] - mu) ** order
        return float(p @ vals)

    def _sq(self, dim):
        exps = [0] * self.state_array.shape[1]
        exps[dim] = 2
        return exps


def processor_resource_rules(r1=2.0, q=14.0, r2=14.0, s=2.0):
    """Hand-written aggregated rules for the processor/resource model.

    State layout (P0, P1, R0, R1).
    """
    return [
        (np.array([-1, 1, -1, 1]), lambda n: min(n[0] * r1, n[2] * r2)),
        (np.array([1, -1, 0, 0]), lambda n: n[1] * q),
        (np.array([0, 0, 1, -1]), lambda n: n[3] * s),
    ]


def client_server_rules(r_req=2.0, r_break=0.1, r_think=0.2, r_data=1.0, r_reset=2.0):
    """Hand-written aggregated rules for the two-stage client/server model.

    State layout (C, Cw, Ct, S, Sg, Sb).
    """
    return [
        (np.array([-1, 1, 0, -1, 1, 0]), lambda n: min(n[0], n[3]) * r_req),
        (np.array([0, -1, 1, 1, -1, 0]), lambda n: min(n[1], n[4]) * r_data),
        (np.array([1, 0, -1, 0, 0, 0]), lambda n: n[2] * r_think),
        (np.array([0, 0, 0, -1, 0, 1]), lambda n: n[3] * r_break),
        (np.array([0, 0, 0, 1, 0, -1]), lambda n: n[5] * r_reset),
    ]
