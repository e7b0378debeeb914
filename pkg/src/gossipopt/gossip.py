"""Doubly stochastic gossip matrices and accelerated multi-consensus mixing.

Agent state is kept as plain (m, d) float arrays, one row per agent; the
helpers `row_average` and `consensus_error` give the derived quantities the
solvers log.
"""

from dataclasses import dataclass

import numpy as np

SYM_TOL = 1e-12
STOCH_TOL = 1e-12
EIG_TOL = 1e-10


class InvariantViolation(ValueError):
    """A constructed gossip matrix fails a doubly-stochastic invariant."""


@dataclass
class GossipMatrix:
    """Symmetric doubly stochastic mixing weights with cached second eigenvalue.

    Invariants (checked by `validate`): W symmetric, rows/columns sum to 1,
    0 <= W <= I in the spectral sense, eigenvalue 1 simple with eigenvector
    1/sqrt(m), and `lambda2` equal to the second-largest eigenvalue.
    """

    weights: np.ndarray
    lambda2: float
    m: int

    def validate(self) -> None:
        W = self.weights
        if W.shape != (self.m, self.m):
            raise InvariantViolation(f"weights shape {W.shape} != ({self.m}, {self.m})")
        if np.abs(W - W.T).max() > SYM_TOL:
            raise InvariantViolation("weights not symmetric")
        ones = np.ones(self.m)
        if np.abs(W @ ones - ones).max() > STOCH_TOL:
            raise InvariantViolation("row sums differ from 1")
        if np.abs(W.T @ ones - ones).max() > STOCH_TOL:
            raise InvariantViolation("column sums differ from 1")
        ev, vec = np.linalg.eigh(W)
        if ev[0] < -EIG_TOL or ev[-1] > 1.0 + EIG_TOL:
            raise InvariantViolation(f"eigenvalues outside [0, 1]: [{ev[0]}, {ev[-1]}]")
        if self.m > 1:
            if ev[-2] >= 1.0 - 1e-8:
                raise InvariantViolation("eigenvalue 1 is not simple (network disconnected)")
            u = vec[:, -1]
            if abs(abs(u @ ones) / np.sqrt(self.m) - 1.0) > 1e-8:
                raise InvariantViolation("top eigenvector is not the all-ones direction")
            lam2 = ev[-2]
        else:
            lam2 = 0.0
        if abs(self.lambda2 - lam2) > EIG_TOL:
            raise InvariantViolation(f"cached lambda2 {self.lambda2} != {lam2}")


def second_eigenvalue(weights: np.ndarray) -> float:
    """Second-largest eigenvalue of a symmetric mixing matrix (0 for m=1)."""
    W = np.asarray(weights, dtype=float)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {W.shape}")
    if np.abs(W - W.T).max() > SYM_TOL:
        raise InvariantViolation("matrix is not symmetric")
    if W.shape[0] == 1:
        return 0.0
    ev = np.linalg.eigvalsh(W)
    return float(ev[-2])


def _as_gossip(weights: np.ndarray) -> GossipMatrix:
    W = np.asarray(weights, dtype=float)
    G = GossipMatrix(weights=W, lambda2=second_eigenvalue(W), m=W.shape[0])
    G.validate()
    return G


def build_lazy_ring(m: int, laziness: float) -> GossipMatrix:
    """Lazy ring W = laziness*I + (1-laziness)/2 * (P + P^T), P the cyclic shift.

    Deterministic test topology with closed-form spectrum
    laziness + (1-laziness)*cos(2*pi*k/m). laziness >= 1/2 guarantees the
    positive-semidefinite invariant on rings of any size.
    """
    if m < 1:
        raise ValueError(f"agent count must be positive, got {m}")
    if not 0.0 < laziness < 1.0:
        raise ValueError(f"laziness must lie in (0, 1), got {laziness}")
    if m == 1:
        return GossipMatrix(weights=np.ones((1, 1)), lambda2=0.0, m=1)
    if m == 2:
        c = (1.0 - laziness) / 2.0
        return _as_gossip(np.array([[1.0 - c, c], [c, 1.0 - c]]))
    P = np.zeros((m, m))
    for i in range(m):
        P[i, (i + 1) % m] = 1.0
    return _as_gossip(laziness * np.eye(m) + (1.0 - laziness) / 2.0 * (P + P.T))


def build_random_two_neighbor(m: int, seed: int) -> GossipMatrix:
    """Random graph where each agent picks two extra neighbors, union a ring.

    Metropolis-Hastings weights on the resulting graph, then W <- (I + W)/2 so
    that 0 <= W holds. Deterministic for a fixed seed.
    """
    if m < 3:
        raise ValueError(f"random two-neighbor topology needs m >= 3, got {m}")
    rng = np.random.default_rng(seed)
    adj = np.zeros((m, m), dtype=bool)
    for i in range(m):
        adj[i, (i + 1) % m] = adj[(i + 1) % m, i] = True
    for i in range(m):
        others = np.delete(np.arange(m), i)
        for j in rng.choice(others, size=2, replace=False):
            adj[i, j] = adj[j, i] = True
    deg = adj.sum(axis=1)
    W = np.zeros((m, m))
    for i in range(m):
        for j in range(m):
            if i != j and adj[i, j]:
                W[i, j] = 1.0 / (1.0 + max(deg[i], deg[j]))
        W[i, i] = 1.0 - W[i].sum()
    return _as_gossip((np.eye(m) + W) / 2.0)


def fast_mix(X: np.ndarray, W: GossipMatrix, M: int) -> np.ndarray:
    """M rounds of the accelerated consensus recurrence.

    x^{k+1} = (1 + eta) W x^k - eta x^{k-1} with x^{-1} = x^0 = X and
    eta = 1 / (1 + sqrt(1 - lambda2^2)). Preserves the column means exactly
    and contracts consensus error within `contraction_bound(lambda2, M)`.
    M = 0 returns X unchanged.
    """
    X = np.asarray(X, dtype=float)
    if X.shape[0] != W.m:
        raise ValueError(f"agent stack has {X.shape[0]} rows, gossip matrix expects {W.m}")
    if M < 0:
        raise ValueError(f"round count must be non-negative, got {M}")
    if M == 0 or W.m == 1:
        return X.copy()
    eta = 1.0 / (1.0 + np.sqrt(1.0 - W.lambda2**2))
    prev, cur = X, X
    for _ in range(M):
        prev, cur = cur, (1.0 + eta) * (W.weights @ cur) - eta * prev
    return cur


def contraction_bound(lambda2: float, M: int) -> float:
    """Consensus-error contraction factor sqrt(14) * (1 - (1 - 1/sqrt(2)) * sqrt(1 - lambda2))^M."""
    if not 0.0 <= lambda2 < 1.0:
        raise ValueError(f"lambda2 must lie in [0, 1), got {lambda2}")
    if M < 0:
        raise ValueError(f"round count must be non-negative, got {M}")
    base = 1.0 - (1.0 - 1.0 / np.sqrt(2.0)) * np.sqrt(1.0 - lambda2)
    return float(np.sqrt(14.0) * base**M)


def min_rounds_for_rho(lambda2: float, rho_target: float) -> int:
    """Smallest M with contraction_bound(lambda2, M) <= rho_target."""
    if rho_target <= 0.0:
        raise ValueError(f"rho target must be positive, got {rho_target}")
    M = 0
    while contraction_bound(lambda2, M) > rho_target:
        M += 1
        if M > 10**6:
            raise ValueError("contraction target unreachable (lambda2 too close to 1)")
    return M


def row_average(X: np.ndarray) -> np.ndarray:
    """Network average x_bar = m^{-1} 1^T X of an (m, d) agent stack."""
    return np.asarray(X, dtype=float).mean(axis=0)


def consensus_error(X: np.ndarray) -> float:
    """Frobenius distance ||X - 1 x_bar|| between agents and their average."""
    X = np.asarray(X, dtype=float)
    return float(np.linalg.norm(X - X.mean(axis=0)))


def consensus_stack(x: np.ndarray, m: int) -> np.ndarray:
    """(m, d) stack with every agent at the same point x."""
    return np.tile(np.asarray(x, dtype=float), (m, 1))
