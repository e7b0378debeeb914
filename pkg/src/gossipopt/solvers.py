"""Decentralized variance-reduced solvers and full-gradient baselines.

All solvers are synchronous-round simulations over an (m, d) agent stack.
Randomness is drawn from counter-based streams keyed by
(seed, namespace, epoch[, step, agent]) so a run is reproducible regardless
of evaluation order: the same (instance, config, gossip, seed) always yields
the same trace.

Counter conventions (asserted by tests):
  - one stochastic-gradient-oracle (SFO) call = one component gradient;
  - the variance-reduced estimator costs 2b SFO per agent per inner step;
  - a full local gradient costs n SFO per agent;
  - every FastMix invocation costs M communication rounds;
  - PG-EXTRA counts 1 round per iteration, NIDS 2 (its mixed correction term
    is counted explicitly).
"""

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .gossip import (GossipMatrix, consensus_error, consensus_stack, fast_mix,
                     min_rounds_for_rho, row_average)
from .problems import ProblemInstance, closed_form_minimizer, prox

_T_NS = 0      # per-epoch inner-length draws
_BATCH_NS = 1  # per-(epoch, step, agent) minibatch draws


def _stream(seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.default_rng(ss)


@dataclass
class SolverConfig:
    """Hyperparameters of the stochastic solvers.

    t0 = ceil(n / b) is the expected number of inner steps; the mirror step
    weight alpha = t0 * eta / (2 * tau) is derived.
    """

    eta: float
    tau: float
    b: int
    M: int
    K: int
    seed: int
    t0: int

    def __post_init__(self):
        if self.eta <= 0:
            raise ValueError(f"eta must be positive, got {self.eta}")
        if not 0.0 < self.tau <= 1.0:
            raise ValueError(f"tau must lie in (0, 1], got {self.tau}")
        if self.b < 1:
            raise ValueError(f"batch size must be >= 1, got {self.b}")
        if self.M < 0:
            raise ValueError(f"M must be non-negative, got {self.M}")
        if self.K < 0:
            raise ValueError(f"K must be non-negative, got {self.K}")
        if self.t0 < 1:
            raise ValueError(f"t0 must be >= 1, got {self.t0}")

    @property
    def alpha(self) -> float:
        return self.t0 * self.eta / (2.0 * self.tau)


def default_hyperparams(inst: ProblemInstance, W: GossipMatrix, K: int, seed: int,
                        rho_target: float = 0.1, b: int | None = None,
                        eta: float | None = None, tau: float | None = None,
                        M: int | None = None) -> SolverConfig:
    """Theory-backed defaults: b = round(sqrt(n)),
    eta = min(1/(2L), sqrt(b/(ell1 ell2 t0))/8), tau = min(1/2, sqrt(t0 eta sigma)/2),
    M the smallest round count with contraction below rho_target.
    Any explicitly passed value overrides its formula.
    """
    n = inst.n
    if b is None:
        b = min(max(int(round(math.sqrt(n))), 1), n)
    if not 1 <= b <= n:
        raise ValueError(f"batch size {b} outside [1, {n}]")
    t0 = math.ceil(n / b)
    if eta is None:
        eta = min(1.0 / (2.0 * inst.L),
                  math.sqrt(b / (inst.ell1 * inst.ell2 * t0)) / 8.0)
    if tau is None:
        if inst.sigma <= 0:
            raise ValueError("sigma = 0: pass tau explicitly or regularize_epsilon first")
        tau = min(0.5, math.sqrt(t0 * eta * inst.sigma) / 2.0)
    if M is None:
        M = min_rounds_for_rho(W.lambda2, rho_target)
    return SolverConfig(eta=eta, tau=tau, b=b, M=M, K=K, seed=seed, t0=t0)


def sample_geometric(p: float, rng: np.random.Generator) -> int:
    """Draw T with P(T = k) = (1-p)^k p on {0, 1, 2, ...}; E[T] = (1-p)/p."""
    if not 0.0 < p <= 1.0:
        raise ValueError(f"success probability must lie in (0, 1], got {p}")
    return int(rng.geometric(p)) - 1


def _draw_inner_length(cfg: SolverConfig, k: int) -> int:
    return sample_geometric(1.0 / cfg.t0, _stream(cfg.seed, _T_NS, k))


def _draw_batches(cfg: SolverConfig, k: int, t: int, m: int, n: int) -> np.ndarray:
    """(m, b) uniform indices with replacement, one stream per agent."""
    return np.stack([_stream(cfg.seed, _BATCH_NS, k, t, i).integers(0, n, size=cfg.b)
                     for i in range(m)])


@dataclass
class EpochState:
    """Inner-loop variables: iterate w, tracker s, estimator v, anchors mu/w0."""

    w: np.ndarray
    s: np.ndarray
    v: np.ndarray
    mu: np.ndarray
    w0: np.ndarray


def vr_estimator(inst: ProblemInstance, state: EpochState,
                 batches: np.ndarray) -> np.ndarray:
    """Row i: mu_i + (1/b) sum_{j in B_i} (grad f_{i,j}(w_i) - grad f_{i,j}(w0_i)).

    Unbiased for mu_i + grad f_i(w_i) - grad f_i(w0_i); costs 2b SFO per agent.
    """
    return state.mu + inst.batch_grad_diff(state.w, state.w0, batches)


def svrg_inner_epoch(inst: ProblemInstance, x_epoch: np.ndarray, s_hat: np.ndarray,
                     cfg: SolverConfig, W: GossipMatrix, epoch: int,
                     track_averages: list | None = None):
    """One variance-reduced epoch shared by both decentralized solvers.

    Starts from anchor w0 = x_epoch with tracker/estimator seeded at s_hat,
    runs T + 1 steps with T ~ Geom(1/t0):
        v^t = mu + minibatch gradient difference
        s^t = FastMix(s^{t-1} + v^t - v^{t-1}, M)
        w^{t+1} = FastMix(prox_{eta,psi}(w^t - eta s^t), M)
    Returns (w^{T+1}, T, fastmix_calls); SFO cost is 2b(T+1) per agent.
    """
    state = EpochState(w=x_epoch.copy(), s=s_hat, v=s_hat, mu=s_hat, w0=x_epoch)
    T = _draw_inner_length(cfg, epoch)
    for t in range(T + 1):
        batches = _draw_batches(cfg, epoch, t, inst.m, inst.n)
        v_next = vr_estimator(inst, state, batches)
        state.s = fast_mix(state.s + v_next - state.v, W, cfg.M)
        state.v = v_next
        state.w = fast_mix(prox(cfg.eta, inst.regularizer, state.w - cfg.eta * state.s),
                           W, cfg.M)
        if track_averages is not None:
            track_averages.append((row_average(state.s), row_average(state.v)))
    return state.w, T, 2 * (T + 1)


def mirror_step(q: np.ndarray, y_next: np.ndarray, x_next: np.ndarray,
                tau: float, W: GossipMatrix, M: int) -> np.ndarray:
    """Momentum update q <- FastMix((q + tau y/2 - (x - y)/(2 tau)) / (1 + tau/2)).

    Row-wise closed form of argmin_q { ||q - q_prev||^2/2
    + <(x - y)/(2 tau), q> + tau ||q - y||^2 / 4 }.
    """
    if not 0.0 < tau <= 1.0:
        raise ValueError(f"tau must lie in (0, 1], got {tau}")
    local = (q + 0.5 * tau * y_next - (x_next - y_next) / (2.0 * tau)) / (1.0 + 0.5 * tau)
    return fast_mix(local, W, M)


@dataclass
class TraceRow:
    epoch: int
    sfo: int
    comm: int
    f_value: float
    subopt: float
    consensus: float
    wall: float


@dataclass
class RunTrace:
    """Per-epoch time series of one solver run; counters are cumulative."""

    solver: str
    rows: list = field(default_factory=list)
    inner_lengths: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)
    f_star: float | None = None

    def append(self, epoch, sfo, comm, f_value, consensus, wall):
        if self.rows:
            last = self.rows[-1]
            assert sfo >= last.sfo and comm >= last.comm, "counters must not decrease"
        subopt = f_value - self.f_star if self.f_star is not None else float("nan")
        self.rows.append(TraceRow(epoch, sfo, comm, f_value, subopt, consensus, wall))

    def rebase(self, f_star: float) -> None:
        """Recompute the suboptimality column against a new reference value."""
        self.f_star = f_star
        for row in self.rows:
            row.subopt = row.f_value - f_star

    @property
    def final_subopt(self) -> float:
        return self.rows[-1].subopt

    def min_subopt(self) -> float:
        finite = [r.subopt for r in self.rows if math.isfinite(r.subopt)]
        return min(finite) if finite else float("inf")

    def sfo_to_reach(self, threshold: float) -> float:
        """Cumulative SFO at which suboptimality first drops to threshold (inf if never)."""
        for row in self.rows:
            if row.subopt <= threshold:
                return row.sfo
        return float("inf")


def _resolve_f_star(inst: ProblemInstance, f_star: float | None) -> float | None:
    if f_star is not None:
        return f_star
    try:
        return inst.objective_value(closed_form_minimizer(inst))
    except ValueError:
        return None


def _initial_stack(inst: ProblemInstance, x0) -> np.ndarray:
    if x0 is None:
        x0 = np.zeros(inst.d)
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (inst.d,):
        raise ValueError(f"x0 must have shape ({inst.d},)")
    return consensus_stack(x0, inst.m)


def _require_strongly_convex(inst: ProblemInstance) -> None:
    if inst.sigma <= 0:
        raise ValueError("sigma = sigma_f + sigma_psi must be positive; "
                         "apply regularize_epsilon first")


def _check_batching(cfg: SolverConfig, n: int) -> None:
    if cfg.b > n:
        raise ValueError(f"batch size {cfg.b} exceeds shard size {n}")
    if cfg.t0 != math.ceil(n / cfg.b):
        raise ValueError(f"t0 = {cfg.t0} inconsistent with ceil({n}/{cfg.b})")


def run_pmgt_katyushax(inst: ProblemInstance, cfg: SolverConfig, W: GossipMatrix,
                       x0=None, f_star: float | None = None) -> RunTrace:
    """Accelerated decentralized SVRG with gradient tracking and multi-mixing.

    Per epoch: mix the momentum combination x = FastMix(tau q + (1 - tau) y),
    refresh the tracked full gradient s_hat, run one variance-reduced inner
    epoch anchored at x, then take the mirror (momentum) step on q.
    """
    _require_strongly_convex(inst)
    _check_batching(cfg, inst.n)
    f_star = _resolve_f_star(inst, f_star)
    start = time.perf_counter()
    X = _initial_stack(inst, x0)
    Y = X.copy()
    Q = X.copy()
    g_prev = inst.local_grads(X)
    s_hat = fast_mix(g_prev, W, cfg.M)
    sfo, comm = inst.n, cfg.M
    trace = RunTrace("pmgt_katyushax", meta={"lambda2": W.lambda2}, f_star=f_star)
    trace.append(0, sfo, comm, inst.objective_value(row_average(Y)),
                 consensus_error(Y), time.perf_counter() - start)
    for k in range(cfg.K):
        X = fast_mix(cfg.tau * Q + (1.0 - cfg.tau) * Y, W, cfg.M)
        g_new = inst.local_grads(X)
        sfo += inst.n
        s_hat = fast_mix(s_hat + g_new - g_prev, W, cfg.M)
        g_prev = g_new
        Y, T, inner_calls = svrg_inner_epoch(inst, X, s_hat, cfg, W, k)
        sfo += 2 * cfg.b * (T + 1)
        Q = mirror_step(Q, Y, X, cfg.tau, W, cfg.M)
        comm += cfg.M * (3 + inner_calls)
        trace.inner_lengths.append(T)
        trace.append(k + 1, sfo, comm, inst.objective_value(row_average(Y)),
                     consensus_error(Y), time.perf_counter() - start)
    trace.meta["x_final"] = row_average(Y)
    trace.meta["consensus_q_final"] = consensus_error(Q)
    return trace


def run_pmgt_svrg(inst: ProblemInstance, cfg: SolverConfig, W: GossipMatrix,
                  x0=None, f_star: float | None = None) -> RunTrace:
    """Decentralized proximal SVRG with gradient tracking (no momentum).

    The epoch anchor is y^k itself and the tracker is refreshed from
    consecutive outer iterates; otherwise the inner epoch is shared with the
    accelerated solver.
    """
    _require_strongly_convex(inst)
    _check_batching(cfg, inst.n)
    f_star = _resolve_f_star(inst, f_star)
    start = time.perf_counter()
    Y = _initial_stack(inst, x0)
    g_prev = inst.local_grads(Y)
    s_hat = fast_mix(g_prev, W, cfg.M)
    sfo, comm = inst.n, cfg.M
    trace = RunTrace("pmgt_svrg", meta={"lambda2": W.lambda2}, f_star=f_star)
    trace.append(0, sfo, comm, inst.objective_value(row_average(Y)),
                 consensus_error(Y), time.perf_counter() - start)
    for k in range(cfg.K):
        g_new = inst.local_grads(Y)
        sfo += inst.n
        s_hat = fast_mix(s_hat + g_new - g_prev, W, cfg.M)
        g_prev = g_new
        Y, T, inner_calls = svrg_inner_epoch(inst, Y, s_hat, cfg, W, k)
        sfo += 2 * cfg.b * (T + 1)
        comm += cfg.M * (1 + inner_calls)
        trace.inner_lengths.append(T)
        trace.append(k + 1, sfo, comm, inst.objective_value(row_average(Y)),
                     consensus_error(Y), time.perf_counter() - start)
    trace.meta["x_final"] = row_average(Y)
    return trace


def run_centralized_svrg(inst: ProblemInstance, cfg: SolverConfig,
                         x0=None, f_star: float | None = None) -> RunTrace:
    """Proximal SVRG with geometric epoch lengths on the flattened problem.

    Treats all m*n components as a single shard. With the same seed it is the
    exact m = 1, M = 0 limit of run_pmgt_svrg (shared random streams), which
    the tests use as the reduction oracle.
    """
    _require_strongly_convex(inst)
    flat = inst.flatten()
    _check_batching(cfg, flat.n)
    f_star = _resolve_f_star(flat, f_star)
    start = time.perf_counter()
    y = np.zeros(flat.d) if x0 is None else np.asarray(x0, dtype=float).copy()
    sfo = flat.n  # anchor gradient mirrored from the decentralized initialization
    trace = RunTrace("centralized_svrg", meta={}, f_star=f_star)
    trace.append(0, sfo, 0, flat.objective_value(y), 0.0, time.perf_counter() - start)
    for k in range(cfg.K):
        mu = flat.local_full_grad(0, y)
        sfo += flat.n
        T = _draw_inner_length(cfg, k)
        w, w0 = y.copy(), y
        for t in range(T + 1):
            batch = _draw_batches(cfg, k, t, 1, flat.n)
            v = mu + flat.batch_grad_diff(w[None, :], w0[None, :], batch)[0]
            w = prox(cfg.eta, flat.regularizer, w - cfg.eta * v)
        sfo += 2 * cfg.b * (T + 1)
        y = w
        trace.inner_lengths.append(T)
        trace.append(k + 1, sfo, 0, flat.objective_value(y), 0.0,
                     time.perf_counter() - start)
    trace.meta["x_final"] = y.copy()
    return trace


def run_pgextra(inst: ProblemInstance, step: float, W: GossipMatrix, K: int,
                x0=None, f_star: float | None = None) -> RunTrace:
    """PG-EXTRA: deterministic decentralized proximal gradient.

    z^1 = W x^0 - step * g^0,
    z^{k+1} = z^k + W x^k - (I + W)/2 x^{k-1} - step (g^k - g^{k-1}),
    x^{k+1} = prox_{step, psi}(z^{k+1}).
    Costs n SFO per agent and 1 communication round per iteration (the
    (I + W)/2 term reuses the previous round's mix).
    """
    if step <= 0:
        raise ValueError(f"step must be positive, got {step}")
    f_star = _resolve_f_star(inst, f_star)
    start = time.perf_counter()
    X = _initial_stack(inst, x0)
    sfo, comm = 0, 0
    trace = RunTrace("pgextra", meta={"lambda2": W.lambda2, "step": step}, f_star=f_star)
    trace.append(0, sfo, comm, inst.objective_value(row_average(X)),
                 consensus_error(X), time.perf_counter() - start)
    X_prev = WX_prev = g_prev = z = None
    for k in range(1, K + 1):
        g = inst.local_grads(X)
        sfo += inst.n
        WX = W.weights @ X
        comm += 1
        if k == 1:
            z = WX - step * g
        else:
            z = z + WX - 0.5 * (X_prev + WX_prev) - step * (g - g_prev)
        X_prev, WX_prev, g_prev = X, WX, g
        X = prox(step, inst.regularizer, z)
        trace.append(k, sfo, comm, inst.objective_value(row_average(X)),
                     consensus_error(X), time.perf_counter() - start)
    trace.meta["x_final"] = row_average(X)
    return trace


def run_nids(inst: ProblemInstance, step: float, W: GossipMatrix, K: int,
             x0=None, f_star: float | None = None) -> RunTrace:
    """NIDS: network-independent-step decentralized proximal gradient.

    z^1 = x^0 - step * g^0,
    z^{k+1} = z^k - x^k + (I + W)/2 (2 x^k - x^{k-1} - step (g^k - g^{k-1})),
    x^{k+1} = prox_{step, psi}(z^{k+1}).
    Costs n SFO per agent and 2 communication rounds per iteration (the mixed
    correction term is counted explicitly).
    """
    if step <= 0:
        raise ValueError(f"step must be positive, got {step}")
    f_star = _resolve_f_star(inst, f_star)
    start = time.perf_counter()
    X = _initial_stack(inst, x0)
    W_tilde = 0.5 * (np.eye(W.m) + W.weights)
    sfo, comm = 0, 0
    trace = RunTrace("nids", meta={"lambda2": W.lambda2, "step": step}, f_star=f_star)
    trace.append(0, sfo, comm, inst.objective_value(row_average(X)),
                 consensus_error(X), time.perf_counter() - start)
    X_prev = g_prev = z = None
    for k in range(1, K + 1):
        g = inst.local_grads(X)
        sfo += inst.n
        comm += 2
        if k == 1:
            z = X - step * g
        else:
            z = z - X + W_tilde @ (2.0 * X - X_prev - step * (g - g_prev))
        X_prev, g_prev = X, g
        X = prox(step, inst.regularizer, z)
        trace.append(k, sfo, comm, inst.objective_value(row_average(X)),
                     consensus_error(X), time.perf_counter() - start)
    trace.meta["x_final"] = row_average(X)
    return trace
