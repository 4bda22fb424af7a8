"""Acquisition optimization: Thompson samples as binary quadratic programs.

A sampled weight vector over an order-2 feature basis induces a quadratic
pseudo-Boolean objective.  Positive pairwise terms are lower-bounded by a
linearization with per-term parameters in [0, 1]; the resulting submodular
quadratic is minimized exactly by an s-t min cut, and the parameters are
tightened by projected supergradient steps.  Exhaustive and greedy local
search solvers are provided as an oracle and a higher-order alternative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import ConfigurationError, NonSubmodularError
from .features import feature_matrix, mercer_features, validate_point


@dataclass
class BqpProblem:
    """Minimize constant + linear.x + x'Qx with Q strictly upper triangular."""

    n: int
    constant: float
    linear: np.ndarray
    quadratic: np.ndarray

    def __post_init__(self):
        self.linear = np.asarray(self.linear, dtype=np.float64)
        self.quadratic = np.asarray(self.quadratic, dtype=np.float64)
        if self.linear.shape != (self.n,) or self.quadratic.shape != (self.n, self.n):
            raise ConfigurationError("coefficient shapes do not match dimension")
        if np.any(np.tril(self.quadratic) != 0.0):
            raise ConfigurationError(
                "quadratic coefficients must be strictly upper triangular")
        if not (np.isfinite(self.constant) and np.all(np.isfinite(self.linear))
                and np.all(np.isfinite(self.quadratic))):
            raise ConfigurationError("coefficients must be finite")


@dataclass
class SubmodularQuadratic:
    """Quadratic with all pairwise terms <= 0; exactly cut-minimizable."""

    constant: float
    linear: np.ndarray
    quadratic: np.ndarray

    def __post_init__(self):
        self.linear = np.asarray(self.linear, dtype=np.float64)
        self.quadratic = np.asarray(self.quadratic, dtype=np.float64)
        if np.any(np.tril(self.quadratic) != 0.0):
            raise ConfigurationError(
                "quadratic coefficients must be strictly upper triangular")
        if np.any(self.quadratic > 0.0):
            raise NonSubmodularError("pairwise coefficients must all be <= 0")

    @property
    def n(self):
        return self.linear.shape[0]


@dataclass
class RelaxationState:
    """Trace of one relaxation solve: final parameters, best iterate, bounds."""

    gamma: np.ndarray
    step_size: float
    best_x: np.ndarray
    best_value: float
    bound_trace: list = field(default_factory=list)

    @property
    def best_bound(self):
        return max(self.bound_trace)


@dataclass
class FlowNetwork:
    """s-t network in reverse-arc-pair form, ready for the max-flow kernel.

    Arc 2k is the k-th capacity-bearing arc, arc 2k^1 its zero-capacity
    reverse; adjacency is CSR over both.  Source is node n, sink node n+1.
    """

    num_nodes: int
    arc_to: np.ndarray
    arc_cap: np.ndarray
    adj_start: np.ndarray
    adj_arc: np.ndarray
    source: int
    sink: int

    @classmethod
    def build(cls, num_nodes, tails, heads, caps, source, sink):
        if any(c < 0 for c in caps):
            raise ConfigurationError("arc capacities must be nonnegative")
        if sink in tails or source in heads:
            raise ConfigurationError("no arcs may leave the sink or enter the source")
        num_arcs = 2 * len(tails)
        arc_to = np.empty(num_arcs, dtype=np.int64)
        arc_cap = np.empty(num_arcs, dtype=np.float64)
        adjacency = [[] for _ in range(num_nodes)]
        for k, (u, v, c) in enumerate(zip(tails, heads, caps)):
            arc_to[2 * k] = v
            arc_cap[2 * k] = c
            arc_to[2 * k + 1] = u
            arc_cap[2 * k + 1] = 0.0
            adjacency[u].append(2 * k)
            adjacency[v].append(2 * k + 1)
        adj_start = np.zeros(num_nodes + 1, dtype=np.int64)
        for u in range(num_nodes):
            adj_start[u + 1] = adj_start[u] + len(adjacency[u])
        adj_arc = np.fromiter((a for arcs in adjacency for a in arcs),
                              dtype=np.int64, count=num_arcs)
        return cls(num_nodes=num_nodes, arc_to=arc_to, arc_cap=arc_cap,
                   adj_start=adj_start, adj_arc=adj_arc, source=source,
                   sink=sink)

    def mincut_source_side(self, eps=1e-12):
        """(flow value, bool mask of nodes on the minimal source side)."""
        return _kernels.maxflow_mincut(
            self.num_nodes, self.arc_to, self.arc_cap, self.adj_start,
            self.adj_arc, self.source, self.sink, eps)


def build_bqp(theta, basis):
    """Expand a weight vector over an order-2 basis into a BqpProblem.

    The identity value(x) == theta . features(x) holds exactly for every x;
    the empty-set weight lands in the constant.
    """
    if basis.max_order != 2:
        raise ConfigurationError(
            f"BQP reduction needs an order-2 basis, got order {basis.max_order}")
    theta = np.asarray(theta, dtype=np.float64)
    if theta.shape != (basis.size,):
        raise ConfigurationError(
            f"theta length {theta.shape} does not match basis size {basis.size}")
    n = basis.n
    w1 = math.exp(-basis.beta)
    w2 = math.exp(-2.0 * basis.beta)
    th1 = theta[1:1 + n]
    th2 = theta[1 + n:]
    pair = np.zeros((n, n))
    pair[np.triu_indices(n, 1)] = th2
    constant = float(theta[0] + w1 * th1.sum() + w2 * th2.sum())
    linear = -2.0 * (w1 * th1 + w2 * (pair + pair.T).sum(axis=1))
    quadratic = 4.0 * w2 * pair
    return BqpProblem(n=n, constant=constant, linear=linear, quadratic=quadratic)


def bqp_value(problem, x):
    """Objective value at one point."""
    x = validate_point(x, problem.n).astype(np.float64)
    return float(problem.constant + problem.linear @ x + x @ problem.quadratic @ x)


def bqp_values(problem, points):
    """Objective values at a batch of points (rows)."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    return (problem.constant + pts @ problem.linear
            + np.einsum("ij,ij->i", pts @ problem.quadratic, pts))


def theta_objective(theta, basis, points):
    """theta . features(x) for a batch of points; any basis order."""
    return feature_matrix(points, basis) @ np.asarray(theta, dtype=np.float64)


def split_posneg(problem):
    """Split the pairwise matrix into its nonnegative and nonpositive parts."""
    q = problem.quadratic
    return np.where(q > 0.0, q, 0.0), np.where(q < 0.0, q, 0.0)


def relax(problem, gamma):
    """Lower-bound positive pairwise terms by gamma-weighted linear terms.

    Uses x_i*x_j >= g*(x_i + x_j - 1) for g in [0, 1]; each positive term
    contributes g*A_ij to both endpoint linear coefficients and -g*A_ij to
    the constant.  The result under-estimates the original at every point.
    """
    a_pos, a_neg = split_posneg(problem)
    gamma = np.asarray(gamma, dtype=np.float64)
    if gamma.shape != a_pos.shape:
        raise ConfigurationError("gamma shape does not match quadratic matrix")
    support = a_pos > 0.0
    if np.any(gamma[support] < 0.0) or np.any(gamma[support] > 1.0):
        raise ConfigurationError("relaxation parameters must lie in [0, 1]")
    weighted = a_pos * gamma
    constant = problem.constant - weighted.sum()
    linear = problem.linear + weighted.sum(axis=1) + weighted.sum(axis=0)
    return SubmodularQuadratic(constant=float(constant), linear=linear,
                               quadratic=a_neg)


def _submodular_value(quad, x):
    x = np.asarray(x, dtype=np.float64)
    return float(quad.constant + quad.linear @ x + x @ quad.quadratic @ x)


def graphcut_minimize(quad, eps=1e-12):
    """Exact global minimum of a submodular quadratic via s-t min cut.

    Each pairwise term w*x_i*x_j (w <= 0) is rewritten as w*x_j plus a
    penalty (-w)(1-x_i)x_j, i.e. an arc j->i with capacity -w under the
    convention that x = 1 means source side.  Accumulated unary coefficients
    become terminal arcs.  Among all minimizers, the returned point is the
    componentwise-minimal one (residual reachability from the source), which
    is also the one with the lowest integer encoding.
    """
    if not isinstance(quad, SubmodularQuadratic):
        quad = SubmodularQuadratic(quad.constant, quad.linear, quad.quadratic)
    if np.any(quad.quadratic > 0.0):
        raise NonSubmodularError("pairwise coefficients must all be <= 0")
    n = quad.n
    source, sink = n, n + 1
    unary = quad.linear + quad.quadratic.sum(axis=0)

    tails, heads, caps = [], [], []
    rows, cols = np.nonzero(quad.quadratic < 0.0)
    for i, j in zip(rows.tolist(), cols.tolist()):
        tails.append(j)
        heads.append(i)
        caps.append(-quad.quadratic[i, j])
    for j in range(n):
        if unary[j] > 0.0:
            tails.append(j)
            heads.append(sink)
            caps.append(unary[j])
        elif unary[j] < 0.0:
            tails.append(source)
            heads.append(j)
            caps.append(-unary[j])

    network = FlowNetwork.build(n + 2, tails, heads, caps, source, sink)
    _, side = network.mincut_source_side(eps)
    x = side[:n].astype(np.int8)
    return x, _submodular_value(quad, x)


def _greedy_polish(problem, x):
    """Steepest single-bit descent on the quadratic itself (no black box)."""
    x = x.astype(np.int8, copy=True)
    sym = problem.quadratic + problem.quadratic.T
    while True:
        deltas = (1.0 - 2.0 * x) * (problem.linear + sym @ x)
        i = int(np.argmin(deltas))
        if deltas[i] >= 0.0:
            return x, bqp_value(problem, x)
        x[i] ^= 1


def submodular_relaxation_solve(problem, iterations=5, step=0.2, rng_seed=None):
    """Minimize a general BQP by iterated submodular relaxation.

    Relaxation parameters start at 0.5 on the positive support and follow
    projected supergradient steps of size step/sqrt(t).  Each relaxed
    minimizer is polished by greedy bit flips on the true quadratic (the cut
    alone yields a thin solution family on densely coupled problems) and
    scored, so the returned point never degrades across iterations.
    ``rng_seed`` is accepted for interface uniformity with the other solvers;
    the method is deterministic.

    Returns (best_x, best_value, RelaxationState).
    """
    if iterations < 1:
        raise ConfigurationError(f"iterations must be >= 1, got {iterations}")
    a_pos, _ = split_posneg(problem)
    support = a_pos > 0.0

    if not support.any():
        sub = SubmodularQuadratic(problem.constant, problem.linear,
                                  problem.quadratic)
        x, value = graphcut_minimize(sub)
        state = RelaxationState(gamma=np.zeros_like(a_pos), step_size=step,
                                best_x=x, best_value=value,
                                bound_trace=[value])
        return x, value, state

    gamma = np.where(support, 0.5, 0.0)
    best_x = None
    best_value = np.inf
    bounds = []
    for t in range(1, iterations + 1):
        x_t, bound = graphcut_minimize(relax(problem, gamma))
        bounds.append(bound)
        x_p, value = _greedy_polish(problem, x_t)
        if value < best_value:
            best_value = value
            best_x = x_p
        grad = a_pos * (x_t[:, None] + x_t[None, :] - 1.0)
        gamma = np.clip(gamma + (step / math.sqrt(t)) * grad, 0.0, 1.0)
        gamma[~support] = 0.0
    state = RelaxationState(gamma=gamma, step_size=step, best_x=best_x,
                            best_value=best_value, bound_trace=bounds)
    return best_x, best_value, state


def brute_force_minimize(problem, max_dim=22):
    """Exhaustive minimum; ties go to the lowest integer encoding.

    Refuses dimensions above ``max_dim`` (2^n candidate points).
    """
    if problem.n > max_dim:
        raise ConfigurationError(
            f"exhaustive search capped at {max_dim} dimensions, got {problem.n}")
    code, value = _kernels.bqp_scan(
        float(problem.constant),
        np.ascontiguousarray(problem.linear),
        np.ascontiguousarray(problem.quadratic),
    )
    shifts = np.arange(problem.n - 1, -1, -1, dtype=np.int64)
    x = ((code >> shifts) & 1).astype(np.int8)
    return x, float(value)


def local_search_minimize(theta, basis, restarts=20, rng_seed=None):
    """Greedy single-bit-flip descent on theta . features(x), restarted.

    Works for any basis order.  From each seeded random start the bit whose
    flip most decreases the objective is flipped until no flip improves;
    the best endpoint across restarts wins (earliest on exact ties).
    """
    if restarts < 1:
        raise ConfigurationError(f"restarts must be >= 1, got {restarts}")
    theta = np.asarray(theta, dtype=np.float64)
    if theta.shape != (basis.size,):
        raise ConfigurationError(
            f"theta length {theta.shape} does not match basis size {basis.size}")
    rng = np.random.default_rng(rng_seed)
    mask = basis.mask.astype(np.float64)
    best_x = None
    best_value = np.inf
    for _ in range(restarts):
        x = rng.integers(0, 2, size=basis.n).astype(np.int8)
        # per-feature contributions; flips only change their signs
        contrib = theta * mercer_features(x, basis)
        while True:
            deltas = -2.0 * (contrib @ mask)
            i = int(np.argmin(deltas))
            if deltas[i] >= 0.0:
                break
            x[i] ^= 1
            contrib = contrib * (1.0 - 2.0 * mask[:, i])
        value = float(contrib.sum())
        if value < best_value:
            best_value = value
            best_x = x.copy()
    return best_x, best_value
