"""Metropolis-Hastings and Langevin kernels over a log-density.

run_mh / run_mala produce MarkovChainTrace objects: all states including the
burn-in, per-transition acceptance flags, and per-effective-step weights
(gamma_k for the Langevin chain, 1 otherwise).  Chains are strictly
sequential; concurrency happens across chains, each owning its RngStream.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .numerics import ChainAbortError, DomainError, RngStream

_LOG_TINY = -745.0  # log of the smallest positive double


# ---------------------------------------------------------------------------
# Proposals
# ---------------------------------------------------------------------------

class Proposal:
    """Proposal kernel: a density evaluator q(x, y) and a sampler y ~ Q(x, .)."""

    kind = "abstract"
    symmetric = False
    independence = False

    def draw(self, x, rng: RngStream):
        raise NotImplementedError

    def log_q(self, x, y) -> float:
        """Log proposal density of moving from x to y."""
        raise NotImplementedError


class RandomWalkGaussian(Proposal):
    """y = x + scale * z with z standard normal; scale scalar or per-axis."""

    kind = "random-walk-gaussian"
    symmetric = True

    def __init__(self, scale, dim: int):
        scale = np.broadcast_to(np.asarray(scale, dtype=float), (dim,)).copy()
        if np.any(scale <= 0.0):
            raise DomainError("random-walk scale must be positive")
        self.scale = scale
        self.dim = dim
        self._log_norm = -np.sum(np.log(scale)) - 0.5 * dim * math.log(2.0 * math.pi)

    def draw(self, x, rng):
        return np.asarray(x, dtype=float) + self.scale * rng.normal(self.dim)

    def draw_increments(self, count, rng):
        return self.scale * rng.normal((count, self.dim))

    def log_q(self, x, y):
        z = (np.asarray(y, dtype=float) - np.asarray(x, dtype=float)) / self.scale
        return float(self._log_norm - 0.5 * np.dot(z, z))


class IndependenceGaussian(Proposal):
    """y ~ N(mean, cov) regardless of the current state."""

    kind = "independence-gaussian"
    independence = True

    def __init__(self, mean, cov):
        self.cov = cov
        self.dim = cov.dim
        self.mean = np.broadcast_to(np.asarray(mean, dtype=float), (self.dim,)).copy()
        self._log_norm = -0.5 * (self.dim * math.log(2.0 * math.pi) + cov.log_det())

    def draw(self, x, rng):
        return self.mean + self.cov.sqrt_apply(rng.normal(self.dim))

    def draw_block(self, count, rng):
        z = rng.normal((count, self.dim))
        return self.mean + z @ self.cov.chol.T

    def log_q(self, x, y):
        return self.log_q_batch(np.asarray(y, dtype=float)[None, :])[0]

    def log_q_batch(self, ys):
        z = np.linalg.solve(self.cov.chol, (ys - self.mean).T)
        return self._log_norm - 0.5 * np.sum(z * z, axis=0)


class GeneralizedGaussian(Proposal):
    """Independence proposal with per-coordinate density exp(-|u|^a / theta).

    Normalisation per coordinate is 2 theta^(1/a) Gamma(1 + 1/a); a = 2
    reduces to a normal with variance theta / 2.
    """

    kind = "generalized-gaussian"
    independence = True

    def __init__(self, alpha_q: float, theta: float, dim: int):
        if alpha_q <= 0.0 or theta <= 0.0:
            raise DomainError("alpha_q and theta must be positive")
        self.alpha_q = float(alpha_q)
        self.theta = float(theta)
        self.dim = dim
        self._log_norm = -dim * (math.log(2.0) + math.log(theta) / alpha_q
                                 + math.lgamma(1.0 + 1.0 / alpha_q))

    def draw(self, x, rng):
        return self.draw_block(1, rng)[0]

    def draw_block(self, count, rng):
        t = rng.gamma(1.0 / self.alpha_q, (count, self.dim))
        mag = (self.theta * t) ** (1.0 / self.alpha_q)
        signs = np.where(rng.uniform(size=(count, self.dim)) < 0.5, -1.0, 1.0)
        return mag * signs

    def log_q(self, x, y):
        return self.log_q_batch(np.asarray(y, dtype=float)[None, :])[0]

    def log_q_batch(self, ys):
        return self._log_norm - np.sum(np.abs(ys) ** self.alpha_q, axis=-1) / self.theta


class LangevinProposal(Proposal):
    """Gradient-informed kernel N(x + gamma grad(x), 2 gamma I)."""

    kind = "langevin"

    def __init__(self, grad_log_p, gamma: float, dim: int):
        if gamma <= 0.0:
            raise DomainError("gamma must be positive")
        self.grad_log_p = grad_log_p
        self.gamma = float(gamma)
        self.dim = dim

    def mean(self, x):
        return np.asarray(x, dtype=float) + self.gamma * np.asarray(self.grad_log_p(x))

    def draw(self, x, rng):
        return self.mean(x) + math.sqrt(2.0 * self.gamma) * rng.normal(self.dim)

    def log_q(self, x, y):
        z = np.asarray(y, dtype=float) - self.mean(x)
        return float(-0.25 * np.dot(z, z) / self.gamma
                     - 0.5 * self.dim * math.log(4.0 * math.pi * self.gamma))


# ---------------------------------------------------------------------------
# Schedules and traces
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StepSchedule:
    """Positive step sizes gamma_k, k >= 1: a constant or an explicit sequence."""

    kind: str
    value: float = 0.0
    values: tuple = ()

    @classmethod
    def constant(cls, gamma: float) -> "StepSchedule":
        if gamma <= 0.0:
            raise DomainError("gamma must be positive")
        return cls("constant", value=float(gamma))

    @classmethod
    def sequence(cls, gammas) -> "StepSchedule":
        gammas = tuple(float(g) for g in gammas)
        if not gammas or any(g <= 0.0 for g in gammas):
            raise DomainError("sequence must be nonempty with positive entries")
        return cls("sequence", values=gammas)

    def gamma(self, k: int) -> float:
        """Step size for 1-indexed step k."""
        if self.kind == "constant":
            return self.value
        if k > len(self.values):
            raise DomainError(f"schedule has {len(self.values)} steps, needs {k}")
        return self.values[k - 1]


@dataclass
class MarkovChainTrace:
    """States X_0..X_{N+n}, acceptance flags per transition, effective weights."""

    states: np.ndarray          # (N + n + 1, d)
    accepted: np.ndarray        # (N + n,) bool
    burn_in: int
    n_effective: int
    step_weights: np.ndarray    # (n,) positive
    notes: list = field(default_factory=list)

    def __post_init__(self):
        n_total = self.burn_in + self.n_effective
        if self.states.shape[0] != n_total + 1:
            raise DomainError("trace length inconsistent with burn_in + n_effective")
        if self.accepted.shape[0] != n_total:
            raise DomainError("need one acceptance flag per transition")
        if self.step_weights.shape[0] != self.n_effective:
            raise DomainError("need one weight per effective step")

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    def effective_states(self) -> np.ndarray:
        """X_{N+1}..X_{N+n}, the averaging window."""
        return self.states[self.burn_in + 1:]


def acceptance_rate(trace: MarkovChainTrace) -> float:
    """Fraction of accepted transitions inside the effective window."""
    if trace.n_effective < 1:
        raise DomainError("empty effective window")
    return float(np.mean(trace.accepted[trace.burn_in:]))


def mh_acceptance(log_p, proposal: Proposal, x, y) -> float:
    """min(1, p(y) q(y,x) / (p(x) q(x,y))), computed in log space."""
    lp_x = float(log_p(x))
    if not np.isfinite(lp_x):
        raise DomainError("log-density must be finite at the current state")
    lp_y = float(log_p(y))
    if not np.isfinite(lp_y):
        return 0.0
    log_ratio = lp_y - lp_x
    if not proposal.symmetric:
        log_ratio += proposal.log_q(y, x) - proposal.log_q(x, y)
    return math.exp(min(0.0, log_ratio))


# ---------------------------------------------------------------------------
# Chain drivers
# ---------------------------------------------------------------------------

def run_mh(log_p, proposal: Proposal, x0, burn_in: int = 5000,
           n_effective: int = 100000, rng: RngStream = None) -> MarkovChainTrace:
    """Metropolis-Hastings chain with invariant density exp(log_p).

    Args:
        log_p: log target density up to a constant; must be finite at x0.
        proposal: random-walk or independence Proposal.
        x0: starting state.
        burn_in, n_effective: discarded prefix length and averaging window.
        rng: stream owned by this chain.

    All uniforms are drawn before any proposal noise so a trace is a pure
    function of (seed, stream).  A non-finite log-density at a proposed point
    counts as a rejection; a non-finite proposal draw is rejected and noted.
    """
    if rng is None:
        raise DomainError("run_mh needs an RngStream")
    x = np.array(x0, dtype=float)
    d = x.shape[0]
    lp_x = float(log_p(x))
    if not np.isfinite(lp_x):
        raise DomainError("log-density must be finite at x0")

    total = burn_in + n_effective
    states = np.empty((total + 1, d))
    states[0] = x
    accepted = np.zeros(total, dtype=bool)
    notes = []

    log_u = np.log(np.maximum(rng.uniform(size=total), 1e-300))
    if isinstance(proposal, RandomWalkGaussian):
        increments = proposal.draw_increments(total, rng)
        proposals = None
        log_q_all = None
    elif proposal.independence:
        proposals = proposal.draw_block(total, rng)
        log_q_all = proposal.log_q_batch(proposals)
        lq_x = float(proposal.log_q(x, x))
        increments = None
    else:
        increments = None
        proposals = None
        log_q_all = None

    for k in range(total):
        if increments is not None:
            y = x + increments[k]
        elif proposals is not None:
            y = proposals[k]
        else:
            y = proposal.draw(x, rng)
        if not np.all(np.isfinite(y)):
            notes.append(f"non-finite proposal at step {k}; rejected")
            states[k + 1] = x
            continue
        lp_y = float(log_p(y))
        if increments is not None:
            log_ratio = lp_y - lp_x
        elif proposals is not None:
            # independence kernel: q(y, x) = q(x), q(x, y) = q(y)
            log_ratio = (lp_y + lq_x) - (lp_x + float(log_q_all[k]))
        else:
            log_ratio = lp_y - lp_x
            if not proposal.symmetric:
                log_ratio += proposal.log_q(y, x) - proposal.log_q(x, y)
        if np.isfinite(lp_y) and log_u[k] < log_ratio:
            x = y
            lp_x = lp_y
            if proposals is not None:
                lq_x = float(log_q_all[k])
            accepted[k] = True
        states[k + 1] = x

    return MarkovChainTrace(states, accepted, burn_in, n_effective,
                            np.ones(n_effective), notes)


def run_mala(log_p, grad_log_p, schedule: StepSchedule, x0, burn_in: int = 5000,
             n_effective: int = 100000, rng: RngStream = None) -> MarkovChainTrace:
    """Metropolis-adjusted Langevin chain.

    Proposal at step k (1-indexed): Y = X + gamma_k grad(X) + sqrt(2 gamma_k) Z
    with Z a d-dimensional standard normal; the accept step uses the
    asymmetric kernel density ratio.  Effective steps carry weight gamma_k so
    the downstream estimator can weight by gamma_k / sum(gamma).

    Raises ChainAbortError when a gradient evaluation overflows, which signals
    a target violating the Langevin preconditions.
    """
    if rng is None:
        raise DomainError("run_mala needs an RngStream")
    x = np.array(x0, dtype=float)
    d = x.shape[0]
    lp_x = float(log_p(x))
    if not np.isfinite(lp_x):
        raise DomainError("log-density must be finite at x0")
    grad_x = np.asarray(grad_log_p(x), dtype=float)
    if not np.all(np.isfinite(grad_x)):
        raise ChainAbortError("gradient not finite at x0")

    total = burn_in + n_effective
    states = np.empty((total + 1, d))
    states[0] = x
    accepted = np.zeros(total, dtype=bool)
    weights = np.empty(n_effective)
    notes = []

    log_u = np.log(np.maximum(rng.uniform(size=total), 1e-300))
    z = rng.normal((total, d))

    for k in range(total):
        gamma = schedule.gamma(k + 1)
        mean_x = x + gamma * grad_x
        y = mean_x + math.sqrt(2.0 * gamma) * z[k]
        lp_y = float(log_p(y))
        if np.isfinite(lp_y):
            grad_y = np.asarray(grad_log_p(y), dtype=float)
            if not np.all(np.isfinite(grad_y)):
                raise ChainAbortError(
                    f"gradient overflow at step {k}: target violates the "
                    "Langevin preconditions")
            mean_y = y + gamma * grad_y
            fwd = y - mean_x
            rev = x - mean_y
            log_ratio = (lp_y - lp_x
                         + (np.dot(fwd, fwd) - np.dot(rev, rev)) / (4.0 * gamma))
            if log_u[k] < log_ratio:
                x, lp_x, grad_x = y, lp_y, grad_y
                accepted[k] = True
        states[k + 1] = x
        if k >= burn_in:
            weights[k - burn_in] = gamma

    return MarkovChainTrace(states, accepted, burn_in, n_effective, weights, notes)


# ---------------------------------------------------------------------------
# Trace dump format
# ---------------------------------------------------------------------------

def dump_trace(trace: MarkovChainTrace, path, seed: int = 0) -> None:
    """Write a trace as text: header, then one state per line with its
    acceptance flag (1 for the initial state) and step weight (0 outside the
    effective window)."""
    n, d = trace.n_effective, trace.dim
    with open(path, "w", newline="\n") as fh:
        fh.write(f"# d={d} N={trace.burn_in} n={n} seed={seed}\n")
        for k, state in enumerate(trace.states):
            coords = "\t".join(f"{c:.17g}" for c in state)
            flag = 1 if k == 0 else int(trace.accepted[k - 1])
            eff = k - trace.burn_in - 1
            weight = trace.step_weights[eff] if 0 <= eff < n else 0.0
            fh.write(f"{coords}\t{flag}\t{weight:.17g}\n")


def load_trace(path) -> MarkovChainTrace:
    with open(path) as fh:
        header = fh.readline().strip()
        fields = dict(item.split("=") for item in header.lstrip("# ").split())
        d, burn_in, n = int(fields["d"]), int(fields["N"]), int(fields["n"])
        rows = [line.split("\t") for line in fh.read().splitlines() if line]
    states = np.array([[float(c) for c in row[:d]] for row in rows])
    accepted = np.array([int(row[d]) for row in rows[1:]], dtype=bool)
    weights = np.array([float(row[d + 1]) for row in rows[burn_in + 1:]])
    return MarkovChainTrace(states, accepted, burn_in, n, weights)
