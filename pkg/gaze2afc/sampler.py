"""
sampler.py

No-U-Turn Hamiltonian Monte Carlo with dual-averaging step size adaptation
and a diagonal mass matrix estimated during warm-up.

The sampler only needs a function returning the log density and its
gradient, so it serves the logistic regressions as well as any other
smooth target.
"""

import dataclasses
import logging
import typing

import numpy as np

from gaze2afc.parallel import parallel_map

logger = logging.getLogger(__name__)

LogDensity = typing.Callable[[np.ndarray], tuple[float, np.ndarray]]

# Energy error beyond which a trajectory counts as divergent.
MAX_ENERGY_ERROR = 1000.0


@dataclasses.dataclass
class _State:
    theta: np.ndarray
    r: np.ndarray
    grad: np.ndarray
    logp: float


@dataclasses.dataclass
class _Tree:
    minus: _State
    plus: _State
    proposal: _State
    n_valid: int
    keep_going: bool
    sum_accept: float
    n_steps: int
    divergent: bool


@dataclasses.dataclass(frozen=True, eq=False)
class ChainResult:
    draws: np.ndarray
    log_density: np.ndarray
    divergent: np.ndarray
    tree_depth: np.ndarray
    accept_stat: np.ndarray
    step_size: float
    inv_metric: np.ndarray


class _DualAveraging:
    """Step size adaptation towards a target mean acceptance statistic."""

    gamma = 0.05
    t0 = 10.0
    kappa = 0.75

    def __init__(self, step_size: float, target_accept: float):
        self.target_accept = target_accept
        self.restart(step_size)

    def restart(self, step_size: float) -> None:
        self.mu = np.log(10 * step_size)
        self.h_bar = 0.0
        self.log_step_bar = 0.0
        self.m = 0

    def update(self, accept_stat: float) -> float:
        self.m += 1
        eta = 1 / (self.m + self.t0)
        self.h_bar = (1 - eta) * self.h_bar + eta * (self.target_accept - accept_stat)
        log_step = self.mu - np.sqrt(self.m) / self.gamma * self.h_bar
        weight = self.m ** (-self.kappa)
        self.log_step_bar = weight * log_step + (1 - weight) * self.log_step_bar
        return float(np.exp(log_step))

    @property
    def final_step_size(self) -> float:
        return float(np.exp(self.log_step_bar))


class NoUTurnSampler:
    """One chain of the No-U-Turn sampler.

    Attributes:
        - log_density (LogDensity): Returns (log density, gradient) at a point.
        - dim (int): Number of parameters.
        - target_accept (float): Target of the dual averaging.
        - max_tree_depth (int): Trajectories stop after 2**max_tree_depth steps.
        - rng (np.random.Generator): The chain's random stream.
    """

    def __init__(
        self,
        log_density: LogDensity,
        dim: int,
        *,
        rng: np.random.Generator,
        target_accept: float = 0.8,
        max_tree_depth: int = 10,
    ):
        self.log_density = log_density
        self.dim = dim
        self.rng = rng
        self.target_accept = target_accept
        self.max_tree_depth = max_tree_depth
        self.inv_metric = np.ones(dim)

    def _state(self, theta: np.ndarray, r: np.ndarray) -> _State:
        logp, grad = self.log_density(theta)
        return _State(theta, r, np.asarray(grad, dtype=float), float(logp))

    def _kinetic(self, r: np.ndarray) -> float:
        return 0.5 * float(np.dot(r * self.inv_metric, r))

    def _leapfrog(self, state: _State, step: float) -> _State:
        r = state.r + 0.5 * step * state.grad
        theta = state.theta + step * self.inv_metric * r
        logp, grad = self.log_density(theta)
        grad = np.asarray(grad, dtype=float)
        r = r + 0.5 * step * grad
        return _State(theta, r, grad, float(logp))

    def _joint(self, state: _State) -> float:
        joint = state.logp - self._kinetic(state.r)
        return joint if np.isfinite(joint) else -np.inf

    def _no_u_turn(self, minus: _State, plus: _State) -> bool:
        span = plus.theta - minus.theta
        return (
            np.dot(span, self.inv_metric * minus.r) >= 0
            and np.dot(span, self.inv_metric * plus.r) >= 0
        )

    def _momentum(self) -> np.ndarray:
        return self.rng.standard_normal(self.dim) / np.sqrt(self.inv_metric)

    def find_reasonable_step_size(self, theta: np.ndarray) -> float:
        """Double or halve the step until one leapfrog step crosses acceptance 1/2."""

        step = 1.0
        state = self._state(theta, self._momentum())
        joint0 = self._joint(state)

        def log_ratio(step):
            return self._joint(self._leapfrog(state, step)) - joint0

        direction = 1 if log_ratio(step) > np.log(0.5) else -1
        for _ in range(100):
            ratio = log_ratio(step)
            if not np.isfinite(ratio):
                if direction == 1:
                    break
            elif direction * ratio <= direction * np.log(0.5):
                break
            step *= 2.0**direction
        return step

    def _build_tree(
        self, state: _State, log_u: float, direction: int, depth: int, step: float, joint0: float
    ) -> _Tree:
        if depth == 0:
            new = self._leapfrog(state, direction * step)
            joint = self._joint(new)
            keep_going = log_u < joint + MAX_ENERGY_ERROR
            return _Tree(
                minus=new,
                plus=new,
                proposal=new,
                n_valid=int(log_u <= joint),
                keep_going=keep_going,
                sum_accept=float(min(1.0, np.exp(joint - joint0))) if np.isfinite(joint) else 0.0,
                n_steps=1,
                divergent=not keep_going,
            )

        tree = self._build_tree(state, log_u, direction, depth - 1, step, joint0)
        if not tree.keep_going:
            return tree
        if direction == -1:
            other = self._build_tree(tree.minus, log_u, direction, depth - 1, step, joint0)
            tree.minus = other.minus
        else:
            other = self._build_tree(tree.plus, log_u, direction, depth - 1, step, joint0)
            tree.plus = other.plus

        total = tree.n_valid + other.n_valid
        if total > 0 and self.rng.uniform() < other.n_valid / total:
            tree.proposal = other.proposal
        tree.n_valid = total
        tree.keep_going = other.keep_going and self._no_u_turn(tree.minus, tree.plus)
        tree.sum_accept += other.sum_accept
        tree.n_steps += other.n_steps
        tree.divergent = tree.divergent or other.divergent
        return tree

    def transition(self, current: _State, step: float) -> tuple[_State, float, int, bool]:
        """One NUTS iteration.

        Returns:
            tuple: The next state, the acceptance statistic, the tree depth
            and whether the trajectory diverged.
        """

        current = _State(current.theta, self._momentum(), current.grad, current.logp)
        joint0 = self._joint(current)
        log_u = joint0 - self.rng.exponential()

        minus = plus = proposal = current
        n_valid, depth = 1, 0
        keep_going, divergent = True, False
        sum_accept, n_steps = 0.0, 0
        while keep_going and depth < self.max_tree_depth:
            direction = -1 if self.rng.uniform() < 0.5 else 1
            start = minus if direction == -1 else plus
            tree = self._build_tree(start, log_u, direction, depth, step, joint0)
            if direction == -1:
                minus = tree.minus
            else:
                plus = tree.plus
            if tree.keep_going and self.rng.uniform() < tree.n_valid / n_valid:
                proposal = tree.proposal
            n_valid += tree.n_valid
            sum_accept += tree.sum_accept
            n_steps += tree.n_steps
            divergent = divergent or tree.divergent
            keep_going = tree.keep_going and self._no_u_turn(minus, plus)
            depth += 1
        return proposal, sum_accept / max(n_steps, 1), depth, divergent

    def _metric_windows(self, warmup: int) -> tuple[int, int]:
        """The warm-up iterations bounding the mass matrix window, or (0, 0)."""

        if warmup < 150:
            return 0, 0
        return int(0.15 * warmup), int(0.75 * warmup)

    def run(self, initial: np.ndarray, draws: int, warmup: int) -> ChainResult:
        state = self._state(np.asarray(initial, dtype=float), np.zeros(self.dim))
        if not np.isfinite(state.logp):
            raise FloatingPointError("initial point has non-finite log density")
        step = self.find_reasonable_step_size(state.theta)
        adaptation = _DualAveraging(step, self.target_accept)
        window_start, window_end = self._metric_windows(warmup)
        window = []

        samples = np.empty((draws, self.dim))
        log_density = np.empty(draws)
        divergent = np.zeros(draws, dtype=bool)
        tree_depth = np.zeros(draws, dtype=int)
        accept = np.zeros(draws)

        for iteration in range(warmup + draws):
            state, accept_stat, depth, diverged = self.transition(state, step)
            if iteration < warmup:
                step = adaptation.update(accept_stat)
                if window_start <= iteration < window_end:
                    window.append(state.theta)
                if iteration + 1 == window_end and len(window) > 10:
                    self.inv_metric = _regularized_variance(np.array(window))
                    step = self.find_reasonable_step_size(state.theta)
                    adaptation.restart(step)
                if iteration + 1 == warmup:
                    step = adaptation.final_step_size
                continue
            index = iteration - warmup
            samples[index] = state.theta
            log_density[index] = state.logp
            divergent[index] = diverged
            tree_depth[index] = depth
            accept[index] = accept_stat

        return ChainResult(
            samples, log_density, divergent, tree_depth, accept, step, self.inv_metric.copy()
        )


def _regularized_variance(window: np.ndarray) -> np.ndarray:
    n = len(window)
    variance = window.var(axis=0, ddof=1)
    return (n / (n + 5.0)) * variance + 1e-3 * (5.0 / (n + 5.0))


def _run_chain(job) -> ChainResult:
    log_density, dim, start, rng, draws, warmup, target_accept, max_tree_depth, chain = job
    sampler = NoUTurnSampler(
        log_density,
        dim,
        rng=rng,
        target_accept=target_accept,
        max_tree_depth=max_tree_depth,
    )
    result = sampler.run(start, draws, warmup)
    logger.debug(
        "Chain %d: step size %.3g, mean tree depth %.2f, %d divergent",
        chain,
        result.step_size,
        result.tree_depth.mean() if draws else 0.0,
        int(result.divergent.sum()),
    )
    return result


def sample(
    log_density: LogDensity,
    dim: int,
    *,
    chains: int = 4,
    draws: int = 1000,
    warmup: int = 1000,
    seed: int = 0,
    target_accept: float = 0.8,
    max_tree_depth: int = 10,
    initial: np.ndarray | None = None,
    workers: int = 1,
) -> list[ChainResult]:
    """Run independent NUTS chains with random streams spawned from one seed.

    Chains start from uniform(-2, 2) draws unless `initial` (chains, dim)
    is given. With `workers > 1` the chains run in a process pool and
    `log_density` must be picklable. Results come back in chain order, so
    identical seeds give identical draws whatever the number of workers.
    """

    streams = [np.random.default_rng(child) for child in np.random.SeedSequence(seed).spawn(chains)]
    jobs = []
    for chain, rng in enumerate(streams):
        start = rng.uniform(-2, 2, size=dim) if initial is None else np.asarray(initial)[chain]
        jobs.append(
            (log_density, dim, start, rng, draws, warmup, target_accept, max_tree_depth, chain)
        )
    return parallel_map(_run_chain, jobs, workers)
