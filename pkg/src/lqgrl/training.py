"""Policy search: gradient ascent with random initialization over a hypercube.

Each initialization is drawn uniformly from the hypercube and ascended
on the averaged reward. The ascent takes conjugate-gradient steps in
hypercube-scaled coordinates: parameter ranges in these problems differ
by two orders of magnitude across dimensions and the reward surface
forms narrow curved valleys, which plain normalized-gradient steps
cannot traverse in a realistic step budget. Each step maximizes the
reward along the current direction with a bracketing line search
(shrink until improving, grow while improving, golden-section polish)
and accepts only non-decreasing moves, so the reward along accepted
steps is monotone. Unstable configurations score ``-inf``: unstable
starting points are returned unchanged and never ascended.

Every initialization owns an RNG substream spawned from the master
seed, so the search is deterministic and independent of execution
order; parallel workers reproduce the sequential result exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .policies import PolicyForm
from .rewards import NEG_INF, PerturbationSpec, _LoopEvaluator, _perturbation_nodes
from .systems import PlantModel

__all__ = ["Hypercube", "StepPolicy", "TrainConfig", "AscentRecord",
           "TrainResult", "ascend", "train"]


@dataclass(frozen=True)
class Hypercube:
    """Axis-aligned box of parameter vectors used for initialization."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float).ravel()
        upper = np.asarray(self.upper, dtype=float).ravel()
        if lower.shape != upper.shape:
            raise ValueError("hypercube bounds must have equal lengths")
        if not (np.isfinite(lower).all() and np.isfinite(upper).all()):
            raise ValueError("hypercube bounds must be finite")
        if np.any(lower > upper):
            raise ValueError("hypercube lower bounds must not exceed upper bounds")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def dim(self) -> int:
        return self.lower.size

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(self.lower, self.upper)

    def scale_vector(self) -> np.ndarray:
        """Per-dimension half-widths; collapsed dimensions fall back to 1."""
        half = 0.5 * (self.upper - self.lower)
        return np.where(half > 0.0, half, 1.0)


@dataclass(frozen=True)
class StepPolicy:
    """Line-search settings for the ascent.

    ``eta`` is the initial trial step in hypercube-scaled coordinates.
    Each line search halves the trial step up to ``max_halvings`` times
    until the reward stops decreasing, then doubles it up to
    ``max_doublings`` times while the reward keeps increasing, and
    finishes with ``refine_iters`` golden-section iterations on the
    bracket. Ascent terminates early on gradient norms below
    ``min_grad_norm``, on a failed line search, or after ``patience``
    consecutive accepted steps whose relative improvement stays below
    ``improvement_rtol``.
    """

    eta: float = 0.1
    max_halvings: int = 30
    max_doublings: int = 30
    refine_iters: int = 12
    min_grad_norm: float = 1e-14
    improvement_rtol: float = 1e-9
    patience: int = 2

    def __post_init__(self):
        if self.eta <= 0:
            raise ValueError("step size eta must be positive")
        if min(self.max_halvings, self.max_doublings, self.refine_iters) < 0:
            raise ValueError("line-search iteration caps must be nonnegative")
        if self.patience < 1:
            raise ValueError("patience must be at least 1")


@dataclass(frozen=True)
class TrainConfig:
    """Search budget and randomness for gradient ascent with random starts."""

    hypercube: Hypercube
    n_init: int = 500
    n_steps: int = 100
    step: StepPolicy = field(default_factory=StepPolicy)
    perturbation: PerturbationSpec = field(default_factory=PerturbationSpec)
    seed: int = 0

    def __post_init__(self):
        if self.n_init < 1 or self.n_steps < 1:
            raise ValueError("n_init and n_steps must be at least 1")


@dataclass(frozen=True)
class AscentRecord:
    """Outcome of one initialization."""

    index: int
    theta0: np.ndarray
    theta: np.ndarray
    reward: float
    stable: bool
    steps_taken: int


@dataclass(frozen=True)
class TrainResult:
    """Best policy over all initializations plus the per-start trace."""

    theta_opt: np.ndarray
    J_opt: float
    records: tuple
    seed: int

    @property
    def found_stabilizing(self) -> bool:
        return self.J_opt > NEG_INF


class _Objective:
    """Averaged reward and gradient as plain callables over theta."""

    def __init__(self, plant: PlantModel, form: PolicyForm, spec: PerturbationSpec):
        self.ev = _LoopEvaluator(plant, form)
        if spec.b == 0.0:
            self.nodes = np.zeros(1)
            self.weights = np.ones(1)
        else:
            nodes, weights = _perturbation_nodes(plant.n_u, spec)
            self.nodes = nodes[:, 0]
            self.weights = weights

    def value(self, theta) -> float:
        values, _, stable = self.ev.eval_batch(theta, self.nodes)
        if not stable.all():
            return NEG_INF
        return float(self.weights @ values)

    def grad(self, theta):
        _, grads, stable = self.ev.eval_batch(theta, self.nodes, need_grad=True)
        if not stable.all():
            return None
        return self.weights @ grads


def _line_max(objective, theta, direction, J0, sp: StepPolicy):
    """Maximize the reward along ``theta + e * direction`` for e >= 0.

    Returns ``(e, J)`` with ``J >= J0``; ``e = 0`` signals that no
    improving step exists down to the smallest trial length.
    """

    def f(e):
        return objective.value(theta + e * direction)

    e1 = sp.eta
    J1 = f(e1)
    halvings = 0
    while J1 < J0 and halvings < sp.max_halvings:
        e1 *= 0.5
        J1 = f(e1)
        halvings += 1
    if J1 < J0:
        return 0.0, J0
    es = [0.0, e1]
    Js = [J0, J1]
    for _ in range(sp.max_doublings):
        en = es[-1] * 2.0
        Jn = f(en)
        es.append(en)
        Js.append(Jn)
        if Jn < Js[-2]:
            break
    i = int(np.argmax(Js))
    lo = es[max(i - 1, 0)]
    hi = es[min(i + 1, len(es) - 1)]
    gr = 0.5 * (np.sqrt(5.0) - 1.0)
    a, b = lo, hi
    c = b - gr * (b - a)
    d = a + gr * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(sp.refine_iters):
        if fc < fd:
            a, c, fc = c, d, fd
            d = a + gr * (b - a)
            fd = f(d)
        else:
            b, d, fd = d, c, fc
            c = b - gr * (b - a)
            fc = f(c)
    best_J, best_e = max([(Js[i], es[i]), (fc, c), (fd, d)])
    if best_J < J0 or best_e == 0.0:
        return 0.0, J0
    return best_e, best_J


def _ascend_with(objective: _Objective, theta0, config: TrainConfig, scale):
    theta = np.asarray(theta0, dtype=float).copy()
    J = objective.value(theta)
    if J == NEG_INF:
        return theta, NEG_INF, 0
    sp = config.step
    dim = theta.size
    g_prev = None
    direction = None
    steps = 0
    flat_streak = 0
    for it in range(config.n_steps):
        g = objective.grad(theta)
        if g is None:
            break
        gs = g * scale  # gradient in scaled coordinates
        if float(np.linalg.norm(gs)) < sp.min_grad_norm:
            break
        if direction is None or it % (2 * dim) == 0:
            direction = gs.copy()
        else:
            # Polak-Ribiere conjugate direction with ascent safeguard
            beta = max(0.0, float(gs @ (gs - g_prev)) / float(g_prev @ g_prev))
            direction = gs + beta * direction
            if float(direction @ gs) <= 0.0:
                direction = gs.copy()
        unit = direction / np.linalg.norm(direction)
        e, Jn = _line_max(objective, theta, scale * unit, J, sp)
        if e == 0.0:
            if g_prev is not None and not np.array_equal(direction, gs):
                # conjugate direction failed: restart from the raw gradient
                direction = None
                g_prev = None
                continue
            break
        improvement = Jn - J
        theta = theta + e * (scale * unit)
        J = Jn
        g_prev = gs
        steps += 1
        if improvement <= sp.improvement_rtol * (1.0 + abs(J)):
            flat_streak += 1
            if flat_streak >= sp.patience:
                break
        else:
            flat_streak = 0
    return theta, J, steps


def ascend(plant: PlantModel, form: PolicyForm, theta0, config: TrainConfig):
    """Ascend the averaged reward from one starting point.

    Returns ``(theta, J)``. An unstable starting point is returned
    unchanged with ``J = -inf``. Along accepted steps the reward never
    decreases, and the parameter vector is free to leave the hypercube.
    """
    objective = _Objective(plant, form, config.perturbation)
    scale = config.hypercube.scale_vector()
    theta, J, _ = _ascend_with(objective, theta0, config, scale)
    return theta, J


def _run_one(objective, config, index, seed_seq, scale):
    rng = np.random.default_rng(seed_seq)
    theta0 = config.hypercube.sample(rng)
    theta, J, steps = _ascend_with(objective, theta0, config, scale)
    return AscentRecord(index=index, theta0=theta0, theta=theta,
                        reward=J, stable=J > NEG_INF, steps_taken=steps)


def train(plant: PlantModel, form: PolicyForm, config: TrainConfig,
          n_jobs: int = 1) -> TrainResult:
    """Gradient ascent from ``n_init`` uniform draws over the hypercube.

    Deterministic for a fixed ``config.seed`` regardless of ``n_jobs``;
    ties between equal final rewards resolve to the lowest
    initialization index. When no initialization stabilizes the loop,
    the result carries ``J_opt = -inf`` and a zero parameter vector.
    """
    if config.hypercube.dim != form.dim:
        raise ValueError(
            f"hypercube dimension {config.hypercube.dim} does not match "
            f"form dimension {form.dim}")
    seeds = np.random.SeedSequence(config.seed).spawn(config.n_init)
    scale = config.hypercube.scale_vector()
    if n_jobs == 1:
        objective = _Objective(plant, form, config.perturbation)
        records = [_run_one(objective, config, i, s, scale)
                   for i, s in enumerate(seeds)]
    else:
        records = _train_parallel(plant, form, config, seeds, scale, n_jobs)
    best = None
    for rec in records:
        if best is None or rec.reward > best.reward:
            best = rec
    if best is None or not best.stable:
        theta_opt = np.zeros(form.dim)
        J_opt = NEG_INF
    else:
        theta_opt = best.theta
        J_opt = best.reward
    return TrainResult(theta_opt=theta_opt, J_opt=J_opt,
                       records=tuple(records), seed=config.seed)


def _chunk_worker(args):
    plant, form, config, scale, indexed_seeds = args
    objective = _Objective(plant, form, config.perturbation)
    return [_run_one(objective, config, i, s, scale) for i, s in indexed_seeds]


def _train_parallel(plant, form, config, seeds, scale, n_jobs):
    from concurrent.futures import ProcessPoolExecutor

    indexed = list(enumerate(seeds))
    chunks = [indexed[i::n_jobs] for i in range(n_jobs)]
    args = [(plant, form, config, scale, chunk) for chunk in chunks if chunk]
    with ProcessPoolExecutor(max_workers=n_jobs) as pool:
        parts = list(pool.map(_chunk_worker, args))
    records = [rec for part in parts for rec in part]
    records.sort(key=lambda rec: rec.index)
    return records
