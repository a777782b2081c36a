"""Expected average reward of a plant-policy loop and its gradient.

The reward of a stabilizing policy is computed exactly from the
steady-state covariance: the combined closed-loop state obeys
``x[t+1] = A_bar x[t] + noise`` and the average of the per-step quadratic
cost equals ``trace(M X)`` where ``X = A_bar X A_bar' + W_bar``. The
gradient uses the adjoint pairing: with ``Y = A_bar' Y A_bar + M``,

    d/dt_k trace(M X) = trace(dM_k X) + 2 trace(dA_k X A_bar' Y),

which follows from differentiating the covariance Lyapunov equation and
tracing against the observability-form solution. Unstable loops score
``-inf`` so that a search can rank arbitrary parameter vectors.

Averaging over multiplicative input perturbations ``1 + delta`` with
``delta`` uniform on ``[-b, b]`` per channel is done with Gauss-Legendre
quadrature (tensorized for up to two channels, seeded Monte-Carlo
beyond). A rollout estimator of the same reward is provided as the
simulation-based cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import RolloutOverflow, UnstableLoop
from .policies import PolicyForm, PolicyParams, realize
from .solvers import SCHUR_BOUNDARY_TOL, _radii_batch, _smith_batch
from .systems import PlantModel

__all__ = ["RewardEval", "PerturbationSpec", "McEstimate",
           "exact_reward", "exact_gradient", "averaged_reward", "mc_reward"]

NEG_INF = float("-inf")
# State-norm limit past which a rollout is declared divergent.
ROLLOUT_DIVERGENCE_LIMIT = 1e12


@dataclass(frozen=True)
class RewardEval:
    """Reward value (negative cost), stability flag and optional gradient.

    ``stable`` False implies ``value == -inf`` and no gradient.
    """

    value: float
    stable: bool
    gradient: np.ndarray | None = None


@dataclass(frozen=True)
class PerturbationSpec:
    """Input-perturbation averaging settings.

    ``b`` is the per-channel half-width of the uniform perturbation,
    ``quadrature_order`` the (odd) Gauss-Legendre order per channel and
    ``mc_fallback_samples`` the sample count used with more than two
    input channels, drawn with the fixed ``mc_fallback_seed``.
    """

    b: float = 0.0
    quadrature_order: int = 7
    mc_fallback_samples: int = 256
    mc_fallback_seed: int = 20177

    def __post_init__(self):
        if self.b < 0:
            raise ValueError("perturbation level b must be nonnegative")
        if self.b >= 1.0:
            raise ValueError("perturbation level b must stay below 1 so gains stay positive")
        if self.quadrature_order < 1 or self.quadrature_order % 2 == 0:
            raise ValueError("quadrature_order must be odd and at least 1")
        if self.mc_fallback_samples < 1:
            raise ValueError("mc_fallback_samples must be positive")


@dataclass(frozen=True)
class McEstimate:
    """Sample mean of the rollout reward and its standard error."""

    mean: float
    stderr: float
    episodes: int
    horizon: int


class _LoopEvaluator:
    """Precomputed closed-loop structure for fast repeated evaluation.

    Specializes a (plant, form) pair: the constant blocks of the combined
    state matrix, the noise covariance and the index maps from parameter
    components into the state matrix are built once. ``eval_batch`` then
    scores one parameter vector at many perturbation values with batched
    eigenvalue and Lyapunov solves.
    """

    def __init__(self, plant: PlantModel, form: PolicyForm):
        if plant.n_u != 1 or plant.n_y != 1:
            raise ValueError("policy forms are single-input single-output")
        self.plant = plant
        self.form = form
        nx, nk = plant.n_x, form.order
        self.nx, self.nk = nx, nk
        n = nx + nk
        self.n = n
        probe = PolicyParams(theta=np.zeros(form.dim), form=form)
        A_K0, B_K, _ = realize(probe)
        self.base = np.zeros((n, n))
        self.base[:nx, :nx] = plant.A
        self.base[nx:, :nx] = B_K @ plant.C
        self.base[nx:, nx:] = A_K0  # constant shift structure; theta slots stay zero
        self.W_bar = np.zeros((n, n))
        self.W_bar[:nx, :nx] = plant.B_w @ plant.W @ plant.B_w.T
        self.W_bar[nx:, nx:] = B_K @ plant.V @ B_K.T
        self.B_col = plant.B[:, 0]
        self.R00 = plant.R[0, 0]
        self.Q = plant.Q
        # global (row, col) positions of the A_K parameter entries
        if form.kind == "companion2":
            self.ak_rows = np.array([nx + 0, nx + 1])
            self.ak_cols = np.array([nx + 1, nx + 1])
        else:
            self.ak_rows = np.full(nk, nx + nk - 1)
            self.ak_cols = nx + np.arange(nk)

    def _assemble(self, theta, deltas):
        nx, nk, n = self.nx, self.nk, self.n
        theta_a, theta_c = theta[:len(self.ak_rows)], theta[len(self.ak_rows):]
        base = self.base.copy()
        base[self.ak_rows, self.ak_cols] = theta_a
        outer = np.outer(self.B_col, theta_c)
        stack = np.broadcast_to(base, (len(deltas), n, n)).copy()
        stack[:, :nx, nx:] = (1.0 + deltas)[:, None, None] * outer
        return stack, theta_c

    def eval_batch(self, theta, deltas, need_grad=False):
        """Rewards (and gradients) of one theta at several perturbations.

        Returns ``(values, grads, stable)`` over the batch of deltas.
        Gradient rows are only meaningful where ``stable`` is True; when
        ``need_grad`` is False, ``grads`` is None.
        """
        theta = np.asarray(theta, dtype=float)
        deltas = np.atleast_1d(np.asarray(deltas, dtype=float))
        k = len(deltas)
        nx, n = self.nx, self.n
        stack, theta_c = self._assemble(theta, deltas)
        radii = _radii_batch(stack)
        stable = radii < 1.0 - SCHUR_BOUNDARY_TOL
        values = np.full(k, NEG_INF)
        grads = np.zeros((k, len(theta))) if need_grad else None
        if not stable.any():
            return values, grads, stable

        As = stack[stable]
        ks = As.shape[0]
        M = np.zeros((n, n))
        M[:nx, :nx] = self.Q
        M[nx:, nx:] = self.R00 * np.outer(theta_c, theta_c)
        if need_grad:
            # covariance and observability solves share the doubling schedule
            A_both = np.concatenate([As, np.swapaxes(As, -1, -2)], axis=0)
            W_both = np.concatenate(
                [np.broadcast_to(self.W_bar, As.shape),
                 np.broadcast_to(M, As.shape)], axis=0)
            XY, ok = _smith_batch(A_both, W_both)
            X, Y = XY[:ks], XY[ks:]
            ok = ok[:ks] & ok[ks:]
        else:
            X, ok = _smith_batch(As, np.broadcast_to(self.W_bar, As.shape))
            Y = None
        vals = np.where(ok, -np.einsum("kij,ij->k", X, M), NEG_INF)
        # near-boundary loops whose solve failed count as unstable
        sub_stable = ok
        values[stable] = vals
        full_stable = stable.copy()
        full_stable[stable] = sub_stable
        if need_grad:
            P = X @ np.swapaxes(As, -1, -2) @ Y  # X A' Y per batch entry
            gc = np.empty((ks, len(theta)))
            na = len(self.ak_rows)
            # A_K entries: d(trace(MX))/dt = 2 P[col, row]
            gc[:, :na] = 2.0 * P[:, self.ak_cols, self.ak_rows]
            # C_K entries: loop block plus the cost-matrix dependence
            scale = (1.0 + deltas[stable])[:, None]
            gc[:, na:] = 2.0 * scale * (P[:, nx:, :nx] @ self.B_col)
            X_zz = X[:, nx:, nx:]
            gc[:, na:] += 2.0 * self.R00 * (X_zz @ theta_c)
            vg = np.zeros((ks, len(theta)))
            vg[sub_stable] = -gc[sub_stable]
            grads[stable] = vg
        return values, grads, full_stable


def _evaluator(plant, policy) -> _LoopEvaluator:
    return _LoopEvaluator(plant, policy.form)


def _as_delta(plant, delta):
    d = np.broadcast_to(np.asarray(delta, dtype=float), (plant.n_u,))
    if np.any(d <= -1.0):
        raise ValueError("perturbations must keep 1 + delta positive")
    return d


def exact_reward(plant: PlantModel, policy: PolicyParams, delta=0.0) -> RewardEval:
    """Exact expected average reward of the loop at a fixed perturbation.

    Returns ``-trace(M X)`` when the perturbed loop is Schur stable and
    the ``-inf`` sentinel otherwise; instability is an in-band outcome,
    not an error, so arbitrary parameter vectors can be scored.
    """
    d = _as_delta(plant, delta)
    ev = _evaluator(plant, policy)
    values, _, stable = ev.eval_batch(policy.theta, d[:1])
    if not stable[0]:
        return RewardEval(value=NEG_INF, stable=False)
    return RewardEval(value=float(values[0]), stable=True)


def exact_gradient(plant: PlantModel, policy: PolicyParams, delta=0.0) -> np.ndarray:
    """Gradient of the exact reward with respect to the policy parameters.

    Requires a stable perturbed loop; raises ``UnstableLoop`` otherwise.
    """
    d = _as_delta(plant, delta)
    ev = _evaluator(plant, policy)
    values, grads, stable = ev.eval_batch(policy.theta, d[:1], need_grad=True)
    if not stable[0]:
        raise UnstableLoop("cannot differentiate the reward of an unstable loop")
    return grads[0].copy()


def _perturbation_nodes(n_u: int, spec: PerturbationSpec):
    """Perturbation nodes (k, n_u) and weights (k,) for the expectation."""
    x, w = np.polynomial.legendre.leggauss(spec.quadrature_order)
    nodes1 = spec.b * x
    weights1 = 0.5 * w  # uniform density on [-b, b]
    if n_u == 1:
        return nodes1[:, None], weights1
    if n_u == 2:
        d1, d2 = np.meshgrid(nodes1, nodes1, indexing="ij")
        nodes = np.column_stack([d1.ravel(), d2.ravel()])
        weights = np.outer(weights1, weights1).ravel()
        return nodes, weights
    rng = np.random.default_rng(spec.mc_fallback_seed)
    nodes = rng.uniform(-spec.b, spec.b, size=(spec.mc_fallback_samples, n_u))
    weights = np.full(spec.mc_fallback_samples, 1.0 / spec.mc_fallback_samples)
    return nodes, weights


def averaged_reward(plant: PlantModel, policy: PolicyParams,
                    spec: PerturbationSpec, with_gradient: bool = False) -> RewardEval:
    """Expected reward over input perturbations uniform on [-b, b] per channel.

    Quadrature nodes are deterministic, so the averaged objective is a
    reproducible function of the policy. If any node destabilizes the
    loop the result is the ``-inf`` sentinel. With ``b = 0`` this reduces
    to ``exact_reward`` exactly.
    """
    if spec.b == 0.0:
        out = exact_reward(plant, policy, 0.0)
        if with_gradient and out.stable:
            return RewardEval(value=out.value, stable=True,
                              gradient=exact_gradient(plant, policy, 0.0))
        return out
    ev = _evaluator(plant, policy)
    nodes, weights = _perturbation_nodes(plant.n_u, spec)
    values, grads, stable = ev.eval_batch(policy.theta, nodes[:, 0], need_grad=with_gradient)
    if not stable.all():
        return RewardEval(value=NEG_INF, stable=False)
    value = float(weights @ values)
    if with_gradient:
        return RewardEval(value=value, stable=True, gradient=weights @ grads)
    return RewardEval(value=value, stable=True)


def mc_reward(plant: PlantModel, policy: PolicyParams, delta=0.0,
              horizon: int = 100_000, episodes: int = 1, seed: int = 0) -> McEstimate:
    """Monte-Carlo estimate of the average reward from simulated rollouts.

    Simulates the noisy closed loop from a zero initial state and
    averages the per-step reward ``-(x' Q x + u' R u)`` over ``horizon``
    steps, independently for each episode. Returns the sample mean and
    the standard error across episodes; the result is deterministic for
    a fixed seed. Raises ``RolloutOverflow`` when a trajectory diverges.
    """
    if horizon < 1 or episodes < 1:
        raise ValueError("horizon and episodes must be at least 1")
    d = _as_delta(plant, delta)
    A_K, B_K, C_K = realize(policy)
    AT, BT, BwT, CT = plant.A.T, plant.B.T, plant.B_w.T, plant.C.T
    AKT, BKT, CKT = A_K.T, B_K.T, C_K.T
    Lw = np.linalg.cholesky(plant.W).T
    Lv = np.linalg.cholesky(plant.V).T
    Q, R = plant.Q, plant.R
    gain = 1.0 + d
    rng = np.random.default_rng(seed)
    x = np.zeros((episodes, plant.n_x))
    z = np.zeros((episodes, policy.form.order))
    accum = np.zeros(episodes)
    for t in range(horizon):
        w = rng.standard_normal((episodes, plant.n_w)) @ Lw
        v = rng.standard_normal((episodes, plant.n_y)) @ Lv
        u = z @ CKT
        y = x @ CT + v
        accum += np.einsum("ei,ij,ej->e", x, Q, x) + np.einsum("ei,ij,ej->e", u, R, u)
        x = x @ AT + (u * gain) @ BT + w @ BwT
        z = z @ AKT + y @ BKT
        if t % 64 == 0 and np.abs(x).max() > ROLLOUT_DIVERGENCE_LIMIT:
            raise RolloutOverflow(f"state norm exceeded {ROLLOUT_DIVERGENCE_LIMIT:g} "
                                  f"at step {t}")
    if np.abs(x).max() > ROLLOUT_DIVERGENCE_LIMIT:
        raise RolloutOverflow("state norm exceeded the divergence limit")
    rewards = -accum / horizon
    mean = float(rewards.mean())
    stderr = float(rewards.std(ddof=1) / np.sqrt(episodes)) if episodes > 1 else 0.0
    return McEstimate(mean=mean, stderr=stderr, episodes=episodes, horizon=horizon)
