"""Fixed-order output-feedback policy parameterizations and closed-loop assembly.

Two canonical single-input single-output families are provided:

* ``companion2``: a second-order companion form with four parameters,
  ``A_K = [[0, t0], [1, t1]]``, ``B_K = [1, 0]'``, ``C_K = [t2, t3]``.
* ``ctrb_canonical(n)``: an order-n controllable canonical form with 2n
  parameters; the first n fill the bottom row of the shift-structured
  ``A_K``, the last n form ``C_K``, and ``B_K`` is the last unit vector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch
from .systems import Controller, PlantModel, interconnect

__all__ = ["PolicyForm", "PolicyParams", "companion2", "ctrb_canonical",
           "realize", "assemble", "ClosedLoop"]


@dataclass(frozen=True)
class PolicyForm:
    """Tag fixing the controller realization used for a parameter vector."""

    kind: str
    order: int

    def __post_init__(self):
        if self.kind not in ("companion2", "ctrb_canonical"):
            raise ValueError(f"unknown policy form {self.kind!r}")
        if self.kind == "companion2" and self.order != 2:
            raise ValueError("companion2 form is second-order")
        if self.order < 1:
            raise ValueError("policy order must be positive")

    @property
    def dim(self) -> int:
        """Length of the parameter vector."""
        return 2 * self.order


def companion2() -> PolicyForm:
    return PolicyForm(kind="companion2", order=2)


def ctrb_canonical(order: int) -> PolicyForm:
    return PolicyForm(kind="ctrb_canonical", order=order)


@dataclass(frozen=True)
class PolicyParams:
    """Parameter vector together with its realization tag."""

    theta: np.ndarray
    form: PolicyForm

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float).ravel()
        if theta.shape != (self.form.dim,):
            raise DimensionMismatch(
                f"{self.form.kind} expects {self.form.dim} parameters, got {theta.size}")
        if not np.isfinite(theta).all():
            raise ValueError("policy parameters must be finite")
        object.__setattr__(self, "theta", theta)

    def controller(self) -> Controller:
        A_K, B_K, C_K = realize(self)
        return Controller(A=A_K, B=B_K, C=C_K)


def realize(policy: PolicyParams):
    """Realization matrices (A_K, B_K, C_K) of a policy."""
    theta, form = policy.theta, policy.form
    n = form.order
    if form.kind == "companion2":
        A_K = np.array([[0.0, theta[0]], [1.0, theta[1]]])
        B_K = np.array([[1.0], [0.0]])
        C_K = theta[2:4][None, :].copy()
    else:
        A_K = np.zeros((n, n))
        A_K[np.arange(n - 1), np.arange(1, n)] = 1.0
        A_K[-1, :] = theta[:n]
        B_K = np.zeros((n, 1))
        B_K[-1, 0] = 1.0
        C_K = theta[n:][None, :].copy()
    return A_K, B_K, C_K


@dataclass(frozen=True)
class ClosedLoop:
    """Combined plant-policy system under a multiplicative input perturbation.

    ``A_bar`` is the loop state matrix with plant input scaled by
    ``1 + delta`` per channel, ``W_bar`` the injected noise covariance and
    ``M`` the per-step cost matrix; the cost penalizes the commanded
    action, not the perturbed plant input.
    """

    A_bar: np.ndarray
    W_bar: np.ndarray
    M: np.ndarray
    delta: np.ndarray

    @property
    def order(self) -> int:
        return self.A_bar.shape[0]


def assemble(plant: PlantModel, policy: PolicyParams, delta=0.0) -> ClosedLoop:
    """Closed loop of plant and policy with input perturbation ``1 + delta``.

    ``delta`` is a scalar or a length ``n_u`` vector of per-channel
    perturbations, each above -1 so every channel keeps a positive gain.
    """
    d = np.broadcast_to(np.asarray(delta, dtype=float), (plant.n_u,)).copy()
    if np.any(d <= -1.0):
        raise ValueError("perturbations must keep 1 + delta positive")
    ctrl = policy.controller()
    A_bar, W_bar, M = interconnect(plant, ctrl, gains=1.0 + d)
    return ClosedLoop(A_bar=A_bar, W_bar=W_bar, M=M, delta=d)
