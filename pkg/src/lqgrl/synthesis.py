"""Model-based LQG baseline: optimal gains, achieved cost, and conversion
of second-order controllers into companion-form policy coordinates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotRepresentable, UnstableLoop
from .solvers import is_schur_stable, solve_dare, solve_dlyap
from .systems import Controller, PlantModel, interconnect

__all__ = ["LqgController", "lqg_gains", "lqg_cost", "to_companion"]


@dataclass(frozen=True)
class LqgController:
    """Optimal estimator plus state feedback in the delayed-measurement form.

    The realization is ``z[t+1] = (A - B K - L C) z[t] + L y[t]``,
    ``u[t] = -K z[t]``; there is no direct feedthrough.
    """

    K: np.ndarray
    L: np.ndarray
    plant_A: np.ndarray
    plant_B: np.ndarray
    plant_C: np.ndarray

    def realization(self) -> Controller:
        A_c = self.plant_A - self.plant_B @ self.K - self.L @ self.plant_C
        return Controller(A=A_c, B=self.L, C=-self.K)


def lqg_gains(plant: PlantModel) -> LqgController:
    """Optimal LQR gain K and Kalman gain L for the plant.

    ``K = (B' P_c B + R)^{-1} B' P_c A`` with ``P_c`` the stabilizing
    Riccati solution for (A, B, Q, R), and
    ``L = A P_e C' (C P_e C' + V)^{-1}`` with ``P_e`` the stabilizing
    Riccati solution for (A', C', B_w W B_w', V).
    """
    A, B, C = plant.A, plant.B, plant.C
    P_c = solve_dare(A, B, plant.Q, plant.R)
    K = np.linalg.solve(B.T @ P_c @ B + plant.R, B.T @ P_c @ A)
    P_e = solve_dare(A.T, C.T, plant.B_w @ plant.W @ plant.B_w.T, plant.V)
    L = A @ P_e @ C.T @ np.linalg.inv(C @ P_e @ C.T + plant.V)
    return LqgController(K=K, L=L, plant_A=A, plant_B=B, plant_C=C)


def _as_realization(controller) -> Controller:
    if isinstance(controller, Controller):
        return controller
    if isinstance(controller, LqgController):
        return controller.realization()
    raise TypeError(f"expected Controller or LqgController, got {type(controller).__name__}")


def lqg_cost(plant: PlantModel, controller) -> float:
    """Steady-state average quadratic cost of the closed loop.

    Assembles the combined system, solves the covariance Lyapunov
    equation and returns ``trace(M X)``. Raises ``UnstableLoop`` when the
    interconnection is not Schur stable.
    """
    ctrl = _as_realization(controller)
    A_bar, W_bar, M = interconnect(plant, ctrl)
    verdict = is_schur_stable(A_bar)
    if not verdict.stable:
        raise UnstableLoop(
            f"closed loop has spectral radius {verdict.spectral_radius_estimate:.6g}")
    X = solve_dlyap(A_bar, W_bar)
    return float(np.trace(M @ X))


def to_companion(controller) -> np.ndarray:
    """Companion-form parameters of a second-order SISO strictly proper controller.

    Returns ``theta`` in R^4 such that the realization
    ``A_K = [[0, t0], [1, t1]]``, ``B_K = [1, 0]'``, ``C_K = [t2, t3]``
    has the same transfer function as the input controller. Implemented
    by matching numerator and denominator coefficients: the denominator
    fixes ``t0 = -det(A_c)`` and ``t1 = trace(A_c)`` while the numerator
    is fixed by the first two Markov parameters, ``t2 = C_c B_c`` and
    ``t3 = C_c A_c B_c``.

    Raises ``NotRepresentable`` for controllers that are not second-order
    SISO strictly proper systems.
    """
    ctrl = _as_realization(controller)
    if ctrl.n_states != 2:
        raise NotRepresentable(f"controller order is {ctrl.n_states}, need 2")
    if ctrl.n_in != 1 or ctrl.n_out != 1:
        raise NotRepresentable("companion parameterization requires a SISO controller")
    if not ctrl.strictly_proper:
        raise NotRepresentable("companion parameterization has no feedthrough term")
    A_c, B_c, C_c = ctrl.A, ctrl.B, ctrl.C
    t0 = -float(np.linalg.det(A_c))
    t1 = float(np.trace(A_c))
    t2 = (C_c @ B_c).item()
    t3 = (C_c @ A_c @ B_c).item()
    return np.array([t0, t1, t2, t3])
