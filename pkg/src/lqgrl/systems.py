"""Plant and controller containers plus closed-loop interconnection helpers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch

__all__ = ["PlantModel", "Controller", "interconnect", "loop_matrix"]

_SYM_TOL = 1e-12


def _matrix(value, rows, cols, name):
    M = np.asarray(value, dtype=float)
    if M.ndim == 1:
        if cols == 1:
            M = M[:, None]
        elif rows == 1:
            M = M[None, :]
    if M.shape != (rows, cols):
        raise DimensionMismatch(f"{name} must have shape ({rows}, {cols}), got {M.shape}")
    if not np.isfinite(M).all():
        raise ValueError(f"{name} contains non-finite entries")
    return M


def _check_symmetric(M, name):
    if not np.allclose(M, M.T, rtol=0.0, atol=_SYM_TOL * (1.0 + np.abs(M).max())):
        raise ValueError(f"{name} must be symmetric")


def _check_psd(M, name):
    _check_symmetric(M, name)
    w = np.linalg.eigvalsh(M)
    if w.min() < -1e-10 * max(1.0, abs(w.max())):
        raise ValueError(f"{name} must be positive semidefinite")


def _check_pd(M, name):
    _check_symmetric(M, name)
    try:
        np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        raise ValueError(f"{name} must be positive definite") from None


@dataclass(frozen=True)
class PlantModel:
    """Discrete-time linear-Gaussian plant with quadratic cost weights.

    Dynamics::

        x[t+1] = A x[t] + B u[t] + B_w w[t],   w ~ N(0, W)
        y[t]   = C x[t] + v[t],                v ~ N(0, V)

    with per-step cost ``x' Q x + u' R u``. Validates shape consistency,
    symmetry, Q >= 0 and R, W, V > 0 on construction.
    """

    A: np.ndarray
    B: np.ndarray
    B_w: np.ndarray
    C: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    W: np.ndarray
    V: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise DimensionMismatch(f"A must be square, got shape {A.shape}")
        n = A.shape[0]
        B = np.asarray(self.B, dtype=float)
        if B.ndim == 1:
            B = B[:, None]
        B_w = np.asarray(self.B_w, dtype=float)
        if B_w.ndim == 1:
            B_w = B_w[:, None]
        C = np.asarray(self.C, dtype=float)
        if C.ndim == 1:
            C = C[None, :]
        if B.shape[0] != n or B_w.shape[0] != n or C.shape[1] != n:
            raise DimensionMismatch(
                f"B {B.shape}, B_w {B_w.shape}, C {C.shape} inconsistent with A {A.shape}")
        n_u, n_w, n_y = B.shape[1], B_w.shape[1], C.shape[0]
        Q = _matrix(self.Q, n, n, "Q")
        R = _matrix(self.R, n_u, n_u, "R")
        W = _matrix(self.W, n_w, n_w, "W")
        V = _matrix(self.V, n_y, n_y, "V")
        for name, M in (("A", A), ("B", B), ("B_w", B_w), ("C", C)):
            if not np.isfinite(M).all():
                raise ValueError(f"{name} contains non-finite entries")
        _check_psd(Q, "Q")
        _check_pd(R, "R")
        _check_pd(W, "W")
        _check_pd(V, "V")
        for name, M in (("A", A), ("B", B), ("B_w", B_w), ("C", C),
                        ("Q", Q), ("R", R), ("W", W), ("V", V)):
            object.__setattr__(self, name, M)

    @property
    def n_x(self) -> int:
        return self.A.shape[0]

    @property
    def n_u(self) -> int:
        return self.B.shape[1]

    @property
    def n_w(self) -> int:
        return self.B_w.shape[1]

    @property
    def n_y(self) -> int:
        return self.C.shape[0]


@dataclass(frozen=True)
class Controller:
    """Discrete-time LTI output-feedback controller.

    Realizes ``z[t+1] = A z[t] + B y[t]``, ``u[t] = C z[t] + D y[t]``.
    A zero-state controller (``A`` of shape (0, 0)) with nonzero ``D``
    models static output feedback. Strictly proper controllers (D = 0)
    are the only kind used for training and cost evaluation; feedthrough
    is accepted for margin analysis of static gains.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise DimensionMismatch(f"controller A must be square, got {A.shape}")
        m = A.shape[0]
        B = np.asarray(self.B, dtype=float)
        if B.ndim == 1:
            B = B[:, None]
        C = np.asarray(self.C, dtype=float)
        if C.ndim == 1:
            C = C[None, :]
        if B.shape[0] != m or C.shape[1] != m:
            raise DimensionMismatch(
                f"controller B {B.shape}, C {C.shape} inconsistent with A {A.shape}")
        D = self.D
        if D is None:
            D = np.zeros((C.shape[0], B.shape[1]))
        D = np.asarray(D, dtype=float)
        if D.ndim == 0:
            D = np.full((C.shape[0], B.shape[1]), float(D))
        if D.shape != (C.shape[0], B.shape[1]):
            raise DimensionMismatch(f"controller D must have shape "
                                    f"({C.shape[0]}, {B.shape[1]}), got {D.shape}")
        for name, M in (("A", A), ("B", B), ("C", C), ("D", D)):
            if not np.isfinite(M).all():
                raise ValueError(f"controller {name} contains non-finite entries")
            object.__setattr__(self, name, M)

    @classmethod
    def static(cls, D) -> "Controller":
        """Static output feedback u = D y."""
        D = np.atleast_2d(np.asarray(D, dtype=float))
        n_u, n_y = D.shape
        return cls(A=np.zeros((0, 0)), B=np.zeros((0, n_y)), C=np.zeros((n_u, 0)), D=D)

    @property
    def n_states(self) -> int:
        return self.A.shape[0]

    @property
    def n_in(self) -> int:
        return self.B.shape[1]

    @property
    def n_out(self) -> int:
        return self.C.shape[0]

    @property
    def strictly_proper(self) -> bool:
        return not np.any(self.D)


def _check_io(plant: PlantModel, ctrl: Controller):
    if ctrl.n_in != plant.n_y or ctrl.n_out != plant.n_u:
        raise DimensionMismatch(
            f"controller is {ctrl.n_out}x{ctrl.n_in} but plant expects "
            f"{plant.n_u}x{plant.n_y}")


def loop_matrix(plant: PlantModel, ctrl: Controller, gains=1.0) -> np.ndarray:
    """State matrix of the plant-controller loop with per-channel input gains.

    ``gains`` multiplies the plant input channel-wise (scalar or length
    ``n_u`` vector); the commanded output of the controller is scaled
    before it enters the plant, which is where model uncertainty acts.
    """
    _check_io(plant, ctrl)
    g = np.broadcast_to(np.asarray(gains, dtype=float), (plant.n_u,))
    A, B, C = plant.A, plant.B, plant.C
    Bg = B * g  # column scaling: B @ diag(g)
    top = np.hstack([A + Bg @ ctrl.D @ C, Bg @ ctrl.C])
    bottom = np.hstack([ctrl.B @ C, ctrl.A])
    return np.vstack([top, bottom])


def interconnect(plant: PlantModel, ctrl: Controller, gains=1.0):
    """Closed-loop triple (A_bar, W_bar, M) for a strictly proper controller.

    ``A_bar`` is the loop state matrix with the given plant-input gains,
    ``W_bar = blockdiag(B_w W B_w', B_c V B_c')`` the injected noise
    covariance and ``M = blockdiag(Q, C_c' R C_c)`` the per-step cost
    matrix on the combined state. The cost penalizes the commanded input
    (before any gain perturbation).
    """
    _check_io(plant, ctrl)
    if not ctrl.strictly_proper:
        raise ValueError("cost interconnection requires a strictly proper controller")
    n, m = plant.n_x, ctrl.n_states
    A_bar = loop_matrix(plant, ctrl, gains)
    W_bar = np.zeros((n + m, n + m))
    W_bar[:n, :n] = plant.B_w @ plant.W @ plant.B_w.T
    W_bar[n:, n:] = ctrl.B @ plant.V @ ctrl.B.T
    M = np.zeros((n + m, n + m))
    M[:n, :n] = plant.Q
    M[n:, n:] = ctrl.C.T @ plant.R @ ctrl.C
    return A_bar, W_bar, M
