"""Built-in example problems.

``doyle`` is the classic fragile-LQG benchmark: a double-integrator-like
unstable plant (both poles at exp(0.1)) discretized from continuous time
with a zero-order hold at 0.1 s. The discretization has a closed form,
which is used here at full precision; the commonly quoted 4-digit
matrices are its rounded rendering. ``flexible`` is a rigid-body plus
lightly damped flexible-mode model discretized at 0.09 s, quoted
directly in its discrete form.

Each preset bundles the plant, the policy form used to search it, the
initialization hypercube and desk-scale search budgets.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .policies import PolicyForm, companion2, ctrb_canonical
from .systems import PlantModel
from .training import Hypercube

__all__ = ["Preset", "doyle", "flexible", "get_preset", "PRESET_NAMES"]


@dataclass(frozen=True)
class Preset:
    name: str
    plant: PlantModel
    form: PolicyForm
    hypercube: Hypercube
    n_init: int
    n_steps: int


def doyle() -> Preset:
    # Zero-order-hold discretization (T = 0.1) of the continuous plant
    #   xdot = [[1, 1], [0, 1]] x + [0, 1]' u + [1, 1]' w
    # evaluated in closed form: A = e^T [[1, T], [0, 1]],
    # B = [1 - (1 - T) e^T, e^T - 1]', B_w = [T e^T, e^T - 1]'.
    eT = np.exp(0.1)
    A = eT * np.array([[1.0, 0.1], [0.0, 1.0]])
    B = np.array([[1.0 - 0.9 * eT], [eT - 1.0]])
    B_w = np.array([[0.1 * eT], [eT - 1.0]])
    plant = PlantModel(
        A=A, B=B, B_w=B_w,
        C=np.array([[1.0, 0.0]]),
        Q=1e3 * np.ones((2, 2)),
        R=np.array([[1.0]]),
        W=np.array([[1e3]]),
        V=np.array([[1.0]]),
    )
    cube = Hypercube(lower=[-0.2, -0.2, -40.0, 0.0], upper=[0.0, 0.0, 0.0, 40.0])
    return Preset(name="doyle", plant=plant, form=companion2(), hypercube=cube,
                  n_init=500, n_steps=100)


def flexible() -> Preset:
    plant = PlantModel(
        A=np.array([
            [0.9139, 0.0, 0.0, 0.0823],
            [0.0, 0.6238, 0.0776, 0.0],
            [0.0, -7.7632, 0.6083, 0.0],
            [0.0, 0.0, 0.0, 0.9139],
        ]),
        B=np.array([[0.0861], [0.3762], [7.7632], [0.0]]),
        B_w=np.array([[0.0017], [0.0], [0.0], [0.0387]]),
        C=np.array([[1.0, 10.0, 0.0, 1.0]]),
        Q=np.diag([4.0, 0.0, 0.0, 0.0]),
        R=np.array([[1.0]]),
        W=np.array([[1.0]]),
        V=np.array([[0.01]]),
    )
    cube = Hypercube(lower=[0.0, -2.0, 0.0, -0.1, 0.0, -0.3],
                     upper=[1.0, 0.0, 2.0, 0.0, 0.3, 0.0])
    return Preset(name="flexible", plant=plant, form=ctrb_canonical(3),
                  hypercube=cube, n_init=500, n_steps=1000)


PRESET_NAMES = ("doyle", "flexible")


def get_preset(name: str) -> Preset:
    if name == "doyle":
        return doyle()
    if name == "flexible":
        return flexible()
    raise KeyError(f"unknown preset {name!r}; available: {', '.join(PRESET_NAMES)}")
