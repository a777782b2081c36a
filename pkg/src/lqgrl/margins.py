"""Classical gain and phase margins and the symmetric disk margin.

The loop is broken at the plant input, where multiplicative model
uncertainty acts. With plant transfer ``G_p`` and controller transfer
``G_c`` (both SISO here), the loop gain is defined as

    L(z) = -G_c(z) G_p(z)

so the nominal characteristic equation reads ``1 + L(z) = 0`` and the
reported phase margins follow the classical convention. The symmetric
disk margin comes from ``alpha = 2 / |S - T|_inf`` with ``S = 1/(1+L)``
and ``T = 1 - S`` evaluated at the same loop point, and
``m_d = (2 + alpha)/(2 - alpha)``: the loop tolerates any complex gain
in the disk whose real-axis diameter is ``[1/m_d, m_d]``.

For plants with several inputs, margins are computed one channel at a
time (the remaining channels stay closed at unit gain).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import MarginComputationError, UnstableNominal
from .solvers import SCHUR_BOUNDARY_TOL, freq_response, spectral_radius
from .systems import Controller, PlantModel, loop_matrix

__all__ = ["MarginReport", "analyze", "gain_margin_interval", "phase_margin",
           "disk_margin", "loop_gain"]

# Frequency grid for crossover and peak searches (radians per sample).
GRID_POINTS = 10_000
OMEGA_MIN = 1e-8
# Absolute tolerance for locating gain-stability boundaries.
GAIN_BISECT_TOL = 1e-6
# Gains beyond this magnitude are reported as unbounded.
GAIN_SEARCH_LIMIT = 1e6
# Bisection tolerance (in omega) for unit-gain crossovers.
CROSSOVER_TOL = 1e-10
# Golden-section tolerance (in omega) for the |S - T| peak.
PEAK_TOL = 1e-8


@dataclass(frozen=True)
class MarginReport:
    """Stability margins of one loop channel.

    ``gain_interval`` is the largest gain interval around 1 that keeps
    the loop Schur stable (endpoints may be +-inf when unbounded),
    ``phase_margin_deg`` the minimum angular distance to -180 degrees
    over all unit-gain crossovers (+inf when the loop gain never crosses
    unit magnitude, with ``n_crossovers`` = 0 as the flag), and
    ``disk_margin`` the symmetric disk margin with its ``disk_alpha``
    parameter.
    """

    gain_interval: tuple
    phase_margin_deg: float
    n_crossovers: int
    disk_alpha: float
    disk_margin: float


def _gain_vector(plant, channel, k):
    g = np.ones(plant.n_u)
    g[channel] = k
    return g


def _stable_at(plant, ctrl, channel, k):
    A_bar = loop_matrix(plant, ctrl, gains=_gain_vector(plant, channel, k))
    return spectral_radius(A_bar) < 1.0 - SCHUR_BOUNDARY_TOL


def _require_nominal(plant, ctrl, channel):
    if not _stable_at(plant, ctrl, channel, 1.0):
        raise UnstableNominal("nominal (unit gain) closed loop is unstable")


def gain_margin_interval(plant: PlantModel, ctrl: Controller, channel: int = 0):
    """Largest gain interval around 1 preserving closed-loop stability.

    Searches outward from the nominal gain by doubling steps and locates
    each stability boundary by bisection to ``GAIN_BISECT_TOL``. An
    endpoint past ``GAIN_SEARCH_LIMIT`` in magnitude is reported infinite.
    """
    _require_nominal(plant, ctrl, channel)
    endpoints = []
    for sign in (-1.0, 1.0):
        step = GAIN_BISECT_TOL
        k = 1.0
        unbounded = False
        while _stable_at(plant, ctrl, channel, k + sign * step):
            k += sign * step
            step *= 2.0
            if abs(k) > GAIN_SEARCH_LIMIT:
                unbounded = True
                break
        if unbounded:
            endpoints.append(sign * np.inf)
            continue
        lo, hi = k, k + sign * step
        while abs(hi - lo) > GAIN_BISECT_TOL:
            mid = 0.5 * (lo + hi)
            if _stable_at(plant, ctrl, channel, mid):
                lo = mid
            else:
                hi = mid
        endpoints.append(lo)
    g_lo, g_hi = endpoints
    return float(g_lo), float(g_hi)


def _loop_state_space(plant: PlantModel, ctrl: Controller, channel: int):
    """State-space realization of the broken-loop transfer at one channel.

    All other input channels remain closed; the realization maps an
    injected signal at the broken plant input to the negated commanded
    input for that channel, so its transfer function is ``L(z)``.
    """
    n_u = plant.n_u
    A, B, C = plant.A, plant.B, plant.C
    e = np.zeros((n_u, 1))
    e[channel, 0] = 1.0
    closed = np.eye(n_u) - e @ e.T  # channels that stay closed
    A_cl = np.block([
        [A + B @ closed @ ctrl.D @ C, B @ closed @ ctrl.C],
        [ctrl.B @ C, ctrl.A],
    ])
    B_cl = np.vstack([B @ e, np.zeros((ctrl.n_states, 1))])
    C_cl = -np.hstack([e.T @ ctrl.D @ C, e.T @ ctrl.C])
    D_cl = np.zeros((1, 1))
    return A_cl, B_cl, C_cl, D_cl


def loop_gain(plant: PlantModel, ctrl: Controller, omega, channel: int = 0):
    """Loop gain L at ``omega`` (radians per sample, scalar or array)."""
    A_cl, B_cl, C_cl, D_cl = _loop_state_space(plant, ctrl, channel)
    resp = freq_response(A_cl, B_cl, C_cl, D_cl, omega)
    return resp[..., 0, 0]


def _omega_grid(points=GRID_POINTS):
    return np.logspace(np.log10(OMEGA_MIN), np.log10(np.pi), points)


def _angular_distance_deg(phase):
    d = abs(phase + np.pi) % (2.0 * np.pi)
    return np.degrees(min(d, 2.0 * np.pi - d))


def phase_margin(plant: PlantModel, ctrl: Controller, channel: int = 0,
                 grid_points: int = GRID_POINTS):
    """Minimum angular distance to -180 degrees over unit-gain crossovers.

    Crossovers of ``|L| = 1`` are bracketed on a log-spaced grid over
    (0, pi) and refined by bisection. Returns +inf when no crossover
    exists (the loop gain never reaches unit magnitude).
    """
    deg, _ = _phase_margin_impl(plant, ctrl, channel, grid_points)
    return deg


def _phase_margin_impl(plant, ctrl, channel, grid_points=GRID_POINTS):
    _require_nominal(plant, ctrl, channel)
    A_cl, B_cl, C_cl, D_cl = _loop_state_space(plant, ctrl, channel)

    def L(w):
        return freq_response(A_cl, B_cl, C_cl, D_cl, w)[..., 0, 0]

    ws = _omega_grid(grid_points)
    mags = np.abs(L(ws)) - 1.0
    best = np.inf
    count = 0
    for i in range(len(ws) - 1):
        if mags[i] == 0.0:
            crossing = ws[i]
        elif mags[i] * mags[i + 1] < 0.0:
            lo, hi = ws[i], ws[i + 1]
            f_lo = mags[i]
            while hi - lo > CROSSOVER_TOL:
                mid = 0.5 * (lo + hi)
                f_mid = abs(L(np.array([mid]))[0]) - 1.0
                if f_mid == 0.0:
                    lo = hi = mid
                elif f_mid * f_lo > 0.0:
                    lo, f_lo = mid, f_mid
                else:
                    hi = mid
            crossing = 0.5 * (lo + hi)
        else:
            continue
        count += 1
        phase = np.angle(L(np.array([crossing]))[0])
        best = min(best, _angular_distance_deg(phase))
    if count == 0:
        return np.inf, 0
    return float(best), count


def disk_margin(plant: PlantModel, ctrl: Controller, channel: int = 0,
                grid_points: int = GRID_POINTS):
    """Symmetric disk margin ``(alpha, m_d)`` of the loop channel.

    ``alpha = 2 / |S - T|_inf`` where ``S - T = (1 - L) / (1 + L)``. The
    H-infinity norm is found on the crossover grid (plus the endpoints 0
    and pi) and polished by golden-section search. The result is
    verified against direct state-space stability at real gains just
    inside ``[1/m_d, m_d]``; failure raises ``MarginComputationError``.
    """
    _require_nominal(plant, ctrl, channel)
    A_cl, B_cl, C_cl, D_cl = _loop_state_space(plant, ctrl, channel)

    def balance(w):
        Lw = freq_response(A_cl, B_cl, C_cl, D_cl, w)[..., 0, 0]
        return np.abs((1.0 - Lw) / (1.0 + Lw))

    ws = np.concatenate([[0.0], _omega_grid(grid_points), [np.pi]])
    vals = balance(ws)
    i = int(np.argmax(vals))
    lo = ws[max(i - 1, 0)]
    hi = ws[min(i + 1, len(ws) - 1)]
    peak = _golden_max(lambda w: balance(np.array([w]))[0], lo, hi, PEAK_TOL)
    peak = max(peak, float(vals[i]))
    alpha = 2.0 / peak
    m_d = (2.0 + alpha) / (2.0 - alpha)
    # the disk must not promise more than direct stability delivers
    margin = 1e-6
    for k in (m_d * (1.0 - margin), (1.0 + margin) / m_d):
        if not _stable_at(plant, ctrl, channel, k):
            raise MarginComputationError(
                f"loop is unstable at gain {k:.9g} inside the computed disk")
    return float(alpha), float(m_d)


def _golden_max(f, lo, hi, tol):
    gr = 0.5 * (np.sqrt(5.0) - 1.0)
    a, b = lo, hi
    c = b - gr * (b - a)
    d = a + gr * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            a, c, fc = c, d, fd
            d = a + gr * (b - a)
            fd = f(d)
        else:
            b, d, fd = d, c, fc
            c = b - gr * (b - a)
            fc = f(c)
    return max(fc, fd)


def analyze(plant: PlantModel, ctrl: Controller, channel: int = 0) -> MarginReport:
    """All margins of one loop channel in a single report."""
    g_lo, g_hi = gain_margin_interval(plant, ctrl, channel)
    pm, count = _phase_margin_impl(plant, ctrl, channel)
    alpha, m_d = disk_margin(plant, ctrl, channel)
    return MarginReport(gain_interval=(g_lo, g_hi), phase_margin_deg=pm,
                        n_crossovers=count, disk_alpha=alpha, disk_margin=m_d)
