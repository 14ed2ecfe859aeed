"""The torque-equation kernel dX/dt = W(t) x X and its integrators.

The force W x X is always perpendicular to X, so the exact flow rotates X
rigidly and conserves its norm.  Three integrators are provided:

``rk4``
    Classical fixed-step Runge-Kutta on the sample grid.  Fourth order;
    norm conserved to integrator accuracy, not exactly.
``piecewise_rotation``
    Rotates X about the axis W(t_mid) frozen at each step midpoint, using
    the closed-form (Rodrigues) rotation.  Second order in the step but
    exactly norm-preserving, which makes it the structure-preserving
    reference the other methods are checked against.
``adaptive``
    Embedded Cash-Karp 4(5) pair with step-size control and cubic-Hermite
    dense output at the requested sample times.

All integrators sample the solution on the caller's grid; times are in
units of the pulse width T.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .pulses import mixing_angle

__all__ = [
    "AngularVelocityField",
    "Trajectory",
    "TrajectoryDiagnostics",
    "IntegrationError",
    "torque_rhs",
    "step_exact",
    "integrate",
    "time_grid",
]

METHODS = ("rk4", "adaptive", "piecewise_rotation")

DEFAULT_STEPS = 4096
DEFAULT_RTOL = 1e-9


class IntegrationError(RuntimeError):
    """Raised when the adaptive stepper cannot meet its accuracy target."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


@dataclass(frozen=True)
class AngularVelocityField:
    """A time-dependent angular-velocity vector W(t), plus metadata.

    ``components(t)`` returns the tuple (wx, wy, wz) in units 1/T; this is
    the form the integrator hot loops consume.  ``profiles``, when present,
    returns the unsigned scalar magnitudes (|W_x|, |W_z|) the schedule
    contributed, which is what the trajectory diagnostics (mixing angle,
    dark projection, areas) are built from.
    """

    components: Callable[[float], tuple]
    kind: str = "generic"
    profiles: Callable[[float], tuple] | None = None

    def __call__(self, t):
        return np.asarray(self.components(float(t)), dtype=float)

    @classmethod
    def constant(cls, w, kind="constant"):
        wx, wy, wz = (float(c) for c in w)
        return cls(components=lambda t: (wx, wy, wz), kind=kind)


@dataclass(frozen=True)
class TrajectoryDiagnostics:
    """Per-sample scalar records derived from the field profiles."""

    p_values: np.ndarray
    s_values: np.ndarray
    mixing_angle: np.ndarray
    dark_variable: np.ndarray


@dataclass(frozen=True)
class Trajectory:
    """Sampled solution of the torque equation.

    ``states`` has one row per sample time.  ``norm_drift`` is the largest
    relative departure of |X| from its initial value over the whole run.
    """

    times: np.ndarray
    states: np.ndarray
    norm_drift: float
    method: str
    diagnostics: TrajectoryDiagnostics | None = None

    def __post_init__(self):
        if self.times.ndim != 1 or self.states.shape != (self.times.size, 3):
            raise ValueError("states must be (len(times), 3)")
        if not np.all(np.diff(self.times) > 0):
            raise ValueError("times must be strictly increasing")

    @property
    def initial_state(self):
        return self.states[0]

    @property
    def final_state(self):
        return self.states[-1]

    def component_squares(self):
        """(x^2, y^2, z^2) per sample, normalized by the initial norm squared."""
        n0 = float(np.linalg.norm(self.states[0]))
        return self.states**2 / (n0 * n0)


def torque_rhs(w, x):
    """Cross product W x X, the right-hand side of the torque equation."""
    wx, wy, wz = (float(c) for c in w)
    x1, x2, x3 = (float(c) for c in x)
    return np.array(
        [wy * x3 - wz * x2, wz * x1 - wx * x3, wx * x2 - wy * x1]
    )


def _rodrigues(wx, wy, wz, x, y, z, h):
    """Rotate (x,y,z) about axis (wx,wy,wz) by angle |w|*h.  Exact."""
    wn = math.sqrt(wx * wx + wy * wy + wz * wz)
    if wn == 0.0:
        return x, y, z
    ang = wn * h
    kx, ky, kz = wx / wn, wy / wn, wz / wn
    ca = math.cos(ang)
    sa = math.sin(ang)
    kdotx = kx * x + ky * y + kz * z
    cx = ky * z - kz * y
    cy = kz * x - kx * z
    cz = kx * y - ky * x
    omca = 1.0 - ca
    return (
        x * ca + cx * sa + kx * kdotx * omca,
        y * ca + cy * sa + ky * kdotx * omca,
        z * ca + cz * sa + kz * kdotx * omca,
    )


def step_exact(w, x, h):
    """Exact rotation of ``x`` about the constant axis ``w`` by angle |w|*h.

    Norm is preserved to round-off; ``w = 0`` returns ``x`` unchanged.
    """
    if not math.isfinite(h):
        raise ValueError("step must be finite")
    wx, wy, wz = (float(c) for c in w)
    x1, x2, x3 = (float(c) for c in x)
    return np.array(_rodrigues(wx, wy, wz, x1, x2, x3, float(h)))


def time_grid(t0, t1, steps=DEFAULT_STEPS):
    """Uniform sample grid with ``steps`` intervals (steps+1 points)."""
    if not (t1 > t0):
        raise ValueError("need t1 > t0")
    return np.linspace(float(t0), float(t1), int(steps) + 1)


# ---------------------------------------------------------------------------
# Fixed-step integrators (float hot loops; schedules are cheap to evaluate
# pointwise, so per-step Python arithmetic beats small-array numpy here).
# ---------------------------------------------------------------------------

def _run_rk4(comp, grid, x, y, z):
    out = np.empty((grid.size, 3))
    out[0] = (x, y, z)
    for k in range(grid.size - 1):
        t = grid[k]
        h = grid[k + 1] - t
        h2 = 0.5 * h
        wx, wy, wz = comp(t)
        k1x = wy * z - wz * y
        k1y = wz * x - wx * z
        k1z = wx * y - wy * x
        wx, wy, wz = comp(t + h2)
        ax, ay, az = x + h2 * k1x, y + h2 * k1y, z + h2 * k1z
        k2x = wy * az - wz * ay
        k2y = wz * ax - wx * az
        k2z = wx * ay - wy * ax
        ax, ay, az = x + h2 * k2x, y + h2 * k2y, z + h2 * k2z
        k3x = wy * az - wz * ay
        k3y = wz * ax - wx * az
        k3z = wx * ay - wy * ax
        wx, wy, wz = comp(t + h)
        ax, ay, az = x + h * k3x, y + h * k3y, z + h * k3z
        k4x = wy * az - wz * ay
        k4y = wz * ax - wx * az
        k4z = wx * ay - wy * ax
        h6 = h / 6.0
        x += h6 * (k1x + 2.0 * (k2x + k3x) + k4x)
        y += h6 * (k1y + 2.0 * (k2y + k3y) + k4y)
        z += h6 * (k1z + 2.0 * (k2z + k3z) + k4z)
        out[k + 1] = (x, y, z)
    return out


def _run_rotation(comp, grid, x, y, z):
    out = np.empty((grid.size, 3))
    out[0] = (x, y, z)
    for k in range(grid.size - 1):
        t = grid[k]
        h = grid[k + 1] - t
        wx, wy, wz = comp(t + 0.5 * h)
        x, y, z = _rodrigues(wx, wy, wz, x, y, z, h)
        out[k + 1] = (x, y, z)
    return out


# ---------------------------------------------------------------------------
# Adaptive Cash-Karp 4(5) stepper, generic over real and complex states.
# ---------------------------------------------------------------------------

_CK_A = (0.2, 0.3, 0.6, 1.0, 0.875)
_CK_B = (
    (0.2,),
    (3.0 / 40.0, 9.0 / 40.0),
    (0.3, -0.9, 1.2),
    (-11.0 / 54.0, 2.5, -70.0 / 27.0, 35.0 / 27.0),
    (1631.0 / 55296.0, 175.0 / 512.0, 575.0 / 13824.0, 44275.0 / 110592.0, 253.0 / 4096.0),
)
_CK_C = (37.0 / 378.0, 0.0, 250.0 / 621.0, 125.0 / 594.0, 0.0, 512.0 / 1771.0)
_CK_DC = (
    _CK_C[0] - 2825.0 / 27648.0,
    0.0,
    _CK_C[2] - 18575.0 / 48384.0,
    _CK_C[3] - 13525.0 / 55296.0,
    -277.0 / 14336.0,
    _CK_C[5] - 0.25,
)

_SAFETY = 0.9
_PGROW = -0.2
_PSHRNK = -0.25
_TINY = 1e-30


def _rkck(f, t, y, dydt, h):
    k = [dydt]
    for i in range(5):
        acc = _CK_B[i][0] * k[0]
        for j in range(1, i + 1):
            acc = acc + _CK_B[i][j] * k[j]
        k.append(f(t + _CK_A[i] * h, y + h * acc))
    yout = y + h * (_CK_C[0] * k[0] + _CK_C[2] * k[2] + _CK_C[3] * k[3] + _CK_C[5] * k[5])
    yerr = h * (
        _CK_DC[0] * k[0] + _CK_DC[2] * k[2] + _CK_DC[3] * k[3]
        + _CK_DC[4] * k[4] + _CK_DC[5] * k[5]
    )
    return yout, yerr, k[5]


def adaptive_path(f, t0, t1, y0, rtol=DEFAULT_RTOL, h0=None, max_steps=1_000_000):
    """Integrate dy/dt = f(t, y) from t0 to t1 with local error control.

    Returns the list of accepted nodes ``(t_i, y_i, f_i)`` including both
    endpoints, for dense-output interpolation.  Raises
    :class:`IntegrationError` on step-size underflow.
    """
    t = float(t0)
    y = np.array(y0, copy=True)
    dydt = f(t, y)
    span = float(t1) - t
    h = span / 64.0 if h0 is None else float(h0)
    nodes = [(t, y.copy(), dydt.copy())]
    for _ in range(max_steps):
        if (t + h - t1) * (t + h - t0) > 0.0:
            h = t1 - t
        while True:
            ynew, yerr, _ = _rkck(f, t, y, dydt, h)
            scale = np.abs(y) + np.abs(h * dydt) + _TINY
            errmax = float(np.max(np.abs(yerr) / scale)) / rtol
            if errmax <= 1.0:
                break
            hnew = _SAFETY * h * errmax**_PSHRNK
            h = max(hnew, 0.1 * h) if h > 0 else min(hnew, 0.1 * h)
            if t + h == t:
                raise IntegrationError(
                    f"stiffness/accuracy failure at t={t:.6g}", t=t
                )
        t = t + h
        y = ynew
        dydt = f(t, y)
        nodes.append((t, y.copy(), dydt.copy()))
        if (t - t1) * (t1 - t0) >= 0.0:
            return nodes
        h = _SAFETY * h * errmax**_PGROW if errmax > 1.89e-4 else 5.0 * h
    raise IntegrationError(f"too many steps (>{max_steps}) at t={t:.6g}", t=t)


def dense_output(nodes, grid):
    """Cubic-Hermite interpolation of an adaptive path onto ``grid``."""
    ts = np.array([n[0] for n in nodes])
    out = np.empty((len(grid),) + nodes[0][1].shape, dtype=nodes[0][1].dtype)
    idx = np.searchsorted(ts, grid, side="right") - 1
    idx = np.clip(idx, 0, len(nodes) - 2)
    for i, (tq, j) in enumerate(zip(grid, idx)):
        t0, y0, f0 = nodes[j]
        t1, y1, f1 = nodes[j + 1]
        h = t1 - t0
        if h == 0.0:
            out[i] = y1
            continue
        u = (tq - t0) / h
        u2 = u * u
        u3 = u2 * u
        out[i] = (
            (2 * u3 - 3 * u2 + 1) * y0
            + (u3 - 2 * u2 + u) * h * f0
            + (-2 * u3 + 3 * u2) * y1
            + (u3 - u2) * h * f1
        )
    return out


def _run_adaptive(field, grid, x0, rtol):
    def f(t, y):
        wx, wy, wz = field.components(t)
        return np.array(
            [
                wy * y[2] - wz * y[1],
                wz * y[0] - wx * y[2],
                wx * y[1] - wy * y[0],
            ]
        )

    nodes = adaptive_path(f, grid[0], grid[-1], np.asarray(x0, dtype=float), rtol=rtol)
    out = dense_output(nodes, grid)
    out[0] = x0
    out[-1] = nodes[-1][1]
    return out


# ---------------------------------------------------------------------------
# Public entry point
# ---------------------------------------------------------------------------

def _diagnostics(field, grid, states):
    prof = field.profiles
    n = grid.size
    p_vals = np.empty(n)
    s_vals = np.empty(n)
    theta = np.empty(n)
    dark = np.empty(n)
    # Both-zero samples hold the last defined value (0 before any is seen).
    last_theta = 0.0
    last_dark = 0.0
    for i in range(n):
        p, s = prof(float(grid[i]))
        p_vals[i] = p
        s_vals[i] = s
        th = mixing_angle(p, s)
        if th is not None:
            last_theta = th
            norm = math.hypot(p, s)
            last_dark = (p * states[i, 0] + s * states[i, 2]) / norm
        theta[i] = last_theta
        dark[i] = last_dark
    return TrajectoryDiagnostics(
        p_values=p_vals, s_values=s_vals, mixing_angle=theta, dark_variable=dark
    )


def integrate(field, x0, grid, method="rk4", rtol=DEFAULT_RTOL):
    """Integrate the torque equation along ``grid``.

    Parameters
    ----------
    field : AngularVelocityField
        The angular-velocity vector W(t).
    x0 : array-like, shape (3,)
        Nonzero initial state.
    grid : ndarray
        Strictly increasing sample times; the first/last entries bound the
        integration.
    method : str
        ``"rk4"``, ``"adaptive"``, or ``"piecewise_rotation"`` (alias
        ``"rotation"``).
    rtol : float
        Relative tolerance for the adaptive method.

    Returns
    -------
    Trajectory
        With diagnostics attached when the field carries scalar profiles.
    """
    if method == "rotation":
        method = "piecewise_rotation"
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2 or not np.all(np.diff(grid) > 0):
        raise ValueError("grid must be strictly increasing with >= 2 points")
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (3,):
        raise ValueError("x0 must be a 3-vector")
    n0 = float(np.linalg.norm(x0))
    if n0 == 0.0 or not np.isfinite(n0):
        raise ValueError("x0 must be nonzero and finite")

    comp = field.components
    if method == "rk4":
        states = _run_rk4(comp, grid, *(float(c) for c in x0))
    elif method == "piecewise_rotation":
        states = _run_rotation(comp, grid, *(float(c) for c in x0))
    else:
        states = _run_adaptive(field, grid, x0, rtol)

    norms = np.linalg.norm(states, axis=1)
    drift = float(np.max(np.abs(norms - n0)) / n0)
    diags = _diagnostics(field, grid, states) if field.profiles is not None else None
    return Trajectory(
        times=grid, states=states, norm_drift=drift, method=method, diagnostics=diags
    )
