"""Fixed-step integration of the delayed nonlinear contact dynamics.

The equations of motion form a functional ODE: the contact force at time t
is computed from the state sampled at t - h. Integration is classical
explicit RK4 on a fixed grid; delayed arguments at the stage times are
resolved by linear interpolation of the state history, which keeps runs
reproducible bit-for-bit for a given (dt, h). Before t = 0 the history is
the constant initial state (runs start out of contact, where the right-hand
side is force-free, so the constant pre-history is exact).

h = 0 is special-cased: the delayed argument is the current stage state and
the scheme is plain RK4 for the undelayed ODE. A delay in (0, dt) is
rejected by validation since the explicit scheme can only look up completed
steps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import BodyParams, ChaserState2D, ChaserState3D, ContactParams, SimConfig

Rhs = Callable[[np.ndarray, np.ndarray], np.ndarray]


class DivergenceError(RuntimeError):
    """Integration aborted: state non-finite or beyond the divergence bound."""

    def __init__(self, message: str, t: float):
        super().__init__(message)
        self.t = t


class DelayLine:
    """State history on the fixed integration grid with interpolated lookup.

    Stores (t, state) samples in a ring whose capacity covers the delay
    window (>= ceil(h/dt) + 2 samples). ``sample(t - h)`` linearly
    interpolates between the bracketing grid samples; queries before the
    first sample return the initial state (constant pre-history).
    """

    def __init__(self, initial: np.ndarray, dt: float, h: float, t0: float = 0.0):
        if dt <= 0.0:
            raise ValueError("dt must be positive")
        if h < 0.0:
            raise ValueError("h must be >= 0")
        self.dt = float(dt)
        self.h = float(h)  # recorded exactly, interpolation handles non-multiples
        self.t0 = float(t0)
        initial = np.asarray(initial, dtype=float)
        self.capacity = int(math.ceil(h / dt)) + 3
        self._buf = np.empty((self.capacity, initial.size))
        self._buf[0] = initial
        self._latest = 0  # index of the newest pushed grid sample

    @property
    def latest_time(self) -> float:
        return self.t0 + self._latest * self.dt

    def push(self, t: float, state: np.ndarray) -> None:
        """Append the state at the next grid time t0 + n*dt."""
        n = self._latest + 1
        expected = self.t0 + n * self.dt
        if abs(t - expected) > 1e-9 * max(1.0, abs(expected)):
            raise ValueError(f"push time {t!r} is off-grid (expected {expected!r})")
        self._buf[n % self.capacity] = state
        self._latest = n

    def sample(self, t: float) -> np.ndarray:
        """State at time t by linear interpolation; constant before t0."""
        q = (t - self.t0) / self.dt
        if q <= 0.0:
            return self._row(0)
        n = self._latest
        if q >= n:
            if q - n > 1e-9:
                raise ValueError(f"sample time {t!r} is ahead of the newest sample")
            return self._row(n)
        i0 = int(math.floor(q))
        w = q - i0
        if w == 0.0:
            return self._row(i0)
        lo = self._row(i0)
        hi = self._row(i0 + 1)
        return (1.0 - w) * lo + w * hi

    def _row(self, i: int) -> np.ndarray:
        if i < self._latest - self.capacity + 1:
            raise ValueError("sample time fell out of the delay window")
        return self._buf[i % self.capacity].copy()


def step(
    current: np.ndarray,
    t: float,
    delay_line: DelayLine,
    dt: float,
    rhs: Rhs,
    unit_slice: slice | None = None,
) -> np.ndarray:
    """One classical RK4 step from t to t + dt.

    ``rhs(y, y_delayed)`` receives the stage state and the state interpolated
    at stage time minus the delay line's h. ``unit_slice`` names a state
    block to renormalize to unit length after the step (the attitude column
    of the 3D model). Raises DivergenceError if the result is non-finite.
    """
    y = np.asarray(current, dtype=float)
    h = delay_line.h
    if h == 0.0:
        k1 = rhs(y, y)
        y2 = y + (0.5 * dt) * k1
        k2 = rhs(y2, y2)
        y3 = y + (0.5 * dt) * k2
        k3 = rhs(y3, y3)
        y4 = y + dt * k3
        k4 = rhs(y4, y4)
    else:
        d0 = delay_line.sample(t - h)
        dh = delay_line.sample(t + 0.5 * dt - h)
        d1 = delay_line.sample(t + dt - h)
        k1 = rhs(y, d0)
        k2 = rhs(y + (0.5 * dt) * k1, dh)
        k3 = rhs(y + (0.5 * dt) * k2, dh)
        k4 = rhs(y + dt * k3, d1)
    out = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if unit_slice is not None:
        block = out[unit_slice]
        out[unit_slice] = block / math.sqrt(float(block @ block))
    if not np.all(np.isfinite(out)):
        raise DivergenceError(f"non-finite state after step at t = {t + dt:.9g} s", t + dt)
    return out


def integrate_dde(
    rhs: Rhs,
    initial: np.ndarray,
    dt: float,
    t_end: float,
    h: float,
    unit_slice: slice | None = None,
    divergence_bound: float | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Integrate y'(t) = rhs(y(t), y(t-h)) on the fixed grid.

    Returns (times, states) with one row per grid point including t = 0.
    Pre-history is the constant initial state. Not decimated; callers slice.
    """
    y0 = np.asarray(initial, dtype=float)
    n = int(round(t_end / dt))
    if n < 1:
        raise ValueError("t_end must cover at least one step")
    dim = y0.size
    Y = np.empty((n + 1, dim))
    Y[0] = y0
    times = np.arange(n + 1) * dt
    ratio = h / dt
    y = y0.copy()
    for i in range(n):
        if h == 0.0:
            k1 = rhs(y, y)
            y2 = y + (0.5 * dt) * k1
            k2 = rhs(y2, y2)
            y3 = y + (0.5 * dt) * k2
            k3 = rhs(y3, y3)
            y4 = y + dt * k3
            k4 = rhs(y4, y4)
        else:
            d0 = _lerp_history(Y, i, i - ratio)
            dh = _lerp_history(Y, i, i + 0.5 - ratio)
            d1 = _lerp_history(Y, i, i + 1.0 - ratio)
            k1 = rhs(y, d0)
            k2 = rhs(y + (0.5 * dt) * k1, dh)
            k3 = rhs(y + (0.5 * dt) * k2, dh)
            k4 = rhs(y + dt * k3, d1)
        y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if unit_slice is not None:
            block = y[unit_slice]
            y[unit_slice] = block / math.sqrt(float(block @ block))
        if not np.all(np.isfinite(y)):
            raise DivergenceError(f"non-finite state at t = {times[i + 1]:.9g} s", float(times[i + 1]))
        if divergence_bound is not None and float(np.abs(y).max()) > divergence_bound:
            raise DivergenceError(
                f"state magnitude exceeded divergence bound {divergence_bound:.3g} "
                f"at t = {times[i + 1]:.9g} s (instability)",
                float(times[i + 1]),
            )
        Y[i + 1] = y
    return times, Y


def _lerp_history(Y: np.ndarray, latest: int, q: float) -> np.ndarray:
    """Row of Y at fractional index q (q <= latest); constant before row 0."""
    if q <= 0.0:
        return Y[0]
    i0 = int(q)
    if i0 >= latest:
        return Y[latest]
    w = q - i0
    if w == 0.0:
        return Y[i0]
    return (1.0 - w) * Y[i0] + w * Y[i0 + 1]


# --- right-hand sides ---


def make_rhs_2d(params: BodyParams, contact: ContactParams) -> Rhs:
    """Planar RHS closure over state vectors (z, v_z, theta, omega, y, v_y).

    z' = v_z, v_z' = f/m, theta' = omega, omega' = tau/J_x, y' = v_y,
    v_y' = 0, with f and tau computed from the delayed sample. The spring
    set's effective stiffness is re-evaluated from the delayed attitude
    (wall normal in body frame = (0, sin theta, cos theta) at t - h).
    """
    a = params.a
    m = params.m
    J_x = params.J_x
    k_v = contact.k_v
    b_v = contact.b_v
    bilateral = contact.activation == "bilateral"
    springs = [(k, float(l[1]), float(l[2])) for k, l in contact.springs]

    def rhs(y: np.ndarray, yd: np.ndarray) -> np.ndarray:
        thd = yd[2]
        s = math.sin(thd)
        c = math.cos(thd)
        d = yd[0] + a * c
        if bilateral or d < 0.0:
            k_tot = k_v
            for k_i, l1, l2 in springs:
                proj = l1 * s + l2 * c
                k_tot += k_i * proj * proj
            f = -k_tot * d - b_v * (yd[1] - a * yd[3] * s)
        else:
            f = 0.0
        return np.array([y[1], f / m, y[3], -a * f * s / J_x, y[5], 0.0])

    return rhs


def make_rhs_3d(params: BodyParams, contact: ContactParams) -> Rhs:
    """12-state RHS closure: r' = v, v' = (f/m) n_hat, d_c3' = -omega x d_c3,
    omega' = J^-1((J omega) x omega + tau_B), force and torque from the
    delayed sample."""
    m = params.m
    J = params.J
    J_inv = np.linalg.inv(J)
    a0, a1, a2 = (float(x) for x in params.a_B)
    n0, n1, n2 = (float(x) for x in contact.n_hat)
    k_v = contact.k_v
    b_v = contact.b_v
    bilateral = contact.activation == "bilateral"
    springs = [(k, float(l[0]), float(l[1]), float(l[2])) for k, l in contact.springs]

    def rhs(y: np.ndarray, yd: np.ndarray) -> np.ndarray:
        c0, c1, c2 = yd[6], yd[7], yd[8]
        d = yd[0] * n0 + yd[1] * n1 + yd[2] * n2 + a0 * c0 + a1 * c1 + a2 * c2
        if bilateral or d < 0.0:
            wd0, wd1, wd2 = yd[9], yd[10], yd[11]
            # d_c3 x omega = -omega x d_c3
            e0 = c1 * wd2 - c2 * wd1
            e1 = c2 * wd0 - c0 * wd2
            e2 = c0 * wd1 - c1 * wd0
            d_dot = yd[3] * n0 + yd[4] * n1 + yd[5] * n2 + a0 * e0 + a1 * e1 + a2 * e2
            k_tot = k_v
            for k_i, l0, l1, l2 in springs:
                proj = l0 * c0 + l1 * c1 + l2 * c2
                k_tot += k_i * proj * proj
            f = -k_tot * d - b_v * d_dot
        else:
            f = 0.0
        # torque about B: f * (a_B x d_c3(t-h)), body frame
        t0 = f * (a1 * c2 - a2 * c1)
        t1 = f * (a2 * c0 - a0 * c2)
        t2 = f * (a0 * c1 - a1 * c0)
        # gyroscopic term (J omega) x omega on the current state
        w0, w1, w2 = y[9], y[10], y[11]
        Jw0 = J[0, 0] * w0 + J[0, 1] * w1 + J[0, 2] * w2
        Jw1 = J[1, 0] * w0 + J[1, 1] * w1 + J[1, 2] * w2
        Jw2 = J[2, 0] * w0 + J[2, 1] * w1 + J[2, 2] * w2
        g0 = Jw1 * w2 - Jw2 * w1 + t0
        g1 = Jw2 * w0 - Jw0 * w2 + t1
        g2 = Jw0 * w1 - Jw1 * w0 + t2
        fm = f / m
        # attitude kinematics -omega x d_c3 = d_c3 x omega (current state)
        return np.array([
            y[3], y[4], y[5],
            fm * n0, fm * n1, fm * n2,
            y[7] * w2 - y[8] * w1,
            y[8] * w0 - y[6] * w2,
            y[6] * w1 - y[7] * w0,
            J_inv[0, 0] * g0 + J_inv[0, 1] * g1 + J_inv[0, 2] * g2,
            J_inv[1, 0] * g0 + J_inv[1, 1] * g1 + J_inv[1, 2] * g2,
            J_inv[2, 0] * g0 + J_inv[2, 1] * g1 + J_inv[2, 2] * g2,
        ])

    return rhs


def rhs_2d(
    state: ChaserState2D,
    delayed: ChaserState2D,
    params: BodyParams,
    contact: ContactParams,
) -> np.ndarray:
    """Planar state derivative in the (z, v_z, theta, omega, y, v_y) order,
    with force and torque computed from the delayed sample."""
    return make_rhs_2d(params, contact)(state.as_vector(), delayed.as_vector())


def rhs_3d(
    state: ChaserState3D,
    delayed: ChaserState3D,
    params: BodyParams,
    contact: ContactParams,
) -> np.ndarray:
    """12-state derivative in the (r, v, d_c3, omega) order."""
    return make_rhs_3d(params, contact)(state.as_vector(), delayed.as_vector())


# --- trajectory recording and contact events ---


@dataclass(frozen=True)
class Trajectory:
    """Recorded run: uniformly decimated grid samples plus contact channels.

    ``states`` rows are (z, v_z, theta, omega, y, v_y) in 2D mode or
    (r, v, d_c3, omega) flattened in 3D mode. ``d``/``d_dot`` are the
    penetration depth and rate of the *undelayed* state (the commanded
    geometry); ``f`` is the applied force intensity, which the delay makes
    lag the geometry; ``tau`` is the scalar x-torque in 2D or the body
    torque vector in 3D. ``in_contact`` flags undelayed d < 0.
    """

    mode: str
    times: np.ndarray
    states: np.ndarray
    d: np.ndarray
    d_dot: np.ndarray
    f: np.ndarray
    tau: np.ndarray
    in_contact: np.ndarray


@dataclass(frozen=True)
class ContactEvent:
    """One contact episode segmented by sign changes of the undelayed d.

    v_minus / v_plus are the penetration rates just before entry and just
    after exit (window-averaged; see extract_events). max_depth is the
    largest |d| reached while inside.
    """

    t_in: float
    t_out: float
    v_minus: float
    v_plus: float
    max_depth: float


def extract_events(
    times: np.ndarray,
    d: np.ndarray,
    d_dot: np.ndarray,
    window: float = 0.02,
) -> list[ContactEvent]:
    """Segment contacts by sign changes of d and measure entry/exit rates.

    Entry/exit instants come from linear interpolation of the d sign change
    (no higher-order event localization). With window > 0 the rates are the
    mean of d_dot over that span just before entry / after exit, clipped to
    samples outside contact and to the neighbouring events; window = 0 takes
    the single bracketing sample. Events still open at the end of the run
    are dropped.
    """
    d = np.asarray(d)
    d_dot = np.asarray(d_dot)
    times = np.asarray(times)
    if len(times) < 2:
        return []
    dt = float(times[1] - times[0])
    inside = d < 0.0
    starts = np.flatnonzero(inside[1:] & ~inside[:-1]) + 1
    events: list[ContactEvent] = []
    n_w = max(1, int(round(window / dt))) if window > 0.0 else 1
    prev_exit = 0
    for i_in in starts:
        after = np.flatnonzero(~inside[i_in:])
        if len(after) == 0:
            break  # run ended while still in contact
        i_out = i_in + int(after[0])
        # crossing times by linear interpolation of d
        t_in = times[i_in - 1] + dt * d[i_in - 1] / (d[i_in - 1] - d[i_in])
        t_out = times[i_out - 1] + dt * d[i_out - 1] / (d[i_out - 1] - d[i_out])
        lo = max(prev_exit, i_in - n_w)
        v_minus = float(d_dot[lo:i_in].mean())
        hi = min(len(d), i_out + n_w)
        reenter = np.flatnonzero(inside[i_out:hi])
        if len(reenter):
            hi = i_out + int(reenter[0])
        v_plus = float(d_dot[i_out:hi].mean())
        events.append(
            ContactEvent(
                t_in=float(t_in),
                t_out=float(t_out),
                v_minus=v_minus,
                v_plus=v_plus,
                max_depth=float(-d[i_in:i_out].min()),
            )
        )
        prev_exit = i_out
    return events


def _delayed_rows(Y: np.ndarray, h: float, dt: float) -> np.ndarray:
    """All rows of Y sampled at their own time minus h (vectorized lerp)."""
    if h == 0.0:
        return Y
    n = Y.shape[0] - 1
    q = np.arange(n + 1) - h / dt
    q = np.clip(q, 0.0, n)
    i0 = np.floor(q).astype(int)
    i1 = np.minimum(i0 + 1, n)
    w = (q - i0)[:, None]
    return (1.0 - w) * Y[i0] + w * Y[i1]


def simulate(
    config: SimConfig,
    params: BodyParams,
    contact: ContactParams,
    mode: str = "2d",
    event_window: float = 0.02,
    divergence_factor: float = 1e3,
) -> tuple[Trajectory, list[ContactEvent]]:
    """Run the delayed nonlinear model and return the recorded trajectory
    plus the detected contact events.

    The divergence guard aborts (DivergenceError) when the state magnitude
    exceeds divergence_factor times the initial magnitude, signaling
    instability. Contact events are segmented on the full integration grid
    regardless of the recording decimation.
    """
    initial = config.initial
    if mode == "3d":
        if isinstance(initial, ChaserState2D):
            initial = initial.embed_3d()
        rhs = make_rhs_3d(params, contact)
        y0 = initial.as_vector()
        unit_slice = slice(6, 9)
    elif mode == "2d":
        if isinstance(initial, ChaserState3D):
            initial = _project_planar(initial)
        rhs = make_rhs_2d(params, contact)
        y0 = initial.as_vector()
        unit_slice = None
    else:
        raise ValueError(f"mode must be '2d' or '3d', got {mode!r}")

    bound = divergence_factor * max(float(np.abs(y0).max()), 1.0)
    times, Y = integrate_dde(
        rhs, y0, config.dt, config.t_end, config.h,
        unit_slice=unit_slice, divergence_bound=bound,
    )

    Yd = _delayed_rows(Y, config.h, config.dt)
    if mode == "2d":
        a = params.a
        sin_th = np.sin(Y[:, 2])
        d = Y[:, 0] + a * np.cos(Y[:, 2])
        d_dot = Y[:, 1] - a * Y[:, 3] * sin_th
        sin_thd = np.sin(Yd[:, 2])
        cos_thd = np.cos(Yd[:, 2])
        d_del = Yd[:, 0] + a * cos_thd
        dd_del = Yd[:, 1] - a * Yd[:, 3] * sin_thd
        k_tot = np.full_like(d_del, contact.k_v)
        for k_i, l_hat in contact.springs:
            proj = l_hat[1] * sin_thd + l_hat[2] * cos_thd
            k_tot += k_i * proj * proj
        f = -k_tot * d_del - contact.b_v * dd_del
        if contact.activation == "unilateral":
            f = np.where(d_del < 0.0, f, 0.0)
        tau = -a * f * sin_thd
    else:
        n_hat = contact.n_hat
        a_B = params.a_B
        d = Y[:, 0:3] @ n_hat + Y[:, 6:9] @ a_B
        d_dot = Y[:, 3:6] @ n_hat + np.einsum(
            "ij,ij->i", np.cross(Y[:, 6:9], Y[:, 9:12]), np.broadcast_to(a_B, (Y.shape[0], 3))
        )
        c3d = Yd[:, 6:9]
        d_del = Yd[:, 0:3] @ n_hat + c3d @ a_B
        dd_del = Yd[:, 3:6] @ n_hat + np.einsum(
            "ij,ij->i", np.cross(c3d, Yd[:, 9:12]), np.broadcast_to(a_B, (Yd.shape[0], 3))
        )
        k_tot = np.full_like(d_del, contact.k_v)
        for k_i, l_hat in contact.springs:
            proj = c3d @ l_hat
            k_tot += k_i * proj * proj
        f = -k_tot * d_del - contact.b_v * dd_del
        if contact.activation == "unilateral":
            f = np.where(d_del < 0.0, f, 0.0)
        tau = f[:, None] * np.cross(np.broadcast_to(a_B, c3d.shape), c3d)

    events = extract_events(times, d, d_dot, window=event_window)
    rec = slice(None, None, config.record_every)
    traj = Trajectory(
        mode=mode,
        times=times[rec],
        states=Y[rec],
        d=d[rec],
        d_dot=d_dot[rec],
        f=f[rec],
        tau=tau[rec],
        in_contact=(d < 0.0)[rec],
    )
    return traj, events


def _project_planar(state: ChaserState3D) -> ChaserState2D:
    v = state.as_vector()
    planar = [v[0], v[3], v[6], v[10], v[11]]
    if max(abs(x) for x in planar) > 1e-12:
        raise ValueError("initial 3D state is not planar; cannot run in 2D mode")
    return ChaserState2D(
        z=float(state.r[2]),
        v_z=float(state.v[2]),
        theta=math.atan2(float(state.d_c3[1]), float(state.d_c3[2])),
        omega=float(state.omega[0]),
        y=float(state.r[1]),
        v_y=float(state.v[1]),
    )


TRAJ_COLUMNS_2D = ["t", "z", "v_z", "theta", "omega", "d", "d_dot", "f", "tau"]
TRAJ_COLUMNS_3D = [
    "t", "r_x", "r_y", "r_z", "v_x", "v_y", "v_z",
    "d_c3_x", "d_c3_y", "d_c3_z", "omega_x", "omega_y", "omega_z",
    "d", "d_dot", "f", "tau_x", "tau_y", "tau_z",
]


def write_trajectory_csv(traj: Trajectory, path) -> None:
    """Deterministic CSV export, 9 significant digits, no metadata rows."""
    with open(path, "w", newline="") as fh:
        if traj.mode == "2d":
            fh.write(",".join(TRAJ_COLUMNS_2D) + "\n")
            cols = np.column_stack([
                traj.times, traj.states[:, 0:4], traj.d, traj.d_dot, traj.f, traj.tau,
            ])
        else:
            fh.write(",".join(TRAJ_COLUMNS_3D) + "\n")
            cols = np.column_stack([
                traj.times, traj.states, traj.d, traj.d_dot, traj.f, traj.tau,
            ])
        cols = cols + 0.0  # squash negative zeros for stable formatting
        for row in cols:
            fh.write(",".join(f"{x:.9g}" for x in row) + "\n")
