"""Stability cues computed from run data: coefficient of restitution and
the passivity ("observed energy") monitor.

The observed energy compares measured mechanical power against commanded
power over six channels (three forces, three torques):

    dE = dt * sum_i [ (f_m.v_m - f_in.v_r) + (tau_m.omega_m - tau_in.omega_r) ]

accumulated sample by sample. Negative observed energy means the loop
dissipates (passive); positive means the loop injects energy (active), which
cues instability. Unlike the restitution cue it needs no before/after
bracketing and works while the contact is still in progress.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .dynamics import ContactEvent, Trajectory

DEFAULT_SAMPLE_TIME = 0.004  # [s]
DEFAULT_LOSSLESS_TOL = 1e-6  # [J]
DEFAULT_RESTITUTION_BAND = 0.02

ENERGY_CHANNELS = ("dE_x", "dE_y", "dE_z", "dE_rx", "dE_ry", "dE_rz")


@dataclass(frozen=True)
class RestitutionResult:
    """Coefficient of restitution and its stability reading."""

    epsilon: float
    classification: str  # stable | neutral | unstable


def restitution(event: ContactEvent, band: float = DEFAULT_RESTITUTION_BAND) -> RestitutionResult:
    """epsilon = |v_plus| / |v_minus| for one contact event.

    epsilon < 1 reads stable (energy lost), epsilon > 1 unstable (energy
    injected); a relative band around 1 reads neutral. Raises when the event
    has no impact velocity (v_minus = 0).
    """
    if event.v_minus == 0.0:
        raise ValueError("no impact velocity: v_minus is zero")
    eps = abs(event.v_plus) / abs(event.v_minus)
    if abs(eps - 1.0) <= band:
        cls = "neutral"
    else:
        cls = "stable" if eps < 1.0 else "unstable"
    return RestitutionResult(epsilon=eps, classification=cls)


def _channels(name: str, arr) -> np.ndarray:
    a = np.asarray(arr, dtype=float)
    if a.ndim != 2 or a.shape[1] != 3:
        raise ValueError(f"{name} must have shape (N, 3), got {a.shape}")
    return a


@dataclass(frozen=True)
class PowerStreams:
    """Sampled signal bundle for the passivity monitor, all on one uniform
    grid, shape (N, 3) each.

    f_m / tau_m     : measured force [N] and torque [N*m]
    v_m / omega_m   : measured linear [m/s] and angular [rad/s] velocity
    f_in / tau_in   : force and torque input to the simulator
    v_r / omega_r   : commanded linear and angular velocity
    """

    f_m: np.ndarray
    v_m: np.ndarray
    f_in: np.ndarray
    v_r: np.ndarray
    tau_m: np.ndarray
    omega_m: np.ndarray
    tau_in: np.ndarray
    omega_r: np.ndarray

    def __post_init__(self):
        lengths = set()
        for name in ("f_m", "v_m", "f_in", "v_r", "tau_m", "omega_m", "tau_in", "omega_r"):
            a = _channels(name, getattr(self, name))
            object.__setattr__(self, name, a)
            lengths.add(a.shape[0])
        if len(lengths) != 1:
            raise ValueError(f"channel-length mismatch: got lengths {sorted(lengths)}")

    def __len__(self) -> int:
        return self.f_m.shape[0]


@dataclass(frozen=True)
class EnergyRecord:
    """Cumulative observed energy after each sample.

    channels holds the six per-axis cumulative energies (translational x, y,
    z then rotational x, y, z) [J]; total is their sum at every sample.
    classification is the per-sample passivity reading.
    """

    times: np.ndarray
    channels: np.ndarray
    total: np.ndarray
    classification: tuple[str, ...]
    dt: float
    tolerance: float


def observed_energy(
    streams: PowerStreams,
    dt: float = DEFAULT_SAMPLE_TIME,
    tolerance: float = DEFAULT_LOSSLESS_TOL,
    initial: Optional[np.ndarray] = None,
) -> EnergyRecord:
    """Accumulate the observed energy over the sampled streams.

    ``initial`` resumes accumulation from a previous record's last channel
    values; the continuation is bitwise identical to having processed one
    concatenated stream, so windowed energies are exactly additive.
    Classification per sample: lossless while |dE| < tolerance, otherwise
    passive (dE < 0) or active (dE > 0).
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    inc = dt * np.hstack([
        streams.f_m * streams.v_m - streams.f_in * streams.v_r,
        streams.tau_m * streams.omega_m - streams.tau_in * streams.omega_r,
    ])
    start = np.zeros((1, 6)) if initial is None else np.asarray(initial, dtype=float).reshape(1, 6)
    channels = np.cumsum(np.vstack([start, inc]), axis=0)[1:]
    total = channels.sum(axis=1)
    classification = tuple(
        "lossless" if abs(e) < tolerance else ("passive" if e < 0.0 else "active")
        for e in total
    )
    n = inc.shape[0]
    return EnergyRecord(
        times=np.arange(1, n + 1) * dt,
        channels=channels,
        total=total,
        classification=classification,
        dt=float(dt),
        tolerance=float(tolerance),
    )


def resample(t_src: np.ndarray, values: np.ndarray, t_dst: np.ndarray) -> np.ndarray:
    """Linear-interpolation resampling of one (N,) or (N,k) channel block."""
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        return np.interp(t_dst, t_src, values)
    return np.column_stack([np.interp(t_dst, t_src, values[:, j]) for j in range(values.shape[1])])


def streams_from_trajectories(
    measured: Trajectory,
    commanded: Trajectory,
    dt: float = DEFAULT_SAMPLE_TIME,
    n_hat: Sequence[float] = (0.0, 0.0, 1.0),
) -> PowerStreams:
    """Build monitor streams from a measured/commanded trajectory pair.

    Both trajectories are resampled onto a common uniform grid with sample
    time dt. In 2D the force acts along z and the torque about x; in 3D the
    recorded intensity is expanded along n_hat and the recorded torque used
    as-is.
    """
    if measured.mode != commanded.mode:
        raise ValueError("measured and commanded trajectories must share a mode")
    t_end = min(float(measured.times[-1]), float(commanded.times[-1]))
    t = np.arange(1, int(t_end / dt) + 1) * dt

    def expand(traj: Trajectory) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        if traj.mode == "2d":
            zeros = np.zeros_like(traj.f)
            force = np.column_stack([zeros, zeros, traj.f])
            vel = np.column_stack([zeros, traj.states[:, 5], traj.states[:, 1]])
            torque = np.column_stack([traj.tau, zeros, zeros])
            omega = np.column_stack([traj.states[:, 3], zeros, zeros])
        else:
            force = traj.f[:, None] * np.asarray(n_hat, dtype=float)[None, :]
            vel = traj.states[:, 3:6]
            torque = traj.tau
            omega = traj.states[:, 9:12]
        return (
            resample(traj.times, force, t),
            resample(traj.times, vel, t),
            resample(traj.times, torque, t),
            resample(traj.times, omega, t),
        )

    f_m, v_m, tau_m, omega_m = expand(measured)
    f_in, v_r, tau_in, omega_r = expand(commanded)
    return PowerStreams(
        f_m=f_m, v_m=v_m, f_in=f_in, v_r=v_r,
        tau_m=tau_m, omega_m=omega_m, tau_in=tau_in, omega_r=omega_r,
    )


def write_energy_csv(record: EnergyRecord, path) -> None:
    """Deterministic export: t, six channel energies, total, class."""
    with open(path, "w", newline="") as fh:
        fh.write("t," + ",".join(ENERGY_CHANNELS) + ",dE_total,class\n")
        for i in range(len(record.total)):
            row = ",".join(f"{x:.9g}" for x in record.channels[i])
            fh.write(f"{record.times[i]:.9g},{row},{record.total[i]:.9g},{record.classification[i]}\n")
