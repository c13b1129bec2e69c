"""Penetration kinematics and contact force laws.

Everything here is a pure function of the sampled (delayed) state handed in
by the caller; the delay bookkeeping lives in :mod:`docksim.dynamics`.

Sign convention: d < 0 means the probe tip is past the wall, so the spring
force -k*d points outward along the wall normal. In the planar model a
positive force with sin(theta) > 0 creates a negative torque about x.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ChaserState2D, ChaserState3D, ContactParams


@dataclass(frozen=True)
class Penetration:
    """Signed penetration depth d [m] and depth rate d_dot [m/s]."""

    d: float
    d_dot: float


@dataclass(frozen=True)
class Wrench:
    """Contact wrench: force intensity f [N] along the wall normal and the
    torque tau_B [N*m] about the chaser center of mass, body frame."""

    f: float
    tau_B: np.ndarray


def penetration_3d(delayed: ChaserState3D, a_B: np.ndarray, n_hat: np.ndarray) -> Penetration:
    """Penetration depth and rate from one delayed 12-state sample.

    d     = r.n_hat + a_B.d_c3
    d_dot = v.n_hat + a_B.(-omega x d_c3)

    Both fields come from the same sample; the caller is responsible for
    having sampled the state at t - h.
    """
    a_B = np.asarray(a_B, dtype=float)
    n_hat = np.asarray(n_hat, dtype=float)
    d = float(delayed.r @ n_hat + a_B @ delayed.d_c3)
    d_dot = float(delayed.v @ n_hat + a_B @ np.cross(delayed.d_c3, delayed.omega))
    return Penetration(d=d, d_dot=d_dot)


def penetration_2d(delayed: ChaserState2D, a: float) -> Penetration:
    """Planar penetration: d = z + a*cos(theta), d_dot = v_z - a*omega*sin(theta)."""
    d = delayed.z + a * math.cos(delayed.theta)
    d_dot = delayed.v_z - a * delayed.omega * math.sin(delayed.theta)
    return Penetration(d=d, d_dot=d_dot)


def spring_dashpot_force(
    p: Penetration, k: float, b: float, activation: str = "unilateral"
) -> float:
    """Spring-dashpot force intensity f = -k*d - b*d_dot.

    Bilateral mode always applies the law; unilateral mode applies it only
    while d < 0 and returns 0 otherwise (no tensile contact).
    """
    if activation == "bilateral":
        return -k * p.d - b * p.d_dot
    if activation == "unilateral":
        if p.d < 0.0:
            return -k * p.d - b * p.d_dot
        return 0.0
    raise ValueError(f"unknown activation mode {activation!r}")


def stiffness_tensor(springs) -> np.ndarray:
    """Generalized stiffness tensor of the compliance device,
    K = sum_i k_i * l_hat_i l_hat_i^T (3x3, same frame as the l_hat_i)."""
    K = np.zeros((3, 3))
    for k_i, l_hat in springs:
        l = np.asarray(l_hat, dtype=float)
        K += k_i * np.outer(l, l)
    return K


def effective_stiffness(springs, n_hat) -> float:
    """Scalar stiffness of the spring set projected along n_hat:
    k_phi = sum_i k_i (l_hat_i . n_hat)^2.

    Frame-agnostic: pass l_hat_i and n_hat expressed in the same frame. For
    the body-frame spring directions stored in ContactParams, the wall
    normal in the body frame is the (delayed) attitude column d_c3.
    """
    n = np.asarray(n_hat, dtype=float)
    total = 0.0
    for k_i, l_hat in springs:
        c = float(np.asarray(l_hat, dtype=float) @ n)
        total += k_i * c * c
    return total


def max_effective_stiffness(springs, n_hats) -> float:
    """Brute-force maximum of k_phi over a user-supplied grid of normals.
    Useful for picking a time-invariant analysis upper bound by hand."""
    return max(effective_stiffness(springs, n) for n in n_hats)


def hybrid_force(p: Penetration, k_phi: float, contact: ContactParams) -> float:
    """Hybrid (physical + virtual) force f = -(k_phi + k_v)*d - b_v*d_dot,
    gated by the contact activation mode."""
    return spring_dashpot_force(p, k_phi + contact.k_v, contact.b_v, contact.activation)


def contact_wrench_3d(
    f: float, a_B: np.ndarray, delayed_d_c3: np.ndarray, n_hat: np.ndarray
) -> Wrench:
    """Wrench produced by force intensity f: force f*n_hat on translation and
    torque tau_B = f * (a_B x d_c3(t-h)) about B in the body frame. The
    attitude column must come from the same delayed sample as f's
    penetration.
    """
    a_B = np.asarray(a_B, dtype=float)
    d_c3 = np.asarray(delayed_d_c3, dtype=float)
    return Wrench(f=float(f), tau_B=f * np.cross(a_B, d_c3))
