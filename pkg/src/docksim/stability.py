"""Pole-location stability analysis of the second-order delay system
mu s^2 + e^(-s h) (beta s + kappa) and stability-region sweeps.

As the delay grows from zero, pairs of characteristic roots cross the
imaginary axis at the crossing frequency

    omega_c = sqrt( beta^2/(2 mu^2) + sqrt( beta^4/(4 mu^4) + kappa^2/mu^2 ) )

which is independent of h, at the delays

    h_n = ( arctan(omega_c beta / kappa) + 2 pi n ) / omega_c,  n = 0, 1, ...

The crossing direction indicator sigma = sqrt(beta^4/(4 mu^4) + kappa^2/mu^2)
is strictly positive here, so every crossing is a switch (a root pair leaving
the open left half-plane): the system is stable exactly for h below the
first critical delay h_c = h_0. Without damping (beta = 0) the critical
delay is 0. For omega_c*beta << kappa the approximation h_c = beta/kappa
holds.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

CRITICAL_DAMPING_BRACKET_MAX = 1e6
CRITICAL_DAMPING_HTOL = 1e-9  # [s]
DEFAULT_NEUTRAL_BAND = 0.01


def _check_params(mu: float, beta: float, kappa: float) -> None:
    if not (mu > 0.0 and math.isfinite(mu)):
        raise ValueError(f"mu must be positive, got {mu!r}")
    if not (kappa > 0.0 and math.isfinite(kappa)):
        raise ValueError(f"kappa must be positive, got {kappa!r}")
    if not (beta >= 0.0 and math.isfinite(beta)):
        raise ValueError(f"beta must be >= 0, got {beta!r}")


def crossing_frequency(mu: float, beta: float, kappa: float) -> float:
    """Imaginary-axis crossing frequency omega_c [rad/s]; independent of h."""
    _check_params(mu, beta, kappa)
    b2 = (beta / mu) ** 2
    return math.sqrt(0.5 * b2 + math.sqrt(0.25 * b2 * b2 + (kappa / mu) ** 2))


def crossing_direction(mu: float, beta: float, kappa: float) -> float:
    """Crossing indicator sigma(omega_c). Positive: the root pair leaves the
    open left half-plane (switch). For this system it is always positive, so
    delays beyond h_c can never restabilize."""
    _check_params(mu, beta, kappa)
    b2 = (beta / mu) ** 2
    return math.sqrt(0.25 * b2 * b2 + (kappa / mu) ** 2)


def critical_delays(mu: float, beta: float, kappa: float, n_delays: int = 5) -> tuple[float, list[float]]:
    """First critical delay h_c and the first n_delays crossing delays h_n.

    h_n = (arctan(omega_c beta / kappa) + 2 pi n) / omega_c with the
    principal arctan branch (the argument is >= 0, so h_0 >= 0; negative
    branches would give negative delays and are discarded).
    """
    omega = crossing_frequency(mu, beta, kappa)
    base = math.atan(omega * beta / kappa)
    h_n = [(base + 2.0 * math.pi * n) / omega for n in range(max(1, int(n_delays)))]
    return h_n[0], h_n


def approx_critical_delay(beta: float, kappa: float) -> float:
    """Small-ratio approximation h_c = beta/kappa, valid for
    omega_c*beta << kappa."""
    if not kappa > 0.0:
        raise ValueError(f"kappa must be positive, got {kappa!r}")
    return beta / kappa


def critical_damping(mu: float, kappa: float, h: float) -> float:
    """Damping beta_c whose critical delay equals h, by bisection on the
    rising branch of h_c(beta).

    The bracket starts near the approximation kappa*h and doubles until
    h_c(beta_max) > h; if beta_max reaches 1e6 first, the delay exceeds the
    maximum stabilizable delay and there is no critical damping below the
    bound.
    """
    _check_params(mu, 0.0, kappa)
    if not h > 0.0:
        raise ValueError(f"h must be positive, got {h!r}")

    def h_c(beta: float) -> float:
        return critical_delays(mu, beta, kappa, 1)[0]

    hi = max(kappa * h, 1e-9)
    while h_c(hi) <= h:
        hi *= 2.0
        if hi > CRITICAL_DAMPING_BRACKET_MAX:
            raise ValueError(
                f"no critical damping below bound {CRITICAL_DAMPING_BRACKET_MAX:.0e}: "
                f"delay h = {h!r} exceeds the maximum stabilizable delay"
            )
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if h_c(mid) < h:
            lo = mid
        else:
            hi = mid
    beta_c = 0.5 * (lo + hi)
    if abs(h_c(beta_c) - h) > CRITICAL_DAMPING_HTOL:
        raise ArithmeticError(f"critical damping bisection did not converge at h = {h!r}")
    return beta_c


def _verdict(h: float, h_c: float, band: float) -> str:
    if abs(h - h_c) <= band * h_c:
        return "neutral"
    return "stable" if h < h_c else "unstable"


@dataclass(frozen=True)
class StabilityResult:
    """Pole-location summary for one (mu, beta, kappa) point.

    h_n holds the first few crossing delays (strictly increasing); sigma is
    the crossing indicator. verdict is filled only when a query delay h was
    given, using a relative neutrality band around h_c.
    """

    mu: float
    beta: float
    kappa: float
    omega_c: float
    h_c: float
    h_n: tuple[float, ...]
    sigma: float
    h: Optional[float] = None
    verdict: Optional[str] = None

    def as_dict(self) -> dict:
        out = {
            "mu": self.mu, "beta": self.beta, "kappa": self.kappa,
            "omega_c": self.omega_c, "h_c": self.h_c, "h_n": list(self.h_n),
            "sigma": self.sigma,
        }
        if self.h is not None:
            out["h"] = self.h
            out["verdict"] = self.verdict
        return out


def analyze(
    mu: float,
    beta: float,
    kappa: float,
    h: Optional[float] = None,
    n_delays: int = 5,
    band: float = DEFAULT_NEUTRAL_BAND,
) -> StabilityResult:
    """Full pole-location summary; verdict included when h is given."""
    omega_c = crossing_frequency(mu, beta, kappa)
    h_c, h_n = critical_delays(mu, beta, kappa, n_delays)
    sigma = crossing_direction(mu, beta, kappa)
    verdict = None
    if h is not None:
        if h < 0.0:
            raise ValueError(f"h must be >= 0, got {h!r}")
        verdict = _verdict(h, h_c, band)
    return StabilityResult(
        mu=mu, beta=beta, kappa=kappa, omega_c=omega_c, h_c=h_c,
        h_n=tuple(h_n), sigma=sigma, h=h, verdict=verdict,
    )


@dataclass(frozen=True)
class BoundaryPoint:
    """One solved point of the neutral-stability locus; error is the
    diagnostic string when the point failed (its numbers are then nan)."""

    x: float
    h_critical: float
    omega_c: float
    sigma: float
    error: Optional[str] = None


def _boundary_point(axis: str, x: float, mu, beta, kappa) -> BoundaryPoint:
    try:
        if axis == "beta":
            point = (mu, x, kappa)
        elif axis == "kappa":
            point = (mu, beta, x)
        elif axis == "mu":
            point = (x, beta, kappa)
        else:
            raise ValueError(f"axis must be 'beta', 'kappa' or 'mu', got {axis!r}")
        h_c, _ = critical_delays(*point, 1)
        return BoundaryPoint(
            x=x, h_critical=h_c,
            omega_c=crossing_frequency(*point),
            sigma=crossing_direction(*point),
        )
    except ValueError as exc:
        return BoundaryPoint(x=x, h_critical=math.nan, omega_c=math.nan,
                             sigma=math.nan, error=str(exc))


def stability_boundary(
    axis: str,
    grid: Sequence[float],
    mu: Optional[float] = None,
    beta: Optional[float] = None,
    kappa: Optional[float] = None,
    workers: Optional[int] = None,
) -> list[BoundaryPoint]:
    """Neutral-stability curve h_c(x) along one parameter axis.

    axis names the swept coefficient; the other two must be fixed. Points
    are solved independently (worker threads; count from ``workers`` or the
    DOCKSIM_THREADS environment variable) and returned in grid order.
    Per-point failures are recorded on the point and the sweep continues.
    """
    if axis not in ("beta", "kappa", "mu"):
        raise ValueError(f"axis must be 'beta', 'kappa' or 'mu', got {axis!r}")
    fixed = {"beta": (mu, kappa), "kappa": (mu, beta), "mu": (beta, kappa)}[axis]
    if any(v is None for v in fixed):
        raise ValueError(f"sweep along {axis!r} needs the other two coefficients fixed")
    grid = [float(x) for x in grid]
    if not grid:
        raise ValueError("grid must hold at least one point")
    if workers is None:
        workers = int(os.environ.get("DOCKSIM_THREADS", "0")) or (os.cpu_count() or 1)
    if workers <= 1 or len(grid) == 1:
        return [_boundary_point(axis, x, mu, beta, kappa) for x in grid]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda x: _boundary_point(axis, x, mu, beta, kappa), grid))


def write_boundary_csv(points: Sequence[BoundaryPoint], path) -> None:
    """Deterministic curve export: x_value,h_critical,omega_c,sigma."""
    with open(path, "w", newline="") as fh:
        fh.write("x_value,h_critical,omega_c,sigma\n")
        for p in points:
            fh.write(f"{p.x:.9g},{p.h_critical:.9g},{p.omega_c:.9g},{p.sigma:.9g}\n")


@dataclass(frozen=True)
class FourthOrderVerdict:
    """Stability of the full linearized 4-state contact model at delay h.

    The two second-order subsystems are evaluated separately: the
    penetration mode with (mu, beta, kappa) = (m_a, b, k) and the
    center-displacement mode with (m, 2b, 2k). The overall critical delay is
    the smaller of the two; in the omega_c*beta << kappa regime both equal
    b/k.
    """

    verdict: str
    h: float
    h_c: float
    penetration_mode: StabilityResult
    displacement_mode: StabilityResult

    def as_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "h": self.h,
            "h_c": self.h_c,
            "penetration_mode": self.penetration_mode.as_dict(),
            "displacement_mode": self.displacement_mode.as_dict(),
        }


def verdict_4th_order(
    params,
    contact,
    h: float,
    k: Optional[float] = None,
    b: Optional[float] = None,
    band: float = DEFAULT_NEUTRAL_BAND,
) -> FourthOrderVerdict:
    """Verdict for the linearized planar model: compare h against the
    smaller of the two subsystem critical delays with a relative neutrality
    band (exact equality is numerically meaningless)."""
    from .linear import penetration_dde_coeffs

    mu_a, beta, kappa = penetration_dde_coeffs(params, contact, k=k, b=b)
    pen = analyze(mu_a, beta, kappa, h=h, band=band)
    disp = analyze(params.m, 2.0 * beta, 2.0 * kappa, h=h, band=band)
    h_c = min(pen.h_c, disp.h_c)
    return FourthOrderVerdict(
        verdict=_verdict(h, h_c, band),
        h=h,
        h_c=h_c,
        penetration_mode=pen,
        displacement_mode=disp,
    )
