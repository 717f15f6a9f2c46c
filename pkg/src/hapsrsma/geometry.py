"""UE placement, HAPS-to-UE angles and free-space path loss.

Angles follow one convention across the package: theta is measured off
nadir (0 directly below the HAPS, pi/2 at the horizon) and phi is the
azimuth ``atan2(y, x)`` in [-pi, pi).  phi is 0 for a UE exactly at nadir.
"""

from dataclasses import dataclass

import numpy as np

from .config import SPEED_OF_LIGHT, ScenarioConfig


@dataclass(frozen=True)
class UEGeometry:
    ue_id: int
    position: tuple
    theta: float
    phi: float
    distance: float
    path_loss: float


def realization_rng(seed, realization_index, stream=0):
    """Independent generator per (seed, realization, stream).

    Streams decouple consumers (placement vs. clustering) so that adding
    draws in one never shifts the other.
    """
    return np.random.default_rng([int(seed), int(realization_index), int(stream)])


def _wrap_phi(phi):
    # map pi onto -pi so the range is half-open
    return np.where(phi >= np.pi, phi - 2 * np.pi, phi)


def compute_angles(x, y, altitude):
    """Return (theta, phi, distance) for ground point(s) (x, y)."""
    if altitude <= 0:
        raise ValueError("altitude must be positive")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    rho = np.hypot(x, y)
    theta = np.arctan2(rho, altitude)
    phi = _wrap_phi(np.where(rho > 0, np.arctan2(y, x), 0.0))
    distance = np.sqrt(altitude**2 + rho**2)
    if theta.ndim == 0:
        return float(theta), float(phi), float(distance)
    return theta, phi, distance


def fspl(d, f_c):
    """Free-space path loss (4 pi d f_c / c)^2 as a linear power ratio."""
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0) or f_c <= 0:
        raise ValueError("distance and frequency must be positive")
    pl = (4 * np.pi * d * f_c / SPEED_OF_LIGHT) ** 2
    return float(pl) if pl.ndim == 0 else pl


def sample_disk(rng, n, radius):
    """Area-uniform points in a disk of the given radius."""
    u1 = rng.random(n)
    u2 = rng.random(n)
    r = radius * np.sqrt(u1)
    a = 2 * np.pi * u2
    return r * np.cos(a), r * np.sin(a)


def generate_ues(config: ScenarioConfig, realization_index: int) -> list[UEGeometry]:
    if realization_index < 0:
        raise ValueError("realization_index must be >= 0")
    rng = realization_rng(config.rng_seed, realization_index, stream=0)
    x, y = sample_disk(rng, config.num_ues, config.coverage_radius)
    theta, phi, dist = compute_angles(x, y, config.haps_altitude)
    pl = fspl(dist, config.carrier_freq)
    return [
        UEGeometry(u, (float(x[u]), float(y[u])), float(theta[u]), float(phi[u]),
                   float(dist[u]), float(pl[u]))
        for u in range(config.num_ues)
    ]


def angles_array(ues):
    """Stack UE angles into arrays (theta, phi)."""
    return (np.array([ue.theta for ue in ues]), np.array([ue.phi for ue in ues]))
