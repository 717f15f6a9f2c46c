"""Composite planar-array gain: ITU-R M.2101 element pattern plus array factor.

The array faces the ground, so the element's vertical cut is evaluated at the
off-nadir angle theta directly.  Array-factor steering weights are the
conjugate steering vector scaled by 1/sqrt(Nx*Ny), which makes the peak gain
exactly Nx*Ny (linear) in the steering direction.
"""

from dataclasses import dataclass

import numpy as np

from .config import ScenarioConfig


@dataclass(frozen=True)
class BeamConfig:
    theta: float
    phi: float
    nx: int = 8
    ny: int = 8
    spacing: float = 0.5  # wavelengths, same along x and y
    element_gain_max: float = 8.0
    beamwidth_3db: float = 65.0
    front_to_back: float = 30.0
    sla_v: float = 30.0

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ValueError("array dimensions must be >= 1")
        if self.spacing <= 0 or self.front_to_back <= 0 or self.sla_v <= 0:
            raise ValueError("spacing, front_to_back and sla_v must be positive")

    def steered(self, theta, phi):
        return BeamConfig(theta, phi, self.nx, self.ny, self.spacing, self.element_gain_max,
                          self.beamwidth_3db, self.front_to_back, self.sla_v)


def beam_template(config: ScenarioConfig) -> BeamConfig:
    """Nadir-pointing beam carrying the array/element settings of ``config``."""
    return BeamConfig(0.0, 0.0, config.array_nx, config.array_ny, config.element_spacing,
                      config.element_gain_max, config.beamwidth_3db, config.front_to_back,
                      config.sla_v)


def element_gain_db(theta, phi, g_max=8.0, beamwidth_3db=65.0, front_to_back=30.0, sla_v=30.0):
    """Single-element gain in dBi; angles in radians, pattern evaluated in degrees."""
    th = np.degrees(np.asarray(theta, dtype=float))
    ph = np.degrees(np.asarray(phi, dtype=float))
    a_h = -np.minimum(12.0 * (ph / beamwidth_3db) ** 2, front_to_back)
    a_v = -np.minimum(12.0 * (th / beamwidth_3db) ** 2, sla_v)
    return g_max - np.minimum(-(a_h + a_v), front_to_back)


def dirichlet_sq(psi, n):
    # |sum_{m<n} exp(j m psi)|^2 without the explicit sum
    half = np.sin(psi / 2.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        val = (np.sin(n * psi / 2.0) / half) ** 2
    return np.where(np.abs(half) < 1e-12, float(n * n), val)


def array_factor_linear(theta, phi, beam: BeamConfig):
    """Normalized array power gain |w^H v(theta, phi)|^2, peak Nx*Ny."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    st, st0 = np.sin(theta), np.sin(beam.theta)
    psi_x = 2 * np.pi * beam.spacing * (st * np.cos(phi) - st0 * np.cos(beam.phi))
    psi_y = 2 * np.pi * beam.spacing * (st * np.sin(phi) - st0 * np.sin(beam.phi))
    return dirichlet_sq(psi_x, beam.nx) * dirichlet_sq(psi_y, beam.ny) / (beam.nx * beam.ny)


def array_factor_gain_db(theta, phi, beam: BeamConfig):
    return 10.0 * np.log10(array_factor_linear(theta, phi, beam))


def effective_gain_linear(theta, phi, beam: BeamConfig):
    elem = element_gain_db(theta, phi, beam.element_gain_max, beam.beamwidth_3db,
                           beam.front_to_back, beam.sla_v)
    return 10.0 ** (elem / 10.0) * array_factor_linear(theta, phi, beam)


def build_gain_matrix(beams, ues):
    """End-to-end power gains g[l, u] = G_l(theta_u, phi_u) / PL_u, shape (L, U).

    Path loss divides: it is a loss >= 1, and the received power p*g has to
    fall with distance.
    """
    theta = np.array([ue.theta for ue in ues])
    phi = np.array([ue.phi for ue in ues])
    pl = np.array([ue.path_loss for ue in ues])
    g = np.empty((len(beams), len(ues)))
    for i, beam in enumerate(beams):
        g[i] = effective_gain_linear(theta, phi, beam) / pl
    return g
