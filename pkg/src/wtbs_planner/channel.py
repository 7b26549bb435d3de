"""Air-to-ground channel: LoS geometry, path loss, and small-scale fading.

The link between a ground user and an elevated base station is LoS or NLoS
at random, with a probability that grows with the elevation angle.  Each
state has its own path-loss exponent, excess loss, and Nakagami fading
severity.  Functions accept scalars or numpy arrays interchangeably.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .geodata import Structure, Tech

# receiver closer than this to the antenna is treated as being at this range
MIN_RANGE_M = 1.0


class Visibility(Enum):
    LOS = "los"
    NLOS = "nlos"


@dataclass(frozen=True)
class EnvironmentPreset:
    """Propagation constants for one environment type.

    s_a and s_b shape the LoS-probability sigmoid; eta3_db/eta4_db are the
    excess losses (on top of power-law path loss) of the 3G and 4G carriers;
    alpha_* are path-loss exponents and m_* Nakagami shapes per visibility.
    """

    s_a: float
    s_b: float
    eta3_db: float
    eta4_db: float
    alpha_los: float = 2.2
    alpha_nlos: float = 3.2
    m_los: float = 2.0
    m_nlos: float = 1.0
    # optional per-visibility excess losses; when both are set they replace
    # the per-tech values (some A2G models index excess loss by visibility
    # rather than by carrier)
    eta_los_db: float | None = None
    eta_nlos_db: float | None = None

    def __post_init__(self):
        if self.s_a <= 0 or self.s_b <= 0:
            raise ValueError("sigmoid constants s_a, s_b must be positive")
        if self.alpha_los <= 0:
            raise ValueError("alpha_los must be positive")
        if self.alpha_nlos < self.alpha_los:
            raise ValueError("alpha_nlos must be at least alpha_los")
        if self.m_los < 0.5 or self.m_nlos < 0.5:
            raise ValueError("Nakagami shape must be at least 0.5")
        if self.m_nlos > self.m_los:
            raise ValueError("m_nlos must not exceed m_los (NLoS fades harder)")
        if (self.eta_los_db is None) != (self.eta_nlos_db is None):
            raise ValueError("set both eta_los_db and eta_nlos_db or neither")

    def alpha(self, visibility: Visibility) -> float:
        return self.alpha_los if visibility is Visibility.LOS else self.alpha_nlos

    def fading_m(self, visibility: Visibility) -> float:
        return self.m_los if visibility is Visibility.LOS else self.m_nlos

    def eta_db(self, tech: Tech) -> float:
        if tech is Tech.G3:
            return self.eta3_db
        if tech is Tech.G4:
            return self.eta4_db
        raise ValueError("unequipped sites have no carrier")

    def eta_db_for(self, tech: Tech, visibility: Visibility) -> float:
        """Excess loss in dB for a link; per-visibility override wins if set."""
        if self.eta_los_db is not None:
            return self.eta_los_db if visibility is Visibility.LOS else self.eta_nlos_db
        return self.eta_db(tech)


PRESETS: dict[str, EnvironmentPreset] = {
    "rural": EnvironmentPreset(s_a=4.88, s_b=0.429, eta3_db=-0.1, eta4_db=-21.0),
    "suburban": EnvironmentPreset(s_a=9.6117, s_b=0.1581, eta3_db=-1.0, eta4_db=-20.0),
}


def get_preset(name: str) -> EnvironmentPreset:
    try:
        return PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown environment preset {name!r}; known: {sorted(PRESETS)}") from None


@dataclass(frozen=True)
class LinkClass:
    """One link category (structure, tech, visibility); resolves its channel
    constants from a preset."""

    structure: Structure
    tech: Tech
    visibility: Visibility

    def __post_init__(self):
        if self.tech is Tech.NONE:
            raise ValueError("a link requires an equipped site")
        if self.structure is Structure.WIND_TURBINE and self.tech is not Tech.G4:
            raise ValueError("turbine base stations are 4G only")

    def alpha(self, preset: EnvironmentPreset) -> float:
        return preset.alpha(self.visibility)

    def fading_m(self, preset: EnvironmentPreset) -> float:
        return preset.fading_m(self.visibility)

    def eta_linear(self, preset: EnvironmentPreset) -> float:
        return db_to_linear(preset.eta_db_for(self.tech, self.visibility))


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0) if np.ndim(db) else 10.0 ** (db / 10.0)


def elevation_angle_deg(horizontal_m, height_m):
    """Elevation angle (degrees) from a ground user to an antenna.

    horizontal_m is ground distance, height_m antenna height above the
    user plane.  A user straight under the antenna sees 90 degrees.
    """
    if np.any(np.asarray(height_m) <= 0):
        raise ValueError("antenna height must be positive")
    if np.any(np.asarray(horizontal_m) < 0):
        raise ValueError("horizontal distance must be non-negative")
    out = np.degrees(np.arctan2(height_m, horizontal_m))
    return float(out) if np.ndim(out) == 0 else out


def los_probability(theta_deg, preset: EnvironmentPreset):
    """Probability that the link at elevation angle theta_deg is line-of-sight.

    Sigmoid in the angle: 1 / (1 + s_a * exp(-s_b * (theta - s_a))).
    """
    theta = np.asarray(theta_deg, dtype=float)
    if np.any(theta < 0) or np.any(theta > 90):
        raise ValueError("elevation angle must be within [0, 90] degrees")
    out = 1.0 / (1.0 + preset.s_a * np.exp(-preset.s_b * (theta - preset.s_a)))
    return float(out) if np.ndim(theta_deg) == 0 else out


def additional_loss(tech: Tech, preset: EnvironmentPreset) -> float:
    """Linear excess-loss factor of the carrier used by ``tech``."""
    return float(db_to_linear(preset.eta_db(tech)))


def mean_rx_power(power_w, eta_linear, distance_m, alpha):
    """Average received power (W) over a link of 3D length distance_m.

    Power-law decay with exponent alpha, scaled by transmit power and the
    carrier's excess-loss factor.  Ranges below MIN_RANGE_M are clamped so
    the law stays bounded near the mast.
    """
    r = np.maximum(np.asarray(distance_m, dtype=float), MIN_RANGE_M)
    out = power_w * eta_linear * r ** (-alpha)
    return float(out) if np.ndim(distance_m) == 0 else out


def sample_visibility(p_los, rng: np.random.Generator, size=None):
    """Bernoulli LoS draw(s); True where the link comes up line-of-sight."""
    p = np.asarray(p_los, dtype=float)
    if np.any(p < 0) or np.any(p > 1):
        raise ValueError("LoS probability must be within [0, 1]")
    u = rng.random(size if size is not None else p.shape or None)
    return u < p


def sample_fading(m, rng: np.random.Generator, size=None):
    """Nakagami-m power fading gain(s): Gamma(shape=m, scale=1/m), unit mean."""
    if np.any(np.asarray(m) < 0.5):
        raise ValueError("Nakagami shape must be at least 0.5")
    return rng.gamma(np.asarray(m, dtype=float), 1.0 / np.asarray(m, dtype=float), size=size)
