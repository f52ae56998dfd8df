"""Radiation patterns of the Tx/Rx antennas and of a single RIS unit."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import RisGeometry

OMNI = "omnidirectional"
COSINE = "cosine"


@dataclass(frozen=True)
class PatternSpec:
    """Antenna pattern; ``g_max`` is linear and ignored for omnidirectional."""

    kind: str = OMNI
    g_max: float = 1.0

    def __post_init__(self):
        if self.kind not in (OMNI, COSINE):
            raise ValueError(f"unknown pattern kind {self.kind!r}")
        if self.kind == COSINE and not self.g_max >= 2.0:
            raise ValueError(f"cosine pattern needs g_max >= 2 (linear), got {self.g_max}")

    @classmethod
    def cosine_db(cls, g_max_db: float) -> "PatternSpec":
        return cls(COSINE, 10.0 ** (g_max_db / 10.0))


def gain_antenna(spec: PatternSpec, phi):
    """Linear gain at elevation ``phi`` (radians, in [0, pi]).

    The cosine pattern is ``g_max * cos(phi) ** (g_max / 2 - 1)`` in the
    front hemisphere and zero behind it.
    """
    phi = np.asarray(phi, dtype=float)
    if np.any((phi < 0) | (phi > np.pi)) or np.any(np.isnan(phi)):
        raise ValueError("pattern angle must lie in [0, pi]")
    if spec.kind == OMNI:
        out = np.ones_like(phi)
    else:
        c = np.cos(phi)
        front = phi <= np.pi / 2
        out = np.where(front, spec.g_max * np.clip(c, 0.0, None) ** (spec.g_max / 2 - 1), 0.0)
    return out if out.ndim else float(out)


def ris_max_gain(ris: RisGeometry, wavelength: float) -> float:
    """Boresight gain of one unit, 4*pi*area/lambda**2."""
    return 4 * np.pi * ris.unit_length * ris.unit_width / wavelength**2


def ris_shadowed(phi1, phi2) -> bool | np.ndarray:
    """True where either angle leaves the unit's front half-space."""
    return (np.asarray(phi1) >= np.pi / 2) | (np.asarray(phi2) >= np.pi / 2)


def gain_ris_unit(ris: RisGeometry, wavelength: float, phi1, phi2):
    """Two-angle unit pattern ``G_max * cos(phi1) * cos(phi2)``; 0 when shadowed."""
    g = ris_max_gain(ris, wavelength)
    phi1 = np.asarray(phi1, dtype=float)
    phi2 = np.asarray(phi2, dtype=float)
    out = np.where(ris_shadowed(phi1, phi2), 0.0, g * np.cos(phi1) * np.cos(phi2))
    return out if out.ndim else float(out)


def ris_traversal_gain(ris: RisGeometry, wavelength: float, phi):
    """One-sided unit gain ``G_max * cos(phi)`` for a single incidence or reflection leg.

    The channel takes the product of the incoming and outgoing legs, so the
    two-angle pattern appears as ``G_max**2 * cos(phi_in) * cos(phi_out)``.
    """
    phi = np.asarray(phi, dtype=float)
    g = ris_max_gain(ris, wavelength)
    out = np.where(phi >= np.pi / 2, 0.0, g * np.cos(phi))
    return out if out.ndim else float(out)
