"""Close-in reference-distance path loss for the four path families.

Shadow fading enters every function as an argument ``chi`` (dB); nothing
here draws random numbers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import RisGeometry


@dataclass(frozen=True)
class PathlossParams:
    wavelength: float
    n_los: float = 1.73
    n_nlos: float = 3.19
    sigma_los: float = 3.02
    sigma_nlos: float = 8.29
    d0: float = 1.0
    d0_1: float = 1.0
    d0_2: float = 1.0

    def __post_init__(self):
        for name in ("wavelength", "n_los", "n_nlos", "d0", "d0_1", "d0_2"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("sigma_los", "sigma_nlos"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


def _positive(**kw):
    for name, v in kw.items():
        if np.any(np.asarray(v) <= 0):
            raise ValueError(f"{name} must be positive, got {v}")


def free_space_ref(p: PathlossParams) -> float:
    return 20 * np.log10(4 * np.pi * p.d0 / p.wavelength)


def ris_ref(p: PathlossParams, ris: RisGeometry) -> float:
    """Reference-distance loss of the whole panel (first term of the RIS models)."""
    aperture = ris.n_units * ris.unit_length * ris.unit_width * ris.reflection
    return 20 * np.log10(4 * np.pi * p.d0_1 * p.d0_2 / aperture)


def pl_los(p: PathlossParams, d_tr, chi=0.0):
    if np.any(np.asarray(d_tr) < p.d0):
        raise ValueError(f"Tx-Rx distance {d_tr} below the reference distance {p.d0} m")
    return free_space_ref(p) + 10 * p.n_los * np.log10(np.asarray(d_tr) / p.d0) + chi


def pl_vlos(p: PathlossParams, ris: RisGeometry, d_ti, d_ir, chi=0.0):
    _positive(d_ti=d_ti, d_ir=d_ir)
    if np.any(np.asarray(d_ti) < p.d0_1) or np.any(np.asarray(d_ir) < p.d0_2):
        raise ValueError("Tx-RIS or RIS-Rx distance below its reference distance")
    ratio = np.asarray(d_ti) * np.asarray(d_ir) / (p.d0_1 * p.d0_2)
    return ris_ref(p, ris) + 10 * p.n_los * np.log10(ratio) + chi


def pl_sb_nlos(p: PathlossParams, d_tc, d_cr, chi=0.0):
    _positive(d_tc=d_tc, d_cr=d_cr)
    total = np.asarray(d_tc) + np.asarray(d_cr)
    return free_space_ref(p) + 10 * p.n_nlos * np.log10(total / p.d0) + chi


def pl_db_nlos(p: PathlossParams, ris: RisGeometry, d_ti, d_ic, d_cr, chi=0.0):
    _positive(d_ti=d_ti, d_ic=d_ic, d_cr=d_cr)
    ratio = np.asarray(d_ti) * (np.asarray(d_ic) + np.asarray(d_cr)) / (p.d0_1 * p.d0_2)
    return ris_ref(p, ris) + 10 * p.n_nlos * np.log10(ratio) + chi


def db_to_linear(pl_db):
    """Linear attenuation ``10**(-PL/10)`` for a loss given in dB."""
    return 10.0 ** (-np.asarray(pl_db, dtype=float) / 10.0)
