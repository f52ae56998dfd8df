"""Immutable description of the simulated room and its radio hardware."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .clusters import ClusterGenParams
from .geometry import RisGeometry, TxGeometry, vec3, _check_unit
from .propagation import PathlossParams
from .radiation import PatternSpec

SPEED_OF_LIGHT = 299_792_458.0


@dataclass(frozen=True)
class Room:
    """Axis-aligned box with one corner at the origin."""

    length: float
    width: float
    height: float

    def __post_init__(self):
        if not (self.length > 0 and self.width > 0 and self.height > 0):
            raise ValueError("room dimensions must be positive")

    def contains(self, p) -> bool:
        p = np.asarray(p, dtype=float)
        return bool(0 <= p[0] <= self.length and 0 <= p[1] <= self.width
                    and 0 <= p[2] <= self.height)


@dataclass(frozen=True)
class ConsistencyParams:
    """Grid granularities and correlation length for the spatial maps (metres)."""

    condition_granularity: float = 1.0
    sf_granularity: float = 2.0
    cluster_granularity: float = 2.5
    sf_correlation: float = 4.0
    condition_correlation: float | None = None  # defaults to sf_correlation

    def __post_init__(self):
        for name in ("condition_granularity", "sf_granularity", "cluster_granularity",
                     "sf_correlation"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @property
    def condition_corr(self) -> float:
        return self.sf_correlation if self.condition_correlation is None else self.condition_correlation


@dataclass(frozen=True)
class Scene:
    room: Room
    tx: TxGeometry
    ris: RisGeometry
    rx_normal: np.ndarray
    frequency: float
    pathloss: PathlossParams
    tx_pattern: PatternSpec = PatternSpec()
    rx_pattern: PatternSpec = PatternSpec()
    cluster_params: ClusterGenParams = ClusterGenParams()
    consistency: ConsistencyParams = ConsistencyParams()
    rx_height: float = 1.0
    ris_enabled: bool = True
    cluster_margin: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "rx_normal", vec3(self.rx_normal))
        _check_unit("e_R^n", self.rx_normal)
        if not self.frequency > 0:
            raise ValueError("frequency must be positive")
        if abs(self.pathloss.wavelength - self.wavelength) > 1e-12 * self.wavelength:
            raise ValueError("path-loss wavelength does not match the carrier frequency")
        for name, p in (("Tx", self.tx.position), ("RIS", self.ris.position)):
            if not self.room.contains(p):
                raise ValueError(f"{name} position {p.tolist()} lies outside the room")
        if not 0 < self.rx_height < self.room.height:
            raise ValueError("Rx height must lie strictly inside the room")

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.frequency

    @property
    def z_bounds(self) -> tuple[float, float]:
        return (self.cluster_margin, self.room.height - self.cluster_margin)

    def with_ris(self, **changes) -> "Scene":
        return replace(self, ris=replace(self.ris, **changes))


def paper_scene(**overrides) -> Scene:
    """The 20 x 20 x 3.5 m office with the default Tx, 20 x 20 RIS and omni Rx."""
    frequency = overrides.pop("frequency", 5.2e9)
    lam = SPEED_OF_LIGHT / frequency
    ris_side = overrides.pop("ris_side", 20)
    n_antennas = overrides.pop("n_antennas", 4)
    kwargs = dict(
        room=Room(20.0, 20.0, 3.5),
        tx=TxGeometry(position=[0, 10, 3], n_antennas=n_antennas, spacing=lam / 2,
                      direction=[0, 0, -1], normal=[1, 0, 0]),
        ris=RisGeometry(position=[10, 15, 3], rows=ris_side, cols=ris_side,
                        unit_length=lam / 2, unit_width=lam / 2,
                        row_vec=[0, 0, 1], col_vec=[1, 0, 0], normal=[0, -1, 0]),
        rx_normal=[0, 0, 1],
        frequency=frequency,
        pathloss=PathlossParams(wavelength=lam),
        tx_pattern=PatternSpec.cosine_db(8.0),
    )
    kwargs.update(overrides)
    return Scene(**kwargs)
