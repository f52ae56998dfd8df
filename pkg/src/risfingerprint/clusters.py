"""Statistical generation of clusters and their scatterers.

Single-bounce (SB) clusters are anchored at the Tx, double-bounce (DB)
clusters at the RIS. Angles are radians in the global frame: azimuth in the
x-y plane from +x, elevation from that plane.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SB = "SB"
DB = "DB"


@dataclass(frozen=True)
class AngleRange:
    low: float
    high: float

    def __post_init__(self):
        if not self.low <= self.high:
            raise ValueError(f"empty angle range [{self.low}, {self.high}]")


@dataclass(frozen=True)
class ClusterGenParams:
    poisson_mean: float = 1.8
    scatterers_min: int = 1
    scatterers_max: int = 30
    sb_azimuth: AngleRange = AngleRange(np.deg2rad(-90), np.deg2rad(90))
    sb_elevation: AngleRange = AngleRange(np.deg2rad(-45), np.deg2rad(45))
    db_azimuth: AngleRange = AngleRange(np.deg2rad(225), np.deg2rad(315))
    db_elevation: AngleRange = AngleRange(np.deg2rad(-45), np.deg2rad(45))
    sb_spread_azimuth: float = np.deg2rad(5)
    sb_spread_elevation: float = np.deg2rad(5)
    db_spread_azimuth: float = np.deg2rad(5)
    db_spread_elevation: float = np.deg2rad(5)

    def __post_init__(self):
        if not self.poisson_mean > 0:
            raise ValueError("poisson_mean must be positive")
        if not 1 <= self.scatterers_min <= self.scatterers_max:
            raise ValueError("need 1 <= scatterers_min <= scatterers_max")
        for name in ("sb_spread_azimuth", "sb_spread_elevation",
                     "db_spread_azimuth", "db_spread_elevation"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    def ranges(self, family: str) -> tuple[AngleRange, AngleRange, float, float]:
        if family == SB:
            return (self.sb_azimuth, self.sb_elevation,
                    self.sb_spread_azimuth, self.sb_spread_elevation)
        if family == DB:
            return (self.db_azimuth, self.db_elevation,
                    self.db_spread_azimuth, self.db_spread_elevation)
        raise ValueError(f"unknown cluster family {family!r}")


@dataclass(frozen=True)
class Cluster:
    """One cluster: centre, sampled range/angles, scatterer positions and gains.

    ``scatterers`` has shape (S, 3) and ``gains`` shape (S,) complex.
    """

    position: np.ndarray
    distance: float
    azimuth: float
    elevation: float
    scatterers: np.ndarray
    gains: np.ndarray

    @property
    def n_scatterers(self) -> int:
        return len(self.gains)

    def to_dict(self) -> dict:
        return {
            "position": self.position.tolist(),
            "distance": self.distance,
            "azimuth": self.azimuth,
            "elevation": self.elevation,
            "scatterers": self.scatterers.tolist(),
            "gains": [[g.real, g.imag] for g in self.gains],
        }


@dataclass(frozen=True)
class ClusterSet:
    family: str
    clusters: tuple[Cluster, ...] = field(default_factory=tuple)

    @property
    def normalization(self) -> float:
        """gamma = 1/sqrt(total scatterer count); NaN for an empty set."""
        total = sum(c.n_scatterers for c in self.clusters)
        return 1.0 / np.sqrt(total) if total else float("nan")

    def __len__(self) -> int:
        return len(self.clusters)

    def to_dict(self) -> dict:
        return {"family": self.family, "clusters": [c.to_dict() for c in self.clusters]}


def cluster_position(anchor, d, phi, theta) -> np.ndarray:
    """``anchor + d * [cos(theta)cos(phi), cos(theta)sin(phi), sin(theta)]``; broadcasts."""
    phi = np.asarray(phi, dtype=float)
    theta = np.asarray(theta, dtype=float)
    direction = np.stack([np.cos(theta) * np.cos(phi),
                          np.cos(theta) * np.sin(phi),
                          np.sin(theta)], axis=-1)
    return np.asarray(anchor, dtype=float) + np.asarray(d, dtype=float)[..., None] * direction


def draw_cluster_count(rng: np.random.Generator, mean: float, at_least_one: bool) -> int:
    c = int(rng.poisson(mean))
    while at_least_one and c == 0:
        c = int(rng.poisson(mean))
    return c


def _laplace(rng, mean, spread, size):
    # spread is a standard deviation; Laplace scale b = sd / sqrt(2)
    x = rng.laplace(mean, spread / np.sqrt(2), size) if spread > 0 else np.full(size, mean)
    return np.clip(x, mean - np.pi / 2, mean + np.pi / 2)


def _clamp_height(points, z_bounds):
    if z_bounds is None:
        return points
    out = points.copy()
    out[..., 2] = np.clip(out[..., 2], z_bounds[0], z_bounds[1])
    return out


def sample_cluster_set(params: ClusterGenParams, family: str, anchor, d_min: float,
                       d_max: float, rng: np.random.Generator,
                       z_bounds: tuple[float, float] | None = None) -> ClusterSet:
    """Draw one cluster set around ``anchor``.

    SB sets are conditioned on at least one cluster; DB sets may be empty.
    With ``z_bounds`` every cluster and scatterer height is clamped into the
    interval and the cluster distance is recomputed from the clamped centre.
    """
    if not d_min < d_max:
        raise ValueError(f"need d_min < d_max, got [{d_min}, {d_max}]")
    az, el, spread_az, spread_el = params.ranges(family)
    anchor = np.asarray(anchor, dtype=float)
    n = draw_cluster_count(rng, params.poisson_mean, at_least_one=(family == SB))
    clusters = []
    for _ in range(n):
        d = rng.uniform(d_min, d_max)
        phi = rng.uniform(az.low, az.high)
        theta = rng.uniform(el.low, el.high)
        s = int(rng.integers(params.scatterers_min, params.scatterers_max + 1))
        phi_s = _laplace(rng, phi, spread_az, s)
        theta_s = _laplace(rng, theta, spread_el, s)
        gains = (rng.standard_normal(s) + 1j * rng.standard_normal(s)) / np.sqrt(2)

        centre = _clamp_height(cluster_position(anchor, d, phi, theta), z_bounds)
        scatterers = _clamp_height(cluster_position(anchor, np.full(s, d), phi_s, theta_s), z_bounds)
        clusters.append(Cluster(
            position=centre,
            distance=float(np.linalg.norm(centre - anchor)),
            azimuth=float(phi),
            elevation=float(theta),
            scatterers=scatterers,
            gains=gains,
        ))
    return ClusterSet(family, tuple(clusters))
