"""Spatially consistent grid maps over the room floor plan.

Rows run along +y and columns along +x; cell ``(p, q)`` covers
``[q*g, (q+1)*g) x [p*g, (p+1)*g)`` from the map origin. Points on the far
room boundary fall into the last row/column.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.signal import fftconvolve
from scipy.special import ndtr

from . import streams
from .clusters import DB, SB, ClusterSet, sample_cluster_set
from .geometry import distance

# Normalisation applied after the exponential filter; see ``correlate``.
KERNEL_NORM = "kernel"
SAMPLE_NORM = "sample"


@dataclass(frozen=True)
class GridMap:
    origin: np.ndarray
    granularity: float
    values: np.ndarray
    kind: str = ""
    seed: int | None = None
    extent: tuple[float, float] | None = None

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]

    def cell_index(self, position) -> tuple[int, int]:
        x = float(position[0]) - float(self.origin[0])
        y = float(position[1]) - float(self.origin[1])
        ext_x, ext_y = self.extent if self.extent else (self.cols * self.granularity,
                                                         self.rows * self.granularity)
        if not (0.0 <= x <= ext_x and 0.0 <= y <= ext_y):
            raise ValueError(f"position {list(map(float, position[:2]))} outside the mapped area")
        q = min(int(math.floor(x / self.granularity)), self.cols - 1)
        p = min(int(math.floor(y / self.granularity)), self.rows - 1)
        return p, q

    def cell_centers(self, z: float) -> np.ndarray:
        """Cell-centre coordinates at height ``z``, shape (rows, cols, 3)."""
        g = self.granularity
        ys = self.origin[1] + (np.arange(self.rows) + 0.5) * g
        xs = self.origin[0] + (np.arange(self.cols) + 0.5) * g
        xx, yy = np.meshgrid(xs, ys)
        return np.stack([xx, yy, np.full_like(xx, z)], axis=-1)

    def descriptor(self) -> dict:
        return {
            "kind": self.kind,
            "origin": [float(v) for v in self.origin],
            "granularity_m": self.granularity,
            "rows": self.rows,
            "cols": self.cols,
            "seed": self.seed,
        }


def query(grid: GridMap, position):
    p, q = grid.cell_index(position)
    return grid.values[p, q]


def grid_shape(length: float, width: float, granularity: float) -> tuple[int, int]:
    # tolerance keeps 20 / 2.5 from becoming 9 through rounding
    rows = max(1, math.ceil(width / granularity - 1e-9))
    cols = max(1, math.ceil(length / granularity - 1e-9))
    return rows, cols


def exponential_kernel(granularity: float, corr_distance: float, radius_factor: float = 4.0):
    """Centred kernel ``exp(-r * g / d_co)`` truncated at ``radius_factor * d_co / g`` cells."""
    radius = radius_factor * corr_distance / granularity
    n = int(math.floor(radius))
    k = np.arange(-n, n + 1)
    r = np.hypot(k[:, None], k[None, :])
    h = np.exp(-r * granularity / corr_distance)
    h[r > radius] = 0.0
    return h


def correlate(white: np.ndarray, kernel: np.ndarray, normalize: str = KERNEL_NORM) -> np.ndarray:
    """Filter an i.i.d. unit-variance field and restore unit variance.

    ``kernel``: each cell is divided by the root energy of the kernel taps
    that land inside the grid, so every cell is exactly N(0, 1) under zero
    padding. ``sample``: the whole map is divided by its own sample std.
    """
    filtered = fftconvolve(white, kernel, mode="same")
    if normalize == KERNEL_NORM:
        energy = fftconvolve(np.ones_like(white), kernel**2, mode="same")
        # the centre tap (value 1) always lands inside, so energy >= 1
        return filtered / np.sqrt(np.clip(energy, 1.0, None))
    if normalize == SAMPLE_NORM:
        s = filtered.std()
        return filtered / s if s > 0 else filtered
    raise ValueError(f"unknown normalisation {normalize!r}")


def pit(v):
    """Probability integral transform of a standard Gaussian value to U(0, 1)."""
    return ndtr(v)


def los_probability(d):
    """InH-Office LoS probability versus distance (metres)."""
    d = np.asarray(d, dtype=float)
    out = np.where(d <= 5.0, 1.0,
                   np.where(d <= 49.0, np.exp(-(d - 5.0) / 70.8),
                            0.54 * np.exp(-(d - 49.0) / 211.7)))
    return out if out.ndim else float(out)


def gen_condition_map(kind: str, room, anchor, granularity: float, corr_distance: float,
                      prob_model: Callable, rng: np.random.Generator, height: float = 1.0,
                      normalize: str = KERNEL_NORM, seed: int | None = None) -> GridMap:
    """Binary availability map: 1 where the correlated uniform draw is <= Pr(distance)."""
    rows, cols = grid_shape(room.length, room.width, granularity)
    white = rng.standard_normal((rows, cols))
    v = correlate(white, exponential_kernel(granularity, corr_distance), normalize)
    u = pit(v)
    grid = GridMap(np.zeros(3), granularity, np.zeros((rows, cols), dtype=np.uint8), kind,
                   seed, (room.length, room.width))
    d = distance(np.asarray(anchor, dtype=float), grid.cell_centers(height))
    grid.values[...] = u <= np.asarray(prob_model(d))
    return grid


def gen_sf_map(kind: str, room, sigma: float, granularity: float, corr_distance: float,
               rng: np.random.Generator, normalize: str = KERNEL_NORM,
               seed: int | None = None) -> GridMap:
    """Shadow-fading map in dB with marginal N(0, sigma**2) and exponential correlation."""
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    rows, cols = grid_shape(room.length, room.width, granularity)
    white = rng.standard_normal((rows, cols))
    values = sigma * correlate(white, exponential_kernel(granularity, corr_distance), normalize)
    return GridMap(np.zeros(3), granularity, values, kind, seed, (room.length, room.width))


def gen_cluster_map(room, granularity: float, params, tx_position, ris_position, seed: int,
                    d_min: float = 1.0, height: float = 1.0,
                    z_bounds: tuple[float, float] | None = None) -> GridMap:
    """Independent (SB, DB) cluster sets per cell, each cell on its own substream."""
    rows, cols = grid_shape(room.length, room.width, granularity)
    grid = GridMap(np.zeros(3), granularity, np.empty((rows, cols), dtype=object), "clusters",
                   seed, (room.length, room.width))
    centers = grid.cell_centers(height)
    for p in range(rows):
        for q in range(cols):
            rng = streams.substream(seed, streams.CLUSTERS, p, q)
            grid.values[p, q] = sample_cell_clusters(params, tx_position, ris_position,
                                                     centers[p, q], rng, d_min, z_bounds)
    return grid


def sample_cell_clusters(params, tx_position, ris_position, point, rng, d_min=1.0,
                         z_bounds=None) -> tuple[ClusterSet, ClusterSet]:
    # upper range bound never collapses onto d_min, even for a cell hugging the anchor
    d_sb = max(float(distance(tx_position, point)), d_min + 1e-3)
    d_db = max(float(distance(ris_position, point)), d_min + 1e-3)
    sb = sample_cluster_set(params, SB, tx_position, d_min, d_sb, rng, z_bounds)
    db = sample_cluster_set(params, DB, ris_position, d_min, d_db, rng, z_bounds)
    return sb, db


@dataclass(frozen=True)
class LocalState:
    """Large-scale channel state seen at one Rx position."""

    los: int
    vlos: int
    chi_los: float
    chi_nlos: float
    sb: ClusterSet
    db: ClusterSet
    key: tuple = ()


@dataclass(frozen=True)
class ConsistencyMaps:
    los: GridMap
    vlos: GridMap
    sf_los: GridMap
    sf_nlos: GridMap
    clusters: GridMap

    def state_at(self, rx) -> LocalState:
        cell = self.clusters.cell_index(rx)
        sb, db = self.clusters.values[cell]
        return LocalState(
            los=int(query(self.los, rx)),
            vlos=int(query(self.vlos, rx)),
            chi_los=float(query(self.sf_los, rx)),
            chi_nlos=float(query(self.sf_nlos, rx)),
            sb=sb,
            db=db,
            key=("cell",) + cell,
        )

    def grids(self) -> dict[str, GridMap]:
        return {"los": self.los, "vlos": self.vlos, "sf_los": self.sf_los,
                "sf_nlos": self.sf_nlos}


def build_consistency_maps(scene, seed: int, normalize: str = KERNEL_NORM) -> ConsistencyMaps:
    """Generate all five maps for ``scene`` from one master seed."""
    cp = scene.consistency
    pl = scene.pathloss
    room = scene.room
    los = gen_condition_map("los", room, scene.tx.position, cp.condition_granularity,
                            cp.condition_corr, los_probability,
                            streams.substream(seed, streams.LOS_MAP), scene.rx_height,
                            normalize, seed)
    vlos = gen_condition_map("vlos", room, scene.ris.position, cp.condition_granularity,
                             cp.condition_corr, los_probability,
                             streams.substream(seed, streams.VLOS_MAP), scene.rx_height,
                             normalize, seed)
    sf_los = gen_sf_map("sf_los", room, pl.sigma_los, cp.sf_granularity, cp.sf_correlation,
                        streams.substream(seed, streams.SF_LOS), normalize, seed)
    sf_nlos = gen_sf_map("sf_nlos", room, pl.sigma_nlos, cp.sf_granularity, cp.sf_correlation,
                         streams.substream(seed, streams.SF_NLOS), normalize, seed)
    clusters = gen_cluster_map(room, cp.cluster_granularity, scene.cluster_params,
                               scene.tx.position, scene.ris.position, seed, pl.d0,
                               scene.rx_height, scene.z_bounds)
    return ConsistencyMaps(los, vlos, sf_los, sf_nlos, clusters)


class IidState:
    """Per-position i.i.d. draws standing in for the maps (no spatial consistency).

    The draw is keyed by the Rx coordinates in millimetres, so every
    measurement at one position sees the same state.
    """

    def __init__(self, scene, seed: int):
        self.scene = scene
        self.seed = int(seed)

    def state_at(self, rx) -> LocalState:
        s = self.scene
        key = tuple(int(round(float(c) * 1000)) for c in rx[:3])
        if min(key) < 0 or not s.room.contains(rx):
            raise ValueError(f"position {list(map(float, rx))} outside the room")
        rng = streams.substream(self.seed, streams.IID, *key)
        p_los = los_probability(distance(s.tx.position, rx))
        p_vlos = los_probability(distance(s.ris.position, rx))
        los = int(rng.uniform() <= p_los)
        vlos = int(rng.uniform() <= p_vlos)
        chi_los = float(rng.normal(0.0, s.pathloss.sigma_los))
        chi_nlos = float(rng.normal(0.0, s.pathloss.sigma_nlos))
        sb, db = sample_cell_clusters(s.cluster_params, s.tx.position, s.ris.position,
                                      np.asarray(rx, dtype=float), rng, s.pathloss.d0,
                                      s.z_bounds)
        return LocalState(los, vlos, chi_los, chi_nlos, sb, db, ("pos",) + key)
