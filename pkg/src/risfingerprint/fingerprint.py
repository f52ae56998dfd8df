"""Measurement planning, RSS computation and fingerprint database assembly."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import streams
from .channel import KINDS, ChannelEngine
from .geometry import distance

RSS_FLOOR_DBM = -200.0
_CACHE_LIMIT = 512


class DatabaseFormatError(ValueError):
    """A database CSV that does not follow the ``x,y,z,rss_1..rss_N`` schema."""

    def __init__(self, message: str, row: int | None = None):
        super().__init__(message if row is None else f"row {row}: {message}")
        self.row = row


@dataclass(frozen=True)
class MeasurementPlan:
    beamformers: np.ndarray  # (N, M_T) complex
    phases: np.ndarray       # (N, I) in [0, 2pi)
    targets: np.ndarray      # (N, 3)
    symbol: complex = 1.0

    def __post_init__(self):
        norms = np.linalg.norm(self.beamformers, axis=1)
        if np.any(np.abs(norms - 1) > 1e-12):
            raise ValueError("beamformers must have unit norm")
        if np.any((self.phases < 0) | (self.phases >= 2 * np.pi)):
            raise ValueError("RIS phases must lie in [0, 2pi)")

    @property
    def n(self) -> int:
        return self.phases.shape[0]


@dataclass(frozen=True)
class SurveyGrid:
    """Cell centres of a uniform grid over the area of interest, row-major in y then x."""

    x_range: tuple[float, float]
    y_range: tuple[float, float]
    spacing: float
    z: float

    def __post_init__(self):
        if not self.spacing > 0:
            raise ValueError("survey spacing must be positive")
        if not (self.x_range[1] > self.x_range[0] and self.y_range[1] > self.y_range[0]):
            raise ValueError("empty area of interest")

    @property
    def shape(self) -> tuple[int, int]:
        ny = math.ceil((self.y_range[1] - self.y_range[0]) / self.spacing - 1e-9)
        nx = math.ceil((self.x_range[1] - self.x_range[0]) / self.spacing - 1e-9)
        return ny, nx

    @property
    def size(self) -> int:
        ny, nx = self.shape
        return ny * nx

    def positions(self) -> np.ndarray:
        ny, nx = self.shape
        xs = self.x_range[0] + (np.arange(nx) + 0.5) * self.spacing
        ys = self.y_range[0] + (np.arange(ny) + 0.5) * self.spacing
        xx, yy = np.meshgrid(xs, ys)
        return np.column_stack([xx.ravel(), yy.ravel(), np.full(xx.size, self.z)])

    def check_inside(self, room) -> None:
        for p in self.positions()[[0, -1]]:
            if not room.contains(p):
                raise ValueError(f"survey position {p.tolist()} lies outside the room")


@dataclass
class FingerprintDb:
    positions: np.ndarray   # (S_P, 3)
    rss: np.ndarray         # (S_P, N) dBm
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float)
        self.rss = np.asarray(self.rss, dtype=float)
        if self.rss.ndim != 2 or self.positions.shape != (self.rss.shape[0], 3):
            raise ValueError("positions and RSS rows disagree")

    def __len__(self) -> int:
        return self.rss.shape[0]

    @property
    def n_measurements(self) -> int:
        return self.rss.shape[1]

    def subset(self, idx) -> "FingerprintDb":
        return FingerprintDb(self.positions[idx], self.rss[idx], dict(self.provenance))

    def to_csv(self) -> str:
        buf = io.StringIO()
        header = ["x", "y", "z"] + [f"rss_{n + 1}" for n in range(self.n_measurements)]
        buf.write(",".join(header) + "\n")
        for pos, row in zip(self.positions, self.rss):
            buf.write(",".join(f"{v:.6f}" for v in (*pos, *row)) + "\n")
        return buf.getvalue()

    def write_csv(self, path) -> None:
        Path(path).write_text(self.to_csv(), encoding="utf-8", newline="")

    @classmethod
    def read_csv(cls, path) -> "FingerprintDb":
        with open(path, newline="", encoding="utf-8") as fh:
            return cls.parse_csv(fh)

    @classmethod
    def parse_csv(cls, lines) -> "FingerprintDb":
        reader = csv.reader(lines)
        try:
            header = next(reader)
        except StopIteration:
            raise DatabaseFormatError("empty database file", 1) from None
        header = [h.strip() for h in header]
        n = len(header) - 3
        expected = ["x", "y", "z"] + [f"rss_{k + 1}" for k in range(n)]
        if n < 1 or header != expected:
            raise DatabaseFormatError(f"bad header {header!r}; expected x,y,z,rss_1..rss_N", 1)
        values = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != n + 3:
                raise DatabaseFormatError(f"expected {n + 3} columns, found {len(row)}", lineno)
            try:
                vals = [float(v) for v in row]
            except ValueError as exc:
                raise DatabaseFormatError(f"non-numeric value ({exc})", lineno) from None
            if not all(math.isfinite(v) for v in vals):
                raise DatabaseFormatError("non-finite value", lineno)
            values.append(vals)
        if not values:
            raise DatabaseFormatError("database has no records", 2)
        arr = np.array(values)
        return cls(arr[:, :3], arr[:, 3:])


def uniform_beamformer(m_t: int) -> np.ndarray:
    if m_t < 1:
        raise ValueError("need at least one antenna")
    return np.full(m_t, 1 / np.sqrt(m_t), dtype=complex)


def ebs_phases(scene, target) -> np.ndarray:
    """Unit phases that co-phase the Tx-centre -> unit -> ``target`` paths."""
    units = scene.ris.unit_positions()
    total = distance(scene.tx.position, units) + distance(units, np.asarray(target, dtype=float))
    return np.mod(2 * np.pi * total / scene.wavelength, 2 * np.pi)


def sweep_targets(grid: SurveyGrid, n: int) -> np.ndarray:
    """Centres of an ``a x b`` tiling of the AoI, a = floor(sqrt(n)), b = ceil(n / a)."""
    if n < 1:
        raise ValueError("need at least one measurement")
    a = math.isqrt(n)
    b = math.ceil(n / a)
    (x0, x1), (y0, y1) = grid.x_range, grid.y_range
    xs = x0 + (np.arange(b) + 0.5) * (x1 - x0) / b
    ys = y0 + (np.arange(a) + 0.5) * (y1 - y0) / a
    xx, yy = np.meshgrid(xs, ys)
    pts = np.column_stack([xx.ravel(), yy.ravel(), np.full(xx.size, grid.z)])
    return pts[:n]


def build_plan(scene, grid: SurveyGrid, n: int) -> MeasurementPlan:
    targets = sweep_targets(grid, n)
    f = np.tile(uniform_beamformer(scene.tx.n_antennas), (n, 1))
    phases = np.array([ebs_phases(scene, t) for t in targets])
    # mod can round up to exactly 2pi
    phases[phases >= 2 * np.pi] = 0.0
    return MeasurementPlan(f, phases, targets)


def rss(cir, f, p0_mw: float, symbol: complex = 1.0) -> float:
    """Received power in dBm of the coherent tap sum (floored at -200 dBm)."""
    if not p0_mw > 0:
        raise ValueError("transmit power must be positive")
    field_ = np.sqrt(p0_mw) * (cir.matrix() @ np.asarray(f)) * symbol if cir.taps else 0.0
    return power_to_dbm(abs(field_) ** 2)


def power_to_dbm(p_mw):
    p = np.asarray(p_mw, dtype=float)
    with np.errstate(divide="ignore"):
        out = np.maximum(10 * np.log10(p), RSS_FLOOR_DBM)
    return out if out.ndim else float(out)


@dataclass
class SurveyResult:
    db: FingerprintDb
    path_power_mw: dict[str, float]   # AoI- and measurement-averaged power per path kind


def survey(scene, maps, plan: MeasurementPlan, grid: SurveyGrid, p0_mw: float,
           noise_db: float = 0.0, seed: int = 0) -> SurveyResult:
    """Evaluate every measurement at every survey position.

    Records follow the grid's row-major order and measurements the plan order.
    ``noise_db`` adds i.i.d. Gaussian noise (dB) to each RSS value.
    """
    grid.check_inside(scene.room)
    positions = grid.positions()
    engine = ChannelEngine(scene, plan.phases)
    f = plan.beamformers                       # (N, M_T)
    root_p0 = np.sqrt(p0_mw)
    out = np.empty((len(positions), plan.n))
    power = dict.fromkeys(KINDS, 0.0)
    for k, rx in enumerate(positions):
        state = maps.state_at(rx)
        total = np.zeros(plan.n, dtype=complex)
        per_kind = dict.fromkeys(KINDS, 0.0)
        for tap in engine.taps(rx, state):
            contrib = root_p0 * np.einsum("nm,nm->n", tap.amplitudes, f) * plan.symbol
            total += contrib
            per_kind[tap.kind] = per_kind[tap.kind] + contrib
        for kind in KINDS:
            power[kind] += float(np.mean(np.abs(per_kind[kind]) ** 2))
        out[k] = power_to_dbm(np.abs(total) ** 2)
        if len(engine._db_cache) > _CACHE_LIMIT:
            engine.clear_cache()
    if noise_db > 0:
        out += streams.substream(seed, streams.NOISE).normal(0.0, noise_db, out.shape)
    power = {k: v / len(positions) for k, v in power.items()}
    return SurveyResult(FingerprintDb(positions, out), power)


def generate_database(scene, maps, plan: MeasurementPlan, grid: SurveyGrid,
                      p0_mw: float, noise_db: float = 0.0, seed: int = 0) -> FingerprintDb:
    return survey(scene, maps, plan, grid, p0_mw, noise_db, seed).db


def radio_maps(db: FingerprintDb, grid: SurveyGrid) -> np.ndarray:
    """RSS per measurement laid out on the survey grid, shape (N, ny, nx)."""
    ny, nx = grid.shape
    return db.rss.T.reshape(db.n_measurements, ny, nx)
