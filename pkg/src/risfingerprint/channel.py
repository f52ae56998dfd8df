"""Channel impulse response as a sum of LoS, VLoS, SB-NLoS and DB-NLoS taps.

Path loss uses centre-to-centre distances; carrier phases use per-antenna
and per-unit distances. Every tap carries one complex amplitude per Tx
antenna, i.e. one entry of the ``1 x M_T`` channel row.

The ``cir_*`` functions evaluate one RIS phase vector. ``ChannelEngine``
evaluates a whole measurement plan at once and caches the RIS-side sums,
which do not depend on the Rx position.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .clusters import Cluster, ClusterSet
from .geometry import distance, elevation_angle, ris_offsets, tx_offsets
from .propagation import db_to_linear, pl_db_nlos, pl_los, pl_sb_nlos, pl_vlos
from .radiation import gain_antenna, ris_traversal_gain
from .scene import SPEED_OF_LIGHT

LOS = "LoS"
VLOS = "VLoS"
SB_NLOS = "SB"
DB_NLOS = "DB"
KINDS = (LOS, VLOS, SB_NLOS, DB_NLOS)


@dataclass(frozen=True)
class PathTap:
    delay: float
    amplitudes: np.ndarray
    kind: str
    source: int | None = None


@dataclass(frozen=True)
class Cir:
    taps: list[PathTap]
    position: np.ndarray
    measurement: int | None = None

    def count(self, kind: str) -> int:
        return sum(t.kind == kind for t in self.taps)

    def matrix(self) -> np.ndarray:
        """Narrowband channel row: all taps summed, shape (M_T,)."""
        m_t = len(self.taps[0].amplitudes) if self.taps else 0
        return sum((t.amplitudes for t in self.taps), np.zeros(m_t, dtype=complex))


class RisContext:
    """Rx-independent geometry of the Tx array and the RIS panel."""

    def __init__(self, scene):
        self.scene = scene
        tx, ris = scene.tx, scene.ris
        self.wavenumber = 2 * np.pi / scene.wavelength
        self.tx_elements = tx.position + tx_offsets(tx)
        self.units = ris.position + ris_offsets(ris)
        # d^{TI}_{m,i}, shape (M_T, I)
        self.d_ti_mi = distance(self.tx_elements[:, None, :], self.units[None, :, :])
        self.d_ti = float(distance(tx.position, ris.position))
        self.g_t_ti = gain_antenna(scene.tx_pattern, elevation_angle(tx.position, tx.normal,
                                                                     ris.position))
        self.g_i_it = ris_traversal_gain(ris, scene.wavelength,
                                         elevation_angle(ris.position, ris.normal, tx.position))

    def phase_weights(self, thetas: np.ndarray) -> np.ndarray:
        """``exp(j(theta_i - k d^{TI}_{m,i}))`` for each phase vector, shape (N, M_T, I)."""
        thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
        if thetas.shape[1] != self.units.shape[0]:
            raise ValueError(f"phase vector length {thetas.shape[1]} != I={self.units.shape[0]}")
        return np.exp(1j * (thetas[:, None, :] - self.wavenumber * self.d_ti_mi[None, :, :]))


def _g_t(scene, target) -> float:
    return gain_antenna(scene.tx_pattern, elevation_angle(scene.tx.position, scene.tx.normal,
                                                          target))


def _g_r(scene, rx, target) -> float:
    return gain_antenna(scene.rx_pattern, elevation_angle(rx, scene.rx_normal, target))


def los_tap(scene, rx, chi: float) -> PathTap:
    rx = np.asarray(rx, dtype=float)
    tx = scene.tx
    d_tr = float(distance(tx.position, rx))
    if d_tr == 0:
        raise ValueError("Rx coincides with the Tx")
    amp = np.sqrt(db_to_linear(pl_los(scene.pathloss, d_tr, chi))
                  * _g_t(scene, rx) * _g_r(scene, rx, tx.position))
    d_m = distance(tx.position + tx_offsets(tx), rx)
    k = 2 * np.pi / scene.wavelength
    return PathTap(d_tr / SPEED_OF_LIGHT, amp * np.exp(-1j * k * d_m), LOS)


def _vlos_scale(scene, ctx: RisContext, rx, chi):
    ris = scene.ris
    d_ir = float(distance(ris.position, rx))
    if d_ir == 0:
        raise ValueError("Rx coincides with the RIS")
    loss = db_to_linear(pl_vlos(scene.pathloss, ris, ctx.d_ti, d_ir, chi))
    g = (ctx.g_t_ti * _g_r(scene, rx, ris.position) * ctx.g_i_it
         * ris_traversal_gain(ris, scene.wavelength,
                              elevation_angle(ris.position, ris.normal, rx)))
    return np.sqrt(loss * g), (ctx.d_ti + d_ir) / SPEED_OF_LIGHT


def vlos_amplitudes(scene, ctx: RisContext, weights: np.ndarray, rx, chi: float):
    """VLoS amplitudes for every phase vector in ``weights``: shape (N, M_T), and the delay."""
    rx = np.asarray(rx, dtype=float)
    scale, delay = _vlos_scale(scene, ctx, rx, chi)
    d_ir_i = distance(ctx.units, rx)
    return scale * (weights @ np.exp(-1j * ctx.wavenumber * d_ir_i)), delay


def sb_taps(scene, rx, sb: ClusterSet, chi: float) -> list[PathTap]:
    rx = np.asarray(rx, dtype=float)
    tx = scene.tx
    k = 2 * np.pi / scene.wavelength
    elements = tx.position + tx_offsets(tx)
    gamma = sb.normalization
    taps = []
    for c, cl in enumerate(sb.clusters):
        d_tc = float(distance(tx.position, cl.position))
        d_cr = float(distance(cl.position, rx))
        loss = db_to_linear(pl_sb_nlos(scene.pathloss, d_tc, d_cr, chi))
        scale = np.sqrt(loss * _g_t(scene, cl.position) * _g_r(scene, rx, cl.position))
        d_ts = distance(elements[:, None, :], cl.scatterers[None, :, :])   # (M_T, S)
        d_sr = distance(cl.scatterers, rx)                                 # (S,)
        amp = gamma * scale * (np.exp(-1j * k * (d_ts + d_sr[None, :])) @ cl.gains)
        taps.append(PathTap((d_tc + d_cr) / SPEED_OF_LIGHT, amp, SB_NLOS, c))
    return taps


def db_unit_sums(ctx: RisContext, weights: np.ndarray, cluster: Cluster) -> np.ndarray:
    """``sum_i exp(j(theta_i - k(d^{TI}_{m,i} + d^{IS}_{i,s})))``, shape (N, M_T, S)."""
    d_is = distance(ctx.units[:, None, :], cluster.scatterers[None, :, :])  # (I, S)
    return weights @ np.exp(-1j * ctx.wavenumber * d_is)


def db_amplitudes(scene, ctx: RisContext, unit_sums: np.ndarray, rx, cluster: Cluster,
                  gamma: float, chi: float):
    """DB-NLoS amplitudes of one cluster for all phase vectors, shape (N, M_T), and delay."""
    rx = np.asarray(rx, dtype=float)
    ris = scene.ris
    d_ic = float(distance(ris.position, cluster.position))
    d_cr = float(distance(cluster.position, rx))
    loss = db_to_linear(pl_db_nlos(scene.pathloss, ris, ctx.d_ti, d_ic, d_cr, chi))
    g = (ctx.g_t_ti * _g_r(scene, rx, cluster.position) * ctx.g_i_it
         * ris_traversal_gain(ris, scene.wavelength,
                              elevation_angle(ris.position, ris.normal, cluster.position)))
    d_sr = distance(cluster.scatterers, rx)
    per_scatterer = cluster.gains * np.exp(-1j * ctx.wavenumber * d_sr)   # (S,)
    amp = gamma * np.sqrt(loss * g) * (unit_sums @ per_scatterer)
    return amp, (ctx.d_ti + d_ic + d_cr) / SPEED_OF_LIGHT


def cir_los(scene, rx, los: int, chi: float) -> PathTap | None:
    return los_tap(scene, rx, chi) if los else None


def cir_vlos(scene, rx, theta, vlos: int, chi: float, ctx: RisContext | None = None):
    ctx = ctx or RisContext(scene)
    weights = ctx.phase_weights(theta)
    if not vlos:
        return None
    amp, delay = vlos_amplitudes(scene, ctx, weights, rx, chi)
    return PathTap(delay, amp[0], VLOS)


def cir_sb(scene, rx, sb: ClusterSet, chi: float) -> list[PathTap]:
    return sb_taps(scene, rx, sb, chi)


def cir_db(scene, rx, db: ClusterSet, theta, chi: float,
           ctx: RisContext | None = None) -> list[PathTap]:
    ctx = ctx or RisContext(scene)
    weights = ctx.phase_weights(theta)
    taps = []
    for c, cl in enumerate(db.clusters):
        amp, delay = db_amplitudes(scene, ctx, db_unit_sums(ctx, weights, cl), rx, cl,
                                   db.normalization, chi)
        taps.append(PathTap(delay, amp[0], DB_NLOS, c))
    return taps


def cir_total(scene, rx, maps, theta, measurement: int | None = None,
              ctx: RisContext | None = None) -> Cir:
    """Compose the four components at ``rx`` using the state ``maps`` reports there.

    With ``scene.ris_enabled`` false the VLoS and DB-NLoS components are absent.
    """
    rx = np.asarray(rx, dtype=float)
    if not scene.room.contains(rx):
        raise ValueError(f"Rx position {rx.tolist()} lies outside the room")
    state = maps.state_at(rx)
    taps: list[PathTap] = []
    los = cir_los(scene, rx, state.los, state.chi_los)
    if los is not None:
        taps.append(los)
    if scene.ris_enabled:
        ctx = ctx or RisContext(scene)
        vlos = cir_vlos(scene, rx, theta, state.vlos, state.chi_los, ctx)
        if vlos is not None:
            taps.append(vlos)
    taps.extend(cir_sb(scene, rx, state.sb, state.chi_nlos))
    if scene.ris_enabled:
        taps.extend(cir_db(scene, rx, state.db, theta, state.chi_nlos, ctx))
    return Cir(taps, rx, measurement)


@dataclass
class BatchTap:
    kind: str
    delay: float
    amplitudes: np.ndarray  # (N, M_T)
    source: int | None = None


@dataclass
class ChannelEngine:
    """All measurements of a plan at once; RIS-side unit sums are cached per cluster."""

    scene: object
    thetas: np.ndarray
    ctx: RisContext = field(init=False)
    weights: np.ndarray = field(init=False)
    _db_cache: dict = field(init=False, default_factory=dict)

    def __post_init__(self):
        self.thetas = np.atleast_2d(np.asarray(self.thetas, dtype=float))
        self.ctx = RisContext(self.scene)
        self.weights = self.ctx.phase_weights(self.thetas)

    @property
    def n_measurements(self) -> int:
        return self.thetas.shape[0]

    def _unit_sums(self, cluster: Cluster) -> np.ndarray:
        entry = self._db_cache.get(id(cluster))
        if entry is None or entry[0] is not cluster:
            entry = (cluster, db_unit_sums(self.ctx, self.weights, cluster))
            self._db_cache[id(cluster)] = entry
        return entry[1]

    def clear_cache(self):
        self._db_cache.clear()

    def taps(self, rx, state) -> list[BatchTap]:
        scene = self.scene
        n = self.n_measurements
        rx = np.asarray(rx, dtype=float)
        out: list[BatchTap] = []
        if state.los:
            t = los_tap(scene, rx, state.chi_los)
            out.append(BatchTap(LOS, t.delay, np.broadcast_to(t.amplitudes, (n, len(t.amplitudes)))))
        if scene.ris_enabled and state.vlos:
            amp, delay = vlos_amplitudes(scene, self.ctx, self.weights, rx, state.chi_los)
            out.append(BatchTap(VLOS, delay, amp))
        for t in sb_taps(scene, rx, state.sb, state.chi_nlos):
            out.append(BatchTap(SB_NLOS, t.delay,
                                np.broadcast_to(t.amplitudes, (n, len(t.amplitudes))), t.source))
        if scene.ris_enabled:
            gamma = state.db.normalization
            for c, cl in enumerate(state.db.clusters):
                amp, delay = db_amplitudes(scene, self.ctx, self._unit_sums(cl), rx, cl,
                                           gamma, state.chi_nlos)
                out.append(BatchTap(DB_NLOS, delay, amp, c))
        return out
