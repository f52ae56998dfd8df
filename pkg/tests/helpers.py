"""Shared builders for tests: random micro-scenes and a fixed-state map stub."""

import math

import numpy as np
from scipy.spatial.transform import Rotation

from risfingerprint.clusters import DB, SB, Cluster, ClusterSet
from risfingerprint.geometry import RisGeometry, TxGeometry
from risfingerprint.propagation import PathlossParams
from risfingerprint.radiation import PatternSpec
from risfingerprint.scene import SPEED_OF_LIGHT, Room, Scene
from risfingerprint.spatial_maps import LocalState

ROOM = Room(20.0, 20.0, 3.5)


class FixedState:
    """Map stand-in that reports the same local state everywhere."""

    def __init__(self, state: LocalState):
        self.state = state

    def state_at(self, rx):
        return self.state


def _inside(rng, lo=0.5):
    return np.array([rng.uniform(lo, 20 - lo), rng.uniform(lo, 20 - lo), rng.uniform(lo, 3.0)])


def _toward(rng, origin, target, jitter=0.2):
    v = np.asarray(target) - origin + rng.normal(0, jitter, 3) * np.linalg.norm(target - origin)
    return v / np.linalg.norm(v)


def _frame_with_normal(rng, normal):
    """Two unit vectors completing ``normal`` to an orthonormal frame."""
    helper = Rotation.random(random_state=int(rng.integers(2**31))).as_matrix()[:, 0]
    a = np.cross(normal, helper)
    a /= np.linalg.norm(a)
    return a, np.cross(normal, a)


def _cluster(rng, family, centre):
    sc = centre + rng.normal(0, 0.3, 3)
    beta = complex(rng.normal(), rng.normal()) / math.sqrt(2)
    cl = Cluster(position=centre, distance=0.0, azimuth=0.0, elevation=0.0,
                 scatterers=sc[None, :], gains=np.array([beta]))
    return ClusterSet(family, (cl,)), (centre.tolist(), sc.tolist(), beta)


def micro_scene(seed: int):
    """One-antenna, one-unit scene with one SB and one DB cluster of one scatterer.

    Returns (scene, rx, theta, maps, oracle_params).
    """
    rng = np.random.default_rng(seed)
    freq = rng.uniform(2e9, 30e9)
    lam = SPEED_OF_LIGHT / freq
    while True:
        tx_pos, ris_pos, rx = _inside(rng), _inside(rng), _inside(rng)
        sb_centre, db_centre = _inside(rng, 0.8), _inside(rng, 0.8)
        pts = [tx_pos, ris_pos, rx, sb_centre, db_centre]
        # keep every distance above the largest reference distance
        if min(np.linalg.norm(p - q) for i, p in enumerate(pts) for q in pts[i + 1:]) > 1.2:
            break
    # normals point roughly at what each end sees so most gains are nonzero
    tx_n = _toward(rng, tx_pos, (ris_pos + rx + sb_centre) / 3)
    tx_dir, _ = _frame_with_normal(rng, tx_n)
    ris_n = _toward(rng, ris_pos, (tx_pos + rx + db_centre) / 3)
    row_vec, col_vec = _frame_with_normal(rng, ris_n)
    rx_n = _toward(rng, rx, (tx_pos + ris_pos) / 2, 0.3)
    dx, dy = rng.uniform(0.2, 1.0) * lam, rng.uniform(0.2, 1.0) * lam
    a = rng.uniform(0.2, 1.0)
    tx_gmax = rng.uniform(2.0, 10.0)
    rx_cos = bool(rng.integers(2))
    rx_gmax = rng.uniform(2.0, 6.0) if rx_cos else 1.0
    n_los, n_nlos = rng.uniform(1.5, 2.5), rng.uniform(2.5, 4.0)
    d0s = rng.uniform(0.2, 1.0, 3)
    theta = rng.uniform(0, 2 * np.pi)
    chi_los, chi_nlos = rng.normal(0, 3), rng.normal(0, 8)
    sb, sb_o = _cluster(rng, SB, sb_centre)
    db, db_o = _cluster(rng, DB, db_centre)

    scene = Scene(
        room=ROOM,
        tx=TxGeometry(tx_pos, 1, lam / 2, tx_dir, tx_n),
        ris=RisGeometry(ris_pos, 1, 1, dx, dy, row_vec, col_vec, ris_n, a),
        rx_normal=rx_n,
        frequency=freq,
        pathloss=PathlossParams(lam, n_los, n_nlos, 3.0, 8.0, *d0s),
        tx_pattern=PatternSpec("cosine", tx_gmax),
        rx_pattern=PatternSpec("cosine", rx_gmax) if rx_cos else PatternSpec(),
    )
    state = LocalState(1, 1, chi_los, chi_nlos, sb, db)
    params = dict(
        tx=tx_pos.tolist(), ris=ris_pos.tolist(), rx=rx.tolist(),
        tx_normal=tx_n.tolist(), ris_normal=ris_n.tolist(), rx_normal=rx_n.tolist(),
        lam=lam, dx=dx, dy=dy, a=a, n_los=n_los, n_nlos=n_nlos,
        d0=d0s[0], d01=d0s[1], d02=d0s[2],
        tx_kind="cosine", tx_gmax=tx_gmax, rx_kind="cosine" if rx_cos else "omni",
        rx_gmax=rx_gmax, theta=theta, los=1, vlos=1,
        chi_los=chi_los, chi_nlos=chi_nlos, sb=sb_o, db=db_o,
    )
    return scene, rx, np.array([theta]), FixedState(state), params


def compare_taps(cir, expected: dict) -> list[tuple[str, float, float]]:
    """(kind, relative magnitude error, phase error) for every expected tap."""
    got = {t.kind: complex(t.amplitudes[0]) for t in cir.taps}
    assert set(got) == set(expected), (set(got), set(expected))
    rows = []
    for kind, want in expected.items():
        g = got[kind]
        if abs(want) == 0:
            rows.append((kind, abs(g), 0.0))
            continue
        rel = abs(abs(g) - abs(want)) / abs(want)
        dphi = abs(math.remainder(math.atan2(g.imag, g.real) - math.atan2(want.imag, want.real),
                                  2 * math.pi))
        rows.append((kind, rel, dphi))
    return rows
