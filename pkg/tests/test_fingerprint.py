import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from risfingerprint.channel import Cir, PathTap, RisContext
from risfingerprint.fingerprint import (
    RSS_FLOOR_DBM,
    DatabaseFormatError,
    FingerprintDb,
    MeasurementPlan,
    SurveyGrid,
    build_plan,
    ebs_phases,
    generate_database,
    radio_maps,
    rss,
    survey,
    sweep_targets,
    uniform_beamformer,
)
from risfingerprint.geometry import distance
from risfingerprint.scene import paper_scene
from risfingerprint.spatial_maps import IidState, build_consistency_maps

AOI = SurveyGrid((5, 15), (0, 10), 0.2, 1.0)
COARSE = SurveyGrid((5, 15), (0, 10), 1.0, 1.0)


def _tap(amps):
    return PathTap(0.0, np.asarray(amps, dtype=complex), "LoS")


def test_uniform_beamformer():
    np.testing.assert_array_equal(uniform_beamformer(1), [1])
    np.testing.assert_allclose(uniform_beamformer(4), [0.5] * 4)
    for m in range(1, 20):
        assert np.linalg.norm(uniform_beamformer(m)) == pytest.approx(1)


def test_grid_size_and_order():
    assert AOI.shape == (50, 50) and AOI.size == 2500
    pos = AOI.positions()
    np.testing.assert_allclose(pos[0], [5.1, 0.1, 1.0])
    np.testing.assert_allclose(pos[1], [5.3, 0.1, 1.0])
    np.testing.assert_allclose(pos[50], [5.1, 0.3, 1.0])
    assert SurveyGrid((0, 1), (0, 1), 0.3, 1).size == 16


def test_sweep_targets():
    sq = SurveyGrid((0, 4), (0, 4), 1.0, 1.0)
    np.testing.assert_allclose(sweep_targets(sq, 4)[:, :2], [[1, 1], [3, 1], [1, 3], [3, 3]])
    t20 = sweep_targets(AOI, 20)
    assert len(np.unique(t20[:, 1])) == 4 and len(np.unique(t20[:, 0])) == 5
    np.testing.assert_allclose(sweep_targets(AOI, 1)[0], [10, 5, 1])
    t3 = sweep_targets(AOI, 3)   # 1 x 3
    assert len(t3) == 3 and len(np.unique(t3[:, 1])) == 1
    t5 = sweep_targets(AOI, 5)   # 2 x 3 with the last dropped
    assert len(t5) == 5 and t5[-1, 1] > t5[0, 1]


def test_ebs_aligns_at_target():
    scene = paper_scene(n_antennas=1)
    ctx = RisContext(scene)
    for target in sweep_targets(AOI, 6):
        theta = ebs_phases(scene, target)
        assert np.all((theta >= 0) & (theta < 2 * np.pi))
        d = ctx.d_ti_mi[0] + distance(ctx.units, target)
        s = np.sum(np.exp(1j * (theta - 2 * np.pi * d / scene.wavelength)))
        assert abs(s) == pytest.approx(scene.ris.n_units, rel=1e-6)


def test_ebs_off_target_is_weaker():
    scene = paper_scene(n_antennas=1)
    ctx = RisContext(scene)
    theta = ebs_phases(scene, [10, 5, 1])
    rng = np.random.default_rng(0)
    for _ in range(10):
        rx = np.array([rng.uniform(5, 15), rng.uniform(0, 10), 1.0])
        if np.linalg.norm(rx[:2] - [10, 5]) < 1.0:
            continue
        d = ctx.d_ti_mi[0] + distance(ctx.units, rx)
        assert abs(np.sum(np.exp(1j * (theta - 2 * np.pi * d / scene.wavelength)))) < 400


def test_plan_validation():
    scene = paper_scene()
    plan = build_plan(scene, AOI, 20)
    assert plan.beamformers.shape == (20, 4) and plan.phases.shape == (20, 400)
    with pytest.raises(ValueError):
        MeasurementPlan(np.ones((1, 4)), np.zeros((1, 400)), np.zeros((1, 3)))
    with pytest.raises(ValueError):
        MeasurementPlan(np.full((1, 1), 1 + 0j), np.full((1, 4), 2 * np.pi), np.zeros((1, 3)))


def test_rss_examples():
    assert rss(Cir([_tap([4.589e-3])], np.zeros(3)), [1], 10.0) == pytest.approx(-36.77, abs=5e-3)
    g = 0.01 + 0.02j
    assert rss(Cir([_tap([g])], np.zeros(3)), [1], 10.0) == pytest.approx(10 + 20 * math.log10(abs(g)))
    assert rss(Cir([], np.zeros(3)), [1], 10.0) == RSS_FLOOR_DBM
    with pytest.raises(ValueError):
        rss(Cir([], np.zeros(3)), [1], 0.0)


@given(st.floats(0, 2 * np.pi), st.floats(1e-3, 1e3))
def test_rss_phase_invariance_and_power_scaling(phi, p0):
    cir = Cir([_tap([0.1 + 0.2j, -0.05j]), _tap([0.03, 0.01 + 0.01j])], np.zeros(3))
    f = uniform_beamformer(2)
    base = rss(cir, f, p0)
    assert rss(cir, f * np.exp(1j * phi), p0) == pytest.approx(base, abs=1e-9)
    assert rss(cir, f, 10 * p0) == pytest.approx(base + 10, abs=1e-9)


def test_database_shape_and_determinism():
    scene = paper_scene()
    maps = build_consistency_maps(scene, 0)
    plan = build_plan(scene, COARSE, 5)
    a = generate_database(scene, maps, plan, COARSE, 10.0)
    b = generate_database(scene, build_consistency_maps(scene, 0), plan, COARSE, 10.0)
    assert a.rss.shape == (100, 5)
    assert a.to_csv() == b.to_csv()
    np.testing.assert_array_equal(a.positions, COARSE.positions())
    assert np.all(np.isfinite(a.rss))


def test_power_scaling_in_database():
    scene = paper_scene()
    maps = build_consistency_maps(scene, 1)
    plan = build_plan(scene, COARSE, 3)
    a = generate_database(scene, maps, plan, COARSE, 10.0)
    b = generate_database(scene, maps, plan, COARSE, 100.0)
    finite = a.rss > RSS_FLOOR_DBM
    np.testing.assert_allclose(b.rss[finite] - a.rss[finite], 10.0, atol=1e-9)


def test_ris_disabled_ignores_sweep():
    from dataclasses import replace
    scene = replace(paper_scene(), ris_enabled=False)
    maps = build_consistency_maps(scene, 2)
    p1 = build_plan(scene, COARSE, 4)
    p2 = MeasurementPlan(p1.beamformers, np.mod(p1.phases + 1.3, 2 * np.pi) % (2 * np.pi),
                         p1.targets)
    a = generate_database(scene, maps, p1, COARSE, 10.0)
    b = generate_database(scene, maps, p2, COARSE, 10.0)
    np.testing.assert_array_equal(a.rss, b.rss)
    # without RIS every measurement sees the same channel
    np.testing.assert_allclose(a.rss, a.rss[:, :1].repeat(4, axis=1))


def test_case_c_runs_and_differs():
    scene = paper_scene()
    plan = build_plan(scene, COARSE, 4)
    a = generate_database(scene, IidState(scene, 0), plan, COARSE, 10.0)
    b = generate_database(scene, build_consistency_maps(scene, 0), plan, COARSE, 10.0)
    assert a.rss.shape == b.rss.shape and not np.array_equal(a.rss, b.rss)


def test_survey_path_power_keys():
    scene = paper_scene()
    res = survey(scene, build_consistency_maps(scene, 0), build_plan(scene, COARSE, 4),
                 COARSE, 10.0)
    assert set(res.path_power_mw) == {"LoS", "VLoS", "SB", "DB"}
    assert all(v >= 0 for v in res.path_power_mw.values())


def test_noise_knob():
    scene = paper_scene()
    maps = build_consistency_maps(scene, 0)
    plan = build_plan(scene, COARSE, 2)
    clean = generate_database(scene, maps, plan, COARSE, 10.0)
    noisy = generate_database(scene, maps, plan, COARSE, 10.0, noise_db=2.0, seed=1)
    diff = noisy.rss - clean.rss
    assert 1.5 < diff.std() < 2.5


def test_radio_maps_layout():
    db = FingerprintDb(COARSE.positions(), np.arange(200, dtype=float).reshape(100, 2))
    rm = radio_maps(db, COARSE)
    assert rm.shape == (2, 10, 10)
    assert rm[1, 0, 3] == db.rss[3, 1] and rm[0, 2, 0] == db.rss[20, 0]


def test_grid_outside_room_rejected():
    scene = paper_scene()
    bad = SurveyGrid((15, 25), (0, 10), 1.0, 1.0)
    with pytest.raises(ValueError):
        survey(scene, build_consistency_maps(scene, 0), build_plan(scene, bad, 1), bad, 10.0)


# --- CSV ---------------------------------------------------------------------

def _db():
    return FingerprintDb([[1, 2, 1], [3, 4, 1]], [[-50.1234567, -60], [-200, 1.5]])


def test_csv_round_trip_and_format():
    text = _db().to_csv()
    lines = text.splitlines()
    assert lines[0] == "x,y,z,rss_1,rss_2"
    assert lines[1] == "1.000000,2.000000,1.000000,-50.123457,-60.000000"
    back = FingerprintDb.parse_csv(io.StringIO(text))
    np.testing.assert_allclose(back.rss, [[-50.123457, -60], [-200, 1.5]])
    assert back.to_csv() == text


@pytest.mark.parametrize("text,row", [
    ("", 1),
    ("x,y,z\n1,2,3\n", 1),
    ("x,y,z,rss_1,rss_3\n1,2,3,4,5\n", 1),
    ("x,y,z,rss_1\n1,2,3,4\n1,2,3\n", 3),
    ("x,y,z,rss_1\n1,2,3,4,5\n", 2),
    ("x,y,z,rss_1\n1,2,3,abc\n", 2),
    ("x,y,z,rss_1\n1,2,3,nan\n", 2),
    ("x,y,z,rss_1\n", 2),
])
def test_csv_errors_name_the_row(text, row):
    with pytest.raises(DatabaseFormatError) as exc:
        FingerprintDb.parse_csv(io.StringIO(text))
    assert exc.value.row == row
    assert f"row {row}" in str(exc.value)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.lists(st.floats(-200, 50, allow_nan=False), min_size=3, max_size=3),
                min_size=1, max_size=20))
def test_csv_round_trip_property(rows):
    db = FingerprintDb(np.zeros((len(rows), 3)), rows)
    back = FingerprintDb.parse_csv(io.StringIO(db.to_csv()))
    np.testing.assert_allclose(back.rss, db.rss, atol=5e-7)
    assert back.to_csv() == db.to_csv()
