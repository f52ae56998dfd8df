"""End-to-end orchestration: preparation, CIR generation and database assembly.

All outputs are assembled in memory first; writers only serialise them, so
files are byte-identical for equal (config, seed).
"""

from __future__ import annotations

import datetime as _dt
import hashlib
import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .channel import KINDS
from .config import RunConfig
from .fingerprint import FingerprintDb, build_plan, power_to_dbm, radio_maps, survey
from .localize import EvalReport, SplitSpec, evaluate
from .spatial_maps import ConsistencyMaps, IidState, build_consistency_maps

TREND_N = (4, 12, 20)
TREND_RIS_SIDES = (5, 10, 15, 20)   # I = 25, 100, 225, 400
TREND_CASES = ("A", "B", "C")


def decision_flags(cfg: RunConfig) -> dict:
    """Open modelling choices, recorded with every run."""
    return {
        "map_normalization": cfg.normalization,
        "ris_gain_form": "product of per-leg G_I,max*cos(phi)",
        "sb_cluster_count": "poisson redrawn until >= 1",
        "db_cluster_count": "poisson, zero allowed",
        "angle_spread": "laplace with standard deviation = spread",
        "cluster_height": "clamped to room with margin",
        "rss_sum": "coherent narrowband sum of all taps",
        "rss_floor_dbm": -200.0,
        "ebs_reference": "tx array centre",
        "unit_indexing": "row-major from bottom-left",
        "case_c_draw_key": "rx coordinates in mm",
    }


def generation_timestamp() -> str | None:
    """ISO time from SOURCE_DATE_EPOCH, else None so reruns stay byte-identical."""
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if not epoch:
        return None
    return _dt.datetime.fromtimestamp(int(epoch), _dt.timezone.utc).isoformat()


def build_state(cfg: RunConfig, scene, seed: int):
    if cfg["switches"]["spatial_consistency_enabled"]:
        return build_consistency_maps(scene, seed, cfg.normalization)
    return IidState(scene, seed)


@dataclass
class GenerateResult:
    config: RunConfig
    seed: int
    db: FingerprintDb
    path_power_mw: dict
    state: object
    metadata: dict


def run_generate(cfg: RunConfig, seed: int | None = None) -> GenerateResult:
    seed = cfg.seed if seed is None else int(seed)
    if seed != cfg.seed:
        cfg = cfg.replace(seed=seed)
    scene = cfg.scene()
    grid = cfg.grid()
    state = build_state(cfg, scene, seed)
    plan = build_plan(scene, grid, cfg["survey"]["n_measurements"])
    res = survey(scene, state, plan, grid, cfg.p0_mw, cfg["survey"]["rss_noise_db"], seed)
    csv_bytes = res.db.to_csv().encode()
    metadata = {
        "software": "risfingerprint",
        "version": __version__,
        "seed": seed,
        "case": cfg.case,
        "config_digest": cfg.digest(),
        "database_sha256": hashlib.sha256(csv_bytes).hexdigest(),
        "generated_at": generation_timestamp(),
        "n_records": len(res.db),
        "n_measurements": res.db.n_measurements,
        "survey_shape": list(grid.shape),
        "sweep_targets": plan.targets.tolist(),
        "path_power_dbm": {k: float(power_to_dbm(v)) for k, v in res.path_power_mw.items()},
        "decisions": decision_flags(cfg),
        "config": cfg.data,
    }
    res.db.provenance = {"seed": seed, "config_digest": cfg.digest(),
                         "generated_at": metadata["generated_at"]}
    return GenerateResult(cfg, seed, res.db, res.path_power_mw, state, metadata)


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


def _write(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8", newline="")


def _grid_csv(values: np.ndarray, xs, ys, fmt: str) -> str:
    lines = ["y\\x," + ",".join(f"{x:.6f}" for x in xs)]
    for y, row in zip(ys, values):
        lines.append(f"{y:.6f}," + ",".join(fmt.format(v) for v in row))
    return "\n".join(lines) + "\n"


def write_generate(result: GenerateResult, out_dir, emit_maps=False,
                   emit_radiomaps=False) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    meta = dict(result.metadata)
    files = {"database.csv": result.db.to_csv()}

    if emit_maps:
        if isinstance(result.state, ConsistencyMaps):
            for name, grid in result.state.grids().items():
                centres = grid.cell_centers(0.0)
                fmt = "{:d}" if grid.values.dtype.kind in "iu" else "{:.6f}"
                files[f"map_{name}.csv"] = _grid_csv(grid.values, centres[0, :, 0],
                                                     centres[:, 0, 1], fmt)
                files[f"map_{name}.json"] = _dump_json(grid.descriptor())
            cmap = result.state.clusters
            cells = [{"row": p, "col": q,
                      "sb": cmap.values[p, q][0].to_dict(), "db": cmap.values[p, q][1].to_dict()}
                     for p in range(cmap.rows) for q in range(cmap.cols)]
            files["map_clusters.json"] = _dump_json({**cmap.descriptor(), "cells": cells})
            meta["maps"] = "emitted"
        else:
            meta["maps"] = "none: spatial consistency disabled (case C)"

    if emit_radiomaps:
        grid = result.config.grid()
        pos = result.db.positions
        ny, nx = grid.shape
        xs, ys = pos[:nx, 0], pos[::nx, 1]
        for n, rmap in enumerate(radio_maps(result.db, grid), start=1):
            files[f"radiomap_{n:02d}.csv"] = _grid_csv(rmap, xs, ys, "{:.6f}")

    files["metadata.json"] = _dump_json(meta)
    for name, text in files.items():
        _write(out / name, text)
        written.append(out / name)
    return written


def run_eval(db: FingerprintDb, k: int, split_seed: int, train_fraction: float = 0.8) -> EvalReport:
    return evaluate(db, SplitSpec(train_fraction, split_seed), k)


def write_eval(report: EvalReport, out_dir, db_path=None) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    body = report.to_dict()
    if db_path is not None:
        body["database_sha256"] = hashlib.sha256(Path(db_path).read_bytes()).hexdigest()
    lines = ["index,x_true,y_true,x_pred,y_pred,error_m"]
    err = np.linalg.norm(report.predictions[:, :2] - report.truth[:, :2], axis=1)
    for i, (t, p, e) in enumerate(zip(report.truth, report.predictions, err)):
        lines.append(f"{i},{t[0]:.6f},{t[1]:.6f},{p[0]:.6f},{p[1]:.6f},{e:.6f}")
    _write(out / "report.json", _dump_json(body))
    _write(out / "errors.csv", "\n".join(lines) + "\n")
    return [out / "report.json", out / "errors.csv"]


@dataclass
class TrendResult:
    rows: list[dict]        # one per (case, N, I, seed)
    medians: list[dict]     # one per (case, N, I)
    power: list[dict]       # one per (I, seed), case A at the config's N
    power_medians: list[dict]


def run_trends(cfg: RunConfig, seeds, cases=TREND_CASES, n_values=TREND_N,
               ris_sides=TREND_RIS_SIDES, k: int | None = None, progress=None) -> TrendResult:
    """Sweep case x N x I over ``seeds``; maps are shared across N for one (case, I, seed)."""
    k = cfg["eval"]["k"] if k is None else k
    n_power = cfg["survey"]["n_measurements"]
    rows, power = [], []
    for case in cases:
        base = cfg.with_case(case)
        for side in ris_sides:
            c = base.replace(**{"ris.rows": side, "ris.cols": side})
            scene, grid = c.scene(), c.grid()
            for seed in seeds:
                state = build_state(c, scene, seed)
                wanted = sorted(set(n_values) | ({n_power} if case == "A" else set()))
                for n in wanted:
                    plan = build_plan(scene, grid, n)
                    res = survey(scene, state, plan, grid, c.p0_mw,
                                 c["survey"]["rss_noise_db"], seed)
                    if n in n_values:
                        rep = evaluate(res.db, SplitSpec(c["eval"]["train_fraction"], seed), k)
                        rows.append({"case": case, "N": n, "I": side * side, "seed": seed,
                                     "k": k, "rmse_m": rep.rmse})
                    if case == "A" and n == n_power:
                        power.append({"I": side * side, "seed": seed,
                                      **{f"P_{kind}": float(power_to_dbm(res.path_power_mw[kind]))
                                         for kind in KINDS}})
                    if progress:
                        progress(case, n, side * side, seed)
    medians = []
    for case in cases:
        for n in n_values:
            for side in ris_sides:
                vals = [r["rmse_m"] for r in rows
                        if (r["case"], r["N"], r["I"]) == (case, n, side * side)]
                medians.append({"case": case, "N": n, "I": side * side, "seed": "median",
                                "k": k, "rmse_m": float(np.median(vals))})
    power_medians = []
    for side in ris_sides:
        sel = [p for p in power if p["I"] == side * side]
        if sel:
            power_medians.append({"I": side * side, **{
                f"P_{kind}": float(np.median([p[f"P_{kind}"] for p in sel])) for kind in KINDS}})
    return TrendResult(rows, medians, power, power_medians)


def median_rmse(trend: TrendResult, case: str, n: int, i: int) -> float:
    for r in trend.medians:
        if (r["case"], r["N"], r["I"]) == (case, n, i):
            return r["rmse_m"]
    raise KeyError((case, n, i))


def write_trends(trend: TrendResult, out_dir, seeds) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    power_cols = ["I"] + [f"P_{k}" for k in KINDS]

    csv = ["case,N,I,seed,k,rmse_m"]
    for r in trend.rows + trend.medians:
        csv.append(f"{r['case']},{r['N']},{r['I']},{r['seed']},{r['k']},{r['rmse_m']:.6f}")
    pcsv = [",".join(power_cols)]
    for p in trend.power_medians:
        pcsv.append(",".join([str(p["I"])] + [f"{p[c]:.4f}" for c in power_cols[1:]]))
    pseed = [",".join(["I", "seed"] + power_cols[1:])]
    for p in trend.power:
        pseed.append(",".join([str(p["I"]), str(p["seed"])] + [f"{p[c]:.4f}" for c in power_cols[1:]]))

    md = [f"# Localization trends (seeds: {', '.join(map(str, seeds))})", "",
          "Median KNN RMSE (m) over seeds.", "",
          "| case | N | I | median RMSE (m) |", "|---|---|---|---|"]
    md += [f"| {r['case']} | {r['N']} | {r['I']} | {r['rmse_m']:.3f} |" for r in trend.medians]
    md += ["", "Per-seed RMSE (m).", "", "| case | N | I | seed | RMSE (m) |", "|---|---|---|---|---|"]
    md += [f"| {r['case']} | {r['N']} | {r['I']} | {r['seed']} | {r['rmse_m']:.3f} |"
           for r in trend.rows]
    md += ["", "AoI-averaged path power (dBm), case A, median over seeds.", "",
           "| " + " | ".join(power_cols) + " |", "|" + "---|" * len(power_cols)]
    md += ["| " + " | ".join([str(p["I"])] + [f"{p[c]:.2f}" for c in power_cols[1:]]) + " |"
           for p in trend.power_medians]

    files = {"trends.csv": csv, "power.csv": pcsv, "power_by_seed.csv": pseed, "trends.md": md}
    for name, lines in files.items():
        _write(out / name, "\n".join(lines) + "\n")
    return [out / name for name in files]
