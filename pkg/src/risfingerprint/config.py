"""Run configuration: YAML with unit-suffixed keys, validated against the defaults tree.

Every key the loader accepts appears in ``DEFAULTS``; anything else is rejected
with the line it was found on. Lengths are metres, angles degrees, powers dBm.
"""

from __future__ import annotations

import copy
import hashlib
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .clusters import AngleRange, ClusterGenParams
from .fingerprint import SurveyGrid
from .geometry import RisGeometry, TxGeometry, UNIT_TOL
from .localize import SplitSpec
from .propagation import PathlossParams
from .radiation import COSINE, OMNI, PatternSpec
from .scene import SPEED_OF_LIGHT, ConsistencyParams, Room, Scene
from .spatial_maps import KERNEL_NORM, SAMPLE_NORM

CASES = ("A", "B", "C")

DEFAULTS: dict = {
    "seed": 0,
    "switches": {
        "ris_enabled": True,
        "spatial_consistency_enabled": True,
    },
    "room": {"length_m": 20.0, "width_m": 20.0, "height_m": 3.5},
    "carrier": {"frequency_hz": 5.2e9},
    "tx": {
        "position_m": [0.0, 10.0, 3.0],
        "n_antennas": 4,
        "spacing_wavelengths": 0.5,
        "direction": [0.0, 0.0, -1.0],
        "normal": [1.0, 0.0, 0.0],
        "pattern": COSINE,
        "max_gain_db": 8.0,
        "power_dbm": 10.0,
    },
    "ris": {
        "position_m": [10.0, 15.0, 3.0],
        "rows": 20,
        "cols": 20,
        "unit_length_wavelengths": 0.5,
        "unit_width_wavelengths": 0.5,
        "row_vector": [0.0, 0.0, 1.0],
        "col_vector": [1.0, 0.0, 0.0],
        "normal": [0.0, -1.0, 0.0],
        "reflection_magnitude": 1.0,
    },
    "rx": {
        "normal": [0.0, 0.0, 1.0],
        "height_m": 1.0,
        "pattern": OMNI,
        "max_gain_db": 0.0,
    },
    "pathloss": {
        "n_los": 1.73,
        "n_nlos": 3.19,
        "sigma_los_db": 3.02,
        "sigma_nlos_db": 8.29,
        "d0_m": 1.0,
        "d0_ris_in_m": 1.0,
        "d0_ris_out_m": 1.0,
    },
    "clusters": {
        "poisson_mean": 1.8,
        "scatterers_min": 1,
        "scatterers_max": 30,
        "sb_azimuth_deg": [-90.0, 90.0],
        "sb_elevation_deg": [-45.0, 45.0],
        "db_azimuth_deg": [225.0, 315.0],
        "db_elevation_deg": [-45.0, 45.0],
        "sb_spread_azimuth_deg": 5.0,
        "sb_spread_elevation_deg": 5.0,
        "db_spread_azimuth_deg": 5.0,
        "db_spread_elevation_deg": 5.0,
        "height_margin_m": 0.1,
    },
    "consistency": {
        "condition_granularity_m": 1.0,
        "sf_granularity_m": 2.0,
        "cluster_granularity_m": 2.5,
        "sf_correlation_m": 4.0,
        "condition_correlation_m": None,
        "normalization": KERNEL_NORM,
    },
    "survey": {
        "x_range_m": [5.0, 15.0],
        "y_range_m": [0.0, 10.0],
        "spacing_m": 0.2,
        "n_measurements": 20,
        "rss_noise_db": 0.0,
    },
    "eval": {"k": 5, "train_fraction": 0.8, "split_seed": 0},
}

# keys allowed to be null
_NULLABLE = {("consistency", "condition_correlation_m")}
_CHOICES = {
    ("tx", "pattern"): (OMNI, COSINE),
    ("rx", "pattern"): (OMNI, COSINE),
    ("consistency", "normalization"): (KERNEL_NORM, SAMPLE_NORM),
}


class ConfigError(ValueError):
    """Invalid configuration, optionally tied to a source line."""

    def __init__(self, message: str, key: str | None = None, line: int | None = None,
                 source: str | None = None):
        where = ""
        if source or line:
            where = f"{source or '<config>'}:{line}: " if line else f"{source}: "
        super().__init__(f"{where}{key + ': ' if key else ''}{message}")
        self.message, self.key, self.line, self.source = message, key, line, source

    def to_dict(self) -> dict:
        return {"error": "config", "message": self.message, "key": self.key,
                "line": self.line, "file": self.source}


class _Loader(yaml.SafeLoader):
    """Safe loader that also reads exponent floats without a dot or sign (``5.2e9``)."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"^[-+]?(?:[0-9][0-9_]*)(?:\.[0-9_]*)?[eE][-+]?[0-9]+$"),
    list("-+0123456789"),
)


def _key_lines(node, prefix=(), out=None) -> dict:
    """Map dotted key paths to 1-based source lines from a composed YAML node."""
    out = {} if out is None else out
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            path = prefix + (str(k.value),)
            out[path] = k.start_mark.line + 1
            _key_lines(v, path, out)
    return out


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


class _Checker:
    def __init__(self, lines: dict, source: str | None):
        self.lines, self.source = lines, source

    def fail(self, path, message):
        line = None
        # fall back to the closest enclosing key that has a line
        for n in range(len(path), 0, -1):
            if path[:n] in self.lines:
                line = self.lines[path[:n]]
                break
        raise ConfigError(message, ".".join(path), line, self.source)

    def merge(self, default, given, path=()):
        if given is None and path in _NULLABLE:
            return None
        if isinstance(default, dict):
            if not isinstance(given, dict):
                self.fail(path, "expected a mapping")
            out = copy.deepcopy(default)
            for k, v in given.items():
                if not isinstance(k, str) or k not in default:
                    self.fail(path + (str(k),), "unknown key")
                out[k] = self.merge(default[k], v, path + (k,))
            return out
        if path in _NULLABLE:
            if not _is_number(given):
                self.fail(path, "expected a number or null")
            return float(given)
        if isinstance(default, bool):
            if not isinstance(given, bool):
                self.fail(path, "expected true or false")
            return given
        if isinstance(default, int):
            if not (isinstance(given, int) and not isinstance(given, bool)):
                self.fail(path, "expected an integer")
            return given
        if isinstance(default, float):
            if not _is_number(given) or not np.isfinite(given):
                self.fail(path, "expected a finite number")
            return float(given)
        if isinstance(default, str):
            if given not in _CHOICES.get(path, (given,)) or not isinstance(given, str):
                self.fail(path, f"expected one of {list(_CHOICES[path])}")
            return given
        if isinstance(default, list):
            if (not isinstance(given, list) or len(given) != len(default)
                    or not all(_is_number(v) and np.isfinite(v) for v in given)):
                self.fail(path, f"expected a list of {len(default)} numbers")
            return [float(v) for v in given]
        raise AssertionError(f"unhandled default at {path}")


@dataclass(frozen=True)
class RunConfig:
    """Validated, fully-populated configuration tree."""

    data: dict
    source: str | None = None
    lines: dict = field(default_factory=dict, compare=False, repr=False)

    # --- loading -------------------------------------------------------------
    @classmethod
    def default(cls) -> "RunConfig":
        return cls.from_dict({})

    @classmethod
    def from_dict(cls, given: dict, lines: dict | None = None,
                  source: str | None = None) -> "RunConfig":
        checker = _Checker(lines or {}, source)
        data = checker.merge(DEFAULTS, given)
        cfg = cls(data, source, lines or {})
        cfg._validate(checker)
        return cfg

    @classmethod
    def from_yaml(cls, text: str, source: str | None = None) -> "RunConfig":
        try:
            node = yaml.compose(text, Loader=_Loader)
            given = yaml.load(text, Loader=_Loader)
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            raise ConfigError(f"YAML syntax error: {getattr(exc, 'problem', exc)}", None,
                              mark.line + 1 if mark else None, source) from None
        if given is None:
            given = {}
        if not isinstance(given, dict):
            raise ConfigError("top level must be a mapping", None, 1, source)
        return cls.from_dict(given, _key_lines(node), source)

    @classmethod
    def load(cls, path) -> "RunConfig":
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc.strerror}", None, None, str(path)) from None
        return cls.from_yaml(text, str(path))

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.data, sort_keys=False, default_flow_style=None)

    def digest(self) -> str:
        canon = json.dumps(self.data, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()

    def replace(self, **updates) -> "RunConfig":
        """Copy with dotted-key overrides, e.g. ``replace(**{"ris.rows": 5})``."""
        given = copy.deepcopy(self.data)
        for dotted, value in updates.items():
            node = given
            *head, last = dotted.split(".")
            for k in head:
                node = node[k]
            if last not in node:
                raise ConfigError("unknown key", dotted)
            node[last] = value
        return RunConfig.from_dict(given)

    def with_case(self, case: str) -> "RunConfig":
        """Case A: everything on. B: RIS disabled. C: no spatial consistency."""
        if case not in CASES:
            raise ConfigError(f"unknown case {case!r}; expected one of {list(CASES)}", "case")
        return self.replace(**{"switches.ris_enabled": case != "B",
                               "switches.spatial_consistency_enabled": case != "C"})

    # --- accessors -------------------------------------------------------------
    def __getitem__(self, section: str) -> dict:
        return self.data[section]

    @property
    def seed(self) -> int:
        return self.data["seed"]

    @property
    def case(self) -> str:
        sw = self.data["switches"]
        if not sw["ris_enabled"]:
            return "B"
        return "A" if sw["spatial_consistency_enabled"] else "C"

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.data["carrier"]["frequency_hz"]

    @property
    def p0_mw(self) -> float:
        return 10 ** (self.data["tx"]["power_dbm"] / 10)

    @property
    def normalization(self) -> str:
        return self.data["consistency"]["normalization"]

    def scene(self) -> Scene:
        d, lam = self.data, self.wavelength
        tx, ris, rx, pl, cl, co = (d[k] for k in ("tx", "ris", "rx", "pathloss",
                                                    "clusters", "consistency"))
        rad = np.deg2rad
        return Scene(
            room=Room(d["room"]["length_m"], d["room"]["width_m"], d["room"]["height_m"]),
            tx=TxGeometry(tx["position_m"], tx["n_antennas"], tx["spacing_wavelengths"] * lam,
                          tx["direction"], tx["normal"]),
            ris=RisGeometry(ris["position_m"], ris["rows"], ris["cols"],
                            ris["unit_length_wavelengths"] * lam,
                            ris["unit_width_wavelengths"] * lam,
                            ris["row_vector"], ris["col_vector"], ris["normal"],
                            ris["reflection_magnitude"]),
            rx_normal=rx["normal"],
            frequency=d["carrier"]["frequency_hz"],
            pathloss=PathlossParams(lam, pl["n_los"], pl["n_nlos"], pl["sigma_los_db"],
                                    pl["sigma_nlos_db"], pl["d0_m"], pl["d0_ris_in_m"],
                                    pl["d0_ris_out_m"]),
            tx_pattern=_pattern(tx),
            rx_pattern=_pattern(rx),
            cluster_params=ClusterGenParams(
                poisson_mean=cl["poisson_mean"],
                scatterers_min=cl["scatterers_min"],
                scatterers_max=cl["scatterers_max"],
                sb_azimuth=AngleRange(*rad(cl["sb_azimuth_deg"])),
                sb_elevation=AngleRange(*rad(cl["sb_elevation_deg"])),
                db_azimuth=AngleRange(*rad(cl["db_azimuth_deg"])),
                db_elevation=AngleRange(*rad(cl["db_elevation_deg"])),
                sb_spread_azimuth=rad(cl["sb_spread_azimuth_deg"]),
                sb_spread_elevation=rad(cl["sb_spread_elevation_deg"]),
                db_spread_azimuth=rad(cl["db_spread_azimuth_deg"]),
                db_spread_elevation=rad(cl["db_spread_elevation_deg"]),
            ),
            consistency=ConsistencyParams(co["condition_granularity_m"], co["sf_granularity_m"],
                                          co["cluster_granularity_m"], co["sf_correlation_m"],
                                          co["condition_correlation_m"]),
            rx_height=rx["height_m"],
            ris_enabled=d["switches"]["ris_enabled"],
            cluster_margin=cl["height_margin_m"],
        )

    def grid(self) -> SurveyGrid:
        s = self.data["survey"]
        return SurveyGrid(tuple(s["x_range_m"]), tuple(s["y_range_m"]), s["spacing_m"],
                          self.data["rx"]["height_m"])

    def split_spec(self) -> SplitSpec:
        e = self.data["eval"]
        return SplitSpec(e["train_fraction"], e["split_seed"])

    # --- validation -------------------------------------------------------------
    def _validate(self, chk: _Checker) -> None:
        d = self.data

        def positive(section, key, strict=True):
            v = d[section][key]
            if v is not None and not (v > 0 if strict else v >= 0):
                chk.fail((section, key), "must be positive" if strict else "must be non-negative")

        def unit(section, key):
            if abs(np.linalg.norm(d[section][key]) - 1) > UNIT_TOL:
                chk.fail((section, key), "must be a unit vector (norm 1 within 1e-9)")

        def orthogonal(section, a, b):
            if abs(np.dot(d[section][a], d[section][b])) > UNIT_TOL:
                chk.fail((section, b), f"must be orthogonal to {section}.{a}")

        for key in ("length_m", "width_m", "height_m"):
            positive("room", key)
        positive("carrier", "frequency_hz")
        positive("tx", "n_antennas")
        positive("tx", "spacing_wavelengths")
        unit("tx", "direction")
        unit("tx", "normal")
        orthogonal("tx", "direction", "normal")
        for key in ("rows", "cols", "unit_length_wavelengths", "unit_width_wavelengths"):
            positive("ris", key)
        for key in ("row_vector", "col_vector", "normal"):
            unit("ris", key)
        orthogonal("ris", "row_vector", "col_vector")
        orthogonal("ris", "row_vector", "normal")
        orthogonal("ris", "col_vector", "normal")
        if not 0 < d["ris"]["reflection_magnitude"] <= 1:
            chk.fail(("ris", "reflection_magnitude"), "must lie in (0, 1]")
        unit("rx", "normal")
        for section in ("tx", "rx"):
            if d[section]["pattern"] == COSINE and 10 ** (d[section]["max_gain_db"] / 10) < 2:
                chk.fail((section, "max_gain_db"), "cosine pattern needs max gain >= 3.01 dB")
        for key in ("n_los", "n_nlos", "d0_m", "d0_ris_in_m", "d0_ris_out_m"):
            positive("pathloss", key)
        for key in ("sigma_los_db", "sigma_nlos_db"):
            positive("pathloss", key, strict=False)
        cl = d["clusters"]
        positive("clusters", "poisson_mean")
        if not 1 <= cl["scatterers_min"] <= cl["scatterers_max"]:
            chk.fail(("clusters", "scatterers_min"), "need 1 <= scatterers_min <= scatterers_max")
        for key, v in cl.items():
            if key.endswith("_deg") and isinstance(v, list) and not v[0] <= v[1]:
                chk.fail(("clusters", key), "range must be [low, high] with low <= high")
            if key.startswith(("sb_spread", "db_spread")) and v < 0:
                chk.fail(("clusters", key), "must be non-negative")
        positive("clusters", "height_margin_m", strict=False)
        for key in ("condition_granularity_m", "sf_granularity_m", "cluster_granularity_m",
                    "sf_correlation_m", "condition_correlation_m"):
            positive("consistency", key)
        positive("survey", "spacing_m")
        positive("survey", "n_measurements")
        positive("survey", "rss_noise_db", strict=False)
        positive("eval", "k")
        if not 0 < d["eval"]["train_fraction"] < 1:
            chk.fail(("eval", "train_fraction"), "must lie in (0, 1)")

        room = d["room"]
        for key, hi in (("x_range_m", room["length_m"]), ("y_range_m", room["width_m"])):
            lo_v, hi_v = d["survey"][key]
            if not 0 <= lo_v < hi_v <= hi:
                chk.fail(("survey", key), f"area of interest must satisfy 0 <= low < high <= {hi}")
        if not 0 < d["rx"]["height_m"] < room["height_m"]:
            chk.fail(("rx", "height_m"), "must lie strictly between floor and ceiling")
        if 2 * cl["height_margin_m"] >= room["height_m"]:
            chk.fail(("clusters", "height_margin_m"), "leaves no room for clusters")
        for section in ("tx", "ris"):
            p = d[section]["position_m"]
            if not (0 <= p[0] <= room["length_m"] and 0 <= p[1] <= room["width_m"]
                    and 0 <= p[2] <= room["height_m"]):
                chk.fail((section, "position_m"), "lies outside the room")
        try:
            self.scene()
            self.grid()
        except ValueError as exc:
            chk.fail(("room",), str(exc))


def _pattern(section: dict) -> PatternSpec:
    if section["pattern"] == OMNI:
        return PatternSpec()
    return PatternSpec.cosine_db(section["max_gain_db"])
