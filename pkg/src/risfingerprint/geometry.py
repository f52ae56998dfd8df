"""Positions, orientations and per-element geometry for Tx, RIS and Rx.

Points are plain ``numpy`` arrays of shape ``(3,)`` (or ``(..., 3)`` for the
vectorised helpers). Orientation vectors are validated, never renormalised.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

UNIT_TOL = 1e-9


def vec3(values) -> np.ndarray:
    """Return ``values`` as a finite float array of shape (3,)."""
    arr = np.asarray(values, dtype=float).reshape(-1)
    if arr.shape != (3,):
        raise ValueError(f"expected 3 components, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"non-finite coordinate {arr.tolist()}")
    return arr


def _check_unit(name: str, v: np.ndarray) -> None:
    if abs(np.linalg.norm(v) - 1.0) > UNIT_TOL:
        raise ValueError(f"{name} must be a unit vector, |{name}|={np.linalg.norm(v):.12g}")


def _check_orthogonal(name_a: str, a: np.ndarray, name_b: str, b: np.ndarray) -> None:
    if abs(float(a @ b)) > UNIT_TOL:
        raise ValueError(f"{name_a} and {name_b} must be orthogonal (dot={float(a @ b):.3g})")


@dataclass(frozen=True)
class TxGeometry:
    """Uniform linear array at the transmitter."""

    position: np.ndarray
    n_antennas: int
    spacing: float
    direction: np.ndarray
    normal: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "position", vec3(self.position))
        object.__setattr__(self, "direction", vec3(self.direction))
        object.__setattr__(self, "normal", vec3(self.normal))
        if int(self.n_antennas) != self.n_antennas or self.n_antennas < 1:
            raise ValueError(f"n_antennas must be an integer >= 1, got {self.n_antennas}")
        if not self.spacing > 0:
            raise ValueError(f"antenna spacing must be positive, got {self.spacing}")
        _check_unit("e_T", self.direction)
        _check_unit("e_T^n", self.normal)
        _check_orthogonal("e_T", self.direction, "e_T^n", self.normal)

    def element_positions(self) -> np.ndarray:
        """Absolute antenna positions, shape (M_T, 3)."""
        return self.position + tx_offsets(self)


@dataclass(frozen=True)
class RisGeometry:
    """Rectangular RIS panel of ``rows x cols`` reflective units.

    ``unit_length`` is the unit extent along the row vector ``e_r`` and
    ``unit_width`` the extent along the column vector ``e_c``.
    """

    position: np.ndarray
    rows: int
    cols: int
    unit_length: float
    unit_width: float
    row_vec: np.ndarray
    col_vec: np.ndarray
    normal: np.ndarray
    reflection: float = 1.0

    def __post_init__(self):
        for name in ("position", "row_vec", "col_vec", "normal"):
            object.__setattr__(self, name, vec3(getattr(self, name)))
        for name in ("rows", "cols"):
            n = getattr(self, name)
            if int(n) != n or n < 1:
                raise ValueError(f"RIS {name} must be an integer >= 1, got {n}")
        if not (self.unit_length > 0 and self.unit_width > 0):
            raise ValueError("RIS unit length and width must be positive")
        if not 0.0 < self.reflection <= 1.0:
            raise ValueError(f"reflection magnitude must lie in (0, 1], got {self.reflection}")
        _check_unit("e_r", self.row_vec)
        _check_unit("e_c", self.col_vec)
        _check_unit("e_n", self.normal)
        _check_orthogonal("e_r", self.row_vec, "e_c", self.col_vec)
        _check_orthogonal("e_r", self.row_vec, "e_n", self.normal)
        _check_orthogonal("e_c", self.col_vec, "e_n", self.normal)

    @property
    def n_units(self) -> int:
        return self.rows * self.cols

    def unit_positions(self) -> np.ndarray:
        """Absolute unit-centre positions, shape (I, 3), row-major order."""
        return self.position + ris_offsets(self)


@dataclass(frozen=True)
class RxGeometry:
    position: np.ndarray
    normal: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "position", vec3(self.position))
        object.__setattr__(self, "normal", vec3(self.normal))
        _check_unit("e_R^n", self.normal)


def tx_element_offset(tx: TxGeometry, m: int) -> np.ndarray:
    """Offset of antenna ``m`` (1-based) from the array centre."""
    if not 1 <= m <= tx.n_antennas:
        raise IndexError(f"antenna index {m} outside 1..{tx.n_antennas}")
    return (m - (tx.n_antennas + 1) / 2) * tx.spacing * tx.direction


def tx_offsets(tx: TxGeometry) -> np.ndarray:
    m = np.arange(1, tx.n_antennas + 1)
    return ((m - (tx.n_antennas + 1) / 2) * tx.spacing)[:, None] * tx.direction


def unit_row_col(ris: RisGeometry, i: int) -> tuple[int, int]:
    """Map the 1-based unit index to its (row, column), row-major from the bottom-left."""
    if not 1 <= i <= ris.n_units:
        raise IndexError(f"unit index {i} outside 1..{ris.n_units}")
    row, col = divmod(i - 1, ris.cols)
    return row + 1, col + 1


def ris_element_offset(ris: RisGeometry, i: int) -> np.ndarray:
    """Offset of reflective unit ``i`` (1-based) from the panel centre."""
    m_i, n_i = unit_row_col(ris, i)
    return ((m_i - (ris.rows + 1) / 2) * ris.unit_width * ris.col_vec
            + (n_i - (ris.cols + 1) / 2) * ris.unit_length * ris.row_vec)


def ris_offsets(ris: RisGeometry) -> np.ndarray:
    idx = np.arange(ris.n_units)
    m_i = idx // ris.cols + 1
    n_i = idx % ris.cols + 1
    a = (m_i - (ris.rows + 1) / 2) * ris.unit_width
    b = (n_i - (ris.cols + 1) / 2) * ris.unit_length
    return a[:, None] * ris.col_vec + b[:, None] * ris.row_vec


def distance(a, b) -> float | np.ndarray:
    """Euclidean distance; broadcasts over leading axes."""
    return np.linalg.norm(np.asarray(b, dtype=float) - np.asarray(a, dtype=float), axis=-1)


def elevation_angle(origin, normal, target) -> float | np.ndarray:
    """Angle in [0, pi] between ``normal`` and the direction ``origin -> target``."""
    d = np.asarray(target, dtype=float) - np.asarray(origin, dtype=float)
    norm = np.linalg.norm(d, axis=-1)
    if np.any(norm == 0):
        raise ValueError("elevation angle undefined for coincident points")
    c = (d @ np.asarray(normal, dtype=float)) / norm
    return np.arccos(np.clip(c, -1.0, 1.0))
