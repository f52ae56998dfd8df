"""KNN fingerprint localisation and accuracy metrics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import streams
from .fingerprint import FingerprintDb

WEIGHT_EPS = 1e-9


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.8
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.train_fraction < 1:
            raise ValueError("train fraction must lie in (0, 1)")


@dataclass
class EvalReport:
    rmse: float
    errors: np.ndarray          # sorted 2-D errors, metres
    predictions: np.ndarray     # (n_test, 3), in test order
    truth: np.ndarray           # (n_test, 3)
    config: dict = field(default_factory=dict)

    def cdf(self) -> tuple[np.ndarray, np.ndarray]:
        n = len(self.errors)
        return self.errors, np.arange(1, n + 1) / n

    def percentile(self, q: float) -> float:
        return float(np.percentile(self.errors, q))

    def to_dict(self) -> dict:
        return {
            "rmse_m": self.rmse,
            "mean_error_m": float(np.mean(self.errors)),
            "median_error_m": self.percentile(50),
            "p90_error_m": self.percentile(90),
            "n_test": int(len(self.errors)),
            "cdf_errors_m": [float(e) for e in self.errors],
            "config": self.config,
        }


def split(db: FingerprintDb, spec: SplitSpec) -> tuple[FingerprintDb, FingerprintDb]:
    """Seeded shuffle, then the first floor(fraction * S_P) records train."""
    n = len(db)
    if n < 2:
        raise ValueError("need at least two records to split")
    order = streams.substream(spec.seed, streams.SPLIT).permutation(n)
    n_train = int(np.floor(spec.train_fraction * n))
    n_train = min(max(n_train, 1), n - 1)
    return db.subset(order[:n_train]), db.subset(order[n_train:])


def knn_predict(train: FingerprintDb, query_rss, k: int) -> np.ndarray:
    """Inverse-distance-weighted mean of the ``k`` nearest fingerprints' coordinates.

    Ties in RSS distance go to the lower training index.
    """
    return knn_predict_many(train, np.atleast_2d(query_rss), k)[0]


def knn_predict_many(train: FingerprintDb, queries, k: int) -> np.ndarray:
    queries = np.asarray(queries, dtype=float)
    if not 1 <= k <= len(train):
        raise ValueError(f"k={k} outside 1..{len(train)}")
    if queries.shape[1] != train.n_measurements:
        raise ValueError(f"query has {queries.shape[1]} values, database has {train.n_measurements}")
    d = np.empty((len(queries), len(train)))
    for lo in range(0, len(queries), 128):
        diff = queries[lo:lo + 128, None, :] - train.rss[None, :, :]
        d[lo:lo + 128] = np.sqrt(np.einsum("qtn,qtn->qt", diff, diff))
    nearest = np.argsort(d, axis=1, kind="stable")[:, :k]
    dn = np.take_along_axis(d, nearest, axis=1)
    w = 1.0 / (dn + WEIGHT_EPS)
    w /= w.sum(axis=1, keepdims=True)
    pred = np.einsum("qk,qkc->qc", w, train.positions[nearest])
    # survey height is constant; keep it exact instead of a weighted average
    pred[:, 2] = train.positions[nearest[:, 0], 2]
    return pred


def rmse_2d(pred, truth) -> float:
    err = np.linalg.norm(np.asarray(pred)[:, :2] - np.asarray(truth)[:, :2], axis=1)
    return float(np.sqrt(np.mean(err**2)))


def evaluate(db: FingerprintDb, spec: SplitSpec = SplitSpec(), k: int = 5) -> EvalReport:
    train, test = split(db, spec)
    pred = knn_predict_many(train, test.rss, k)
    err = np.linalg.norm(pred[:, :2] - test.positions[:, :2], axis=1)
    return EvalReport(
        rmse=float(np.sqrt(np.mean(err**2))),
        errors=np.sort(err),
        predictions=pred,
        truth=test.positions,
        config={"k": k, "train_fraction": spec.train_fraction, "split_seed": spec.seed,
                "n_train": len(train), "n_test": len(test)},
    )
