"""Quantile calibration and 5-level categorical labeling of measurements.

Bins are empirical quantiles of the 12 measurements over a sampled avatar
population (β ~ N(0,1)¹⁰ truncated to [-3, 3]). Labels use a half-open,
upper-inclusive convention: a value equal to a threshold belongs to the
higher bin.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import ndtr, ndtri

from .bodymodel import BodyModelAsset
from .errors import BinConfigError, IncompleteBinsError
from .measure import MEASUREMENT_NAMES, MeasurementVector, measure_many

LEVELS = ("very_low", "low", "average", "high", "very_high")
DEFAULT_QUANTILES = (0.05, 0.30, 0.70, 0.95)
SAMPLING_BOUND = 3.0

BIN_FORMAT_VERSION = 1


def _quantize9(x: float) -> float:
    return float(f"{x:.9g}")


@dataclass(frozen=True)
class BinTable:
    """Per-measurement quantile thresholds plus the provenance that made them."""

    quantiles: tuple
    sample_count: int
    seed: int
    thresholds: dict  # name -> (4,) ascending array
    observed_min: dict  # name -> float, over the calibration population
    observed_max: dict  # name -> float

    def validate(self) -> None:
        q = np.asarray(self.quantiles, dtype=np.float64)
        if q.shape != (4,) or not np.all(np.diff(q) > 0) or q[0] <= 0 or q[-1] >= 1:
            raise BinConfigError("quantiles must be 4 strictly ascending values in (0,1)")
        for name in MEASUREMENT_NAMES:
            if name not in self.thresholds:
                raise IncompleteBinsError(f"bins missing measurement {name!r}")
            t = np.asarray(self.thresholds[name], dtype=np.float64)
            if t.shape != (4,) or not np.all(np.diff(t) > 0):
                raise BinConfigError(f"thresholds for {name!r} must be 4 strictly ascending values")
            if name not in self.observed_min or name not in self.observed_max:
                raise BinConfigError(f"observed range missing for {name!r}")


def sample_shape_population(count: int, seed, bound: float = SAMPLING_BOUND) -> np.ndarray:
    """(count, 10) β rows ~ N(0,1) i.i.d., truncated to [-bound, bound] by
    inverse-CDF transform (no rejection, so the draw count is deterministic)."""
    rng = np.random.Generator(np.random.PCG64(seed))
    lo, hi = ndtr(-bound), ndtr(bound)
    u = rng.random((count, 10))
    return ndtri(lo + u * (hi - lo))


def calibrate_bins(
    asset: BodyModelAsset,
    sample_count: int,
    quantiles=DEFAULT_QUANTILES,
    seed: int = 0,
) -> BinTable:
    """Empirical quantile thresholds over sample_count sampled avatars."""
    if sample_count < 1000:
        raise BinConfigError("sample_count must be at least 1000 for a stable calibration")
    q = np.asarray(quantiles, dtype=np.float64)
    if q.shape != (4,) or not np.all(np.diff(q) > 0) or q[0] <= 0 or q[-1] >= 1:
        raise BinConfigError("quantiles must be 4 strictly ascending values in (0,1)")
    betas = sample_shape_population(sample_count, seed)
    m = measure_many(asset, betas)
    thresholds = {}
    obs_min = {}
    obs_max = {}
    for j, name in enumerate(MEASUREMENT_NAMES):
        col = m[:, j]
        thresholds[name] = np.array([_quantize9(v) for v in np.quantile(col, q)])
        obs_min[name] = _quantize9(float(col.min()))
        obs_max[name] = _quantize9(float(col.max()))
    table = BinTable(
        quantiles=tuple(float(v) for v in q),
        sample_count=int(sample_count),
        seed=int(seed),
        thresholds=thresholds,
        observed_min=obs_min,
        observed_max=obs_max,
    )
    table.validate()
    return table


def level_index(bins: BinTable, name: str, value: float) -> int:
    """0..4 level index; value equal to a threshold goes to the higher bin."""
    try:
        t = bins.thresholds[name]
    except KeyError:
        raise IncompleteBinsError(f"bins missing measurement {name!r}") from None
    return int(np.searchsorted(np.asarray(t), value, side="right"))


# Fraction of the observed calibration range used to close the outer bins.
RANGE_EXTENSION = 0.10


def bin_edges(bins: BinTable, name: str) -> np.ndarray:
    """Six finite edges bounding the five bins.

    The four thresholds bound the interior; the outer bins are closed at the
    calibration population's observed min/max extended by 10% of the observed
    range, so every bin has a finite center and width.
    """
    try:
        t = bins.thresholds[name]
        lo_obs = bins.observed_min[name]
        hi_obs = bins.observed_max[name]
    except KeyError:
        raise IncompleteBinsError(f"bins missing measurement {name!r}") from None
    ext = RANGE_EXTENSION * (hi_obs - lo_obs)
    return np.array([lo_obs - ext, t[0], t[1], t[2], t[3], hi_obs + ext])


def assign_labels(bins: BinTable, m: MeasurementVector) -> dict:
    """MeasurementVector -> {measurement name: level name} over all 12 names."""
    return {
        name: LEVELS[level_index(bins, name, value)]
        for name, value in m.as_dict().items()
    }


def assign_level_indices(bins: BinTable, m_rows: np.ndarray) -> np.ndarray:
    """Batched labeling: (N, 12) measurement rows -> (N, 12) level indices."""
    out = np.empty(m_rows.shape, dtype=np.int8)
    for j, name in enumerate(MEASUREMENT_NAMES):
        if name not in bins.thresholds:
            raise IncompleteBinsError(f"bins missing measurement {name!r}")
        t = np.asarray(bins.thresholds[name])
        out[:, j] = np.searchsorted(t, m_rows[:, j], side="right")
    return out


def bins_document(bins: BinTable) -> dict:
    """The bin table as a JSON-ready document (the on-disk schema)."""
    return {
        "version": BIN_FORMAT_VERSION,
        "quantiles": list(bins.quantiles),
        "sample_count": bins.sample_count,
        "seed": bins.seed,
        "thresholds": {k: np.asarray(v).tolist() for k, v in bins.thresholds.items()},
        "observed_min": dict(bins.observed_min),
        "observed_max": dict(bins.observed_max),
    }


def save_bins(bins: BinTable, path) -> None:
    Path(path).write_text(json.dumps(bins_document(bins), indent=1), encoding="utf-8")


def load_bins(path) -> BinTable:
    path = Path(path)
    if not path.exists():
        raise BinConfigError(f"bin table file not found: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise BinConfigError(f"bin table file is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("version") != BIN_FORMAT_VERSION:
        raise BinConfigError("unsupported or malformed bin table document")
    try:
        table = BinTable(
            quantiles=tuple(float(v) for v in doc["quantiles"]),
            sample_count=int(doc["sample_count"]),
            seed=int(doc["seed"]),
            thresholds={str(k): np.asarray(v, dtype=np.float64) for k, v in doc["thresholds"].items()},
            observed_min={str(k): float(v) for k, v in doc["observed_min"].items()},
            observed_max={str(k): float(v) for k, v in doc["observed_max"].items()},
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise BinConfigError(f"bin table document malformed: {exc}") from exc
    table.validate()
    return table


def default_bins_path() -> Path:
    return Path(__file__).parent / "data" / "default_bins.json"


_DEFAULT_BINS = None


def default_bins() -> BinTable:
    """The calibration shipped with the package (cached after first load)."""
    global _DEFAULT_BINS
    if _DEFAULT_BINS is None:
        _DEFAULT_BINS = load_bins(default_bins_path())
    return _DEFAULT_BINS
