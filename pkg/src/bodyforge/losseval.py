"""Loss terms and the evaluation harness for external shape predictors.

Scores prediction files in which a model answered each description with raw
text that should encode a 10-value shape vector. Three losses are computed
per record: token-level cross entropy from supplied per-token probabilities,
weighted L1 distance between shape vectors, and cross entropy between the
two avatars' soft bin distributions. The accuracy report counts, for every
described (measurement, level), how often the predicted avatar's measured
level matches, with malformed outputs accounted separately so that hits,
misses, and malformed always sum to the cell total.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy.special import log_softmax, softmax

from .bodymodel import BodyModelAsset, ShapeParams, evaluate_mesh
from .datasetgen import parse_jsonl_line, parse_shape_field
from .errors import (
    ArityError,
    InputError,
    JsonlFormatError,
    MalformedOutputError,
    ShapeParamsError,
)
from .labeling import BinTable, LEVELS, bin_edges, level_index
from .measure import MEASUREMENT_NAMES, measure_all
from .textlang import Lexicon, parse_description

DEFAULT_TEMPERATURE = 0.25
DEFAULT_COEFFICIENTS = (1.0, 1.0, 1.0)

_BRACKET_RE = re.compile(r"\[([^\[\]]*)\]")
_NUMBER_RE = re.compile(r"[-+]?(?:\d+\.?\d*|\.\d+)\Z")


@dataclass(frozen=True)
class PredictionRecord:
    """One evaluation case: the prompt, its reference β, and the model's answer."""

    description: str
    shape_params: ShapeParams
    predicted: str
    token_probs: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.token_probs is not None:
            for p in self.token_probs:
                if not (0.0 < p <= 1.0):
                    raise InputError("token probabilities must lie in (0, 1]")


@dataclass(frozen=True)
class BetaWeights:
    """Per-coordinate weights proportional to each shape direction's mean
    per-vertex displacement magnitude, normalized to sum 10."""

    values: tuple[float, ...]

    def __post_init__(self):
        if len(self.values) != 10 or any(v < 0 for v in self.values):
            raise InputError("BetaWeights needs 10 non-negative values")

    @classmethod
    def uniform(cls) -> "BetaWeights":
        return cls(values=(1.0,) * 10)


def beta_weights(asset: BodyModelAsset) -> BetaWeights:
    mags = np.linalg.norm(asset.shape_dirs, axis=1).mean(axis=0)
    w = 10.0 * mags / mags.sum()
    return BetaWeights(values=tuple(float(v) for v in w))


def parse_shape_string(text: str) -> ShapeParams:
    """First bracketed list of exactly 10 decimal numbers anywhere in `text`.

    Bracketed spans that are not pure number lists are skipped; a span that
    is a number list of the wrong length is an arity error.
    """
    for m in _BRACKET_RE.finditer(text):
        items = [p.strip() for p in m.group(1).split(",")]
        if all(_NUMBER_RE.match(p) for p in items) and items:
            if len(items) != 10:
                raise ArityError(
                    f"expected 10 numbers in shape list, found {len(items)}"
                )
            return ShapeParams([float(p) for p in items])
    raise MalformedOutputError("no bracketed list of decimal numbers in output")


def loss_llm(record: PredictionRecord) -> float | None:
    """Mean over reference tokens of -log(probability); None when absent."""
    if record.token_probs is None:
        return None
    probs = np.asarray(record.token_probs, dtype=np.float64)
    return float(np.mean(-np.log(probs)))


def loss_shape(
    pred: ShapeParams, ref: ShapeParams, weights: BetaWeights
) -> float:
    """Weighted L1 distance between shape vectors, divided by 10."""
    w = np.asarray(weights.values)
    return float(np.sum(w * np.abs(pred.values - ref.values)) / 10.0)


def _bin_distribution(
    bins: BinTable, name: str, value: float, temperature: float
) -> tuple[np.ndarray, np.ndarray]:
    """(probabilities, log-probabilities) of the 5 bins for one value.

    Softmax over negative distance from the value to each bin's center,
    scaled by the bin's own width times the temperature.
    """
    edges = bin_edges(bins, name)
    centers = 0.5 * (edges[:-1] + edges[1:])
    widths = edges[1:] - edges[:-1]
    logits = -np.abs(value - centers) / (temperature * widths)
    return softmax(logits), log_softmax(logits)


def loss_measurements(
    asset: BodyModelAsset,
    bins: BinTable,
    pred: ShapeParams,
    ref: ShapeParams,
    temperature: float = DEFAULT_TEMPERATURE,
) -> float:
    """Cross entropy between soft bin distributions, averaged over measurements.

    The reference avatar's distribution is the target: the loss is
    -sum(ref_dist * log(pred_dist)) per measurement. Equal shapes therefore
    score the reference distribution's self-entropy, and the excess over that
    self-entropy is the KL divergence (non-negative, zero iff equal).
    """
    if temperature <= 0:
        raise InputError("temperature must be positive")
    m_pred = measure_all(asset, evaluate_mesh(asset, pred)).as_array()
    m_ref = measure_all(asset, evaluate_mesh(asset, ref)).as_array()
    total = 0.0
    for j, name in enumerate(MEASUREMENT_NAMES):
        ref_dist, _ = _bin_distribution(bins, name, float(m_ref[j]), temperature)
        _, pred_log = _bin_distribution(bins, name, float(m_pred[j]), temperature)
        total += float(-(ref_dist * pred_log).sum())
    return total / len(MEASUREMENT_NAMES)


def total_loss(
    llm: float | None,
    shape: float | None,
    measurements: float | None,
    coefficients: Sequence[float] = DEFAULT_COEFFICIENTS,
) -> float | None:
    """Coefficient-weighted sum of the available terms; None if none apply."""
    terms = []
    for c, v in zip(coefficients, (llm, shape, measurements)):
        if v is not None:
            terms.append(c * v)
    if not terms:
        return None
    return sum(terms)


@dataclass
class CellStats:
    hits: int = 0
    misses: int = 0
    malformed: int = 0

    @property
    def total(self) -> int:
        return self.hits + self.misses + self.malformed

    @property
    def accuracy(self) -> float:
        return self.hits / self.total if self.total else 0.0


@dataclass
class AccuracyReport:
    """Per-(measurement, level) accuracy plus the bookkeeping the paper's
    failure analysis needs: malformed-output kinds and opposite-extreme
    confusions (a described extreme measured at the opposite extreme)."""

    cells: dict[tuple[str, str], CellStats] = field(default_factory=dict)
    records: int = 0
    malformed_no_list: int = 0
    malformed_bad_arity: int = 0
    malformed_out_of_bounds: int = 0
    extreme_confusions: int = 0
    scatter: list[tuple[str, str, float]] = field(default_factory=list)

    @property
    def malformed_records(self) -> int:
        return (
            self.malformed_no_list
            + self.malformed_bad_arity
            + self.malformed_out_of_bounds
        )

    def cell(self, measurement: str, level: str) -> CellStats:
        return self.cells.setdefault((measurement, level), CellStats())


@dataclass(frozen=True)
class EvaluationResult:
    report: AccuracyReport
    loss_llm: float | None
    loss_shape: float | None
    loss_measurements: float | None
    loss_total: float | None


_OPPOSITES = {("very_low", "very_high"), ("very_high", "very_low")}


def evaluate_predictions(
    asset: BodyModelAsset,
    bins: BinTable,
    lexicon: Lexicon,
    records: Sequence[PredictionRecord],
    temperature: float = DEFAULT_TEMPERATURE,
    coefficients: Sequence[float] = DEFAULT_COEFFICIENTS,
) -> EvaluationResult:
    """Score every record against its description's constraints."""
    if not records:
        raise InputError("no prediction records to evaluate")
    weights = beta_weights(asset)
    report = AccuracyReport()
    llm_terms: list[float] = []
    shape_terms: list[float] = []
    meas_terms: list[float] = []

    for record in records:
        report.records += 1
        constraints, _ = parse_description(lexicon, record.description)

        pred_sp: ShapeParams | None = None
        try:
            pred_sp = parse_shape_string(record.predicted)
        except ArityError:
            report.malformed_bad_arity += 1
        except MalformedOutputError:
            report.malformed_no_list += 1
        except ShapeParamsError:
            report.malformed_out_of_bounds += 1

        term = loss_llm(record)
        if term is not None:
            llm_terms.append(term)

        if pred_sp is None:
            for c in constraints:
                report.cell(c.measurement, c.level).malformed += 1
            continue

        shape_terms.append(loss_shape(pred_sp, record.shape_params, weights))
        meas_terms.append(
            loss_measurements(
                asset, bins, pred_sp, record.shape_params, temperature
            )
        )
        measured = measure_all(asset, evaluate_mesh(asset, pred_sp))
        values = measured.as_dict()
        for c in constraints:
            achieved_level = LEVELS[level_index(bins, c.measurement, values[c.measurement])]
            cell = report.cell(c.measurement, c.level)
            if achieved_level == c.level:
                cell.hits += 1
            else:
                cell.misses += 1
                if (c.level, achieved_level) in _OPPOSITES:
                    report.extreme_confusions += 1
            report.scatter.append((c.measurement, c.level, values[c.measurement]))

    mean_llm = float(np.mean(llm_terms)) if llm_terms else None
    mean_shape = float(np.mean(shape_terms)) if shape_terms else None
    mean_meas = float(np.mean(meas_terms)) if meas_terms else None
    return EvaluationResult(
        report=report,
        loss_llm=mean_llm,
        loss_shape=mean_shape,
        loss_measurements=mean_meas,
        loss_total=total_loss(mean_llm, mean_shape, mean_meas, coefficients),
    )


def parse_predictions(text: str) -> list[PredictionRecord]:
    """Strict prediction JSONL parser; malformed lines carry their number."""
    records = []
    for line_number, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            raise JsonlFormatError("blank line", line_number)
        obj = parse_jsonl_line(
            line,
            line_number,
            ("description", "shape_params", "predicted"),
            optional_keys=("token_probs",),
        )
        if not isinstance(obj["description"], str) or not obj["description"]:
            raise JsonlFormatError("description must be a non-empty string", line_number)
        if not isinstance(obj["predicted"], str):
            raise JsonlFormatError("predicted must be a string", line_number)
        ref = parse_shape_field(obj["shape_params"], line_number)
        probs = None
        if "token_probs" in obj:
            raw = obj["token_probs"]
            if (
                not isinstance(raw, list)
                or not raw
                or not all(isinstance(p, (int, float)) for p in raw)
            ):
                raise JsonlFormatError(
                    "token_probs must be a non-empty number array", line_number
                )
            if any(not (0.0 < float(p) <= 1.0) for p in raw):
                raise JsonlFormatError(
                    "token_probs values must lie in (0, 1]", line_number
                )
            probs = tuple(float(p) for p in raw)
        records.append(
            PredictionRecord(
                description=obj["description"],
                shape_params=ref,
                predicted=obj["predicted"],
                token_probs=probs,
            )
        )
    return records


def read_predictions(path: str | Path) -> list[PredictionRecord]:
    """parse_predictions over a file's content."""
    path = Path(path)
    if not path.exists():
        raise JsonlFormatError(f"prediction file not found: {path}")
    return parse_predictions(path.read_text(encoding="utf-8"))


def _format_loss(value: float | None) -> str:
    return "n/a" if value is None else f"{value:.6f}"


def render_report(result: EvaluationResult) -> str:
    """Fixed-format text report: accuracy rows then loss and error summary.

    The same renderer backs the CLI and the HTTP service so their outputs
    are byte-identical for identical inputs.
    """
    report = result.report
    lines = ["measurement accuracy", "====================", ""]
    lines.append(f"{'cell':<34}{'accuracy':>10}{'hits':>8}{'miss':>8}{'bad':>8}")
    for name in MEASUREMENT_NAMES:
        for level in LEVELS:
            stats = report.cells.get((name, level))
            if stats is None or stats.total == 0:
                continue
            lines.append(
                f"{name + '_' + level:<34}"
                f"{100.0 * stats.accuracy:>9.1f}%"
                f"{stats.hits:>8}{stats.misses:>8}{stats.malformed:>8}"
            )
    lines += [
        "",
        f"records evaluated:          {report.records}",
        f"malformed outputs:          {report.malformed_records}"
        f" (no list {report.malformed_no_list},"
        f" bad arity {report.malformed_bad_arity},"
        f" out of bounds {report.malformed_out_of_bounds})",
        f"opposite-extreme confusions: {report.extreme_confusions}",
        "",
        "losses",
        "======",
        f"token cross entropy:  {_format_loss(result.loss_llm)}",
        f"shape L1 (weighted):  {_format_loss(result.loss_shape)}",
        f"measurement CE:       {_format_loss(result.loss_measurements)}",
        f"total:                {_format_loss(result.loss_total)}",
    ]
    return "\n".join(lines) + "\n"
