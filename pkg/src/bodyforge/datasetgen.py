"""Corpus generation: sampled shapes paired with verbal descriptions.

Each entry samples a shape vector, measures and labels its avatar, renders
a description for a chosen subset of the labels, optionally paraphrases it
through an external text endpoint, and validates that the final text still
parses back to exactly the labels it is supposed to convey. Entries stream:
memory use is independent of count, and every entry's randomness derives
from (run seed, entry index) alone, so any slice of a run is reproducible
without generating its predecessors.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Iterator, Mapping, Sequence

import numpy as np

from .bodymodel import BodyModelAsset, ShapeParams, evaluate_mesh
from .errors import InputError, JsonlFormatError
from .labeling import BinTable, assign_labels, sample_shape_population
from .measure import MEASUREMENT_NAMES, measure_all
from .textlang import Lexicon, generate_description, parse_description

# Decimal places kept in shape_params serialization; entries are generated
# from values already rounded to this precision so that file and memory agree.
SHAPE_DECIMALS = 3


@dataclass(frozen=True)
class DatasetEntry:
    """One corpus line: a description and the shape vector it describes."""

    description: str
    shape_params: ShapeParams
    labels: Mapping[str, str] | None = None
    mentioned: tuple[str, ...] | None = None
    index: int | None = None


@dataclass
class DatasetStats:
    """Counters filled by generate_dataset (paraphrase bookkeeping)."""

    entries: int = 0
    paraphrase_attempts: int = 0
    paraphrase_rejected: int = 0
    paraphrase_failures: int = 0


class ParaphraseProvider:
    """Interface: rewrite `text` preserving its meaning; raise on failure."""

    def paraphrase(self, text: str) -> str:
        raise NotImplementedError


class HttpParaphraseProvider(ParaphraseProvider):
    """POSTs {"text", "instruction"} to a completion endpoint, expects {"text"}."""

    DEFAULT_INSTRUCTION = (
        "Rephrase this body description. Keep every mentioned attribute and "
        "its intensity; do not add or drop attributes."
    )

    def __init__(
        self,
        endpoint: str,
        timeout: float = 10.0,
        retries: int = 2,
        instruction: str = DEFAULT_INSTRUCTION,
    ):
        self.endpoint = endpoint
        self.timeout = timeout
        self.retries = retries
        self.instruction = instruction

    def paraphrase(self, text: str) -> str:
        import requests

        last_error: Exception | None = None
        for _ in range(self.retries + 1):
            try:
                resp = requests.post(
                    self.endpoint,
                    json={"text": text, "instruction": self.instruction},
                    timeout=self.timeout,
                )
                resp.raise_for_status()
                out = resp.json()["text"]
                if not isinstance(out, str):
                    raise ValueError("paraphrase endpoint returned a non-string text")
                return out
            except Exception as exc:  # noqa: BLE001 - any transport failure falls back
                last_error = exc
        raise RuntimeError(f"paraphrase endpoint failed after retries: {last_error}")


MentionPolicy = Callable[[Mapping[str, str], np.random.Generator], Sequence[str]]


def default_mention_policy(
    labels: Mapping[str, str], rng: np.random.Generator
) -> list[str]:
    """2-5 measurements, non-average labels 3x as likely as average ones."""
    names = list(MEASUREMENT_NAMES)
    weights = np.array(
        [3.0 if labels[n] != "average" else 1.0 for n in names], dtype=np.float64
    )
    k = int(rng.integers(2, 6))
    picked = rng.choice(len(names), size=k, replace=False, p=weights / weights.sum())
    return [names[i] for i in sorted(picked)]


def _entry_seed(seed: int, index: int, stream: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(seed), int(index), int(stream)])


def generate_dataset(
    asset: BodyModelAsset,
    bins: BinTable,
    lexicon: Lexicon,
    count: int,
    seed: int,
    paraphrase: ParaphraseProvider | None = None,
    mention_policy: MentionPolicy = default_mention_policy,
    stats: DatasetStats | None = None,
) -> Iterator[DatasetEntry]:
    """Yield `count` validated entries, deterministic in `seed` (sans paraphrase).

    Every emitted description is checked to parse back to exactly the
    mentioned labels; a paraphrase that breaks that (or an unreachable
    provider) falls back to the template text and bumps a counter.
    """
    if count < 1:
        raise InputError("count must be at least 1")
    bins.validate()
    for index in range(count):
        beta_raw = sample_shape_population(1, _entry_seed(seed, index, 0))[0]
        beta = np.round(beta_raw, SHAPE_DECIMALS)
        sp = ShapeParams(beta)
        m = measure_all(asset, evaluate_mesh(asset, sp))
        labels = assign_labels(bins, m)

        mention_rng = np.random.Generator(np.random.PCG64(_entry_seed(seed, index, 1)))
        mentioned = tuple(mention_policy(labels, mention_rng))

        desc_seed = int(_entry_seed(seed, index, 2).generate_state(1)[0])
        text = generate_description(lexicon, labels, mentioned, desc_seed)
        want = {name: labels[name] for name in mentioned}

        if paraphrase is not None:
            if stats is not None:
                stats.paraphrase_attempts += 1
            try:
                candidate = paraphrase.paraphrase(text)
            except Exception:  # noqa: BLE001 - provider failure never aborts the run
                candidate = None
                if stats is not None:
                    stats.paraphrase_failures += 1
            if candidate is not None:
                try:
                    parsed, _ = parse_description(lexicon, candidate)
                    keep = parsed.as_dict() == want
                except Exception:  # noqa: BLE001 - unparseable paraphrase
                    keep = False
                if keep:
                    text = candidate
                elif stats is not None:
                    stats.paraphrase_rejected += 1

        parsed, _ = parse_description(lexicon, text)
        if parsed.as_dict() != want:
            raise AssertionError(
                f"entry {index}: description failed round-trip validation"
            )
        if stats is not None:
            stats.entries += 1
        yield DatasetEntry(
            description=text,
            shape_params=sp,
            labels=labels,
            mentioned=mentioned,
            index=index,
        )


def format_shape_string(sp: ShapeParams | np.ndarray) -> str:
    """Bracketed, comma-plus-space list; 3 decimals, trailing zeros trimmed."""
    values = sp.values if isinstance(sp, ShapeParams) else np.asarray(sp)
    parts = []
    for v in values:
        s = f"{round(float(v), SHAPE_DECIMALS):.{SHAPE_DECIMALS}f}"
        s = s.rstrip("0").rstrip(".")
        if s in ("", "-0"):
            s = "0"
        parts.append(s)
    return "[" + ", ".join(parts) + "]"


_NUMBER_RE = re.compile(r"[-+]?(?:\d+\.?\d*|\.\d+)\Z")


def parse_shape_field(raw: object, line_number: int | None = None) -> ShapeParams:
    """Strict reader for the shape_params string of a dataset line."""
    if not isinstance(raw, str):
        raise JsonlFormatError("shape_params must be a string", line_number)
    body = raw.strip()
    if not (body.startswith("[") and body.endswith("]")):
        raise JsonlFormatError("shape_params must be a bracketed list", line_number)
    items = [p.strip() for p in body[1:-1].split(",")]
    if len(items) != 10 or any(not _NUMBER_RE.match(p) for p in items):
        raise JsonlFormatError(
            "shape_params must list exactly 10 decimal numbers", line_number
        )
    try:
        return ShapeParams([float(p) for p in items])
    except Exception as exc:
        raise JsonlFormatError(f"invalid shape vector: {exc}", line_number) from exc


def _reject_duplicate_keys(pairs):
    seen = set()
    for key, _ in pairs:
        if key in seen:
            raise ValueError(f"duplicate key {key!r}")
        seen.add(key)
    return dict(pairs)


def parse_jsonl_line(
    line: str,
    line_number: int,
    required_keys: Sequence[str],
    optional_keys: Sequence[str] = (),
) -> dict:
    """One strict JSONL object: exact required keys in order, no duplicates."""
    try:
        obj = json.loads(line, object_pairs_hook=_reject_duplicate_keys)
    except ValueError as exc:
        raise JsonlFormatError(f"invalid JSON: {exc}", line_number) from exc
    if not isinstance(obj, dict):
        raise JsonlFormatError("line is not a JSON object", line_number)
    keys = list(obj)
    required = list(required_keys)
    if keys[: len(required)] != required:
        raise JsonlFormatError(
            f"keys must start with {required} in order, got {keys}", line_number
        )
    extra = [k for k in keys[len(required):] if k not in optional_keys]
    if extra:
        raise JsonlFormatError(f"unexpected key(s) {extra}", line_number)
    return obj


def write_jsonl(entries: Iterable[DatasetEntry], path: str | Path) -> int:
    """One {"description", "shape_params"} object per line; returns the count."""
    path = Path(path)
    n = 0
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for entry in entries:
            record = {
                "description": entry.description,
                "shape_params": format_shape_string(entry.shape_params),
            }
            fh.write(json.dumps(record) + "\n")
            n += 1
    return n


def read_jsonl(path: str | Path) -> list[DatasetEntry]:
    """Inverse of write_jsonl; malformed lines carry their 1-based number."""
    path = Path(path)
    if not path.exists():
        raise JsonlFormatError(f"dataset file not found: {path}")
    entries = []
    with path.open("r", encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                raise JsonlFormatError("blank line", line_number)
            obj = parse_jsonl_line(line, line_number, ("description", "shape_params"))
            if not isinstance(obj["description"], str) or not obj["description"]:
                raise JsonlFormatError("description must be a non-empty string", line_number)
            sp = parse_shape_field(obj["shape_params"], line_number)
            entries.append(
                DatasetEntry(description=obj["description"], shape_params=sp)
            )
    return entries
