"""Controlled natural language for body-shape descriptions.

A lexicon maps (measurement, level) pairs to surface forms ("long legs",
"broad shoulders"), plus intensity modifiers ("very"), idioms that expand
to several constraints at once ("pearl-shaped"), and sentence templates.
:func:`generate_description` renders a label set into an English sentence;
:func:`parse_description` inverts any such sentence (and reasonable free
text) back into per-measurement constraints. Generation followed by
parsing recovers exactly the mentioned (measurement, level) pairs.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Iterator, Mapping, Sequence

from .errors import LexiconError, UnparseableDescriptionError
from .labeling import LEVELS
from .measure import MEASUREMENT_NAMES

LEXICON_FORMAT_VERSION = 1

# Sentence scaffolding the parser skips silently; never part of a surface form
# except where a form embeds one mid-phrase (matching is literal, so that works).
_STOPWORDS = frozenset(
    "a an the and but with has have had is are was that this those who whose "
    "person people individual figure body someone they them their of for to "
    "rather quite".split()
)

_TOKEN_RE = re.compile(r"[a-z0-9]+")

_AVERAGE_INDEX = LEVELS.index("average")


def _tokenize(text: str) -> list[tuple[str, int, int]]:
    """Lowercased word tokens with (start, end) character offsets."""
    return [(m.group(0), m.start(), m.end()) for m in _TOKEN_RE.finditer(text.lower())]


def _phrase_key(phrase: str) -> tuple[str, ...]:
    key = tuple(tok for tok, _, _ in _tokenize(phrase))
    if not key:
        raise LexiconError(f"surface form {phrase!r} contains no word tokens")
    return key


def shift_outward(level: str, steps: int) -> str:
    """Move a level `steps` further from average, saturating at the extremes.

    "average" has no outward direction and is returned unchanged.
    """
    if level not in LEVELS:
        raise LexiconError(f"unknown level {level!r}")
    idx = LEVELS.index(level)
    if idx > _AVERAGE_INDEX:
        idx = min(len(LEVELS) - 1, idx + steps)
    elif idx < _AVERAGE_INDEX:
        idx = max(0, idx - steps)
    return LEVELS[idx]


@dataclass(frozen=True)
class Constraint:
    """One parsed requirement: a measurement pinned to a level."""

    measurement: str
    level: str
    weight: float = 1.0


class ConstraintSet:
    """At most one constraint per measurement, in first-mention order."""

    __slots__ = ("_by_name",)

    def __init__(self, constraints: Sequence[Constraint] = ()):
        self._by_name: dict[str, Constraint] = {}
        for c in constraints:
            self.add(c)

    def add(self, constraint: Constraint) -> Constraint | None:
        """Insert or replace; returns the constraint that was displaced, if any."""
        if constraint.measurement not in MEASUREMENT_NAMES:
            raise LexiconError(f"unknown measurement {constraint.measurement!r}")
        if constraint.level not in LEVELS:
            raise LexiconError(f"unknown level {constraint.level!r}")
        if constraint.weight < 0:
            raise LexiconError("constraint weight must be non-negative")
        old = self._by_name.get(constraint.measurement)
        self._by_name[constraint.measurement] = constraint
        return old

    def get(self, measurement: str) -> Constraint | None:
        return self._by_name.get(measurement)

    def as_dict(self) -> dict[str, str]:
        """measurement -> level, in mention order."""
        return {name: c.level for name, c in self._by_name.items()}

    def __iter__(self) -> Iterator[Constraint]:
        return iter(self._by_name.values())

    def __len__(self) -> int:
        return len(self._by_name)

    def __contains__(self, measurement: str) -> bool:
        return measurement in self._by_name

    def __eq__(self, other) -> bool:
        if not isinstance(other, ConstraintSet):
            return NotImplemented
        return self._by_name == other._by_name

    def __repr__(self) -> str:
        inner = ", ".join(f"{c.measurement}={c.level}" for c in self)
        return f"ConstraintSet({inner})"


@dataclass(frozen=True)
class MatchedPhrase:
    """One recognized span: the matched text and the constraints it produced."""

    text: str
    start: int
    end: int
    pairs: tuple[tuple[str, str], ...]


@dataclass
class ParseDiagnostics:
    """What the parser understood, skipped, and revised."""

    matched: list[MatchedPhrase] = field(default_factory=list)
    unmatched_spans: list[str] = field(default_factory=list)
    overridden: list[tuple[str, str, str]] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "matched": [
                {"text": m.text, "start": m.start, "end": m.end,
                 "constraints": [list(p) for p in m.pairs]}
                for m in self.matched
            ],
            "unmatched_spans": list(self.unmatched_spans),
            "overridden": [list(o) for o in self.overridden],
        }


@dataclass(frozen=True)
class Lexicon:
    """Validated surface-form inventory plus the derived match table."""

    phrases: Mapping[str, Mapping[str, tuple[str, ...]]]
    modifiers: Mapping[str, int]
    idioms: Mapping[str, tuple[tuple[str, str], ...]]
    templates: tuple[str, ...]
    # token-tuple -> ("phrase", measurement, level) | ("idiom", pairs)
    table: Mapping[tuple[str, ...], tuple] = field(repr=False)
    max_phrase_tokens: int = field(repr=False)

    def forms(self, measurement: str, level: str) -> tuple[str, ...]:
        try:
            return self.phrases[measurement][level]
        except KeyError:
            raise LexiconError(
                f"lexicon has no forms for ({measurement!r}, {level!r})"
            ) from None


def _build_lexicon(raw: dict, source: str) -> Lexicon:
    if not isinstance(raw, dict):
        raise LexiconError(f"{source}: lexicon root must be an object")
    if raw.get("version") != LEXICON_FORMAT_VERSION:
        raise LexiconError(f"{source}: unsupported lexicon version {raw.get('version')!r}")
    for section in ("phrases", "modifiers", "idioms", "templates"):
        if section not in raw:
            raise LexiconError(f"{source}: missing section {section!r}")

    phrases: dict[str, dict[str, tuple[str, ...]]] = {}
    table: dict[tuple[str, ...], tuple] = {}

    def claim(key: tuple[str, ...], entry: tuple, phrase: str) -> None:
        prior = table.get(key)
        if prior is not None and prior != entry:
            raise LexiconError(
                f"{source}: surface form {phrase!r} maps to two different targets"
            )
        table[key] = entry

    raw_phrases = raw["phrases"]
    for name in MEASUREMENT_NAMES:
        levels = raw_phrases.get(name)
        if not isinstance(levels, dict):
            raise LexiconError(f"{source}: phrases missing measurement {name!r}")
        phrases[name] = {}
        for level in LEVELS:
            forms = levels.get(level)
            if not isinstance(forms, list) or len(forms) < 2:
                raise LexiconError(
                    f"{source}: ({name}, {level}) needs at least 2 surface forms"
                )
            for form in forms:
                if not isinstance(form, str) or not form.strip():
                    raise LexiconError(f"{source}: bad surface form under ({name}, {level})")
                claim(_phrase_key(form), ("phrase", name, level), form)
            phrases[name][level] = tuple(forms)
        extra = set(levels) - set(LEVELS)
        if extra:
            raise LexiconError(f"{source}: unknown level(s) {sorted(extra)} under {name!r}")
    extra = set(raw_phrases) - set(MEASUREMENT_NAMES)
    if extra:
        raise LexiconError(f"{source}: unknown measurement(s) {sorted(extra)} in phrases")

    modifiers: dict[str, int] = {}
    for word, steps in raw["modifiers"].items():
        key = _phrase_key(word)
        if len(key) != 1:
            raise LexiconError(f"{source}: modifier {word!r} must be a single word")
        if not isinstance(steps, int) or steps < 1:
            raise LexiconError(f"{source}: modifier {word!r} must shift by a positive integer")
        modifiers[key[0]] = steps

    idioms: dict[str, tuple[tuple[str, str], ...]] = {}
    for phrase, raw_pairs in raw["idioms"].items():
        if not isinstance(raw_pairs, list) or not raw_pairs:
            raise LexiconError(f"{source}: idiom {phrase!r} must expand to constraints")
        pairs = []
        for item in raw_pairs:
            if (not isinstance(item, list)) or len(item) != 2:
                raise LexiconError(f"{source}: idiom {phrase!r} has a malformed expansion")
            name, level = item
            if name not in MEASUREMENT_NAMES:
                raise LexiconError(f"{source}: idiom {phrase!r} names unknown measurement {name!r}")
            if level not in LEVELS:
                raise LexiconError(f"{source}: idiom {phrase!r} names unknown level {level!r}")
            pairs.append((name, level))
        entry = ("idiom", tuple(pairs))
        claim(_phrase_key(phrase), entry, phrase)
        idioms[phrase] = tuple(pairs)

    templates = raw["templates"]
    if not isinstance(templates, list) or not templates:
        raise LexiconError(f"{source}: templates must be a non-empty list")
    for tpl in templates:
        if not isinstance(tpl, str) or "{}" not in tpl:
            raise LexiconError(f"{source}: template {tpl!r} must contain a {{}} slot")

    return Lexicon(
        phrases=phrases,
        modifiers=modifiers,
        idioms=idioms,
        templates=tuple(templates),
        table=table,
        max_phrase_tokens=max(len(k) for k in table),
    )


def load_lexicon(path: str | Path) -> Lexicon:
    path = Path(path)
    if not path.exists():
        raise LexiconError(f"lexicon file not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise LexiconError(f"{path}: not valid JSON: {exc}") from exc
    return _build_lexicon(raw, str(path))


def default_lexicon_path() -> Path:
    return Path(__file__).parent / "data" / "default_lexicon.json"


@lru_cache(maxsize=1)
def default_lexicon() -> Lexicon:
    return load_lexicon(default_lexicon_path())


def _join_phrases(parts: Sequence[str]) -> str:
    if len(parts) == 1:
        return parts[0]
    if len(parts) == 2:
        return f"{parts[0]} and {parts[1]}"
    return ", ".join(parts[:-1]) + f", and {parts[-1]}"


def generate_description(
    lexicon: Lexicon,
    labels: Mapping[str, str],
    mentioned: Sequence[str],
    seed: int,
) -> str:
    """Render the mentioned measurements' labels as one English sentence.

    Deterministic in (lexicon, labels, mentioned, seed). The sentence
    parses back to exactly {m: labels[m] for m in mentioned}.
    """
    if not mentioned:
        raise LexiconError("mentioned must name at least one measurement")
    if len(set(mentioned)) != len(mentioned):
        raise LexiconError("mentioned contains duplicates")
    for name in mentioned:
        if name not in MEASUREMENT_NAMES:
            raise LexiconError(f"unknown measurement {name!r}")
        if name not in labels:
            raise LexiconError(f"mentioned measurement {name!r} has no label")
        if labels[name] not in LEVELS:
            raise LexiconError(f"unknown level {labels[name]!r} for {name!r}")

    rng = random.Random(seed)
    order = list(mentioned)
    rng.shuffle(order)
    parts = [rng.choice(lexicon.forms(name, labels[name])) for name in order]
    template = rng.choice(lexicon.templates)
    return template.format(_join_phrases(parts))


def parse_description(lexicon: Lexicon, text: str) -> tuple[ConstraintSet, ParseDiagnostics]:
    """Extract per-measurement constraints from free text.

    Greedy left-to-right longest match over the lexicon's surface forms and
    idioms, case-insensitive, on word tokens. A modifier word directly before
    a match shifts its level(s) one step away from average (saturating).
    Re-mentioning a measurement overrides the earlier level; the override is
    recorded. Raises UnparseableDescriptionError when nothing matches.
    """
    tokens = _tokenize(text)
    words = [t[0] for t in tokens]
    n = len(tokens)

    constraints = ConstraintSet()
    diag = ParseDiagnostics()
    pending_shift = 0
    unmatched_run: list[int] = []

    def flush_unmatched() -> None:
        if unmatched_run:
            start = tokens[unmatched_run[0]][1]
            end = tokens[unmatched_run[-1]][2]
            diag.unmatched_spans.append(text[start:end])
            unmatched_run.clear()

    i = 0
    while i < n:
        entry = None
        length = 0
        for cand in range(min(lexicon.max_phrase_tokens, n - i), 0, -1):
            entry = lexicon.table.get(tuple(words[i : i + cand]))
            if entry is not None:
                length = cand
                break
        if entry is not None:
            flush_unmatched()
            if entry[0] == "phrase":
                pairs = ((entry[1], entry[2]),)
            else:
                pairs = entry[1]
            shifted = tuple(
                (name, shift_outward(level, pending_shift)) for name, level in pairs
            )
            start, end = tokens[i][1], tokens[i + length - 1][2]
            diag.matched.append(MatchedPhrase(text[start:end], start, end, shifted))
            for name, level in shifted:
                old = constraints.add(Constraint(name, level))
                if old is not None and old.level != level:
                    diag.overridden.append((name, old.level, level))
            pending_shift = 0
            i += length
            continue
        word = words[i]
        if word in lexicon.modifiers:
            pending_shift += lexicon.modifiers[word]
        else:
            pending_shift = 0
            if word not in _STOPWORDS:
                unmatched_run.append(i)
            else:
                flush_unmatched()
        i += 1
    flush_unmatched()

    if len(constraints) == 0:
        raise UnparseableDescriptionError(
            "no body-shape phrase recognized in description", diagnostics=diag
        )
    return constraints, diag
