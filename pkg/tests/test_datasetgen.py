import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bodyforge.bodymodel import ShapeParams, evaluate_mesh
from bodyforge.datasetgen import (
    DatasetEntry,
    DatasetStats,
    HttpParaphraseProvider,
    ParaphraseProvider,
    default_mention_policy,
    format_shape_string,
    generate_dataset,
    parse_jsonl_line,
    parse_shape_field,
    read_jsonl,
    write_jsonl,
)
from bodyforge.errors import InputError, JsonlFormatError
from bodyforge.labeling import assign_labels
from bodyforge.measure import measure_all
from bodyforge.textlang import parse_description

GOLDEN_LINE = (
    '{"description": "Person with an average height, tall neck, long arms, '
    'and broad shoulders.", "shape_params": "[1.131, 1.928, -2.347, -0.793, '
    '0.251, 0.58, 1.707, -2.888, -1.904, 2.772]"}'
)


class TestFormatShapeString:
    def test_reference_vector_bytes(self):
        values = [1.131, 1.928, -2.347, -0.793, 0.251, 0.58, 1.707, -2.888, -1.904, 2.772]
        got = format_shape_string(np.array(values))
        assert got == "[1.131, 1.928, -2.347, -0.793, 0.251, 0.58, 1.707, -2.888, -1.904, 2.772]"

    def test_zeros_have_no_decimal_point(self):
        assert format_shape_string(np.zeros(10)) == "[0, 0, 0, 0, 0, 0, 0, 0, 0, 0]"

    def test_negative_zero_collapses_to_zero(self):
        assert format_shape_string(np.full(10, -0.0004)) == "[0, 0, 0, 0, 0, 0, 0, 0, 0, 0]"

    def test_trailing_zeros_are_trimmed(self):
        row = np.zeros(10)
        row[0] = 0.58
        row[1] = 1.2
        row[2] = 2.0
        assert format_shape_string(row).startswith("[0.58, 1.2, 2, 0")

    def test_accepts_shape_params(self):
        assert format_shape_string(ShapeParams.zeros()) == "[0, 0, 0, 0, 0, 0, 0, 0, 0, 0]"

    @settings(max_examples=200, deadline=None)
    @given(
        st.lists(
            st.floats(min_value=-5.0, max_value=5.0, allow_nan=False),
            min_size=10,
            max_size=10,
        )
    )
    def test_round_trips_at_three_decimals(self, values):
        text = format_shape_string(np.array(values))
        back = parse_shape_field(text)
        assert np.max(np.abs(back.values - np.asarray(values))) <= 5e-4 + 1e-9
        # a second trip changes nothing: the string is already 3-decimal canonical
        assert format_shape_string(back) == text


class TestParseShapeField:
    def test_rejects_non_string(self):
        with pytest.raises(JsonlFormatError):
            parse_shape_field([0.0] * 10)

    def test_rejects_missing_brackets(self):
        with pytest.raises(JsonlFormatError):
            parse_shape_field("1, 2, 3")

    def test_rejects_wrong_arity(self):
        with pytest.raises(JsonlFormatError):
            parse_shape_field("[1, 2, 3]")

    def test_rejects_out_of_bounds_values(self):
        with pytest.raises(JsonlFormatError):
            parse_shape_field("[9, 0, 0, 0, 0, 0, 0, 0, 0, 0]")

    def test_rejects_garbage_tokens(self):
        with pytest.raises(JsonlFormatError):
            parse_shape_field("[a, 0, 0, 0, 0, 0, 0, 0, 0, 0]")

    def test_error_carries_line_number(self):
        with pytest.raises(JsonlFormatError) as err:
            parse_shape_field("[1, 2]", line_number=17)
        assert err.value.line_number == 17


class TestGenerateDataset:
    def test_deterministic_per_seed(self, asset, bins, lexicon):
        a = list(generate_dataset(asset, bins, lexicon, 3, seed=1))
        b = list(generate_dataset(asset, bins, lexicon, 3, seed=1))
        assert [e.description for e in a] == [e.description for e in b]
        for x, y in zip(a, b):
            assert np.array_equal(x.shape_params.values, y.shape_params.values)

    def test_different_seeds_differ(self, asset, bins, lexicon):
        a = list(generate_dataset(asset, bins, lexicon, 3, seed=1))
        b = list(generate_dataset(asset, bins, lexicon, 3, seed=2))
        assert [e.description for e in a] != [e.description for e in b]

    def test_entries_are_self_consistent(self, asset, bins, lexicon):
        """Re-deriving labels from the stored β must agree with the text."""
        for entry in generate_dataset(asset, bins, lexicon, 40, seed=5):
            mv = measure_all(asset, evaluate_mesh(asset, entry.shape_params))
            labels = assign_labels(bins, mv)
            constraints, _ = parse_description(lexicon, entry.description)
            got = constraints.as_dict()
            assert set(got) == set(entry.mentioned)
            assert all(labels[name] == level for name, level in got.items())

    def test_betas_are_rounded_to_three_decimals(self, asset, bins, lexicon):
        for entry in generate_dataset(asset, bins, lexicon, 5, seed=3):
            v = entry.shape_params.values
            assert np.array_equal(v, np.round(v, 3))

    def test_rejects_non_positive_count(self, asset, bins, lexicon):
        with pytest.raises(InputError):
            list(generate_dataset(asset, bins, lexicon, 0, seed=1))


class TestMentionPolicy:
    def test_mentions_two_to_five_known_measurements(self, asset, bins, lexicon):
        labels = {name: "average" for name in
                  ("height", "neck_length", "arm_length", "legs_length",
                   "shoulder_breadth", "arms_relation", "shoulders_relation",
                   "waist_thickness", "hip_thickness", "leg_thickness",
                   "volume", "bmi")}
        rng = np.random.Generator(np.random.PCG64(0))
        for _ in range(50):
            picked = default_mention_policy(labels, rng)
            assert 2 <= len(picked) <= 5
            assert len(set(picked)) == len(picked)
            assert all(name in labels for name in picked)

    def test_prefers_non_average_labels(self):
        labels = {name: "average" for name in
                  ("height", "neck_length", "arm_length", "legs_length",
                   "shoulder_breadth", "arms_relation", "shoulders_relation",
                   "waist_thickness", "hip_thickness", "leg_thickness",
                   "volume")}
        labels["bmi"] = "very_high"
        rng = np.random.Generator(np.random.PCG64(1))
        hits = sum("bmi" in default_mention_policy(labels, rng) for _ in range(300))
        # weight 3 vs 1: expected pick rate is ~3x the uniform rate
        assert hits > 150


class TestJsonlFiles:
    def test_write_read_round_trip(self, asset, bins, lexicon, tmp_path):
        entries = list(generate_dataset(asset, bins, lexicon, 6, seed=2))
        path = tmp_path / "data.jsonl"
        assert write_jsonl(entries, path) == 6
        back = read_jsonl(path)
        assert len(back) == 6
        for original, loaded in zip(entries, back):
            assert loaded.description == original.description
            assert np.array_equal(
                loaded.shape_params.values, original.shape_params.values
            )

    def test_golden_line_bytes(self, tmp_path):
        """The serialized line for a reference entry, byte for byte."""
        entry = DatasetEntry(
            description=(
                "Person with an average height, tall neck, long arms, "
                "and broad shoulders."
            ),
            shape_params=ShapeParams(
                [1.131, 1.928, -2.347, -0.793, 0.251, 0.58, 1.707, -2.888, -1.904, 2.772]
            ),
        )
        path = tmp_path / "one.jsonl"
        write_jsonl([entry], path)
        assert path.read_text(encoding="utf-8") == GOLDEN_LINE + "\n"

    @pytest.mark.parametrize(
        "line",
        [
            '{"description": "x", "shape_params": "[1]"}',
            '{"shape_params": "[0, 0, 0, 0, 0, 0, 0, 0, 0, 0]", "description": "x"}',
            '{"description": "x", "description": "y", "shape_params": "[0, 0, 0, 0, 0, 0, 0, 0, 0, 0]"}',
            "not json",
            '{"description": "x", "shape_params": "[0, 0, 0, 0, 0, 0, 0, 0, 0, 0]", "extra": 1}',
            "",
            '{"description": "", "shape_params": "[0, 0, 0, 0, 0, 0, 0, 0, 0, 0]"}',
        ],
    )
    def test_second_line_problems_are_located(self, tmp_path, line):
        path = tmp_path / "bad.jsonl"
        good = '{"description": "tall", "shape_params": "[0, 0, 0, 0, 0, 0, 0, 0, 0, 0]"}'
        path.write_text(good + "\n" + line + "\n")
        with pytest.raises(JsonlFormatError) as err:
            read_jsonl(path)
        assert err.value.line_number == 2

    def test_parse_jsonl_line_enforces_key_order(self):
        with pytest.raises(JsonlFormatError):
            parse_jsonl_line(
                '{"shape_params": "x", "description": "y"}',
                1,
                required_keys=("description", "shape_params"),
            )

    def test_parse_jsonl_line_allows_optional_keys(self):
        doc = parse_jsonl_line(
            '{"description": "y", "shape_params": "x", "note": 1}',
            1,
            required_keys=("description", "shape_params"),
            optional_keys=("note",),
        )
        assert doc["note"] == 1


class _Mangler(ParaphraseProvider):
    def paraphrase(self, text: str) -> str:
        return "A short person."


class _SafeRewording(ParaphraseProvider):
    def paraphrase(self, text: str) -> str:
        if text.startswith("Person with"):
            return text.replace("Person with", "A person with", 1)
        return text


class _Broken(ParaphraseProvider):
    def paraphrase(self, text: str) -> str:
        raise RuntimeError("provider down")


class TestParaphraseGate:
    def test_meaning_changing_rewrites_are_rejected(self, asset, bins, lexicon):
        stats = DatasetStats()
        entries = list(
            generate_dataset(
                asset, bins, lexicon, 20, seed=9, paraphrase=_Mangler(), stats=stats
            )
        )
        assert stats.paraphrase_attempts == 20
        # a mangled rewrite may collide with the intended meaning only by luck
        assert stats.paraphrase_rejected >= 18
        for entry in entries:
            constraints, _ = parse_description(lexicon, entry.description)
            assert constraints.as_dict() == {
                name: entry.labels[name] for name in entry.mentioned
            }

    def test_meaning_preserving_rewrites_are_kept(self, asset, bins, lexicon):
        stats = DatasetStats()
        entries = list(
            generate_dataset(
                asset, bins, lexicon, 20, seed=9,
                paraphrase=_SafeRewording(), stats=stats,
            )
        )
        assert stats.paraphrase_rejected == 0
        assert stats.paraphrase_failures == 0
        plain = list(generate_dataset(asset, bins, lexicon, 20, seed=9))
        assert any(
            e.description != p.description for e, p in zip(entries, plain)
        )

    def test_provider_failure_falls_back_to_template_text(self, asset, bins, lexicon):
        stats = DatasetStats()
        entries = list(
            generate_dataset(
                asset, bins, lexicon, 10, seed=9, paraphrase=_Broken(), stats=stats
            )
        )
        assert stats.paraphrase_failures == 10
        plain = list(generate_dataset(asset, bins, lexicon, 10, seed=9))
        assert [e.description for e in entries] == [p.description for p in plain]


class _ParaphraseHandler(BaseHTTPRequestHandler):
    status = 200

    def do_POST(self):
        length = int(self.headers["Content-Length"])
        payload = json.loads(self.rfile.read(length))
        self.server.seen.append(payload)
        if self.status != 200:
            self.send_response(self.status)
            self.end_headers()
            return
        body = json.dumps({"text": payload["text"].upper()}).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args):
        pass


@pytest.fixture()
def paraphrase_server():
    server = HTTPServer(("127.0.0.1", 0), _ParaphraseHandler)
    server.seen = []
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield server
    server.shutdown()
    thread.join()


class TestHttpParaphraseProvider:
    def test_posts_text_with_instruction(self, paraphrase_server):
        url = f"http://127.0.0.1:{paraphrase_server.server_port}/"
        provider = HttpParaphraseProvider(url, timeout=5.0)
        assert provider.paraphrase("a tall person") == "A TALL PERSON"
        (payload,) = paraphrase_server.seen
        assert payload["text"] == "a tall person"
        assert payload["instruction"]

    def test_raises_after_retries_on_server_error(self, paraphrase_server):
        _ParaphraseHandler.status = 500
        try:
            url = f"http://127.0.0.1:{paraphrase_server.server_port}/"
            provider = HttpParaphraseProvider(url, timeout=5.0, retries=1)
            with pytest.raises(RuntimeError):
                provider.paraphrase("a tall person")
        finally:
            _ParaphraseHandler.status = 200
