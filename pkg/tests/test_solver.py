import numpy as np
import pytest

from bodyforge.bodymodel import ShapeParams, evaluate_mesh
from bodyforge.errors import InputError
from bodyforge.labeling import (
    LEVELS,
    assign_labels,
    bin_edges,
    sample_shape_population,
)
from bodyforge.measure import MEASUREMENT_NAMES, measure_all
from bodyforge.solver import (
    SolveConfig,
    constraint_intervals,
    mesh_to_obj,
    solve_description,
    solve_shape,
)
from bodyforge.textlang import Constraint, ConstraintSet, parse_description

REFERENCE_PROMPTS = (
    "A tall person with very long legs.",
    "A tall person with very short legs.",
    "Short, pearl-shaped person.",
    "Towering, muscular figure.",
    "Big shoulders but small hips person.",
    "A petite individual that has long arms.",
)


class TestSolveConfig:
    def test_defaults_validate(self):
        SolveConfig().validate()

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"max_iterations": 0},
            {"step_shrink": 1.0},
            {"step_grow": 0.9},
            {"fd_epsilon": 0.0},
            {"regularization": -1e-3},
            {"tolerance": 0.0},
            {"starts": 0},
        ],
    )
    def test_rejects_bad_knobs(self, kwargs):
        with pytest.raises(InputError):
            SolveConfig(**kwargs).validate()


class TestConstraintIntervals:
    def test_slices_bin_edges(self, bins):
        cs = ConstraintSet(
            [Constraint("height", "very_low"), Constraint("bmi", "average")]
        )
        intervals = constraint_intervals(bins, cs)
        h_edges = bin_edges(bins, "height")
        b_edges = bin_edges(bins, "bmi")
        assert intervals["height"] == (float(h_edges[0]), float(h_edges[1]))
        assert intervals["bmi"] == (float(b_edges[2]), float(b_edges[3]))

    def test_interval_level_alignment(self, bins):
        for level_idx, level in enumerate(LEVELS):
            cs = ConstraintSet([Constraint("waist_thickness", level)])
            (lo, hi), = constraint_intervals(bins, cs).values()
            edges = bin_edges(bins, "waist_thickness")
            assert (lo, hi) == (float(edges[level_idx]), float(edges[level_idx + 1]))


class TestSolveShape:
    def test_reference_prompts_are_satisfied(self, asset, bins, lexicon):
        for text in REFERENCE_PROMPTS:
            result, constraints, _ = solve_description(asset, bins, lexicon, text)
            assert result.satisfied, text
            labels = assign_labels(
                bins, measure_all(asset, evaluate_mesh(asset, result.beta))
            )
            for c in constraints:
                assert labels[c.measurement] == c.level, (text, c)

    def test_report_is_sound(self, asset, bins, lexicon):
        """report rows, the satisfied flag, and fresh labels must agree."""
        result, constraints, _ = solve_description(
            asset, bins, lexicon, REFERENCE_PROMPTS[0]
        )
        labels = assign_labels(
            bins, measure_all(asset, evaluate_mesh(asset, result.beta))
        )
        assert result.satisfied == all(r.satisfied for r in result.report)
        for row in result.report:
            assert row.satisfied == (labels[row.measurement] == row.level)
            lo, hi = row.interval
            assert row.satisfied == (lo <= row.achieved < hi)

    def test_deterministic(self, asset, bins, lexicon):
        cs, _ = parse_description(lexicon, REFERENCE_PROMPTS[0])
        r1 = solve_shape(asset, bins, cs, SolveConfig(seed=3))
        r2 = solve_shape(asset, bins, cs, SolveConfig(seed=3))
        assert np.array_equal(r1.beta.values, r2.beta.values)
        assert r1.objective == r2.objective
        assert r1.objective_trace == r2.objective_trace

    def test_average_height_alone_stays_at_origin(self, asset, bins):
        """The template is average, so the cheapest answer is no change at all."""
        result = solve_shape(
            asset, bins, ConstraintSet([Constraint("height", "average")])
        )
        assert result.satisfied
        assert np.allclose(result.beta.values, 0.0)

    def test_objective_trace_never_increases(self, asset, bins, lexicon):
        result, _, _ = solve_description(asset, bins, lexicon, REFERENCE_PROMPTS[2])
        trace = result.objective_trace
        assert len(trace) >= 1
        assert all(b <= a for a, b in zip(trace, trace[1:]))

    def test_more_regularization_never_grows_the_answer(self, asset, bins, lexicon):
        cs, _ = parse_description(lexicon, "Towering, muscular figure.")
        norms = []
        for lam in (0.0, 1e-3, 1e-1):
            result = solve_shape(asset, bins, cs, SolveConfig(regularization=lam))
            norms.append(float(np.linalg.norm(result.beta.values)))
        assert norms[1] <= norms[0] + 1e-12
        assert norms[2] <= norms[1] + 1e-12

    def test_beta_stays_inside_sampling_bounds(self, asset, bins, lexicon):
        for text in REFERENCE_PROMPTS[:3]:
            result, _, _ = solve_description(asset, bins, lexicon, text)
            assert np.max(np.abs(result.beta.values)) <= 3.0

    def test_contradictory_targets_return_best_effort(self, asset, bins):
        """arm length up, leg length down, yet their ratio down: impossible.

        The solver must come back with satisfied=False and a per-constraint
        report rather than raising.
        """
        cs = ConstraintSet(
            [
                Constraint("arm_length", "very_high"),
                Constraint("legs_length", "very_low"),
                Constraint("arms_relation", "very_low"),
            ]
        )
        result = solve_shape(asset, bins, cs, SolveConfig(max_iterations=30))
        assert not result.satisfied
        assert {r.measurement for r in result.report} == {
            "arm_length", "legs_length", "arms_relation"
        }

    def test_empty_constraints_rejected(self, asset, bins):
        with pytest.raises(InputError):
            solve_shape(asset, bins, ConstraintSet([]))

    def test_generate_then_invert_recovers_labels(self, asset, bins):
        """Labels measured from a random body, fed back as constraints,
        must be reproduced by the solved body."""
        geometric = MEASUREMENT_NAMES[:10]
        for beta_star in sample_shape_population(5, seed=77):
            target = assign_labels(
                bins, measure_all(asset, evaluate_mesh(asset, ShapeParams(beta_star)))
            )
            cs = ConstraintSet([Constraint(n, target[n]) for n in geometric])
            result = solve_shape(asset, bins, cs, SolveConfig(seed=11))
            got = assign_labels(
                bins, measure_all(asset, evaluate_mesh(asset, result.beta))
            )
            assert all(got[n] == target[n] for n in geometric)


class TestMeshToObj:
    def test_format(self, asset):
        mesh = evaluate_mesh(asset, ShapeParams.zeros())
        text = mesh_to_obj(mesh.vertices, mesh.faces)
        lines = text.splitlines()
        v_lines = [l for l in lines if l.startswith("v ")]
        f_lines = [l for l in lines if l.startswith("f ")]
        assert len(v_lines) == len(mesh.vertices)
        assert len(f_lines) == len(mesh.faces)
        parsed = np.array([float(part) for part in v_lines[0].split()[1:]])
        assert np.max(np.abs(parsed - mesh.vertices[0])) < 1e-6
        first_face = tuple(int(part) for part in f_lines[0].split()[1:])
        assert first_face == tuple(mesh.faces[0] + 1)  # OBJ indices are 1-based
