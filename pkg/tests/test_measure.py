import numpy as np
import pytest

from bodyforge.bodymodel import BodyMesh, ShapeParams, evaluate_mesh
from bodyforge.errors import IncompleteAssetError
from bodyforge.measure import (
    DENSITY,
    MEASUREMENT_NAMES,
    MeasurementVector,
    landmark_length,
    measure_all,
    measure_many,
    mesh_volume,
    quantize6,
    report_dict,
    ring_perimeter,
)
from oracles import column_parity_volume

# Unit cube [0,1]^3 triangulated with outward-facing windings.
CUBE_VERTICES = np.array(
    [
        [0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0],
        [0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1],
    ],
    dtype=np.float64,
)
CUBE_FACES = np.array(
    [
        [0, 3, 2], [0, 2, 1],  # z = 0
        [4, 5, 6], [4, 6, 7],  # z = 1
        [0, 1, 5], [0, 5, 4],  # y = 0
        [3, 7, 6], [3, 6, 2],  # y = 1
        [0, 4, 7], [0, 7, 3],  # x = 0
        [1, 2, 6], [1, 6, 5],  # x = 1
    ]
)

TETRA_FACES = np.array([[0, 2, 1], [0, 1, 3], [1, 2, 3], [0, 3, 2]])


def cube_mesh(scale: float = 1.0, offset=(0.0, 0.0, 0.0)) -> BodyMesh:
    return BodyMesh(vertices=CUBE_VERTICES * scale + np.asarray(offset), faces=CUBE_FACES)


class TestMeshVolume:
    def test_unit_cube(self):
        assert abs(mesh_volume(cube_mesh()) - 1.0) < 1e-12

    def test_cube_scales_cubically(self):
        for s in (0.5, 2.0, 3.7):
            assert abs(mesh_volume(cube_mesh(scale=s)) - s**3) < 1e-9 * s**3

    def test_translation_invariance(self):
        # a closed surface's volume cannot depend on where it sits
        assert abs(mesh_volume(cube_mesh(offset=(13.0, -7.5, 2.25))) - 1.0) < 1e-9

    def test_tetrahedron_matches_determinant(self):
        rng = np.random.Generator(np.random.PCG64(3))
        for _ in range(5):
            o = rng.uniform(-1, 1, 3)
            edges = rng.uniform(-1, 1, (3, 3))
            expected = float(np.linalg.det(edges)) / 6.0
            if expected < 0:  # flip one edge pair to keep the winding outward
                edges[[0, 1]] = edges[[1, 0]]
                expected = -expected
            verts = np.vstack([o, o + edges])
            got = mesh_volume(BodyMesh(vertices=verts, faces=TETRA_FACES))
            assert abs(got - expected) < 1e-9

    def test_template_volume_is_human_scale(self, asset):
        vol = mesh_volume(evaluate_mesh(asset, ShapeParams.zeros()))
        assert 0.04 < vol < 0.12

    def test_column_oracle_agrees_on_cube(self):
        # keeps the independent test oracle itself honest
        est = column_parity_volume(CUBE_VERTICES, CUBE_FACES, pitch=0.02)
        assert abs(est - 1.0) < 0.01


class TestMeasureAll:
    def test_canonical_order_and_names(self, asset):
        mv = measure_all(asset, evaluate_mesh(asset, ShapeParams.zeros()))
        assert list(mv.as_dict()) == list(MEASUREMENT_NAMES)

    def test_template_goldens(self, asset):
        """Regression pin: the shipped template's key measurements."""
        mv = measure_all(asset, evaluate_mesh(asset, ShapeParams.zeros()))
        rep = report_dict(mv)
        assert rep["height"] == 1.68436
        assert rep["volume"] == 0.0631953

    def test_all_positive_on_template(self, asset):
        mv = measure_all(asset, evaluate_mesh(asset, ShapeParams.zeros()))
        assert np.all(mv.as_array() > 0)

    def test_bmi_and_ratio_identities(self, asset):
        mv = measure_all(asset, evaluate_mesh(asset, ShapeParams([0.5] * 10)))
        assert mv.bmi == pytest.approx(mv.volume * DENSITY / mv.height**2, rel=1e-14)
        assert mv.arms_relation == pytest.approx(mv.arm_length / mv.height, rel=1e-14)
        assert mv.shoulders_relation == pytest.approx(
            mv.shoulder_breadth / mv.height, rel=1e-14
        )

    def test_height_is_crown_above_higher_heel(self, asset):
        mesh = evaluate_mesh(asset, ShapeParams.zeros())
        crown_y = mesh.vertices[asset.landmarks["crown"], 1]
        heel_y = max(
            mesh.vertices[asset.landmarks["heel_left"], 1],
            mesh.vertices[asset.landmarks["heel_right"], 1],
        )
        mv = measure_all(asset, mesh)
        assert mv.height == pytest.approx(crown_y - heel_y, rel=1e-14)

    def test_rejects_vertex_count_mismatch(self, asset):
        with pytest.raises(IncompleteAssetError):
            measure_all(asset, cube_mesh())

    def test_scaling_laws_quick(self, asset):
        """Lengths scale linearly, volume cubically, ratios not at all."""
        lengths = (
            "height", "neck_length", "arm_length", "legs_length",
            "shoulder_breadth", "waist_thickness", "hip_thickness",
            "leg_thickness", "bmi",
        )
        ratios = ("arms_relation", "shoulders_relation")
        mesh = evaluate_mesh(asset, ShapeParams([0.3] * 10))
        base = measure_all(asset, mesh).as_dict()
        for s in (0.5, 1.7):
            scaled = measure_all(
                asset, BodyMesh(vertices=mesh.vertices * s, faces=mesh.faces)
            ).as_dict()
            for name in lengths:
                assert scaled[name] == pytest.approx(base[name] * s, rel=1e-9)
            for name in ratios:
                assert scaled[name] == pytest.approx(base[name], rel=1e-9)
            assert scaled["volume"] == pytest.approx(base["volume"] * s**3, rel=1e-9)


class TestMeasureMany:
    def test_matches_measure_all(self, asset):
        rng = np.random.Generator(np.random.PCG64(11))
        betas = rng.uniform(-3, 3, (6, 10))
        rows = measure_many(asset, betas)
        for row, beta in zip(rows, betas):
            mv = measure_all(asset, evaluate_mesh(asset, ShapeParams(beta)))
            assert np.allclose(row, mv.as_array(), rtol=1e-9, atol=0)

    def test_polynomial_volume_matches_direct_sum(self, asset):
        rng = np.random.Generator(np.random.PCG64(12))
        betas = rng.uniform(-3, 3, (6, 10))
        vols = measure_many(asset, betas)[:, MEASUREMENT_NAMES.index("volume")]
        for vol, beta in zip(vols, betas):
            direct = mesh_volume(evaluate_mesh(asset, ShapeParams(beta)))
            assert vol == pytest.approx(direct, rel=1e-9)

    def test_chunking_does_not_change_results(self, asset):
        # last-ulp wiggle only: batch shape steers the BLAS kernel
        rng = np.random.Generator(np.random.PCG64(13))
        betas = rng.uniform(-3, 3, (7, 10))
        np.testing.assert_allclose(
            measure_many(asset, betas, chunk=3),
            measure_many(asset, betas, chunk=1024),
            rtol=1e-12,
        )


class TestSiteMeasures:
    def test_ring_perimeter_matches_polyline_sum(self, asset):
        mesh = evaluate_mesh(asset, ShapeParams.zeros())
        ring = asset.rings["waist"]
        pts = mesh.vertices[ring]
        closed = np.vstack([pts, pts[:1]])
        manual = float(np.linalg.norm(np.diff(closed, axis=0), axis=1).sum())
        assert ring_perimeter(mesh, ring) == pytest.approx(manual, rel=1e-12)

    def test_landmark_length_is_symmetric(self, asset):
        mesh = evaluate_mesh(asset, ShapeParams.zeros())
        d1 = landmark_length(asset, mesh, "crotch", "heel_left")
        d2 = landmark_length(asset, mesh, "heel_left", "crotch")
        assert d1 == d2 > 0


class TestMeasurementVector:
    def test_array_round_trip(self):
        values = np.arange(12, dtype=np.float64) + 0.5
        mv = MeasurementVector.from_array(values)
        assert np.array_equal(mv.as_array(), values)

    def test_from_array_rejects_wrong_length(self):
        with pytest.raises(ValueError):
            MeasurementVector.from_array(np.zeros(11))

    def test_report_dict_rounds_to_six_significant_digits(self, asset):
        mv = measure_all(asset, evaluate_mesh(asset, ShapeParams.zeros()))
        rep = report_dict(mv)
        for name, value in rep.items():
            assert value == quantize6(getattr(mv, name))
        assert quantize6(0.123456789) == 0.123457
