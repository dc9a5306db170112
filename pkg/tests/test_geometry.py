import math

import numpy as np
import pytest

from mhkernel.geometry import (
    Euclidean,
    Sphere,
    SpherePoint,
    TangentVector,
    antipodal_direction,
    euclidean_distance,
    exp_map,
    geodesic_distance,
    log_map,
    sphere_angle,
)


def random_point(gen, ambient):
    return SpherePoint(gen.standard_normal(ambient) / 1.0 + 0.0)


def seeded_points(seed, n, ambient):
    gen = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    raw = gen.standard_normal((n, ambient))
    raw /= np.linalg.norm(raw, axis=1, keepdims=True)
    return [SpherePoint(row) for row in raw]


class TestSpherePoint:
    def test_normalizes_within_window(self):
        p = SpherePoint([0.0, 0.0, 1.0 + 5e-7])
        assert abs(np.linalg.norm(p.coords) - 1.0) <= 1e-12

    def test_rejects_far_from_unit(self):
        with pytest.raises(ValueError):
            SpherePoint([0.0, 0.0, 1.01])
        with pytest.raises(ValueError):
            SpherePoint([3.0, 4.0, 0.0])

    def test_rejects_low_dimension_and_nonfinite(self):
        with pytest.raises(ValueError):
            SpherePoint([1.0])
        with pytest.raises(ValueError):
            SpherePoint([np.nan, 0.0, 0.0])

    def test_dim(self):
        assert SpherePoint([0, 0, 1.0]).dim == 2
        assert SpherePoint([1.0, 0, 0, 0, 0]).dim == 4

    def test_coords_read_only(self):
        p = SpherePoint([0, 0, 1.0])
        with pytest.raises(ValueError):
            p.coords[0] = 5.0


class TestTangentVector:
    def test_tangency_enforced(self):
        x = SpherePoint([0, 0, 1.0])
        TangentVector(x, [1.0, 2.0, 0.0])
        with pytest.raises(ValueError):
            TangentVector(x, [0.0, 0.0, 1e-6])

    def test_norm(self):
        x = SpherePoint([0, 0, 1.0])
        assert TangentVector(x, [3.0, 4.0, 0.0]).norm == 5.0


class TestGeodesicDistance:
    def test_identity_is_zero(self):
        x = SpherePoint([0.6, 0.0, 0.8])
        assert geodesic_distance(x, x) == 0.0

    def test_antipodal_is_pi(self):
        x = SpherePoint([0.6, 0.0, 0.8])
        assert geodesic_distance(x, x.antipode()) == math.pi

    def test_orthogonal_unit_vectors(self):
        e1 = SpherePoint([1.0, 0.0, 0.0])
        e2 = SpherePoint([0.0, 1.0, 0.0])
        assert geodesic_distance(e1, e2) == pytest.approx(math.pi / 2, abs=1e-15)

    def test_matches_arccos_formula_at_generic_angles(self):
        for x, z in zip(seeded_points(5, 50, 4), seeded_points(6, 50, 4)):
            expected = math.acos(float(np.clip(x.coords @ z.coords, -1, 1)))
            assert geodesic_distance(x, z) == pytest.approx(expected, abs=1e-12)

    def test_symmetry_exact(self):
        for x, z in zip(seeded_points(7, 200, 3), seeded_points(8, 200, 3)):
            assert geodesic_distance(x, z) == geodesic_distance(z, x)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            geodesic_distance(SpherePoint([0, 0, 1.0]), SpherePoint([0, 0, 0, 1.0]))

    def test_triangle_inequality(self):
        xs = seeded_points(9, 1000, 3)
        zs = seeded_points(10, 1000, 3)
        ws = seeded_points(11, 1000, 3)
        for x, z, w in zip(xs, zs, ws):
            assert geodesic_distance(x, z) <= (
                geodesic_distance(x, w) + geodesic_distance(w, z) + 1e-10
            )


class TestExpMap:
    def test_zero_vector_returns_base(self):
        x = SpherePoint([0, 0, 1.0])
        assert np.array_equal(exp_map(x, TangentVector(x, [0.0, 0.0, 0.0])).coords, x.coords)

    def test_quarter_great_circle(self):
        x = SpherePoint([0, 0, 1.0])
        out = exp_map(x, TangentVector(x, [math.pi / 2, 0.0, 0.0]))
        assert np.allclose(out.coords, [1.0, 0.0, 0.0], atol=1e-15)

    def test_half_great_circle_reaches_antipode(self):
        x = SpherePoint([0, 0, 1.0])
        out = exp_map(x, TangentVector(x, [math.pi, 0.0, 0.0]))
        assert np.allclose(out.coords, [0.0, 0.0, -1.0], atol=1e-15)

    def test_base_mismatch_rejected(self):
        x = SpherePoint([0, 0, 1.0])
        other = SpherePoint([1.0, 0, 0])
        v = TangentVector(other, [0.0, 1.0, 0.0])
        with pytest.raises(ValueError):
            exp_map(x, v)

    def test_norm_preserved(self):
        gen = np.random.Generator(np.random.Philox(np.random.SeedSequence(12)))
        for x in seeded_points(13, 200, 3):
            raw = gen.standard_normal(3)
            raw -= (raw @ x.coords) * x.coords
            scale = gen.random() * math.pi / max(np.linalg.norm(raw), 1e-12)
            out = exp_map(x, TangentVector(x, raw * scale))
            assert abs(np.linalg.norm(out.coords) - 1.0) <= 1e-12


class TestLogMap:
    def test_identity_gives_zero_vector(self):
        x = SpherePoint([0.6, 0.0, 0.8])
        assert log_map(x, x).norm == 0.0

    def test_quarter_circle_inverse(self):
        x = SpherePoint([0, 0, 1.0])
        v = log_map(x, SpherePoint([1.0, 0, 0]))
        assert np.allclose(v.vec, [math.pi / 2, 0.0, 0.0], atol=1e-15)

    @pytest.mark.parametrize("ambient", [3, 5])
    def test_roundtrip_and_distance_over_seeded_pairs(self, ambient):
        xs = seeded_points(20 + ambient, 1000, ambient)
        zs = seeded_points(40 + ambient, 1000, ambient)
        for x, z in zip(xs, zs):
            v = log_map(x, z)
            back = exp_map(x, v)
            assert np.linalg.norm(back.coords - z.coords) <= 1e-10
            assert abs(v.norm - geodesic_distance(x, z)) <= 1e-12

    @pytest.mark.parametrize("ambient", [3, 5])
    def test_antipodal_branch(self, ambient):
        # Nothing here depends on which tangent direction the antipodal
        # rule picks, only on its norm and the right-inverse property.
        for x in seeded_points(60 + ambient, 100, ambient):
            xi = x.antipode()
            v = log_map(x, xi)
            assert abs(v.norm - math.pi) <= 1e-12
            assert abs(float(v.vec @ x.coords)) <= 1e-10
            back = exp_map(x, v)
            assert np.linalg.norm(back.coords - xi.coords) <= 1e-10

    def test_nearly_antipodal_uses_cut_locus_branch(self):
        x = SpherePoint([0, 0, 1.0])
        xi = SpherePoint([1e-12, 0.0, -1.0])
        v = log_map(x, xi)
        assert abs(v.norm - math.pi) <= 1e-9


class TestAntipodalDirection:
    def test_unit_tangent(self):
        for x in seeded_points(77, 100, 4):
            u = antipodal_direction(x)
            assert abs(u.norm - 1.0) <= 1e-12
            assert abs(float(u.vec @ x.coords)) <= 1e-10

    def test_deterministic(self):
        x = SpherePoint([0.5, -0.5, 0.5, 0.5])
        assert np.array_equal(antipodal_direction(x).vec, antipodal_direction(x).vec)


class TestEuclideanDistance:
    def test_identity(self):
        assert euclidean_distance([1.0, 2.0], [1.0, 2.0]) == 0.0

    def test_three_four_five(self):
        assert euclidean_distance([0.0, 0.0], [3.0, 4.0]) == 5.0

    def test_matches_componentwise_formula(self):
        gen = np.random.Generator(np.random.Philox(np.random.SeedSequence(99)))
        for _ in range(100):
            x = gen.standard_normal(6)
            z = gen.standard_normal(6)
            expected = math.sqrt(math.fsum((a - b) ** 2 for a, b in zip(x, z)))
            assert euclidean_distance(x, z) == pytest.approx(expected, rel=1e-14)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            euclidean_distance([1.0], [1.0, 2.0])


class TestManifolds:
    def test_sphere_validates_and_normalizes(self):
        sphere = Sphere(2)
        pts = sphere.validate_points([[0.0, 0.0, 1.0 + 1e-7], [1.0, 0.0, 0.0]])
        assert np.allclose(np.linalg.norm(pts, axis=1), 1.0, atol=1e-15)
        with pytest.raises(ValueError):
            sphere.validate_points([[0.0, 0.0, 2.0]])
        with pytest.raises(ValueError):
            sphere.validate_points([[0.0, 1.0]])

    def test_sphere_distances_match_scalar(self):
        sphere = Sphere(2)
        pts = np.array([[1.0, 0, 0], [0, 1.0, 0], [0, 0, 1.0]])
        query = np.array([0.0, 0.0, 1.0])
        d = sphere.distances(query, pts)
        assert d == pytest.approx([math.pi / 2, math.pi / 2, 0.0], abs=1e-15)
        assert sphere.distance(query, pts[0]) == sphere_angle(query, pts[0])

    def test_euclidean_distances(self):
        euclid = Euclidean(2)
        d = euclid.distances(np.zeros(2), np.array([[3.0, 4.0], [0.0, 1.0]]))
        assert d == pytest.approx([5.0, 1.0], abs=0)
        with pytest.raises(ValueError):
            euclid.validate_points([[1.0, 2.0, 3.0]])
