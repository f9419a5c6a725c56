"""Geodesic polygons and angle--residue identities."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from connexion import (GeodesicPolygon, PartTopology, PolygonVertex,
                       SpherePoint, adapted_chart, build_connection,
                       chart_polygon, check_chart_polygon,
                       check_general_formula, check_p1_formula, trace)
from connexion.polygons import (connect_unique, measure_internal_angle,
                                side_from_points, side_from_trajectory)

from conftest import single_pole


class TestSidesAndJunctions:
    def test_regular_junction_must_be_tight(self):
        a = side_from_points([0j, 1.0 + 0j])
        b = side_from_points([1.0 + 1e-3j, 1j])  # 1e-3 gap: too loose
        with pytest.raises(ValueError):
            GeodesicPolygon([a, b], [PolygonVertex(SpherePoint.of(0j)),
                                     PolygonVertex(SpherePoint.of(1.0))])

    def test_pole_junction_may_gap(self):
        # sides incident to a pole vertex stop at the approach floor
        a = side_from_points([0.1 + 0j, 1.0 + 0j])
        b = side_from_points([1.0 + 0j, 0.05j])
        poly = GeodesicPolygon(
            [a, b], [PolygonVertex(SpherePoint.of(0j), "pole", 0.5),
                     PolygonVertex(SpherePoint.of(1.0))])
        assert len(poly.sides) == 2

    def test_straight_through_regular_vertex_is_pi(self):
        a = side_from_points([0j, 1.0 + 0j])
        b = side_from_points([1.0 + 0j, 2.0 + 0j])
        v = measure_internal_angle(a, b, PolygonVertex(SpherePoint.of(1.0)))
        assert v == pytest.approx(math.pi, abs=1e-12)

    def test_right_turn_is_half_pi(self):
        # positively oriented corner: interior on the left
        a = side_from_points([0j, 1.0 + 0j])
        b = side_from_points([1.0 + 0j, 1.0 + 1.0j])
        v = measure_internal_angle(a, b, PolygonVertex(SpherePoint.of(1.0)))
        assert v == pytest.approx(math.pi / 2.0, abs=1e-12)


class TestChartPolygonIdentity:
    @given(st.floats(min_value=-0.5, max_value=3.0),
           st.floats(min_value=0.3, max_value=5.8),
           st.integers(min_value=0, max_value=10_000))
    @settings(max_examples=60, deadline=None)
    def test_identity_residual_small(self, rho, v0, seed):
        v0 = min(v0, 1.8 * math.pi / (rho + 1.0))
        if not 0.2 <= v0 < 2 * math.pi:
            return
        rng = np.random.default_rng(seed)
        m = max(3, int(v0 * (rho + 1.0) / 2.5) + 2)
        poly = chart_polygon(rho, v0, rng.uniform(0.7, 1.3, 3 * m))
        assert check_chart_polygon(rho, poly) <= 1e-6

    def test_vertex_count_and_pole_angle(self):
        poly = chart_polygon(0.5, 1.0, [1.0, 0.9, 1.1])
        assert poly.vertices[0].kind == "pole"
        angles = poly.angles()
        assert angles[0] == pytest.approx(1.0, abs=1e-9)


class TestGeneralFormula:
    def test_disc_no_enclosed_residues(self):
        # one free boundary, genus 0: sum (pi - (rho_j+1) v_j) = 2 pi
        vertices = [(0.0, math.pi / 2.0)] * 4   # Euclidean square
        res = check_general_formula(PartTopology(m_f=1), vertices)
        assert res < 1e-12

    def test_enclosed_residue_shifts_rhs(self):
        vertices = [(0.0, math.pi / 2.0)] * 4
        topo = PartTopology(m_f=1, enclosed_residues=(-0.5,))
        assert check_general_formula(topo, vertices) == \
            pytest.approx(math.pi, abs=1e-12)

    def test_invalid_topology_rejected(self):
        with pytest.raises(ValueError):
            PartTopology(m_f=0)


class TestSphereIdentity:
    def test_unit_circle_around_residue_minus_one(self, circle_conn):
        traj = trace(circle_conn, (1.0, 1j), 2 * math.pi)
        poly = GeodesicPolygon([side_from_trajectory(traj)],
                               [PolygonVertex(SpherePoint.of(1.0))])
        assert check_p1_formula(circle_conn, poly) <= 1e-9

    def test_explicit_enclosed_list_matches_winding(self, circle_conn):
        traj = trace(circle_conn, (1.0, 1j), 2 * math.pi)
        poly = GeodesicPolygon([side_from_trajectory(traj)],
                               [PolygonVertex(SpherePoint.of(1.0))])
        auto = check_p1_formula(circle_conn, poly)
        manual = check_p1_formula(circle_conn, poly,
                                  enclosed=[SpherePoint.of(0.0)])
        assert auto == pytest.approx(manual, abs=1e-12)


class TestConnectUnique:
    def test_straight_segment_in_flat_plane(self, trivial_conn):
        traj = connect_unique(trivial_conn, 0.0, 2.0 + 1.0j)
        assert abs(traj.samples[-1].z_std - (2.0 + 1.0j)) < 1e-6
        # the arc is a straight segment
        for s in traj.samples:
            assert abs(s.z_std.imag * 2.0 - s.z_std.real * 1.0) < 1e-6

    def test_arc_in_curved_metric(self):
        conn = single_pole(0.5)
        traj = connect_unique(conn, 1.0, 1j)
        assert abs(traj.samples[-1].z_std - 1j) < 1e-6

    def test_identical_endpoints_rejected(self, trivial_conn):
        with pytest.raises(ValueError):
            connect_unique(trivial_conn, 1.0, 1.0)

    def test_uniqueness_audit(self):
        # two independent searches return the same arc (Hausdorff <= 1e-6)
        conn = single_pole(0.5)
        a = connect_unique(conn, 1.0, 1j, n_grid=72)
        b = connect_unique(conn, 1.0, 1j, n_grid=97)
        # compare on the interpolants at matched times, so neither sample
        # spacing nor chord sagitta contributes to the measured distance
        t_end = min(a.samples[-1].t, b.samples[-1].t)
        worst = max(abs(a.interpolate(t)[0] - b.interpolate(t)[0])
                    for t in np.linspace(0.0, t_end, 2000))
        worst = max(worst,
                    abs(a.samples[-1].z_std - b.samples[-1].z_std))
        assert worst <= 1e-6
