"""Omega-limit classification, period detection, transversal statistics,
ring domains, saddle connections."""

import math

import numpy as np
import pytest

from connexion import (ClassifyBudget, SpherePoint, build_connection,
                       box_dimension, classify, crossing_statistics,
                       detect_period, ring_domain_probe,
                       saddle_connection_search, trace, transversal_analysis)
from connexion import errors
from connexion.omega import (DirectionClass, TransversalSection,
                             exclusion_audit, random_connection,
                             section_crossings)

from conftest import single_pole


def cantor_points(depth: int) -> np.ndarray:
    """Endpoints of the middle-thirds construction after `depth` levels."""
    xs = [0.0, 1.0]
    for _ in range(depth):
        xs = [x / 3.0 for x in xs] + [2.0 / 3.0 + x / 3.0 for x in xs]
    return np.unique(np.asarray(xs))


class TestPeriodDetection:
    def test_circle_period(self, circle_conn):
        traj = trace(circle_conn, (1.0, 1j), 30.0)
        T = detect_period(traj)
        assert T is not None
        assert abs(T - 2 * math.pi) < 1e-6

    def test_straight_line_not_periodic(self, trivial_conn):
        traj = trace(trivial_conn, (0.0, 1.0), 30.0)
        assert detect_period(traj) is None


class TestClassify:
    def test_circle_is_periodic(self, circle_conn):
        v = classify(circle_conn, (1.0, 1j), ClassifyBudget(t_max=50.0))
        assert v.tag == "Periodic"
        assert abs(v.details["period"] - 2 * math.pi) < 1e-6

    def test_spiral_converges_to_infinity(self, circle_conn):
        v = classify(circle_conn, (1.0, 1.0 + 1.0j), ClassifyBudget(t_max=50.0))
        assert v.tag == "ConvergesToPole"
        assert "inf" in str(v)

    def test_inward_spiral_converges_to_zero(self, circle_conn):
        v = classify(circle_conn, (1.0, -1.0 + 1.0j), ClassifyBudget(t_max=50.0))
        assert v.tag == "ConvergesToPole"

    def test_critical_ray_converges_to_finite_pole(self):
        conn = single_pole(0.5)
        v = classify(conn, (1.0, -1.0), ClassifyBudget(t_max=10.0))
        assert v.tag == "ConvergesToPole"
        assert v.details["pole"] == SpherePoint.of(0.0)

    def test_flat_line_converges_to_infinity(self, trivial_conn):
        v = classify(trivial_conn, (0.0, 1.0), ClassifyBudget(t_max=100.0))
        assert v.tag == "ConvergesToPole"
        assert "inf" in str(v)


class TestDirectionClass:
    def test_same_orbit_matches_itself(self, circle_conn):
        a = trace(circle_conn, (1.0, 1j), 5.0)
        b = trace(circle_conn, (1j, -1.0), 5.0)   # same circle, other start
        assert DirectionClass.of(a).matches(DirectionClass.of(b))


class TestTransversalStatistics:
    def test_cantor_flags_and_dimension(self):
        xs = cantor_points(12)
        stats = crossing_statistics(xs)
        assert not stats["isolated_point"]
        assert not stats["dense_interval"]
        dim = box_dimension(xs)
        assert abs(dim - math.log(2) / math.log(3)) < 0.05

    def test_uniform_is_dense_with_dimension_one(self):
        rng = np.random.default_rng(7)
        xs = np.sort(rng.uniform(0.0, 1.0, 5000))
        stats = crossing_statistics(xs)
        assert stats["dense_interval"]
        assert abs(box_dimension(xs) - 1.0) < 0.05

    def test_isolated_cluster_flagged(self):
        xs = np.sort(np.concatenate([
            0.5 + 1e-7 * np.arange(50), [0.05], [0.95]]))
        stats = crossing_statistics(xs)
        assert stats["isolated_point"]

    def test_too_few_crossings_rejected(self, circle_conn):
        traj = trace(circle_conn, (1.0, 1j), 3.0)
        section = TransversalSection(2.0 + 0j, 3.0 + 0j)   # never crossed
        with pytest.raises(errors.TooFewCrossings):
            transversal_analysis(traj, section)

    def test_section_crossings_of_circle(self, circle_conn):
        # span just short of two periods: crossings at t = 0 and t = 2*pi
        traj = trace(circle_conn, (1.0, 1j), 4 * math.pi - 0.1)
        section = TransversalSection(0.5 + 0j, 1.5 + 0j)
        hits = section_crossings(traj, section)
        assert len(hits) == 2
        # both crossings at radius 1: parameter 0.5 along the section
        assert all(abs(h - 0.5) < 1e-3 for h in hits)


class TestRingDomain:
    def test_circle_family(self, circle_conn):
        seed = trace(circle_conn, (1.0, 1j), 30.0)
        rep = ring_domain_probe(circle_conn, seed)
        assert rep.n_leaves >= 5
        # every leaf of the |z| = const family has length 2*pi
        assert max(abs(l - 2 * math.pi) for l in rep.leaf_lengths) < 1e-6
        # width between extreme radii is log(r2/r1) in the 1/|z| metric
        radii = [abs(p) for p in rep.leaf_points]
        expect = math.log(max(radii) / min(radii))
        assert abs(rep.width - expect) < 1e-6

    def test_non_periodic_seed_rejected(self, circle_conn):
        seed = trace(circle_conn, (1.0, 1.0 + 1.0j), 10.0)
        with pytest.raises(errors.SeedNotPeriodic):
            ring_domain_probe(circle_conn, seed)


class TestSaddleConnections:
    def test_real_segment_pair(self):
        conn = build_connection([(SpherePoint.of(-1.0), 0.5),
                                 (SpherePoint.of(1.0), 0.5)])
        sads = saddle_connection_search(conn, n_grid=8, t_max=20.0)
        ends = {(s.start_pole.z, s.end_pole.z) for s in sads
                if not s.end_pole.infinite}
        assert (-1 + 0j, 1 + 0j) in ends
        assert (1 + 0j, -1 + 0j) in ends
        seg = next(s for s in sads if s.start_pole.z == -1)
        # metric length of [-1, 1] under |z-1|^{1/2}|z+1|^{1/2}|dz| is pi/2
        assert abs(seg.length - math.pi / 2.0) < 1e-3


class TestExclusionAudit:
    def test_small_audit_shape(self):
        rep = exclusion_audit(n_configs=5, seed=3)
        assert len(rep["lines"]) == 6
        assert rep["anomalies"] == []
        assert sum(rep["counts"].values()) == 5
        assert rep["text"].endswith("\n")

    def test_random_connection_valid(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            conn = random_connection(rng)
            assert abs(sum(p.residue for p in conn.poles) + 2.0) < 1e-12
