"""SVG rendering: deterministic formatting and scene structure."""

import math

from connexion import RenderWindow, render_scene, trace
from connexion.svg import SvgBuilder, _f


class TestFormatter:
    def test_six_decimals(self):
        assert _f(1.0) == "1.000000"
        assert _f(0.1234567) == "0.123457"

    def test_negative_zero_normalized(self):
        assert _f(-0.0) == "0.000000"
        assert _f(-1e-9) == "0.000000"


class TestBuilder:
    def test_window_mapping(self):
        w = RenderWindow(center=0j, half_width=2.0, size=400)
        assert w.to_px(0j) == (200.0, 200.0)
        assert w.to_px(2.0 + 0j) == (400.0, 200.0)
        assert w.to_px(2.0j) == (200.0, 0.0)   # image y runs downward

    def test_offscreen_points_split_polyline(self):
        w = RenderWindow(half_width=1.0, size=100)
        svg = SvgBuilder(w)
        svg.polyline([0j, 0.5, 50.0, 0.5j, 0.6j], "#000000")
        polys = [e for e in svg.elements if e.startswith("<polyline")]
        assert len(polys) == 2


class TestScene:
    def test_document_structure(self, circle_conn):
        traj = trace(circle_conn, (1.0, 1j), 2 * math.pi)
        doc = render_scene(circle_conn, [traj])
        assert doc.startswith("<svg")
        assert doc.rstrip().endswith("</svg>")
        assert "<polyline" in doc
        assert "w = 1/z" in doc            # infinity inset panel
        assert doc.count("ρ=-1") == 2      # finite pole and inset label

    def test_rerender_identical(self, circle_conn):
        traj = trace(circle_conn, (1.0, 1j), 2 * math.pi)
        assert render_scene(circle_conn, [traj]) == \
            render_scene(circle_conn, [traj])
