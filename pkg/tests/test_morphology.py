import math

import numpy as np
import pytest
import shapely
from shapely.geometry import Point, Polygon

from anisoflow.anisotropy import Anisotropy
from anisoflow.curve import CrystalCurve, build_frames, circle, hausdorff_distance, polygon_curve
from anisoflow.morphology import (
    ConvexBody,
    MorphologyError,
    approximate_curve,
    as_region,
    closing,
    dilate,
    erode,
    graph_cover,
    opening,
    region_curve,
)

from . import oracles
from .morph_corpus import raster_agreement, rings

SQ4 = Polygon([(-2, -2), (2, -2), (2, 2), (-2, 2)])
SQ = np.array([[1.0, -1.0], [1.0, 1.0], [-1.0, 1.0], [-1.0, -1.0]])


def square_poly(side):
    h = side / 2
    return Polygon([(-h, -h), (h, -h), (h, h), (-h, h)])


def test_convex_body_validation():
    with pytest.raises(MorphologyError):
        ConvexBody([[0, 0], [1, 1], [2, 2]])
    with pytest.raises(MorphologyError):
        ConvexBody([[1, 1], [2, 1], [2, 2], [1, 2]])  # origin outside


def test_erode_square_by_square_and_disk():
    assert shapely.equals_exact(shapely.normalize(erode(SQ4, ConvexBody.square(1.0))),
                                shapely.normalize(square_poly(2)), tolerance=1e-12)
    e = erode(SQ4, ConvexBody.disk(1.0, 512))
    assert shapely.hausdorff_distance(e, square_poly(2)) < 1e-12


def test_erode_dumbbell_components_match_oracle():
    # two unit squares joined by a bridge thinner than the body
    D = Polygon([(0, 0), (1, 0), (1, 0.3), (2, 0.3), (2, 0), (3, 0), (3, 1), (2, 1), (2, 0.7),
                 (1, 0.7), (1, 1), (0, 1)])
    e = erode(D, ConvexBody.disk(0.25, 512))
    assert len(shapely.get_parts(e)) == 2
    bad, lonely = raster_agreement(e, lambda q: oracles.erosion_member(q, rings(D), ("disk", 0.25)),
                                   (-0.5, -0.5, 3.5, 1.5))
    assert bad == 0 and lonely == 0


def test_dilate_point_and_steiner():
    b = ConvexBody.regular_polygon(6, 0.5)
    d = dilate(Point(1.0, 2.0), b)
    assert shapely.hausdorff_distance(d, shapely.affinity.translate(b.polygon, 1, 2)) < 1e-12
    r = 0.3
    d = dilate(square_poly(2), ConvexBody.disk(r, 4096))
    assert d.area == pytest.approx(4 + 8 * r + math.pi * r * r, rel=1e-5)


def test_erode_dilate_round_trip_of_sum():
    b = ConvexBody.regular_polygon(6, 0.4)
    c = Polygon([(0, 0), (2, 0), (2.5, 1), (0.5, 1.5)])
    region = dilate(c, b)
    back = dilate(erode(region, b), b)
    assert shapely.hausdorff_distance(back, region) < 1e-9


def test_opening_examples():
    same = opening(SQ4, ConvexBody.square(1.0))
    assert shapely.hausdorff_distance(same, SQ4) < 1e-12
    o = opening(SQ4, ConvexBody.disk(1.0, 1024))
    assert o.area == pytest.approx(16 - (4 - math.pi), rel=1e-4)
    # corner deficit of a unit-radius rounding
    assert shapely.hausdorff_distance(o, SQ4) == pytest.approx(math.sqrt(2) - 1, abs=1e-4)


def test_opening_of_a_corner_is_tangent_arc():
    # subgraph of |x| clipped to a box: the arc of radius r touches both legs
    r = 0.3
    region = Polygon([(-2, 2), (0, 0), (2, 2)])
    o = opening(region, ConvexBody.disk(r, 2048))
    apex = o.exterior.coords
    y_min = min(y for _, y in apex)
    # the disk inscribed in the 90-degree wedge sits at height r sqrt 2
    assert y_min == pytest.approx(r * math.sqrt(2) - r, abs=1e-4)


def test_opening_idempotent_antiextensive_monotone():
    b = ConvexBody.disk(0.3, 256)
    x = Polygon([(0, 0), (3, 0), (3, 1), (1, 1), (1, 3), (0, 3)])
    y = x.union(Polygon([(2, 1), (3, 1), (3, 2), (2, 2)]))
    o = opening(x, b)
    assert shapely.hausdorff_distance(opening(o, b), o) < 1e-9
    assert o.difference(x).area < 1e-12
    assert o.difference(opening(y, b)).area < 1e-9


def test_closing_is_extensive():
    x = Polygon([(0, 0), (3, 0), (3, 1), (1, 1), (1, 3), (0, 3)])
    c = closing(x, ConvexBody.square(0.2))
    assert x.difference(c).area < 1e-12


def test_oracle_detects_a_wrong_body():
    # sanity check of the test oracle itself: a slightly larger body disagrees
    P = Polygon([(0, 0), (3, 0), (1, 2.5)])
    wrong = erode(P, ConvexBody.disk(0.33, 512))
    bad, lonely = raster_agreement(wrong, lambda q: oracles.erosion_member(q, rings(P), ("disk", 0.3)),
                                   (-0.5, -0.5, 3.5, 3.0))
    assert bad > 0 or lonely > 0


def test_region_io():
    r = as_region(SQ)
    assert r.area == pytest.approx(4.0)
    v = region_curve(r)
    assert shapely.Polygon(v).exterior.is_ccw
    with pytest.raises(MorphologyError):
        region_curve(as_region(SQ).union(as_region(SQ + 5)))


# -- graph cover ------------------------------------------------------------


def test_graph_cover_circle():
    pieces = graph_cover(circle(256), max_slope=2.0)
    assert len(pieces) >= 4
    for p, q in zip(pieces, pieces[1:] + pieces[:1]):
        # the witness of each overlap lies in the next piece
        assert (p.witness - q.start) % 256 <= (q.stop - q.start) % 256


def test_graph_cover_square_keeps_flat_edges_whole():
    c = polygon_curve(SQ, 64)
    pieces = graph_cover(c)
    k = build_frames(c).kappa
    for p in pieces:
        # piece ends are never interior samples of a straight run
        for e in (p.start, p.stop):
            assert abs(k[e]) > 1e-9 or abs(k[(e - 1) % c.n]) > 1e-9 or abs(k[(e + 1) % c.n]) > 1e-9


# -- two-sided smoothing -----------------------------------------------------


@pytest.fixture(scope="module")
def square_report():
    a = Anisotropy.square()
    sq = CrystalCurve.from_vertices(SQ, a.wulff)
    return approximate_curve(sq, a, 0.1, r_factor=0.9)


def test_approximate_square(square_report):
    rep = square_report
    assert rep.rw is not None and rep.rw.passed
    assert rep.max_kappa_phi <= rep.c_prime * (1 + 1e-2)
    assert rep.c_prime == pytest.approx(1 / rep.radius)
    assert 0 < rep.hausdorff_in_out < 0.2
    d = rep.to_dict()
    assert set(d) >= {"curve_out", "c_prime", "hausdorff_in_out"}


def test_approximate_smooth_input_is_nearly_unchanged():
    a = Anisotropy.euclidean()
    c = circle(512, 1.0)
    rep = approximate_curve(c, a, 0.1, r_factor=0.9)
    assert hausdorff_distance(rep.curve_out, c) < 1e-3
