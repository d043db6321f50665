import itertools
import math

import numpy as np
import pytest

from helpers import within
from polyfield.correlations import (
    DegenerateCollection,
    LineWindow,
    ProbeCollection,
    brute_force_count,
    build_precedence_graph,
    configuration_weight,
    count_configs,
    crossing_counts,
    decay_profile,
    directional_first_order,
    directional_second_order,
    estimate_directional_measure,
    estimate_edge_correlation,
    estimate_label_correlation,
    find_cycle,
    incremental_config,
    is_acyclic,
    label_correlation_target,
    palm_edge_correlation,
    pinwheel,
    random_probe_collection,
    stacked_template,
)
from polyfield.dynrep import sample_field_dynrep
from polyfield.geometry import PolygonalConfig, Polygon, unit_square
from polyfield.linespace import Homogeneous, Line, RectangularStandard, sample_poisson_lines
from polyfield.rng import Stream, make_generator

R = RectangularStandard()
H = Homogeneous(1.0)


def P(p, d):
    return (Line.through(p, d), p)


def _square(c, h):
    return [(c[0] - h, c[1] - h), (c[0] + h, c[1] - h), (c[0] + h, c[1] + h), (c[0] - h, c[1] + h)]


@pytest.fixture(scope="module")
def rect_samples():
    st = Stream(make_generator(2024))
    return [sample_field_dynrep(R, unit_square(), st) for _ in range(20000)]


# -- precedence graphs and configuration counts ---------------------------------------


def test_single_probe_graph_has_two_empty_rays():
    g = build_precedence_graph([P((0.2, 0.3), (1, 0.4))])
    assert g.nodes == [("x", 0)]
    assert g.rays[0] == ([], [])
    assert is_acyclic(g)
    assert count_configs(g.coll) == 1
    assert brute_force_count(g.coll) == 1


def test_crossing_pair_node_has_two_predecessors():
    g = build_precedence_graph([P((0.0, 0.0), (1, 0)), P((0.5, -0.5), (0, 1))])
    y = ("y", 0, 1)
    assert sorted(g.direct_predecessors(y)) == [("x", 0), ("x", 1)]
    assert g.direct_predecessors(("x", 0)) == [] and g.direct_predecessors(("x", 1)) == []
    assert count_configs(g.coll) == brute_force_count(g.coll) == 1


def test_triangle_pinwheel_has_three_cycle():
    tri = [(0.0, 0.0), (1.0, 0.0), (0.4, 0.9)]
    g = build_precedence_graph(pinwheel(tri))
    cyc = find_cycle(g)
    assert cyc is not None
    assert not is_acyclic(g)
    assert len({v for v in cyc if v[0] == "y"}) == 3
    assert incremental_config(g) is None


def test_cycle_parity_counts():
    assert count_configs(pinwheel([(0.0, 0.0), (1.0, 0.0), (0.4, 0.9)])) == 0
    assert count_configs(pinwheel(_square((0.5, 0.5), 0.3))) == 2
    assert brute_force_count(pinwheel(_square((0.5, 0.5), 0.3))) == 2
    pent = [(math.cos(2 * math.pi * k / 5), math.sin(2 * math.pi * k / 5)) for k in range(5)]
    assert count_configs(pinwheel(pent)) == 0


def test_brute_force_size_guard(stream):
    coll = random_probe_collection(8, stream(3))
    with pytest.raises(ValueError, match="limited"):
        brute_force_count(coll)


def test_degenerate_collections_rejected():
    l = Line.horizontal(0.0)
    with pytest.raises(DegenerateCollection):
        build_precedence_graph([(l, (0.0, 0.0)), (l, (1.0, 0.0))])
    with pytest.raises(DegenerateCollection):
        build_precedence_graph([(l, (0.0, 0.0)), (Line.vertical(0.5), (0.5, 0.0))])
    with pytest.raises(ValueError):
        ProbeCollection([(l, (0.0, 1.0))])


@pytest.mark.parametrize("rectangular", [False, True])
def test_counts_and_acyclicity_on_random_collections(stream, rectangular):
    st = stream(77 + rectangular)
    for _ in range(200):
        k = 1 + st.integer(5)
        coll = random_probe_collection(k, st, rectangular=rectangular)
        n = count_configs(coll)
        assert n == brute_force_count(coll)
        all_one = all(brute_force_count(coll.sub(sub)) == 1
                      for r in range(1, k + 1) for sub in itertools.combinations(range(k), r))
        assert is_acyclic(build_precedence_graph(coll)) == all_one


# -- exact Palm estimator -----------------------------------------------------------------


def test_configuration_weight_small_cases():
    D = unit_square()
    assert configuration_weight([], D, H) == 1.0
    l = Line.horizontal(0.5)
    assert configuration_weight([l], D, H) == pytest.approx(math.exp(-2.0))
    # a crossing pair only admits the four corner configurations
    v = Line.vertical(0.25)
    w = configuration_weight([l, v], D, R)
    corners = sum(math.exp(-(a + b)) for a in (0.25, 0.75) for b in (0.5, 0.5))
    assert w == pytest.approx(corners)
    # requiring a point on the far side of the vertex keeps half of them
    w = configuration_weight([l, v], D, R, {0: [(0.6, 0.5)]})
    assert w == pytest.approx(2 * math.exp(-1.25))
    assert configuration_weight([Line.horizontal(3.0)], D, R) == 0.0


@pytest.mark.parametrize("M,side", [(R, 0.6), (H, 0.2)])
def test_configuration_weight_averages_to_partition_function(stream, M, side):
    D = Polygon.square(side, (0.2, 0.2))
    st = stream(9)
    Z = math.exp(M.birth_intensity_total(D))
    w = np.array([configuration_weight(sample_poisson_lines(M, D, st), D, M) / Z for _ in range(8000)])
    assert within(w.mean(), 1.0, w.std(ddof=1) / math.sqrt(len(w)))


def test_palm_single_and_colinear(stream):
    D = Polygon.square(0.26, (0.37, 0.37))
    one = palm_edge_correlation(R, D, [(Line.horizontal(0.5), (0.5, 0.5))], 5000, stream(1))
    assert within(one.ratio, 1.0, one.se)
    l = Line.horizontal(0.5)
    pair = palm_edge_correlation(R, D, [(l, (0.4, 0.5)), (l, (0.6, 0.5))], 10000, stream(2))
    assert within(pair.ratio, label_correlation_target(R, (0.4, 0.5), (0.6, 0.5)), pair.se)
    with pytest.raises(DegenerateCollection):
        palm_edge_correlation(R, D, [(l, (0.9, 0.5))], 10, stream(3))


def test_palm_homogeneous_augmented_acyclic_factorize(stream):
    colls = [
        [P((0.45, 0.45), (1, 0.2)), P((0.55, 0.55), (0.3, 1))],
        [P((0.45, 0.42), (0, 1)), P((0.52, 0.56), (1, 0.3))],
        [P((0.42, 0.45), (1, 0.1)), P((0.5, 0.5), (1, 0.3)), P((0.58, 0.55), (1, -0.2))],
        [P((0.43, 0.43), (1, 0.5)), P((0.5, 0.57), (1, -0.4)), P((0.57, 0.46), (0.2, 1))],
        [P((0.45, 0.5), (0.1, 1)), P((0.5, 0.45), (1, 0.15)), P((0.56, 0.56), (1, 1))],
    ]
    D = Polygon.square(0.12, (0.44, 0.44))
    for k, items in enumerate(colls):
        coll = ProbeCollection(items).scaled(0.5, (0.5, 0.5))
        assert is_acyclic(build_precedence_graph(coll, augmented=True))
        est = palm_edge_correlation(H, D, coll, 6000, stream(100 + k))
        assert within(est.ratio, 1.0, est.se)


def test_palm_cycles_break_factorization(stream):
    r = 0.03
    c = (0.5, 0.5)
    D = Polygon.square(2 * r, (c[0] - r, c[1] - r))
    sq = palm_edge_correlation(R, D, pinwheel(_square(c, r / 2)), 4000, stream(5))
    assert sq.ratio > 1.0 + 3 * sq.se
    tri = [(c[0] + r / 2 * math.cos(a), c[1] + r / 2 * math.sin(a)) for a in (0.0, 2.1, 4.2)]
    t = palm_edge_correlation(H, D, pinwheel(tri), 4000, stream(6))
    assert t.ratio < 1.0 - 3 * t.se


# -- tube estimators on rectangular samples ---------------------------------------------


def test_colinear_pair_survival(rect_samples):
    l = Line.horizontal(0.5)
    x1, x2 = (0.3, 0.5), (0.6, 0.5)
    est = estimate_edge_correlation(rect_samples, [(l, x1), (l, x2)], 0.05, 1e-3)
    assert within(est.ratio, math.exp(-2 * R.segment_mass(x1, x2)), est.se)
    assert len(est.marginals) == 1


def test_acyclic_rectangular_pair_factorizes(rect_samples):
    probes = [(Line.vertical(0.3), (0.3, 0.3)), (Line.horizontal(0.7), (0.6, 0.7))]
    assert is_acyclic(build_precedence_graph(probes))
    est = estimate_edge_correlation(rect_samples, probes, 0.05, 1e-3)
    assert within(est.ratio, 1.0, est.se)


def test_edge_correlation_needs_samples():
    with pytest.raises(ValueError, match="at least"):
        estimate_edge_correlation([PolygonalConfig()] * 5, [(Line.vertical(0.5), (0.5, 0.5))], 0.05, 1e-3)


def test_directional_measure_empty_samples():
    t = estimate_directional_measure([], [LineWindow(0, 1, 0, 1)])
    assert t.n == 0 and t.mean.tolist() == [0.0]


def test_directional_measure_vertical_window(rect_samples):
    w = 0.2
    wins = [LineWindow(math.pi / 2 - 1e-9, math.pi / 2 + 1e-9, 0.3, 0.3 + w),
            LineWindow(-1e-9, 1e-9, 0.1, 0.3)]
    t = estimate_directional_measure(rect_samples, wins)
    assert within(t.mean[0], w * 1.0, t.mean_se[0])
    assert directional_first_order(R, unit_square(), wins[0]) == pytest.approx(w)
    assert within(t.cov[0, 1], 0.0, t.cov_se[0, 1])
    # distinct lines do not covary, so the variance is the same-line term
    assert within(t.cov[0, 0], directional_second_order(R, unit_square(), wins[0]), t.cov_se[0, 0])


def test_label_correlation(rect_samples, stream):
    same = estimate_label_correlation(rect_samples[:200], (0.4, 0.4), (0.4, 0.4), rng=stream(1))
    assert same[0] == 1.0
    x, y = (0.3, 0.5), (0.6, 0.5)
    est, se = estimate_label_correlation(rect_samples, x, y, rng=stream(2))
    assert within(est, label_correlation_target(R, x, y), se)
    assert label_correlation_target(R, x, y) == pytest.approx(math.exp(-0.6))


def test_crossing_counts_are_poisson(rect_samples):
    n = crossing_counts(rect_samples, (0.2, 0.5), (0.7, 0.5))
    assert within(n.mean(), 0.5, n.std(ddof=1) / math.sqrt(len(n)))
    assert 0.9 < n.var(ddof=1) / n.mean() < 1.1


def test_decay_profile_shape(rect_samples):
    prof = decay_profile(rect_samples, stacked_template(), [0.1, 0.3, 0.5], 0.05)
    assert len(prof.deviations) == 3
    assert prof.ratios[0] < 1.0
    assert all(se > 0 for se in prof.ses)
    with pytest.raises(ValueError):
        decay_profile(rect_samples[:10], stacked_template(), [0.1], 0.05)
