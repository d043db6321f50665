"""Property-based checks over random geometry, measures and seeds."""

import io
import math

from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from polyfield.contour import WalkLog, sample_free_contour
from polyfield.correlations import (
    brute_force_count,
    build_precedence_graph,
    configuration_weight,
    count_configs,
    is_acyclic,
    random_probe_collection,
)
from polyfield.dynrep import sample_field_dynrep
from polyfield.geometry import Polygon, check_admissible, read_csv, unit_square, write_csv
from polyfield.linespace import Homogeneous, Line, OffsetMeasure, Rectangular, RectangularStandard
from polyfield.rng import Stream, make_generator

coord = st.floats(-3, 3, allow_nan=False)
angle = st.floats(0, math.pi, exclude_max=True)
seeds = st.integers(0, 2**32 - 1)
fast = settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])


def _stream(seed):
    return Stream(make_generator(seed))


@st.composite
def offset_measures(draw):
    n = draw(st.integers(2, 5))
    xs = sorted(draw(st.lists(st.floats(-2, 2), min_size=n, max_size=n, unique=True)))
    incs = draw(st.lists(st.floats(0.05, 3), min_size=n - 1, max_size=n - 1))
    fs = [0.0]
    for d in incs:
        fs.append(fs[-1] + d)
    return OffsetMeasure(list(zip(xs, fs)))


@fast
@given(angle, coord, angle, coord)
def test_line_intersection_lies_on_both(p1, r1, p2, r2):
    a, b = Line(p1, r1), Line(p2, r2)
    y = a.intersect(b)
    if y is None:
        return
    assert abs(a.offset(y)) < 1e-6 * (1 + abs(y[0]) + abs(y[1]))
    assert abs(b.offset(y)) < 1e-6 * (1 + abs(y[0]) + abs(y[1]))


@fast
@given(angle, coord, st.floats(-5, 5))
def test_param_inverts_point(phi, rho, t):
    l = Line(phi, rho)
    assert math.isclose(l.param(l.point(t)), t, abs_tol=1e-9)


@fast
@given(angle, st.floats(-1, 2))
def test_chord_ends_on_boundary(phi, rho):
    D = unit_square()
    l = Line(phi, rho)
    ch = D.chord(l)
    if ch is None:
        return
    for t in ch:
        assert D.on_boundary(l.point(t), 1e-7)


@fast
@given(offset_measures(), st.floats(-4, 4))
def test_offset_inverse_is_right_inverse(F, x):
    v = F(x)
    assert math.isclose(F(F.inverse(v)), v, rel_tol=1e-9, abs_tol=1e-9)


@fast
@given(offset_measures(), offset_measures(), st.tuples(coord, coord), st.tuples(coord, coord), st.floats(0, 1))
def test_segment_mass_is_additive(fh, fv, a, b, u):
    M = Rectangular(fh, fv)
    m = (a[0] + u * (b[0] - a[0]), a[1] + u * (b[1] - a[1]))
    assert math.isclose(M.segment_mass(a, m) + M.segment_mass(m, b), M.segment_mass(a, b),
                        rel_tol=1e-9, abs_tol=1e-9)


@fast
@given(st.floats(0.05, 2), st.floats(0.01, 1))
def test_hitting_mass_monotone_under_inclusion(c, shrink):
    M = Homogeneous(c)
    big = Polygon.square(1.0)
    small = Polygon.square(shrink, (0.5 * (1 - shrink), 0.5 * (1 - shrink)))
    assert M.hitting_mass(small) <= M.hitting_mass(big) + 1e-12
    assert M.birth_intensity_total(small) <= M.birth_intensity_total(big) + 1e-12


@fast
@given(seeds, st.integers(1, 5), st.booleans())
def test_count_matches_brute_force(seed, k, rect):
    coll = random_probe_collection(k, _stream(seed), rectangular=rect)
    n = count_configs(coll)
    assert n == brute_force_count(coll)
    if is_acyclic(build_precedence_graph(coll)):
        assert n == 1


@fast
@given(seeds, st.permutations(range(4)))
def test_configuration_weight_ignores_line_order(seed, perm):
    s = _stream(seed)
    lines = [Line(math.pi * s.uniform(), 0.2 + 0.6 * s.uniform()) for _ in range(4)]
    D = unit_square()
    w = configuration_weight(lines, D, Homogeneous(1.0))
    w2 = configuration_weight([lines[i] for i in perm], D, Homogeneous(1.0))
    assert math.isclose(w, w2, rel_tol=1e-9)


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_dynrep_samples_are_admissible_and_roundtrip(seed):
    D = Polygon.square(1.5)
    cfg = sample_field_dynrep(Homogeneous(1.0), D, _stream(seed))
    assert not check_admissible(cfg, D)
    buf = io.StringIO()
    write_csv(cfg, buf)
    back = read_csv(io.StringIO(buf.getvalue()))
    assert len(back.edges) == len(cfg.edges)
    assert math.isclose(back.total_length(), cfg.total_length(), rel_tol=1e-9, abs_tol=1e-9)


@settings(max_examples=40, deadline=None)
@given(seeds, st.floats(2, 6))
def test_walk_weight_is_contour_energy(seed, beta):
    M = RectangularStandard()
    s = _stream(seed)
    for _ in range(50):
        log = WalkLog()
        c = sample_free_contour(M, beta, (0.0, 0.0), s, log=log)
        if c is not None:
            assert math.isclose(log.log_weight, -beta * c.energy(M), rel_tol=1e-9, abs_tol=1e-9)
