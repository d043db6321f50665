import math
from collections import Counter

import numpy as np
import pytest
from scipy import stats

from polyfield.contour import (
    AncestorClan,
    Contour,
    ContourInstance,
    ContourState,
    Diverged,
    PerfectSample,
    WalkLog,
    ancestor_clan,
    cbd_step,
    disjoint,
    free_contour_mass,
    nesting_depth,
    perfect_sample,
    resolve_acceptance,
    run_cbd,
    sample_disjoint_by_rejection,
    sample_free_contour,
    sample_poisson_contours,
    crude_mass_bound,
)
from polyfield.geometry import Polygon, segment_intersection
from polyfield.linespace import DomainError, Homogeneous, Line, RectangularStandard


H = Homogeneous(1.0)


def _square_contour(x0, y0, side):
    v = ((x0, y0), (x0 + side, y0), (x0 + side, y0 + side), (x0, y0 + side))
    ls = (Line.horizontal(y0), Line.vertical(x0 + side), Line.horizontal(y0 + side), Line.vertical(x0))
    return Contour(v, ls)


def _is_simple(c):
    es = c.edges()
    n = len(es)
    for i in range(n):
        for j in range(i + 1, n):
            if j == i + 1 or (i == 0 and j == n - 1):
                continue
            if segment_intersection((es[i].a, es[i].b), (es[j].a, es[j].b)) is not None:
                return False
    return True


def test_beta_below_two_raises(stream):
    with pytest.raises(DomainError, match="beta >= 2"):
        sample_free_contour(H, 1.9, (0, 0), stream(0))
    with pytest.raises(DomainError):
        sample_poisson_contours(H, 1.0, Polygon.square(1.0), stream(0))
    with pytest.raises(DomainError):
        perfect_sample(H, 0.5, Polygon.square(1.0), stream(0))


def test_success_frequency_decreases_in_beta(stream):
    rates = []
    for beta in (2.0, 3.0, 4.0):
        s = stream(11)
        hits = sum(sample_free_contour(H, beta, (0, 0), s) is not None for _ in range(10000))
        rates.append(hits / 10000)
    assert rates[0] > rates[1] > rates[2]


def test_free_contour_is_simple_and_rooted(stream):
    s = stream(5)
    found = 0
    for _ in range(4000):
        c = sample_free_contour(H, 2.0, (0.3, -0.2), s)
        if c is None:
            continue
        found += 1
        assert c.leftmost == (0.3, -0.2)
        assert all(v[0] >= 0.3 - 1e-9 for v in c.vertices)
        assert len(c.vertices) >= 3
        assert _is_simple(c)
        # consecutive vertices lie on the recorded lines
        for e in c.edges():
            assert abs(e.line.offset(e.a)) < 1e-7 and abs(e.line.offset(e.b)) < 1e-7
    assert found > 20


def test_walk_weight_matches_contour_energy(stream):
    s = stream(8)
    M = RectangularStandard()
    seen = 0
    for _ in range(20000):
        log = WalkLog()
        c = sample_free_contour(M, 3.0, (0.1, 0.1), s, log=log)
        if c is None:
            continue
        seen += 1
        assert log.log_weight == pytest.approx(-3.0 * c.energy(M), rel=1e-9, abs=1e-9)
    assert seen > 5


def test_zero_measure_gives_no_contours(stream):
    assert sample_poisson_contours(Homogeneous(0.0), 3.0, Polygon.square(1.0), stream(1)) == []
    assert sample_free_contour(Homogeneous(0.0), 3.0, (0, 0), stream(1)) is None


def test_total_mass_below_crude_bound(stream):
    D = Polygon.square(0.5)
    est, se = free_contour_mass(H, 2.0, D, stream(3), n_roots=4000)
    assert est > 0
    assert est - 3 * se <= crude_mass_bound(H, 2.0, D)
    assert crude_mass_bound(H, 3.0, Polygon.square(1.5)) == math.inf


def test_poisson_contour_count_stable_across_seeds(stream):
    D = Polygon.square(1.5)
    means = []
    for seed in (21, 22):
        s = stream(seed)
        counts = np.array([len(sample_poisson_contours(H, 3.0, D, s)) for _ in range(1500)])
        means.append((counts.mean(), counts.std(ddof=1) / math.sqrt(len(counts))))
    (m1, s1), (m2, s2) = means
    assert abs(m1 - m2) < 3 * math.hypot(s1, s2)


def test_poisson_contours_stay_inside(stream):
    D = Polygon.square(1.5)
    s = stream(4)
    for _ in range(300):
        for c in sample_poisson_contours(H, 2.5, D, s):
            assert all(D.contains(v, 1e-9) for v in c.vertices)


def test_birth_death_chain_keeps_contours_disjoint(stream):
    D = Polygon.square(1.5)
    s = stream(6)
    state = ContourState()
    for _ in range(3000):
        state = cbd_step(state, H, 2.5, D, s)
        assert disjoint(state.contours)
    assert state.s > 0


def test_birth_death_chain_matches_rejection(stream):
    D = Polygon.square(1.5)
    path = run_cbd(H, 3.0, D, s_max=6000.0, thin=2.0, rng=stream(31))
    chain = Counter(min(len(cs), 2) for _, cs in path[50:])
    s = stream(32)
    direct = Counter(min(len(sample_disjoint_by_rejection(H, 3.0, D, s)), 2) for _ in range(3000))
    table = np.array([[chain[k] for k in range(3)], [direct[k] for k in range(3)]])
    assert stats.chi2_contingency(table)[1] > 0.001


def test_clan_of_isolated_instance_is_singleton():
    class Rec:
        def __init__(self, instances):
            self.instances = instances

        def ancestors_of(self, inst):
            return [j for j in self.instances
                    if j is not inst and j.birth <= inst.birth < j.death and j.contour.intersects(inst.contour)]

    a = ContourInstance(_square_contour(0, 0, 0.2), -0.5, 0.5)
    b = ContourInstance(_square_contour(1, 1, 0.2), -0.7, 0.1)
    clan = ancestor_clan(a, Rec([a, b]))
    assert len(clan) == 1
    resolve_acceptance(clan)
    assert a.accepted

    # chain: c2 overlaps c1 which overlaps c0, each born while the previous lives
    c0 = ContourInstance(_square_contour(0.0, 0.0, 0.3), -3.0, -1.0)
    c1 = ContourInstance(_square_contour(0.2, 0.1, 0.3), -2.0, 0.5)
    c2 = ContourInstance(_square_contour(0.4, 0.2, 0.3), -1.5, 0.7)
    assert not c0.contour.intersects(c2.contour)
    clan = ancestor_clan(c2, Rec([c0, c1, c2]))
    assert len(clan) == 3
    resolve_acceptance(clan)
    assert c0.accepted and not c1.accepted and c2.accepted


def test_perfect_sampler_low_temperature_mostly_empty(stream):
    s = stream(41)
    D = Polygon.square(2.0)
    draws = [perfect_sample(H, 8.0, D, s) for _ in range(200)]
    assert all(isinstance(d, PerfectSample) for d in draws)
    # disjointness conditioning only raises P(empty) above exp(-mass)
    mass, se = free_contour_mass(H, 8.0, D, s, n_roots=20000)
    p_empty = sum(d.contours == [] for d in draws) / len(draws)
    assert p_empty > 0.5
    assert p_empty + 3 * math.sqrt(p_empty * (1 - p_empty) / len(draws)) >= math.exp(-(mass + 3 * se))
    for d in draws:
        assert disjoint(d.contours)
        assert nesting_depth(d.contours) < len(d.contours) + 1


def test_perfect_sampler_reports_divergence(stream):
    out = perfect_sample(H, 2.0, Polygon.square(4.0), stream(0), clan_cap=5)
    assert isinstance(out, Diverged)
    assert out.clan_size > 5


def test_nesting_depth_counts_enclosures():
    outer = _square_contour(0, 0, 1.0)
    mid = _square_contour(0.2, 0.2, 0.6)
    inner = _square_contour(0.4, 0.4, 0.2)
    assert nesting_depth([outer]) == 0
    assert nesting_depth([outer, mid, inner]) == 2
    assert disjoint([outer, mid, inner])
    assert not disjoint([outer, _square_contour(0.5, 0.5, 1.0)])


def test_contour_length_tail_below_exponential_bound(stream):
    # killing at rate (beta - 2) * 2 c per unit length bounds the tail
    s = stream(51)
    n = 40000
    lengths = []
    for _ in range(n):
        c = sample_free_contour(H, 3.0, (0, 0), s)
        lengths.append(c.length() if c is not None else -1.0)
    lengths = np.array(lengths)
    for R in (0.25, 0.5, 1.0, 1.5, 2.0):
        p = float(np.mean(lengths > R))
        se = math.sqrt(max(p * (1 - p), 1.0 / n) / n)
        assert p - 3 * se <= math.exp(-2.0 * (3.0 - 2.0) * R)


def test_clan_class_is_sized():
    clan = AncestorClan([], [1, 2], {})
    assert len(clan) == 2
