"""Disagreement-loop chains: registry-based DL/GenDL and the defective
germ-driven variant."""

import math

import numpy as np
import pytest
from scipy import stats

from helpers import ScriptedTurns, ks_critical
from polyfield.dloop import (
    ArcClock, AwayFromAnchor, DefState, Dynamics, VerticalLineRule, apply_birth, apply_death,
    def_apply, def_step, disagreement, edge_difference, empty_state, mcmc_step, merge_colinear,
    metropolis_accept, propose_site, run_chain, standard_family, stationary_state,
)
from polyfield.dynrep import sample_field_dynrep
from polyfield.gendyn import DiskGrowth
from polyfield.geometry import Edge, Polygon, PolygonalConfig, check_admissible, unit_square
from polyfield.linespace import DomainError, Homogeneous, Line, RectangularStandard


def same_edges(a, b, digits=6):
    return PolygonalConfig(merge_colinear(list(a))).signature(digits) == \
        PolygonalConfig(merge_colinear(list(b))).signature(digits)


def loop_matches(old, new, loop):
    return (same_edges(edge_difference(new, old), loop.creation)
            and same_edges(edge_difference(old, new), loop.annihilation))


class SpiralRule(AwayFromAnchor):
    """Always turns left; drives branches into their own past."""

    def __init__(self, domain):
        self.domain = domain

    def direction(self, p, line, legs=None):
        h = legs[-1].d if legs else (1.0, 0.0)
        d = (line.c, -line.s)
        return d if h[0] * d[1] - h[1] * d[0] > 0 else (-d[0], -d[1])

    def germ(self, line):
        ch = self.domain.chord(line)
        return line.point(0.5 * (ch[0] + ch[1]))

    def clock(self):
        return ArcClock()


# -- registry chains -------------------------------------------------------------------


def test_interior_birth_into_empty_field_creates_one_loop(stream):
    st = stream(1)
    M, D = Homogeneous(1.0), unit_square()
    state = empty_state(M, D, DiskGrowth(D))
    for _ in range(30):
        site = propose_site(state, st)
        new, loop = apply_birth(state, site)
        assert not loop.annihilation
        assert same_edges(loop.creation, new.config.edges)
        assert not check_admissible(new.config, D)
        assert loop.n_components() == (1 if new.config.edges else 0)


def test_death_of_only_site_empties_field(stream):
    st = stream(2)
    M, D = Homogeneous(1.0), unit_square()
    state = empty_state(M, D)
    site = propose_site(state, st)
    one, _ = apply_birth(state, site)
    back, loop = apply_death(one, site)
    assert back.config.is_empty()
    assert same_edges(loop.annihilation, one.config.edges)


def test_death_then_birth_restores_field(stream):
    st = stream(3)
    M, D = Homogeneous(1.0), unit_square()
    for _ in range(40):
        state = stationary_state(M, D, st, family=DiskGrowth(D))
        if not state.sites:
            continue
        site = state.sites[st.integer(len(state.sites))]
        less, _ = apply_death(state, site)
        again, _ = apply_birth(less, site)
        assert again.config.signature(9) == state.config.signature(9)


def test_dead_site_must_be_registered(stream):
    M, D = Homogeneous(1.0), unit_square()
    state = empty_state(M, D)
    with pytest.raises(DomainError):
        apply_death(state, propose_site(state, stream(4)))


@pytest.mark.parametrize("family", ["standard", "disk"])
def test_loop_identity_and_admissibility(stream, family):
    st = stream(5)
    M, D = Homogeneous(1.2), unit_square()
    fam = None if family == "standard" else DiskGrowth(D)
    for _ in range(60):
        state = stationary_state(M, D, st, family=fam)
        if st.uniform() < 0.5 or not state.sites:
            new, loop = apply_birth(state, propose_site(state, st))
        else:
            new, loop = apply_death(state, state.sites[st.integer(len(state.sites))])
        assert loop_matches(state.config, new.config, loop)
        assert not check_admissible(new.config, D)
        assert loop.n_components() <= 1


def test_metropolis_rule():
    class Always:
        def uniform(self):
            return 0.999999

    assert metropolis_accept(-1.0, 5.0, Always())
    assert metropolis_accept(3.0, 1.0, Always())
    assert not metropolis_accept(1e-3, 1e6, Always())


def test_run_chain_with_zero_horizon_returns_initial(stream):
    M, D = Homogeneous(1.0), unit_square()
    s0 = empty_state(M, D)
    out = run_chain(s0, Dynamics("dl", M, D), 0.0, 1.0, stream(6))
    assert len(out) == 1 and out[0][0] == 0.0 and out[0][1].is_empty()


def test_run_chain_emits_on_the_thinning_grid(stream):
    M, D = Homogeneous(1.0), unit_square()
    out = run_chain(empty_state(M, D), Dynamics("dl", M, D), 5.0, 0.5, stream(7))
    assert [s for s, _ in out] == pytest.approx([0.5 * k for k in range(11)])


@pytest.mark.parametrize("beta", [0.5, 1.0, 2.0])
def test_edge_count_law_independent_of_start(stream, beta):
    """Two chains from different starts settle on one edge-count law."""
    M, D = RectangularStandard(), unit_square()
    st = stream(int(10 * beta))
    dyn = Dynamics("dl", M, D, beta)
    first = run_chain(empty_state(M, D), dyn, 5050.0, 1.0, st)[51:]
    busy = stationary_state(M, Polygon.square(1.0), st)
    for _ in range(8):
        busy = busy.with_sites(busy.sites + [propose_site(busy, st) for _ in range(3)])
    second = run_chain(busy, dyn, 5050.0, 1.0, st)[51:]
    a = np.array([len(c) for _, c in first])
    b = np.array([len(c) for _, c in second])
    top = max(a.max(), b.max())
    bins = [0, 3, 5, 7, 9, 12, top + 1] if top >= 12 else [0, 3, 5, 7, top + 1]
    ha, _ = np.histogram(a, bins)
    hb, _ = np.histogram(b, bins)
    keep = (ha + hb) > 0
    _, p, _, _ = stats.chi2_contingency(np.vstack([ha[keep], hb[keep]]))
    assert p > 1e-3


def test_high_beta_suppresses_length(stream):
    M, D = RectangularStandard(), unit_square()
    st = stream(8)
    lo = [c.total_length() for _, c in run_chain(empty_state(M, D), Dynamics("dl", M, D, 1.0), 600, 1.0, st)[100:]]
    hi = [c.total_length() for _, c in run_chain(empty_state(M, D), Dynamics("dl", M, D, 4.0), 600, 1.0, st)[100:]]
    assert np.mean(hi) < np.mean(lo)


# -- defective chain ---------------------------------------------------------------------


def test_defective_birth_in_empty_field_never_fails(stream):
    st = stream(9)
    M, D = Homogeneous(1.0), unit_square()
    rule = AwayFromAnchor(DiskGrowth(D))
    for _ in range(100):
        line = M.sample_line(D, st)
        r = def_apply(PolygonalConfig(), (line, rule.germ(line)), "birth", rule, M, D, st)
        assert r.status == "ok"
        assert not r.loop.annihilation
        assert not check_admissible(r.config, D)


def test_defective_death_matches_line_death(stream):
    """With the away-from-anchor rule a defective death that only erases is
    the registry chain's line death."""
    st = stream(10)
    M, D = Homogeneous(1.0), unit_square()
    fam = DiskGrowth(D)
    rule = AwayFromAnchor(fam)
    tot = 0
    for _ in range(80):
        state = stationary_state(M, D, st, family=fam)
        for site in [s for s in state.sites if not s.interior]:
            new, loop = apply_death(state, site)
            if loop.creation:
                continue
            r = def_apply(state.config, (site.lines[0], site.point), "death", rule, M, D, st)
            tot += 1
            assert r.status == "ok"
            assert r.config.signature(6) == new.config.signature(6)
            assert loop_matches(state.config, r.config, r.loop)
    assert tot > 20


def test_defective_birth_inverts_line_death(stream):
    """Re-adding a removed line with the turns the removal erased restores
    the original field."""
    st = stream(11)
    M, D = Homogeneous(1.0), unit_square()
    fam = DiskGrowth(D)
    rule = AwayFromAnchor(fam)
    tot = 0
    for _ in range(60):
        state = stationary_state(M, D, st, family=fam)
        for site in [s for s in state.sites if not s.interior]:
            new, loop = apply_death(state, site)
            script = ScriptedTurns(loop.annihilation, new.config.edges, fam.tau)
            r = def_apply(new.config, (site.lines[0], site.point), "birth", rule, script, D, st)
            tot += 1
            assert r.status == "ok"
            assert r.config.signature(6) == state.config.signature(6)
    assert tot > 30


def test_failed_update_leaves_state_untouched(stream):
    st = stream(12)
    D = Polygon.square(4.0)
    M = Homogeneous(2.0)
    rule = SpiralRule(D)
    base = sample_field_dynrep(Homogeneous(0.3), D, st)
    sig = base.signature()
    failed = 0
    state = DefState(base)
    for _ in range(60):
        nxt = def_step(state, M, D, rule, 1.0, st)
        if nxt.failures > state.failures:
            failed += 1
            assert nxt.config is state.config
            assert nxt.config.signature() == sig
        state = nxt
        sig = state.config.signature()
    assert failed > 0
    for _ in range(30):
        line = M.sample_line(D, st)
        r = def_apply(base, (line, rule.germ(line)), "birth", rule, M, D, st) \
            if not any(e.line.same_as(line) for e in base.edges) else None
        if r is not None and r.status == "failed":
            assert r.config is base and r.loop.closure == "failed"


def test_defective_preconditions():
    D = unit_square()
    M = Homogeneous(1.0)
    rule = AwayFromAnchor(DiskGrowth(D))
    l = Line.horizontal(0.5)
    cfg = PolygonalConfig([Edge((0.0, 0.5), (1.0, 0.5), l)])
    with pytest.raises(DomainError):
        def_apply(cfg, (l, (0.5, 0.5)), "birth", rule, M, D, 0)
    with pytest.raises(DomainError):
        def_apply(cfg, (Line.vertical(0.5), (0.5, 0.5)), "birth", rule, M, D, 0)
    with pytest.raises(ValueError):
        def_apply(cfg, (Line.vertical(0.5), (0.5, 0.2)), "grow", rule, M, D, 0)


def test_defective_away_from_anchor_preserves_stationary_law(stream):
    st = stream(13)
    M, D = Homogeneous(1.0), unit_square()
    rule = AwayFromAnchor(DiskGrowth(D))
    start, end = [], []
    for _ in range(300):
        g = sample_field_dynrep(M, D, st)
        out = run_chain(DefState(g), Dynamics("defdl", M, D, rule=rule), 2.0, 2.0, st)
        assert not check_admissible(out[-1][1], D)
        start.append(g.total_length())
        end.append(out[-1][1].total_length())
    assert stats.ks_2samp(start, end).statistic < ks_critical(300, 300)


def test_vertical_line_rule_preserves_stationary_law(stream):
    st = stream(14)
    M, D = RectangularStandard(), Polygon.rectangle(0, 0, 2, 1.5)
    rule = VerticalLineRule(0.7, D)
    ref, end = [], []
    for _ in range(300):
        g = sample_field_dynrep(M, D, st)
        out = run_chain(DefState(g), Dynamics("defdl", M, D, rule=rule), 2.0, 2.0, st)
        assert not check_admissible(out[-1][1], D)
        ref.append(sample_field_dynrep(M, D, st).total_length())
        end.append(out[-1][1].total_length())
    assert stats.ks_2samp(ref, end).statistic < ks_critical(300, 300)
    assert abs(np.mean(end) - 6.0) < 4 * np.std(end) / math.sqrt(300)


def test_vertical_line_rule_directions():
    D = unit_square()
    r = VerticalLineRule(0.5, D)
    assert r.direction((0.5, 0.2), Line.vertical(0.5)) == (0.0, 1.0)
    assert r.direction((0.7, 0.2), Line.horizontal(0.2)) == (1.0, 0.0)
    assert r.direction((0.3, 0.2), Line.horizontal(0.2)) == (-1.0, 0.0)
    assert r.germ(Line.vertical(0.3)) == pytest.approx((0.3, 1.0))
    assert r.allowed(Line.vertical(0.3)) and not r.allowed(Line.horizontal(0.3))


def test_disagreement_of_identical_configs_is_empty(stream):
    g = sample_field_dynrep(Homogeneous(1.0), unit_square(), stream(15))
    loop = disagreement(g, g, unit_square())
    assert loop.is_empty() and loop.length() == 0.0
