"""Disagreement-loop Markov chains on admissible configurations.

Standard and generalised chains keep a registry of birth sites, each with
its own replayable randomness, and regenerate the field from the registry;
adding or removing one site changes the field along a single disagreement
loop. Sites appear at rate <<M>>(D) + M([[D]]) and each dies at rate 1, so
the registry is a Poisson process and, at beta = 1, the field is exactly the
consistent field. Other temperatures use a Metropolis test on the energy
difference.

Defective chains drop the registry and trace the loop directly on the
configuration from a linear germ, with turning directions chosen by a
deterministic decision rule.
"""

import math
from dataclasses import dataclass, field, replace

from ._kinetic import LineBirth, VertexBirth, grow
from .dynrep import choose_axis
from .gendyn import DiskGrowth, Sweep
from .geometry import Edge, PolygonalConfig, check_admissible
from .linespace import DomainError, Line, sample_birth_points, sample_interior_births, sample_poisson_lines
from .rng import Tape, as_stream

SNAP = 1e-9


# -- disagreement loops ------------------------------------------------------------


def _group_by_line(edges):
    groups = []
    for e in edges:
        for line, items in groups:
            if line.same_as(e.line, 1e-9):
                items.append(e)
                break
        else:
            groups.append((e.line, [e]))
    return groups


def _intervals(line, edges):
    out = []
    for e in edges:
        ta, tb = line.param(e.a), line.param(e.b)
        out.append((min(ta, tb), max(ta, tb)))
    out.sort()
    return out


def _union(iv, gap=SNAP):
    out = []
    for a, b in sorted(iv):
        if out and a <= out[-1][1] + gap:
            out[-1] = (out[-1][0], max(out[-1][1], b))
        else:
            out.append((a, b))
    return out


def _subtract(iv, cut, gap=SNAP):
    out = []
    cut = _union(cut)
    for a, b in iv:
        pieces = [(a, b)]
        for c, d in cut:
            nxt = []
            for p, q in pieces:
                if d <= p + gap or c >= q - gap:
                    nxt.append((p, q))
                    continue
                if c > p + gap:
                    nxt.append((p, c))
                if d < q - gap:
                    nxt.append((d, q))
            pieces = nxt
        out.extend(pieces)
    return [(p, q) for p, q in out if q - p > gap]


def _edges_from(line, iv):
    return [Edge(line.point(a), line.point(b), line) for a, b in iv]


def edge_difference(first, second):
    """Parts of the edges of `first` not covered by edges of `second`."""
    out = []
    others = _group_by_line(second.edges)
    for line, edges in _group_by_line(first.edges):
        cut = []
        for l2, e2 in others:
            if l2.same_as(line, 1e-9):
                cut = _intervals(line, e2)
                break
        out.extend(_edges_from(line, _subtract(_intervals(line, edges), cut)))
    return out


def merge_colinear(edges):
    """Join pieces on one line that touch end to end."""
    out = []
    for line, items in _group_by_line(edges):
        out.extend(_edges_from(line, _union(_intervals(line, items))))
    return out


def _chains(segments, tol=1e-7):
    cfg = PolygonalConfig(segments)
    return [[segments[i] for i in comp] for comp in cfg.components(tol)]


@dataclass
class DisagreementLoop:
    """Symmetric difference of a configuration and its update: `creation`
    holds pieces of the new configuration only, `annihilation` pieces of the
    old one only. `closure` is "closed", "chopped" (reaches the domain
    boundary) or "failed"."""

    creation: list
    annihilation: list
    closure: str

    @property
    def subpaths(self):
        """Maximal connected same-phase pieces, tagged by phase."""
        return ([("creation", c) for c in _chains(self.creation)]
                + [("annihilation", c) for c in _chains(self.annihilation)])

    def segments(self):
        return list(self.creation) + list(self.annihilation)

    def is_empty(self):
        return not self.creation and not self.annihilation

    def n_components(self):
        return len(_chains(self.segments())) if self.segments() else 0

    def length(self):
        return sum(e.length() for e in self.segments())


def disagreement(old, new, domain):
    creation = edge_difference(new, old)
    annihilation = edge_difference(old, new)
    chopped = any(domain.on_boundary(p, 1e-7) for e in creation + annihilation for p in (e.a, e.b))
    return DisagreementLoop(creation, annihilation, "chopped" if chopped else "closed")


# -- registry-based chains ---------------------------------------------------------


@dataclass(eq=False)
class Site:
    """An interior vertex birth (two lines) or a line birth at its anchor
    (one line); each growth direction owns a tape of uniforms."""

    point: tuple
    lines: tuple
    tapes: tuple

    @property
    def interior(self):
        return len(self.lines) == 2


@dataclass
class ChainState:
    M: object
    domain: object
    family: object
    sites: list
    s: float = 0.0
    _config: PolygonalConfig = field(default=None, repr=False)

    @property
    def config(self):
        if self._config is None:
            self._config = build_field(self)
        return self._config

    def with_sites(self, sites, s=None):
        return ChainState(self.M, self.domain, self.family, sites, self.s if s is None else s)

    def birth_rate(self):
        return self.M.birth_intensity_total(self.domain) + self.M.hitting_mass(self.domain)


def build_field(state):
    births = []
    for site in state.sites:
        readers = tuple(t.reader() for t in site.tapes)
        if site.interior:
            births.append(VertexBirth(site.point, site.lines, readers))
        else:
            births.append(LineBirth(site.lines[0], site.point, readers))
    return grow(state.M, state.domain, state.family, births)


def standard_family(M, domain, axis=None):
    return Sweep(domain, choose_axis(M, axis))


def empty_state(M, domain, family=None):
    """Registry chain state with no sites. Without a family the chain is the
    standard one, with line births at entry points of a sweep."""
    if family is None:
        family = standard_family(M, domain)
    elif isinstance(family, Sweep) and not M.axis_ok(family.u):
        raise ValueError("measure charges lines perpendicular to the sweep direction")
    elif not isinstance(family, (Sweep, DiskGrowth)):
        raise ValueError("registry chains need a sweep or disk growth family")
    return ChainState(M, domain, family, [])


def stationary_state(M, domain, rng, family=None):
    """A registry drawn from the stationary law of the beta = 1 chain."""
    state = empty_state(M, domain, family)
    stream = as_stream(rng)
    sites = []
    for line in sample_poisson_lines(M, domain, stream):
        sites.append(Site(state.family.anchor(line), (line,), (Tape(stream), Tape(stream))))
    for b in sample_interior_births(M, domain, stream):
        sites.append(Site(b.point, b.lines, (Tape(stream), Tape(stream))))
    return state.with_sites(sites)


def propose_site(state, rng):
    stream = as_stream(rng)
    bi = state.M.birth_intensity_total(state.domain)
    lm = state.M.hitting_mass(state.domain)
    if stream.uniform() * (bi + lm) < bi:
        b = sample_birth_points(state.M, state.domain, stream, 1)[0]
        return Site(b.point, b.lines, (Tape(stream), Tape(stream)))
    line = state.M.sample_line(state.domain, stream)
    return Site(state.family.anchor(line), (line,), (Tape(stream), Tape(stream)))


def apply_birth(state, site, rng=None):
    new = state.with_sites(state.sites + [site])
    return new, disagreement(state.config, new.config, state.domain)


def apply_death(state, site, rng=None):
    if not any(s is site for s in state.sites):
        raise DomainError("site is not in the registry")
    new = state.with_sites([s for s in state.sites if s is not site])
    return new, disagreement(state.config, new.config, state.domain)


def metropolis_accept(delta_energy, beta, stream):
    if beta == 1.0 or delta_energy <= 0:
        return True
    return stream.uniform() < math.exp(-(beta - 1.0) * delta_energy)


def mcmc_step(state, beta=1.0, rng=None):
    """One event of the continuous-time birth-death chain."""
    stream = as_stream(rng)
    rb = state.birth_rate()
    n = len(state.sites)
    total = rb + n
    if total <= 0:
        return replace(state, s=math.inf)
    s = state.s + stream.exponential() / total
    if stream.uniform() * total < rb:
        new = state.with_sites(state.sites + [propose_site(state, stream)], s)
    else:
        k = stream.integer(n)
        new = state.with_sites(state.sites[:k] + state.sites[k + 1:], s)
    if beta != 1.0:
        dL = new.config.hamiltonian(state.M) - state.config.hamiltonian(state.M)
        if not metropolis_accept(dL, beta, stream):
            return ChainState(state.M, state.domain, state.family, state.sites, s, state._config)
    return new


# -- defective dynamics -------------------------------------------------------------


class AwayFromAnchor:
    """Turn away from the anchor of the new line; germs sit at anchors."""

    def __init__(self, family):
        self.family = family

    def direction(self, path_end, line, path=None):
        sgn = self.family.forward_sign(line, path_end)
        return (line.c * sgn, -line.s * sgn)

    def allowed(self, line):
        return True

    def germ(self, line):
        return self.family.anchor(line)

    def sample_line(self, M, domain, stream):
        return M.sample_line(domain, stream)

    def rate(self, M, domain):
        return M.hitting_mass(domain)

    def clock(self):
        return TauClock(self.family.tau)


class VerticalLineRule:
    """Horizontal turns go away from the vertical line x = x0 (rightwards on
    it), vertical turns go up. Germs are vertical lines at the top of their
    chord. Needs a rectangular measure."""

    def __init__(self, x0, domain):
        self.x0 = float(x0)
        self.domain = domain

    def direction(self, path_end, line, path=None):
        if line.is_vertical():
            return (0.0, 1.0)
        return (1.0, 0.0) if path_end[0] >= self.x0 - 1e-12 else (-1.0, 0.0)

    def allowed(self, line):
        return line.is_vertical()

    def germ(self, line):
        ch = self.domain.chord(line)
        if ch is None:
            raise DomainError("line misses the domain")
        a, b = line.point(ch[0]), line.point(ch[1])
        return a if a[1] >= b[1] else b

    def sample_line(self, M, domain, stream):
        while True:
            line = M.sample_line(domain, stream)
            if line.is_vertical():
                return line

    def rate(self, M, domain):
        x0, _, x1, _ = domain.bbox()
        return M.fh.mass(x0, x1)

    def clock(self):
        return ArcClock()


DECISION_RULES = {"away-from-anchor": AwayFromAnchor, "vertical-line": VerticalLineRule}


class ArcClock:
    """Both branches grow at unit speed."""

    def time(self, t0, a, d, s):
        return t0 + s


class TauClock:
    """Branches reach each point at its reveal time tau(p)."""

    def __init__(self, tau):
        self.tau = tau

    def time(self, t0, a, d, s):
        return self.tau((a[0] + s * d[0], a[1] + s * d[1]))


@dataclass
class _Leg:
    phase: str  # "c" creation, "e" erasure
    line: Line
    a: tuple
    d: tuple
    t0: float
    length: float

    @property
    def b(self):
        return (self.a[0] + self.length * self.d[0], self.a[1] + self.length * self.d[1])

    def arc(self, p):
        return (p[0] - self.a[0]) * self.d[0] + (p[1] - self.a[1]) * self.d[1]


class _Branch:
    def __init__(self, idx):
        self.idx = idx
        self.legs = []
        self.cur = None
        self.stop = None  # (arc, kind, payload) terminating the current leg
        self.alive = True
        self.on_boundary = False


def _ray_hits(a, d, p, q, smax, tol=1e-10):
    """Arc position along the ray a + s d where it crosses segment pq, for
    s in (tol, smax]; None if parallel or missing."""
    ex, ey = q[0] - p[0], q[1] - p[1]
    den = d[0] * ey - d[1] * ex
    if abs(den) < 1e-14:
        return None
    wx, wy = p[0] - a[0], p[1] - a[1]
    s = (wx * ey - wy * ex) / den
    u = (wx * d[1] - wy * d[0]) / den
    if s <= tol or s > smax + tol or u < -1e-12 or u > 1 + 1e-12:
        return None
    return s, u


@dataclass
class DefResult:
    status: str  # "ok" or "failed"
    config: PolygonalConfig
    loop: DisagreementLoop
    reason: str = ""


class _Tracer:
    def __init__(self, config, M, domain, rule, stream, clock, max_events):
        self.old = list(config.edges)
        self.M = M
        self.domain = domain
        self.rule = rule
        self.stream = stream
        self.clock = clock
        self.max_events = max_events
        self.branches = []

    # leg construction
    def _start_create(self, br, line, a, d, t0):
        send = self.domain.ray_exit(a, d)
        send = 0.0 if send is None else max(send, 0.0)
        upd = self.M.next_update(self.stream, a, d, send) if send > 1e-12 else None
        br.phase = "c"
        br.cur = _Leg("c", line, a, d, t0, 0.0)
        if upd is not None:
            br.stop = (upd[0], "update", upd[1])
        else:
            br.stop = (send, "boundary", None)

    def _start_erase(self, br, k, a, d, t0):
        e = self.old[k]
        ends = [p for p in (e.a, e.b) if (p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1] > 0]
        target = max(ends, key=lambda p: (p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) if ends else a
        dist = (target[0] - a[0]) * d[0] + (target[1] - a[1]) * d[1]
        br.phase = "e"
        br.cur = _Leg("e", e.line, a, d, t0, 0.0)
        br.stop = (max(dist, 0.0), "erase_end", (k, target))

    def _time_on(self, leg, s):
        return self.clock.time(leg.t0, leg.a, leg.d, s)

    def _erasures(self):
        for br in self.branches:
            for leg in br.legs:
                if leg.phase == "e":
                    yield br, leg, leg.length
            if br.alive and br.cur is not None and br.cur.phase == "e":
                yield br, br.cur, br.stop[0]

    def _creations(self, skip_current_of=None):
        for br in self.branches:
            for leg in br.legs:
                if leg.phase == "c":
                    yield br, leg, leg.length, True
            if br.alive and br.cur is not None and br.cur.phase == "c" and br is not skip_current_of:
                yield br, br.cur, br.stop[0], False

    def _erased_at(self, line, p, t_arrive):
        """Owner branch of an erasure covering p on `line` by time t_arrive."""
        for br, leg, reach in self._erasures():
            if not leg.line.same_as(line, 1e-9):
                continue
            s = leg.arc(p)
            if -1e-10 <= s <= reach + 1e-10 and self._time_on(leg, s) <= t_arrive + 1e-12:
                return br
        return None

    # candidate events for one branch: (time, arc, kind, payload)
    def _candidate(self, br):
        leg = br.cur
        smax, kind, payload = br.stop
        best = (self._time_on(leg, smax), smax, kind, payload)

        def offer(s, k, pl):
            nonlocal best
            t = self._time_on(leg, s)
            if (t, s) < best[:2]:
                best = (t, s, k, pl)

        a, d = leg.a, leg.d
        if leg.phase == "c":
            for k, e in enumerate(self.old):
                if e.line.same_as(leg.line, 1e-9):
                    continue
                hit = _ray_hits(a, d, e.a, e.b, smax)
                if hit is None:
                    continue
                s = hit[0]
                p = (a[0] + s * d[0], a[1] + s * d[1])
                owner = self._erased_at(e.line, p, self._time_on(leg, s))
                if owner is None:
                    offer(s, "hit_old", (k, p))
                elif owner is br:
                    offer(s, "self_hit", p)
            for other, oleg, reach, committed in self._creations(skip_current_of=br):
                far = (oleg.a[0] + reach * oleg.d[0], oleg.a[1] + reach * oleg.d[1])
                hit = _ray_hits(a, d, oleg.a, far, smax)
                if hit is None:
                    continue
                s = hit[0]
                p = (a[0] + s * d[0], a[1] + s * d[1])
                if other is br:
                    offer(s, "self_hit", p)
                    continue
                t_here = self._time_on(leg, s)
                t_there = self._time_on(oleg, oleg.arc(p))
                if t_there <= t_here + 1e-12:
                    offer(s, "cutoff", (other, p))
        else:
            for other, oleg, reach in self._erasures():
                if other is br or not oleg.line.same_as(leg.line, 1e-9):
                    continue
                # part of this leg lying inside the other's erased span
                s0 = leg.arc(oleg.a)
                s1 = leg.arc((oleg.a[0] + reach * oleg.d[0], oleg.a[1] + reach * oleg.d[1]))
                lo, hi = max(min(s0, s1), 0.0), min(max(s0, s1), smax)
                if hi <= 1e-10 or hi < lo:
                    continue

                def gap(s, oleg=oleg):
                    p = (a[0] + s * d[0], a[1] + s * d[1])
                    return self._time_on(leg, s) - self._time_on(oleg, oleg.arc(p))

                if gap(lo) >= -1e-12:
                    s_hit = lo
                elif gap(hi) >= -1e-12:
                    x, y = lo, hi
                    for _ in range(80):
                        mid = 0.5 * (x + y)
                        if gap(mid) >= 0:
                            y = mid
                        else:
                            x = mid
                    s_hit = y
                else:
                    continue
                p = (a[0] + s_hit * d[0], a[1] + s_hit * d[1])
                offer(s_hit, "cutoff", (other, p))
        return best

    def _commit(self, br, s):
        leg = br.cur
        leg.length = max(s, 0.0)
        if leg.length > 1e-12:
            br.legs.append(leg)
        br.cur = None

    def _chop(self, br, p):
        """Cut branch br back to the point p on its path."""
        if br.cur is not None:
            self._commit(br, br.stop[0])
        kept = []
        for leg in br.legs:
            s = leg.arc(p)
            q = (leg.a[0] + s * leg.d[0], leg.a[1] + s * leg.d[1])
            on_leg = -1e-9 <= s <= leg.length + 1e-9 and math.hypot(q[0] - p[0], q[1] - p[1]) <= 1e-7
            if on_leg:
                leg.length = max(s, 0.0)
                if leg.length > 1e-12:
                    kept.append(leg)
                break
            kept.append(leg)
        br.legs = kept
        br.alive = False

    def _neighbour(self, k, v):
        for j, e in enumerate(self.old):
            if j == k:
                continue
            for p in (e.a, e.b):
                if abs(p[0] - v[0]) <= 1e-7 and abs(p[1] - v[1]) <= 1e-7:
                    return j
        return None

    def run(self, germ_line, x, mode):
        dirs = [(germ_line.c, -germ_line.s), (-germ_line.c, germ_line.s)]
        t0 = self.clock.time(0.0, x, dirs[0], 0.0)
        for i, d in enumerate(dirs):
            br = _Branch(i)
            self.branches.append(br)
            if mode == "birth":
                self._start_create(br, germ_line, x, d, t0)
            else:
                k = self._edge_containing(germ_line, x)
                self._start_erase(br, k, x, d, t0)
        events = 0
        while any(b.alive for b in self.branches):
            events += 1
            if events > self.max_events:
                return "failed", "event cap reached"
            cands = [(self._candidate(b), b) for b in self.branches if b.alive]
            (t, s, kind, payload), br = min(cands, key=lambda c: (c[0][0], c[0][1], c[1].idx))
            leg = br.cur
            p = (leg.a[0] + s * leg.d[0], leg.a[1] + s * leg.d[1])
            self._commit(br, s)
            if kind == "self_hit":
                return "failed", "branch closed a cycle"
            if kind == "boundary":
                br.alive = False
                br.on_boundary = True
            elif kind == "update":
                line = payload
                self._start_create(br, line, p, self.rule.direction(p, line, br.legs), t)
            elif kind == "hit_old":
                k, w = payload
                line = self.old[k].line
                self._start_erase(br, k, w, self.rule.direction(w, line, br.legs), t)
            elif kind == "erase_end":
                k, v = payload
                if self.domain.on_boundary(v, 1e-7):
                    br.alive = False
                    br.on_boundary = True
                    continue
                j = self._neighbour(k, v)
                if j is None:
                    return "failed", "dangling vertex in the configuration"
                line = self.old[j].line
                owner = self._erased_at(line, v, t)
                if owner is not None and owner is not br:
                    br.alive = False
                    self._chop(owner, v)
                    break
                d = self.rule.direction(v, line, br.legs)
                e = self.old[j]
                far = e.b if math.hypot(e.a[0] - v[0], e.a[1] - v[1]) <= 1e-7 else e.a
                if (far[0] - v[0]) * d[0] + (far[1] - v[1]) * d[1] > 0:
                    self._start_erase(br, j, v, d, t)
                else:
                    self._start_create(br, line, v, d, t)
            elif kind == "cutoff":
                other, z = payload
                br.alive = False
                self._chop(other, z)
                break
        return "ok", ""

    def _edge_containing(self, line, x):
        for k, e in enumerate(self.old):
            if not e.line.same_as(line, 1e-9):
                continue
            ta, tb, t = line.param(e.a), line.param(e.b), line.param(x)
            if min(ta, tb) - 1e-9 <= t <= max(ta, tb) + 1e-9:
                return k
        raise DomainError("germ point is not on an edge of its line")

    def result(self):
        created, erased = [], []
        for br in self.branches:
            for leg in br.legs:
                (created if leg.phase == "c" else erased).append(Edge(leg.a, leg.b, leg.line))
        remaining = edge_difference(PolygonalConfig(self.old), PolygonalConfig(erased))
        new = PolygonalConfig(merge_colinear(remaining + created))
        closure = "chopped" if any(b.on_boundary for b in self.branches) else "closed"
        return new, DisagreementLoop(merge_colinear(created), merge_colinear(erased), closure)


def def_apply(config, germ, mode, rule, M, domain, rng=None, max_events=10000, clock=None):
    """Add (mode "birth") or remove (mode "death") the linear germ (line, x)
    by tracing its two disagreement branches. Returns a DefResult; a failed
    update carries the unchanged configuration."""
    line, x = germ
    stream = as_stream(rng)
    if mode == "birth":
        if any(e.line.same_as(line, 1e-9) for e in config.edges):
            raise DomainError("germ line extends an edge of the configuration")
        for e in config.edges:
            if abs(e.line.offset(x)) <= 1e-9:
                ta, tb, t = e.line.param(e.a), e.line.param(e.b), e.line.param(x)
                if min(ta, tb) <= t <= max(ta, tb):
                    raise DomainError("germ point lies on the configuration")
    elif mode != "death":
        raise ValueError(f"unknown mode {mode!r}")
    tracer = _Tracer(config, M, domain, rule, stream, clock or rule.clock(), max_events)
    status, reason = tracer.run(line, x, mode)
    if status != "ok":
        return DefResult("failed", config, DisagreementLoop([], [], "failed"), reason)
    new, loop = tracer.result()
    if check_admissible(new, domain):
        return DefResult("failed", config, DisagreementLoop([], [], "failed"), "inadmissible result")
    return DefResult("ok", new, loop)


def death_germs(config, rule):
    """Lines of the configuration eligible for removal: the germ of the
    line lies on its edge."""
    out = []
    for e in config.edges:
        if not rule.allowed(e.line):
            continue
        try:
            x = rule.germ(e.line)
        except DomainError:
            continue
        ta, tb, t = e.line.param(e.a), e.line.param(e.b), e.line.param(x)
        if min(ta, tb) - 1e-9 <= t <= max(ta, tb) + 1e-9:
            out.append((e.line, x))
    return out


@dataclass
class DefState:
    config: PolygonalConfig
    s: float = 0.0
    failures: int = 0


def def_step(state, M, domain, rule, beta=1.0, rng=None, constraint=None):
    """One event of the defective chain: germ births at rate M(A_L), one
    death clock per eligible line. Failed, rejected or constraint-violating
    updates leave the configuration unchanged."""
    stream = as_stream(rng)
    rb = rule.rate(M, domain)
    deaths = death_germs(state.config, rule)
    total = rb + len(deaths)
    if total <= 0:
        return DefState(state.config, math.inf, state.failures)
    s = state.s + stream.exponential() / total
    if stream.uniform() * total < rb:
        line = rule.sample_line(M, domain, stream)
        x = rule.germ(line)
        try:
            res = def_apply(state.config, (line, x), "birth", rule, M, domain, stream)
        except DomainError:
            return DefState(state.config, s, state.failures)
    else:
        germ = deaths[stream.integer(len(deaths))]
        res = def_apply(state.config, germ, "death", rule, M, domain, stream)
    if res.status != "ok":
        return DefState(state.config, s, state.failures + 1)
    if constraint is not None and not constraint(res.config):
        return DefState(state.config, s, state.failures)
    if beta != 1.0:
        dL = res.config.hamiltonian(M) - state.config.hamiltonian(M)
        if not metropolis_accept(dL, beta, stream):
            return DefState(state.config, s, state.failures)
    return DefState(res.config, s, state.failures)


# -- driver ----------------------------------------------------------------------------


@dataclass
class Dynamics:
    """variant: "dl", "gendl" or "defdl"."""

    variant: str
    M: object
    domain: object
    beta: float = 1.0
    family: object = None
    rule: object = None
    constraint: object = None


def run_chain(initial, dynamics, s_max, thin, rng):
    """Simulate to s-time s_max and return [(s, config)] at s = 0, thin,
    2 thin, ... <= s_max. `initial` is a ChainState for registry chains and
    a PolygonalConfig (or DefState) for the defective one."""
    stream = as_stream(rng)
    dyn = dynamics
    if dyn.variant in ("dl", "gendl"):
        state = initial
        step = lambda st: mcmc_step(st, dyn.beta, stream)
        snap = lambda st: st.config
    elif dyn.variant == "defdl":
        state = initial if isinstance(initial, DefState) else DefState(initial)
        step = lambda st: def_step(st, dyn.M, dyn.domain, dyn.rule, dyn.beta, stream, dyn.constraint)
        snap = lambda st: st.config
    else:
        raise ValueError(f"unknown variant {dyn.variant!r}")
    out = [(0.0, snap(state))]
    if s_max <= 0:
        return out
    if thin <= 0:
        raise ValueError("thin must be positive")
    k = 1
    while k * thin <= s_max + 1e-12:
        nxt = step(state)
        # the chain holds `state` on [state.s, nxt.s)
        while k * thin <= s_max + 1e-12 and k * thin < nxt.s:
            out.append((k * thin, snap(state)))
            k += 1
        state = nxt
    return out


def chain_family(variant, M, domain, family=None):
    if variant == "dl":
        return standard_family(M, domain)
    return family if family is not None else DiskGrowth(domain)
