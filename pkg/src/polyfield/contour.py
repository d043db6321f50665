"""Low-temperature contour machinery for beta >= 2.

Single contours are drawn by a killed random walk started at their leftmost
vertex; a Poisson ensemble of them, conditioned on being pairwise disjoint,
is the empty-boundary field at inverse temperature beta. The birth-death
chain of contours has that law as its stationary distribution, and the
backward clan-of-ancestors construction yields exact draws from it.
"""

import math
from dataclasses import dataclass, field

from .geometry import Edge, PolygonalConfig, segment_intersection
from .linespace import DomainError, Line, sample_birth_points, sample_interior_births
from .rng import as_stream

FREE_RANGE = 1e6


def _check_beta(beta):
    if beta < 2:
        raise DomainError(f"contour sampling needs beta >= 2, got {beta}")


@dataclass(frozen=True)
class Contour:
    """Closed simple polygon; vertices[0] is the leftmost vertex and edge i
    runs from vertices[i] to vertices[i+1] along lines[i]."""

    vertices: tuple
    lines: tuple

    @property
    def leftmost(self):
        return self.vertices[0]

    def edges(self):
        n = len(self.vertices)
        return [Edge(self.vertices[i], self.vertices[(i + 1) % n], self.lines[i]) for i in range(n)]

    def length(self):
        return sum(e.length() for e in self.edges())

    def energy(self, M):
        return sum(M.segment_mass(e.a, e.b) for e in self.edges())

    def bbox(self):
        xs = [v[0] for v in self.vertices]
        ys = [v[1] for v in self.vertices]
        return min(xs), min(ys), max(xs), max(ys)

    def intersects(self, other):
        a, b = self.bbox(), other.bbox()
        if a[2] < b[0] or b[2] < a[0] or a[3] < b[1] or b[3] < a[1]:
            return False
        for e in self.edges():
            for f in other.edges():
                if segment_intersection((e.a, e.b), (f.a, f.b)) is not None:
                    return True
        return False

    def encloses(self, p):
        inside = False
        n = len(self.vertices)
        for i in range(n):
            (x1, y1), (x2, y2) = self.vertices[i], self.vertices[(i + 1) % n]
            if (y1 > p[1]) != (y2 > p[1]):
                xc = x1 + (p[1] - y1) * (x2 - x1) / (y2 - y1)
                if xc > p[0]:
                    inside = not inside
        return inside


def contours_to_config(contours):
    return PolygonalConfig([e for c in contours for e in c.edges()])


@dataclass
class WalkLog:
    """Bookkeeping of one walk: the log-probability of surviving each leg
    without an event (rate beta times the hitting-mass rate) and the log of
    the closing acceptance. Their sum equals -beta L(contour)."""

    log_survival: float = 0.0
    log_accept: float = 0.0
    updates: int = 0
    outcome: str = ""

    @property
    def log_weight(self):
        return self.log_survival + self.log_accept


def _first_hit(a, d, smax, segments, skip_last=True):
    best = None
    segs = segments[:-1] if skip_last else segments
    for p, q in segs:
        hit = segment_intersection((a, (a[0] + smax * d[0], a[1] + smax * d[1])), (p, q))
        if hit is None:
            continue
        pts = [hit.a, hit.b] if hasattr(hit, "a") else [hit]
        for h in pts:
            s = (h[0] - a[0]) * d[0] + (h[1] - a[1]) * d[1]
            if s > 1e-10 and (best is None or s < best):
                best = s
    return best


def _ray_halfline(a, d, x, u, smax):
    """Arc position where the ray a + s d crosses the half-line x + t u, t > 0."""
    den = d[0] * u[1] - d[1] * u[0]
    if abs(den) < 1e-14:
        return None
    wx, wy = x[0] - a[0], x[1] - a[1]
    s = (wx * u[1] - wy * u[0]) / den
    t = (wx * d[1] - wy * d[0]) / den
    if s <= 1e-10 or s > smax or t <= 1e-12:
        return None
    return s


def walk_contour(M, beta, x, lines, stream, domain=None, max_steps=100000, log=None):
    """Run the killed walk from x with initial line lines[0] and closing
    half-line on lines[1]. Returns a Contour or None."""
    log = log if log is not None else WalkLog()
    l1, l2 = lines
    sgn = stream.sign()
    d = (sgn * l1.c, -sgn * l1.s)
    sgn = stream.sign()
    u = (sgn * l2.c, -sgn * l2.s)
    pos = x
    line = l1
    verts = [x]
    vlines = []
    segs = []
    for _ in range(max_steps):
        limit = FREE_RANGE
        fail_kind = "cap"
        if d[0] < 0:
            s_left = (pos[0] - x[0]) / (-d[0])
            if s_left < limit:
                limit, fail_kind = s_left, "left"
        if domain is not None:
            s_exit = domain.ray_exit(pos, d)
            s_exit = 0.0 if s_exit is None else s_exit
            if s_exit < limit:
                limit, fail_kind = s_exit, "exit"
        s_star = _ray_halfline(pos, d, x, u, limit)
        stop = s_star if s_star is not None else limit
        s_self = _first_hit(pos, d, stop, segs)
        if s_self is not None and s_self < stop:
            log.outcome = "self"
            return None
        ev = M.next_update(stream, pos, d, stop, scale=beta)
        if ev is not None:
            s, newline = ev
            q = (pos[0] + s * d[0], pos[1] + s * d[1])
            log.log_survival -= beta * M.segment_mass(pos, q)
            if stream.uniform() * beta >= 2.0:
                log.outcome = "killed"
                return None
            segs.append((pos, q))
            vlines.append(line)
            verts.append(q)
            log.updates += 1
            pos, line = q, newline
            sgn = stream.sign()
            d = (sgn * line.c, -sgn * line.s)
            continue
        if s_star is None:
            log.outcome = fail_kind
            return None
        y = (pos[0] + s_star * d[0], pos[1] + s_star * d[1])
        log.log_survival -= beta * M.segment_mass(pos, y)
        log.log_accept = -beta * M.segment_mass(y, x)
        vlines.append(line)
        verts.append(y)
        vlines.append(l2)
        if stream.uniform() >= math.exp(log.log_accept):
            log.outcome = "closing rejected"
            return None
        log.outcome = "ok"
        return Contour(tuple(verts), tuple(vlines))
    log.outcome = "cap"
    return None


def sample_free_contour(M, beta, x, rng, domain=None, log=None):
    """Leftmost-vertex-rooted contour at x, or None on failure."""
    _check_beta(beta)
    stream = as_stream(rng)
    if M.is_zero():
        return None
    lines = M.line_pair_through(x, stream)
    return walk_contour(M, beta, x, lines, stream, domain, log=log)


def sample_poisson_contours(M, beta, domain, rng):
    """Poisson process of contours inside the domain with intensity the
    beta-modified free contour measure: roots at rate 4 <<M>>, each resolved
    by the walk; contours reaching the boundary are dropped."""
    _check_beta(beta)
    stream = as_stream(rng)
    out = []
    for site in sample_interior_births(M, domain, stream, intensity_factor=4.0):
        lines = site.lines if stream.uniform() < 0.5 else site.lines[::-1]
        c = walk_contour(M, beta, site.point, lines, stream, domain)
        if c is not None:
            out.append(c)
    return out


def free_contour_mass(M, beta, domain, rng, n_roots=10000):
    """Monte-Carlo estimate of the total contour intensity in the domain.
    Returns (estimate, standard error)."""
    _check_beta(beta)
    stream = as_stream(rng)
    scale = 4.0 * M.birth_intensity_total(domain)
    if scale == 0:
        return 0.0, 0.0
    hits = 0
    for site in sample_birth_points(M, domain, stream, n_roots):
        lines = site.lines if stream.uniform() < 0.5 else site.lines[::-1]
        if walk_contour(M, beta, site.point, lines, stream, domain) is not None:
            hits += 1
    p = hits / n_roots
    return scale * p, scale * math.sqrt(max(p * (1 - p), 1.0 / n_roots) / n_roots)


def crude_mass_bound(M, beta, domain):
    """Crude upper bound exp(M([[D]]) exp(|beta| M([[D]]))) on the total
    contour intensity."""
    m = M.hitting_mass(domain)
    try:
        return math.exp(m * math.exp(abs(beta) * m))
    except OverflowError:
        return math.inf


def disjoint(contours):
    for i in range(len(contours)):
        for j in range(i + 1, len(contours)):
            if contours[i].intersects(contours[j]):
                return False
    return True


def sample_disjoint_by_rejection(M, beta, domain, rng, max_tries=10**6):
    """Direct draw of the empty-boundary field: Poisson contour ensembles
    redrawn until pairwise disjoint."""
    stream = as_stream(rng)
    for _ in range(max_tries):
        cs = sample_poisson_contours(M, beta, domain, stream)
        if disjoint(cs):
            return cs
    raise RuntimeError("rejection sampler did not produce a disjoint ensemble")


def nesting_depth(contours):
    """Largest number of contours enclosing the leftmost vertex of another."""
    depth = 0
    for c in contours:
        p = (c.leftmost[0] + 1e-9, c.leftmost[1])
        k = sum(1 for o in contours if o is not c and o.encloses(p))
        depth = max(depth, k)
    return depth


# -- birth and death chain ---------------------------------------------------------


@dataclass
class ContourState:
    contours: list = field(default_factory=list)
    s: float = 0.0

    @property
    def config(self):
        return contours_to_config(self.contours)


def cbd_step(state, M, beta, domain, rng):
    """One event: a root at rate 4 <<M>>(D) proposes a contour, kept when the
    walk succeeds and misses every current contour; each contour dies at
    rate 1."""
    _check_beta(beta)
    stream = as_stream(rng)
    rb = 4.0 * M.birth_intensity_total(domain)
    n = len(state.contours)
    total = rb + n
    if total <= 0:
        return ContourState(list(state.contours), math.inf)
    s = state.s + stream.exponential() / total
    if stream.uniform() * total < rb:
        site = sample_birth_points(M, domain, stream, 1)[0]
        lines = site.lines if stream.uniform() < 0.5 else site.lines[::-1]
        c = walk_contour(M, beta, site.point, lines, stream, domain)
        if c is None or any(c.intersects(o) for o in state.contours):
            return ContourState(list(state.contours), s)
        return ContourState(state.contours + [c], s)
    k = stream.integer(n)
    return ContourState(state.contours[:k] + state.contours[k + 1:], s)


def run_cbd(M, beta, domain, s_max, thin, rng, initial=None):
    """[(s, contours)] at s = 0, thin, 2 thin, ... <= s_max."""
    stream = as_stream(rng)
    state = initial if initial is not None else ContourState()
    out = [(0.0, list(state.contours))]
    k = 1
    while k * thin <= s_max + 1e-12:
        nxt = cbd_step(state, M, beta, domain, stream)
        while k * thin <= s_max + 1e-12 and k * thin < nxt.s:
            out.append((k * thin, list(state.contours)))
            k += 1
        state = nxt
    return out


# -- perfect simulation --------------------------------------------------------------


@dataclass(eq=False)
class ContourInstance:
    contour: Contour
    birth: float
    death: float
    accepted: bool = None

    def alive_at(self, s):
        return self.birth <= s < self.death


@dataclass
class AncestorClan:
    roots: list
    members: list
    ancestors: dict

    def __len__(self):
        return len(self.members)


@dataclass
class Diverged:
    """Clan growth exceeded the cap: beta is too low for the construction."""

    clan_size: int
    horizon: float


@dataclass
class PerfectSample:
    contours: list
    horizon: float
    clan_size: int

    @property
    def config(self):
        return contours_to_config(self.contours)


class FreeProcessRecord:
    """Frozen randomness of the free birth-death process on (-T, 0]: the
    instances alive at 0, and per time slab the instances dying in it."""

    def __init__(self, M, beta, domain, stream):
        self.M, self.beta, self.domain = M, beta, domain
        self.stream = stream
        self.rate = 4.0 * M.birth_intensity_total(domain)
        self.at_zero = []
        for c in sample_poisson_contours(M, beta, domain, stream.child()):
            self.at_zero.append(ContourInstance(c, -stream.exponential(), stream.exponential()))
        self.horizon = 0.0
        self.instances = list(self.at_zero)
        self._overlap = {}

    def extend(self):
        """Cover (-2T, -T] (or (-1, 0] first)."""
        lo = -1.0 if self.horizon == 0 else 2.0 * self.horizon * -1.0
        hi = -self.horizon
        rs = self.stream.child()
        n = rs.poisson(self.rate * (hi - lo))
        for site in sample_birth_points(self.M, self.domain, rs, n):
            death = lo + (hi - lo) * rs.uniform()
            lines = site.lines if rs.uniform() < 0.5 else site.lines[::-1]
            c = walk_contour(self.M, self.beta, site.point, lines, rs, self.domain)
            if c is not None:
                self.instances.append(ContourInstance(c, death - rs.exponential(), death))
        self.horizon = -lo

    def overlaps(self, a, b):
        key = (id(a), id(b)) if id(a) < id(b) else (id(b), id(a))
        v = self._overlap.get(key)
        if v is None:
            v = a.contour.intersects(b.contour)
            self._overlap[key] = v
        return v

    def ancestors_of(self, inst):
        return [j for j in self.instances
                if j is not inst and j.birth <= inst.birth < j.death and self.overlaps(j, inst)]


def ancestor_clan(roots, record, cap=None):
    """Closure of the ancestor relation from the given instances."""
    roots = list(roots) if isinstance(roots, (list, tuple)) else [roots]
    seen = {id(r): r for r in roots}
    anc = {}
    queue = list(roots)
    while queue:
        inst = queue.pop()
        anc[id(inst)] = record.ancestors_of(inst)
        for j in anc[id(inst)]:
            if id(j) not in seen:
                seen[id(j)] = j
                queue.append(j)
                if cap is not None and len(seen) > cap:
                    return AncestorClan(roots, list(seen.values()), anc)
    return AncestorClan(roots, list(seen.values()), anc)


def resolve_acceptance(clan):
    """Instances are accepted in birth order unless an accepted ancestor is
    alive at their birth."""
    for inst in sorted(clan.members, key=lambda i: i.birth):
        inst.accepted = not any(j.accepted for j in clan.ancestors[id(inst)])


def perfect_sample(M, beta, domain, rng, clan_cap=10**5, max_doublings=40):
    """Exact draw of the empty-boundary field at inverse temperature beta,
    or Diverged when a clan outgrows clan_cap."""
    _check_beta(beta)
    stream = as_stream(rng)
    record = FreeProcessRecord(M, beta, domain, stream)
    record.extend()
    for _ in range(max_doublings):
        clan = ancestor_clan(record.at_zero, record, cap=clan_cap)
        if len(clan) > clan_cap:
            return Diverged(len(clan), record.horizon)
        if all(m.birth > -record.horizon for m in clan.members):
            for m in clan.members:
                m.accepted = None
            resolve_acceptance(clan)
            kept = [i.contour for i in record.at_zero if i.accepted]
            return PerfectSample(kept, record.horizon, len(clan))
        record.extend()
    return Diverged(len(record.instances), record.horizon)
