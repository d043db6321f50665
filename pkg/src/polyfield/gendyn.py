"""Sampling the consistent field along an arbitrary growing family of convex
sets, and the staged rectangular family used for factorisation arguments.

A line is born at its anchor, the first of its points reached by the family;
both lines of an interior birth, and every line taken at a turn, extend away
from their anchors. With a sweep family this is the particle system of
`dynrep`.
"""

import math
from dataclasses import dataclass, field

from ._kinetic import LineBirth, SweepClock, VertexBirth, grow
from .linespace import DomainError, Line, sample_interior_births, sample_poisson_lines
from .rng import as_stream


class GrowthFamily:
    domain = None

    def tau(self, p):
        raise NotImplementedError

    def anchor(self, line):
        raise NotImplementedError

    def forward_sign(self, line, p):
        t = line.param(p)
        ta = line.param(self.anchor(line))
        return 1.0 if t >= ta else -1.0

    def tau_range(self):
        raise NotImplementedError

    def contains(self, t, p, tol=1e-12):
        """Membership of p in the family member at normalised time t in [0, 1]."""
        lo, hi = self.tau_range()
        return self.domain.contains(p, 1e-9) and self.tau(p) <= lo + t * (hi - lo) + tol

    def evaluator(self, t):
        return lambda p: self.contains(t, p)


class Sweep(GrowthFamily):
    def __init__(self, domain, direction=(1.0, 0.0)):
        self.domain = domain
        self.clock = SweepClock(direction)
        self.u = self.clock.u

    def tau(self, p):
        return p[0] * self.u[0] + p[1] * self.u[1]

    def forward_sign(self, line, p):
        return self.clock.forward_sign(line, p)

    def anchor(self, line):
        pts = self.domain.in_out(line, self.u)
        if pts is None:
            raise DomainError("line misses the domain")
        return pts[0]

    def tau_range(self):
        if hasattr(self.domain, "vertices"):
            vals = [self.tau(v) for v in self.domain.vertices]
            return min(vals), max(vals)
        c = self.domain.center
        m = self.tau(c)
        return m - self.domain.radius, m + self.domain.radius


class DiskGrowth(GrowthFamily):
    """Closure of D intersected with disks of growing radius around a centre."""

    def __init__(self, domain, center=None):
        self.domain = domain
        if center is None:
            center = domain.centroid()
        center = (float(center[0]), float(center[1]))
        if not domain.contains(center, 1e-9):
            raise ValueError("growth centre must lie in the closed domain")
        self.center = center

    def tau(self, p):
        return math.hypot(p[0] - self.center[0], p[1] - self.center[1])

    def anchor(self, line):
        ch = self.domain.chord(line)
        if ch is None:
            raise DomainError("line misses the domain")
        t = min(max(line.param(self.center), ch[0]), ch[1])
        return line.point(t)

    def tau_range(self):
        if hasattr(self.domain, "vertices"):
            return 0.0, max(self.tau(v) for v in self.domain.vertices)
        return 0.0, self.tau(self.domain.center) + self.domain.radius


def anchor_point(family, line):
    return family.anchor(line)


def sample_field_gendyn(M, domain, family, rng):
    if not isinstance(family, (Sweep, DiskGrowth)):
        raise ValueError("sampling needs a family with a reveal time for every line")
    if isinstance(family, Sweep) and not M.axis_ok(family.u):
        raise ValueError("measure charges lines perpendicular to the sweep direction")
    stream = as_stream(rng)
    births = []
    for line in sample_poisson_lines(M, domain, stream):
        births.append(LineBirth(line, family.anchor(line), (stream, stream)))
    for site in sample_interior_births(M, domain, stream):
        births.append(VertexBirth(site.point, site.lines, (stream, stream)))
    return grow(M, domain, family, births)


@dataclass
class RectStaged:
    """Staged family grown from the generating points of a rectangular probe
    collection: crossing vertices are revealed one by one in an order
    compatible with the precedence graph, each reached by the extensions of
    its two direct predecessors.
    """

    items: list
    order: list
    preds: dict
    points: dict = field(default_factory=dict)

    def anchor(self, line):
        for l, x in self.items:
            if l.same_as(line):
                return x
        raise DomainError("line is not part of the staged collection")

    def stage_time(self, node):
        if node[0] == "x":
            return 0.0
        return (self.order.index(node) + 1) / (len(self.order) + 1)

    def skeleton(self, t):
        """Points and axis-parallel segments revealed by normalised time t."""
        pts = [x for _, x in self.items]
        segs = []
        n = len(self.order)
        for k, node in enumerate(self.order):
            t0, t1 = k / (n + 1), (k + 1) / (n + 1)
            if t <= t0:
                break
            y = self.points[node]
            frac = 1.0 if t >= t1 else (t - t0) / (t1 - t0)
            for p in self.preds[node]:
                a = self.points[p]
                segs.append((a, (a[0] + frac * (y[0] - a[0]), a[1] + frac * (y[1] - a[1]))))
            if frac >= 1.0:
                pts.append(y)
        return pts, segs

    def contains(self, t, p, tol=1e-9):
        """Membership in the one-step axis-parallel closure of the skeleton."""
        pts, segs = self.skeleton(t)
        for a, b in segs:
            if (min(a[0], b[0]) - tol <= p[0] <= max(a[0], b[0]) + tol
                    and min(a[1], b[1]) - tol <= p[1] <= max(a[1], b[1]) + tol):
                return True
        cand = pts + [q for s in segs for q in s]
        for a in cand:
            for b in cand:
                if abs(a[0] - b[0]) <= tol and abs(p[0] - a[0]) <= tol and min(a[1], b[1]) - tol <= p[1] <= max(a[1], b[1]) + tol:
                    return True
                if abs(a[1] - b[1]) <= tol and abs(p[1] - a[1]) <= tol and min(a[0], b[0]) - tol <= p[0] <= max(a[0], b[0]) + tol:
                    return True
        return False

    def evaluator(self, t):
        return lambda p: self.contains(t, p)


def rectangular_growth_family(collection):
    from .correlations import ProbeCollection, build_precedence_graph, find_cycle

    coll = collection if isinstance(collection, ProbeCollection) else ProbeCollection(list(collection))
    for line, _ in coll.items:
        if not (line.is_vertical() or line.is_horizontal()):
            raise ValueError("staged family needs vertical and horizontal lines only")
    g = build_precedence_graph(coll, augmented=False)
    cycle = find_cycle(g)
    if cycle is not None:
        raise ValueError(f"precedence graph has a cycle: {cycle}")
    order = [v for v in g.topological_order() if v[0] == "y"]
    preds = {v: list(g.direct_predecessors(v)) for v in order}
    return RectStaged(list(coll.items), order, preds, dict(g.points))
