"""Convex domains, polygonal configurations, admissibility and label fields."""

import csv
import io
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .linespace import TOL, Line


def _cross(ax, ay, bx, by):
    return ax * by - ay * bx


@dataclass(frozen=True)
class Segment:
    a: tuple
    b: tuple

    def length(self):
        return math.hypot(self.b[0] - self.a[0], self.b[1] - self.a[1])

    def perimeter(self):
        return 2.0 * self.length()

    def diameter(self):
        return self.length()

    def bbox(self):
        return (min(self.a[0], self.b[0]), min(self.a[1], self.b[1]),
                max(self.a[0], self.b[0]), max(self.a[1], self.b[1]))

    def support(self, phi):
        s, c = math.sin(phi), math.cos(phi)
        u = self.a[0] * s + self.a[1] * c
        v = self.b[0] * s + self.b[1] * c
        return (u, v) if u <= v else (v, u)

    def support_vec(self, phi):
        s, c = np.sin(phi), np.cos(phi)
        u = self.a[0] * s + self.a[1] * c
        v = self.b[0] * s + self.b[1] * c
        return np.minimum(u, v), np.maximum(u, v)


class ConvexDomain:
    """Open bounded convex set; either a `Polygon` or a `Disk`."""

    def in_out(self, line, axis=(1.0, 0.0)):
        ch = self.chord(line)
        if ch is None:
            return None
        p, q = line.point(ch[0]), line.point(ch[1])
        if p[0] * axis[0] + p[1] * axis[1] > q[0] * axis[0] + q[1] * axis[1]:
            p, q = q, p
        return p, q


@dataclass(frozen=True)
class Polygon(ConvexDomain):
    vertices: tuple
    _edges: tuple = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        vs = tuple((float(x), float(y)) for x, y in self.vertices)
        if len(vs) < 3:
            raise ValueError("polygon needs at least three vertices")
        area2 = sum(_cross(vs[i][0], vs[i][1], vs[(i + 1) % len(vs)][0], vs[(i + 1) % len(vs)][1])
                    for i in range(len(vs)))
        if area2 < 0:
            vs = vs[::-1]
        elif area2 == 0:
            raise ValueError("degenerate polygon")
        n = len(vs)
        for i in range(n):
            a, b, c = vs[i], vs[(i + 1) % n], vs[(i + 2) % n]
            if _cross(b[0] - a[0], b[1] - a[1], c[0] - b[0], c[1] - b[1]) <= 1e-12:
                raise ValueError("polygon vertices must be strictly convex")
        object.__setattr__(self, "vertices", vs)
        edges = []
        for i in range(n):
            a, b = vs[i], vs[(i + 1) % n]
            edges.append((a[0], a[1], b[0] - a[0], b[1] - a[1], math.hypot(b[0] - a[0], b[1] - a[1])))
        object.__setattr__(self, "_edges", tuple(edges))

    @classmethod
    def rectangle(cls, x0, y0, x1, y1):
        return cls(((x0, y0), (x1, y0), (x1, y1), (x0, y1)))

    @classmethod
    def square(cls, side=1.0, origin=(0.0, 0.0)):
        return cls.rectangle(origin[0], origin[1], origin[0] + side, origin[1] + side)

    def area(self):
        vs = self.vertices
        return 0.5 * sum(_cross(vs[i][0], vs[i][1], vs[(i + 1) % len(vs)][0], vs[(i + 1) % len(vs)][1])
                         for i in range(len(vs)))

    def perimeter(self):
        return sum(e[4] for e in self._edges)

    def diameter(self):
        vs = self.vertices
        return max(math.hypot(p[0] - q[0], p[1] - q[1]) for p in vs for q in vs)

    def bbox(self):
        xs = [v[0] for v in self.vertices]
        ys = [v[1] for v in self.vertices]
        return (min(xs), min(ys), max(xs), max(ys))

    def centroid(self):
        vs = self.vertices
        return (sum(v[0] for v in vs) / len(vs), sum(v[1] for v in vs) / len(vs))

    def support(self, phi):
        s, c = math.sin(phi), math.cos(phi)
        vals = [v[0] * s + v[1] * c for v in self.vertices]
        return min(vals), max(vals)

    def support_vec(self, phi):
        s, c = np.sin(phi), np.cos(phi)
        vals = np.array([v[0] * s + v[1] * c for v in self.vertices])
        return vals.min(axis=0), vals.max(axis=0)

    def contains(self, p, tol=0.0):
        x, y = p
        for ax, ay, ex, ey, ln in self._edges:
            if _cross(ex, ey, x - ax, y - ay) < -tol * ln:
                return False
        return True

    def contains_vec(self, x, y):
        ok = np.ones(np.shape(x), dtype=bool)
        for ax, ay, ex, ey, _ in self._edges:
            ok &= ex * (y - ay) - ey * (x - ax) >= 0
        return ok

    def boundary_distance(self, p):
        x, y = p
        return min(_cross(ex, ey, x - ax, y - ay) / ln for ax, ay, ex, ey, ln in self._edges)

    def on_boundary(self, p, tol=1e-7):
        return abs(self.boundary_distance(p)) <= tol

    def ray_exit(self, p, d):
        """Largest s >= 0 with p + s d in the closed polygon (p inside)."""
        x, y = p
        best = math.inf
        for ax, ay, ex, ey, _ in self._edges:
            f0 = _cross(ex, ey, x - ax, y - ay)
            f1 = _cross(ex, ey, d[0], d[1])
            if f1 < 0:
                s = -f0 / f1
                if s < best:
                    best = s
        return max(best, 0.0)

    def chord(self, line):
        """Parameter interval (t0, t1) of the line inside the polygon, or None
        when the line misses it or only touches it."""
        px, py = line.rho * line.s, line.rho * line.c
        dx, dy = line.c, -line.s
        t0, t1 = -math.inf, math.inf
        for ax, ay, ex, ey, _ in self._edges:
            f0 = _cross(ex, ey, px - ax, py - ay)
            f1 = _cross(ex, ey, dx, dy)
            if abs(f1) < 1e-15:
                if f0 < 0:
                    return None
                continue
            t = -f0 / f1
            if f1 > 0:
                if t > t0:
                    t0 = t
            elif t < t1:
                t1 = t
        if t1 - t0 <= TOL:
            return None
        return (t0, t1)

    def clip_segment(self, a, b):
        dx, dy = b[0] - a[0], b[1] - a[1]
        u0, u1 = 0.0, 1.0
        for ax, ay, ex, ey, _ in self._edges:
            f0 = _cross(ex, ey, a[0] - ax, a[1] - ay)
            f1 = _cross(ex, ey, dx, dy)
            if abs(f1) < 1e-15:
                if f0 < 0:
                    return None
                continue
            u = -f0 / f1
            if f1 > 0:
                u0 = max(u0, u)
            else:
                u1 = min(u1, u)
        if (u1 - u0) * math.hypot(dx, dy) <= TOL:
            return None
        return (a[0] + u0 * dx, a[1] + u0 * dy), (a[0] + u1 * dx, a[1] + u1 * dy)

    def sample_point(self, stream):
        x0, y0, x1, y1 = self.bbox()
        while True:
            p = (x0 + (x1 - x0) * stream.uniform(), y0 + (y1 - y0) * stream.uniform())
            if self.contains(p):
                return p


@dataclass(frozen=True)
class Disk(ConvexDomain):
    center: tuple
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))
        if not self.radius > 0:
            raise ValueError("disk radius must be positive")

    def area(self):
        return math.pi * self.radius ** 2

    def perimeter(self):
        return 2.0 * math.pi * self.radius

    def diameter(self):
        return 2.0 * self.radius

    def bbox(self):
        cx, cy = self.center
        r = self.radius
        return (cx - r, cy - r, cx + r, cy + r)

    def centroid(self):
        return self.center

    def support(self, phi):
        m = self.center[0] * math.sin(phi) + self.center[1] * math.cos(phi)
        return m - self.radius, m + self.radius

    def support_vec(self, phi):
        m = self.center[0] * np.sin(phi) + self.center[1] * np.cos(phi)
        return m - self.radius, m + self.radius

    def contains(self, p, tol=0.0):
        return math.hypot(p[0] - self.center[0], p[1] - self.center[1]) <= self.radius + tol

    def contains_vec(self, x, y):
        return (x - self.center[0]) ** 2 + (y - self.center[1]) ** 2 <= self.radius ** 2

    def boundary_distance(self, p):
        return self.radius - math.hypot(p[0] - self.center[0], p[1] - self.center[1])

    def on_boundary(self, p, tol=1e-7):
        return abs(self.boundary_distance(p)) <= tol

    def ray_exit(self, p, d):
        fx, fy = p[0] - self.center[0], p[1] - self.center[1]
        b = fx * d[0] + fy * d[1]
        c = fx * fx + fy * fy - self.radius ** 2
        disc = b * b - c
        if disc < 0:
            return 0.0
        return max(-b + math.sqrt(disc), 0.0)

    def chord(self, line):
        cx, cy = self.center
        delta = line.rho - (cx * line.s + cy * line.c)
        h2 = self.radius ** 2 - delta * delta
        if h2 <= 0:
            return None
        h = math.sqrt(h2)
        if 2 * h <= TOL:
            return None
        tc = cx * line.c - cy * line.s
        return (tc - h, tc + h)

    def clip_segment(self, a, b):
        dx, dy = b[0] - a[0], b[1] - a[1]
        ln = math.hypot(dx, dy)
        if ln == 0:
            return None
        line = Line.from_points(a, b)
        ch = self.chord(line)
        if ch is None:
            return None
        ta, tb = line.param(a), line.param(b)
        lo, hi = max(min(ta, tb), ch[0]), min(max(ta, tb), ch[1])
        if hi - lo <= TOL:
            return None
        p, q = line.point(lo), line.point(hi)
        if ta > tb:
            p, q = q, p
        return p, q

    def sample_point(self, stream):
        r = self.radius * math.sqrt(stream.uniform())
        th = 2 * math.pi * stream.uniform()
        return (self.center[0] + r * math.cos(th), self.center[1] + r * math.sin(th))


def unit_square():
    return Polygon.square(1.0)


class Edge(NamedTuple):
    a: tuple
    b: tuple
    line: Line

    def length(self):
        return math.hypot(self.b[0] - self.a[0], self.b[1] - self.a[1])


class PolygonalConfig:
    """A finite collection of edges, each carrying its supporting line."""

    __slots__ = ("edges",)

    def __init__(self, edges=()):
        self.edges = list(edges)

    def __len__(self):
        return len(self.edges)

    def __iter__(self):
        return iter(self.edges)

    def __repr__(self):
        return f"PolygonalConfig({len(self.edges)} edges)"

    def is_empty(self):
        return not self.edges

    def total_length(self):
        return sum(math.hypot(e.b[0] - e.a[0], e.b[1] - e.a[1]) for e in self.edges)

    def hamiltonian(self, M):
        """L(gamma) = sum over edges of M([[e]])."""
        return sum(M.segment_mass(e.a, e.b) for e in self.edges)

    def restrict(self, domain):
        out = []
        for e in self.edges:
            c = domain.clip_segment(e.a, e.b)
            if c is not None:
                out.append(Edge(c[0], c[1], e.line))
        return PolygonalConfig(out)

    def vertices(self, tol=1e-7):
        """Snapped vertex positions with their degrees."""
        pts, deg = [], []
        for e in self.edges:
            for p in (e.a, e.b):
                for i, q in enumerate(pts):
                    if abs(p[0] - q[0]) <= tol and abs(p[1] - q[1]) <= tol:
                        deg[i] += 1
                        break
                else:
                    pts.append(p)
                    deg.append(1)
        return list(zip(pts, deg))

    def components(self, tol=1e-7):
        """Connected components as lists of edge indices."""
        n = len(self.edges)
        parent = list(range(n))

        def find(i):
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        ends = [(p, i) for i, e in enumerate(self.edges) for p in (e.a, e.b)]
        ends.sort()
        for k in range(len(ends)):
            p, i = ends[k]
            j = k + 1
            while j < len(ends) and ends[j][0][0] - p[0] <= tol:
                q, m = ends[j]
                if abs(q[1] - p[1]) <= tol:
                    parent[find(i)] = find(m)
                j += 1
        groups = {}
        for i in range(n):
            groups.setdefault(find(i), []).append(i)
        return list(groups.values())

    def signature(self, digits=9):
        """Order-independent fingerprint, used to compare configurations."""
        rows = []
        for e in self.edges:
            a = (round(e.a[0], digits), round(e.a[1], digits))
            b = (round(e.b[0], digits), round(e.b[1], digits))
            rows.append(min(a, b) + max(a, b))
        return tuple(sorted(rows))


class Overlap(NamedTuple):
    """Colinear overlap of two segments."""

    a: tuple
    b: tuple


def segment_intersection(s1, s2, tol=TOL):
    """Intersection of closed segments s1=(p1, p2) and s2=(q1, q2).

    Returns a point, an `Overlap` for colinear overlap of positive length, or
    None.
    """
    (p1, p2), (q1, q2) = s1, s2
    rx, ry = p2[0] - p1[0], p2[1] - p1[1]
    sx, sy = q2[0] - q1[0], q2[1] - q1[1]
    wx, wy = q1[0] - p1[0], q1[1] - p1[1]
    rl = math.hypot(rx, ry)
    sl = math.hypot(sx, sy)
    denom = _cross(rx, ry, sx, sy)
    if abs(denom) <= 1e-12 * max(rl * sl, 1e-300):
        if rl == 0 or abs(_cross(wx, wy, rx, ry)) / rl > tol:
            return None
        t0 = (wx * rx + wy * ry) / (rl * rl)
        t1 = ((q2[0] - p1[0]) * rx + (q2[1] - p1[1]) * ry) / (rl * rl)
        lo, hi = max(0.0, min(t0, t1)), min(1.0, max(t0, t1))
        if (hi - lo) * rl > tol:
            return Overlap((p1[0] + lo * rx, p1[1] + lo * ry), (p1[0] + hi * rx, p1[1] + hi * ry))
        if (hi - lo) * rl >= -tol:
            u = 0.5 * (lo + hi)
            return (p1[0] + u * rx, p1[1] + u * ry)
        return None
    t = _cross(wx, wy, sx, sy) / denom
    u = _cross(wx, wy, rx, ry) / denom
    et, eu = tol / rl if rl else 0.0, tol / sl if sl else 0.0
    if -et <= t <= 1 + et and -eu <= u <= 1 + eu:
        for p in (p1, p2):
            for q in (q1, q2):
                if abs(p[0] - q[0]) <= tol and abs(p[1] - q[1]) <= tol:
                    return p
        return (p1[0] + t * rx, p1[1] + t * ry)
    return None


def in_out_points(line, domain, axis=(1.0, 0.0)):
    """Entry and exit points of the line, ordered by the time coordinate
    p.axis; None if the line misses the domain or is tangent to it."""
    return domain.in_out(line, axis)


class Violation(NamedTuple):
    rule: str
    edges: tuple
    detail: str


class Violations(list):
    """List of violations; `empty_boundary` tells whether no edge reaches the
    domain boundary."""

    empty_boundary = True


def check_admissible(config, domain, tol=1e-7):
    out = Violations()
    edges = config.edges
    n = len(edges)
    touches = False
    for i, e in enumerate(edges):
        if e.length() <= TOL:
            out.append(Violation("P0", (i,), "degenerate edge"))
        for p in (e.a, e.b):
            if not domain.contains(p, tol):
                out.append(Violation("P0", (i,), f"endpoint {p} outside the domain"))
        if abs(e.line.offset(e.a)) > 1e-6 or abs(e.line.offset(e.b)) > 1e-6:
            out.append(Violation("P0", (i,), "edge off its supporting line"))
    boxes = [(min(e.a[0], e.b[0]) - tol, max(e.a[0], e.b[0]) + tol,
              min(e.a[1], e.b[1]) - tol, max(e.a[1], e.b[1]) + tol) for e in edges]
    for i in range(n):
        bi = boxes[i]
        for j in range(i + 1, n):
            bj = boxes[j]
            if bi[1] < bj[0] or bj[1] < bi[0] or bi[3] < bj[2] or bj[3] < bi[2]:
                continue
            if edges[i].line.same_as(edges[j].line, 1e-9):
                out.append(Violation("P4", (i, j), "two edges on one line"))
            hit = segment_intersection((edges[i].a, edges[i].b), (edges[j].a, edges[j].b), tol)
            if hit is None:
                continue
            if isinstance(hit, Overlap):
                out.append(Violation("P1", (i, j), "colinear overlap"))
                continue
            end_i = any(abs(hit[0] - p[0]) <= tol and abs(hit[1] - p[1]) <= tol for p in (edges[i].a, edges[i].b))
            end_j = any(abs(hit[0] - p[0]) <= tol and abs(hit[1] - p[1]) <= tol for p in (edges[j].a, edges[j].b))
            if not (end_i and end_j):
                out.append(Violation("P1", (i, j), f"edges meet at {hit} away from a shared endpoint"))
                if not end_i and not end_j:
                    out.append(Violation("P2", (i, j), f"crossing node of degree 4 at {hit}"))
    for p, deg in config.vertices(tol):
        if domain.on_boundary(p, 10 * tol):
            touches = True
            if deg != 1:
                out.append(Violation("P2", (), f"boundary vertex {p} has degree {deg}"))
        elif deg != 2:
            out.append(Violation("P2", (), f"interior vertex {p} has degree {deg}"))
    out.empty_boundary = not touches
    return out


class DegenerateQuery(ValueError):
    pass


@dataclass
class LabelField:
    """Alternating +-1 labels on the regions cut out by a configuration.

    The label of x is reference_sign * (-1)^(number of edges crossed on the way
    from x to the reference region). Without a reference point the reference
    region is the unbounded one, reached along a ray; this is direction
    independent when every component of the configuration is closed. With a
    reference point inside a convex domain, labels are well defined for any
    admissible configuration of that domain.
    """

    config: PolygonalConfig
    reference_sign: int = 1
    reference_point: tuple = None


def crossings(config, a, b, tol=TOL):
    n = 0
    for e in config.edges:
        hit = segment_intersection((a, b), (e.a, e.b), tol)
        if hit is not None:
            n += 1
    return n


def label_at(labelfield, x, direction=(1.0, 0.0)):
    cfg = labelfield.config
    for e in cfg.edges:
        ex, ey = e.b[0] - e.a[0], e.b[1] - e.a[1]
        ln2 = ex * ex + ey * ey
        u = ((x[0] - e.a[0]) * ex + (x[1] - e.a[1]) * ey) / ln2 if ln2 else 0.0
        u = min(1.0, max(0.0, u))
        if math.hypot(e.a[0] + u * ex - x[0], e.a[1] + u * ey - x[1]) <= TOL:
            raise DegenerateQuery(f"{x} lies on an edge")
    if labelfield.reference_point is not None:
        target = labelfield.reference_point
    else:
        far = 1.0 + max([abs(v) for e in cfg.edges for v in e.a + e.b] + [abs(x[0]), abs(x[1])])
        dl = math.hypot(*direction)
        target = (x[0] + 4 * far * direction[0] / dl, x[1] + 4 * far * direction[1] / dl)
    n = crossings(cfg, x, target)
    return labelfield.reference_sign * (-1 if n % 2 else 1)


def write_csv(config, fh):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["x1", "y1", "x2", "y2", "phi", "rho"])
    for e in config.edges:
        w.writerow([f"{v:.12g}" for v in (e.a[0], e.a[1], e.b[0], e.b[1], e.line.phi, e.line.rho)])


def config_to_csv(config):
    buf = io.StringIO()
    write_csv(config, buf)
    return buf.getvalue()


def read_csv(fh):
    r = csv.DictReader(fh)
    edges = []
    for row in r:
        a = (float(row["x1"]), float(row["y1"]))
        b = (float(row["x2"]), float(row["y2"]))
        edges.append(Edge(a, b, Line(float(row["phi"]), float(row["rho"]))))
    return PolygonalConfig(edges)


def render_svg(config, domain=None, size=480, stroke=0.004):
    """SVG text with one polyline per edge; the domain outline, if given, is
    drawn as a polygon or circle."""
    if domain is not None:
        x0, y0, x1, y1 = domain.bbox()
    elif config.edges:
        xs = [v for e in config.edges for v in (e.a[0], e.b[0])]
        ys = [v for e in config.edges for v in (e.a[1], e.b[1])]
        x0, y0, x1, y1 = min(xs), min(ys), max(xs), max(ys)
    else:
        x0, y0, x1, y1 = 0.0, 0.0, 1.0, 1.0
    w, h = max(x1 - x0, 1e-9), max(y1 - y0, 1e-9)
    pad = 0.03 * max(w, h)
    sw = stroke * max(w, h)
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size * h / w:.0f}" '
        f'viewBox="{x0 - pad:.6g} {-(y1 + pad):.6g} {w + 2 * pad:.6g} {h + 2 * pad:.6g}">',
        '<g transform="scale(1,-1)">',
    ]
    if isinstance(domain, Polygon):
        pts = " ".join(f"{x:.9g},{y:.9g}" for x, y in domain.vertices)
        lines.append(f'<polygon points="{pts}" fill="none" stroke="#999" stroke-width="{sw:.6g}"/>')
    elif isinstance(domain, Disk):
        lines.append(f'<circle cx="{domain.center[0]:.9g}" cy="{domain.center[1]:.9g}" r="{domain.radius:.9g}" '
                     f'fill="none" stroke="#999" stroke-width="{sw:.6g}"/>')
    for e in config.edges:
        lines.append(f'<polyline points="{e.a[0]:.9g},{e.a[1]:.9g} {e.b[0]:.9g},{e.b[1]:.9g}" '
                     f'fill="none" stroke="black" stroke-width="{sw:.6g}"/>')
    lines.append("</g>")
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
