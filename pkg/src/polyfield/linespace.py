"""Lines in normal coordinates, activity measures on line space, and the
line-level sampling primitives every field sampler is built from.

A line is stored as (phi, rho) with phi in [0, pi): its unit normal is
n = (sin phi, cos phi) and it is the set {p : p.n = rho}. Along the line we use
the unit direction d = (cos phi, -sin phi) and the coordinate t = p.d.

With this parametrisation the Haar measure dphi drho gives a segment of length
L mass 2L, and a convex body mass equal to its perimeter.
"""

import bisect
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .rng import as_stream

TOL = 1e-9
PI = math.pi


class DomainError(ValueError):
    pass


class Line:
    __slots__ = ("phi", "rho", "s", "c")

    def __init__(self, phi, rho):
        phi = float(phi) % PI
        if phi >= PI - 1e-15:
            phi = 0.0
        self.phi = phi
        self.rho = float(rho)
        self.s = math.sin(phi)
        self.c = math.cos(phi)

    @classmethod
    def through(cls, p, direction):
        """Line through point p with direction vector `direction`."""
        dx, dy = direction
        phi = math.atan2(-dy, dx) % PI
        if phi >= PI - 1e-15:
            phi = 0.0
        line = cls(phi, 0.0)
        line.rho = p[0] * line.s + p[1] * line.c
        return line

    @classmethod
    def from_points(cls, p, q):
        return cls.through(p, (q[0] - p[0], q[1] - p[1]))

    @classmethod
    def vertical(cls, x):
        return cls(PI / 2, x)

    @classmethod
    def horizontal(cls, y):
        return cls(0.0, y)

    @property
    def normal(self):
        return (self.s, self.c)

    @property
    def direction(self):
        return (self.c, -self.s)

    @property
    def foot(self):
        return (self.rho * self.s, self.rho * self.c)

    def point(self, t):
        return (self.rho * self.s + t * self.c, self.rho * self.c - t * self.s)

    def param(self, p):
        return p[0] * self.c - p[1] * self.s

    def offset(self, p):
        """Signed distance of p from the line."""
        return p[0] * self.s + p[1] * self.c - self.rho

    def project(self, p):
        return self.point(self.param(p))

    def is_vertical(self):
        return abs(self.s - 1.0) < TOL

    def is_horizontal(self):
        return abs(self.s) < TOL

    def intersect(self, other):
        det = self.s * other.c - self.c * other.s
        if abs(det) < 1e-14:
            return None
        x = (self.rho * other.c - other.rho * self.c) / det
        y = (self.s * other.rho - other.s * self.rho) / det
        return (x, y)

    def same_as(self, other, tol=TOL):
        if abs(self.phi - other.phi) <= tol and abs(self.rho - other.rho) <= tol:
            return True
        # phi near 0 and phi near pi describe the same lines with rho negated
        if abs(abs(self.phi - other.phi) - PI) <= tol and abs(self.rho + other.rho) <= tol:
            return True
        return False

    def __eq__(self, other):
        if not isinstance(other, Line):
            return NotImplemented
        return self.same_as(other)

    __hash__ = None

    def __repr__(self):
        return f"Line(phi={self.phi!r}, rho={self.rho!r})"


@dataclass(frozen=True)
class BirthSite:
    """An interior birth (point, two lines) or a line birth (point, one line)."""

    point: tuple
    lines: tuple

    @property
    def interior(self):
        return len(self.lines) == 2


def _crossing_direction(d, u):
    """Direction of a line crossing a path with direction d, drawn so that the
    angle theta between them has density sin(theta)/2 on [0, pi]."""
    ct = 1.0 - 2.0 * u
    st = math.sqrt(max(0.0, 1.0 - ct * ct))
    return (d[0] * ct - d[1] * st, d[0] * st + d[1] * ct)


def _segment_extent(a, b):
    return min(a[0], b[0]), max(a[0], b[0]), min(a[1], b[1]), max(a[1], b[1])


class ActivityMeasure:
    """Base class. Concrete measures are immutable after construction."""

    def is_zero(self):
        return False

    def hitting_mass(self, body):
        raise NotImplementedError

    def segment_mass(self, a, b):
        raise NotImplementedError

    def sample_line(self, body, stream):
        """One line from M restricted to the lines hitting `body`, normalised."""
        raise NotImplementedError

    def next_update(self, stream, a, d, smax, scale=1.0):
        """First event of the crossing process along the ray a + s d, 0 < s <= smax.

        Events form a Poisson process in arc length with cumulative intensity
        scale * M([[a, a + s d]]). Returns (s, line through the event point)
        or None when no event falls in the range.
        """
        raise NotImplementedError

    def line_pair_through(self, x, stream):
        """Ordered pair of lines meeting at x, with density proportional to
        M(dl1) M(dl2) restricted to pairs crossing at x."""
        raise NotImplementedError

    def birth_intensity_total(self, domain):
        raise NotImplementedError

    def axis_ok(self, u):
        """True when lines perpendicular to the unit vector u carry no mass."""
        return True


def _check_body(body):
    if isinstance(body, tuple) and len(body) == 2 and all(isinstance(v, (int, float)) for v in body):
        return None
    bb = getattr(body, "bbox", None)
    if bb is None:
        raise DomainError(f"not a bounded convex body: {body!r}")
    box = bb()
    if not all(math.isfinite(v) for v in box):
        raise DomainError("unbounded body")
    return box


class Homogeneous(ActivityMeasure):
    def __init__(self, c=1.0):
        if c < 0 or not math.isfinite(c):
            raise ValueError("intensity must be finite and nonnegative")
        self.c = float(c)

    def __repr__(self):
        return f"Homogeneous(c={self.c})"

    def is_zero(self):
        return self.c == 0.0

    def hitting_mass(self, body):
        if _check_body(body) is None:
            return 0.0
        return self.c * body.perimeter()

    def segment_mass(self, a, b):
        return 2.0 * self.c * math.hypot(b[0] - a[0], b[1] - a[1])

    def sample_line(self, body, stream):
        center = getattr(body, "center", None)
        if center is not None:
            phi = PI * stream.uniform()
            line = Line(phi, 0.0)
            line.rho = center[0] * line.s + center[1] * line.c + body.radius * (2.0 * stream.uniform() - 1.0)
            return line
        wmax = body.diameter()
        while True:
            phi = PI * stream.uniform()
            lo, hi = body.support(phi)
            if stream.uniform() * wmax < hi - lo:
                return Line(phi, lo + (hi - lo) * stream.uniform())

    def next_update(self, stream, a, d, smax, scale=1.0):
        rate = 2.0 * self.c * scale
        if rate <= 0.0 or smax <= 0.0:
            return None
        s = stream.exponential() / rate
        if s > smax:
            return None
        q = (a[0] + s * d[0], a[1] + s * d[1])
        return s, Line.through(q, _crossing_direction(d, stream.uniform()))

    def line_pair_through(self, x, stream):
        phi1 = PI * stream.uniform()
        delta = math.acos(1.0 - 2.0 * stream.uniform())
        l1 = Line(phi1, 0.0)
        l2 = Line(phi1 + delta, 0.0)
        l1.rho = x[0] * l1.s + x[1] * l1.c
        l2.rho = x[0] * l2.s + x[1] * l2.c
        return l1, l2

    def density_at(self, phi, rho):
        return self.c

    def birth_intensity_total(self, domain):
        return self.c * self.c * PI * domain.area()


class OffsetMeasure:
    """Atomless measure on the real line given by a continuous nondecreasing
    piecewise-linear distribution function F, extrapolated linearly."""

    def __init__(self, knots):
        pts = [(float(x), float(f)) for x, f in knots]
        if len(pts) < 2:
            raise ValueError("need at least two knots")
        for (x0, f0), (x1, f1) in zip(pts, pts[1:]):
            if x1 < x0:
                raise ValueError("knot positions must be nondecreasing")
            if x1 == x0 and f1 != f0:
                raise ValueError("offset measure has an atom")
            if f1 < f0:
                raise ValueError("distribution function must be nondecreasing")
        xs, fs = [pts[0][0]], [pts[0][1]]
        for x, f in pts[1:]:
            if x > xs[-1]:
                xs.append(x)
                fs.append(f)
        if len(xs) < 2:
            raise ValueError("knots span no interval")
        self.xs = xs
        self.fs = fs
        self.slopes = [(fs[i + 1] - fs[i]) / (xs[i + 1] - xs[i]) for i in range(len(xs) - 1)]

    @classmethod
    def linear(cls, scale=1.0):
        return cls([(0.0, 0.0), (1.0, float(scale))])

    def is_identity(self):
        return len(self.slopes) == 1 and self.slopes[0] == 1.0 and self.fs[0] == self.xs[0]

    def _piece(self, x):
        i = bisect.bisect_right(self.xs, x) - 1
        return min(max(i, 0), len(self.slopes) - 1)

    def __call__(self, x):
        i = self._piece(x)
        return self.fs[i] + self.slopes[i] * (x - self.xs[i])

    def density(self, x):
        return self.slopes[self._piece(x)]

    def inverse(self, v):
        """sup{x : F(x) <= v}, finite wherever F is strictly increasing."""
        fs, xs, sl = self.fs, self.xs, self.slopes
        if v < fs[0]:
            if sl[0] <= 0:
                return -math.inf
            return xs[0] + (v - fs[0]) / sl[0]
        i = bisect.bisect_right(fs, v) - 1
        if i >= len(sl):
            if sl[-1] <= 0:
                return math.inf
            return xs[-1] + (v - fs[-1]) / sl[-1]
        while i + 1 < len(sl) and sl[i] == 0.0:
            i += 1
        if sl[i] == 0.0:
            return xs[i + 1]
        return xs[i] + (v - fs[i]) / sl[i]

    def mass(self, lo, hi):
        return self(hi) - self(lo)


class Rectangular(ActivityMeasure):
    """Mass only on vertical lines {x = h} (offset measure F_h) and horizontal
    lines {y = h} (offset measure F_v)."""

    def __init__(self, fh, fv):
        self.fh = fh
        self.fv = fv
        self._standard = fh.is_identity() and fv.is_identity()

    def __repr__(self):
        return "Rectangular(...)"

    def hitting_mass(self, body):
        box = _check_body(body)
        if box is None:
            return 0.0
        x0, y0, x1, y1 = box
        return self.fh.mass(x0, x1) + self.fv.mass(y0, y1)

    def segment_mass(self, a, b):
        return abs(self.fh(b[0]) - self.fh(a[0])) + abs(self.fv(b[1]) - self.fv(a[1]))

    def sample_line(self, body, stream):
        x0, y0, x1, y1 = body.bbox()
        fx0, fx1 = self.fh(x0), self.fh(x1)
        fy0, fy1 = self.fv(y0), self.fv(y1)
        mh, mv = fx1 - fx0, fy1 - fy0
        if stream.uniform() * (mh + mv) < mh:
            return Line.vertical(self.fh.inverse(fx0 + mh * stream.uniform()))
        return Line.horizontal(self.fv.inverse(fy0 + mv * stream.uniform()))

    def _cumulative(self, a, d, s):
        return abs(self.fh(a[0] + s * d[0]) - self.fh(a[0])) + abs(self.fv(a[1] + s * d[1]) - self.fv(a[1]))

    def next_update(self, stream, a, d, smax, scale=1.0):
        if scale <= 0.0 or smax <= 0.0:
            return None
        target = stream.exponential() / scale
        if self._standard:
            rate = abs(d[0]) + abs(d[1])
            s = target / rate
            if s > smax:
                return None
        else:
            if self._cumulative(a, d, smax) < target:
                return None
            lo, hi = 0.0, smax
            while hi - lo > 1e-10:
                mid = 0.5 * (lo + hi)
                if self._cumulative(a, d, mid) < target:
                    lo = mid
                else:
                    hi = mid
            s = 0.5 * (lo + hi)
        q = (a[0] + s * d[0], a[1] + s * d[1])
        wh = self.fh.density(q[0]) * abs(d[0])
        wv = self.fv.density(q[1]) * abs(d[1])
        if stream.uniform() * (wh + wv) < wh:
            return s, Line.vertical(q[0])
        return s, Line.horizontal(q[1])

    def line_pair_through(self, x, stream):
        v, h = Line.vertical(x[0]), Line.horizontal(x[1])
        return (v, h) if stream.uniform() < 0.5 else (h, v)

    def birth_intensity_total(self, domain):
        if self._standard:
            return domain.area()
        x0, y0, x1, y1 = domain.bbox()

        def inner(x):
            rng = domain.chord(Line.vertical(x))
            if rng is None:
                return 0.0
            ya, yb = sorted(Line.vertical(x).point(t)[1] for t in rng)
            return self.fh.density(x) * (self.fv(yb) - self.fv(ya))

        pts = [k for k in self.fh.xs if x0 < k < x1]
        val, _ = integrate.quad(inner, x0, x1, points=pts or None, limit=200, epsrel=1e-10)
        return val

    def axis_ok(self, u):
        return abs(u[0]) > 1e-6 and abs(u[1]) > 1e-6


class RectangularStandard(Rectangular):
    def __init__(self):
        super().__init__(OffsetMeasure.linear(1.0), OffsetMeasure.linear(1.0))

    def __repr__(self):
        return "RectangularStandard()"


class Density(ActivityMeasure):
    """M(dl) = m(phi, rho) dphi drho for a bounded nonnegative density m.

    m must accept numpy arrays. `bound` is an upper bound for m on the region
    |rho| <= rho_max; when omitted it is estimated on a grid with a safety
    factor. Sampling raises if a queried value exceeds the bound.
    """

    def __init__(self, m, bound=None, rho_max=10.0, pairs=10**6):
        self.m = m
        self.rho_max = float(rho_max)
        self.pairs = int(pairs)
        if bound is None:
            ph, rh = np.meshgrid(np.linspace(0, PI, 241), np.linspace(-rho_max, rho_max, 241))
            vals = np.asarray(m(ph, rh), dtype=float)
            if np.any(vals < 0) or not np.all(np.isfinite(vals)):
                raise ValueError("density must be finite and nonnegative")
            bound = 1.25 * float(vals.max()) + 1e-12
        self.bound = float(bound)
        self._cache = {}

    def __repr__(self):
        return "Density(...)"

    def _m(self, phi, rho):
        v = float(self.m(phi, rho))
        if v > self.bound * (1 + 1e-9):
            raise ValueError("density exceeds its declared bound")
        return v

    density_at = _m

    def _body_mass(self, body):
        def inner(phi):
            lo, hi = body.support(phi)
            if hi <= lo:
                return 0.0
            return integrate.quad(lambda r: self.m(phi, r), lo, hi, epsrel=1e-9, limit=200)[0]

        return integrate.quad(inner, 0.0, PI, epsrel=1e-8, limit=200)[0]

    def hitting_mass(self, body):
        if _check_body(body) is None:
            return 0.0
        key = ("mass", body)
        if key not in self._cache:
            self._cache[key] = self._body_mass(body)
        return self._cache[key]

    def segment_mass(self, a, b):
        from .geometry import Segment

        return self._body_mass(Segment(tuple(a), tuple(b)))

    def sample_line(self, body, stream):
        wmax = body.diameter()
        while True:
            phi = PI * stream.uniform()
            lo, hi = body.support(phi)
            rho = lo + (hi - lo) * stream.uniform()
            if stream.uniform() * self.bound * wmax < self._m(phi, rho) * (hi - lo):
                return Line(phi, rho)

    def next_update(self, stream, a, d, smax, scale=1.0):
        # thinning of a dominating process with rate 2 * bound * scale; the
        # crossing angle of the proposal already carries the |d.n| factor
        rate = 2.0 * self.bound * scale
        if rate <= 0.0 or smax <= 0.0:
            return None
        s = 0.0
        while True:
            s += stream.exponential() / rate
            if s > smax:
                return None
            q = (a[0] + s * d[0], a[1] + s * d[1])
            line = Line.through(q, _crossing_direction(d, stream.uniform()))
            if stream.uniform() * self.bound < self._m(line.phi, line.rho):
                return s, line

    def line_pair_through(self, x, stream):
        b2 = self.bound * self.bound
        while True:
            l1 = Line(PI * stream.uniform(), 0.0)
            l2 = Line(PI * stream.uniform(), 0.0)
            l1.rho = x[0] * l1.s + x[1] * l1.c
            l2.rho = x[0] * l2.s + x[1] * l2.c
            w = self._m(l1.phi, l1.rho) * self._m(l2.phi, l2.rho) * abs(math.sin(l1.phi - l2.phi))
            if stream.uniform() * b2 < w:
                return l1, l2

    def sample_lines_vec(self, body, n, gen):
        """n lines from M restricted to [[body]], vectorised; returns (phi, rho)."""
        wmax = body.diameter()
        out_phi, out_rho, have = [], [], 0
        while have < n:
            k = max(2 * (n - have), 1024)
            phi = PI * gen.random(k)
            lo, hi = body.support_vec(phi)
            rho = lo + (hi - lo) * gen.random(k)
            keep = gen.random(k) * self.bound * wmax < np.asarray(self.m(phi, rho)) * (hi - lo)
            out_phi.append(phi[keep])
            out_rho.append(rho[keep])
            have += int(keep.sum())
        return np.concatenate(out_phi)[:n], np.concatenate(out_rho)[:n]

    def birth_intensity_total(self, domain, rel_se=1e-3, gen=None):
        key = ("birth", domain)
        if key in self._cache:
            return self._cache[key]
        if gen is None:
            gen = np.random.Generator(np.random.Philox(20240601))
        total = self.hitting_mass(domain)
        hits = tries = 0
        while True:
            n = self.pairs
            p1, r1 = self.sample_lines_vec(domain, n, gen)
            p2, r2 = self.sample_lines_vec(domain, n, gen)
            det = np.sin(p1) * np.cos(p2) - np.cos(p1) * np.sin(p2)
            ok = np.abs(det) > 1e-14
            det = np.where(ok, det, 1.0)
            x = (r1 * np.cos(p2) - r2 * np.cos(p1)) / det
            y = (np.sin(p1) * r2 - np.sin(p2) * r1) / det
            inside = ok & domain.contains_vec(x, y)
            hits += int(inside.sum())
            tries += n
            p = hits / tries
            if p == 0.0 or math.sqrt((1 - p) / (p * tries)) <= rel_se or tries >= 50 * self.pairs:
                break
        val = 0.5 * total * total * p
        self._cache[key] = val
        return val


def hitting_mass(M, body):
    return M.hitting_mass(body)


def birth_intensity_total(M, domain):
    if not hasattr(domain, "area"):
        _check_body(domain)
        return 0.0
    return M.birth_intensity_total(domain)


def sample_poisson_lines(M, domain, rng):
    stream = as_stream(rng)
    if M.is_zero():
        return []
    n = stream.poisson(M.hitting_mass(domain))
    return [M.sample_line(domain, stream) for _ in range(n)]


def sample_birth_points(M, domain, stream, n):
    """n i.i.d. interior birth sites: ordered line pairs from the normalised
    M restricted to [[domain]], kept when they cross inside the domain."""
    out = []
    while len(out) < n:
        l1 = M.sample_line(domain, stream)
        l2 = M.sample_line(domain, stream)
        x = l1.intersect(l2)
        if x is not None and domain.contains(x):
            out.append(BirthSite(x, (l1, l2)))
    return out


def sample_interior_births(M, domain, rng, intensity_factor=1.0):
    stream = as_stream(rng)
    if M.is_zero():
        return []
    n = stream.poisson(intensity_factor * M.birth_intensity_total(domain))
    return sample_birth_points(M, domain, stream, n)


def sample_boundary_births(M, domain, rng, axis=(1.0, 0.0)):
    """Each Poisson line becomes a birth at its entry point in(l, D), where
    entry is the chord end with the smaller time coordinate p.axis."""
    stream = as_stream(rng)
    out = []
    for line in sample_poisson_lines(M, domain, stream):
        pts = domain.in_out(line, axis)
        if pts is not None:
            out.append(BirthSite(pts[0], (line,)))
    return out


def sample_update_along(M, seg, rng):
    """First directional update while traversing seg = (a, b); None if the
    segment is crossed without an update. Returns (arc position, new line)."""
    stream = as_stream(rng)
    a, b = seg
    length = math.hypot(b[0] - a[0], b[1] - a[1])
    if length <= 0.0:
        return None
    d = ((b[0] - a[0]) / length, (b[1] - a[1]) / length)
    return M.next_update(stream, a, d, length)


def standardize_rectangular(M):
    """Forward map (x, y) -> (F_h(x), F_v(y)) and its sup-based inverse."""
    if not isinstance(M, Rectangular):
        raise TypeError("standardisation needs a rectangular measure")

    def forward(p):
        return (M.fh(p[0]), M.fv(p[1]))

    def inverse(q):
        return (M.fh.inverse(q[0]), M.fv.inverse(q[1]))

    return forward, inverse
