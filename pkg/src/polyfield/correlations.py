"""Edge-correlation combinatorics and Monte-Carlo estimators.

A probe collection is a list of (line, point) pairs with each point on its
line. Its precedence graph splits every line at its point into two half-lines
directed away from it; vertices are the generating points x_i and the
pairwise crossings y_ij. Configurations compatible with a collection carry
one segment per line containing x_i, with endpoints at crossings or at
infinity, meeting only at shared endpoints.
"""

import graphlib
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import LabelField, label_at
from .linespace import TOL, Homogeneous, Line, Rectangular

GENERAL_POSITION_SEP = 1e-6


class DegenerateCollection(ValueError):
    pass


@dataclass
class ProbeCollection:
    items: list
    general_position: bool = field(init=False)

    def __post_init__(self):
        self.items = [(l, (float(x[0]), float(x[1]))) for l, x in self.items]
        for l, x in self.items:
            if abs(l.offset(x)) > 1e-7:
                raise ValueError(f"probe point {x} is not on its line {l}")
        self.general_position = self._check_general()

    def _check_general(self):
        for (i, (li, xi)), (j, (lj, xj)) in itertools.combinations(enumerate(self.items), 2):
            if li.same_as(lj, GENERAL_POSITION_SEP):
                return False
            if abs(lj.offset(xi)) <= GENERAL_POSITION_SEP or abs(li.offset(xj)) <= GENERAL_POSITION_SEP:
                return False
        return True

    def __len__(self):
        return len(self.items)

    def sub(self, indices):
        return ProbeCollection([self.items[i] for i in indices])

    def scaled(self, alpha, center=(0.0, 0.0)):
        """Collection dilated by alpha about `center`."""
        out = []
        for l, x in self.items:
            y = (center[0] + alpha * (x[0] - center[0]), center[1] + alpha * (x[1] - center[1]))
            out.append((Line.through(y, l.direction), y))
        return ProbeCollection(out)

    def lines(self):
        return [l for l, _ in self.items]


def _side(line, p):
    return 1 if line.offset(p) > 0 else -1


class PrecedenceGraph:
    """Directed graph on ("x", i) and ("y", i, j) nodes (i < j)."""

    def __init__(self, coll):
        self.coll = coll
        self.points = {}
        self.edges = set()
        self.trap_edges = set()
        # per line: list of (param, node) on each half-line, ordered away from x_i
        self.rays = {}

    @property
    def nodes(self):
        return list(self.points)

    def all_edges(self):
        return self.edges | self.trap_edges

    def successors(self, v):
        return [b for a, b in self.all_edges() if a == v]

    def direct_predecessors(self, v):
        """Predecessors along the lines (trap edges excluded)."""
        return [a for a, b in self.edges if b == v]

    def _sorter(self):
        ts = graphlib.TopologicalSorter()
        for v in sorted(self.points):
            ts.add(v)
        for a, b in sorted(self.all_edges()):
            ts.add(b, a)
        return ts

    def topological_order(self):
        return list(self._sorter().static_order())


def build_precedence_graph(coll, augmented=False):
    if not isinstance(coll, ProbeCollection):
        coll = ProbeCollection(list(coll))
    if not coll.general_position:
        raise DegenerateCollection("collection is not in general position")
    g = PrecedenceGraph(coll)
    items = coll.items
    k = len(items)
    for i, (l, x) in enumerate(items):
        g.points[("x", i)] = x
    on_line = {i: [] for i in range(k)}
    for i, j in itertools.combinations(range(k), 2):
        y = items[i][0].intersect(items[j][0])
        if y is None:
            continue
        node = ("y", i, j)
        g.points[node] = y
        on_line[i].append(node)
        on_line[j].append(node)
    for i, (l, x) in enumerate(items):
        tx = l.param(x)
        fwd, back = [], []
        for node in on_line[i]:
            t = l.param(g.points[node]) - tx
            (fwd if t > 0 else back).append((abs(t), node))
        fwd.sort()
        back.sort()
        g.rays[i] = (fwd, back)
        for ray in (fwd, back):
            prev = ("x", i)
            for _, node in ray:
                g.edges.add((prev, node))
                prev = node
    if augmented:
        for i, j in itertools.combinations(range(k), 2):
            node = ("y", i, j)
            if node not in g.points:
                continue
            li, xi = items[i]
            lj, xj = items[j]
            si, sj = -_side(li, xj), -_side(lj, xi)
            for m in range(k):
                if m in (i, j):
                    continue
                xm = items[m][1]
                if _side(li, xm) == si and _side(lj, xm) == sj:
                    g.trap_edges.add((node, ("x", m)))
    return g


def find_cycle(graph):
    """A list of nodes forming a directed cycle, or None."""
    try:
        graph._sorter().prepare()
    except graphlib.CycleError as exc:
        cyc = list(exc.args[1])
        return cyc[:-1] if len(cyc) > 1 and cyc[0] == cyc[-1] else cyc
    return None


def is_acyclic(graph):
    return find_cycle(graph) is None


# -- configurations compatible with a collection ---------------------------------
#
# A configuration is given per line by (lo, hi): the crossing node ending the
# segment on the back/forward half-line, or None for an unbounded end.

_ALLOWED = {("end", "end"), ("in", "out"), ("out", "in"), ("out", "out")}


def _status(graph, i, choice, node):
    fwd, back = graph.rays[i]
    lo, hi = choice
    for ray, end in ((fwd, hi), (back, lo)):
        for pos, (_, v) in enumerate(ray):
            if v != node:
                continue
            if end is None:
                return "in"
            epos = next(p for p, (_, w) in enumerate(ray) if w == end)
            if pos < epos:
                return "in"
            return "end" if pos == epos else "out"
    raise KeyError(node)


def config_is_valid(graph, choices):
    for node in graph.points:
        if node[0] != "y":
            continue
        _, i, j = node
        if (_status(graph, i, choices[i], node), _status(graph, j, choices[j], node)) not in _ALLOWED:
            return False
    return True


def incremental_config(coll):
    """The unique compatible configuration of an acyclic collection, grown
    along the structural order; None if the precedence graph has a cycle."""
    g = coll if isinstance(coll, PrecedenceGraph) else build_precedence_graph(coll)
    if not is_acyclic(g):
        return None
    k = len(g.coll)
    ends = {i: [None, None] for i in range(k)}  # back, forward

    def half(i, node):
        fwd, _ = g.rays[i]
        return 1 if any(v == node for _, v in fwd) else 0

    for node in g.topological_order():
        if node[0] != "y":
            continue
        _, i, j = node
        hi_, hj = half(i, node), half(j, node)
        if ends[i][hi_] is None and ends[j][hj] is None:
            ends[i][hi_] = node
            ends[j][hj] = node
    return {i: (ends[i][0], ends[i][1]) for i in range(k)}


def brute_force_count(coll, max_lines=7):
    g = coll if isinstance(coll, PrecedenceGraph) else build_precedence_graph(coll)
    k = len(g.coll)
    if k > max_lines:
        raise ValueError(f"brute force limited to {max_lines} lines, got {k}")
    options = []
    status = []
    for i in range(k):
        fwd, back = g.rays[i]
        opts = [(lo, hi) for lo in [None] + [v for _, v in back] for hi in [None] + [v for _, v in fwd]]
        options.append(opts)
        nodes = [v for _, v in fwd + back]
        status.append([{v: _status(g, i, o, v) for v in nodes} for o in opts])
    pairs = {}
    for node in g.points:
        if node[0] == "y":
            _, i, j = node
            pairs.setdefault(j, []).append((i, node))
    chosen = [None] * k

    def rec(i):
        if i == k:
            return 1
        total = 0
        for oi, st in enumerate(status[i]):
            ok = True
            for p, node in pairs.get(i, ()):
                if (status[p][chosen[p]][node], st[node]) not in _ALLOWED:
                    ok = False
                    break
            if ok:
                chosen[i] = oi
                total += rec(i + 1)
        return total

    return rec(0)


def count_configs(coll):
    g = coll if isinstance(coll, PrecedenceGraph) else build_precedence_graph(coll)
    choices = incremental_config(g)
    if choices is not None and config_is_valid(g, choices):
        return 1
    return brute_force_count(g)


def random_probe_collection(k, stream, rectangular=False, box=1.0, max_tries=1000):
    """k probes with points uniform in [0, box]^2 and uniform directions (or
    axis-parallel ones), redrawn until in general position."""
    for _ in range(max_tries):
        items = []
        for _ in range(k):
            x = (box * stream.uniform(), box * stream.uniform())
            if rectangular:
                l = Line.vertical(x[0]) if stream.uniform() < 0.5 else Line.horizontal(x[1])
            else:
                th = math.pi * stream.uniform()
                l = Line.through(x, (math.cos(th), math.sin(th)))
            items.append((l, x))
        coll = ProbeCollection(items)
        if coll.general_position:
            return coll
    raise RuntimeError("could not draw a collection in general position")


def pinwheel(vertices, overshoot=0.25):
    """Probe collection whose precedence graph is the directed cycle through
    the given polygon vertices: line i runs through vertices i and i+1, and
    its point sits just before vertex i."""
    m = len(vertices)
    items = []
    for i in range(m):
        a, b = vertices[i], vertices[(i + 1) % m]
        x = (a[0] - overshoot * (b[0] - a[0]), a[1] - overshoot * (b[1] - a[1]))
        items.append((Line.from_points(a, b), x))
    return ProbeCollection(items)


# -- Monte-Carlo estimators ------------------------------------------------------


def _angle_gap(p, q):
    d = abs(p - q) % math.pi
    return min(d, math.pi - d)


def probe_hits(config, line, x, tube_eps, angle_eps):
    """Indices of edges on a line within the (tube_eps, angle_eps) window of
    `line` near x, whose projection of x falls inside the edge."""
    out = []
    for k, e in enumerate(config.edges):
        if _angle_gap(e.line.phi, line.phi) > angle_eps:
            continue
        if abs(e.line.offset(x)) > tube_eps:
            continue
        t = e.line.param(x)
        ta, tb = e.line.param(e.a), e.line.param(e.b)
        if min(ta, tb) <= t <= max(ta, tb):
            out.append(k)
    return out


def _groups(coll):
    groups = []
    for idx, (l, _) in enumerate(coll.items):
        for g in groups:
            if coll.items[g[0]][0].same_as(l, 1e-9):
                g.append(idx)
                break
        else:
            groups.append([idx])
    return groups


def _batch_se(z, batches):
    z = np.asarray(z, dtype=float)
    n = len(z)
    if n < 2:
        return float("inf")
    b = max(2, min(batches, n))
    means = np.array([chunk.mean() for chunk in np.array_split(z, b)])
    return float(means.std(ddof=1) / math.sqrt(b))


@dataclass
class EdgeCorrelation:
    joint: float
    product: float
    ratio: float
    se: float
    joint_se: float
    marginals: list
    n: int


def edge_indicators(samples, coll, tube_eps, angle_eps):
    """Per-sample indicators: joint event, and one marginal per group of
    colinear probes (an edge through every probe of the group)."""
    groups = _groups(coll)
    joint = np.zeros(len(samples))
    marg = np.zeros((len(samples), len(groups)))
    for s, cfg in enumerate(samples):
        ok = True
        for gi, g in enumerate(groups):
            first = set(probe_hits(cfg, *coll.items[g[0]], tube_eps, angle_eps))
            marg[s, gi] = 1.0 if first else 0.0
            common = first
            for idx in g[1:]:
                common &= set(probe_hits(cfg, *coll.items[idx], tube_eps, angle_eps))
            if not common:
                ok = False
        joint[s] = 1.0 if ok else 0.0
    return joint, marg


def estimate_edge_correlation(samples, probes, tube_eps, angle_eps, batches=20):
    """Joint probability that every probe is passed by a field edge in its
    window, the product of one single-probe marginal per distinct line, and
    their ratio with a delta-method standard error from batch means.

    Probes sharing a line must be passed by one common edge, so for a
    colinear pair the ratio estimates the survival of the edge between them.
    """
    coll = probes if isinstance(probes, ProbeCollection) else ProbeCollection(list(probes))
    n = len(samples)
    if n < 2 * batches:
        raise ValueError(f"need at least {2 * batches} samples, got {n}")
    joint, marg = edge_indicators(samples, coll, tube_eps, angle_eps)
    jm = joint.mean()
    mm = marg.mean(axis=0)
    prod = float(np.prod(mm))
    if prod == 0.0:
        return EdgeCorrelation(jm, 0.0, float("nan"), float("inf"), _batch_se(joint, batches), mm.tolist(), n)
    ratio = jm / prod
    z = joint / prod - ratio * (marg / mm).sum(axis=1)
    return EdgeCorrelation(jm, prod, ratio, _batch_se(z, batches), _batch_se(joint, batches), mm.tolist(), n)


# -- exact estimator through the Gibbs representation -------------------------------


def _line_breaks(lines, domain):
    """Per line: chord ends and crossing nodes inside the domain, as sorted
    (param, node id) lists; node ids are pairs (i, j), chord ends None."""
    breaks = []
    for i, l in enumerate(lines):
        ch = domain.chord(l)
        if ch is None:
            return None
        pts = [(ch[0], None), (ch[1], None)]
        for j, m in enumerate(lines):
            if j == i:
                continue
            y = l.intersect(m)
            if y is not None and domain.contains(y, -1e-12):
                pts.append((l.param(y), (min(i, j), max(i, j))))
        pts.sort()
        breaks.append(pts)
    return breaks


def configuration_weight(lines, domain, M, required=None):
    """Sum of exp(-L(gamma)) over admissible configurations in the domain
    that carry exactly one edge on each line, with the edge on line i
    covering every point in required[i].

    Edge endpoints sit at chord ends or at crossings where the other line's
    edge ends too; a crossing may also be passed by at most one of the two
    edges.
    """
    n = len(lines)
    if n == 0:
        return 1.0
    breaks = _line_breaks(lines, domain)
    if breaks is None:
        return 0.0
    required = required or {}
    options = []
    for i, pts in enumerate(breaks):
        need = [lines[i].param(x) for x in required.get(i, ())]
        opts = []
        for a in range(len(pts)):
            for b in range(a + 1, len(pts)):
                ta, tb = pts[a][0], pts[b][0]
                if tb - ta <= 1e-12 or any(not (ta <= t <= tb) for t in need):
                    continue
                status = {}
                for k, (t, node) in enumerate(pts):
                    if node is None:
                        continue
                    status[node] = "end" if k in (a, b) else ("in" if a < k < b else "out")
                pa, pb = lines[i].point(ta), lines[i].point(tb)
                opts.append((status, math.exp(-M.segment_mass(pa, pb))))
        if not opts:
            return 0.0
        options.append(opts)
    allowed = {("end", "end"), ("in", "out"), ("out", "in"), ("out", "out")}
    order = sorted(range(n), key=lambda i: len(options[i]))
    chosen = {}

    def consistent(i, status):
        for node, st in status.items():
            j = node[0] if node[1] == i else node[1]
            if j in chosen:
                other = chosen[j][node]
                if (st, other) not in allowed:
                    return False
        return True

    def rec(pos):
        if pos == n:
            return 1.0
        i = order[pos]
        total = 0.0
        for status, w in options[i]:
            if consistent(i, status):
                chosen[i] = status
                total += w * rec(pos + 1)
                del chosen[i]
        return total

    return rec(0)


@dataclass
class PalmCorrelation:
    ratio: float
    se: float
    n: int


def palm_edge_correlation(M, domain, probes, n, rng):
    """Exact-in-expectation estimate of the edge correlation of the
    consistent field divided by the product of line activities.

    Adding the probe lines to a Poisson line sample (Mecke formula) turns
    the correlation into E W(lines) / Z, where W sums exp(-L) over the
    configurations through every probe and Z = exp(<<M>>(domain)). Probes
    sharing a line count that line once. The domain should be a small
    convex set containing the probes.
    """
    from .linespace import sample_poisson_lines
    from .rng import as_stream

    coll = probes if isinstance(probes, ProbeCollection) else ProbeCollection(list(probes))
    stream = as_stream(rng)
    groups = _groups(coll)
    plines = [coll.items[g[0]][0] for g in groups]
    req = {gi: [coll.items[k][1] for k in g] for gi, g in enumerate(groups)}
    for pts in req.values():
        for x in pts:
            if not domain.contains(x):
                raise DegenerateCollection("probe point outside the estimation domain")
    Z = math.exp(M.birth_intensity_total(domain))
    vals = np.empty(n)
    for s in range(n):
        lam = sample_poisson_lines(M, domain, stream)
        vals[s] = configuration_weight(plines + lam, domain, M, req) / Z
    se = float(vals.std(ddof=1) / math.sqrt(n)) if n > 1 else float("inf")
    return PalmCorrelation(float(vals.mean()), se, n)


@dataclass
class LineWindow:
    """Lines with phi in [phi_lo, phi_hi] and rho in [rho_lo, rho_hi]."""

    phi_lo: float
    phi_hi: float
    rho_lo: float
    rho_hi: float

    def contains(self, line):
        return self.phi_lo <= line.phi <= self.phi_hi and self.rho_lo <= line.rho <= self.rho_hi


@dataclass
class DirectionalTable:
    mean: np.ndarray
    cov: np.ndarray
    mean_se: np.ndarray
    cov_se: np.ndarray
    n: int


def directional_lengths(config, windows):
    out = np.zeros(len(windows))
    for e in config.edges:
        for w, win in enumerate(windows):
            if win.contains(e.line):
                out[w] += e.length()
    return out


def estimate_directional_measure(samples, windows, batches=20):
    """Empirical first and second moments of the edge length carried by
    lines in each window."""
    k = len(windows)
    if not samples:
        z = np.zeros(k)
        return DirectionalTable(z, np.zeros((k, k)), z.copy(), np.zeros((k, k)), 0)
    S = np.array([directional_lengths(cfg, windows) for cfg in samples])
    n = len(samples)
    mean = S.mean(axis=0)
    C = S - mean
    cov = C.T @ C / max(n - 1, 1)
    mean_se = np.array([_batch_se(S[:, a], batches) for a in range(k)])
    cov_se = np.array([[_batch_se(C[:, a] * C[:, b], batches) for b in range(k)] for a in range(k)])
    return DirectionalTable(mean, cov, mean_se, cov_se, n)


def _chord_integral(fn, M, domain, window):
    """Integral of fn(line, chord) over the window against M."""
    from scipy import integrate

    if isinstance(M, Rectangular):
        total = 0.0
        if window.phi_lo <= math.pi / 2 <= window.phi_hi:
            def vert(r):
                l = Line.vertical(r)
                ch = domain.chord(l)
                return 0.0 if ch is None else fn(l, ch, "v") * M.fh.density(r)
            total += integrate.quad(vert, window.rho_lo, window.rho_hi, limit=200)[0]
        if window.phi_lo <= 0.0 <= window.phi_hi:
            def horiz(r):
                l = Line.horizontal(r)
                ch = domain.chord(l)
                return 0.0 if ch is None else fn(l, ch, "h") * M.fv.density(r)
            total += integrate.quad(horiz, window.rho_lo, window.rho_hi, limit=200)[0]
        return total

    def inner(rho, phi):
        l = Line(phi, rho)
        ch = domain.chord(l)
        return 0.0 if ch is None else fn(l, ch, None) * M.density_at(phi, rho)

    return integrate.dblquad(inner, window.phi_lo, window.phi_hi, window.rho_lo, window.rho_hi,
                             epsabs=1e-9, epsrel=1e-7)[0]


def directional_first_order(M, domain, window):
    """Expected edge length on lines in the window: the integral of the
    chord length against M."""
    return _chord_integral(lambda l, ch, kind: ch[1] - ch[0], M, domain, window)


def _decay_double_integral(a, length):
    # int_0^L int_0^L exp(-a|t-u|) dt du
    if a == 0:
        return length * length
    return 2.0 * (length / a - (1.0 - math.exp(-a * length)) / (a * a))


def directional_second_order(M, domain, window):
    """Diagonal second moment of the windowed edge length: chord pairs
    weighted by the probability that one edge covers both points."""
    from scipy import integrate

    if isinstance(M, Homogeneous):
        return _chord_integral(lambda l, ch, kind: _decay_double_integral(4.0 * M.c, ch[1] - ch[0]),
                               M, domain, window)
    if isinstance(M, Rectangular):
        def fn(l, ch, kind):
            F = M.fv if kind == "v" else M.fh
            a, b = ch
            if kind == "v":
                lo, hi = l.point(a)[1], l.point(b)[1]
            else:
                lo, hi = l.point(a)[0], l.point(b)[0]
            lo, hi = min(lo, hi), max(lo, hi)
            if F.is_identity():
                return _decay_double_integral(2.0, hi - lo)
            return integrate.dblquad(lambda u, t: math.exp(-2.0 * abs(F(u) - F(t))), lo, hi, lo, hi)[0]
        return _chord_integral(fn, M, domain, window)
    raise NotImplementedError("second-order target implemented for homogeneous and rectangular measures")


def label_correlation_target(M, x, y):
    """exp(-2 M([[xy]])): the parity moment of the Poisson number of lines
    separating x from y."""
    return math.exp(-2.0 * M.segment_mass(x, y))


def estimate_label_correlation(samples, x, y, reference_point=None, rng=None, batches=20):
    """Mean of label(x) * label(y) with an independent random reference sign
    per sample. Returns (estimate, standard error)."""
    ref = reference_point if reference_point is not None else x
    vals = np.empty(len(samples))
    for s, cfg in enumerate(samples):
        sign = 1 if rng is None else int(rng.sign())
        lf = LabelField(cfg, sign, ref)
        vals[s] = label_at(lf, x) * label_at(lf, y)
    if len(vals) == 0:
        return float("nan"), float("inf")
    return float(vals.mean()), _batch_se(vals, batches)


@dataclass
class DecayProfile:
    separations: list
    ratios: list
    ses: list
    deviations: list
    slope: float

    @property
    def monotone(self):
        return all(a > b for a, b in zip(self.deviations, self.deviations[1:]))


def decay_profile(samples, template, separations, tube_eps, angle_eps=1e-3, batches=20):
    """Dependence between a head probe and the rest of a collection as the
    head moves away.

    template(s) returns (head, rest): a (line, point) probe and a
    ProbeCollection. For each separation the ratio
    P(head and rest) / (P(head) P(rest)) is estimated; the deviation is
    |ratio - 1| and the slope is fitted to log deviation against s.
    """
    n = len(samples)
    if n < 2 * batches:
        raise ValueError(f"need at least {2 * batches} samples, got {n}")
    ratios, ses, devs = [], [], []
    rest_cache = {}
    for s in separations:
        (hl, hx), rest = template(s)
        key = tuple((l.phi, l.rho, x) for l, x in rest.items)
        if key not in rest_cache:
            rest_cache[key] = edge_indicators(samples, rest, tube_eps, angle_eps)[0]
        r = rest_cache[key]
        h = np.array([1.0 if probe_hits(cfg, hl, hx, tube_eps, angle_eps) else 0.0 for cfg in samples])
        ph, pr = h.mean(), r.mean()
        if ph == 0 or pr == 0:
            ratios.append(float("nan"))
            ses.append(float("inf"))
            devs.append(float("nan"))
            continue
        ratio = (h * r).mean() / (ph * pr)
        z = h * r / (ph * pr) - ratio * (h / ph + r / pr)
        ratios.append(float(ratio))
        ses.append(_batch_se(z, batches))
        devs.append(abs(ratio - 1.0))
    logs = np.log(np.maximum(devs, 1e-300))
    slope = float(np.polyfit(np.asarray(separations, float), logs, 1)[0]) if len(separations) > 1 else float("nan")
    return DecayProfile(list(separations), ratios, ses, devs, slope)


def stacked_template(x_mid=0.5, y_rest=0.4, half_width=0.2):
    """Head probe on the vertical line x = x_mid at height y_rest + s, above
    two probes on the horizontal line y = y_rest straddling it. The
    horizontal edge joining the pair blocks the vertical edge, so the two
    events repel at short range."""
    h = Line.horizontal(y_rest)
    rest = ProbeCollection([(h, (x_mid - half_width, y_rest)), (h, (x_mid + half_width, y_rest))])
    v = Line.vertical(x_mid)
    return lambda s: ((v, (x_mid, y_rest + s)), rest)


def crossing_counts(samples, a, b):
    """Number of edges crossing the segment ab in each sample."""
    from .geometry import crossings

    return np.array([crossings(cfg, a, b) for cfg in samples])

