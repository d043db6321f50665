"""Event-driven growth engine shared by the sweep and generalised samplers.

A growth family is described by its reveal time tau(p): the family at time t
is {p in closure(D) : tau(p) <= t}. Every edge grows from its start point in
the direction in which tau increases along its line, so the growing tips live
on the moving front and two tips meet exactly when both reach the crossing
point of their lines.
"""

import heapq
import math

from .geometry import Edge, PolygonalConfig

EPS = 1e-12

_BIRTH, _END, _MEET = 0, 1, 2


class _Tip:
    __slots__ = ("id", "line", "a", "d", "send", "upd", "reader", "group", "alive", "tau_end")

    def __init__(self, id, line, a, d, send, upd, reader, group):
        self.id = id
        self.line = line
        self.a = a
        self.d = d
        self.send = send
        self.upd = upd
        self.reader = reader
        self.group = group
        self.alive = True


class LineBirth:
    """A line revealed at its anchor; it grows in both directions along the
    chord (one of them may be empty). `readers` supplies the randomness of
    the two directions."""

    __slots__ = ("line", "anchor", "readers")

    def __init__(self, line, anchor, readers):
        self.line = line
        self.anchor = anchor
        self.readers = readers


class VertexBirth:
    __slots__ = ("point", "lines", "readers")

    def __init__(self, point, lines, readers):
        self.point = point
        self.lines = lines
        self.readers = readers


def forward_range(domain, family, line, p):
    """Unit forward direction along `line` at p and the distance to the
    chord end in that direction."""
    ch = domain.chord(line)
    t = line.param(p)
    sgn = family.forward_sign(line, p)
    if ch is None:
        return (line.c * sgn, -line.s * sgn), 0.0
    if sgn > 0:
        return (line.c, -line.s), max(ch[1] - t, 0.0)
    return (-line.c, line.s), max(t - ch[0], 0.0)


def grow(M, domain, family, births):
    """Reveal the field generated by `births` (LineBirth/VertexBirth items)."""
    tau = family.tau
    heap = []
    seq = 0
    for b in births:
        p = b.anchor if isinstance(b, LineBirth) else b.point
        heap.append((tau(p), _BIRTH, seq, b))
        seq += 1
    heapq.heapify(heap)
    active = {}
    pieces = []
    next_id = [0]

    def start(line, a, d, send, reader, group, now):
        nonlocal seq
        if send <= 1e-12:
            return
        upd = M.next_update(reader, a, d, send)
        tip = _Tip(next_id[0], line, a, d, send, upd, reader, group)
        next_id[0] += 1
        s_end = upd[0] if upd is not None else send
        end = (a[0] + s_end * d[0], a[1] + s_end * d[1])
        tip.tau_end = tau(end)
        heapq.heappush(heap, (tip.tau_end, _END, seq, tip))
        seq += 1
        ax, ay = a
        dx, dy = d
        for other in active.values():
            x = line.intersect(other.line)
            if x is None:
                continue
            s1 = (x[0] - ax) * dx + (x[1] - ay) * dy
            if s1 <= 1e-10 or s1 > s_end:
                continue
            s2 = (x[0] - other.a[0]) * other.d[0] + (x[1] - other.a[1]) * other.d[1]
            o_end = other.upd[0] if other.upd is not None else other.send
            if s2 <= 1e-10 or s2 > o_end:
                continue
            tx = tau(x)
            if tx < now - 1e-12:
                continue
            heapq.heappush(heap, (tx, _MEET, seq, (tip, other, x)))
            seq += 1
        active[tip.id] = tip

    while heap:
        now, kind, _, item = heapq.heappop(heap)
        if kind == _BIRTH:
            if isinstance(item, LineBirth):
                line, A = item.line, item.anchor
                ch = domain.chord(line)
                if ch is None:
                    continue
                t = line.param(A)
                group = ("g", id(item))
                start(line, A, (line.c, -line.s), ch[1] - t, item.readers[0], group, now)
                start(line, A, (-line.c, line.s), t - ch[0], item.readers[1], group, now)
            else:
                for line, reader in zip(item.lines, item.readers):
                    d, send = forward_range(domain, family, line, item.point)
                    start(line, item.point, d, send, reader, None, now)
        elif kind == _END:
            tip = item
            if not tip.alive:
                continue
            tip.alive = False
            del active[tip.id]
            if tip.upd is None:
                end = (tip.a[0] + tip.send * tip.d[0], tip.a[1] + tip.send * tip.d[1])
                pieces.append((tip.a, end, tip.line, tip.group))
            else:
                s, newline = tip.upd
                q = (tip.a[0] + s * tip.d[0], tip.a[1] + s * tip.d[1])
                pieces.append((tip.a, q, tip.line, tip.group))
                d, send = forward_range(domain, family, newline, q)
                start(newline, q, d, send, tip.reader, None, now)
        else:
            t1, t2, x = item
            if not (t1.alive and t2.alive):
                continue
            for tip in (t1, t2):
                tip.alive = False
                del active[tip.id]
                pieces.append((tip.a, x, tip.line, tip.group))
    return PolygonalConfig(_assemble(pieces))


def _assemble(pieces):
    edges = []
    groups = {}
    for a, b, line, group in pieces:
        if group is None:
            edges.append(Edge(a, b, line))
        else:
            groups.setdefault(group, []).append((a, b, line))
    for parts in groups.values():
        if len(parts) == 1:
            a, b, line = parts[0]
            edges.append(Edge(a, b, line))
        else:
            (a1, b1, line), (a2, b2, _) = parts
            edges.append(Edge(b1, b2, line))
    return edges


class SweepClock:
    """Reveal time p.u for a unit vector u."""

    def __init__(self, u):
        n = math.hypot(u[0], u[1])
        self.u = (u[0] / n, u[1] / n)

    def tau(self, p):
        return p[0] * self.u[0] + p[1] * self.u[1]

    def forward_sign(self, line, p):
        return 1.0 if line.c * self.u[0] - line.s * self.u[1] > 0 else -1.0
