"""Shared test utilities."""

import math

import numpy as np


def within(est, target, se, k=3.0):
    return abs(est - target) <= k * se


class ScriptedTurns:
    """Crossing process that turns exactly where a prescribed path turns.

    Driving a growth with it replays a known trajectory: a walker on one of
    the pieces turns at the far end of that piece onto the adjoining piece,
    provided the adjoining piece leads to later reveal time and the vertex is
    not already covered by a live edge.
    """

    def __init__(self, pieces, live, tau):
        self.pieces = pieces
        self.live = live
        self.tau = tau

    def _covered(self, q):
        for g in self.live:
            lo, hi = sorted((g.line.param(g.a), g.line.param(g.b)))
            if abs(g.line.offset(q)) < 1e-9 and lo - 1e-9 <= g.line.param(q) <= hi + 1e-9:
                return True
        return False

    def next_update(self, stream, a, d, smax, scale=1.0):
        for e in self.pieces:
            for p, q in ((e.a, e.b), (e.b, e.a)):
                if math.hypot(p[0] - a[0], p[1] - a[1]) >= 1e-7 and abs(e.line.offset(a)) >= 1e-9:
                    continue
                dq = (q[0] - a[0]) * d[0] + (q[1] - a[1]) * d[1]
                if dq <= 1e-9 or abs((q[0] - a[0]) * d[1] - (q[1] - a[1]) * d[0]) > 1e-7:
                    continue
                for f in self.pieces:
                    if f.line.same_as(e.line):
                        continue
                    ends = (f.a, f.b)
                    if not any(math.hypot(r[0] - q[0], r[1] - q[1]) < 1e-7 for r in ends):
                        continue
                    far = f.b if math.hypot(f.a[0] - q[0], f.a[1] - q[1]) < 1e-7 else f.a
                    if self.tau(far) > self.tau(q):
                        return None if self._covered(q) else (dq, f.line)
                return None
        return None


def ks_critical(n, m, alpha=0.001):
    c = math.sqrt(-0.5 * math.log(alpha / 2))
    return c * math.sqrt((n + m) / (n * m))


def batch_se(values, batches=20):
    v = np.asarray(values, float)
    means = np.array([c.mean() for c in np.array_split(v, batches)])
    return float(means.std(ddof=1) / math.sqrt(batches))


# criterion number -> (passed, one-line detail); printed after the run
ACCEPTANCE = {}


def record(number, passed, detail):
    ACCEPTANCE[number] = (bool(passed), detail)
    return bool(passed)
