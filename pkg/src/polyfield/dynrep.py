"""Exact sampler of the consistent field by a space-time particle system.

Time runs along a unit vector u. Particles are born on the domain boundary at
the entry points of Poisson lines and in the interior in pairs at the sites of
a Poisson process; they move along straight lines, turn at the events of a
crossing process driven by the activity measure, and die on the boundary or
when two of them meet. The traced trajectories form the field.
"""

import math

from ._kinetic import LineBirth, SweepClock, VertexBirth, grow
from .linespace import sample_boundary_births, sample_interior_births
from .rng import as_stream

# used when the measure puts mass on lines perpendicular to the default axis
GENERIC_ANGLE = 2.0 - (1.0 + math.sqrt(5.0)) / 2.0


def choose_axis(M, axis=None):
    if axis is not None:
        n = math.hypot(axis[0], axis[1])
        u = (axis[0] / n, axis[1] / n)
        if not M.axis_ok(u):
            raise ValueError("measure charges lines perpendicular to the time axis; rotate the axis")
        return u
    if M.axis_ok((1.0, 0.0)):
        return (1.0, 0.0)
    return (math.cos(GENERIC_ANGLE), math.sin(GENERIC_ANGLE))


def sweep_births(M, domain, stream, u):
    births = []
    for site in sample_boundary_births(M, domain, stream, axis=u):
        births.append(LineBirth(site.lines[0], site.point, (stream, stream)))
    for site in sample_interior_births(M, domain, stream):
        births.append(VertexBirth(site.point, site.lines, (stream, stream)))
    return births


def sample_field_dynrep(M, domain, rng, axis=None):
    stream = as_stream(rng)
    u = choose_axis(M, axis)
    return grow(M, domain, SweepClock(u), sweep_births(M, domain, stream, u))


def partition_function(M, domain):
    return math.exp(M.birth_intensity_total(domain))
