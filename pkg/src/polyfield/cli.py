"""Command-line interface: ``polyfield sample|estimate|verify|render``.

Runs are described by a JSON config (validated with jsonschema); command-line
flags override config fields and POLYFIELD_SEED overrides the config seed.
Exit codes: 0 success, 1 a check did not pass, 2 bad config, 3 the perfect
sampler diverged.
"""

import argparse
import copy
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import jsonschema
import numpy as np

from . import contour, correlations, dloop
from .dynrep import sample_field_dynrep
from .gendyn import DiskGrowth, Sweep, sample_field_gendyn
from .geometry import Disk, Polygon, PolygonalConfig, read_csv, render_svg, write_csv
from .linespace import DomainError, Homogeneous, Line, OffsetMeasure, Rectangular, RectangularStandard
from .rng import Stream, make_generator

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_DIVERGED = 0, 1, 2, 3

_point = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "measure": {
            "type": "object",
            "required": ["type"],
            "properties": {
                "type": {"enum": ["homogeneous", "rectangular-standard", "rectangular"]},
                "c": {"type": "number", "minimum": 0},
                "fh": {"type": "array", "items": _point, "minItems": 2},
                "fv": {"type": "array", "items": _point, "minItems": 2},
            },
        },
        "domain": {
            "type": "object",
            "required": ["type"],
            "properties": {
                "type": {"enum": ["square", "rectangle", "disk", "polygon"]},
                "side": {"type": "number", "exclusiveMinimum": 0},
                "origin": _point,
                "bounds": {"type": "array", "items": {"type": "number"}, "minItems": 4, "maxItems": 4},
                "center": _point,
                "radius": {"type": "number", "exclusiveMinimum": 0},
                "vertices": {"type": "array", "items": _point, "minItems": 3},
            },
        },
        "method": {"enum": ["dynrep", "gendyn", "mcmc", "cbd", "perfect"]},
        "params": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "beta": {"type": "number"},
                "family": {"enum": ["sweep", "disk", "rect-staged"]},
                "direction": _point,
                "center": _point,
                "variant": {"enum": ["dl", "gendl", "defdl"]},
                "rule": {"enum": ["away-from-anchor", "vertical-line"]},
                "x0": {"type": "number"},
                "smax": {"type": "number", "minimum": 0},
                "thin": {"type": "number", "exclusiveMinimum": 0},
                "clan_cap": {"type": "integer", "minimum": 1},
            },
        },
        "seed": {"type": "integer", "minimum": 0},
        "replicas": {"type": "integer", "minimum": 1},
        "estimate": {"type": "object"},
        "verify": {"type": "object"},
    },
}

DEFAULTS = {
    "measure": {"type": "rectangular-standard"},
    "domain": {"type": "square", "side": 1.0},
    "method": "dynrep",
    "params": {},
    "seed": 0,
    "replicas": 1,
}

PARAM_DEFAULTS = {"beta": 1.0, "family": "disk", "variant": "dl", "rule": "away-from-anchor",
                  "smax": 20.0, "thin": 1.0, "clan_cap": 10**5}


class ConfigError(Exception):
    pass


class _Diverged(Exception):
    pass


@dataclass
class RunConfig:
    raw: dict
    M: object
    domain: object
    method: str
    params: dict
    seed: int
    replicas: int

    def resolved(self):
        out = copy.deepcopy(self.raw)
        out["method"] = self.method
        out["params"] = dict(self.params)
        out["seed"] = self.seed
        out["replicas"] = self.replicas
        return out


def build_measure(spec):
    kind = spec["type"]
    if kind == "homogeneous":
        return Homogeneous(spec.get("c", 1.0))
    if kind == "rectangular-standard":
        return RectangularStandard()
    if "fh" not in spec or "fv" not in spec:
        raise ConfigError("rectangular measure needs 'fh' and 'fv' knot lists")
    return Rectangular(OffsetMeasure(spec["fh"]), OffsetMeasure(spec["fv"]))


def build_domain(spec):
    kind = spec["type"]
    if kind == "square":
        return Polygon.square(spec.get("side", 1.0), tuple(spec.get("origin", (0.0, 0.0))))
    if kind == "rectangle":
        if "bounds" not in spec:
            raise ConfigError("rectangle domain needs 'bounds' [x0, y0, x1, y1]")
        return Polygon.rectangle(*spec["bounds"])
    if kind == "disk":
        return Disk(tuple(spec.get("center", (0.0, 0.0))), spec.get("radius", 1.0))
    if "vertices" not in spec:
        raise ConfigError("polygon domain needs 'vertices'")
    return Polygon(tuple(tuple(v) for v in spec["vertices"]))


def load_config(path=None, overrides=None, env=None):
    """Read, validate and resolve a config. `overrides` holds flag values
    (None means not given)."""
    env = os.environ if env is None else env
    raw = {}
    if path is not None:
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        jsonschema.validate(raw, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config schema error at {where}: {exc.message}") from exc
    cfg = copy.deepcopy(DEFAULTS)
    cfg.update(copy.deepcopy(raw))
    params = dict(PARAM_DEFAULTS)
    params.update(cfg.get("params", {}))
    overrides = overrides or {}
    for key in ("beta", "family", "variant", "rule", "smax", "thin", "clan_cap"):
        if overrides.get(key) is not None:
            params[key] = overrides[key]
    if overrides.get("method") is not None:
        cfg["method"] = overrides["method"]
    seed = cfg["seed"]
    if env.get("POLYFIELD_SEED"):
        try:
            seed = int(env["POLYFIELD_SEED"])
        except ValueError as exc:
            raise ConfigError("POLYFIELD_SEED must be an integer") from exc
    if overrides.get("seed") is not None:
        seed = overrides["seed"]
    replicas = overrides.get("replicas") or cfg["replicas"]
    cfg["params"] = params
    try:
        jsonschema.validate({k: v for k, v in cfg.items() if k in CONFIG_SCHEMA["properties"]}, CONFIG_SCHEMA)
        M = build_measure(cfg["measure"])
        domain = build_domain(cfg["domain"])
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"invalid option: {exc.message}") from exc
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    if cfg["method"] in ("cbd", "perfect") and params["beta"] < 2:
        raise ConfigError(f"contour samplers need beta >= 2, got {params['beta']}")
    if cfg["method"] == "gendyn" and params["family"] == "rect-staged":
        raise ConfigError("the rect-staged family drives correlation checks and cannot sample a field")
    return RunConfig(cfg, M, domain, cfg["method"], params, int(seed), int(replicas))


def _family(rc):
    p = rc.params
    if p["family"] == "sweep":
        return Sweep(rc.domain, tuple(p.get("direction", (1.0, 0.0))))
    return DiskGrowth(rc.domain, p.get("center"))


def draw(rc, stream):
    """One field sample for the configured method. Returns
    (PolygonalConfig, info dict) or (contour.Diverged, info)."""
    p = rc.params
    m = rc.method
    if m == "dynrep":
        return sample_field_dynrep(rc.M, rc.domain, stream), {}
    if m == "gendyn":
        return sample_field_gendyn(rc.M, rc.domain, _family(rc), stream), {}
    if m == "mcmc":
        variant = p["variant"]
        if variant == "defdl":
            if p["rule"] == "vertical-line":
                x0 = p.get("x0")
                if x0 is None:
                    bx = rc.domain.bbox()
                    x0 = 0.5 * (bx[0] + bx[2])
                rule = dloop.VerticalLineRule(x0, rc.domain)
            else:
                rule = dloop.AwayFromAnchor(_family(rc))
            dyn = dloop.Dynamics("defdl", rc.M, rc.domain, p["beta"], rule=rule)
            initial = dloop.DefState(PolygonalConfig())
            final = dloop.run_chain(initial, dyn, p["smax"], p["thin"], stream)[-1][1]
            return final, {}
        family = dloop.chain_family(variant, rc.M, rc.domain, _family(rc) if variant == "gendl" else None)
        dyn = dloop.Dynamics(variant, rc.M, rc.domain, p["beta"], family=family)
        initial = dloop.empty_state(rc.M, rc.domain, family)
        return dloop.run_chain(initial, dyn, p["smax"], p["thin"], stream)[-1][1], {}
    if m == "cbd":
        final = contour.run_cbd(rc.M, p["beta"], rc.domain, p["smax"], p["thin"], stream)[-1][1]
        return contour.contours_to_config(final), {"contours": len(final)}
    res = contour.perfect_sample(rc.M, p["beta"], rc.domain, stream, clan_cap=p["clan_cap"])
    if isinstance(res, contour.Diverged):
        return res, {"clan_size": res.clan_size, "horizon": res.horizon}
    return res.config, {"contours": len(res.contours), "clan_size": res.clan_size, "horizon": res.horizon}


def _replica_path(path, i, n):
    if path is None or n == 1:
        return path
    p = Path(path)
    return str(p.with_name(f"{p.stem}_{i:04d}{p.suffix}"))


def replica_streams(seed, n):
    ss = np.random.SeedSequence(seed)
    return [Stream(make_generator(child)) for child in ss.spawn(n)]


def _sample_one(args):
    rc, i, out, svg = args
    stream = replica_streams(rc.seed, rc.replicas)[i]
    result, info = draw(rc, stream)
    if isinstance(result, contour.Diverged):
        return i, "diverged", info
    if out is not None:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            write_csv(result, fh)
        side = {"config": rc.resolved(), "replica": i, "edges": len(result.edges), **info}
        Path(out + ".json").write_text(json.dumps(side, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    if svg is not None:
        Path(svg).write_text(render_svg(result, rc.domain), encoding="utf-8")
    return i, "ok", {"edges": len(result.edges), **info}


def cmd_sample(rc, out=None, svg=None, workers=1):
    jobs = [(rc, i, _replica_path(out, i, rc.replicas), _replica_path(svg, i, rc.replicas))
            for i in range(rc.replicas)]
    if workers > 1 and rc.replicas > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sample_one, jobs))
    else:
        results = [_sample_one(j) for j in jobs]
    diverged = [i for i, status, _ in results if status == "diverged"]
    for i, status, info in results:
        print(json.dumps({"replica": i, "status": status, **info}, sort_keys=True))
    return EXIT_DIVERGED if diverged else EXIT_OK


# -- estimates -------------------------------------------------------------------------


def _probe(spec):
    p = tuple(spec["point"])
    return Line.through(p, tuple(spec["direction"])), p


def _within(est, target, se, k=3.0):
    return bool(math.isfinite(est) and abs(est - target) <= k * se + 1e-12)


def _palm_report(rc, opts, n, stream):
    # exact Mecke-formula estimate on a small window around the probes
    if "probes" not in opts or "window" not in opts:
        raise ConfigError("palm factorize needs estimate.probes and estimate.window")
    coll = correlations.ProbeCollection([_probe(p) for p in opts["probes"]])
    try:
        jsonschema.validate(opts["window"], CONFIG_SCHEMA["properties"]["domain"])
        window = build_domain(opts["window"])
        r = correlations.palm_edge_correlation(rc.M, window, coll, n, stream)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"estimate.window: {exc.message}") from exc
    except correlations.DegenerateCollection as exc:
        raise ConfigError(str(exc)) from exc
    return {"stat": "factorize", "n": n, "estimator": "palm", "estimate": r.ratio, "target": 1.0,
            "se": r.se, "pass": _within(r.ratio, 1.0, r.se)}


def estimate_report(rc, stat, opts, stream):
    n = int(opts.get("n", 2000))
    if stat == "factorize" and opts.get("estimator") == "palm":
        return _palm_report(rc, opts, n, stream)
    samples = [draw(rc, stream)[0] for _ in range(n)]
    if any(isinstance(s, contour.Diverged) for s in samples):
        raise _Diverged("perfect sampler diverged")
    bx = rc.domain.bbox()
    mid = (0.5 * (bx[0] + bx[2]), 0.5 * (bx[1] + bx[3]))
    rep = {"stat": stat, "n": n}
    if stat == "crossings":
        a, b = opts.get("segment", [[mid[0] - 0.25, mid[1]], [mid[0] + 0.25, mid[1]]])
        counts = correlations.crossing_counts(samples, tuple(a), tuple(b))
        mean = float(counts.mean())
        se = float(counts.std(ddof=1) / math.sqrt(n))
        target = rc.M.segment_mass(tuple(a), tuple(b))
        rep.update(estimate=mean, target=target, se=se, pass_=_within(mean, target, se),
                   dispersion=float(counts.var(ddof=1) / mean) if mean > 0 else None)
    elif stat == "labels":
        x = tuple(opts.get("x", (mid[0] - 0.25, mid[1])))
        y = tuple(opts.get("y", (mid[0] + 0.25, mid[1])))
        est, se = correlations.estimate_label_correlation(samples, x, y, rng=stream)
        target = correlations.label_correlation_target(rc.M, x, y)
        rep.update(estimate=est, target=target, se=se, pass_=_within(est, target, se))
    elif stat == "directional":
        w = opts.get("window", {"phi": [0.0, math.pi], "rho": [-10.0, 10.0]})
        win = correlations.LineWindow(w["phi"][0], w["phi"][1], w["rho"][0], w["rho"][1])
        tab = correlations.estimate_directional_measure(samples, [win])
        target = correlations.directional_first_order(rc.M, rc.domain, win)
        est, se = float(tab.mean[0]), float(tab.mean_se[0])
        rep.update(estimate=est, target=target, se=se, pass_=_within(est, target, se))
    elif stat == "factorize":
        if "probes" not in opts:
            raise ConfigError("factorize needs estimate.probes")
        coll = correlations.ProbeCollection([_probe(p) for p in opts["probes"]])
        r = correlations.estimate_edge_correlation(samples, coll, opts.get("tube_eps", 0.05),
                                                   opts.get("angle_eps", 0.05))
        rep.update(estimate=r.ratio, target=1.0, se=r.se, pass_=_within(r.ratio, 1.0, r.se),
                   joint=r.joint, product=r.product)
    elif stat == "decay":
        t = opts.get("template", {})
        height = bx[3] - bx[1]
        template = correlations.stacked_template(t.get("x_mid", mid[0]), t.get("y_rest", bx[1] + 0.25 * height),
                                                 t.get("half_width", 0.2))
        seps = opts.get("separations", [f * height for f in (0.07, 0.17, 0.27, 0.4)])
        prof = correlations.decay_profile(samples, template, seps, opts.get("tube_eps", 0.05))
        rep.update(estimate=prof.slope, target=None, se=None, pass_=bool(prof.monotone and prof.slope < 0),
                   separations=prof.separations, deviations=prof.deviations, ratios=prof.ratios)
    else:
        raise ConfigError(f"unknown stat {stat!r}")
    rep["pass"] = rep.pop("pass_")
    return rep


def cmd_estimate(rc, stat, out=None):
    opts = dict(rc.raw.get("estimate", {}))
    stream = Stream(make_generator(rc.seed))
    rep = estimate_report(rc, stat, opts, stream)
    rep["seed"] = rc.seed
    rep["config"] = rc.resolved()
    text = json.dumps(rep, indent=2, sort_keys=True, default=float) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return EXIT_OK if rep["pass"] else EXIT_FAIL


# -- verification suite ---------------------------------------------------------------


def _check(name, est, target, se, ok, **extra):
    return {"check": name, "estimate": est, "target": target, "se": se, "pass": bool(ok), **extra}


def verify_suite(rc, scale=1.0):
    """Desk-scale checks on the configured measure and domain. `scale`
    multiplies every sample size."""
    M, D = rc.M, rc.domain
    streams = replica_streams(rc.seed, 8)
    n = max(200, int(4000 * scale))
    out = []

    fields = [sample_field_dynrep(M, D, streams[0]) for _ in range(n)]
    p0 = math.exp(-M.birth_intensity_total(D) - M.hitting_mass(D))
    emp = float(np.mean([len(f.edges) == 0 for f in fields]))
    se = math.sqrt(p0 * (1 - p0) / n)
    out.append(_check("empty-field probability", emp, p0, se, _within(emp, p0, se, 4)))

    bx = D.bbox()
    mid = (0.5 * (bx[0] + bx[2]), 0.5 * (bx[1] + bx[3]))
    half = 0.25 * min(bx[2] - bx[0], bx[3] - bx[1])
    a, b = (mid[0] - half, mid[1] - 0.3 * half), (mid[0] + half, mid[1] + 0.3 * half)
    counts = correlations.crossing_counts(fields, a, b)
    target = M.segment_mass(a, b)
    se = math.sqrt(target / n)
    disp = float(counts.var(ddof=1) / counts.mean()) if counts.mean() > 0 else float("nan")
    out.append(_check("crossing mean", float(counts.mean()), target, se,
                      _within(float(counts.mean()), target, se, 4), dispersion=disp))

    x, y = (mid[0] - half, mid[1]), (mid[0] + half, mid[1])
    est, se = correlations.estimate_label_correlation(fields, x, y, rng=streams[1])
    target = correlations.label_correlation_target(M, x, y)
    out.append(_check("label correlation", est, target, se, _within(est, target, se, 4)))

    m = max(100, int(1500 * scale))
    base = [f.total_length() for f in fields[:m]]
    grown = [sample_field_gendyn(M, D, DiskGrowth(D), streams[2]).total_length() for _ in range(m)]
    diff = float(np.mean(grown) - np.mean(base))
    se = math.sqrt(np.var(base, ddof=1) / m + np.var(grown, ddof=1) / m)
    out.append(_check("disk growth vs sweep mean length", diff, 0.0, se, _within(diff, 0.0, se, 4)))

    bad = 0
    k = max(50, int(300 * scale))
    for _ in range(k):
        coll = correlations.random_probe_collection(1 + streams[3].integer(4), streams[3],
                                                    rectangular=streams[3].uniform() < 0.5)
        if correlations.count_configs(coll) != correlations.brute_force_count(coll):
            bad += 1
    out.append(_check("configuration counts", bad, 0, 0.0, bad == 0, instances=k))

    draws = [contour.perfect_sample(Homogeneous(1.0), 4.0, Polygon.square(1.0), streams[4], clan_cap=rc.params["clan_cap"])
             for _ in range(max(10, int(50 * scale)))]
    div = sum(isinstance(d, contour.Diverged) for d in draws)
    out.append(_check("perfect sampler terminates", div, 0, 0.0, div == 0))
    return out


def cmd_verify(rc, scale=1.0, out=None):
    results = verify_suite(rc, scale)
    for r in results:
        print(("PASS " if r["pass"] else "FAIL ") + json.dumps(r, sort_keys=True, default=float))
    if out:
        Path(out).write_text(json.dumps(results, indent=2, sort_keys=True, default=float) + "\n", encoding="utf-8")
    return EXIT_OK if all(r["pass"] for r in results) else EXIT_FAIL


def cmd_render(csv_path, svg_path, domain=None):
    with open(csv_path, encoding="utf-8") as fh:
        cfg = read_csv(fh)
    Path(svg_path).write_text(render_svg(cfg, domain), encoding="utf-8")
    return EXIT_OK


# -- argument parsing -----------------------------------------------------------------


def _parser():
    ap = argparse.ArgumentParser(prog="polyfield", description="Polygonal Markov field samplers and checks")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON run config")
        p.add_argument("--seed", type=int)
        p.add_argument("--method", choices=["dynrep", "gendyn", "mcmc", "cbd", "perfect"])
        p.add_argument("--family", choices=["sweep", "disk", "rect-staged"])
        p.add_argument("--variant", choices=["dl", "gendl", "defdl"])
        p.add_argument("--rule", choices=["away-from-anchor", "vertical-line"])
        p.add_argument("--beta", type=float)
        p.add_argument("--smax", type=float)
        p.add_argument("--thin", type=float)
        p.add_argument("--clan-cap", dest="clan_cap", type=int)

    s = sub.add_parser("sample", help="draw fields and write edge-list CSV")
    common(s)
    s.add_argument("--out", default="edges.csv")
    s.add_argument("--svg")
    s.add_argument("--replicas", type=int)
    s.add_argument("--workers", type=int, default=1)

    e = sub.add_parser("estimate", help="Monte-Carlo estimate against its closed form")
    common(e)
    e.add_argument("--stat", required=True, choices=["crossings", "labels", "directional", "factorize", "decay"])
    e.add_argument("--out")

    v = sub.add_parser("verify", help="run the desk-scale verification suite")
    common(v)
    v.add_argument("--scale", type=float, default=1.0)
    v.add_argument("--out")

    r = sub.add_parser("render", help="render an edge-list CSV as SVG")
    r.add_argument("csv")
    r.add_argument("--svg", required=True)
    r.add_argument("--config", help="config whose domain outline is drawn")
    return ap


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        if args.command == "render":
            domain = load_config(args.config).domain if args.config else None
            return cmd_render(args.csv, args.svg, domain)
        overrides = {k: getattr(args, k, None) for k in
                     ("seed", "method", "family", "variant", "rule", "beta", "smax", "thin", "clan_cap", "replicas")}
        rc = load_config(args.config, overrides)
        if args.command == "sample":
            return cmd_sample(rc, args.out, args.svg, args.workers)
        if args.command == "estimate":
            return cmd_estimate(rc, args.stat, args.out)
        return cmd_verify(rc, args.scale, args.out)
    except ConfigError as exc:
        print(f"polyfield: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DomainError as exc:
        print(f"polyfield: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _Diverged as exc:
        print(f"polyfield: {exc}", file=sys.stderr)
        return EXIT_DIVERGED


if __name__ == "__main__":
    sys.exit(main())
