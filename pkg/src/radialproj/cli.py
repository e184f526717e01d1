"""Command-line interface.

One binary with subcommands:

* ``generate``  -- write a point-set CSV;
* ``visible``   -- filter by visibility (optionally keep all rows and add a
                   ``visible`` column);
* ``pipeline``  -- full run: histogram CSV + summary JSON + optional SVG;
* ``fit``       -- tail-coefficient fit from a gaps or histogram CSV;
* ``compare``   -- distance metrics between a histogram CSV and a reference;
* ``density``   -- tabulate the reference densities on a grid.

Flags can be preloaded from a flat key=value config file (``--config``);
explicit flags override file values.  Every output embeds the effective
configuration so a run can be reproduced from any of its artifacts.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import analysis, pipeline
from .errors import (EXIT_INTEGRITY, EXIT_RESOURCE, EXIT_USAGE, IntegrityError,
                     ResourceError, UsageError)
from .generators import CMS_NAMES, cms_spec, gen_cms, gen_lattice, gen_poisson
from .points import PointSet
from .substitution import builtin_rule_names, gen_substitution, load_rule
from .visibility import visible

VERSION = "0.1.0"

GENERATORS = ("z2", "poisson") + CMS_NAMES + ("lb", "chair")
_RULE_ALIASES = {"lb": "lancon_billard", "chair": "chair"}


def _config_pairs(path: str) -> dict:
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key = value")
            key, _, value = line.partition("=")
            out[key.strip().replace("-", "_")] = value.strip()
    return out


def config_text(cfg: dict) -> str:
    return "".join(f"{k} = {cfg[k]}\n" for k in sorted(cfg))


# Defaults live here rather than on the parser, so an absent flag is
# distinguishable from an explicit one and config files can fill it.
DEFAULTS = {
    "seed": 0,
    "intensity": 1.0,
    "steps": 8,
    "method": "auto",
    "wraparound": False,
    "bin_width": 0.01,
    "t_max": 4.0,
    "lo": 5.0,
    "hi": 50.0,
    "t_min": 0.01,
    "step": 0.01,
    "lam": 1.0,
}

# Execution/IO parameters: they must not influence output bytes, so they are
# kept out of the embedded configuration echo.
_NON_REPRODUCIBLE = {"config", "command", "func", "out", "out_prefix", "threads",
                     "diagnostic", "svg", "no_timestamp", "emit_gaps"}


def _effective_config(args: argparse.Namespace, parser=None) -> dict:
    """Explicit flags override config-file values; defaults fill the rest."""
    cfg = {}
    file_vals = _config_pairs(args.config) if getattr(args, "config", None) else {}
    for key, value in file_vals.items():
        cfg[key] = value
    for key, value in vars(args).items():
        if key in {"config", "command", "func"} or value is None:
            continue
        cfg[key] = value
    for key, value in DEFAULTS.items():
        cfg.setdefault(key, value)
    out = {}
    for k, v in sorted(cfg.items()):
        if k in _NON_REPRODUCIBLE:
            continue
        if isinstance(v, bool):
            out[k] = "true" if v else "false"
        else:
            out[k] = str(v)
    return out


def _typed(cfg: dict, key: str, typ, default=None):
    if key not in cfg:
        return default
    v = cfg[key]
    if typ is bool:
        return str(v).lower() in ("1", "true", "yes", "on")
    try:
        return typ(v)
    except ValueError:
        raise UsageError(f"config value {key} = {v!r} is not a valid {typ.__name__}")


def make_points(cfg: dict) -> PointSet:
    name = cfg.get("set")
    if name not in GENERATORS:
        raise UsageError(
            f"unknown point set {name!r}; valid: {', '.join(GENERATORS)} "
            "(or --rule for a custom substitution)"
        )
    radius = _typed(cfg, "radius", float)
    if name == "z2":
        if radius is None:
            raise UsageError("z2 needs --radius")
        return gen_lattice(radius)
    if name == "poisson":
        if radius is None:
            raise UsageError("poisson needs --radius")
        return gen_poisson(radius, _typed(cfg, "intensity", float, 1.0),
                           _typed(cfg, "seed", int, 0))
    if name in CMS_NAMES:
        if radius is None:
            raise UsageError(f"{name} needs --radius")
        return gen_cms(cms_spec(name), radius, threads=_typed(cfg, "threads", int))
    rule_name = cfg.get("rule") or _RULE_ALIASES[name]
    rule = load_rule(rule_name)
    steps = _typed(cfg, "steps", int, 8)
    return gen_substitution(rule, steps, radius)


def apply_visibility(ps: PointSet, cfg: dict) -> PointSet:
    method = cfg.get("method", "auto")
    spec = None
    gen = ps.provenance.get("generator")
    if gen in CMS_NAMES:
        spec = cms_spec(gen)
    return visible(ps, method=method, spec=spec)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_generate(args, parser) -> int:
    cfg = _effective_config(args, parser)
    ps = make_points(cfg)
    ps = ps.with_provenance(config=cfg, version=VERSION)
    ps.to_csv(args.out)
    print(f"{len(ps)} points -> {args.out}")
    return 0


def cmd_visible(args, parser) -> int:
    cfg = _effective_config(args, parser)
    ps = make_points(cfg)
    vis = apply_visibility(ps, cfg)
    vis = vis.with_provenance(config=cfg, version=VERSION)
    if args.diagnostic:
        flags = np.zeros(len(ps), dtype=np.int64)
        vis_rows = {tuple(r) for r in vis.coords.tolist()}
        for i, row in enumerate(ps.coords.tolist()):
            flags[i] = 1 if tuple(row) in vis_rows else 0
        _write_diagnostic_csv(args.out, ps, flags, cfg)
        print(f"{len(ps)} points ({int(flags.sum())} visible) -> {args.out}")
    else:
        vis.to_csv(args.out)
        print(f"{len(vis)} visible of {len(ps)} -> {args.out}")
    return 0


def _write_diagnostic_csv(path, ps, flags, cfg):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# kind = {ps.kind}\n")
        if ps.kind == "exact":
            fh.write(f"# module = {ps.tag.n}\n")
        fh.write("# provenance = " + json.dumps(
            {**ps.provenance, "config": cfg}, sort_keys=True, default=str) + "\n")
        if ps.kind == "exact":
            fh.write("x1_a,x1_b,x2_a,x2_b,module,visible\n")
            for row, f in zip(ps.coords, flags):
                fh.write(f"{row[0]},{row[1]},{row[2]},{row[3]},{ps.tag.n},{f}\n")
        else:
            fh.write("x,y,visible\n")
            for row, f in zip(ps.coords, flags):
                if ps.kind == "lattice":
                    fh.write(f"{row[0]},{row[1]},{f}\n")
                else:
                    fh.write(f"{row[0]!r},{row[1]!r},{f}\n")


def _reference_density(name: str):
    if name == "z2":
        return analysis.lattice_gap_density, (analysis.T_GAP, analysis.T_KNEE)
    if name == "exp":
        return (lambda x: analysis.exponential_density(1.0, x)), ()
    raise UsageError(f"unknown reference {name!r}; valid: z2, exp")


def cmd_pipeline(args, parser) -> int:
    cfg = _effective_config(args, parser)
    ps = make_points(cfg)
    spec = None
    gen = ps.provenance.get("generator")
    if gen in CMS_NAMES:
        spec = cms_spec(gen)
    hist, gaps, summary = pipeline.run_pipeline(
        ps,
        method=cfg.get("method", "auto"),
        spec=spec,
        include_wraparound=_typed(cfg, "wraparound", bool, False),
        bin_width=_typed(cfg, "bin_width", float, 0.01),
        t_max=_typed(cfg, "t_max", float, 4.0),
    )
    summary["config"] = cfg
    summary["version"] = VERSION
    if args.reference:
        density, breaks = _reference_density(args.reference)
        metrics = analysis.compare(hist, density, breakpoints=breaks)
        summary["compare"] = {"reference": args.reference, **metrics.as_dict()}
    prefix = args.out_prefix
    _write_histogram_csv(f"{prefix}.hist.csv", hist, cfg)
    with open(f"{prefix}.summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, sort_keys=True, indent=2, default=str)
        fh.write("\n")
    outputs = [f"{prefix}.hist.csv", f"{prefix}.summary.json"]
    if args.emit_gaps:
        with open(f"{prefix}.gaps.csv", "w", encoding="utf-8", newline="\n") as fh:
            fh.write("# config = " + json.dumps(cfg, sort_keys=True) + "\n")
            fh.write("gap\n")
            for g in gaps.gaps:
                fh.write(f"{float(g)!r}\n")
        outputs.append(f"{prefix}.gaps.csv")
    if args.svg:
        density = None
        if args.reference:
            density, _ = _reference_density(args.reference)
        _write_svg(f"{prefix}.svg", hist, density, timestamp=not args.no_timestamp)
        outputs.append(f"{prefix}.svg")
    print(f"n={summary['n_angles']} min_gap={summary['min_gap']:.6f} -> " + ", ".join(outputs))
    return 0


def _write_histogram_csv(path, hist, cfg):
    dens = hist.density()
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# config = " + json.dumps(cfg, sort_keys=True) + "\n")
        fh.write(f"# total = {hist.total}\n")
        fh.write(f"# overflow = {hist.overflow}\n")
        fh.write("bin_left,bin_right,count,density\n")
        for k, c in enumerate(hist.counts):
            left = k * hist.bin_width
            right = (k + 1) * hist.bin_width
            fh.write(f"{left!r},{right!r},{int(c)},{float(dens[k])!r}\n")


def read_histogram_csv(path):
    meta = {}
    rows = []
    header = None
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].partition("=")
                meta[key.strip()] = value.strip()
                continue
            if header is None:
                header = line.split(",")
                continue
            rows.append([float(v) for v in line.split(",")])
    if not rows:
        raise UsageError(f"{path}: empty histogram")
    arr = np.array(rows)
    bin_width = arr[0, 1] - arr[0, 0]
    t_max = arr[-1, 1]
    counts = arr[:, 2].astype(np.int64)
    total = int(meta.get("total", counts.sum()))
    overflow = int(meta.get("overflow", 0))
    return pipeline.SpacingHistogram(
        bin_width=float(bin_width), t_max=float(t_max), counts=counts,
        overflow=overflow, total=total, metadata={"path": path},
    )


def _read_gaps_csv(path):
    gaps = []
    header_seen = False
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if not header_seen:
                header_seen = True
                if line.split(",")[0] == "gap":
                    continue
            try:
                gaps.append(float(line.split(",")[0]))
            except ValueError:
                raise UsageError(f"{path}:{lineno}: not a number: {line!r}")
    if not gaps:
        raise UsageError(f"{path}: no gaps found")
    return pipeline.GapList(np.array(gaps), 1.0, False)


def cmd_fit(args, parser) -> int:
    cfg = _effective_config(args, parser)
    lo = _typed(cfg, "lo", float, 5.0)
    hi = _typed(cfg, "hi", float, 50.0)
    if args.gaps:
        gl = _read_gaps_csv(args.gaps)
        fit = analysis.tail_fit(gl, lo, hi)
        source = args.gaps
    elif args.hist:
        hist = read_histogram_csv(args.hist)
        edges = hist.edges
        sel = (edges[:-1] >= lo) & (edges[1:] <= hi) & (hist.counts > 0)
        if sel.sum() < 3:
            raise UsageError(
                f"histogram has only {int(sel.sum())} populated bins in [{lo}, {hi}]"
            )
        dens = hist.counts[sel] / (hist.total * hist.bin_width)
        sub_edges = np.append(edges[:-1][sel], edges[1:][sel][-1])
        if not np.allclose(np.diff(sub_edges), hist.bin_width):
            # non-contiguous populated bins: fit each as its own cell
            sub_edges = None
            fit = None
            raise UsageError("populated bins in the fit range are not contiguous")
        fit = analysis.tail_fit_from_bins(sub_edges, dens,
                                          weights=hist.counts[sel].astype(float),
                                          sample_count=int(hist.counts[sel].sum()))
        source = args.hist
    else:
        raise UsageError("fit needs --gaps or --hist")
    out = {"fit": fit.as_dict(), "source": source, "config": cfg, "version": VERSION}
    text = json.dumps(out, sort_keys=True, indent=2)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0


def cmd_compare(args, parser) -> int:
    cfg = _effective_config(args, parser)
    hist = read_histogram_csv(args.hist)
    density, breaks = _reference_density(args.reference)
    metrics = analysis.compare(hist, density, breakpoints=breaks)
    out = {
        "compare": {"reference": args.reference, **metrics.as_dict()},
        "source": args.hist,
        "config": cfg,
        "version": VERSION,
    }
    text = json.dumps(out, sort_keys=True, indent=2)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0


def cmd_density(args, parser) -> int:
    cfg = _effective_config(args, parser)
    t0 = _typed(cfg, "t_min", float, 0.01)
    t1 = _typed(cfg, "t_max", float, 4.0)
    step = _typed(cfg, "step", float, 0.01)
    lam = _typed(cfg, "lam", float, 1.0)
    grid = np.arange(t0, t1 + 0.5 * step, step)
    which = args.which
    if which == "z2":
        vals = analysis.lattice_gap_density(grid)
    elif which == "tail":
        vals = analysis.lattice_tail_density(grid)
    elif which == "exp":
        vals = analysis.exponential_density(lam, grid)
    else:
        raise UsageError(f"unknown density {which!r}; valid: z2, tail, exp")
    lines = ["# config = " + json.dumps(cfg, sort_keys=True), "t,value"]
    lines += [f"{float(t)!r},{float(v)!r}" for t, v in zip(grid, np.atleast_1d(vals))]
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


# ---------------------------------------------------------------------------
# Minimal SVG plotting (bars + reference polyline + ticks)
# ---------------------------------------------------------------------------


def _write_svg(path, hist, density=None, timestamp=True, width=720, height=420):
    import datetime

    margin = 46
    plot_w = width - 2 * margin
    plot_h = height - 2 * margin
    dens = hist.density()
    ymax = max(float(dens.max(initial=0.0)), 0.1)
    if density is not None:
        grid = np.linspace(max(hist.bin_width * 0.5, 1e-9), hist.t_max, 400)
        ref = np.atleast_1d(np.asarray(density(grid), dtype=float))
        ymax = max(ymax, float(ref.max()))
    ymax *= 1.06

    def sx(t):
        return margin + plot_w * t / hist.t_max

    def sy(v):
        return height - margin - plot_h * v / ymax

    parts = ['<?xml version="1.0" encoding="UTF-8"?>']
    parts.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">'
    )
    if timestamp:
        parts.append(f"<!-- generated {datetime.datetime.now().isoformat()} -->")
    parts.append(f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>')
    for k, v in enumerate(dens):
        if v <= 0:
            continue
        x0 = sx(k * hist.bin_width)
        x1 = sx((k + 1) * hist.bin_width)
        y = sy(float(v))
        parts.append(
            f'<rect x="{x0:.2f}" y="{y:.2f}" width="{x1 - x0:.2f}" '
            f'height="{height - margin - y:.2f}" fill="#9ecae1" stroke="none"/>'
        )
    if density is not None:
        pts = " ".join(f"{sx(t):.2f},{sy(float(v)):.2f}" for t, v in zip(grid, ref))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="#d62728" stroke-width="1.6"/>')
    parts.append(
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
        f'y2="{height - margin}" stroke="black" stroke-width="1"/>'
    )
    parts.append(
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" y2="{height - margin}" '
        f'stroke="black" stroke-width="1"/>'
    )
    t = 0.0
    while t <= hist.t_max + 1e-9:
        x = sx(t)
        parts.append(
            f'<line x1="{x:.2f}" y1="{height - margin}" x2="{x:.2f}" '
            f'y2="{height - margin + 5}" stroke="black" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{x:.2f}" y="{height - margin + 18}" font-size="11" '
            f'text-anchor="middle" font-family="sans-serif">{t:g}</text>'
        )
        t += 0.5
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        v = ymax * frac
        y = sy(v)
        parts.append(
            f'<line x1="{margin - 5}" y1="{y:.2f}" x2="{margin}" y2="{y:.2f}" '
            f'stroke="black" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{margin - 8}" y="{y + 4:.2f}" font-size="11" '
            f'text-anchor="end" font-family="sans-serif">{v:.2f}</text>'
        )
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(parts) + "\n")


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="radialproj",
        description="Radial projection spacing statistics of planar point sets.",
    )
    parser.add_argument("--version", action="version", version=VERSION)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--set", help=f"point set: {', '.join(GENERATORS)}")
        p.add_argument("--radius", type=float)
        p.add_argument("--seed", type=int)
        p.add_argument("--intensity", type=float)
        p.add_argument("--steps", type=int, help="substitution steps")
        p.add_argument("--rule", help="substitution rule name or file path")
        p.add_argument("--threads", type=int)
        p.add_argument("--method", choices=("auto", "brute", "gcd", "local"))

    p = sub.add_parser("generate", help="write a point-set CSV")
    add_common(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("visible", help="visibility-filter a generated set")
    add_common(p)
    p.add_argument("--diagnostic", action="store_true",
                   help="keep all points, add a visible column")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_visible)

    p = sub.add_parser("pipeline", help="full radial-projection run")
    add_common(p)
    p.add_argument("--wraparound", action="store_true", default=None)
    p.add_argument("--bin-width", dest="bin_width", type=float)
    p.add_argument("--t-max", dest="t_max", type=float)
    p.add_argument("--reference", choices=("z2", "exp"))
    p.add_argument("--emit-gaps", action="store_true")
    p.add_argument("--svg", action="store_true")
    p.add_argument("--no-timestamp", action="store_true")
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("fit", help="power-law tail fit")
    p.add_argument("--config")
    p.add_argument("--gaps", help="gaps CSV (one gap per row)")
    p.add_argument("--hist", help="histogram CSV")
    p.add_argument("--lo", type=float)
    p.add_argument("--hi", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("compare", help="histogram vs reference density")
    p.add_argument("--config")
    p.add_argument("--hist", required=True)
    p.add_argument("--reference", required=True, choices=("z2", "exp"))
    p.add_argument("--out")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("density", help="tabulate reference densities")
    p.add_argument("--config")
    p.add_argument("--which", required=True, choices=("z2", "tail", "exp"))
    p.add_argument("--t-min", dest="t_min", type=float)
    p.add_argument("--t-max", dest="t_max", type=float)
    p.add_argument("--step", type=float)
    p.add_argument("--lam", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_density)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, parser)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ResourceError as exc:
        print(f"resource error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except IntegrityError as exc:
        print(f"integrity error: {exc}", file=sys.stderr)
        return EXIT_INTEGRITY


if __name__ == "__main__":
    sys.exit(main())
