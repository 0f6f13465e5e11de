"""Experiment runner: subcommands around the library with deterministic
file artifacts.

Every run validates its flags into a RunConfig, executes, and writes JSON,
CSV, CellSet, or SVG outputs atomically (temp file in the target directory,
then rename).  JSON artifacts carry schema_version and the full echoed
config, so identical configs give byte-identical files.  Exit codes:
0 success, 2 config error, 3 numerical failure.
"""

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .grid import (UsageError, NumericalError, CellSet, cellset_to_text,
                   read_cellset)
from .mincut import threshold_experiment, result_to_json
from .cones import make_cone, link_spectrum, stability, gamma_pm
from .equivariant import (shoot_leaf, mean_curvature_values, quadrant_grid,
                          diagonal_wedge, weighted_minimize,
                          approximation_sequence)

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class RunConfig:
    """One validated invocation: subcommand, typed parameters, seed, outdir."""
    name: str
    params: dict
    seed: int
    outdir: str


def thread_count():
    """Worker cap from CMC_LAB_THREADS; defaults to 1."""
    raw = os.environ.get("CMC_LAB_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"CMC_LAB_THREADS must be an integer, got {raw!r}")
    if n < 1:
        raise UsageError(f"CMC_LAB_THREADS must be >= 1, got {n}")
    return n


def atomic_write(path, text):
    """Write text to path via a same-directory temp file and rename."""
    path = os.path.abspath(path)
    d = os.path.dirname(path)
    os.makedirs(d, exist_ok=True)
    tmp = os.path.join(d, f".{os.path.basename(path)}.tmp.{os.getpid()}")
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _json_text(doc):
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def _echoed(config):
    return {
        "subcommand": config.name,
        "seed": config.seed,
        "output_dir": config.outdir,
        "params": dict(sorted(config.params.items())),
    }


# ---------------------------------------------------------------- spectra

def run_spectra(config):
    p, q, kmax = (config.params[k] for k in ("p", "q", "kmax"))
    cone = make_cone(p, q)
    spectrum = link_spectrum(cone, kmax)
    stable = stability(cone)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "config": _echoed(config),
        "p": p,
        "q": q,
        "dimension": cone.n,
        "lambda1": spectrum.eigenvalues[0],
        "eigenvalues": list(spectrum.eigenvalues),
        "multiplicities": list(spectrum.multiplicities),
        "stable": stable,
        "gamma": list(gamma_pm(cone)) if stable else None,
    }
    text = _json_text(doc)
    out = os.path.join(config.outdir, f"spectra_p{p}_q{q}.json")
    atomic_write(out, text)
    sys.stdout.write(text)
    return 0


# -------------------------------------------------------------- plateau2d

def run_plateau2d(config):
    r = config.params["radius"]
    resolution = config.params["resolution"]
    lams = config.params["lambdas"]

    def job(lam):
        rows, sets = threshold_experiment(r, resolution, [lam],
                                          keep_sets=True)
        return rows[0], sets[0]

    with ThreadPoolExecutor(max_workers=thread_count()) as pool:
        by_lam = dict(zip(lams, pool.map(job, lams)))

    table = []
    for i, lam in enumerate(lams):
        row, largest = by_lam[lam]
        name = f"plateau2d_{i:02d}.csl"
        atomic_write(os.path.join(config.outdir, name),
                     cellset_to_text(largest))
        table.append({
            "lambda": row.lam,
            "filled": row.filled,
            "contact_excess": row.contact_excess,
            "obstacle_circumference": row.obstacle_circumference,
            "cellset": name,
        })
    doc = {
        "schema_version": SCHEMA_VERSION,
        "config": _echoed(config),
        "rows": table,
    }
    text = _json_text(doc)
    atomic_write(os.path.join(config.outdir, "plateau2d.json"), text)
    sys.stdout.write(text)
    return 0


# ------------------------------------------------------------ equivariant

def run_equivariant(config):
    p, q = config.params["p"], config.params["q"]
    n, box = config.params["grid_n"], config.params["box"]
    lam = config.params["lam"]
    grid = quadrant_grid(n, box)
    r_obs = config.params["obstacle_radius"]
    if r_obs is None:
        r_obs = 0.5 * box
    boundary = diagonal_wedge(grid, p, q)
    res = weighted_minimize(p, q, grid, lam, boundary, r_obs)
    name = "equivariant_largest.csl"
    atomic_write(os.path.join(config.outdir, name),
                 cellset_to_text(res.set_max))
    doc = {
        "schema_version": SCHEMA_VERSION,
        "config": _echoed(config),
        "result": result_to_json(res),
        "cellset": name,
    }
    text = _json_text(doc)
    atomic_write(os.path.join(config.outdir, "equivariant.json"), text)
    sys.stdout.write(text)
    return 0


# ------------------------------------------------------------------- leaf

def run_leaf(config):
    p, q, s0 = (config.params[k] for k in ("p", "q", "s0"))
    leaf = shoot_leaf(p, q, s0, r_max=config.params["rmax"])
    resid = np.abs(mean_curvature_values(leaf))
    lines = ["s,x,y,curvature_residual"]
    for i in range(leaf.n_nodes):
        rv = "nan" if np.isnan(resid[i]) else repr(float(resid[i]))
        lines.append(f"{float(leaf.s[i])!r},{float(leaf.x[i])!r},"
                     f"{float(leaf.y[i])!r},{rv}")
    atomic_write(config.params["csv"], "\n".join(lines) + "\n")
    return 0


# ------------------------------------------------------------------ approx

_APPROX_KEYS = {"p", "q", "lambda", "grid", "t_list", "annulus"}
_GRID_KEYS = {"n", "box"}


def _load_approx_config(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as e:
        raise UsageError(f"cannot read config: {e}")
    except json.JSONDecodeError as e:
        raise UsageError(f"config is not valid JSON: {e}")
    if not isinstance(doc, dict):
        raise UsageError("config must be a JSON object")
    for key in doc:
        if key not in _APPROX_KEYS:
            raise UsageError(f"unknown config key: {key!r}")
    for key in ("p", "q", "lambda", "grid", "t_list"):
        if key not in doc:
            raise UsageError(f"missing config key: {key!r}")
    gdoc = doc["grid"]
    if not isinstance(gdoc, dict):
        raise UsageError("config key 'grid' must be an object")
    for key in gdoc:
        if key not in _GRID_KEYS:
            raise UsageError(f"unknown config key: 'grid.{key}'")
    for key in _GRID_KEYS:
        if key not in gdoc:
            raise UsageError(f"missing config key: 'grid.{key}'")
    if not isinstance(doc["p"], int) or not isinstance(doc["q"], int):
        raise UsageError("config keys 'p' and 'q' must be integers")
    if not isinstance(gdoc["n"], int):
        raise UsageError("config key 'grid.n' must be an integer")
    t_list = doc["t_list"]
    if not isinstance(t_list, list) or not t_list:
        raise UsageError("config key 't_list' must be a non-empty list")
    annulus = doc.get("annulus")
    if annulus is not None:
        if (not isinstance(annulus, list) or len(annulus) != 2):
            raise UsageError("config key 'annulus' must be a pair of radii")
        annulus = (float(annulus[0]), float(annulus[1]))
    return (doc["p"], doc["q"], float(doc["lambda"]), gdoc["n"],
            float(gdoc["box"]), [float(t) for t in t_list], annulus)


def run_approx(config):
    p, q, lam, n, box, t_list, annulus = _load_approx_config(
        config.params["config"])
    grid = quadrant_grid(n, box)
    boundary = diagonal_wedge(grid, p, q)
    r_obs = 0.5 * box
    base = weighted_minimize(p, q, grid, lam, boundary, r_obs).set_max
    report = approximation_sequence(p, q, lam, base, t_list,
                                    obstacle_radius=r_obs, annulus=annulus)
    step_files = []
    for j, Ej in enumerate(report.sets):
        name = f"approx_step_{j:02d}.csl"
        atomic_write(os.path.join(config.outdir, name), cellset_to_text(Ej))
        step_files.append(name)
    limit_name = "approx_limit.csl"
    atomic_write(os.path.join(config.outdir, limit_name),
                 cellset_to_text(report.limit_set))
    doc = {
        "schema_version": SCHEMA_VERSION,
        "config": _echoed(config),
        "t_list": list(report.t_list),
        "inclusion_ok": list(report.inclusion_ok),
        "chain_ok": list(report.chain_ok),
        "sym_diff_volume": list(report.sym_diff_volume),
        "hausdorff_to_limit": list(report.hausdorff_to_E),
        "min_origin_distance": list(report.min_origin_distance),
        "singular_proxy_flag": list(report.singular_proxy_flag),
        "obstacle_radius": report.obstacle_radius,
        "annulus": list(report.annulus),
        "steps": step_files,
        "limit": limit_name,
    }
    text = _json_text(doc)
    atomic_write(os.path.join(config.outdir, "approx.json"), text)
    sys.stdout.write(text)
    return 0


# -------------------------------------------------------------------- plot

def _fmt(v):
    return repr(round(float(v), 9))


def _interface_segments(D):
    """Unit cell-boundary segments between differing face neighbors.

    Returns segments as ((x0, y0), (x1, y1)) corner points in physical
    coordinates.
    """
    if D.grid.d != 2:
        raise UsageError("plot supports 2-D cell sets only")
    h = D.grid.h
    ox, oy = (D.grid.origin if D.grid.origin is not None else (0.0, 0.0))
    bits = D.bits
    segs = []
    diff = bits[1:, :] != bits[:-1, :]
    for i, j in zip(*np.nonzero(diff)):
        x = ox + (i + 0.5) * h
        y0 = oy + (j - 0.5) * h
        segs.append(((x, y0), (x, y0 + h)))
    diff = bits[:, 1:] != bits[:, :-1]
    for i, j in zip(*np.nonzero(diff)):
        y = oy + (j + 0.5) * h
        x0 = ox + (i - 0.5) * h
        segs.append(((x0, y), (x0 + h, y)))
    return segs


def _chain_segments(segs):
    """Join segments into maximal polylines by shared endpoints."""
    def key(pt):
        return (round(pt[0], 9), round(pt[1], 9))

    adj = {}
    for a, b in segs:
        adj.setdefault(key(a), []).append((key(a), key(b)))
        adj.setdefault(key(b), []).append((key(b), key(a)))
    unused = {(key(a), key(b)) for a, b in segs}

    def take(frm, to):
        unused.discard((frm, to))
        unused.discard((to, frm))

    chains = []
    while unused:
        # prefer an endpoint with odd degree of remaining edges (open chain)
        start = None
        for a, b in sorted(unused):
            live = [e for e in adj[a] if (e in unused or e[::-1] in unused)]
            if len(live) == 1:
                start = (a, b)
                break
        if start is None:
            start = sorted(unused)[0]
        a, b = start
        take(a, b)
        chain = [a, b]
        cur, prev = b, a
        while True:
            nxt = None
            for e in adj[cur]:
                if e in unused or e[::-1] in unused:
                    nxt = e[1]
                    break
            if nxt is None:
                break
            take(cur, nxt)
            chain.append(nxt)
            cur = nxt
        chains.append(chain)
    return chains


def _svg_document(paths, bbox, stroke_width):
    x0, y0, x1, y1 = bbox
    pad = 0.05 * max(x1 - x0, y1 - y0, stroke_width)
    vb = (_fmt(x0 - pad), _fmt(y0 - pad),
          _fmt(x1 - x0 + 2 * pad), _fmt(y1 - y0 + 2 * pad))
    body = "\n".join(
        f'  <path d="{d}" fill="none" stroke="black" '
        f'stroke-width="{_fmt(stroke_width)}"/>' for d in paths)
    return (f'<svg xmlns="http://www.w3.org/2000/svg" '
            f'viewBox="{vb[0]} {vb[1]} {vb[2]} {vb[3]}">\n'
            f"{body}\n</svg>\n")


def _path_data(points, flip):
    cmds = []
    for k, (x, y) in enumerate(points):
        yy = flip - y
        cmds.append(f"{'M' if k == 0 else 'L'} {_fmt(x)} {_fmt(yy)}")
    return " ".join(cmds)


def run_plot(config):
    src = config.params["input"]
    try:
        with open(src, "r", encoding="utf-8") as fh:
            head = fh.readline()
    except OSError as e:
        raise UsageError(f"cannot read input: {e}")

    if head.startswith("cmcgrid "):
        D = read_cellset(src)
        segs = _interface_segments(D)
        if not segs:
            raise UsageError("cell set has no interface to plot")
        pts = np.array([p for s in segs for p in s])
        x0, y0 = pts.min(axis=0)
        x1, y1 = pts.max(axis=0)
        flip = y0 + y1
        paths = [_path_data(c, flip) for c in _chain_segments(segs)]
        text = _svg_document(paths, (x0, y0, x1, y1), 0.25 * D.grid.h)
    elif head.strip().startswith("s,x,y"):
        data = np.loadtxt(src, delimiter=",", skiprows=1)
        if data.ndim != 2 or data.shape[1] < 3:
            raise UsageError("curve CSV must have columns s,x,y,...")
        x, y = data[:, 1], data[:, 2]
        x0, x1, y0, y1 = x.min(), x.max(), y.min(), y.max()
        flip = y0 + y1
        span = max(x1 - x0, y1 - y0)
        paths = [_path_data(np.column_stack([x, y]), flip)]
        text = _svg_document(paths, (x0, y0, x1, y1), 0.004 * span)
    else:
        raise UsageError("input is neither a cell-set file nor a curve CSV")
    atomic_write(config.params["output"], text)
    return 0


# ------------------------------------------------------------------ driver

def build_parser():
    parser = argparse.ArgumentParser(
        prog="cmclab",
        description="constant-mean-curvature minimization experiments")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(sp):
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--outdir", default=".")

    sp = sub.add_parser("spectra", help="link spectrum and stability of a cone")
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--q", type=int, required=True)
    sp.add_argument("--kmax", type=int, required=True)
    common(sp)

    sp = sub.add_parser("plateau2d", help="half-plane obstacle lambda sweep")
    sp.add_argument("--radius", type=float, required=True)
    sp.add_argument("--resolution", type=int, required=True)
    sp.add_argument("--lambda", dest="lambdas", type=float, required=True,
                    action="append")
    common(sp)

    sp = sub.add_parser("equivariant", help="weighted quadrant minimization")
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--q", type=int, required=True)
    sp.add_argument("--grid-n", type=int, required=True)
    sp.add_argument("--box", type=float, default=1.0)
    sp.add_argument("--lambda", dest="lam", type=float, required=True)
    sp.add_argument("--obstacle-radius", type=float, default=None)
    common(sp)

    sp = sub.add_parser("leaf", help="shoot one leaf and emit a CSV")
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--q", type=int, required=True)
    sp.add_argument("--s0", type=float, required=True)
    sp.add_argument("--rmax", type=float, default=None)
    sp.add_argument("--csv", required=True)
    sp.add_argument("--seed", type=int, default=0)

    sp = sub.add_parser("approx", help="inward-perturbation run from a config")
    sp.add_argument("--config", required=True)
    common(sp)

    sp = sub.add_parser("plot", help="render a cell set or curve CSV to SVG")
    sp.add_argument("--input", required=True)
    sp.add_argument("--output", required=True)
    sp.add_argument("--seed", type=int, default=0)
    return parser


_PARAM_KEYS = {
    "spectra": ("p", "q", "kmax"),
    "plateau2d": ("radius", "resolution", "lambdas"),
    "equivariant": ("p", "q", "grid_n", "box", "lam", "obstacle_radius"),
    "leaf": ("p", "q", "s0", "rmax", "csv"),
    "approx": ("config",),
    "plot": ("input", "output"),
}

_RUNNERS = {
    "spectra": run_spectra,
    "plateau2d": run_plateau2d,
    "equivariant": run_equivariant,
    "leaf": run_leaf,
    "approx": run_approx,
    "plot": run_plot,
}

_PATH_KEYS = {"csv", "config", "input", "output"}


def config_from_args(args):
    name = args.subcommand
    params = {}
    for key in _PARAM_KEYS[name]:
        value = getattr(args, key)
        if key in _PATH_KEYS and value is not None:
            value = os.path.abspath(value)
        params[key] = value
    outdir = os.path.abspath(getattr(args, "outdir", "."))
    return RunConfig(name, params, args.seed, outdir)


def run(config):
    """Execute a validated RunConfig; returns the process exit status."""
    return _RUNNERS[config.name](config)


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if e.code is not None else 0
    try:
        return run(config_from_args(args))
    except UsageError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except NumericalError as e:
        diag = {
            "schema_version": SCHEMA_VERSION,
            "error": type(e).__name__,
            "detail": str(e),
        }
        print(json.dumps(diag, sort_keys=True), file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
