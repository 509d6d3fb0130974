"""Command-line front end.  Every command prints one JSON document."""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import tetra
from . import triangulation as tri
from .errors import CRFlowError, NotRealizableError, ValidationError
from .flow import FlowConfig, FlowNumericError, convergence_report, run_flow, trajectory_csv

SCHEMA = 1
KERNEL_THRESHOLD = 1e-8
BUILTINS = {"figure-eight": tri.figure_eight_spec}


class UsageError(CRFlowError):
    pass


def _emit(payload, stream=None):
    stream = stream or sys.stdout
    stream.write(json.dumps({"schema": SCHEMA, **payload}, indent=2, sort_keys=True) + "\n")


def load_complex(source):
    if source in BUILTINS:
        return tri.build_complex(BUILTINS[source]())
    return tri.build_complex(tri.load_gluing(source))


def parse_metric(source, n_edges, truncated=None):
    """Turn a metric source string into a length vector.

    Accepted forms: ``uniform:c``, ``random:seed,low,high``, a comma list of
    numbers, or a path to a JSON list / whitespace-separated file.  For random
    metrics, edges flagged in ``truncated`` (both ends hyperideal) are shifted
    up by ``-low`` when ``low < 0`` so they start positive.
    """
    s = source.strip()
    if s.startswith("uniform:"):
        return np.full(n_edges, float(s.split(":", 1)[1]))
    if s.startswith("random:"):
        parts = s.split(":", 1)[1].split(",")
        if len(parts) != 3:
            raise UsageError("random metric needs 'random:seed,low,high'")
        seed, lo, hi = int(parts[0]), float(parts[1]), float(parts[2])
        if not lo < hi:
            raise UsageError("random metric needs low < high")
        m = np.random.default_rng(seed).uniform(lo, hi, n_edges)
        if truncated is not None and lo < 0:
            m[np.asarray(truncated, dtype=bool)] -= lo
        return m
    path = Path(s)
    if path.is_file():
        text = path.read_text().strip()
        if not text:
            raise UsageError(f"metric file {s!r} is empty")
        try:
            values = json.loads(text)
        except json.JSONDecodeError:
            values = text.replace(",", " ").split()
    else:
        values = s.split(",")
    try:
        arr = np.array([float(v) for v in values])
    except (TypeError, ValueError):
        raise UsageError(f"cannot read a metric from {source!r}") from None
    if arr.shape != (n_edges,):
        raise UsageError(f"metric has {arr.size} entries but the complex has {n_edges} edges")
    return arr


def _metric(args, cx):
    truncated = [not (cx.vertex_ideal[a] or cx.vertex_ideal[b]) for a, b in cx.edge_endpoints]
    return parse_metric(args.metric, cx.n_edges, truncated)


def _floats(a):
    return [float(x) for x in np.asarray(a).ravel()]


def cmd_validate(args):
    cx = load_complex(args.triangulation)
    _emit({"command": "validate", "valid": True, **cx.summary()})
    return 0


def cmd_curvature(args):
    cx = load_complex(args.triangulation)
    m = _metric(args, cx)
    K = tri.extended_curvature(cx, m) if args.extended else tri.curvature(cx, m)
    _emit({
        "command": "curvature",
        "extended": bool(args.extended),
        "metric": _floats(m),
        "curvature": _floats(K),
        "max_abs_curvature": float(np.max(np.abs(K), initial=0.0)),
    })
    return 0


def cmd_volume(args):
    cx = load_complex(args.triangulation)
    m = _metric(args, cx)
    angles = tri.tet_angles(cx, m)
    vols = [tetra.tet_volume(k, a) for k, a in zip(cx.shapes, angles)]
    _emit({
        "command": "volume",
        "metric": _floats(m),
        "tet_volumes": _floats(vols),
        "volume": float(sum(vols)),
    })
    return 0


def cmd_hessian(args):
    cx = load_complex(args.triangulation)
    m = _metric(args, cx)
    tri.tet_angles(cx, m)  # raises, naming the first non-realizable tetrahedron
    tets = []
    for t, k in enumerate(cx.shapes):
        Ht = tetra.covolume_hessian(k, cx.tet_lengths(m, t))
        ev = np.linalg.eigvalsh(0.5 * (Ht + Ht.T))
        tets.append({
            "tet": t,
            "shape": tetra.SHAPE_NAMES[k],
            "eigenvalues": _floats(ev),
            "rank": int(np.sum(np.abs(ev) > KERNEL_THRESHOLD)),
        })
    H = tri.h_hessian(cx, m)
    eig = np.linalg.eigvalsh(0.5 * (H + H.T))
    _emit({
        "command": "hessian",
        "metric": _floats(m),
        "tets": tets,
        "hessian": [_floats(row) for row in H],
        "eigenvalues": _floats(eig),
        "asymmetry": float(np.max(np.abs(H - H.T), initial=0.0)),
        "kernel_threshold": KERNEL_THRESHOLD,
        "kernel_dimension": int(np.sum(np.abs(eig) <= KERNEL_THRESHOLD)),
        "decoration_dimension": len(cx.ideal_vertices),
        "positive_semidefinite": bool(eig.min(initial=0.0) >= -KERNEL_THRESHOLD),
    })
    return 0


def cmd_classify(args):
    cx = load_complex(args.triangulation)
    m = _metric(args, cx)
    out = []
    for t, k in enumerate(cx.shapes):
        lt = cx.tet_lengths(m, t)
        clamped = tetra.clamp_truncated_edges(k, lt)
        out.append({
            "tet": t,
            "shape": tetra.SHAPE_NAMES[k],
            "lengths": _floats(lt),
            "clamped": bool(np.any(clamped != lt)),
            "class": str(tetra.classify_degeneration(k, clamped)),
        })
    _emit({"command": "classify", "metric": _floats(m), "tets": out})
    return 0


def cmd_flow(args):
    cx = load_complex(args.triangulation)
    m = _metric(args, cx)
    cfg = FlowConfig(
        step_mode=args.mode,
        initial_step=args.dt,
        tolerance_curvature=args.tol,
        max_time=args.max_time,
        divergence_bound=args.bound,
        sample_stride=args.stride,
        normalize_decorations=args.normalize,
    )
    result = run_flow(cx, m, cfg)
    if args.out_csv:
        Path(args.out_csv).write_text(trajectory_csv(result))
    report = {"command": "flow", **convergence_report(result)}
    if args.out_json:
        Path(args.out_json).write_text(json.dumps({"schema": SCHEMA, **report}, indent=2, sort_keys=True) + "\n")
    _emit(report)
    return result.exit_code


def build_parser():
    p = argparse.ArgumentParser(prog="crflow", description="Ricci flow on decorated hyperbolic triangulations.")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_, metric=True):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("triangulation", help="gluing JSON file, or 'figure-eight'")
        if metric:
            sp.add_argument("--metric", required=True,
                            help="'a,b,...', a file, 'uniform:c' or 'random:seed,low,high'")
        sp.set_defaults(func=fn)
        return sp

    add("validate", cmd_validate, "check a gluing and print its combinatorics", metric=False)
    c = add("curvature", cmd_curvature, "edge curvatures at a metric")
    c.add_argument("--extended", action="store_true", help="use extended angles (any metric)")
    add("volume", cmd_volume, "hyperbolic volume at a realizable metric")
    add("hessian", cmd_hessian, "Hessian of the flow potential")
    add("classify", cmd_classify, "degeneration class of each tetrahedron")
    f = add("flow", cmd_flow, "run the Ricci flow")
    f.add_argument("--mode", choices=("adaptive", "fixed"), default="adaptive")
    f.add_argument("--dt", type=float, default=0.05, help="initial (or fixed) step")
    f.add_argument("--tol", type=float, default=1e-9, help="curvature tolerance")
    f.add_argument("--max-time", type=float, default=1000.0)
    f.add_argument("--bound", type=float, default=1e3, help="divergence bound on |l|")
    f.add_argument("--stride", type=int, default=1, help="sample every n-th step")
    f.add_argument("--normalize", action="store_true", help="hold vertex length sums fixed")
    f.add_argument("--out-csv", help="write the sampled trajectory as CSV")
    f.add_argument("--out-json", help="also write the summary to this file")
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        _emit({"command": args.command, "valid": False, "error": exc.to_dict()})
        return 1
    except NotRealizableError as exc:
        err = {"message": str(exc), "tet": exc.tet}
        if exc.degeneration is not None:
            err["degeneration"] = str(exc.degeneration)
        _emit({"command": args.command, "error": err})
        return 1
    except FlowNumericError as exc:
        err = {"message": str(exc)}
        if exc.state is not None:
            err["last_t"] = exc.state.t
            err["last_metric"] = _floats(exc.state.lengths)
        _emit({"command": args.command, "error": err})
        return 1
    except (CRFlowError, OSError) as exc:
        _emit({"command": args.command, "error": {"message": str(exc)}})
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
