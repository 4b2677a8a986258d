"""Command-line front end.

Table commands write CSV (LF line ends, shortest round-trip floats) to
stdout or ``--out``; single numbers are printed with six decimals; the
``converge`` command prints a JSON summary.  Exit codes: 0 success, 1 an
acceptance criterion failed, 2 invalid input, 3 numerical-contract failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, acceptance, catalog
from .continuum_ops import (
    FracKernelSpec, PVHilbertSpec, frac_bound, frac_kir_pv, frac_kir_regular, hilbert_kir_eps,
    hilbert_kir_limit,
)
from .convergence import (
    ZETAS, estimate_limit, family_coupling, family_fd, family_frac, family_gaussian_area,
    family_poisson_cutoff, family_tail_dichotomy,
)
from .core import KirlabError
from .couplings import (
    DeterministicCoupling, IndependentCoupling, QuadMeasure, deterministic_kir,
    deterministic_laplacian, independent_kir, independent_laplacian, positive_order_kir_x,
    positive_order_kir_y, positive_order_laplacian_x, positive_order_laplacian_y,
)
from .dyadic_ops import (
    HaarExpansion, delta_s_apply, dyadic_frac_laplacian, dyadic_laplacian, dyadic_point,
    haar_eigenvalue, haar_constant_cs, rho,
)
from .graph_ops import GraphSystem, is_harmonic, kirchhoff, laplacian, random_system
from .lattice_ops import FracSpec, LatticeSpec, fd_is_harmonic, fd_laplacian, frac_laplacian
from .metric_ops import (
    MetricMeasureNet, dyadic_net, lattice_net, net_frac_laplacian, net_kirchhoff, net_laplacian,
)

EXIT_OK, EXIT_FAIL, EXIT_INVALID, EXIT_CONTRACT = 0, 1, 2, 3

CONFIG_FIELDS = {"module", "op", "params", "output", "seed"}
MODULES = ("graph", "lattice", "dyadic", "metric", "frac", "hilbert", "coupling", "converge")


class UsageError(ValueError):
    """Invalid command-line or config input (exit code 2)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------------------
# output helpers


def _num(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_num(v) for v in r])
    return buf.getvalue()


def _emit(args, text: str):
    if getattr(args, "out", None):
        Path(args.out).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)


def _emit_summary(args, summary: dict, to_stdout: bool = False):
    text = json.dumps(summary, indent=2, sort_keys=True) + "\n"
    if getattr(args, "summary", None):
        Path(args.summary).write_text(text, encoding="utf-8", newline="\n")
    if to_stdout:
        sys.stdout.write(text)


def _point(text: str, dim: int | None = None) -> np.ndarray:
    try:
        p = np.array([float(t) for t in str(text).split(",")])
    except ValueError:
        raise UsageError(f"cannot read a point from {text!r}") from None
    if dim is not None and len(p) != dim:
        raise UsageError(f"point {text!r} has {len(p)} coordinates, expected {dim}")
    return p


def _load_json(path: str):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read JSON from {path}: {exc}") from None


def _threads() -> int:
    raw = os.environ.get("KIRLAB_THREADS")
    if raw is None:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"KIRLAB_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise UsageError(f"KIRLAB_THREADS must be a positive integer, got {raw!r}")
    # every run is sequential, so any cap is honoured trivially
    return n


# ---------------------------------------------------------------------------
# subcommands


def cmd_graph(args):
    if args.graph:
        sys_ = GraphSystem.from_json(_load_json(args.graph))
    else:
        sys_ = random_system(np.random.default_rng(args.seed), n_nodes=args.nodes, dim=args.dim,
                             symmetric=not args.asymmetric)
    n = sys_.measure.nodes.shape[1]
    if args.op == "kirchhoff":
        vals = kirchhoff(sys_, catalog.two_point(args.field or "sqdiff", n))
    elif args.op == "laplacian":
        vals = laplacian(sys_, catalog.scalar(args.field or "sq", n))
    else:
        f = catalog.scalar(args.field or "linear", n)
        vals = [is_harmonic(sys_, f, tol=args.tol, nodes=[k])[1] for k in range(len(sys_.measure))]
    X = sys_.measure.nodes
    header = ["node_index"] + [f"x{m}" for m in range(n)] + ["value"]
    _emit(args, _csv(header, ([k, *X[k], v] for k, v in enumerate(vals))))


def cmd_lattice(args):
    spec = LatticeSpec(args.dim, args.h, args.window)
    f = catalog.scalar(args.func, args.dim)
    rows = []
    for k in spec.indices():
        if args.alpha is None:
            if np.max(np.abs(k)) > spec.N - 1:
                continue
            if args.op == "harmonic":
                v, b = fd_is_harmonic(spec, f, k, tol=args.tol)[1], 0.0
            else:
                v, b = fd_laplacian(spec, f, k), 0.0
        else:
            R = args.R
            if R is None:
                # cover the support when there is one, else a fixed radius with a tail bound
                R = 1000 if f.support_radius is None else int(math.ceil(f.support_radius / spec.h)) + spec.N + 1
            r = frac_laplacian(spec, FracSpec(args.alpha, R), f, k)
            v, b = r.value, r.bound
        rows.append([";".join(str(int(t)) for t in k), *spec.point(k), v, b])
    header = ["index"] + [f"x{m}" for m in range(args.dim)] + ["value", "bound"]
    _emit(args, _csv(header, rows))


def _haar_constant(name: str):
    if name == "kernel":
        return haar_eigenvalue
    if name == "cs":
        return haar_constant_cs
    raise UsageError(f"unknown Haar constant {name!r}")


def cmd_dyadic(args):
    if args.op == "rho":
        if args.y is None:
            raise UsageError("rho needs --x and --y")
        print(f"{rho(args.x, args.y):.6f}")
        return
    if args.op == "spectral":
        if args.coef is None:
            raise UsageError("spectral needs --coef")
        try:
            f = HaarExpansion.from_json(args.coef)
        except json.JSONDecodeError as exc:
            raise UsageError(f"--coef is not valid JSON: {exc}") from None
        lam = _haar_constant(args.constant)(args.s)
        r = delta_s_apply(args.s, f, args.x, method=args.method, eigenvalue=lam if args.method == "closed" else None)
        print(f"{r.value:.6f}")
        _emit_summary(args, {"value": r.value, "error": r.error, "s": args.s, "x": args.x,
                             "method": args.method, "constant": args.constant})
        return
    f = catalog.scalar(args.func, 1)
    rows = []
    for k in range(args.K + 1):
        x = float(dyadic_point(args.j, k))
        if args.op == "laplacian":
            rows.append([k, x, dyadic_laplacian(args.j, f, k), 0.0])
        else:
            r = dyadic_frac_laplacian(args.j, args.alpha, f, k, K=max(args.K, args.far))
            rows.append([k, x, r.value, r.error])
    _emit(args, _csv(["index", "x", "value", "error"], rows))


def cmd_metric(args):
    if args.net:
        net = MetricMeasureNet.from_json(_load_json(args.net))
    elif args.lattice_net:
        h, N = args.lattice_net.split(",")
        net = lattice_net(float(h), int(N))
    else:
        j, K = (args.dyadic_net or "2,15").split(",")
        net = dyadic_net(int(j), int(K))
    n = net.points.shape[1]
    H = np.full((len(net), len(net)), args.H)
    rows = []
    for k in range(len(net)):
        if args.op == "laplacian":
            v = net_laplacian(net, H, catalog.scalar(args.func, n), k)
        elif args.op == "kirchhoff":
            v = net_kirchhoff(net, H, catalog.two_point(args.field, n), k)
        else:
            v = net_frac_laplacian(net, args.alpha, catalog.scalar(args.func, n), k)
        rows.append([k, *net.points[k], v])
    _emit(args, _csv(["node_index"] + [f"x{m}" for m in range(n)] + ["value"], rows))


def cmd_frac(args):
    spec = FracKernelSpec(args.dim, args.s, angular=args.angular, eps0=args.eps0, levels=args.levels)
    mode = args.mode if args.mode != "auto" else spec.regime
    if mode != spec.regime:
        raise UsageError(f"s = {args.s} belongs to the {spec.regime} regime, not {mode}")
    Phi = catalog.two_point(args.field, args.dim)
    rows, summary = [], []
    for xt in args.x:
        x = _point(xt, args.dim)
        if mode == "regular":
            r = frac_kir_regular(spec, Phi, x)
            v, e, rate = r.value, r.error, float("nan")
        else:
            r = frac_kir_pv(spec, Phi, x)
            v, e, rate = r.value, r.error, r.rate
        rows.append([xt, v, e, rate])
        summary.append({"x": x.tolist(), "value": v, "error": e})
    if mode == "regular" and Phi.sup_norm is not None and Phi.y_lipschitz is not None:
        bound = frac_bound(spec, Phi)
        if any(abs(r[1]) > bound for r in rows):
            raise KirlabError(f"|Kir| exceeds the kernel bound {bound:.6g}")
    _emit(args, _csv(["x", "value", "error_estimate", "rate"], rows))
    _emit_summary(args, {"s": args.s, "dim": args.dim, "mode": mode, "points": summary})


def cmd_hilbert(args):
    Phi = catalog.two_point(args.field, 1)
    lim = hilbert_kir_limit(Phi, args.x)
    rows, prev = [], None
    for m in range(args.levels):
        eps = args.eps_start * 2.0 ** -m
        v = hilbert_kir_eps(PVHilbertSpec(eps), Phi, args.x)
        rows.append([eps, args.x, v, float("nan") if prev is None else v - prev])
        prev = v
    _emit(args, _csv(["eps", "x", "value", "diff"], rows))
    _emit_summary(args, {"x": args.x, "limit": lim.value, "limit_error": lim.error})


def cmd_coupling(args):
    n = args.dim
    x = _point(args.x, n)
    g = catalog.lookup(catalog.DENSITIES, args.g, "density")(n)
    if args.kind == "indep":
        pi2 = QuadMeasure.density_on_box(None, np.full(n, args.lo), np.full(n, args.hi))
        c = IndependentCoupling(g, pi2)
        if args.op == "kirchhoff":
            v = independent_kir(c, catalog.two_point(args.field, n), x)
        else:
            v = independent_laplacian(c, catalog.scalar(args.func, n), x)
    else:
        F = catalog.lookup(catalog.POINT_MAPS, args.F, "map")
        c = DeterministicCoupling(F, g=g, h=args.h)
        if args.kind == "det":
            if args.op == "kirchhoff":
                v = deterministic_kir(c, catalog.two_point(args.field, n), x)
            else:
                v = deterministic_laplacian(c, catalog.scalar(args.func, n), x)
        else:
            ops = {("x", "kirchhoff"): (positive_order_kir_x, "field"),
                   ("y", "kirchhoff"): (positive_order_kir_y, "field"),
                   ("x", "laplacian"): (positive_order_laplacian_x, "func"),
                   ("y", "laplacian"): (positive_order_laplacian_y, "func")}
            fn, kind = ops[(args.axis, args.op)]
            arg = catalog.two_point(args.field, n) if kind == "field" else catalog.scalar(args.func, n)
            v = fn(c, args.index, arg, x)
    print(f"{v:.6f}")
    _emit_summary(args, {"kind": args.kind, "op": args.op, "x": x.tolist(), "value": v})


def cmd_converge(args):
    fam_name = args.family
    default_fields = {"fd": "sqdiff", "frac": "grad0:bump", "poisson": "one", "coupling": "xdiff",
                      "dichotomy": "bumpy", "gaussian": "bumpy"}
    field_name = args.field or default_fields[fam_name]
    if fam_name == "fd":
        fam = family_fd(args.dim)
    elif fam_name == "frac":
        fam = family_frac(args.alpha, args.dim)
    elif fam_name == "poisson":
        fam = family_poisson_cutoff()
    elif fam_name == "gaussian":
        fam = family_gaussian_area()
    elif fam_name == "dichotomy":
        fam = family_tail_dichotomy(catalog.lookup(ZETAS, args.zeta, "density")[0],
                                    ZETAS[args.zeta][1])
    else:
        F, dF = catalog.lookup(catalog.FLOWS, args.F, "flow")
        fam = family_coupling(F, dF)
    x = _point(args.x, args.dim)
    Phi = catalog.two_point(field_name, args.dim)
    rep = estimate_limit(fam, Phi, x, h0=args.h0, levels=args.levels)
    if args.out:
        nan = float("nan")
        rows = []
        for m, (h, q) in enumerate(zip(rep.h, rep.Q)):
            d = rep.diffs[m - 1] if m >= 1 else nan
            p = rep.orders[m - 2] if m >= 2 and m - 2 < len(rep.orders) else nan
            rows.append([h, q, d, p])
        Path(args.out).write_text(_csv(["h", "Q", "diff", "fitted_order"], rows),
                                  encoding="utf-8", newline="\n")
    summary = {"family": fam.name, "field": field_name, "x": x.tolist(), "limit": rep.to_json()["value"],
               **{k: v for k, v in rep.to_json().items() if k != "value"}}
    if fam.limit is not None:
        try:
            claimed = fam.limit(Phi, x)
            summary["claimed_limit"] = claimed if math.isfinite(claimed) else str(claimed)
        except (KirlabError, ArithmeticError, ValueError) as exc:
            summary["claimed_limit"] = f"unavailable: {exc}"
    _emit_summary(args, summary, to_stdout=True)


def cmd_reproduce_all(args):
    const = None if args.haar_constant == "cs" else _haar_constant(args.haar_constant)
    numbers = [int(t) for t in args.only.split(",")] if args.only else None
    if numbers and any(n not in acceptance.CRITERIA for n in numbers):
        raise UsageError(f"criteria are numbered 1..{len(acceptance.CRITERIA)}")
    results = acceptance.run_all(haar_constant=const, numbers=numbers)
    for r in results:
        print(r.line())
    config_failures = 0
    if args.config_dir:
        d = Path(args.config_dir)
        if not d.is_dir():
            raise UsageError(f"{d} is not a directory")
        for p in sorted(d.glob("*.json")):
            code = main(["run", str(p)])
            print(f"[{'PASS' if code == 0 else 'FAIL'}] config {p.name}: exit {code}")
            config_failures += code != 0
    if args.out:
        rows = [[r.number, r.title, "pass" if r.passed else "fail", round(r.seconds, 3),
                 r.error or "; ".join(f"{w.label}={w.value:.6g}" for w in r.failing())] for r in results]
        Path(args.out).write_text(_csv(["criterion", "title", "result", "seconds", "detail"], rows),
                                  encoding="utf-8", newline="\n")
    passed = sum(r.passed for r in results)
    print(f"{passed}/{len(results)} criteria passed")
    return EXIT_OK if passed == len(results) and not config_failures else EXIT_FAIL


def _config_argv(cfg: dict) -> list:
    """Translate a validated config into the argument list of its subcommand."""
    argv = [cfg["module"]]
    if "op" in cfg:
        argv += ["--op", str(cfg["op"])]
    for k, v in cfg.get("params", {}).items():
        flag = "--" + str(k).replace("_", "-")
        if isinstance(v, bool):
            if v:
                argv.append(flag)
        elif isinstance(v, list) and k == "x":
            argv += [flag, *[",".join(map(str, p)) if isinstance(p, list) else str(p) for p in v]]
        elif isinstance(v, (list, dict)):
            argv += [flag, json.dumps(v)]
        else:
            argv += [flag, str(v)]
    if "seed" in cfg and cfg["module"] == "graph":
        argv += ["--seed", str(int(cfg["seed"]))]
    if "output" in cfg:
        argv += ["--out", str(cfg["output"])]
    return argv


def load_config(path: str) -> dict:
    """Read and validate an experiment config; raises ``UsageError`` on any problem."""
    cfg = _load_json(path)
    if not isinstance(cfg, dict):
        raise UsageError("a config must be a JSON object")
    unknown = set(cfg) - CONFIG_FIELDS
    if unknown:
        raise UsageError(f"unknown config fields: {sorted(unknown)}")
    if cfg.get("module") not in MODULES:
        raise UsageError(f"config module must be one of {MODULES}")
    if not isinstance(cfg.get("params", {}), dict):
        raise UsageError("config params must be an object")
    if "seed" in cfg and not isinstance(cfg["seed"], int):
        raise UsageError("config seed must be an integer")
    return cfg


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="kirlab", description="Kirchhoff divergence and Laplace operators.")
    p.add_argument("--version", action="version", version=f"kirlab {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, summary=True):
        sp.add_argument("--out", help="write the CSV table here instead of stdout")
        if summary:
            sp.add_argument("--summary", help="write a JSON summary here")

    g = sub.add_parser("graph", help="operators on a weighted node system")
    g.add_argument("--op", choices=("kirchhoff", "laplacian", "harmonic"), default="laplacian")
    g.add_argument("--graph", help="JSON file with nodes, weights, entries, symmetric")
    g.add_argument("--nodes", type=int, default=12)
    g.add_argument("--dim", type=int, default=2)
    g.add_argument("--asymmetric", action="store_true")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--field", help="builtin field name")
    g.add_argument("--tol", type=float, default=1e-12)
    common(g, summary=False)

    lt = sub.add_parser("lattice", help="finite differences and fractional sums on hZ^n")
    lt.add_argument("--op", choices=("laplacian", "harmonic"), default="laplacian")
    lt.add_argument("--dim", type=int, default=1)
    lt.add_argument("--h", type=float, default=0.1)
    lt.add_argument("--window", type=int, default=5)
    lt.add_argument("--alpha", type=float, help="fractional exponent; omit for finite differences")
    lt.add_argument("--R", type=int, default=None, help="truncation radius of the fractional sum")
    lt.add_argument("--func", default="sq")
    lt.add_argument("--tol", type=float, default=1e-12)
    common(lt, summary=False)

    dy = sub.add_parser("dyadic", help="dyadic metric, Haar spectral and discrete dyadic operators")
    dy.add_argument("--op", choices=("rho", "laplacian", "frac", "spectral"), required=True)
    dy.add_argument("--s", type=float, default=0.25)
    dy.add_argument("--alpha", type=float, default=0.5)
    dy.add_argument("--j", type=int, default=2)
    dy.add_argument("--K", type=int, default=15)
    dy.add_argument("--far", type=int, default=4096, help="direct-sum range of the fractional operator")
    dy.add_argument("--x", type=float, default=0.0)
    dy.add_argument("--y", type=float)
    dy.add_argument("--coef", help='Haar terms as JSON, e.g. [{"j":0,"k":0,"coef":1}]')
    dy.add_argument("--method", choices=("closed", "quadrature"), default="closed")
    dy.add_argument("--constant", choices=("kernel", "cs"), default="kernel",
                    help="eigenvalue used by the closed-form path: the kernel eigenvalue "
                         "or c_s = 2^{2s}/(2^{2s}-1)")
    dy.add_argument("--func", default="bump")
    common(dy)

    me = sub.add_parser("metric", help="operators on metric-measure nets")
    me.add_argument("--op", choices=("laplacian", "kirchhoff", "frac"), default="laplacian")
    me.add_argument("--net", help="JSON net file")
    me.add_argument("--lattice-net", help="h,N")
    me.add_argument("--dyadic-net", help="j,K")
    me.add_argument("--H", type=float, default=1.0, help="constant pair factor H")
    me.add_argument("--alpha", type=float, default=0.5)
    me.add_argument("--func", default="sq")
    me.add_argument("--field", default="sqdiff")
    common(me, summary=False)

    fr = sub.add_parser("frac", help="continuum fractional Kirchhoff divergence")
    fr.add_argument("--s", type=float, required=True)
    fr.add_argument("--dim", type=int, default=1)
    fr.add_argument("--x", nargs="+", default=["0"], help="points, coordinates comma-separated")
    fr.add_argument("--mode", choices=("auto", "regular", "pv"), default="auto")
    fr.add_argument("--field", default="grad0:bump")
    fr.add_argument("--angular", type=int, default=64)
    fr.add_argument("--eps0", type=float, default=0.25)
    fr.add_argument("--levels", type=int, default=12)
    common(fr)

    hi = sub.add_parser("hilbert", help="Hilbert-kernel Kirchhoff divergence")
    hi.add_argument("--x", type=float, default=1.0)
    hi.add_argument("--eps-start", type=float, default=0.1)
    hi.add_argument("--levels", type=int, default=10)
    hi.add_argument("--field", default="cauchy")
    common(hi)

    co = sub.add_parser("coupling", help="independent, deterministic and positive-order couplings")
    co.add_argument("--kind", choices=("indep", "det", "pos-order"), required=True)
    co.add_argument("--op", choices=("kirchhoff", "laplacian"), default="kirchhoff")
    co.add_argument("--F", default="identity")
    co.add_argument("--g", default="one")
    co.add_argument("--h", type=float, default=1.0)
    co.add_argument("--dim", type=int, default=1)
    co.add_argument("--x", default="0.5")
    co.add_argument("--axis", choices=("x", "y"), default="x")
    co.add_argument("--index", type=int, default=0)
    co.add_argument("--lo", type=float, default=-1.0)
    co.add_argument("--hi", type=float, default=1.0)
    co.add_argument("--field", default="sqdiff")
    co.add_argument("--func", default="sq")
    common(co)

    cv = sub.add_parser("converge", help="limits of quotient families")
    cv.add_argument("--family", choices=("fd", "frac", "poisson", "coupling", "dichotomy", "gaussian"),
                    required=True)
    cv.add_argument("--levels", type=int, default=10)
    cv.add_argument("--h0", type=float, default=0.25)
    cv.add_argument("--x", default="0.5")
    cv.add_argument("--dim", type=int, default=1)
    cv.add_argument("--alpha", type=float, default=0.5)
    cv.add_argument("--F", default="pow1ph")
    cv.add_argument("--zeta", default="cauchy")
    cv.add_argument("--field")
    common(cv)

    ra = sub.add_parser("reproduce-all", help="run every acceptance criterion")
    ra.add_argument("--haar-constant", choices=("cs", "kernel"), default="cs",
                    help="constant criterion 1 compares against")
    ra.add_argument("--only", help="comma-separated criterion numbers")
    ra.add_argument("--config-dir", help="also run every *.json config in this directory")
    ra.add_argument("--out", help="write the pass/fail table as CSV")

    rn = sub.add_parser("run", help="run a JSON experiment config")
    rn.add_argument("config")
    return p


COMMANDS = {
    "graph": cmd_graph, "lattice": cmd_lattice, "dyadic": cmd_dyadic, "metric": cmd_metric,
    "frac": cmd_frac, "hilbert": cmd_hilbert, "coupling": cmd_coupling, "converge": cmd_converge,
    "reproduce-all": cmd_reproduce_all,
}


def main(argv=None) -> int:
    try:
        _threads()
        args = build_parser().parse_args(argv)
        if args.command == "run":
            return main(_config_argv(load_config(args.config)))
        code = COMMANDS[args.command](args)
        return EXIT_OK if code is None else code
    except UsageError as exc:
        print(f"kirlab: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (KirlabError, ArithmeticError) as exc:
        print(f"kirlab: numerical contract failed: {exc}", file=sys.stderr)
        return EXIT_CONTRACT
    except ValueError as exc:
        print(f"kirlab: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
