"""Command line front end.

Subcommands
-----------
solve        modulus A_phi at one ray angle, with periods and residual
trajectory   sampled modulus trajectory, CSV/JSON + optional SVG locus
asymp        sample the pe representation y(x), y'(x) on a t-grid
verify       seeded ODE windows: error-decay table + pole-lattice report
stokes-graph traced Stokes curves: SVG figure + JSON polylines/adjacency
monodromy    Stokes parameters and sector-shifted matrices from a G file

Every output embeds the library version, the RNG seed and a hash of the
effective configuration, so identical invocations are byte identical.
Exit codes: 0 ok, 2 no convergence, 3 hypothesis violated, 4 I/O error.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys

import numpy as np

from . import __version__
from . import asymptotics as asym
from . import boutroux as btx
from . import monodromy as mono
from . import oracle
from . import stokes as stk
from .errors import (Dp3Error, HypothesisViolated, NoConvergence,
                     DegenerateProximity)

EXIT_OK = 0
EXIT_NOCONV = 2
EXIT_HYPOTHESIS = 3
EXIT_IO = 4


def _fmt(x):
    return f"{x:.17g}"


def _config_hash(ns_dict):
    blob = json.dumps({k: repr(v) for k, v in sorted(ns_dict.items())
                       if k not in ("func",)}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _meta(args):
    return {"version": __version__, "seed": args.seed,
            "config": _config_hash(vars(args))}


def _emit_json(path, obj):
    text = json.dumps(obj, indent=1, sort_keys=True)
    if path is None or path == "-":
        print(text)
    else:
        with open(path, "w") as fh:
            fh.write(text + "\n")


def _emit_csv(path, header, rows, meta):
    out = sys.stdout if path is None or path == "-" else open(path, "w", newline="")
    try:
        wr = csv.writer(out, lineterminator="\n")
        wr.writerow([f"# dp3 {meta['version']} config={meta['config']} seed={meta['seed']}"])
        wr.writerow(header)
        for r in rows:
            wr.writerow(r)
    finally:
        if out is not sys.stdout:
            out.close()


def _qtol(args):
    return float(os.environ.get("BOUTROUX_QUAD_TOL", args.quad_tol))


def _ntol(args):
    return float(os.environ.get("BOUTROUX_NEWTON_TOL", args.newton_tol))


def _load_G(path):
    data = mono.load_monodromy(path)
    return data


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_solve(args):
    pt = btx.solve_boutroux(args.phi, res_tol=_ntol(args), qtol=_qtol(args))
    rec = {
        "meta": _meta(args),
        "phi": pt.phi,
        "A": [pt.A.real, pt.A.imag],
        "omega_a": [pt.omega_a.real, pt.omega_a.imag],
        "omega_b": [pt.omega_b.real, pt.omega_b.imag],
        "residual": pt.residual_norm,
        "newton_iters": pt.newton_iters,
    }
    if args.json:
        _emit_json(args.out, rec)
    else:
        print(f"phi       = {_fmt(pt.phi)}")
        print(f"A         = {_fmt(pt.A.real)} {pt.A.imag:+.17g}i")
        print(f"Omega_a   = {_fmt(pt.omega_a.real)} {pt.omega_a.imag:+.17g}i")
        print(f"Omega_b   = {_fmt(pt.omega_b.real)} {pt.omega_b.imag:+.17g}i")
        print(f"residual  = {pt.residual_norm:.3e}   iters = {pt.newton_iters}")
    return EXIT_OK


def cmd_trajectory(args):
    tr = btx.trajectory(args.phi_min, args.phi_max, args.n,
                        res_tol=_ntol(args), qtol=_qtol(args))
    meta = _meta(args)
    base = args.out or "trajectory"
    with open(base + ".csv", "w") as fh:
        fh.write(f"# dp3 {meta['version']} config={meta['config']} seed={meta['seed']}\n")
        fh.write(tr.to_csv())
    obj = tr.to_json_obj()
    obj["meta"] = meta
    _emit_json(base + ".json", obj)
    if args.svg:
        _trajectory_svg(tr, base + ".svg")
    print(f"wrote {base}.csv, {base}.json" + (f", {base}.svg" if args.svg else ""))
    return EXIT_OK


def _trajectory_svg(tr, path):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    A = np.array([s.A for s in tr.samples])
    fig, ax = plt.subplots(figsize=(5, 5))
    # extend by the one-third rotations to draw the closed three-lobed locus
    for k, style in ((0, "-"), (1, "--"), (-1, ":")):
        rot = np.exp(2j * np.pi * k / 3)
        ax.plot((rot * A).real, (rot * A).imag, style, lw=1.2,
                label=f"rotation {k}")
    ax.plot([btx.A0.real], [0], "ko", ms=4)
    ax.set_aspect("equal")
    ax.set_xlabel("re A")
    ax.set_ylabel("im A")
    ax.legend(fontsize=8)
    fig.savefig(path, format="svg")
    plt.close(fig)


def cmd_asymp(args):
    data = _load_G(args.g_file)
    sol = asym.asymptotic_solution(data.G, data.a, args.phi, qtol=_qtol(args))
    ts = np.linspace(args.t_min, args.t_max, args.n)
    e = np.exp(1j * args.phi)
    rows = []
    for t in ts:
        x = e * t
        d = asym.distance_to_poles(sol, x)
        if d < 0.05 * sol.ctx.min_period:
            rows.append([_fmt(x.real), _fmt(x.imag), "nan", "nan", "nan",
                         "nan", _fmt(d)])
            continue
        y = asym.eval_y(sol, x)
        yp = asym.eval_yprime(sol, x)
        rows.append([_fmt(v) for v in
                     (x.real, x.imag, y.real, y.imag, yp.real, yp.imag, d)])
    meta = _meta(args)
    _emit_csv(args.out, ["re_x", "im_x", "re_y", "im_y", "re_yp", "im_yp",
                         "dist_to_pole"], rows, meta)
    sidecar = {
        "meta": meta,
        "A_phi": [sol.A.real, sol.A.imag],
        "x0": [sol.x0.real, sol.x0.imag],
        "omega_a": [sol.ctx.omega_a.real, sol.ctx.omega_a.imag],
        "omega_b": [sol.ctx.omega_b.real, sol.ctx.omega_b.imag],
        "omega_0": [sol.omega0.real, sol.omega0.imag],
        "side": sol.side,
    }
    if args.out and args.out != "-":
        _emit_json(args.out + ".json", sidecar)
    return EXIT_OK


def cmd_verify(args):
    data = _load_G(args.g_file)
    sol = asym.asymptotic_solution(data.G, data.a, args.phi, qtol=_qtol(args))
    T_list = [float(s) for s in args.T.split(",")]
    rows, expo = oracle.decay_table(sol, T_list)
    meta = _meta(args)
    table = []
    print(f"# dp3 verify  phi={args.phi}  version={meta['version']} "
          f"config={meta['config']}")
    print("seed_T            sup_window_error")
    for (t0, sup) in rows:
        print(f"{t0.real:10.4f}{t0.imag:+.4f}i   {sup:.6e}")
        table.append({"T": [t0.real, t0.imag], "sup_error": sup})
    print(f"fitted decay exponent: {expo:.4f}")
    # pole lattice check on the middle window
    L = abs(sol.ctx.omega_a) + abs(sol.ctx.omega_b)
    pole_report = pole_match_report(sol, rows[0][0].real, 3 * L)
    print(f"pole report: {pole_report['n_expected']} expected, "
          f"{pole_report['n_detected']} detected, "
          f"max match distance {pole_report['max_distance']:.4e}")
    out = {"meta": meta, "decay": table, "exponent": expo,
           "poles": pole_report}
    if args.out:
        _emit_json(args.out, out)
    ok = all(table[i]["sup_error"] > table[i + 1]["sup_error"]
             for i in range(len(table) - 1)) and expo > 0
    return EXIT_OK if ok else EXIT_NOCONV


def pole_match_report(sol, T, span, band=None, controls=None):
    """Integrate through span from T and match detected poles to the lattice."""
    e = np.exp(1j * sol.phi)
    seed = oracle.seed_from_asymptotics(sol, T)
    run = oracle.integrate_ray(seed, sol.phi, T + span, controls)
    if band is None:
        band = 0.45 * sol.ctx.min_period
    lat = asym.pole_lattice(sol, oracle._window_box(e, T, span, 3.0))
    lat_t = [p / e for p in lat]
    expected = [p for p in lat_t
                if T + 0.5 < p.real < T + span - 0.5 and abs(p.imag) < band]
    dists = []
    for p in run.detected_poles:
        dists.append(min(abs(p - q) for q in lat) if lat else np.inf)
    return {
        "n_expected": len(expected),
        "n_detected": len(run.detected_poles),
        "max_distance": max(dists) if dists else 0.0,
        "detected": [[p.real, p.imag] for p in run.detected_poles],
        "expected": [[(e * p).real, (e * p).imag] for p in expected],
    }


def cmd_stokes_graph(args):
    if abs(args.phi) < 1e-3 or abs(abs(args.phi) - np.pi / 3) < 1e-3:
        print("phi too close to a sector boundary for a generic graph",
              file=sys.stderr)
        return EXIT_HYPOTHESIS
    pt = btx.solve_boutroux(args.phi, qtol=_qtol(args))
    t = np.inf if args.t is None else args.t
    tps = stk.turning_points(t, args.phi, args.a, pt.A)
    curves = stk.trace_stokes_curves(tps)
    adj = sorted(sorted(edge) for edge in stk.graph_adjacency(curves))
    meta = _meta(args)
    base = args.out or "stokes-graph"
    if base.endswith(".svg"):
        base = base[:-4]
    _stokes_svg(tps, curves, base + ".svg")
    _emit_json(base + ".json", {
        "meta": meta,
        "phi": args.phi,
        "A_phi": [pt.A.real, pt.A.imag],
        "turning_points": {k: [v.real, v.imag] for k, v in tps.as_dict().items()},
        "adjacency": adj,
        "polylines": [
            {"origin": c.origin_label, "terminal": c.terminal_label,
             "points": [[z.real, z.imag] for z in c.polyline]}
            for c in curves],
    })
    print(f"wrote {base}.svg, {base}.json ({len(curves)} curves)")
    return EXIT_OK


def _stokes_svg(tps, curves, path, viewport=3.0):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    fig, ax = plt.subplots(figsize=(5, 5))
    for c in curves:
        z = np.array(c.polyline)
        ax.plot(z.real, z.imag, "-", lw=0.9, color="tab:blue")
    for name, tp in tps.as_dict().items():
        ax.plot([tp.real], [tp.imag], "k.", ms=6)
        ax.annotate(name.replace("lambda", "λ"), (tp.real, tp.imag),
                    fontsize=7, xytext=(3, 3), textcoords="offset points")
    ax.plot([0], [0], "rx", ms=6)
    ax.set_xlim(-viewport, viewport)
    ax.set_ylim(-viewport, viewport)
    ax.set_aspect("equal")
    fig.savefig(path, format="svg")
    plt.close(fig)


def cmd_monodromy(args):
    data = _load_G(args.g_file).with_stokes()
    st = data.stokes
    Gm = mono.shift_G(args.m, data)
    alt = mono.shift_G_alt(args.m, data)
    res = float(np.linalg.norm(Gm - alt))
    rec = {
        "meta": _meta(args),
        "m": args.m,
        "stokes": {"s_inf_0": [st.s_inf_0.real, st.s_inf_0.imag],
                   "s_inf_1": [st.s_inf_1.real, st.s_inf_1.imag],
                   "s_0_0": [st.s_0_0.real, st.s_0_0.imag]},
        "manifold_residual": mono.manifold_residual(data.G, data.a, st),
        "G_shifted": [[v.real, v.imag] for v in Gm.flatten()],
        "dual_form_residual": res,
    }
    if args.json:
        _emit_json(args.out, rec)
    else:
        print(f"s_inf_0 = {st.s_inf_0}")
        print(f"s_inf_1 = {st.s_inf_1}")
        print(f"s_0_0   = {st.s_0_0}")
        print(f"manifold residual = {rec['manifold_residual']:.3e}")
        print(f"G^({args.m}) =")
        for row in Gm:
            print("   ", "  ".join(f"{v.real:+.12g}{v.imag:+.12g}i" for v in row))
        print(f"dual-form cross-check residual = {res:.3e}")
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(
        prog="dp3",
        description="Elliptic asymptotics of the degenerate Painleve III "
                    "transcendents: Boutroux modulus trajectory, theta/pe "
                    "machinery, monodromy phase shifts, ODE verification.")
    p.add_argument("--quad-tol", type=float, default=1e-11,
                   help="quadrature tolerance (env BOUTROUX_QUAD_TOL)")
    p.add_argument("--newton-tol", type=float, default=1e-10,
                   help="Newton residual tolerance (env BOUTROUX_NEWTON_TOL)")
    p.add_argument("--seed", type=int, default=0,
                   help="RNG seed recorded in outputs")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="solve for A_phi at one angle")
    s.add_argument("--phi", type=float, required=True)
    s.add_argument("--json", action="store_true")
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("trajectory", help="sample the modulus trajectory")
    s.add_argument("--phi-min", type=float, default=-np.pi / 3)
    s.add_argument("--phi-max", type=float, default=np.pi / 3)
    s.add_argument("--n", type=int, default=121)
    s.add_argument("--svg", action="store_true")
    s.add_argument("--out", default=None, help="basename for outputs")
    s.set_defaults(func=cmd_trajectory)

    s = sub.add_parser("asymp", help="sample y(x), y'(x) along a ray")
    s.add_argument("--g-file", required=True)
    s.add_argument("--phi", type=float, required=True)
    s.add_argument("--t-min", type=float, default=40.0)
    s.add_argument("--t-max", type=float, default=60.0)
    s.add_argument("--n", type=int, default=201)
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_asymp)

    s = sub.add_parser("verify", help="ODE oracle error-decay report")
    s.add_argument("--g-file", required=True)
    s.add_argument("--phi", type=float, required=True)
    s.add_argument("--T", default="40,80,160", help="comma list of seed times")
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("stokes-graph", help="trace and render a Stokes graph")
    s.add_argument("--phi", type=float, required=True)
    s.add_argument("--t", type=float, default=None, help="finite t (default inf)")
    s.add_argument("--a", type=complex, default=0j)
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_stokes_graph)

    s = sub.add_parser("monodromy", help="Stokes parameters and G^(m)")
    s.add_argument("--g-file", required=True)
    s.add_argument("--m", type=int, default=1)
    s.add_argument("--json", action="store_true")
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_monodromy)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (NoConvergence, DegenerateProximity) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOCONV
    except HypothesisViolated as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except Dp3Error as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOCONV


if __name__ == "__main__":
    sys.exit(main())
