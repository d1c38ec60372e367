"""Command-line experiment runner.

Each subcommand runs one family of checks, writes a CSV residual table
plus a JSON metadata file, and exits 0 exactly when every residual is
below its tolerance.  Configuration is a flat KEY=VALUE text file with
command-line overrides; all runs are deterministic given the seed, and
the CSV bodies are byte-identical across repeated runs.
"""

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .theta import ThetaContext, PoleError


class ConfigError(Exception):
    pass


def _parse_weights(text):
    return [int(w) for w in str(text).split(",") if w != ""]


def _parse_sites(text):
    return [complex(s.replace(" ", "")) for s in str(text).split(",")
            if s != ""]


# per-subcommand config schema: key -> (parser, default)
SCHEMAS = {
    "theta-check": {
        "q": (complex, 0.3),
        "points": (int, 100),
        "tol": (float, 1e-10),
    },
    "rational-classical": {
        "n": (int, 2),
        "nsites": (int, 3),
        "trials": (int, 3),
        "tol": (float, 1e-8),
        "tol_oracle": (float, 1e-6),
        "tol_flow": (float, 1e-8),
    },
    "rational-quantum": {
        "weights": (_parse_weights, [1, 1, 1]),
        "sites": (_parse_sites, None),
        "n": (int, 3),
        "p_max": (int, 20),
        "tol": (float, 1e-12),
    },
    "elliptic-classical": {
        "q": (complex, 0.3),
        "n": (int, 2),
        "nsites": (int, 2),
        "points": (int, 50),
        "tol": (float, 1e-9),
        "tol_bracket": (float, 1e-8),
    },
    "elliptic-quantum": {
        "q": (complex, 0.3),
        "k": (int, 0),
        "weights": (_parse_weights, [1, 1]),
        "twists": (int, 10),
        "tol": (float, 1e-8),
        "tol_symbol": (float, 1e-9),
        "tol_invariance": (float, 1e-10),
    },
}
COMMON_KEYS = ("seed", "out")


def load_config(path):
    """Flat KEY=VALUE file; '#' starts a comment; unknown keys are
    rejected by run()."""
    items = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("line %d: expected KEY=VALUE, got %r"
                              % (lineno, raw))
        key, val = line.split("=", 1)
        key = key.strip()
        if key in items:
            raise ConfigError("duplicate key %r" % key)
        items[key] = val.strip()
    return items


def resolve_config(name, raw, overrides):
    """Merge file values and CLI overrides against the subcommand
    schema; reject unknown keys."""
    schema = SCHEMAS[name]
    cfg = {}
    for key, txt in raw.items():
        if key in COMMON_KEYS:
            cfg[key] = txt
            continue
        if key not in schema:
            raise ConfigError("unknown key %r for %s (known: %s)"
                              % (key, name,
                                 ", ".join(sorted(schema) + list(COMMON_KEYS))))
        parse, _ = schema[key]
        try:
            cfg[key] = parse(txt)
        except (ValueError, TypeError) as exc:
            raise ConfigError("bad value for %r: %s" % (key, exc))
    for key, (parse, default) in schema.items():
        cfg.setdefault(key, default)
    for key, val in overrides.items():
        if val is not None:
            cfg[key] = val
    cfg["seed"] = int(cfg.get("seed", 0))
    cfg["out"] = str(cfg.get("out", "."))
    if "q" in cfg and cfg["q"].imag == 0.0:
        cfg["q"] = cfg["q"].real
    return cfg


def _fmt(value):
    """Format a number for CSV: floats as shortest round-trip text,
    complex numbers as a "re+imj" string."""
    value = complex(value)
    if value.imag == 0.0:
        return repr(value.real)
    sign = "+" if value.imag >= 0.0 else "-"
    return "%r%s%rj" % (value.real, sign, abs(value.imag))


def _rng(seed, task):
    """Per-task stream derived from (seed, task index)."""
    return np.random.default_rng([seed, task])


def _unit_annulus(rng, lo=0.8, hi=1.3):
    return np.exp(1j * rng.uniform(0.0, 2.0 * np.pi)) * rng.uniform(lo, hi)


# -- subcommands -------------------------------------------------------------

def run_theta_check(cfg):
    from . import theta as th
    ctx = ThetaContext(cfg["q"])
    rng = _rng(cfg["seed"], 0)
    one_arg = [
        ("functional_equation", th.functional_equation_residual),
        ("inversion", th.inversion_residual),
        ("logderiv_shift", th.shift_residual),
        ("reflection", th.reflection_residual),
        ("wp_even", th.wp_even_residual),
    ]
    worst = {name: 0.0 for name, _ in one_arg}
    worst.update(kernel_pair=0.0, addition=0.0, mixed_derivative=0.0,
                 cross_square=0.0)
    count = 0
    while count < cfg["points"]:
        pts = [_unit_annulus(rng) for _ in range(4)]
        try:
            for name, fn in one_arg:
                worst[name] = max(worst[name], fn(ctx, pts[0]))
            worst["kernel_pair"] = max(
                worst["kernel_pair"], th.wp_pair_residual(ctx, pts[0], pts[1]))
            worst["addition"] = max(
                worst["addition"],
                th.addition_residual(ctx, pts[0], pts[1], pts[2], pts[3]))
            worst["mixed_derivative"] = max(
                worst["mixed_derivative"],
                th.mixed_derivative_residual(ctx, pts[0], pts[1], pts[2]))
            worst["cross_square"] = max(
                worst["cross_square"],
                th.cross_square_residual(ctx, pts[0], pts[1]))
        except PoleError:
            continue
        count += 1
    rows = [("theta_at_one", "q=%s" % _fmt(ctx.q),
             th.theta_one_residual(ctx), cfg["tol"])]
    for name in worst:
        rows.append((name, "points=%d" % cfg["points"], worst[name],
                     cfg["tol"]))
    return rows, ctx


def run_rational_classical(cfg):
    from . import rational_classical as rc
    rng = _rng(cfg["seed"], 1)
    n, N = cfg["n"], cfg["nsites"]
    inv_worst = 0.0
    oracle_worst = 0.0
    for _ in range(cfg["trials"]):
        pt = rc.random_nilpotent_point(n, N, rng)
        coeffs = rc.HitchinCoefficients(pt, list(range(2, n + 1)))
        obs = [rc.HitchinObservable(pt, d, a, coeffs)
               for d, a in coeffs.keys()]
        scale = max(1.0, max(abs(v) for v in coeffs.values.values()))
        for i, f in enumerate(obs):
            for g in obs[i + 1:]:
                inv_worst = max(inv_worst,
                                abs(rc.kk_bracket(f, g, pt)) / scale)
        f, g = obs[0], obs[-1]
        analytic = rc.kk_bracket(f, g, pt)
        fd = rc.kk_bracket(lambda p: f.value(p), lambda p: g.value(p), pt)
        oracle_worst = max(oracle_worst, abs(analytic - fd))
    pt = rc.random_nilpotent_point(2, N, rng)
    coeffs = rc.HitchinCoefficients(pt, [2])
    scale = max(1.0, max(abs(v) for v in coeffs.values.values()))
    flow_worst = 0.0
    for d, a in coeffs.keys():
        _, drift = rc.integrate_flow(pt, (d, a), T=1.0, dt=1e-2)
        flow_worst = max(flow_worst, drift / scale)
    return [
        ("involutivity", "n=%d,N=%d" % (n, N), inv_worst, cfg["tol"]),
        ("gradient_fd_oracle", "n=%d,N=%d" % (n, N), oracle_worst,
         cfg["tol_oracle"]),
        ("flow_conservation", "d=2,N=%d" % N, flow_worst, cfg["tol_flow"]),
    ], None


def run_rational_quantum(cfg):
    from fractions import Fraction
    from . import rational_quantum as rq
    from .lie import TensorRepSpace
    weights = cfg["weights"]
    sites = cfg["sites"]
    if sites is None:
        sites = [complex(2 * i + 1) for i in range(len(weights))]
    system = rq.GaudinSystem(TensorRepSpace(weights), sites)
    hams, _ = rq.gaudin_residues(system)
    scale = max(1.0, max(np.abs(h).max() for h in hams))
    comm = max(rq.commutator_norm(hams[i], hams[j]) / scale
               for i in range(len(hams)) for j in range(i + 1, len(hams)))
    total = np.abs(sum(hams)).max() / scale
    if all(s.imag == 0 and s.real == int(s.real) for s in sites):
        exact = rq.gaudin_residues_exact(
            weights, [Fraction(int(s.real)) for s in sites])
        exact_comm = 0.0
        for i in range(len(exact)):
            for j in range(i + 1, len(exact)):
                c = exact[i] @ exact[j] - exact[j] @ exact[i]
                exact_comm = max(exact_comm,
                                 float(max(abs(v) for v in c.ravel())))
    else:
        exact_comm = comm
    s = rq.s_polynomials(cfg["n"], cfg["p_max"])
    n = cfg["n"]
    s_res = float(abs(s[1] - Fraction(n, 2))
                  + abs(s[2] - Fraction(-2 * n, 3))
                  + (abs(s[3] - Fraction(n * (n + 6), 8))
                     if cfg["p_max"] >= 4 else 0))
    wtxt = ",".join(str(w) for w in weights)
    return [
        ("gaudin_commutators", "weights=%s" % wtxt, comm, cfg["tol"]),
        ("gaudin_sum_rule", "weights=%s" % wtxt, total, cfg["tol"]),
        ("gaudin_commutators_exact", "weights=%s" % wtxt, exact_comm, 0.5),
        ("s_polynomial_values", "n=%d,p_max=%d" % (n, cfg["p_max"]),
         s_res, 0.5),
    ], None


def run_elliptic_classical(cfg):
    from . import elliptic_classical as ec
    ctx = ThetaContext(cfg["q"])
    rng = _rng(cfg["seed"], 2)
    n, N = cfg["n"], cfg["nsites"]
    rmat_worst = 0.0
    trace_worst = 0.0
    done = 0
    while done < cfg["points"]:
        try:
            pt = ec.random_elliptic_point(n, N, cfg["q"], rng,
                                          moment=(done % 2 == 1))
            z = _unit_annulus(rng)
            w = _unit_annulus(rng)
            if abs(z / w - 1.0) < 0.05:
                w *= 1.2
            scale = max(np.abs(ec.bracket_tensor(pt, z, w)).max(), 1.0)
            rmat_worst = max(rmat_worst,
                             ec.verify_dynamical_rmatrix(pt, z, w) / scale)
            hams = ec.hamiltonians_elliptic(pt)
            hscale = max(abs(hams.h0), 1.0)
            trace_worst = max(trace_worst,
                              ec.trace_expansion(pt, z, hams) / hscale)
        except PoleError:
            continue
        done += 1
    bracket_worst = 0.0
    for trial in range(3):
        pt = ec.random_elliptic_point(n, N, cfg["q"], rng, moment=True)
        hams = ec.hamiltonians_elliptic(pt)
        hscale = max(abs(hams.h0), max(abs(h) for h in hams.h), 1.0)
        fams = [lambda p: ec.hamiltonians_elliptic(p).h0]
        for i in range(N):
            fams.append(lambda p, i=i: ec.hamiltonians_elliptic(p).h[i])
        for i, f in enumerate(fams):
            for g in fams[i + 1:]:
                bracket_worst = max(
                    bracket_worst,
                    abs(ec.poisson_bracket(f, g, pt)) / hscale)
    label = "n=%d,N=%d" % (n, N)
    return [
        ("dynamical_rmatrix", label, rmat_worst, cfg["tol"]),
        ("trace_expansion", label, trace_worst, cfg["tol"]),
        ("hamiltonian_brackets", label, bracket_worst, cfg["tol_bracket"]),
    ], ctx


def run_elliptic_quantum(cfg):
    from . import elliptic_quantum as eq
    ctx = ThetaContext(cfg["q"])
    rng = _rng(cfg["seed"], 3)
    weights = cfg["weights"]
    N = len(weights)
    sites = np.array([np.exp(2j * np.pi * (i + 0.17) / max(N, 1))
                      * (1.0 + 0.25 * i) for i in range(N)])
    params = eq.QuantumEllipticParams(ctx, cfg["k"], weights, sites)
    ts = [_unit_annulus(rng, 0.85, 1.2) for _ in range(cfg["twists"])]
    comm = eq.check_reduced_commutativity(params, ts, [-2, -1, 0, 1, 2])
    sym = eq.symbol_residual(params, rng, samples=20)
    z = _unit_annulus(rng)
    t = _unit_annulus(rng, 0.85, 1.2)
    s2 = eq.check_s2_invariance(params, z, t)
    lat = eq.check_lattice_invariance(params, z, t)
    label = "weights=%s,k=%d" % (",".join(str(w) for w in weights), cfg["k"])
    return [
        ("reduced_commutativity", label, comm, cfg["tol"]),
        ("symbol_consistency", label, sym, cfg["tol_symbol"]),
        ("twist_swap_invariance", label, s2, cfg["tol_invariance"]),
        ("lattice_invariance", label, lat, cfg["tol_invariance"]),
    ], ctx


RUNNERS = {
    "theta-check": run_theta_check,
    "rational-classical": run_rational_classical,
    "rational-quantum": run_rational_quantum,
    "elliptic-classical": run_elliptic_classical,
    "elliptic-quantum": run_elliptic_quantum,
}


# -- reporting ---------------------------------------------------------------

def write_report(name, cfg, rows, ctx, outdir):
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    csv_path = outdir / ("%s.csv" % name)
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["check", "params", "residual", "tolerance",
                         "status"])
        for check, label, residual, tol in rows:
            writer.writerow([check, label, _fmt(residual), _fmt(tol),
                             "pass" if residual < tol else "FAIL"])
    meta = {
        "experiment": name,
        "package_version": __version__,
        "python_version": sys.version.split()[0],
        "numpy_version": np.__version__,
        "seed": cfg["seed"],
        "tolerances": {k: v for k, v in cfg.items()
                       if k.startswith("tol")},
        "config": {k: (_fmt(v) if isinstance(v, complex) else v)
                   for k, v in cfg.items()
                   if k not in ("out", "sites") or v is None},
    }
    if ctx is not None:
        meta["q"] = _fmt(ctx.q)
        meta["wp_const"] = _fmt(ctx.wp_const())
    with open(outdir / ("%s.json" % name), "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return csv_path


def build_parser():
    parser = argparse.ArgumentParser(
        prog="hitchin",
        description="Residual checks for rational and elliptic "
                    "Gaudin/Hitchin integrable systems.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, schema in SCHEMAS.items():
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="KEY=VALUE file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None, help="report directory")
        p.add_argument("--tol", type=float, default=None)
        for key, (parse, default) in schema.items():
            if key == "tol":
                continue
            p.add_argument("--%s" % key.replace("_", "-"), dest=key,
                           type=parse, default=None)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    name = args.command
    try:
        raw = load_config(args.config) if args.config else {}
        overrides = {k: v for k, v in vars(args).items()
                     if k not in ("command", "config")}
        cfg = resolve_config(name, raw, overrides)
    except (ConfigError, OSError) as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return 2
    try:
        rows, ctx = RUNNERS[name](cfg)
    except PoleError as exc:
        print("pole guard violation during %s: %s" % (name, exc),
              file=sys.stderr)
        return 3
    csv_path = write_report(name, cfg, rows, ctx, cfg["out"])
    failures = [r for r in rows if not r[2] < r[3]]
    for check, label, residual, tol in rows:
        status = "pass" if residual < tol else "FAIL"
        print("%-28s %-24s %12.3e  (tol %.1e)  %s"
              % (check, label, residual, tol, status))
    print("report: %s" % csv_path)
    return 0 if not failures else 1


if __name__ == "__main__":
    sys.exit(main())
