"""Command-line front end.

Every subcommand prints a JSON object (or writes it with ``--out``), honours
``--seed`` and ``--threads`` and exits with 0 on success, 2 when a
verification verdict is FAIL and 1 on usage or domain errors.  Relative
output paths are resolved against ``$BARNESGFF_OUTDIR`` (default: the
working directory).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import platform
import sys
import time
from importlib import resources

import numpy as np
import scipy

from . import __version__
from . import barnesbeta as bb
from . import gffmax as gm
from . import selbergmorris as sm
from .errors import BarnesError, VerificationError
from .multigamma import MultiGammaParams, log_multi_gamma

OUTDIR_ENV = "BARNESGFF_OUTDIR"

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_FAIL = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


# --------------------------------------------------------------------------
# parsing helpers
# --------------------------------------------------------------------------


def _floats(text):
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text):
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _complex(text):
    """``x`` or ``re,im``."""
    parts = _floats(text)
    if len(parts) == 1:
        return complex(parts[0], 0.0)
    if len(parts) == 2:
        return complex(*parts)
    raise argparse.ArgumentTypeError(f"expected 'x' or 're,im', got {text!r}")


def _count(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a count, got {text!r}") from None
    if v < 0 or v != int(v):
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text!r}")
    return int(v)


def _num(v, real_input=False):
    v = complex(v)
    if v.imag == 0 or real_input:
        return float(v.real)
    return {"re": float(v.real), "im": float(v.imag)}


def load_thresholds(path=None):
    """Default verdict thresholds, optionally overridden by a JSON file."""
    with resources.files("barnesgff").joinpath("data/thresholds.json").open() as fh:
        th = json.load(fh)
    if path:
        with open(path) as fh:
            th.update(json.load(fh))
    return th


def schema_path():
    return resources.files("barnesgff").joinpath("data/output.schema.json")


def _outdir():
    return os.environ.get(OUTDIR_ENV) or os.getcwd()


def _resolve(path):
    return path if os.path.isabs(path) else os.path.join(_outdir(), path)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return _num(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def _dumps(obj):
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True)


def _config_hash(args):
    # outputs do not depend on the thread count, so it is not part of the hash
    skip = {"func", "out", "csv", "thresholds", "threads"}
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    return hashlib.sha256(_dumps(cfg).encode()).hexdigest()


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------


def _spec(args):
    return bb.BarnesBetaSpec(args.M, args.N, args.a, args.b)


def cmd_eval_gamma(args, th, ctx):
    w = args.w
    val = complex(log_multi_gamma(MultiGammaParams(args.M, args.a), w, method=args.method))
    return {"log_gamma": _num(val, real_input=w.imag == 0 and w.real > 0)}


def cmd_eval_eta(args, th, ctx):
    spec = _spec(args)
    f = bb.log_eta_lk if args.method == "lk" else bb.log_eta
    val = complex(f(spec, args.q))
    return {"log_eta": _num(val, real_input=args.q.imag == 0)}


def cmd_atom(args, th, ctx):
    return {"atom_mass": bb.atom_mass(_spec(args))}


def cmd_moments(args, th, ctx):
    spec = _spec(args)
    val = bb.moment(spec, args.k)
    mellin = float(np.exp(complex(bb.log_eta(spec, args.k))).real)
    ok = abs(val - mellin) <= th["moment_rel_tol"] * max(1.0, abs(mellin))
    return {"k": args.k, "moment": val, "mellin_value": mellin, "verdict": "PASS" if ok else "FAIL"}


def _write_csv(args, ctx, values, meta):
    path = _resolve(args.csv or f"{ctx['command']}-{ctx['hash'][:12]}.csv")
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    meta = dict(meta, manifest=ctx["manifest_name"](path), seed=args.seed)
    bb.write_samples(path, values, _jsonable(meta))
    ctx["artifacts"].append(path)
    return path


def _summary(x):
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        return {"count": 0}
    q = np.quantile(x, [0.05, 0.5, 0.95])
    return {"count": int(x.size), "mean": float(x.mean()), "std": float(x.std()), "quantiles_5_50_95": q.tolist()}


def cmd_sample(args, th, ctx):
    spec = _spec(args)
    x = bb.sample(spec, args.n, args.seed, args.method, args.threads)
    path = _write_csv(args, ctx, x, {"spec": spec.to_dict(), "path": bb.sampler_path(spec, args.method)})
    return {"csv": os.path.basename(path), "summary": _summary(x), "spec": spec.to_dict()}


def cmd_sample_ratio(args, th, ctx):
    base = _spec(args)
    if args.sine:
        rspec = bb.RatioSpec.sine_choice(base)
    elif args.bbar0 is None:
        raise UsageError("sample-ratio needs --bbar0 or --sine")
    else:
        rspec = bb.RatioSpec(base, args.bbar0)
    x = bb.sample_ratio(rspec, args.n, args.seed, args.method, args.threads)
    path = _write_csv(args, ctx, x, {"ratio": rspec.to_dict()})
    return {"csv": os.path.basename(path), "summary": _summary(x), "ratio": rspec.to_dict()}


def cmd_verify_lk(args, th, ctx):
    spec = _spec(args)
    qs = args.q or [complex(0.5), complex(1.0, 0.5), complex(-0.25 * spec.b0)]
    reports = []
    for q in qs:
        a = complex(bb.log_eta(spec, q))
        b = complex(bb.log_eta_lk(spec, q))
        ok = abs(a - b) <= th["lk_abs_tol"]
        reports.append(
            sm.verification_report(
                spec.to_dict(), f"log_eta(q={_fmt_q(q)})", a, b, 0.0, ok, abs_diff=abs(a - b)
            )
        )
    return _with_verdict({"reports": reports})


def _fmt_q(q):
    q = complex(q)
    return repr(q.real) if q.imag == 0 else f"{q.real!r}{q.imag:+.17g}j"


def _with_verdict(out):
    out["verdict"] = "PASS" if all(r["verdict"] == "PASS" for r in out["reports"]) else "FAIL"
    return out


def _bridge_reports(kind, p, th):
    reports = []
    formula = sm.selberg_moment_formula if kind == "selberg" else sm.morris_moment_formula
    mellin = sm.selberg_mellin if kind == "selberg" else sm.morris_mellin
    for l in range(1, math.ceil(p.tau)):
        f = formula(p, l, check=False)
        m = complex(mellin(p, l)).real
        ok = abs(f - m) <= th["moment_rel_tol"] * max(1.0, abs(f))
        reports.append(sm.verification_report(p.to_dict(), f"{kind}_moment(l={l})", f, m, 0.0, ok, kind=kind))
    return reports


def cmd_verify_selberg(args, th, ctx):
    p = sm.SelbergParams(args.tau, args.l1, args.l2)
    reports = _bridge_reports("selberg", p, th)
    f = sm.selberg_moment_formula(p, args.n)
    est, se = sm.selberg_integral_qmc(args.n, p, args.samples, args.seed)
    ok = abs(est - f) <= th["qmc_nsigma"] * se if se > 0 else abs(est - f) <= 1e-12 * abs(f)
    reports.append(
        sm.verification_report(
            p.to_dict(), f"selberg_integral(n={args.n})", f, est, se, ok, samples=args.samples, qmc_seed=args.seed
        )
    )
    return _with_verdict({"reports": reports})


def cmd_verify_morris(args, th, ctx):
    p = sm.SelbergParams(args.tau, args.l1, args.l2)
    reports = _bridge_reports("morris", p, th)
    f = sm.morris_moment_formula(p, args.n)
    est, se = sm.morris_integral_qmc(args.n, p, args.samples, args.seed)
    est = complex(est)
    nsig = th["qmc_nsigma"]
    if se > 0:
        ok = abs(est.real - f) <= nsig * se and abs(est.imag) <= nsig * se
    else:
        ok = abs(est - f) <= 1e-12 * abs(f)
    reports.append(
        sm.verification_report(
            p.to_dict(), f"morris_integral(n={args.n})", f, est, se, ok, samples=args.samples, qmc_seed=args.seed
        )
    )
    if p.lambda1 == 0 and p.lambda2 == 0:
        for q in (-1.5, -0.5, 0.5, 0.25 * p.tau):
            closed = (2 * math.pi) ** q * math.gamma(1 - q / p.tau) / math.gamma(1 - 1 / p.tau) ** q
            m = complex(sm.morris_mellin(p, q)).real
            ok = abs(m - closed) <= 1e-10 * max(1.0, abs(closed))
            reports.append(sm.verification_report(p.to_dict(), f"morris_special(q={q!r})", closed, m, 0.0, ok))
    return _with_verdict({"reports": reports})


def cmd_verify_duality(args, th, ctx):
    p = sm.SelbergParams(args.tau, args.l1, args.l2)
    kinds = ("selberg", "morris") if args.kind == "both" else (args.kind,)
    reports = []
    tol = th["duality_tol"]
    for kind in kinds:
        r = sm.duality_F(p, args.q, beta=args.beta, kind=kind)
        reports.append(
            sm.verification_report(
                p.to_dict(), f"{kind}_self_duality(q={_fmt_q(args.q)})", r.F, r.F_dual, 0.0, r.residual <= tol,
                residual=r.residual, beta=args.beta if args.beta is not None else 1 / math.sqrt(p.tau),
            )
        )
        if complex(args.q).real < 1:
            res = float(sm.involution_residual(kind, p, args.q))
            reports.append(
                sm.verification_report(
                    p.to_dict(), f"{kind}_involution(q={_fmt_q(args.q)})", 1.0, 1.0 + res, 0.0, res <= tol,
                    residual=res,
                )
            )
    return _with_verdict({"reports": reports})


def cmd_critical(args, th, ctx):
    law = sm.critical_law(args.kind, args.l1, args.l2)
    comp = law.components
    out = {"kind": law.kind, "lambda": [law.lambda1, law.lambda2], "components": comp.to_dict()}
    qs = args.q or [complex(0.5)]
    out["mellin"] = [{"q": _num(q), "value": _num(sm.critical_mellin(law, q))} for q in qs]
    if args.n:
        if args.conjecture:
            from dataclasses import replace

            comp = replace(comp, extra_gamma_factor=True)
        x = sm.sample_components(comp, args.n, args.seed, args.threads)
        path = _write_csv(args, ctx, x, {"critical_law": comp.to_dict(), "kind": law.kind})
        out["csv"] = os.path.basename(path)
        out["summary"] = _summary(x)
    return out


def _gff_config(args, N=None):
    return gm.GFFConfig(
        domain=args.domain,
        N=N if N is not None else args.N,
        kappa=args.kappa,
        lambda1=args.l1,
        lambda2=args.l2,
        alpha=args.alpha,
        beta=args.beta,
        seed=args.seed,
        threads=args.threads,
    )


def cmd_gff_sim(args, th, ctx):
    cfg = _gff_config(args)
    V = gm.sample_fields(cfg, args.runs)
    vmax = np.max(V + cfg.potential(), axis=1)
    z = gm.exponential_functional(cfg, fields=V) / gm.z_normalizer(cfg)
    path = _write_csv(args, ctx, vmax, {"config": cfg.to_dict(), "quantity": "V_N"})
    return {
        "config": cfg.to_dict(),
        "csv": os.path.basename(path),
        "V_N": _summary(vmax),
        "normalised_Z_mean": float(z.mean()),
        "covariance": gm.covariance_factor(cfg)[1],
    }


def cmd_gff_compare(args, th, ctx):
    if args.runs < th["min_gff_runs"]:
        raise UsageError(f"gff-compare needs --runs >= {th['min_gff_runs']} for a verdict")
    cfg = _gff_config(args, N=args.ladder[0])
    res = gm.compare_to_conjecture(cfg, args.runs, args.ladder, args.n_conjecture, c1_band=tuple(th["c1_band"]))
    path = _write_csv(args, ctx, res.samples, {"config": res.config.to_dict(), "quantity": "V_N"})
    out = res.to_dict()
    out["csv"] = os.path.basename(path)
    out["verdict"] = res.comparison["verdict"]
    return out


def cmd_freezing_demo(args, th, ctx):
    return gm.freezing_demo(args.betas, args.q, args.l1, args.l2, args.kind, tol=th["duality_tol"])


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------


def _common(p):
    p.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    p.add_argument("--threads", type=int, default=1, help="worker threads; results do not depend on it")
    p.add_argument("--out", help="write the JSON result to this path instead of stdout")
    p.add_argument("--json", action="store_true", help="JSON output (always on; accepted for scripts)")
    p.add_argument("--thresholds", help="JSON file overriding verdict thresholds")


def _bb_args(p):
    p.add_argument("--M", type=int, required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--a", type=_floats, required=True, help="periods a_1..a_M, comma separated")
    p.add_argument("--b", type=_floats, required=True, help="b_0..b_N, comma separated")


def _sm_args(p, n_default):
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--l1", type=float, default=0.0)
    p.add_argument("--l2", type=float, default=0.0)
    p.add_argument("--n", type=int, default=n_default, help="integral dimension")
    p.add_argument("--samples", type=_count, default=2_000_000, help="QMC points (e.g. 2e6)")


def _gff_args(p):
    p.add_argument("--domain", choices=("interval", "circle"), default="interval")
    p.add_argument("--kappa", type=float, default=None)
    p.add_argument("--l1", type=float, default=0.0)
    p.add_argument("--l2", type=float, default=0.0)
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--beta", type=float, default=0.5)
    p.add_argument("--runs", type=_count, default=1000)
    p.add_argument("--csv", help="CSV path for raw V_N samples")


def build_parser():
    parser = _Parser(prog="barnesgff", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"barnesgff {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("eval-gamma", help="log Gamma_M(w | a)")
    p.add_argument("--M", type=int, required=True)
    p.add_argument("--a", type=_floats, required=True)
    p.add_argument("--w", type=_complex, required=True, help="x or re,im")
    p.add_argument("--method", choices=("auto", "integral", "asymptotic"), default="auto")
    p.set_defaults(func=cmd_eval_gamma)

    p = sub.add_parser("eval-eta", help="log Mellin transform of a Barnes beta law")
    _bb_args(p)
    p.add_argument("--q", type=_complex, required=True, help="x or re,im")
    p.add_argument("--method", choices=("gamma", "lk"), default="gamma")
    p.set_defaults(func=cmd_eval_eta)

    p = sub.add_parser("atom", help="mass of the atom at 1 (M < N)")
    _bb_args(p)
    p.set_defaults(func=cmd_atom)

    p = sub.add_parser("moments", help="integer moment E[beta^k]")
    _bb_args(p)
    p.add_argument("--k", type=int, required=True)
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("sample", help="draw Barnes beta samples to CSV")
    _bb_args(p)
    p.add_argument("--n", type=_count, default=10_000)
    p.add_argument("--method", choices=("poisson", "levy", "exact", "inversion"), default=None)
    p.add_argument("--csv")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("sample-ratio", help="draw ratio samples to CSV")
    _bb_args(p)
    p.add_argument("--bbar0", type=float)
    p.add_argument("--sine", action="store_true", help="use bbar0 = |a| - sum b")
    p.add_argument("--n", type=_count, default=10_000)
    p.add_argument("--method", choices=("levy", "exact", "inversion"), default=None)
    p.add_argument("--csv")
    p.set_defaults(func=cmd_sample_ratio)

    p = sub.add_parser("verify-lk", help="gamma product vs Levy-Khinchine exponent")
    _bb_args(p)
    p.add_argument("--q", type=_complex, action="append", help="repeatable; x or re,im")
    p.set_defaults(func=cmd_verify_lk)

    p = sub.add_parser("verify-selberg", help="Selberg moments vs formula and QMC")
    _sm_args(p, 2)
    p.set_defaults(func=cmd_verify_selberg)

    p = sub.add_parser("verify-morris", help="Morris moments vs formula and QMC")
    _sm_args(p, 2)
    p.set_defaults(func=cmd_verify_morris)

    p = sub.add_parser("verify-duality", help="involution and self-duality residuals")
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--l1", type=float, default=0.0)
    p.add_argument("--l2", type=float, default=0.0)
    p.add_argument("--beta", type=float, default=None, help="default 1/sqrt(tau)")
    p.add_argument("--q", type=_complex, default=complex(0.2))
    p.add_argument("--kind", choices=("selberg", "morris", "both"), default="both")
    p.set_defaults(func=cmd_verify_duality)

    p = sub.add_parser("critical", help="critical Selberg / Morris law")
    p.add_argument("--kind", choices=("selberg", "morris"), default="selberg")
    p.add_argument("--l1", type=float, default=0.0)
    p.add_argument("--l2", type=float, default=0.0)
    p.add_argument("--q", type=_complex, action="append")
    p.add_argument("--n", type=_count, default=0, help="samples to draw (0: none)")
    p.add_argument("--conjecture", action="store_true", help="include the extra Gamma(1-q) factor")
    p.add_argument("--csv")
    p.set_defaults(func=cmd_critical)

    p = sub.add_parser("gff-sim", help="simulate the field maximum")
    _gff_args(p)
    p.add_argument("--N", type=int, default=256)
    p.set_defaults(func=cmd_gff_sim)

    p = sub.add_parser("gff-compare", help="maximum vs conjectured critical law along a ladder")
    _gff_args(p)
    p.add_argument("--ladder", type=_ints, default=gm.DEFAULT_LADDER)
    p.add_argument("--n-conjecture", type=_count, default=100_000)
    p.set_defaults(func=cmd_gff_compare)

    p = sub.add_parser("freezing-demo", help="tabulate F(q | beta) and its dual")
    p.add_argument("--betas", type=_floats, default=(0.3, 0.5, 0.7, 0.9))
    p.add_argument("--q", type=_complex, default=complex(0.2))
    p.add_argument("--l1", type=float, default=0.0)
    p.add_argument("--l2", type=float, default=0.0)
    p.add_argument("--kind", choices=("selberg", "morris"), default="selberg")
    p.set_defaults(func=cmd_freezing_demo)

    for name, sp in sub.choices.items():
        _common(sp)
    return parser


def _manifest(argv, args, ctx, verdict, wall):
    return {
        "command_line": ["barnesgff", *argv],
        "config_hash": ctx["hash"],
        "seed": args.seed,
        "threads": args.threads,
        "versions": {
            "barnesgff": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
        "wall_time_s": wall,
        "verdict_summary": verdict,
        "artifacts": [os.path.basename(a) for a in ctx["artifacts"]],
    }


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_ERROR
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    if args.threads < 1:
        print("barnesgff: error: --threads must be >= 1", file=sys.stderr)
        return EXIT_ERROR
    t0 = time.perf_counter()
    ctx = {"command": args.command, "hash": _config_hash(args), "artifacts": []}
    written = {}

    def manifest_name(path):
        stem = os.path.splitext(path)[0]
        written.setdefault("path", stem + ".manifest.json")
        return os.path.basename(written["path"])

    ctx["manifest_name"] = manifest_name
    try:
        th = load_thresholds(args.thresholds)
        result = args.func(args, th, ctx)
    except UsageError as exc:
        print(f"barnesgff: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except VerificationError as exc:
        print(f"barnesgff: verification failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (BarnesError, ValueError, OSError) as exc:
        print(f"barnesgff: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    result = dict(result)
    verdict = result.get("verdict")
    if "path" in written:
        result["manifest"] = os.path.basename(written["path"])
    if args.out:
        path = _resolve(args.out)
        os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
        result["manifest"] = manifest_name(path)
        with open(path, "w") as fh:
            fh.write(_dumps(result) + "\n")
        ctx["artifacts"].append(path)
    else:
        sys.stdout.write(_dumps(result) + "\n")
    if "path" in written:
        with open(written["path"], "w") as fh:
            fh.write(_dumps(_manifest(argv, args, ctx, verdict, time.perf_counter() - t0)) + "\n")
    return EXIT_FAIL if verdict == "FAIL" else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
