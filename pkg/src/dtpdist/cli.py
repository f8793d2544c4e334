"""Command-line front end.

One verb per process: fit-mle, fit-bayes, measures, prior-induce, propriety,
compare, hier, sample.  Input is UTF-8 CSV with '.' decimal separator (LF or
CRLF); output is CSV or JSON, written atomically (temp file + rename).  Each
report embeds the package version, the seed, the model identity, and a hash
of the prior configuration so a run can be re-described exactly.

Exit codes: 0 success, 1 input error, 2 non-convergence, 3 propriety hard
failure, 4 injectivity failure.

With --plot, report paths additionally render the emitted tables as PNG
figures next to the delimited output; the CSV remains the contract.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
import tempfile

import numpy as np

from . import __version__
from .core import (
    DtpParamsEpsSkew,
    MODEL_KINDS,
    Observation,
    dtp_sample,
)
from .families import FAMILY_TAGS, descriptor
from .inference import (
    HierData,
    McmcConfig,
    ParamSpace,
    compare_models,
    default_priors,
    fit_bayes,
    hier_fit,
    hier_predictive,
    mle_fit,
)
from .measures import ag_measure, cj_curve, kappa_measure, kappa_range
from .numerics import BracketError, ConvergenceError, DomainError, rng_stream
from .priors import (
    Prior1D,
    half_cauchy_prior,
    improper_flat_prior,
    improper_scale_prior,
    induce_delta_prior,
    point_mass_prior,
    set_obs_audit,
    thm1_audit,
    thm2_audit,
    uniform_prior,
)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NO_CONVERGENCE = 2
EXIT_PROPRIETY = 3
EXIT_INJECTIVITY = 4


class InputError(Exception):
    pass


# ---------------------------------------------------------------------------
# input parsing

def _read_rows(path):
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            return list(csv.reader(fh))
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def _parse_cell(cell, path, line_no):
    try:
        return float(cell)
    except ValueError:
        raise InputError(
            f"{path}, line {line_no}: non-numeric value {cell!r}"
        ) from None


def _maybe_skip_header(rows):
    if rows and rows[0]:
        try:
            float(rows[0][0])
        except ValueError:
            return rows[1:], 2
    return rows, 1


def load_observations(path):
    """Points from a one-column CSV; intervals from a two-column lo,hi CSV
    where an empty cell means an unbounded end."""
    rows = _read_rows(path)
    rows, first = _maybe_skip_header(rows)
    obs = []
    for i, row in enumerate(rows):
        row = [c.strip() for c in row if True]
        if not row or all(c == "" for c in row):
            continue
        line = first + i
        if len(row) == 1:
            obs.append(Observation(point=_parse_cell(row[0], path, line)))
        elif len(row) == 2:
            lo = -math.inf if row[0] == "" else _parse_cell(row[0], path, line)
            hi = math.inf if row[1] == "" else _parse_cell(row[1], path, line)
            try:
                obs.append(Observation(interval=(lo, hi)))
            except DomainError as exc:
                raise InputError(f"{path}, line {line}: {exc}") from exc
        else:
            raise InputError(f"{path}, line {line}: expected 1 or 2 columns")
    if not obs:
        raise InputError(f"{path}: no observations")
    return obs


def load_hier(path):
    rows = _read_rows(path)
    rows, first = _maybe_skip_header(rows)
    y, s = [], []
    for i, row in enumerate(rows):
        row = [c.strip() for c in row]
        if not row or all(c == "" for c in row):
            continue
        line = first + i
        if len(row) != 2:
            raise InputError(f"{path}, line {line}: expected y,sigma columns")
        y.append(_parse_cell(row[0], path, line))
        s.append(_parse_cell(row[1], path, line))
    try:
        return HierData(y=np.array(y), sigma_j=np.array(s))
    except DomainError as exc:
        raise InputError(f"{path}: {exc}") from exc


# ---------------------------------------------------------------------------
# prior configuration: --prior name=spec, e.g. sigma=half_cauchy:1.0

def parse_prior_spec(text: str) -> Prior1D:
    kind, _, args = text.partition(":")
    vals = [float(a) for a in args.split(",")] if args else []
    if kind == "uniform" and len(vals) == 2:
        return uniform_prior(*vals)
    if kind == "half_cauchy" and len(vals) == 1:
        return half_cauchy_prior(vals[0])
    if kind == "point" and len(vals) == 1:
        return point_mass_prior(vals[0])
    if kind == "improper_scale" and not vals:
        return improper_scale_prior()
    if kind == "improper_flat":
        return improper_flat_prior(*vals) if vals else improper_flat_prior()
    if kind.startswith("induced") and not vals:
        # family is substituted where the prior is attached
        return None
    raise InputError(f"unrecognized prior spec {text!r}")


def build_priors(args, data, space: ParamSpace) -> dict:
    priors = default_priors(data, space)
    for entry in args.prior or []:
        name, sep, spec = entry.partition("=")
        if not sep:
            raise InputError(f"--prior expects name=spec, got {entry!r}")
        if name not in space.names:
            raise InputError(f"--prior {name!r} is not a parameter of this model")
        parsed = parse_prior_spec(spec)
        if parsed is None:
            parsed = induce_delta_prior(space.family)
        if name in ("gamma", "zeta") and not (
            parsed.support[0] >= -1.0 and parsed.support[1] <= 1.0
        ):
            raise InputError(
                f"prior support for {name} must lie within (-1, 1)"
            )
        if name in ("sigma", "delta") and parsed.support[0] < 0.0:
            raise InputError(f"prior support for {name} must be nonnegative")
        priors[name] = parsed
    return priors


def prior_config_hash(priors: dict) -> str:
    blob = ";".join(
        f"{name}={priors[name].kind}:{sorted(priors[name].params.items())}"
        for name in sorted(priors)
    )
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


# ---------------------------------------------------------------------------
# output

def atomic_write(path, text):
    d = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def stamp(args, priors=None, **extra):
    meta = {"version": __version__, "seed": args.seed}
    for key in ("family", "kind"):
        val = getattr(args, key, None)
        if val is not None:
            meta[key] = val
    if priors is not None:
        meta["prior_config"] = prior_config_hash(priors)
    meta.update(extra)
    return meta


def emit(args, meta: dict, rows: list, header: list):
    """Serialize the report; CSV carries metadata as leading comment lines."""
    if args.format == "json":
        text = json.dumps({"meta": meta, "columns": header, "rows": rows},
                          indent=2, default=float) + "\n"
    else:
        buf = io.StringIO()
        for key, val in meta.items():
            buf.write(f"# {key}={val}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)
        text = buf.getvalue()
    if args.output:
        atomic_write(args.output, text)
    else:
        sys.stdout.write(text)


def _fig_path(args, suffix):
    base = args.output if args.output else "report"
    root, _ = os.path.splitext(base)
    return f"{root}-{suffix}.png"


# ---------------------------------------------------------------------------
# commands

def _round6(values):
    return [round(float(v), 6) for v in values]


def cmd_fit_mle(args):
    data = load_observations(args.input)
    rep = mle_fit(data, args.family, args.kind,
                  restarts=args.restarts, seed=args.seed)
    if not rep.converged:
        print("optimizer did not converge", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    meta = stamp(args, n_obs=len(data), log_lik=round(rep.log_lik, 6),
                 aic=round(rep.aic, 6), bic=round(rep.bic, 6),
                 restarts=rep.restarts_used)
    rows = [[name, round(val, 6)] for name, val in rep.params_hat.items()]
    emit(args, meta, rows, ["parameter", "estimate"])
    if args.plot:
        from .plotting import render_density_figure

        params = DtpParamsEpsSkew(family=args.family, **rep.params_hat,
                                  **{k: 0.0 for k in ("gamma", "delta", "zeta")
                                     if k not in rep.params_hat})
        pts = [o.point for o in data if o.point is not None]
        if pts:
            from .core import dtp_pdf

            grid = np.linspace(min(pts), max(pts), 400)
            render_density_figure(grid, dtp_pdf(params, grid),
                                  _fig_path(args, "mle-density"), data=pts,
                                  label="fitted density")
    return EXIT_OK


def cmd_fit_bayes(args):
    data = load_observations(args.input)
    space = ParamSpace.create(args.family, args.kind)
    priors = build_priors(args, data, space)
    if "delta" in priors:
        verdict = thm1_audit(args.family, priors["delta"], len(data))
        if verdict.status in ("improper", "necessary_condition_violated") \
                and not all(
            p.proper for p in priors.values()
        ):
            print("propriety audit: " + "; ".join(verdict.theorem_trail),
                  file=sys.stderr)
            return EXIT_PROPRIETY
    cfg = McmcConfig(iterations=args.iterations, burn_in=args.burn_in,
                     thin=args.thin, seed=args.seed)
    fit = fit_bayes(data, args.family, args.kind, priors=priors, config=cfg)
    draws = fit.chain.draws
    rows = []
    for j, name in enumerate(space.names):
        col = draws[:, j]
        lo, hi = np.percentile(col, [2.5, 97.5])
        rows.append([name] + _round6([col.mean(), np.median(col), lo, hi,
                                      fit.chain.acceptance_stats[name]]))
    meta = stamp(args, priors=priors, n_obs=len(data),
                 iterations=cfg.iterations, burn_in=cfg.burn_in, thin=cfg.thin,
                 kept_draws=fit.chain.n_draws)
    emit(args, meta, rows,
         ["parameter", "mean", "median", "q2.5", "q97.5", "acceptance"])
    if args.draws_output:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(space.names)
        for row in draws:
            writer.writerow(_round6(row))
        atomic_write(args.draws_output, buf.getvalue())
    if args.plot:
        from .plotting import render_trace_figure

        render_trace_figure(draws, space.names, _fig_path(args, "trace"))
    return EXIT_OK


def _params_from_flags(args):
    fields = {"mu": args.mu, "sigma": args.sigma, "gamma": args.gamma,
              "delta": args.delta, "zeta": args.zeta}
    try:
        return DtpParamsEpsSkew(family=args.family, **fields)
    except DomainError as exc:
        raise InputError(str(exc)) from exc


def cmd_measures(args):
    params = _params_from_flags(args)
    ag = ag_measure(params)
    p_grid = np.linspace(0.01, 0.99, 99)
    curve = cj_curve(params, p_grid)
    desc = descriptor(args.family)
    kappa = None
    if desc.has_shape_param or args.family in ("normal",):
        try:
            kappa = kappa_measure(args.family, args.delta)
        except DomainError:
            kappa = None
    meta = stamp(args, ag=round(ag, 6),
                 kappa="" if kappa is None else round(kappa, 6))
    rows = [[round(p, 4), round(v, 6)]
            for p, v in zip(curve.p_grid, curve.cj_values)]
    emit(args, meta, rows, ["p", "cj"])
    if args.plot:
        from .plotting import render_cj_figure

        render_cj_figure(curve.p_grid, curve.cj_values,
                         _fig_path(args, "cj"), ag=ag)
    return EXIT_OK


def cmd_prior_induce(args):
    desc = descriptor(args.family)
    if not desc.has_shape_param:
        raise InputError(f"{args.family} has no shape parameter")
    try:
        prior = induce_delta_prior(args.family)
        krange = kappa_range(args.family)
    except (DomainError, BracketError) as exc:
        print(f"injectivity failure: {exc}", file=sys.stderr)
        return EXIT_INJECTIVITY
    grid = prior.params["grid"]
    dens = prior.params["densities"]
    total = float(np.trapezoid(dens, grid))
    if abs(total - 1.0) > 1e-4:
        print(f"induced prior normalization off: {total}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    meta = stamp(args, kappa_lo=round(krange.lo, 6), kappa_hi=round(krange.hi, 6),
                 integral=round(total, 8))
    rows = [[f"{d:.8g}", f"{p:.8g}"] for d, p in zip(grid, dens)]
    emit(args, meta, rows, ["delta", "density"])
    if args.plot:
        from .plotting import render_prior_figure

        render_prior_figure(grid, dens, _fig_path(args, "prior"),
                            kappa_lo=krange.lo, kappa_hi=krange.hi)
    return EXIT_OK


def cmd_propriety(args):
    data = load_observations(args.input) if args.input else None
    space_family = args.family
    prior = None
    for entry in args.prior or []:
        name, _, spec = entry.partition("=")
        if name == "delta":
            prior = parse_prior_spec(spec)
    if prior is None:
        prior = induce_delta_prior(space_family) \
            if descriptor(space_family).has_shape_param else improper_flat_prior()
    if data is None:
        raise InputError("propriety audit requires --input data")
    intervals = [o for o in data if o.interval is not None]
    if intervals:
        verdict = set_obs_audit(
            intervals,
            proper_shape_priors=prior.proper if prior is not None else False,
        )
    else:
        verdict = thm2_audit(space_family, prior, data)
    meta = stamp(args, status=verdict.status)
    rows = [["condition", c] for c in verdict.conditions]
    rows += [["trail", t] for t in verdict.theorem_trail]
    emit(args, meta, rows, ["kind", "detail"])
    return EXIT_OK if verdict.status != "improper" else EXIT_PROPRIETY


def cmd_compare(args):
    data = load_observations(args.input)
    if not args.model or len(args.model) < 2:
        raise InputError("need at least two --model family:kind entries")
    models = []
    for text in args.model:
        fam, _, kind = text.partition(":")
        if fam not in FAMILY_TAGS or (kind and kind not in MODEL_KINDS):
            raise InputError(f"bad model spec {text!r}")
        models.append({"name": text, "family": fam, "kind": kind or "DTP"})
    cfg = McmcConfig(iterations=args.iterations, burn_in=args.burn_in,
                     thin=args.thin, seed=args.seed)
    try:
        cmp = compare_models(data, models, config=cfg, restarts=args.restarts)
    except DomainError as exc:
        print(f"comparison failed: {exc}", file=sys.stderr)
        return EXIT_PROPRIETY if "improper" in str(exc) else EXIT_NO_CONVERGENCE
    meta = stamp(args, reference=cmp.reference, n_obs=len(data))
    rows = [[r["name"], round(r["log_lik"], 4), round(r["aic"], 4),
             round(r["bic"], 4), f"{r['bf']:.6g}", f"{r['bf_se']:.3g}",
             r["bf_method"]] for r in cmp.rows]
    emit(args, meta, rows,
         ["model", "log_lik", "aic", "bic", "bf_vs_reference", "bf_se", "method"])
    return EXIT_OK


def cmd_hier(args):
    data = load_hier(args.input)
    cfg = McmcConfig(iterations=args.iterations, burn_in=args.burn_in,
                     thin=args.thin, seed=args.seed)
    fit = hier_fit(data, args.effects_law, config=cfg)
    lo = float(np.min(data.y) - 3 * np.max(data.sigma_j) - np.ptp(data.y))
    hi = float(np.max(data.y) + 3 * np.max(data.sigma_j) + np.ptp(data.y))
    grid = np.linspace(lo, hi, args.grid_points)
    pred = hier_predictive(fit, grid)
    names = fit.chain.param_names
    summary = {}
    for j, name in enumerate(names):
        col = fit.chain.draws[:, j]
        summary[name] = (f"mean={col.mean():.6g} median={np.median(col):.6g} "
                         f"q2.5={np.percentile(col, 2.5):.6g} "
                         f"q97.5={np.percentile(col, 97.5):.6g}")
    meta = stamp(args, effects_law=args.effects_law, n_studies=len(data.y),
                 kept_draws=fit.chain.n_draws, **summary)
    rows = [[f"{g:.6g}", f"{p:.8g}"] for g, p in zip(grid, pred)]
    emit(args, meta, rows, ["theta", "predictive_density"])
    if args.plot:
        from .plotting import render_density_figure

        render_density_figure(grid, pred, _fig_path(args, "predictive"),
                              data=data.y, label="predictive density")
    return EXIT_OK


def cmd_sample(args):
    params = _params_from_flags(args)
    if args.n < 1:
        raise InputError("--n must be at least 1")
    rng = rng_stream(args.seed)
    draws = dtp_sample(params, rng, args.n)
    meta = stamp(args, n=args.n)
    rows = [[f"{x:.12g}"] for x in draws]
    emit(args, meta, rows, ["x"])
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing

def build_parser():
    parser = argparse.ArgumentParser(
        prog="dtpdist",
        description="Double two-piece distributions: fitting, shape measures, "
                    "prior induction, propriety audits, model comparison.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, family_required=True):
        p.add_argument("--family", choices=FAMILY_TAGS, required=family_required)
        p.add_argument("--kind", choices=MODEL_KINDS, default="DTP")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--output", default=None)
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--prior", action="append", metavar="NAME=SPEC")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--plot", action="store_true",
                       help="render figures next to the delimited output")

    def mcmc_flags(p):
        p.add_argument("--iterations", type=int, default=20000)
        p.add_argument("--burn-in", dest="burn_in", type=int, default=5000)
        p.add_argument("--thin", type=int, default=5)

    def param_flags(p):
        p.add_argument("--mu", type=float, default=0.0)
        p.add_argument("--sigma", type=float, default=1.0)
        p.add_argument("--gamma", type=float, default=0.0)
        p.add_argument("--delta", type=float, default=0.0)
        p.add_argument("--zeta", type=float, default=0.0)

    p = sub.add_parser("fit-mle", help="maximum likelihood fit")
    common(p)
    p.add_argument("--input", required=True)
    p.add_argument("--restarts", type=int, default=10)
    p.set_defaults(func=cmd_fit_mle)

    p = sub.add_parser("fit-bayes", help="posterior sampling")
    common(p)
    p.add_argument("--input", required=True)
    mcmc_flags(p)
    p.add_argument("--draws-output", default=None,
                   help="also write the full draw matrix as CSV")
    p.set_defaults(func=cmd_fit_bayes)

    p = sub.add_parser("measures", help="AG, CJ curve, kappa for one model")
    common(p)
    param_flags(p)
    p.set_defaults(func=cmd_measures)

    p = sub.add_parser("prior-induce", help="kurtosis-matched shape prior table")
    common(p)
    p.set_defaults(func=cmd_prior_induce)

    p = sub.add_parser("propriety", help="posterior propriety audit")
    common(p)
    p.add_argument("--input", default=None)
    p.set_defaults(func=cmd_propriety)

    p = sub.add_parser("compare", help="information criteria and Bayes factors")
    common(p, family_required=False)
    p.add_argument("--input", required=True)
    p.add_argument("--model", action="append", metavar="FAMILY:KIND",
                   help="repeat; first entry is the reference")
    p.add_argument("--restarts", type=int, default=5)
    mcmc_flags(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("hier", help="hierarchical random-effects fit")
    common(p, family_required=False)
    p.add_argument("--input", required=True)
    p.add_argument("--effects-law", dest="effects_law", default="TPSC-normal",
                   choices=("normal", "sas_symmetric", "TPSC-normal",
                            "TPSC-SAS", "TPSH-SAS", "DTP-SAS"))
    p.add_argument("--grid-points", dest="grid_points", type=int, default=200)
    mcmc_flags(p)
    p.set_defaults(func=cmd_hier)

    p = sub.add_parser("sample", help="draw from one model")
    common(p)
    param_flags(p)
    p.add_argument("--n", type=int, default=1000)
    p.set_defaults(func=cmd_sample)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ConvergenceError, BracketError) as exc:
        print(f"did not converge: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    except DomainError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
