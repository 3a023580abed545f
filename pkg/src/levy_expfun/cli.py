"""Command-line interface: single queries, table reproduction and data series.

Exit codes: 0 success, 2 bad parameters or config, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import expfun, gbm, risk
from .exceptions import NumericalError, ParameterError
from .kou import KouParams, solve_roots
from .mc import SimConfig, estimate_tail_prob
from .mortality import ExpSum, GompertzMakeham, fit_exponential_sum
from .risk import Contract

EQUITY_PRESETS = {
    "gbm": dict(mu=0.064161, sigma=0.16, lam=0.0, p=0.3, rho=20.0, rho_hat=10.0),
    "kou-table1": dict(mu=0.064161, sigma=0.16, lam=1.0, p=0.3, rho=20.0, rho_hat=10.0),
    "set-A": dict(mu=0.119161, sigma=0.100499, lam=1.0, p=0.3, rho=20.0, rho_hat=10.0),
    "set-B": dict(mu=0.064186, sigma=0.144395, lam=0.00005, p=0.3, rho=0.1, rho_hat=0.2),
}
CONTRACT_PRESETS = {"contract-default": dict(F0=1.0, G0=1.0, r=0.02, m=0.01, m_d=0.0035)}
MORTALITY_PRESETS = {"mortality-65": dict(age=65.0, A=0.0007, B=0.00005, c=10**0.04)}

TABLE1_LAMBDAS = (1.0, 0.01, 1e-4, 1e-6, 0.0)
TABLE1_V = (0.2, 0.4, 0.6)
TABLE3_P = (0.85, 0.9, 0.95, 0.9999)

CONFIG_KEYS = {"model", "equity", "contract", "mortality", "expsum", "output", "digits"}
EXPSUM_KEYS = {"source", "path", "M", "horizon", "samples", "method"}


# ------------------------------------------------------------------ config


def _section(value, presets, keys, name):
    if isinstance(value, str):
        if value not in presets:
            raise ParameterError(f"unknown {name} preset {value!r}; choose from {sorted(presets)}")
        return dict(presets[value])
    if not isinstance(value, dict):
        raise ParameterError(f"{name} must be a preset name or an object")
    unknown = set(value) - set(keys)
    if unknown:
        raise ParameterError(f"unknown {name} keys: {sorted(unknown)}")
    return dict(value)


def load_config(path=None, equity=None) -> dict:
    """Merge a JSON config over the defaults; unknown keys are rejected."""
    raw = {}
    if path is not None:
        try:
            raw = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ParameterError(f"cannot read config {path}: {exc}") from None
        if not isinstance(raw, dict):
            raise ParameterError("config must be a JSON object")
        unknown = set(raw) - CONFIG_KEYS
        if unknown:
            raise ParameterError(f"unknown config keys: {sorted(unknown)}")
    eq_keys = EQUITY_PRESETS["gbm"].keys()
    eq = dict(EQUITY_PRESETS["kou-table1"])
    eq.update(_section(equity or raw.get("equity", "kou-table1"), EQUITY_PRESETS, eq_keys, "equity"))
    model = raw.get("model", "kou")
    if model not in ("kou", "gbm"):
        raise ParameterError(f"model must be 'kou' or 'gbm', got {model!r}")
    if model == "gbm":
        eq["lam"] = 0.0
    con = dict(CONTRACT_PRESETS["contract-default"])
    con.update(_section(raw.get("contract", "contract-default"), CONTRACT_PRESETS, con.keys(), "contract"))
    mort = dict(MORTALITY_PRESETS["mortality-65"])
    mort.update(_section(raw.get("mortality", "mortality-65"), MORTALITY_PRESETS, mort.keys(), "mortality"))
    es = _section(raw.get("expsum", {}), {}, EXPSUM_KEYS, "expsum")
    es.setdefault("source", "fit")
    if es["source"] not in ("fit", "file"):
        raise ParameterError("expsum.source must be 'fit' or 'file'")
    if es["source"] == "file" and "path" not in es:
        raise ParameterError("expsum.source = 'file' needs expsum.path")
    output = raw.get("output", "csv")
    if output not in ("csv", "json"):
        raise ParameterError("output must be 'csv' or 'json'")
    return {"model": model, "equity": eq, "contract": con, "mortality": mort, "expsum": es,
            "output": output, "digits": raw.get("digits")}


def _equity(cfg) -> KouParams:
    return KouParams(**cfg["equity"])


def _contract(cfg, equity: KouParams = None) -> Contract:
    return Contract(equity or _equity(cfg), **cfg["contract"])


def _mortality(cfg) -> GompertzMakeham:
    return GompertzMakeham(**cfg["mortality"])


def _expsum(cfg) -> ExpSum:
    es = cfg["expsum"]
    if es["source"] == "file":
        try:
            return ExpSum.from_json(Path(es["path"]))
        except (OSError, json.JSONDecodeError) as exc:
            raise ParameterError(f"cannot read exponential sum {es['path']}: {exc}") from None
    return fit_exponential_sum(
        _mortality(cfg), es.get("M", 15), es.get("horizon", 100.0), es.get("samples", 201), es.get("method", "hankel"),
    )


# ------------------------------------------------------------------ output


def _fmt(v, digits):
    if isinstance(v, (list, tuple)):
        return ";".join(_fmt(u, digits) for u in v)
    if isinstance(v, (bool, np.bool_)) or v is None or isinstance(v, str):
        return "" if v is None else str(v)
    if isinstance(v, complex):
        return _fmt(v.real, digits) if v.imag == 0 else f"{_fmt(v.real, digits)}{v.imag:+.17g}j"
    if isinstance(v, (int, np.integer)):
        return str(v)
    return f"{float(v):.{digits}f}" if digits is not None else f"{float(v):.17g}"


def _jsonable(v, digits):
    if isinstance(v, complex):
        return {"re": _jsonable(v.real, digits), "im": _jsonable(v.imag, digits)}
    if isinstance(v, (float, np.floating)):
        return round(float(v), digits) if digits is not None else float(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def emit(rows, fmt="csv", out=None, digits=None):
    """Write rows (dicts with identical keys) as CSV or JSON to ``out`` or stdout."""
    if fmt == "json":
        text = json.dumps([{k: _jsonable(v, digits) for k, v in r.items()} for r in rows], indent=2) + "\n"
    else:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        if rows:
            writer.writerow(rows[0].keys())
            for r in rows:
                writer.writerow([_fmt(v, digits) for v in r.values()])
        text = buf.getvalue()
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _floats(text: str, name: str):
    """Comma list ``a,b,c`` or linear grid ``start:stop:n``."""
    try:
        if text.count(":") == 2:
            a, b, n = text.split(":")
            return [float(v) for v in np.linspace(float(a), float(b), int(n))]
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ParameterError(f"cannot parse {name} list {text!r}") from None


def _complex(text: str) -> complex:
    try:
        return complex(text.replace(" ", ""))
    except ValueError:
        raise ParameterError(f"cannot parse complex number {text!r}") from None


# ------------------------------------------------------------------ commands


def cmd_roots(args, cfg):
    k = _equity(cfg)
    q = _complex(args.q)
    rs = solve_roots(k, q)
    names = ("zeta1", "zeta2", "-zeta_hat1", "-zeta_hat2")
    rows = [{"name": n, "re": complex(r).real, "im": complex(r).imag} for n, r in zip(names, rs.roots)]
    rows += [{"name": "pole rho", "re": k.rho, "im": 0.0}, {"name": "pole -rho_hat", "re": -k.rho_hat, "im": 0.0}]
    return rows


def cmd_dist(args, cfg):
    k = _equity(cfg)
    q = _complex(args.q)
    ys = _floats(args.y, "y")
    rows = []
    if k.lam == 0.0:
        for y in ys:
            rows.append({"y": y, "density": None,
                         "cdf": gbm.gbm_cdf(args.x, q, k.mu, k.sigma, y),
                         "te_below": gbm.gbm_tail_expectation(args.x, q, k.mu, k.sigma, y, "below")})
        return rows
    query = expfun.ExpFunctionalQuery(args.x, q, k)
    for y in ys:
        rows.append({"y": y, "density": expfun.density(query, y), "cdf": expfun.cdf(query, y),
                     "te_below": expfun.tail_expectation(query, y, "below")})
    return rows


def cmd_fit_mortality(args, cfg):
    es = fit_exponential_sum(_mortality(cfg), args.M, args.horizon, args.samples, args.method)
    if args.expsum_out:
        es.to_json(args.expsum_out)
    sys.stderr.write(f"sup_error = {es.sup_error:.3e} over [0, {es.horizon:g}]\n")
    return [{"index": i, "s_re": s.real, "s_im": s.imag, "w_re": w.real, "w_im": w.imag}
            for i, (s, w) in enumerate(es.terms)]


def cmd_tailprob(args, cfg):
    c, es = _contract(cfg), _expsum(cfg)
    return [risk.tail_probability_report(c, es, v, args.threads).to_dict() for v in _floats(args.V, "V")]


def cmd_var(args, cfg):
    c, es = _contract(cfg), _expsum(cfg)
    return [risk.value_at_risk_report(c, es, p, args.threads).to_dict() for p in _floats(args.p, "p")]


def cmd_cte(args, cfg):
    c, es = _contract(cfg), _expsum(cfg)
    return [risk.cte_report(c, es, p, threads=args.threads).to_dict() for p in _floats(args.p, "p")]


def _mc_rows(cfg, V, paths, experiments, seed, threads):
    c = _contract(cfg)
    est = estimate_tail_prob(c, _mortality(cfg), V, SimConfig(paths, experiments=experiments, seed=seed), threads)
    es = _expsum(cfg)
    analytic = [risk.tail_probability(c, es, v, threads) for v in V]
    return est.rows(analytic)


def cmd_mc(args, cfg):
    return _mc_rows(cfg, _floats(args.V, "V"), args.paths, args.experiments, args.seed, args.threads)


def cmd_table1(args, cfg):
    es = _expsum(cfg)
    base = _equity(cfg)
    rows = []
    for V in TABLE1_V:
        row = {"V": V}
        for lam in TABLE1_LAMBDAS:
            c = _contract(cfg, base.with_lambda(lam))
            row["gbm" if lam == 0.0 else f"lambda={lam:g}"] = risk.tail_probability(c, es, V, args.threads)
        rows.append(row)
    return rows


def cmd_table2(args, cfg):
    return _mc_rows(cfg, list(TABLE1_V), args.paths, args.experiments, args.seed, args.threads)


def cmd_table3(args, cfg):
    es = _expsum(cfg)
    rows = []
    for name in ("set-A", "set-B"):
        c = _contract(cfg, KouParams(**EQUITY_PRESETS[name]))
        for p in TABLE3_P:
            v = risk.value_at_risk(c, es, p, args.threads)
            rows.append({"set": name, "p": p, "VaR": v, "CTE": risk.cte(c, es, p, v, args.threads)})
    return rows


def cmd_tailcurve(args, cfg):
    es = _expsum(cfg)
    sets = args.sets.split(",")
    contracts = {}
    for name in sets:
        if name not in EQUITY_PRESETS:
            raise ParameterError(f"unknown parameter set {name!r}")
        contracts[name] = _contract(cfg, KouParams(**EQUITY_PRESETS[name]))
    rows = []
    for V in _floats(args.V, "V"):
        row = {"V": V}
        for name, c in contracts.items():
            row[name] = risk.tail_probability(c, es, V, args.threads)
        rows.append(row)
    return rows


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--equity", help=f"equity preset: {', '.join(EQUITY_PRESETS)}")
    common.add_argument("--out", help="write output here instead of stdout")
    common.add_argument("--format", choices=("csv", "json"), default=None)
    common.add_argument("--seed", type=int, default=20240601)
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--digits", type=int, default=None, help="decimal places (default: 17 significant digits)")

    parser = argparse.ArgumentParser(prog="levy-expfun", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("roots", parents=[common], help="roots of psi(z) = q")
    p.add_argument("--q", default="0.05")
    p.set_defaults(func=cmd_roots)

    p = sub.add_parser("dist", parents=[common], help="density, CDF and truncated mean of I_{x,q}")
    p.add_argument("--x", type=float, default=1 / 0.0035)
    p.add_argument("--q", default="0.05")
    p.add_argument("--y", required=True, help="comma list or start:stop:n")
    p.set_defaults(func=cmd_dist)

    p = sub.add_parser("fit-mortality", parents=[common], help="exponential-sum fit of the lifetime density")
    p.add_argument("--M", type=int, default=15)
    p.add_argument("--horizon", type=float, default=100.0)
    p.add_argument("--samples", type=int, default=201)
    p.add_argument("--method", choices=("hankel", "pencil"), default="hankel")
    p.add_argument("--expsum-out", help="write the fitted sum as JSON")
    p.set_defaults(func=cmd_fit_mortality)

    p = sub.add_parser("tailprob", parents=[common], help="P(L > V)")
    p.add_argument("--V", default="0.2,0.4,0.6")
    p.set_defaults(func=cmd_tailprob)

    for name, func, helptext in (("var", cmd_var, "VaR_p(L)"), ("cte", cmd_cte, "CTE_p(L)")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("--p", default="0.9")
        p.set_defaults(func=func)

    p = sub.add_parser("mc", parents=[common], help="Monte Carlo tail probabilities")
    p.add_argument("--V", default="0.2,0.4,0.6")
    p.add_argument("--paths", type=int, default=1000)
    p.add_argument("--experiments", type=int, default=20)
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("table1", parents=[common], help="tail probabilities across jump intensities")
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("table2", parents=[common], help="analytic vs Monte Carlo tail probabilities")
    p.add_argument("--paths", type=int, default=100_000)
    p.add_argument("--experiments", type=int, default=20)
    p.set_defaults(func=cmd_table2)

    p = sub.add_parser("table3", parents=[common], help="VaR and CTE for parameter sets A and B")
    p.set_defaults(func=cmd_table3, default_digits=6)

    p = sub.add_parser("tailcurve", parents=[common], help="tail-probability curves for plotting")
    p.add_argument("--sets", default="gbm,set-A,set-B")
    p.add_argument("--V", default="0.01:0.99:50")
    p.set_defaults(func=cmd_tailcurve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config, args.equity)
        rows = args.func(args, cfg)
        digits = args.digits if args.digits is not None else cfg["digits"]
        if digits is None:
            digits = getattr(args, "default_digits", None)
        emit(rows, args.format or cfg["output"], args.out, digits)
    except ParameterError as exc:
        sys.stderr.write(f"error [{args.command}]: {exc}\n")
        return 2
    except NumericalError as exc:
        where = exc.where or type(exc).__module__.rsplit(".", 1)[-1]
        sys.stderr.write(f"numerical failure [{where}/{args.command}] {type(exc).__name__}: {exc}\n")
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
