"""Command-line interface: ``pnbounds {analyze,simulate,bounds}``."""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
import warnings
from pathlib import Path

from . import __version__
from ._kernels import BACKEND
from .bounds import crossfit_bounds, pt_bounds
from .data import DataError, load_csv
from .intervals import ci0, ci1, ci2, ci3, ci4, one_sided
from .nuisance import LEARNERS, fit_marginals
from .simulation import SimConfig, StudyAbortedError, reports_json, run_study, table1_csv

SCHEMA_VERSION = "pnbounds.analysis/1"
STUDY_SCHEMA_VERSION = "pnbounds.study/1"
SEED_ENV = "PNBOUNDS_SEED"
TABLE1_LAMBDAS = (0.0, 0.25, 0.5, 0.75, 1.0)
TABLE1_NS = (500, 2000)


class CLIError(Exception):
    pass


def _default_seed():
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise CLIError(f"{SEED_ENV}={raw!r} is not an integer") from None


def _r(x):
    return round(float(x), 12)


def analyze(path, alpha=0.05, folds=4, learner="local-average", seed=0, no_covariates=False) -> dict:
    """Run the full analysis on a CSV and return the report dictionary."""
    data = load_csv(path)
    data.check_identifiable()
    use_covariates = not no_covariates and data.covariate_dim > 0
    p, mu11, mu10 = fit_marginals(data)
    n = data.n
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        pt = pt_bounds(p, mu11, mu10, n)
        intervals = [ci1(mu11, mu10, p, n, alpha)]
        crossfit = None
        if use_covariates:
            res = crossfit_bounds(data, folds, learner, seed)
            lower, upper = res.lower, res.upper
            intervals += [ci2(lower, upper, alpha), ci3(lower, upper, alpha)]
            crossfit = {
                "lower": lower.to_dict(),
                "upper": upper.to_dict(),
                "crossed": res.crossed,
            }
        intervals.append(ci4(pt, n, alpha))
        intervals.append(ci0(pt, n, alpha))
        if use_covariates:
            intervals += [one_sided(lower, "lower", alpha), one_sided(upper, "upper", alpha)]
    notes = sorted({f"{w.category.__name__}: {w.message}" for w in caught})
    return {
        "schema": SCHEMA_VERSION,
        "metadata": {
            "input": Path(path).name,
            "n": n,
            "covariates": list(data.covariate_names) if use_covariates else [],
            "alpha": alpha,
            "folds": folds if use_covariates else None,
            "learner": learner if use_covariates else None,
            "seed": seed,
            "backend": BACKEND,
            "version": __version__,
        },
        "marginals": {"p_hat": _r(p), "mu11_hat": _r(mu11), "mu10_hat": _r(mu10)},
        "pt_bounds": {
            "l0": _r(pt.l0),
            "u0": _r(pt.u0),
            "l_pt": _r(pt.l_pt),
            "u_pt": _r(pt.u_pt),
            "sigma_l0": _r(pt.sigma_l0),
            "sigma_u0": _r(pt.sigma_u0),
        },
        "crossfit": crossfit,
        "intervals": [
            {
                "method": iv.method,
                "alpha": iv.alpha,
                "lower": _r(iv.lower),
                "upper": _r(iv.upper),
                "critical_value": _r(iv.critical_value),
                "case_tag": iv.case_tag,
            }
            for iv in intervals
        ],
        "notes": notes,
    }


def _fmt_pair(lo, hi):
    return f"[{lo:.3f}, {hi:.3f}]"


def analysis_table(report) -> str:
    """Table 2-style CSV: bounds, then CI1..CI4."""
    ivs = {iv["method"]: iv for iv in report["intervals"]}
    pt = report["pt_bounds"]
    row = {"outcome": report["metadata"]["input"], "L_PT,U_PT": _fmt_pair(pt["l_pt"], pt["u_pt"])}
    cf = report["crossfit"]
    row["L,U"] = _fmt_pair(cf["lower"]["value"], cf["upper"]["value"]) if cf else ""
    for m in ("CI1", "CI2", "CI3", "CI4"):
        row[m] = _fmt_pair(ivs[m]["lower"], ivs[m]["upper"]) if m in ivs else ""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(row), lineterminator="\n")
    writer.writeheader()
    writer.writerow(row)
    return buf.getvalue()


def _human(report) -> str:
    lines = []
    md = report["metadata"]
    lines.append(f"{md['input']}: N={md['n']}, alpha={md['alpha']}")
    pt = report["pt_bounds"]
    lines.append(f"  no-covariate bounds  {_fmt_pair(pt['l_pt'], pt['u_pt'])}")
    if report["crossfit"]:
        cf = report["crossfit"]
        lo, up = cf["lower"], cf["upper"]
        lines.append(
            f"  covariate bounds     {_fmt_pair(lo['value'], up['value'])}"
            f"  (learner={md['learner']}, K={md['folds']}, seed={md['seed']})"
        )
    for iv in report["intervals"]:
        tag = f"  ({iv['case_tag']})" if iv["case_tag"] else ""
        lines.append(f"  {iv['method']:<16} {_fmt_pair(iv['lower'], iv['upper'])}{tag}")
    for note in report["notes"]:
        lines.append(f"  note: {note}")
    return "\n".join(lines) + "\n"


def _write_atomic(out_dir: Path, files: dict):
    """Write every file or none; each goes to a temp name then is renamed."""
    out_dir.mkdir(parents=True, exist_ok=True)
    staged = []
    try:
        for name, text in files.items():
            fd, tmp = tempfile.mkstemp(dir=out_dir, prefix=f".{name}.")
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
            staged.append((tmp, out_dir / name))
    except BaseException:
        for tmp, _ in staged:
            os.unlink(tmp)
        raise
    for tmp, final in staged:
        os.replace(tmp, final)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def cmd_analyze(args):
    report = analyze(args.data, args.alpha, args.folds, args.learner, args.seed, args.no_covariates)
    if args.out:
        _write_atomic(Path(args.out), {"report.json": _dump(report), "table.csv": analysis_table(report)})
    if args.json:
        sys.stdout.write(_dump(report))
    else:
        sys.stdout.write(_human(report))
    return report


def cmd_bounds(args):
    data = load_csv(args.data)
    p, mu11, mu10 = fit_marginals(data)
    pt = pt_bounds(p, mu11, mu10, data.n)
    rows = [("L_PT,U_PT", pt.l_pt, pt.u_pt, "")]
    for iv in (ci1(mu11, mu10, p, data.n, args.alpha), ci0(pt, data.n, args.alpha), ci4(pt, data.n, args.alpha)):
        rows.append((iv.method, iv.lower, iv.upper, iv.case_tag or ""))
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["quantity", "lower", "upper", "case"])
    for name, lo, hi, tag in rows:
        writer.writerow([name, f"{lo:.3f}", f"{hi:.3f}", tag])


def _load_config(path):
    if path is None:
        return {}
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise CLIError(f"cannot read config {path}: {exc}") from exc


def cmd_simulate(args):
    cfg = _load_config(args.config)
    lambdas = args.lam or cfg.get("lambda") or list(TABLE1_LAMBDAS)
    ns = args.n or cfg.get("n") or list(TABLE1_NS)

    def pick(name, default):
        value = getattr(args, name)
        return value if value is not None else cfg.get(name, default)

    base = dict(
        reps=pick("reps", 500),
        k_folds=pick("folds", 5),
        learner=pick("learner", "logistic-interaction"),
        alpha=pick("alpha", 0.05),
        seed=pick("seed", _default_seed()),
    )
    if base["learner"] not in LEARNERS:
        raise CLIError(f"unknown learner {base['learner']!r}")
    try:
        configs = [SimConfig(n=int(n), lam=float(lam), **base) for lam in lambdas for n in ns]
    except ValueError as exc:
        raise CLIError(str(exc)) from exc
    reports = [run_study(c, workers=args.workers) for c in configs]
    table = table1_csv(reports)
    if args.out:
        payload = {"schema": STUDY_SCHEMA_VERSION, "studies": json.loads(reports_json(reports))}
        _write_atomic(Path(args.out), {"report.json": _dump(payload), "table.csv": table})
    sys.stdout.write(table)
    return reports


def build_parser():
    parser = argparse.ArgumentParser(prog="pnbounds", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    pa = sub.add_parser("analyze", help="bounds and confidence intervals for one dataset")
    pa.add_argument("data", help="CSV with columns x,y[,covariates...]")
    pa.add_argument("--alpha", type=float, default=0.05)
    pa.add_argument("--folds", type=int, default=4)
    pa.add_argument("--learner", choices=sorted(LEARNERS), default="local-average")
    pa.add_argument("--seed", type=int, default=None, help=f"fold seed (default: ${SEED_ENV} or 0)")
    pa.add_argument("--no-covariates", action="store_true")
    pa.add_argument("--out", help="directory for report.json and table.csv")
    pa.add_argument("--json", action="store_true", help="print the JSON report instead of the summary")
    pa.set_defaults(func=cmd_analyze)

    pb = sub.add_parser("bounds", help="quick no-covariate bounds table")
    pb.add_argument("data")
    pb.add_argument("--alpha", type=float, default=0.05)
    pb.set_defaults(func=cmd_bounds)

    ps = sub.add_parser("simulate", help="coverage/width study")
    ps.add_argument("--lambda", dest="lam", type=float, action="append")
    ps.add_argument("--n", type=int, action="append")
    ps.add_argument("--reps", type=int)
    ps.add_argument("--alpha", type=float)
    ps.add_argument("--folds", type=int)
    ps.add_argument("--learner", choices=sorted(LEARNERS))
    ps.add_argument("--seed", type=int)
    ps.add_argument("--workers", type=int, default=1)
    ps.add_argument("--config", help="JSON file with any of: lambda, n, reps, alpha, folds, learner, seed")
    ps.add_argument("--out", help="directory for report.json and table.csv")
    ps.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "seed", None) is None and args.command == "analyze":
            args.seed = _default_seed()
        args.func(args)
    except (CLIError, DataError, StudyAbortedError, RuntimeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
