"""Command-line front end: ``hfmcarma {simulate,acf,limit,verify}``.

Exit status: 0 on success, 1 when ``verify`` finds a band violation, 2 on
usage or configuration errors.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import asymptotics as asy
from .config import Config, load_config
from .errors import HfmcarmaError
from .estimators import sample_acvf
from .harness import ExperimentSpec, rate_verification, run_experiment
from .io import dumps, write_csv, write_json
from .ma import ma_bartlett_acvf_cov, ma_limit_covariance_vec, ma_simulate
from .mcarma import SamplePath
from .streams import check_seed


class UsageError(Exception):
    pass


def _seed(text: str) -> int:
    try:
        return check_seed(int(text))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _lag(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"malformed lag {text!r}") from None
    if not np.isfinite(v) or v < 0:
        raise argparse.ArgumentTypeError(f"lag must be a finite nonnegative number, got {text!r}")
    return v


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _out_dir(args, cfg: Config | None) -> Path:
    if args.out:
        return Path(args.out)
    if cfg is not None:
        return Path(cfg.output["dir"])
    return Path(".")


def _formats(args, cfg: Config | None) -> list:
    if args.format:
        return [args.format]
    return cfg.output["formats"] if cfg is not None else ["csv"]


# commands ------------------------------------------------------------------

def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    if not cfg.simulate:
        raise UsageError("simulate: the config has no 'simulate' block")
    seed = args.seed if args.seed is not None else cfg.simulate["seed"]
    n, delta = cfg.simulate["n"], cfg.simulate["delta"]
    if cfg.discrete:
        y = ma_simulate(cfg.model, n, seed)
        path = SamplePath(1.0, y, seed, cfg.model.model_id)
    else:
        path = cfg.model.simulate(n, delta, seed)
    out = _out_dir(args, cfg) / "path.csv"
    path.to_csv(out)
    print(f"wrote {out} (n={n}, delta={delta:g}, seed={seed})")
    return 0


def cmd_acf(args) -> int:
    if not args.lag:
        raise UsageError("acf: give at least one --lag")
    path = SamplePath.from_csv(args.path)
    est = sample_acvf(path, args.lag, mean_adjusted=not args.raw)
    fmt = args.format or "csv"
    if fmt == "csv":
        rows = [(format(h, ".12g"), i, j, v) for h, i, j, v in est.rows()]
        if args.out:
            target = Path(args.out) / "acf.csv"
            write_csv(target, ["lag", "i", "j", "value"], rows)
            print(f"wrote {target}")
        else:
            from .io import fmt as ffmt

            sys.stdout.write("lag,i,j,value\n")
            for h, i, j, v in rows:
                sys.stdout.write(f"{h},{i},{j},{ffmt(v)}\n")
        return 0
    doc = {
        "n": est.n,
        "delta": est.delta,
        "mean_adjusted": est.mean_adjusted,
        "estimates": [{"lag": h, "gamma": est.gamma_hat[k]}
                      for h, k in zip(est.lags.lags, est.lags.steps)],
    }
    _emit_json(args, "acf.json", doc)
    return 0


def _emit_json(args, name, doc):
    if args.out:
        target = write_json(Path(args.out) / name, doc)
        print(f"wrote {target}")
    else:
        sys.stdout.write(dumps(doc))


def _limit_doc(cfg: Config, h: float) -> dict:
    if cfg.discrete:
        k = int(round(h))
        if abs(k - h) > 1e-9:
            raise UsageError(f"limit: lag {h:g} is not an integer for a discrete-time model")
        total, fourth, gauss = ma_limit_covariance_vec(cfg.model, k)
        return asy.LimitCovariance(k, total, fourth, gauss, {"exact": True}).to_dict()
    return asy.limit_covariance_vec(cfg.model, h).to_dict()


def _pair_doc(cfg: Config, s: float, t: float) -> dict:
    if cfg.discrete:
        if cfg.model.m != 1:
            raise UsageError("limit --pair needs a scalar model")
        total = ma_bartlett_acvf_cov(cfg.model, int(round(s)), int(round(t)))
        return {"lag": [s, t], "total": total, "quadrature_report": {"exact": True}}
    model = cfg.model
    if model.d != 1 or model.m != 1:
        raise UsageError("limit --pair needs a scalar model")
    fourth, gauss = asy.bartlett_acvf_parts(model, s, t)
    return asy.LimitCovariance([s, t], fourth + gauss, fourth, gauss, {}).to_dict()


def cmd_limit(args) -> int:
    cfg = load_config(args.config)
    if args.pair:
        doc = _pair_doc(cfg, *args.pair)
    else:
        lags = args.lag or [0.0]
        docs = [_limit_doc(cfg, h) for h in lags]
        doc = docs[0] if len(docs) == 1 else docs
    _emit_json(args, "limit.json", doc)
    return 0


def cmd_verify(args) -> int:
    cfg = load_config(args.config)
    if cfg.experiment is None:
        raise UsageError("verify: the config has no 'experiment' block")
    e = cfg.experiment
    spec = ExperimentSpec(
        cfg.model, e["schedule"], args.lag or e["lags"], e["replications"],
        args.seed if args.seed is not None else e["base_seed"], e["statistic"],
        e["tolerance"], args.truth_override, args.threads,
    )
    report = run_experiment(spec)
    doc = report.to_dict()
    passed = report.passed
    if e["rate"]:
        rate = rate_verification(report)
        doc["rate"] = rate.to_dict()
        passed = passed and rate.passed
    doc["passed"] = passed
    out = _out_dir(args, cfg)
    formats = _formats(args, cfg)
    if "json" in formats:
        write_json(out / "report.json", doc)
    if "csv" in formats:
        write_csv(out / "report.csv",
                  ["schedule_idx", "lag_i", "lag_j", "empirical", "theoretical", "ratio"],
                  report.rows())
    last = report.points[-1]
    ratios = ", ".join(f"{r:.4f}" for r in np.diag(last.ratio))
    print(f"{'PASS' if passed else 'FAIL'}: ratios at n={last.n}, delta={last.delta:g}: [{ratios}] "
          f"band [{report.band[0]:.2f}, {report.band[1]:.2f}]; wrote {out}")
    return 0 if passed else 1


# parser --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="hfmcarma",
        description="Simulate MCARMA paths and check sample-autocovariance asymptotics.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config=True):
        if config:
            sp.add_argument("--config", required=True, help="JSON configuration file")
        sp.add_argument("--seed", type=_seed, help="64-bit seed; overrides the config")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--threads", type=_positive_int, default=1)
        sp.add_argument("--format", choices=("csv", "json"))
        sp.add_argument("--lag", type=_lag, action="append",
                        help="grid lag (repeatable; used by acf, limit and verify)")

    sp = sub.add_parser("simulate", help="simulate a sample path")
    common(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("acf", help="sample autocovariances of a path file")
    sp.add_argument("path", help="path CSV written by 'simulate'")
    common(sp, config=False)
    sp.add_argument("--raw", action="store_true", help="do not subtract the sample mean")
    sp.set_defaults(func=cmd_acf)

    sp = sub.add_parser("limit", help="limit covariance of the sample autocovariance")
    common(sp)
    sp.add_argument("--pair", nargs=2, type=_lag, metavar=("S", "T"),
                    help="scalar Bartlett covariance m_{s,t}")
    sp.set_defaults(func=cmd_limit)

    sp = sub.add_parser("verify", help="run the Monte Carlo experiment and check the band")
    common(sp)
    sp.add_argument("--truth-override", type=float, default=None,
                    help="replace the true value of every coordinate (failure-path check)")
    sp.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"hfmcarma {args.command}: {exc}", file=sys.stderr)
        return 2
    except HfmcarmaError as exc:
        print(f"hfmcarma {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"hfmcarma {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
