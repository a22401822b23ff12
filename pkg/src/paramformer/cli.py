"""Command-line front end: encode, baseline, train, evaluate, compare, ttest.

Exit codes: 0 success, 2 bad config or input, 3 training diverged, 4 I/O.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import checkpoint
from .baselines import make_baseline
from .config import check_keys, load_config, parse_overrides
from .distributions import Family, SizeSpec, get_prior
from .encode import GridShape, encode, format_cells
from .errors import (
    CheckpointError, DegenerateSampleError, DivergenceError, InvalidArgumentError,
    ShapeError, UndefinedStatisticError,
)
from .evaluation import EvalReport, OracleEstimator, display_p, evaluate, two_sample_t
from .normalize import normalize
from .pipeline import TransformerEstimator
from .trainer import PRESETS, TrainConfig, train

log = logging.getLogger("paramformer")

EXIT_OK, EXIT_INPUT, EXIT_DIVERGED, EXIT_IO = 0, 2, 3, 4

FULL_SCALE_WARNING = ("preset paper-full: 6 layers at 1024x384 on 9.9M examples, "
                      "roughly 60-70 GPU hours and far longer on a CPU")


class InputError(Exception):
    """Bad user input that is not tied to a library error type."""


def _settings(args, keys) -> dict:
    """Config file values, then --set overrides, then explicit flags."""
    values = load_config(args.config) if getattr(args, "config", None) else {}
    values.update(parse_overrides(getattr(args, "set", None)))
    for k in keys:
        v = getattr(args, k, None)
        if v is not None:
            values[k] = str(v)
    return values


def _write_report(report: EvalReport, prefix: str | None):
    print(report.to_csv(), end="")
    if not prefix:
        return
    d = os.path.dirname(prefix)
    if d:
        os.makedirs(d, exist_ok=True)
    with open(prefix + ".json", "w") as f:
        f.write(report.to_json() + "\n")
    with open(prefix + ".csv", "w") as f:
        f.write(report.to_csv())
    log.info("wrote %s.json and %s.csv", prefix, prefix)


# encode --------------------------------------------------------------------

def read_values(path) -> list[float]:
    values = []
    with open(path) as f:
        for lineno, line in enumerate(f, 1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            try:
                values.append(float(text))
            except ValueError:
                raise InputError(f"{path}:{lineno}: not a number: {text!r}") from None
    return values


def cmd_encode(args) -> int:
    values = read_values(args.input)
    if args.family:
        values, _ = normalize(args.family, args.mode, values)
    grid = encode(values, args.scheme, GridShape(args.L, args.K))
    sys.stdout.write(format_cells(grid))
    return EXIT_OK


# baseline / evaluate ---------------------------------------------------------

EVAL_KEYS = ("family", "mode", "prior", "size", "trials", "seed", "estimator", "skip_failures",
             "out")


def _eval_settings(args, extra=()):
    values = _settings(args, EVAL_KEYS + tuple(extra))
    check_keys(values, EVAL_KEYS + tuple(extra), args.command)
    if "seed" not in values:
        raise InputError("--seed is required")
    fam = Family.parse(values.get("family", "exponential"))
    s = {
        "family": fam,
        "mode": values.get("mode", "known"),
        "prior": get_prior(fam, values.get("prior") or None),
        "size": SizeSpec.parse(values.get("size", "30")),
        "trials": int(values.get("trials", 100_000)),
        "seed": int(values["seed"]),
        "skip_failures": values.get("skip_failures", "false").lower() in ("1", "true", "yes"),
        "out": values.get("out"),
    }
    return s, values


def cmd_baseline(args) -> int:
    s, values = _eval_settings(args)
    kind = values.get("estimator", "baseline")
    if kind == "oracle":
        est, est_id = OracleEstimator(), "oracle"
    elif kind == "baseline":
        est = make_baseline(s["family"], s["mode"], s["prior"])
        est_id = est.id
    else:
        raise InputError(f"unknown estimator {kind!r}; use baseline or oracle")
    errs = evaluate(est, s["family"], s["mode"], s["prior"], s["size"], s["trials"], s["seed"],
                    skip_failures=s["skip_failures"])
    if errs.failures:
        log.warning("%d of %d tasks failed and were excluded", errs.failures, errs.trials)
    report = EvalReport.from_errors(est_id, s["family"], s["mode"], s["size"], errs, s["seed"])
    _write_report(report, s["out"])
    return EXIT_OK


def cmd_evaluate(args) -> int:
    state, _ = checkpoint.load(args.checkpoint)
    trained = state.meta.get("train", {})
    for k in ("family", "mode", "prior", "size"):
        if getattr(args, k, None) is None and trained.get(k):
            setattr(args, k, trained[k])
    s, values = _eval_settings(args, extra=("scheme", "reference"))
    scheme = values.get("scheme", trained.get("scheme", "seq-first"))
    est = TransformerEstimator(state, s["family"], s["mode"], scheme)
    errs = evaluate(est, s["family"], s["mode"], s["prior"], s["size"], s["trials"], s["seed"],
                    skip_failures=s["skip_failures"])
    report = EvalReport.from_errors("transformer", s["family"], s["mode"], s["size"], errs, s["seed"])
    if values.get("reference", "baseline") == "baseline":
        base = make_baseline(s["family"], s["mode"], s["prior"])
        berrs = evaluate(base, s["family"], s["mode"], s["prior"], s["size"], s["trials"],
                         s["seed"], skip_failures=True)
        ref = EvalReport.from_errors(base.id, s["family"], s["mode"], s["size"], berrs, s["seed"])
        report.compare_to(ref)
        print(ref.to_csv(header=False), end="", file=sys.stderr)
    _write_report(report, s["out"])
    return EXIT_OK


# train ---------------------------------------------------------------------

def cmd_train(args) -> int:
    keys = [f for f in TrainConfig.__dataclass_fields__]
    values = {}
    preset = args.preset
    file_values = load_config(args.config) if args.config else {}
    preset = file_values.pop("preset", preset)
    if preset:
        if preset not in PRESETS:
            raise InputError(f"unknown preset {preset!r}; have {sorted(PRESETS)}")
        values.update({k: str(v) for k, v in PRESETS[preset].items()})
    values.update(file_values)
    values.update(parse_overrides(args.set))
    for k in ("family", "mode", "size", "seed", "prior", "scheme"):
        v = getattr(args, k, None)
        if v is not None:
            values[k] = str(v)
    if args.out:
        values["checkpoint_dir"] = args.out
    check_keys(values, keys, "train")
    if "seed" not in values:
        raise InputError("--seed is required")
    config = TrainConfig.from_mapping(values)
    if config.model == "paper-full":
        log.warning(FULL_SCALE_WARNING)
    progress = (lambda n, m: print(f"{n},{m:.6g}", flush=True))
    print("examples_seen,mse", flush=True)
    state, curve = train(config, resume=args.resume, progress=progress)
    if config.checkpoint_dir:
        log.info("checkpoints and loss_curve.csv in %s", config.checkpoint_dir)
    return EXIT_OK


# compare / ttest --------------------------------------------------------------

def _load_report(path) -> EvalReport:
    with open(path) as f:
        try:
            return EvalReport.from_json(f.read())
        except (json.JSONDecodeError, TypeError) as e:
            raise InputError(f"{path}: not a report: {e}") from None


def cmd_compare(args) -> int:
    a, b = _load_report(args.report_a), _load_report(args.report_b)
    if a.trials != b.trials:
        raise InputError(f"reports have different trial counts ({a.trials} vs {b.trials})")
    a.compare_to(b)
    _write_report(a, args.out)
    return EXIT_OK


def cmd_ttest(args) -> int:
    t, p = two_sample_t(args.mean1, args.std1, args.n1, args.mean2, args.std2, args.n2)
    print(json.dumps({"t_value": t, "p_value": p, "p_display": display_p(p)}))
    return EXIT_OK


# entry point -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="paramformer", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("encode", help="print the occupied cells of an encoded sample")
    e.add_argument("input", help="file with one value per line")
    e.add_argument("--scheme", default="seq-first", choices=["seq-first", "embed-first"])
    e.add_argument("--L", type=int, default=64)
    e.add_argument("--K", type=int, default=64)
    e.add_argument("--family", help="normalize raw values for this family first")
    e.add_argument("--mode", default="known", choices=["known", "unknown"])
    e.set_defaults(func=cmd_encode)

    def eval_flags(q):
        q.add_argument("--config", help="key = value settings file")
        q.add_argument("--set", action="append", metavar="KEY=VALUE")
        q.add_argument("--family", choices=[f.value for f in Family])
        q.add_argument("--mode", choices=["known", "unknown"])
        q.add_argument("--prior", help="prior preset name")
        q.add_argument("--size", help="sample size: N, LO-HI or loguniform")
        q.add_argument("--trials", type=int)
        q.add_argument("--seed", type=int, help="required")
        q.add_argument("--out", help="write OUT.json and OUT.csv")

    b = sub.add_parser("baseline", help="Monte Carlo score of a closed-form estimator")
    eval_flags(b)
    b.add_argument("--estimator", choices=["baseline", "oracle"])
    b.set_defaults(func=cmd_baseline)

    v = sub.add_parser("evaluate", help="score a trained checkpoint against the baseline")
    v.add_argument("checkpoint")
    eval_flags(v)
    v.add_argument("--scheme", choices=["seq-first", "embed-first"])
    v.add_argument("--reference", choices=["baseline", "none"])
    v.set_defaults(func=cmd_evaluate)

    t = sub.add_parser("train", help="train a model on freshly simulated samples")
    t.add_argument("--config", help="key = value settings file")
    t.add_argument("--preset", choices=sorted(PRESETS))
    t.add_argument("--set", action="append", metavar="KEY=VALUE")
    t.add_argument("--family", choices=[f.value for f in Family])
    t.add_argument("--mode", choices=["known", "unknown"])
    t.add_argument("--prior")
    t.add_argument("--size")
    t.add_argument("--scheme", choices=["seq-first", "embed-first"])
    t.add_argument("--seed", type=int, help="required")
    t.add_argument("--out", help="checkpoint directory")
    t.add_argument("--resume", help="checkpoint to continue from")
    t.set_defaults(func=cmd_train)

    c = sub.add_parser("compare", help="t-test between two saved reports")
    c.add_argument("report_a")
    c.add_argument("report_b")
    c.add_argument("--out")
    c.set_defaults(func=cmd_compare)

    s = sub.add_parser("ttest", help="t-test from summary statistics")
    for name, typ in (("mean1", float), ("std1", float), ("n1", int),
                      ("mean2", float), ("std2", float), ("n2", int)):
        s.add_argument(name, type=typ)
    s.set_defaults(func=cmd_ttest)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (InputError, InvalidArgumentError, ShapeError, DegenerateSampleError,
            UndefinedStatisticError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except DivergenceError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DIVERGED
    except (CheckpointError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
