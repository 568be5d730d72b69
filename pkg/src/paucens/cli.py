"""Command-line interface: ``paucens <command> [options]``.

Commands: ``gen-toy``, ``extract``, ``train``, ``eval``, ``roc``, ``selftest``.
Options may also come from a JSON file given with ``--config``; keys are the
long option names with dashes replaced by underscores, and explicit flags
win over the file.

Exit status: 0 success, 2 configuration error, 3 data error, 4 numerical
failure, 1 failed self-test.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import metrics
from .baseline import adaboost_train
from .dataset import Dataset, ToyConfig, generate_toy, load_csv, save_csv
from .ensemble import convergence_report, train
from .errors import ConfigError, DataError, PaucEnsError
from .features.imageio import read_image
from .features.pooling import FEATURE_KINDS, channel_layout, extract_maps, window_features
from .metrics import PaucRange, auc, pauc, roc_area, roc_points
from .serialize import load_model, save_model, write_log

log = logging.getLogger("paucens")

METHODS = ("pauc-ens", "adaboost")


def _paths(text, count=None):
    parts = [p for p in str(text).split(",") if p]
    if count is not None and len(parts) not in count:
        raise ConfigError(f"expected {' or '.join(map(str, count))} comma-separated paths, got {text!r}")
    return parts


def _floats(text):
    try:
        return [float(v) for v in str(text).split(",") if v]
    except ValueError:
        raise ConfigError(f"bad number list {text!r}") from None


def _window(text):
    try:
        w, h = (int(v) for v in str(text).lower().split("x"))
    except ValueError:
        raise ConfigError(f"window must look like WxH, got {text!r}") from None
    if w < 1 or h < 1:
        raise ConfigError("window sides must be positive")
    return w, h


def _range(args):
    return PaucRange(args.alpha, args.beta)


# ---------------------------------------------------------------- commands


def cmd_gen_toy(args):
    outs = _paths(args.out, count=(2, 3))
    n_val = args.n_val if args.n_val is not None else (args.n_train if len(outs) == 3 else 0)
    cfg = ToyConfig(n_train_per_class=args.n_train, n_test_per_class=args.n_test,
                    seed=args.seed, n_val_per_class=n_val)
    splits = ["train", "test"] if len(outs) == 2 else ["train", "val", "test"]
    for split, path in zip(splits, outs):
        save_csv(generate_toy(cfg, split), path)
    print(json.dumps({"seed": args.seed, "files": dict(zip(splits, outs))}))
    return 0


def cmd_extract(args):
    kinds = [k for k in args.features.split(",") if k]
    bad = [k for k in kinds if k not in FEATURE_KINDS]
    if bad:
        raise ConfigError(f"unknown feature kinds {bad}; choose from {', '.join(FEATURE_KINDS)}")
    win_w, win_h = _window(args.window)
    if args.stride < 1 or args.stride % 4:
        raise ConfigError("window stride must be a positive multiple of 4")
    rows = []
    for path in args.images:
        img = read_image(path)
        H, W = img.shape[:2]
        if win_w > W or win_h > H:
            raise DataError(f"{path}: {W}x{H} image is smaller than the {win_w}x{win_h} window")
        maps = extract_maps(img, kinds)
        for y in range(0, H - win_h + 1, args.stride):
            for x in range(0, W - win_w + 1, args.stride):
                rows.append(window_features(maps, (x, y, win_w, win_h), (H, W)))
    X = np.vstack(rows)
    names = [f"f{i}" for i in range(X.shape[1])]
    out = sys.stdout if args.out in (None, "-") else open(args.out, "w", newline="", encoding="utf-8")
    try:
        wr = csv.writer(out)
        wr.writerow(names + ["label"])
        for r in X:
            wr.writerow([repr(float(v)) for v in r] + [args.label])
    finally:
        if out is not sys.stdout:
            out.close()
    log.info("extracted %d windows x %d features (%d pooled channels)", X.shape[0], X.shape[1],
             len(channel_layout(kinds)))
    return 0


def _fit(args, data, rng, nu):
    if args.method == "adaboost":
        return adaboost_train(data, t_max=args.iters, tree_depth=args.depth, shrinkage=args.shrinkage)
    return train(data, rng, nu=nu, t_max=args.iters, eps=args.eps, tree_depth=args.depth,
                 eps_cp=args.eps_cp, track_convergence=not args.no_track)


def cmd_train(args):
    if args.method not in METHODS:
        raise ConfigError(f"unknown method {args.method!r}; choose from {', '.join(METHODS)}")
    if args.iters < 1:
        raise ConfigError("--iters must be >= 1")
    rng = _range(args)
    data = load_csv(args.data)
    rng.indices(data.n)
    grid = _floats(args.nu_grid) if args.nu_grid else [args.nu]
    if any(not v > 0 for v in grid):
        raise ConfigError("nu values must be > 0")
    selection = None
    if args.method == "pauc-ens" and len(grid) > 1:
        if not args.val:
            raise ConfigError("--nu-grid needs --val to select nu")
        val = load_csv(args.val)
        scores = []
        for nu in grid:
            model = _fit(args, data, rng, nu)
            f = model.decision_function
            scores.append(pauc(f(val.positives), f(val.negatives), rng))
        best = int(np.argmax(scores))
        selection = {"grid": grid, "validation_pauc": scores, "nu": grid[best]}
        nu = grid[best]
    else:
        nu = grid[0]
    model = _fit(args, data, rng, nu)
    save_model(model, args.model)
    records = model.training_log
    if args.method == "pauc-ens" and not args.no_track:
        checks = convergence_report(records)
        records = [dict(r, **{k: c[k] for k in ("monotone_ok", "gap_bound_ok", "strong_convexity_ok")})
                   for r, c in zip(records, checks)]
    if args.log:
        write_log(records, args.log)
    f = model.decision_function
    summary = {
        "method": model.method,
        "learners": len(model),
        "stop_reason": model.stop_reason,
        "train_auc": auc(f(data.positives), f(data.negatives)),
        "train_pauc": pauc(f(data.positives), f(data.negatives), rng),
        "model": args.model,
    }
    if args.method == "pauc-ens":
        summary["nu"] = nu
    if selection:
        summary["selection"] = selection
    print(json.dumps(summary))
    return 0


def _read_scores(path):
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc}") from None
    with fh:
        reader = csv.DictReader(fh)
        if not reader.fieldnames or not {"label", "score"} <= set(reader.fieldnames):
            raise DataError(f"{path}: need 'label' and 'score' columns")
        pos, neg = [], []
        for k, row in enumerate(reader, start=2):
            try:
                lab, s = float(row["label"]), float(row["score"])
            except (TypeError, ValueError):
                raise DataError(f"{path}: row {k} has a non-numeric label or score") from None
            if lab == 1:
                pos.append(s)
            elif lab in (0, -1):
                neg.append(s)
            else:
                raise DataError(f"{path}: row {k} label {row['label']!r} is not 1, 0 or -1")
    if not pos or not neg:
        raise DataError(f"{path}: need scores for both classes")
    return np.array(pos), np.array(neg)


def _scores_from_args(args):
    if args.scores:
        if args.model or args.data:
            raise ConfigError("give either --scores or --model with --data")
        return _read_scores(args.scores)
    if not (args.model and args.data):
        raise ConfigError("need --scores, or --model together with --data")
    model = load_model(args.model)
    data = load_csv(args.data)
    return model.decision_function(data.positives), model.decision_function(data.negatives)


def _roc_csv(pos, neg):
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["fpr", "tpr"])
    for fpr, tpr in roc_points(pos, neg):
        wr.writerow([repr(float(fpr)), repr(float(tpr))])
    return buf.getvalue()


def cmd_eval(args):
    pos, neg = _scores_from_args(args)
    rng = _range(args)
    report = {
        "m": int(pos.size),
        "n": int(neg.size),
        "alpha": rng.alpha,
        "beta": rng.beta,
        "auc": auc(pos, neg),
        "pauc": pauc(pos, neg, rng),
        "roc_area": roc_area(roc_points(pos, neg)),
    }
    print(json.dumps(report))
    if args.out:
        Path(args.out).write_text(_roc_csv(pos, neg), encoding="utf-8")
    return 0


def cmd_roc(args):
    pos, neg = _scores_from_args(args)
    text = _roc_csv(pos, neg)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def cmd_selftest(args):
    from .selftest import SUITES, run_all

    suites = [s for s in args.suite.split(",") if s] if args.suite else None
    if suites:
        bad = [s for s in suites if s not in SUITES]
        if bad:
            raise ConfigError(f"unknown suites {bad}; choose from {', '.join(SUITES)}")
    saved = metrics._TIE_SIDE
    if args.inject_tie_fault:
        metrics._TIE_SIDE = "left"
    try:
        results = run_all(seed=args.seed, suites=suites)
    finally:
        metrics._TIE_SIDE = saved
    ok = True
    for r in results:
        ok &= r.passed
        status = "PASS" if r.passed else "FAIL"
        print(f"{status} {r.name}: {r.checked} checks, {len(r.failures)} failures, {r.seconds:.2f}s")
        for msg in r.failures[:5]:
            print(f"    {msg}")
        if r.notes:
            print(f"    note: {len(r.notes)} rounds below the squared-gap decrease bound (informational)")
    return 0 if ok else 1


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="paucens", description="Partial-AUC ensemble learning.")
    p.add_argument("--config", help="JSON file of option defaults")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-toy", help="write the ring-shaped toy data to CSV")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--n-train", type=int, default=200, help="training samples per class")
    g.add_argument("--n-test", type=int, default=2000, help="test samples per class")
    g.add_argument("--n-val", type=int, default=None, help="validation samples per class")
    g.add_argument("--out", required=True, help="train.csv,test.csv or train.csv,val.csv,test.csv")
    g.set_defaults(func=cmd_gen_toy)

    e = sub.add_parser("extract", help="pooled image features for sliding windows")
    e.add_argument("images", nargs="+")
    e.add_argument("--features", default="sp-cov,luv", help=f"comma list of {', '.join(FEATURE_KINDS)}")
    e.add_argument("--window", default="64x128", help="WxH")
    e.add_argument("--stride", type=int, default=8, help="window step in pixels (multiple of 4)")
    e.add_argument("--label", default="0", help="value written to the label column")
    e.add_argument("--out")
    e.set_defaults(func=cmd_extract)

    t = sub.add_parser("train", help="train a model from a labelled CSV")
    t.add_argument("--data", required=True)
    t.add_argument("--val", help="validation CSV used with --nu-grid")
    t.add_argument("--model", default="model.json")
    t.add_argument("--log", help="per-round training log (JSON lines)")
    t.add_argument("--method", default="pauc-ens", choices=METHODS)
    t.add_argument("--alpha", type=float, default=0.0)
    t.add_argument("--beta", type=float, default=1.0)
    t.add_argument("--nu", type=float, default=0.25)
    t.add_argument("--nu-grid", help="comma list of nu values selected on --val")
    t.add_argument("--iters", type=int, default=100)
    t.add_argument("--depth", type=int, default=3, help="tree depth; 1 = decision stumps")
    t.add_argument("--shrinkage", type=float, default=1.0, help="AdaBoost only")
    t.add_argument("--seed", type=int, default=0, help="recorded; training itself is deterministic")
    t.add_argument("--eps", type=float, default=1e-8, help="column-generation precision")
    t.add_argument("--eps-cp", type=float, default=1e-9, help="cutting-plane precision")
    t.add_argument("--no-track", action="store_true", help="skip objective tracking")
    t.set_defaults(func=cmd_train)

    for name, func, helptext in (("eval", cmd_eval, "AUC and pAUC of scores or a model"),
                                 ("roc", cmd_roc, "ROC curve as CSV")):
        c = sub.add_parser(name, help=helptext)
        c.add_argument("--scores", help="CSV with label and score columns")
        c.add_argument("--model")
        c.add_argument("--data")
        c.add_argument("--alpha", type=float, default=0.0)
        c.add_argument("--beta", type=float, default=1.0)
        c.add_argument("--out", help="ROC CSV destination")
        c.set_defaults(func=func)

    s = sub.add_parser("selftest", help="run the brute-force oracle suites")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--suite", help="comma list of suites (default: all)")
    s.add_argument("--inject-tie-fault", action="store_true",
                   help="count tied pairs as correctly ordered (the metric suite must fail)")
    s.set_defaults(func=cmd_selftest)
    return p


def _apply_config(parser, argv):
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    try:
        cfg = json.loads(Path(known.config).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {known.config}: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config file must hold a JSON object")
    for action in parser._subparsers._group_actions:
        for sp in action.choices.values():
            sp.set_defaults(**{k.replace("-", "_"): v for k, v in cfg.items()})


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        return args.func(args)
    except PaucEnsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DataError.exit_code


if __name__ == "__main__":
    sys.exit(main())
