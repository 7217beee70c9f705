"""Command line front end.

Exit codes: 0 success, 1 usage error, 2 data error, 3 adaptation finished
without meeting its stop conditions (artifacts are still written).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .adaptive import AdaptiveMklClassifier
from .config import ConfigError, RunConfig, dump_config, load_config
from .ensemble import (DetectorConfig, classify_stream, read_verdict_csv,
                       write_verdict_csv)
from .features import (ATTACK, NORMAL, extract_series, feature_matrix,
                       read_feature_csv, window_starts, write_feature_csv,
                       FeatureVector)
from .kernels import KernelSpec
from .metrics import (TABLE_MODES, TABLE_RANGES, PerturbSpec, format_experiment_table,
                      metrics, perturb, run_experiment_grid, write_counts_csv,
                      write_results_csv)
from .mkl import MklModel, SimpleMklClassifier
from .packets import PacketCsvError, read_packet_csv, write_packet_csv
from .synth import SynthProfile, synth_traffic

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NONCONVERGED = 3


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; remap to the documented code
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


class DataError(Exception):
    pass


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mkldetect",
                     description="Flow-feature DDoS detection with multi-kernel classifiers.")
    parser.add_argument("--config", help="path to a key=value configuration file")
    parser.add_argument("--seed", type=int, help="override the configured random seed")
    parser.add_argument("--strict", action="store_true",
                        help="abort on the first malformed input line instead of skipping")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[], help="generate a synthetic packet trace")
    p.add_argument("--out", required=True)
    p.add_argument("--duration", type=float, default=120.0)
    p.add_argument("--attack-start", type=float, default=60.0)
    p.add_argument("--attack-ramp", type=float, default=0.0)
    p.add_argument("--attackers", type=int, default=40)
    p.add_argument("--normal-hosts", type=int, default=12)
    p.add_argument("--servers", type=int, default=3)
    p.add_argument("--normal-rate", type=float, default=6.0)
    p.add_argument("--attack-rate", type=float, default=8.0)

    p = sub.add_parser("extract", help="packet CSV to per-window feature CSV")
    p.add_argument("packets")
    p.add_argument("--out", required=True)
    p.add_argument("--attack-from", type=float, default=None,
                   help="label windows starting at or after this time as attack")
    p.add_argument("--attack-until", type=float, default=None,
                   help="stop labelling attack at this time (default: end of trace)")

    p = sub.add_parser("train", help="train classifiers from a labeled feature CSV")
    p.add_argument("features")
    p.add_argument("--mode", choices=("m", "s", "both"), default="both")
    p.add_argument("--out", required=True, help="output path prefix for model and telemetry files")

    p = sub.add_parser("detect", help="run the two-model detector over a feature CSV")
    p.add_argument("features")
    p.add_argument("--m-model", required=True)
    p.add_argument("--s-model", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("eval", help="confusion metrics of predictions against ground truth")
    p.add_argument("--pred", required=True, help="verdict CSV or labeled feature CSV")
    p.add_argument("--truth", required=True, help="verdict CSV or labeled feature CSV")

    p = sub.add_parser("perturb", help="scale feature samples by random multipliers")
    p.add_argument("features")
    p.add_argument("--mode", choices=("both", "attack-only", "normal-only"), default="both")
    p.add_argument("--lo", type=float, required=True)
    p.add_argument("--hi", type=float, required=True)
    p.add_argument("--per-value", action="store_true",
                   help="draw one multiplier per value instead of per sample")
    p.add_argument("--out", required=True)

    p = sub.add_parser("experiment", help="train all methods and run a perturbation grid")
    p.add_argument("--train", help="labeled feature CSV used for training")
    p.add_argument("--test", help="labeled feature CSV used for evaluation")
    p.add_argument("--features", help="single labeled feature CSV to split instead")
    p.add_argument("--split-ratio", type=float, default=0.5,
                   help="fraction of each class assigned to training when splitting")
    p.add_argument("--scenario", type=int, choices=(1, 2, 3), default=1)
    p.add_argument("--out-dir", required=True)

    sub.add_parser("config", help="print the effective configuration")
    return parser


def _load_run_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg


def _read_labeled_features(path):
    series, labels = read_feature_csv(path)
    if labels is None:
        raise DataError(f"{path}: a labeled feature CSV is required")
    return feature_matrix(series), window_starts(series), labels


def _read_any_labels(path) -> np.ndarray:
    with open(path) as fh:
        header = fh.readline().strip()
    if header.startswith("index,"):
        return np.array([v.label for v in read_verdict_csv(path)], dtype=int)
    _, _, labels = _read_labeled_features(path)
    return labels


def cmd_synth(args, cfg: RunConfig) -> int:
    profile = SynthProfile(
        duration=args.duration,
        n_normal_hosts=args.normal_hosts,
        n_servers=args.servers,
        n_attackers=args.attackers,
        attack_start=args.attack_start,
        attack_ramp=args.attack_ramp,
        normal_flows_per_sec=args.normal_rate,
        attack_pps_per_source=args.attack_rate,
    )
    packets = synth_traffic(profile, cfg.seed)
    write_packet_csv(args.out, packets)
    print(f"wrote {len(packets)} packets to {args.out}")
    return EXIT_OK


def cmd_extract(args, cfg: RunConfig) -> int:
    packets, issues = read_packet_csv(args.packets, strict=args.strict)
    for issue in issues:
        print(f"warning: {args.packets}: {issue.message}", file=sys.stderr)
    series = extract_series(packets, cfg.thresholds)
    labels = None
    if args.attack_from is not None:
        until = args.attack_until if args.attack_until is not None else float("inf")
        labels = [ATTACK if args.attack_from <= v.window_start < until else NORMAL
                  for v in series]
    write_feature_csv(args.out, series, labels)
    print(f"wrote {len(series)} feature rows to {args.out}")
    return EXIT_OK


def cmd_train(args, cfg: RunConfig) -> int:
    X, _, labels = _read_labeled_features(args.features)
    if len(set(labels.tolist())) < 2:
        raise DataError(f"{args.features}: training data must contain both classes")
    prefix = Path(args.out)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    modes = ("m", "s") if args.mode == "both" else (args.mode,)
    all_converged = True
    for mode in modes:
        adapt = cfg.m_adapt if mode == "m" else cfg.s_adapt
        clf = AdaptiveMklClassifier(
            mode=mode, kernels=cfg.kernels, C=cfg.C, adapt=adapt, normalize=True,
            mkl_max_iter=cfg.mkl_max_iter,
            telemetry_path=str(prefix) + f".{mode}.telemetry.csv",
        )
        clf.fit(X, labels)
        model_path = str(prefix) + f".{mode}.json"
        clf.model_.save(model_path)
        state = clf.adapt_state_
        all_converged = all_converged and state.converged
        print(f"mode {mode}: {state.iterations} iterations, "
              f"{'stopped by corridor test' if state.converged else 'ran out of iterations'}, "
              f"model written to {model_path}")
    return EXIT_OK if all_converged else EXIT_NONCONVERGED


def cmd_detect(args, cfg: RunConfig) -> int:
    series, _ = read_feature_csv(args.features)
    m_model = MklModel.load(args.m_model)
    s_model = MklModel.load(args.s_model)
    verdicts = classify_stream(m_model, s_model, series,
                               DetectorConfig(cfg.detector.window_n))
    write_verdict_csv(args.out, verdicts, starts=[v.window_start for v in series])
    attacks = sum(1 for v in verdicts if v.label == ATTACK)
    print(f"wrote {len(verdicts)} verdicts ({attacks} attack) to {args.out}")
    return EXIT_OK


def cmd_eval(args, cfg: RunConfig) -> int:
    predicted = _read_any_labels(args.pred)
    truth = _read_any_labels(args.truth)
    if predicted.size != truth.size:
        raise DataError("prediction and truth files differ in length")
    report = metrics(predicted, truth)
    def show(name, value):
        print(f"{name} = {'undefined' if value is None else f'{value:.2f}%'}")
    print(f"tp={report.tp} fp={report.fp} tn={report.tn} fn={report.fn}")
    show("DR", report.dr)
    show("FR", report.fr)
    show("ER", report.er)
    return EXIT_OK


def cmd_perturb(args, cfg: RunConfig) -> int:
    X, starts, labels = _read_labeled_features(args.features)
    spec = PerturbSpec(mode=args.mode, lo=args.lo, hi=args.hi,
                       seed=cfg.seed, per_value=args.per_value)
    Xp = perturb(X, labels, spec)
    series = [FeatureVector(starts[i], *Xp[i].tolist()) for i in range(len(starts))]
    write_feature_csv(args.out, series, labels)
    print(f"wrote {len(series)} perturbed rows to {args.out}")
    return EXIT_OK


def _split_stratified(labels: np.ndarray, ratio: float) -> np.ndarray:
    """Boolean train mask, taking ``ratio`` of each class by round-robin."""
    train = np.zeros(labels.size, dtype=bool)
    for cls in (NORMAL, ATTACK):
        idx = np.nonzero(labels == cls)[0]
        picks = np.floor((np.arange(idx.size) + 1) * ratio) > np.floor(np.arange(idx.size) * ratio)
        train[idx[picks]] = True
    return train


def cmd_experiment(args, cfg: RunConfig) -> int:
    if args.features:
        X, _, labels = _read_labeled_features(args.features)
        mask = _split_stratified(labels, args.split_ratio)
        X_train, y_train = X[mask], labels[mask]
        X_test, y_test = X[~mask], labels[~mask]
    elif args.train and args.test:
        X_train, _, y_train = _read_labeled_features(args.train)
        X_test, _, y_test = _read_labeled_features(args.test)
    else:
        raise DataError("provide --features or both --train and --test")
    if len(set(y_train.tolist())) < 2 or len(set(y_test.tolist())) < 2:
        raise DataError("train and test sets must both contain both classes")

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    m_clf = AdaptiveMklClassifier(mode="m", kernels=cfg.kernels, C=cfg.C,
                                  adapt=cfg.m_adapt, mkl_max_iter=cfg.mkl_max_iter)
    s_clf = AdaptiveMklClassifier(mode="s", kernels=cfg.kernels, C=cfg.C,
                                  adapt=cfg.s_adapt, mkl_max_iter=cfg.mkl_max_iter)
    mkl_clf = SimpleMklClassifier(kernels=cfg.kernels, C=cfg.C, normalize=True,
                                  max_iter=cfg.mkl_max_iter)
    svm_clf = SimpleMklClassifier(kernels=[KernelSpec("linear")], C=cfg.C, normalize=True,
                                  max_iter=cfg.mkl_max_iter)
    for clf in (m_clf, s_clf, mkl_clf, svm_clf):
        clf.fit(X_train, y_train)
    m_clf.model_.save(out_dir / "m_model.json")
    s_clf.model_.save(out_dir / "s_model.json")
    mkl_clf.model_.save(out_dir / "mkl_model.json")
    svm_clf.model_.save(out_dir / "svm_model.json")

    window_n = cfg.detector.window_n

    def ensemble_predict(Xp):
        verdicts = classify_stream(m_clf.model_, s_clf.model_, Xp, DetectorConfig(window_n))
        return np.array([v.label for v in verdicts], dtype=int)

    methods = {
        "ensemble": ensemble_predict,
        "simple-mkl": mkl_clf.predict,
        "linear-svm": svm_clf.predict,
    }
    cells = run_experiment_grid(methods, X_test, y_test,
                                ranges=TABLE_RANGES[args.scenario],
                                mode=TABLE_MODES[args.scenario],
                                master_seed=cfg.seed, table=args.scenario)
    write_results_csv(out_dir / "results.csv", cells)
    write_counts_csv(out_dir / "counts.csv", cells)
    print(f"scenario {args.scenario}, multiplier applied to {TABLE_MODES[args.scenario]} samples")
    print(format_experiment_table(cells))
    print(f"results written to {out_dir / 'results.csv'}")
    nonconverged = [clf for clf in (m_clf, s_clf) if not clf.adapt_state_.converged]
    return EXIT_NONCONVERGED if nonconverged else EXIT_OK


def cmd_config(args, cfg: RunConfig) -> int:
    sys.stdout.write(dump_config(cfg))
    return EXIT_OK


_COMMANDS = {
    "synth": cmd_synth,
    "extract": cmd_extract,
    "train": cmd_train,
    "detect": cmd_detect,
    "eval": cmd_eval,
    "perturb": cmd_perturb,
    "experiment": cmd_experiment,
    "config": cmd_config,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load_run_config(args)
        return _COMMANDS[args.command](args, cfg)
    except (ConfigError, PacketCsvError, DataError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_DATA
    except (ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
