"""Command-line surface: encrypt/decrypt, feature extraction, verification,
training, evaluation, experiments, and fixture generation.

Exit codes: 0 success, 2 verification failure, 1 any other error.
"""

import argparse
import sys
from pathlib import Path

import numpy as np

from .cipher import KeySet, decrypt, encrypt
from .equivalence import verify_equivalence
from .evaluation import eer_from_scores, split_dataset
from .harness import (
    CSV_HEADER,
    ExperimentConfig,
    ingest_dataset,
    dataset_dir_from_env,
    make_fixture,
    run_experiment,
)
from .hog import HogParams, extract, save_features
from .image import load_pgm_file, save_pgm_file
from .svm import (
    KernelSpec,
    TrainConfig,
    default_gamma,
    load_model,
    save_model,
    scores,
    train_one_vs_rest,
)


class _Parser(argparse.ArgumentParser):
    # exit code 2 is reserved for verification failures
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(f"error: {message}")


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 1 << 64:
        raise argparse.ArgumentTypeError(f"{text} is not an unsigned 64-bit integer")
    return value


def _add_key_flags(parser, required=False):
    parser.add_argument("--k1", type=_u64, required=required, default=None, help="permutation key (decimal or 0x-hex)")
    parser.add_argument("--k2", type=_u64, required=required, default=None, help="rotation/flip key")
    parser.add_argument("--k3", type=_u64, required=required, default=None, help="negation key")


def _add_hog_flags(parser):
    parser.add_argument("--eprime", type=int, default=None, help="differencing grid side (0 = whole image)")
    parser.add_argument("--nc", type=int, default=None, help="cell side in pixels")
    parser.add_argument("--n", type=int, default=None, help="orientation bins")
    parser.add_argument("--nb", type=int, default=None, help="block side in cells")
    parser.add_argument("--no", type=int, default=None, help="block overlap in cells")
    parser.add_argument("--eps", type=float, default=None, help="normalization constant")


def _hog_params(args, defaults=HogParams()) -> HogParams:
    eprime = defaults.grid_size if args.eprime is None else (None if args.eprime == 0 else args.eprime)
    return HogParams(
        grid_size=eprime,
        cell_size=defaults.cell_size if args.nc is None else args.nc,
        bins=defaults.bins if args.n is None else args.n,
        block_size=defaults.block_size if args.nb is None else args.nb,
        overlap=defaults.overlap if args.no is None else args.no,
        eps=defaults.eps if args.eps is None else args.eps,
    )


def _keys(args) -> KeySet:
    missing = [name for name in ("k1", "k2", "k3") if getattr(args, name) is None]
    if missing:
        raise ValueError(f"missing required key flags: {', '.join('--' + m for m in missing)}")
    return KeySet(args.k1, args.k2, args.k3)


def _parse_sweep(text: str) -> list[tuple[int, int]]:
    pairs = []
    for chunk in text.split(","):
        nb, _, no = chunk.strip().partition(":")
        pairs.append((int(nb), int(no or 0)))
    return pairs


def _read_config(path) -> dict[str, str]:
    values = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"bad config line (expected 'key = value'): {raw!r}")
        values[key.strip()] = value.strip()
    return values


def cmd_encrypt(args) -> int:
    img = load_pgm_file(getattr(args, "in"))
    save_pgm_file(encrypt(img, _keys(args), args.e), args.out)
    return 0


def cmd_decrypt(args) -> int:
    img = load_pgm_file(getattr(args, "in"))
    save_pgm_file(decrypt(img, _keys(args), args.e), args.out)
    return 0


def cmd_hog(args) -> int:
    params = _hog_params(args)
    features = [extract(load_pgm_file(path), params) for path in getattr(args, "in")]
    save_features(args.out, features, params)
    return 0


def cmd_verify(args) -> int:
    img = load_pgm_file(getattr(args, "in"))
    params = HogParams(grid_size=args.e, cell_size=args.e, bins=10 if args.n is None else args.n)
    report = verify_equivalence(img, _keys(args), params, tol=args.tol)
    verdict = "pass" if report.passed else "fail"
    print(
        f"EQUIV {verdict} max_rel_err={report.max_rel_err:.6e} "
        f"exact_multiset={'true' if report.exact_multiset else 'false'}"
    )
    return 0 if report.passed else 2


def _load_split_features(args):
    dataset = args.dataset or dataset_dir_from_env()
    if not dataset:
        raise ValueError("no dataset given: pass --dataset or set ETCHOG_DATASET")
    items = ingest_dataset(dataset)
    labels = [label for label, _ in items]
    images = [img for _, img in items]
    if args.encrypted:
        keys = _keys(args)
        images = [encrypt(img, keys, args.e) for img in images]
    params = _hog_params(args)
    feats = np.stack([extract(img, params) for img in images])
    counts = {label: labels.count(label) for label in set(labels)}
    train_count = args.train_per_class or min(counts.values()) // 2
    train_idx, test_idx = split_dataset(labels, args.split_seed, train_count)
    return labels, feats, train_idx, test_idx, params


def _kernel_from_args(args, num_features: int) -> KernelSpec:
    if args.kernel == "gaussian":
        return KernelSpec("gaussian", args.gamma or default_gamma(num_features))
    return KernelSpec("linear")


def cmd_train(args) -> int:
    labels, feats, train_idx, _, _ = _load_split_features(args)
    kernel = _kernel_from_args(args, feats.shape[1])
    cfg = TrainConfig(c=args.c, kkt_tol=args.kkt_tol, seed=args.seed)
    multi = train_one_vs_rest(feats[train_idx], [labels[k] for k in train_idx], cfg, kernel)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for cls, model in zip(multi.classes, multi.models):
        save_model(model, out / f"{cls}.etcsvm")
    print(f"trained {len(multi.classes)} one-vs-rest models -> {out}")
    return 0


def cmd_eval(args) -> int:
    labels, feats, _, test_idx, _ = _load_split_features(args)
    model_dir = Path(args.model)
    paths = sorted(model_dir.glob("*.etcsvm"))
    if not paths:
        raise ValueError(f"no .etcsvm models under {model_dir}")
    classes = [p.stem for p in paths]
    from .svm import MultiModel

    multi = MultiModel(classes=classes, models=[load_model(p) for p in paths])
    score_matrix = scores(multi, feats[test_idx])
    class_of = {label: k for k, label in enumerate(classes)}
    rows = np.arange(len(test_idx))
    true_idx = np.array([class_of[labels[k]] for k in test_idx])
    genuine = score_matrix[rows, true_idx]
    mask = np.ones_like(score_matrix, dtype=bool)
    mask[rows, true_idx] = False
    value = eer_from_scores(genuine, score_matrix[mask])
    kernel = multi.models[0].kernel.kind
    params = _hog_params(args)
    line = (
        f"NB{params.block_size}-NO{params.overlap},{params.block_size},{params.overlap},"
        f"{kernel},{'true' if args.encrypted else 'false'},{value:.17g}"
    )
    text = CSV_HEADER + "\n" + line + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        print(text, end="")
    return 0


def cmd_experiment(args) -> int:
    conf = _read_config(args.config) if args.config else {}

    def pick(flag, key, cast, fallback):
        if flag is not None:
            return flag
        if key in conf:
            return cast(conf[key])
        return fallback

    kernels = args.kernel or (
        [k.strip() for k in conf["kernel"].split(",")] if "kernel" in conf else ["linear", "gaussian"]
    )
    keys = KeySet(
        pick(args.k1, "k1", _u64, 1),
        pick(args.k2, "k2", _u64, 2),
        pick(args.k3, "k3", _u64, 3),
    )
    e = pick(args.e, "e", int, 8)
    eprime = pick(args.eprime, "eprime", int, e)
    sweep_text = args.sweep if args.sweep is not None else conf.get("sweep")
    cfg = ExperimentConfig(
        dataset_dir=pick(args.dataset, "dataset", str, dataset_dir_from_env()),
        e=e,
        grid_size=None if eprime == 0 else eprime,
        cell_size=pick(args.nc, "nc", int, e),
        bins=pick(args.n, "n", int, 10),
        eps=pick(args.eps, "eps", float, 1e-6),
        sweep=_parse_sweep(sweep_text) if sweep_text is not None else [(1, 0)],
        kernels=kernels,
        gamma=pick(args.gamma, "gamma", float, None),
        svm=TrainConfig(
            c=pick(args.c, "c", float, 1.0),
            kkt_tol=pick(args.kkt_tol, "kkt_tol", float, 1e-3),
            seed=pick(args.seed, "seed", int, 0),
        ),
        split_seed=pick(args.split_seed, "split_seed", int, 0),
        train_per_class=pick(args.train_per_class, "train_per_class", int, None),
        verify_tol=pick(args.tol, "tol", float, 1e-9),
    )
    result = run_experiment(cfg)
    out = pick(args.out, "out", str, None)
    if out:
        Path(out).write_text(result.csv())
    else:
        print(result.csv(), end="")
    for verdict in result.verdicts:
        print(verdict)
    if args.features_dir:
        feat_dir = Path(args.features_dir)
        feat_dir.mkdir(parents=True, exist_ok=True)
        for (condition, encrypted_arm), feats in result.features.items():
            nb, no = cfg.sweep[0]
            for pair in cfg.sweep:
                if f"NB{pair[0]}-NO{pair[1]}" == condition:
                    nb, no = pair
            arm = "encrypted" if encrypted_arm else "plain"
            save_features(feat_dir / f"{condition}-{arm}.etchog", list(feats), cfg.hog_params(nb, no))
    return 0 if result.all_passed else 2


def cmd_fixture(args) -> int:
    make_fixture(args.out, classes=args.classes, per_class=args.per_class, size=args.size, seed=args.seed)
    print(f"fixture written to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="etchog", allow_abbrev=False, description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("encrypt", allow_abbrev=False, help="encrypt a PGM image")
    p.add_argument("--in", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--e", type=int, default=8, help="cipher block side")
    _add_key_flags(p, required=True)
    p.set_defaults(func=cmd_encrypt)

    p = sub.add_parser("decrypt", allow_abbrev=False, help="decrypt a PGM image")
    p.add_argument("--in", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--e", type=int, default=8)
    _add_key_flags(p, required=True)
    p.set_defaults(func=cmd_decrypt)

    p = sub.add_parser("hog", allow_abbrev=False, help="extract features from PGM images")
    p.add_argument("--in", nargs="+", required=True)
    p.add_argument("--out", required=True)
    _add_hog_flags(p)
    p.set_defaults(func=cmd_hog)

    p = sub.add_parser("verify", allow_abbrev=False, help="check the feature-permutation equivalence")
    p.add_argument("--in", required=True)
    p.add_argument("--e", type=int, default=8, help="shared block/grid/cell side")
    p.add_argument("--n", type=int, default=None, help="orientation bins (even)")
    p.add_argument("--tol", type=float, default=1e-9)
    _add_key_flags(p, required=True)
    p.set_defaults(func=cmd_verify)

    for name, fn in (("train", cmd_train), ("eval", cmd_eval)):
        p = sub.add_parser(name, allow_abbrev=False, help=f"{name} one-vs-rest SVMs on a dataset split")
        p.add_argument("--dataset", default=None, help="dataset dir (default: $ETCHOG_DATASET)")
        p.add_argument("--encrypted", action="store_true", help="encrypt images before extraction")
        p.add_argument("--e", type=int, default=8)
        _add_key_flags(p)
        _add_hog_flags(p)
        p.add_argument("--split-seed", dest="split_seed", type=int, default=0)
        p.add_argument("--train-per-class", dest="train_per_class", type=int, default=None)
        if name == "train":
            p.add_argument("--out", required=True, help="output model directory")
            p.add_argument("--kernel", choices=["linear", "gaussian"], default="linear")
            p.add_argument("--c", type=float, default=1.0)
            p.add_argument("--gamma", type=float, default=None)
            p.add_argument("--kkt-tol", dest="kkt_tol", type=float, default=1e-3)
            p.add_argument("--seed", type=int, default=0)
        else:
            p.add_argument("--model", required=True, help="model directory from train")
            p.add_argument("--out", default=None, help="CSV path (default: stdout)")
        p.set_defaults(func=fn)

    p = sub.add_parser("experiment", allow_abbrev=False, help="full sweep over plain/encrypted arms")
    p.add_argument("--config", default=None, help="flat key = value config file; flags override")
    p.add_argument("--dataset", default=None)
    p.add_argument("--out", default=None, help="results CSV path (default: stdout)")
    p.add_argument("--features-dir", default=None, help="also dump per-arm feature files here")
    p.add_argument("--sweep", default=None, help="NB:NO pairs, e.g. 1:0,2:0,2:1")
    p.add_argument("--kernel", action="append", choices=["linear", "gaussian"], default=None)
    p.add_argument("--e", type=int, default=None)
    _add_hog_flags(p)
    _add_key_flags(p)
    p.add_argument("--seed", type=int, default=None, help="SMO scan seed")
    p.add_argument("--split-seed", dest="split_seed", type=int, default=None)
    p.add_argument("--train-per-class", dest="train_per_class", type=int, default=None)
    p.add_argument("--c", type=float, default=None)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--kkt-tol", dest="kkt_tol", type=float, default=None)
    p.add_argument("--tol", type=float, default=None, help="equivalence verification tolerance")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("fixture", allow_abbrev=False, help="generate the synthetic PGM dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--classes", type=int, default=4)
    p.add_argument("--per-class", dest="per_class", type=int, default=16)
    p.add_argument("--size", type=int, default=64)
    p.add_argument("--seed", type=int, default=7)
    p.set_defaults(func=cmd_fixture)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:
        if isinstance(exc.code, str):
            print(exc.code, file=sys.stderr)
            return 1
        return 0 if exc.code is None else int(exc.code)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
