"""Command-line entry points: train, label, eval, baseline, inspect.

Every run writes its exact resolved configuration (flags > config file >
defaults) next to its artifacts, together with package/library versions and
sha256 digests of the inputs, so any artifact directory is self-describing
and a run is reproducible from its config alone.

Exit codes: 0 ok, 2 usage/validation, 3 strict-labeling failure,
4 evaluation universe mismatch, 1 internal error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, baselines, corpus, evaluation, induction, vectors, wsi

logger = logging.getLogger("sensewsi")

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_USAGE = 2
EXIT_STRICT = 3
EXIT_MISMATCH = 4

ENV_DATA_DIR = "SENSEWSI_DATA_DIR"


class UsageError(ValueError):
    pass


def _data_dir_default(filename: str) -> str | None:
    base = os.environ.get(ENV_DATA_DIR)
    return str(Path(base) / filename) if base else None


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _versions() -> dict:
    import numba

    return {
        "sensewsi": __version__,
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "numba": numba.__version__,
    }


def _write_run_config(out_dir: Path, command: str, resolved: dict, inputs: dict) -> None:
    payload = {
        "command": command,
        "config": resolved,
        "versions": _versions(),
        "input_digests": {name: _sha256(p) for name, p in inputs.items()},
    }
    with open(out_dir / "config.json", "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")


def _load_config_file(path) -> dict:
    with open(path, encoding="utf-8") as f:
        data = json.load(f)
    if not isinstance(data, dict):
        raise UsageError(f"config file {path} must hold a JSON object")
    return data


def _resolve(args, names: list[str], defaults) -> dict:
    """Merge CLI flags over config-file values over dataclass defaults."""
    file_values = _load_config_file(args.config) if getattr(args, "config", None) else {}
    unknown = set(file_values) - set(names)
    if unknown:
        raise UsageError(f"unknown config file keys: {sorted(unknown)}")
    resolved = {}
    for name in names:
        cli_val = getattr(args, name, None)
        if cli_val is not None:
            resolved[name] = cli_val
        elif name in file_values:
            resolved[name] = file_values[name]
        else:
            resolved[name] = getattr(defaults, name)
    return resolved


_TRAIN_FIELDS = [
    "dim", "k", "gamma", "window", "negatives", "lr", "lr_floor_ratio", "epochs",
    "subsample", "multi_sense_size", "min_count", "seed", "mode", "sense_cap",
    "eps_sim", "assign_vector", "output_vector", "similarity",
]


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dim", type=int, help="embedding dimension (default 300)")
    p.add_argument("--k", type=int, help="senses per multi-sense word, fixed mode (default 3)")
    p.add_argument("--gamma", type=float, help="CRP new-sense weight (default 0.5)")
    p.add_argument("--window", type=int, help="max window size per side (default 5)")
    p.add_argument("--negatives", type=int, help="negative samples per pair (default 5)")
    p.add_argument("--lr", type=float, help="initial learning rate (default 0.025)")
    p.add_argument("--lr-floor-ratio", dest="lr_floor_ratio", type=float)
    p.add_argument("--epochs", type=int, help="passes over the corpus (default 1)")
    p.add_argument("--subsample", type=float, help="frequent-word threshold (default 1e-4; 0 disables)")
    p.add_argument("--multi-sense", dest="multi_sense_size", type=int,
                   help="size of the frequency-ranked multi-sense set (default 6000)")
    p.add_argument("--min-count", dest="min_count", type=int, help="vocabulary cutoff (default 5)")
    p.add_argument("--seed", type=int, help="run seed (default 1)")
    p.add_argument("--sense-cap", dest="sense_cap", type=int, help="CRP senses per word cap (default 10)")
    p.add_argument("--eps-sim", dest="eps_sim", type=float)
    p.add_argument("--assign-vector", dest="assign_vector", choices=["cluster", "embedding"])
    p.add_argument("--output-vector", dest="output_vector", choices=["cluster", "embedding"])
    p.add_argument("--similarity", choices=["cosine", "dot"])
    p.add_argument("--config", help="JSON config file (flags win over file values)")


def cmd_train(args) -> int:
    corpus_path = Path(args.corpus)
    if not corpus_path.is_file():
        raise UsageError(f"corpus file not found: {corpus_path}")
    resolved = _resolve(args, _TRAIN_FIELDS, induction.TrainingConfig())
    resolved["mode"] = args.mode
    if resolved["subsample"] == 0:
        resolved["subsample"] = None
    config = induction.TrainingConfig(**resolved)
    config.validate()
    pretrained = None
    inputs = {"corpus": corpus_path}
    if args.pretrained:
        pre_path = Path(args.pretrained)
        if not pre_path.is_file():
            raise UsageError(f"pretrained tables not found: {pre_path}")
        glob, senses0 = vectors.load_tables(pre_path)
        if int(senses0.n_senses.max()) != 1:
            raise UsageError("pretrained tables must be single-sense (train with --mode fixed --k 1)")
        pretrained = (
            vectors.WordTable(senses0.first_sense_vectors(), senses0.vocab),
            glob,
        )
        inputs["pretrained"] = pre_path

    out_dir = Path(args.out)
    enc = corpus.EncodedCorpus.from_file(corpus_path, min_count=config.min_count)
    logger.info(
        "corpus: %d sentences, %d in-vocabulary tokens, V=%d",
        enc.n_sentences, enc.n_tokens, len(enc.vocab),
    )
    word_table, sense_table, log = induction.train(
        enc, config, pretrained=pretrained, threads=args.threads
    )
    out_dir.mkdir(parents=True, exist_ok=True)
    corpus.save_vocab(enc.vocab, out_dir / "vocab.txt")
    vectors.save_tables(word_table, sense_table, out_dir / "tables.bin")
    if args.save_text:
        vectors.save_word_text(word_table, out_dir / "words.txt")
        vectors.save_sense_text(sense_table, out_dir / "senses.txt")
    log.save_jsonl(out_dir / "trainlog.jsonl")
    _write_run_config(out_dir, "train", {**resolved, "threads": args.threads}, inputs)
    for e in log.epochs:
        logger.info(
            "epoch %d: %d tokens, %d pairs, %d new senses, mean loss %.4f",
            e.epoch, e.tokens, e.pairs, e.new_senses, e.mean_loss,
        )
    logger.info("artifacts written to %s", out_dir)
    return EXIT_OK


def cmd_label(args) -> int:
    tables_path = args.tables or _data_dir_default("tables.bin")
    if not tables_path or not Path(tables_path).is_file():
        raise UsageError(f"tables file not found: {tables_path}")
    dataset_path = Path(args.dataset)
    if not dataset_path.is_file():
        raise UsageError(f"dataset file not found: {dataset_path}")
    word_table, sense_table = vectors.load_tables(tables_path)
    instances = wsi.read_instances(dataset_path)
    stoplist = wsi.Stoplist.load(args.stoplist) if args.stoplist else wsi.Stoplist.default()
    summary = wsi.label_dataset(
        instances, sense_table, word_table, stoplist,
        use=args.output_vector, similarity=args.similarity, rule=args.rule,
    )
    wsi.write_key_file(summary.results, args.out)
    report = {
        "instances": summary.instances,
        "oov_context_words": summary.oov_context_words,
        "zero_context": summary.zero_context,
        "unknown_targets": sorted(set(summary.unknown_targets)),
        "senses_used": summary.senses_used(),
    }
    print(json.dumps(report, indent=2, sort_keys=True))
    if args.summary:
        with open(args.summary, "w", encoding="utf-8") as f:
            json.dump(report, f, indent=2, sort_keys=True)
            f.write("\n")
    if summary.unknown_targets:
        logger.warning("%d instances had unknown targets", len(summary.unknown_targets))
        if args.strict:
            return EXIT_STRICT
    return EXIT_OK


def _print_metric_table(reports: dict[str, evaluation.MetricReport]) -> None:
    header = f"{'':>6} {'VM':>7} {'PF-P':>7} {'PF-R':>7} {'PF-F':>7} {'SR':>7} {'FS':>7} {'#CI':>6}"
    print(header)
    for name in ("all", "noun", "verb"):
        r = reports.get(name)
        if r is None:
            continue
        print(
            f"{name:>6} {100 * r.vm:7.2f} {100 * r.pf_precision:7.2f} "
            f"{100 * r.pf_recall:7.2f} {100 * r.pf_f:7.2f} "
            f"{100 * r.sr:7.2f} {100 * r.fs:7.2f} {r.ci:6.2f}"
        )


def cmd_eval(args) -> int:
    gold_key = wsi.read_key_file(args.gold)
    pred_key = wsi.read_key_file(args.pred)
    gold = evaluation.Clustering(gold_key.ids, gold_key.labels)
    pred = evaluation.Clustering(pred_key.ids, pred_key.labels)
    try:
        reports = evaluation.evaluate(
            gold, pred, gold_key.targets,
            n_splits=args.splits, fraction=args.fraction, seed=args.seed,
            weighted=args.weighted,
        )
    except evaluation.UniverseMismatchError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_MISMATCH
    _print_metric_table(reports)
    if args.json:
        payload = {name: r.to_dict() for name, r in reports.items()}
        with open(args.json, "w", encoding="utf-8") as f:
            json.dump(payload, f, indent=2, sort_keys=True)
            f.write("\n")
    return EXIT_OK


def cmd_baseline(args) -> int:
    dataset_path = Path(args.dataset)
    if not dataset_path.is_file():
        raise UsageError(f"dataset file not found: {dataset_path}")
    instances = wsi.read_instances(dataset_path)
    stoplist = wsi.Stoplist.load(args.stoplist) if args.stoplist else wsi.Stoplist.default()
    if args.system == "we-kmeans":
        tables_path = args.tables or _data_dir_default("tables.bin")
        if not tables_path or not Path(tables_path).is_file():
            raise UsageError(f"tables file not found: {tables_path}")
        word_table, _ = vectors.load_tables(tables_path)
        results, fits = baselines.we_kmeans_label(
            instances, word_table, stoplist, k=args.k, seed=args.seed
        )
        wsi.write_key_file(results, args.out)
        logger.info(
            "we-kmeans: %d targets, mean inertia %.3f",
            len(fits), float(np.mean([f.inertia for f in fits.values()])) if fits else 0.0,
        )
    else:  # crp-ppmi
        if not args.corpus or not Path(args.corpus).is_file():
            raise UsageError(f"corpus file not found: {args.corpus}")
        enc = corpus.EncodedCorpus.from_file(args.corpus, min_count=args.min_count)
        ppmi = baselines.build_ppmi(enc, window_size=args.window)
        target_ids = []
        for key in sorted({(inst.lemma, inst.pos) for inst in instances}):
            wid = enc.vocab.get(f"{key[0]}.{key[1]}")
            if wid < 0:
                wid = enc.vocab.get(key[0])
            if wid >= 0:
                target_ids.append(wid)
        model = baselines.crp_ppmi_train(
            enc, ppmi, target_ids, stoplist,
            gamma=args.gamma, window=args.window, subsample=args.subsample,
            seed=args.seed,
        )
        results = baselines.crp_ppmi_label(instances, model, ppmi, stoplist)
        wsi.write_key_file(results, args.out)
        logger.info("crp-ppmi: %d targets trained", len(model.senses))
    return EXIT_OK


def cmd_inspect(args) -> int:
    tables_path = args.tables or _data_dir_default("tables.bin")
    if not tables_path or not Path(tables_path).is_file():
        raise UsageError(f"tables file not found: {tables_path}")
    word_table, sense_table = vectors.load_tables(tables_path)
    wid = word_table.vocab.get(args.word)
    if wid < 0:
        print(f"error: {args.word!r} is not in the vocabulary", file=sys.stderr)
        return EXIT_USAGE
    matrix = word_table.matrix.astype(np.float64)
    norms = np.linalg.norm(matrix, axis=1)
    norms[norms == 0.0] = 1.0

    def nearest(vec: np.ndarray, exclude: int) -> list[tuple[str, float]]:
        v = np.asarray(vec, dtype=np.float64)
        nv = np.linalg.norm(v)
        if nv == 0.0:
            return []
        sims = matrix @ v / (norms * nv)
        order = np.argsort(-sims)
        out = []
        for j in order:
            if int(j) != exclude:
                out.append((word_table.vocab.surface(int(j)), float(sims[j])))
            if len(out) >= args.top:
                break
        return out

    print(f"word: {args.word} (id {wid}, count {word_table.vocab.count(wid)})")
    print("nearest by global vector:")
    for surface, sim in nearest(word_table.vector(wid), wid):
        print(f"  {surface:20s} {sim:+.4f}")
    for k in range(sense_table.n_senses_of(wid)):
        n_k = sense_table.count(wid, k)
        print(f"sense {k + 1} (n={n_k}), nearest by sense embedding:")
        for surface, sim in nearest(sense_table.embedding(wid, k), wid):
            print(f"  {surface:20s} {sim:+.4f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sensewsi",
        description="Sense-embedding training and word sense induction",
    )
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p_train = sub.add_parser("train", help="train sense embeddings on a corpus")
    p_train.add_argument("--corpus", required=True, help="UTF-8 text, one sentence per line")
    p_train.add_argument("--out", default=_data_dir_default("run"), required=ENV_DATA_DIR not in os.environ,
                         help=f"output directory (default ${ENV_DATA_DIR}/run)")
    p_train.add_argument("--mode", choices=["fixed", "crp"], default="fixed")
    p_train.add_argument("--pretrained", help="binary tables of a single-sense run (crp mode)")
    p_train.add_argument("--threads", type=int, default=1,
                         help="1 = deterministic; >1 = racy-parallel (fixed mode only)")
    p_train.add_argument("--save-text", action="store_true", help="also write text table formats")
    _add_train_flags(p_train)
    p_train.set_defaults(func=cmd_train)

    p_label = sub.add_parser("label", help="label dataset instances by nearest sense")
    p_label.add_argument("--tables", help=f"binary tables file (default ${ENV_DATA_DIR}/tables.bin)")
    p_label.add_argument("--dataset", required=True, help="TSV or lexical-sample XML instances")
    p_label.add_argument("--out", required=True, help="key file to write")
    p_label.add_argument("--stoplist", help="stoplist file (default: bundled 127-word list)")
    p_label.add_argument("--summary", help="write the labeling summary JSON here")
    p_label.add_argument("--strict", action="store_true", help="exit 3 on unknown targets")
    p_label.add_argument("--output-vector", dest="output_vector",
                         choices=["cluster", "embedding"], default="embedding")
    p_label.add_argument("--similarity", choices=["cosine", "dot"], default="cosine")
    p_label.add_argument("--rule", choices=["all", "any"], default="all",
                         help="context selection connective")
    p_label.set_defaults(func=cmd_label)

    p_eval = sub.add_parser("eval", help="score a predicted key file against gold")
    p_eval.add_argument("--gold", required=True)
    p_eval.add_argument("--pred", required=True)
    p_eval.add_argument("--json", help="write machine-readable metrics here")
    p_eval.add_argument("--splits", type=int, default=5)
    p_eval.add_argument("--fraction", type=float, default=0.8)
    p_eval.add_argument("--seed", type=int, default=0)
    p_eval.add_argument("--weighted", action="store_true",
                        help="instance-weighted target averaging for VM/PF")
    p_eval.set_defaults(func=cmd_eval)

    p_base = sub.add_parser("baseline", help="run a baseline system end to end")
    p_base.add_argument("system", choices=["we-kmeans", "crp-ppmi"])
    p_base.add_argument("--dataset", required=True)
    p_base.add_argument("--out", required=True, help="key file to write")
    p_base.add_argument("--stoplist")
    p_base.add_argument("--tables", help="we-kmeans: trained tables for context vectors")
    p_base.add_argument("--k", type=int, default=3, help="we-kmeans cluster count")
    p_base.add_argument("--corpus", help="crp-ppmi: training corpus")
    p_base.add_argument("--window", type=int, default=5)
    p_base.add_argument("--gamma", type=float, default=0.5)
    p_base.add_argument("--subsample", type=float, default=1e-4)
    p_base.add_argument("--min-count", dest="min_count", type=int, default=5)
    p_base.add_argument("--seed", type=int, default=1)
    p_base.set_defaults(func=cmd_baseline)

    p_ins = sub.add_parser("inspect", help="dump nearest senses/words for a query word")
    p_ins.add_argument("--tables")
    p_ins.add_argument("--word", required=True)
    p_ins.add_argument("--top", type=int, default=10)
    p_ins.set_defaults(func=cmd_inspect)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (UsageError, induction.ConfigError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except Exception:
        logger.exception("internal error")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
