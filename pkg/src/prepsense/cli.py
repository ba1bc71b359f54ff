"""Command line entry point.

Subcommands mirror the pipeline: convert-semeval, features, cluster
fit/eval, knn tune/eval, tag, embed train, and eval analogy/vpc. Every
subcommand prints a one-line summary on stdout and writes details to its
output file. Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import classify, cluster, corpus, embed_train, evaluation, features
from .embeddings import load_table, save_table
from .report import EvalRecord, emit_report

logger = logging.getLogger(__name__)

FEATURE_MODE_FLAGS = {
    "all": "all",
    "lr": "left_right",
    "li": "left_inter",
    "ri": "right_inter",
    "average": "average_baseline",
}


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; this toolkit reserves 2 for
    data errors, so remap usage problems to 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _add_common(parser: argparse.ArgumentParser, *, seed: bool = False,
                jobs: bool = False) -> None:
    parser.add_argument(
        "--config",
        help="file of key=value lines applied as defaults; explicit flags win",
    )
    parser.add_argument(
        "--log-level", default="warning",
        choices=("debug", "info", "warning", "error"),
    )
    if seed:
        parser.add_argument("--seed", type=int, default=42)
    if jobs:
        parser.add_argument("--jobs", type=int, default=1)


def _build_parsers() -> tuple[_Parser, dict[tuple[str, ...], argparse.ArgumentParser]]:
    parser = _Parser(
        prog="psd",
        description="preposition sense disambiguation from word vectors",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    registry: dict[tuple[str, ...], argparse.ArgumentParser] = {}

    p = sub.add_parser("convert-semeval", parents=[], help="lexical-sample XML to instance TSV")
    p.add_argument("--xml", nargs="+", required=True)
    p.add_argument("--keys", nargs="+", default=[])
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_convert_semeval)
    registry[("convert-semeval",)] = p

    p = sub.add_parser("features", help="cache feature triples for instances")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--instances", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--k-left", type=int, default=2)
    p.add_argument("--k-right", type=int, default=2)
    _add_common(p, jobs=True)
    p.set_defaults(func=cmd_features)
    registry[("features",)] = p

    cluster_cmd = sub.add_parser("cluster", help="unsupervised sense induction")
    cluster_sub = cluster_cmd.add_subparsers(dest="subcommand", required=True)

    p = cluster_sub.add_parser("fit", help="fit and label a k-means model")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--instances", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--k", type=int, help="clusters; defaults to distinct senses")
    p.add_argument("--features", default="all", choices=sorted(FEATURE_MODE_FLAGS))
    p.add_argument("--k-left", type=int, default=2)
    p.add_argument("--k-right", type=int, default=2)
    p.add_argument("--prep", help="keep only instances of this preposition")
    p.add_argument("--max-iter", type=int, default=100)
    _add_common(p, seed=True, jobs=True)
    p.set_defaults(func=cmd_cluster_fit)
    registry[("cluster", "fit")] = p

    p = cluster_sub.add_parser("eval", help="accuracy of a fitted model")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--instances", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--k-left", type=int, default=2)
    p.add_argument("--k-right", type=int, default=2)
    p.add_argument("--prep", help="keep only instances of this preposition")
    _add_common(p, jobs=True)
    p.set_defaults(func=cmd_cluster_eval)
    registry[("cluster", "eval")] = p

    knn_cmd = sub.add_parser("knn", help="supervised sense classification")
    knn_sub = knn_cmd.add_subparsers(dest="subcommand", required=True)

    p = knn_sub.add_parser("tune", help="grid-search a weighted k-NN model")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--instances", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--prep", help="keep only instances of this preposition")
    p.add_argument("--ratio", type=float, default=0.8)
    p.add_argument("--features", default="all",
                   choices=("all", "lr", "li", "ri", "average"))
    p.add_argument("--k-grid", default="1,3,5,9,15")
    p.add_argument("--weights-grid",
                   help="semicolon-joined weight triples, e.g. '1,1,1;1,0,0'")
    p.add_argument("--k-left-grid", default="1,2,3,4")
    p.add_argument("--k-right-grid", default="1,2,3,4")
    _add_common(p, seed=True)
    p.set_defaults(func=cmd_knn_tune)
    registry[("knn", "tune")] = p

    p = knn_sub.add_parser("eval", help="accuracy of a tuned model")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--instances", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--prep", help="keep only instances of this preposition")
    _add_common(p)
    p.set_defaults(func=cmd_knn_eval)
    registry[("knn", "eval")] = p

    p = sub.add_parser("tag", help="rewrite preposition tokens with senses")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--models", nargs="+", required=True,
                   help="model files or directories of *.tsv models")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--pretokenized", action="store_true",
                   help="input is one space-joined sentence per line")
    _add_common(p)
    p.set_defaults(func=cmd_tag)
    registry[("tag",)] = p

    embed_cmd = sub.add_parser("embed", help="embedding training")
    embed_sub = embed_cmd.add_subparsers(dest="subcommand", required=True)

    p = embed_sub.add_parser("train", help="train CBOW on a tokenized corpus")
    p.add_argument("--in", dest="input", required=True,
                   help="pretokenized corpus, one sentence per line")
    p.add_argument("--out", required=True)
    p.add_argument("--dim", type=int, default=300)
    p.add_argument("--window", type=int, default=5)
    p.add_argument("--prep-window", type=int, default=2)
    p.add_argument("--negatives", type=int, default=5)
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--lr", type=float, default=0.025)
    p.add_argument("--min-count", type=int, default=5)
    p.add_argument("--subsample", type=float, default=1e-3)
    p.add_argument("--parallel", action="store_true",
                   help="racy multi-worker mode; output is not deterministic")
    _add_common(p, seed=True, jobs=True)
    p.set_defaults(func=cmd_embed_train)
    registry[("embed", "train")] = p

    eval_cmd = sub.add_parser("eval", help="embedding-quality evaluations")
    eval_sub = eval_cmd.add_subparsers(dest="subcommand", required=True)

    p = eval_sub.add_parser("analogy", help="relation offset retrieval")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--pairs", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--topk", type=int, default=3)
    p.add_argument("--conditions", default="diff",
                   help="comma-joined subset of diff,global,sense")
    p.add_argument("--prep", action="append", default=[],
                   help="bare preposition token, or relation=token mappings")
    p.add_argument("--senses", action="append", default=[],
                   help="sense token, or relation=token mappings")
    p.add_argument("--holdout", action="store_true",
                   help="leave-one-out mean difference per query")
    p.add_argument("--no-figures", action="store_true")
    _add_common(p)
    p.set_defaults(func=cmd_eval_analogy)
    registry[("eval", "analogy")] = p

    p = eval_sub.add_parser("vpc", help="verb-particle paraphrase retrieval")
    p.add_argument("--embeddings", required=True,
                   help="table for the global and simplex conditions")
    p.add_argument("--vpc", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--topk", type=int, default=3)
    p.add_argument("--sense-embeddings",
                   help="sense-tagged table for the sense condition")
    p.add_argument("--models", nargs="*", default=[],
                   help="k-NN models used to pick the particle sense")
    p.add_argument("--conditions",
                   help="comma-joined subset of global,simplex,sense")
    p.add_argument("--no-figures", action="store_true")
    _add_common(p)
    p.set_defaults(func=cmd_eval_vpc)
    registry[("eval", "vpc")] = p

    return parser, registry


def _apply_config(argv: list[str], registry) -> None:
    """Load --config key=value pairs as parser defaults for the subcommand.

    Explicit flags still win because defaults only fill absent options.
    """
    if "--config" not in argv:
        return
    path = argv[argv.index("--config") + 1] if argv.index("--config") + 1 < len(argv) else None
    if path is None:
        return
    command = tuple(a for a in argv[:3] if not a.startswith("-"))
    target = None
    for key in (command[:2], command[:1]):
        if key in registry:
            target = registry[key]
            break
    if target is None:
        return
    values: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            key, value = stripped.split("=", 1)
            values[key.strip().replace("-", "_")] = value.strip()

    actions = {action.dest: action for action in target._actions}
    defaults = {}
    for key, raw in values.items():
        action = actions.get(key)
        if action is None:
            raise ValueError(f"{path}: unknown config key {key!r}")
        if isinstance(action, argparse._StoreTrueAction):
            defaults[key] = raw.lower() in ("1", "true", "yes")
        elif action.type is not None:
            defaults[key] = action.type(raw)
        else:
            defaults[key] = raw
    target.set_defaults(**defaults)


def run(argv: list[str]) -> int:
    parser, registry = _build_parsers()
    try:
        _apply_config(argv, registry)
        args = parser.parse_args(argv)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    logging.basicConfig(level=getattr(logging, args.log_level.upper()))
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main(argv: list[str] | None = None) -> int:
    try:
        return run(sys.argv[1:] if argv is None else list(argv))
    except SystemExit as exc:
        code = exc.code
        return code if isinstance(code, int) else 0


# -- subcommand implementations ---------------------------------------------


def _read_instances(path, prep: str | None):
    instances = corpus.read_instances_tsv(path)
    if prep is not None:
        instances = [inst for inst in instances if inst.preposition == prep]
    if not instances:
        raise ValueError(f"{path}: no instances" + (f" for {prep!r}" if prep else ""))
    return instances


def _single_prep(instances) -> str:
    preps = {inst.preposition for inst in instances}
    if len(preps) != 1:
        raise ValueError(
            f"instances mix prepositions {sorted(preps)}; use --prep to pick one"
        )
    return preps.pop()


def cmd_convert_semeval(args) -> int:
    stats: dict = {}
    instances = corpus.convert_semeval(args.xml, args.keys, stats=stats)
    corpus.write_instances_tsv(instances, args.out)
    print(
        f"convert-semeval: instances={stats['instances']} "
        f"labeled={stats['labeled']} skipped={stats['skipped']} "
        f"unmatched-keys={stats['unmatched_keys']} out={args.out}"
    )
    return 0


def cmd_features(args) -> int:
    table = load_table(args.embeddings)
    instances = _read_instances(args.instances, None)
    triples = [
        features.feature_triple(inst, args.k_left, args.k_right, table)
        for inst in instances
    ]
    features.write_triples_tsv([i.instance_id for i in instances], triples, args.out)
    degenerate = sum(t.inter_degenerate for t in triples)
    print(
        f"features: instances={len(instances)} "
        f"degenerate-interplay={degenerate} out={args.out}"
    )
    return 0


def cmd_cluster_fit(args) -> int:
    table = load_table(args.embeddings)
    instances = _read_instances(args.instances, args.prep)
    prep = _single_prep(instances)
    mode = FEATURE_MODE_FLAGS[args.features]
    senses = [inst.sense_label for inst in instances]
    labeled = [s for s in senses if s is not None]
    if args.k is not None:
        k = args.k
    else:
        if not labeled:
            raise ValueError("instances carry no senses; pass --k explicitly")
        k = len(set(labeled))
    points = features.feature_matrix(
        instances, mode, args.k_left, args.k_right, table, jobs=args.jobs
    )
    model = cluster.kmeans_fit(
        points, k, seed=args.seed, max_iter=args.max_iter, feature_mode=mode
    )
    if labeled and len(labeled) == len(senses):
        model = cluster.label_clusters(model, points, senses)
    cluster.save_kmeans(model, args.out)
    print(
        f"cluster-fit: prep={prep} instances={len(instances)} k={k} "
        f"mode={mode} labeled={model.sense_of_cluster is not None} out={args.out}"
    )
    return 0


def cmd_cluster_eval(args) -> int:
    table = load_table(args.embeddings)
    model = cluster.load_kmeans(args.model)
    instances = _read_instances(args.instances, args.prep)
    prep = _single_prep(instances)
    gold = [inst.sense_label for inst in instances]
    if any(g is None for g in gold):
        raise ValueError("cluster eval needs sense labels on every instance")
    points = features.feature_matrix(
        instances, model.feature_mode, args.k_left, args.k_right, table,
        jobs=args.jobs,
    )
    predictions = [cluster.predict_sense(model, p) for p in points]
    accuracy = cluster.disambiguation_accuracy(predictions, gold)
    emit_report(
        [EvalRecord("cluster", prep, "accuracy", accuracy, len(instances))],
        args.out,
    )
    print(
        f"cluster-eval: prep={prep} instances={len(instances)} "
        f"accuracy={accuracy:.4f} report={args.out}"
    )
    return 0


def _parse_int_grid(text: str) -> tuple[int, ...]:
    try:
        values = tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise ValueError(f"bad integer grid {text!r}") from None
    if not values:
        raise ValueError(f"empty grid {text!r}")
    return values


def _parse_weights_grid(text: str) -> tuple[tuple[float, float, float], ...]:
    cells = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.split(",")
        if len(parts) != 3:
            raise ValueError(f"weight cell {chunk!r} needs three numbers")
        cells.append(tuple(float(p) for p in parts))
    if not cells:
        raise ValueError(f"empty weights grid {text!r}")
    return tuple(cells)


def _restrict_weights(weights, flag: str):
    keep = {
        "all": lambda w: True,
        "lr": lambda w: w[2] == 0,
        "li": lambda w: w[1] == 0,
        "ri": lambda w: w[0] == 0,
    }[flag]
    restricted = tuple(w for w in weights if keep(w) and any(w))
    if not restricted:
        raise ValueError(f"no weight cells left for feature set {flag!r}")
    return restricted


def cmd_knn_tune(args) -> int:
    table = load_table(args.embeddings)
    instances = _read_instances(args.instances, args.prep)
    prep = _single_prep(instances)
    if any(inst.sense_label is None for inst in instances):
        raise ValueError("knn tune needs sense labels on every instance")
    train, dev = classify.split_train_dev(instances, args.ratio, args.seed)
    if not dev:
        raise ValueError("dev split is empty; lower --ratio or add instances")

    weights = (
        _parse_weights_grid(args.weights_grid)
        if args.weights_grid
        else classify.DEFAULT_WEIGHTS
    )
    feature_mode = "lri"
    if args.features == "average":
        feature_mode = "average"
        weights = ((1.0, 0.0, 0.0),)
    else:
        weights = _restrict_weights(weights, args.features)
    grid = classify.TuneGrid(
        k_neighbors=_parse_int_grid(args.k_grid),
        weights=weights,
        k_left=_parse_int_grid(args.k_left_grid),
        k_right=_parse_int_grid(args.k_right_grid),
    )
    model, dev_accuracy = classify.tune(train, dev, grid, table, feature_mode)
    classify.save_knn(model, args.out)
    print(
        f"knn-tune: prep={prep} train={len(train)} dev={len(dev)} "
        f"dev-accuracy={dev_accuracy:.4f} k={model.k_neighbors} "
        f"weights={model.weights} windows=({model.k_left},{model.k_right}) "
        f"mode={model.feature_mode} out={args.out}"
    )
    return 0


def cmd_knn_eval(args) -> int:
    table = load_table(args.embeddings)
    model = classify.load_knn(args.model)
    instances = _read_instances(args.instances, args.prep or model.preposition)
    prep = _single_prep(instances)
    if prep != model.preposition:
        raise ValueError(
            f"model is for {model.preposition!r}, instances are {prep!r}"
        )
    accuracy = classify.evaluate(model, instances, table)
    emit_report(
        [EvalRecord("knn", prep, "accuracy", accuracy, len(instances))],
        args.out,
    )
    print(
        f"knn-eval: prep={prep} instances={len(instances)} "
        f"accuracy={accuracy:.4f} report={args.out}"
    )
    return 0


def _load_models(paths) -> dict[str, classify.KnnModel]:
    files: list[Path] = []
    for raw in paths:
        p = Path(raw)
        if p.is_dir():
            files.extend(sorted(p.glob("*.tsv")))
        else:
            files.append(p)
    models: dict[str, classify.KnnModel] = {}
    for f in files:
        model = classify.load_knn(f)
        if model.preposition in models:
            raise ValueError(f"{f}: duplicate model for {model.preposition!r}")
        models[model.preposition] = model
    if not models:
        raise ValueError("no models loaded")
    return models


def cmd_tag(args) -> int:
    table = load_table(args.embeddings)
    models = _load_models(args.models)
    n_sentences = 0
    n_tagged = 0

    def sentence_stream():
        nonlocal n_sentences
        if args.pretokenized:
            for sentence in corpus.iter_sentence_file(args.input):
                n_sentences += 1
                yield sentence
        else:
            with open(args.input, encoding="utf-8") as fh:
                for line in fh:
                    for sentence in corpus.tokenize(line).sentences:
                        n_sentences += 1
                        yield sentence

    with open(args.out, "w", encoding="utf-8") as out:
        for tagged in corpus.tag_sentences(sentence_stream(), models, table):
            n_tagged += sum(
                1 for tok in tagged
                if corpus.split_sense_token(tok)[1] is not None
                and corpus.split_sense_token(tok)[0] in models
            )
            out.write(" ".join(tagged) + "\n")
    print(
        f"tag: sentences={n_sentences} tagged-occurrences={n_tagged} "
        f"prepositions={len(models)} out={args.out}"
    )
    return 0


def cmd_embed_train(args) -> int:
    config = embed_train.TrainConfig(
        dim=args.dim,
        window=args.window,
        prep_window=args.prep_window,
        negatives=args.negatives,
        epochs=args.epochs,
        initial_lr=args.lr,
        min_count=args.min_count,
        subsample_threshold=args.subsample,
        seed=args.seed,
    )
    sentences = list(corpus.iter_sentence_file(args.input))
    if not sentences:
        raise ValueError(f"{args.input}: empty corpus")
    trainer = embed_train.CbowTrainer(config)
    jobs = args.jobs if args.parallel else 1
    table = trainer.fit(sentences, jobs=jobs)
    save_table(table, args.out)
    print(
        f"embed-train: sentences={len(sentences)} vocab={len(table)} "
        f"dim={table.dim} epochs={config.epochs} "
        f"final-loss={trainer.epoch_losses[-1]:.4f} out={args.out}"
    )
    return 0


def _parse_mapping(chunks: list[str]) -> dict[str, str]:
    """Parse repeated 'relation=token' or bare 'token' flags; bare values
    apply to every relation under the key '*'."""
    mapping: dict[str, str] = {}
    for chunk in chunks:
        for part in chunk.split(","):
            part = part.strip()
            if not part:
                continue
            if "=" in part:
                key, value = part.split("=", 1)
                mapping[key.strip()] = value.strip()
            else:
                mapping["*"] = part
    return mapping


def cmd_eval_analogy(args) -> int:
    table = load_table(args.embeddings)
    pair_sets = evaluation.read_relation_pairs(args.pairs)
    if not pair_sets:
        raise ValueError(f"{args.pairs}: no relation sections found")
    conditions = [c.strip() for c in args.conditions.split(",") if c.strip()]
    known = {"diff", "global", "sense"}
    if not conditions or not set(conditions) <= known:
        raise ValueError(f"conditions must be a subset of {sorted(known)}")
    prep_map = _parse_mapping(args.prep)
    sense_map = _parse_mapping(args.senses)

    records: list[EvalRecord] = []
    for ps in pair_sets:
        evaluable, skipped = evaluation.split_evaluable_pairs(table, ps.pairs)
        metric = f"acc@{args.topk}"
        for condition in conditions:
            note = ""
            value = None
            if not evaluable:
                note = "all pairs OOV"
            elif condition == "diff":
                if args.holdout and len(evaluable) < 2:
                    note = "holdout needs two pairs"
                elif args.holdout:
                    value = evaluation.relation_eval(
                        table, ps.pairs, None, args.topk, holdout=True
                    )
                else:
                    vector = evaluation.diff_baseline_vector(table, ps.pairs)
                    value = evaluation.relation_eval(
                        table, ps.pairs, vector, args.topk
                    )
            else:
                source = prep_map if condition == "global" else sense_map
                token = source.get(ps.name, source.get("*"))
                if token is None:
                    note = f"no {condition} token supplied"
                elif token not in table:
                    note = f"token {token!r} OOV"
                else:
                    value = evaluation.relation_eval(
                        table,
                        ps.pairs,
                        table.get_vector(token),
                        args.topk,
                        exclude_tokens=(token,),
                    )
            records.append(
                EvalRecord(
                    evaluation=f"relation:{ps.name}",
                    condition=condition,
                    metric=metric,
                    value=value,
                    n=len(evaluable),
                    skipped=len(skipped),
                    note=note,
                )
            )
    emit_report(records, args.out, figures=not args.no_figures)
    computed = sum(1 for r in records if r.value is not None)
    print(
        f"eval-analogy: relations={len(pair_sets)} conditions={len(conditions)} "
        f"rows={len(records)} computed={computed} report={args.out}"
    )
    return 0


def _locate_particle(sentences: list[list[str]], verb: str, particle: str):
    """Prefer the particle directly after the verb; fall back to the first
    particle occurrence."""
    for sentence in sentences:
        for i in range(1, len(sentence)):
            if sentence[i] == particle and sentence[i - 1] == verb:
                return sentence, i
    for sentence in sentences:
        if particle in sentence:
            return sentence, sentence.index(particle)
    return None


def _vpc_sense_token(
    entry, models, feature_table, sense_table
) -> tuple[str | None, str]:
    """Disambiguate the particle in the entry's first sentence."""
    model = models.get(entry.particle)
    if model is None:
        return None, "no model for particle"
    located = _locate_particle(
        corpus.tokenize(entry.sentences[0]).sentences, entry.verb, entry.particle
    )
    if located is None:
        return None, "particle not found in sentence"
    sentence, index = located
    inst = features.PrepInstance(
        instance_id=f"{entry.verb}-{entry.particle}",
        tokens=sentence,
        prep_index=index,
        preposition=entry.particle,
    )
    triple = classify.instance_triple(
        inst, model.k_left, model.k_right, feature_table, model.feature_mode
    )
    token = f"{entry.particle}{corpus.SENSE_DELIMITER}{classify.knn_predict(model, triple)}"
    if token not in sense_table:
        return None, f"sense token {token!r} OOV"
    return token, ""


def cmd_eval_vpc(args) -> int:
    table = load_table(args.embeddings)
    entries = evaluation.read_vpc_tsv(args.vpc)
    sense_ready = bool(args.sense_embeddings and args.models)
    if args.conditions:
        conditions = [c.strip() for c in args.conditions.split(",") if c.strip()]
        known = {"global", "simplex", "sense"}
        if not conditions or not set(conditions) <= known:
            raise ValueError(f"conditions must be a subset of {sorted(known)}")
    else:
        conditions = ["global", "simplex"] + (["sense"] if sense_ready else [])
    if "sense" in conditions and not sense_ready:
        raise ValueError("sense condition needs --sense-embeddings and --models")

    sense_table = load_table(args.sense_embeddings) if sense_ready else None
    models = _load_models(args.models) if sense_ready else {}

    per_condition: dict[str, tuple[list, list[list[str]], int]] = {}
    for condition in conditions:
        used: list = []
        candidates: list[list[str]] = []
        skipped = 0
        for entry in entries:
            try:
                if condition == "global":
                    found = evaluation.vpc_paraphrase(
                        table, entry, entry.particle, args.topk
                    )
                elif condition == "simplex":
                    found = evaluation.vpc_paraphrase(table, entry, None, args.topk)
                else:
                    token, why = _vpc_sense_token(entry, models, table, sense_table)
                    if token is None:
                        logger.info(
                            "vpc sense: skipping %s %s (%s)",
                            entry.verb, entry.particle, why,
                        )
                        skipped += 1
                        continue
                    found = evaluation.vpc_paraphrase(
                        sense_table, entry, token, args.topk
                    )
            except ValueError as exc:
                logger.info("vpc %s: skipping %s %s (%s)",
                            condition, entry.verb, entry.particle, exc)
                skipped += 1
                continue
            used.append(entry)
            candidates.append([tok for tok, _ in found])
        per_condition[condition] = (used, candidates, skipped)

    records: list[EvalRecord] = []
    for condition in conditions:
        used, candidates, skipped = per_condition[condition]
        groups: list[tuple[str, list, list[list[str]]]] = [("vpc", used, candidates)]
        types = sorted({e.phrase_type for e in used if e.phrase_type})
        for ptype in types:
            sub = [(e, c) for e, c in zip(used, candidates) if e.phrase_type == ptype]
            groups.append(
                (f"vpc:{ptype}", [e for e, _ in sub], [c for _, c in sub])
            )
        for name, sub_entries, sub_candidates in groups:
            if not sub_entries:
                records.append(
                    EvalRecord(name, condition, f"acc@{args.topk}", None, 0,
                               skipped, "no evaluable entries")
                )
                continue
            records.append(
                EvalRecord(
                    name, condition, f"acc@{args.topk}",
                    evaluation.vpc_accuracy(sub_entries, sub_candidates, args.topk),
                    len(sub_entries),
                    skipped if name == "vpc" else 0,
                )
            )
            for k in range(1, args.topk + 1):
                records.append(
                    EvalRecord(
                        name, condition, f"prec@{k}",
                        evaluation.prec_at_k(sub_entries, sub_candidates, k),
                        len(sub_entries),
                        skipped if name == "vpc" else 0,
                    )
                )
    emit_report(records, args.out, figures=not args.no_figures)
    print(
        f"eval-vpc: entries={len(entries)} conditions={','.join(conditions)} "
        f"rows={len(records)} report={args.out}"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
