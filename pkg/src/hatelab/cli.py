"""``hatelab`` command line: preprocess, augment, train, eval, explain, report."""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import sys
from pathlib import Path


from . import __version__, attrib, augment, config, corpus, embed, metrics, models, synthetic, textprep
from .errors import HatelabError
from .train import AggregatedResult, RunResult, TrainConfig, encode_corpus, evaluate_model, run_experiment

log = logging.getLogger("hatelab")


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _detect_format(header) -> str:
    if "tweet" in header:
        return "olid"
    if "text" in header:
        return "hasoc"
    raise HatelabError("cannot tell OLID from HASOC: need a 'tweet' or 'text' column")


# ---------------------------------------------------------------------------
# preprocess


def cmd_preprocess(args) -> int:
    quoting = csv.QUOTE_NONE if args.format == "olid" else csv.QUOTE_MINIMAL
    delim = "\t" if args.format == "olid" else None
    header, rows, delim = corpus.read_rows(args.data, delimiter=delim, quoting=quoting)
    fmt = args.format or _detect_format(header)
    text_col = "tweet" if fmt == "olid" else "text"
    if text_col not in header:
        raise HatelabError(f"{args.data}: missing column {text_col!r}")
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", encoding="utf-8", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=header, delimiter=delim, quoting=quoting,
                           escapechar="\\" if quoting == csv.QUOTE_NONE else None)
        w.writeheader()
        for row in rows:
            row[text_col] = textprep.clean(row.get(text_col) or "")
            w.writerow(row)
    print(f"wrote {len(rows)} rows to {out}")
    return 0


# ---------------------------------------------------------------------------
# augment


def cmd_augment(args) -> int:
    source = corpus.parse(args.data, args.task)
    if args.technique == "deletion":
        if not args.wordlist:
            raise HatelabError("--wordlist is required for deletion")
        lex = augment.load_wordlist(args.wordlist, args.removals)
        aug = augment.augment_deletion(source, lex)
    else:
        if not args.continuations:
            raise HatelabError("--continuations is required for generated")
        aug = augment.augment_generated(source, augment.read_continuations(args.continuations))
    delim = corpus.read_rows(args.data)[2] if source.schema.dataset != "OLID" else "\t"
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    augment.write_augmented(aug, out, delim)
    added = sum(p != augment.ORIGINAL for p in aug.provenance)
    print(f"{len(source)} originals -> {len(aug)} samples ({added} augmented) written to {out}")
    return 0


# ---------------------------------------------------------------------------
# train


def _model_factory(cfg: config.RunConfig, table: embed.EmbeddingTable, n_classes: int):
    kind = cfg.get("model.kind")
    max_len = cfg.get_int("embed.max_len")
    keep = cfg.get_float("model.dropout_keep")
    if kind == "bilstm":
        mcfg = models.BiLstmConfig(hidden=cfg.get_int("model.hidden"), layers=cfg.get_int("model.layers"),
                                   dropout_keep=keep, num_classes=n_classes, embed_dim=table.dim)
        return lambda seed: models.init_bilstm(mcfg, table, seed, max_len)
    mcfg = models.CnnConfig(filter_widths=cfg.get_ints("model.filter_widths"), filters_per_width=cfg.get_int("model.filters"),
                            dropout_keep=keep, num_classes=n_classes, embed_dim=table.dim)
    return lambda seed: models.init_cnn(mcfg, table, seed, max_len)


def _train_config(cfg: config.RunConfig) -> TrainConfig:
    return TrainConfig(
        epochs=cfg.get_int("train.epochs"),
        batch_size=cfg.get_int("train.batch_size"),
        base_lr=cfg.get_float("train.base_lr"),
        warmup_fraction=cfg.get_float("train.warmup_fraction"),
        seeds=cfg.get_ints("train.seeds"),
        optimizer=cfg.get("train.optimizer"),
        schedule=cfg.get_bool("train.schedule"),
    )


def results_block(schema_name: str, kind: str, result: AggregatedResult) -> str:
    lines = [f"# {kind} on {schema_name} ({len(result.runs)} run(s), mean (sd), %)",
             "task | weighted F1 dev | weighted F1 test | macro F1 dev | macro F1 test",
             result.table_row(schema_name)]
    return "\n".join(lines) + "\n"


def cmd_train(args) -> int:
    cfg = config.load(args.config)
    cfg.validate()
    try:
        tcfg = _train_config(cfg)
    except ValueError as exc:
        raise config.ConfigError(str(exc)) from None
    out = Path(args.out) if args.out else cfg.path("output.dir")
    out.mkdir(parents=True, exist_ok=True)
    task = cfg.get("data.task")
    schema = corpus.get_schema(task)
    full = corpus.parse(cfg.path("data.train"), task)
    train_c, dev_c = corpus.split_dev(full, cfg.get_float("data.dev_fraction"), cfg.get_int("data.split_seed"))
    tech = cfg.get("augment.technique")
    if tech == "deletion":
        lex = augment.load_wordlist(cfg.path("augment.wordlist"), cfg.path("augment.removals"))
        train_c = augment.augment_deletion(train_c, lex).as_corpus()
    elif tech == "generated":
        conts = augment.read_continuations(cfg.path("augment.continuations"))
        train_c = augment.augment_generated(train_c, conts).as_corpus()
    test_c = corpus.parse(cfg.path("data.test"), task) if cfg.get("data.test") else None
    vocab = embed.build_vocab(train_c, cfg.get_int("embed.min_freq"))
    glove = cfg.path("embed.glove")
    seed = cfg.get_int("embed.seed")
    table = embed.load_embeddings(glove, vocab, seed) if glove else embed.random_table(vocab, seed)
    max_len = cfg.get_int("embed.max_len")
    enc = lambda c: encode_corpus(c, vocab, max_len)  # noqa: E731
    train_d, dev_d = enc(train_c), enc(dev_c)
    test_d = enc(test_c) if test_c is not None else None
    log.info("train %d dev %d test %d vocab %d", len(train_d), len(dev_d), len(test_d) if test_d else 0, len(vocab))

    kind = cfg.get("model.kind")
    factory = _model_factory(cfg, table, len(schema.label_set))
    hist_path = out / "history.jsonl"
    hist_path.write_text("", encoding="utf-8")
    checkpoints = []

    def on_run(run: RunResult):
        ck = out / f"{kind}_seed{run.seed}.npz"
        models.save_checkpoint(ck, run.model, vocab, schema.label_set,
                               {"task": task, "seed": run.seed, "chosen_epoch": run.history.chosen_epoch})
        checkpoints.append(ck.name)
        with hist_path.open("a", encoding="utf-8") as fh:
            fh.write(run.history.to_jsonl())
        log.info("seed %d done: chosen epoch %d, dev macro F1 %.4f", run.seed, run.history.chosen_epoch, run.dev.macro_f1)

    result = run_experiment(tcfg, factory, train_d, dev_d, schema.label_set, test_d, on_run)

    report = [results_block(schema.name, kind, result)]
    for run in result.runs:
        if run.test_confusion is not None:
            report.append(f"\nseed {run.seed} test confusion matrix:\n{run.test_confusion.render()}\n")
    (out / "report.txt").write_text("".join(report), encoding="utf-8")
    results = {
        "model": kind,
        "task": schema.name,
        "runs": [{"seed": r.seed, "chosen_epoch": r.history.chosen_epoch, "dev": r.dev.as_dict(),
                  "test": r.test.as_dict() if r.test else None} for r in result.runs],
        "dev": {k: [v.mean, v.sd] for k, v in result.dev.items()},
        "test": {k: [v.mean, v.sd] for k, v in result.test.items()} if result.test else None,
    }
    (out / "results.json").write_text(json.dumps(results, indent=2), encoding="utf-8")
    inputs = {k: {"path": str(cfg.path(k)), "sha256": sha256(cfg.path(k))} for k in config.PATH_KEYS if cfg.get(k)}
    manifest = {
        "version": __version__,
        "command": "train",
        "config": cfg.resolved(),
        "seeds": list(tcfg.seeds),
        "split_seed": cfg.get_int("data.split_seed"),
        "embed_seed": seed,
        "inputs": inputs,
        "vocab_size": len(vocab),
        "checkpoints": checkpoints,
        "results": "results.json",
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2), encoding="utf-8")
    (out / "run.cfg").write_text(config.dump(cfg), encoding="utf-8")
    print(report[0], end="")
    return 0


# ---------------------------------------------------------------------------
# eval


def cmd_eval(args) -> int:
    reports = []
    last_cm = None
    for path in args.checkpoint:
        ck = models.load_checkpoint(path)
        data = corpus.parse(args.data, args.task)
        if tuple(ck.labels) != data.schema.label_set:
            raise HatelabError(f"{path}: trained on labels {ck.labels}, data has {list(data.schema.label_set)}")
        enc = encode_corpus(data, ck.vocab, ck.model.max_len)
        last_cm, rep = evaluate_model(ck.model, enc, ck.labels)
        reports.append(rep)
    agg = metrics.aggregate(reports)
    print(f"# {args.task} on {args.data} ({len(reports)} checkpoint(s), mean (sd), %)")
    for key in ("weighted_f1", "macro_f1", "micro_f1"):
        print(f"{key.replace('_f1', ' F1'):<12} {agg[key].render(100)}")
    print("\nconfusion matrix (last checkpoint):")
    print(last_cm.render())
    return 0


# ---------------------------------------------------------------------------
# explain


def cmd_explain(args) -> int:
    ck = models.load_checkpoint(args.checkpoint)
    texts = list(args.text or [])
    if args.input:
        with open(args.input, encoding="utf-8") as fh:
            texts.extend(line.rstrip("\n") for line in fh if line.strip())
    if not texts:
        raise HatelabError("nothing to explain: pass --text or --input")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    igc = attrib.IgConfig(steps=args.steps, baseline=args.baseline)
    entries = []
    for i, text in enumerate(texts):
        rep = attrib.explain(ck.model, ck.vocab, ck.labels, textprep.clean_tokens(text), igc, text=text)
        name = f"report_{i:04d}.html"
        attrib.render_report(rep, out / name)
        entries.append((name, rep))
        print(f"{name}: {rep.prediction} (residual {rep.residual:.6f})")
    attrib.render_index(entries, out / "index.html")
    return 0


# ---------------------------------------------------------------------------
# report


def cmd_report(args) -> int:
    by_model: dict[str, list[str]] = {}
    for run_dir in args.runs:
        path = Path(run_dir)
        if path.is_dir():
            path = path / "results.json"
        try:
            res = json.loads(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise HatelabError(f"cannot read {path}: {exc}") from None
        cells = []
        for metric in ("weighted_f1", "macro_f1"):
            for split in ("dev", "test"):
                block = res.get(split)
                cells.append(metrics.format_mean_sd(100 * block[metric][0], 100 * block[metric][1]) if block else "-")
        by_model.setdefault(res["model"], []).append(" | ".join([res["task"], *cells]))
    lines = ["task | weighted F1 dev | weighted F1 test | macro F1 dev | macro F1 test"]
    for model, rows in by_model.items():
        lines.append(f"[{model}]")
        lines.extend(rows)
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    print(text, end="")
    return 0


# ---------------------------------------------------------------------------
# synth


def cmd_synth(args) -> int:
    planted, background = synthetic.make_lexicons(args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    synthetic.write_hasoc(synthetic.generate(args.train, args.seed + 1, planted, background), out / "train.csv")
    synthetic.write_hasoc(synthetic.generate(args.test, args.seed + 2, planted, background, id_prefix="t"), out / "test.csv")
    (out / "planted.txt").write_text("\n".join(planted) + "\n", encoding="utf-8")
    print(f"wrote synthetic corpus to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hatelab", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("preprocess", help="clean the text column of a corpus file")
    s.add_argument("--data", required=True)
    s.add_argument("--format", choices=["olid", "hasoc"])
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_preprocess)

    s = sub.add_parser("augment", help="boundary-token deletion or merge of generated continuations")
    s.add_argument("--data", required=True)
    s.add_argument("--task", required=True, help="e.g. hasoc-a, olid-c")
    s.add_argument("--technique", choices=["deletion", "generated"], required=True)
    s.add_argument("--wordlist")
    s.add_argument("--removals")
    s.add_argument("--continuations")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_augment)

    s = sub.add_parser("train", help="multi-seed training from a config file")
    s.add_argument("--config", required=True)
    s.add_argument("--out", help="override output.dir")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("eval", help="score checkpoints on a labelled file")
    s.add_argument("--checkpoint", required=True, action="append")
    s.add_argument("--data", required=True)
    s.add_argument("--task", required=True)
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("explain", help="Integrated Gradients HTML reports")
    s.add_argument("--checkpoint", required=True)
    s.add_argument("--text", action="append")
    s.add_argument("--input", help="file with one text per line")
    s.add_argument("--out", default="explain")
    s.add_argument("--steps", type=int, default=50)
    s.add_argument("--baseline", choices=["pad_sequence", "zero_embedding"], default="pad_sequence")
    s.set_defaults(func=cmd_explain)

    s = sub.add_parser("report", help="merge run results into one comparison table")
    s.add_argument("runs", nargs="+", help="run directories or results.json files")
    s.add_argument("--out")
    s.set_defaults(func=cmd_report)

    s = sub.add_parser("synth", help="write a planted-lexicon synthetic corpus")
    s.add_argument("--out", required=True)
    s.add_argument("--train", type=int, default=2000)
    s.add_argument("--test", type=int, default=500)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_synth)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    try:
        return args.func(args)
    except (HatelabError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
