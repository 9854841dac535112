"""Single `corpusforge` binary: git-style subcommands over the library.

Conventions shared by every subcommand:
  * strict JSON config (--config); unknown keys are rejected, flags override
    config values, and the effective config is echoed into the report;
  * a machine-readable JSON report (--report path, else stdout); logs go to
    stderr;
  * exit 0 on success, 1 for configuration/usage errors, 2 for data errors;
  * all randomness flows from the single seed, and reruns with identical
    inputs produce byte-identical outputs and reports.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

from corpusforge import contam as contam_mod
from corpusforge import corpus, dedup, filters, ngram, schedule, sft, tokenizer
from corpusforge.errors import (
    ConfigInvalid,
    CorpusForgeError,
    RegexCompileError,
)
from corpusforge.normalize import NormalizeConfig, normalize

log = logging.getLogger("corpusforge")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2

_DEFAULTS = {"seed": 0, "parallelism": 1, "log_level": "info"}

_SCHEMA = {
    "seed": None,
    "parallelism": None,
    "log_level": None,
    "normalize": {"strip_html", "collapse_whitespace", "unicode_nfc", "custom_patterns"},
    "filter": {
        "harm": {"keyword_lists", "patterns", "retain_fraction"},
        "pii": {"detectors", "action"},
        "quality": {
            "max_perplexity", "max_dup_line_fraction", "max_top_ngram_fraction",
            "min_chars", "max_symbol_ratio", "drop_top_perplexity_fraction",
        },
    },
    "dedup": {"radius", "cos_threshold"},
    "lm": {"order", "discount"},
    "tok": {"target_vocab", "coverage", "specials"},
    "sft": {"rule_patterns", "min_quality", "dup_cos_threshold"},
    "contam": {"threshold"},
    "pipeline": {"decontaminate"},
}


def _check_keys(blob: dict, schema, path: str, where: str):
    for key, value in blob.items():
        if isinstance(schema, dict):
            if key not in schema:
                raise ConfigInvalid(where, f"{path}{key}")
            sub = schema[key]
            if isinstance(sub, (dict, set)) and isinstance(value, dict):
                _check_keys(value, sub, f"{path}{key}.", where)
        elif isinstance(schema, set):
            if key not in schema:
                raise ConfigInvalid(where, f"{path}{key}")


def load_config(path) -> dict:
    cfg = dict(_DEFAULTS)
    if path:
        try:
            with open(path, encoding="utf-8") as fh:
                blob = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigInvalid(path, "$", f"not valid JSON: {exc}") from exc
        if not isinstance(blob, dict):
            raise ConfigInvalid(path, "$", "top level must be an object")
        _check_keys(blob, _SCHEMA, "", path)
        cfg.update(blob)
    if not isinstance(cfg["parallelism"], int) or cfg["parallelism"] < 1:
        raise ConfigInvalid(path or "<defaults>", "parallelism", "must be an integer >= 1")
    return cfg


def ordered_map(fn, items, parallelism: int) -> list:
    """Map preserving input order; parallelism bounds worker count."""
    if parallelism <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=parallelism) as ex:
        return list(ex.map(fn, items))


def emit_report(report: dict, path):
    text = json.dumps(report, ensure_ascii=False, sort_keys=True, indent=2) + "\n"
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _read_docs(patterns, drops: dict) -> list:
    def on_error(exc):
        drops["malformed"] = drops.get("malformed", 0) + 1
        log.warning("skipping bad line: %s", exc)

    docs = list(corpus.read_many(patterns, on_error=on_error))
    return docs


def _section(cfg: dict, name: str) -> dict:
    return cfg.get(name) or {}


# ---------------------------------------------------------------- normalize

def _normalize_cfg(cfg: dict) -> NormalizeConfig:
    sec = dict(_section(cfg, "normalize"))
    sec["custom_patterns"] = [tuple(p) for p in sec.get("custom_patterns", [])]
    return NormalizeConfig(**sec)


def cmd_normalize(args, cfg):
    ncfg = _normalize_cfg(cfg)
    drops: dict = {}
    docs = _read_docs(args.inputs, drops)
    out_docs = ordered_map(lambda d: normalize(d, ncfg), docs, cfg["parallelism"])
    shards = corpus.write_sharded(out_docs, args.out, name=args.name)
    report = corpus.PipelineReport("normalize", docs_in=len(docs) + drops.get("malformed", 0),
                                   docs_out=len(out_docs), docs_dropped_by_reason=drops)
    report.check()
    return EXIT_OK, {
        "command": "normalize",
        "config": cfg,
        "stages": [report.to_dict()],
        "outputs": [s.path for s in shards],
    }


# ------------------------------------------------------------------- filter

def _filter_objects(cfg: dict, seed: int):
    fsec = _section(cfg, "filter")
    harm_cfg = dict(fsec.get("harm") or {})
    policy = filters.HarmPolicy(seed=seed, **harm_cfg)
    pii_cfg = dict(fsec.get("pii") or {})
    if pii_cfg:
        pii_cfg["detectors"] = [tuple(d) for d in pii_cfg.get("detectors", [])]
        rules = filters.PiiRules(**pii_cfg)
    else:
        rules = filters.DEFAULT_PII_RULES
    qsec = dict(fsec.get("quality") or {})
    pct = qsec.pop("drop_top_perplexity_fraction", None)
    th = filters.QualityThresholds(**qsec)
    return policy, rules, th, pct


def _run_filter(docs, policy, rules, th, pct, lm, parallelism, drops: dict):
    if pct is not None and lm is not None:
        # percentile mode needs a scoring pass, a barrier, then the filter pass
        def ppl_or_none(doc):
            try:
                return lm.perplexity(doc.text)
            except CorpusForgeError:
                return None

        ppls = [p for p in ordered_map(ppl_or_none, docs, parallelism) if p is not None]
        if ppls:
            cut = filters.percentile_threshold(ppls, pct)
            th = filters.QualityThresholds(
                max_perplexity=cut if th.max_perplexity is None else min(th.max_perplexity, cut),
                max_dup_line_fraction=th.max_dup_line_fraction,
                max_top_ngram_fraction=th.max_top_ngram_fraction,
                min_chars=th.min_chars,
                max_symbol_ratio=th.max_symbol_ratio,
            )

    def one(doc):
        verdict = filters.harm_filter(doc, policy)
        if not verdict.keep:
            return None, verdict.reasons[0]
        doc = filters.pii_scrub(doc, rules)
        verdict = filters.quality_filter(doc, lm, th)
        if not verdict.keep:
            return None, verdict.reasons[0]
        return doc, None

    kept = []
    for doc, reason in ordered_map(one, docs, parallelism):
        if doc is None:
            drops[reason] = drops.get(reason, 0) + 1
        else:
            kept.append(doc)
    return kept


def cmd_filter(args, cfg):
    policy, rules, th, pct = _filter_objects(cfg, cfg["seed"])
    lm = ngram.NgramLM.load(args.lm) if args.lm else None
    drops: dict = {}
    docs = _read_docs(args.inputs, drops)
    n_in = len(docs) + drops.get("malformed", 0)
    kept = _run_filter(docs, policy, rules, th, pct, lm, cfg["parallelism"], drops)
    shards = corpus.write_sharded(kept, args.out, name=args.name)
    report = corpus.PipelineReport("filter", docs_in=n_in, docs_out=len(kept),
                                   docs_dropped_by_reason=drops)
    report.check()
    return EXIT_OK, {
        "command": "filter",
        "config": cfg,
        "stages": [report.to_dict()],
        "outputs": [s.path for s in shards],
    }


# -------------------------------------------------------------------- dedup

def _dedup_params(args, cfg):
    sec = _section(cfg, "dedup")
    radius = int(args.radius if args.radius is not None else sec.get("radius", dedup.DEFAULT_RADIUS))
    cos = float(args.cos if args.cos is not None else sec.get("cos_threshold", dedup.DEFAULT_COS))
    if radius < 0:
        raise ValueError("radius must be >= 0")
    if not 0.0 < cos <= 1.0:
        raise ValueError("cos threshold must be in (0, 1]")
    return radius, cos


def _run_dedup(docs, radius, cos, drops: dict):
    index = dedup.SigIndex()
    kept = []
    for doc, decision in zip(docs, dedup.dedup_pass(docs, index, radius, cos)):
        if decision.channel == "none":
            kept.append(doc)
        else:
            key = f"duplicate:{decision.channel}"
            drops[key] = drops.get(key, 0) + 1
    return kept, index


def _run_decontaminate(docs, eval_patterns, radius, cos, drops: dict):
    eval_sets = []
    for pattern in eval_patterns:
        eval_drops: dict = {}
        eval_sets.append((pattern, _read_docs([pattern], eval_drops)))
    removed: dict = {}
    kept = list(dedup.decontaminate(docs, eval_sets, radius, cos, report=removed))
    for name, count in removed.items():
        if count:
            drops[f"contaminated:{name}"] = count
    return kept, removed


def cmd_dedup(args, cfg):
    radius, cos = _dedup_params(args, cfg)
    drops: dict = {}
    docs = _read_docs(args.inputs, drops)
    n_in = len(docs) + drops.get("malformed", 0)
    if args.eval:
        kept, removed = _run_decontaminate(docs, args.eval, radius, cos, drops)
        stage_name = "decontaminate"
    else:
        kept, index = _run_dedup(docs, radius, cos, drops)
        stage_name = "dedup"
        if args.index_out:
            index.save(args.index_out)
    shards = corpus.write_sharded(kept, args.out, name=args.name)
    report = corpus.PipelineReport(stage_name, docs_in=n_in, docs_out=len(kept),
                                   docs_dropped_by_reason=drops)
    report.check()
    return EXIT_OK, {
        "command": stage_name,
        "config": {**cfg, "dedup": {"radius": radius, "cos_threshold": cos}},
        "stages": [report.to_dict()],
        "outputs": [s.path for s in shards],
    }


# ----------------------------------------------------------------------- lm

def cmd_lm(args, cfg):
    sec = _section(cfg, "lm")
    if args.action == "train":
        drops: dict = {}
        docs = _read_docs(args.inputs, drops)
        lm = ngram.NgramLM.train(docs, order=args.order or sec.get("order", 3),
                                 discount=sec.get("discount", 0.75))
        lm.save(args.out)
        return EXIT_OK, {
            "command": "lm-train",
            "config": cfg,
            "stages": [{"stage_name": "lm-train", "docs_in": len(docs),
                        "vocab_size": lm.prediction_vocab_size, "order": lm.order}],
            "outputs": [args.out],
        }
    lm = ngram.NgramLM.load(args.model)
    drops = {}
    docs = _read_docs(args.inputs, drops)
    rows = []
    total_nll = 0.0
    total_tokens = 0
    for doc in docs:
        try:
            st = lm.score(doc.text)
        except CorpusForgeError:
            continue
        rows.append({"id": doc.id, "nll": st.total_nll, "tokens": st.token_count,
                     "perplexity": st.perplexity})
        total_nll += st.total_nll
        total_tokens += st.token_count
    if args.scores_out:
        with open(args.scores_out, "w", encoding="utf-8") as fh:
            for row in rows:
                fh.write(json.dumps(row, sort_keys=True) + "\n")
    mean_nll = total_nll / total_tokens if total_tokens else 0.0
    return EXIT_OK, {
        "command": "lm-score",
        "config": cfg,
        "stages": [{"stage_name": "lm-score", "docs_in": len(docs), "docs_scored": len(rows),
                    "tokens": total_tokens, "mean_nll": mean_nll,
                    "perplexity": math.exp(mean_nll) if total_tokens else None}],
        "outputs": [args.scores_out] if args.scores_out else [],
    }


# ---------------------------------------------------------------------- tok

def cmd_tok(args, cfg):
    sec = _section(cfg, "tok")
    if args.action == "train":
        drops: dict = {}
        docs = _read_docs(args.inputs, drops)
        specials = args.specials.split(",") if args.specials else sec.get("specials", [])
        vocab = tokenizer.bpe_train(
            docs,
            target_vocab=args.target_vocab or sec.get("target_vocab", 8192),
            coverage=args.coverage if args.coverage is not None else sec.get("coverage", 0.9999),
            specials=specials,
        )
        tokenizer.save_vocab(vocab, args.out)
        return EXIT_OK, {
            "command": "tok-train",
            "config": cfg,
            "stages": [{"stage_name": "tok-train", "docs_in": len(docs),
                        "vocab_size": vocab.vocab_size, "merges": len(vocab.merges)}],
            "outputs": [args.out],
        }
    vocab = tokenizer.load_vocab(args.vocab)
    drops = {}
    docs = _read_docs(args.inputs, drops)
    if args.action == "encode":
        with open(args.out, "w", encoding="utf-8") as fh:
            for doc in docs:
                ids = tokenizer.encode(vocab, doc.text)
                fh.write(json.dumps({"id": doc.id, "ids": ids}) + "\n")
        return EXIT_OK, {
            "command": "tok-encode",
            "config": cfg,
            "stages": [{"stage_name": "tok-encode", "docs_in": len(docs)}],
            "outputs": [args.out],
        }
    # action == "cr"
    langs = args.lang or sorted({d.lang for d in docs})
    reports = [tokenizer.compression_ratio(vocab, docs, lang).to_dict() for lang in langs]
    return EXIT_OK, {
        "command": "tok-cr",
        "config": cfg,
        "stages": [{"stage_name": "tok-cr", "docs_in": len(docs),
                    "vocab_size": vocab.vocab_size, "reports": reports}],
        "outputs": [],
    }


# ----------------------------------------------------------------- schedule

def _load_stage_specs(args):
    if args.preset:
        return schedule.three_stage_preset(scale=args.scale)
    with open(args.stages, encoding="utf-8") as fh:
        rows = json.load(fh)
    return [schedule.StageSpec(**row) for row in rows]


def cmd_schedule(args, cfg):
    if args.action == "lr":
        sched = schedule.LrSchedule(warmup_steps=args.warmup, peak_lr=args.peak,
                                    final_lr=args.final, total_steps=args.total)
        steps = [args.step] if args.step is not None else list(
            range(0, args.total + 1, max(1, args.total // 20)))
        values = [{"step": s, "lr": schedule.lr_at_step(s, sched)} for s in steps]
        return EXIT_OK, {
            "command": "schedule-lr",
            "config": cfg,
            "stages": [{"stage_name": "schedule-lr", "schedule": vars(sched), "values": values}],
            "outputs": [],
        }

    specs = _load_stage_specs(args)
    if args.action == "validate":
        plan = schedule.StagePlan.from_specs(specs)
        violations = schedule.validate_plan(plan)
        code = EXIT_OK if not violations else EXIT_DATA
        return code, {
            "command": "schedule-validate",
            "config": cfg,
            "stages": [{"stage_name": "schedule-validate", "violations": violations,
                        "total_tokens": plan.total_tokens}],
            "outputs": [],
        }

    # action == "plan"
    with open(args.inventory, encoding="utf-8") as fh:
        inv_rows = json.load(fh)
    inventory = [schedule.InventoryEntry(**row) for row in inv_rows]
    manifests = schedule.plan_stages(inventory, specs, seed=cfg["seed"])
    blob = [m.to_dict() for m in manifests]
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(blob, fh, ensure_ascii=False, sort_keys=True, indent=2)
            fh.write("\n")
    return EXIT_OK, {
        "command": "schedule-plan",
        "config": cfg,
        "stages": [{"stage_name": "schedule-plan",
                    "manifests": [{"stage_name": m.stage_name,
                                   "est_tokens": m.est_tokens,
                                   "entries": len(m.entries)} for m in manifests]}],
        "outputs": [args.out] if args.out else [],
    }


# ---------------------------------------------------------------------- sft

def _read_pairs(patterns, drops: dict) -> list:
    pairs = []
    for pattern in patterns:
        for path in corpus.iter_paths(pattern):
            with open(path, encoding="utf-8") as fh:
                for line in fh:
                    if not line.strip():
                        continue
                    try:
                        pairs.append(sft.pair_from_json(line))
                    except (KeyError, ValueError):
                        drops["malformed"] = drops.get("malformed", 0) + 1
    return pairs


def cmd_sft(args, cfg):
    sec = _section(cfg, "sft")
    scfg = sft.SftCleanConfig(**sec)
    scorer = sft.scores_file_scorer(args.scores) if args.scores else None
    drops: dict = {}
    pairs = _read_pairs(args.inputs, drops)
    kept, report, retry = sft.clean(pairs, scfg, scorer=scorer)
    trusted = []
    if args.trusted:
        trusted = _read_pairs(args.trusted, drops)
    os.makedirs(args.out, exist_ok=True)
    out_path = os.path.join(args.out, "pairs.jsonl")
    with open(out_path, "w", encoding="utf-8") as fh:
        for pair in kept + trusted:
            fh.write(sft.pair_to_json(pair) + "\n")
    outputs = [out_path]
    if retry:
        retry_path = os.path.join(args.out, "retry.jsonl")
        with open(retry_path, "w", encoding="utf-8") as fh:
            for pair in retry:
                fh.write(sft.pair_to_json(pair) + "\n")
        outputs.append(retry_path)
    stage = report.to_dict()
    stage["stage_name"] = "sft-clean"
    stage["malformed"] = drops.get("malformed", 0)
    stage["trusted_passthrough"] = len(trusted)
    return EXIT_OK, {
        "command": "sft-clean",
        "config": cfg,
        "stages": [stage],
        "outputs": outputs,
    }


# ------------------------------------------------------------------- contam

def cmd_contam(args, cfg):
    threshold = args.threshold if args.threshold is not None else \
        _section(cfg, "contam").get("threshold", contam_mod.DEFAULT_THRESHOLD)
    if args.model:
        scorer = contam_mod.lm_scorer(ngram.NgramLM.load(args.model))
        scorer_id = args.model
    else:
        scorer = contam_mod.nll_file_scorer(args.nll)
        scorer_id = args.nll
    drops: dict = {}
    unseen = _read_docs([args.unseen], drops)
    evalsets = {}
    for spec in args.eval:
        name, _, pattern = spec.partition("=")
        if not pattern:
            raise ConfigInvalid("<args>", "--eval", "expected NAME=GLOB")
        evalsets[name] = _read_docs([pattern], drops)
    report = contam_mod.measure(scorer, unseen, evalsets, scorer_id=scorer_id)
    verdict = contam_mod.interpret(report, threshold)
    print(contam_mod.format_table(report, verdict), file=sys.stderr)
    return EXIT_OK, {
        "command": "contam",
        "config": {**cfg, "contam": {"threshold": threshold}},
        "stages": [{"stage_name": "contam", **report.to_dict(),
                    "verdict": vars(verdict)}],
        "outputs": [],
    }


# ----------------------------------------------------------------- pipeline

def cmd_pipeline(args, cfg):
    ncfg = _normalize_cfg(cfg)
    policy, rules, th, pct = _filter_objects(cfg, cfg["seed"])
    radius, cos = _dedup_params(args, cfg)
    lm = ngram.NgramLM.load(args.lm) if args.lm else None
    parallelism = cfg["parallelism"]

    stages = []
    read_drops: dict = {}
    docs = _read_docs(args.inputs, read_drops)
    n_read = len(docs) + read_drops.get("malformed", 0)

    normalized = ordered_map(lambda d: normalize(d, ncfg), docs, parallelism)
    rep = corpus.PipelineReport("normalize", n_read, len(normalized), dict(read_drops))
    rep.check()
    stages.append(rep)

    filter_drops: dict = {}
    filtered = _run_filter(normalized, policy, rules, th, pct, lm, parallelism, filter_drops)
    rep = corpus.PipelineReport("filter", len(normalized), len(filtered), filter_drops)
    rep.check()
    stages.append(rep)

    dedup_drops: dict = {}
    deduped, _ = _run_dedup(filtered, radius, cos, dedup_drops)
    rep = corpus.PipelineReport("dedup", len(filtered), len(deduped), dedup_drops)
    rep.check()
    stages.append(rep)

    final = deduped
    if args.eval:
        decon_drops: dict = {}
        final, _ = _run_decontaminate(deduped, args.eval, radius, cos, decon_drops)
        rep = corpus.PipelineReport("decontaminate", len(deduped), len(final), decon_drops)
        rep.check()
        stages.append(rep)

    shards = corpus.write_sharded(final, args.out, name=args.name)
    total_dropped = sum(sum(s.docs_dropped_by_reason.values()) for s in stages)
    assert n_read == len(final) + total_dropped
    return EXIT_OK, {
        "command": "pipeline",
        "config": {**cfg, "dedup": {"radius": radius, "cos_threshold": cos}},
        "stages": [s.to_dict() for s in stages],
        "totals": {"docs_in": n_read, "docs_out": len(final), "docs_dropped": total_dropped},
        "outputs": [s.path for s in shards],
    }


# ------------------------------------------------------------------ parsing

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="strict JSON config file")
    common.add_argument("--report", help="write the JSON report here instead of stdout")
    common.add_argument("--seed", type=int, help="override config seed")
    common.add_argument("--parallelism", type=int, help="override worker count")
    common.add_argument("--log-level", help="debug|info|warning|error")

    parser = argparse.ArgumentParser(
        prog="corpusforge",
        description="Corpus curation toolkit: normalization, filtering, dedup, "
                    "n-gram scoring, BPE tokenization, data scheduling, SFT "
                    "cleaning, and contamination analysis.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def io(p, out_required=True):
        p.add_argument("--in", dest="inputs", nargs="+", required=True,
                       metavar="GLOB", help="input shard glob(s)")
        if out_required:
            p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--name", default="shard", help="output shard name prefix")

    p = sub.add_parser("normalize", parents=[common], help="clean text: html, unicode, whitespace")
    io(p)
    p.set_defaults(fn=cmd_normalize)

    p = sub.add_parser("filter", parents=[common], help="harm/PII/quality filtering")
    io(p)
    p.add_argument("--lm", help="n-gram model for the perplexity gate")
    p.set_defaults(fn=cmd_filter)

    p = sub.add_parser("dedup", parents=[common], help="near-duplicate removal or decontamination")
    io(p)
    p.add_argument("--radius", type=int, help="simhash Hamming radius")
    p.add_argument("--cos", type=float, help="embedding cosine threshold")
    p.add_argument("--eval", nargs="+", metavar="GLOB",
                   help="eval-set shard glob(s); switches to decontamination")
    p.add_argument("--index-out", help="persist the signature index here")
    p.set_defaults(fn=cmd_dedup)

    p = sub.add_parser("lm", help="n-gram language model")
    lm_sub = p.add_subparsers(dest="action", required=True)
    q = lm_sub.add_parser("train", parents=[common])
    q.add_argument("--in", dest="inputs", nargs="+", required=True)
    q.add_argument("--out", required=True, help="model JSON path")
    q.add_argument("--order", type=int)
    q.set_defaults(fn=cmd_lm)
    q = lm_sub.add_parser("score", parents=[common])
    q.add_argument("--in", dest="inputs", nargs="+", required=True)
    q.add_argument("--model", required=True)
    q.add_argument("--scores-out", help="per-doc NLL JSONL")
    q.set_defaults(fn=cmd_lm)

    p = sub.add_parser("tok", help="BPE tokenizer")
    tok_sub = p.add_subparsers(dest="action", required=True)
    q = tok_sub.add_parser("train", parents=[common])
    q.add_argument("--in", dest="inputs", nargs="+", required=True)
    q.add_argument("--out", required=True, help="vocab file path")
    q.add_argument("--target-vocab", type=int)
    q.add_argument("--coverage", type=float)
    q.add_argument("--specials", help="comma-separated reserved tokens")
    q.set_defaults(fn=cmd_tok)
    q = tok_sub.add_parser("encode", parents=[common])
    q.add_argument("--in", dest="inputs", nargs="+", required=True)
    q.add_argument("--vocab", required=True)
    q.add_argument("--out", required=True, help="token-id JSONL path")
    q.set_defaults(fn=cmd_tok)
    q = tok_sub.add_parser("cr", parents=[common])
    q.add_argument("--in", dest="inputs", nargs="+", required=True)
    q.add_argument("--vocab", required=True)
    q.add_argument("--lang", nargs="+", help="language filter(s); default: all seen")
    q.set_defaults(fn=cmd_tok)

    p = sub.add_parser("schedule", help="stage planning and LR arithmetic")
    sch_sub = p.add_subparsers(dest="action", required=True)
    q = sch_sub.add_parser("plan", parents=[common])
    q.add_argument("--inventory", required=True, help="inventory JSON")
    g = q.add_mutually_exclusive_group(required=True)
    g.add_argument("--stages", help="stage specs JSON")
    g.add_argument("--preset", action="store_true", help="use the built-in three-stage preset")
    q.add_argument("--scale", type=float, default=1.0, help="preset budget scale factor")
    q.add_argument("--out", help="write manifests JSON here")
    q.set_defaults(fn=cmd_schedule)
    q = sch_sub.add_parser("validate", parents=[common])
    g = q.add_mutually_exclusive_group(required=True)
    g.add_argument("--stages")
    g.add_argument("--preset", action="store_true")
    q.add_argument("--scale", type=float, default=1.0)
    q.set_defaults(fn=cmd_schedule)
    q = sch_sub.add_parser("lr", parents=[common])
    q.add_argument("--warmup", type=int, required=True)
    q.add_argument("--peak", type=float, required=True)
    q.add_argument("--final", type=float, required=True)
    q.add_argument("--total", type=int, required=True)
    q.add_argument("--step", type=int, help="single step; default: a 20-point curve")
    q.set_defaults(fn=cmd_schedule)

    p = sub.add_parser("sft", help="SFT pair cleaning")
    sft_sub = p.add_subparsers(dest="action", required=True)
    q = sft_sub.add_parser("clean", parents=[common])
    q.add_argument("--in", dest="inputs", nargs="+", required=True,
                   help="pair JSONL glob(s)")
    q.add_argument("--out", required=True)
    q.add_argument("--scores", help="external quality scores file")
    q.add_argument("--trusted", nargs="+", metavar="GLOB",
                   help="pass-through pair sets that skip cleaning")
    q.set_defaults(fn=cmd_sft)

    p = sub.add_parser("contam", parents=[common], help="eval-set leakage analysis")
    p.add_argument("--model", help="n-gram model JSON")
    p.add_argument("--nll", help="per-doc NLL JSONL (external scorer)")
    p.add_argument("--unseen", required=True, metavar="GLOB")
    p.add_argument("--eval", nargs="+", required=True, metavar="NAME=GLOB")
    p.add_argument("--threshold", type=float)
    p.set_defaults(fn=cmd_contam)

    p = sub.add_parser("pipeline", parents=[common], help="normalize -> filter -> dedup [-> decontaminate]")
    io(p)
    p.add_argument("--lm", help="n-gram model for the perplexity gate")
    p.add_argument("--radius", type=int)
    p.add_argument("--cos", type=float)
    p.add_argument("--eval", nargs="+", metavar="GLOB",
                   help="eval-set glob(s) to decontaminate against")
    p.set_defaults(fn=cmd_pipeline)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors and 0 on --help
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG

    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg["seed"] = args.seed
        if args.parallelism is not None:
            cfg["parallelism"] = args.parallelism
        if args.log_level:
            cfg["log_level"] = args.log_level
        logging.basicConfig(stream=sys.stderr,
                            level=getattr(logging, str(cfg["log_level"]).upper(), logging.INFO))
        if not isinstance(cfg["parallelism"], int) or cfg["parallelism"] < 1:
            raise ConfigInvalid(args.config or "<flags>", "parallelism", "must be >= 1")
        if getattr(args, "command", None) == "contam" and bool(args.model) == bool(args.nll):
            raise ConfigInvalid("<args>", "--model/--nll", "exactly one scorer required")
        code, report = args.fn(args, cfg)
        emit_report(report, args.report)
        return code
    except (ConfigInvalid, RegexCompileError) as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except (ValueError, TypeError) as exc:
        log.error("bad configuration: %s", exc)
        return EXIT_CONFIG
    except CorpusForgeError as exc:
        log.error("%s", exc)
        return EXIT_DATA
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
