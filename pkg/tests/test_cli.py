"""End-to-end command tests driven through main(argv): exit codes, strict
config handling, and byte-identical reruns."""

import json
import subprocess
import sys

import pytest

from corpusforge import corpus, synth
from corpusforge.cli import EXIT_CONFIG, EXIT_DATA, EXIT_OK, load_config, main
from corpusforge.errors import ConfigInvalid


@pytest.fixture
def shard_dir(tmp_path):
    docs = synth.mini_corpus(n_docs=60, seed=7)
    d = tmp_path / "in"
    corpus.write_sharded(docs, str(d), name="raw", docs_per_shard=25)
    return d


def run(argv):
    return main([str(a) for a in argv])


def read_report(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


# ---- exit codes and parsing -----------------------------------------------------

def test_help_exits_zero(capsys):
    assert run(["--help"]) == EXIT_OK
    assert "corpusforge" in capsys.readouterr().out


def test_unknown_flag_exits_one(shard_dir, tmp_path):
    assert run(["normalize", "--in", shard_dir / "*.jsonl",
                "--out", tmp_path / "o", "--frobnicate"]) == EXIT_CONFIG


def test_missing_subcommand_exits_one():
    assert run([]) == EXIT_CONFIG


def test_missing_model_file_exits_two(shard_dir, tmp_path):
    assert run(["lm", "score", "--in", shard_dir / "*.jsonl",
                "--model", tmp_path / "nope.json"]) == EXIT_DATA


def test_bad_dedup_params_exit_one(shard_dir, tmp_path):
    assert run(["dedup", "--in", shard_dir / "*.jsonl", "--out", tmp_path / "o",
                "--cos", "1.5"]) == EXIT_CONFIG
    assert run(["dedup", "--in", shard_dir / "*.jsonl", "--out", tmp_path / "o2",
                "--radius", "-1"]) == EXIT_CONFIG


def test_contam_requires_exactly_one_scorer(shard_dir):
    base = ["contam", "--unseen", shard_dir / "*.jsonl",
            "--eval", f"qa={shard_dir}/*.jsonl"]
    assert run(base) == EXIT_CONFIG  # neither
    assert run(base + ["--model", "m.json", "--nll", "n.jsonl"]) == EXIT_CONFIG  # both


# ---- config -----------------------------------------------------------------------

def test_config_unknown_key_rejected(tmp_path):
    p = tmp_path / "c.json"
    p.write_text('{"dedup": {"radius": 2, "radiys": 3}}')
    with pytest.raises(ConfigInvalid) as err:
        load_config(str(p))
    assert "dedup.radiys" in str(err.value)
    p.write_text('{"dedpu": {}}')
    with pytest.raises(ConfigInvalid):
        load_config(str(p))
    p.write_text('[1, 2]')
    with pytest.raises(ConfigInvalid):
        load_config(str(p))
    p.write_text('not json')
    with pytest.raises(ConfigInvalid):
        load_config(str(p))


def test_config_flows_into_run_and_flags_override(shard_dir, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"seed": 3, "dedup": {"radius": 2, "cos_threshold": 0.9}}))
    rep = tmp_path / "r.json"
    assert run(["dedup", "--in", shard_dir / "*.jsonl", "--out", tmp_path / "o",
                "--config", cfg, "--report", rep, "--seed", "11"]) == EXIT_OK
    report = read_report(rep)
    assert report["config"]["seed"] == 11  # flag wins
    assert report["config"]["dedup"] == {"radius": 2, "cos_threshold": 0.9}


def test_config_invalid_exit_code(shard_dir, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text('{"normalize": {"strip_htlm": true}}')
    assert run(["normalize", "--in", shard_dir / "*.jsonl", "--out", tmp_path / "o",
                "--config", cfg]) == EXIT_CONFIG


# ---- reports and determinism ---------------------------------------------------------

def snapshot(root):
    return {str(p.relative_to(root)): p.read_bytes()
            for p in sorted(root.rglob("*")) if p.is_file()}


def test_normalize_writes_shards_and_report(shard_dir, tmp_path):
    rep = tmp_path / "r.json"
    out = tmp_path / "out"
    assert run(["normalize", "--in", shard_dir / "*.jsonl",
                "--out", out, "--report", rep]) == EXIT_OK
    report = read_report(rep)
    assert report["command"] == "normalize"
    assert report["stages"][0]["docs_in"] == 60
    assert report["stages"][0]["docs_out"] == 60
    total = sum(1 for _ in corpus.read_many([str(out / "*.jsonl")]))
    assert total == 60


def test_report_to_stdout_when_no_path(shard_dir, tmp_path, capsys):
    assert run(["normalize", "--in", shard_dir / "*.jsonl",
                "--out", tmp_path / "o"]) == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report["command"] == "normalize"


def test_pipeline_rerun_is_byte_identical(shard_dir, tmp_path):
    out = tmp_path / "out"
    rep = tmp_path / "r.json"
    argv = ["pipeline", "--in", shard_dir / "*.jsonl", "--out", out,
            "--report", rep, "--radius", "3", "--cos", "0.95"]
    assert run(argv) == EXIT_OK
    first = snapshot(out), rep.read_bytes()
    assert run(argv) == EXIT_OK
    assert (snapshot(out), rep.read_bytes()) == first
    report = read_report(rep)
    totals = report["totals"]
    assert totals["docs_in"] == 60
    assert totals["docs_in"] == totals["docs_out"] + totals["docs_dropped"]
    assert [s["stage_name"] for s in report["stages"]] == ["normalize", "filter", "dedup"]


def test_parallelism_does_not_change_output_bytes(shard_dir, tmp_path):
    outs = []
    for i, par in enumerate((1, 4)):
        out = tmp_path / f"out{i}"
        assert run(["pipeline", "--in", shard_dir / "*.jsonl", "--out", out,
                    "--parallelism", par]) == EXIT_OK
        outs.append(snapshot(out))
    assert outs[0] == outs[1]


# ---- round trips across subcommands ------------------------------------------------------

def test_lm_train_then_score_then_contam(shard_dir, tmp_path, capsys):
    model = tmp_path / "lm.json"
    assert run(["lm", "train", "--in", shard_dir / "*.jsonl",
                "--out", model, "--order", "3"]) == EXIT_OK
    capsys.readouterr()

    scores = tmp_path / "scores.jsonl"
    rep = tmp_path / "score.json"
    assert run(["lm", "score", "--in", shard_dir / "*.jsonl", "--model", model,
                "--scores-out", scores, "--report", rep]) == EXIT_OK
    stage = read_report(rep)["stages"][0]
    assert stage["docs_scored"] == 60 and stage["tokens"] > 0
    rows = [json.loads(l) for l in scores.read_text().splitlines()]
    assert len(rows) == 60 and all({"id", "nll", "tokens"} <= set(r) for r in rows)

    # the scores file doubles as an external scorer for leakage analysis
    rep2 = tmp_path / "contam.json"
    assert run(["contam", "--nll", scores, "--unseen", shard_dir / "raw-00000.jsonl",
                "--eval", f"held={shard_dir}/raw-00001.jsonl",
                "--report", rep2]) == EXIT_OK
    stage = read_report(rep2)["stages"][0]
    assert stage["verdict"]["label"] in {"clean", "suspect", "overfit"}
    assert "held" in stage["per_set"]


def test_tok_train_encode_cr(shard_dir, tmp_path):
    vocab = tmp_path / "vocab.json"
    assert run(["tok", "train", "--in", shard_dir / "*.jsonl", "--out", vocab,
                "--target-vocab", "600", "--specials", "<pad>,<eos>"]) == EXIT_OK

    enc = tmp_path / "ids.jsonl"
    rep = tmp_path / "enc.json"
    assert run(["tok", "encode", "--in", shard_dir / "*.jsonl", "--vocab", vocab,
                "--out", enc, "--report", rep]) == EXIT_OK
    rows = [json.loads(l) for l in enc.read_text().splitlines()]
    assert len(rows) == 60 and all(isinstance(r["ids"], list) for r in rows)

    rep2 = tmp_path / "cr.json"
    assert run(["tok", "cr", "--in", shard_dir / "*.jsonl", "--vocab", vocab,
                "--report", rep2]) == EXIT_OK
    reports = read_report(rep2)["stages"][0]["reports"]
    langs = {r["lang"] for r in reports}
    assert "en" in langs and langs <= {"en", "zh", "ja", "ko"}
    assert all(r["cr"] > 0 for r in reports)


def test_tok_train_impossible_vocab_exits_two(shard_dir, tmp_path):
    assert run(["tok", "train", "--in", shard_dir / "*.jsonl",
                "--out", tmp_path / "v.json", "--target-vocab", "10"]) == EXIT_DATA


def test_schedule_preset_plan_and_lr(tmp_path):
    from corpusforge.schedule import three_stage_preset

    # inventory sized off the preset itself: stages consume shared cursors,
    # so each (source, lang) pair needs its summed demand plus slack
    need: dict = {}
    for spec in three_stage_preset(scale=1e-6):
        for source, s_frac in spec.mix.items():
            for lang, l_frac in spec.lang_mix.items():
                key = (source, lang)
                need[key] = need.get(key, 0) + int(spec.token_budget * s_frac * l_frac)
    rows = []
    for (source, lang), tokens in sorted(need.items()):
        supply = 2 * tokens + 2000
        rows.append({"source": source, "lang": lang,
                     "tokens": supply, "docs": max(50, supply // 40)})
    inv = tmp_path / "inventory.json"
    inv.write_text(json.dumps(rows))

    out = tmp_path / "manifests.json"
    rep = tmp_path / "plan.json"
    assert run(["schedule", "plan", "--inventory", inv, "--preset", "--scale", "1e-6",
                "--out", out, "--report", rep, "--seed", "5"]) == EXIT_OK
    manifests = json.loads(out.read_text())
    assert len(manifests) == 3

    assert run(["schedule", "validate", "--preset"]) == EXIT_OK
    assert run(["schedule", "validate", "--preset", "--scale", "0"]) == EXIT_DATA

    rep3 = tmp_path / "lr.json"
    assert run(["schedule", "lr", "--warmup", "2000", "--peak", "3e-4",
                "--final", "3e-5", "--total", "360000", "--step", "2000",
                "--report", rep3]) == EXIT_OK
    values = read_report(rep3)["stages"][0]["values"]
    assert values == [{"step": 2000, "lr": 3e-4}]


def test_sft_clean_command(tmp_path):
    pairs_file = tmp_path / "pairs.jsonl"
    rows = [{"id": f"p{i}", "prompt": f"explain item {i} carefully please",
             "response": " ".join(f"tok{i}w{j}" for j in range(24))}
            for i in range(12)]
    rows.append({"id": "bad", "prompt": "", "response": "x"})
    rows.append({"prompt": "no id field", "response": "y"})
    pairs_file.write_text("\n".join(json.dumps(r) for r in rows) + "\n")

    out = tmp_path / "out"
    rep = tmp_path / "r.json"
    assert run(["sft", "clean", "--in", pairs_file, "--out", out,
                "--report", rep]) == EXIT_OK
    stage = read_report(rep)["stages"][0]
    assert stage["pairs_in"] == 13 and stage["malformed"] == 1
    assert stage["invalid"] == 1 and stage["pairs_out"] == 12
    kept = (out / "pairs.jsonl").read_text().splitlines()
    assert len(kept) == 12


def test_dedup_decontaminate_removes_planted(shard_dir, tmp_path):
    # plant two training docs inside an eval shard; dedup --eval must drop them
    docs = list(corpus.read_many([str(shard_dir / "*.jsonl")]))
    eval_dir = tmp_path / "eval"
    corpus.write_sharded(docs[:2], str(eval_dir), name="eval")
    rep = tmp_path / "r.json"
    assert run(["dedup", "--in", shard_dir / "*.jsonl", "--out", tmp_path / "o",
                "--eval", eval_dir / "*.jsonl", "--report", rep]) == EXIT_OK
    report = read_report(rep)
    stage = report["stages"][0]
    assert stage["stage_name"] == "decontaminate"
    dropped = stage["docs_dropped_by_reason"]
    assert sum(v for k, v in dropped.items() if k.startswith("contaminated:")) >= 2


def test_console_script_installed(shard_dir, tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "corpusforge.cli", "normalize",
         "--in", str(shard_dir / "*.jsonl"), "--out", str(tmp_path / "o")],
        capture_output=True, text=True)
    assert proc.returncode == EXIT_OK
    assert json.loads(proc.stdout)["command"] == "normalize"
