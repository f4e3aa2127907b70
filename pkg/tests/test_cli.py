import json

from oncoendpoints.cli import main


def run(argv, capsys):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def synth(tmp_path, capsys, n=120, seed=7):
    tmp_path.mkdir(parents=True, exist_ok=True)
    corpus = tmp_path / "corpus.jsonl"
    gold = tmp_path / "gold.jsonl"
    code, out, _ = run(
        ["synth", "--n", str(n), "--seed", str(seed),
         "--output-corpus", str(corpus), "--output-gold", str(gold)],
        capsys,
    )
    assert code == 0
    return corpus, gold


def test_synth_tag_score_pipeline(tmp_path, capsys):
    corpus, gold = synth(tmp_path, capsys)
    pred = tmp_path / "pred.jsonl"
    code, out, _ = run(
        ["tag", "--backend", "rule", "--input", str(corpus), "--output", str(pred)], capsys
    )
    assert code == 0
    report = tmp_path / "report.csv"
    code, out, _ = run(
        ["score", "--input", str(corpus), "--gold", str(gold), "--pred", str(pred),
         "--output", str(report)],
        capsys,
    )
    assert code == 0
    assert out.startswith("overall precision=")
    assert report.read_text().splitlines()[0] == "endpoint,f1,precision,recall,support"


def test_tag_import_backend(tmp_path, capsys):
    corpus, gold = synth(tmp_path, capsys)
    out_path = tmp_path / "imported.jsonl"
    code, _, _ = run(
        ["tag", "--backend", "import", "--input", str(corpus),
         "--predictions", str(gold), "--output", str(out_path)],
        capsys,
    )
    assert code == 0
    assert out_path.read_text() == gold.read_text()


def test_resolve_writes_observations(tmp_path, capsys):
    corpus, gold = synth(tmp_path, capsys)
    obs = tmp_path / "obs.csv"
    diag = tmp_path / "diag.jsonl"
    code, out, _ = run(
        ["resolve", "--input", str(corpus), "--annotations", str(gold),
         "--output", str(obs), "--diagnostics", str(diag)],
        capsys,
    )
    assert code == 0
    assert obs.read_text().startswith("pmid,sentence_id,endpoint")


def test_split_kfold_983(tmp_path, capsys):
    corpus = tmp_path / "corpus.jsonl"
    with open(corpus, "w") as fh:
        for i in range(983):
            fh.write(json.dumps({"pmid": f"p{i}", "sentence_id": f"s{i}", "text": "x y z"}) + "\n")
    out_dir = tmp_path / "folds"
    code, out, _ = run(
        ["split", "--input", str(corpus), "--kfold", "5", "--seed", "1",
         "--output-dir", str(out_dir)],
        capsys,
    )
    assert code == 0
    assert out.strip() == "fold sizes: 197/197/197/196/196"
    sizes = sorted(
        len((out_dir / f"fold_{i}.jsonl").read_text().strip().splitlines()) for i in range(5)
    )
    assert sizes == [196, 196, 197, 197, 197]


def test_split_deterministic_across_runs(tmp_path, capsys):
    corpus, _ = synth(tmp_path, capsys, n=50)
    d1, d2 = tmp_path / "f1", tmp_path / "f2"
    for d in (d1, d2):
        code, _, _ = run(
            ["split", "--input", str(corpus), "--kfold", "3", "--seed", "5",
             "--output-dir", str(d)],
            capsys,
        )
        assert code == 0
    for i in range(3):
        assert (d1 / f"fold_{i}.jsonl").read_bytes() == (d2 / f"fold_{i}.jsonl").read_bytes()


def test_split_pmid_disjoint(tmp_path, capsys):
    corpus, _ = synth(tmp_path, capsys, n=40)
    pmids = tmp_path / "test_pmids.txt"
    pmids.write_text("SYN000000\nSYN000001\n")
    train, test = tmp_path / "train.jsonl", tmp_path / "test.jsonl"
    code, _, _ = run(
        ["split", "--input", str(corpus), "--test-pmids", str(pmids),
         "--output-train", str(train), "--output-test", str(test)],
        capsys,
    )
    assert code == 0
    train_pmids = {json.loads(l)["pmid"] for l in train.read_text().splitlines()}
    test_pmids = {json.loads(l)["pmid"] for l in test.read_text().splitlines()}
    assert not (train_pmids & test_pmids)
    assert test_pmids == {"SYN000000", "SYN000001"}


def test_filter_command(tmp_path, capsys):
    corpus = tmp_path / "corpus.jsonl"
    rows = [
        {"pmid": "1", "sentence_id": "a", "text": "Median OS was 14.1 months"},
        {"pmid": "2", "sentence_id": "b", "text": "OS was improved in the treatment arm"},
        {"pmid": "3", "sentence_id": "c", "text": "Median age was 62 years"},
    ]
    corpus.write_text("\n".join(json.dumps(r) for r in rows))
    out_path = tmp_path / "kept.jsonl"
    code, out, _ = run(["filter", "--input", str(corpus), "--output", str(out_path)], capsys)
    assert code == 0
    kept = [json.loads(l)["sentence_id"] for l in out_path.read_text().splitlines()]
    assert kept == ["a"]


def test_export_grid_command(tmp_path, capsys):
    grid = tmp_path / "grid.cfg"
    code, out, _ = run(["export-grid", "--output", str(grid), "--seed", "7"], capsys)
    assert code == 0
    assert grid.read_text().count("[config-") == 18


def test_score_corpus_mismatch_exits_1(tmp_path, capsys):
    corpus, gold = synth(tmp_path, capsys, n=10)
    other = tmp_path / "other.jsonl"
    other.write_text('{"sentence_id": "UNKNOWN:0", "spans": []}\n')
    code, _, err = run(
        ["score", "--input", str(corpus), "--gold", str(gold), "--pred", str(other)],
        capsys,
    )
    assert code == 1
    assert "CorpusMismatch" in err


def test_agree_command(tmp_path, capsys):
    corpus, gold = synth(tmp_path, capsys, n=30)
    worklist = tmp_path / "worklist.jsonl"
    code, out, _ = run(
        ["agree", "--input", str(corpus), "--a", str(gold), "--b", str(gold),
         "--output", str(worklist)],
        capsys,
    )
    assert code == 0
    assert "token agreement 100.00%" in out
    assert worklist.read_text() == ""


def test_usage_error_exits_1(tmp_path, capsys):
    corpus, _ = synth(tmp_path, capsys, n=5)
    code, _, err = run(["split", "--input", str(corpus)], capsys)
    assert code == 1  # neither --kfold nor --test-pmids


def test_missing_file_exits_2(capsys):
    code, _, err = run(
        ["tag", "--backend", "rule", "--input", "/does/not/exist.jsonl", "--output", "/tmp/x"],
        capsys,
    )
    assert code == 2


def test_parallel_jobs_match_serial(tmp_path, capsys):
    corpus, _ = synth(tmp_path, capsys, n=150, seed=3)
    serial_f, parallel_f = tmp_path / "serial_f.jsonl", tmp_path / "parallel_f.jsonl"
    assert main(["filter", "--input", str(corpus), "--output", str(serial_f)]) == 0
    assert main(["filter", "--input", str(corpus), "--output", str(parallel_f), "--jobs", "2"]) == 0
    assert serial_f.read_bytes() == parallel_f.read_bytes()
    serial_t, parallel_t = tmp_path / "serial_t.jsonl", tmp_path / "parallel_t.jsonl"
    assert main(["tag", "--backend", "rule", "--input", str(corpus), "--output", str(serial_t)]) == 0
    assert main(["tag", "--backend", "rule", "--input", str(corpus), "--output", str(parallel_t), "--jobs", "2"]) == 0
    assert serial_t.read_bytes() == parallel_t.read_bytes()
    capsys.readouterr()


def test_determinism_byte_identical_outputs(tmp_path, capsys):
    c1, g1 = synth(tmp_path / "run1", capsys, n=80, seed=13)
    c2, g2 = synth(tmp_path / "run2", capsys, n=80, seed=13)
    assert c1.read_bytes() == c2.read_bytes()
    assert g1.read_bytes() == g2.read_bytes()
    p1, p2 = tmp_path / "p1.jsonl", tmp_path / "p2.jsonl"
    for src, dst in ((c1, p1), (c2, p2)):
        code, _, _ = run(["tag", "--backend", "rule", "--input", str(src), "--output", str(dst)], capsys)
        assert code == 0
    assert p1.read_bytes() == p2.read_bytes()
