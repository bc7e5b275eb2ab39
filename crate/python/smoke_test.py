#!/usr/bin/env python3
"""Smoke test for the gridminer_py extension module.

Builds the cdylib if needed, imports it, and walks the public API end to
end: parse, shard, extract, merge, report, filter, concordance,
co-occurrence, pattern matching, generation with planted ground truth,
diachronic series, and a simulated grid run with a node failure.

Run from anywhere: python3 python/smoke_test.py
"""

import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent


def import_extension():
    lib = REPO / "target" / "debug" / "libgridminer_py.so"
    if not lib.exists():
        subprocess.run(
            ["cargo", "build", "-p", "gridminer-py"], cwd=REPO, check=True
        )
    stage = Path(tempfile.mkdtemp(prefix="gridminer-py-"))
    shutil.copy2(lib, stage / "gridminer_py.so")
    sys.path.insert(0, str(stage))
    import gridminer_py

    return gridminer_py


def main():
    gm = import_extension()

    # --- parse the demo corpus and check its shape ---------------------
    text = "".join(
        p.read_text() for p in sorted((REPO / "demo" / "corpus").glob("*.vrt"))
    )
    corpus = gm.Corpus.parse(text)
    assert corpus.doc_count == 10, corpus.doc_count
    assert corpus.token_count == 176, corpus.token_count
    assert gm.Corpus.parse(corpus.to_vertical()).token_count == 176

    # --- shard, extract, merge ------------------------------------------
    assert len(corpus.shard(3)) == 3  # domain-agnostic balanced split
    shards = corpus.shard_by_domain(1)
    assert sorted(s.domain for s in shards) == [
        "environment",
        "farming",
        "history",
        "medicine",
    ]
    whole = gm.PairTable()
    for shard in shards:
        whole.merge(shard.extract_pairs("NA"))
    assert whole.noun_total("mucca") == 4
    assert whole.pair_count("mucca", "pazzo") == 3
    assert whole.modifiers("mucca") == [("malato", 1), ("pazzo", 3)]
    assert gm.PairTable.from_tsv(whole.to_tsv()).to_tsv() == whole.to_tsv()

    report = whole.render_report(top_k=None)
    assert "00004\t[MUCCA]\tMALATO 1, PAZZO 3\n" in report
    assert report.startswith("00006\t[MALATTIA]\t")

    # --- frequency filter with flags -------------------------------------
    candidates = whole.filter(min_noun_freq=3)
    by_pair = {(head, mod): flags for head, mod, _, _, flags in candidates}
    assert by_pair[("mucca", "pazzo")] == "MWE,HYPONYM_OF_HEAD"
    assert by_pair[("latte", "fresco")] == "MWE,HYPONYM_OF_HEAD,EXCEPTION_KEPT"
    assert ("paziente", "anziano") not in by_pair  # noun_total 1, no exception

    # --- concordance and co-occurrences ----------------------------------
    farming = next(s for s in shards if s.domain == "farming")
    lines = farming.concordance("mucca", window=2)
    assert len(lines) == 4
    doc_id, sent, offset, left, keyword, right = lines[0]
    assert (doc_id, keyword) == ("farm-01", "mucca")
    assert len(left.split()) <= 2 and len(right.split()) <= 2
    assert farming.concordance("searchlight") == []

    cooc = {(rel, lemma): n for rel, lemma, n in farming.cooccurrences("mucca", 1)}
    assert cooc[(1, "pazzo")] == 3
    assert cooc[(1, "malato")] == 1

    # --- pattern matching cross-checks pair extraction -------------------
    spans = farming.match_pattern("NOUN ADJ")
    assert len(spans) == farming.extract_pairs("NA").total_pairs
    assert all(end - start == 2 for _, _, start, end, _ in spans)
    assert farming.match_pattern("*:mucca ADJ")[0][4] == ["mucca", "pazzo"]

    # --- generated corpus reproduces its planted tables ------------------
    generated, planted_na, planted_nn = gm.generate(seed=42, documents=12)
    merged = gm.PairTable()
    for shard in generated.shard(3):
        merged.merge(shard.extract_pairs("NA"))
    assert merged.to_tsv() == planted_na.to_tsv()
    assert planted_nn.total_pairs > 0

    # --- diachronic series over the dated demo documents -----------------
    assert gm.series(shards, "mucca", "pazzo", period="month") == [
        ("2001-01-01", 2),
        ("2001-02-01", 1),
        ("2001-03-01", 0),
        ("2001-04-01", 0),
        ("2001-05-01", 0),
        ("2001-06-01", 0),
    ]

    # --- simulated grid run with a failure and a retry --------------------
    grid_cfg = (REPO / "demo" / "grid.cfg").read_text()
    result = gm.run_grid(shards, grid_cfg, replicas=2)
    assert result.completed
    assert result.violations == 0
    assert result.total_retries >= 1
    assert result.makespan == "46/15"
    kinds = [kind for _, _, kind, _ in result.events]
    assert "DOWN" in kinds and "ABORT" in kinds
    assert result.pair_table().render_report() == report
    assert result.matches() == []

    scan = gm.run_grid(shards, grid_cfg, replicas=2, pattern="NOUN ADJ")
    assert scan.completed and scan.pair_table() is None
    assert len(scan.matches()) == whole.total_pairs

    # --- errors surface as ValueError -------------------------------------
    for bad in (
        lambda: gm.Corpus.parse("#doc d x\nmucca\tmucca\n"),
        lambda: gm.PairTable.from_tsv("not\ta\ttable"),
        lambda: farming.match_pattern("GAP{1,2} NOUN"),
        lambda: gm.run_grid(shards, grid_cfg, replicas=9),
        lambda: whole.filter(mwe_ratio=2.0),
    ):
        try:
            bad()
        except ValueError:
            pass
        else:
            raise AssertionError(f"{bad} did not raise")

    print("smoke test passed")


if __name__ == "__main__":
    main()
