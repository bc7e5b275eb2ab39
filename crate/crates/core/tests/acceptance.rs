//! The exit gate: one test per shipping criterion, each printing a single
//! `ACCEPTANCE <name>: PASS` line (visible with `--nocapture`; a failing
//! criterion prints FAIL and panics with the underlying assertion).

mod common;

use std::collections::BTreeSet;
use std::fs;
use std::panic::{catch_unwind, resume_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use gridminer::aggregate::{merge_tables, render_report};
use gridminer::corpus::{
    generate_corpus, shard_corpus, write_vertical, AnnotatedToken, Document, GeneratorConfig,
    PosTag, Sentence, Shard,
};
use gridminer::gridsim::{
    place_replicas, run_simulation, run_simulation_with, sim_ratio, sim_time, EventKind,
    ExecutionContext, ExtractionOp, FailureEvent, Job, JobOutput, RegulationViolation, SimTime,
};
use gridminer::patterns::{
    extract_pairs, match_pattern, parse_pattern, PairMode, PairTable, PatternRule,
};
use gridminer::pipeline::{cmd_diachrony, cmd_ingest, cmd_run, ExecMode, RunConfig};
use gridminer::terms::{filter_terms, flag_mwe, write_candidates_tsv, FilterConfig, Period, TermFlag};

fn criterion(name: &str, body: impl FnOnce()) {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(()) => println!("ACCEPTANCE {name}: PASS"),
        Err(cause) => {
            println!("ACCEPTANCE {name}: FAIL");
            resume_unwind(cause);
        }
    }
}

/// The whole corpus as one shard.
fn one_shard(docs: Vec<Document>) -> Shard {
    shard_corpus(docs, 1)
        .expect("shardable")
        .pop()
        .expect("non-empty")
}

/// Merge simulated job outputs and render the default report.
fn report_of(outputs: &[(String, JobOutput)]) -> String {
    let tables: Vec<&PairTable> = outputs
        .iter()
        .map(|(_, out)| match out {
            JobOutput::Pairs(t) => t,
            JobOutput::Matches(_) => panic!("pair job emitted matches"),
        })
        .collect();
    render_report(&merge_tables(tables), None)
}

#[test]
fn report_format_matches_the_reference_lines() {
    criterion("format-oracle", || {
        let malattia: [(&str, u64); 26] = [
            ("acuto", 23),
            ("allergico", 26),
            ("arterosclerotico", 82),
            ("cardiaco", 118),
            ("cardiovascolare", 778),
            ("causato", 28),
            ("celiaco", 15),
            ("collegato", 12),
            ("conclamato", 18),
            ("congenito", 27),
            ("contagioso", 17),
            ("coronarico", 306),
            ("cronico", 170),
            ("curabile", 15),
            ("cutaneo", 15),
            ("degenerativo", 145),
            ("diverso", 13),
            ("dovuto", 17),
            ("endemico", 11),
            ("endocrino", 23),
            ("ereditario", 132),
            ("esantematico", 143),
            ("genetico", 360),
            ("grave", 87),
            ("incurabile", 20),
            ("infettivo", 613),
        ];
        let mut table = PairTable::new();
        table.add_noun_count("malattia", 4839);
        for (adj, count) in malattia {
            table.add_pair_count("malattia", adj, count);
        }
        table.add_noun_count("mucca", 1670);
        table.add_pair_count("mucca", "malato", 24);
        table.add_pair_count("mucca", "pazzo", 1593);

        let expected = "04839\t[MALATTIA]\tACUTO 23, ALLERGICO 26, ARTEROSCLEROTICO 82, \
                        CARDIACO 118, CARDIOVASCOLARE 778, CAUSATO 28, CELIACO 15, COLLEGATO 12, \
                        CONCLAMATO 18, CONGENITO 27, CONTAGIOSO 17, CORONARICO 306, CRONICO 170, \
                        CURABILE 15, CUTANEO 15, DEGENERATIVO 145, DIVERSO 13, DOVUTO 17, \
                        ENDEMICO 11, ENDOCRINO 23, EREDITARIO 132, ESANTEMATICO 143, GENETICO 360, \
                        GRAVE 87, INCURABILE 20, INFETTIVO 613\n\
                        01670\t[MUCCA]\tMALATO 24, PAZZO 1593\n";
        assert_eq!(render_report(&table, None), expected);
    });
}

#[test]
fn extraction_agrees_with_brute_force_on_random_corpora() {
    criterion("oracle-equivalence", || {
        let rules: Vec<PatternRule> = [
            "NOUN ADJ",
            "NOUN GAP{0,2} ADJ",
            "NOUN GAP{1,3} NOUN",
            "*:noun03 GAP{0,1} ADJ",
            "ADJ:adj01 NOUN",
        ]
        .iter()
        .map(|text| parse_pattern(text).expect("valid rule"))
        .collect();

        let started = Instant::now();
        for seed in 0..100u64 {
            let config = GeneratorConfig {
                documents: 6 + (seed as usize % 20) * 3,
                ..GeneratorConfig::default()
            };
            let generated = generate_corpus(seed, &config).expect("valid config");
            let total: u64 = generated.documents.iter().map(Document::token_count).sum();
            assert!(total <= 10_000, "seed {seed} generated {total} tokens");

            let shard = one_shard(generated.documents.clone());
            for mode in [PairMode::NounAdj, PairMode::NounNoun] {
                let got = extract_pairs(&shard, mode);
                assert_eq!(
                    got,
                    common::brute_pairs(&generated.documents, mode),
                    "seed {seed} mode {mode}"
                );
                let planted = match mode {
                    PairMode::NounAdj => &generated.planted_na,
                    PairMode::NounNoun => &generated.planted_nn,
                };
                assert_eq!(&got, planted, "seed {seed} planted {mode}");
            }
            for rule in &rules {
                assert_eq!(
                    match_pattern(&shard, rule),
                    common::brute_matches(&generated.documents, rule),
                    "seed {seed} rule {}",
                    rule.name()
                );
            }
        }
        assert!(
            started.elapsed() < Duration::from_secs(10),
            "sweep took {:?}",
            started.elapsed()
        );
    });
}

#[test]
fn scheduled_shard_extraction_equals_the_single_pass() {
    criterion("distributed-equals-sequential", || {
        for round in 0..50u64 {
            let config = GeneratorConfig {
                documents: 6 + (round as usize % 10) * 2,
                ..GeneratorConfig::default()
            };
            let generated = generate_corpus(0xD15C0 + round, &config).expect("valid config");
            let whole = extract_pairs(&one_shard(generated.documents.clone()), PairMode::NounAdj);

            let shard_count = 1 + (round as usize % 8);
            let shards = shard_corpus(generated.documents, shard_count).expect("shardable");
            let grid = common::uniform_grid(3, 50, 1_000_000_000);
            let placement = place_replicas(&shards, &grid, 2).expect("placeable");
            let jobs = common::pair_jobs(&shards, PairMode::NounAdj);
            let (report, outputs) = run_simulation(
                &jobs,
                &grid,
                &placement,
                &common::shard_map(&shards),
                &common::operator_cert(),
            )
            .expect("simulation runs");
            assert!(report.all_completed(), "round {round}");
            assert_eq!(
                report_of(&outputs).into_bytes(),
                render_report(&whole, None).into_bytes(),
                "round {round} with {shard_count} shards"
            );
        }
    });
}

/// `count` documents of identical token counts (and identical serialized
/// size), so sharding yields perfectly even work.
fn uniform_docs(count: usize, sentences: usize, sentence_len: usize) -> Vec<Document> {
    (0..count)
        .map(|i| {
            let sents = (0..sentences)
                .map(|_| {
                    let tokens = (0..sentence_len)
                        .map(|j| {
                            let pos = match j % 3 {
                                0 => PosTag::Noun,
                                1 => PosTag::Adj,
                                _ => PosTag::Verb,
                            };
                            AnnotatedToken::new(format!("w{j:02}"), format!("w{j:02}"), pos)
                                .expect("valid token")
                        })
                        .collect();
                    Sentence::new(tokens).expect("non-empty")
                })
                .collect();
            Document::new(format!("d{i}"), "uniform", None, sents).expect("valid doc")
        })
        .collect()
}

#[test]
fn makespan_scales_with_node_count() {
    criterion("speedup", || {
        let power = 40i64;
        // Equal shards on k equal nodes: exactly k times faster than one node.
        for k in [1usize, 2, 4, 8] {
            let shards = shard_corpus(uniform_docs(k, 4, 25), k).expect("shardable");
            assert_eq!(shards.len(), k);
            let first = shards[0].token_count();
            assert!(shards.iter().all(|s| s.token_count() == first));

            let jobs = common::pair_jobs(&shards, PairMode::NounAdj);
            let map = common::shard_map(&shards);
            let cert = common::operator_cert();

            let single = common::uniform_grid(1, power, 1_000_000_000);
            let p1 = place_replicas(&shards, &single, 1).expect("placeable");
            let (r1, _) = run_simulation(&jobs, &single, &p1, &map, &cert).expect("runs");
            assert!(r1.all_completed());

            let wide = common::uniform_grid(k, power, 1_000_000_000);
            let pk = place_replicas(&shards, &wide, 1).expect("placeable");
            let (rk, _) = run_simulation(&jobs, &wide, &pk, &map, &cert).expect("runs");
            assert!(rk.all_completed());
            assert!(rk.jobs.iter().all(|j| !j.transferred), "k={k}: transfer crept in");
            assert_eq!(
                r1.makespan,
                rk.makespan.clone() * sim_time(k as i64),
                "k={k}: speedup is not exactly k"
            );
        }

        // Uneven shards under full replication stay within the greedy
        // list-scheduling bound: total/k <= makespan <= total/k + longest.
        let nodes = 4usize;
        let docs: Vec<Document> = (0..13)
            .map(|i| {
                let len = 5 + (i * 37) % 120;
                uniform_docs(1, 1, len)
                    .pop()
                    .map(|d| {
                        Document::new(format!("u{i}"), "uniform", None, d.sentences().to_vec())
                            .expect("valid doc")
                    })
                    .expect("one doc")
            })
            .collect();
        let shards = shard_corpus(docs, 13).expect("shardable");
        let grid = common::uniform_grid(nodes, power, 1_000_000_000);
        let placement = place_replicas(&shards, &grid, nodes).expect("placeable");
        for shard in &shards {
            assert_eq!(placement.nodes_for(shard.shard_id()).len(), nodes);
        }
        let jobs = common::pair_jobs(&shards, PairMode::NounAdj);
        let (report, _) = run_simulation(
            &jobs,
            &grid,
            &placement,
            &common::shard_map(&shards),
            &common::operator_cert(),
        )
        .expect("runs");
        assert!(report.all_completed());

        let total: u64 = shards.iter().map(Shard::token_count).sum();
        let longest: u64 = shards.iter().map(Shard::token_count).max().expect("non-empty");
        let lower: SimTime = sim_ratio(total as i64, power) / sim_time(nodes as i64);
        let upper: SimTime = lower.clone() + sim_ratio(longest as i64, power);
        assert!(report.makespan >= lower, "below the work-conservation bound");
        assert!(report.makespan <= upper, "above the greedy bound");
    });
}

#[test]
fn killing_any_node_at_any_event_boundary_keeps_the_report() {
    criterion("fault-tolerance", || {
        let config = GeneratorConfig {
            documents: 18,
            ..GeneratorConfig::default()
        };
        let generated = generate_corpus(0xFA17, &config).expect("valid config");
        let shards = shard_corpus(generated.documents, 6).expect("shardable");
        assert_eq!(shards.len(), 6);
        let grid = common::uniform_grid(3, 40, 1_000_000_000);
        let placement = place_replicas(&shards, &grid, 2).expect("placeable");
        let jobs = common::pair_jobs(&shards, PairMode::NounAdj);
        let map = common::shard_map(&shards);
        let cert = common::operator_cert();

        let (baseline, outputs) =
            run_simulation(&jobs, &grid, &placement, &map, &cert).expect("runs");
        assert!(baseline.all_completed());
        let reference = report_of(&outputs);

        let mut boundaries: Vec<SimTime> =
            baseline.events.iter().map(|e| e.time.clone()).collect();
        boundaries.dedup();
        assert!(boundaries.len() > 2, "baseline produced a trivial schedule");
        let far_future = baseline.makespan.clone() + sim_time(1_000_000);

        let mut retries_seen = 0u64;
        for node in ["n0", "n1", "n2"] {
            for t_down in &boundaries {
                let mut failing = grid.clone();
                failing.failures.push(FailureEvent {
                    node: node.to_string(),
                    t_down: t_down.clone(),
                    t_up: far_future.clone(),
                });
                // A node dead from the very start never receives replicas;
                // later failures strike the placement made at time zero.
                let active_placement = if *t_down == sim_time(0) {
                    place_replicas(&shards, &failing, 2).expect("placeable on survivors")
                } else {
                    placement.clone()
                };
                let (report, outs) =
                    run_simulation(&jobs, &failing, &active_placement, &map, &cert)
                        .expect("runs");
                assert!(
                    report.all_completed(),
                    "kill {node} at {t_down}: jobs stranded"
                );
                assert_eq!(
                    report_of(&outs),
                    reference,
                    "kill {node} at {t_down}: report changed"
                );
                retries_seen += report.total_retries;
            }
        }
        assert!(retries_seen >= 1, "no kill ever forced a retry");
    });
}

#[test]
fn extractors_respect_read_once_and_single_output() {
    criterion("regulation-enforcement", || {
        let config = GeneratorConfig {
            documents: 220,
            ..GeneratorConfig::default()
        };
        let generated = generate_corpus(0x5EC, &config).expect("valid config");
        let shards = shard_corpus(generated.documents, 100).expect("shardable");
        assert_eq!(shards.len(), 100);
        let grid = common::uniform_grid(5, 60, 10_000_000_000);
        let placement = place_replicas(&shards, &grid, 2).expect("placeable");
        let map = common::shard_map(&shards);
        let cert = common::operator_cert();

        // Both built-in extraction kinds sweep 100 shards clean.
        let pair_jobs = common::pair_jobs(&shards, PairMode::NounAdj);
        let (report, _) =
            run_simulation(&pair_jobs, &grid, &placement, &map, &cert).expect("runs");
        assert!(report.all_completed());
        assert_eq!(report.violations, 0);

        let rule = parse_pattern("NOUN GAP{0,2} ADJ").expect("valid rule");
        let pattern_jobs: Vec<Job> = shards
            .iter()
            .map(|shard| Job {
                job_id: format!("scan-{}", shard.shard_id()),
                shard_id: shard.shard_id().to_string(),
                vo: "science".to_string(),
                op: ExtractionOp::Pattern(rule.clone()),
            })
            .collect();
        let (report, _) =
            run_simulation(&pattern_jobs, &grid, &placement, &map, &cert).expect("runs");
        assert!(report.all_completed());
        assert_eq!(report.violations, 0);

        // A deliberately double-reading job body trips exactly one
        // violation and the job never completes.
        let one_job = common::pair_jobs(&shards[..1], PairMode::NounAdj);
        let mut double_reader =
            |_job: &Job, ctx: &mut ExecutionContext<'_>| -> Result<(), RegulationViolation> {
                let _first = ctx.take_stream()?;
                let _second = ctx.take_stream()?;
                Ok(())
            };
        let (report, outputs) = run_simulation_with(
            &one_job,
            &grid,
            &placement,
            &map,
            &cert,
            &mut double_reader,
        )
        .expect("runs");
        assert_eq!(report.violations, 1);
        assert_eq!(
            report
                .events
                .iter()
                .filter(|e| e.kind == EventKind::RegulationViolation)
                .count(),
            1
        );
        assert!(outputs.is_empty());
        assert!(!report.all_completed());
    });
}

#[test]
fn frequency_filter_is_monotone_and_matches_the_fixture() {
    criterion("filter-monotonicity", || {
        // 100 random tables: retained heads shrink as the threshold
        // rises while the exception set never moves.
        for seed in 0..100u64 {
            let config = GeneratorConfig {
                documents: 4 + (seed as usize % 9),
                ..GeneratorConfig::default()
            };
            let generated = generate_corpus(0xF117E4 + seed, &config).expect("valid config");
            let table = extract_pairs(&one_shard(generated.documents), PairMode::NounAdj);

            let mut previous_heads: Option<BTreeSet<String>> = None;
            let mut previous_exceptions: Option<BTreeSet<(String, String)>> = None;
            for threshold in 1..=8u64 {
                let cfg = FilterConfig {
                    min_noun_freq: threshold,
                    ..FilterConfig::default()
                };
                let candidates = filter_terms(&table, &cfg).expect("valid config");
                let heads: BTreeSet<String> =
                    candidates.iter().map(|c| c.head.clone()).collect();
                let exceptions: BTreeSet<(String, String)> = candidates
                    .iter()
                    .filter(|c| c.flags.contains(&TermFlag::ExceptionKept))
                    .map(|c| (c.head.clone(), c.modifier.clone()))
                    .collect();
                if let Some(prev) = &previous_heads {
                    assert!(
                        heads.is_subset(prev),
                        "seed {seed}: threshold {threshold} grew the head set"
                    );
                }
                if let Some(prev) = &previous_exceptions {
                    assert_eq!(&exceptions, prev, "seed {seed}: exception set moved");
                }
                previous_heads = Some(heads);
                previous_exceptions = Some(exceptions);
            }
        }

        // Ten-entry fixture with hand-computed retention, order and flags.
        let mut table = PairTable::new();
        for (head, nouns, pairs) in [
            ("malattia", 12, vec![("grave", 6), ("raro", 1)]),
            ("citta", 10, vec![("grande", 4), ("vecchio", 2)]),
            ("acqua", 8, vec![("salato", 5), ("dolce", 3)]),
            ("albero", 6, vec![]),
            ("vino", 5, vec![("bianco", 2), ("rosso", 2)]),
            ("mucca", 4, vec![("pazzo", 3)]),
            ("pane", 4, vec![("fresco", 1), ("caldo", 2)]),
            ("terra", 3, vec![("rosso", 1)]),
            ("prato", 2, vec![("fiorito", 2)]),
            ("sasso", 1, vec![]),
        ] {
            table.add_noun_count(head, nouns);
            for (modifier, count) in pairs {
                table.add_pair_count(head, modifier, count);
            }
        }
        let cfg = FilterConfig::default();
        let mut candidates = filter_terms(&table, &cfg).expect("valid config");
        flag_mwe(&mut candidates, cfg.mwe_ratio);
        let expected = "malattia\tgrave\t6\t12\tMWE,HYPONYM_OF_HEAD\n\
                        malattia\traro\t1\t12\t\n\
                        citta\tgrande\t4\t10\t\n\
                        citta\tvecchio\t2\t10\t\n\
                        acqua\tsalato\t5\t8\tMWE,HYPONYM_OF_HEAD\n\
                        acqua\tdolce\t3\t8\t\n\
                        vino\tbianco\t2\t5\t\n\
                        vino\trosso\t2\t5\t\n\
                        mucca\tpazzo\t3\t4\tMWE,HYPONYM_OF_HEAD,EXCEPTION_KEPT\n\
                        prato\tfiorito\t2\t2\tMWE,HYPONYM_OF_HEAD,EXCEPTION_KEPT\n";
        assert_eq!(write_candidates_tsv(&candidates), expected);
    });
}

#[test]
fn million_token_run_fits_the_time_budget() {
    criterion("throughput", || {
        let mut config = GeneratorConfig {
            documents: 2_000,
            sentences_per_doc: (6, 10),
            blocks_per_sentence: (2, 5),
            noun_vocab: 400,
            adj_vocab: 200,
            filler_vocab: 600,
            domains: vec![
                "medicine".to_string(),
                "farming".to_string(),
                "history".to_string(),
                "environment".to_string(),
            ],
            ..GeneratorConfig::default()
        };
        let generated = loop {
            let generated = generate_corpus(0xB16, &config).expect("valid config");
            let total: u64 = generated.documents.iter().map(Document::token_count).sum();
            if total >= 1_000_000 {
                break generated;
            }
            config.documents *= 2;
        };

        let dir = tempfile::tempdir().expect("tempdir");
        let corpus_path = dir.path().join("corpus.vrt");
        fs::write(&corpus_path, write_vertical(&generated.documents)).expect("writable");
        let grid_path = dir.path().join("grid.cfg");
        fs::write(
            &grid_path,
            "vo science\n\
             node n0 power=50 storage=100000000 vos=science\n\
             node n1 power=50 storage=100000000 vos=science\n\
             node n2 power=50 storage=100000000 vos=science\n\
             node n3 power=50 storage=100000000 vos=science\n",
        )
        .expect("writable");

        let base = RunConfig {
            corpus_paths: vec![corpus_path],
            grid_config: grid_path,
            out_dir: dir.path().join("parallel"),
            seed: 0xB16,
            shards_per_domain: 1,
            replication: 1,
            mode: ExecMode::Parallel,
            pair_mode: PairMode::NounAdj,
            pattern_file: None,
            filter: FilterConfig::default(),
            top_k: None,
        };

        let started = Instant::now();
        let summary = cmd_run(&base).expect("parallel run");
        let elapsed = started.elapsed();
        assert_eq!(summary.shard_count, 4);
        assert!(
            elapsed < Duration::from_secs(30),
            "parallel end-to-end took {elapsed:?}"
        );

        let sim = RunConfig {
            out_dir: dir.path().join("sim"),
            mode: ExecMode::Sim,
            ..base
        };
        cmd_run(&sim).expect("sim run");
        for name in ["report.txt", "pairs.tsv", "candidates.tsv"] {
            assert_eq!(
                fs::read(dir.path().join("parallel").join(name)).expect("written"),
                fs::read(dir.path().join("sim").join(name)).expect("written"),
                "{name} differs between modes"
            );
        }
    });
}

#[test]
fn demo_pipeline_runs_are_byte_identical() {
    criterion("determinism", || {
        let demo = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../demo");
        let dir = tempfile::tempdir().expect("tempdir");

        let run_into = |out: &Path| {
            let config = RunConfig {
                corpus_paths: vec![demo.join("corpus")],
                grid_config: demo.join("grid.cfg"),
                out_dir: out.to_path_buf(),
                seed: 7,
                shards_per_domain: 1,
                replication: 2,
                mode: ExecMode::Sim,
                pair_mode: PairMode::NounAdj,
                pattern_file: None,
                filter: FilterConfig {
                    min_noun_freq: 3,
                    ..FilterConfig::default()
                },
                top_k: None,
            };
            cmd_run(&config).expect("demo run");
        };
        let (a, b) = (dir.path().join("a"), dir.path().join("b"));
        run_into(&a);
        run_into(&b);
        for name in ["report.txt", "pairs.tsv", "candidates.tsv", "events.tsv", "jobs.tsv"] {
            assert_eq!(
                fs::read(a.join(name)).expect("written"),
                fs::read(b.join(name)).expect("written"),
                "{name} differs between identical runs"
            );
        }

        let ingest = cmd_ingest(&[demo.join("corpus")], 1, &dir.path().join("shards"))
            .expect("demo ingests");
        let (da, db) = (dir.path().join("dia-a"), dir.path().join("dia-b"));
        cmd_diachrony(&ingest.manifest, "mucca", "pazzo", Period::Month, &da)
            .expect("series");
        cmd_diachrony(&ingest.manifest, "mucca", "pazzo", Period::Month, &db)
            .expect("series");
        assert_eq!(
            fs::read(da.join("series.tsv")).expect("written"),
            fs::read(db.join("series.tsv")).expect("written")
        );
    });
}
