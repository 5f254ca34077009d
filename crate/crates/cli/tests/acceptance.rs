//! Acceptance suite. Runs without the libtest harness so every criterion
//! prints a PASS/FAIL line; exits non-zero if any criterion fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::panic;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use cast_core::clusterer::{hdbscan, ClusterParams};
use cast_core::corpus::documents_from_texts;
use cast_core::embedding_store::{planted_corpus, synthetic_provider, PlantedSpec, SyntheticConfig};
use cast_core::evaluation::npmi::WindowCounts;
use cast_core::evaluation::{npmi, topic_diversity, DEFAULT_EPSILON};
use cast_core::topic_model::{fit, FitParams};
use cast_core::word_aggregation::{filter_by_threshold, self_similarity, WordProfile};
use common::{brute_core, brute_self_similarity, kruskal_weight, mreach, purity, random_unit};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use serde_json::Value;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn self_similarity_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let p = rng.random_range(2..=30);
        let dim = rng.random_range(8..=64);
        let vs: Vec<Vec<f64>> = (0..p).map(|_| random_unit(&mut rng, dim)).collect();
        let fast = self_similarity(&vs).map_err(|e| e.to_string())?;
        worst = worst.max((fast - brute_self_similarity(&vs)).abs());
    }
    let elapsed = start.elapsed();
    ensure(worst < 1e-9, || format!("max deviation {worst:e}"))?;
    ensure(elapsed < Duration::from_secs(5), || format!("took {elapsed:?}"))?;
    Ok(format!("200 words, max deviation {worst:.1e}, {elapsed:.2?}"))
}

/// Reference scores: top ten overall, then the top ten below 0.5, 0.4 and 0.3.
const TABLE: [[(&str, f64); 4]; 10] = [
    [("armenian", 0.833), ("student", 0.499), ("capability", 0.399), ("<pad>", 0.299)],
    [("genocide", 0.781), ("heart", 0.499), ("driver", 0.399), ("great", 0.299)],
    [("turkish", 0.772), ("score", 0.499), ("operation", 0.399), ("stay", 0.298)],
    [("homosexuality", 0.764), ("split", 0.499), ("medium", 0.399), ("setting", 0.298)],
    [("atheism", 0.755), ("motor", 0.499), ("practice", 0.399), ("good", 0.297)],
    [("arab", 0.753), ("legitimate", 0.499), ("confirm", 0.399), ("highly", 0.297)],
    [("encryption", 0.738), ("traditional", 0.499), ("exit", 0.399), ("possibly", 0.296)],
    [("massacre", 0.737), ("fact", 0.498), ("call", 0.398), ("extremely", 0.295)],
    [("homosexual", 0.735), ("sequence", 0.498), ("error", 0.398), ("due", 0.294)],
    [("israeli", 0.732), ("software", 0.498), ("default", 0.398), ("advance", 0.293)],
];

fn reference_partition() -> Outcome {
    let profiles: BTreeMap<String, WordProfile> = TABLE
        .iter()
        .flatten()
        .map(|&(w, s)| {
            let p = WordProfile {
                word: w.to_string(),
                e_final: vec![1.0, 0.0],
                occurrence_count: 10,
                self_similarity: Some(s),
            };
            (w.to_string(), p)
        })
        .collect();
    ensure(profiles.len() == 40, || format!("{} distinct words", profiles.len()))?;
    for (t, columns_kept) in [(0.5, 1), (0.4, 2), (0.3, 3)] {
        let kept = filter_by_threshold(&profiles, t);
        for row in &TABLE {
            for (c, (w, _)) in row.iter().enumerate() {
                ensure(kept.contains(*w) == (c < columns_kept), || format!("{w} misplaced at {t}"))?;
            }
        }
    }
    ensure(!filter_by_threshold(&profiles, 0.3).contains("due"), || "due kept at 0.3".into())?;
    ensure(!filter_by_threshold(&profiles, 0.4).contains("driver"), || "driver kept at 0.4".into())?;
    ensure(filter_by_threshold(&profiles, 0.5).contains("armenian"), || "armenian dropped".into())?;
    Ok("40 pairs, thresholds 0.5/0.4/0.3".into())
}

fn planted_params(seed: u64) -> FitParams {
    FitParams {
        n_topics: 3,
        cluster: ClusterParams::new(15),
        seed,
        ..FitParams::default()
    }
}

fn planted_recovery() -> Outcome {
    let corpus = planted_corpus(&PlantedSpec::default());
    let store = synthetic_provider(&corpus.documents, &SyntheticConfig::new(32, 11), Some(&corpus.topic_plan)).store;
    let start = Instant::now();
    let model = fit(&corpus.documents, &store, &planted_params(7)).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure(model.topics.len() == 3, || format!("{} topics", model.topics.len()))?;
    let p = purity(&model.document_labels, &corpus.doc_topics);
    ensure(p >= 0.9, || format!("purity {p:.3}"))?;
    for topic in &model.topics {
        let doc_topic = corpus.doc_topics[topic.member_doc_ids[0]];
        for w in topic.top_words.iter().take(5) {
            ensure(corpus.topic_plan.get(&w.word) == Some(&doc_topic), || {
                format!("topic {} has foreign word {}", topic.topic_id, w.word)
            })?;
        }
    }
    let td = topic_diversity(&model.topic_words()).map_err(|e| e.to_string())?;
    ensure(td == 1.0, || format!("topic diversity {td}"))?;
    ensure(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"))?;
    Ok(format!("purity {p:.3}, diversity {td}, {elapsed:.2?}"))
}

fn word_filter_independence() -> Outcome {
    let corpus = planted_corpus(&PlantedSpec::default());
    let store = synthetic_provider(&corpus.documents, &SyntheticConfig::new(32, 11), Some(&corpus.topic_plan)).store;
    let mut params = planted_params(13);
    params.ss_threshold = 0.0;
    let a = fit(&corpus.documents, &store, &params).map_err(|e| e.to_string())?;
    params.ss_threshold = 0.4;
    let b = fit(&corpus.documents, &store, &params).map_err(|e| e.to_string())?;
    let vectors = |m: &cast_core::TopicModel| {
        serde_json::to_vec(&m.topics.iter().map(|t| &t.topic_vector).collect::<Vec<_>>()).unwrap()
    };
    let labels = |m: &cast_core::TopicModel| serde_json::to_vec(&m.document_labels).unwrap();
    ensure(vectors(&a) == vectors(&b), || "topic vectors differ".into())?;
    ensure(labels(&a) == labels(&b), || "cluster labels differ".into())?;
    Ok(format!("{} topics, {} labels identical", a.topics.len(), a.document_labels.len()))
}

#[derive(Deserialize)]
struct Fixture {
    min_cluster_size: usize,
    min_samples: usize,
    points: Vec<Vec<f64>>,
    labels: Vec<i64>,
}

fn hdbscan_fixture() -> Outcome {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/hdbscan_two_blobs.json");
    let f: Fixture =
        serde_json::from_str(&std::fs::read_to_string(&path).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let r = hdbscan(
        &f.points,
        &ClusterParams {
            min_cluster_size: f.min_cluster_size,
            min_samples: Some(f.min_samples),
        },
    )
    .map_err(|e| e.to_string())?;
    ensure(r.labels.len() == f.labels.len(), || "label count differs".into())?;
    let mismatches = r.labels.iter().zip(&f.labels).filter(|(a, b)| a != b).count();
    ensure(mismatches == 0, || format!("{mismatches} labels differ from the reference"))?;
    let core = brute_core(&f.points, f.min_samples);
    let expected = kruskal_weight(f.points.len(), |a, b| mreach(&f.points, &core, a, b));
    let got: f64 = r.mst.iter().map(|e| e.weight).sum();
    ensure((got - expected).abs() < 1e-9, || format!("MST weight {got} vs {expected}"))?;
    Ok(format!("{} points, {} clusters, MST {got:.6}", f.points.len(), r.n_clusters()))
}

fn hand_npmi(c_a: f64, c_b: f64, c_ab: f64, n: f64) -> f64 {
    let (pa, pb, pab) = (c_a / n, c_b / n, c_ab / n);
    ((pab + DEFAULT_EPSILON) / (pa * pb)).ln() / -(pab + DEFAULT_EPSILON).ln()
}

fn npmi_hand_oracle() -> Outcome {
    // Width-3 windows: 8 in total. apple 3, banana 4, cherry 3;
    // apple+banana 2, apple+cherry 1, banana+cherry 2.
    let docs = documents_from_texts([
        "apple banana cherry date",
        "apple banana",
        "cherry egg fig grape apple",
        "banana fig",
        "egg egg egg",
    ]);
    let set: BTreeSet<String> = ["apple", "banana", "cherry"].iter().map(|s| s.to_string()).collect();
    let counts = WindowCounts::count(&docs, &set, Some(3));
    ensure(counts.n_windows == 8, || format!("{} windows", counts.n_windows))?;
    for (a, b, expected) in [
        ("apple", "banana", hand_npmi(3.0, 4.0, 2.0, 8.0)),
        ("apple", "cherry", hand_npmi(3.0, 3.0, 1.0, 8.0)),
        ("banana", "cherry", hand_npmi(4.0, 3.0, 2.0, 8.0)),
    ] {
        let got = counts.pair_npmi(a, b, DEFAULT_EPSILON);
        ensure((got - expected).abs() < 1e-9, || format!("{a}/{b}: {got} vs {expected}"))?;
    }
    let pair = |a: &str, b: &str| vec![a.to_string(), b.to_string()];
    let perfect = documents_from_texts(["alpha beta", "gamma delta", "alpha beta", "gamma omega"]);
    let s = npmi(&[pair("alpha", "beta")], &perfect, Some(10), DEFAULT_EPSILON).map_err(|e| e.to_string())?;
    ensure(s.per_topic[0] == 1.0, || format!("perfect pair {}", s.per_topic[0]))?;
    let apart = documents_from_texts(["alpha xx", "beta yy", "alpha zz", "beta ww", "alpha qq", "beta rr"]);
    let s = npmi(&[pair("alpha", "beta")], &apart, Some(10), DEFAULT_EPSILON).map_err(|e| e.to_string())?;
    ensure(s.per_topic[0] <= -0.99, || format!("disjoint pair {}", s.per_topic[0]))?;
    Ok("3 pairs within 1e-9, perfect 1.0, disjoint -1.0".into())
}

fn cast(dir: &Path, args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_cast"))
        .current_dir(dir)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "cast {} exited {:?}: {}",
            args.join(" "),
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(out.stdout)
}

fn planted_files() -> Result<tempfile::TempDir, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    cast(dir.path(), &["synth", "-q", "--seed", "7"])?;
    Ok(dir)
}

fn model_determinism() -> Outcome {
    let dir = planted_files()?;
    let run = |out: &str| {
        cast(
            dir.path(),
            &["model", "-q", "-i", "corpus.jsonl", "-e", "corpus.castemb", "--n-topics", "3", "--seed", "42", "--out", out],
        )
    };
    run("a.json")?;
    run("b.json")?;
    let a = std::fs::read(dir.path().join("a.json")).map_err(|e| e.to_string())?;
    let b = std::fs::read(dir.path().join("b.json")).map_err(|e| e.to_string())?;
    ensure(a == b, || "model.json differs between runs".into())?;
    Ok(format!("{} bytes identical", a.len()))
}

fn ablation_shape() -> Outcome {
    let dir = planted_files()?;
    let start = Instant::now();
    let stdout = cast(
        dir.path(),
        &[
            "ablate", "-q", "--format", "json", "-i", "corpus.jsonl", "-e", "corpus.castemb", "--n-topics", "3",
            "--thresholds", "0,0.2,0.4,0.6,0.8", "--repeats", "5",
        ],
    )?;
    let elapsed = start.elapsed();
    let v: Value = serde_json::from_slice(&stdout).map_err(|e| e.to_string())?;
    let rows = v["rows"].as_array().ok_or("no rows")?;
    ensure(rows.len() == 5, || format!("{} rows", rows.len()))?;
    let mut flagged = 0;
    for row in rows {
        ensure(row["runs"] == 5, || format!("row {row}"))?;
        let incomplete = row["completed"] != 5 || row["mean_candidates"].as_f64() == Some(0.0);
        let flag = row["flag"].is_string();
        ensure(!incomplete || flag, || format!("unflagged short row {row}"))?;
        flagged += flag as usize;
    }
    // A threshold above every score must empty the pool and be flagged.
    let stdout = cast(
        dir.path(),
        &["ablate", "-q", "--format", "json", "-i", "corpus.jsonl", "-e", "corpus.castemb", "--n-topics", "3", "--thresholds", "1.0", "--repeats", "1"],
    )?;
    let v: Value = serde_json::from_slice(&stdout).map_err(|e| e.to_string())?;
    ensure(v["rows"][0]["flag"].is_string(), || "empty pool not flagged".into())?;
    ensure(elapsed < Duration::from_secs(300), || format!("took {elapsed:?}"))?;
    Ok(format!("5 rows, {flagged} flagged, {elapsed:.2?}"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("self-similarity oracle", self_similarity_oracle),
        ("reference threshold partition", reference_partition),
        ("planted-topic recovery", planted_recovery),
        ("word-filter independence", word_filter_independence),
        ("hdbscan fixture", hdbscan_fixture),
        ("npmi hand oracle", npmi_hand_oracle),
        ("cast model determinism", model_determinism),
        ("ablation shape", ablation_shape),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failures = 0;
    for (name, check) in criteria {
        let outcome = panic::catch_unwind(check).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failures += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
