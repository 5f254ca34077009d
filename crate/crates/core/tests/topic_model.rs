mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use cast_core::clusterer::ClusterParams;
use cast_core::embedding_store::{planted_corpus, synthetic_provider, EmbeddingStore, PlantedSpec, SyntheticConfig};
use cast_core::evaluation::topic_diversity;
use cast_core::reducer::{ReduceMethod, ReduceParams};
use cast_core::topic_model::{
    assign_topic_words, cluster_documents, fit, fit_with_clustering, select_top_n_clusters, topic_vectors, FitParams,
};
use cast_core::word_aggregation::WordProfile;
use cast_core::{hdbscan, Document};
use common::{purity, random_unit};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn planted() -> (Vec<Document>, EmbeddingStore, Vec<usize>, BTreeMap<String, usize>) {
    let corpus = planted_corpus(&PlantedSpec::default());
    let store = synthetic_provider(&corpus.documents, &SyntheticConfig::new(32, 11), Some(&corpus.topic_plan)).store;
    (corpus.documents, store, corpus.doc_topics, corpus.topic_plan)
}

fn params(seed: u64) -> FitParams {
    FitParams {
        n_topics: 3,
        cluster: ClusterParams::new(15),
        seed,
        ..FitParams::default()
    }
}

#[test]
fn planted_topics_are_recovered() {
    let (docs, store, truth, plan) = planted();
    let start = Instant::now();
    let model = fit(&docs, &store, &params(7)).unwrap();
    assert!(start.elapsed().as_secs() < 60);
    assert_eq!(model.topics.len(), 3);
    assert!(purity(&model.document_labels, &truth) >= 0.9);
    for topic in &model.topics {
        let planted: BTreeSet<usize> = topic.top_words[..5].iter().map(|w| plan[&w.word]).collect();
        assert_eq!(planted.len(), 1, "{:?}", topic.words());
        // Words agree with the documents the topic was built from.
        let doc_topic = truth[topic.member_doc_ids[0]];
        assert_eq!(planted.into_iter().next().unwrap(), doc_topic);
    }
    assert_eq!(topic_diversity(&model.topic_words()).unwrap(), 1.0);
}

#[test]
fn word_filter_does_not_touch_clustering() {
    let (docs, store, _, _) = planted();
    let mut p = params(3);
    p.reduce.method = ReduceMethod::Pca;
    p.ss_threshold = 0.0;
    let a = fit(&docs, &store, &p).unwrap();
    p.ss_threshold = 0.4;
    let b = fit(&docs, &store, &p).unwrap();
    let vectors = |m: &cast_core::TopicModel| serde_json::to_string(&m.topics.iter().map(|t| &t.topic_vector).collect::<Vec<_>>()).unwrap();
    assert_eq!(vectors(&a), vectors(&b));
    assert_eq!(a.document_labels, b.document_labels);
    let words_a: BTreeSet<String> = a.topic_words().into_iter().flatten().collect();
    assert!(a.diagnostics.candidate_words >= b.diagnostics.candidate_words);
    assert!(!words_a.is_empty());
}

#[test]
fn shared_clustering_gives_the_same_model() {
    let (docs, store, _, _) = planted();
    let mut p = params(5);
    p.reduce.method = ReduceMethod::Pca;
    let stage = cluster_documents(&store, &p).unwrap();
    let direct = fit(&docs, &store, &p).unwrap();
    let reused = fit_with_clustering(&docs, &store, &p, &stage).unwrap();
    assert_eq!(serde_json::to_string(&direct).unwrap(), serde_json::to_string(&reused).unwrap());
}

#[test]
fn top_n_selection_is_a_prefix() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut points = Vec::new();
    for (c, size) in [40usize, 25, 10, 18].iter().enumerate() {
        for _ in 0..*size {
            let mut p = random_unit(&mut rng, 3);
            p[0] += 20.0 * c as f64;
            points.push(p);
        }
    }
    let r = hdbscan(&points, &ClusterParams::new(8)).unwrap();
    assert_eq!(r.cluster_sizes, vec![40, 25, 18, 10]);
    let mut prev: Vec<usize> = Vec::new();
    for n in 1..=6 {
        let (sel, warn) = select_top_n_clusters(&r, n).unwrap();
        assert_eq!(&sel[..prev.len()], &prev[..]);
        assert_eq!(warn.is_some(), n > 4);
        prev = sel;
    }
    assert!(select_top_n_clusters(&r, 0).is_err());
}

#[test]
fn topic_vectors_match_mean_then_normalise() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let dim = 10;
    let docs: Vec<Vec<f32>> = (0..30).map(|_| random_unit(&mut rng, dim).iter().map(|&x| x as f32).collect()).collect();
    let store = EmbeddingStore::new(dim, docs.clone(), vec![]).unwrap();
    let points: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64 * 1e-3, 0.0]).collect();
    let r = hdbscan(&points, &ClusterParams::new(30)).unwrap();
    assert_eq!(r.n_clusters(), 1);
    let v = &topic_vectors(&store, &r, &[0]).unwrap()[&0];
    let mut mean = vec![0.0f64; dim];
    for d in &docs {
        for (m, &x) in mean.iter_mut().zip(d) {
            *m += x as f64 / 30.0;
        }
    }
    let n = mean.iter().map(|x| x * x).sum::<f64>().sqrt();
    for (a, b) in v.iter().zip(&mean) {
        assert!((a - b / n).abs() < 1e-9);
    }
}

fn profile(word: &str, v: Vec<f64>) -> WordProfile {
    WordProfile {
        word: word.into(),
        e_final: v,
        occurrence_count: 3,
        self_similarity: Some(0.9),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn assignment_ignores_topic_vector_scale(seed in any::<u64>(), scale in 0.01f64..100.0, n_words in 1usize..30) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let topics: Vec<Vec<f64>> = (0..4).map(|_| random_unit(&mut rng, 6)).collect();
        let profiles: BTreeMap<String, WordProfile> = (0..n_words)
            .map(|i| (format!("w{i}"), profile(&format!("w{i}"), random_unit(&mut rng, 6))))
            .collect();
        let cands: BTreeSet<String> = profiles.keys().cloned().collect();
        let scaled: Vec<Vec<f64>> = topics.iter().map(|t| t.iter().map(|x| x * scale).collect()).collect();
        let a = assign_topic_words(&cands, &profiles, &topics, 10, false).unwrap();
        let b = assign_topic_words(&cands, &profiles, &scaled, 10, false).unwrap();
        let words = |w: &cast_core::topic_model::WordAssignment| w.ranked.iter().map(|t| t.iter().map(|x| x.word.clone()).collect::<Vec<_>>()).collect::<Vec<_>>();
        prop_assert_eq!(words(&a), words(&b));
        prop_assert_eq!(&a.pool_sizes, &b.pool_sizes);
        // Hard assignment partitions the candidates.
        prop_assert_eq!(a.pool_sizes.iter().sum::<usize>(), n_words);
        for t in &a.ranked {
            for pair in t.windows(2) {
                prop_assert!(pair[0].similarity > pair[1].similarity
                    || (pair[0].similarity == pair[1].similarity && pair[0].word < pair[1].word));
            }
        }
    }
}

#[test]
fn pca_fit_is_deterministic() {
    let (docs, store, _, _) = planted();
    let mut p = params(1);
    p.reduce = ReduceParams { method: ReduceMethod::Pca, ..ReduceParams::default() };
    let a = serde_json::to_vec(&fit(&docs, &store, &p).unwrap()).unwrap();
    let b = serde_json::to_vec(&fit(&docs, &store, &p).unwrap()).unwrap();
    assert_eq!(a, b);
}
