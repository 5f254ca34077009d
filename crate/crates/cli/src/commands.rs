use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use cast_core::corpus::{build_vocabulary_with_stopwords, load_corpus, CorpusFormat, Document};
use cast_core::embedding_store::{
    planted_corpus, read_castemb, synthetic_provider, write_castemb, EmbeddingStore, PlantedSpec, SyntheticConfig,
};
use cast_core::evaluation::llm_judge::{llm_judge, EndpointConfig, HttpChatClient, Transcript};
use cast_core::evaluation::{evaluate, EvalReport};
use cast_core::topic_model::{cluster_documents, fit, fit_with_clustering, FitError, TopicModel, MODEL_FORMAT_VERSION};
use cast_core::word_aggregation::{aggregate_word_embeddings, ss_report, SsReport};
use serde::{Deserialize, Serialize};

use crate::args::{AblateArgs, EvalCmdArgs, Format, ModelArgs, SsReportArgs, SynthArgs, ValidateArgs};
use crate::config::RunConfig;
use crate::error::CliError;

/// Settings shared by every subcommand.
pub struct Context {
    pub format: Format,
    pub quiet: bool,
    /// Contents of `--config`, if given.
    pub file: Option<RunConfig>,
    pub seed: Option<u64>,
}

impl Context {
    /// Defaults, overlaid by the config file and then the global flags.
    fn base(&self) -> RunConfig {
        self.base_or(RunConfig::default())
    }

    fn base_or(&self, fallback: RunConfig) -> RunConfig {
        let mut cfg = self.file.clone().unwrap_or(fallback);
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        cfg
    }

    fn note(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub format_version: u32,
    pub run_config: RunConfig,
    pub model: TopicModel,
}

#[derive(Debug, Serialize)]
struct EvalArtifact {
    format_version: u32,
    run_config: RunConfig,
    model: PathBuf,
    reference: PathBuf,
    report: EvalReport,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    transcripts: Vec<Transcript>,
}

#[derive(Debug, Serialize)]
struct SsReportArtifact<'a> {
    format_version: u32,
    run_config: &'a RunConfig,
    report: &'a SsReport,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::data(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::output(path, e))
}

fn print_json<T: Serialize>(value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::data(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn read_corpus(path: &Path) -> Result<Vec<Document>, CliError> {
    load_corpus(path, CorpusFormat::from_path(path)).map_err(CliError::from_corpus)
}

fn read_store(path: &Path) -> Result<EmbeddingStore, CliError> {
    read_castemb(path).map_err(|e| CliError::from_store(path, e))
}

fn check_aligned(docs: &[Document], store: &EmbeddingStore) -> Result<(), CliError> {
    if docs.len() != store.n_docs() {
        return Err(CliError::data(format!(
            "corpus has {} documents but the embeddings cover {}",
            docs.len(),
            store.n_docs()
        )));
    }
    Ok(())
}

fn seconds(t: Instant) -> String {
    format!("{:.2}s", t.elapsed().as_secs_f64())
}

pub fn model(ctx: &Context, args: &ModelArgs) -> Result<(), CliError> {
    let mut cfg = ctx.base();
    cfg.apply_input(&args.input);
    cfg.apply_pipeline(&args.pipeline);
    cfg.out = Some(args.out.clone());
    cfg.validate()?;
    let input = cfg.require_input()?.to_path_buf();
    let embeddings = cfg.require_embeddings()?.to_path_buf();
    let params = cfg.fit_params()?;

    let t = Instant::now();
    let docs = read_corpus(&input)?;
    let store = read_store(&embeddings)?;
    check_aligned(&docs, &store)?;
    let load_time = seconds(t);
    let t = Instant::now();
    let model = fit(&docs, &store, &params).map_err(CliError::from_fit)?;
    let fit_time = seconds(t);

    let artifact = ModelArtifact {
        format_version: MODEL_FORMAT_VERSION,
        run_config: cfg,
        model,
    };
    write_json(&args.out, &artifact)?;
    ctx.note(format!("timing: load {load_time}, fit {fit_time}"));
    let d = &artifact.model.diagnostics;
    ctx.note(format!(
        "{} documents ({} noise), {} clusters, {} candidate words; wrote {}",
        d.n_documents,
        d.noise_documents,
        d.clusters_found,
        d.candidate_words,
        args.out.display()
    ));
    for w in &d.warnings {
        log::warn!("{w}");
    }
    match ctx.format {
        Format::Text => print!("{}", artifact.model.topic_table()),
        Format::Json => print_json(&artifact)?,
    }
    Ok(())
}

pub fn eval(ctx: &Context, args: &EvalCmdArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&args.model).map_err(|e| CliError::input(&args.model, e))?;
    let artifact: ModelArtifact = serde_json::from_str(&text)
        .map_err(|e| CliError::data(format!("{}: not a model file: {e}", args.model.display())))?;
    let mut cfg = ctx.base_or(artifact.run_config.clone());
    cfg.apply_eval(&args.eval);
    cfg.validate()?;
    let reference = match (&args.reference, &artifact.run_config.input) {
        (Some(r), _) => r.clone(),
        (None, Some(i)) => i.clone(),
        (None, None) => return Err(CliError::usage("no reference corpus given (use --reference)")),
    };
    let docs = read_corpus(&reference)?;
    let topics = artifact.model.topic_words();
    let mut report = evaluate(&topics, &docs, &cfg.eval_params()).map_err(CliError::from_eval)?;
    let mut transcripts = Vec::new();
    if let Some(url) = &args.llm_endpoint {
        let t = Instant::now();
        let client = HttpChatClient::new(EndpointConfig {
            model: args.llm_model.clone(),
            ..EndpointConfig::new(url.clone())
        });
        let truncated: Vec<Vec<String>> = topics.iter().map(|t| t.iter().take(cfg.top_k).cloned().collect()).collect();
        let scores = llm_judge(&truncated, &client).map_err(CliError::from_judge)?;
        report.llm_tc = Some(scores.llm_tc);
        report.llm_td = Some(scores.llm_td);
        transcripts = scores.transcripts;
        ctx.note(format!("timing: llm judge {}", seconds(t)));
    }
    let out = EvalArtifact {
        format_version: MODEL_FORMAT_VERSION,
        run_config: cfg,
        model: args.model.clone(),
        reference,
        report,
        transcripts,
    };
    if let Some(path) = &args.out {
        write_json(path, &out)?;
    }
    match ctx.format {
        Format::Text => print!("{}", out.report.to_text()),
        Format::Json => print_json(&out)?,
    }
    Ok(())
}

pub fn ss_report_cmd(ctx: &Context, args: &SsReportArgs) -> Result<(), CliError> {
    let mut cfg = ctx.base();
    cfg.apply_input(&args.input);
    cfg.validate()?;
    let docs = read_corpus(cfg.require_input()?)?;
    let store = read_store(cfg.require_embeddings()?)?;
    let params = cfg.fit_params()?;
    let vocab = build_vocabulary_with_stopwords(&docs, params.min_word_freq, params.stopwords);
    let profiles = aggregate_word_embeddings(&store, &vocab).map_err(|e| CliError::data(format!("[aggregate] {e}")))?;
    let report = ss_report(&profiles, &args.thresholds, args.rows);
    match ctx.format {
        Format::Text => {
            print!("{}", report.to_text());
            ctx.note(format!(
                "{} scored words, {} with a single occurrence",
                report.scored_words,
                report.insufficient_occurrences.len()
            ));
        }
        Format::Json => print_json(&SsReportArtifact {
            format_version: MODEL_FORMAT_VERSION,
            run_config: &cfg,
            report: &report,
        })?,
    }
    Ok(())
}

pub const INSUFFICIENT: &str = "insufficient candidates";

#[derive(Debug, Clone, Serialize)]
pub struct AblationRow {
    pub threshold: f64,
    pub runs: usize,
    /// Runs that produced a model.
    pub completed: usize,
    pub mean_candidates: f64,
    pub mean_npmi: Option<f64>,
    pub mean_topic_diversity: Option<f64>,
    pub flag: Option<String>,
}

#[derive(Debug, Serialize)]
struct AblationArtifact {
    format_version: u32,
    run_config: RunConfig,
    seeds: Vec<u64>,
    rows: Vec<AblationRow>,
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"))
}

fn ablation_table(rows: &[AblationRow]) -> String {
    let mut out = format!(
        "{:>9}  {:>4}  {:>10}  {:>8}  {:>8}  {}\n",
        "threshold", "runs", "candidates", "npmi", "td", "note"
    );
    for r in rows {
        out.push_str(
            format!(
                "{:>9.2}  {:>4}  {:>10.1}  {:>8}  {:>8}  {}",
                r.threshold,
                r.completed,
                r.mean_candidates,
                opt(r.mean_npmi),
                opt(r.mean_topic_diversity),
                r.flag.as_deref().unwrap_or("")
            )
            .trim_end(),
        );
        out.push('\n');
    }
    out
}

pub fn ablate(ctx: &Context, args: &AblateArgs) -> Result<(), CliError> {
    let mut cfg = ctx.base();
    cfg.apply_input(&args.input);
    cfg.apply_pipeline(&args.pipeline);
    cfg.apply_eval(&args.eval);
    cfg.out = args.out.clone();
    cfg.validate()?;
    if let Some(t) = args.thresholds.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(CliError::usage(format!("threshold {t} is outside [0, 1]")));
    }
    if args.thresholds.is_empty() {
        return Err(CliError::usage("no thresholds given"));
    }
    let docs = read_corpus(cfg.require_input()?)?;
    let store = read_store(cfg.require_embeddings()?)?;
    check_aligned(&docs, &store)?;
    let base = cfg.fit_params()?;
    let eval_params = cfg.eval_params();
    let seeds: Vec<u64> = (0..args.repeats).map(|i| cfg.seed.wrapping_add(i)).collect();

    struct Acc {
        candidates: Vec<f64>,
        npmi: Vec<f64>,
        td: Vec<f64>,
        insufficient: bool,
    }
    let mut acc: Vec<Acc> = args
        .thresholds
        .iter()
        .map(|_| Acc {
            candidates: Vec::new(),
            npmi: Vec::new(),
            td: Vec::new(),
            insufficient: false,
        })
        .collect();
    let started = Instant::now();
    for &seed in &seeds {
        let t = Instant::now();
        let mut params = base.clone();
        params.seed = seed;
        // Clustering does not depend on the threshold; do it once per seed.
        let stage = cluster_documents(&store, &params).map_err(CliError::from_fit)?;
        for (i, &threshold) in args.thresholds.iter().enumerate() {
            params.ss_threshold = threshold;
            match fit_with_clustering(&docs, &store, &params, &stage) {
                Ok(model) => {
                    acc[i].candidates.push(model.diagnostics.candidate_words as f64);
                    let report =
                        evaluate(&model.topic_words(), &docs, &eval_params).map_err(CliError::from_eval);
                    match report {
                        Ok(r) => {
                            acc[i].npmi.push(r.npmi_mean);
                            match r.topic_diversity {
                                Some(td) if r.warnings.is_empty() => acc[i].td.push(td),
                                _ => acc[i].insufficient = true,
                            }
                        }
                        // Topics with fewer than two words cannot be scored.
                        Err(_) => acc[i].insufficient = true,
                    }
                }
                Err(FitError::NoCandidates) => {
                    acc[i].candidates.push(0.0);
                    acc[i].insufficient = true;
                }
                Err(e) => return Err(CliError::from_fit(e)),
            }
        }
        ctx.note(format!("seed {seed}: {}", seconds(t)));
    }
    let rows: Vec<AblationRow> = args
        .thresholds
        .iter()
        .zip(acc)
        .map(|(&threshold, a)| AblationRow {
            threshold,
            runs: seeds.len(),
            completed: a.npmi.len(),
            mean_candidates: mean(&a.candidates).unwrap_or(0.0),
            mean_npmi: mean(&a.npmi),
            mean_topic_diversity: mean(&a.td),
            flag: a.insufficient.then(|| INSUFFICIENT.to_string()),
        })
        .collect();
    ctx.note(format!("timing: sweep {}", seconds(started)));
    let artifact = AblationArtifact {
        format_version: MODEL_FORMAT_VERSION,
        run_config: cfg,
        seeds,
        rows,
    };
    if let Some(path) = &args.out {
        write_json(path, &artifact)?;
    }
    match ctx.format {
        Format::Text => print!("{}", ablation_table(&artifact.rows)),
        Format::Json => print_json(&artifact)?,
    }
    Ok(())
}

pub fn validate(ctx: &Context, args: &ValidateArgs) -> Result<(), CliError> {
    let store = read_store(&args.embeddings)?;
    let s = store.summary();
    match ctx.format {
        Format::Text => {
            println!("{}: ok", args.embeddings.display());
            println!("dim          {}", s.dim);
            println!("documents    {}", s.n_docs);
            println!("occurrences  {}", s.n_occurrences);
            for (name, n) in [("document", &s.doc_norms), ("occurrence", &s.occurrence_norms)] {
                if n.count > 0 {
                    println!(
                        "{name} norms: min {:.6} max {:.6} mean {:.6}",
                        n.min, n.max, n.mean
                    );
                }
            }
        }
        Format::Json => print_json(&s)?,
    }
    Ok(())
}

#[derive(Serialize)]
struct Truth<'a> {
    doc_topics: &'a [usize],
    topic_plan: &'a BTreeMap<String, usize>,
}

pub fn synth(ctx: &Context, args: &SynthArgs) -> Result<(), CliError> {
    if args.dim < 8 {
        return Err(CliError::usage("--dim must be at least 8"));
    }
    let seed = ctx.base().seed;
    let (docs, plan, doc_topics) = match &args.corpus {
        Some(path) => (read_corpus(path)?, None, None),
        None => {
            if args.topics == 0 || args.words_per_topic == 0 {
                return Err(CliError::usage("--topics and --words-per-topic must be positive"));
            }
            let planted = planted_corpus(&PlantedSpec {
                n_topics: args.topics,
                docs_per_topic: args.docs_per_topic,
                words_per_topic: args.words_per_topic,
                doc_len: args.doc_len,
                seed,
                ..PlantedSpec::default()
            });
            (planted.documents, Some(planted.topic_plan), Some(planted.doc_topics))
        }
    };
    let config = SyntheticConfig {
        noise_scale: args.noise_scale,
        topic_spread: args.topic_spread,
        ..SyntheticConfig::new(args.dim, seed)
    };
    let synthetic = synthetic_provider(&docs, &config, plan.as_ref());
    if args.corpus.is_none() {
        let mut f = fs::File::create(&args.out_corpus).map_err(|e| CliError::output(&args.out_corpus, e))?;
        for d in &docs {
            let line = serde_json::json!({ "text": d.raw_text });
            writeln!(f, "{line}").map_err(|e| CliError::output(&args.out_corpus, e))?;
        }
    }
    write_castemb(&synthetic.store, &args.out_embeddings)
        .map_err(|e| CliError::from_store(&args.out_embeddings, e))?;
    if let (Some(path), Some(plan), Some(topics)) = (&args.out_truth, &plan, &doc_topics) {
        write_json(
            path,
            &Truth {
                doc_topics: topics,
                topic_plan: plan,
            },
        )?;
    }
    if !synthetic.empty_docs.is_empty() {
        log::warn!("{} documents have no tokens", synthetic.empty_docs.len());
    }
    ctx.note(format!(
        "{} documents, {} occurrences, dim {}; wrote {}",
        docs.len(),
        synthetic.store.occurrences.len(),
        args.dim,
        args.out_embeddings.display()
    ));
    Ok(())
}
