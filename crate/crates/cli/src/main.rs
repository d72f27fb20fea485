//! `tracelink`: ingest trace datasets, build link features and run the
//! classification experiments.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use tracelink::balance::RebalanceMethod;
use tracelink::config::{parse_key_values, sha256_hex, RunConfig};
use tracelink::corpus::{load_dataset, Language, LoadOptions, TraceDataset};
use tracelink::eval::{self, best_ir, ir_baseline_at_k, EvalReport, PipelineConfig, PooledRanking};
use tracelink::features::{self, FeatureMatrix};
use tracelink::ir::{DatasetIndexes, Model};
use tracelink::learn::Algorithm;
use tracelink::selection::{self, SelectionMethod};
use tracelink::{Error, Result};

#[derive(Parser)]
#[command(name = "tracelink", version, about = "Traceability link classification experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one configuration key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Dataset directory; repeatable.
    #[arg(long = "dataset", value_name = "DIR")]
    datasets: Vec<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    language: Option<String>,
    #[arg(long)]
    selection: Option<String>,
    /// `fold` (default) or `dataset`.
    #[arg(long)]
    selection_scope: Option<String>,
    #[arg(long)]
    rebalance: Option<String>,
    #[arg(long)]
    classifier: Option<String>,
    /// Skip the post-retrieval query-quality family (61 columns instead of 131).
    #[arg(long)]
    no_post_retrieval: bool,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Load datasets and print their link counts.
    Ingest {
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
        #[arg(long)]
        language: Option<String>,
        /// Also write preprocessed tokens as JSON lines into this directory.
        #[arg(long)]
        tokens: Option<PathBuf>,
    },
    /// Build the normalized feature matrix of each dataset.
    Featurize(Common),
    /// Run feature selection once on each whole dataset.
    Select(Common),
    /// Repeated stratified cross-validation of the configured pipeline.
    Cv(Common),
    /// Compare the last cross-validation run with the best IR baseline.
    Compare(Common),
    /// Cross-validate every rebalancing x selection x classifier combination.
    Grid {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        rebalancers: Vec<String>,
        #[arg(long, value_delimiter = ',')]
        selections: Vec<String>,
        #[arg(long, value_delimiter = ',')]
        classifiers: Vec<String>,
    },
    /// Render a saved JSON report.
    Report {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Markdown)]
        format: Format,
        /// Write here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Markdown,
    Csv,
    Json,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 2,
        Error::Data(_) | Error::Io { .. } | Error::Decode(_) => 3,
        Error::Invariant(_) => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Ingest { dirs, language, tokens } => cmd_ingest(&dirs, language.as_deref(), tokens.as_deref()),
        Command::Featurize(c) => cmd_featurize(&build_config(&c)?),
        Command::Select(c) => cmd_select(&build_config(&c)?),
        Command::Cv(c) => cmd_cv(&build_config(&c)?),
        Command::Compare(c) => cmd_compare(&build_config(&c)?),
        Command::Grid {
            common,
            rebalancers,
            selections,
            classifiers,
        } => cmd_grid(&build_config(&common)?, &rebalancers, &selections, &classifiers),
        Command::Report { input, format, output } => cmd_report(&input, format, output.as_deref()),
    }
}

fn build_config(c: &Common) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &c.config {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        cfg.apply(&parse_key_values(&text)?)?;
    }
    let mut overrides = BTreeMap::new();
    for kv in &c.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        overrides.insert(k.trim().to_owned(), v.trim().to_owned());
    }
    let flags = [
        ("seed", c.seed.map(|v| v.to_string())),
        ("trials", c.trials.map(|v| v.to_string())),
        ("folds", c.folds.map(|v| v.to_string())),
        ("language", c.language.clone()),
        ("selection", c.selection.clone()),
        ("selection_scope", c.selection_scope.clone()),
        ("rebalance", c.rebalance.clone()),
        ("classifier", c.classifier.clone()),
        ("jobs", c.jobs.map(|v| v.to_string())),
        ("post_retrieval", c.no_post_retrieval.then(|| "false".to_owned())),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            overrides.insert(k.to_owned(), v);
        }
    }
    cfg.apply(&overrides)?;
    if !c.datasets.is_empty() {
        cfg.datasets = c.datasets.clone();
    }
    if let Some(out) = &c.out {
        cfg.out = out.clone();
    }
    cfg.validate()?;
    if let Some(jobs) = cfg.jobs {
        // a second initialisation in the same process is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    Ok(cfg)
}

fn require_datasets(cfg: &RunConfig) -> Result<()> {
    if cfg.datasets.is_empty() {
        return Err(Error::Config("no datasets given (use --dataset DIR or 'datasets = ...')".into()));
    }
    Ok(())
}

fn load(cfg: &RunConfig, dir: &Path) -> Result<TraceDataset> {
    load_dataset(
        dir,
        &LoadOptions {
            language: cfg.language,
            name: None,
        },
    )
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Records the command, its configuration and checksums of its outputs
/// in `<out>/manifest.json`, keyed by command.
fn write_manifest(cfg: &RunConfig, command: &str, outputs: &[PathBuf]) -> Result<()> {
    let path = cfg.out.join("manifest.json");
    let mut manifest: serde_json::Map<String, serde_json::Value> = match fs::read(&path) {
        Ok(bytes) => serde_json::from_slice(&bytes).unwrap_or_default(),
        Err(_) => Default::default(),
    };
    let mut files = serde_json::Map::new();
    for o in outputs {
        let bytes = fs::read(o).map_err(|e| Error::io(o, e))?;
        let rel = o.strip_prefix(&cfg.out).unwrap_or(o);
        files.insert(rel.display().to_string(), json!(sha256_hex(&bytes)));
    }
    manifest.insert(
        command.to_owned(),
        json!({
            "config_hash": cfg.hash(),
            "feature_hash": cfg.feature_hash(),
            "config": cfg.key_values(),
            "datasets": cfg.datasets.iter().map(|d| d.display().to_string()).collect::<Vec<_>>(),
            "outputs": files,
        }),
    );
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    write(&path, text)
}

fn cmd_ingest(dirs: &[PathBuf], language: Option<&str>, tokens: Option<&Path>) -> Result<()> {
    let language: Option<Language> = language.map(str::parse).transpose()?;
    let (mut valid, mut invalid) = (0usize, 0usize);
    for dir in dirs {
        let ds = load_dataset(dir, &LoadOptions { language, name: None })?;
        let s = ds.summary();
        println!("{s}");
        if s.empty_artifacts > 0 {
            eprintln!("warning: {}: {} artifacts are empty after preprocessing", s.name, s.empty_artifacts);
        }
        if let Some(t) = tokens {
            fs::create_dir_all(t).map_err(|e| Error::io(t, e))?;
            ds.write_tokens_jsonl(&t.join(format!("{}.jsonl", s.name)))?;
        }
        valid += s.valid;
        invalid += s.invalid;
    }
    if dirs.len() > 1 {
        let total = valid + invalid;
        let pct = if total == 0 { 0.0 } else { 100.0 * valid as f64 / total as f64 };
        let ratio = if valid == 0 { 0.0 } else { invalid as f64 / valid as f64 };
        println!("total: {invalid} invalid, {valid} valid ({pct:.2}%), ratio {ratio:.1}:1");
    }
    Ok(())
}

/// Loads `<out>/<name>/features.csv` when its hash line matches the current
/// feature settings, otherwise featurizes and rewrites it. Values always
/// come from the CSV text so cached and fresh runs agree exactly.
fn features_for(cfg: &RunConfig, ds: &TraceDataset) -> Result<(FeatureMatrix, Vec<PathBuf>)> {
    let dir = cfg.out.join(&ds.name);
    let csv_path = dir.join("features.csv");
    let norm_path = dir.join("normalization.json");
    let tag = format!("config_hash={}", cfg.feature_hash());
    if let Ok(bytes) = fs::read(&csv_path) {
        let first = bytes.split(|&b| b == b'\n').next().unwrap_or_default();
        if first == format!("#{tag}").as_bytes() && norm_path.is_file() {
            eprintln!("{}: using cached features", ds.name);
            return Ok((FeatureMatrix::from_csv(&bytes)?, vec![csv_path, norm_path]));
        }
        eprintln!("{}: cached features are stale, rebuilding", ds.name);
    }
    eprintln!("{}: featurizing {} candidate links", ds.name, ds.num_candidates());
    let (matrix, norm) = features::featurize(ds, &cfg.features)?;
    let bytes = matrix.to_csv(Some(&tag))?;
    write(&norm_path, norm.to_json(Some(&cfg.feature_hash())))?;
    write(&csv_path, &bytes)?;
    Ok((FeatureMatrix::from_csv(&bytes)?, vec![csv_path, norm_path]))
}

fn cmd_featurize(cfg: &RunConfig) -> Result<()> {
    require_datasets(cfg)?;
    let mut outputs = Vec::new();
    for dir in &cfg.datasets {
        let ds = load(cfg, dir)?;
        let (m, files) = features_for(cfg, &ds)?;
        println!("{}: {} rows x {} features", ds.name, m.num_rows(), m.num_cols());
        outputs.extend(files);
    }
    write_manifest(cfg, "featurize", &outputs)
}

fn cmd_select(cfg: &RunConfig) -> Result<()> {
    require_datasets(cfg)?;
    let mut outputs = Vec::new();
    for dir in &cfg.datasets {
        let ds = load(cfg, dir)?;
        let (m, files) = features_for(cfg, &ds)?;
        outputs.extend(files);
        let r = selection::select(&m, cfg.pipeline.selection, cfg.pipeline.threshold)?;
        println!("{}: {} kept {} of {} features", ds.name, r.method, r.kept_columns.len(), m.num_cols());
        let path = cfg.out.join(&ds.name).join("selection.json");
        write(&path, r.to_json() + "\n")?;
        outputs.push(path);
    }
    write_manifest(cfg, "select", &outputs)
}

fn write_report(cfg: &RunConfig, stem: &str, report: &EvalReport, extra_md: &str) -> Result<Vec<PathBuf>> {
    let json_path = cfg.out.join(format!("{stem}.json"));
    let csv_path = cfg.out.join(format!("{stem}.csv"));
    let md_path = cfg.out.join(format!("{stem}.md"));
    write(&json_path, report.to_json())?;
    write(&csv_path, report.to_csv())?;
    write(&md_path, format!("{extra_md}{}", report.to_markdown()))?;
    Ok(vec![json_path, csv_path, md_path])
}

fn cmd_cv(cfg: &RunConfig) -> Result<()> {
    require_datasets(cfg)?;
    let mut report = EvalReport::new(cfg.hash());
    let mut outputs = Vec::new();
    for dir in &cfg.datasets {
        let ds = load(cfg, dir)?;
        let (m, files) = features_for(cfg, &ds)?;
        outputs.extend(files);
        eprintln!("{}: cross-validating {}", ds.name, cfg.pipeline.label());
        let run = eval::run_cv(&ds.name, &m, &cfg.pipeline, &cfg.cv)?;
        println!(
            "{}: {} P={:.4} R={:.4} F={:.4} over {} trials",
            ds.name,
            run.label,
            run.mean.precision,
            run.mean.recall,
            run.mean.fscore,
            run.trials.len()
        );
        report.runs.push(run);
    }
    outputs.extend(write_report(cfg, "report", &report, "")?);
    write_manifest(cfg, "cv", &outputs)
}

fn cmd_compare(cfg: &RunConfig) -> Result<()> {
    require_datasets(cfg)?;
    let path = cfg.out.join("report.json");
    let text = fs::read_to_string(&path).map_err(|_| {
        Error::Data(format!(
            "no cross-validation results at {}; run `tracelink cv` with the same --out first",
            path.display()
        ))
    })?;
    let prior = EvalReport::from_json(&text)?;
    if prior.config_hash != cfg.hash() {
        return Err(Error::Data(format!(
            "{} was produced with a different configuration (hash {}); rerun `tracelink cv`",
            path.display(),
            prior.config_hash
        )));
    }
    let mut report = EvalReport::new(cfg.hash());
    for dir in &cfg.datasets {
        let ds = load(cfg, dir)?;
        let run = prior
            .runs
            .iter()
            .find(|r| r.dataset == ds.name)
            .ok_or_else(|| Error::Data(format!("{} has no cross-validation run in {}", ds.name, path.display())))?;
        let k = run.cut_point().max(1);
        let indexes = DatasetIndexes::build(&ds, &cfg.features.models)?;
        let rankings: Vec<PooledRanking> = Model::ALL.iter().map(|&m| PooledRanking::build(&ds, &indexes, m)).collect();
        report.baselines.extend(rankings.iter().map(|r| ir_baseline_at_k(r, k)));
        let best = best_ir(&rankings, k).expect("seven models");
        let c = eval::compare(run, &best)?;
        println!(
            "{}: TRAIL F={:.4} vs {} F@{}={:.4}{}",
            ds.name,
            c.trail.fscore,
            best.model,
            k,
            best.prf.fscore,
            if c.metrics.iter().any(|m| m.metric == "fscore" && m.star) { " *" } else { "" }
        );
        report.runs.push(run.clone());
        report.comparisons.push(c);
    }
    let outputs = write_report(cfg, "compare", &report, "")?;
    write_manifest(cfg, "compare", &outputs)
}

fn parse_list<T: std::str::FromStr<Err = Error>>(items: &[String], all: &[T]) -> Result<Vec<T>>
where
    T: Copy,
{
    if items.is_empty() {
        return Ok(all.to_vec());
    }
    items.iter().map(|s| s.trim().parse()).collect()
}

fn cmd_grid(cfg: &RunConfig, rebalancers: &[String], selections: &[String], classifiers: &[String]) -> Result<()> {
    require_datasets(cfg)?;
    let rebalancers = parse_list(rebalancers, &RebalanceMethod::ALL)?;
    let selections = parse_list(selections, &SelectionMethod::ALL)?;
    let classifiers = parse_list(classifiers, &Algorithm::ALL)?;
    let mut report = EvalReport::new(cfg.hash());
    let mut outputs = Vec::new();
    for dir in &cfg.datasets {
        let ds = load(cfg, dir)?;
        let (m, files) = features_for(cfg, &ds)?;
        outputs.extend(files);
        let mut runs = Vec::new();
        for &rebalance in &rebalancers {
            for &selection in &selections {
                for &classifier in &classifiers {
                    let pipeline = PipelineConfig {
                        rebalance,
                        selection,
                        classifier,
                        ..cfg.pipeline
                    };
                    eprintln!("{}: {}", ds.name, pipeline.label());
                    runs.push(eval::run_cv(&ds.name, &m, &pipeline, &cfg.cv)?);
                }
            }
        }
        let ranked = eval::rank_configs(&runs)?;
        if let Some(best) = ranked.first() {
            println!("{}: best {} F={:.4}", ds.name, best.label, best.mean_fscore);
        }
        report.rankings.insert(ds.name.clone(), ranked);
        report.runs.extend(runs);
    }
    let table = format!("## Mean F (%) by configuration\n\n{}\n", eval::grid_markdown(&report.runs));
    outputs.extend(write_report(cfg, "grid", &report, &table)?);
    write_manifest(cfg, "grid", &outputs)
}

fn cmd_report(input: &Path, format: Format, output: Option<&Path>) -> Result<()> {
    let text = fs::read_to_string(input).map_err(|e| Error::io(input, e))?;
    let report = EvalReport::from_json(&text)?;
    let rendered = match format {
        Format::Markdown => {
            let grid = if report.rankings.is_empty() {
                String::new()
            } else {
                format!("## Mean F (%) by configuration\n\n{}\n", eval::grid_markdown(&report.runs))
            };
            grid + &report.to_markdown()
        }
        Format::Csv => report.to_csv(),
        Format::Json => report.to_json(),
    };
    match output {
        Some(p) => write(p, rendered),
        None => {
            print!("{rendered}");
            Ok(())
        }
    }
}
