//! `nrn`: train, apply and explain neural reasoning networks on CSV data.

mod config;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use nrn_core::eval::{evaluate, EvalReport};
use nrn_core::model::Model;
use nrn_core::preprocess::{read_features, split_dataset, Dataset};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "nrn", version, about = "Neural reasoning networks for tabular classification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model on a labeled CSV and write model, epoch log and test report.
    Train(TrainArgs),
    /// Score every row of a CSV.
    Predict(PredictArgs),
    /// Explain one prediction or the model as a whole.
    Explain(ExplainArgs),
    /// Report AUC and explanation metrics on a labeled CSV.
    Evaluate(EvaluateArgs),
}

#[derive(Args)]
struct TrainArgs {
    /// Training CSV with a header row.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Name of the 0/1 label column.
    #[arg(long)]
    label: Option<String>,
    /// Flat TOML file of hyper-parameters.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override one configuration key, e.g. `--set delta=6`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Score file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExplainArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Zero-based row to explain.
    #[arg(long, conflicts_with = "global", required_unless_present = "global")]
    sample: Option<usize>,
    /// Explain both classes over all rows instead of one row.
    #[arg(long)]
    global: bool,
    /// Percentile of predictions (0 to 100) targeted by the positive view.
    #[arg(long, default_value_t = 75.0)]
    confidence_percentile: f64,
    /// Fraction of edges, by path weight, kept in global explanations.
    #[arg(long, default_value_t = 0.1)]
    weight_quantile: f64,
    /// Also write the explanation as JSON to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Label column; defaults to the one the model was trained on.
    #[arg(long)]
    label: Option<String>,
    /// Number of rows whose explanations are measured.
    #[arg(long, default_value_t = 100)]
    samples: usize,
    /// Seed for row sampling and permutations; defaults to the training seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(a) => train(a),
        Command::Predict(a) => predict(a),
        Command::Explain(a) => explain(a),
        Command::Evaluate(a) => evaluate_cmd(a),
    };
    if let Err(e) = result {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn load_model(path: &Path) -> Result<Model> {
    let text = fs::read_to_string(path).with_context(|| format!("reading model {}", path.display()))?;
    Model::load(&text).with_context(|| format!("loading model {}", path.display()))
}

fn features(model: &Model, path: &Path, label: Option<&str>) -> Result<ndarray::Array2<f64>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(read_features(file, model.feature_names(), label).with_context(|| format!("reading {}", path.display()))?)
}

/// Shortest decimal text with 17 significant digits, enough to recover
/// the exact value.
fn format_score(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let sci = format!("{v:.16e}");
    let exp: i32 = sci.rsplit_once('e').and_then(|(_, e)| e.parse().ok()).unwrap_or(0);
    let decimals = (16 - exp).max(0) as usize;
    format!("{v:.decimals$}")
}

#[derive(Serialize)]
struct TrainReport<'a> {
    label: &'a str,
    seed: u64,
    config_hash: &'a str,
    n_train: usize,
    n_val: usize,
    n_test: usize,
    best_epoch: usize,
    epochs_run: usize,
    best_val_auc: Option<f64>,
    train_seconds: f64,
    test: Option<EvalReport>,
}

fn train(a: TrainArgs) -> Result<()> {
    let mut overrides = Vec::new();
    for s in &a.overrides {
        overrides.push(config::parse_override(s)?);
    }
    if let Some(d) = &a.data {
        overrides.push(("data".into(), toml::Value::String(d.display().to_string())));
    }
    if let Some(l) = &a.label {
        overrides.push(("label".into(), toml::Value::String(l.clone())));
    }
    if let Some(s) = a.seed {
        let s = i64::try_from(s).context("seed must fit in a signed 64-bit integer")?;
        overrides.push(("seed".into(), toml::Value::Integer(s)));
    }
    if let Some(o) = &a.out {
        overrides.push(("out".into(), toml::Value::String(o.display().to_string())));
    }
    let cfg = config::load(a.config.as_deref(), &overrides)?;
    for w in cfg.range_warnings() {
        log::warn!("{w}");
    }
    let data_path = cfg.data.clone().context("no dataset given (use --data)")?;
    let label = cfg.label.clone().context("no label column given (use --label)")?;
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("nrn-out"));

    let data = Dataset::from_path(&data_path, &label).with_context(|| format!("reading {}", data_path.display()))?;
    let splits = split_dataset(data.n_samples(), cfg.seed);
    let (tr, va, te) = (data.select(&splits.train), data.select(&splits.val), data.select(&splits.test));
    let val = va.has_both_classes().then_some(&va);
    if val.is_none() {
        log::warn!("validation split lacks one class; early stopping follows the training loss");
    }

    let started = Instant::now();
    let fit = Model::fit(&tr, val, &cfg.model_config(), cfg.seed, &label).context("training failed")?;
    let train_seconds = started.elapsed().as_secs_f64();
    let mut model = fit.model;
    let hash = cfg.hash();
    model.metadata.config_hash = hash.clone();

    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    fs::write(out.join("model.json"), model.save())?;
    let mut log = BufWriter::new(File::create(out.join("history.jsonl"))?);
    for rec in &fit.history {
        writeln!(log, "{}", serde_json::to_string(rec)?)?;
    }
    log.flush()?;

    let test = if te.has_both_classes() {
        Some(evaluate(&model, &te, 100, cfg.seed)?)
    } else {
        log::warn!("test split lacks one class; no test report");
        None
    };
    let report = TrainReport {
        label: &label,
        seed: cfg.seed,
        config_hash: &hash,
        n_train: tr.n_samples(),
        n_val: va.n_samples(),
        n_test: te.n_samples(),
        best_epoch: model.metadata.best_epoch,
        epochs_run: model.metadata.epochs_run,
        best_val_auc: model.metadata.best_val_auc,
        train_seconds,
        test,
    };
    fs::write(out.join("report.json"), serde_json::to_string_pretty(&report)?)?;
    let text = report_text(&report);
    fs::write(out.join("report.txt"), &text)?;
    print!("{text}");
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}"))
}

fn report_text(r: &TrainReport<'_>) -> String {
    let mut s = format!(
        "rows: {} train, {} validation, {} test\nepochs: {} (best {})\nbest validation AUC: {}\ntraining time: {:.2} s\n",
        r.n_train,
        r.n_val,
        r.n_test,
        r.epochs_run,
        r.best_epoch,
        opt(r.best_val_auc),
        r.train_seconds
    );
    if let Some(t) = &r.test {
        s += &eval_text(t);
    }
    s
}

fn eval_text(t: &EvalReport) -> String {
    format!(
        "test AUC: {:.4}\nexplanation size: {:.2}\nsingle deletion: spearman {}, pearson {}\nparameters: {:.3}K\n",
        t.auc,
        t.explanation_size,
        opt(t.sd_spearman),
        opt(t.sd_pearson),
        t.parameter_count_k
    )
}

fn predict(a: PredictArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let x = features(&model, &a.data, Some(&model.metadata.label))?;
    let scores = model.predict(x.view())?;
    let mut text = String::with_capacity(scores.len() * 20);
    for s in scores {
        text += &format_score(s);
        text.push('\n');
    }
    match &a.out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn explain(a: ExplainArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let x = features(&model, &a.data, Some(&model.metadata.label))?;
    let json = if a.global {
        let g = model.global_explanation(x.view(), a.confidence_percentile, a.weight_quantile)?;
        println!("positive class (output >= {}): {}", format_score(g.positive_target), g.positive);
        println!("negative class (output <= {}): {}", format_score(g.negative_target), g.negative);
        serde_json::to_string_pretty(&g)?
    } else {
        let i = a.sample.expect("clap enforces --sample or --global");
        if i >= x.nrows() {
            bail!("sample index {i} is out of range for {} rows", x.nrows());
        }
        let e = model.explain(x.row(i))?;
        let text = if e.rules.is_empty() { "AND()".to_string() } else { e.to_string() };
        println!("{text}");
        println!("confidence: {}", format_score(e.confidence));
        serde_json::to_string_pretty(&e)?
    };
    if let Some(p) = &a.out {
        fs::write(p, json).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

fn evaluate_cmd(a: EvaluateArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let label = a.label.unwrap_or_else(|| model.metadata.label.clone());
    let labels = Dataset::from_path(&a.data, &label).with_context(|| format!("reading {}", a.data.display()))?.labels;
    // Rebind by name so column order in the file does not matter.
    let x = features(&model, &a.data, Some(&label))?;
    let data = Dataset::new(model.feature_names().to_vec(), x, labels)?;
    report_eval(&model, &data, a.samples, a.seed, a.out.as_deref())
}

fn report_eval(model: &Model, data: &Dataset, k: usize, seed: Option<u64>, out: Option<&Path>) -> Result<()> {
    let report = evaluate(model, data, k, seed.unwrap_or(model.metadata.seed))?;
    let json = serde_json::to_string_pretty(&report)?;
    println!("{json}");
    eprint!("{}", eval_text(&report));
    if let Some(p) = out {
        fs::write(p, json).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::format_score;

    #[test]
    fn scores_use_17_significant_digits() {
        assert_eq!(format_score(0.5), "0.50000000000000000");
        assert_eq!(format_score(1.0), "1.0000000000000000");
        assert_eq!(format_score(0.0), "0");
        assert_eq!(format_score(0.012345), "0.012345000000000000");
        for v in [0.1, 1.0 / 3.0, 0.9999999999999999, 1e-7, 0.7234987234] {
            assert_eq!(format_score(v).parse::<f64>().unwrap(), v);
        }
    }
}
