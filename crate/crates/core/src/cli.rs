//! The `bcasc` command line.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::compress::{compress_pipeline, SizeReport};
use crate::config::ExperimentConfig;
use crate::data::{load_manifest, Dataset, Device, Split, SyntheticConfig, SyntheticGenerator};
use crate::error::{Error, Result};
use crate::frontend::{write_feature_cache, CachedFeature, MelConfig};
use crate::io::{write_atomic, write_text_atomic};
use crate::model::{count_params, load_checkpoint, receptive_field, save_checkpoint, Checkpoint, ForwardOptions, Model, PoolExtent};
use crate::norm::{export_domain_stats, write_stats_tsv};
use crate::train::{evaluate, header_row, metrics_jsonl, train, EvalReport, TrainOptions};

/// Overrides where extracted audio features are cached.
pub const CACHE_DIR_ENV: &str = "BCASC_CACHE_DIR";

#[derive(Debug, Parser)]
#[command(name = "bcasc", version, about = "Residual-normalized BC-ResNet scene classifier experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train one model per seed and summarize mean and spread per device.
    Train(TrainArgs),
    /// Per-device accuracy of a checkpoint.
    Evaluate(EvalArgs),
    /// Prune, quantization-aware fine-tune and store int8/binary16.
    Compress(CompressArgs),
    /// Parameter table, receptive field and stage shapes.
    Inspect(InspectArgs),
    /// Render the synthetic device-shift dataset to a feature cache.
    GenerateData(DataArgs),
    /// Per-example frequency-wise and channel-wise statistics.
    ExportStats(ExportArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Flat key = value experiment configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Real-data manifest (tab-separated path, scene, device, split).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: Common,
    /// Comma-separated seeds, one run each.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub seeds: Vec<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Seed of the synthetic dataset.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write the report as JSON here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompressArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Full-precision teacher for distillation.
    #[arg(long)]
    pub teacher: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    /// Checkpoint to inspect; without it a fresh model is built from the config.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Input size used for the stage shape listing, as FxT.
    #[arg(long, default_value = "256x330")]
    pub input: String,
    /// Directory for inspect.txt and inspect.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(a) => cmd_train(&a),
        Command::Evaluate(a) => cmd_evaluate(&a),
        Command::Compress(a) => cmd_compress(&a),
        Command::Inspect(a) => cmd_inspect(&a),
        Command::GenerateData(a) => cmd_generate(&a),
        Command::ExportStats(a) => cmd_export(&a),
    }
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig> {
    path.map_or_else(|| Ok(ExperimentConfig::default()), ExperimentConfig::load)
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Synthetic data for `seed`, or the manifest when one is configured.
pub fn load_dataset(cfg: &ExperimentConfig, manifest: Option<&Path>, seed: u64) -> Result<Dataset> {
    match manifest.or(cfg.manifest.as_deref()) {
        Some(m) => {
            let cache = std::env::var_os(CACHE_DIR_ENV)
                .map(PathBuf::from)
                .unwrap_or_else(|| m.parent().unwrap_or(Path::new(".")).join(".bcasc-cache"));
            Ok(load_manifest(m, Some(&cache), &MelConfig::default())?.0)
        }
        None => Ok(SyntheticGenerator::new(SyntheticConfig { seed, ..cfg.synthetic.clone() })?.generate()),
    }
}

/// Mean and population standard deviation.
pub fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len().max(1) as f64;
    let mean = v.iter().sum::<f64>() / n;
    (mean, (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt())
}

/// One "mean ± std" cell per device column plus Overall.
pub fn summary_table(reports: &[EvalReport]) -> String {
    let mut s = String::new();
    let cols: Vec<(String, Vec<f64>)> = Device::ALL
        .iter()
        .map(|&d| (d.token().to_string(), reports.iter().filter_map(|r| r.accuracy(d)).collect()))
        .chain(std::iter::once(("Overall".to_string(), reports.iter().map(EvalReport::overall).collect())))
        .collect();
    for (name, vals) in cols {
        if vals.is_empty() {
            writeln!(s, "{name:<8} -").expect("string write");
        } else {
            let (m, sd) = mean_std(&vals);
            writeln!(s, "{name:<8} {m:.1} ± {sd:.1}").expect("string write");
        }
    }
    s
}

fn cmd_train(a: &TrainArgs) -> Result<()> {
    if a.seeds.is_empty() {
        return Err(Error::Config("at least one seed is required".into()));
    }
    let cfg = load_config(a.common.config.as_deref())?;
    create_dir(&a.out)?;
    write_text_atomic(&a.out.join("config.txt"), &cfg.to_text())?;
    let mut reports = Vec::new();
    let mut per_seed = Vec::new();
    for &seed in &a.seeds {
        let ds = load_dataset(&cfg, a.common.manifest.as_deref(), seed)?;
        let model = Model::new(cfg.model.clone(), seed)?;
        let out = train(model, &ds, &cfg.train, &cfg.augment, TrainOptions::default(), seed)?;
        let dir = a.out.join(format!("seed-{seed}"));
        create_dir(&dir)?;
        save_checkpoint(&dir.join("final.bcra"), &Checkpoint::full_precision(&out.model))?;
        save_checkpoint(&dir.join("best.bcra"), &Checkpoint::full_precision(&out.best))?;
        write_text_atomic(&dir.join("metrics.jsonl"), &metrics_jsonl(&out.metrics))?;
        let report = out.best_report().cloned().unwrap_or_default();
        let text = format!("{:<6}{}\n{:<6}{report}\nbest epoch {:?}\n", "", header_row(), seed, out.best_epoch);
        write_text_atomic(&dir.join("report.txt"), &text)?;
        println!("seed {seed}: best epoch {:?}\n{}\n{report}", out.best_epoch, header_row());
        per_seed.push(json!({ "seed": seed, "best_epoch": out.best_epoch, "accuracy": report.to_json() }));
        reports.push(report);
    }
    let summary = summary_table(&reports);
    println!("mean ± std over {} seed(s)\n{summary}", reports.len());
    write_text_atomic(&a.out.join("summary.txt"), &summary)?;
    write_text_atomic(&a.out.join("summary.json"), &serde_json::to_string_pretty(&json!({ "runs": per_seed })).expect("json"))
}

fn cmd_evaluate(a: &EvalArgs) -> Result<()> {
    let cfg = load_config(a.common.config.as_deref())?;
    let model = load_checkpoint(&a.checkpoint)?;
    let ds = load_dataset(&cfg, a.common.manifest.as_deref(), a.seed)?;
    let report = evaluate(&model, &ds, Split::Test)?;
    println!("{}\n{report}", header_row());
    if let Some(out) = &a.out {
        write_text_atomic(out, &serde_json::to_string_pretty(&report.to_json()).expect("json"))?;
    }
    Ok(())
}

fn cmd_compress(a: &CompressArgs) -> Result<()> {
    let cfg = load_config(a.common.config.as_deref())?;
    let model = load_checkpoint(&a.checkpoint)?;
    if model.config() != &cfg.model {
        return Err(Error::Config(format!("checkpoint {} was built with a different model configuration than the config file", a.checkpoint.display())));
    }
    let teacher = a.teacher.as_deref().map(load_checkpoint).transpose()?;
    let ds = load_dataset(&cfg, a.common.manifest.as_deref(), a.seed)?;
    let cc = cfg.compress_config();
    let out = compress_pipeline(&model, &ds, &cc, &cfg.augment, teacher.as_ref(), a.seed)?;
    create_dir(&a.out)?;
    save_checkpoint(&a.out.join("compressed.bcra"), &out.checkpoint)?;
    let row = compress_row(model.config().base_channels, cc.finetune.kd.is_some(), cc.ratio, out.report.overall());
    let text = format!("{row}\n{}\n", out.size);
    write_text_atomic(&a.out.join("size.txt"), &text)?;
    println!("{text}");
    Ok(())
}

/// `Method | Bitwidth | KD | Pruning | Accuracy` header and one row.
pub fn compress_row(base_channels: usize, kd: bool, ratio: f64, accuracy: f64) -> String {
    format!(
        "{:<12} {:>8} {:>4} {:>8} {:>9}\n{:<12} {:>8} {:>4} {:>8} {:>9.1}",
        "Method",
        "Bitwidth",
        "KD",
        "Pruning",
        "Accuracy",
        format!("c={base_channels}"),
        "8/16",
        if kd { "yes" } else { "no" },
        format!("{ratio:.2}"),
        accuracy
    )
}

fn parse_input(s: &str) -> Result<(usize, usize)> {
    let (f, t) = s.split_once('x').ok_or_else(|| Error::Arg(format!("input size {s:?} must look like 256x330")))?;
    let p = |v: &str| v.parse::<usize>().map_err(|_| Error::Arg(format!("input size {s:?} must look like 256x330")));
    Ok((p(f)?, p(t)?))
}

pub struct Inspection {
    pub text: String,
    pub json: serde_json::Value,
}

/// Parameter table, totals, receptive field and stage shapes.
pub fn inspect(model: &Model, freq: usize, time: usize) -> Result<Inspection> {
    let counts = count_params(model);
    let (rf_f, rf_t) = receptive_field(&model.rf_layers(), PoolExtent::Ignore);
    let x = crate::tensor::Tensor::zeros(vec![1, 1, freq, time]);
    let f = model.forward(&x, &ForwardOptions::eval(), &mut <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(0))?;
    let mut t = String::new();
    writeln!(t, "{:<44} {:<12} {:>8}", "parameter", "kind", "count").expect("string write");
    for (name, kind, n) in &counts.rows {
        writeln!(t, "{name:<44} {:<12} {n:>8}", format!("{kind:?}")).expect("string write");
    }
    let total = counts.total();
    writeln!(t, "#Param {total} ({:.1}k): conv {} other {}", total as f64 / 1000.0, counts.conv, counts.other).expect("string write");
    writeln!(t, "RF {rf_f}x{rf_t}").expect("string write");
    for (name, shape) in &f.shapes {
        writeln!(t, "{name:<12} {shape:?}").expect("string write");
    }
    let fp = SizeReport::float32(model);
    let q = SizeReport::compressed(model);
    writeln!(t, "size float32 {:.2} KiB, int8/binary16 {:.2} KiB", fp.kib(), q.kib()).expect("string write");
    let json = json!({
        "params": { "total": total, "conv": counts.conv, "other": counts.other,
            "rows": counts.rows.iter().map(|(n, k, c)| json!({ "name": n, "kind": format!("{k:?}"), "count": c })).collect::<Vec<_>>() },
        "receptive_field": [rf_f, rf_t],
        "shapes": f.shapes.iter().map(|(n, s)| json!({ "name": n, "shape": s })).collect::<Vec<_>>(),
        "size_kib": { "float32": fp.kib(), "compressed": q.kib() },
    });
    Ok(Inspection { text: t, json })
}

fn cmd_inspect(a: &InspectArgs) -> Result<()> {
    let model = match &a.checkpoint {
        Some(p) => load_checkpoint(p)?,
        None => Model::new(load_config(a.config.as_deref())?.model, 0)?,
    };
    let (freq, time) = parse_input(&a.input)?;
    let ins = inspect(&model, freq, time)?;
    print!("{}", ins.text);
    if let Some(out) = &a.out {
        create_dir(out)?;
        write_text_atomic(&out.join("inspect.txt"), &ins.text)?;
        write_text_atomic(&out.join("inspect.json"), &serde_json::to_string_pretty(&ins.json).expect("json"))?;
    }
    Ok(())
}

fn cmd_generate(a: &DataArgs) -> Result<()> {
    let cfg = load_config(a.config.as_deref())?;
    let ds = SyntheticGenerator::new(SyntheticConfig { seed: a.seed, ..cfg.synthetic.clone() })?.generate();
    create_dir(&a.out)?;
    let records: Vec<CachedFeature> =
        ds.examples.iter().map(|e| CachedFeature { id: e.id.clone(), freq: ds.freq, time: ds.time, data: e.features.clone() }).collect();
    write_feature_cache(&a.out.join("features.bcaf"), &records)?;
    let mut labels = String::from("id\tscene\tdevice\tsplit\n");
    for e in &ds.examples {
        writeln!(labels, "{}\t{}\t{}\t{}", e.id, e.class, e.device.token(), e.split.as_str()).expect("string write");
    }
    write_text_atomic(&a.out.join("labels.tsv"), &labels)?;
    println!("{}", ds.split_report());
    Ok(())
}

fn cmd_export(a: &ExportArgs) -> Result<()> {
    let cfg = load_config(a.common.config.as_deref())?;
    let model = load_checkpoint(&a.checkpoint)?;
    let ds = load_dataset(&cfg, a.common.manifest.as_deref(), a.seed)?;
    let idx = ds.indices(Split::Test);
    if idx.is_empty() {
        return Err(Error::Arg("no test examples to export".into()));
    }
    let ids: Vec<String> = idx.iter().map(|&i| ds.examples[i].id.clone()).collect();
    let x = ds.batch(&idx);
    let f = model.forward(&x, &ForwardOptions::eval(), &mut <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(0))?;
    let (freq_stats, _) = export_domain_stats(&x)?;
    let stage1 = f.tap("stage1").ok_or_else(|| Error::Config("model has no stage1 output".into()))?;
    let (_, chan_stats) = export_domain_stats(stage1)?;
    create_dir(&a.out)?;
    let tsv = |name: &str, stats: &crate::tensor::Tensor<f32>| {
        let path = a.out.join(name);
        write_atomic(&path, |w| write_stats_tsv(w, &ids, stats).map_err(|e| Error::io(&path, e)))
    };
    tsv("freq_stats.tsv", &freq_stats)?;
    tsv("channel_stats.tsv", &chan_stats)?;
    let mut labels = String::from("id\tscene\tdevice\n");
    for &i in &idx {
        let e = &ds.examples[i];
        writeln!(labels, "{}\t{}\t{}", e.id, e.class, e.device.token()).expect("string write");
    }
    write_text_atomic(&a.out.join("labels.tsv"), &labels)?;
    println!("wrote statistics for {} examples to {}", idx.len(), a.out.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_seed_std_is_zero() {
        assert_eq!(mean_std(&[71.5]), (71.5, 0.0));
        let (m, s) = mean_std(&[1.0, 3.0]);
        assert_eq!((m, s), (2.0, 1.0));
    }

    #[test]
    fn summary_has_every_column() {
        let mut r = EvalReport::default();
        Device::ALL.iter().for_each(|&d| r.record(d, true));
        let s = summary_table(&[r.clone(), r]);
        assert_eq!(s.lines().count(), 10);
        assert!(s.lines().all(|l| l.ends_with("100.0 ± 0.0")));
    }

    #[test]
    fn compress_row_columns() {
        let r = compress_row(80, true, 0.89, 71.25);
        let header: Vec<&str> = r.lines().next().unwrap().split_whitespace().collect();
        assert_eq!(header, ["Method", "Bitwidth", "KD", "Pruning", "Accuracy"]);
        assert!(r.lines().nth(1).unwrap().contains("0.89"));
    }

    #[test]
    fn input_size_parse() {
        assert_eq!(parse_input("256x330").unwrap(), (256, 330));
        assert!(parse_input("256").is_err());
    }
}
