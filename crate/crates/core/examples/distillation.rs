//! Trains a teacher, then compresses it twice (with and without
//! distillation) and compares accuracy and stored size.
//!
//! cargo run --release --example distillation -- [teacher epochs] [fine-tune epochs]

use bcresnet_asc::augment::AugmentConfig;
use bcresnet_asc::compress::{compress_pipeline, CompressConfig};
use bcresnet_asc::data::{SyntheticConfig, SyntheticGenerator};
use bcresnet_asc::model::{Model, ModelConfig};
use bcresnet_asc::train::{train, KdConfig, TrainConfig, TrainOptions};

fn main() -> bcresnet_asc::Result<()> {
    let mut args = std::env::args().skip(1).map(|s| s.parse().ok());
    let epochs = args.next().flatten().unwrap_or(20);
    let ft = args.next().flatten().unwrap_or(10);
    let ds = SyntheticGenerator::new(SyntheticConfig::default())?.generate();
    let aug = AugmentConfig::default();

    let cfg = TrainConfig { epochs, warmup_epochs: epochs / 20, eval_every: epochs, ..TrainConfig::default() };
    let teacher = train(Model::new(ModelConfig::asc1(), 0)?, &ds, &cfg, &aug, TrainOptions::default(), 0)?.model;
    println!("teacher accuracy {:.1}", bcresnet_asc::train::evaluate(&teacher, &ds, bcresnet_asc::data::Split::Test)?.overall());

    for kd in [None, Some(KdConfig::default())] {
        let finetune = TrainConfig { epochs: ft, warmup_epochs: 0, peak_lr: 0.05, eval_every: ft, kd, ..TrainConfig::default() };
        let out = compress_pipeline(&teacher, &ds, &CompressConfig { ratio: 0.89, finetune }, &aug, Some(&teacher), 0)?;
        let label = if kd.is_some() { "with KD" } else { "no KD" };
        println!("{label:<8} accuracy {:.1}, {:.2} KiB, {} of {} conv weights kept", out.report.overall(), out.size.kib(), out.state.kept(), out.state.total());
    }
    Ok(())
}
