//! Trains ASC-1 with ResNorm, with FreqIN only (lambda 0) and without
//! input normalization on the synthetic device-shift data, then prints the
//! per-device accuracy table of each.
//!
//! cargo run --release --example device_shift -- [epochs] [seed]

use std::time::Instant;

use bcresnet_asc::augment::AugmentConfig;
use bcresnet_asc::data::{Device, SyntheticConfig, SyntheticGenerator};
use bcresnet_asc::model::{Model, ModelConfig, NormPlacement};
use bcresnet_asc::train::{header_row, train, TrainConfig, TrainOptions};

fn main() -> bcresnet_asc::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let epochs = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let seed: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(0);

    let ds = SyntheticGenerator::new(SyntheticConfig { seed, ..SyntheticConfig::default() })?.generate();
    println!("{}", ds.split_report());

    let variants = [
        ("ResNorm", ModelConfig::asc1()),
        ("FreqIN", ModelConfig { resnorm_lambda: 0.0, ..ModelConfig::asc1() }),
        ("no norm", ModelConfig { placement: NormPlacement::None, ..ModelConfig::asc1() }),
    ];
    let cfg = TrainConfig { epochs, warmup_epochs: epochs / 20, eval_every: epochs, ..TrainConfig::default() };
    println!("{:<10}{}{:>9}", "", header_row(), "unseen");
    for (name, mc) in variants {
        let start = Instant::now();
        let out = train(Model::new(mc, seed)?, &ds, &cfg, &AugmentConfig::default(), TrainOptions::default(), seed)?;
        let r = out.final_report().expect("last epoch is evaluated");
        let unseen = r.pooled(&Device::unseen()).unwrap_or(0.0);
        println!("{name:<10}{r}{unseen:>9.1}   ({:.0}s)", start.elapsed().as_secs_f64());
    }
    Ok(())
}
