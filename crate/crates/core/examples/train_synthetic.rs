//! Trains ASC-1 on the synthetic device-shift data and prints per-device
//! test accuracy after every few epochs.
//!
//! cargo run --release --example train_synthetic -- [epochs]

use bcresnet_asc::augment::AugmentConfig;
use bcresnet_asc::data::{SyntheticConfig, SyntheticGenerator};
use bcresnet_asc::model::{Model, ModelConfig};
use bcresnet_asc::train::{header_row, train, TrainConfig, TrainOptions};

fn main() -> bcresnet_asc::Result<()> {
    let epochs = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(10);
    let ds = SyntheticGenerator::new(SyntheticConfig::default())?.generate();
    let cfg = TrainConfig { epochs, warmup_epochs: 1, eval_every: 2, ..TrainConfig::default() };
    let out = train(Model::new(ModelConfig::asc1(), 0)?, &ds, &cfg, &AugmentConfig::default(), TrainOptions::default(), 0)?;
    println!("{:<7}{:>8}{:>8} {}", "epoch", "lr", "loss", header_row());
    for m in &out.metrics {
        match &m.test {
            Some(r) => println!("{:<7}{:>8.4}{:>8.3} {r}", m.epoch, m.lr, m.train_loss),
            None => println!("{:<7}{:>8.4}{:>8.3}", m.epoch, m.lr, m.train_loss),
        }
    }
    println!("best epoch {:?}", out.best_epoch);
    Ok(())
}
