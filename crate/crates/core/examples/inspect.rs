//! Parameter table, receptive field and per-stage shapes of ASC-1 and ASC-8.

use bcresnet_asc::cli::inspect;
use bcresnet_asc::model::{receptive_field, Model, ModelConfig, PoolExtent};

fn main() -> bcresnet_asc::Result<()> {
    for (name, cfg) in [("ASC-1", ModelConfig::asc1()), ("ASC-8", ModelConfig::asc8())] {
        let model = Model::new(cfg, 0)?;
        println!("== {name}");
        println!("{}", inspect(&model, 256, 330)?.text);
        println!("receptive field with pool windows counted: {:?}\n", receptive_field(&model.rf_layers(), PoolExtent::Include));
    }
    Ok(())
}
