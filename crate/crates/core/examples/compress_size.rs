//! Prunes ASC-8 at several ratios and prints the int8/binary16 storage size,
//! then the per-tensor table at the default ratio.

use bcresnet_asc::compress::{prune, SizeReport};
use bcresnet_asc::model::{Model, ModelConfig};

fn main() -> bcresnet_asc::Result<()> {
    let dense = Model::new(ModelConfig::asc8(), 0)?;
    println!("float32: {:.1} KiB", SizeReport::float32(&dense).kib());
    for ratio in [0.0, 0.5, 0.8, 0.89, 0.95] {
        let mut m = dense.clone();
        prune(&mut m, ratio)?;
        let s = SizeReport::compressed(&m);
        println!("ratio {ratio:<5} {:>7.1} KiB  conv nonzero {:>6}  other {:>5}", s.kib(), s.conv_nonzero, s.other);
    }
    let mut m = dense;
    prune(&mut m, 0.89)?;
    println!("{}", SizeReport::compressed(&m));
    Ok(())
}
