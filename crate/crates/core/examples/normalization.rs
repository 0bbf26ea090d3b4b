//! Applies a per-frequency device gain and offset to a feature map and shows
//! how FreqIN removes it while ResNorm keeps a scaled copy of the input.

use bcresnet_asc::norm::{freq_in, res_norm, ResNorm};
use bcresnet_asc::tensor::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn max_diff(a: &Tensor, b: &Tensor) -> f32 {
    a.data().iter().zip(b.data()).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn main() -> bcresnet_asc::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let (f, t) = (32, 50);
    let x = Tensor::from_fn(vec![1, 1, f, t], |_| rng.random_range(-1.0..1.0));
    let gain: Vec<f32> = (0..f).map(|i| 0.5 + 1.5 * i as f32 / f as f32).collect();
    let offset: Vec<f32> = (0..f).map(|i| (i as f32 * 0.3).sin() * 3.0).collect();
    let device = Tensor::from_fn(vec![1, 1, f, t], |i| gain[i / t] * x.data()[i] + offset[i / t]);

    println!("max difference between the two devices");
    println!("{:<22}{:.3}", "input", max_diff(&x, &device));
    let eps = 1e-5;
    println!("{:<22}{:.2e}", "FreqIN", max_diff(&freq_in(&x, eps)?, &freq_in(&device, eps)?));
    for lambda in [0.1, 0.5, 1.0] {
        let layer = ResNorm::new(lambda, eps)?;
        println!("{:<22}{:.3}", format!("ResNorm lambda {lambda}"), max_diff(&res_norm(&x, &layer)?, &res_norm(&device, &layer)?));
    }
    Ok(())
}
