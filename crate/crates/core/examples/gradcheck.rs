//! Checks tape gradients against finite differences for a depthwise conv and
//! for a whole block of a freshly initialized model.

use bcresnet_asc::model::{ForwardOptions, Model, ModelConfig};
use bcresnet_asc::tensor::gradcheck::{gradcheck_with, GradCheck};
use bcresnet_asc::tensor::{ConvSpec, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> bcresnet_asc::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut random = |shape: Vec<usize>| Tensor::<f64>::from_fn(shape, |_| rng.random_range(-1.0..1.0));

    let inputs = [random(vec![2, 4, 6, 5]), random(vec![4, 1, 3, 1])];
    let err = gradcheck_with(|g, v| g.conv2d(v[0], v[1], None, ConvSpec::new((1, 1), (1, 0), 4)), &inputs, GradCheck::default())?;
    println!("depthwise 3x1 conv: max relative error {err:.2e}");

    let model: Model<f64> = Model::new(ModelConfig::asc1(), 0)?.cast();
    let x = random(vec![3, 10, 8, 6]);
    let weights = random(vec![3, 10, 8, 6]);
    let err = gradcheck_with(
        |g, v| {
            let opts = ForwardOptions { training: true, ..ForwardOptions::eval() };
            let y = model.block_forward(g, v[0], 0, 1, &opts, &mut ChaCha8Rng::seed_from_u64(1))?;
            let w = g.constant(weights.clone());
            g.mul(y, w)
        },
        &[x],
        GradCheck::default(),
    )?;
    println!("stage 1 block 2:    max relative error {err:.2e}");
    Ok(())
}
