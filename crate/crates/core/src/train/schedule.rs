use super::TrainConfig;

/// Linear warmup from 0 to the peak over `warmup_epochs`, then cosine
/// annealing that reaches zero at `epochs * steps_per_epoch`.
pub fn lr_at(step: usize, steps_per_epoch: usize, cfg: &TrainConfig) -> f64 {
    let warm = (cfg.warmup_epochs * steps_per_epoch) as f64;
    let total = (cfg.epochs * steps_per_epoch) as f64;
    let s = step as f64;
    if s < warm {
        return cfg.peak_lr * s / warm;
    }
    let progress = ((s - warm) / (total - warm)).clamp(0.0, 1.0);
    cfg.peak_lr * 0.5 * (1.0 + (std::f64::consts::PI * progress).cos())
}
