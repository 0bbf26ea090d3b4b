use std::fmt;

use serde_json::{Map, Value};

use crate::data::{Dataset, Device, Split};
use crate::error::{Error, Result};
use crate::model::{Model, Precision};

pub const EVAL_BATCH: usize = 128;

/// Top-1 hit counts per device.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EvalReport {
    pub correct: [usize; 9],
    pub total: [usize; 9],
}

impl EvalReport {
    pub fn record(&mut self, device: Device, hit: bool) {
        self.total[device.index()] += 1;
        self.correct[device.index()] += hit as usize;
    }

    /// Percent, `None` for devices without examples.
    pub fn accuracy(&self, d: Device) -> Option<f64> {
        let i = d.index();
        (self.total[i] > 0).then(|| 100.0 * self.correct[i] as f64 / self.total[i] as f64)
    }

    /// Mean over examples.
    pub fn overall(&self) -> f64 {
        let t: usize = self.total.iter().sum();
        if t == 0 {
            return 0.0;
        }
        100.0 * self.correct.iter().sum::<usize>() as f64 / t as f64
    }

    /// Pooled accuracy over the given devices.
    pub fn pooled(&self, devices: &[Device]) -> Option<f64> {
        let (c, t) = devices.iter().fold((0, 0), |(c, t), d| (c + self.correct[d.index()], t + self.total[d.index()]));
        (t > 0).then(|| 100.0 * c as f64 / t as f64)
    }

    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        for d in Device::ALL {
            m.insert(d.token().into(), self.accuracy(d).map_or(Value::Null, Value::from));
        }
        m.insert("Overall".into(), Value::from(self.overall()));
        Value::Object(m)
    }
}

pub fn header_row() -> String {
    let mut s = String::new();
    for d in Device::ALL {
        s.push_str(&format!("{:>7}", d.token()));
    }
    s.push_str(&format!("{:>9}", "Overall"));
    s
}

impl fmt::Display for EvalReport {
    /// One row, columns A, B, C, S1..S6, Overall.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in Device::ALL {
            match self.accuracy(d) {
                Some(a) => write!(f, "{a:>7.1}")?,
                None => write!(f, "{:>7}", "-")?,
            }
        }
        write!(f, "{:>9.1}", self.overall())
    }
}

pub fn evaluate(model: &Model, ds: &Dataset, split: Split) -> Result<EvalReport> {
    evaluate_with(model, ds, split, Precision::Float)
}

/// Eval-mode top-1 accuracy over one split. Refuses empty splits.
pub fn evaluate_with(model: &Model, ds: &Dataset, split: Split, precision: Precision) -> Result<EvalReport> {
    let idx = ds.indices(split);
    if idx.is_empty() {
        return Err(Error::Arg(format!("nothing to evaluate: {} split is empty", split.as_str())));
    }
    let k = model.config().num_classes;
    let mut report = EvalReport::default();
    for chunk in idx.chunks(EVAL_BATCH) {
        let logits = model.predict_with(&ds.batch(chunk), precision)?;
        for (row, &i) in chunk.iter().enumerate() {
            let ex = &ds.examples[i];
            report.record(ex.device, argmax(&logits.data()[row * k..(row + 1) * k]) == ex.class);
        }
    }
    Ok(report)
}

/// First index of the maximum.
pub fn argmax<T: PartialOrd>(v: &[T]) -> usize {
    v.iter().enumerate().fold(0, |best, (i, x)| if *x > v[best] { i } else { best })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_correct_single_device() {
        let mut r = EvalReport::default();
        for i in 0..10 {
            r.record(Device::S2, i % 2 == 0);
        }
        assert_eq!(r.accuracy(Device::S2), Some(50.0));
        assert_eq!(r.accuracy(Device::A), None);
        assert_eq!(r.overall(), 50.0);
    }

    #[test]
    fn column_order() {
        let h = header_row();
        let cols: Vec<&str> = h.split_whitespace().collect();
        assert_eq!(cols, ["A", "B", "C", "S1", "S2", "S3", "S4", "S5", "S6", "Overall"]);
        let mut r = EvalReport::default();
        Device::ALL.iter().for_each(|&d| r.record(d, true));
        assert_eq!(r.to_string().split_whitespace().filter(|c| *c == "100.0").count(), 10);
    }

    #[test]
    fn argmax_first_of_ties() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0, -1.0]), 1);
    }
}
