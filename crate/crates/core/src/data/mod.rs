//! Labeled scene datasets: device tokens, splits, batching and the
//! device-by-split contingency report.

mod manifest;
mod synthetic;

use std::fmt;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub use manifest::{cache_path, load_manifest, parse_manifest, LoadStats, ManifestRow, SCENES};
pub use synthetic::{DeviceProfile, SyntheticConfig, SyntheticGenerator};

/// Recording devices: three real and six simulated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Device {
    A,
    B,
    C,
    S1,
    S2,
    S3,
    S4,
    S5,
    S6,
}

impl Device {
    pub const ALL: [Device; 9] = [Self::A, Self::B, Self::C, Self::S1, Self::S2, Self::S3, Self::S4, Self::S5, Self::S6];

    pub fn token(self) -> &'static str {
        ["A", "B", "C", "S1", "S2", "S3", "S4", "S5", "S6"][self.index()]
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|d| d.token().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Parse(format!("unknown device token {s:?}")))
    }

    /// Devices never seen during training in the standard split.
    pub fn unseen() -> [Device; 3] {
        [Self::S4, Self::S5, Self::S6]
    }
}

impl fmt::Display for Device {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "train" => Ok(Self::Train),
            "test" | "evaluate" | "eval" => Ok(Self::Test),
            other => Err(Error::Parse(format!("unknown split {other:?}"))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Train => "train",
            Self::Test => "test",
        }
    }
}

/// One log-mel feature map of shape `(F, T)` with its labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Example {
    pub id: String,
    pub class: usize,
    pub device: Device,
    pub split: Split,
    pub features: Vec<f32>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub freq: usize,
    pub time: usize,
    pub num_classes: usize,
    pub examples: Vec<Example>,
}

impl Dataset {
    pub fn new(freq: usize, time: usize, num_classes: usize) -> Self {
        Self { freq, time, num_classes, examples: Vec::new() }
    }

    pub fn push(&mut self, ex: Example) -> Result<()> {
        if ex.features.len() != self.freq * self.time {
            return Err(Error::dim("dataset", format!("{} has {} values, expected {}x{}", ex.id, ex.features.len(), self.freq, self.time)));
        }
        if ex.class >= self.num_classes {
            return Err(Error::Parse(format!("{}: class {} out of range", ex.id, ex.class)));
        }
        self.examples.push(ex);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn indices(&self, split: Split) -> Vec<usize> {
        (0..self.examples.len()).filter(|&i| self.examples[i].split == split).collect()
    }

    /// Stacks examples into `(n, 1, F, T)`.
    pub fn batch(&self, idx: &[usize]) -> Tensor<f32> {
        let plane = self.freq * self.time;
        let mut data = Vec::with_capacity(idx.len() * plane);
        for &i in idx {
            data.extend_from_slice(&self.examples[i].features);
        }
        Tensor::new(vec![idx.len(), 1, self.freq, self.time], data).expect("examples validated on push")
    }

    /// One-hot targets `(n, K)`.
    pub fn targets(&self, idx: &[usize]) -> Tensor<f32> {
        let k = self.num_classes;
        let mut t = Tensor::zeros(vec![idx.len(), k]);
        for (row, &i) in idx.iter().enumerate() {
            t.data_mut()[row * k + self.examples[i].class] = 1.0;
        }
        t
    }

    pub fn split_report(&self) -> SplitReport {
        let mut counts = [[0usize; 2]; 9];
        for e in &self.examples {
            counts[e.device.index()][(e.split == Split::Test) as usize] += 1;
        }
        SplitReport { counts }
    }
}

/// Device x split counts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitReport {
    /// `[train, test]` per device in [`Device::ALL`] order.
    pub counts: [[usize; 2]; 9],
}

impl SplitReport {
    pub fn train(&self, d: Device) -> usize {
        self.counts[d.index()][0]
    }

    pub fn test(&self, d: Device) -> usize {
        self.counts[d.index()][1]
    }

    /// Devices with no training examples.
    pub fn unseen(&self) -> Vec<Device> {
        Device::ALL.into_iter().filter(|&d| self.train(d) == 0).collect()
    }
}

impl fmt::Display for SplitReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<6} {:>6} {:>6}  seen", "device", "train", "test")?;
        for d in Device::ALL {
            writeln!(f, "{:<6} {:>6} {:>6}  {}", d.token(), self.train(d), self.test(d), if self.train(d) > 0 { "yes" } else { "no" })?;
        }
        let (tr, te): (usize, usize) = self.counts.iter().fold((0, 0), |a, c| (a.0 + c[0], a.1 + c[1]));
        write!(f, "{:<6} {tr:>6} {te:>6}", "total")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn device_tokens() {
        for d in Device::ALL {
            assert_eq!(Device::parse(d.token()).unwrap(), d);
        }
        assert!(matches!(Device::parse("S7"), Err(Error::Parse(_))));
    }

    #[test]
    fn balanced_test_report() {
        let mut ds = Dataset::new(1, 1, 10);
        for d in Device::ALL {
            for i in 0..330 {
                ds.push(Example { id: format!("{d}-{i}"), class: i % 10, device: d, split: Split::Test, features: vec![0.0] }).unwrap();
            }
        }
        let r = ds.split_report();
        assert!(Device::ALL.iter().all(|&d| r.test(d) == 330));
    }

    #[test]
    fn batch_layout() {
        let mut ds = Dataset::new(2, 2, 3);
        ds.push(Example { id: "a".into(), class: 2, device: Device::A, split: Split::Train, features: vec![1.0, 2.0, 3.0, 4.0] }).unwrap();
        ds.push(Example { id: "b".into(), class: 0, device: Device::B, split: Split::Train, features: vec![5.0; 4] }).unwrap();
        assert_eq!(ds.batch(&[1, 0]).shape(), &[2, 1, 2, 2]);
        assert_eq!(ds.targets(&[0, 1]).data(), &[0.0, 0.0, 1.0, 1.0, 0.0, 0.0]);
        assert!(ds.push(Example { id: "c".into(), class: 5, device: Device::A, split: Split::Train, features: vec![0.0; 4] }).is_err());
    }
}
