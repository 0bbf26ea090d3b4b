use crate::error::{Error, Result};
use crate::norm::{DEFAULT_EPS, DEFAULT_LAMBDA, DEFAULT_MOMENTUM};

/// Where residual normalization layers are inserted.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormPlacement {
    /// Input plus the end of each of the four stages.
    All,
    /// Input only.
    InputOnly,
    /// No instance normalization anywhere.
    None,
}

impl NormPlacement {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::All => "all",
            Self::InputOnly => "input",
            Self::None => "none",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(Self::All),
            "input" => Ok(Self::InputOnly),
            "none" => Ok(Self::None),
            _ => Err(Error::Config(format!("unknown norm placement {s:?} (expected all, input or none)"))),
        }
    }

    pub(crate) fn tag(self) -> u8 {
        match self {
            Self::All => 0,
            Self::InputOnly => 1,
            Self::None => 2,
        }
    }

    pub(crate) fn from_tag(t: u8) -> Option<Self> {
        [Self::All, Self::InputOnly, Self::None].into_iter().find(|p| p.tag() == t)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    pub base_channels: usize,
    pub num_classes: usize,
    pub dropout: f64,
    pub ssn_sub_bands: usize,
    pub resnorm_lambda: f64,
    pub resnorm_eps: f64,
    pub placement: NormPlacement,
    pub bn_eps: f64,
    pub bn_momentum: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            base_channels: 10,
            num_classes: 10,
            dropout: 0.1,
            ssn_sub_bands: 4,
            resnorm_lambda: DEFAULT_LAMBDA,
            resnorm_eps: DEFAULT_EPS,
            placement: NormPlacement::All,
            bn_eps: DEFAULT_EPS,
            bn_momentum: DEFAULT_MOMENTUM,
        }
    }
}

pub const STAGE_REPEATS: [usize; 4] = [2, 2, 2, 3];

impl ModelConfig {
    pub fn asc1() -> Self {
        Self::default()
    }

    pub fn asc8() -> Self {
        Self { base_channels: 80, ..Self::default() }
    }

    /// `c, 1.5c, 2c, 2.5c` with floor rounding.
    pub fn stage_widths(&self) -> [usize; 4] {
        let c = self.base_channels;
        [c, c * 3 / 2, 2 * c, c * 5 / 2]
    }

    pub fn stem_channels(&self) -> usize {
        2 * self.base_channels
    }

    pub fn validate(&self) -> Result<()> {
        if self.base_channels == 0 {
            return Err(Error::Config("base_channels must be positive".into()));
        }
        if self.num_classes == 0 {
            return Err(Error::Config("num_classes must be positive".into()));
        }
        if self.ssn_sub_bands == 0 {
            return Err(Error::Config("ssn_sub_bands must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        if !(self.resnorm_lambda >= 0.0) || !(self.resnorm_eps > 0.0) || !(self.bn_eps > 0.0) {
            return Err(Error::Config("normalization lambda must be >= 0 and epsilons > 0".into()));
        }
        if !(0.0..=1.0).contains(&self.bn_momentum) {
            return Err(Error::Config(format!("bn_momentum {} outside [0, 1]", self.bn_momentum)));
        }
        Ok(())
    }

    /// Input frequency extents must survive the stem and both pools with a
    /// whole number of sub-bands left.
    pub fn check_input(&self, freq: usize, time: usize) -> Result<()> {
        let stem = |v: usize| (v + 4).saturating_sub(5) / 2 + 1;
        let f3 = stem(freq) / 4;
        let t3 = stem(time) / 4;
        if freq < 5 || time < 5 || f3 == 0 || t3 == 0 {
            return Err(Error::dim("model", format!("input {freq}x{time} too small for two 2x2 pools after the stem")));
        }
        for f in [stem(freq), stem(freq) / 2, f3] {
            if f % self.ssn_sub_bands != 0 {
                return Err(Error::Config(format!(
                    "frequency extent {f} inside the network is not divisible into {} sub-bands (input F = {freq})",
                    self.ssn_sub_bands
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn widths() {
        assert_eq!(ModelConfig::asc1().stage_widths(), [10, 15, 20, 25]);
        assert_eq!(ModelConfig::asc8().stage_widths(), [80, 120, 160, 200]);
        let odd = ModelConfig { base_channels: 3, ..ModelConfig::default() };
        assert_eq!(odd.stage_widths(), [3, 4, 6, 7]);
    }

    #[test]
    fn input_extents() {
        let cfg = ModelConfig::default();
        assert!(cfg.check_input(256, 330).is_ok());
        assert!(cfg.check_input(64, 64).is_ok());
        assert!(matches!(cfg.check_input(48, 64), Err(Error::Config(_))));
        assert!(cfg.check_input(2, 64).is_err());
    }

    #[test]
    fn zero_channels_rejected() {
        assert!(ModelConfig { base_channels: 0, ..ModelConfig::default() }.validate().is_err());
    }

    #[test]
    fn placement_round_trip() {
        for p in [NormPlacement::All, NormPlacement::InputOnly, NormPlacement::None] {
            assert_eq!(NormPlacement::parse(p.as_str()).unwrap(), p);
            assert_eq!(NormPlacement::from_tag(p.tag()), Some(p));
        }
    }
}
