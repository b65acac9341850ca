//! Simulated noisy expert.
//!
//! The oracle looks up the true targets of a queried pair, turns them into a
//! Bradley-Terry preference probability and draws a Bernoulli label from it.

use std::io::Write;

use rand::Rng;

use crate::error::{Error, Result};
use crate::seeding::{self, StreamRng};
use crate::tabular_prep::PreparedDataset;

pub const DEFAULT_SHIFT_DELTA: f64 = 0.01;

/// Map from targets to positive Bradley-Terry strengths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Positivity {
    /// `beta = y`; every target must be positive.
    Identity,
    /// `beta = (y - y_min) / (y_max - y_min) + delta`.
    MinMaxShift { delta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleMode {
    /// `P(u > v) = beta_u / (beta_u + beta_v)`.
    Standard(Positivity),
    /// `P(u > v) = 1 / (1 + exp(-c (y_u - y_v)))`. `scale: None` uses
    /// `c = 1 / std(y)`.
    Exponential { scale: Option<f64> },
}

impl Default for OracleMode {
    fn default() -> Self {
        OracleMode::Exponential { scale: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OracleConfig {
    pub mode: OracleMode,
    pub rng_seed: u64,
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        match self.mode {
            OracleMode::Standard(Positivity::MinMaxShift { delta }) if !(delta > 0.0 && delta.is_finite()) => {
                Err(Error::invalid("delta", format!("must be positive, got {delta}")))
            }
            OracleMode::Exponential { scale: Some(c) } if !(c > 0.0 && c.is_finite()) => {
                Err(Error::invalid("score_scale", format!("must be positive, got {c}")))
            }
            _ => Ok(()),
        }
    }
}

/// Target statistics the strength transforms depend on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetStats {
    pub y_min: f64,
    pub y_max: f64,
    /// Population standard deviation.
    pub y_std: f64,
}

impl TargetStats {
    pub fn from_targets(y: &[f64]) -> Result<Self> {
        if y.is_empty() {
            return Err(Error::EmptyInput("no targets".into()));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("y", "targets must be finite"));
        }
        let n = y.len() as f64;
        let mean = y.iter().sum::<f64>() / n;
        let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Ok(Self {
            y_min: y.iter().copied().fold(f64::INFINITY, f64::min),
            y_max: y.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            y_std: var.sqrt(),
        })
    }
}

pub fn strength(y: f64, positivity: Positivity, stats: &TargetStats) -> Result<f64> {
    if !y.is_finite() {
        return Err(Error::invalid("y", "target must be finite"));
    }
    match positivity {
        Positivity::Identity => {
            if y <= 0.0 {
                Err(Error::invalid(
                    "y",
                    format!(
                        "identity strength needs positive targets, got {y}; \
                         use min_max_shift or exponential mode"
                    ),
                ))
            } else {
                Ok(y)
            }
        }
        Positivity::MinMaxShift { delta } => {
            let range = stats.y_max - stats.y_min;
            if range > 0.0 {
                Ok((y - stats.y_min) / range + delta)
            } else {
                Ok(delta)
            }
        }
    }
}

fn logistic(d: f64) -> f64 {
    if d >= 0.0 {
        1.0 / (1.0 + (-d).exp())
    } else {
        let e = d.exp();
        e / (1.0 + e)
    }
}

/// Resolves an automatic exponential scale to `1 / std(y)`.
pub fn resolve_mode(mode: OracleMode, stats: &TargetStats) -> Result<OracleMode> {
    match mode {
        OracleMode::Exponential { scale: None } => {
            if stats.y_std > 0.0 {
                Ok(OracleMode::Exponential {
                    scale: Some(1.0 / stats.y_std),
                })
            } else {
                Err(Error::DegenerateData(
                    "constant targets; set an explicit score scale".into(),
                ))
            }
        }
        m => Ok(m),
    }
}

/// Probability that `u` is preferred over `v`.
pub fn preference_prob(y_u: f64, y_v: f64, mode: OracleMode, stats: &TargetStats) -> Result<f64> {
    if !y_u.is_finite() || !y_v.is_finite() {
        return Err(Error::invalid("y", "targets must be finite"));
    }
    match resolve_mode(mode, stats)? {
        OracleMode::Standard(pos) => {
            let bu = strength(y_u, pos, stats)?;
            let bv = strength(y_v, pos, stats)?;
            Ok(bu / (bu + bv))
        }
        OracleMode::Exponential { scale } => {
            let c = scale.expect("resolved");
            Ok(logistic(c * (y_u - y_v)))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleLabel {
    pub u: usize,
    pub v: usize,
    pub prob_u_preferred: f64,
    pub label: u8,
}

/// Stateful oracle: one seeded stream, one uniform draw per query.
#[derive(Debug, Clone)]
pub struct Oracle {
    mode: OracleMode,
    stats: TargetStats,
    rng: StreamRng,
    queries: u64,
    log: Option<Vec<OracleLabel>>,
}

impl Oracle {
    pub fn new(config: &OracleConfig, dataset: &PreparedDataset) -> Result<Self> {
        config.validate()?;
        let stats = TargetStats::from_targets(dataset.y())?;
        let mode = resolve_mode(config.mode, &stats)?;
        if let OracleMode::Standard(Positivity::Identity) = mode {
            if stats.y_min <= 0.0 {
                return Err(Error::invalid(
                    "positivity_transform",
                    "identity strength needs positive targets; use min_max_shift or exponential mode",
                ));
            }
        }
        Ok(Self {
            mode,
            stats,
            rng: seeding::seeded(config.rng_seed),
            queries: 0,
            log: None,
        })
    }

    /// Keeps every emitted label for [`Oracle::write_log`].
    pub fn with_log(mut self) -> Self {
        self.log = Some(Vec::new());
        self
    }

    pub fn mode(&self) -> OracleMode {
        self.mode
    }

    pub fn queries(&self) -> u64 {
        self.queries
    }

    pub fn label_pair(&mut self, u: usize, v: usize, dataset: &PreparedDataset) -> Result<OracleLabel> {
        let n = dataset.n();
        for idx in [u, v] {
            if idx >= n {
                return Err(Error::IndexOutOfRange { index: idx, len: n });
            }
        }
        if u == v {
            return Err(Error::DegeneratePair(u));
        }
        let y = dataset.y();
        let prob = preference_prob(y[u], y[v], self.mode, &self.stats)?;
        let draw: f64 = self.rng.random();
        let label = OracleLabel {
            u,
            v,
            prob_u_preferred: prob,
            label: u8::from(draw < prob),
        };
        self.queries += 1;
        if let Some(log) = &mut self.log {
            log.push(label);
        }
        Ok(label)
    }

    pub fn log(&self) -> Option<&[OracleLabel]> {
        self.log.as_deref()
    }

    /// Writes the query log as CSV with header `u,v,prob,label`.
    pub fn write_log<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["u", "v", "prob", "label"])?;
        for l in self.log.iter().flatten() {
            w.write_record([
                l.u.to_string(),
                l.v.to_string(),
                l.prob_u_preferred.to_string(),
                l.label.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stats() -> TargetStats {
        TargetStats {
            y_min: -2.0,
            y_max: 8.0,
            y_std: 1.0,
        }
    }

    #[test]
    fn strength_examples() {
        let s = stats();
        assert_eq!(strength(3.0, Positivity::Identity, &s).unwrap(), 3.0);
        let shift = Positivity::MinMaxShift { delta: 0.01 };
        assert_eq!(strength(-2.0, shift, &s).unwrap(), 0.01);
        assert_eq!(strength(8.0, shift, &s).unwrap(), 1.01);
        assert!(strength(0.0, Positivity::Identity, &s).is_err());
        assert!(strength(-1.0, Positivity::Identity, &s).is_err());
    }

    #[test]
    fn flat_range_degenerates_to_delta() {
        let s = TargetStats {
            y_min: 4.0,
            y_max: 4.0,
            y_std: 0.0,
        };
        assert_eq!(strength(4.0, Positivity::MinMaxShift { delta: 0.2 }, &s).unwrap(), 0.2);
    }

    #[test]
    fn probability_examples() {
        let s = stats();
        let std = OracleMode::Standard(Positivity::Identity);
        let exp = OracleMode::Exponential { scale: Some(1.0) };
        assert_eq!(preference_prob(2.0, 2.0, std, &s).unwrap(), 0.5);
        assert_eq!(preference_prob(2.0, 2.0, exp, &s).unwrap(), 0.5);
        assert!((preference_prob(3.0, 1.0, std, &s).unwrap() - 0.75).abs() < 1e-15);
        assert!((preference_prob(3f64.ln(), 0.0, exp, &s).unwrap() - 0.75).abs() < 1e-15);
        assert!(preference_prob(f64::NAN, 0.0, exp, &s).is_err());
    }

    #[test]
    fn auto_scale_uses_inverse_std() {
        let s = TargetStats {
            y_min: 0.0,
            y_max: 1.0,
            y_std: 2.0,
        };
        let p = preference_prob(2.0, 0.0, OracleMode::Exponential { scale: None }, &s).unwrap();
        assert!((p - logistic(1.0)).abs() < 1e-15);
    }

    #[test]
    fn invalid_configs() {
        let bad_delta = OracleConfig {
            mode: OracleMode::Standard(Positivity::MinMaxShift { delta: 0.0 }),
            rng_seed: 0,
        };
        assert!(bad_delta.validate().is_err());
        let bad_scale = OracleConfig {
            mode: OracleMode::Exponential { scale: Some(-1.0) },
            rng_seed: 0,
        };
        assert!(bad_scale.validate().is_err());
    }

    fn tiny_dataset(y: Vec<f64>) -> PreparedDataset {
        let n = y.len();
        let x = (0..n).map(|i| i as f64).collect();
        PreparedDataset::new(x, n, 1, y, vec!["a".into()]).unwrap()
    }

    #[test]
    fn degenerate_pair_rejected() {
        let ds = tiny_dataset(vec![1.0, 2.0, 3.0]);
        let mut oracle = Oracle::new(&OracleConfig::default(), &ds).unwrap();
        assert!(matches!(oracle.label_pair(1, 1, &ds), Err(Error::DegeneratePair(1))));
        assert!(oracle.label_pair(0, 3, &ds).is_err());
    }

    #[test]
    fn identity_with_nonpositive_targets_rejected() {
        let ds = tiny_dataset(vec![-1.0, 2.0, 3.0]);
        let cfg = OracleConfig {
            mode: OracleMode::Standard(Positivity::Identity),
            rng_seed: 0,
        };
        assert!(Oracle::new(&cfg, &ds).is_err());
    }

    #[test]
    fn saturated_probability_always_one() {
        let ds = tiny_dataset(vec![1000.0, 0.0, 1.0]);
        let cfg = OracleConfig {
            mode: OracleMode::Exponential { scale: Some(10.0) },
            rng_seed: 3,
        };
        let mut oracle = Oracle::new(&cfg, &ds).unwrap();
        for _ in 0..1000 {
            assert_eq!(oracle.label_pair(0, 1, &ds).unwrap().label, 1);
        }
        assert_eq!(oracle.queries(), 1000);
    }

    #[test]
    fn labels_are_reproducible() {
        let ds = tiny_dataset(vec![1.0, 1.5, 2.0, 0.5]);
        let cfg = OracleConfig {
            mode: OracleMode::Exponential { scale: None },
            rng_seed: 77,
        };
        let seq = |cfg: &OracleConfig| {
            let mut o = Oracle::new(cfg, &ds).unwrap();
            (0..200)
                .map(|i| o.label_pair(i % 4, (i + 1) % 4, &ds).unwrap().label)
                .collect::<Vec<_>>()
        };
        assert_eq!(seq(&cfg), seq(&cfg));
    }

    #[test]
    fn log_csv() {
        let ds = tiny_dataset(vec![1.0, 2.0, 3.0]);
        let mut o = Oracle::new(&OracleConfig::default(), &ds).unwrap().with_log();
        o.label_pair(0, 2, &ds).unwrap();
        let mut buf = Vec::new();
        o.write_log(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("u,v,prob,label\n0,2,"));
    }
}
