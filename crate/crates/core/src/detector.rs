//! Single-click detectors and lossless multiport splitters.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};
use thiserror::Error;

const SPLITTER_SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DetectorError {
    #[error("efficiency must lie in [0, 1], got {0}")]
    InvalidEfficiency(f64),
    #[error("dark_prob must lie in [0, 1), got {0}")]
    InvalidDarkProb(f64),
    #[error("splitter needs at least one port")]
    NoPorts,
    #[error("splitter port probability {index} is invalid: {prob}")]
    InvalidPortProb { index: usize, prob: f64 },
    #[error("splitter port probabilities sum to {0}, expected 1")]
    PortsNotNormalized(f64),
}

/// A detector that registers at most one click per reset window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorSpec {
    efficiency: f64,
    dark_prob: f64,
    label: String,
}

impl DetectorSpec {
    pub fn new(efficiency: f64, dark_prob: f64, label: impl Into<String>) -> Result<Self, DetectorError> {
        if !(0.0..=1.0).contains(&efficiency) {
            return Err(DetectorError::InvalidEfficiency(efficiency));
        }
        if !(0.0..1.0).contains(&dark_prob) {
            return Err(DetectorError::InvalidDarkProb(dark_prob));
        }
        Ok(Self {
            efficiency,
            dark_prob,
            label: label.into(),
        })
    }

    /// Dark-count-free detector.
    pub fn ideal(efficiency: f64, label: impl Into<String>) -> Result<Self, DetectorError> {
        Self::new(efficiency, 0.0, label)
    }

    pub fn efficiency(&self) -> f64 {
        self.efficiency
    }

    pub fn dark_prob(&self) -> f64 {
        self.dark_prob
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_efficiency(&self, efficiency: f64) -> Result<Self, DetectorError> {
        Self::new(efficiency, self.dark_prob, self.label.clone())
    }

    /// Probability that at least one of `photons` is registered.
    pub fn detection_prob(&self, photons: u64) -> f64 {
        if photons == 0 {
            return 0.0;
        }
        1.0 - (1.0 - self.efficiency).powf(photons as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitterSpec {
    port_probs: Vec<f64>,
}

impl SplitterSpec {
    pub fn new(port_probs: Vec<f64>) -> Result<Self, DetectorError> {
        if port_probs.is_empty() {
            return Err(DetectorError::NoPorts);
        }
        for (index, &prob) in port_probs.iter().enumerate() {
            if !(prob.is_finite() && prob >= 0.0) {
                return Err(DetectorError::InvalidPortProb { index, prob });
            }
        }
        let total: f64 = port_probs.iter().sum();
        if (total - 1.0).abs() > SPLITTER_SUM_TOLERANCE {
            return Err(DetectorError::PortsNotNormalized(total));
        }
        Ok(Self { port_probs })
    }

    /// The 50/50 HBT beamsplitter.
    pub fn balanced_pair() -> Self {
        Self {
            port_probs: vec![0.5, 0.5],
        }
    }

    /// `ports` outputs with equal probability.
    pub fn uniform(ports: usize) -> Result<Self, DetectorError> {
        if ports == 0 {
            return Err(DetectorError::NoPorts);
        }
        Ok(Self {
            port_probs: vec![1.0 / ports as f64; ports],
        })
    }

    pub fn port_probs(&self) -> &[f64] {
        &self.port_probs
    }

    pub fn ports(&self) -> usize {
        self.port_probs.len()
    }
}

/// Routes each of `n` photons independently to a port.
///
/// Drawn as a chain of conditional binomials, which is exactly multinomial.
pub fn split_photons<R: Rng + ?Sized>(n: u64, splitter: &SplitterSpec, rng: &mut R) -> Vec<u64> {
    let mut counts = vec![0; splitter.ports()];
    split_into(n, splitter.port_probs(), rng, &mut counts);
    counts
}

pub(crate) fn split_into<R: Rng + ?Sized>(n: u64, probs: &[f64], rng: &mut R, counts: &mut [u64]) {
    let mut remaining = n;
    let mut mass_left = 1.0;
    let last = probs.len() - 1;
    for (j, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            counts[j] = 0;
            continue;
        }
        if j == last {
            counts[j] = remaining;
            break;
        }
        let cond = if mass_left > 0.0 { (p / mass_left).clamp(0.0, 1.0) } else { 0.0 };
        let k = binomial(remaining, cond, rng);
        counts[j] = k;
        remaining -= k;
        mass_left -= p;
    }
}

pub(crate) fn binomial<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> u64 {
    if p <= 0.0 || n == 0 {
        0
    } else if p >= 1.0 {
        n
    } else {
        Binomial::new(n, p).expect("probability in (0, 1)").sample(rng)
    }
}

/// Whether any of the `photons` is registered (dark counts excluded).
pub(crate) fn detects<R: Rng + ?Sized>(photons: u64, spec: &DetectorSpec, rng: &mut R) -> bool {
    photons > 0 && rng.random::<f64>() < spec.detection_prob(photons)
}

pub(crate) fn dark_fires<R: Rng + ?Sized>(spec: &DetectorSpec, rng: &mut R) -> bool {
    spec.dark_prob > 0.0 && rng.random::<f64>() < spec.dark_prob
}

/// One reset window of a click detector: fires if any photon is detected
/// or an independent dark count occurs.
pub fn click<R: Rng + ?Sized>(photons_at_port: u64, spec: &DetectorSpec, rng: &mut R) -> bool {
    let signal = detects(photons_at_port, spec, rng);
    let dark = dark_fires(spec, rng);
    signal || dark
}

/// Linear-response click probability `efficiency * mean`.
pub fn weak_field_click_prob(mean_photons: f64, spec: &DetectorSpec) -> f64 {
    spec.efficiency * mean_photons
}

/// Exact dark-free click probability for Poissonian input.
pub fn coherent_click_prob(mean_photons: f64, spec: &DetectorSpec) -> f64 {
    -(-spec.efficiency * mean_photons).exp_m1()
}
