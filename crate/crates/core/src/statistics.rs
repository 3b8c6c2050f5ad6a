//! Photon-number distributions of a single temporal mode.
//!
//! A [`PhotonSource`] carries only the stochastic part of the field: how
//! many photons a pulse holds. Its normalized coherence values
//! `g(n) = <n!/(n-k)!> / <n>^k` are time independent and are what every
//! estimator in this crate is ultimately compared against.

use rand::Rng;
use rand_distr::{Distribution, Geometric, Poisson};
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_factorial;
use thiserror::Error;

/// Cumulative probability past which infinite-support distributions are cut.
pub const TAIL_CUTOFF: f64 = 1e-12;

const EMPIRICAL_SUM_TOLERANCE: f64 = 1e-9;
/// Relative bound on the neglected tail of a factorial-moment sum.
const MOMENT_TAIL: f64 = 1e-16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("mean photon number must be finite and non-negative, got {0}")]
    InvalidMean(f64),
    #[error("empirical distribution is empty")]
    EmptyPmf,
    #[error("empirical probability for count {count} is invalid: {prob}")]
    InvalidProbability { count: u64, prob: f64 },
    #[error("empirical probabilities sum to {0}, expected 1")]
    NotNormalized(f64),
    #[error("coherence is undefined for a source with zero mean photon number")]
    UndefinedCoherence,
    #[error("coherence order must be at least 2, got {0}")]
    InvalidOrder(u32),
    #[error("thinning probability must lie in [0, 1], got {0}")]
    InvalidThinning(f64),
    #[error("cannot scale {kind} source with mean {mean} up to {target} photons")]
    CannotScale { kind: &'static str, mean: f64, target: f64 },
}

/// A validated photon-number probability table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalPmf {
    entries: Vec<(u64, f64)>,
    cumulative: Vec<f64>,
}

impl EmpiricalPmf {
    /// Builds a table from `(count, probability)` pairs. Repeated counts are
    /// merged; zero-probability entries are dropped.
    pub fn new(entries: impl IntoIterator<Item = (u64, f64)>) -> Result<Self, StatsError> {
        let mut entries: Vec<(u64, f64)> = entries.into_iter().collect();
        for &(count, prob) in &entries {
            if !prob.is_finite() || prob < 0.0 {
                return Err(StatsError::InvalidProbability { count, prob });
            }
        }
        if entries.is_empty() {
            return Err(StatsError::EmptyPmf);
        }
        entries.sort_by_key(|&(count, _)| count);
        let mut merged: Vec<(u64, f64)> = Vec::with_capacity(entries.len());
        for (count, prob) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == count => last.1 += prob,
                _ => merged.push((count, prob)),
            }
        }
        let total: f64 = merged.iter().map(|&(_, p)| p).sum();
        if (total - 1.0).abs() > EMPIRICAL_SUM_TOLERANCE {
            return Err(StatsError::NotNormalized(total));
        }
        merged.retain(|&(_, p)| p > 0.0);
        let mut acc = 0.0;
        let cumulative = merged
            .iter()
            .map(|&(_, p)| {
                acc += p;
                acc
            })
            .collect();
        Ok(Self {
            entries: merged,
            cumulative,
        })
    }

    pub fn entries(&self) -> &[(u64, f64)] {
        &self.entries
    }

    fn prob(&self, n: u64) -> f64 {
        self.entries
            .binary_search_by_key(&n, |&(count, _)| count)
            .map(|i| self.entries[i].1)
            .unwrap_or(0.0)
    }

    fn max_count(&self) -> u64 {
        self.entries.last().map(|&(c, _)| c).unwrap_or(0)
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let u: f64 = rng.random();
        let idx = self.cumulative.partition_point(|&c| c <= u);
        self.entries[idx.min(self.entries.len() - 1)].0
    }
}

/// Photon-number statistics of one pulse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PhotonSource {
    /// Poissonian statistics.
    Coherent { mean: f64 },
    /// Single-mode Bose-Einstein statistics.
    Thermal { mean: f64 },
    /// Definite photon number.
    Fock { m: u64 },
    Empirical { pmf: EmpiricalPmf },
}

impl PhotonSource {
    pub fn coherent(mean: f64) -> Result<Self, StatsError> {
        check_mean(mean)?;
        Ok(Self::Coherent { mean })
    }

    pub fn thermal(mean: f64) -> Result<Self, StatsError> {
        check_mean(mean)?;
        Ok(Self::Thermal { mean })
    }

    pub fn fock(m: u64) -> Self {
        Self::Fock { m }
    }

    pub fn empirical(entries: impl IntoIterator<Item = (u64, f64)>) -> Result<Self, StatsError> {
        Ok(Self::Empirical {
            pmf: EmpiricalPmf::new(entries)?,
        })
    }

    /// Re-checks invariants on a value that may have been deserialized.
    pub fn validate(&self) -> Result<(), StatsError> {
        match self {
            Self::Coherent { mean } | Self::Thermal { mean } => check_mean(*mean),
            Self::Fock { .. } => Ok(()),
            Self::Empirical { pmf } => EmpiricalPmf::new(pmf.entries.iter().copied()).map(|_| ()),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Self::Coherent { .. } => "coherent",
            Self::Thermal { .. } => "thermal",
            Self::Fock { .. } => "fock",
            Self::Empirical { .. } => "empirical",
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            Self::Coherent { mean } | Self::Thermal { mean } => *mean,
            Self::Fock { m } => *m as f64,
            Self::Empirical { pmf } => pmf.entries.iter().map(|&(k, p)| k as f64 * p).sum(),
        }
    }

    /// P(photon number = n).
    pub fn pmf(&self, n: u64) -> f64 {
        match self {
            Self::Coherent { mean } => {
                if *mean == 0.0 {
                    return if n == 0 { 1.0 } else { 0.0 };
                }
                (-mean + n as f64 * mean.ln() - ln_factorial(n)).exp()
            }
            Self::Thermal { mean } => {
                if *mean == 0.0 {
                    return if n == 0 { 1.0 } else { 0.0 };
                }
                let ratio = mean / (1.0 + mean);
                (n as f64 * ratio.ln()).exp() / (1.0 + mean)
            }
            Self::Fock { m } => {
                if n == *m {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Empirical { pmf } => pmf.prob(n),
        }
    }

    /// Largest photon number kept when enumerating the distribution: the
    /// first count at which the cumulative probability exceeds `1 - TAIL_CUTOFF`.
    pub fn tail_bound(&self) -> u64 {
        match self {
            Self::Fock { m } => *m,
            Self::Empirical { pmf } => pmf.max_count(),
            _ => {
                let mut cumulative = 0.0;
                let mut n = 0;
                loop {
                    cumulative += self.pmf(n);
                    if cumulative > 1.0 - TAIL_CUTOFF {
                        return n;
                    }
                    n += 1;
                }
            }
        }
    }

    /// Draws one photon number.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match self {
            Self::Coherent { mean } => {
                if *mean == 0.0 {
                    0
                } else {
                    Poisson::new(*mean).expect("validated mean").sample(rng) as u64
                }
            }
            Self::Thermal { mean } => {
                if *mean == 0.0 {
                    0
                } else {
                    Geometric::new(1.0 / (1.0 + mean))
                        .expect("validated mean")
                        .sample(rng)
                }
            }
            Self::Fock { m } => *m,
            Self::Empirical { pmf } => pmf.sample(rng),
        }
    }

    /// Distribution obtained by keeping each photon independently with
    /// probability `keep`, always materialized as an explicit table.
    pub fn thinned_pmf(&self, keep: f64) -> Result<EmpiricalPmf, StatsError> {
        if !(0.0..=1.0).contains(&keep) {
            return Err(StatsError::InvalidThinning(keep));
        }
        let support: Vec<(u64, f64)> = match self {
            Self::Empirical { pmf } => pmf.entries.clone(),
            Self::Fock { m } => vec![(*m, 1.0)],
            _ => {
                let limit = self.moment_limit(4);
                (0..=limit).map(|n| (n, self.pmf(n))).collect()
            }
        };
        let max = support.iter().map(|&(n, _)| n).max().unwrap_or(0);
        let mut out = vec![0.0; max as usize + 1];
        for &(n, p) in &support {
            if keep == 1.0 {
                out[n as usize] += p;
                continue;
            }
            if keep == 0.0 {
                out[0] += p;
                continue;
            }
            let (ln_keep, ln_drop) = (keep.ln(), (1.0 - keep).ln());
            for j in 0..=n {
                let ln_term = ln_factorial(n) - ln_factorial(j) - ln_factorial(n - j)
                    + j as f64 * ln_keep
                    + (n - j) as f64 * ln_drop;
                out[j as usize] += p * ln_term.exp();
            }
        }
        // Renormalize away the truncated tail so the table validates.
        let total: f64 = out.iter().sum();
        EmpiricalPmf::new(
            out.into_iter()
                .enumerate()
                .map(|(j, p)| (j as u64, p / total)),
        )
    }

    /// The same statistics rescaled to `target` mean photons per pulse.
    ///
    /// Coherent and thermal sources stay in their family. Fock and empirical
    /// sources can only be scaled down, by binomial thinning, which leaves
    /// every normalized factorial moment unchanged.
    pub fn scaled_to_mean(&self, target: f64) -> Result<PhotonSource, StatsError> {
        check_mean(target)?;
        match self {
            Self::Coherent { .. } => Ok(Self::Coherent { mean: target }),
            Self::Thermal { .. } => Ok(Self::Thermal { mean: target }),
            _ => {
                let mean = self.mean();
                if target == mean {
                    return Ok(self.clone());
                }
                if target > mean {
                    return Err(StatsError::CannotScale {
                        kind: self.kind_name(),
                        mean,
                        target,
                    });
                }
                Ok(Self::Empirical {
                    pmf: self.thinned_pmf(target / mean)?,
                })
            }
        }
    }

    /// Counts beyond which the order-`order` factorial-moment tail is
    /// negligible. Only meaningful for coherent and thermal sources.
    fn moment_limit(&self, order: u32) -> u64 {
        let mut sum = 0.0;
        let mut cumulative = 0.0;
        let mut prev = 0.0;
        let mut n = 0u64;
        loop {
            let p = self.pmf(n);
            cumulative += p;
            let term = p * falling_factorial(n, order);
            sum += term;
            if n > order as u64 && prev > 0.0 && cumulative > 1.0 - TAIL_CUTOFF {
                let ratio = term / prev;
                if ratio < 1.0 && term * ratio / (1.0 - ratio) <= MOMENT_TAIL * sum {
                    return n;
                }
            }
            if n > order as u64 && term == 0.0 && cumulative > 1.0 - TAIL_CUTOFF {
                return n;
            }
            prev = term;
            n += 1;
        }
    }
}

fn check_mean(mean: f64) -> Result<(), StatsError> {
    if mean.is_finite() && mean >= 0.0 {
        Ok(())
    } else {
        Err(StatsError::InvalidMean(mean))
    }
}

/// n!/(n-k)!, zero when k > n.
pub fn falling_factorial(n: u64, k: u32) -> f64 {
    if (k as u64) > n {
        return 0.0;
    }
    (0..k as u64).map(|i| (n - i) as f64).product()
}

/// `E[N!/(N-order)!]` by direct summation over the distribution.
///
/// Infinite-support sources are summed until the remaining tail is bounded
/// below 1e-16 of the accumulated value (the term ratio is non-increasing
/// for Poisson and geometric laws, so a geometric series bounds the tail).
pub fn factorial_moment(source: &PhotonSource, order: u32) -> f64 {
    match source {
        PhotonSource::Fock { m } => falling_factorial(*m, order),
        PhotonSource::Empirical { pmf } => pmf
            .entries
            .iter()
            .map(|&(k, p)| p * falling_factorial(k, order))
            .sum(),
        _ => {
            let limit = source.moment_limit(order);
            (0..=limit)
                .map(|n| source.pmf(n) * falling_factorial(n, order))
                .sum()
        }
    }
}

/// Statistics-only coherence `g(order)` of a source.
pub fn analytic_gn(source: &PhotonSource, order: u32) -> Result<f64, StatsError> {
    if order < 2 {
        return Err(StatsError::InvalidOrder(order));
    }
    let mean = source.mean();
    if mean <= 0.0 {
        return Err(StatsError::UndefinedCoherence);
    }
    Ok(match source {
        PhotonSource::Coherent { .. } => 1.0,
        PhotonSource::Thermal { .. } => (1..=order as u64).map(|k| k as f64).product(),
        PhotonSource::Fock { m } => falling_factorial(*m, order) / mean.powi(order as i32),
        PhotonSource::Empirical { .. } => {
            factorial_moment(source, order) / mean.powi(order as i32)
        }
    })
}
