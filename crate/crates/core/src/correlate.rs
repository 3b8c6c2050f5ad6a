//! Coherence estimators over binary click records, and the exact
//! click-probability oracle used to validate the Monte Carlo engine.
//!
//! Every estimator is a ratio of pooled means,
//! `(C / U) / prod_j (S_j / U)`, where `U` counts the averaged units
//! (windows, on-windows, pulse pairs or detector pairs), `C` the units in
//! which all detectors clicked and `S_j` the units in which detector `j`
//! clicked. Counts are accumulated per contiguous block of units, so the
//! block bootstrap only has to resample block totals.

use bitvec::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detector::{DetectorSpec, SplitterSpec};
use crate::hbt::SpatialOutcomes;
use crate::statistics::PhotonSource;

/// Fewest blocks a bootstrap may resample.
pub const MIN_BLOCKS: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimateError {
    #[error("estimate undefined: detector {detector} recorded no clicks")]
    ZeroSingles { detector: usize },
    #[error("estimate undefined: no on-windows in the mask")]
    NoOnWindows,
    #[error("series lengths differ: {expected} vs {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("at least {needed} series are required, got {found}")]
    TooFewSeries { needed: usize, found: usize },
    #[error("{partitions} partitions do not divide {len} samples")]
    Partition { len: u64, partitions: u64 },
    #[error("lag {lag} needs at least {} pulses, found {pulses}", lag + 1)]
    InsufficientData { pulses: u64, lag: u64 },
    #[error("bootstrap needs between {MIN_BLOCKS} and {units} blocks, got {blocks}")]
    InvalidBlocks { blocks: usize, units: u64 },
    #[error("oracle does not model dark counts (detector {detector})")]
    DarkCountsUnsupported { detector: usize },
    #[error("{detectors} detectors for a {ports}-port splitter")]
    DetectorCountMismatch { detectors: usize, ports: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "lag", rename_all = "snake_case")]
pub enum Normalization {
    /// Averaged over all N windows.
    FullN,
    /// Averaged over the M on-windows only.
    OnWindowM,
    /// Pooled over pulses and detector pairs.
    SpatialPooled,
    /// Pulse `i` on the first detector against pulse `i + lag` on the second.
    PulseLag(u64),
}

impl Normalization {
    pub fn label(&self) -> String {
        match self {
            Normalization::FullN => "full_n".into(),
            Normalization::OnWindowM => "on_window_m".into(),
            Normalization::SpatialPooled => "spatial_pooled".into(),
            Normalization::PulseLag(lag) => format!("pulse_lag_{lag}"),
        }
    }
}

/// Raw counts behind an estimate. `n` is the population the units were
/// drawn from (windows or pulses) and `m` the number of averaged units.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub coincidences: u64,
    pub singles: Vec<u64>,
    pub n: u64,
    pub m: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEstimate {
    pub value: f64,
    /// Block-bootstrap standard error; `None` when fewer than
    /// [`MIN_BLOCKS`] units exist or no resample was defined.
    pub stderr: Option<f64>,
    pub normalization: Normalization,
    pub counts: Counts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub blocks: usize,
    pub replicates: usize,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            blocks: 100,
            replicates: 1000,
            seed: 0x5eed_b007,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapResult {
    pub stderr: f64,
    /// Every defined resample gave the same value.
    pub degenerate: bool,
    /// Resamples with a defined estimate.
    pub replicates_used: usize,
}

/// Counts for one block of units.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Tally {
    samples: u64,
    coincidences: u64,
    singles: Vec<u64>,
}

impl Tally {
    fn zero(order: usize) -> Self {
        Self {
            samples: 0,
            coincidences: 0,
            singles: vec![0; order],
        }
    }

    fn add(&mut self, other: &Tally) {
        self.samples += other.samples;
        self.coincidences += other.coincidences;
        for (a, b) in self.singles.iter_mut().zip(&other.singles) {
            *a += b;
        }
    }

    fn ratio(&self) -> Result<f64, EstimateError> {
        if let Some(detector) = self.singles.iter().position(|&s| s == 0) {
            return Err(EstimateError::ZeroSingles { detector });
        }
        let u = self.samples as f64;
        let denominator: f64 = self.singles.iter().map(|&s| s as f64 / u).product();
        Ok(self.coincidences as f64 / u / denominator)
    }
}

/// Accumulates events into contiguous, near-equal blocks of units.
struct Blocked {
    units: u64,
    blocks: Vec<Tally>,
}

impl Blocked {
    fn new(units: u64, samples_per_unit: u64, blocks: usize, order: usize) -> Self {
        let b = blocks.max(1) as u64;
        let tallies = (0..b)
            .map(|k| {
                let start = (k * units).div_ceil(b);
                let end = ((k + 1) * units).div_ceil(b);
                Tally {
                    samples: (end - start) * samples_per_unit,
                    ..Tally::zero(order)
                }
            })
            .collect();
        Self {
            units,
            blocks: tallies,
        }
    }

    fn block_of(&self, unit: u64) -> usize {
        (unit as u128 * self.blocks.len() as u128 / self.units as u128) as usize
    }

    fn coincidence(&mut self, unit: u64) {
        let b = self.block_of(unit);
        self.blocks[b].coincidences += 1;
    }

    fn single(&mut self, detector: usize, unit: u64) {
        let b = self.block_of(unit);
        self.blocks[b].singles[detector] += 1;
    }

    fn total(&self) -> Tally {
        let mut t = Tally::zero(self.blocks[0].singles.len());
        for b in &self.blocks {
            t.add(b);
        }
        t
    }
}

/// The averaged units behind an estimator; see [`stderr_block_bootstrap`].
#[derive(Debug, Clone, Copy)]
pub enum EstimatorInput<'a> {
    /// Product of all series over every window.
    Temporal(&'a [&'a BitSlice<u64, Lsb0>]),
    /// Product of all series over on-windows.
    OnWindow {
        series: &'a [&'a BitSlice<u64, Lsb0>],
        mask: &'a BitSlice<u64, Lsb0>,
    },
    Spatial(&'a SpatialOutcomes),
    PulseLag {
        x: &'a BitSlice<u64, Lsb0>,
        y: &'a BitSlice<u64, Lsb0>,
        mask: &'a BitSlice<u64, Lsb0>,
        lag: u64,
    },
}

impl EstimatorInput<'_> {
    fn normalization(&self) -> Normalization {
        match self {
            EstimatorInput::Temporal(_) => Normalization::FullN,
            EstimatorInput::OnWindow { .. } => Normalization::OnWindowM,
            EstimatorInput::Spatial(_) => Normalization::SpatialPooled,
            EstimatorInput::PulseLag { lag, .. } => Normalization::PulseLag(*lag),
        }
    }

    /// Population size and averaged unit count.
    fn sizes(&self) -> Result<(u64, u64), EstimateError> {
        match self {
            EstimatorInput::Temporal(series) => {
                let n = common_len(series, None)? as u64;
                Ok((n, n))
            }
            EstimatorInput::OnWindow { series, mask } => {
                let n = common_len(series, Some(mask))? as u64;
                Ok((n, mask.count_ones() as u64))
            }
            EstimatorInput::Spatial(out) => {
                let p = out.pulse_count() as u64;
                Ok((p, p))
            }
            EstimatorInput::PulseLag { x, y, mask, lag } => {
                common_len(&[x, y], Some(mask))?;
                let pulses = pulse_runs(mask).len() as u64;
                if pulses < lag + 1 {
                    return Err(EstimateError::InsufficientData { pulses, lag: *lag });
                }
                Ok((pulses, pulses - lag))
            }
        }
    }

    fn tally(&self, blocks: usize) -> Result<Blocked, EstimateError> {
        let (_, units) = self.sizes()?;
        if units == 0 {
            return Err(EstimateError::NoOnWindows);
        }
        match self {
            EstimatorInput::Temporal(series) => {
                let mut acc = Blocked::new(units, 1, blocks, series.len());
                tally_products(series, &mut acc, |i| Some(i as u64));
                Ok(acc)
            }
            EstimatorInput::OnWindow { series, mask } => {
                let mut acc = Blocked::new(units, 1, blocks, series.len());
                let rank = RankIndex::new(mask);
                tally_products(series, &mut acc, |i| mask[i].then(|| rank.rank(mask, i)));
                Ok(acc)
            }
            EstimatorInput::Spatial(out) => {
                let k = out.pairs;
                let mut acc = Blocked::new(units, k as u64, blocks, 2);
                let series = [out.x.as_bitslice(), out.y.as_bitslice()];
                tally_products(&series, &mut acc, |s| Some((s / k) as u64));
                Ok(acc)
            }
            EstimatorInput::PulseLag { x, y, mask, lag } => {
                let runs = pulse_runs(mask);
                let px = pulse_bits(x, &runs);
                let py = pulse_bits(y, &runs);
                let lag = *lag as usize;
                let mut acc = Blocked::new(units, 1, blocks, 2);
                for i in px.iter_ones().filter(|&i| i < units as usize) {
                    acc.single(0, i as u64);
                    if py[i + lag] {
                        acc.coincidence(i as u64);
                    }
                }
                for i in py.iter_ones().filter(|&i| i >= lag) {
                    acc.single(1, (i - lag) as u64);
                }
                Ok(acc)
            }
        }
    }
}

fn common_len(
    series: &[&BitSlice<u64, Lsb0>],
    mask: Option<&BitSlice<u64, Lsb0>>,
) -> Result<usize, EstimateError> {
    let expected = match (mask, series.first()) {
        (Some(m), _) => m.len(),
        (None, Some(s)) => s.len(),
        (None, None) => return Err(EstimateError::TooFewSeries { needed: 1, found: 0 }),
    };
    for s in series {
        if s.len() != expected {
            return Err(EstimateError::LengthMismatch {
                expected,
                found: s.len(),
            });
        }
    }
    Ok(expected)
}

/// Adds singles for every series and coincidences where all series click,
/// for windows that `unit_of` maps to an averaged unit.
fn tally_products(
    series: &[&BitSlice<u64, Lsb0>],
    acc: &mut Blocked,
    unit_of: impl Fn(usize) -> Option<u64>,
) {
    for (j, s) in series.iter().enumerate() {
        for i in s.iter_ones() {
            if let Some(u) = unit_of(i) {
                acc.single(j, u);
            }
        }
    }
    let (first, rest) = series.split_first().expect("at least one series");
    for i in first.iter_ones() {
        if rest.iter().all(|s| s[i]) {
            if let Some(u) = unit_of(i) {
                acc.coincidence(u);
            }
        }
    }
}

/// O(1) rank queries (number of set bits before an index).
struct RankIndex {
    prefix: Vec<u64>,
}

impl RankIndex {
    fn new(mask: &BitSlice<u64, Lsb0>) -> Self {
        let mut acc = 0u64;
        let prefix = mask
            .chunks(64)
            .map(|c| {
                let before = acc;
                acc += c.count_ones() as u64;
                before
            })
            .collect();
        Self { prefix }
    }

    fn rank(&self, mask: &BitSlice<u64, Lsb0>, i: usize) -> u64 {
        let chunk = i / 64;
        self.prefix[chunk] + mask[chunk * 64..i].count_ones() as u64
    }
}

/// Maximal runs of consecutive on-windows, as half-open index ranges.
fn pulse_runs(mask: &BitSlice<u64, Lsb0>) -> Vec<(usize, usize)> {
    let mut runs: Vec<(usize, usize)> = Vec::new();
    for i in mask.iter_ones() {
        match runs.last_mut() {
            Some(run) if run.1 == i => run.1 = i + 1,
            _ => runs.push((i, i + 1)),
        }
    }
    runs
}

/// One bit per pulse: whether the series clicked anywhere in the pulse.
fn pulse_bits(series: &BitSlice<u64, Lsb0>, runs: &[(usize, usize)]) -> BitVec<u64, Lsb0> {
    runs.iter().map(|&(a, b)| series[a..b].any()).collect()
}

fn estimate(
    input: EstimatorInput<'_>,
    boot: &BootstrapConfig,
) -> Result<CorrelationEstimate, EstimateError> {
    let (n, m) = input.sizes()?;
    let resample = m >= MIN_BLOCKS as u64;
    let blocks = if resample {
        boot.blocks.clamp(MIN_BLOCKS, m as usize)
    } else {
        1
    };
    let blocked = input.tally(blocks)?;
    let total = blocked.total();
    let value = total.ratio()?;
    let stderr = if resample {
        bootstrap(&blocked.blocks, boot).map(|r| r.stderr)
    } else {
        None
    };
    Ok(CorrelationEstimate {
        value,
        stderr,
        normalization: input.normalization(),
        counts: Counts {
            coincidences: total.coincidences,
            singles: total.singles,
            n,
            m,
        },
    })
}

fn bootstrap(blocks: &[Tally], boot: &BootstrapConfig) -> Option<BootstrapResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(boot.seed);
    let order = blocks[0].singles.len();
    let mut values = Vec::with_capacity(boot.replicates);
    for _ in 0..boot.replicates {
        let mut t = Tally::zero(order);
        for _ in 0..blocks.len() {
            t.add(&blocks[rng.random_range(0..blocks.len())]);
        }
        if let Ok(v) = t.ratio() {
            values.push(v);
        }
    }
    if values.len() < 2 {
        return None;
    }
    if values.iter().all(|&v| v == values[0]) {
        return Some(BootstrapResult {
            stderr: 0.0,
            degenerate: true,
            replicates_used: values.len(),
        });
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (values.len() - 1) as f64;
    Some(BootstrapResult {
        stderr: var.sqrt(),
        degenerate: false,
        replicates_used: values.len(),
    })
}

/// Block-bootstrap standard error of an estimator, resampling `blocks`
/// contiguous blocks of its averaged units with replacement.
pub fn stderr_block_bootstrap(
    input: EstimatorInput<'_>,
    blocks: usize,
    boot: &BootstrapConfig,
) -> Result<BootstrapResult, EstimateError> {
    let (_, units) = input.sizes()?;
    if blocks < MIN_BLOCKS || blocks as u64 > units {
        return Err(EstimateError::InvalidBlocks { blocks, units });
    }
    let blocked = input.tally(blocks)?;
    let first = blocked.total().ratio()?;
    Ok(bootstrap(&blocked.blocks, boot).unwrap_or(BootstrapResult {
        stderr: 0.0,
        degenerate: first.is_finite(),
        replicates_used: 0,
    }))
}

/// Plain mean computed as the average of `partitions` equal partition means.
pub fn mean_partitioned(series: &BitSlice<u64, Lsb0>, partitions: u64) -> Result<f64, EstimateError> {
    let len = series.len() as u64;
    if partitions == 0 || len == 0 || !len.is_multiple_of(partitions) {
        return Err(EstimateError::Partition { len, partitions });
    }
    let size = (len / partitions) as usize;
    let sum: f64 = series
        .chunks(size)
        .map(|part| part.count_ones() as f64 / size as f64)
        .sum();
    Ok(sum / partitions as f64)
}

/// Estimators sharing one bootstrap configuration.
#[derive(Debug, Clone, Copy, Default)]
pub struct Correlator {
    pub bootstrap: BootstrapConfig,
}

impl Correlator {
    pub fn new(bootstrap: BootstrapConfig) -> Self {
        Self { bootstrap }
    }

    /// `(1/N) sum x y / ((1/N) sum x * (1/N) sum y)` over every window.
    pub fn g2_temporal(
        &self,
        x: &BitSlice<u64, Lsb0>,
        y: &BitSlice<u64, Lsb0>,
    ) -> Result<CorrelationEstimate, EstimateError> {
        estimate(EstimatorInput::Temporal(&[x, y]), &self.bootstrap)
    }

    /// The same ratio restricted to the M on-windows of `mask`.
    pub fn g2_on_window(
        &self,
        x: &BitSlice<u64, Lsb0>,
        y: &BitSlice<u64, Lsb0>,
        mask: &BitSlice<u64, Lsb0>,
    ) -> Result<CorrelationEstimate, EstimateError> {
        estimate(
            EstimatorInput::OnWindow {
                series: &[x, y],
                mask,
            },
            &self.bootstrap,
        )
    }

    /// n-th order coherence from same-window products, averaged as the
    /// mean of `partitions` equal partition means.
    pub fn gn_product(
        &self,
        series: &[&BitSlice<u64, Lsb0>],
        mask: Option<&BitSlice<u64, Lsb0>>,
        partitions: u64,
    ) -> Result<CorrelationEstimate, EstimateError> {
        if series.len() < 2 {
            return Err(EstimateError::TooFewSeries {
                needed: 2,
                found: series.len(),
            });
        }
        let input = match mask {
            Some(mask) => EstimatorInput::OnWindow { series, mask },
            None => EstimatorInput::Temporal(series),
        };
        let (n, units) = input.sizes()?;
        if units == 0 {
            return Err(EstimateError::NoOnWindows);
        }
        if partitions == 0 || units % partitions != 0 {
            return Err(EstimateError::Partition {
                len: units,
                partitions,
            });
        }
        let blocked = input.tally(partitions as usize)?;
        let total = blocked.total();
        if let Some(detector) = total.singles.iter().position(|&s| s == 0) {
            return Err(EstimateError::ZeroSingles { detector });
        }
        let a = partitions as f64;
        let mean_of_means = |f: &dyn Fn(&Tally) -> u64| -> f64 {
            blocked
                .blocks
                .iter()
                .map(|b| f(b) as f64 / b.samples as f64)
                .sum::<f64>()
                / a
        };
        let product_mean = mean_of_means(&|b| b.coincidences);
        let singles_product: f64 = (0..series.len())
            .map(|j| mean_of_means(&|b| b.singles[j]))
            .product();
        let stderr = estimate(input, &self.bootstrap)?.stderr;
        Ok(CorrelationEstimate {
            value: product_mean / singles_product,
            stderr,
            normalization: input.normalization(),
            counts: Counts {
                coincidences: total.coincidences,
                singles: total.singles,
                n,
                m: units,
            },
        })
    }

    /// Pooled estimator over pulses and detector pairs.
    pub fn g2_spatial(&self, outcomes: &SpatialOutcomes) -> Result<CorrelationEstimate, EstimateError> {
        if outcomes.pulse_count() == 0 {
            return Err(EstimateError::InsufficientData { pulses: 0, lag: 0 });
        }
        estimate(EstimatorInput::Spatial(outcomes), &self.bootstrap)
    }

    /// Correlates the first detector on pulse `i` with the second on pulse
    /// `i + lag`. Pulses are maximal runs of on-windows; a pulse clicks if
    /// any of its windows does.
    pub fn g2_pulse_to_pulse(
        &self,
        x: &BitSlice<u64, Lsb0>,
        y: &BitSlice<u64, Lsb0>,
        mask: &BitSlice<u64, Lsb0>,
        lag: u64,
    ) -> Result<CorrelationEstimate, EstimateError> {
        estimate(EstimatorInput::PulseLag { x, y, mask, lag }, &self.bootstrap)
    }
}

pub fn g2_temporal(
    x: &BitSlice<u64, Lsb0>,
    y: &BitSlice<u64, Lsb0>,
) -> Result<CorrelationEstimate, EstimateError> {
    Correlator::default().g2_temporal(x, y)
}

pub fn g2_on_window(
    x: &BitSlice<u64, Lsb0>,
    y: &BitSlice<u64, Lsb0>,
    mask: &BitSlice<u64, Lsb0>,
) -> Result<CorrelationEstimate, EstimateError> {
    Correlator::default().g2_on_window(x, y, mask)
}

pub fn gn_product(
    series: &[&BitSlice<u64, Lsb0>],
    mask: Option<&BitSlice<u64, Lsb0>>,
    partitions: u64,
) -> Result<CorrelationEstimate, EstimateError> {
    Correlator::default().gn_product(series, mask, partitions)
}

pub fn g2_spatial(outcomes: &SpatialOutcomes) -> Result<CorrelationEstimate, EstimateError> {
    Correlator::default().g2_spatial(outcomes)
}

pub fn g2_pulse_to_pulse(
    x: &BitSlice<u64, Lsb0>,
    y: &BitSlice<u64, Lsb0>,
    mask: &BitSlice<u64, Lsb0>,
    lag: u64,
) -> Result<CorrelationEstimate, EstimateError> {
    Correlator::default().g2_pulse_to_pulse(x, y, mask, lag)
}

/// Exact click probabilities for one pulse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub click_probs: Vec<f64>,
    /// Joint click probability of ports `j` and `k`; the diagonal holds the
    /// single-port probabilities.
    pub coincidence_probs: Vec<Vec<f64>>,
    /// `P(0 and 1) / (P(0) P(1))`, when two ports exist and both can click.
    pub g2_click: Option<f64>,
}

/// Exact dark-free click statistics, by enumerating photon numbers:
/// given n photons, port j stays dark with probability `(1 - eta_j p_j)^n`
/// and ports j, k both stay dark with `(1 - eta_j p_j - eta_k p_k)^n`.
pub fn oracle_click_probs(
    source: &PhotonSource,
    splitter: &SplitterSpec,
    detectors: &[DetectorSpec],
) -> Result<OracleResult, EstimateError> {
    if detectors.len() != splitter.ports() {
        return Err(EstimateError::DetectorCountMismatch {
            detectors: detectors.len(),
            ports: splitter.ports(),
        });
    }
    if let Some(detector) = detectors.iter().position(|d| d.dark_prob() > 0.0) {
        return Err(EstimateError::DarkCountsUnsupported { detector });
    }
    let rates: Vec<f64> = detectors
        .iter()
        .zip(splitter.port_probs())
        .map(|(d, &p)| d.efficiency() * p)
        .collect();
    let ports = rates.len();
    let ln_dark = |r: f64| (-r).ln_1p();
    // P(at least one of n photons reaches a detector with per-photon rate r).
    let hit = |n: u64, r: f64| {
        if n == 0 {
            0.0
        } else {
            -(n as f64 * ln_dark(r)).exp_m1()
        }
    };

    let mut singles = vec![0.0; ports];
    let mut joint = vec![vec![0.0; ports]; ports];
    for (n, p) in enumerate_support(source) {
        if p == 0.0 {
            continue;
        }
        for j in 0..ports {
            let hj = hit(n, rates[j]);
            singles[j] += p * hj;
            for k in j + 1..ports {
                let either = hit(n, (rates[j] + rates[k]).min(1.0));
                joint[j][k] += p * (hj + hit(n, rates[k]) - either);
            }
        }
    }
    for j in 0..ports {
        joint[j][j] = singles[j];
        for k in j + 1..ports {
            let v = joint[j][k].max(0.0).min(singles[j]).min(singles[k]);
            joint[j][k] = v;
            joint[k][j] = v;
        }
    }
    let g2_click = (ports >= 2 && singles[0] > 0.0 && singles[1] > 0.0)
        .then(|| joint[0][1] / (singles[0] * singles[1]));
    Ok(OracleResult {
        click_probs: singles,
        coincidence_probs: joint,
        g2_click,
    })
}

/// `(n, P(n))` over the source support. Infinite-support sources run past
/// the cumulative tail bound until the probability drops below 1e-25.
fn enumerate_support(source: &PhotonSource) -> Vec<(u64, f64)> {
    match source {
        PhotonSource::Empirical { pmf } => pmf.entries().to_vec(),
        PhotonSource::Fock { m } => vec![(*m, 1.0)],
        _ => {
            let mut out: Vec<(u64, f64)> = (0..=source.tail_bound()).map(|n| (n, source.pmf(n))).collect();
            let mut n = out.len() as u64;
            loop {
                let p = source.pmf(n);
                if p < 1e-25 {
                    break;
                }
                out.push((n, p));
                n += 1;
            }
            out
        }
    }
}
