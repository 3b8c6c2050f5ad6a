//! Monte Carlo engine for Hanbury-Brown-Twiss click measurements.
//!
//! Each pulse draws its photon number once from the source (rescaled to the
//! train's `photons_per_pulse`), spreads the photons over the windows of its
//! footprint, and every photon-bearing window is split onto the detectors.
//! All randomness comes from counter-addressed ChaCha streams keyed by
//! `(seed, domain, index)`, so results do not depend on how work is chunked
//! across threads.

use bitvec::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detector::{self, DetectorError, DetectorSpec, SplitterSpec};
use crate::envelope::{window_weights, EnvelopeError, PulseTrain, WindowGrid, WindowWeights};
use crate::statistics::{PhotonSource, StatsError};

/// Temporal series store detector clicks as bits of one `u64` per window.
pub const MAX_DETECTORS: usize = 64;

const PULSE_CHUNK: usize = 1 << 14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Source(#[from] StatsError),
    #[error(transparent)]
    Envelope(#[from] EnvelopeError),
    #[error(transparent)]
    Detector(#[from] DetectorError),
    #[error("{detectors} detectors configured for a {ports}-port splitter")]
    DetectorCountMismatch { detectors: usize, ports: usize },
    #[error("at most {MAX_DETECTORS} detectors are supported, got {0}")]
    TooManyDetectors(usize),
    #[error("spatial ensemble needs at least one detector pair")]
    NoPairs,
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error("{operation} does not run in {mode:?} mode")]
    WrongMode {
        operation: &'static str,
        mode: MeasurementMode,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeasurementMode {
    /// One detector pair, averaged over every window of the grid.
    Temporal,
    /// `pairs` detector pairs sharing each pulse equally.
    SpatialEnsemble { pairs: u32 },
    /// Temporal clicks correlated across pulses up to `max_lag`.
    PulseToPulse { max_lag: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub source: PhotonSource,
    pub train: PulseTrain,
    pub grid: WindowGrid,
    pub detectors: Vec<DetectorSpec>,
    pub splitter: SplitterSpec,
    pub mode: MeasurementMode,
    pub seed: u64,
}

impl ExperimentConfig {
    /// Balanced two-detector HBT setup in temporal mode.
    pub fn hbt(
        source: PhotonSource,
        train: PulseTrain,
        grid: WindowGrid,
        efficiency: f64,
        seed: u64,
    ) -> Result<Self, SimError> {
        let config = Self {
            source,
            train,
            grid,
            detectors: vec![
                DetectorSpec::ideal(efficiency, "A")?,
                DetectorSpec::ideal(efficiency, "B")?,
            ],
            splitter: SplitterSpec::balanced_pair(),
            mode: MeasurementMode::Temporal,
            seed,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.source.validate()?;
        if self.detectors.len() != self.splitter.ports() {
            return Err(SimError::DetectorCountMismatch {
                detectors: self.detectors.len(),
                ports: self.splitter.ports(),
            });
        }
        if self.detectors.len() > MAX_DETECTORS {
            return Err(SimError::TooManyDetectors(self.detectors.len()));
        }
        if let MeasurementMode::SpatialEnsemble { pairs } = self.mode {
            if pairs == 0 {
                return Err(SimError::NoPairs);
            }
            if self.detectors.len() != 2 {
                return Err(SimError::Unsupported(format!(
                    "spatial ensemble takes one detector template per pair side, got {} detectors",
                    self.detectors.len()
                )));
            }
        }
        self.pulse_source()?;
        Ok(())
    }

    /// Photon-number distribution of one pulse: the source rescaled to
    /// `photons_per_pulse`.
    pub fn pulse_source(&self) -> Result<PhotonSource, StatsError> {
        self.source.scaled_to_mean(self.train.photons_per_pulse())
    }

    /// Stable 64-bit FNV-1a hash of the full configuration.
    pub fn fingerprint(&self) -> u64 {
        fnv1a(format!("{self:?}").as_bytes())
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |hash, &b| {
        (hash ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

#[derive(Debug, Clone, Copy)]
enum Domain {
    Pulse = 0,
    Window = 1,
    Dark = 2,
}

/// Counter-addressed random streams derived from one seed.
#[derive(Clone)]
struct Streams {
    base: ChaCha8Rng,
}

impl Streams {
    fn new(seed: u64) -> Self {
        Self {
            base: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn stream(&self, domain: Domain, index: u64) -> ChaCha8Rng {
        let mut rng = self.base.clone();
        rng.set_stream((index << 2) | domain as u64);
        rng.set_word_pos(0);
        rng
    }
}

/// Binary click records of every detector over the window grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ClickSeries {
    clicks: Vec<BitVec<u64, Lsb0>>,
    mask: BitVec<u64, Lsb0>,
    on_count: u64,
    intensity_ratio: f64,
    fingerprint: u64,
    collision_count: u64,
}

impl ClickSeries {
    /// Assembles a series; all sequences must share the mask's length.
    pub fn new(
        clicks: Vec<BitVec<u64, Lsb0>>,
        mask: BitVec<u64, Lsb0>,
        fingerprint: u64,
        collision_count: u64,
    ) -> Result<Self, SimError> {
        if let Some(bad) = clicks.iter().find(|c| c.len() != mask.len()) {
            return Err(SimError::Unsupported(format!(
                "click sequence of length {} does not match {} windows",
                bad.len(),
                mask.len()
            )));
        }
        if mask.is_empty() {
            return Err(SimError::Envelope(EnvelopeError::EmptyGrid));
        }
        let on_count = mask.count_ones() as u64;
        Ok(Self {
            intensity_ratio: on_count as f64 / mask.len() as f64,
            clicks,
            mask,
            on_count,
            fingerprint,
            collision_count,
        })
    }

    pub fn detector_count(&self) -> usize {
        self.clicks.len()
    }

    pub fn detector(&self, index: usize) -> &BitSlice<u64, Lsb0> {
        &self.clicks[index]
    }

    pub fn detectors(&self) -> impl Iterator<Item = &BitSlice<u64, Lsb0>> {
        self.clicks.iter().map(|c| c.as_bitslice())
    }

    pub fn mask(&self) -> &BitSlice<u64, Lsb0> {
        &self.mask
    }

    /// N
    pub fn window_count(&self) -> u64 {
        self.mask.len() as u64
    }

    /// M
    pub fn on_count(&self) -> u64 {
        self.on_count
    }

    pub fn intensity_ratio(&self) -> f64 {
        self.intensity_ratio
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn collision_count(&self) -> u64 {
        self.collision_count
    }

    pub fn click_counts(&self) -> Vec<u64> {
        self.clicks.iter().map(|c| c.count_ones() as u64).collect()
    }

    /// Clicks, mask and collision count agree (fingerprints may differ).
    pub fn same_observations(&self, other: &ClickSeries) -> bool {
        self.clicks == other.clicks
            && self.mask == other.mask
            && self.collision_count == other.collision_count
    }
}

/// Per-pulse outcomes of the detector-pair ensemble: bit `p * pairs + k`
/// of `x`/`y` is the click of pair `k`'s first/second detector on pulse `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialOutcomes {
    pub pairs: usize,
    pub x: BitVec<u64, Lsb0>,
    pub y: BitVec<u64, Lsb0>,
    pub window_count: u64,
    pub intensity_ratio: f64,
}

impl SpatialOutcomes {
    pub fn pulse_count(&self) -> usize {
        self.x.len().checked_div(self.pairs).unwrap_or(0)
    }

    /// Outcomes of pair `pair` on pulse `pulse`.
    pub fn outcome(&self, pulse: usize, pair: usize) -> (bool, bool) {
        let i = pulse * self.pairs + pair;
        (self.x[i], self.y[i])
    }
}

/// Runs the temporal (or pulse-to-pulse) measurement.
pub fn simulate(config: &ExperimentConfig) -> Result<ClickSeries, SimError> {
    if let MeasurementMode::SpatialEnsemble { .. } = config.mode {
        return Err(SimError::WrongMode {
            operation: "simulate",
            mode: config.mode,
        });
    }
    config.validate()?;
    let weights = window_weights(&config.train, &config.grid)?;
    let pulse_source = config.pulse_source()?;
    let streams = Streams::new(config.seed);
    let n = config.grid.window_count() as usize;

    let photons = distribute_photons(&weights, &pulse_source, &streams);

    let detectors = &config.detectors;
    let probs = config.splitter.port_probs();
    let hits: Vec<(u64, u64)> = photons
        .par_iter()
        .map(|&(window, count)| {
            let mut rng = streams.stream(Domain::Window, window);
            let mut ports = vec![0u64; probs.len()];
            detector::split_into(count, probs, &mut rng, &mut ports);
            let mut bits = 0u64;
            for (j, (&k, spec)) in ports.iter().zip(detectors).enumerate() {
                if detector::detects(k, spec, &mut rng) {
                    bits |= 1 << j;
                }
            }
            (window, bits)
        })
        .collect();

    let detector_count = detectors.len();
    let mut clicks: Vec<BitVec<u64, Lsb0>> = (0..detector_count)
        .map(|_| BitVec::repeat(false, n))
        .collect();
    for (j, spec) in detectors.iter().enumerate() {
        if spec.dark_prob() > 0.0 {
            fill_dark_counts(&mut clicks[j], j, detector_count, spec, &streams);
        }
    }
    for (window, bits) in hits {
        for (j, series) in clicks.iter_mut().enumerate() {
            if bits >> j & 1 == 1 {
                series.set(window as usize, true);
            }
        }
    }

    ClickSeries::new(clicks, weights.mask().to_bitvec(), config.fingerprint(), 0)
}

/// Draws every pulse's photon number and spreads it over the pulse's
/// windows. Returns `(window, photons)` for photon-bearing windows, sorted
/// by window with overlapping contributions merged.
fn distribute_photons(
    weights: &WindowWeights,
    source: &PhotonSource,
    streams: &Streams,
) -> Vec<(u64, u64)> {
    if weights.train().photons_per_pulse() == 0.0 {
        return Vec::new();
    }
    let pulses = weights.pulse_count();
    let chunks = pulses.div_ceil(PULSE_CHUNK as u64);
    let mut photons: Vec<(u64, u64)> = (0..chunks)
        .into_par_iter()
        .flat_map_iter(|chunk| {
            let start = chunk * PULSE_CHUNK as u64;
            let end = (start + PULSE_CHUNK as u64).min(pulses);
            let mut out = Vec::new();
            for p in start..end {
                let mut rng = streams.stream(Domain::Pulse, p);
                let total = source.sample(&mut rng);
                if total == 0 {
                    continue;
                }
                let footprint = weights.footprint(p);
                if let [(window, _)] = footprint.windows[..] {
                    out.push((window, total));
                    continue;
                }
                let fractions: Vec<f64> = footprint.windows.iter().map(|&(_, f)| f).collect();
                let mut counts = vec![0u64; fractions.len()];
                detector::split_into(total, &fractions, &mut rng, &mut counts);
                for (&(window, _), &k) in footprint.windows.iter().zip(&counts) {
                    if k > 0 {
                        out.push((window, k));
                    }
                }
            }
            out
        })
        .collect();
    photons.sort_unstable();
    let mut merged: Vec<(u64, u64)> = Vec::with_capacity(photons.len());
    for (window, k) in photons {
        match merged.last_mut() {
            Some(last) if last.0 == window => last.1 += k,
            _ => merged.push((window, k)),
        }
    }
    merged
}

fn fill_dark_counts(
    series: &mut BitVec<u64, Lsb0>,
    detector: usize,
    detector_count: usize,
    spec: &DetectorSpec,
    streams: &Streams,
) {
    let n = series.len();
    series
        .as_raw_mut_slice()
        .par_iter_mut()
        .enumerate()
        .for_each(|(k, word)| {
            for bit in 0..64 {
                let window = k * 64 + bit;
                if window >= n {
                    break;
                }
                let index = (window * detector_count + detector) as u64;
                let mut rng = streams.stream(Domain::Dark, index);
                if detector::dark_fires(spec, &mut rng) {
                    *word |= 1 << bit;
                }
            }
        });
}

/// Runs the detector-pair ensemble: every pulse is split equally over
/// `2 * pairs` ports, port `2k` feeding pair `k`'s first detector and port
/// `2k + 1` its second. Pulses must each occupy a single window.
pub fn simulate_spatial(config: &ExperimentConfig) -> Result<SpatialOutcomes, SimError> {
    let MeasurementMode::SpatialEnsemble { pairs } = config.mode else {
        return Err(SimError::WrongMode {
            operation: "simulate_spatial",
            mode: config.mode,
        });
    };
    config.validate()?;
    let weights = window_weights(&config.train, &config.grid)?;
    if !weights.single_window_pulses() {
        return Err(SimError::Unsupported(
            "spatial ensemble requires every pulse to occupy a single window".into(),
        ));
    }
    let pulse_source = config.pulse_source()?;
    let streams = Streams::new(config.seed);
    let pairs = pairs as usize;
    let ports = vec![1.0 / (2 * pairs) as f64; 2 * pairs];
    let (det_x, det_y) = (&config.detectors[0], &config.detectors[1]);
    let pulses = weights.pulse_count();

    let per_pulse: Vec<(Vec<u64>, Vec<u64>)> = (0..pulses)
        .into_par_iter()
        .map(|p| {
            let window = weights.footprint(p).windows[0].0;
            let total = pulse_source.sample(&mut streams.stream(Domain::Pulse, p));
            let mut rng = streams.stream(Domain::Window, window);
            let mut counts = vec![0u64; ports.len()];
            detector::split_into(total, &ports, &mut rng, &mut counts);
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for k in 0..pairs {
                let x = detector::detects(counts[2 * k], det_x, &mut rng)
                    | detector::dark_fires(det_x, &mut rng);
                let y = detector::detects(counts[2 * k + 1], det_y, &mut rng)
                    | detector::dark_fires(det_y, &mut rng);
                if x {
                    xs.push(k as u64);
                }
                if y {
                    ys.push(k as u64);
                }
            }
            (xs, ys)
        })
        .collect();

    let len = pulses as usize * pairs;
    let mut x = BitVec::repeat(false, len);
    let mut y = BitVec::repeat(false, len);
    for (p, (xs, ys)) in per_pulse.into_iter().enumerate() {
        for k in xs {
            x.set(p * pairs + k as usize, true);
        }
        for k in ys {
            y.set(p * pairs + k as usize, true);
        }
    }
    Ok(SpatialOutcomes {
        pairs,
        x,
        y,
        window_count: config.grid.window_count(),
        intensity_ratio: weights.intensity_ratio(),
    })
}
