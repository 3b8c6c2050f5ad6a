//! Deterministic pulse-train envelopes on a grid of detector reset windows.
//!
//! Times are in picoseconds throughout. A pulse train is a periodic
//! intensity profile carrying `photons_per_pulse` mean photons per pulse;
//! discretizing it onto the window grid gives the mean photon number of
//! every window and the on/off mask from which the intensity ratio
//! `R_I = M / N` follows.
//!
//! Weights are never stored densely: each pulse's footprint is recomputed
//! on demand, so grids of 10^8 windows cost one bit per window (the mask).

use bitvec::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use thiserror::Error;

/// Normalized per-window weight a window must exceed to count as "on".
pub const ON_THRESHOLD: f64 = 1e-12;
/// Smooth envelopes are cut at this many widths either side of the center.
pub const TRUNCATION_WIDTHS: f64 = 5.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvelopeError {
    #[error("pulse_width must be positive and finite, got {0}")]
    InvalidWidth(f64),
    #[error("period must be positive and finite, got {0}")]
    InvalidPeriod(f64),
    #[error("offset must lie in [0, period), got {offset} for period {period}")]
    InvalidOffset { offset: f64, period: f64 },
    #[error("photons_per_pulse must be finite and non-negative, got {0}")]
    InvalidPhotons(f64),
    #[error("window_duration must be positive and finite, got {0}")]
    InvalidWindow(f64),
    #[error("window_count must be at least 1")]
    EmptyGrid,
    #[error("grid spans {span} ps, shorter than one period of {period} ps")]
    GridTooShort { span: f64, period: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseShape {
    Rect,
    Gaussian,
    Sech2,
}

impl PulseShape {
    /// Cumulative fraction of the pulse energy before `t` (relative to the
    /// pulse center) for an intensity profile of the given width, before
    /// truncation.
    fn cdf(self, t: f64, width: f64) -> f64 {
        match self {
            PulseShape::Rect => ((t + width / 2.0) / width).clamp(0.0, 1.0),
            PulseShape::Gaussian => {
                let sigma = width / (2.0 * (2.0 * std::f64::consts::LN_2).sqrt());
                0.5 * erfc(-t / (sigma * std::f64::consts::SQRT_2))
            }
            PulseShape::Sech2 => {
                // sech^2(t/T) has FWHM 2 T acosh(sqrt 2).
                let scale = width / (2.0 * std::f64::consts::SQRT_2.acosh());
                1.0 / (1.0 + (-2.0 * t / scale).exp())
            }
        }
    }

    /// Energy fraction in `[lo, hi)`. Every shape is symmetric, so the
    /// upper tail is evaluated as a lower tail to avoid cancellation.
    fn mass(self, lo: f64, hi: f64, width: f64) -> f64 {
        if lo >= 0.0 {
            self.cdf(-lo, width) - self.cdf(-hi, width)
        } else if hi <= 0.0 {
            self.cdf(hi, width) - self.cdf(lo, width)
        } else {
            1.0 - self.cdf(lo, width) - self.cdf(-hi, width)
        }
    }

    fn half_support(self, width: f64) -> f64 {
        match self {
            PulseShape::Rect => width / 2.0,
            _ => TRUNCATION_WIDTHS * width,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowGrid {
    window_duration: f64,
    window_count: u64,
}

impl WindowGrid {
    pub fn new(window_duration: f64, window_count: u64) -> Result<Self, EnvelopeError> {
        if !(window_duration.is_finite() && window_duration > 0.0) {
            return Err(EnvelopeError::InvalidWindow(window_duration));
        }
        if window_count == 0 {
            return Err(EnvelopeError::EmptyGrid);
        }
        Ok(Self {
            window_duration,
            window_count,
        })
    }

    pub fn window_duration(&self) -> f64 {
        self.window_duration
    }

    pub fn window_count(&self) -> u64 {
        self.window_count
    }

    pub fn span(&self) -> f64 {
        self.window_duration * self.window_count as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseTrain {
    shape: PulseShape,
    pulse_width: f64,
    period: f64,
    photons_per_pulse: f64,
    offset: f64,
}

impl PulseTrain {
    /// `pulse_width` is the intensity FWHM for smooth shapes and the full
    /// width for `Rect`; `offset` is the first pulse center.
    pub fn new(
        shape: PulseShape,
        pulse_width: f64,
        period: f64,
        photons_per_pulse: f64,
        offset: f64,
    ) -> Result<Self, EnvelopeError> {
        if !(pulse_width.is_finite() && pulse_width > 0.0) {
            return Err(EnvelopeError::InvalidWidth(pulse_width));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(EnvelopeError::InvalidPeriod(period));
        }
        if !(offset.is_finite() && (0.0..period).contains(&offset)) {
            return Err(EnvelopeError::InvalidOffset { offset, period });
        }
        if !(photons_per_pulse.is_finite() && photons_per_pulse >= 0.0) {
            return Err(EnvelopeError::InvalidPhotons(photons_per_pulse));
        }
        Ok(Self {
            shape,
            pulse_width,
            period,
            photons_per_pulse,
            offset,
        })
    }

    /// A train whose first pulse is centered on a block of
    /// `ceil(pulse_width / window)` whole windows starting at t = 0.
    /// Pulses no wider than a window sit in the middle of window 0; a `Rect`
    /// pulse spanning an integer number of windows fills them exactly.
    pub fn aligned(
        shape: PulseShape,
        pulse_width: f64,
        period: f64,
        photons_per_pulse: f64,
        grid: &WindowGrid,
    ) -> Result<Self, EnvelopeError> {
        let tau = grid.window_duration();
        let windows = (pulse_width / tau).ceil().max(1.0);
        let offset = if period.is_finite() && period > 0.0 {
            (windows * tau / 2.0) % period
        } else {
            0.0
        };
        Self::new(shape, pulse_width, period, photons_per_pulse, offset)
    }

    pub fn shape(&self) -> PulseShape {
        self.shape
    }
    pub fn pulse_width(&self) -> f64 {
        self.pulse_width
    }
    pub fn period(&self) -> f64 {
        self.period
    }
    pub fn photons_per_pulse(&self) -> f64 {
        self.photons_per_pulse
    }
    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn with_photons_per_pulse(mut self, photons: f64) -> Result<Self, EnvelopeError> {
        if !(photons.is_finite() && photons >= 0.0) {
            return Err(EnvelopeError::InvalidPhotons(photons));
        }
        self.photons_per_pulse = photons;
        Ok(self)
    }
}

/// Windows touched by one pulse and the fraction of its photons each receives.
#[derive(Debug, Clone, PartialEq)]
pub struct Footprint {
    pub windows: Vec<(u64, f64)>,
}

/// Discretized envelope: implicit per-window weights plus the on/off mask.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowWeights {
    train: PulseTrain,
    grid: WindowGrid,
    pulse_count: u64,
    mask: BitVec<u64, Lsb0>,
    on_count: u64,
    single_window_pulses: bool,
}

/// Discretizes `train` onto `grid`.
///
/// Pulses `0..P` with `P = floor(span / period)` are laid down at
/// `offset + p * period`. Window indices wrap modulo the window count, so
/// the grid behaves as a ring and every pulse deposits exactly
/// `photons_per_pulse`. Per-pulse window fractions at or below
/// [`ON_THRESHOLD`] are dropped and the remainder renormalized.
pub fn window_weights(train: &PulseTrain, grid: &WindowGrid) -> Result<WindowWeights, EnvelopeError> {
    let span = grid.span();
    let periods = span / train.period * (1.0 + 1e-12);
    if periods < 1.0 {
        return Err(EnvelopeError::GridTooShort {
            span,
            period: train.period,
        });
    }
    let pulse_count = periods.floor() as u64;
    let n = grid.window_count as usize;
    let mut mask: BitVec<u64, Lsb0> = BitVec::repeat(false, n);
    let mut single = true;
    for p in 0..pulse_count {
        let fp = footprint(train, grid, p);
        single &= fp.windows.len() == 1;
        for &(w, _) in &fp.windows {
            mask.set(w as usize, true);
        }
    }
    let on_count = mask.count_ones() as u64;
    Ok(WindowWeights {
        train: *train,
        grid: *grid,
        pulse_count,
        mask,
        on_count,
        single_window_pulses: single,
    })
}

fn footprint(train: &PulseTrain, grid: &WindowGrid, pulse: u64) -> Footprint {
    let tau = grid.window_duration;
    let n = grid.window_count as i64;
    let center = train.offset + pulse as f64 * train.period;
    let half = train.shape.half_support(train.pulse_width);
    let mass = |lo: f64, hi: f64| train.shape.mass(lo, hi, train.pulse_width);
    let kept_mass = mass(-half, half);
    let first = ((center - half) / tau).floor() as i64;
    let last = ((center + half) / tau).ceil() as i64 - 1;
    let mut windows = Vec::with_capacity((last - first + 1).max(1) as usize);
    for w in first..=last {
        let lo = (w as f64 * tau - center).max(-half);
        let hi = ((w + 1) as f64 * tau - center).min(half);
        if hi <= lo {
            continue;
        }
        let frac = mass(lo, hi) / kept_mass;
        if frac > ON_THRESHOLD {
            windows.push((w.rem_euclid(n) as u64, frac));
        }
    }
    let total: f64 = windows.iter().map(|&(_, f)| f).sum();
    for entry in &mut windows {
        entry.1 /= total;
    }
    Footprint { windows }
}

impl WindowWeights {
    pub fn train(&self) -> &PulseTrain {
        &self.train
    }

    pub fn grid(&self) -> &WindowGrid {
        &self.grid
    }

    /// Number of whole pulses laid on the grid.
    pub fn pulse_count(&self) -> u64 {
        self.pulse_count
    }

    pub fn window_count(&self) -> u64 {
        self.grid.window_count
    }

    pub fn mask(&self) -> &BitSlice<u64, Lsb0> {
        &self.mask
    }

    /// M, the number of on-windows.
    pub fn on_count(&self) -> u64 {
        self.on_count
    }

    /// True when every pulse lands in exactly one window.
    pub fn single_window_pulses(&self) -> bool {
        self.single_window_pulses
    }

    /// Fractions of pulse `p`'s photons per window (summing to 1).
    pub fn footprint(&self, pulse: u64) -> Footprint {
        footprint(&self.train, &self.grid, pulse)
    }

    /// Dense mean-photon-number weights, one per window. Allocates N values.
    pub fn weights(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.window_count as usize];
        let ppp = self.train.photons_per_pulse;
        for p in 0..self.pulse_count {
            for (w, frac) in self.footprint(p).windows {
                out[w as usize] += ppp * frac;
            }
        }
        out
    }

    pub fn intensity_ratio(&self) -> f64 {
        intensity_ratio(self)
    }
}

/// R_I = M / N.
pub fn intensity_ratio(weights: &WindowWeights) -> f64 {
    weights.on_count as f64 / weights.grid.window_count as f64
}
