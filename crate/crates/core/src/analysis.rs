//! Estimator pipelines over simulated or binned click series, and
//! parameter sweeps that rerun the simulation along one axis.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::correlate::{BootstrapConfig, CorrelationEstimate, Correlator, EstimateError};
use crate::envelope::{EnvelopeError, PulseTrain};
use crate::hbt::{simulate, simulate_spatial, ClickSeries, ExperimentConfig, MeasurementMode, SimError, SpatialOutcomes};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    G2Temporal,
    G2OnWindow,
    /// `g2_temporal * R_I`, which equals `g2_on_window` without dark counts.
    G2TemporalTimesRi,
    /// n-fold product over every detector of the series, full-N normalized.
    GnTemporal,
    GnOnWindow,
    /// Lags `1..=max_lag`.
    PulseToPulse,
    Spatial,
}

impl EstimatorKind {
    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::G2Temporal => "g2_temporal",
            EstimatorKind::G2OnWindow => "g2_on_window",
            EstimatorKind::G2TemporalTimesRi => "g2_temporal_x_R_I",
            EstimatorKind::GnTemporal => "gn_temporal",
            EstimatorKind::GnOnWindow => "gn_on_window",
            EstimatorKind::PulseToPulse => "g2_pulse_to_pulse",
            EstimatorKind::Spatial => "g2_spatial",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        [
            EstimatorKind::G2Temporal,
            EstimatorKind::G2OnWindow,
            EstimatorKind::G2TemporalTimesRi,
            EstimatorKind::GnTemporal,
            EstimatorKind::GnOnWindow,
            EstimatorKind::PulseToPulse,
            EstimatorKind::Spatial,
        ]
        .into_iter()
        .find(|k| k.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisOptions {
    pub estimators: Vec<EstimatorKind>,
    pub bootstrap: BootstrapConfig,
    pub max_lag: u64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            estimators: vec![
                EstimatorKind::G2Temporal,
                EstimatorKind::G2OnWindow,
                EstimatorKind::G2TemporalTimesRi,
            ],
            bootstrap: BootstrapConfig::default(),
            max_lag: 1,
        }
    }
}

/// One estimator outcome with the series-level context it was computed in.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisRow {
    pub estimator: String,
    pub result: Result<CorrelationEstimate, EstimateError>,
    pub window_count: u64,
    pub on_count: u64,
    pub intensity_ratio: f64,
}

/// Runs the selected estimators on the first two detectors (all detectors
/// for the n-fold ones). Spatial rows are skipped here; see
/// [`analyze_spatial`].
pub fn analyze_series(series: &ClickSeries, options: &AnalysisOptions) -> Vec<AnalysisRow> {
    let corr = Correlator::new(options.bootstrap);
    let row = |estimator: String, result| AnalysisRow {
        estimator,
        result,
        window_count: series.window_count(),
        on_count: series.on_count(),
        intensity_ratio: series.intensity_ratio(),
    };
    let pair = if series.detector_count() >= 2 {
        Ok((series.detector(0), series.detector(1)))
    } else {
        Err(EstimateError::TooFewSeries {
            needed: 2,
            found: series.detector_count(),
        })
    };
    let all: Vec<_> = series.detectors().collect();
    let mut rows = Vec::new();
    for &kind in &options.estimators {
        match kind {
            EstimatorKind::G2Temporal => {
                rows.push(row(kind.name().into(), pair.clone().and_then(|(x, y)| corr.g2_temporal(x, y))))
            }
            EstimatorKind::G2OnWindow => rows.push(row(
                kind.name().into(),
                pair.clone().and_then(|(x, y)| corr.g2_on_window(x, y, series.mask())),
            )),
            EstimatorKind::G2TemporalTimesRi => {
                let ri = series.intensity_ratio();
                let scaled = pair.clone().and_then(|(x, y)| corr.g2_temporal(x, y)).map(|mut e| {
                    e.value *= ri;
                    e.stderr = e.stderr.map(|s| s * ri);
                    e
                });
                rows.push(row(kind.name().into(), scaled));
            }
            EstimatorKind::GnTemporal => {
                rows.push(row(format!("g{}_temporal", all.len()), corr.gn_product(&all, None, 1)))
            }
            EstimatorKind::GnOnWindow => rows.push(row(
                format!("g{}_on_window", all.len()),
                corr.gn_product(&all, Some(series.mask()), 1),
            )),
            EstimatorKind::PulseToPulse => {
                for lag in 1..=options.max_lag {
                    rows.push(row(
                        format!("{}_lag{lag}", kind.name()),
                        pair.clone()
                            .and_then(|(x, y)| corr.g2_pulse_to_pulse(x, y, series.mask(), lag)),
                    ));
                }
            }
            EstimatorKind::Spatial => {}
        }
    }
    rows
}

pub fn analyze_spatial(outcomes: &SpatialOutcomes, options: &AnalysisOptions) -> Vec<AnalysisRow> {
    let corr = Correlator::new(options.bootstrap);
    let pulses = outcomes.pulse_count() as u64;
    vec![AnalysisRow {
        estimator: EstimatorKind::Spatial.name().into(),
        result: corr.g2_spatial(outcomes),
        window_count: outcomes.window_count,
        on_count: pulses,
        intensity_ratio: outcomes.intensity_ratio,
    }]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Pulse width in picoseconds, at fixed period and photons per pulse.
    PulseWidth,
    /// Intensity ratio, realized by setting the period to `window / R_I`.
    IntensityRatio,
    /// Mean photons per pulse.
    Mean,
    /// Efficiency of every detector.
    Efficiency,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::PulseWidth => "pulse_width",
            SweepAxis::IntensityRatio => "R_I",
            SweepAxis::Mean => "mean",
            SweepAxis::Efficiency => "efficiency",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        [
            SweepAxis::PulseWidth,
            SweepAxis::IntensityRatio,
            SweepAxis::Mean,
            SweepAxis::Efficiency,
        ]
        .into_iter()
        .find(|a| a.name() == name)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SweepError {
    #[error("sweep axis has no values")]
    EmptyAxis,
    #[error("invalid {axis} value {value}: {reason}")]
    InvalidValue {
        axis: &'static str,
        value: f64,
        reason: String,
    },
    #[error(transparent)]
    Simulation(#[from] SimError),
}

/// Results for one axis value.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub axis_value: f64,
    pub rows: Vec<AnalysisRow>,
}

impl SweepRow {
    pub fn get(&self, estimator: &str) -> Option<&AnalysisRow> {
        self.rows.iter().find(|r| r.estimator == estimator)
    }
}

/// The base configuration with one axis set to `value`.
pub fn apply_axis(base: &ExperimentConfig, axis: SweepAxis, value: f64) -> Result<ExperimentConfig, SweepError> {
    let invalid = |reason: String| SweepError::InvalidValue {
        axis: axis.name(),
        value,
        reason,
    };
    let env = |e: EnvelopeError| invalid(e.to_string());
    let mut cfg = base.clone();
    let t = base.train;
    match axis {
        SweepAxis::PulseWidth => {
            cfg.train = PulseTrain::aligned(t.shape(), value, t.period(), t.photons_per_pulse(), &base.grid)
                .map_err(env)?;
        }
        SweepAxis::IntensityRatio => {
            if !(value > 0.0 && value <= 1.0) {
                return Err(invalid("R_I must lie in (0, 1]".into()));
            }
            let period = base.grid.window_duration() / value;
            cfg.train = PulseTrain::aligned(t.shape(), t.pulse_width(), period, t.photons_per_pulse(), &base.grid)
                .map_err(env)?;
        }
        SweepAxis::Mean => {
            cfg.train = t.with_photons_per_pulse(value).map_err(env)?;
        }
        SweepAxis::Efficiency => {
            cfg.detectors = base
                .detectors
                .iter()
                .map(|d| d.with_efficiency(value))
                .collect::<Result<_, _>>()
                .map_err(|e| invalid(e.to_string()))?;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Simulates and analyzes the base configuration once per axis value.
/// Every row reuses the base seed.
pub fn sweep(
    base: &ExperimentConfig,
    axis: SweepAxis,
    values: &[f64],
    options: &AnalysisOptions,
) -> Result<Vec<SweepRow>, SweepError> {
    if values.is_empty() {
        return Err(SweepError::EmptyAxis);
    }
    let configs: Vec<ExperimentConfig> = values
        .iter()
        .map(|&v| apply_axis(base, axis, v))
        .collect::<Result<_, _>>()?;
    configs
        .iter()
        .zip(values)
        .map(|(cfg, &axis_value)| {
            let rows = match cfg.mode {
                MeasurementMode::SpatialEnsemble { .. } => analyze_spatial(&simulate_spatial(cfg)?, options),
                _ => analyze_series(&simulate(cfg)?, options),
            };
            Ok(SweepRow { axis_value, rows })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envelope::{PulseShape, WindowGrid};
    use crate::statistics::PhotonSource;

    fn base() -> ExperimentConfig {
        let grid = WindowGrid::new(1000.0, 8000).unwrap();
        let train = PulseTrain::aligned(PulseShape::Rect, 1000.0, 80_000.0, 0.5, &grid).unwrap();
        ExperimentConfig::hbt(PhotonSource::thermal(0.5).unwrap(), train, grid, 1.0, 3).unwrap()
    }

    #[test]
    fn axis_application() {
        let b = base();
        let c = apply_axis(&b, SweepAxis::PulseWidth, 4000.0).unwrap();
        assert_eq!(c.train.pulse_width(), 4000.0);
        assert_eq!(c.train.offset(), 2000.0);
        let c = apply_axis(&b, SweepAxis::IntensityRatio, 0.25).unwrap();
        assert_eq!(c.train.period(), 4000.0);
        let c = apply_axis(&b, SweepAxis::Efficiency, 0.3).unwrap();
        assert!(c.detectors.iter().all(|d| d.efficiency() == 0.3));
        assert!(apply_axis(&b, SweepAxis::IntensityRatio, 0.0).is_err());
        assert!(apply_axis(&b, SweepAxis::Mean, -1.0).is_err());
    }

    #[test]
    fn empty_and_single_axis() {
        let opts = AnalysisOptions::default();
        assert_eq!(sweep(&base(), SweepAxis::Mean, &[], &opts), Err(SweepError::EmptyAxis));
        let rows = sweep(&base(), SweepAxis::Mean, &[0.5], &opts).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].rows.len(), 3);
    }

    #[test]
    fn estimator_names_round_trip() {
        for k in [
            EstimatorKind::G2Temporal,
            EstimatorKind::G2OnWindow,
            EstimatorKind::G2TemporalTimesRi,
            EstimatorKind::GnTemporal,
            EstimatorKind::GnOnWindow,
            EstimatorKind::PulseToPulse,
            EstimatorKind::Spatial,
        ] {
            assert_eq!(EstimatorKind::parse(k.name()), Some(k));
        }
        assert_eq!(SweepAxis::parse("R_I"), Some(SweepAxis::IntensityRatio));
    }
}
