//! Simulation and analysis of second-order coherence measurements on
//! pulsed light with single-click detectors.
//!
//! The pipeline runs bottom-up:
//!
//! - [`statistics`]: photon-number distributions and their coherence values.
//! - [`envelope`]: pulse trains discretized onto detector reset windows.
//! - [`detector`]: click detectors and beamsplitters.
//! - [`hbt`]: the Monte Carlo engine producing click series.
//! - [`correlate`]: g2/gn estimators, block bootstrap and the exact oracle.
//! - [`timetag`]: TTG2/CSV time-tag formats and window binning.
//! - [`analysis`]: estimator pipelines and parameter sweeps.

pub mod analysis;
pub mod correlate;
pub mod detector;
pub mod envelope;
pub mod hbt;
pub mod statistics;
pub mod timetag;

pub use bitvec;

pub use analysis::{analyze_series, analyze_spatial, sweep, AnalysisOptions, AnalysisRow, EstimatorKind, SweepAxis};
pub use correlate::{
    g2_on_window, g2_pulse_to_pulse, g2_spatial, g2_temporal, gn_product, mean_partitioned, oracle_click_probs,
    stderr_block_bootstrap, BootstrapConfig, CorrelationEstimate, Correlator, EstimateError, Normalization,
    OracleResult,
};
pub use detector::{click, split_photons, weak_field_click_prob, DetectorSpec, SplitterSpec};
pub use envelope::{intensity_ratio, window_weights, PulseShape, PulseTrain, WindowGrid, WindowWeights};
pub use hbt::{simulate, simulate_spatial, ClickSeries, ExperimentConfig, MeasurementMode, SimError, SpatialOutcomes};
pub use statistics::{analytic_gn, factorial_moment, PhotonSource};
pub use timetag::{TimeTagHeader, TimeTagRecord};
