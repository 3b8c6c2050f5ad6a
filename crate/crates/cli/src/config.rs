//! Flat `key = value` run configuration.
//!
//! Keys are dot-sectioned (`source.kind`, `detector.0.efficiency`). Lines
//! starting with `#` are comments. Unknown or repeated keys are rejected.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use pulsecorr::analysis::{AnalysisOptions, EstimatorKind, SweepAxis};
use pulsecorr::correlate::BootstrapConfig;
use pulsecorr::detector::{DetectorSpec, SplitterSpec};
use pulsecorr::envelope::{PulseShape, PulseTrain, WindowGrid};
use pulsecorr::hbt::{ExperimentConfig, MeasurementMode};
use pulsecorr::statistics::PhotonSource;
use pulsecorr::timetag::OutOfRange;

const KEYS: &[&str] = &[
    "source.kind",
    "source.mean",
    "source.m",
    "source.pmf",
    "pulse.shape",
    "pulse.width",
    "pulse.period",
    "pulse.photons_per_pulse",
    "pulse.offset",
    "grid.window_duration",
    "grid.window_count",
    "splitter.port_probs",
    "mode",
    "mode.pairs",
    "mode.max_lag",
    "seed",
    "output.timetags",
    "output.summary",
    "output.resolution_ps",
    "analysis.estimators",
    "analysis.out_of_range",
    "bootstrap.blocks",
    "bootstrap.replicates",
    "bootstrap.seed",
    "sweep.axis",
    "sweep.values",
];

const DETECTOR_FIELDS: &[&str] = &["efficiency", "dark_prob", "label"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub key: Option<String>,
    pub message: String,
}

impl ConfigError {
    fn at(key: &str, message: impl Into<String>) -> Self {
        Self {
            key: Some(key.to_string()),
            message: message.into(),
        }
    }

    fn general(message: impl Into<String>) -> Self {
        Self {
            key: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.key {
            Some(key) => write!(f, "{key}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

fn known_key(key: &str) -> bool {
    if KEYS.contains(&key) {
        return true;
    }
    let parts: Vec<&str> = key.split('.').collect();
    matches!(parts.as_slice(), ["detector", index, field]
        if index.parse::<usize>().is_ok() && DETECTOR_FIELDS.contains(field))
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunConfig {
    entries: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::general(format!("line {}: expected key = value", i + 1)))?;
            cfg.insert(key.trim(), value.trim(), false)
                .map_err(|e| ConfigError::general(format!("line {}: {e}", i + 1)))?;
        }
        Ok(cfg)
    }

    /// Applies a `key=value` override, replacing any existing entry.
    pub fn set(&mut self, assignment: &str) -> Result<(), ConfigError> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| ConfigError::general(format!("override '{assignment}': expected key=value")))?;
        self.insert(key.trim(), value.trim(), true)
    }

    fn insert(&mut self, key: &str, value: &str, replace: bool) -> Result<(), ConfigError> {
        if !known_key(key) {
            return Err(ConfigError::at(key, "unknown key"));
        }
        if !replace && self.entries.contains_key(key) {
            return Err(ConfigError::at(key, "duplicate key"));
        }
        self.entries.insert(key.to_string(), value.to_string());
        Ok(())
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    fn require(&self, key: &str) -> Result<&str, ConfigError> {
        self.raw(key).ok_or_else(|| ConfigError::at(key, "missing required key"))
    }

    fn parse_value<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        self.raw(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|_| ConfigError::at(key, format!("cannot parse '{v}'")))
            })
            .transpose()
    }

    fn real(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.parse_value::<f64>(key)? {
            Some(v) if !v.is_finite() => Err(ConfigError::at(key, "must be finite")),
            other => Ok(other),
        }
    }

    fn require_real(&self, key: &str) -> Result<f64, ConfigError> {
        self.require(key)?;
        Ok(self.real(key)?.expect("present"))
    }

    /// Unsigned integer; accepts integral reals such as `1e6`.
    fn integer(&self, key: &str) -> Result<Option<u64>, ConfigError> {
        let Some(v) = self.raw(key) else {
            return Ok(None);
        };
        if let Ok(n) = v.parse::<u64>() {
            return Ok(Some(n));
        }
        match v.parse::<f64>() {
            Ok(x) if x >= 0.0 && x.fract() == 0.0 && x < 2f64.powi(64) => Ok(Some(x as u64)),
            _ => Err(ConfigError::at(key, format!("expected a non-negative integer, got '{v}'"))),
        }
    }

    fn require_integer(&self, key: &str) -> Result<u64, ConfigError> {
        self.require(key)?;
        Ok(self.integer(key)?.expect("present"))
    }

    fn real_list(&self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        let Some(v) = self.raw(key) else {
            return Ok(None);
        };
        v.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| ConfigError::at(key, format!("cannot parse '{s}'")))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }

    pub fn seed(&self) -> Result<u64, ConfigError> {
        Ok(self.integer("seed")?.unwrap_or(0))
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.entries.insert("seed".into(), seed.to_string());
    }

    pub fn source(&self) -> Result<PhotonSource, ConfigError> {
        let kind = self.require("source.kind")?;
        let mean = |key: &str| -> Result<f64, ConfigError> {
            let m = self.require_real(key)?;
            if m < 0.0 {
                return Err(ConfigError::at(key, "must be >= 0"));
            }
            Ok(m)
        };
        let source = match kind {
            "coherent" => PhotonSource::coherent(mean("source.mean")?),
            "thermal" => PhotonSource::thermal(mean("source.mean")?),
            "fock" => Ok(PhotonSource::fock(self.require_integer("source.m")?)),
            "empirical" => {
                let text = self.require("source.pmf")?;
                let entries = text
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|pair| {
                        let (n, p) = pair.split_once(':').ok_or_else(|| {
                            ConfigError::at("source.pmf", format!("expected count:probability, got '{pair}'"))
                        })?;
                        let n = n.trim().parse::<u64>();
                        let p = p.trim().parse::<f64>();
                        match (n, p) {
                            (Ok(n), Ok(p)) => Ok((n, p)),
                            _ => Err(ConfigError::at("source.pmf", format!("cannot parse '{pair}'"))),
                        }
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                PhotonSource::empirical(entries)
            }
            other => {
                return Err(ConfigError::at(
                    "source.kind",
                    format!("unknown kind '{other}' (coherent, thermal, fock, empirical)"),
                ))
            }
        };
        source.map_err(|e| ConfigError::at("source", e.to_string()))
    }

    pub fn grid(&self) -> Result<WindowGrid, ConfigError> {
        let duration = self.require_real("grid.window_duration")?;
        if duration <= 0.0 {
            return Err(ConfigError::at("grid.window_duration", "must be > 0"));
        }
        let count = self.require_integer("grid.window_count")?;
        if count == 0 {
            return Err(ConfigError::at("grid.window_count", "must be >= 1"));
        }
        WindowGrid::new(duration, count).map_err(|e| ConfigError::at("grid", e.to_string()))
    }

    /// The pulse train. `photons_per_pulse` defaults to `default_photons`
    /// (the source mean) when the key is absent.
    pub fn train(&self, grid: &WindowGrid, default_photons: Option<f64>) -> Result<PulseTrain, ConfigError> {
        let shape = match self.raw("pulse.shape").unwrap_or("rect") {
            "rect" => PulseShape::Rect,
            "gaussian" => PulseShape::Gaussian,
            "sech2" => PulseShape::Sech2,
            other => {
                return Err(ConfigError::at(
                    "pulse.shape",
                    format!("unknown shape '{other}' (rect, gaussian, sech2)"),
                ))
            }
        };
        let width = self.real("pulse.width")?.unwrap_or(grid.window_duration());
        if width <= 0.0 {
            return Err(ConfigError::at("pulse.width", "must be > 0"));
        }
        let period = self.require_real("pulse.period")?;
        if period <= 0.0 {
            return Err(ConfigError::at("pulse.period", "must be > 0"));
        }
        let photons = match self.real("pulse.photons_per_pulse")? {
            Some(p) => p,
            None => default_photons.ok_or_else(|| ConfigError::at("pulse.photons_per_pulse", "missing required key"))?,
        };
        if photons < 0.0 {
            return Err(ConfigError::at("pulse.photons_per_pulse", "must be >= 0"));
        }
        let train = match self.real("pulse.offset")? {
            Some(offset) => {
                if !(0.0..period).contains(&offset) {
                    return Err(ConfigError::at("pulse.offset", "must satisfy 0 <= offset < period"));
                }
                PulseTrain::new(shape, width, period, photons, offset)
            }
            None => PulseTrain::aligned(shape, width, period, photons, grid),
        };
        train.map_err(|e| ConfigError::at("pulse", e.to_string()))
    }

    fn detector_indices(&self) -> Result<usize, ConfigError> {
        let mut count = 0;
        for key in self.entries.keys().filter(|k| k.starts_with("detector.")) {
            let index: usize = key.split('.').nth(1).and_then(|s| s.parse().ok()).expect("validated key");
            count = count.max(index + 1);
        }
        for i in 0..count {
            if !DETECTOR_FIELDS
                .iter()
                .any(|f| self.entries.contains_key(&format!("detector.{i}.{f}")))
            {
                return Err(ConfigError::at(
                    &format!("detector.{i}"),
                    "detector indices must be contiguous from 0",
                ));
            }
        }
        Ok(count)
    }

    /// Configured detectors; two ideal unit-efficiency detectors `A`, `B`
    /// (or one per splitter port) when none are given.
    pub fn detectors(&self) -> Result<Vec<DetectorSpec>, ConfigError> {
        let count = self.detector_indices()?;
        if count == 0 {
            let ports = self.real_list("splitter.port_probs")?.map_or(2, |p| p.len());
            return (0..ports)
                .map(|i| {
                    let label = if ports == 2 { ["A", "B"][i].to_string() } else { format!("D{i}") };
                    DetectorSpec::ideal(1.0, label).map_err(|e| ConfigError::general(e.to_string()))
                })
                .collect();
        }
        (0..count)
            .map(|i| {
                let key = |f: &str| format!("detector.{i}.{f}");
                let efficiency = self.real(&key("efficiency"))?.unwrap_or(1.0);
                if !(0.0..=1.0).contains(&efficiency) {
                    return Err(ConfigError::at(&key("efficiency"), "must lie in [0, 1]"));
                }
                let dark = self.real(&key("dark_prob"))?.unwrap_or(0.0);
                if !(0.0..1.0).contains(&dark) {
                    return Err(ConfigError::at(&key("dark_prob"), "must lie in [0, 1)"));
                }
                let label = self.raw(&key("label")).map_or_else(|| format!("D{i}"), str::to_string);
                DetectorSpec::new(efficiency, dark, label).map_err(|e| ConfigError::at(&format!("detector.{i}"), e.to_string()))
            })
            .collect()
    }

    pub fn splitter(&self, detectors: usize) -> Result<SplitterSpec, ConfigError> {
        let result = match self.real_list("splitter.port_probs")? {
            Some(probs) => SplitterSpec::new(probs),
            None if detectors == 2 => Ok(SplitterSpec::balanced_pair()),
            None => SplitterSpec::uniform(detectors),
        };
        result.map_err(|e| ConfigError::at("splitter.port_probs", e.to_string()))
    }

    pub fn mode(&self) -> Result<MeasurementMode, ConfigError> {
        match self.raw("mode").unwrap_or("temporal") {
            "temporal" => Ok(MeasurementMode::Temporal),
            "spatial_ensemble" => {
                let pairs = self.require_integer("mode.pairs")?;
                if pairs == 0 || pairs > u32::MAX as u64 {
                    return Err(ConfigError::at("mode.pairs", "must lie in [1, 2^32)"));
                }
                Ok(MeasurementMode::SpatialEnsemble { pairs: pairs as u32 })
            }
            "pulse_to_pulse" => Ok(MeasurementMode::PulseToPulse {
                max_lag: self.max_lag()?,
            }),
            other => Err(ConfigError::at(
                "mode",
                format!("unknown mode '{other}' (temporal, spatial_ensemble, pulse_to_pulse)"),
            )),
        }
    }

    fn max_lag(&self) -> Result<u64, ConfigError> {
        let lag = self.integer("mode.max_lag")?.unwrap_or(1);
        if lag == 0 {
            return Err(ConfigError::at("mode.max_lag", "must be >= 1"));
        }
        Ok(lag)
    }

    pub fn experiment(&self) -> Result<ExperimentConfig, ConfigError> {
        let source = self.source()?;
        let grid = self.grid()?;
        let train = self.train(&grid, Some(source.mean()))?;
        let detectors = self.detectors()?;
        let splitter = self.splitter(detectors.len())?;
        let cfg = ExperimentConfig {
            source,
            train,
            grid,
            detectors,
            splitter,
            mode: self.mode()?,
            seed: self.seed()?,
        };
        cfg.validate().map_err(|e| ConfigError::general(e.to_string()))?;
        Ok(cfg)
    }

    pub fn analysis_options(&self) -> Result<AnalysisOptions, ConfigError> {
        let mut options = AnalysisOptions::default();
        let mode = self.raw("mode").unwrap_or("temporal");
        match self.raw("analysis.estimators") {
            Some(list) => {
                options.estimators = list
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|name| {
                        EstimatorKind::parse(name)
                            .ok_or_else(|| ConfigError::at("analysis.estimators", format!("unknown estimator '{name}'")))
                    })
                    .collect::<Result<_, _>>()?;
                if options.estimators.is_empty() {
                    return Err(ConfigError::at("analysis.estimators", "empty estimator list"));
                }
            }
            None => match mode {
                "pulse_to_pulse" => options.estimators.push(EstimatorKind::PulseToPulse),
                "spatial_ensemble" => options.estimators = vec![EstimatorKind::Spatial],
                _ => {}
            },
        }
        options.max_lag = self.max_lag()?;
        let defaults = BootstrapConfig::default();
        let blocks = self.integer("bootstrap.blocks")?.map_or(defaults.blocks, |b| b as usize);
        if blocks < pulsecorr::correlate::MIN_BLOCKS {
            return Err(ConfigError::at(
                "bootstrap.blocks",
                format!("must be >= {}", pulsecorr::correlate::MIN_BLOCKS),
            ));
        }
        let replicates = self
            .integer("bootstrap.replicates")?
            .map_or(defaults.replicates, |r| r as usize);
        if replicates < 2 {
            return Err(ConfigError::at("bootstrap.replicates", "must be >= 2"));
        }
        options.bootstrap = BootstrapConfig {
            blocks,
            replicates,
            seed: self.integer("bootstrap.seed")?.unwrap_or(defaults.seed),
        };
        Ok(options)
    }

    pub fn out_of_range(&self) -> Result<OutOfRange, ConfigError> {
        match self.raw("analysis.out_of_range").unwrap_or("error") {
            "error" => Ok(OutOfRange::Error),
            "discard" => Ok(OutOfRange::Discard),
            other => Err(ConfigError::at(
                "analysis.out_of_range",
                format!("unknown policy '{other}' (error, discard)"),
            )),
        }
    }

    pub fn resolution_ps(&self) -> Result<u64, ConfigError> {
        let r = self.integer("output.resolution_ps")?.unwrap_or(1);
        if r == 0 {
            return Err(ConfigError::at("output.resolution_ps", "must be >= 1"));
        }
        Ok(r)
    }

    pub fn output_name(&self, key: &str, default: &str) -> String {
        self.raw(key).unwrap_or(default).to_string()
    }

    pub fn sweep(&self) -> Result<(SweepAxis, Vec<f64>), ConfigError> {
        let name = self.require("sweep.axis")?;
        let axis = SweepAxis::parse(name).ok_or_else(|| {
            ConfigError::at(
                "sweep.axis",
                format!("unknown axis '{name}' (pulse_width, R_I, mean, efficiency)"),
            )
        })?;
        self.require("sweep.values")?;
        let values = self.real_list("sweep.values")?.expect("present");
        if values.is_empty() {
            return Err(ConfigError::at("sweep.values", "empty axis value list"));
        }
        Ok((axis, values))
    }
}
