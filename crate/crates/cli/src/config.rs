//! Experiment configuration: a flat TOML file with one section per
//! concern. dB-valued fields carry a `_db` suffix and are converted to
//! linear scale only at this boundary; everything below the CLI works in
//! linear units.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use cachejt::simulator::RequestMode;
use cachejt::Scheme;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("[{section}] {field}: {reason}")]
    Field {
        section: &'static str,
        field: &'static str,
        reason: String,
    },
    #[error("config is not valid TOML: {0}")]
    Parse(String),
}

fn field_err(section: &'static str, field: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Field {
        section,
        field,
        reason: reason.into(),
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Tau,
    CoopSize,
    Gamma,
    CacheSize,
    NFiles,
}

impl SweepAxis {
    pub fn label(self) -> &'static str {
        match self {
            SweepAxis::Tau => "tau_db",
            SweepAxis::CoopSize => "coop_size",
            SweepAxis::Gamma => "gamma",
            SweepAxis::CacheSize => "cache_size",
            SweepAxis::NFiles => "n_files",
        }
    }

    pub fn is_integer(self) -> bool {
        matches!(
            self,
            SweepAxis::CoopSize | SweepAxis::CacheSize | SweepAxis::NFiles
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlacementSource {
    Optimal,
    Mpc,
    Udc,
    Iidc,
    Explicit,
}

/// Scheme names accepted in configs. `cjt` selects the exact coherent
/// scheme in the simulator together with its analytic approximation as
/// the optimization objective; the other names are the analytic
/// evaluators themselves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeName {
    Ncjt,
    CjtUpper,
    CjtApprox,
    Cjt,
}

impl SchemeName {
    pub fn label(self) -> &'static str {
        match self {
            SchemeName::Ncjt => "ncjt",
            SchemeName::CjtUpper => "cjt_upper",
            SchemeName::CjtApprox => "cjt_approx",
            SchemeName::Cjt => "cjt",
        }
    }

    /// Analytic evaluator behind this name.
    pub fn analytic(self) -> Scheme {
        match self {
            SchemeName::Ncjt => Scheme::Ncjt,
            SchemeName::CjtUpper => Scheme::CjtUpper,
            SchemeName::CjtApprox | SchemeName::Cjt => Scheme::CjtApprox,
        }
    }

    /// Simulator scheme providing this name's ground truth.
    pub fn simulated(self) -> Scheme {
        match self {
            SchemeName::Ncjt => Scheme::Ncjt,
            _ => Scheme::CjtExact,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// 600 x 600 m window, 2e4 realizations, stratified requests; minutes
    /// on a laptop.
    Desk,
    /// 1000 x 1000 m window, 1e5 realizations, sampled requests.
    Paper,
}

impl Profile {
    pub fn window_half_width(self) -> f64 {
        match self {
            Profile::Desk => 300.0,
            Profile::Paper => 500.0,
        }
    }

    pub fn n_realizations(self) -> usize {
        match self {
            Profile::Desk => 20_000,
            Profile::Paper => 100_000,
        }
    }

    pub fn request_mode(self) -> RequestMode {
        match self {
            Profile::Desk => RequestMode::Stratified,
            Profile::Paper => RequestMode::Sampled,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RequestModeName {
    Sampled,
    Stratified,
}

impl From<RequestModeName> for RequestMode {
    fn from(v: RequestModeName) -> RequestMode {
        match v {
            RequestModeName::Sampled => RequestMode::Sampled,
            RequestModeName::Stratified => RequestMode::Stratified,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogSection {
    pub n_files: usize,
    pub zipf_exponent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    pub bs_density: f64,
    pub alpha: f64,
    /// Cluster sizes to evaluate; omit when sweeping `coop_size`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coop_sizes: Option<Vec<usize>>,
    /// Base SIR threshold; omit when sweeping `tau`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sir_threshold_db: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CacheSection {
    pub size: usize,
    pub placement: PlacementSource,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub explicit_vector: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub schemes: Vec<SchemeName>,
    pub sweep_axis: SweepAxis,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep_values: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep_values_db: Option<Vec<f64>>,
    pub profile: Profile,
    pub master_seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_realizations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window_half_width: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub request_mode: Option<RequestModeName>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub catalog: CatalogSection,
    pub network: NetworkSection,
    pub cache: CacheSection,
    pub run: RunSection,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Sweep values in the units the runner consumes (`tau` in linear
    /// scale, everything else as given).
    pub fn sweep_points(&self) -> Vec<SweepPoint> {
        match self.run.sweep_axis {
            SweepAxis::Tau => self
                .run
                .sweep_values_db
                .as_ref()
                .expect("validated")
                .iter()
                .map(|&db| SweepPoint {
                    display: db,
                    value: db_to_linear(db),
                })
                .collect(),
            _ => self
                .run
                .sweep_values
                .as_ref()
                .expect("validated")
                .iter()
                .map(|&v| SweepPoint {
                    display: v,
                    value: v,
                })
                .collect(),
        }
    }

    /// Cluster sizes evaluated per sweep point (the sweep itself when the
    /// axis is `coop_size`).
    pub fn coop_sizes(&self) -> Vec<usize> {
        match self.run.sweep_axis {
            SweepAxis::CoopSize => vec![0], // replaced per row
            _ => self.network.coop_sizes.clone().expect("validated"),
        }
    }

    pub fn window_half_width(&self) -> f64 {
        self.run
            .window_half_width
            .unwrap_or_else(|| self.run.profile.window_half_width())
    }

    pub fn n_realizations(&self) -> usize {
        self.run
            .n_realizations
            .unwrap_or_else(|| self.run.profile.n_realizations())
    }

    pub fn request_mode(&self) -> RequestMode {
        self.run
            .request_mode
            .map(RequestMode::from)
            .unwrap_or_else(|| self.run.profile.request_mode())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let c = &self.catalog;
        if c.n_files < 2 {
            return Err(field_err("catalog", "n_files", "need at least 2 files"));
        }
        if !(c.zipf_exponent.is_finite() && c.zipf_exponent >= 0.0) {
            return Err(field_err(
                "catalog",
                "zipf_exponent",
                format!("must be finite and nonnegative, got {}", c.zipf_exponent),
            ));
        }
        let n = &self.network;
        if !(n.bs_density.is_finite() && n.bs_density > 0.0) {
            return Err(field_err("network", "bs_density", "must be positive"));
        }
        if !(n.alpha.is_finite() && n.alpha > 2.0) {
            return Err(field_err(
                "network",
                "alpha",
                "path-loss exponent must exceed 2",
            ));
        }
        let axis = self.run.sweep_axis;
        match (&n.coop_sizes, axis) {
            (Some(_), SweepAxis::CoopSize) => {
                return Err(field_err(
                    "network",
                    "coop_sizes",
                    "omit this field when sweep_axis = \"coop_size\"",
                ));
            }
            (None, SweepAxis::CoopSize) => {}
            (Some(sizes), _) if sizes.is_empty() => {
                return Err(field_err("network", "coop_sizes", "list is empty"));
            }
            (Some(sizes), _) => {
                if sizes.contains(&0) {
                    return Err(field_err("network", "coop_sizes", "sizes must be positive"));
                }
            }
            (None, _) => {
                return Err(field_err("network", "coop_sizes", "missing required field"));
            }
        }
        match (n.sir_threshold_db, axis) {
            (Some(_), SweepAxis::Tau) => {
                return Err(field_err(
                    "network",
                    "sir_threshold_db",
                    "omit this field when sweep_axis = \"tau\"",
                ));
            }
            (None, SweepAxis::Tau) => {}
            (Some(db), _) if !db.is_finite() => {
                return Err(field_err("network", "sir_threshold_db", "must be finite"));
            }
            (Some(_), _) => {}
            (None, _) => {
                return Err(field_err(
                    "network",
                    "sir_threshold_db",
                    "missing required field",
                ));
            }
        }
        let cache = &self.cache;
        if cache.size == 0 || cache.size >= c.n_files {
            return Err(field_err(
                "cache",
                "size",
                format!("need 0 < K < N, got K = {}, N = {}", cache.size, c.n_files),
            ));
        }
        match (cache.placement, &cache.explicit_vector) {
            (PlacementSource::Explicit, None) => {
                return Err(field_err(
                    "cache",
                    "explicit_vector",
                    "required when placement = \"explicit\"",
                ));
            }
            (PlacementSource::Explicit, Some(v)) => {
                if v.len() != c.n_files {
                    return Err(field_err(
                        "cache",
                        "explicit_vector",
                        format!("has {} entries for {} files", v.len(), c.n_files),
                    ));
                }
                if matches!(axis, SweepAxis::NFiles | SweepAxis::CacheSize) {
                    return Err(field_err(
                        "cache",
                        "placement",
                        "explicit vector cannot follow a catalog-shape sweep",
                    ));
                }
                cachejt::PlacementVector::new(v.clone(), cache.size)
                    .map_err(|e| field_err("cache", "explicit_vector", e.to_string()))?;
            }
            (_, Some(_)) => {
                return Err(field_err(
                    "cache",
                    "explicit_vector",
                    "only meaningful with placement = \"explicit\"",
                ));
            }
            _ => {}
        }
        let r = &self.run;
        if r.schemes.is_empty() {
            return Err(field_err("run", "schemes", "list is empty"));
        }
        match axis {
            SweepAxis::Tau => {
                if r.sweep_values.is_some() {
                    return Err(field_err(
                        "run",
                        "sweep_values",
                        "use sweep_values_db for the tau axis",
                    ));
                }
                let vals = r
                    .sweep_values_db
                    .as_ref()
                    .ok_or_else(|| field_err("run", "sweep_values_db", "missing required field"))?;
                if vals.is_empty() {
                    return Err(field_err("run", "sweep_values_db", "list is empty"));
                }
                if vals.iter().any(|v| !v.is_finite()) {
                    return Err(field_err("run", "sweep_values_db", "values must be finite"));
                }
            }
            _ => {
                if r.sweep_values_db.is_some() {
                    return Err(field_err(
                        "run",
                        "sweep_values_db",
                        "only meaningful for the tau axis",
                    ));
                }
                let vals = r
                    .sweep_values
                    .as_ref()
                    .ok_or_else(|| field_err("run", "sweep_values", "missing required field"))?;
                if vals.is_empty() {
                    return Err(field_err("run", "sweep_values", "list is empty"));
                }
                if vals.iter().any(|v| !v.is_finite() || *v <= 0.0) {
                    return Err(field_err("run", "sweep_values", "values must be positive"));
                }
                if axis.is_integer() && vals.iter().any(|v| v.fract() != 0.0) {
                    return Err(field_err(
                        "run",
                        "sweep_values",
                        format!("{} values must be integers", axis.label()),
                    ));
                }
                if axis == SweepAxis::NFiles && vals.iter().any(|&v| (v as usize) <= cache.size) {
                    return Err(field_err(
                        "run",
                        "sweep_values",
                        "every swept n_files must exceed the cache size",
                    ));
                }
                if axis == SweepAxis::CacheSize && vals.iter().any(|&v| (v as usize) >= c.n_files) {
                    return Err(field_err(
                        "run",
                        "sweep_values",
                        "every swept cache size must stay below n_files",
                    ));
                }
            }
        }
        if let Some(nr) = r.n_realizations {
            if nr < 100 {
                return Err(field_err("run", "n_realizations", "need at least 100"));
            }
        }
        if let Some(w) = r.window_half_width {
            if !(w.is_finite() && w > 0.0) {
                return Err(field_err("run", "window_half_width", "must be positive"));
            }
        }
        Ok(())
    }
}

/// One sweep coordinate: `display` is what lands in the CSV (dB for the
/// tau axis), `value` what the evaluators consume.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub display: f64,
    pub value: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    #[test]
    fn roundtrip_is_identity() {
        for name in presets::PRESET_NAMES {
            let cfg = ExperimentConfig::from_toml(presets::preset(name).unwrap()).unwrap();
            let text = cfg.to_toml();
            let again = ExperimentConfig::from_toml(&text).unwrap();
            assert_eq!(cfg, again, "{name}");
        }
    }

    #[test]
    fn db_conversion() {
        assert!((db_to_linear(0.0) - 1.0).abs() < 1e-15);
        assert!((db_to_linear(10.0) - 10.0).abs() < 1e-12);
        assert!((db_to_linear(-10.0) - 0.1).abs() < 1e-15);
        assert!((linear_to_db(db_to_linear(3.7)) - 3.7).abs() < 1e-12);
    }

    #[test]
    fn errors_name_the_field() {
        let base = presets::preset("fig2").unwrap();
        let broken = base.replace(
            "sweep_values_db = [-10.0, -6.0, -3.0, 0.0, 3.0, 6.0, 10.0, 14.0]",
            "sweep_values_db = []",
        );
        let err = ExperimentConfig::from_toml(&broken).unwrap_err();
        assert_eq!(err.to_string(), "[run] sweep_values_db: list is empty");
    }

    #[test]
    fn explicit_vector_is_checked() {
        let base = presets::preset("fig2").unwrap();
        let broken = base.replace("0.9, 0.8", "0.95, 0.8");
        let err = ExperimentConfig::from_toml(&broken).unwrap_err();
        let msg = err.to_string();
        assert!(msg.starts_with("[cache] explicit_vector:"), "{msg}");
    }
}
