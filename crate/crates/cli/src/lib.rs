//! Library surface of the experiment runner, exposed for integration and
//! acceptance tests. The `cachejt` binary is a thin wrapper over
//! [`runner`] and [`plots`].

pub mod config;
pub mod plots;
pub mod presets;
pub mod runner;

use anyhow::{bail, Context, Result};
use std::path::Path;

use config::ExperimentConfig;

/// Loads a config from a file path, falling back to a built-in preset
/// name (`fig2`, `fig3`, `fig5`, `fig6a`..`fig6e`).
pub fn load_config(source: &str) -> Result<ExperimentConfig> {
    let path = Path::new(source);
    let text = if path.is_file() {
        std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?
    } else if let Some(preset) = presets::preset(source) {
        preset.to_string()
    } else {
        bail!(
            "config \"{source}\" is neither a file nor a preset (presets: {})",
            presets::PRESET_NAMES.join(", ")
        );
    };
    ExperimentConfig::from_toml(&text).map_err(Into::into)
}
