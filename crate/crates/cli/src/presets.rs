//! Built-in experiment presets. Each figN preset carries the catalog and
//! network parameters of the corresponding figure; the simulation knobs
//! are desk-scale so every preset finishes in minutes.

pub const PRESET_NAMES: &[&str] = &[
    "fig2", "fig3", "fig5", "fig6a", "fig6b", "fig6c", "fig6d", "fig6e",
];

pub fn preset(name: &str) -> Option<&'static str> {
    Some(match name {
        "fig2" => FIG2,
        "fig3" => FIG3,
        "fig5" => FIG5,
        "fig6a" => FIG6A,
        "fig6b" => FIG6B,
        "fig6c" => FIG6C,
        "fig6d" => FIG6D,
        "fig6e" => FIG6E,
        _ => return None,
    })
}

/// Analytic-vs-Monte-Carlo STP curve, non-coherent scheme.
const FIG2: &str = r#"
[catalog]
n_files = 8
zipf_exponent = 2.0

[network]
bs_density = 0.01
alpha = 4.0
coop_sizes = [1, 2, 3]

[cache]
size = 3
placement = "explicit"
explicit_vector = [0.9, 0.8, 0.6, 0.4, 0.2, 0.1, 0.0, 0.0]

[run]
schemes = ["ncjt"]
sweep_axis = "tau"
sweep_values_db = [-10.0, -6.0, -3.0, 0.0, 3.0, 6.0, 10.0, 14.0]
profile = "desk"
master_seed = 20260811
"#;

/// Coherent-scheme upper bound and approximation against the exact
/// coherent simulation.
const FIG3: &str = r#"
[catalog]
n_files = 8
zipf_exponent = 2.0

[network]
bs_density = 0.01
alpha = 4.0
coop_sizes = [1, 2, 3]

[cache]
size = 3
placement = "explicit"
explicit_vector = [0.9, 0.8, 0.6, 0.4, 0.2, 0.1, 0.0, 0.0]

[run]
schemes = ["cjt_upper", "cjt_approx"]
sweep_axis = "tau"
sweep_values_db = [-10.0, -6.0, -3.0, 0.0, 3.0, 6.0, 10.0, 14.0]
profile = "desk"
master_seed = 20260811
"#;

/// Optimal placement probabilities per file across SIR thresholds.
const FIG5: &str = r#"
[catalog]
n_files = 8
zipf_exponent = 2.0

[network]
bs_density = 0.01
alpha = 4.0
coop_sizes = [3]

[cache]
size = 3
placement = "optimal"

[run]
schemes = ["ncjt", "cjt_approx"]
sweep_axis = "tau"
sweep_values_db = [-10.0, -5.0, 0.0, 5.0, 10.0]
profile = "desk"
master_seed = 20260811
"#;

/// Strategy comparison versus cluster size.
const FIG6A: &str = r#"
[catalog]
n_files = 100
zipf_exponent = 0.8

[network]
bs_density = 0.01
alpha = 4.0
sir_threshold_db = 0.0

[cache]
size = 25
placement = "optimal"

[run]
schemes = ["ncjt", "cjt"]
sweep_axis = "coop_size"
sweep_values = [1, 2, 3]
profile = "desk"
master_seed = 20260811
n_realizations = 2500
window_half_width = 150.0
"#;

/// Strategy comparison versus SIR threshold.
const FIG6B: &str = r#"
[catalog]
n_files = 100
zipf_exponent = 0.8

[network]
bs_density = 0.01
alpha = 4.0
coop_sizes = [3]

[cache]
size = 25
placement = "optimal"

[run]
schemes = ["ncjt", "cjt"]
sweep_axis = "tau"
sweep_values_db = [-10.0, -5.0, 0.0, 5.0, 10.0]
profile = "desk"
master_seed = 20260811
n_realizations = 2500
window_half_width = 150.0
"#;

/// Strategy comparison versus popularity skewness.
const FIG6C: &str = r#"
[catalog]
n_files = 100
zipf_exponent = 0.8

[network]
bs_density = 0.01
alpha = 4.0
coop_sizes = [3]
sir_threshold_db = 0.0

[cache]
size = 25
placement = "optimal"

[run]
schemes = ["ncjt", "cjt"]
sweep_axis = "gamma"
sweep_values = [0.4, 0.8, 1.2]
profile = "desk"
master_seed = 20260811
n_realizations = 2500
window_half_width = 150.0
"#;

/// Strategy comparison versus cache size.
const FIG6D: &str = r#"
[catalog]
n_files = 100
zipf_exponent = 0.8

[network]
bs_density = 0.01
alpha = 4.0
coop_sizes = [3]
sir_threshold_db = 0.0

[cache]
size = 25
placement = "optimal"

[run]
schemes = ["ncjt", "cjt"]
sweep_axis = "cache_size"
sweep_values = [15, 25, 35]
profile = "desk"
master_seed = 20260811
n_realizations = 2500
window_half_width = 150.0
"#;

/// Strategy comparison versus catalog size.
const FIG6E: &str = r#"
[catalog]
n_files = 100
zipf_exponent = 0.8

[network]
bs_density = 0.01
alpha = 4.0
coop_sizes = [3]
sir_threshold_db = 0.0

[cache]
size = 25
placement = "optimal"

[run]
schemes = ["ncjt", "cjt"]
sweep_axis = "n_files"
sweep_values = [60, 100, 140]
profile = "desk"
master_seed = 20260811
n_realizations = 2500
window_half_width = 150.0
"#;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentConfig;

    #[test]
    fn all_presets_validate() {
        for name in PRESET_NAMES {
            let text = preset(name).unwrap();
            ExperimentConfig::from_toml(text).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
    }

    #[test]
    fn unknown_preset_is_none() {
        assert!(preset("fig9").is_none());
    }
}
