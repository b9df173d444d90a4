//! Experiment runners: resolve swept parameters row by row, evaluate the
//! analytic expressions, drive the simulator, and emit self-describing
//! CSV tables.
//!
//! Reproducibility contract: a fixed config (after CLI overrides) plus
//! master seed yields byte-identical CSV output. Per-row seeds derive
//! from the master seed and the row coordinates only, and all strategies
//! and schemes within a row share one seed so their estimates ride on
//! common random numbers.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use sha2::{Digest, Sha256};

use cachejt::analytic::Scheme;
use cachejt::catalog::PlacementVector as GenericPlacement;
use cachejt::optimizer::{optimize_placement, OptimizerResult};
use cachejt::simulator::{estimate_stp_with_law, CacheLaw, SimConfig, StpEstimate};
use cachejt::{
    Catalog, NetworkConfig, PathLossExponent, PlacementVector, QuadratureSpec, StpEvaluator,
};

use crate::config::{ExperimentConfig, PlacementSource, SchemeName, SweepAxis, SweepPoint};

/// Everything one sweep row needs: the effective catalog, budget, and
/// network parameters after applying the swept value.
struct Row {
    point: SweepPoint,
    coop_size: usize,
    catalog: Catalog,
    cache_size: usize,
    net: NetworkConfig,
    seed: u64,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn row_seed(master: u64, point_idx: usize, coop: usize) -> u64 {
    splitmix64(master ^ splitmix64(point_idx as u64 + 1) ^ splitmix64((coop as u64) << 20))
}

pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let mut hasher = Sha256::new();
    hasher.update(cfg.to_toml().as_bytes());
    hex::encode(hasher.finalize())
}

fn rows(cfg: &ExperimentConfig) -> Result<Vec<Row>> {
    let axis = cfg.run.sweep_axis;
    let base_gamma = cfg.catalog.zipf_exponent;
    let base_n = cfg.catalog.n_files;
    let base_k = cfg.cache.size;
    let base_tau = cfg
        .network
        .sir_threshold_db
        .map(crate::config::db_to_linear);
    let alpha = PathLossExponent::new(cfg.network.alpha).context("path-loss exponent")?;
    let mut out = Vec::new();
    for (point_idx, point) in cfg.sweep_points().into_iter().enumerate() {
        let coop_list = match axis {
            SweepAxis::CoopSize => vec![point.value as usize],
            _ => cfg.coop_sizes(),
        };
        for coop in coop_list {
            let (n_files, gamma, cache_size, tau) = match axis {
                SweepAxis::Tau => (base_n, base_gamma, base_k, point.value),
                SweepAxis::Gamma => (base_n, point.value, base_k, base_tau.unwrap()),
                SweepAxis::CacheSize => {
                    (base_n, base_gamma, point.value as usize, base_tau.unwrap())
                }
                SweepAxis::NFiles => (point.value as usize, base_gamma, base_k, base_tau.unwrap()),
                SweepAxis::CoopSize => (base_n, base_gamma, base_k, base_tau.unwrap()),
            };
            let catalog = Catalog::zipf(n_files, gamma).context("catalog")?;
            let net = NetworkConfig::new(cfg.network.bs_density, alpha, coop, tau)
                .context("network config")?;
            out.push(Row {
                point,
                coop_size: coop,
                catalog,
                cache_size,
                net,
                seed: row_seed(cfg.run.master_seed, point_idx, coop),
            });
        }
    }
    Ok(out)
}

fn sim_config(cfg: &ExperimentConfig, net: NetworkConfig, seed: u64) -> SimConfig {
    SimConfig {
        net,
        window_half_width: cfg.window_half_width(),
        n_realizations: cfg.n_realizations(),
        master_seed: seed,
        request_mode: cfg.request_mode(),
    }
}

fn evaluator(scheme: Scheme, net: &NetworkConfig, memo: bool) -> Result<StpEvaluator> {
    let quad = QuadratureSpec::default();
    let eval = StpEvaluator::new(scheme, net, &quad).context("coefficient table")?;
    Ok(if memo {
        eval.with_fallback_memo().context("fallback memo")?
    } else {
        eval
    })
}

/// Resolves a placement-vector source for one row (everything except the
/// i.i.d. baseline, which has no marginal vector).
fn resolve_placement(
    source: PlacementSource,
    cfg: &ExperimentConfig,
    row: &Row,
    objective: Scheme,
) -> Result<(PlacementVector, Option<OptimizerResult<f64>>)> {
    let n = row.catalog.n_files();
    let k = row.cache_size;
    match source {
        PlacementSource::Mpc => Ok((GenericPlacement::mpc(n, k)?, None)),
        PlacementSource::Udc => Ok((GenericPlacement::udc(n, k)?, None)),
        PlacementSource::Explicit => {
            let v = cfg.cache.explicit_vector.clone().expect("validated");
            Ok((PlacementVector::new(v, k)?, None))
        }
        PlacementSource::Optimal => {
            let eval = evaluator(objective, &row.net, true)?;
            let solved = optimize_placement(&row.catalog, k, &eval)?;
            Ok((solved.placement.clone(), Some(solved)))
        }
        PlacementSource::Iidc => {
            bail!("[cache] placement: \"iidc\" has no placement vector; use the compare runner")
        }
    }
}

fn fmt_sweep(axis: SweepAxis, v: f64) -> String {
    if axis.is_integer() {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn fmt_f(v: f64) -> String {
    format!("{v:.6}")
}

fn open_csv(
    out_dir: &Path,
    name: &str,
    kind: &str,
    cfg: &ExperimentConfig,
    columns: &str,
) -> Result<(PathBuf, fs::File)> {
    fs::create_dir_all(out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))?;
    let path = out_dir.join(name);
    let mut file =
        fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    writeln!(
        file,
        "# cachejt-csv v1 kind={kind} axis={} seed={} config=sha256:{}",
        cfg.run.sweep_axis.label(),
        cfg.run.master_seed,
        config_hash(cfg)
    )?;
    writeln!(file, "{columns}")?;
    Ok((path, file))
}

fn write_config_used(cfg: &ExperimentConfig, out_dir: &Path) -> Result<()> {
    fs::create_dir_all(out_dir)?;
    fs::write(out_dir.join("config_used.toml"), cfg.to_toml())?;
    Ok(())
}

/// Analytic STP curves with Monte Carlo validation columns.
///
/// One row per (sweep point, cluster size, scheme). The Monte Carlo
/// column simulates the scheme's ground truth (exact coherent for the
/// coherent bound and approximation), reusing one estimate when several
/// schemes share it.
pub fn run_curve(cfg: &ExperimentConfig, out_dir: &Path) -> Result<PathBuf> {
    for s in &cfg.run.schemes {
        if *s == SchemeName::Cjt {
            bail!("[run] schemes: \"cjt\" is simulator-only; curve needs analytic schemes (ncjt, cjt_upper, cjt_approx)");
        }
    }
    write_config_used(cfg, out_dir)?;
    let axis = cfg.run.sweep_axis;
    let (path, mut file) = open_csv(
        out_dir,
        "curve.csv",
        "curve",
        cfg,
        &format!(
            "{},coop_size,scheme,analytic_stp,mc_mean,mc_std_error",
            axis.label()
        ),
    )?;
    let mut mc_cache: HashMap<String, StpEstimate> = HashMap::new();
    for row in rows(cfg)? {
        for &scheme_name in &cfg.run.schemes {
            let analytic_scheme = scheme_name.analytic();
            let (placement, _) =
                resolve_placement(cfg.cache.placement, cfg, &row, analytic_scheme)?;
            let eval = evaluator(analytic_scheme, &row.net, false)?;
            let analytic = eval
                .total_stp(&placement, &row.catalog)
                .context("analytic STP")?;
            let sim_scheme = analytic_scheme.simulated_counterpart();
            let fingerprint = format!(
                "{}|{}|{}|{:?}",
                fmt_sweep(axis, row.point.display),
                row.coop_size,
                sim_scheme.label(),
                placement.probs()
            );
            let est = match mc_cache.get(&fingerprint) {
                Some(e) => *e,
                None => {
                    let sim = sim_config(cfg, row.net, row.seed);
                    let e = estimate_stp_with_law(
                        CacheLaw::Graphical(&placement),
                        &row.catalog,
                        &sim,
                        sim_scheme,
                    )?;
                    mc_cache.insert(fingerprint, e);
                    e
                }
            };
            writeln!(
                file,
                "{},{},{},{},{},{}",
                fmt_sweep(axis, row.point.display),
                row.coop_size,
                analytic_scheme.label(),
                fmt_f(analytic),
                fmt_f(est.mean),
                fmt_f(est.std_error),
            )?;
        }
    }
    Ok(path)
}

/// Optimal placement per sweep point: per-file probabilities plus solver
/// certificate columns, and a reusable placement file per solution.
pub fn run_optimize(cfg: &ExperimentConfig, out_dir: &Path) -> Result<PathBuf> {
    for s in &cfg.run.schemes {
        if *s == SchemeName::Cjt {
            bail!("[run] schemes: \"cjt\" is simulator-only; optimize uses analytic objectives (ncjt, cjt_upper, cjt_approx)");
        }
    }
    write_config_used(cfg, out_dir)?;
    let axis = cfg.run.sweep_axis;
    let (path, mut file) = open_csv(
        out_dir,
        "optimize.csv",
        "optimize",
        cfg,
        &format!(
            "{},coop_size,scheme,file,t_star,nu,method,kkt_residual,stp",
            axis.label()
        ),
    )?;
    for row in rows(cfg)? {
        for &scheme_name in &cfg.run.schemes {
            let objective = scheme_name.analytic();
            let eval = evaluator(objective, &row.net, true)?;
            let solved = optimize_placement(&row.catalog, row.cache_size, &eval)?;
            let nu = solved
                .multiplier
                .map(|v| format!("{v:.6e}"))
                .unwrap_or_default();
            for (i, &t) in solved.placement.probs().iter().enumerate() {
                writeln!(
                    file,
                    "{},{},{},{},{},{},{},{:.3e},{}",
                    fmt_sweep(axis, row.point.display),
                    row.coop_size,
                    objective.label(),
                    i + 1,
                    fmt_f(t),
                    nu,
                    solved.method.label(),
                    solved.kkt_residual,
                    fmt_f(solved.stp),
                )?;
            }
            let placement_path = out_dir.join(format!(
                "placement_{}_{}_m{}_{}.toml",
                axis.label(),
                fmt_sweep(axis, row.point.display),
                row.coop_size,
                objective.label()
            ));
            let body = format!(
                "# optimal placement ({} = {}, M = {}, objective = {})\n# paste into [cache] with placement = \"explicit\"\nexplicit_vector = [{}]\n",
                axis.label(),
                fmt_sweep(axis, row.point.display),
                row.coop_size,
                objective.label(),
                solved
                    .placement
                    .probs()
                    .iter()
                    .map(|t| fmt_f(*t))
                    .collect::<Vec<_>>()
                    .join(", ")
            );
            fs::write(&placement_path, body)
                .with_context(|| format!("writing {}", placement_path.display()))?;
        }
    }
    Ok(path)
}

pub const COMPARE_STRATEGIES: &[&str] = &["optimal", "mpc", "iidc", "udc"];

/// Monte Carlo comparison of the optimized placement against the three
/// baselines under both transmission schemes.
pub fn run_compare(cfg: &ExperimentConfig, out_dir: &Path) -> Result<PathBuf> {
    for s in &cfg.run.schemes {
        if !matches!(s, SchemeName::Ncjt | SchemeName::Cjt) {
            bail!(
                "[run] schemes: compare accepts \"ncjt\" and \"cjt\" (got \"{}\")",
                s.label()
            );
        }
    }
    if cfg.cache.placement != PlacementSource::Optimal {
        bail!("[cache] placement: compare always runs the full strategy set; set placement = \"optimal\"");
    }
    write_config_used(cfg, out_dir)?;
    let axis = cfg.run.sweep_axis;
    let (path, mut file) = open_csv(
        out_dir,
        "compare.csv",
        "compare",
        cfg,
        &format!(
            "{},coop_size,strategy,scheme,mc_mean,mc_std_error",
            axis.label()
        ),
    )?;
    for row in rows(cfg)? {
        for &scheme_name in &cfg.run.schemes {
            let sim_scheme = scheme_name.simulated();
            let sim = sim_config(cfg, row.net, row.seed);
            let optimal =
                resolve_placement(PlacementSource::Optimal, cfg, &row, scheme_name.analytic())?.0;
            let mpc = GenericPlacement::mpc(row.catalog.n_files(), row.cache_size)?;
            let udc = GenericPlacement::udc(row.catalog.n_files(), row.cache_size)?;
            for &strategy in COMPARE_STRATEGIES {
                let law = match strategy {
                    "optimal" => CacheLaw::Graphical(&optimal),
                    "mpc" => CacheLaw::Graphical(&mpc),
                    "udc" => CacheLaw::Graphical(&udc),
                    "iidc" => CacheLaw::IidPopularity {
                        catalog: &row.catalog,
                        cache_size: row.cache_size,
                    },
                    _ => unreachable!(),
                };
                let est = estimate_stp_with_law(law, &row.catalog, &sim, sim_scheme)?;
                writeln!(
                    file,
                    "{},{},{},{},{},{}",
                    fmt_sweep(axis, row.point.display),
                    row.coop_size,
                    strategy,
                    scheme_name.label(),
                    fmt_f(est.mean),
                    fmt_f(est.std_error),
                )?;
            }
        }
    }
    Ok(path)
}
