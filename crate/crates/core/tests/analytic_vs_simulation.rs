//! Cross-validation of the analytic STP evaluators against the network
//! simulator. These are the ground-truth checks; the CLI crate's
//! acceptance suite runs the full parameter grids.

use cachejt::analytic::{coefficient_table, file_stp, total_stp, Scheme};
use cachejt::simulator::{estimate_fallback_stp, estimate_stp, RequestMode, SimConfig};
use cachejt::{Catalog, NetworkConfig, PathLossExponent, PlacementVector, QuadratureSpec};

fn net(m: usize, tau: f64) -> NetworkConfig {
    NetworkConfig::new(0.01, PathLossExponent::new(4.0).unwrap(), m, tau).unwrap()
}

fn sim(m: usize, tau: f64, n: usize, seed: u64, half: f64) -> SimConfig {
    SimConfig {
        net: net(m, tau),
        window_half_width: half,
        n_realizations: n,
        master_seed: seed,
        request_mode: RequestMode::Stratified,
    }
}

fn fig_reference_placement() -> PlacementVector {
    PlacementVector::new(vec![0.9, 0.8, 0.6, 0.4, 0.2, 0.1, 0.0, 0.0], 3).unwrap()
}

#[test]
fn fallback_stp_matches_conditional_monte_carlo() {
    let quad = QuadratureSpec::default();
    let cfg = net(3, 1.0);
    let analytic = cachejt::fallback_stp(0.5, &cfg, &quad).unwrap();
    let s = sim(3, 1.0, 60_000, 2024, 240.0);
    let mc = estimate_fallback_stp(0.5, &s).unwrap();
    let tol = (3.0 * mc.std_error).max(0.01);
    assert!(
        (analytic - mc.mean).abs() < tol,
        "analytic {analytic} vs MC {} +- {}",
        mc.mean,
        mc.std_error
    );
    assert!(
        mc.rejected == 0,
        "window too small: {} rejects",
        mc.rejected
    );
}

#[test]
fn file_stp_matches_simulation_at_half() {
    // two equally popular files at t = 0.5 isolate the per-file STP
    let quad = QuadratureSpec::default();
    let cfg = net(3, 1.0);
    let table = coefficient_table(Scheme::Ncjt, &cfg, &quad).unwrap();
    let analytic = file_stp(0.5, &table, &cfg, &quad).unwrap();
    let cat = Catalog::zipf(2, 0.0).unwrap();
    let p = PlacementVector::new(vec![0.5, 0.5], 1).unwrap();
    let s = sim(3, 1.0, 25_000, 31, 300.0);
    let mc = estimate_stp(&p, &cat, &s, Scheme::Ncjt).unwrap();
    assert!(
        (analytic - mc.mean).abs() < 0.01,
        "analytic {analytic} vs MC {}",
        mc.mean
    );
}

#[test]
fn reference_curve_point_all_cluster_sizes() {
    let quad = QuadratureSpec::default();
    let cat = Catalog::zipf(8, 2.0).unwrap();
    let p = fig_reference_placement();
    for m in 1..=3usize {
        let cfg = net(m, 1.0);
        let analytic = total_stp(&p, &cat, Scheme::Ncjt, &cfg, &quad).unwrap();
        let s = sim(m, 1.0, 20_000, 77 + m as u64, 300.0);
        let mc = estimate_stp(&p, &cat, &s, Scheme::Ncjt).unwrap();
        assert!(
            (analytic - mc.mean).abs() < 0.015,
            "M={m}: analytic {analytic} vs MC {} +- {}",
            mc.mean,
            mc.std_error
        );
    }
}

#[test]
fn coherent_bound_and_approximation_behave() {
    let quad = QuadratureSpec::default();
    let cat = Catalog::zipf(8, 2.0).unwrap();
    let p = fig_reference_placement();
    let cfg = net(3, 1.0);
    let upper = total_stp(&p, &cat, Scheme::CjtUpper, &cfg, &quad).unwrap();
    let approx = total_stp(&p, &cat, Scheme::CjtApprox, &cfg, &quad).unwrap();
    let s = sim(3, 1.0, 20_000, 555, 300.0);
    let mc = estimate_stp(&p, &cat, &s, Scheme::CjtExact).unwrap();
    assert!(
        upper >= mc.mean - 3.0 * mc.std_error,
        "upper {upper} below MC {}",
        mc.mean
    );
    assert!(
        (approx - mc.mean).abs() < 0.02,
        "approx {approx} vs MC {}",
        mc.mean
    );
    assert!(upper >= approx);
}

#[test]
fn coherent_beats_noncoherent_in_simulation() {
    let cat = Catalog::zipf(8, 2.0).unwrap();
    let p = fig_reference_placement();
    let s = sim(3, 1.0, 15_000, 99, 300.0);
    let nc = estimate_stp(&p, &cat, &s, Scheme::Ncjt).unwrap();
    let c = estimate_stp(&p, &cat, &s, Scheme::CjtExact).unwrap();
    let pooled = (nc.std_error.powi(2) + c.std_error.powi(2)).sqrt();
    assert!(
        c.mean >= nc.mean - 3.0 * pooled,
        "coherent {} vs noncoherent {}",
        c.mean,
        nc.mean
    );
}

#[test]
fn estimate_monotone_in_cluster_size() {
    let cat = Catalog::zipf(8, 2.0).unwrap();
    let p = fig_reference_placement();
    let mut prev: Option<(f64, f64)> = None;
    for m in 1..=3usize {
        let s = sim(m, 1.0, 15_000, 4242, 300.0);
        let e = estimate_stp(&p, &cat, &s, Scheme::Ncjt).unwrap();
        if let Some((mean, se)) = prev {
            let pooled = (se * se + e.std_error * e.std_error).sqrt();
            assert!(
                e.mean >= mean - 3.0 * pooled,
                "M={m}: {} after {mean}",
                e.mean
            );
        }
        prev = Some((e.mean, e.std_error));
    }
}

#[test]
fn interference_limited_scale_invariance() {
    // doubling the density while shrinking the window to hold the
    // expected BS count moves the estimate by noise only
    let cat = Catalog::zipf(4, 1.0).unwrap();
    let p = PlacementVector::udc(4, 2).unwrap();
    let base = sim(2, 1.0, 15_000, 808, 300.0);
    let a = estimate_stp(&p, &cat, &base, Scheme::Ncjt).unwrap();
    let mut dense = base.clone();
    dense.net = NetworkConfig::new(0.02, PathLossExponent::new(4.0).unwrap(), 2, 1.0).unwrap();
    dense.window_half_width = 300.0 / 2.0f64.sqrt();
    let b = estimate_stp(&p, &cat, &dense, Scheme::Ncjt).unwrap();
    let pooled = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
    assert!(
        (a.mean - b.mean).abs() < 3.0 * pooled,
        "{} vs {}",
        a.mean,
        b.mean
    );
}

#[test]
fn window_edge_effect_within_noise() {
    let cat = Catalog::zipf(4, 1.0).unwrap();
    let p = PlacementVector::udc(4, 2).unwrap();
    let small = sim(2, 1.0, 15_000, 31415, 220.0);
    let a = estimate_stp(&p, &cat, &small, Scheme::Ncjt).unwrap();
    let mut big = small.clone();
    big.window_half_width = 440.0;
    big.n_realizations = 6_000;
    let b = estimate_stp(&p, &cat, &big, Scheme::Ncjt).unwrap();
    let pooled = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
    assert!(
        (a.mean - b.mean).abs() < 2.0 * pooled + 0.004,
        "{} vs {} (pooled {pooled})",
        a.mean,
        b.mean
    );
}

#[test]
fn rejection_rate_negligible() {
    let cat = Catalog::zipf(4, 1.0).unwrap();
    let p = PlacementVector::udc(4, 2).unwrap();
    let s = sim(3, 1.0, 5_000, 1, 100.0); // expected 400 BSs
    let e = estimate_stp(&p, &cat, &s, Scheme::Ncjt).unwrap();
    assert!((e.rejected as f64) < 0.001 * s.n_realizations as f64);
}
