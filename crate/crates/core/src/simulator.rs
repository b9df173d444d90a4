//! Ground-truth Monte Carlo: homogeneous PPP deployment, per-BS cache
//! realization, the three-case cooperative serving policy, exact SIR for
//! the non-coherent and coherent schemes, and STP estimation with
//! confidence intervals.
//!
//! Everything is `f64`. Realizations are independent and evaluated in
//! parallel; realization `i` always consumes ChaCha substream `i` of the
//! master seed, so estimates are bit-identical regardless of worker
//! count.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use thiserror::Error;

use crate::analytic::{NetworkConfig, Scheme};
use crate::catalog::{
    sample_cache_from_bounds, Catalog, PlacementVector, WeightedWithoutReplacement,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("expected BS count {expected:.1} below 10 x cooperation size {coop}")]
    WindowTooSmall { expected: f64, coop: usize },
    #[error("need at least 100 realizations, got {0}")]
    TooFewRealizations(usize),
    #[error("scheme {0:?} is analytic-only and cannot be simulated")]
    AnalyticOnlyScheme(Scheme),
    #[error("placement has {placement} files but catalog has {catalog}")]
    DimensionMismatch { placement: usize, catalog: usize },
    #[error("serving set is empty")]
    EmptyServingSet,
    #[error("interferer set is empty")]
    EmptyInterfererSet,
}

/// How the requested file enters the estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RequestMode {
    /// Draw one file per realization from the popularity distribution.
    Sampled,
    /// Evaluate every file per realization and weight by popularity.
    Stratified,
}

/// Monte Carlo run parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub net: NetworkConfig<f64>,
    /// Half the side length of the square deployment window, in meters.
    pub window_half_width: f64,
    pub n_realizations: usize,
    pub master_seed: u64,
    pub request_mode: RequestMode,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let area = (2.0 * self.window_half_width).powi(2);
        let expected = self.net.bs_density() * area;
        if expected < 10.0 * self.net.coop_size() as f64 {
            return Err(SimError::WindowTooSmall {
                expected,
                coop: self.net.coop_size(),
            });
        }
        if self.n_realizations < 100 {
            return Err(SimError::TooFewRealizations(self.n_realizations));
        }
        Ok(())
    }
}

/// STP estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StpEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n: usize,
    /// Realizations redrawn because fewer than `M` BSs fell in the window.
    pub rejected: usize,
}

/// Per-BS cached file sets stored as bitmaps, in nearest-first BS order.
#[derive(Debug, Clone)]
pub struct CacheTable {
    words_per_bs: usize,
    bits: Vec<u64>,
    n_files: usize,
}

impl CacheTable {
    fn with_capacity(n_bs: usize, n_files: usize) -> Self {
        let words_per_bs = n_files.div_ceil(64);
        CacheTable {
            words_per_bs,
            bits: vec![0; n_bs * words_per_bs],
            n_files,
        }
    }

    #[inline]
    pub fn contains(&self, bs: usize, file: usize) -> bool {
        debug_assert!(file < self.n_files);
        let w = self.bits[bs * self.words_per_bs + file / 64];
        w >> (file % 64) & 1 == 1
    }

    #[inline]
    fn set(&mut self, bs: usize, file: usize) {
        self.bits[bs * self.words_per_bs + file / 64] |= 1 << (file % 64);
    }

    pub fn n_files(&self) -> usize {
        self.n_files
    }
}

/// One network snapshot. BSs are sorted nearest-first relative to the
/// typical user at the origin; all per-BS arrays share that order.
#[derive(Debug, Clone)]
pub struct Realization {
    pub positions: Vec<[f64; 2]>,
    /// Squared distances to the origin, ascending.
    pub dist_sq: Vec<f64>,
    pub caches: CacheTable,
    /// Rayleigh fading coefficient per BS (unit-variance complex normal).
    pub fading: Vec<Complex64>,
    pub requested_file: usize,
}

impl Realization {
    pub fn n_bs(&self) -> usize {
        self.positions.len()
    }
}

/// Outcome of the cooperative serving policy for one request.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServiceAssignment {
    /// Number of cluster BSs holding the file (the policy case, 0..=M).
    pub coop_count: usize,
    /// Serving BS indices (into the sorted arrays). Empty on cache miss.
    pub serving: Vec<usize>,
    /// Silenced cluster BSs: they transmit nothing and interfere with
    /// nothing.
    pub silenced: Vec<usize>,
}

impl ServiceAssignment {
    pub fn is_miss(&self) -> bool {
        self.serving.is_empty()
    }

    /// Interferers: every BS outside the cluster that is not serving.
    pub fn interferers<'a>(
        &'a self,
        n_bs: usize,
        coop_size: usize,
    ) -> impl Iterator<Item = usize> + 'a {
        (coop_size..n_bs).filter(move |i| !self.serving.contains(i))
    }
}

/// Draws a homogeneous PPP restricted to the centered square window:
/// Poisson count, uniform positions.
pub fn sample_ppp<R: Rng + ?Sized>(density: f64, half_width: f64, rng: &mut R) -> Vec<[f64; 2]> {
    let area = (2.0 * half_width).powi(2);
    let count = Poisson::new(density * area)
        .expect("positive mean")
        .sample(rng) as usize;
    (0..count)
        .map(|_| {
            [
                rng.random_range(-half_width..half_width),
                rng.random_range(-half_width..half_width),
            ]
        })
        .collect()
}

/// Applies the cooperative policy for the realization's requested file.
///
/// The cluster is the `M` nearest BSs. If all of them hold the file they
/// all serve; if some do, those serve and the rest of the cluster is
/// silenced; if none does, the nearest holder outside the cluster serves
/// and the whole cluster is silenced. No holder anywhere is a cache miss,
/// which counts as a failure rather than an error.
pub fn classify_and_serve(real: &Realization, net: &NetworkConfig<f64>) -> ServiceAssignment {
    let mut assignment = ServiceAssignment {
        coop_count: 0,
        serving: Vec::new(),
        silenced: Vec::new(),
    };
    classify_into(real, real.requested_file, net.coop_size(), &mut assignment);
    assignment
}

fn classify_into(real: &Realization, file: usize, coop_size: usize, out: &mut ServiceAssignment) {
    out.serving.clear();
    out.silenced.clear();
    debug_assert!(real.n_bs() >= coop_size);
    for bs in 0..coop_size {
        if real.caches.contains(bs, file) {
            out.serving.push(bs);
        } else {
            out.silenced.push(bs);
        }
    }
    out.coop_count = out.serving.len();
    if out.coop_count == 0 {
        // nearest holder beyond the cluster, if any
        for bs in coop_size..real.n_bs() {
            if real.caches.contains(bs, file) {
                out.serving.push(bs);
                break;
            }
        }
    }
}

/// Exact SIR of the assignment under the given scheme.
///
/// Non-coherent: signal amplitudes add as a complex sum. Coherent
/// (`CjtExact`): conjugate precoding aligns phases so the envelope
/// magnitudes add. Interference is the power sum over interferers; the
/// precoder of an interfering BS is unit-modulus, so interference fading
/// stays unit-mean exponential under both schemes.
pub fn sir(
    real: &Realization,
    assignment: &ServiceAssignment,
    scheme: Scheme,
    net: &NetworkConfig<f64>,
) -> Result<f64, SimError> {
    if assignment.serving.is_empty() {
        return Err(SimError::EmptyServingSet);
    }
    let half_alpha = net.alpha().get() / 2.0;
    let signal = signal_power(real, &assignment.serving, scheme, half_alpha)?;
    let mut interference = 0.0;
    let mut any = false;
    for bs in assignment.interferers(real.n_bs(), net.coop_size()) {
        interference += real.dist_sq[bs].powf(-half_alpha) * real.fading[bs].norm_sqr();
        any = true;
    }
    if !any {
        return Err(SimError::EmptyInterfererSet);
    }
    Ok(signal / interference)
}

fn signal_power(
    real: &Realization,
    serving: &[usize],
    scheme: Scheme,
    half_alpha: f64,
) -> Result<f64, SimError> {
    match scheme {
        Scheme::Ncjt => {
            let mut acc = Complex64::new(0.0, 0.0);
            for &bs in serving {
                let amp = real.dist_sq[bs].powf(-half_alpha / 2.0);
                acc += real.fading[bs] * amp;
            }
            Ok(acc.norm_sqr())
        }
        Scheme::CjtExact => {
            let mut acc = 0.0;
            for &bs in serving {
                let amp = real.dist_sq[bs].powf(-half_alpha / 2.0);
                acc += real.fading[bs].norm() * amp;
            }
            Ok(acc * acc)
        }
        other => Err(SimError::AnalyticOnlyScheme(other)),
    }
}

/// How per-BS caches are realized.
#[derive(Debug, Clone, Copy)]
pub enum CacheLaw<'a> {
    /// Graphical sampling from a marginal placement vector.
    Graphical(&'a PlacementVector<f64>),
    /// Independent popularity-proportional sampling without replacement.
    IidPopularity {
        catalog: &'a Catalog<f64>,
        cache_size: usize,
    },
}

impl CacheLaw<'_> {
    fn cache_size(&self) -> usize {
        match self {
            CacheLaw::Graphical(p) => p.cache_size(),
            CacheLaw::IidPopularity { cache_size, .. } => *cache_size,
        }
    }

    /// Marginal probability that a BS caches `file`, when the law defines
    /// one; used to short-circuit impossible files.
    fn marginal(&self, file: usize) -> Option<f64> {
        match self {
            CacheLaw::Graphical(p) => Some(p.probs()[file]),
            CacheLaw::IidPopularity { .. } => None,
        }
    }
}

/// Estimates the STP of the placement under the given scheme.
pub fn estimate_stp(
    placement: &PlacementVector<f64>,
    catalog: &Catalog<f64>,
    sim: &SimConfig,
    scheme: Scheme,
) -> Result<StpEstimate, SimError> {
    if placement.n_files() != catalog.n_files() {
        return Err(SimError::DimensionMismatch {
            placement: placement.n_files(),
            catalog: catalog.n_files(),
        });
    }
    estimate_stp_with_law(CacheLaw::Graphical(placement), catalog, sim, scheme)
}

/// Estimates the STP under an arbitrary cache law (used for the i.i.d.
/// caching baseline, which has no marginal vector).
pub fn estimate_stp_with_law(
    law: CacheLaw<'_>,
    catalog: &Catalog<f64>,
    sim: &SimConfig,
    scheme: Scheme,
) -> Result<StpEstimate, SimError> {
    sim.validate()?;
    if !matches!(scheme, Scheme::Ncjt | Scheme::CjtExact) {
        return Err(SimError::AnalyticOnlyScheme(scheme));
    }
    let bounds = match law {
        CacheLaw::Graphical(p) => p.segment_bounds(),
        CacheLaw::IidPopularity { .. } => Vec::new(),
    };
    let popularity_cdf: Vec<f64> = {
        let mut acc = 0.0;
        catalog
            .popularity()
            .iter()
            .map(|&a| {
                acc += a;
                acc
            })
            .collect()
    };
    let per_realization: Vec<(f64, u32)> = (0..sim.n_realizations)
        .into_par_iter()
        .map(|idx| {
            run_realization(
                idx as u64,
                &law,
                &bounds,
                catalog,
                &popularity_cdf,
                sim,
                scheme,
            )
        })
        .collect();
    // sequential reduction keeps the estimate independent of thread count
    let n = per_realization.len();
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut rejected = 0usize;
    for &(v, rej) in &per_realization {
        sum += v;
        sum_sq += v * v;
        rejected += rej as usize;
    }
    let mean = sum / n as f64;
    let std_error = match sim.request_mode {
        RequestMode::Sampled => (mean * (1.0 - mean) / n as f64).sqrt(),
        RequestMode::Stratified => {
            let var = (sum_sq / n as f64 - mean * mean).max(0.0);
            (var / (n as f64 - 1.0)).sqrt()
        }
    };
    Ok(StpEstimate {
        mean,
        std_error,
        n,
        rejected,
    })
}

fn substream(master_seed: u64, idx: u64, attempt: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(idx + ((attempt as u64) << 48));
    rng
}

fn run_realization(
    idx: u64,
    law: &CacheLaw<'_>,
    bounds: &[f64],
    catalog: &Catalog<f64>,
    popularity_cdf: &[f64],
    sim: &SimConfig,
    scheme: Scheme,
) -> (f64, u32) {
    let coop = sim.net.coop_size();
    let mut rejected = 0u32;
    for attempt in 0..64 {
        let mut rng = substream(sim.master_seed, idx, attempt);
        let positions = sample_ppp(sim.net.bs_density(), sim.window_half_width, &mut rng);
        if positions.len() < coop {
            rejected += 1;
            continue;
        }
        let real = finish_realization(positions, law, bounds, catalog, &mut rng);
        let value = evaluate_request(&real, law, catalog, popularity_cdf, sim, scheme, &mut rng);
        return (value, rejected);
    }
    // unreachable for any validated config; count the draw as a failure
    (0.0, rejected)
}

/// Completes a realization from sampled positions: sorts BSs by distance,
/// draws caches and fading in sorted order.
fn finish_realization(
    positions: Vec<[f64; 2]>,
    law: &CacheLaw<'_>,
    bounds: &[f64],
    catalog: &Catalog<f64>,
    rng: &mut ChaCha8Rng,
) -> Realization {
    let mut order: Vec<usize> = (0..positions.len()).collect();
    let d2: Vec<f64> = positions
        .iter()
        .map(|p| p[0] * p[0] + p[1] * p[1])
        .collect();
    order.sort_unstable_by(|&a, &b| d2[a].total_cmp(&d2[b]));
    let sorted_positions: Vec<[f64; 2]> = order.iter().map(|&i| positions[i]).collect();
    let dist_sq: Vec<f64> = order.iter().map(|&i| d2[i]).collect();
    let n_bs = sorted_positions.len();
    let n_files = catalog.n_files();
    let k = law.cache_size();
    let mut caches = CacheTable::with_capacity(n_bs, n_files);
    match law {
        CacheLaw::Graphical(_) => {
            for bs in 0..n_bs {
                let draw = rng.random::<f64>();
                for file in sample_cache_from_bounds(bounds, k, draw) {
                    caches.set(bs, file);
                }
            }
        }
        CacheLaw::IidPopularity { catalog, .. } => {
            for bs in 0..n_bs {
                let mut sampler = WeightedWithoutReplacement::new(catalog.popularity());
                for _ in 0..k {
                    caches.set(bs, sampler.draw(rng.random::<f64>()));
                }
            }
        }
    }
    let fading: Vec<Complex64> = (0..n_bs)
        .map(|_| {
            let re: f64 = rng.sample(rand_distr::StandardNormal);
            let im: f64 = rng.sample(rand_distr::StandardNormal);
            Complex64::new(re, im).scale(std::f64::consts::FRAC_1_SQRT_2)
        })
        .collect();
    Realization {
        positions: sorted_positions,
        dist_sq,
        caches,
        fading,
        requested_file: 0,
    }
}

fn evaluate_request(
    real: &Realization,
    law: &CacheLaw<'_>,
    catalog: &Catalog<f64>,
    popularity_cdf: &[f64],
    sim: &SimConfig,
    scheme: Scheme,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let coop = sim.net.coop_size();
    let half_alpha = sim.net.alpha().get() / 2.0;
    let tau = sim.net.sir_threshold();
    // per-BS interference power and its total outside the cluster
    let power: Vec<f64> = (0..real.n_bs())
        .map(|bs| real.dist_sq[bs].powf(-half_alpha) * real.fading[bs].norm_sqr())
        .collect();
    let total_outside: f64 = power[coop..].iter().sum();
    let mut assignment = ServiceAssignment {
        coop_count: 0,
        serving: Vec::with_capacity(coop),
        silenced: Vec::with_capacity(coop),
    };
    let success_of = |file: usize, assignment: &mut ServiceAssignment| -> f64 {
        if law.marginal(file) == Some(0.0) {
            return 0.0; // no BS can hold it: certain miss
        }
        classify_into(real, file, coop, assignment);
        if assignment.serving.is_empty() {
            return 0.0;
        }
        let signal = signal_power(real, &assignment.serving, scheme, half_alpha)
            .expect("sim scheme validated");
        let interference = if assignment.coop_count == 0 {
            total_outside - power[assignment.serving[0]]
        } else {
            total_outside
        };
        if signal >= tau * interference {
            1.0
        } else {
            0.0
        }
    };
    match sim.request_mode {
        RequestMode::Stratified => {
            let mut acc = 0.0;
            for (file, &a) in catalog.popularity().iter().enumerate() {
                if a > 0.0 {
                    acc += a * success_of(file, &mut assignment);
                }
            }
            acc
        }
        RequestMode::Sampled => {
            let u = rng.random::<f64>();
            let file = popularity_cdf
                .partition_point(|&c| c < u)
                .min(catalog.n_files() - 1);
            success_of(file, &mut assignment)
        }
    }
}

/// Monte Carlo oracle for the fallback-case conditional STP: one file
/// with marginal `t`, conditioned on none of the `M` nearest BSs holding
/// it. Per-BS presence is Bernoulli(`t`), matching the marginal law of a
/// valid placement realization; presence bits are independent of the
/// geometry and of each other, so the conditioning is realized exactly by
/// fixing the cluster bits to "absent" rather than by rejection.
pub fn estimate_fallback_stp(t: f64, sim: &SimConfig) -> Result<StpEstimate, SimError> {
    sim.validate()?;
    assert!(t > 0.0 && t < 1.0, "conditioning requires t in (0, 1)");
    let coop = sim.net.coop_size();
    let half_alpha = sim.net.alpha().get() / 2.0;
    let tau = sim.net.sir_threshold();
    let per: Vec<(f64, u32)> = (0..sim.n_realizations)
        .into_par_iter()
        .map(|idx| {
            let mut rejected = 0u32;
            for attempt in 0..64 {
                let mut rng = substream(sim.master_seed, idx as u64, attempt);
                let positions = sample_ppp(sim.net.bs_density(), sim.window_half_width, &mut rng);
                if positions.len() < coop {
                    rejected += 1;
                    continue;
                }
                let mut d2: Vec<f64> = positions
                    .iter()
                    .map(|p| p[0] * p[0] + p[1] * p[1])
                    .collect();
                d2.sort_unstable_by(f64::total_cmp);
                let mut serving = None;
                for bs in coop..d2.len() {
                    if rng.random::<f64>() < t {
                        serving = Some(bs);
                        break;
                    }
                }
                let Some(b) = serving else {
                    return (0.0, rejected); // truncated window: miss
                };
                let mut interference = 0.0;
                for (bs, &r2) in d2.iter().enumerate().skip(coop) {
                    if bs != b {
                        let h2: f64 = -(1.0 - rng.random::<f64>()).ln();
                        interference += r2.powf(-half_alpha) * h2;
                    }
                }
                let h2: f64 = -(1.0 - rng.random::<f64>()).ln();
                let signal = d2[b].powf(-half_alpha) * h2;
                return (
                    if signal >= tau * interference {
                        1.0
                    } else {
                        0.0
                    },
                    rejected,
                );
            }
            (0.0, rejected)
        })
        .collect();
    let n = per.len();
    let mean = per.iter().map(|&(v, _)| v).sum::<f64>() / n as f64;
    let rejected = per.iter().map(|&(_, r)| r as usize).sum();
    Ok(StpEstimate {
        mean,
        std_error: (mean * (1.0 - mean) / n as f64).sqrt(),
        n,
        rejected,
    })
}

/// Streams one trace row per evaluated request to `write`, alongside the
/// estimation. Columns: realization, file, case, sir_db, success.
pub fn estimate_stp_traced<W: std::io::Write>(
    placement: &PlacementVector<f64>,
    catalog: &Catalog<f64>,
    sim: &SimConfig,
    scheme: Scheme,
    write: &mut W,
) -> Result<StpEstimate, SimError> {
    sim.validate()?;
    if !matches!(scheme, Scheme::Ncjt | Scheme::CjtExact) {
        return Err(SimError::AnalyticOnlyScheme(scheme));
    }
    if placement.n_files() != catalog.n_files() {
        return Err(SimError::DimensionMismatch {
            placement: placement.n_files(),
            catalog: catalog.n_files(),
        });
    }
    writeln!(write, "realization,file,case,sir_db,success").expect("trace write");
    let law = CacheLaw::Graphical(placement);
    let bounds = placement.segment_bounds();
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for idx in 0..sim.n_realizations {
        // same rejection-and-redraw rule as the untraced path
        let mut drawn = None;
        for attempt in 0..64 {
            let mut rng = substream(sim.master_seed, idx as u64, attempt);
            let positions = sample_ppp(sim.net.bs_density(), sim.window_half_width, &mut rng);
            if positions.len() >= sim.net.coop_size() {
                drawn = Some(finish_realization(positions, &law, &bounds, catalog, &mut rng));
                break;
            }
        }
        let Some(mut real) = drawn else {
            continue;
        };
        let mut acc = 0.0;
        for (file, &a) in catalog.popularity().iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            real.requested_file = file;
            let assignment = classify_and_serve(&real, &sim.net);
            let (sir_db, success) = if assignment.is_miss() {
                (f64::NEG_INFINITY, 0.0)
            } else {
                let s = sir(&real, &assignment, scheme, &sim.net).expect("valid assignment");
                (
                    10.0 * s.log10(),
                    (s >= sim.net.sir_threshold()) as u8 as f64,
                )
            };
            writeln!(
                write,
                "{idx},{file},{},{sir_db:.3},{}",
                assignment.coop_count, success as u8
            )
            .expect("trace write");
            acc += a * success;
        }
        sum += acc;
        sum_sq += acc * acc;
    }
    let n = sim.n_realizations;
    let mean = sum / n as f64;
    let var = (sum_sq / n as f64 - mean * mean).max(0.0);
    Ok(StpEstimate {
        mean,
        std_error: (var / (n as f64 - 1.0)).sqrt(),
        n,
        rejected: 0,
    })
}
