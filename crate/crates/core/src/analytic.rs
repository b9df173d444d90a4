//! Numerical evaluation of the successful transmission probability under
//! non-coherent and coherent joint transmission.
//!
//! The per-file STP splits into a fallback part (none of the `M` nearest
//! BSs holds the file and the nearest holder beyond them serves) and a
//! cooperative part (a binomial mixture over the number `m` of holders
//! among the `M` nearest). The cooperative coefficients depend only on
//! `(scheme, tau, alpha, M)` and are precomputed once into a
//! [`CoefficientTable`].
//!
//! All radial integrals are reduced in closed form. Writing the
//! interference exponent as `A(theta, u) = u * s(theta)` with
//! `s = exponent_slope` turns each semi-infinite radial axis into a gamma
//! integral, leaving the fallback term as a single 1-D integral over the
//! squared distance ratio `rho = (r_M / r_0)^2` and each cooperative term
//! as an integral over a low-dimensional unit cube:
//!
//! * fallback:  `q(t) = M t * int_0^1 rho^(M-1) h(rho)^-(M+1) drho`
//!   with `h(rho) = t s(tau) + rho (1 - t) s(tau rho^(-alpha/2))`;
//! * cooperative: cube integrands `s(theta_j(t_vec))^-M` where `theta_j`
//!   carries the binomial-expansion index `j` and the bound factor `beta`.

use thiserror::Error;

use crate::catalog::{Catalog, PlacementVector};
use crate::quad::{
    integrate_adaptive, integrate_unit_cube, integrate_unit_cube_qmc, GaussLegendre, UniformCubic,
};
use crate::real::Real;
use crate::specfun::{alzer_beta, exponent_slope, PathLossExponent};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticError {
    #[error("BS density must be finite and positive, got {0}")]
    BadDensity(f64),
    #[error("cooperation size must be at least 1")]
    BadCoopSize,
    #[error("SIR threshold must be finite and positive, got {0}")]
    BadThreshold(f64),
    #[error("placement probability must lie in (0, 1] here, got {0}")]
    PlacementProbOutOfRange(f64),
    #[error("placement probability must lie in [0, 1], got {0}")]
    FileProbOutOfRange(f64),
    #[error("cooperative term index m = {m} outside 1..={coop_size}")]
    TermIndexOutOfRange { m: usize, coop_size: usize },
    #[error("scheme {0:?} has no analytic evaluator")]
    UnsupportedScheme(Scheme),
    #[error("coefficient table built for M = {table} used with config M = {config}")]
    TableMismatch { table: usize, config: usize },
    #[error("placement has {placement} files but catalog has {catalog}")]
    DimensionMismatch { placement: usize, catalog: usize },
}

/// Transmission scheme selector.
///
/// `CjtExact` is the coherent scheme as simulated; it has no analytic
/// evaluator and is rejected by everything in this module.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Non-coherent joint transmission (no CSI at the BSs).
    Ncjt,
    /// Analytic upper bound for coherent joint transmission.
    CjtUpper,
    /// Analytic approximation for coherent joint transmission.
    CjtApprox,
    /// Coherent joint transmission, simulator only.
    CjtExact,
}

impl Scheme {
    pub fn is_analytic(self) -> bool {
        !matches!(self, Scheme::CjtExact)
    }

    /// The simulator scheme whose ground truth this analytic scheme
    /// targets.
    pub fn simulated_counterpart(self) -> Scheme {
        match self {
            Scheme::Ncjt => Scheme::Ncjt,
            _ => Scheme::CjtExact,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Scheme::Ncjt => "ncjt",
            Scheme::CjtUpper => "cjt_upper",
            Scheme::CjtApprox => "cjt_approx",
            Scheme::CjtExact => "cjt_exact",
        }
    }
}

/// Network-level parameters shared by the analytic evaluators and the
/// simulator.
///
/// The analytic STP does not depend on `bs_density` (it cancels after the
/// radial substitutions); the field is carried for the simulator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkConfig<T> {
    bs_density: T,
    alpha: PathLossExponent<T>,
    coop_size: usize,
    sir_threshold: T,
}

impl<T: Real> NetworkConfig<T> {
    pub fn new(
        bs_density: T,
        alpha: PathLossExponent<T>,
        coop_size: usize,
        sir_threshold: T,
    ) -> Result<Self, AnalyticError> {
        if !(bs_density.is_finite() && bs_density > T::zero()) {
            return Err(AnalyticError::BadDensity(bs_density.as_f64()));
        }
        if coop_size == 0 {
            return Err(AnalyticError::BadCoopSize);
        }
        if !(sir_threshold.is_finite() && sir_threshold > T::zero()) {
            return Err(AnalyticError::BadThreshold(sir_threshold.as_f64()));
        }
        Ok(NetworkConfig {
            bs_density,
            alpha,
            coop_size,
            sir_threshold,
        })
    }

    pub fn bs_density(&self) -> T {
        self.bs_density
    }

    pub fn alpha(&self) -> PathLossExponent<T> {
        self.alpha
    }

    pub fn coop_size(&self) -> usize {
        self.coop_size
    }

    pub fn sir_threshold(&self) -> T {
        self.sir_threshold
    }

    pub fn with_coop_size(mut self, coop_size: usize) -> Result<Self, AnalyticError> {
        if coop_size == 0 {
            return Err(AnalyticError::BadCoopSize);
        }
        self.coop_size = coop_size;
        Ok(self)
    }

    pub fn with_sir_threshold(mut self, sir_threshold: T) -> Result<Self, AnalyticError> {
        if !(sir_threshold.is_finite() && sir_threshold > T::zero()) {
            return Err(AnalyticError::BadThreshold(sir_threshold.as_f64()));
        }
        self.sir_threshold = sir_threshold;
        Ok(self)
    }
}

/// Quadrature controls for the analytic evaluators.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureSpec {
    /// Absolute tolerance of the adaptive 1-D integrals.
    pub line_tol: f64,
    /// Tensor Gauss-Legendre nodes per axis for cube dimensions <= 3.
    pub cube_nodes: usize,
    /// Low-discrepancy points for cube dimensions >= 4.
    pub qmc_points: usize,
    /// Grid step of the memoized fallback term used by the optimizer.
    pub memo_step: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            line_tol: 1e-9,
            cube_nodes: 32,
            qmc_points: 1 << 16,
            memo_step: 0.005,
        }
    }
}

/// Conditional cooperative STPs `q_(c,m)`, `m = 1..=M`, for one fixed
/// `(scheme, tau, alpha, M)`. Entries are increasing in `m` and lie in
/// `[0, 1]`; they do not depend on the placement vector, so one table is
/// shared across all files and optimizer iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTable<T> {
    scheme: Scheme,
    coop_size: usize,
    entries: Vec<T>,
}

impl<T: Real> CoefficientTable<T> {
    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn coop_size(&self) -> usize {
        self.coop_size
    }

    /// Entry for `m` cooperating holders, `m` in `1..=M`.
    pub fn get(&self, m: usize) -> T {
        self.entries[m - 1]
    }

    pub fn entries(&self) -> &[T] {
        &self.entries
    }

    #[cfg(test)]
    pub(crate) fn test_with_entries(scheme: Scheme, entries: Vec<T>) -> Self {
        let coop_size = entries.len();
        CoefficientTable {
            scheme,
            coop_size,
            entries,
        }
    }
}

/// STP of the fallback case: none of the `M` nearest BSs holds the file
/// and the nearest holder beyond them serves, with the whole cluster
/// silenced. Valid for `t` in `(0, 1]`; the `t = 0` cache-miss case is an
/// exact zero branch handled by [`file_stp`].
///
/// Monotone increasing in `t`.
pub fn fallback_stp<T: Real>(
    t: T,
    cfg: &NetworkConfig<T>,
    quad: &QuadratureSpec,
) -> Result<T, AnalyticError> {
    if !(t > T::zero() && t <= T::one()) {
        return Err(AnalyticError::PlacementProbOutOfRange(t.as_f64()));
    }
    let m = cfg.coop_size;
    let alpha = cfg.alpha;
    let tau = cfg.sir_threshold;
    let half_alpha = alpha.get() * T::of(0.5);
    let t_slope_tau = t * exponent_slope(alpha, tau);
    let one_minus_t = T::one() - t;
    let mf = T::of_usize(m);
    let integrand = move |rho: T| {
        let theta = tau * rho.powf(-half_alpha);
        let h = t_slope_tau + rho * one_minus_t * exponent_slope(alpha, theta);
        rho.powi(m as i32 - 1) * h.powi(-(m as i32 + 1))
    };
    let integral = integrate_adaptive(&integrand, T::zero(), T::one(), T::of(quad.line_tol));
    Ok(mf * t * integral)
}

/// Cube integrand factor shared by the cooperative terms.
fn coop_cube_integral<T: Real>(
    dim: usize,
    quad: &QuadratureSpec,
    theta_of: impl Fn(&[T]) -> T,
    neg_power: i32,
    alpha: PathLossExponent<T>,
) -> T {
    let f = |point: &[T]| exponent_slope(alpha, theta_of(point)).powi(-neg_power);
    if dim <= 3 {
        let rule = GaussLegendre::new(quad.cube_nodes);
        integrate_unit_cube(&rule, dim, f)
    } else {
        integrate_unit_cube_qmc(dim, quad.qmc_points, f)
    }
}

fn binomial(n: u32, k: u32) -> u64 {
    let mut acc = 1u64;
    for i in 0..k as u64 {
        acc = acc * (n as u64 - i) / (i + 1);
    }
    acc
}

/// Cooperative term for the event that the `M`-th nearest BS does not
/// hold the file (so the cluster edge is silenced); `m` of the closer BSs
/// serve. Zero when `m = M` since all serving BSs would fill the cluster.
///
/// `x` is the binomial expansion order and `beta` the bound factor: the
/// non-coherent scheme uses `(1, 1)`, the coherent bound `(m, beta_m)`,
/// the coherent approximation `(m, 1)`.
pub fn edge_silenced_term<T: Real>(
    m: usize,
    x: u32,
    beta: T,
    cfg: &NetworkConfig<T>,
    quad: &QuadratureSpec,
) -> Result<T, AnalyticError> {
    let coop = cfg.coop_size;
    if m == 0 || m > coop {
        return Err(AnalyticError::TermIndexOutOfRange { m, coop_size: coop });
    }
    if m == coop {
        return Ok(T::zero());
    }
    let alpha = cfg.alpha;
    let tau = cfg.sir_threshold;
    let half_alpha = alpha.get() * T::of(0.5);
    let mut total = T::zero();
    let mut sign = T::one();
    for j in 1..=x {
        let jbt = T::of(j as f64) * beta * tau;
        let theta_of = |point: &[T]| {
            let denom = point
                .iter()
                .fold(T::zero(), |s, &ti| s + ti.powf(-half_alpha));
            jbt / denom
        };
        let term = coop_cube_integral(m, quad, theta_of, coop as i32, alpha);
        total = total + sign * T::of(binomial(x, j) as f64) * term;
        sign = -sign;
    }
    Ok(total)
}

/// Cooperative term for the event that the `M`-th nearest BS itself holds
/// the file and serves. At `m = 1` the single radial integral is exact
/// and independent of `(x, beta)`.
pub fn edge_serving_term<T: Real>(
    m: usize,
    x: u32,
    beta: T,
    cfg: &NetworkConfig<T>,
    quad: &QuadratureSpec,
) -> Result<T, AnalyticError> {
    let coop = cfg.coop_size;
    if m == 0 || m > coop {
        return Err(AnalyticError::TermIndexOutOfRange { m, coop_size: coop });
    }
    let alpha = cfg.alpha;
    let tau = cfg.sir_threshold;
    if m == 1 {
        return Ok(exponent_slope(alpha, tau).powi(-(coop as i32)));
    }
    let half_alpha = alpha.get() * T::of(0.5);
    let mut total = T::zero();
    let mut sign = T::one();
    for j in 1..=x {
        let jbt = T::of(j as f64) * beta * tau;
        let theta_of = |point: &[T]| {
            let denom = point
                .iter()
                .fold(T::one(), |s, &ti| s + ti.powf(-half_alpha));
            jbt / denom
        };
        let term = coop_cube_integral(m - 1, quad, theta_of, coop as i32, alpha);
        total = total + sign * T::of(binomial(x, j) as f64) * term;
        sign = -sign;
    }
    Ok(total)
}

/// Expansion order and bound factor for the cooperative terms of each
/// analytic scheme at a given holder count `m`.
fn scheme_expansion<T: Real>(scheme: Scheme, m: usize) -> Result<(u32, T), AnalyticError> {
    match scheme {
        Scheme::Ncjt => Ok((1, T::one())),
        Scheme::CjtUpper => Ok((m as u32, alzer_beta(m as u32))),
        Scheme::CjtApprox => Ok((m as u32, T::one())),
        Scheme::CjtExact => Err(AnalyticError::UnsupportedScheme(scheme)),
    }
}

/// Builds the cooperative coefficients `q_(c,m)` for `m = 1..=M`.
pub fn coefficient_table<T: Real>(
    scheme: Scheme,
    cfg: &NetworkConfig<T>,
    quad: &QuadratureSpec,
) -> Result<CoefficientTable<T>, AnalyticError> {
    let coop = cfg.coop_size;
    let coop_f = T::of_usize(coop);
    let mut entries = Vec::with_capacity(coop);
    for m in 1..=coop {
        let (x, beta) = scheme_expansion::<T>(scheme, m)?;
        let silenced = edge_silenced_term(m, x, beta, cfg, quad)?;
        let serving = edge_serving_term(m, x, beta, cfg, quad)?;
        let mf = T::of_usize(m);
        let weight = mf / coop_f;
        entries.push((T::one() - weight) * silenced + weight * serving);
    }
    Ok(CoefficientTable {
        scheme,
        coop_size: coop,
        entries,
    })
}

fn bernstein_mix<T: Real>(t: T, table: &CoefficientTable<T>) -> T {
    let m_coop = table.coop_size;
    let one_minus = T::one() - t;
    let mut acc = T::zero();
    // binomial(M, m) t^m (1-t)^(M-m), built incrementally
    let mut coeff = T::one();
    let mut t_pow = T::one();
    for m in 1..=m_coop {
        coeff = coeff * T::of_usize(m_coop - m + 1) / T::of_usize(m);
        t_pow = t_pow * t;
        acc = acc + coeff * t_pow * one_minus.powi((m_coop - m) as i32) * table.get(m);
    }
    acc
}

/// Per-file STP at placement probability `t`, given the cooperative
/// coefficient table. Exact branches: `t = 0` is a cache miss (zero) and
/// `t = 1` collapses to the full-cooperation coefficient.
pub fn file_stp<T: Real>(
    t: T,
    table: &CoefficientTable<T>,
    cfg: &NetworkConfig<T>,
    quad: &QuadratureSpec,
) -> Result<T, AnalyticError> {
    check_table(table, cfg)?;
    if !(t >= T::zero() && t <= T::one()) {
        return Err(AnalyticError::FileProbOutOfRange(t.as_f64()));
    }
    if t == T::zero() {
        return Ok(T::zero());
    }
    if t == T::one() {
        return Ok(table.get(table.coop_size));
    }
    let weighted_fallback = (T::one() - t).powi(cfg.coop_size as i32) * fallback_stp(t, cfg, quad)?;
    Ok(weighted_fallback + bernstein_mix(t, table))
}

/// Popularity-weighted STP over the whole catalog.
pub fn total_stp<T: Real>(
    placement: &PlacementVector<T>,
    catalog: &Catalog<T>,
    scheme: Scheme,
    cfg: &NetworkConfig<T>,
    quad: &QuadratureSpec,
) -> Result<T, AnalyticError> {
    let table = coefficient_table(scheme, cfg, quad)?;
    let eval = StpEvaluator::from_table(table, *cfg, quad.clone())?;
    eval.total_stp(placement, catalog)
}

fn check_table<T: Real>(
    table: &CoefficientTable<T>,
    cfg: &NetworkConfig<T>,
) -> Result<(), AnalyticError> {
    if table.coop_size != cfg.coop_size {
        return Err(AnalyticError::TableMismatch {
            table: table.coop_size,
            config: cfg.coop_size,
        });
    }
    Ok(())
}

/// Clamp used when differentiating near the interval ends; the fallback
/// integrand degenerates as `t -> 0`.
pub const DERIVATIVE_CLAMP: f64 = 1e-4;

/// Reusable STP evaluator: one coefficient table plus, optionally, a
/// memoized fallback term on a uniform `t`-grid (cubic interpolation).
/// The memo keeps optimizer iterations cheap; accuracy is well inside the
/// coefficient tolerance.
#[derive(Debug, Clone)]
pub struct StpEvaluator<T: Real> {
    cfg: NetworkConfig<T>,
    quad: QuadratureSpec,
    table: CoefficientTable<T>,
    fallback_memo: Option<UniformCubic<T>>,
}

impl<T: Real> StpEvaluator<T> {
    pub fn new(
        scheme: Scheme,
        cfg: &NetworkConfig<T>,
        quad: &QuadratureSpec,
    ) -> Result<Self, AnalyticError> {
        let table = coefficient_table(scheme, cfg, quad)?;
        Self::from_table(table, *cfg, quad.clone())
    }

    pub fn from_table(
        table: CoefficientTable<T>,
        cfg: NetworkConfig<T>,
        quad: QuadratureSpec,
    ) -> Result<Self, AnalyticError> {
        check_table(&table, &cfg)?;
        Ok(StpEvaluator {
            cfg,
            quad,
            table,
            fallback_memo: None,
        })
    }

    /// Precomputes `(1-t)^M * fallback_stp(t)` on the memo grid.
    pub fn with_fallback_memo(mut self) -> Result<Self, AnalyticError> {
        let step = T::of(self.quad.memo_step);
        let n_cells = (T::one() / step).round().as_f64() as usize;
        let mut values = Vec::with_capacity(n_cells + 1);
        values.push(T::zero()); // cache-miss limit at t = 0
        for i in 1..=n_cells {
            let t = (step * T::of_usize(i)).min(T::one());
            values.push(self.weighted_fallback_direct(t)?);
        }
        self.fallback_memo = Some(UniformCubic::new(T::zero(), step, values));
        Ok(self)
    }

    pub fn table(&self) -> &CoefficientTable<T> {
        &self.table
    }

    pub fn cfg(&self) -> &NetworkConfig<T> {
        &self.cfg
    }

    pub fn scheme(&self) -> Scheme {
        self.table.scheme
    }

    fn weighted_fallback_direct(&self, t: T) -> Result<T, AnalyticError> {
        if t == T::zero() || t == T::one() {
            return Ok(T::zero());
        }
        Ok(
            (T::one() - t).powi(self.cfg.coop_size as i32)
                * fallback_stp(t, &self.cfg, &self.quad)?,
        )
    }

    fn weighted_fallback(&self, t: T) -> Result<T, AnalyticError> {
        match &self.fallback_memo {
            Some(grid) => Ok(grid.eval(t)),
            None => self.weighted_fallback_direct(t),
        }
    }

    pub fn file_stp(&self, t: T) -> Result<T, AnalyticError> {
        if !(t >= T::zero() && t <= T::one()) {
            return Err(AnalyticError::FileProbOutOfRange(t.as_f64()));
        }
        if t == T::zero() {
            return Ok(T::zero());
        }
        if t == T::one() {
            return Ok(self.table.get(self.table.coop_size));
        }
        Ok(self.weighted_fallback(t)? + bernstein_mix(t, &self.table))
    }

    /// Derivative of the per-file STP at `t`, clamped to
    /// `[DERIVATIVE_CLAMP, 1 - DERIVATIVE_CLAMP]`. The cooperative part is
    /// differentiated analytically in Bernstein form; the fallback part by
    /// a central difference with step `1e-4`.
    pub fn file_stp_derivative(&self, t: T) -> T {
        let eps = T::of(DERIVATIVE_CLAMP);
        let t = t.max(eps).min(T::one() - eps);
        let h = T::of(1e-4);
        let lo = (t - h).max(T::zero());
        let hi = (t + h).min(T::one());
        let f_lo = self.weighted_fallback(lo).expect("in range");
        let f_hi = self.weighted_fallback(hi).expect("in range");
        let d_fallback = (f_hi - f_lo) / (hi - lo);
        d_fallback + self.bernstein_derivative(t)
    }

    /// Derivative of the cooperative mixture: with `q_(c,0) = 0`,
    /// `d/dt sum_m B_(m,M)(t) q_(c,m) = M sum_m (q_(c,m+1) - q_(c,m)) B_(m,M-1)(t)`.
    fn bernstein_derivative(&self, t: T) -> T {
        let m_coop = self.table.coop_size;
        let one_minus = T::one() - t;
        let mut acc = T::zero();
        let mut coeff = T::one(); // binomial(M-1, m)
        let mut t_pow = T::one();
        for m in 0..m_coop {
            if m > 0 {
                coeff = coeff * T::of_usize(m_coop - m) / T::of_usize(m);
                t_pow = t_pow * t;
            }
            let prev = if m == 0 { T::zero() } else { self.table.get(m) };
            let diff = self.table.get(m + 1) - prev;
            acc = acc + coeff * t_pow * one_minus.powi((m_coop - 1 - m) as i32) * diff;
        }
        T::of_usize(m_coop) * acc
    }

    pub fn total_stp(
        &self,
        placement: &PlacementVector<T>,
        catalog: &Catalog<T>,
    ) -> Result<T, AnalyticError> {
        if placement.n_files() != catalog.n_files() {
            return Err(AnalyticError::DimensionMismatch {
                placement: placement.n_files(),
                catalog: catalog.n_files(),
            });
        }
        let mut acc = T::zero();
        for (&a, &t) in catalog.popularity().iter().zip(placement.probs()) {
            if a > T::zero() && t > T::zero() {
                acc = acc + a * self.file_stp(t)?;
            }
        }
        Ok(acc)
    }
}
