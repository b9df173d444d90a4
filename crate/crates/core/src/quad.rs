//! Quadrature and interpolation primitives backing the analytic evaluators.
//!
//! Everything here is deliberately small and self-contained: fixed-order
//! Gauss-Legendre rules (with semi-infinite mappings), an adaptive 1-D
//! integrator built on interval bisection, a tensor-product rule over the
//! unit cube, an additive-recurrence low-discrepancy sequence for higher
//! cube dimensions, and a cubic interpolant on a uniform grid.

use crate::real::Real;

/// Gauss-Legendre rule of fixed order on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> GaussLegendre<T> {
    /// Builds the `n`-point rule. Nodes are found by Newton iteration on
    /// the Legendre polynomial from the Chebyshev initial guess.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "rule order must be positive");
        let mut nodes = vec![T::zero(); n];
        let mut weights = vec![T::zero(); n];
        let nf = T::of_usize(n);
        let tol = T::epsilon() * T::of(4.0);
        for i in 0..n {
            let k = T::of_usize(i);
            let mut x = (T::PI() * (k + T::of(0.75)) / (nf + T::of(0.5))).cos();
            // Newton: x <- x - P_n(x) / P_n'(x)
            for _ in 0..100 {
                let (p, dp) = legendre_with_derivative(n, x);
                let dx = p / dp;
                x = x - dx;
                if dx.abs() <= tol {
                    break;
                }
            }
            let (_, dp) = legendre_with_derivative(n, x);
            nodes[i] = -x; // ascending order
            weights[i] = T::of(2.0) / ((T::one() - x * x) * dp * dp);
        }
        nodes.reverse();
        weights.reverse();
        GaussLegendre { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Integrates `f` over the finite interval `[a, b]`.
    pub fn integrate<F: FnMut(T) -> T>(&self, a: T, b: T, mut f: F) -> T {
        let half = (b - a) * T::of(0.5);
        let mid = (a + b) * T::of(0.5);
        let mut acc = T::zero();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc = acc + *w * f(mid + half * *x);
        }
        acc * half
    }

    /// Integrates `f` over `[0, inf)` via `u = scale * v / (1 - v)`.
    ///
    /// `scale` should match the decay scale of the integrand; the rational
    /// map resolves features of that size well on both sides.
    pub fn integrate_semi_infinite<F: FnMut(T) -> T>(&self, scale: T, mut f: F) -> T {
        debug_assert!(scale > T::zero());
        self.integrate(T::zero(), T::one(), |v| {
            let one_minus = T::one() - v;
            let u = scale * v / one_minus;
            f(u) * scale / (one_minus * one_minus)
        })
    }
}

/// Evaluates `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre_with_derivative<T: Real>(n: usize, x: T) -> (T, T) {
    let mut p_prev = T::one();
    let mut p = x;
    if n == 0 {
        return (T::one(), T::zero());
    }
    for k in 2..=n {
        let kf = T::of_usize(k);
        let two_k_m1 = T::of_usize(2 * k - 1);
        let k_m1 = T::of_usize(k - 1);
        let next = (two_k_m1 * x * p - k_m1 * p_prev) / kf;
        p_prev = p;
        p = next;
    }
    let dp = T::of_usize(n) * (x * p - p_prev) / (x * x - T::one());
    (p, dp)
}

/// Adaptive integration of `f` over `[a, b]` to absolute tolerance `tol`.
///
/// Each segment is estimated with a 15-point rule and checked against the
/// sum of the two half-segment estimates; segments that disagree are split.
/// Panics are avoided by capping the recursion depth; integrands here are
/// smooth so the cap is never reached in practice.
pub fn integrate_adaptive<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T, tol: T) -> T {
    let rule = GaussLegendre::new(15);
    let whole = rule.integrate(a, b, f);
    adaptive_step(f, a, b, whole, tol, &rule, 0)
}

fn adaptive_step<T: Real, F: Fn(T) -> T>(
    f: &F,
    a: T,
    b: T,
    whole: T,
    tol: T,
    rule: &GaussLegendre<T>,
    depth: usize,
) -> T {
    let mid = (a + b) * T::of(0.5);
    let left = rule.integrate(a, mid, f);
    let right = rule.integrate(mid, b, f);
    let refined = left + right;
    if (refined - whole).abs() <= tol || depth >= 40 {
        return refined;
    }
    // floor keeps the requested tolerance above what the arithmetic can
    // resolve, bounding the recursion on rough integrands
    let floor = T::epsilon() * refined.abs() * T::of(0.25);
    let half_tol = (tol * T::of(0.5)).max(floor);
    adaptive_step(f, a, mid, left, half_tol, rule, depth + 1)
        + adaptive_step(f, mid, b, right, half_tol, rule, depth + 1)
}

/// Tensor-product Gauss-Legendre integral of `f` over the unit cube `[0,1]^dim`.
pub fn integrate_unit_cube<T: Real, F: FnMut(&[T]) -> T>(
    rule: &GaussLegendre<T>,
    dim: usize,
    mut f: F,
) -> T {
    assert!(dim >= 1);
    let n = rule.order();
    let half = T::of(0.5);
    // nodes and weights mapped to [0, 1]
    let nodes: Vec<T> = rule.nodes.iter().map(|&x| (x + T::one()) * half).collect();
    let weights: Vec<T> = rule.weights.iter().map(|&w| w * half).collect();
    let mut idx = vec![0usize; dim];
    let mut point = vec![T::zero(); dim];
    let mut acc = T::zero();
    loop {
        let mut w = T::one();
        for d in 0..dim {
            point[d] = nodes[idx[d]];
            w = w * weights[idx[d]];
        }
        acc = acc + w * f(&point);
        // odometer increment
        let mut d = 0;
        loop {
            idx[d] += 1;
            if idx[d] < n {
                break;
            }
            idx[d] = 0;
            d += 1;
            if d == dim {
                return acc;
            }
        }
    }
}

/// Quasi-Monte Carlo mean of `f` over the unit cube, using the Sobol
/// sequence with the Joe-Kuo direction numbers.
pub fn integrate_unit_cube_qmc<T: Real, F: FnMut(&[T]) -> T>(
    dim: usize,
    n_points: usize,
    mut f: F,
) -> T {
    use sobol::params::JoeKuoD6;
    use sobol::Sobol;
    use std::sync::OnceLock;
    static PARAMS: OnceLock<JoeKuoD6> = OnceLock::new();
    let params = PARAMS.get_or_init(JoeKuoD6::minimal);
    let seq = Sobol::<f64>::new(dim, params);
    let mut point = vec![T::zero(); dim];
    let mut acc = T::zero();
    for raw in seq.take(n_points) {
        for d in 0..dim {
            point[d] = T::of(raw[d]);
        }
        acc = acc + f(&point);
    }
    acc / T::of_usize(n_points)
}

/// Cubic Hermite interpolant on a uniform grid with centered-difference
/// slopes (one-sided at the ends). C^1 everywhere.
#[derive(Debug, Clone)]
pub struct UniformCubic<T> {
    x0: T,
    step: T,
    values: Vec<T>,
    slopes: Vec<T>,
}

impl<T: Real> UniformCubic<T> {
    pub fn new(x0: T, step: T, values: Vec<T>) -> Self {
        assert!(values.len() >= 2, "need at least two grid values");
        let n = values.len();
        let mut slopes = vec![T::zero(); n];
        let two = T::of(2.0);
        if n == 2 {
            slopes[0] = (values[1] - values[0]) / step;
            slopes[1] = slopes[0];
        } else {
            // second-order one-sided differences at the ends
            let three = T::of(3.0);
            let four = T::of(4.0);
            slopes[0] = (-three * values[0] + four * values[1] - values[2]) / (two * step);
            slopes[n - 1] =
                (three * values[n - 1] - four * values[n - 2] + values[n - 3]) / (two * step);
        }
        for i in 1..n - 1 {
            slopes[i] = (values[i + 1] - values[i - 1]) / (two * step);
        }
        UniformCubic {
            x0,
            step,
            values,
            slopes,
        }
    }

    /// Evaluates the interpolant, clamping `x` to the grid range.
    pub fn eval(&self, x: T) -> T {
        let n = self.values.len();
        let span = self.step * T::of_usize(n - 1);
        let xr = (x - self.x0).max(T::zero()).min(span);
        let mut cell = (xr / self.step).floor().as_f64() as usize;
        if cell >= n - 1 {
            cell = n - 2;
        }
        let s = (xr - self.step * T::of_usize(cell)) / self.step;
        let s2 = s * s;
        let s3 = s2 * s;
        let two = T::of(2.0);
        let three = T::of(3.0);
        let h00 = two * s3 - three * s2 + T::one();
        let h10 = s3 - two * s2 + s;
        let h01 = -two * s3 + three * s2;
        let h11 = s3 - s2;
        h00 * self.values[cell]
            + h10 * self.step * self.slopes[cell]
            + h01 * self.values[cell + 1]
            + h11 * self.step * self.slopes[cell + 1]
    }

    pub fn range(&self) -> (T, T) {
        (
            self.x0,
            self.x0 + self.step * T::of_usize(self.values.len() - 1),
        )
    }
}
