//! Scalar special-function kernels shared by the analytic STP evaluators.
//!
//! The interference analysis repeatedly needs one narrow hypergeometric
//! family, `2F1(1, 1-2/a; 2-2/a; -theta)` for path-loss exponent `a > 2`
//! and `theta >= 0`, together with the exponent function built from it,
//! the regularized lower incomplete gamma function at integer shape, and
//! the Alzer bound factor. Nothing here aims at general-purpose special
//! functions.

use thiserror::Error;

use crate::real::Real;

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum SpecFunError {
    #[error("path-loss exponent must be finite and > 2, got {0}")]
    AlphaOutOfRange(f64),
    #[error("hypergeometric argument must be nonnegative, got {0}")]
    NegativeTheta(f64),
}

/// Path-loss exponent, strictly greater than 2.
///
/// The strict bound matters: the interference integrals behind the STP
/// expressions diverge at `alpha <= 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLossExponent<T>(T);

impl<T: Real> PathLossExponent<T> {
    pub fn new(alpha: T) -> Result<Self, SpecFunError> {
        if !(alpha.is_finite() && alpha > T::of(2.0)) {
            return Err(SpecFunError::AlphaOutOfRange(alpha.as_f64()));
        }
        Ok(PathLossExponent(alpha))
    }

    #[inline]
    pub fn get(self) -> T {
        self.0
    }
}

/// `F_G(alpha, theta) = 2F1(1, 1-2/a; 2-2/a; -theta)` for `theta >= 0`.
///
/// Three regimes, all plain series with geometric-or-better term decay:
/// the defining series up to `theta = 0.5`, a Pfaff-transformed series in
/// `theta / (1+theta)` up to `theta = 2`, and for larger arguments the
/// convergent expansion obtained from the Euler integral
/// `b * int_0^1 t^(b-1) / (1 + theta t) dt` by splitting the tail at
/// `theta` (convergent, not asymptotic, for `theta > 1`).
pub fn hypergeometric_factor<T: Real>(
    alpha: PathLossExponent<T>,
    theta: T,
) -> Result<T, SpecFunError> {
    if theta < T::zero() || theta.is_nan() {
        return Err(SpecFunError::NegativeTheta(theta.as_f64()));
    }
    let b = T::one() - T::of(2.0) / alpha.get();
    let stop = T::epsilon() * T::of(0.25);
    let value = if theta <= T::of(0.5) {
        // defining series: sum of (b)_n / (c)_n * (-theta)^n with c = b + 1
        let c = b + T::one();
        let z = -theta;
        let mut term = T::one();
        let mut sum = T::one();
        for n in 0..500 {
            let nf = T::of_usize(n);
            term = term * (b + nf) / (c + nf) * z;
            sum = sum + term;
            if term.abs() <= stop {
                break;
            }
        }
        sum
    } else if theta < T::of(2.0) {
        // Pfaff: (1+theta)^-1 * 2F1(1, 1; b+1; theta/(1+theta))
        let w = theta / (T::one() + theta);
        let mut term = T::one();
        let mut sum = T::one();
        for n in 0..2000 {
            let nf = T::of_usize(n);
            term = term * (nf + T::one()) * w / (b + T::one() + nf);
            sum = sum + term;
            if term.abs() <= stop {
                break;
            }
        }
        sum / (T::one() + theta)
    } else {
        // leading algebraic part plus the convergent tail series in 1/theta
        let pi_b = T::PI() * b;
        let lead = pi_b / pi_b.sin() * theta.powf(-b);
        let inv = theta.recip();
        let mut p = inv;
        let mut sign = T::one();
        let mut tail = T::zero();
        for k in 0..2000 {
            let kf = T::of_usize(k);
            let t = sign * p / (kf + T::one() - b);
            tail = tail + t;
            if t.abs() <= stop {
                break;
            }
            p = p * inv;
            sign = -sign;
        }
        lead - b * tail
    };
    Ok(value)
}

/// Slope of the interference exponent: `1 + 2 theta F_G / (alpha - 2)`,
/// so that `interference_exponent(alpha, theta, u) = u * exponent_slope`.
///
/// Factoring the exponent this way is what lets the evaluators integrate
/// the radial axis in closed form.
pub fn exponent_slope<T: Real>(alpha: PathLossExponent<T>, theta: T) -> T {
    let fg = hypergeometric_factor(alpha, theta).expect("theta >= 0");
    T::one() + T::of(2.0) * theta * fg / (alpha.get() - T::of(2.0))
}

/// Interference exponent `A(theta, u) = 2 u theta F_G / (alpha - 2) + u`.
///
/// `theta` and `u` must be nonnegative.
pub fn interference_exponent<T: Real>(alpha: PathLossExponent<T>, theta: T, u: T) -> T {
    debug_assert!(u >= T::zero());
    u * exponent_slope(alpha, theta)
}

/// Regularized lower incomplete gamma function at integer shape:
/// `gamma(l, x) / Gamma(l) = 1 - exp(-x) * sum_(k<l) x^k / k!`.
pub fn gamma_lower_regularized<T: Real>(l: u32, x: T) -> T {
    assert!(l >= 1, "shape parameter must be a positive integer");
    debug_assert!(x >= T::zero());
    let mut term = (-x).exp();
    let mut cum = term;
    for k in 1..l {
        term = term * x / T::of(k as f64);
        cum = cum + term;
    }
    (T::one() - cum).max(T::zero())
}

/// Alzer bound factor `Gamma(m+1)^(-1/m)`; equals 1 at `m = 1` and is
/// strictly decreasing in `m`.
pub fn alzer_beta<T: Real>(m: u32) -> T {
    assert!(m >= 1);
    let mut ln_fact = 0.0f64;
    for k in 2..=m as u64 {
        ln_fact += (k as f64).ln();
    }
    T::of((-ln_fact / m as f64).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate_adaptive;

    fn alpha4() -> PathLossExponent<f64> {
        PathLossExponent::new(4.0).unwrap()
    }

    /// Independent oracle: the Euler integral `b int_0^1 t^(b-1)/(1+theta t) dt`
    /// after the substitution `t = s^(1/b)` that removes the endpoint
    /// singularity, evaluated adaptively.
    fn fg_integral_oracle(alpha: f64, theta: f64) -> f64 {
        let b = 1.0 - 2.0 / alpha;
        let f = move |s: f64| 1.0 / (1.0 + theta * s.powf(1.0 / b));
        integrate_adaptive(&f, 0.0, 1.0, 1e-13)
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(PathLossExponent::new(2.0).is_err());
        assert!(PathLossExponent::new(f64::NAN).is_err());
        assert_eq!(
            hypergeometric_factor(alpha4(), -0.1),
            Err(SpecFunError::NegativeTheta(-0.1))
        );
    }

    #[test]
    fn hypergeometric_at_zero_is_one() {
        assert_eq!(hypergeometric_factor(alpha4(), 0.0).unwrap(), 1.0);
        let a = PathLossExponent::new(3.1).unwrap();
        assert_eq!(hypergeometric_factor(a, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn alpha_four_closed_form() {
        // for alpha = 4 the factor reduces to atan(sqrt(theta))/sqrt(theta)
        let a = alpha4();
        assert!(
            (hypergeometric_factor(a, 1.0).unwrap() - std::f64::consts::FRAC_PI_4).abs() < 1e-12
        );
        assert!((hypergeometric_factor(a, 100.0).unwrap() - 10.0f64.atan() / 10.0).abs() < 1e-12);
        let mut theta: f64 = 1e-6;
        while theta <= 1e4 {
            let want = theta.sqrt().atan() / theta.sqrt();
            let got = hypergeometric_factor(a, theta).unwrap();
            assert!((got - want).abs() < 1e-10, "theta={theta}: {got} vs {want}");
            theta *= 1.7;
        }
    }

    #[test]
    fn branches_agree_with_integral_oracle() {
        for &alpha in &[2.5, 3.0, 3.5, 4.0, 5.5] {
            let a = PathLossExponent::new(alpha).unwrap();
            for &theta in &[1e-6, 0.3, 0.49, 0.51, 0.9, 1.5, 1.99, 2.01, 7.0, 100.0, 1e4] {
                let got = hypergeometric_factor(a, theta).unwrap();
                let want = fg_integral_oracle(alpha, theta);
                assert!(
                    (got - want).abs() < 1e-11,
                    "alpha={alpha} theta={theta}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn monotone_decreasing_in_theta() {
        let a = PathLossExponent::new(3.3).unwrap();
        let mut prev = hypergeometric_factor(a, 0.0).unwrap();
        let mut theta = 1e-4;
        while theta < 1e4 {
            let v = hypergeometric_factor(a, theta).unwrap();
            assert!(v < prev && v > 0.0, "theta={theta}");
            prev = v;
            theta *= 2.3;
        }
    }

    #[test]
    fn interference_exponent_special_cases() {
        let a = alpha4();
        assert_eq!(interference_exponent(a, 0.0, 2.5), 2.5);
        assert_eq!(interference_exponent(a, 7.0, 0.0), 0.0);
        // alpha = 4, theta = 1, u = 1: 1 + 2 * (pi/4) / 2
        let got = interference_exponent(a, 1.0, 1.0);
        assert!((got - (1.0 + std::f64::consts::FRAC_PI_4)).abs() < 1e-12);
    }

    #[test]
    fn interference_exponent_monotone() {
        let a = PathLossExponent::new(4.5).unwrap();
        let mut prev = 0.0;
        for i in 1..40 {
            let theta = 0.3 * i as f64;
            let v = interference_exponent(a, theta, 1.3);
            assert!(v > prev);
            prev = v;
        }
        let mut prev = 0.0;
        for i in 1..40 {
            let u = 0.2 * i as f64;
            let v = interference_exponent(a, 2.0, u);
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn gamma_lower_values() {
        assert!((gamma_lower_regularized(1, std::f64::consts::LN_2) - 0.5).abs() < 1e-14);
        assert_eq!(gamma_lower_regularized(2, 0.0), 0.0);
        // shape 3 at x = 3: 1 - e^-3 (1 + 3 + 4.5)
        let want = 1.0 - (-3.0f64).exp() * 8.5;
        assert!((gamma_lower_regularized(3, 3.0) - want).abs() < 1e-12);
        assert!((want - 0.5768099).abs() < 1e-7);
    }

    #[test]
    fn alzer_beta_values() {
        assert_eq!(alzer_beta::<f64>(1), 1.0);
        assert!((alzer_beta::<f64>(2) - 0.5f64.sqrt()).abs() < 1e-14);
        assert!((alzer_beta::<f64>(3) - 6.0f64.powf(-1.0 / 3.0)).abs() < 1e-14);
        let mut prev = 1.0 + 1e-15;
        for m in 1..=12 {
            let b = alzer_beta::<f64>(m);
            assert!(b < prev && b > 0.0);
            prev = b;
        }
    }

    #[test]
    fn alzer_sandwich() {
        // (1 - e^(-beta x))^L <= P(L, x) <= (1 - e^(-x))^L with equality at L = 1
        for l in 1..=8u32 {
            let beta = alzer_beta::<f64>(l);
            let mut x = 0.0f64;
            while x <= 20.0 {
                let p = gamma_lower_regularized(l, x);
                let lo = (1.0 - (-beta * x).exp()).powi(l as i32);
                let hi = (1.0 - (-x).exp()).powi(l as i32);
                assert!(lo <= p + 1e-12, "L={l} x={x}: {lo} > {p}");
                assert!(p <= hi + 1e-12, "L={l} x={x}: {p} > {hi}");
                if l == 1 {
                    assert!((lo - p).abs() < 1e-12 && (hi - p).abs() < 1e-12);
                }
                x += 0.25;
            }
        }
    }

    #[test]
    fn f32_instantiation_smoke() {
        let a = PathLossExponent::<f32>::new(4.0).unwrap();
        let v = hypergeometric_factor(a, 1.0f32).unwrap_or(0.0);
        let want = std::f32::consts::FRAC_PI_4;
        assert!((v - want).abs() < 1e-5, "{v} vs {want}");
    }
}
