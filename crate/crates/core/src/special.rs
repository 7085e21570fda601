//! Special functions needed by the Fock-population and entropy formulas.
//!
//! Everything here is pure and allocation free. Only the narrow families the
//! populations require are provided: Laguerre polynomials `L_n`, the modified
//! Bessel function `I_0`, and `2F1(1/2, m; 1; z)` for integer `m >= 1` and
//! `z <= 0`.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Equispaced trapezoidal rule on `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadratureSpec {
    node_count: usize,
}

impl QuadratureSpec {
    pub const MIN_NODES: usize = 8;

    pub fn new(node_count: usize) -> Result<Self> {
        if node_count < Self::MIN_NODES || node_count % 2 != 0 {
            return Err(Error::domain(
                "quadrature node count",
                format!("need an even count >= {}, got {node_count}", Self::MIN_NODES),
            ));
        }
        Ok(Self { node_count })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { node_count: 256 }
    }
}

/// Laguerre polynomial `L_n(x)` by the forward three-term recurrence
/// `(k+1) L_{k+1} = (2k+1-x) L_k - k L_{k-1}`.
pub fn laguerre<T: Real>(n: usize, x: T) -> T {
    let mut prev = T::one();
    if n == 0 {
        return prev;
    }
    let mut cur = T::one() - x;
    for k in 1..n {
        let kf = T::from_usize_lossy(k);
        let next = ((kf + kf + T::one() - x) * cur - kf * prev) / (kf + T::one());
        prev = cur;
        cur = next;
    }
    cur
}

/// Fills `out[k] = L_k(x)` for `k = 0..out.len()`.
pub fn laguerre_sequence<T: Real>(x: T, out: &mut [T]) {
    if out.is_empty() {
        return;
    }
    out[0] = T::one();
    if out.len() == 1 {
        return;
    }
    out[1] = T::one() - x;
    for k in 1..out.len() - 1 {
        let kf = T::from_usize_lossy(k);
        out[k + 1] = ((kf + kf + T::one() - x) * out[k] - kf * out[k - 1]) / (kf + T::one());
    }
}

/// Modified Bessel function of the first kind, order zero.
pub fn bessel_i0<T: Real>(z: T) -> T {
    let a = z.abs();
    if a <= T::lit(20.0) {
        // Positive-term series in (z/2)^2; no cancellation.
        let q = a * a / T::lit(4.0);
        let mut term = T::one();
        let mut sum = T::one();
        let mut k = 1usize;
        while k < 200 {
            let kf = T::from_usize_lossy(k);
            term *= q / (kf * kf);
            sum += term;
            if term <= T::epsilon() * sum {
                break;
            }
            k += 1;
        }
        sum
    } else {
        // Large-argument expansion e^z / sqrt(2πz) Σ ((2k-1)!!)^2 / (k! (8z)^k).
        let mut term = T::one();
        let mut sum = T::one();
        for k in 1..30usize {
            let odd = T::from_usize_lossy(2 * k - 1);
            term *= odd * odd / (T::from_usize_lossy(k) * T::lit(8.0) * a);
            sum += term;
            if term <= T::epsilon() * sum {
                break;
            }
        }
        a.exp() / (T::TAU() * a).sqrt() * sum
    }
}

/// `2F1(1/2, m; 1; z)` for `m >= 1`, `z <= 0`.
///
/// Evaluated through the Pfaff transformation
/// `(1-z)^{-1/2} 2F1(1/2, 1-m; 1; z/(z-1))`, whose series terminates after
/// `m` terms.
pub fn hyp2f1_half<T: Real>(m: usize, z: T) -> Result<T> {
    if m == 0 {
        return Err(Error::domain("hyp2f1_half", "m must be >= 1"));
    }
    if !(z <= T::zero()) {
        return Err(Error::domain(
            "hyp2f1_half",
            format!("argument must be <= 0, got {z}"),
        ));
    }
    let w = z / (z - T::one());
    let half = T::lit(0.5);
    let mf = T::from_usize_lossy(m);
    let mut term = T::one();
    let mut sum = T::one();
    for k in 0..m - 1 {
        let kf = T::from_usize_lossy(k);
        term *= (half + kf) * (T::one() - mf + kf) / ((kf + T::one()) * (kf + T::one())) * w;
        sum += term;
    }
    Ok(sum / (T::one() - z).sqrt())
}

/// `(2π/N) Σ f(θ_k)` over `N` equispaced nodes `θ_k = 2πk/N`.
///
/// Exact for trigonometric polynomials of degree below `N/2` and spectrally
/// convergent for analytic periodic integrands.
pub fn periodic_quadrature<T, F>(f: F, spec: QuadratureSpec) -> T
where
    T: Real,
    F: Fn(T) -> T,
{
    let n = spec.node_count;
    let h = T::TAU() / T::from_usize_lossy(n);
    let sum: T = (0..n).map(|k| f(h * T::from_usize_lossy(k))).sum();
    sum * h
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use num_traits::{One, ToPrimitive, Zero};
    use proptest::prelude::*;
    use std::f64::consts::{PI, TAU};

    /// Exact rational evaluation of `Σ_k C(n,k) (-x)^k / k!`.
    fn laguerre_series_exact(n: usize, x: f64) -> f64 {
        let x = BigRational::from_float(x).unwrap();
        let mut sum = BigRational::zero();
        let mut binom = BigInt::one();
        let mut fact = BigInt::one();
        let mut pow = BigRational::one();
        for k in 0..=n {
            if k > 0 {
                binom = binom * BigInt::from(n - k + 1) / BigInt::from(k);
                fact *= BigInt::from(k);
                pow = pow * (-x.clone());
            }
            sum += pow.clone() * BigRational::from_integer(binom.clone())
                / BigRational::from_integer(fact.clone());
        }
        sum.to_f64().unwrap()
    }

    fn i0_series(z: f64) -> f64 {
        let q = z * z / 4.0;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..60 {
            term *= q / (k * k) as f64;
            sum += term;
        }
        sum
    }

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn laguerre_low_orders() {
        assert_eq!(laguerre(0, 3.7), 1.0);
        assert_eq!(laguerre(1, 2.0), -1.0);
        assert_eq!(laguerre(5, 0.0), 1.0);
    }

    #[test]
    fn laguerre_matches_exact_series() {
        // 1.37925925925925925... from the rational series.
        let exact = laguerre_series_exact(10, 4.0);
        assert!(rel_err(exact, 1.379_259_259_259_259_3) < 1e-15);
        assert!(rel_err(laguerre(10, 4.0), exact) < 1e-12);
    }

    #[test]
    fn laguerre_sequence_agrees_with_single() {
        let mut buf = [0.0; 33];
        laguerre_sequence(7.25, &mut buf);
        for (n, v) in buf.iter().enumerate() {
            assert_eq!(*v, laguerre(n, 7.25));
        }
    }

    #[test]
    fn laguerre_f32() {
        assert!((laguerre(3, 1.5f32) - laguerre(3, 1.5f64) as f32).abs() < 1e-6);
    }

    #[test]
    fn i0_values() {
        assert_eq!(bessel_i0(0.0_f64), 1.0);
        assert!((bessel_i0(1.0_f64) - 1.266_065_877_752_008_4).abs() < 1e-15);
        assert!(rel_err(bessel_i0(1.0_f64), i0_series(1.0)) < 1e-15);
        assert_eq!(bessel_i0(-1.0_f64), bessel_i0(1.0));
    }

    #[test]
    fn i0_branches_join() {
        // mpmath: I0(20) = 43558282.5595535..., I0(25) = 5774560606.4663103...
        assert!(rel_err(bessel_i0(20.0), 43_558_282.559_553_53) < 1e-13);
        assert!(rel_err(bessel_i0(20.000_001), bessel_i0(20.0)) < 1e-5);
        assert!(rel_err(bessel_i0(25.0), 5_774_560_606.466_31) < 1e-12);
        assert!(rel_err(bessel_i0(30.0), i0_series(30.0)) < 1e-13);
    }

    #[test]
    fn hyp2f1_values() {
        assert_eq!(hyp2f1_half(3, 0.0).unwrap(), 1.0);
        let v = hyp2f1_half(1, -0.5).unwrap();
        assert!((v - 1.5f64.powf(-0.5)).abs() < 1e-15);
        assert!((v - 0.816_496_580_927_726).abs() < 1e-12);
        let q = periodic_quadrature(
            |t: f64| 1.0 / (1.0 + 0.3 * t.cos().powi(2)).powi(4),
            QuadratureSpec::new(128).unwrap(),
        ) / TAU;
        assert!((hyp2f1_half(4, -0.3).unwrap() - q).abs() < 1e-10);
        assert!((q - 0.622_638_338_410_529).abs() < 1e-12);
    }

    #[test]
    fn hyp2f1_rejects_bad_arguments() {
        assert!(hyp2f1_half(0, -0.1).is_err());
        assert!(hyp2f1_half(2, 0.1).is_err());
        assert!(hyp2f1_half(2, f64::NAN).is_err());
    }

    #[test]
    fn quadrature_basics() {
        let spec = QuadratureSpec::new(8).unwrap();
        assert!((periodic_quadrature(|_| 1.0, spec) - TAU).abs() < 1e-14);
        assert!((periodic_quadrature(|t: f64| t.cos().powi(2), spec) - PI).abs() < 1e-14);
        let e = periodic_quadrature(|t: f64| t.cos().exp(), QuadratureSpec::new(64).unwrap());
        assert!((e - TAU * i0_series(1.0)).abs() < 1e-12);
        assert!((e - 7.954_926_521_012_845).abs() < 1e-12);
    }

    #[test]
    fn quadrature_spec_invariants() {
        assert!(QuadratureSpec::new(6).is_err());
        assert!(QuadratureSpec::new(9).is_err());
        assert!(QuadratureSpec::new(10).is_ok());
    }

    proptest! {
        #[test]
        fn laguerre_recurrence_vs_series(n in 0usize..=32, x in -50.0f64..50.0) {
            let exact = laguerre_series_exact(n, x);
            let got = laguerre(n, x);
            // Relative to the larger of the value and the term scale, since
            // L_n has roots in the range.
            let scale = exact.abs().max(1.0);
            prop_assert!((got - exact).abs() <= 1e-10 * scale, "n={} x={} got={} exact={}", n, x, got, exact);
        }

        #[test]
        fn hyp2f1_vs_table_integral(m in 1usize..=40, z in -0.95f64..=0.0) {
            let d = -z;
            let q = periodic_quadrature(
                |t: f64| 1.0 / (1.0 + d * t.cos().powi(2)).powi(m as i32),
                QuadratureSpec::new(512).unwrap(),
            ) / TAU;
            let v = hyp2f1_half(m, z).unwrap();
            prop_assert!((v - q).abs() < 1e-10, "m={} z={} v={} q={}", m, z, v, q);
        }

        #[test]
        fn i0_monotone_and_bounded(a in 0.0f64..40.0, b in 0.0f64..40.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(bessel_i0(lo) <= bessel_i0(hi));
            prop_assert!(bessel_i0(a) >= 1.0 + a * a / 4.0);
        }

        #[test]
        fn quadrature_exact_on_trig_polynomials(
            coeffs in proptest::collection::vec(-3.0f64..3.0, 1..8),
            half in 4usize..20,
        ) {
            let nodes = 2 * half.max(coeffs.len() + 1);
            let spec = QuadratureSpec::new(nodes).unwrap();
            let f = |t: f64| -> f64 {
                coeffs.iter().enumerate().map(|(k, c)| c * ((k as f64) * t).cos() + c * 0.5 * ((k as f64) * t).sin()).sum()
            };
            let expect = TAU * coeffs[0];
            prop_assert!((periodic_quadrature(f, spec) - expect).abs() < 1e-12);
        }
    }
}
