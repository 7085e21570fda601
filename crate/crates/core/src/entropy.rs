//! Fock populations and entropies.
//!
//! Populations are the diagonal of the density matrix in the instantaneous
//! energy basis. With `|α|² = x² + y²` the Fock-state Wigner function is
//! `W_n = (2(−1)^n/π) e^{−2|α|²} L_n(4|α|²)`, so the overlap `p_n = π∫W_n W`
//! becomes a particle average of `2(−1)^n e^{−2r²} L_n(4r²)`.
//!
//! For a squeezed thermal state (`κ = 1/(2ν)`, squeezing `s`) the same
//! overlap reduces to a single angle integral
//! `p_n = (κ/2π) ∫ (1−Q)^n / Q^{n+1} dθ`,
//! `Q = ½[1 + κ/s + κ(s − 1/s) cos²θ]`.

use serde::Serialize;

use crate::ensemble::{Ensemble, Snapshot, MIN_STATISTICAL_PARTICLES};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::special::{bessel_i0, hyp2f1_half, periodic_quadrature, QuadratureSpec};

pub const MIN_N_MAX: usize = 16;
pub const DEFAULT_N_MAX: usize = 64;
/// Largest order accepted by the alternating binomial/₂F₁ sum.
pub const BINOMIAL_LIMIT: usize = 30;
/// Particle count below which the Monte Carlo estimators warn.
pub const MIN_ESTIMATOR_PARTICLES: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct PopulationVector<T> {
    /// Populations `p_0 … p_{n_max}`.
    pub p: Vec<T>,
    /// Unclipped, unnormalized values (equal to `p` for closed forms).
    pub raw: Vec<T>,
    /// Monte Carlo standard error of each raw component.
    pub stderr: Option<Vec<T>>,
    /// `1 − Σ raw`.
    pub mass_defect: T,
    /// Negative raw entries set to zero.
    pub clipped_count: usize,
    /// `Σ |raw_n|` over the clipped entries.
    pub clipped_mass: T,
}

impl<T: Real> PopulationVector<T> {
    fn closed_form(p: Vec<T>) -> Self {
        let total: T = p.iter().copied().sum();
        Self {
            raw: p.clone(),
            p,
            stderr: None,
            mass_defect: T::one() - total,
            clipped_count: 0,
            clipped_mass: T::zero(),
        }
    }

    pub fn n_max(&self) -> usize {
        self.p.len() - 1
    }

    pub fn total(&self) -> T {
        self.p.iter().copied().sum()
    }

    /// `Σ n p_n`.
    pub fn mean_n(&self) -> T {
        self.p
            .iter()
            .enumerate()
            .map(|(n, &p)| T::from_usize_lossy(n) * p)
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PopulationMethod {
    /// Trapezoidal quadrature of the angle integral; stable for every `n`.
    #[default]
    ThetaQuadrature,
    /// Alternating binomial sum of `2F1(1/2, m; 1; z)` terms; `n <= 30` only.
    Binomial2F1,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntropyReport<T> {
    pub s_e: T,
    pub s_qc: T,
    pub delta_e: T,
    pub delta_s_e: T,
}

fn check_n_max(n_max: usize) -> Result<()> {
    if n_max < MIN_N_MAX {
        return Err(Error::domain(
            "populations",
            format!("n_max must be >= {MIN_N_MAX}, got {n_max}"),
        ));
    }
    Ok(())
}

/// `W_n` of the Fock state `|n⟩` at `|α|² = r2`.
pub fn fock_wigner_radial<T: Real>(n: usize, r2: T) -> T {
    let sign = if n % 2 == 0 { T::one() } else { -T::one() };
    let mut f = vec![T::zero(); n + 1];
    damped_laguerre(T::lit(4.0) * r2, &mut f);
    sign * T::lit(2.0) / T::PI() * f[n]
}

/// `out[k] = e^{−η/2} L_k(η)`, by running the Laguerre recurrence on the
/// damped values so large `η` cannot overflow.
fn damped_laguerre<T: Real>(eta: T, out: &mut [T]) {
    let d = (-eta / T::lit(2.0)).exp();
    out[0] = d;
    if out.len() == 1 {
        return;
    }
    out[1] = d * (T::one() - eta);
    for k in 1..out.len() - 1 {
        let kf = T::from_usize_lossy(k);
        out[k + 1] = ((kf + kf + T::one() - eta) * out[k] - kf * out[k - 1]) / (kf + T::one());
    }
}

/// Monte Carlo Fock projection `p_n = 2(−1)^n ⟨e^{−2r²} L_n(4r²)⟩`.
///
/// `raw` keeps the unbiased estimates and their standard errors; `p` has the
/// negative entries clipped and is renormalized to unit sum.
pub fn populations_from_ensemble<T: Real>(
    ensemble: &Ensemble<T>,
    n_max: usize,
) -> Result<PopulationVector<T>> {
    check_n_max(n_max)?;
    let count = ensemble.particle_count();
    if count < MIN_ESTIMATOR_PARTICLES {
        log::warn!("Fock projection from {count} particles (< {MIN_ESTIMATOR_PARTICLES}) is noisy");
    }
    let len = n_max + 1;
    let partials = ensemble.map_chunks(move |_, chunk| {
        let mut sum = vec![T::zero(); len];
        let mut sq = vec![T::zero(); len];
        let mut f = vec![T::zero(); len];
        for p in chunk {
            damped_laguerre(T::lit(4.0) * p.r2(), &mut f);
            for k in 0..len {
                sum[k] += f[k];
                sq[k] += f[k] * f[k];
            }
        }
        (sum, sq)
    });
    let mut sum = vec![T::zero(); len];
    let mut sq = vec![T::zero(); len];
    for (s, q) in partials {
        for k in 0..len {
            sum[k] += s[k];
            sq[k] += q[k];
        }
    }
    let nf = T::from_usize_lossy(count);
    let two = T::lit(2.0);
    let mut raw = Vec::with_capacity(len);
    let mut stderr = Vec::with_capacity(len);
    for k in 0..len {
        let sign = if k % 2 == 0 { T::one() } else { -T::one() };
        let mean = sum[k] / nf;
        raw.push(sign * two * mean);
        let var = if count > 1 {
            (sq[k] / nf - mean * mean).max(T::zero()) * nf / (nf - T::one())
        } else {
            T::zero()
        };
        stderr.push(two * (var / nf).sqrt());
    }

    let total: T = raw.iter().copied().sum();
    let mut clipped_count = 0;
    let mut clipped_mass = T::zero();
    let mut p: Vec<T> = raw
        .iter()
        .map(|&v| {
            if v < T::zero() {
                clipped_count += 1;
                clipped_mass -= v;
                T::zero()
            } else {
                v
            }
        })
        .collect();
    let kept: T = p.iter().copied().sum();
    if kept > T::zero() {
        p.iter_mut().for_each(|v| *v /= kept);
    }
    let mass_defect = T::one() - total;
    if mass_defect.abs() > T::lit(0.02) {
        log::warn!("Fock projection mass defect {mass_defect} (n_max = {n_max} too small?)");
    }
    if clipped_mass > T::lit(0.01) {
        log::warn!("Fock projection clipped mass {clipped_mass} over {clipped_count} entries");
    }
    Ok(PopulationVector {
        p,
        raw,
        stderr: Some(stderr),
        mass_defect,
        clipped_count,
        clipped_mass,
    })
}

/// Thermal populations `(1 − e^{−x}) e^{−nx}`, truncated at `n_max`.
pub fn populations_equilibrium<T: Real>(x: T, n_max: usize) -> Result<PopulationVector<T>> {
    check_n_max(n_max)?;
    if !(x > T::zero()) || !x.is_finite() {
        return Err(Error::domain("populations_equilibrium", format!("x must be > 0, got {x}")));
    }
    let p0 = -(-x).exp_m1();
    let p = (0..=n_max)
        .map(|n| p0 * (-x * T::from_usize_lossy(n)).exp())
        .collect();
    Ok(PopulationVector::closed_form(p))
}

fn check_kappa_s<T: Real>(kappa: T, s: T) -> Result<()> {
    if !(kappa > T::zero() && kappa <= T::one()) {
        return Err(Error::domain("squeezed populations", format!("kappa must be in (0, 1], got {kappa}")));
    }
    if !(s >= T::one()) || !s.is_finite() {
        return Err(Error::domain("squeezed populations", format!("s must be >= 1, got {s}")));
    }
    Ok(())
}

/// Exact populations of the squeezed thermal state.
pub fn populations_squeezed_thermal_exact<T: Real>(
    kappa: T,
    s: T,
    n_max: usize,
    method: PopulationMethod,
) -> Result<PopulationVector<T>> {
    check_n_max(n_max)?;
    check_kappa_s(kappa, s)?;
    let half = T::lit(0.5);
    let a = kappa / s;
    let b = kappa * (s - T::one() / s);
    let p = match method {
        PopulationMethod::ThetaQuadrature => {
            // Enough nodes to resolve the `((1−Q)/Q)^n` peak at the top order.
            let nodes = (4 * n_max).max(256).next_multiple_of(2);
            let spec = QuadratureSpec::new(nodes)?;
            let norm = kappa / T::TAU();
            (0..=n_max)
                .map(|n| {
                    let e = n as i32;
                    norm * periodic_quadrature(
                        |th: T| {
                            let c = th.cos();
                            let q = half * (T::one() + a + b * c * c);
                            ((T::one() - q) / q).powi(e) / q
                        },
                        spec,
                    )
                })
                .collect()
        }
        PopulationMethod::Binomial2F1 => {
            if n_max > BINOMIAL_LIMIT {
                return Err(Error::OrderTooLarge {
                    n: n_max,
                    limit: BINOMIAL_LIMIT,
                });
            }
            let base = T::lit(2.0) / (T::one() + a);
            let z = -b / (T::one() + a);
            let mut f = Vec::with_capacity(n_max + 2);
            f.push(T::zero());
            for m in 1..=n_max + 1 {
                f.push(base.powi(m as i32) * hyp2f1_half(m, z)?);
            }
            let mut out = Vec::with_capacity(n_max + 1);
            for n in 0..=n_max {
                let mut sum = T::zero();
                let mut binom = T::one();
                for q in 0..=n {
                    let term = binom * f[n + 1 - q];
                    sum += if q % 2 == 0 { term } else { -term };
                    binom = binom * T::from_usize_lossy(n - q) / T::from_usize_lossy(q + 1);
                }
                out.push(kappa * sum);
            }
            out
        }
    };
    Ok(PopulationVector::closed_form(p))
}

/// Small-squeezing approximation `p_n^eq I₀(x(s−1)(n+1/2))`, not renormalized.
pub fn populations_squeezed_thermal_approx<T: Real>(
    x: T,
    s: T,
    n_max: usize,
) -> Result<PopulationVector<T>> {
    let eq = populations_equilibrium(x, n_max)?;
    if !(s >= T::one()) || !s.is_finite() {
        return Err(Error::domain("squeezed populations", format!("s must be >= 1, got {s}")));
    }
    let kappa = (x / T::lit(2.0)).tanh();
    if kappa * (s - T::one()) > T::lit(0.3) {
        log::warn!(
            "kappa*(s-1) = {} is outside the small-squeezing regime",
            kappa * (s - T::one())
        );
    }
    let p = eq
        .p
        .iter()
        .enumerate()
        .map(|(n, &pe)| pe * bessel_i0(x * (s - T::one()) * (T::from_usize_lossy(n) + T::lit(0.5))))
        .collect();
    Ok(PopulationVector::closed_form(p))
}

/// Shannon entropy `−Σ p ln p` of the (normalized) populations.
pub fn energy_entropy<T: Real>(pop: &PopulationVector<T>) -> T {
    pop.p
        .iter()
        .filter(|&&p| p > T::zero())
        .map(|&p| -p * p.ln())
        .sum()
}

/// Populations of the squeezed thermal state with the ensemble's second
/// moments: `ν = 2 sqrt(det M)` and `s` from the eigenvalues of `M`.
///
/// The dynamics are linear with Gaussian noise, so an ensemble started from a
/// Gaussian stays Gaussian and this is a low-variance alternative to the
/// Fock projection.
pub fn populations_gaussian_moments<T: Real>(
    ensemble: &Ensemble<T>,
    n_max: usize,
) -> Result<PopulationVector<T>> {
    let m = ensemble.moments();
    let det = m.mean_xx() * m.mean_yy() - m.mean_xy() * m.mean_xy();
    let nu = T::lit(2.0) * det.max(T::zero()).sqrt();
    let kappa = (T::one() / (T::lit(2.0) * nu)).min(T::one());
    let (s, _) = crate::ensemble::squeezing_from_moments(&m);
    populations_squeezed_thermal_exact(kappa, s.max(T::one()), n_max, PopulationMethod::ThetaQuadrature)
}

/// Grid estimate of the differential entropy of the coarse-grained Wigner
/// function, `−Σ f_i ln(f_i / a²)` over square cells of side `a`.
///
/// Cells are anchored at the origin; only cells inside the ±5σ box around
/// the ensemble mean are counted.
pub fn quasiclassical_entropy<T: Real>(ensemble: &Ensemble<T>, cell_side: T) -> Result<T> {
    if !(cell_side >= T::one()) || !cell_side.is_finite() {
        return Err(Error::domain(
            "quasiclassical_entropy",
            format!("cell_side must be >= 1, got {cell_side}"),
        ));
    }
    let count = ensemble.particle_count();
    if count < MIN_ESTIMATOR_PARTICLES {
        log::warn!("grid entropy from {count} particles (< {MIN_ESTIMATOR_PARTICLES}) is biased");
    }
    let m = ensemble.moments();
    let nf = T::from_usize_lossy(count);
    let [cxx, _, cyy] = m.covariance();
    let (mx, my) = (m.sum_x / nf, m.sum_y / nf);
    let five = T::lit(5.0);
    let (hx, hy) = (five * cxx.max(T::zero()).sqrt(), five * cyy.max(T::zero()).sqrt());

    let mut keys: Vec<(i64, i64)> = Vec::with_capacity(count);
    for p in ensemble.points() {
        if (p.x - mx).abs() > hx || (p.y - my).abs() > hy {
            continue;
        }
        let ix = (p.x / cell_side).floor().to_i64().unwrap_or(i64::MAX);
        let iy = (p.y / cell_side).floor().to_i64().unwrap_or(i64::MAX);
        keys.push((ix, iy));
    }
    let outside = count - keys.len();
    if outside * 200 > count {
        log::warn!("{outside} of {count} particles fall outside the 5-sigma box");
    }
    keys.sort_unstable();
    let area = cell_side * cell_side;
    let mut entropy = T::zero();
    let mut i = 0;
    while i < keys.len() {
        let mut j = i + 1;
        while j < keys.len() && keys[j] == keys[i] {
            j += 1;
        }
        let f = T::from_usize_lossy(j - i) / nf;
        entropy -= f * (f / area).ln();
        i = j;
    }
    Ok(entropy)
}

/// `(δE/ω, δS_E)` of the squeezed thermal state relative to equilibrium at
/// `x = ω/T`: `δE/ω = Σ n δp_n`, `δS_E = −Σ δp_n ln p_n^eq`.
pub fn squeezing_deltas<T: Real>(x: T, s: T) -> Result<(T, T)> {
    if !(x > T::zero()) || !x.is_finite() {
        return Err(Error::domain("squeezing_deltas", format!("x must be > 0, got {x}")));
    }
    // Deep enough that the squeezed tail is negligible for s up to a few.
    let n_max = (T::lit(60.0) / x).ceil().to_usize().unwrap_or(0).clamp(DEFAULT_N_MAX, 4096);
    let kappa = (x / T::lit(2.0)).tanh();
    let sq = populations_squeezed_thermal_exact(kappa, s, n_max, PopulationMethod::ThetaQuadrature)?;
    let eq = populations_equilibrium(x, n_max)?;
    let ln_p0 = (-(-x).exp_m1()).ln();
    let mut de = T::zero();
    let mut ds = T::zero();
    for (n, (&p, &pe)) in sq.p.iter().zip(&eq.p).enumerate() {
        let nf = T::from_usize_lossy(n);
        let dp = p - pe;
        de += nf * dp;
        ds -= dp * (ln_p0 - x * nf);
    }
    Ok((de, ds))
}

/// Snapshot hook filling `S_E` (from the Gaussian-moment populations) and
/// `S_qc`.
pub fn entropy_observer<T: Real>(
    n_max: usize,
    cell_side: T,
) -> impl Fn(&Ensemble<T>, &mut Snapshot<T>) + Sync {
    move |ens, snap| {
        snap.energy_entropy = populations_gaussian_moments(ens, n_max)
            .ok()
            .map(|p| energy_entropy(&p));
        if ens.particle_count() >= MIN_STATISTICAL_PARTICLES {
            snap.quasiclassical_entropy = quasiclassical_entropy(ens, cell_side).ok();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{sample_squeezed_thermal, PhasePoint};
    use crate::special::laguerre;
    use crate::thermo::stage_entropy;
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use num_traits::ToPrimitive;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    const KAPPA_HALF: f64 = 0.244_918_662_403_709_13;

    #[test]
    fn fock_wigner_values() {
        assert!((fock_wigner_radial(0, 0.0_f64) - 2.0 / PI).abs() < 1e-15);
        assert!((fock_wigner_radial(1, 0.0_f64) + 2.0 / PI).abs() < 1e-15);
        // −(2/π) e^{−10} L_3(20), L_3(20) = −(20³ − 9·20² + 18·20 − 6)/6 exactly.
        let l3 = BigRational::new(BigInt::from(-(8000 - 3600 + 360 - 6)), BigInt::from(6));
        let oracle = -2.0 / PI * (-10.0f64).exp() * l3.to_f64().unwrap();
        assert!((fock_wigner_radial(3, 5.0_f64) - oracle).abs() < 1e-12);
        assert!((fock_wigner_radial(3, 5.0_f64) - 0.022_900_408_581_427_617).abs() < 1e-15);
        // Damped recurrence agrees with the plain one where neither overflows.
        for n in [0, 1, 7, 20] {
            let direct = 2.0 / PI * (-2.0 * 1.3f64).exp() * laguerre(n, 5.2);
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            assert!((fock_wigner_radial(n, 1.3) - sign * direct).abs() < 1e-13);
        }
        assert!(fock_wigner_radial(40, 2000.0_f64).is_finite());
    }

    #[test]
    fn equilibrium_values() {
        let p = populations_equilibrium(0.5_f64, 64).unwrap();
        assert!((p.p[0] - 0.393_469_340_287_366_6).abs() < 1e-15);
        assert!((p.p[1] - 0.238_651_218_541_191_1).abs() < 1e-15);
        assert!((p.mass_defect - (-0.5_f64 * 65.0).exp()).abs() < 1e-15);
        assert!(populations_equilibrium(40.0_f64, 16).unwrap().p[0] > 1.0 - 1e-15);
        assert!(populations_equilibrium(0.0_f64, 64).is_err());
        assert!(populations_equilibrium(0.5_f64, 15).is_err());
    }

    #[test]
    fn thermal_entropy_matches_stage_entropy() {
        let p = populations_equilibrium(0.5_f64, 64).unwrap();
        assert!((energy_entropy(&p) - 1.703_50).abs() < 1e-5);
        assert!((energy_entropy(&p) - stage_entropy(1.0, 2.0)).abs() < 1e-10);
        let pure = PopulationVector::closed_form(vec![1.0_f64; 1].into_iter().chain([0.0; 16]).collect());
        assert_eq!(energy_entropy(&pure), 0.0);
    }

    #[test]
    fn exact_reduces_to_equilibrium() {
        let sq = populations_squeezed_thermal_exact(KAPPA_HALF, 1.0, 64, PopulationMethod::ThetaQuadrature).unwrap();
        let eq = populations_equilibrium(0.5, 64).unwrap();
        for (a, b) in sq.p.iter().zip(&eq.p) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn exact_methods_agree() {
        for kappa in [0.05, KAPPA_HALF, 0.5, 0.9, 1.0] {
            for s in [1.0, 1.2, 1.7, 2.5] {
                let q = populations_squeezed_thermal_exact(kappa, s, 16, PopulationMethod::ThetaQuadrature).unwrap();
                let b = populations_squeezed_thermal_exact(kappa, s, 16, PopulationMethod::Binomial2F1).unwrap();
                for n in 0..=10 {
                    assert!((q.p[n] - b.p[n]).abs() < 1e-10, "κ={kappa} s={s} n={n}");
                }
            }
        }
        assert!(matches!(
            populations_squeezed_thermal_exact(0.5, 1.2, 31, PopulationMethod::Binomial2F1),
            Err(Error::OrderTooLarge { .. })
        ));
        assert!(populations_squeezed_thermal_exact(0.0, 1.2, 16, PopulationMethod::ThetaQuadrature).is_err());
        assert!(populations_squeezed_thermal_exact(0.5, 0.9, 16, PopulationMethod::ThetaQuadrature).is_err());
    }

    #[test]
    fn approx_matches_paper_regime() {
        let a = populations_squeezed_thermal_approx(0.5_f64, 1.0, 64).unwrap();
        let eq = populations_equilibrium(0.5_f64, 64).unwrap();
        assert_eq!(a.p, eq.p);
        let a = populations_squeezed_thermal_approx(0.5_f64, 1.1, 64).unwrap();
        assert!((a.total() - 1.0).abs() < 0.01);
        for i in 0..=30 {
            let s = 1.0 + 0.01 * i as f64;
            let approx = energy_entropy(&populations_squeezed_thermal_approx(0.5, s, 64).unwrap());
            let exact = energy_entropy(
                &populations_squeezed_thermal_exact(KAPPA_HALF, s, 64, PopulationMethod::ThetaQuadrature).unwrap(),
            );
            assert!(approx >= exact - 1e-12, "s={s}");
        }
    }

    #[test]
    fn deltas_vanish_without_squeezing_and_scale_quadratically() {
        let (de, ds) = squeezing_deltas(0.5_f64, 1.0).unwrap();
        assert!(de.abs() < 1e-12 && ds.abs() < 1e-12);
        // δE/ω = ν (s−1)²/(2s) from the second moments.
        let nu = 1.0 / (2.0 * KAPPA_HALF);
        for s in [1.02, 1.1, 1.5] {
            let (de, ds) = squeezing_deltas(0.5_f64, s).unwrap();
            assert!((de - nu * (s - 1.0) * (s - 1.0) / (2.0 * s)).abs() < 1e-10, "s={s}");
            assert!((ds - 0.5 * de).abs() < 1e-10);
        }
    }

    #[test]
    fn projection_of_vacuum_and_thermal_samples() {
        let vac = sample_squeezed_thermal(0.5_f64, 1.0, 0.0, 20_000, 1).unwrap();
        let p = populations_from_ensemble(&vac, 32).unwrap();
        // Every particle contributes 2e^{-2r²}L_0 > 0; the vacuum estimate of
        // higher orders is unbiased zero.
        assert!((p.raw[0] - 1.0).abs() < 0.01);
        assert!(p.raw[1..].iter().all(|v| v.abs() < 0.02));

        let th = sample_squeezed_thermal(1.0 / (2.0 * KAPPA_HALF), 1.0, 0.0, 50_000, 2).unwrap();
        let p = populations_from_ensemble(&th, 64).unwrap();
        let eq = populations_equilibrium(0.5, 64).unwrap();
        let se = p.stderr.as_ref().unwrap();
        assert!((p.raw[0] - 0.3935).abs() < 0.01);
        for n in 0..=64 {
            assert!((p.raw[n] - eq.p[n]).abs() < 4.0 * se[n] + 1e-12, "n={n}");
        }
        assert!((p.total() - 1.0).abs() < 1e-12);
        assert!(p.p.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn gaussian_moment_populations() {
        let ens = sample_squeezed_thermal(1.0 / (2.0 * KAPPA_HALF), 1.5, 0.4, 100_000, 3).unwrap();
        let fit = populations_gaussian_moments(&ens, 64).unwrap();
        let exact = populations_squeezed_thermal_exact(KAPPA_HALF, 1.5, 64, PopulationMethod::ThetaQuadrature).unwrap();
        assert!((energy_entropy(&fit) - energy_entropy(&exact)).abs() < 0.01);
    }

    #[test]
    fn grid_entropy_of_thermal_gaussian() {
        let ens = sample_squeezed_thermal(8.0_f64, 1.0, 0.0, 100_000, 4).unwrap();
        let s = quasiclassical_entropy(&ens, 1.0).unwrap();
        let target = (PI * std::f64::consts::E * 8.0).ln();
        assert!((s - target).abs() < 0.05 * target, "{s} vs {target}");

        let rotated = sample_squeezed_thermal(8.0_f64, 1.0, 0.9, 100_000, 4).unwrap();
        let sr = quasiclassical_entropy(&rotated, 1.0).unwrap();
        assert!((sr - s).abs() < 0.02 * s);
        assert!(quasiclassical_entropy(&ens, 0.5).is_err());
    }

    #[test]
    fn grid_entropy_counts_cells() {
        // Two particles in distinct unit cells: f = 1/2 each.
        let pts = vec![PhasePoint::new(0.2, 0.2), PhasePoint::new(1.2, 0.2)];
        let ens = Ensemble::from_points(pts, 0).unwrap();
        let s = quasiclassical_entropy(&ens, 1.0_f64).unwrap();
        assert!((s - 2.0_f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn strong_squeezing_raises_grid_entropy() {
        let nu = 1.0 / (2.0 * KAPPA_HALF);
        let base = sample_squeezed_thermal(nu, 1.0, 0.0, 50_000, 5).unwrap();
        let thin = sample_squeezed_thermal(nu, 20.0, 0.0, 50_000, 5).unwrap();
        let s0 = quasiclassical_entropy(&base, 1.0).unwrap();
        let s1 = quasiclassical_entropy(&thin, 1.0).unwrap();
        assert!(s1 > s0, "{s1} <= {s0}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn thermal_identity(x in 0.1f64..5.0) {
            let n_max = ((40.0 / x).ceil() as usize).max(64);
            let p = populations_equilibrium(x, n_max).unwrap();
            prop_assert!((energy_entropy(&p) - stage_entropy(x, 1.0)).abs() < 1e-10);
        }

        #[test]
        fn exact_populations_conserve_energy(x in 0.3f64..5.0, s in 1.0f64..2.0) {
            let kappa = (x / 2.0).tanh();
            let nu = 1.0 / (2.0 * kappa);
            let n_max = ((80.0 / x).ceil() as usize).max(64);
            let p = populations_squeezed_thermal_exact(kappa, s, n_max, PopulationMethod::ThetaQuadrature).unwrap();
            prop_assert!(p.mass_defect.abs() < 1e-9);
            prop_assert!(p.p.iter().all(|&v| v >= -1e-15));
            let e: f64 = p.p.iter().enumerate().map(|(n, &v)| (n as f64 + 0.5) * v).sum();
            prop_assert!((e - nu * (s + 1.0 / s) / 2.0).abs() < 1e-8 * nu);
        }

        #[test]
        fn exact_entropy_nondecreasing_in_s(x in 0.3f64..3.0, s in 1.0f64..1.9, ds in 0.01f64..0.1) {
            let kappa = (x / 2.0).tanh();
            let n_max = ((80.0 / x).ceil() as usize).max(64);
            let lo = populations_squeezed_thermal_exact(kappa, s, n_max, PopulationMethod::ThetaQuadrature).unwrap();
            let hi = populations_squeezed_thermal_exact(kappa, s + ds, n_max, PopulationMethod::ThetaQuadrature).unwrap();
            prop_assert!(energy_entropy(&hi) >= energy_entropy(&lo) - 1e-12);
        }
    }
}
