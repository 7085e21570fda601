//! Particle representation of the Wigner function.
//!
//! `N` phase-space points `(x, y)` sample the (positive, Gaussian) Wigner
//! function. Coordinates refer to the instantaneous oscillator basis, so the
//! energy is `ω⟨x²+y²⟩` and a thermal state has per-axis variance `ν/2`.
//! Particles move along the drift field of the frequency-dependent flow and,
//! while a bath is attached, an Ornstein–Uhlenbeck kick.

mod integrator;
mod schedule;

pub use integrator::{evolve_schedule, step, EvolveOptions, LinearMap, Observer, Snapshot, STEP_GUARD};
pub use schedule::{diffusion_coefficient, BathSpec, FrequencySchedule, Segment};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::CellKey;
use crate::scalar::Real;

/// Particles per work unit. Fixed so reductions are summed in the same order
/// regardless of the worker count.
pub(crate) const CHUNK: usize = 4096;

/// Below this many particles the moment-based observables are too noisy.
pub const MIN_STATISTICAL_PARTICLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PhasePoint<T> {
    pub x: T,
    pub y: T,
}

impl<T: Real> PhasePoint<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn r2(&self) -> T {
        self.x * self.x + self.y * self.y
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Serial,
    #[default]
    Parallel,
}

#[derive(Debug, Clone)]
pub struct Ensemble<T> {
    points: Vec<PhasePoint<T>>,
    seed: u64,
    time: T,
    omega: T,
    /// Random stream currently being consumed; stream 0 is the initial draw.
    stream: u64,
    /// Steps taken within `stream`.
    stream_step: u64,
    execution: Execution,
}

/// Raw (uncentred) sums over an ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Moments<T> {
    pub count: usize,
    pub sum_x: T,
    pub sum_y: T,
    pub sum_xx: T,
    pub sum_yy: T,
    pub sum_xy: T,
    pub sum_r4: T,
}

impl<T: Real> Moments<T> {
    fn of(points: &[PhasePoint<T>]) -> Self {
        let mut m = Self {
            count: points.len(),
            ..Self::default()
        };
        for p in points {
            let (xx, yy) = (p.x * p.x, p.y * p.y);
            m.sum_x += p.x;
            m.sum_y += p.y;
            m.sum_xx += xx;
            m.sum_yy += yy;
            m.sum_xy += p.x * p.y;
            m.sum_r4 += (xx + yy) * (xx + yy);
        }
        m
    }

    fn merge(mut self, o: Self) -> Self {
        self.count += o.count;
        self.sum_x += o.sum_x;
        self.sum_y += o.sum_y;
        self.sum_xx += o.sum_xx;
        self.sum_yy += o.sum_yy;
        self.sum_xy += o.sum_xy;
        self.sum_r4 += o.sum_r4;
        self
    }

    fn n(&self) -> T {
        T::from_usize_lossy(self.count)
    }

    pub fn mean_xx(&self) -> T {
        self.sum_xx / self.n()
    }

    pub fn mean_yy(&self) -> T {
        self.sum_yy / self.n()
    }

    pub fn mean_xy(&self) -> T {
        self.sum_xy / self.n()
    }

    pub fn mean_r2(&self) -> T {
        (self.sum_xx + self.sum_yy) / self.n()
    }

    /// Standard error of `mean(x²+y²)`.
    pub fn stderr_r2(&self) -> T {
        let n = self.n();
        if self.count < 2 {
            return T::zero();
        }
        let mean = self.mean_r2();
        let var = (self.sum_r4 / n - mean * mean).max(T::zero()) * n / (n - T::one());
        (var / n).sqrt()
    }

    /// Centred covariance `[[cxx, cxy], [cxy, cyy]]`.
    pub fn covariance(&self) -> [T; 3] {
        let n = self.n();
        let (mx, my) = (self.sum_x / n, self.sum_y / n);
        [
            self.sum_xx / n - mx * mx,
            self.sum_xy / n - mx * my,
            self.sum_yy / n - my * my,
        ]
    }
}

impl<T: Real> Ensemble<T> {
    pub fn from_points(points: Vec<PhasePoint<T>>, seed: u64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::domain("ensemble", "needs at least one particle"));
        }
        if points.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(Error::domain("ensemble", "non-finite particle coordinate"));
        }
        Ok(Self {
            points,
            seed,
            time: T::zero(),
            omega: T::one(),
            stream: 0,
            stream_step: 0,
            execution: Execution::default(),
        })
    }

    /// Frequency the coordinates are currently referenced to.
    pub fn with_omega(mut self, omega: T) -> Self {
        self.omega = omega;
        self
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub fn set_execution(&mut self, execution: Execution) {
        self.execution = execution;
    }

    pub fn points(&self) -> &[PhasePoint<T>] {
        &self.points
    }

    pub fn particle_count(&self) -> usize {
        self.points.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn time(&self) -> T {
        self.time
    }

    pub fn omega(&self) -> T {
        self.omega
    }

    pub fn execution(&self) -> Execution {
        self.execution
    }

    /// Per-particle `x²+y²`, in particle order.
    pub fn radii_squared(&self) -> Vec<T> {
        self.points.iter().map(PhasePoint::r2).collect()
    }

    /// Applies the same linear map to every particle.
    pub fn apply_map(&mut self, map: &LinearMap<T>) {
        let map = *map;
        self.for_each_chunk_mut(move |_, chunk| {
            for p in chunk {
                *p = map.apply(*p);
            }
        });
    }

    /// Moves to a fresh random stream; subsequent steps draw from
    /// `(seed, stream, step, particle)` cells with `step` restarting at 0.
    pub(crate) fn begin_stream(&mut self) {
        self.stream += 1;
        self.stream_step = 0;
    }

    pub fn moments(&self) -> Moments<T> {
        self.map_chunks(|_, c| Moments::of(c))
            .into_iter()
            .fold(Moments::default(), Moments::merge)
    }

    /// Runs `f(offset, chunk)` over fixed-size chunks.
    pub(crate) fn for_each_chunk_mut<F>(&mut self, f: F)
    where
        F: Fn(usize, &mut [PhasePoint<T>]) + Sync + Send,
    {
        match self.execution {
            Execution::Serial => self
                .points
                .chunks_mut(CHUNK)
                .enumerate()
                .for_each(|(i, c)| f(i * CHUNK, c)),
            Execution::Parallel => self
                .points
                .par_chunks_mut(CHUNK)
                .enumerate()
                .for_each(|(i, c)| f(i * CHUNK, c)),
        }
    }

    /// Maps fixed-size chunks to partial results, returned in chunk order.
    pub(crate) fn map_chunks<R, F>(&self, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize, &[PhasePoint<T>]) -> R + Sync + Send,
    {
        match self.execution {
            Execution::Serial => self
                .points
                .chunks(CHUNK)
                .enumerate()
                .map(|(i, c)| f(i * CHUNK, c))
                .collect(),
            Execution::Parallel => self
                .points
                .par_chunks(CHUNK)
                .enumerate()
                .map(|(i, c)| f(i * CHUNK, c))
                .collect(),
        }
    }
}

/// Draws `n` points from the squeezed thermal Gaussian with
/// `Var(x) = ν/(2s)`, `Var(y) = νs/2`, then rotates them by `angle`.
pub fn sample_squeezed_thermal<T: Real>(
    nu: T,
    s: T,
    angle: T,
    n: usize,
    seed: u64,
) -> Result<Ensemble<T>> {
    if !(nu >= T::lit(0.5)) || !nu.is_finite() {
        return Err(Error::domain(
            "squeezed thermal state",
            format!("nu must be >= 1/2 (vacuum), got {nu}"),
        ));
    }
    if !(s >= T::one()) || !s.is_finite() {
        return Err(Error::domain(
            "squeezed thermal state",
            format!("squeezing must be >= 1, got {s}"),
        ));
    }
    if n == 0 {
        return Err(Error::domain("squeezed thermal state", "needs n >= 1"));
    }
    let sx = (nu / (T::lit(2.0) * s)).sqrt();
    let sy = (nu * s / T::lit(2.0)).sqrt();
    let (sin_a, cos_a) = angle.sin_cos();
    let mut ens = Ensemble::from_points(vec![PhasePoint::default(); n], seed)?;
    ens.for_each_chunk_mut(move |offset, chunk| {
        for (i, p) in chunk.iter_mut().enumerate() {
            let mut rng = CellKey {
                seed,
                stream: 0,
                step: 0,
                particle: (offset + i) as u64,
            }
            .rng();
            let x0 = sx * T::lit(rng.normal());
            let y0 = sy * T::lit(rng.normal());
            *p = PhasePoint::new(x0 * cos_a - y0 * sin_a, x0 * sin_a + y0 * cos_a);
        }
    });
    Ok(ens)
}

/// `(E, stderr(E))` with `E = ω⟨x²+y²⟩`.
pub fn energy<T: Real>(ensemble: &Ensemble<T>, omega: T) -> (T, T) {
    let m = ensemble.moments();
    (omega * m.mean_r2(), omega * m.stderr_r2())
}

/// `⟨x²+y²⟩ − 1/2`.
pub fn mean_occupation<T: Real>(ensemble: &Ensemble<T>) -> T {
    ensemble.moments().mean_r2() - T::lit(0.5)
}

/// Squeezing `s` and raw axis ratio `β = ⟨x²⟩/⟨y²⟩`.
///
/// `s = sqrt(λ_max/λ_min)` of the second-moment matrix, so a squeezed thermal
/// state with quadrature variances `ν/(2s)` and `νs/2` reports `s`.
pub fn squeezing<T: Real>(ensemble: &Ensemble<T>) -> (T, T) {
    if ensemble.particle_count() < MIN_STATISTICAL_PARTICLES {
        log::warn!(
            "squeezing estimated from {} particles (< {MIN_STATISTICAL_PARTICLES})",
            ensemble.particle_count()
        );
    }
    squeezing_from_moments(&ensemble.moments())
}

pub(crate) fn squeezing_from_moments<T: Real>(m: &Moments<T>) -> (T, T) {
    let (a, b, c) = (m.mean_xx(), m.mean_xy(), m.mean_yy());
    let half_tr = (a + c) / T::lit(2.0);
    let disc = ((a - c) * (a - c) / T::lit(4.0) + b * b).sqrt();
    let (hi, lo) = (half_tr + disc, half_tr - disc);
    let s = if lo > T::zero() {
        (hi / lo).sqrt()
    } else {
        T::infinity()
    };
    (s, a / c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn thermal_sample_moments() {
        let ens = sample_squeezed_thermal(2.041_494_f64, 1.0, 0.0, 100_000, 1).unwrap();
        let m = ens.moments();
        assert!((m.mean_r2() - 2.041).abs() < 0.03, "{}", m.mean_r2());
        let vac = sample_squeezed_thermal(0.5_f64, 1.0, 0.0, 100_000, 2).unwrap();
        assert!((vac.moments().mean_r2() - 0.5).abs() < 0.01);
    }

    #[test]
    fn squeezed_sample_variances() {
        let ens = sample_squeezed_thermal(1.0_f64, 4.0, 0.0, 100_000, 3).unwrap();
        let [cxx, _, cyy] = ens.moments().covariance();
        assert!((cxx - 0.125).abs() < 0.125 * 0.03, "{cxx}");
        assert!((cyy - 2.0).abs() < 2.0 * 0.03, "{cyy}");
    }

    #[test]
    fn sampling_rejects_subvacuum() {
        assert!(sample_squeezed_thermal(0.49, 1.0, 0.0, 10, 0).is_err());
        assert!(sample_squeezed_thermal(1.0, 0.9, 0.0, 10, 0).is_err());
        assert!(sample_squeezed_thermal(1.0, 1.0, 0.0, 0, 0).is_err());
    }

    #[test]
    fn energy_and_occupation() {
        let vac = sample_squeezed_thermal(0.5_f64, 1.0, 0.0, 100_000, 4).unwrap();
        let (e, se) = energy(&vac, 1.0);
        assert!((e - 0.5).abs() < 0.01 && se > 0.0 && se < 0.01);
        assert!(mean_occupation(&vac).abs() < 0.01);

        let th = sample_squeezed_thermal(2.041_494_082_536_798_f64, 1.0, 0.0, 100_000, 5).unwrap();
        let (e2, _) = energy(&th, 2.0);
        assert!((e2 - 4.083).abs() < 4.083 * 0.03);
        let (e1, _) = energy(&th, 1.0);
        assert_eq!(energy(&th, 2.0).0, 2.0 * e1);
        // ω/T = 0.5 gives n̄ = 1.5415.
        assert!((mean_occupation(&th) - 1.5415).abs() < 1.5415 * 0.03);
    }

    #[test]
    fn squeezing_is_rotation_invariant() {
        let iso = sample_squeezed_thermal(2.0_f64, 1.0, 0.0, 100_000, 6).unwrap();
        let (s, beta) = squeezing(&iso);
        assert!((s - 1.0).abs() < 0.02 && (beta - 1.0).abs() < 0.03);

        let sq = sample_squeezed_thermal(1.0, 3.0, PI / 7.0, 100_000, 7).unwrap();
        let (s, beta) = squeezing(&sq);
        assert!((s - 3.0).abs() < 0.09, "{s}");
        assert!((beta - s).abs() > 0.5);
    }

    #[test]
    fn execution_mode_does_not_change_samples() {
        let a = sample_squeezed_thermal(1.3, 1.7, 0.4, 10_000, 9).unwrap();
        let b = sample_squeezed_thermal(1.3, 1.7, 0.4, 10_000, 9)
            .unwrap()
            .with_execution(Execution::Serial);
        assert_eq!(a.points(), b.points());
        assert_eq!(a.moments(), b.moments());
    }
}
