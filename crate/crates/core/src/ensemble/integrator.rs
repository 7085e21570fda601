//! Split-step propagation of the particle ensemble.
//!
//! One step of length `dt` is the composition of three exactly solvable
//! pieces: rotation by `∫ω dt` (`ẋ = ωy, ẏ = −ωx`), the ramp scaling
//! `x → x·sqrt(ω₀/ω₁)`, `y → y·sqrt(ω₁/ω₀)` (`ẋ = −(ω̇/2ω)x, ẏ = (ω̇/2ω)y`), and
//! the Ornstein–Uhlenbeck update `x → e^{−γdt/2}x + sqrt(ν/2 (1−e^{−γdt})) ξ`.
//! Without a bath a step is a fixed 2×2 map shared by all particles, so
//! consecutive bath-free steps are composed and applied once per observation.

use super::{squeezing_from_moments, BathSpec, Ensemble, FrequencySchedule, PhasePoint, Segment};
use crate::error::{Error, Result};
use crate::rng::CellKey;
use crate::scalar::Real;

/// Largest allowed `ω·dt` and `γ·dt`.
pub const STEP_GUARD: f64 = 0.1;

/// `(x, y) → (a x + b y, c x + d y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearMap<T> {
    pub a: T,
    pub b: T,
    pub c: T,
    pub d: T,
}

impl<T: Real> LinearMap<T> {
    pub fn identity() -> Self {
        Self {
            a: T::one(),
            b: T::zero(),
            c: T::zero(),
            d: T::one(),
        }
    }

    /// Flow of `ẋ = ωy, ẏ = −ωx` through phase `theta`.
    pub fn rotation(theta: T) -> Self {
        let (s, c) = theta.sin_cos();
        Self { a: c, b: s, c: -s, d: c }
    }

    /// Area-preserving axis scaling `x → f x`, `y → y/f`.
    pub fn squeeze(f: T) -> Self {
        Self {
            a: f,
            b: T::zero(),
            c: T::zero(),
            d: T::one() / f,
        }
    }

    /// Map for a frequency change `omega_from → omega_to` with frozen phase,
    /// i.e. the ramp flow integrated over the change.
    pub fn frequency_change(omega_from: T, omega_to: T) -> Self {
        Self::squeeze((omega_from / omega_to).sqrt())
    }

    /// Drift over one step starting at `omega` with constant slope `omega_dot`.
    pub fn drift_step(omega: T, omega_dot: T, dt: T) -> Self {
        let theta = omega * dt + omega_dot * dt * dt / T::lit(2.0);
        let omega_end = omega + omega_dot * dt;
        Self::rotation(theta).then(&Self::frequency_change(omega, omega_end))
    }

    /// `next ∘ self`.
    pub fn then(&self, next: &Self) -> Self {
        Self {
            a: next.a * self.a + next.b * self.c,
            b: next.a * self.b + next.b * self.d,
            c: next.c * self.a + next.d * self.c,
            d: next.c * self.b + next.d * self.d,
        }
    }

    pub fn det(&self) -> T {
        self.a * self.d - self.b * self.c
    }

    #[inline]
    pub fn apply(&self, p: PhasePoint<T>) -> PhasePoint<T> {
        PhasePoint {
            x: self.a * p.x + self.b * p.y,
            y: self.c * p.x + self.d * p.y,
        }
    }
}

/// Observables recorded along a schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Snapshot<T> {
    pub time: T,
    pub omega: T,
    /// Index of the segment that produced the snapshot (0 for the initial one).
    pub segment: usize,
    pub energy: T,
    pub energy_stderr: T,
    pub mean_occupation: T,
    pub squeezing_s: T,
    pub beta_ratio: T,
    pub energy_entropy: Option<T>,
    pub quasiclassical_entropy: Option<T>,
}

impl<T: Real> Snapshot<T> {
    pub fn measure(ensemble: &Ensemble<T>, segment: usize) -> Self {
        let m = ensemble.moments();
        let omega = ensemble.omega();
        let (squeezing_s, beta_ratio) = squeezing_from_moments(&m);
        Self {
            time: ensemble.time(),
            omega,
            segment,
            energy: omega * m.mean_r2(),
            energy_stderr: omega * m.stderr_r2(),
            mean_occupation: m.mean_r2() - T::lit(0.5),
            squeezing_s,
            beta_ratio,
            energy_entropy: None,
            quasiclassical_entropy: None,
        }
    }
}

/// Hook that may fill the optional fields of each snapshot.
pub type Observer<'a, T> = dyn Fn(&Ensemble<T>, &mut Snapshot<T>) + Sync + 'a;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions<T> {
    pub dt: T,
    /// Emit a snapshot every this many steps (and at each segment end).
    pub observer_stride: usize,
}

fn check_guard<T: Real>(omega_max: T, gamma: T, dt: T) -> Result<()> {
    let limit = T::lit(STEP_GUARD * (1.0 + 1e-9));
    if !(dt > T::zero()) || !dt.is_finite() {
        return Err(Error::StabilityGuard {
            detail: format!("dt must be > 0, got {dt}"),
        });
    }
    if omega_max * dt > limit {
        return Err(Error::StabilityGuard {
            detail: format!("omega*dt = {} > {STEP_GUARD}", omega_max * dt),
        });
    }
    if gamma * dt > limit {
        return Err(Error::StabilityGuard {
            detail: format!("gamma*dt = {} > {STEP_GUARD}", gamma * dt),
        });
    }
    Ok(())
}

/// Drift followed by the bath kick, for every particle.
fn bath_step<T: Real>(ens: &mut Ensemble<T>, drift: LinearMap<T>, bath: &BathSpec<T>, omega: T, dt: T) {
    let decay = (-bath.gamma * dt / T::lit(2.0)).exp();
    let sigma = (bath.stationary_nu(omega) / T::lit(2.0) * -(-bath.gamma * dt).exp_m1()).sqrt();
    let (seed, stream, step) = (ens.seed, ens.stream, ens.stream_step);
    ens.for_each_chunk_mut(move |offset, chunk| {
        for (i, p) in chunk.iter_mut().enumerate() {
            let mut rng = CellKey {
                seed,
                stream,
                step,
                particle: (offset + i) as u64,
            }
            .rng();
            let q = drift.apply(*p);
            p.x = decay * q.x + sigma * T::lit(rng.normal());
            p.y = decay * q.y + sigma * T::lit(rng.normal());
        }
    });
}

/// Advances every particle by one split step and the clock by `dt`.
///
/// `omega` is the frequency at the start of the step; during the step it
/// changes linearly with slope `omega_dot`.
pub fn step<T: Real>(
    ensemble: &mut Ensemble<T>,
    omega: T,
    omega_dot: T,
    bath: Option<&BathSpec<T>>,
    dt: T,
) -> Result<()> {
    let omega_end = omega + omega_dot * dt;
    if !(omega > T::zero() && omega_end > T::zero()) {
        return Err(Error::domain(
            "step",
            format!("omega must stay > 0 (start {omega}, end {omega_end})"),
        ));
    }
    let gamma = bath.map_or(T::zero(), |b| b.gamma);
    check_guard(omega.max(omega_end), gamma, dt)?;
    if ensemble.stream == 0 {
        ensemble.begin_stream();
    }
    let drift = LinearMap::drift_step(omega, omega_dot, dt);
    match bath {
        Some(b) if b.gamma > T::zero() => bath_step(ensemble, drift, b, omega, dt),
        _ => ensemble.apply_map(&drift),
    }
    ensemble.stream_step += 1;
    ensemble.time += dt;
    ensemble.omega = omega_end;
    Ok(())
}

/// Runs `schedule` from the ensemble's current frequency.
///
/// The returned snapshots start with the initial state, then one every
/// `observer_stride` steps and one at the end of every segment. A jump moves
/// the frequency instantly and rescales the coordinates with the frozen-phase
/// ramp map.
pub fn evolve_schedule<T: Real>(
    ensemble: &mut Ensemble<T>,
    schedule: &FrequencySchedule<T>,
    options: &EvolveOptions<T>,
    observer: Option<&Observer<'_, T>>,
) -> Result<Vec<Snapshot<T>>> {
    let dt = options.dt;
    check_guard(schedule.max_omega(), schedule.max_gamma(), dt)?;
    if options.observer_stride == 0 {
        return Err(Error::domain("evolve", "observer_stride must be >= 1"));
    }
    let stride = options.observer_stride;
    let observe = |ens: &Ensemble<T>, segment: usize| {
        let mut snap = Snapshot::measure(ens, segment);
        if let Some(obs) = observer {
            obs(ens, &mut snap);
        }
        snap
    };

    let mut out = vec![observe(ensemble, 0)];
    for (index, segment) in schedule.segments().iter().enumerate() {
        let tag = index + 1;
        if let Some(start) = segment.start_omega() {
            let current = ensemble.omega;
            if (start - current).abs() > T::lit(1e-9) * start {
                return Err(Error::ScheduleDiscontinuity {
                    index,
                    current: current.to_f64_lossy(),
                    start: start.to_f64_lossy(),
                });
            }
        }
        match *segment {
            Segment::Jump { omega_new } => {
                ensemble.apply_map(&LinearMap::frequency_change(ensemble.omega, omega_new));
                ensemble.omega = omega_new;
                out.push(observe(ensemble, tag));
            }
            Segment::Hold { .. } | Segment::LinearRamp { .. } => {
                let start = segment.start_omega().expect("timed segment");
                let end = segment.end_omega();
                let duration = segment.duration();
                let steps = (duration / dt - T::lit(1e-9)).ceil().max(T::one());
                let n = steps.to_usize().expect("step count fits usize");
                let h = duration / steps;
                let slope = (end - start) / duration;
                let bath = match segment {
                    Segment::Hold { bath: Some(b), .. } if b.gamma > T::zero() => Some(*b),
                    _ => None,
                };
                let t0 = ensemble.time;
                ensemble.begin_stream();
                let mut pending = LinearMap::identity();
                for k in 0..n {
                    let omega_k = start + slope * T::from_usize_lossy(k) * h;
                    let drift = LinearMap::drift_step(omega_k, slope, h);
                    match &bath {
                        Some(b) => bath_step(ensemble, drift, b, omega_k, h),
                        None => pending = pending.then(&drift),
                    }
                    ensemble.stream_step += 1;
                    let done = k + 1;
                    ensemble.time = t0 + T::from_usize_lossy(done) * h;
                    ensemble.omega = if done == n {
                        end
                    } else {
                        start + slope * T::from_usize_lossy(done) * h
                    };
                    if done % stride == 0 || done == n {
                        if bath.is_none() {
                            ensemble.apply_map(&pending);
                            pending = LinearMap::identity();
                        }
                        out.push(observe(ensemble, tag));
                    }
                }
            }
        }
    }
    Ok(out)
}
