use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::thermo::thermal_occupation;

/// Thermal bath coupled to the oscillator during a hold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathSpec<T> {
    pub gamma: T,
    pub temperature: T,
}

impl<T: Real> BathSpec<T> {
    pub fn new(gamma: T, temperature: T) -> Result<Self> {
        if !(gamma >= T::zero()) || !gamma.is_finite() {
            return Err(Error::domain("bath", format!("gamma must be >= 0, got {gamma}")));
        }
        if !(temperature > T::zero()) || !temperature.is_finite() {
            return Err(Error::domain(
                "bath",
                format!("temperature must be > 0, got {temperature}"),
            ));
        }
        Ok(Self { gamma, temperature })
    }

    /// Stationary `⟨x²+y²⟩ = n̄ + 1/2` at oscillator frequency `omega`.
    pub fn stationary_nu(&self, omega: T) -> T {
        thermal_occupation(omega, self.temperature) + T::lit(0.5)
    }
}

/// Noise strength `D = (γ/4)(1 + 2 n̄(ω/T)) = γν/2`.
pub fn diffusion_coefficient<T: Real>(bath: &BathSpec<T>, omega: T) -> T {
    bath.gamma / T::lit(4.0) * (T::one() + T::lit(2.0) * thermal_occupation(omega, bath.temperature))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Segment<T> {
    /// Fixed frequency, optionally in contact with a bath.
    Hold {
        omega: T,
        duration: T,
        bath: Option<BathSpec<T>>,
    },
    /// Isolated linear frequency sweep.
    LinearRamp {
        omega_start: T,
        omega_end: T,
        duration: T,
    },
    /// Instantaneous frequency change.
    Jump { omega_new: T },
}

impl<T: Real> Segment<T> {
    pub fn start_omega(&self) -> Option<T> {
        match *self {
            Segment::Hold { omega, .. } => Some(omega),
            Segment::LinearRamp { omega_start, .. } => Some(omega_start),
            Segment::Jump { .. } => None,
        }
    }

    pub fn end_omega(&self) -> T {
        match *self {
            Segment::Hold { omega, .. } => omega,
            Segment::LinearRamp { omega_end, .. } => omega_end,
            Segment::Jump { omega_new } => omega_new,
        }
    }

    pub fn duration(&self) -> T {
        match *self {
            Segment::Hold { duration, .. } | Segment::LinearRamp { duration, .. } => duration,
            Segment::Jump { .. } => T::zero(),
        }
    }

    fn max_omega(&self) -> T {
        match *self {
            Segment::Hold { omega, .. } => omega,
            Segment::LinearRamp {
                omega_start,
                omega_end,
                ..
            } => omega_start.max(omega_end),
            Segment::Jump { omega_new } => omega_new,
        }
    }

    fn validate(&self, index: usize) -> Result<()> {
        let positive = |name: &str, v: T| -> Result<()> {
            if v > T::zero() && v.is_finite() {
                Ok(())
            } else {
                Err(Error::domain(
                    "schedule",
                    format!("segment {index}: {name} must be > 0, got {v}"),
                ))
            }
        };
        match *self {
            Segment::Hold { omega, duration, .. } => {
                positive("omega", omega)?;
                positive("duration", duration)
            }
            Segment::LinearRamp {
                omega_start,
                omega_end,
                duration,
            } => {
                positive("omega_start", omega_start)?;
                positive("omega_end", omega_end)?;
                positive("duration", duration)
            }
            Segment::Jump { omega_new } => positive("omega_new", omega_new),
        }
    }
}

/// Piecewise program for `ω(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencySchedule<T> {
    segments: Vec<Segment<T>>,
}

impl<T: Real> FrequencySchedule<T> {
    pub fn new(segments: Vec<Segment<T>>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::EmptySchedule);
        }
        for (i, s) in segments.iter().enumerate() {
            s.validate(i)?;
        }
        Ok(Self { segments })
    }

    pub fn segments(&self) -> &[Segment<T>] {
        &self.segments
    }

    pub fn total_duration(&self) -> T {
        self.segments.iter().map(Segment::duration).sum()
    }

    pub fn max_omega(&self) -> T {
        self.segments
            .iter()
            .map(Segment::max_omega)
            .fold(T::zero(), T::max)
    }

    pub fn max_gamma(&self) -> T {
        self.segments
            .iter()
            .filter_map(|s| match s {
                Segment::Hold { bath: Some(b), .. } => Some(b.gamma),
                _ => None,
            })
            .fold(T::zero(), T::max)
    }
}
