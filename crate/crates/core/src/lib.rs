//! Quantum Otto cycle simulator: a particle representation of the Wigner
//! function driven through frequency schedules, with closed-form
//! thermodynamics of the quasistatic cycle and Fock-space entropies.
//!
//! The numerical core is generic over the scalar type; `f64` and `f32`
//! aliases are provided below. The experiment runner works in `f64`.

pub mod ensemble;
pub mod entropy;
pub mod error;
pub mod experiment;
pub mod rng;
pub mod scalar;
pub mod special;
pub mod thermo;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Ensemble64 = ensemble::Ensemble<f64>;
pub type Ensemble32 = ensemble::Ensemble<f32>;
pub type Snapshot64 = ensemble::Snapshot<f64>;
pub type Reservoir64 = thermo::Reservoir<f64>;
pub type Reservoir32 = thermo::Reservoir<f32>;
pub type CycleReport64 = thermo::CycleReport<f64>;
pub type Schedule64 = ensemble::FrequencySchedule<f64>;
pub type PopulationVector64 = entropy::PopulationVector<f64>;
