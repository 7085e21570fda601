//! Closed-form thermodynamics of the quasistatic Otto cycle.
//!
//! Natural units throughout (`ħ = k_B = 1`): frequencies and temperatures
//! share one energy scale and only the ratio `ω/T` enters the occupations.
//!
//! The cycle is A → B (adiabatic compression `ω_c → ω_h`), B → C (contact with
//! the hot bath), C → D (adiabatic expansion `ω_h → ω_c`), D → A (contact with
//! the cold bath). Work `R` is counted as done *by* the working body, heats
//! `Q1`, `Q2` as absorbed *by* it on the hot and cold isochores.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// A thermal reservoir, or equivalently one corner of the cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Reservoir<T> {
    pub omega: T,
    pub temperature: T,
}

impl<T: Real> Reservoir<T> {
    pub fn new(omega: T, temperature: T) -> Result<Self> {
        if !(omega > T::zero()) || !omega.is_finite() {
            return Err(Error::domain("reservoir", format!("omega must be > 0, got {omega}")));
        }
        if !(temperature > T::zero()) || !temperature.is_finite() {
            return Err(Error::domain(
                "reservoir",
                format!("temperature must be > 0, got {temperature}"),
            ));
        }
        Ok(Self { omega, temperature })
    }

    /// `ω/T`.
    pub fn ratio(&self) -> T {
        self.omega / self.temperature
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuasistaticCycle<T> {
    pub cold: Reservoir<T>,
    pub hot: Reservoir<T>,
}

impl<T: Real> QuasistaticCycle<T> {
    pub fn new(cold: Reservoir<T>, hot: Reservoir<T>) -> Result<Self> {
        if !(hot.omega > cold.omega) {
            return Err(Error::domain(
                "cycle",
                format!(
                    "requires omega_h > omega_c, got omega_c={} omega_h={}",
                    cold.omega, hot.omega
                ),
            ));
        }
        Ok(Self { cold, hot })
    }

    /// Direction parameter `λ = ω_c/T_c − ω_h/T_h`.
    pub fn lambda(&self) -> T {
        self.cold.ratio() - self.hot.ratio()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CycleMode {
    HeatEngine,
    Refrigerator,
    /// `λ = 0`: both baths see the same `ω/T`, nothing flows.
    Degenerate,
}

impl CycleMode {
    pub fn from_lambda<T: Real>(lambda: T) -> Self {
        if lambda > T::zero() {
            CycleMode::HeatEngine
        } else if lambda < T::zero() {
            CycleMode::Refrigerator
        } else {
            CycleMode::Degenerate
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CycleReport<T> {
    pub nu_c: T,
    pub nu_h: T,
    pub kappa_c: T,
    pub kappa_h: T,
    /// `E_A − E_B`, work on the compression stroke.
    pub r1: T,
    /// `E_C − E_D`, work on the expansion stroke.
    pub r2: T,
    pub r: T,
    /// Heat absorbed from the hot bath, `E_C − E_B`.
    pub q1: T,
    /// Heat absorbed from the cold bath, `E_A − E_D`.
    pub q2: T,
    pub lambda: T,
    pub mode: CycleMode,
    pub eta: Option<T>,
    pub zeta: Option<T>,
    pub eta_carnot: T,
    pub s_ab: T,
    pub s_cd: T,
    pub c_bc: T,
    pub c_da: T,
}

/// Bose occupation `1/(e^{ω/T} − 1)`.
pub fn thermal_occupation<T: Real>(omega: T, temperature: T) -> T {
    T::one() / (omega / temperature).exp_m1()
}

/// `(ν, κ)` with `ν = n̄ + 1/2 = coth(ω/2T)/2` and `κ = 1/(2ν) = tanh(ω/2T)`.
pub fn nu_kappa<T: Real>(omega: T, temperature: T) -> (T, T) {
    let half = omega / (temperature + temperature);
    let kappa = half.tanh();
    (T::lit(0.5) / kappa, kappa)
}

/// Entropy of the thermal state at `ω/T`:
/// `−ln[2 sinh(ω/2T)] + (ω/2T) coth(ω/2T)`.
pub fn stage_entropy<T: Real>(omega: T, temperature: T) -> T {
    // Rewritten with q = e^{-x} as −ln(1−q) + x q/(1−q), which stays finite
    // for large x where sinh overflows.
    let x = omega / temperature;
    let one_minus_q = -(-x).exp_m1();
    let q = (-x).exp();
    -one_minus_q.ln() + x * q / one_minus_q
}

/// Clausius residuals `ΔS − Q/T_bath` on the hot (BC) and cold (DA) isochores.
pub fn clausius_residuals<T: Real>(cycle: &QuasistaticCycle<T>) -> (T, T) {
    let (nu_c, _) = nu_kappa(cycle.cold.omega, cycle.cold.temperature);
    let (nu_h, _) = nu_kappa(cycle.hot.omega, cycle.hot.temperature);
    let dnu = nu_h - nu_c;
    let q1 = cycle.hot.omega * dnu;
    let q2 = -cycle.cold.omega * dnu;
    let s_ab = stage_entropy(cycle.cold.omega, cycle.cold.temperature);
    let s_cd = stage_entropy(cycle.hot.omega, cycle.hot.temperature);
    let c_bc = s_cd - s_ab - q1 / cycle.hot.temperature;
    let c_da = s_ab - s_cd - q2 / cycle.cold.temperature;
    (c_bc, c_da)
}

pub fn quasistatic_report<T: Real>(cycle: &QuasistaticCycle<T>) -> CycleReport<T> {
    let (cold, hot) = (cycle.cold, cycle.hot);
    let (nu_c, kappa_c) = nu_kappa(cold.omega, cold.temperature);
    let (nu_h, kappa_h) = nu_kappa(hot.omega, hot.temperature);
    let dw = hot.omega - cold.omega;
    let dnu = nu_h - nu_c;
    let lambda = cycle.lambda();
    let mode = CycleMode::from_lambda(lambda);
    let (c_bc, c_da) = clausius_residuals(cycle);
    CycleReport {
        nu_c,
        nu_h,
        kappa_c,
        kappa_h,
        r1: -dw * nu_c,
        r2: dw * nu_h,
        r: dw * dnu,
        q1: hot.omega * dnu,
        q2: -cold.omega * dnu,
        lambda,
        mode,
        eta: (mode == CycleMode::HeatEngine).then(|| T::one() - cold.omega / hot.omega),
        zeta: (mode == CycleMode::Refrigerator).then(|| cold.omega / dw),
        eta_carnot: T::one() - cold.temperature / hot.temperature,
        s_ab: stage_entropy(cold.omega, cold.temperature),
        s_cd: stage_entropy(hot.omega, hot.temperature),
        c_bc,
        c_da,
    }
}

/// Lowest cold-bath temperature the refrigerator can reach: `T_h ω_c/ω_h`,
/// the point where `λ` reaches zero.
pub fn cooling_limit<T: Real>(hot: &Reservoir<T>, omega_c: T, omega_h: T) -> Result<T> {
    if !(omega_h > omega_c && omega_c > T::zero()) {
        return Err(Error::domain(
            "cooling limit",
            format!("requires omega_h > omega_c > 0, got omega_c={omega_c} omega_h={omega_h}"),
        ));
    }
    Ok(hot.temperature * omega_c / omega_h)
}
