//! Assembles schedules from a config, runs them, and does the stroke-wise
//! energy bookkeeping.

use serde::Serialize;

use super::config::{ExperimentConfig, Mode};
use crate::ensemble::{
    evolve_schedule, sample_squeezed_thermal, BathSpec, Ensemble, EvolveOptions, Execution,
    FrequencySchedule, PhasePoint, Segment, Snapshot,
};
use crate::entropy::{
    energy_entropy, entropy_observer, populations_equilibrium, populations_from_ensemble,
    populations_gaussian_moments, populations_squeezed_thermal_approx,
    populations_squeezed_thermal_exact, squeezing_deltas, PopulationMethod,
};
use crate::error::Result;
use crate::thermo::{
    cooling_limit, nu_kappa, quasistatic_report, CycleMode, CycleReport, QuasistaticCycle, Reservoir,
};

/// Relative size of `|dE/dt|/γ` at the end of a hold, compared to `E_eq`,
/// above which the hold is flagged as not relaxed.
pub const RELAXATION_TOLERANCE: f64 = 1e-3;

/// Squeezing values tabulated by the sweep mode.
pub const SWEEP_S: [f64; 11] = [1.0, 1.05, 1.1, 1.15, 1.2, 1.25, 1.3, 1.35, 1.4, 1.45, 1.5];

/// Relaxation check for one bath contact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HoldCheck {
    pub bath: &'static str,
    pub cycle: usize,
    pub energy_in: f64,
    pub energy_out: f64,
    pub energy_eq: f64,
    /// Predicted `|dE/dt|` at the end, `γ |E_in − E_eq| e^{−γ t_hold}`.
    pub final_rate: f64,
    pub converged: bool,
}

/// Finite-speed cycle results for the last simulated cycle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CycleSummary {
    pub cycles_run: usize,
    /// Ensemble energy at the start of the reported cycle and at A, B, C, D.
    pub energy_start: f64,
    pub energy_a: f64,
    pub energy_b: f64,
    pub energy_c: f64,
    pub energy_d: f64,
    /// Work done by the body, compression and expansion strokes.
    pub r1_sim: f64,
    pub r2_sim: f64,
    pub r_sim: f64,
    pub r_stderr: f64,
    /// Heat absorbed from the hot and cold bath.
    pub q_hot: f64,
    pub q_cold: f64,
    pub mode_sim: CycleMode,
    /// `R/Q_hot` for an engine, `Q_cold/(−R)` for a refrigerator.
    pub efficiency: Option<f64>,
    pub efficiency_stderr: Option<f64>,
    /// Energy pumped in by non-adiabatic ramps,
    /// `ω_h(⟨r²⟩_B − ⟨r²⟩_A) + ω_c(⟨r²⟩_D − ⟨r²⟩_C)`, per-particle estimate.
    pub work_excess: f64,
    pub work_excess_stderr: f64,
    /// `R_analytic − work_excess`, exact when both holds relax fully.
    pub r_control_variate: f64,
    pub r_rel_gap: f64,
    pub r_cv_gap: f64,
    pub efficiency_gap: Option<f64>,
    /// `(Q_hot + Q_cold − R) − (E_D − E_start)`.
    pub first_law_residual: f64,
    /// Largest `s` on the cold hold, compression, hot hold and expansion.
    pub max_squeezing: [f64; 4],
    pub peak_energy_entropy: Option<f64>,
    pub peak_quasiclassical_entropy: Option<f64>,
    pub holds: Vec<HoldCheck>,
    pub relaxation_converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuenchSummary {
    pub s_expected: f64,
    pub s_measured: f64,
    pub s_rel_error: f64,
    pub energy_before: f64,
    pub energy_after: f64,
    pub n_mean_before: f64,
    pub n_mean_after: f64,
    /// `S_E` from the ensemble's Gaussian moments.
    pub s_e_before: f64,
    pub s_e_after: f64,
    pub s_e_jump: f64,
    /// `S_E` from the Fock projection of the particles.
    pub s_e_projection_before: f64,
    pub s_e_projection_after: f64,
    /// `S_E(exact populations at s) − S_E(equilibrium)`.
    pub s_e_jump_exact: f64,
    /// First-order estimate `−Σ δp_n ln p_n^eq`.
    pub delta_s_e: f64,
    /// `δE/ω` from the exact populations.
    pub delta_e: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub s: f64,
    pub s_e_exact: f64,
    pub s_e_approx: f64,
    pub approx_total: f64,
    pub delta_e: f64,
    pub delta_s_e: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub mode: Mode,
    pub seed: u64,
    pub particles: usize,
    pub analytic: CycleReport<f64>,
    /// Lowest reachable `T_c` for the refrigerator branch.
    pub cooling_limit: f64,
    pub cycle: Option<CycleSummary>,
    pub quench: Option<QuenchSummary>,
    pub sweep: Option<Vec<SweepRow>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub timeseries: Vec<Snapshot<f64>>,
    pub summary: RunSummary,
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<RunOutput> {
    run_experiment_with(config, Execution::Parallel)
}

/// Runs `config` with the given particle-loop execution strategy. Results do
/// not depend on it.
pub fn run_experiment_with(config: &ExperimentConfig, execution: Execution) -> Result<RunOutput> {
    config.validate()?;
    let cold = Reservoir::new(config.omega_c, config.t_c)?;
    let hot = Reservoir::new(config.omega_h, config.t_h)?;
    let cycle = QuasistaticCycle::new(cold, hot)?;
    let analytic = quasistatic_report(&cycle);
    let mut summary = RunSummary {
        mode: config.mode,
        seed: config.seed,
        particles: config.particles,
        analytic,
        cooling_limit: cooling_limit(&hot, config.omega_c, config.omega_h)?,
        cycle: None,
        quench: None,
        sweep: None,
    };
    let timeseries = match config.mode {
        Mode::Quasistatic => Vec::new(),
        Mode::SweepSqueezing => {
            summary.sweep = Some(sweep(config.omega_c / config.t_c)?);
            Vec::new()
        }
        Mode::DynamicCycle => {
            let (series, cs) = dynamic_cycle(config, &analytic, execution)?;
            summary.cycle = Some(cs);
            series
        }
        Mode::Quench => {
            let (series, q) = quench(config, execution)?;
            summary.quench = Some(q);
            series
        }
    };
    Ok(RunOutput { timeseries, summary })
}

fn thermal_ensemble(config: &ExperimentConfig, execution: Execution) -> Result<Ensemble<f64>> {
    let (nu_c, _) = nu_kappa(config.omega_c, config.t_c);
    Ok(sample_squeezed_thermal(nu_c, 1.0, 0.0, config.particles, config.seed)?
        .with_omega(config.omega_c)
        .with_execution(execution))
}

/// Runs one segment, appending its snapshots (minus the duplicated start).
fn run_segment(
    ens: &mut Ensemble<f64>,
    segment: Segment<f64>,
    config: &ExperimentConfig,
    series: &mut Vec<Snapshot<f64>>,
) -> Result<()> {
    let observer = entropy_observer(config.n_max, config.cell_side);
    let options = EvolveOptions {
        dt: config.dt,
        observer_stride: config.observer_stride(),
    };
    let snaps = evolve_schedule(ens, &FrequencySchedule::new(vec![segment])?, &options, Some(&observer))?;
    let skip = usize::from(!series.is_empty());
    series.extend_from_slice(&snaps[skip..]);
    Ok(())
}

fn mean_and_stderr(values: impl Iterator<Item = f64>) -> (f64, f64, usize) {
    let (mut n, mut sum, mut sq) = (0usize, 0.0, 0.0);
    for v in values {
        n += 1;
        sum += v;
        sq += v * v;
    }
    let nf = n as f64;
    let mean = sum / nf;
    let var = if n > 1 {
        (sq / nf - mean * mean).max(0.0) * nf / (nf - 1.0)
    } else {
        0.0
    };
    (mean, (var / nf).sqrt(), n)
}

/// Delta-method standard error of `mean(a)/mean(b)` from paired samples.
fn ratio_stderr(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let ratio = ma / mb;
    let var = a
        .iter()
        .zip(b)
        .map(|(x, y)| {
            let d = (x - ma) - ratio * (y - mb);
            d * d
        })
        .sum::<f64>()
        / (n - 1.0);
    (var / n).sqrt() / mb.abs()
}

/// Mean of `y` adjusted by regression on zero-mean controls, with its
/// standard error: `ȳ − βᵀū`, `β` the least-squares slope of `y` on the
/// controls.
pub(crate) fn control_variate_mean(y: &[f64], controls: &[Vec<f64>]) -> (f64, f64) {
    let n = y.len();
    let k = controls.len();
    let nf = n as f64;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / nf;
    let my = mean(y);
    let mc: Vec<f64> = controls.iter().map(|c| mean(c)).collect();
    // Normal equations on centred data.
    let mut a = vec![vec![0.0; k + 1]; k];
    for i in 0..n {
        for r in 0..k {
            let cr = controls[r][i] - mc[r];
            for c in 0..k {
                a[r][c] += cr * (controls[c][i] - mc[c]);
            }
            a[r][k] += cr * (y[i] - my);
        }
    }
    let beta = solve(a);
    let adjusted = my - beta.iter().zip(&mc).map(|(b, m)| b * m).sum::<f64>();
    let (_, se, _) = mean_and_stderr((0..n).map(|i| {
        y[i] - beta.iter().enumerate().map(|(r, b)| b * controls[r][i]).sum::<f64>()
    }));
    (adjusted, se)
}

/// Gaussian elimination with partial pivoting on an augmented `k × (k+1)`
/// matrix; singular directions get a zero coefficient.
fn solve(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let k = a.len();
    for col in 0..k {
        let piv = (col..k)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap_or(col);
        a.swap(col, piv);
        if a[col][col].abs() < 1e-300 {
            continue;
        }
        for row in col + 1..k {
            let f = a[row][col] / a[col][col];
            for c in col..=k {
                a[row][c] -= f * a[col][c];
            }
        }
    }
    let mut x = vec![0.0; k];
    for row in (0..k).rev() {
        if a[row][row].abs() < 1e-300 {
            continue;
        }
        let s: f64 = (row + 1..k).map(|c| a[row][c] * x[c]).sum();
        x[row] = (a[row][k] - s) / a[row][row];
    }
    x
}

fn dynamic_cycle(
    config: &ExperimentConfig,
    analytic: &CycleReport<f64>,
    execution: Execution,
) -> Result<(Vec<Snapshot<f64>>, CycleSummary)> {
    let (wc, wh) = (config.omega_c, config.omega_h);
    let cold_bath = BathSpec::new(config.gamma_c, config.t_c)?;
    let hot_bath = BathSpec::new(config.gamma_h, config.t_h)?;
    let strokes = [
        Segment::Hold {
            omega: wc,
            duration: config.hold_duration,
            bath: Some(cold_bath),
        },
        Segment::LinearRamp {
            omega_start: wc,
            omega_end: wh,
            duration: config.ramp_duration,
        },
        Segment::Hold {
            omega: wh,
            duration: config.hold_duration,
            bath: Some(hot_bath),
        },
        Segment::LinearRamp {
            omega_start: wh,
            omega_end: wc,
            duration: config.ramp_duration,
        },
    ];

    let mut ens = thermal_ensemble(config, execution)?;
    let mut series = Vec::new();
    let mut holds = Vec::new();
    // Per-particle r² at the start of the last cycle and at A, B, C, D.
    let mut corners: Vec<Vec<f64>> = Vec::new();
    let mut max_squeezing = [1.0f64; 4];
    // Particles at A and C of the last cycle.
    let mut anisotropy: Vec<Vec<PhasePoint<f64>>> = Vec::new();
    for cycle in 0..config.cycles {
        let last = cycle + 1 == config.cycles;
        if last {
            corners.push(ens.radii_squared());
        }
        for (k, stroke) in strokes.iter().enumerate() {
            let before = series.len();
            let energy_in = ens.omega() * ens.moments().mean_r2();
            run_segment(&mut ens, *stroke, config, &mut series)?;
            if last && matches!(stroke, Segment::Hold { .. }) {
                anisotropy.push(ens.points().to_vec());
            }
            if last {
                corners.push(ens.radii_squared());
                max_squeezing[k] = series[before.saturating_sub(1)..]
                    .iter()
                    .map(|s| s.squeezing_s)
                    .fold(1.0, f64::max);
            }
            if let Segment::Hold {
                omega,
                duration,
                bath: Some(bath),
            } = *stroke
            {
                let energy_eq = omega * bath.stationary_nu(omega);
                let energy_out = omega * ens.moments().mean_r2();
                let final_rate =
                    bath.gamma * (energy_in - energy_eq).abs() * (-bath.gamma * duration).exp();
                let converged = final_rate <= RELAXATION_TOLERANCE * bath.gamma * energy_eq;
                if !converged {
                    log::warn!(
                        "cycle {cycle}: {} hold not relaxed (|dE/dt| ≈ {final_rate:.3e}); increase hold_duration",
                        if k == 0 { "cold" } else { "hot" }
                    );
                }
                holds.push(HoldCheck {
                    bath: if k == 0 { "cold" } else { "hot" },
                    cycle,
                    energy_in,
                    energy_out,
                    energy_eq,
                    final_rate,
                    converged,
                });
            }
        }
    }

    let [start, a, b, c, d] = [0, 1, 2, 3, 4].map(|i| &corners[i]);
    let particles = start.len();
    let idx = 0..particles;
    let r_i: Vec<f64> = idx
        .clone()
        .map(|i| wc * (a[i] - d[i]) + wh * (c[i] - b[i]))
        .collect();
    let q_hot_i: Vec<f64> = idx.clone().map(|i| wh * (c[i] - b[i])).collect();
    let q_cold_i: Vec<f64> = idx.clone().map(|i| wc * (a[i] - start[i])).collect();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let m = |v: &Vec<f64>| mean(v);
    let (r_sim, r_stderr, _) = mean_and_stderr(r_i.iter().copied());
    let excess_i: Vec<f64> = idx.clone().map(|i| wh * (b[i] - a[i]) + wc * (d[i] - c[i])).collect();
    // Anisotropy of the relaxed states at A and C; zero mean for an isotropic
    // thermal state, and they carry almost all of the per-particle variance of
    // the ramp work.
    let controls: Vec<Vec<f64>> = [&anisotropy[0], &anisotropy[1]]
        .into_iter()
        .flat_map(|pts| {
            [
                pts.iter().map(|p| p.x * p.x - p.y * p.y).collect::<Vec<f64>>(),
                pts.iter().map(|p| 2.0 * p.x * p.y).collect(),
            ]
        })
        .collect();
    let (work_excess, work_excess_stderr) = control_variate_mean(&excess_i, &controls);
    let q_hot = mean(&q_hot_i);
    let q_cold = mean(&q_cold_i);
    let [e_start, e_a, e_b, e_c, e_d] = [wc * m(start), wc * m(a), wh * m(b), wh * m(c), wc * m(d)];
    let mode_sim = CycleMode::from_lambda(r_sim);
    let (efficiency, efficiency_stderr) = match mode_sim {
        CycleMode::HeatEngine => (Some(r_sim / q_hot), Some(ratio_stderr(&r_i, &q_hot_i))),
        CycleMode::Refrigerator => {
            let neg_r: Vec<f64> = r_i.iter().map(|v| -v).collect();
            (Some(q_cold / -r_sim), Some(ratio_stderr(&q_cold_i, &neg_r)))
        }
        CycleMode::Degenerate => (None, None),
    };
    let analytic_eff = analytic.eta.or(analytic.zeta);
    let r_control_variate = analytic.r - work_excess;
    let relaxation_converged = holds.iter().all(|h| h.converged);
    let peak = |f: fn(&Snapshot<f64>) -> Option<f64>| {
        series.iter().filter_map(f).fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))))
    };
    let summary = CycleSummary {
        cycles_run: config.cycles,
        energy_start: e_start,
        energy_a: e_a,
        energy_b: e_b,
        energy_c: e_c,
        energy_d: e_d,
        r1_sim: e_a - e_b,
        r2_sim: e_c - e_d,
        r_sim,
        r_stderr,
        q_hot,
        q_cold,
        mode_sim,
        efficiency,
        efficiency_stderr,
        work_excess,
        work_excess_stderr,
        r_control_variate,
        r_rel_gap: (r_sim - analytic.r).abs() / analytic.r.abs(),
        r_cv_gap: (r_control_variate - analytic.r).abs(),
        efficiency_gap: efficiency.zip(analytic_eff).map(|(s, a)| s - a),
        first_law_residual: (q_hot + q_cold - r_sim) - (e_d - e_start),
        max_squeezing,
        peak_energy_entropy: peak(|s| s.energy_entropy),
        peak_quasiclassical_entropy: peak(|s| s.quasiclassical_entropy),
        holds,
        relaxation_converged,
    };
    Ok((series, summary))
}

fn quench(config: &ExperimentConfig, execution: Execution) -> Result<(Vec<Snapshot<f64>>, QuenchSummary)> {
    let (wc, wh) = (config.omega_c, config.omega_h);
    let x = wc / config.t_c;
    let (_, kappa) = nu_kappa(wc, config.t_c);
    let s_expected = wh / wc;

    let mut ens = thermal_ensemble(config, execution)?;
    let mut series = Vec::new();
    let before = ens.clone();
    run_segment(&mut ens, Segment::Jump { omega_new: wh }, config, &mut series)?;
    let after = ens.clone();
    // Free evolution afterwards shows the rotating, constant-s state.
    run_segment(
        &mut ens,
        Segment::Hold {
            omega: wh,
            duration: config.hold_duration,
            bath: None,
        },
        config,
        &mut series,
    )?;

    let snap_before = series[0];
    let snap_after = series[1];
    let gaussian_se = |e: &Ensemble<f64>| -> Result<f64> {
        Ok(energy_entropy(&populations_gaussian_moments(e, config.n_max)?))
    };
    let projection_se = |e: &Ensemble<f64>| -> Result<f64> {
        Ok(energy_entropy(&populations_from_ensemble(e, config.n_max)?))
    };
    let s_e_before = gaussian_se(&before)?;
    let s_e_after = gaussian_se(&after)?;
    let exact = populations_squeezed_thermal_exact(kappa, s_expected, config.n_max, PopulationMethod::ThetaQuadrature)?;
    let s_e_jump_exact = energy_entropy(&exact) - energy_entropy(&populations_equilibrium(x, config.n_max)?);
    let (delta_e, delta_s_e) = squeezing_deltas(x, s_expected)?;
    let summary = QuenchSummary {
        s_expected,
        s_measured: snap_after.squeezing_s,
        s_rel_error: (snap_after.squeezing_s - s_expected).abs() / s_expected,
        energy_before: snap_before.energy,
        energy_after: snap_after.energy,
        n_mean_before: snap_before.mean_occupation,
        n_mean_after: snap_after.mean_occupation,
        s_e_before,
        s_e_after,
        s_e_jump: s_e_after - s_e_before,
        s_e_projection_before: projection_se(&before)?,
        s_e_projection_after: projection_se(&after)?,
        s_e_jump_exact,
        delta_s_e,
        delta_e,
    };
    Ok((series, summary))
}

/// `S_E(s)` from exact and approximate populations at `x = ω/T`, plus the
/// inefficiency deltas.
pub fn sweep(x: f64) -> Result<Vec<SweepRow>> {
    let kappa = (x / 2.0).tanh();
    let n_max = ((60.0 / x).ceil() as usize).max(crate::entropy::DEFAULT_N_MAX);
    SWEEP_S
        .iter()
        .map(|&s| {
            let exact = populations_squeezed_thermal_exact(kappa, s, n_max, PopulationMethod::ThetaQuadrature)?;
            let approx = populations_squeezed_thermal_approx(x, s, n_max)?;
            let (delta_e, delta_s_e) = squeezing_deltas(x, s)?;
            Ok(SweepRow {
                s,
                s_e_exact: energy_entropy(&exact),
                s_e_approx: energy_entropy(&approx),
                approx_total: approx.total(),
                delta_e,
                delta_s_e,
            })
        })
        .collect()
}
