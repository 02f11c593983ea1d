//! Frequency noise: realizations, the adiabatic angle-error functional,
//! filter weights and the power-spectrum estimate of the average
//! infidelity.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fidelity::GateEvaluator;
use crate::fock::{FockSpace, KerrCatParams};
use crate::linalg::C64;
use crate::propagator::DetuningError;
use crate::pulse::{trapezoid, GapTrace, PulseSchedule};
use crate::table::Table;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseKind {
    /// Fixed shift.
    Static { value: f64 },
    /// Constant shift drawn from `N(0, σ²)` per realization.
    Quasistatic { sigma: f64 },
    /// Ornstein–Uhlenbeck process, `⟨Δ(t)Δ(0)⟩ = σ² e^{−|t|/τ_c}`.
    OrnsteinUhlenbeck { sigma: f64, tau_c: f64 },
    /// Two-sided spectral density sampled at non-negative frequencies.
    Tabulated { omegas: Vec<f64>, psd: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    #[serde(flatten)]
    pub kind: NoiseKind,
    pub seed: u64,
}

impl NoiseModel {
    pub fn new(kind: NoiseKind, seed: u64) -> Result<Self> {
        let model = Self { kind, seed };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidNoiseModel(msg));
        match &self.kind {
            NoiseKind::Static { value } if !value.is_finite() => bad(format!("static shift {value}")),
            NoiseKind::Quasistatic { sigma } if !(*sigma >= 0.0) => bad(format!("sigma {sigma}")),
            NoiseKind::OrnsteinUhlenbeck { sigma, tau_c } if !(*sigma >= 0.0 && *tau_c > 0.0) => {
                bad(format!("sigma {sigma}, correlation time {tau_c}"))
            }
            NoiseKind::Tabulated { omegas, psd } => {
                if omegas.len() != psd.len() || omegas.len() < 2 {
                    return bad("tabulated spectrum needs >= 2 matching points".into());
                }
                if omegas[0] < 0.0 || omegas.windows(2).any(|w| w[1] <= w[0]) {
                    return bad("tabulated frequencies must be non-negative and increasing".into());
                }
                if let Some(v) = psd.iter().find(|v| !(**v >= 0.0)) {
                    return bad(format!("spectral density {v} is not realizable"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Variance of the shift.
    pub fn variance(&self) -> f64 {
        match &self.kind {
            NoiseKind::Static { value } => value * value,
            NoiseKind::Quasistatic { sigma } | NoiseKind::OrnsteinUhlenbeck { sigma, .. } => sigma * sigma,
            NoiseKind::Tabulated { omegas, psd } => trapezoid(omegas, psd) / PI,
        }
    }

    /// Two-sided density `S(ω)`; `None` for the zero-frequency kinds.
    pub fn psd(&self, omega: f64) -> Option<f64> {
        let w = omega.abs();
        match &self.kind {
            NoiseKind::Static { .. } | NoiseKind::Quasistatic { .. } => None,
            NoiseKind::OrnsteinUhlenbeck { sigma, tau_c } => {
                Some(2.0 * sigma * sigma * tau_c / (1.0 + w * w * tau_c * tau_c))
            }
            NoiseKind::Tabulated { omegas, psd } => {
                if w >= *omegas.last().unwrap() {
                    return Some(0.0);
                }
                let k = omegas.partition_point(|&o| o <= w).max(1) - 1;
                let s = ((w - omegas[k]) / (omegas[k + 1] - omegas[k])).clamp(0.0, 1.0);
                Some(psd[k] * (1.0 - s) + psd[k + 1] * s)
            }
        }
    }
}

/// One realization on `n` samples spaced by `dt`, from stream `index` of
/// the model's seed.
pub fn sample_noise(model: &NoiseModel, n: usize, dt: f64, index: u64) -> Result<Vec<f64>> {
    model.validate()?;
    if n == 0 || !(dt > 0.0) {
        return Err(Error::InvalidInput(format!("need samples and positive spacing, got {n}, {dt}")));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(model.seed);
    rng.set_stream(index);
    let mut normal = || -> f64 { rng.sample(StandardNormal) };
    Ok(match &model.kind {
        NoiseKind::Static { value } => vec![*value; n],
        NoiseKind::Quasistatic { sigma } => vec![sigma * normal(); n],
        NoiseKind::OrnsteinUhlenbeck { sigma, tau_c } => {
            let rho = (-dt / tau_c).exp();
            let kick = sigma * (-(-2.0 * dt / tau_c).exp_m1()).sqrt();
            let mut x = sigma * normal();
            let mut out = Vec::with_capacity(n);
            out.push(x);
            for _ in 1..n {
                x = rho * x + kick * normal();
                out.push(x);
            }
            out
        }
        NoiseKind::Tabulated { omegas, psd } => {
            // Random-phase superposition on the tabulated grid; its
            // autocorrelation is (1/π)∫ S(ω) cos(ωτ) dω in trapezoid form.
            let m = omegas.len();
            let comps: Vec<(f64, f64, f64)> = (0..m)
                .map(|k| {
                    let lo = if k == 0 { omegas[0] } else { 0.5 * (omegas[k - 1] + omegas[k]) };
                    let hi = if k + 1 == m { omegas[k] } else { 0.5 * (omegas[k] + omegas[k + 1]) };
                    let amp = (psd[k] * (hi - lo) / PI).sqrt();
                    (amp * normal(), amp * normal(), omegas[k])
                })
                .collect();
            (0..n)
                .map(|i| {
                    let t = i as f64 * dt;
                    comps.iter().map(|(a, b, w)| a * (w * t).cos() + b * (w * t).sin()).sum()
                })
                .collect()
        }
    })
}

/// `θ̃ = −∫ Δ(t) ∂δE₀₁(t) dt` on the trace grid.
pub fn angle_error_functional(trace: &GapTrace, shift: &DetuningError) -> f64 {
    let integrand: Vec<f64> = trace.times.iter().zip(&trace.gap_deriv).map(|(&t, &d)| shift.at(t) * d).collect();
    -trapezoid(&trace.times, &integrand)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterFunction {
    pub omegas: Vec<f64>,
    pub weights: Vec<f64>,
}

impl FilterFunction {
    pub fn table(&self) -> Table {
        let mut t = Table::new(&["omega", "W"]);
        for (o, w) in self.omegas.iter().zip(&self.weights) {
            t.push_f64(&[*o, *w]);
        }
        t
    }

    pub fn max_weight(&self) -> f64 {
        self.weights.iter().fold(0.0, |m, v| m.max(*v))
    }
}

/// `∫₀¹ e^{iθu} du` and `∫₀¹ u e^{iθu} du`.
fn linear_moments(theta: f64) -> (C64, C64) {
    if theta.abs() < 1e-3 {
        let t2 = theta * theta;
        return (
            C64::new(1.0 - t2 / 6.0, theta / 2.0 - theta * t2 / 24.0),
            C64::new(0.5 - t2 / 8.0, theta / 3.0 - theta * t2 / 30.0),
        );
    }
    let e = C64::new(0.0, theta).exp();
    let i_theta = C64::new(0.0, theta);
    ((e - 1.0) / i_theta, e / i_theta + (e - 1.0) / (theta * theta))
}

/// `∫ e^{iωt} g(t) dt` of the piecewise-linear interpolant of `g`.
pub fn fourier_piecewise_linear(times: &[f64], values: &[f64], omega: f64) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for (t, g) in times.windows(2).zip(values.windows(2)) {
        let h = t[1] - t[0];
        let (m0, m1) = linear_moments(omega * h);
        let local = (m0 - m1) * g[0] + m1 * g[1];
        acc += C64::new(0.0, omega * t[0]).exp() * local * h;
    }
    acc
}

/// `W(ω) = |∫ e^{iωt} ∂δE₀₁(t) dt|² / 4`.
pub fn filter_weight(trace: &GapTrace, omegas: &[f64]) -> FilterFunction {
    let weights = omegas
        .par_iter()
        .map(|&w| 0.25 * fourier_piecewise_linear(&trace.times, &trace.gap_deriv, w).norm_sqr())
        .collect();
    FilterFunction { omegas: omegas.to_vec(), weights }
}

/// Points on the log grid, in addition to `ω = 0`.
pub const LOG_GRID_POINTS: usize = 512;

/// `ω = 0` followed by log-spaced points over `[10⁻³/T, 10³/T]`.
pub fn frequency_grid(duration: f64) -> Vec<f64> {
    let (lo, hi) = ((1e-3 / duration).ln(), (1e3 / duration).ln());
    std::iter::once(0.0)
        .chain((0..LOG_GRID_POINTS).map(|k| (lo + (hi - lo) * k as f64 / (LOG_GRID_POINTS - 1) as f64).exp()))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralEstimate {
    pub infidelity: f64,
    /// Estimated share of the integral beyond the last grid frequency.
    pub tail_fraction: f64,
    pub coverage_warning: bool,
}

/// `∫ dω/2π S(ω) W(ω)` on the non-negative grid (both factors are even);
/// static and quasistatic kinds give `⟨Δ²⟩ W(0)`.
pub fn spectral_average_infidelity(filter: &FilterFunction, model: &NoiseModel) -> Result<SpectralEstimate> {
    model.validate()?;
    let omegas = &filter.omegas;
    if omegas.first() != Some(&0.0) {
        return Err(Error::InvalidInput("frequency grid must start at 0".into()));
    }
    if model.psd(0.0).is_none() {
        return Ok(SpectralEstimate {
            infidelity: model.variance() * filter.weights[0],
            tail_fraction: 0.0,
            coverage_warning: false,
        });
    }
    let product: Vec<f64> =
        omegas.iter().zip(&filter.weights).map(|(&w, &f)| model.psd(w).unwrap_or(0.0) * f).collect();
    let value = trapezoid(omegas, &product) / PI;
    // Both factors decay at least like ω⁻²; the remainder is at most ω·S·W.
    let last = omegas.len() - 1;
    let tail = omegas[last] * product[last] / PI;
    let tail_fraction = if value > 0.0 { tail / (value + tail) } else { 0.0 };
    Ok(SpectralEstimate { infidelity: value + tail, tail_fraction, coverage_warning: tail_fraction > 0.01 })
}

/// Monte-Carlo infidelity from full propagation under noise realizations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloResult {
    pub traces: Vec<f64>,
    pub mean: f64,
    pub std_error: f64,
}

pub fn monte_carlo_infidelity(
    evaluator: &GateEvaluator,
    schedule: &PulseSchedule,
    model: &NoiseModel,
    realizations: usize,
) -> Result<MonteCarloResult> {
    if realizations < 2 {
        return Err(Error::InvalidInput("need at least two realizations".into()));
    }
    let n = schedule.n_samples();
    let dt = schedule.duration / (n - 1) as f64;
    let traces: Vec<f64> = (0..realizations as u64)
        .into_par_iter()
        .map(|k| {
            let values = sample_noise(model, n, dt, k)?;
            evaluator.infidelity(schedule, &DetuningError::Trace { dt, values })
        })
        .collect::<Result<_>>()?;
    let mean = traces.iter().sum::<f64>() / realizations as f64;
    let var = traces.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (realizations - 1) as f64;
    Ok(MonteCarloResult { mean, std_error: (var / realizations as f64).sqrt(), traces })
}

/// Second-order Taylor coefficient of the static `𝓘(Δ)` from a symmetric
/// difference with step `h`.
pub fn static_quadratic_coefficient(evaluator: &GateEvaluator, schedule: &PulseSchedule, h: f64) -> Result<f64> {
    let values: Vec<f64> = [-h, 0.0, h]
        .par_iter()
        .map(|&d| evaluator.infidelity(schedule, &d.into()))
        .collect::<Result<_>>()?;
    Ok((values[0] + values[2] - 2.0 * values[1]) / (2.0 * h * h))
}

/// Gap-derivative trace of a Z-type schedule.
pub fn gap_trace(schedule: &PulseSchedule, params: &KerrCatParams, space: FockSpace) -> Result<GapTrace> {
    if !schedule.scheme.is_z_type() {
        return Err(Error::InvalidInput(format!("noise analysis needs a Z-type schedule, got {:?}", schedule.scheme)));
    }
    GapTrace::compute(schedule, params, space)
}

/// Spectral density on a grid, for export.
pub fn psd_table(model: &NoiseModel, omegas: &[f64]) -> Table {
    let mut t = Table::new(&["omega", "S"]);
    for &w in omegas {
        t.push_f64(&[w, model.psd(w).unwrap_or(f64::NAN)]);
    }
    t
}
