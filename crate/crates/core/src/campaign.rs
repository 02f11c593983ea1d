//! Per-scheme optimization problems: each maps a short parameter vector to
//! a schedule and hands it to the grid search.
//!
//! Amplitudes are searched as multiplicative factors around analytic seeds
//! rather than over raw bounds. The grid then resolves the rotation angle
//! to well below the infidelity levels of interest.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fidelity::{simpson_average, GateEvaluator, InfidelityGrid, DEFAULT_DELTA_MAX, DEFAULT_NODES};
use crate::fock::{FockSpace, KerrCatParams};
use crate::optimizer::{grid_optimize, Optimized, ParamAxis, ParamSpace};
use crate::propagator::PropagationOptions;
use crate::pulse::{
    gaussian_shape, ramp_up, scheme_kerr_gate, scheme_x, scheme_y_drag, scheme_z_robustline, scheme_z_straight,
    x_amplitude_seed, y_amplitude_seed, DragMode, PulseSchedule,
};
use crate::spectral::{RobustLineCache, SectorSpectrum};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CampaignOptions {
    pub delta_max: f64,
    pub nodes: usize,
    pub samples: usize,
    pub propagation: PropagationOptions,
    pub coarse_n: usize,
    pub refine_rounds: usize,
}

impl Default for CampaignOptions {
    fn default() -> Self {
        Self {
            delta_max: DEFAULT_DELTA_MAX,
            nodes: DEFAULT_NODES,
            samples: 2000,
            propagation: PropagationOptions::fixed(1000),
            coarse_n: 21,
            refine_rounds: 2,
        }
    }
}

/// Cat sizes below this have no usable robust line.
pub const ROBUST_LINE_FLOOR: f64 = 0.1;

/// Optimization context for one cat size.
pub struct Campaign {
    params: KerrCatParams,
    space: FockSpace,
    options: CampaignOptions,
    evaluator: GateEvaluator,
}

impl Campaign {
    pub fn new(alpha2: f64, space: FockSpace, options: CampaignOptions) -> Result<Self> {
        let params = KerrCatParams::from_alpha2(alpha2)?;
        let evaluator = GateEvaluator::new(params, space, options.propagation)?;
        Ok(Self { params, space, options, evaluator })
    }

    pub fn params(&self) -> &KerrCatParams {
        &self.params
    }

    pub fn evaluator(&self) -> &GateEvaluator {
        &self.evaluator
    }

    fn grid(&self, axes: Vec<ParamAxis>) -> ParamSpace {
        ParamSpace::new(axes).with_grid(self.options.coarse_n, self.options.refine_rounds)
    }

    fn run<B>(&self, builder: B, space: &ParamSpace) -> Result<Optimized>
    where
        B: Fn(&[f64]) -> Result<PulseSchedule> + Sync,
    {
        let record = grid_optimize(&builder, space, &self.evaluator, self.options.delta_max, self.options.nodes)?;
        if !record.feasible {
            return Err(Error::Infeasible("no lattice point produced a valid schedule".into()));
        }
        let schedule = builder(&record.best_vector)?;
        let grid = self.evaluator.average_infidelity(&schedule, self.options.delta_max, self.options.nodes)?;
        Ok(Optimized { record, schedule, grid })
    }

    /// `X(π/2)`: amplitude factor around the projected-model seed.
    pub fn optimize_x(&self, duration: f64) -> Result<Optimized> {
        let seed = x_amplitude_seed(duration, self.params.alpha2());
        let n = self.options.samples;
        self.run(
            |p| scheme_x(duration, seed * p[0], n),
            &self.grid(vec![ParamAxis::new("amplitude_scale", 0.8, 1.2)]),
        )
    }

    /// `Y(π/2)` over the relative cat size `η = α²(T/2)/α²` and an
    /// amplitude factor. `amplitude_bound` marks stronger drives infeasible.
    pub fn optimize_y(&self, duration: f64, drag: DragMode, amplitude_bound: Option<f64>) -> Result<Optimized> {
        let a2 = self.params.alpha2();
        let kerr = self.params.kerr;
        let n = self.options.samples;
        let params = self.params;
        let space = self.space;
        let build = move |eta: f64, scale: f64| -> Result<PulseSchedule> {
            let ramp = (eta - 1.0) * a2 * kerr;
            let amp = scale * y_amplitude_seed(duration, a2, ramp, kerr);
            if let Some(bound) = amplitude_bound {
                if amp > bound {
                    return Err(Error::Infeasible(format!("drive {amp} exceeds bound {bound}")));
                }
            }
            scheme_y_drag(duration, amp, ramp, &params, drag, space, n)
        };
        let scale = ParamAxis::new("amplitude_scale", 0.7, 1.3);
        if a2 == 0.0 {
            // No cat to shrink.
            return self.run(|p| build(1.0, p[0]), &self.grid(vec![scale]));
        }
        self.run(|p| build(p[0], p[1]), &self.grid(vec![ParamAxis::new("eta", 0.0, 1.0), scale]))
    }

    /// `Z(−π/2)` along the robust line over the ramp fraction `τ/T` and an
    /// angle factor. The dip depth is solved from the adiabatic angle.
    pub fn optimize_z_robust(&self, duration: f64, cache: &RobustLineCache) -> Result<Optimized> {
        let model = RobustAngleModel::new(&self.params, cache)?;
        let n = self.options.samples;
        let params = self.params;
        self.run(
            |p| {
                let tau = p[0] * duration;
                let ramp = model.solve_dip(duration, tau, p[1] * PI / 2.0)?;
                scheme_z_robustline(duration, tau, ramp, &params, cache, n)
            },
            &self.grid(vec![ParamAxis::new("tau_fraction", 0.05, 0.45), ParamAxis::new("angle_scale", 0.95, 1.05)]),
        )
    }

    /// `Z(−π/2)` along a straight line. Only the dip depth is searched, in
    /// a box around the seed; the detuning amplitude is re-solved at every
    /// point so the first-order coefficient stays zero.
    pub fn optimize_z_straight(&self, duration: f64) -> Result<Optimized> {
        let seed = straight_line_seed(&self.params, self.space, duration)?;
        let n = self.options.samples;
        let params = self.params;
        let space = self.space;
        let width = 0.03 * seed.eps2_ramp0.abs();
        let mut e = ParamAxis::new("eps2_ramp0", seed.eps2_ramp0 - width, seed.eps2_ramp0 + width);
        e.hi = e.hi.min(0.0);
        e.lo = e.lo.max(-params.eps2_0);
        self.run(
            |p| {
                let delta_max = zero_first_order_detuning(&params, space, p[0])?
                    .ok_or_else(|| Error::Infeasible(format!("no zero first-order detuning for dip {}", p[0])))?;
                scheme_z_straight(duration, delta_max, p[0], &params, n)
            },
            &self.grid(vec![e]),
        )
    }

    /// Kerr-gate baseline (nothing to optimize).
    pub fn kerr_gate(&self) -> Result<(PulseSchedule, InfidelityGrid)> {
        let schedule = scheme_kerr_gate(&self.params, self.options.samples);
        let grid = self.evaluator.average_infidelity(&schedule, self.options.delta_max, self.options.nodes)?;
        Ok((schedule, grid))
    }
}

/// Adiabatic angle of the robust-line scheme from tabulated gaps:
/// `|θ₀| = 2τ·R + (T − 2τ)∫₀¹ E_rob(α² + ε̃₂₀ f(u)) du`, with `R` the mean
/// gap along the detuning ramp.
pub struct RobustAngleModel<'a> {
    alpha2: f64,
    kerr: f64,
    ramp_mean_gap: f64,
    cache: &'a RobustLineCache,
}

impl<'a> RobustAngleModel<'a> {
    pub fn new(params: &KerrCatParams, cache: &'a RobustLineCache) -> Result<Self> {
        let a2 = params.alpha2();
        let d_end = cache.delta_at(a2)?;
        let gaps: Vec<f64> = (0..=64)
            .map(|i| {
                let s = i as f64 / 64.0;
                SectorSpectrum::compute(params.kerr, params.delta + d_end * ramp_up(s), params.eps2_0, cache.space())
                    .map(|sp| sp.gap())
            })
            .collect::<Result<_>>()?;
        let ramp_mean_gap = simpson_average(&gaps)?;
        Ok(Self { alpha2: a2, kerr: params.kerr, ramp_mean_gap, cache })
    }

    /// `|θ₀|` for a given ramp time and dip depth.
    pub fn angle(&self, duration: f64, tau: f64, eps2_ramp0: f64) -> Result<f64> {
        let middle: Vec<f64> = (0..=200)
            .map(|i| self.cache.gap_at(self.alpha2 + eps2_ramp0 * gaussian_shape(i as f64 / 200.0) / self.kerr))
            .collect::<Result<_>>()?;
        let middle = simpson_average(&middle)?;
        Ok(2.0 * tau * self.ramp_mean_gap + (duration - 2.0 * tau) * middle)
    }

    /// Dip depth giving `|θ₀| = target` within the first winding.
    pub fn solve_dip(&self, duration: f64, tau: f64, target: f64) -> Result<f64> {
        let floor = self.cache.domain().0.max(ROBUST_LINE_FLOOR);
        let deepest = -(self.alpha2 - floor) * self.kerr;
        if deepest >= 0.0 {
            return Err(Error::Infeasible(format!("cat size {} at the robust-line floor", self.alpha2)));
        }
        let f = |e: f64| self.angle(duration, tau, e).map(|a| a - target);
        let (f_shallow, f_deep) = (f(0.0)?, f(deepest)?);
        if f_shallow > 0.0 {
            return Err(Error::Infeasible(format!(
                "undipped trajectory already accrues {:.4} rad > {target:.4}",
                f_shallow + target
            )));
        }
        if f_deep < 0.0 {
            return Err(Error::Infeasible("deepest dip cannot reach the target angle".into()));
        }
        let (mut lo, mut hi) = (deepest, 0.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if f(mid)? > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// Straight-line endpoint zeroing `∫∂δE₀₁ dt` with `−∫E₀₁ dt = −π/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StraightSeed {
    pub delta_max: f64,
    pub eps2_ramp0: f64,
}

/// `(∫₀¹ E₀₁ du, ∫₀¹ ∂δE₀₁ du)` along `f(u)·(δ_max, ε̃₂₀)`.
pub fn straight_line_integrals(
    params: &KerrCatParams,
    space: FockSpace,
    delta_max: f64,
    eps2_ramp0: f64,
) -> Result<(f64, f64)> {
    let n = 64;
    let mut gaps = Vec::with_capacity(n + 1);
    let mut derivs = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let f = gaussian_shape(i as f64 / n as f64);
        let s = SectorSpectrum::compute(params.kerr, params.delta + f * delta_max, params.eps2_0 + f * eps2_ramp0, space)?;
        gaps.push(s.gap());
        derivs.push(s.gap_derivative_raw());
    }
    Ok((simpson_average(&gaps)?, simpson_average(&derivs)?))
}

fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> Result<f64>, iters: usize) -> Result<f64> {
    let f_lo = f(lo)?;
    for _ in 0..iters {
        let mid = 0.5 * (lo + hi);
        if (f(mid)? > 0.0) == (f_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// For a dip to `α'² = α² + ε̃₂₀/K`, the largest detuning with a zero
/// first-order coefficient, or `None` when none exists up to `δ = K`.
fn zero_first_order_detuning(params: &KerrCatParams, space: FockSpace, ramp: f64) -> Result<Option<f64>> {
    let g = |d: f64| straight_line_integrals(params, space, d, ramp).map(|v| v.1);
    let steps = 40;
    let top = params.kerr;
    let mut prev = (0.0, g(0.0)?);
    for i in 1..=steps {
        let d = top * i as f64 / steps as f64;
        let v = g(d)?;
        if prev.1 > 0.0 && v <= 0.0 {
            return bisect(prev.0, d, g, 40).map(Some);
        }
        prev = (d, v);
    }
    Ok(None)
}

pub fn straight_line_seed(params: &KerrCatParams, space: FockSpace, duration: f64) -> Result<StraightSeed> {
    let a2 = params.alpha2();
    let target = PI / 2.0 / duration;
    // Mean gap at the zero-coefficient detuning for a given dip depth.
    let mean_gap = |ramp: f64| -> Result<Option<(f64, f64)>> {
        match zero_first_order_detuning(params, space, ramp)? {
            Some(d) => Ok(Some((d, straight_line_integrals(params, space, d, ramp)?.0))),
            None => Ok(None),
        }
    };
    // Deeper dips raise the gap; scan from shallow to deep for a bracket.
    let steps = 20;
    let mut prev: Option<(f64, f64)> = None;
    for i in 1..=steps {
        let ramp = -a2 * params.kerr * i as f64 / steps as f64 * 0.95;
        let Some((_, gap)) = mean_gap(ramp)? else { continue };
        if let Some((r0, g0)) = prev {
            if (g0 - target) * (gap - target) <= 0.0 {
                let h = |r: f64| -> Result<f64> {
                    Ok(mean_gap(r)?.map(|v| v.1 - target).unwrap_or(f64::NAN))
                };
                let ramp = bisect(r0, ramp, h, 40)?;
                let (delta_max, _) = mean_gap(ramp)?.ok_or_else(|| Error::Infeasible("straight-line seed lost".into()))?;
                return Ok(StraightSeed { delta_max, eps2_ramp0: ramp });
            }
        }
        prev = Some((ramp, gap));
    }
    Err(Error::Infeasible(format!(
        "no straight line at cat size {a2} reaches the target angle with zero first-order coefficient in T = {duration}"
    )))
}
