//! Control schedules: envelopes and the single-qubit gate schemes.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::cat::matrix_elements;
use crate::error::{Error, Result};
use crate::fock::{ChannelValues, FockSpace, KerrCatParams};
use crate::interp::UniformCubic;
use crate::linalg::{pauli, CMatrix};
use crate::spectral::{RobustLineCache, SectorSpectrum};
use crate::table::{fmt_f64, Table};

/// Samples per schedule unless requested otherwise.
pub const DEFAULT_SAMPLES: usize = 2000;

const GAUSS_FLOOR: f64 = 0.882_496_902_584_595_4; // e^{-1/8}

/// Truncated Gaussian with `σ = T`, squared: zero with zero slope at both
/// ends, unity at `T/2`. Argument is the reduced time `u = t/T`.
pub fn gaussian_shape(u: f64) -> f64 {
    let x = u - 0.5;
    let g = ((-0.5 * x * x).exp() - GAUSS_FLOOR) / (1.0 - GAUSS_FLOOR);
    g * g
}

/// `d/du` of [`gaussian_shape`].
pub fn gaussian_shape_deriv(u: f64) -> f64 {
    let x = u - 0.5;
    let e = (-0.5 * x * x).exp();
    let g = (e - GAUSS_FLOOR) / (1.0 - GAUSS_FLOOR);
    2.0 * g * (-x * e / (1.0 - GAUSS_FLOOR))
}

/// `∫₀¹ f(u) du` of the truncated Gaussian.
pub fn gaussian_shape_integral() -> f64 {
    // The shape is smooth; 64-panel Simpson is accurate far beyond 1e-14.
    simpson(gaussian_shape, 0.0, 1.0, 64)
}

pub(crate) fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let n = panels * 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

pub fn truncated_gaussian(duration: f64, t: f64) -> Result<f64> {
    if !(duration > 0.0) {
        return Err(Error::InvalidInput(format!("pulse duration must be positive, got {duration}")));
    }
    if !(0.0..=duration).contains(&t) {
        return Err(Error::InvalidInput(format!("time {t} outside [0, {duration}]")));
    }
    Ok(gaussian_shape(t / duration))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeKind {
    FullPulse,
    RampUp,
    RampDown,
    Constant,
    Composite,
}

/// Uniformly sampled control waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub kind: EnvelopeKind,
    samples: UniformCubic,
}

impl Envelope {
    pub fn from_fn(duration: f64, n: usize, kind: EnvelopeKind, f: impl Fn(f64) -> f64) -> Self {
        let step = duration / (n - 1) as f64;
        let values = (0..n).map(|k| f(k as f64 * step)).collect();
        Self { kind, samples: UniformCubic::new(duration, values) }
    }

    pub fn from_samples(duration: f64, kind: EnvelopeKind, values: Vec<f64>) -> Self {
        Self { kind, samples: UniformCubic::new(duration, values) }
    }

    pub fn duration(&self) -> f64 {
        self.samples.duration()
    }

    pub fn values(&self) -> &[f64] {
        self.samples.values()
    }

    pub fn times(&self) -> Vec<f64> {
        let step = self.samples.step();
        (0..self.values().len()).map(|k| k as f64 * step).collect()
    }

    pub fn at(&self, t: f64) -> f64 {
        self.samples.eval(t)
    }

    pub fn max_abs(&self) -> f64 {
        self.values().iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleChannel {
    Delta,
    Eps2Mod,
    EpsX,
    EpsY,
    Coupling,
}

impl ScheduleChannel {
    pub const ALL: [ScheduleChannel; 5] = [
        ScheduleChannel::Delta,
        ScheduleChannel::Eps2Mod,
        ScheduleChannel::EpsX,
        ScheduleChannel::EpsY,
        ScheduleChannel::Coupling,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ScheduleChannel::Delta => "delta",
            ScheduleChannel::Eps2Mod => "eps2_mod",
            ScheduleChannel::EpsX => "eps_x",
            ScheduleChannel::EpsY => "eps_y",
            ScheduleChannel::Coupling => "g",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SchemeTag {
    X,
    YDrag,
    ZRobustline,
    ZStraight,
    KerrGate,
    XxEcho,
    Idle,
}

impl SchemeTag {
    /// Schemes without single-photon drives, for which the adiabatic
    /// gap-integral model applies and parity is conserved.
    pub fn is_z_type(&self) -> bool {
        matches!(self, SchemeTag::ZRobustline | SchemeTag::ZStraight | SchemeTag::KerrGate | SchemeTag::Idle)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DragMode {
    Exact,
    Approx,
    Off,
}

/// Time-sampled controls plus target-gate metadata.
#[derive(Debug, Clone)]
pub struct PulseSchedule {
    pub duration: f64,
    pub channels: BTreeMap<ScheduleChannel, Envelope>,
    pub target: CMatrix,
    pub params: BTreeMap<String, f64>,
    pub scheme: SchemeTag,
}

impl PulseSchedule {
    pub fn new(duration: f64, scheme: SchemeTag, target: CMatrix) -> Self {
        Self {
            duration,
            channels: BTreeMap::new(),
            target,
            params: BTreeMap::new(),
            scheme,
        }
    }

    /// All channels zero: free evolution under the drift for `duration`.
    pub fn idle(duration: f64) -> Self {
        Self::new(duration, SchemeTag::Idle, pauli::id())
    }

    pub fn with(mut self, channel: ScheduleChannel, env: Envelope) -> Self {
        self.channels.insert(channel, env);
        self
    }

    pub fn param(mut self, name: &str, value: f64) -> Self {
        self.params.insert(name.to_string(), value);
        self
    }

    pub fn channel_at(&self, channel: ScheduleChannel, t: f64) -> f64 {
        self.channels.get(&channel).map_or(0.0, |e| e.at(t))
    }

    /// Single-mode channel values at `t` (detuning excludes the base `δ`).
    pub fn values_at(&self, t: f64) -> ChannelValues {
        ChannelValues {
            detuning: self.channel_at(ScheduleChannel::Delta, t),
            eps2_mod: self.channel_at(ScheduleChannel::Eps2Mod, t),
            eps_x: self.channel_at(ScheduleChannel::EpsX, t),
            eps_y: self.channel_at(ScheduleChannel::EpsY, t),
        }
    }

    pub fn has_single_photon_drive(&self) -> bool {
        [ScheduleChannel::EpsX, ScheduleChannel::EpsY]
            .iter()
            .any(|c| self.channels.get(c).is_some_and(|e| e.max_abs() > 0.0))
    }

    /// Number of samples of the shared grid (the default if there are no channels).
    pub fn n_samples(&self) -> usize {
        self.channels.values().next().map_or(DEFAULT_SAMPLES, |e| e.values().len())
    }

    pub fn sample_times(&self) -> Vec<f64> {
        let n = self.n_samples();
        (0..n).map(|k| self.duration * k as f64 / (n - 1) as f64).collect()
    }

    /// `(δ, α²)` along the sample grid.
    pub fn trajectory(&self, params: &KerrCatParams) -> Vec<TrajectoryPoint> {
        self.sample_times()
            .into_iter()
            .map(|t| {
                let v = self.values_at(t);
                TrajectoryPoint {
                    delta: params.delta + v.detuning,
                    alpha2: (params.eps2_0 + v.eps2_mod) / params.kerr,
                }
            })
            .collect()
    }

    /// Flat table with columns `t, delta, eps2_mod, eps_x, eps_y, g`.
    pub fn table(&self) -> Table {
        let mut header = vec!["t"];
        header.extend(ScheduleChannel::ALL.iter().map(|c| c.name()));
        let mut table = Table::new(&header);
        for t in self.sample_times() {
            let mut row = vec![fmt_f64(t)];
            row.extend(ScheduleChannel::ALL.iter().map(|c| fmt_f64(self.channel_at(*c, t))));
            table.push(row);
        }
        table
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub delta: f64,
    pub alpha2: f64,
}

/// `exp(−iθσ/2)` for `σ ∈ {X, Y, Z}`.
pub fn rotation_target(axis: char, theta: f64) -> CMatrix {
    let sigma = match axis {
        'X' | 'x' => pauli::x(),
        'Y' | 'y' => pauli::y(),
        _ => pauli::z(),
    };
    pauli::rotation(&sigma, theta)
}

fn check_duration(duration: f64) -> Result<()> {
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(Error::InvalidInput(format!("pulse duration must be positive, got {duration}")));
    }
    Ok(())
}

/// `X(π/2)` by a truncated-Gaussian in-phase drive.
pub fn scheme_x(duration: f64, eps_x0: f64, n_samples: usize) -> Result<PulseSchedule> {
    check_duration(duration)?;
    let env = Envelope::from_fn(duration, n_samples, EnvelopeKind::FullPulse, |t| {
        eps_x0 * gaussian_shape(t / duration)
    });
    Ok(PulseSchedule::new(duration, SchemeTag::X, rotation_target('X', PI / 2.0))
        .with(ScheduleChannel::EpsX, env)
        .param("eps_x0", eps_x0))
}

/// Drive amplitude giving a `π/2` rotation in the projected two-level model.
pub fn x_amplitude_seed(duration: f64, alpha2: f64) -> f64 {
    let (hx, _) = matrix_elements(alpha2.sqrt());
    (PI / 2.0) / (hx * duration * gaussian_shape_integral())
}

/// `Y(π/2)` amplitude for a given cat-size ramp from the projected model
/// `θ = ∫ ε_y h_y(α²(t)) dt`.
pub fn y_amplitude_seed(duration: f64, alpha2: f64, eps2_ramp0: f64, kerr: f64) -> f64 {
    let integral = simpson(
        |u| {
            let a2 = (alpha2 + eps2_ramp0 * gaussian_shape(u) / kerr).max(0.0);
            gaussian_shape(u) * matrix_elements(a2.sqrt()).1
        },
        0.0,
        1.0,
        200,
    );
    (PI / 2.0) / (duration * integral)
}

/// `Y(π/2)` with a cat-size dip and a single-photon correction on the
/// in-phase quadrature.
pub fn scheme_y_drag(
    duration: f64,
    eps_y0: f64,
    eps2_ramp0: f64,
    params: &KerrCatParams,
    drag: DragMode,
    space: FockSpace,
    n_samples: usize,
) -> Result<PulseSchedule> {
    check_duration(duration)?;
    if eps2_ramp0 > 0.0 {
        return Err(Error::InvalidRamp(format!("two-photon modulation must be <= 0, got {eps2_ramp0}")));
    }
    let min_alpha2 = (params.eps2_0 + eps2_ramp0) / params.kerr;
    if min_alpha2 < -1e-12 {
        return Err(Error::InvalidRamp(format!("cat size dips to {min_alpha2} < 0")));
    }
    let eps_y = Envelope::from_fn(duration, n_samples, EnvelopeKind::FullPulse, |t| {
        eps_y0 * gaussian_shape(t / duration)
    });
    let eps2 = Envelope::from_fn(duration, n_samples, EnvelopeKind::FullPulse, |t| {
        eps2_ramp0 * gaussian_shape(t / duration)
    });
    let mut schedule = PulseSchedule::new(duration, SchemeTag::YDrag, rotation_target('Y', PI / 2.0))
        .with(ScheduleChannel::EpsY, eps_y)
        .with(ScheduleChannel::Eps2Mod, eps2)
        .param("eps_y0", eps_y0)
        .param("eps2_ramp0", eps2_ramp0);
    let correction = match drag {
        DragMode::Off => None,
        DragMode::Exact => Some(drag_exact(duration, eps_y0, eps2_ramp0, params, space, DRAG_NODES)?.resample(n_samples)),
        DragMode::Approx => Some(drag_approx(duration, eps_y0, eps2_ramp0, params, space, n_samples)?),
    };
    if let Some(values) = correction {
        schedule = schedule.with(
            ScheduleChannel::EpsX,
            Envelope::from_samples(duration, EnvelopeKind::Composite, values),
        );
    }
    Ok(schedule)
}

/// Nodes at which the exact correction is evaluated before resampling.
pub const DRAG_NODES: usize = 401;

/// Exact correction sampled on its own uniform grid.
#[derive(Debug, Clone)]
pub struct DragProfile {
    pub duration: f64,
    pub eps_x: Vec<f64>,
    /// Smallest overlap between tracked eigenstates at adjacent nodes.
    pub min_overlap: f64,
}

impl DragProfile {
    pub fn resample(&self, n: usize) -> Vec<f64> {
        let c = UniformCubic::new(self.duration, self.eps_x.clone());
        (0..n).map(|k| c.eval(self.duration * k as f64 / (n - 1) as f64)).collect()
    }
}

/// Operators of the Y-scheme Hamiltonian in the basis rotated by
/// `D = diag(iⁿ)`, where `H_y` and the two-photon term are real and `H_x`
/// becomes `i·A` with `A` real antisymmetric.
struct RotatedOps {
    kerr_diag: Vec<f64>,
    two_photon: DMatrix<f64>,
    quadrature: DMatrix<f64>,
    in_phase: DMatrix<f64>,
}

impl RotatedOps {
    fn new(params: &KerrCatParams, space: FockSpace) -> Self {
        let dim = space.dim();
        let mut two_photon = DMatrix::zeros(dim, dim);
        let mut quadrature = DMatrix::zeros(dim, dim);
        let mut in_phase = DMatrix::zeros(dim, dim);
        for n in 1..dim {
            let s = (n as f64).sqrt();
            quadrature[(n - 1, n)] = s;
            quadrature[(n, n - 1)] = s;
            in_phase[(n - 1, n)] = s;
            in_phase[(n, n - 1)] = -s;
            if n >= 2 {
                let s2 = ((n * (n - 1)) as f64).sqrt();
                two_photon[(n - 2, n)] = -s2;
                two_photon[(n, n - 2)] = -s2;
            }
        }
        let kerr_diag = (0..dim)
            .map(|n| params.delta * n as f64 - 0.5 * params.kerr * (n * n.saturating_sub(1)) as f64)
            .collect();
        Self { kerr_diag, two_photon, quadrature, in_phase }
    }

    /// `H₀₂y` for total two-photon drive `eps2` and quadrature drive `eps_y`.
    fn hamiltonian(&self, eps2: f64, eps_y: f64) -> DMatrix<f64> {
        let mut h = &self.two_photon * (0.5 * eps2) + &self.quadrature * (0.5 * eps_y);
        for (n, d) in self.kerr_diag.iter().enumerate() {
            h[(n, n)] += d;
        }
        h
    }
}

fn bilinear(a: &nalgebra::DVector<f64>, m: &DMatrix<f64>, b: &nalgebra::DVector<f64>) -> f64 {
    a.dot(&(m * b))
}

/// Exact correction: instantaneous eigenstates of the Hamiltonian without
/// the correction, tracked by overlap from `|±i⟩` at `t = 0`.
pub fn drag_exact(
    duration: f64,
    eps_y0: f64,
    eps2_ramp0: f64,
    params: &KerrCatParams,
    space: FockSpace,
    nodes: usize,
) -> Result<DragProfile> {
    use nalgebra::{DVector, SymmetricEigen};
    let dim = space.dim();
    let ops = RotatedOps::new(params, space);
    let spec = SectorSpectrum::compute(params.kerr, params.delta, params.eps2_0, space)?;
    let (plus, minus) = (spec.even.state(0), spec.odd.state(0));
    // |±i⟩ = (|0⟩ ± i|1⟩)/√2, expressed in the rotated basis (real).
    let rotate = |sign: f64| -> DVector<f64> {
        DVector::from_fn(dim, |n, _| {
            let z = (plus[n] + minus[n] * crate::linalg::I * sign) * std::f64::consts::FRAC_1_SQRT_2;
            // Multiply by i^{-n}.
            let phase = match n % 4 {
                0 => crate::linalg::ONE,
                1 => -crate::linalg::I,
                2 => -crate::linalg::ONE,
                _ => crate::linalg::I,
            };
            (z * phase).re
        })
    };
    let mut psi0 = rotate(1.0);
    let mut psi1 = rotate(-1.0);
    let step = duration / (nodes - 1) as f64;
    let mut eps_x = vec![0.0; nodes];
    let mut min_overlap = 1.0f64;
    for k in 1..nodes - 1 {
        let t = k as f64 * step;
        let u = t / duration;
        let f = gaussian_shape(u);
        let fdot = gaussian_shape_deriv(u) / duration;
        let h = ops.hamiltonian(params.eps2_0 + eps2_ramp0 * f, eps_y0 * f);
        let eig = SymmetricEigen::try_new(h, f64::EPSILON, 0)
            .ok_or_else(|| Error::Eigen("Y-scheme Hamiltonian did not converge".into()))?;
        let pick = |prev: &DVector<f64>| -> (usize, f64) {
            let mut best = (0usize, 0.0f64);
            for j in 0..dim {
                let o = eig.eigenvectors.column(j).dot(prev);
                if o.abs() > best.1.abs() {
                    best = (j, o);
                }
            }
            best
        };
        let (j0, o0) = pick(&psi0);
        let (j1, o1) = pick(&psi1);
        min_overlap = min_overlap.min(o0.abs()).min(o1.abs());
        if o0.abs() < 0.9 || o1.abs() < 0.9 || j0 == j1 {
            return Err(Error::AdiabaticityLoss { t, overlap: o0.abs().min(o1.abs()) });
        }
        psi0 = eig.eigenvectors.column(j0) * o0.signum();
        psi1 = eig.eigenvectors.column(j1) * o1.signum();
        let gap = eig.eigenvalues[j0] - eig.eigenvalues[j1];
        let numerator = eps2_ramp0 * fdot * bilinear(&psi1, &ops.two_photon, &psi0)
            + eps_y0 * fdot * bilinear(&psi1, &ops.quadrature, &psi0);
        let coupling = bilinear(&psi1, &ops.in_phase, &psi0);
        let value = numerator / (gap * coupling);
        if !value.is_finite() {
            return Err(Error::IllConditioned(format!("correction undefined at t = {t}")));
        }
        eps_x[k] = value;
    }
    Ok(DragProfile { duration, eps_x, min_overlap })
}

/// Sign of the leading-order correction, fixed against the exact form.
const APPROX_DRAG_SIGN: f64 = -1.0;

/// First-order correction from the instantaneous excited levels:
/// `ε_x = (1/(4 h_y h_x)) (|h_y^{1→2}|²/E₂ − |h_y^{0→3}|²/E₃) ε̇_y`, with
/// `E₂, E₃` the gaps from the computational level to the first excited
/// even and odd states.
pub fn drag_approx(
    duration: f64,
    eps_y0: f64,
    eps2_ramp0: f64,
    params: &KerrCatParams,
    space: FockSpace,
    n: usize,
) -> Result<Vec<f64>> {
    let dim = space.dim();
    let mut hy = DMatrix::<f64>::zeros(dim, dim);
    for m in 1..dim {
        // |⟨m−1|H_y|m⟩| = √m; the phase drops out of the squared moduli.
        hy[(m - 1, m)] = (m as f64).sqrt();
        hy[(m, m - 1)] = -(m as f64).sqrt();
    }
    let mut out = vec![0.0; n];
    for (k, o) in out.iter_mut().enumerate() {
        let u = k as f64 / (n - 1) as f64;
        let fdot = gaussian_shape_deriv(u) / duration;
        if fdot == 0.0 {
            continue;
        }
        let eps2 = params.eps2_0 + eps2_ramp0 * gaussian_shape(u);
        let spec = SectorSpectrum::compute(params.kerr, params.delta, eps2, space)?;
        let (hx, hyc) = matrix_elements((eps2 / params.kerr).max(0.0).sqrt());
        let e0 = spec.even.states.column(0);
        let e2 = spec.even.states.column(1);
        let o1 = spec.odd.states.column(0);
        let o3 = spec.odd.states.column(1);
        let h12 = e2.dot(&(&hy * o1));
        let h03 = o3.dot(&(&hy * e0));
        let gap2 = spec.odd.energies[0] - spec.even.energies[1];
        let gap3 = spec.even.energies[0] - spec.odd.energies[1];
        *o = APPROX_DRAG_SIGN * (h12 * h12 / gap2 - h03 * h03 / gap3) * eps_y0 * fdot / (4.0 * hyc * hx);
    }
    Ok(out)
}

/// Ramp from 0 to 1 over `[0, 1]` built from the rising half of the
/// truncated Gaussian (zero slope at both ends).
pub fn ramp_up(s: f64) -> f64 {
    gaussian_shape(0.5 * s.clamp(0.0, 1.0))
}

/// `Z(−π/2)` by ramping onto the robust line, tracing it while the cat
/// shrinks and grows back, and ramping off.
pub fn scheme_z_robustline(
    duration: f64,
    tau: f64,
    eps2_ramp0: f64,
    params: &KerrCatParams,
    cache: &RobustLineCache,
    n_samples: usize,
) -> Result<PulseSchedule> {
    check_duration(duration)?;
    if !(tau > 0.0 && 2.0 * tau < duration) {
        return Err(Error::InvalidInput(format!("ramp time {tau} not in (0, T/2)")));
    }
    if eps2_ramp0 > 0.0 {
        return Err(Error::InvalidRamp(format!("two-photon modulation must be <= 0, got {eps2_ramp0}")));
    }
    let a2 = params.alpha2();
    let a2_min = (params.eps2_0 + eps2_ramp0) / params.kerr;
    if a2_min < 0.0 {
        return Err(Error::InvalidRamp(format!("cat size dips to {a2_min} < 0")));
    }
    if !cache.covers(a2_min, a2) {
        return Err(Error::Infeasible(format!(
            "robust line unavailable over cat sizes [{a2_min}, {a2}]"
        )));
    }
    let middle = duration - 2.0 * tau;
    let d_end = cache.delta_at(a2)? - params.delta;
    let profile = |t: f64| -> (f64, f64) {
        if t <= tau {
            (d_end * ramp_up(t / tau), 0.0)
        } else if t >= duration - tau {
            (d_end * ramp_up((duration - t) / tau), 0.0)
        } else {
            let e2 = eps2_ramp0 * gaussian_shape((t - tau) / middle);
            let line = cache.delta_at(a2 + e2 / params.kerr).unwrap_or(f64::NAN);
            (line - params.delta, e2)
        }
    };
    let delta = Envelope::from_fn(duration, n_samples, EnvelopeKind::Composite, |t| profile(t).0);
    if delta.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::Infeasible("robust line lookup failed along the trajectory".into()));
    }
    let eps2 = Envelope::from_fn(duration, n_samples, EnvelopeKind::Composite, |t| profile(t).1);
    Ok(PulseSchedule::new(duration, SchemeTag::ZRobustline, rotation_target('Z', -PI / 2.0))
        .with(ScheduleChannel::Delta, delta)
        .with(ScheduleChannel::Eps2Mod, eps2)
        .param("tau", tau)
        .param("eps2_ramp0", eps2_ramp0))
}

/// `Z(−π/2)` along the straight line `(δ, ε̃₂) = f(t)·(δ_max, ε̃₂₀)`.
pub fn scheme_z_straight(
    duration: f64,
    delta_max: f64,
    eps2_ramp0: f64,
    params: &KerrCatParams,
    n_samples: usize,
) -> Result<PulseSchedule> {
    check_duration(duration)?;
    if eps2_ramp0 > 0.0 {
        return Err(Error::InvalidRamp(format!("two-photon modulation must be <= 0, got {eps2_ramp0}")));
    }
    if params.alpha2() + eps2_ramp0 / params.kerr < -1e-12 {
        return Err(Error::InvalidRamp("cat size dips below zero".into()));
    }
    let delta = Envelope::from_fn(duration, n_samples, EnvelopeKind::FullPulse, |t| {
        delta_max * gaussian_shape(t / duration)
    });
    let eps2 = Envelope::from_fn(duration, n_samples, EnvelopeKind::FullPulse, |t| {
        eps2_ramp0 * gaussian_shape(t / duration)
    });
    Ok(PulseSchedule::new(duration, SchemeTag::ZStraight, rotation_target('Z', -PI / 2.0))
        .with(ScheduleChannel::Delta, delta)
        .with(ScheduleChannel::Eps2Mod, eps2)
        .param("delta_max", delta_max)
        .param("eps2_ramp0", eps2_ramp0))
}

/// Detuning applied during the Kerr gate. The bare Kerr term
/// `−(K/2)n(n−1)` maps cats onto cats rotated by `π/2` in phase space; the
/// extra `−(K/2)n` makes the evolution `exp(iπn²/2)`, which is `Z(π/2)` on
/// any parity-definite pair.
pub fn kerr_gate_detuning(params: &KerrCatParams) -> f64 {
    -0.5 * params.kerr
}

/// `Z(π/2)` by switching the two-photon drive off for `T = π/K`.
pub fn scheme_kerr_gate(params: &KerrCatParams, n_samples: usize) -> PulseSchedule {
    let duration = PI / params.kerr;
    let off = -params.eps2_0;
    let detune = kerr_gate_detuning(params);
    PulseSchedule::new(duration, SchemeTag::KerrGate, rotation_target('Z', PI / 2.0))
        .with(
            ScheduleChannel::Eps2Mod,
            Envelope::from_fn(duration, n_samples, EnvelopeKind::Constant, |_| off),
        )
        .with(
            ScheduleChannel::Delta,
            Envelope::from_fn(duration, n_samples, EnvelopeKind::Constant, |_| detune),
        )
}

/// Reference error model of the Kerr gate, `α²Δ²T²`.
pub fn kerr_gate_reference_infidelity(alpha2: f64, shift: f64, duration: f64) -> f64 {
    alpha2 * shift * shift * duration * duration
}

/// Gap and its derivative sampled along a schedule.
#[derive(Debug, Clone)]
pub struct GapTrace {
    pub times: Vec<f64>,
    pub gap: Vec<f64>,
    pub gap_deriv: Vec<f64>,
}

impl GapTrace {
    pub fn compute(schedule: &PulseSchedule, params: &KerrCatParams, space: FockSpace) -> Result<Self> {
        use rayon::prelude::*;
        if schedule.has_single_photon_drive() {
            return Err(Error::InvalidInput("gap trace requires a schedule without single-photon drives".into()));
        }
        let times = schedule.sample_times();
        let rows: Vec<Result<(f64, f64)>> = times
            .par_iter()
            .map(|&t| {
                let v = schedule.values_at(t);
                let s = SectorSpectrum::compute(
                    params.kerr,
                    params.delta + v.detuning,
                    params.eps2_0 + v.eps2_mod,
                    space,
                )?;
                Ok((s.gap(), s.gap_derivative_raw()))
            })
            .collect();
        let mut gap = Vec::with_capacity(times.len());
        let mut gap_deriv = Vec::with_capacity(times.len());
        for r in rows {
            let (g, d) = r?;
            gap.push(g);
            gap_deriv.push(d);
        }
        Ok(Self { times, gap, gap_deriv })
    }

    pub fn max_abs_deriv(&self) -> f64 {
        self.gap_deriv.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

pub(crate) fn trapezoid(times: &[f64], values: &[f64]) -> f64 {
    times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}

/// Adiabatic angle `θ(Δ) ≃ θ₀ + Δ·θ₁`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnglePrediction {
    /// `−∫E₀₁ dt`.
    pub theta0: f64,
    /// `−∫∂δE₀₁ dt`.
    pub first_order: f64,
}

impl AnglePrediction {
    pub fn at(&self, shift: f64) -> f64 {
        self.theta0 + shift * self.first_order
    }
}

pub fn predicted_angle(schedule: &PulseSchedule, params: &KerrCatParams, space: FockSpace) -> Result<AnglePrediction> {
    if !schedule.scheme.is_z_type() {
        return Err(Error::InvalidInput(format!(
            "angle prediction needs a Z-type schedule, got {:?}",
            schedule.scheme
        )));
    }
    let trace = GapTrace::compute(schedule, params, space)?;
    Ok(AnglePrediction {
        theta0: -trapezoid(&trace.times, &trace.gap),
        first_order: -trapezoid(&trace.times, &trace.gap_deriv),
    })
}
