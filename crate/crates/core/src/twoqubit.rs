//! Beamsplitter-coupled cat pair: projected interaction, the echoed `XX`
//! gate and a reduced two-mode simulation of the projection.

use serde::{Deserialize, Serialize};

use crate::cat::matrix_elements;
use crate::error::{Error, Result};
use crate::fidelity::computational_basis;
use crate::fock::{FockSpace, HamiltonianAssembly, KerrCatParams};
use crate::linalg::{expm_hermitian, frobenius, kron, pauli, unitarity_defect, CMatrix, ControlledHamiltonian, C64, I, ZERO};
use crate::propagator::{evolve_controlled, Integrator};
use crate::pulse::{gaussian_shape, gaussian_shape_integral, Envelope, EnvelopeKind, PulseSchedule, ScheduleChannel, SchemeTag};

/// Largest per-mode truncation for the two-mode simulation.
pub const MAX_MODE_DIM: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EchoQubit {
    A,
    B,
}

/// Cat sizes and coupling phase of the pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoQubitModel {
    pub alpha2_a: f64,
    pub alpha2_b: f64,
    /// Beamsplitter phase `φ̃`.
    pub phase: f64,
    /// `(h_x^A, h_y^A, h_x^B, h_y^B)`.
    pub elements: (f64, f64, f64, f64),
}

impl TwoQubitModel {
    pub fn new(alpha2_a: f64, alpha2_b: f64, phase: f64) -> Result<Self> {
        for a2 in [alpha2_a, alpha2_b] {
            if !(a2 >= 0.0 && a2.is_finite()) {
                return Err(Error::InvalidInput(format!("cat size must be >= 0, got {a2}")));
            }
        }
        let (hxa, hya) = matrix_elements(alpha2_a.sqrt());
        let (hxb, hyb) = matrix_elements(alpha2_b.sqrt());
        Ok(Self { alpha2_a, alpha2_b, phase, elements: (hxa, hya, hxb, hyb) })
    }

    /// `M` with `H_int(t) = g(t)·M`:
    /// `M = ½[cos φ̃ (h_x^A h_x^B XX + h_y^A h_y^B YY) − sin φ̃ (h_x^A h_y^B XY − h_y^A h_x^B YX)]`.
    pub fn generator(&self) -> CMatrix {
        let (hxa, hya, hxb, hyb) = self.elements;
        let (s, c) = self.phase.sin_cos();
        let (x, y) = (pauli::x(), pauli::y());
        let r = |v: f64| C64::from(v);
        let m = (kron(&x, &x) * r(hxa * hxb) + kron(&y, &y) * r(hya * hyb)) * r(c)
            - (kron(&x, &y) * r(hxa * hyb) - kron(&y, &x) * r(hya * hxb)) * r(s);
        m * C64::from(0.5)
    }

    /// Instantaneous projected interaction for coupling strength `g`.
    pub fn effective_interaction(&self, g: f64) -> CMatrix {
        self.generator() * C64::from(g)
    }

    /// `exp(−i A M)` for coupling area `A = ∫g dt`.
    pub fn interaction_unitary(&self, area: f64) -> Result<CMatrix> {
        expm_hermitian(&self.generator(), area)
    }

    /// `XX` rotation angle `η = h_x^A h_x^B ∫g dt` of a coupling area.
    pub fn xx_angle(&self, area: f64) -> f64 {
        self.elements.0 * self.elements.2 * area
    }
}

/// `XX(θ) = exp(−iθ XX/2)`.
pub fn xx_rotation(theta: f64) -> CMatrix {
    let xx = kron(&pauli::x(), &pauli::x());
    let (s, c) = (0.5 * theta).sin_cos();
    CMatrix::identity(4, 4) * C64::from(c) - xx * (I * s)
}

/// `‖U − e^{iφ}V‖_F` minimized over the global phase.
pub fn phase_distance(u: &CMatrix, v: &CMatrix) -> f64 {
    let ov = (v.adjoint() * u).trace();
    let phase = if ov.norm() > 0.0 { ov / ov.norm() } else { C64::from(1.0) };
    frobenius(&(u - v * phase))
}

/// Coupling envelope `g(t) = g₀ f(t)`.
pub fn coupling_schedule(duration: f64, amplitude: f64, n_samples: usize, target: CMatrix) -> Result<PulseSchedule> {
    if !(duration > 0.0) || n_samples < 3 {
        return Err(Error::InvalidInput(format!("coupling pulse needs T > 0 and >= 3 samples, got {duration}, {n_samples}")));
    }
    let g = Envelope::from_fn(duration, n_samples, EnvelopeKind::FullPulse, |t| amplitude * gaussian_shape(t / duration));
    Ok(PulseSchedule::new(duration, SchemeTag::XxEcho, target)
        .with(ScheduleChannel::Coupling, g)
        .param("g0", amplitude))
}

/// Amplitude of a truncated-Gaussian coupling pulse with the given area.
pub fn amplitude_for_area(duration: f64, area: f64) -> f64 {
    area / (duration * gaussian_shape_integral())
}

/// `∫g dt` of a schedule's coupling channel (trapezoid on its samples).
pub fn coupling_area(schedule: &PulseSchedule) -> f64 {
    let times = schedule.sample_times();
    let g: Vec<f64> = times.iter().map(|&t| schedule.channel_at(ScheduleChannel::Coupling, t)).collect();
    crate::pulse::trapezoid(&times, &g)
}

#[derive(Debug, Clone)]
pub struct EchoResult {
    pub unitary: CMatrix,
    pub target: CMatrix,
    /// Phase-optimized distance to the target.
    pub distance: f64,
    /// Coupling area of each half.
    pub half_area: f64,
    /// One coupling half; the full sequence is `X_i·half·X_i·half`.
    pub half_schedule: PulseSchedule,
}

fn flip(echo: EchoQubit) -> CMatrix {
    match echo {
        EchoQubit::A => kron(&pauli::x(), &pauli::id()),
        EchoQubit::B => kron(&pauli::id(), &pauli::x()),
    }
}

/// `X_i R_int(θ/2) X_i R_int(θ/2)` with ideal flips in the projected model.
pub fn echo_xx(theta: f64, model: &TwoQubitModel, echo: EchoQubit, duration: f64, n_samples: usize) -> Result<EchoResult> {
    let half_area = 0.5 * theta / (model.elements.0 * model.elements.2);
    let half = model.interaction_unitary(half_area)?;
    let x = flip(echo);
    let unitary = &x * &half * &x * &half;
    let target = xx_rotation(theta);
    let half_schedule = coupling_schedule(duration, amplitude_for_area(duration, half_area), n_samples, xx_rotation(0.5 * theta))?;
    Ok(EchoResult { distance: phase_distance(&unitary, &target), unitary, target, half_area, half_schedule })
}

/// `iSWAP`: `|01⟩ → i|10⟩`, `|10⟩ → i|01⟩`.
pub fn iswap() -> CMatrix {
    let mut m = CMatrix::from_element(4, 4, ZERO);
    m[(0, 0)] = C64::from(1.0);
    m[(3, 3)] = C64::from(1.0);
    m[(1, 2)] = I;
    m[(2, 1)] = I;
    m
}

/// Makhlin local invariants `(G₁, G₂)`.
pub fn makhlin_invariants(u: &CMatrix) -> (C64, f64) {
    let s = C64::from(std::f64::consts::FRAC_1_SQRT_2);
    let (o, z) = (C64::from(1.0), ZERO);
    // Magic basis columns.
    #[rustfmt::skip]
    let q = CMatrix::from_row_slice(4, 4, &[
        o, z, z, I,
        z, I, o, z,
        z, I, -o, z,
        o, z, z, -I,
    ]) * s;
    let ub = q.adjoint() * u * &q;
    let m = ub.transpose() * &ub;
    let det = u.determinant();
    let tr = m.trace();
    let g1 = tr * tr / (det * 16.0);
    let g2 = (tr * tr - (&m * &m).trace()) / (det * 4.0);
    (g1, g2.re)
}

/// Two coupled modes truncated to `space` each.
pub struct TwoModeSystem {
    pub params_a: KerrCatParams,
    pub params_b: KerrCatParams,
    pub space: FockSpace,
    ham: ControlledHamiltonian,
    basis: CMatrix,
}

#[derive(Debug, Clone)]
pub struct TwoModeResult {
    /// `4 × 4` projected gate in the product cat basis.
    pub projected: CMatrix,
    /// Deviation of the projected gate from unitarity (leakage indicator).
    pub projected_defect: f64,
}

impl TwoModeSystem {
    pub fn new(model: &TwoQubitModel, space: FockSpace, shift_a: f64, shift_b: f64) -> Result<Self> {
        if space.dim() > MAX_MODE_DIM {
            return Err(Error::InvalidInput(format!("per-mode dimension {} exceeds {MAX_MODE_DIM}", space.dim())));
        }
        let params_a = KerrCatParams::from_alpha2(model.alpha2_a)?;
        let params_b = KerrCatParams::from_alpha2(model.alpha2_b)?;
        for p in [&params_a, &params_b] {
            if space.dim() < crate::cat::min_dim(p.alpha2()) {
                return Err(Error::Truncation { dim: space.dim(), alpha2: p.alpha2() });
            }
        }
        let id = CMatrix::identity(space.dim(), space.dim());
        let n = space.number();
        let mode = |p: &KerrCatParams, shift: f64| -> CMatrix {
            HamiltonianAssembly::new(*p, space).drift() + &n * C64::from(shift)
        };
        let drift = kron(&mode(&params_a, shift_a), &id) + kron(&id, &mode(&params_b, shift_b));
        let a = space.ladder();
        let hop = kron(&a.adjoint(), &a);
        let (s, c) = model.phase.sin_cos();
        let coupling = (&hop + hop.adjoint()) * C64::from(c) + (&hop - hop.adjoint()) * (I * s);
        let ham = ControlledHamiltonian::from_dense(&drift, &[coupling]);
        let basis = kron(&computational_basis(&params_a, space)?, &computational_basis(&params_b, space)?);
        Ok(Self { params_a, params_b, space, ham, basis })
    }

    /// Propagates the product cat basis under the schedule's coupling channel.
    pub fn propagate(&self, schedule: &PulseSchedule, steps: usize) -> Result<TwoModeResult> {
        if steps == 0 {
            return Err(Error::InvalidInput("need at least one step".into()));
        }
        let dim = self.basis.nrows();
        let mut block: Vec<C64> = self.basis.iter().cloned().collect();
        evolve_controlled(
            &self.ham,
            |t| vec![schedule.channel_at(ScheduleChannel::Coupling, t)],
            schedule.duration,
            steps,
            Integrator::Cf4,
            &mut block,
        );
        let out = CMatrix::from_column_slice(dim, 4, &block);
        let projected = self.basis.adjoint() * out;
        Ok(TwoModeResult { projected_defect: unitarity_defect(&projected), projected })
    }
}

/// First-order generator per unit coupling area, `i(U − tr(U)/4)/(A·tr(U)/4)`
/// made Hermitian; valid for small `g·T`.
pub fn first_order_generator(projected: &CMatrix, area: f64) -> CMatrix {
    let mean = projected.trace() / 4.0;
    let g = (projected / mean - CMatrix::identity(4, 4)) * (I / area);
    (&g + g.adjoint()) * C64::from(0.5)
}
