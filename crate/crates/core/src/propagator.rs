//! Time-dependent Schrödinger equation for a control schedule.
//!
//! Each step applies exponentials of the Hamiltonian at quadrature nodes
//! (midpoint rule, or the fourth-order commutator-free pair of exponentials).
//! The action of each exponential on the propagated columns is computed by
//! a Chebyshev expansion on the sparse channel decomposition of `H(t)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{FockSpace, HamiltonianAssembly, KerrCatParams};
use crate::linalg::{eigh, frobenius, CMatrix, ControlledHamiltonian, ExpmWorkspace, C64, ZERO};
use crate::pulse::PulseSchedule;
use crate::spectral::SectorSpectrum;

/// Detuning error `Δ` added to the detuning channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DetuningError {
    Static(f64),
    /// Samples at `k·dt`, linearly interpolated; held constant past the end.
    Trace { dt: f64, values: Vec<f64> },
}

impl DetuningError {
    pub fn at(&self, t: f64) -> f64 {
        match self {
            DetuningError::Static(d) => *d,
            DetuningError::Trace { dt, values } => {
                let u = (t / dt).max(0.0);
                let i = u.floor() as usize;
                if i + 1 >= values.len() {
                    return *values.last().unwrap_or(&0.0);
                }
                let s = u - i as f64;
                values[i] * (1.0 - s) + values[i + 1] * s
            }
        }
    }
}

impl From<f64> for DetuningError {
    fn from(d: f64) -> Self {
        DetuningError::Static(d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    /// `exp(−iH(t + dt/2)dt)`, second order.
    Midpoint,
    /// Two exponentials at the Gauss–Legendre nodes, fourth order.
    Cf4,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagationOptions {
    /// Initial number of steps over the schedule.
    pub steps: usize,
    pub integrator: Integrator,
    /// Halve the step until the result changes by less than `tol`.
    pub adaptive: bool,
    pub tol: f64,
    pub min_dt: f64,
}

impl Default for PropagationOptions {
    fn default() -> Self {
        Self {
            steps: 4000,
            integrator: Integrator::Cf4,
            adaptive: false,
            tol: 1e-10,
            min_dt: 1e-6,
        }
    }
}

impl PropagationOptions {
    pub fn fixed(steps: usize) -> Self {
        Self { steps, ..Self::default() }
    }

    pub fn adaptive(steps: usize, tol: f64) -> Self {
        Self { steps, adaptive: true, tol, ..Self::default() }
    }
}

/// Propagated columns `U·ψ_k` with diagnostics.
#[derive(Debug, Clone)]
pub struct PropagationResult {
    /// `dim × k`; the full unitary when propagated from the identity.
    pub unitary: CMatrix,
    pub unitarity_defect: f64,
    pub step_count: usize,
    /// Largest population outside the initial span of the propagated
    /// columns seen at any step (columns averaged).
    pub max_leakage_flux: f64,
}

/// Shared operators for repeated propagation at one parameter set.
#[derive(Debug, Clone)]
pub struct Propagator {
    params: KerrCatParams,
    space: FockSpace,
    full: ControlledHamiltonian,
    even: ControlledHamiltonian,
    odd: ControlledHamiltonian,
    pub options: PropagationOptions,
}

impl Propagator {
    pub fn new(params: KerrCatParams, space: FockSpace, options: PropagationOptions) -> Self {
        let full = HamiltonianAssembly::new(params, space).controlled();
        let even = full.restrict(&space.sector_indices(true));
        let odd = full.restrict(&space.sector_indices(false));
        Self { params, space, full, even, odd, options }
    }

    pub fn params(&self) -> &KerrCatParams {
        &self.params
    }

    pub fn space(&self) -> FockSpace {
        self.space
    }

    /// Full `dim × dim` propagator.
    pub fn propagate(&self, schedule: &PulseSchedule, shift: &DetuningError) -> Result<PropagationResult> {
        let dim = self.space.dim();
        self.propagate_columns(schedule, shift, &CMatrix::identity(dim, dim))
    }

    /// Propagates the given columns (each a state of the full space).
    pub fn propagate_columns(
        &self,
        schedule: &PulseSchedule,
        shift: &DetuningError,
        init: &CMatrix,
    ) -> Result<PropagationResult> {
        let mut steps = self.options.steps.max(1);
        let mut current = self.run(schedule, shift, init, steps)?;
        if self.options.adaptive {
            loop {
                let finer_steps = steps * 2;
                if schedule.duration / finer_steps as f64 <= self.options.min_dt {
                    return Err(Error::Stiffness(format!(
                        "no convergence to {:.1e} before dt < {:.1e}",
                        self.options.tol, self.options.min_dt
                    )));
                }
                let finer = self.run(schedule, shift, init, finer_steps)?;
                let change = frobenius(&(&finer.unitary - &current.unitary));
                current = finer;
                steps = finer_steps;
                if change < self.options.tol {
                    break;
                }
            }
        }
        Ok(current)
    }

    fn run(&self, schedule: &PulseSchedule, shift: &DetuningError, init: &CMatrix, steps: usize) -> Result<PropagationResult> {
        let dim = self.space.dim();
        if init.nrows() != dim {
            return Err(Error::InvalidInput(format!("initial states have {} rows, space has {dim}", init.nrows())));
        }
        let parity_conserving = !schedule.has_single_photon_drive();
        let mut out = CMatrix::zeros(dim, init.ncols());
        let mut leak_total = vec![0.0; steps + 1];

        let mut groups: Vec<(&ControlledHamiltonian, Vec<usize>, Vec<usize>)> = Vec::new();
        if parity_conserving {
            let even_idx = self.space.sector_indices(true);
            let odd_idx = self.space.sector_indices(false);
            let mut even_cols = Vec::new();
            let mut odd_cols = Vec::new();
            let mut mixed = Vec::new();
            for c in 0..init.ncols() {
                let col = init.column(c);
                let w_even: f64 = even_idx.iter().map(|&i| col[i].norm_sqr()).sum();
                let w_odd: f64 = odd_idx.iter().map(|&i| col[i].norm_sqr()).sum();
                if w_odd < 1e-28 * (w_even + w_odd) {
                    even_cols.push(c);
                } else if w_even < 1e-28 * (w_even + w_odd) {
                    odd_cols.push(c);
                } else {
                    mixed.push(c);
                }
            }
            groups.push((&self.even, even_idx, even_cols));
            groups.push((&self.odd, odd_idx, odd_cols));
            if !mixed.is_empty() {
                groups.push((&self.full, (0..dim).collect(), mixed));
            }
        } else {
            groups.push((&self.full, (0..dim).collect(), (0..init.ncols()).collect()));
        }

        // Leakage out of the span is only informative for a few columns.
        let track_leakage = init.ncols() <= 4;
        let dt = schedule.duration / steps as f64;
        let mut ws = ExpmWorkspace::new();
        for (ham, rows, cols) in groups {
            if cols.is_empty() {
                continue;
            }
            let m = rows.len();
            let mut block = vec![ZERO; m * cols.len()];
            for (j, &c) in cols.iter().enumerate() {
                for (i, &r) in rows.iter().enumerate() {
                    block[j * m + i] = init[(r, c)];
                }
            }
            let initial = block.clone();
            for k in 0..steps {
                let t0 = k as f64 * dt;
                self.step(ham, schedule, shift, t0, dt, &mut block, &mut ws);
                if !track_leakage {
                    continue;
                }
                // Population left in the span of the initial columns.
                let mut leak = 0.0;
                for j in 0..cols.len() {
                    let v = &block[j * m..(j + 1) * m];
                    let mut kept = 0.0;
                    for jj in 0..cols.len() {
                        let u = &initial[jj * m..(jj + 1) * m];
                        let o: C64 = u.iter().zip(v).map(|(a, b)| a.conj() * b).sum();
                        kept += o.norm_sqr();
                    }
                    leak += (1.0 - kept).max(0.0);
                }
                leak_total[k + 1] += leak;
            }
            for (j, &c) in cols.iter().enumerate() {
                for (i, &r) in rows.iter().enumerate() {
                    out[(r, c)] = block[j * m + i];
                }
            }
        }
        let ncols = init.ncols().max(1) as f64;
        let max_leakage_flux = leak_total.iter().fold(0.0f64, |m, v| m.max(v / ncols));
        // Defect relative to the overlap matrix of the initial columns.
        let defect = frobenius(&(out.adjoint() * &out - init.adjoint() * init));
        if !defect.is_finite() {
            return Err(Error::Stiffness("propagation produced non-finite amplitudes".into()));
        }
        Ok(PropagationResult {
            unitary: out,
            unitarity_defect: defect,
            step_count: steps,
            max_leakage_flux,
        })
    }

    fn coeffs(&self, schedule: &PulseSchedule, shift: &DetuningError, t: f64) -> [f64; 4] {
        let v = schedule.values_at(t);
        [v.detuning + shift.at(t), v.eps2_mod, v.eps_x, v.eps_y]
    }

    #[allow(clippy::too_many_arguments)]
    fn step(
        &self,
        ham: &ControlledHamiltonian,
        schedule: &PulseSchedule,
        shift: &DetuningError,
        t0: f64,
        dt: f64,
        block: &mut [C64],
        ws: &mut ExpmWorkspace,
    ) {
        match self.options.integrator {
            Integrator::Midpoint => {
                let c = self.coeffs(schedule, shift, t0 + 0.5 * dt);
                ws.apply(ham, &c, dt, block);
            }
            Integrator::Cf4 => {
                let r3 = 3f64.sqrt();
                let (n1, n2) = (0.5 - r3 / 6.0, 0.5 + r3 / 6.0);
                let (w1, w2) = (0.25 - r3 / 6.0, 0.25 + r3 / 6.0);
                let c1 = self.coeffs(schedule, shift, t0 + n1 * dt);
                let c2 = self.coeffs(schedule, shift, t0 + n2 * dt);
                // Each factor is (1/2)·[H₀ + Σ 2(w c₁ + w' c₂) H_k].
                let first: [f64; 4] = std::array::from_fn(|k| 2.0 * (w2 * c1[k] + w1 * c2[k]));
                let second: [f64; 4] = std::array::from_fn(|k| 2.0 * (w1 * c1[k] + w2 * c2[k]));
                ws.apply(ham, &first, 0.5 * dt, block);
                ws.apply(ham, &second, 0.5 * dt, block);
            }
        }
    }
}

/// Fixed-step evolution of column-major `states` under
/// `H(t) = H₀ + Σ c_k(t) H_k` for a generic controlled Hamiltonian.
pub fn evolve_controlled(
    ham: &ControlledHamiltonian,
    coeffs: impl Fn(f64) -> Vec<f64>,
    duration: f64,
    steps: usize,
    integrator: Integrator,
    states: &mut [C64],
) {
    let dt = duration / steps as f64;
    let mut ws = ExpmWorkspace::new();
    let r3 = 3f64.sqrt();
    for k in 0..steps {
        let t0 = k as f64 * dt;
        match integrator {
            Integrator::Midpoint => ws.apply(ham, &coeffs(t0 + 0.5 * dt), dt, states),
            Integrator::Cf4 => {
                let (w1, w2) = (0.25 - r3 / 6.0, 0.25 + r3 / 6.0);
                let c1 = coeffs(t0 + (0.5 - r3 / 6.0) * dt);
                let c2 = coeffs(t0 + (0.5 + r3 / 6.0) * dt);
                let first: Vec<f64> = c1.iter().zip(&c2).map(|(a, b)| 2.0 * (w2 * a + w1 * b)).collect();
                let second: Vec<f64> = c1.iter().zip(&c2).map(|(a, b)| 2.0 * (w1 * a + w2 * b)).collect();
                ws.apply(ham, &first, 0.5 * dt, states);
                ws.apply(ham, &second, 0.5 * dt, states);
            }
        }
    }
}

/// Convenience wrapper building a [`Propagator`] for one call.
pub fn propagate(
    schedule: &PulseSchedule,
    params: &KerrCatParams,
    shift: &DetuningError,
    space: FockSpace,
    options: PropagationOptions,
) -> Result<PropagationResult> {
    Propagator::new(*params, space, options).propagate(schedule, shift)
}

/// `max_t |⟨ψ_e|∂_tψ_c⟩/(E_e − E_c)|` over the two computational states
/// (the top two levels) and the four levels just below them, sampled at
/// `nodes` times. The derivative coupling uses `⟨ψ_e|Ḣ|ψ_c⟩/(E_c − E_e)`
/// with `Ḣ` from a central difference of the controls.
pub fn adiabaticity_diagnostic(
    schedule: &PulseSchedule,
    params: &KerrCatParams,
    space: FockSpace,
    nodes: usize,
) -> Result<f64> {
    let assembly = HamiltonianAssembly::new(*params, space);
    let duration = schedule.duration;
    let h = 1e-4 * duration;
    let parity_path = !schedule.has_single_photon_drive();
    let mut worst = 0.0f64;
    for k in 1..nodes.max(3) - 1 {
        let t = duration * k as f64 / (nodes.max(3) - 1) as f64;
        let plus = schedule.values_at((t + h).min(duration));
        let minus = schedule.values_at((t - h).max(0.0));
        let span = (t + h).min(duration) - (t - h).max(0.0);
        let rate: [f64; 4] = std::array::from_fn(|i| (plus.as_array()[i] - minus.as_array()[i]) / span);
        if rate.iter().all(|r| *r == 0.0) {
            continue;
        }
        let v = schedule.values_at(t);
        let ratio = if parity_path {
            let s = SectorSpectrum::compute(params.kerr, params.delta + v.detuning, params.eps2_0 + v.eps2_mod, space)?;
            sector_ratio(&s, rate[0], rate[1])
        } else {
            let hmat = assembly.assemble(&v)?;
            let mut hdot = CMatrix::zeros(space.dim(), space.dim());
            for (i, ch) in crate::fock::Channel::ALL.iter().enumerate() {
                hdot += assembly.channel(*ch) * C64::new(rate[i], 0.0);
            }
            dense_ratio(&hmat, &hdot)?
        };
        worst = worst.max(ratio);
    }
    Ok(worst)
}

fn sector_ratio(s: &SectorSpectrum, ddelta: f64, deps2: f64) -> f64 {
    let mut worst = 0.0f64;
    for sec in [&s.even, &s.odd] {
        let c = sec.states.column(0);
        for e in 1..sec.energies.len().min(3) {
            let x = sec.states.column(e);
            // Ḣ = δ̇ n + ε̃̇₂ (a² + a†²)/2, real in the Fock basis.
            let mut coupling = 0.0;
            let dim = c.len();
            for n in 0..dim {
                coupling += x[n] * ddelta * n as f64 * c[n];
                if n + 2 < dim {
                    let m = 0.5 * deps2 * (((n + 1) * (n + 2)) as f64).sqrt();
                    coupling += m * (x[n] * c[n + 2] + x[n + 2] * c[n]);
                }
            }
            let gap = sec.energies[0] - sec.energies[e];
            let r = if gap <= 0.0 { f64::INFINITY } else { (coupling / (gap * gap)).abs() };
            worst = worst.max(r);
        }
    }
    worst
}

fn dense_ratio(h: &CMatrix, hdot: &CMatrix) -> Result<f64> {
    let (vals, vecs) = eigh(h)?;
    let n = vals.len();
    let mut worst = 0.0f64;
    for c in [n - 1, n - 2] {
        let vc = vecs.column(c);
        for e in (n.saturating_sub(6)..n - 2).rev() {
            let ve = vecs.column(e);
            let coupling = (ve.adjoint() * hdot * vc)[(0, 0)].norm();
            let gap = vals[c] - vals[e];
            let r = if gap <= 0.0 { f64::INFINITY } else { coupling / (gap * gap) };
            worst = worst.max(r);
        }
    }
    Ok(worst)
}
