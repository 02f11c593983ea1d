//! Projected gate infidelity and its average over a static detuning range.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fock::{FockSpace, KerrCatParams};
use crate::linalg::{CMatrix, ZERO};
use crate::propagator::{DetuningError, PropagationOptions, PropagationResult, Propagator};
use crate::pulse::PulseSchedule;
use crate::spectral::SectorSpectrum;
use crate::table::{fmt_f64, Table};

/// Default half-width of the detuning range, in units of `K`.
pub const DEFAULT_DELTA_MAX: f64 = 5e-3;
/// Default number of quadrature nodes.
pub const DEFAULT_NODES: usize = 11;

/// `1 − |Tr(V† M)|²/d²` for the projected gate `M = P U P` (`d = 2` for
/// one qubit, `4` for two).
pub fn infidelity(projected: &CMatrix, target: &CMatrix) -> f64 {
    let tr = (target.adjoint() * projected).trace();
    let d = target.nrows() as f64;
    1.0 - tr.norm_sqr() / (d * d)
}

/// `B† U B` for a `dim × 2` basis `B` and propagated columns `U B`.
pub fn project(basis: &CMatrix, propagated: &CMatrix) -> CMatrix {
    basis.adjoint() * propagated
}

/// The idle computational pair `(|0⟩, |1⟩)` as a `dim × 2` matrix.
pub fn computational_basis(params: &KerrCatParams, space: FockSpace) -> Result<CMatrix> {
    let s = SectorSpectrum::at(params, 0.0, space)?;
    let mut b = CMatrix::from_element(space.dim(), 2, ZERO);
    b.set_column(0, &s.even.state(0));
    b.set_column(1, &s.odd.state(0));
    Ok(b)
}

/// Composite Simpson average over `[−Δ_max, Δ_max]` of equally spaced samples.
pub fn simpson_average(values: &[f64]) -> Result<f64> {
    let n = values.len();
    if n < 3 || n.is_multiple_of(2) {
        return Err(Error::InvalidInput(format!("Simpson rule needs an odd node count >= 3, got {n}")));
    }
    let mut sum = 0.0;
    for (i, v) in values.iter().enumerate() {
        let w = if i == 0 || i == n - 1 {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        sum += w * v;
    }
    // (h/3)·Σ / (2Δ_max) with h = 2Δ_max/(n − 1).
    Ok(sum / (3.0 * (n - 1) as f64))
}

pub fn detuning_nodes(delta_max: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| -delta_max + 2.0 * delta_max * i as f64 / (n - 1) as f64)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct InfidelityGrid {
    pub duration: f64,
    pub deltas: Vec<f64>,
    pub infidelities: Vec<f64>,
    pub average: f64,
    /// Worst unitarity defect over the nodes.
    pub max_unitarity_defect: f64,
}

impl InfidelityGrid {
    /// Rows `(T, Delta, infidelity)` followed by a summary row with `Delta = average`.
    pub fn table(&self) -> Table {
        let mut t = Table::new(&["T", "Delta", "infidelity"]);
        for (d, i) in self.deltas.iter().zip(&self.infidelities) {
            t.push_f64(&[self.duration, *d, *i]);
        }
        t.push(vec![fmt_f64(self.duration), "average".into(), fmt_f64(self.average)]);
        t
    }

    pub fn max_infidelity(&self) -> f64 {
        self.infidelities.iter().fold(0.0, |m, v| m.max(*v))
    }
}

/// Propagator plus the idle computational pair for one parameter set.
#[derive(Debug, Clone)]
pub struct GateEvaluator {
    propagator: Propagator,
    basis: CMatrix,
}

impl GateEvaluator {
    pub fn new(params: KerrCatParams, space: FockSpace, options: PropagationOptions) -> Result<Self> {
        Ok(Self {
            basis: computational_basis(&params, space)?,
            propagator: Propagator::new(params, space, options),
        })
    }

    pub fn propagator(&self) -> &Propagator {
        &self.propagator
    }

    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    pub fn propagate_pair(&self, schedule: &PulseSchedule, shift: &DetuningError) -> Result<PropagationResult> {
        self.propagator.propagate_columns(schedule, shift, &self.basis)
    }

    /// Projected `2 × 2` gate at the given detuning error.
    pub fn projected_gate(&self, schedule: &PulseSchedule, shift: &DetuningError) -> Result<(CMatrix, f64)> {
        let r = self.propagate_pair(schedule, shift)?;
        Ok((project(&self.basis, &r.unitary), r.unitarity_defect))
    }

    pub fn infidelity(&self, schedule: &PulseSchedule, shift: &DetuningError) -> Result<f64> {
        let (m, _) = self.projected_gate(schedule, shift)?;
        Ok(infidelity(&m, &schedule.target))
    }

    pub fn average_infidelity(&self, schedule: &PulseSchedule, delta_max: f64, n_points: usize) -> Result<InfidelityGrid> {
        if !(delta_max > 0.0) {
            return Err(Error::InvalidInput(format!("detuning range must be positive, got {delta_max}")));
        }
        if n_points < 3 || n_points.is_multiple_of(2) {
            return Err(Error::InvalidInput(format!("node count must be odd and >= 3, got {n_points}")));
        }
        let deltas = detuning_nodes(delta_max, n_points);
        let results: Vec<Result<(f64, f64)>> = deltas
            .par_iter()
            .map(|&d| {
                let (m, defect) = self.projected_gate(schedule, &DetuningError::Static(d))?;
                Ok((infidelity(&m, &schedule.target), defect))
            })
            .collect();
        let mut infidelities = Vec::with_capacity(n_points);
        let mut max_defect = 0.0f64;
        for r in results {
            let (i, d) = r?;
            infidelities.push(i);
            max_defect = max_defect.max(d);
        }
        Ok(InfidelityGrid {
            duration: schedule.duration,
            average: simpson_average(&infidelities)?,
            deltas,
            infidelities,
            max_unitarity_defect: max_defect,
        })
    }
}

/// One-shot average infidelity with default propagation settings.
pub fn average_infidelity(
    schedule: &PulseSchedule,
    params: &KerrCatParams,
    space: FockSpace,
    delta_max: f64,
    n_points: usize,
) -> Result<InfidelityGrid> {
    GateEvaluator::new(*params, space, PropagationOptions::default())?.average_infidelity(schedule, delta_max, n_points)
}
