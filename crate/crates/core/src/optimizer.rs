//! Exhaustive coarse-to-fine grid search over a few pulse parameters.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fidelity::{GateEvaluator, InfidelityGrid};
use crate::pulse::PulseSchedule;

/// Score assigned to lattice points where the schedule cannot be built.
pub const INFEASIBLE_SCORE: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamAxis {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
}

impl ParamAxis {
    pub fn new(name: &str, lo: f64, hi: f64) -> Self {
        Self { name: name.to_string(), lo, hi }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpace {
    pub axes: Vec<ParamAxis>,
    /// Lattice points per axis.
    pub coarse_n: usize,
    /// Refinement rounds, each shrinking the box around the incumbent.
    pub refine_rounds: usize,
    pub shrink: f64,
}

impl ParamSpace {
    pub fn new(axes: Vec<ParamAxis>) -> Self {
        Self { axes, coarse_n: 21, refine_rounds: 2, shrink: 5.0 }
    }

    pub fn with_grid(mut self, coarse_n: usize, refine_rounds: usize) -> Self {
        self.coarse_n = coarse_n;
        self.refine_rounds = refine_rounds;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.axes.is_empty() || self.axes.len() > 3 {
            return Err(Error::InvalidInput(format!(
                "grid search supports 1 to 3 parameters, got {}",
                self.axes.len()
            )));
        }
        if self.coarse_n < 5 {
            return Err(Error::InvalidInput(format!("need >= 5 points per axis, got {}", self.coarse_n)));
        }
        if !(self.shrink > 1.0) {
            return Err(Error::InvalidInput("shrink factor must exceed 1".into()));
        }
        for a in &self.axes {
            if !(a.lo < a.hi) || !a.lo.is_finite() || !a.hi.is_finite() {
                return Err(Error::InvalidInput(format!("axis {} has bounds [{}, {}]", a.name, a.lo, a.hi)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub round: usize,
    pub params: Vec<f64>,
    pub value: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationRecord {
    pub names: Vec<String>,
    pub best_params: BTreeMap<String, f64>,
    pub best_vector: Vec<f64>,
    pub best_avg_infidelity: f64,
    pub evaluations: usize,
    /// `false` when no lattice point could be built.
    pub feasible: bool,
    pub trace: Vec<TracePoint>,
}

impl OptimizationRecord {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("record serializes")
    }
}

fn better(a: (f64, &[f64]), b: (f64, &[f64])) -> bool {
    if a.0 != b.0 {
        return a.0 < b.0;
    }
    for (x, y) in a.1.iter().zip(b.1) {
        if x != y {
            return x < y;
        }
    }
    false
}

fn lattice(lo: &[f64], hi: &[f64], n: usize) -> Vec<Vec<f64>> {
    let axis = |k: usize| -> Vec<f64> { (0..n).map(|i| lo[k] + (hi[k] - lo[k]) * i as f64 / (n - 1) as f64).collect() };
    let mut points: Vec<Vec<f64>> = vec![vec![]];
    for k in 0..lo.len() {
        let values = axis(k);
        points = points
            .into_iter()
            .flat_map(|p| {
                values.iter().map(move |v| {
                    let mut q = p.clone();
                    q.push(*v);
                    q
                })
            })
            .collect();
    }
    points
}

/// Minimizes `objective` on the lattice, then on boxes shrunk around the
/// incumbent. Objective errors mark the point infeasible with
/// [`INFEASIBLE_SCORE`]. Ties break toward the lexicographically smaller
/// parameter vector.
pub fn grid_search<F>(space: &ParamSpace, objective: F) -> Result<OptimizationRecord>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    space.validate()?;
    let dims = space.axes.len();
    let full_lo: Vec<f64> = space.axes.iter().map(|a| a.lo).collect();
    let full_hi: Vec<f64> = space.axes.iter().map(|a| a.hi).collect();
    let mut lo = full_lo.clone();
    let mut hi = full_hi.clone();
    let mut trace = Vec::new();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut any_feasible = false;

    for round in 0..=space.refine_rounds {
        if round > 0 {
            let (_, center) = best.as_ref().expect("incumbent after first round");
            for k in 0..dims {
                let width = (full_hi[k] - full_lo[k]) / space.shrink.powi(round as i32);
                let mut a = center[k] - 0.5 * width;
                let mut b = center[k] + 0.5 * width;
                if a < full_lo[k] {
                    b += full_lo[k] - a;
                    a = full_lo[k];
                }
                if b > full_hi[k] {
                    a -= b - full_hi[k];
                    b = full_hi[k];
                }
                lo[k] = a.max(full_lo[k]);
                hi[k] = b.min(full_hi[k]);
            }
        }
        let points = lattice(&lo, &hi, space.coarse_n);
        let values: Vec<(f64, bool)> = points
            .par_iter()
            .map(|p| match objective(p) {
                Ok(v) if v.is_finite() => (v, true),
                _ => (INFEASIBLE_SCORE, false),
            })
            .collect();
        for (p, (v, ok)) in points.into_iter().zip(values) {
            any_feasible |= ok;
            let replace = match &best {
                None => true,
                Some((bv, bp)) => better((v, &p), (*bv, bp)),
            };
            if replace {
                best = Some((v, p.clone()));
            }
            trace.push(TracePoint { round, params: p, value: v, feasible: ok });
        }
    }
    let (value, vector) = best.expect("non-empty lattice");
    let names: Vec<String> = space.axes.iter().map(|a| a.name.clone()).collect();
    Ok(OptimizationRecord {
        best_params: names.iter().cloned().zip(vector.iter().cloned()).collect(),
        names,
        best_vector: vector,
        best_avg_infidelity: value,
        evaluations: trace.len(),
        feasible: any_feasible,
        trace,
    })
}

/// Grid search of the detuning-averaged infidelity of schedules produced by
/// `builder` from a parameter vector.
pub fn grid_optimize<B>(
    builder: B,
    space: &ParamSpace,
    evaluator: &GateEvaluator,
    delta_max: f64,
    n_points: usize,
) -> Result<OptimizationRecord>
where
    B: Fn(&[f64]) -> Result<PulseSchedule> + Sync,
{
    grid_search(space, |p| {
        let schedule = builder(p)?;
        Ok(evaluator.average_infidelity(&schedule, delta_max, n_points)?.average)
    })
}

/// Best schedule with its re-evaluated infidelity grid.
#[derive(Debug, Clone)]
pub struct Optimized {
    pub record: OptimizationRecord,
    pub schedule: PulseSchedule,
    pub grid: InfidelityGrid,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_converges_within_resolution() {
        let space = ParamSpace::new(vec![ParamAxis::new("x", 0.0, 1.0)]);
        let rec = grid_search(&space, |p| Ok((p[0] - 0.3).powi(2))).unwrap();
        assert!((rec.best_vector[0] - 0.3).abs() <= 1.0 / (21.0 * 25.0));
        assert_eq!(rec.evaluations, 63);
    }

    #[test]
    fn all_infeasible_is_reported() {
        let space = ParamSpace::new(vec![ParamAxis::new("x", 0.0, 1.0)]).with_grid(5, 0);
        let rec = grid_search(&space, |_| Err(Error::Infeasible("no".into()))).unwrap();
        assert!(!rec.feasible);
        assert_eq!(rec.best_avg_infidelity, INFEASIBLE_SCORE);
    }

    #[test]
    fn ties_prefer_lexicographically_smaller() {
        let space = ParamSpace::new(vec![ParamAxis::new("x", -1.0, 1.0)]).with_grid(5, 0);
        let rec = grid_search(&space, |p| Ok(p[0].abs().max(0.5))).unwrap();
        assert_eq!(rec.best_vector, vec![-0.5]);
    }
}
