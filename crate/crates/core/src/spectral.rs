//! Spectra of the driven Kerr oscillator: parity-labeled eigenstates, the
//! computational gap, its detuning derivative and the robust line.
//!
//! With `H = δ a†a − (K/2) a†²a² + ...` the Kerr term is negative, so the two
//! cat-like computational states sit at the *top* of the spectrum and the
//! excited states lie below them. Within each parity sector the computational
//! state is therefore the highest eigenvalue.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fock::{FockSpace, KerrCatParams};
use crate::interp::Pchip;
use crate::linalg::{commutator, eigh, fix_gauge, frobenius, hermiticity_defect, CMatrix, CVector, C64};
use crate::table::Table;

/// Energies closer than this are treated as one degenerate cluster.
const DEGENERACY_TOL: f64 = 1e-10;
/// Minimal separation from the parity-sector neighbour for Hellmann–Feynman.
const HF_SEPARATION: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct LabeledSpectrum {
    /// Ascending.
    pub energies: Vec<f64>,
    /// Columns are eigenvectors, gauge fixed so the largest Fock coefficient is real positive.
    pub states: CMatrix,
    pub parities: Vec<i8>,
    pub parity_expectations: Vec<f64>,
    /// `(even computational state, odd computational state)`.
    pub comp_indices: (usize, usize),
}

impl LabeledSpectrum {
    pub fn state(&self, k: usize) -> CVector {
        self.states.column(k).into_owned()
    }

    pub fn comp_states(&self) -> (CVector, CVector) {
        (self.state(self.comp_indices.0), self.state(self.comp_indices.1))
    }

    /// `E₁ − E₀` between the odd and even computational states.
    pub fn comp_gap(&self) -> f64 {
        self.energies[self.comp_indices.1] - self.energies[self.comp_indices.0]
    }
}

/// Full dense diagonalization with parity labels.
pub fn diagonalize_labeled(h: &CMatrix, parity: &CMatrix) -> Result<LabeledSpectrum> {
    let defect = hermiticity_defect(h);
    if defect > 1e-10 {
        return Err(Error::NotHermitian(defect));
    }
    let scale = frobenius(h).max(1.0);
    let comm = frobenius(&commutator(h, parity)) / scale;
    if comm > 1e-8 {
        return Err(Error::ParityBroken(comm));
    }
    let (energies, mut states) = eigh(h)?;
    let n = energies.len();

    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && energies[end] - energies[end - 1] < DEGENERACY_TOL {
            end += 1;
        }
        if end - start > 1 {
            let block = states.columns(start, end - start).into_owned();
            let projected = block.adjoint() * parity * &block;
            let projected = (&projected + projected.adjoint()) * C64::new(0.5, 0.0);
            let (_, rot) = eigh(&projected)?;
            let rotated = &block * rot;
            states.columns_mut(start, end - start).copy_from(&rotated);
        }
        start = end;
    }

    let mut parities = Vec::with_capacity(n);
    let mut expectations = Vec::with_capacity(n);
    for k in 0..n {
        let mut v = states.column(k).into_owned();
        fix_gauge(&mut v);
        states.set_column(k, &v);
        let p = (v.adjoint() * parity * &v)[(0, 0)].re;
        expectations.push(p);
        parities.push(if p >= 0.0 { 1 } else { -1 });
    }
    let top_with = |sign: i8| (0..n).rev().find(|&k| parities[k] == sign);
    let comp_indices = match (top_with(1), top_with(-1)) {
        (Some(e), Some(o)) => (e, o),
        _ => return Err(Error::IllConditioned("spectrum lacks one parity sector".into())),
    };
    Ok(LabeledSpectrum {
        energies,
        states,
        parities,
        parity_expectations: expectations,
        comp_indices,
    })
}

/// Eigenpairs of one parity sector, sorted by *descending* energy so that
/// index 0 is the computational state of that sector.
#[derive(Debug, Clone)]
pub struct Sector {
    pub energies: Vec<f64>,
    /// Full-space real eigenvectors (`dim × sector size`).
    pub states: DMatrix<f64>,
}

impl Sector {
    pub fn number_expectation(&self, k: usize) -> f64 {
        self.states
            .column(k)
            .iter()
            .enumerate()
            .map(|(n, c)| n as f64 * c * c)
            .sum()
    }

    pub fn state(&self, k: usize) -> CVector {
        CVector::from_iterator(self.states.nrows(), self.states.column(k).iter().map(|&x| C64::new(x, 0.0)))
    }
}

/// Spectrum of the drift Hamiltonian split by parity (valid whenever the
/// single-photon drives are off).
#[derive(Debug, Clone)]
pub struct SectorSpectrum {
    pub even: Sector,
    pub odd: Sector,
}

impl SectorSpectrum {
    /// Diagonalizes `H = d·a†a − (K/2)a†²a² + (e/2)(a² + a†²)` sector by sector.
    pub fn compute(kerr: f64, detuning: f64, eps2: f64, space: FockSpace) -> Result<Self> {
        if !(detuning.is_finite() && eps2.is_finite()) {
            return Err(Error::InvalidInput("non-finite Hamiltonian parameter".into()));
        }
        Ok(Self {
            even: sector(kerr, detuning, eps2, space, 0)?,
            odd: sector(kerr, detuning, eps2, space, 1)?,
        })
    }

    pub fn at(params: &KerrCatParams, shift: f64, space: FockSpace) -> Result<Self> {
        Self::compute(params.kerr, params.delta + shift, params.eps2_0, space)
    }

    pub fn gap(&self) -> f64 {
        self.odd.energies[0] - self.even.energies[0]
    }

    /// Hellmann–Feynman `∂δE₀₁ = ⟨n⟩₁ − ⟨n⟩₀` without conditioning checks.
    pub fn gap_derivative_raw(&self) -> f64 {
        self.odd.number_expectation(0) - self.even.number_expectation(0)
    }

    pub fn gap_derivative(&self) -> Result<f64> {
        for (name, s) in [("even", &self.even), ("odd", &self.odd)] {
            if s.energies.len() > 1 && s.energies[0] - s.energies[1] < HF_SEPARATION {
                return Err(Error::IllConditioned(format!(
                    "{name} computational state degenerate with its neighbour (separation {:.3e})",
                    s.energies[0] - s.energies[1]
                )));
            }
        }
        Ok(self.gap_derivative_raw())
    }
}

fn sector(kerr: f64, detuning: f64, eps2: f64, space: FockSpace, offset: usize) -> Result<Sector> {
    let dim = space.dim();
    let idx: Vec<usize> = (offset..dim).step_by(2).collect();
    let m = idx.len();
    let mut h = DMatrix::<f64>::zeros(m, m);
    for (i, &n) in idx.iter().enumerate() {
        let nf = n as f64;
        h[(i, i)] = detuning * nf - 0.5 * kerr * nf * (nf - 1.0);
        if i + 1 < m {
            let v = 0.5 * eps2 * ((nf + 1.0) * (nf + 2.0)).sqrt();
            h[(i, i + 1)] = v;
            h[(i + 1, i)] = v;
        }
    }
    let eig = SymmetricEigen::try_new(h, f64::EPSILON, 0)
        .ok_or_else(|| Error::Eigen(format!("sector {m}x{m} did not converge")))?;
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let energies = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut states = DMatrix::<f64>::zeros(dim, m);
    for (col, &k) in order.iter().enumerate() {
        let v = eig.eigenvectors.column(k);
        let mut big = 0.0f64;
        for &x in v.iter() {
            if x.abs() > big.abs() * (1.0 + 1e-12) {
                big = x;
            }
        }
        let sign = if big < 0.0 { -1.0 } else { 1.0 };
        for (i, &n) in idx.iter().enumerate() {
            states[(n, col)] = sign * v[i];
        }
    }
    Ok(Sector { energies, states })
}

/// `E₀₁ = E₁ − E₀` at total detuning `δ + Δ`.
pub fn energy_gap(params: &KerrCatParams, shift: f64, space: FockSpace) -> Result<f64> {
    Ok(SectorSpectrum::at(params, shift, space)?.gap())
}

/// `∂δE₀₁` at total detuning `δ + Δ` by Hellmann–Feynman.
pub fn gap_derivative(params: &KerrCatParams, shift: f64, space: FockSpace) -> Result<f64> {
    SectorSpectrum::at(params, shift, space)?.gap_derivative()
}

const SCAN_POINTS: usize = 64;
const ROOT_DELTA_TOL: f64 = 1e-10;
const ROOT_DERIV_TOL: f64 = 1e-9;

/// A zero of `∂δE₀₁` in `(0, K)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobustPoint {
    pub delta: f64,
    pub gap: f64,
    /// `true` for a gap maximum (derivative goes from positive to negative).
    pub maximum: bool,
}

/// All zeros of `∂δE₀₁(δ)` on `δ ∈ (0, K)` for `K = 1`, found by a coarse
/// scan followed by bisection. Sign changes across discontinuities (exact
/// level crossings) are rejected.
pub fn robust_points(alpha2: f64, space: FockSpace) -> Result<Vec<RobustPoint>> {
    let params = KerrCatParams::from_alpha2(alpha2)?;
    let deriv = |d: f64| -> f64 {
        SectorSpectrum::compute(params.kerr, d, params.eps2_0, space)
            .map(|s| s.gap_derivative_raw())
            .unwrap_or(f64::NAN)
    };
    let grid: Vec<f64> = (1..=SCAN_POINTS).map(|i| i as f64 / (SCAN_POINTS + 1) as f64).collect();
    let values: Vec<f64> = grid.iter().map(|&d| deriv(d)).collect();
    let mut roots = Vec::new();
    for i in 0..grid.len() - 1 {
        let (fa, fb) = (values[i], values[i + 1]);
        if !(fa.is_finite() && fb.is_finite()) || fa.signum() == fb.signum() {
            continue;
        }
        let (mut lo, mut hi) = (grid[i], grid[i + 1]);
        let mut flo = fa;
        let mut mid = 0.5 * (lo + hi);
        let mut fmid = deriv(mid);
        while hi - lo > ROOT_DELTA_TOL && fmid.abs() > 1e-13 {
            if fmid * flo > 0.0 {
                lo = mid;
                flo = fmid;
            } else {
                hi = mid;
            }
            mid = 0.5 * (lo + hi);
            fmid = deriv(mid);
        }
        if fmid.abs() < ROOT_DERIV_TOL {
            let gap = energy_gap(&params, mid, space)?;
            if gap > 0.0 {
                roots.push(RobustPoint {
                    delta: mid,
                    gap,
                    maximum: fa > 0.0,
                });
            }
        }
    }
    Ok(roots)
}

/// `δ_rob(α²)`: the first gap maximum in `(0, K)` (units `K = 1`).
pub fn robust_line(alpha2: f64, space: FockSpace) -> Result<f64> {
    robust_points(alpha2, space)?
        .into_iter()
        .find(|p| p.maximum)
        .map(|p| p.delta)
        .ok_or(Error::NoRobustPoint { alpha2 })
}

/// Tabulated robust line and the gap along it, interpolated in `α²`.
#[derive(Debug, Clone)]
pub struct RobustLineCache {
    alpha2: Vec<f64>,
    delta: Pchip,
    gap: Pchip,
    space: FockSpace,
}

impl RobustLineCache {
    pub const DEFAULT_POINTS: usize = 200;

    pub fn new(alpha2_lo: f64, alpha2_hi: f64, points: usize, space: FockSpace) -> Result<Self> {
        if !(alpha2_lo < alpha2_hi) || points < 4 {
            return Err(Error::InvalidInput(format!(
                "robust-line table needs lo < hi and >= 4 points (got [{alpha2_lo}, {alpha2_hi}], {points})"
            )));
        }
        let grid: Vec<f64> = (0..points)
            .map(|i| alpha2_lo + (alpha2_hi - alpha2_lo) * i as f64 / (points - 1) as f64)
            .collect();
        let rows: Vec<Result<(f64, f64)>> = grid
            .par_iter()
            .map(|&a2| {
                let d = robust_line(a2, space)?;
                let g = energy_gap(&KerrCatParams::from_alpha2(a2)?, d, space)?;
                Ok((d, g))
            })
            .collect();
        let mut deltas = Vec::with_capacity(points);
        let mut gaps = Vec::with_capacity(points);
        for r in rows {
            let (d, g) = r?;
            deltas.push(d);
            gaps.push(g);
        }
        Ok(Self {
            delta: Pchip::new(grid.clone(), deltas)?,
            gap: Pchip::new(grid.clone(), gaps)?,
            alpha2: grid,
            space,
        })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.alpha2[0], *self.alpha2.last().unwrap())
    }

    pub fn space(&self) -> FockSpace {
        self.space
    }

    pub fn covers(&self, lo: f64, hi: f64) -> bool {
        let (a, b) = self.domain();
        lo >= a - 1e-12 && hi <= b + 1e-12
    }

    fn check(&self, alpha2: f64) -> Result<()> {
        let (a, b) = self.domain();
        if alpha2 < a - 1e-12 || alpha2 > b + 1e-12 {
            return Err(Error::Infeasible(format!(
                "cat size {alpha2} outside robust-line table [{a}, {b}]"
            )));
        }
        Ok(())
    }

    pub fn delta_at(&self, alpha2: f64) -> Result<f64> {
        self.check(alpha2)?;
        Ok(self.delta.eval(alpha2))
    }

    pub fn gap_at(&self, alpha2: f64) -> Result<f64> {
        self.check(alpha2)?;
        Ok(self.gap.eval(alpha2))
    }
}

/// `E₀₁` and `∂δE₀₁` on a rectangular `(δ, α²)` grid (`K = 1`).
#[derive(Debug, Clone)]
pub struct GapLandscape {
    pub delta_grid: Vec<f64>,
    pub alpha2_grid: Vec<f64>,
    /// Indexed `[alpha2 index][delta index]`.
    pub gap: Vec<Vec<f64>>,
    pub gap_deriv: Vec<Vec<f64>>,
}

impl GapLandscape {
    pub fn compute(delta_grid: Vec<f64>, alpha2_grid: Vec<f64>, space: FockSpace) -> Result<Self> {
        let rows: Vec<Result<(Vec<f64>, Vec<f64>)>> = alpha2_grid
            .par_iter()
            .map(|&a2| {
                let mut g = Vec::with_capacity(delta_grid.len());
                let mut d = Vec::with_capacity(delta_grid.len());
                for &delta in &delta_grid {
                    let s = SectorSpectrum::compute(1.0, delta, a2, space)?;
                    g.push(s.gap());
                    d.push(s.gap_derivative_raw());
                }
                Ok((g, d))
            })
            .collect();
        let mut gap = Vec::new();
        let mut gap_deriv = Vec::new();
        for r in rows {
            let (g, d) = r?;
            gap.push(g);
            gap_deriv.push(d);
        }
        Ok(Self {
            delta_grid,
            alpha2_grid,
            gap,
            gap_deriv,
        })
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new(&["delta", "alpha2", "gap", "gap_deriv"]);
        for (i, a2) in self.alpha2_grid.iter().enumerate() {
            for (j, d) in self.delta_grid.iter().enumerate() {
                t.push_f64(&[*d, *a2, self.gap[i][j], self.gap_deriv[i][j]]);
            }
        }
        t
    }
}
