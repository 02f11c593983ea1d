//! Dense and sparse complex linear algebra used throughout the crate.
//!
//! Dense work (eigendecompositions, small gate matrices) goes through
//! `nalgebra`. Time stepping uses a compressed-row sparse representation
//! with a shared sparsity pattern for the drift and every control operator,
//! so assembling `H(t)` is a scalar combination of value arrays and the
//! action of `exp(-i H dt)` is evaluated by a Chebyshev expansion.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub type C64 = nalgebra::Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// `‖H − H†‖_F / ‖H‖_F`, zero for the zero matrix.
pub fn hermiticity_defect(h: &CMatrix) -> f64 {
    let norm = frobenius(h);
    if norm == 0.0 {
        return 0.0;
    }
    frobenius(&(h - h.adjoint())) / norm
}

/// `‖U†U − 1‖_F` for a (possibly rectangular) matrix with orthonormal columns.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let g = u.adjoint() * u;
    frobenius(&(g - CMatrix::identity(u.ncols(), u.ncols())))
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues sorted ascending.
pub fn eigh(h: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let n = h.nrows();
    let eig = SymmetricEigen::try_new(h.clone(), 1e-15, 10_000)
        .ok_or_else(|| Error::Eigen(format!("no convergence for {n}x{n} Hermitian matrix")))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// Dense `exp(-i H t)` for Hermitian `H` via its eigendecomposition.
pub fn expm_hermitian(h: &CMatrix, t: f64) -> Result<CMatrix> {
    let (vals, vecs) = eigh(h)?;
    let phases = CMatrix::from_diagonal(&CVector::from_iterator(
        vals.len(),
        vals.iter().map(|&e| C64::from_polar(1.0, -e * t)),
    ));
    Ok(&vecs * phases * vecs.adjoint())
}

/// Multiplies the phase of `v` so its largest-magnitude entry is real positive.
pub fn fix_gauge(v: &mut CVector) {
    let mut best = ZERO;
    for z in v.iter() {
        if z.norm_sqr() > best.norm_sqr() * (1.0 + 1e-12) {
            best = *z;
        }
    }
    if best.norm() > 0.0 {
        let phase = best.conj() / best.norm();
        v.iter_mut().for_each(|z| *z *= phase);
    }
}

pub fn inner(a: &CVector, b: &CVector) -> C64 {
    a.dotc(b)
}

/// Pauli matrices as 2x2 complex matrices.
pub mod pauli {
    use super::{CMatrix, C64, I, ONE, ZERO};

    pub fn id() -> CMatrix {
        CMatrix::identity(2, 2)
    }

    pub fn x() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
    }

    pub fn y() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
    }

    pub fn z() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
    }

    /// `exp(-i θ σ / 2)` for a Pauli `σ`.
    pub fn rotation(sigma: &CMatrix, theta: f64) -> CMatrix {
        let c = C64::new((theta / 2.0).cos(), 0.0);
        let s = C64::new(0.0, -(theta / 2.0).sin());
        CMatrix::identity(2, 2) * c + sigma * s
    }
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// A Hermitian operator family `H = H_0 + Σ_k c_k H_k` stored on one shared
/// compressed-row sparsity pattern.
#[derive(Debug, Clone)]
pub struct ControlledHamiltonian {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    drift: Vec<C64>,
    controls: Vec<Vec<C64>>,
}

impl ControlledHamiltonian {
    pub fn from_dense(drift: &CMatrix, controls: &[CMatrix]) -> Self {
        let dim = drift.nrows();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        row_ptr.push(0);
        for r in 0..dim {
            for c in 0..dim {
                let used = drift[(r, c)] != ZERO || controls.iter().any(|m| m[(r, c)] != ZERO);
                if used {
                    cols.push(c);
                }
            }
            row_ptr.push(cols.len());
        }
        let gather = |m: &CMatrix| -> Vec<C64> {
            let mut out = Vec::with_capacity(cols.len());
            for r in 0..dim {
                for &c in &cols[row_ptr[r]..row_ptr[r + 1]] {
                    out.push(m[(r, c)]);
                }
            }
            out
        };
        let drift_vals = gather(drift);
        let control_vals = controls.iter().map(gather).collect();
        Self {
            dim,
            row_ptr,
            cols,
            drift: drift_vals,
            controls: control_vals,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_controls(&self) -> usize {
        self.controls.len()
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    /// Writes the values of `H_0 + Σ c_k H_k` into `out`.
    pub fn assemble_into(&self, coeffs: &[f64], out: &mut Vec<C64>) {
        debug_assert_eq!(coeffs.len(), self.controls.len());
        out.clear();
        out.extend_from_slice(&self.drift);
        for (c, vals) in coeffs.iter().zip(&self.controls) {
            if *c != 0.0 {
                for (o, v) in out.iter_mut().zip(vals) {
                    *o += v * *c;
                }
            }
        }
    }

    pub fn dense_at(&self, coeffs: &[f64]) -> CMatrix {
        let mut vals = Vec::new();
        self.assemble_into(coeffs, &mut vals);
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for r in 0..self.dim {
            for idx in self.row_ptr[r]..self.row_ptr[r + 1] {
                m[(r, self.cols[idx])] = vals[idx];
            }
        }
        m
    }

    /// Restriction to the subspace spanned by the given basis indices.
    pub fn restrict(&self, indices: &[usize]) -> Self {
        let mut position = vec![usize::MAX; self.dim];
        for (new, &old) in indices.iter().enumerate() {
            position[old] = new;
        }
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut keep = Vec::new();
        for &old_r in indices {
            for idx in self.row_ptr[old_r]..self.row_ptr[old_r + 1] {
                let new_c = position[self.cols[idx]];
                if new_c != usize::MAX {
                    cols.push(new_c);
                    keep.push(idx);
                }
            }
            row_ptr.push(cols.len());
        }
        let pick = |v: &Vec<C64>| keep.iter().map(|&i| v[i]).collect::<Vec<_>>();
        Self {
            dim: indices.len(),
            row_ptr,
            cols,
            drift: pick(&self.drift),
            controls: self.controls.iter().map(pick).collect(),
        }
    }

    /// Gershgorin bounds `(lo, hi)` on the spectrum for the given values.
    fn spectral_bounds(&self, vals: &[C64]) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for r in 0..self.dim {
            let mut diag = 0.0;
            let mut radius = 0.0;
            for idx in self.row_ptr[r]..self.row_ptr[r + 1] {
                if self.cols[idx] == r {
                    diag = vals[idx].re;
                } else {
                    radius += vals[idx].norm();
                }
            }
            lo = lo.min(diag - radius);
            hi = hi.max(diag + radius);
        }
        (lo, hi)
    }

    #[inline]
    fn matvec(&self, vals: &[C64], x: &[C64], y: &mut [C64]) {
        for r in 0..self.dim {
            let mut acc = ZERO;
            for idx in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += vals[idx] * x[self.cols[idx]];
            }
            y[r] = acc;
        }
    }
}

/// `J_0(x), ..., J_{n-1}(x)` by Miller's downward recurrence.
pub fn bessel_j_sequence(x: f64, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n.max(1)];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let mut start = n + 20 + (x.abs() as usize);
    if start % 2 == 1 {
        start += 1;
    }
    let mut j = vec![0.0; start + 2];
    j[start] = 1e-300;
    for k in (1..=start).rev() {
        j[k - 1] = 2.0 * k as f64 / x * j[k] - j[k + 1];
        if j[k - 1].abs() > 1e250 {
            for v in j.iter_mut().skip(k - 1) {
                *v *= 1e-250;
            }
        }
    }
    let mut norm = j[0];
    for k in (2..=start).step_by(2) {
        norm += 2.0 * j[k];
    }
    for (o, v) in out.iter_mut().zip(&j) {
        *o = v / norm;
    }
    out
}

/// Reusable buffers for repeated `exp(-i H dt) ψ` evaluations.
#[derive(Debug, Default, Clone)]
pub struct ExpmWorkspace {
    vals: Vec<C64>,
    prev: Vec<C64>,
    cur: Vec<C64>,
    next: Vec<C64>,
    acc: Vec<C64>,
    pub matvecs: usize,
}

impl ExpmWorkspace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Applies `exp(-i H dt)` with `H = H_0 + Σ c_k H_k` to every column of
    /// `states` (column-major, `dim` rows).
    pub fn apply(
        &mut self,
        ham: &ControlledHamiltonian,
        coeffs: &[f64],
        dt: f64,
        states: &mut [C64],
    ) {
        let dim = ham.dim;
        let mut vals = std::mem::take(&mut self.vals);
        ham.assemble_into(coeffs, &mut vals);
        let (lo, hi) = ham.spectral_bounds(&vals);
        let center = 0.5 * (lo + hi);
        let radius = (0.5 * (hi - lo)).max(1e-300);
        let x = radius * dt.abs();
        let global = C64::from_polar(1.0, -center * dt);
        if x < 1e-14 {
            states.iter_mut().for_each(|z| *z *= global);
            self.vals = vals;
            return;
        }
        // Shifted and scaled values: H̃ = (H − c)/r, diagonal shift applied during matvec.
        for v in vals.iter_mut() {
            *v /= radius;
        }
        let shift = center / radius;
        let sign = dt.signum();
        let nterms = (x + 10.0 * x.cbrt() + 20.0) as usize;
        let bessel = bessel_j_sequence(x, nterms);
        let last = bessel
            .iter()
            .enumerate()
            .skip(x.ceil() as usize)
            .find(|(_, b)| b.abs() < 1e-18)
            .map(|(k, _)| k)
            .unwrap_or(bessel.len());
        // (-i)^k for dt > 0, (+i)^k for dt < 0.
        let unit = C64::new(0.0, -sign);
        self.prev.resize(dim, ZERO);
        self.cur.resize(dim, ZERO);
        self.next.resize(dim, ZERO);
        self.acc.resize(dim, ZERO);
        for col in states.chunks_mut(dim) {
            self.prev.copy_from_slice(col);
            ham.matvec(&vals, &self.prev, &mut self.cur);
            for (c, p) in self.cur.iter_mut().zip(&self.prev) {
                *c -= p * shift;
            }
            let mut phase = unit;
            for ((a, p), c) in self.acc.iter_mut().zip(&self.prev).zip(&self.cur) {
                *a = p * bessel[0] + c * phase * (2.0 * bessel[1]);
            }
            self.matvecs += 1;
            for b in bessel.iter().take(last).skip(2) {
                phase *= unit;
                ham.matvec(&vals, &self.cur, &mut self.next);
                self.matvecs += 1;
                let coeff = phase * (2.0 * b);
                for ((n, (c, p)), a) in self
                    .next
                    .iter_mut()
                    .zip(self.cur.iter().zip(&self.prev))
                    .zip(self.acc.iter_mut())
                {
                    *n = (*n - c * shift) * 2.0 - p;
                    *a += *n * coeff;
                }
                std::mem::swap(&mut self.prev, &mut self.cur);
                std::mem::swap(&mut self.cur, &mut self.next);
            }
            for (o, a) in col.iter_mut().zip(&self.acc) {
                *o = a * global;
            }
        }
        self.vals = vals;
    }
}
