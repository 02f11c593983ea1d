//! Closed-form cat-state quantities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::FockSpace;
use crate::linalg::{pauli, CMatrix, CVector, C64, I};

/// Even and odd cat states `C± = (|α⟩ ± |−α⟩)/𝒩±` in a truncated Fock space.
#[derive(Debug, Clone)]
pub struct CatBasis {
    pub alpha: f64,
    pub plus: CVector,
    pub minus: CVector,
    /// `(𝒩₊, 𝒩₋)`; `𝒩₋ = 0` at `α = 0`, where the odd state is `|1⟩`.
    pub norms: (f64, f64),
}

/// Smallest truncation accepted for a given cat size.
pub fn min_dim(alpha2: f64) -> usize {
    (alpha2 + 8.0 * (alpha2 + 1.0).sqrt()).floor() as usize + 1
}

pub fn cat_vectors(alpha: f64, space: FockSpace) -> Result<CatBasis> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidInput(format!("cat amplitude must be >= 0, got {alpha}")));
    }
    let a2 = alpha * alpha;
    let dim = space.dim();
    if dim < min_dim(a2) {
        return Err(Error::Truncation { dim, alpha2: a2 });
    }
    let mut plus = CVector::zeros(dim);
    let mut minus = CVector::zeros(dim);
    if alpha == 0.0 {
        plus[0] = C64::new(1.0, 0.0);
        minus[1] = C64::new(1.0, 0.0);
        return Ok(CatBasis { alpha, plus, minus, norms: (2.0, 0.0) });
    }
    let n_plus = (2.0 * (1.0 + (-2.0 * a2).exp())).sqrt();
    let n_minus = (-2.0 * (-2.0 * a2).exp_m1()).sqrt();
    // Coherent amplitudes e^{−α²/2} αⁿ/√n!, built recursively.
    let mut c = (-0.5 * a2).exp();
    for n in 0..dim {
        if n > 0 {
            c *= alpha / (n as f64).sqrt();
        }
        if n % 2 == 0 {
            plus[n] = C64::new(2.0 * c / n_plus, 0.0);
        } else {
            minus[n] = C64::new(2.0 * c / n_minus, 0.0);
        }
    }
    Ok(CatBasis { alpha, plus, minus, norms: (n_plus, n_minus) })
}

/// `(h_x, h_y)` with `h_x = 2α/√(1 − e^{−4α²})` and `h_y = h_x e^{−2α²}`.
pub fn matrix_elements(alpha: f64) -> (f64, f64) {
    let a2 = alpha * alpha;
    if a2 < 1e-300 {
        return (1.0, 1.0);
    }
    let hx = 2.0 * alpha / (-(-4.0 * a2).exp_m1()).sqrt();
    (hx, hx * (-2.0 * a2).exp())
}

/// Single-photon operator `a` projected onto the cat pair: `(h_x X + i h_y Y)/2`.
pub fn ladder_projection(alpha: f64) -> CMatrix {
    let (hx, hy) = matrix_elements(alpha);
    (pauli::x() * C64::new(hx, 0.0) + pauli::y() * (I * hy)) * C64::new(0.5, 0.0)
}

/// Rotation axis generated by a single-photon drive `ε(cos φ̃ ... )` of phase `φ̃`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveAxis {
    pub phi_tilde: f64,
    /// Bloch azimuth of the rotation axis.
    pub phi: f64,
    /// Matrix-element magnitude.
    pub h_phi: f64,
}

pub fn axis_from_drive_phase(phi_tilde: f64, alpha: f64) -> DriveAxis {
    let (hx, _) = matrix_elements(alpha);
    let damp = (-2.0 * alpha * alpha).exp();
    let (s, c) = phi_tilde.sin_cos();
    DriveAxis {
        phi_tilde,
        phi: (-s * damp).atan2(c),
        h_phi: hx * (c * c + s * s * damp * damp).sqrt(),
    }
}

/// Inverse of [`axis_from_drive_phase`]: drive phase producing azimuth `phi`.
pub fn drive_phase_for_axis(phi: f64, alpha: f64) -> DriveAxis {
    let damp = (-2.0 * alpha * alpha).exp();
    let (s, c) = phi.sin_cos();
    axis_from_drive_phase((-s).atan2(c * damp), alpha)
}

/// Number operator restricted to the cat pair, `a†a ≃ c₀ 𝟙 + c_z Z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectedNumber {
    pub identity: f64,
    pub z: f64,
    /// Large-cat asymptote `α²`.
    pub asymptotic_identity: f64,
    /// Large-cat asymptote `−2α² e^{−2α²}`.
    pub asymptotic_z: f64,
}

/// Exact coefficients from `⟨n⟩₊ = α² tanh α²` and `⟨n⟩₋ = α² coth α²`.
pub fn projected_number_operator(alpha: f64) -> ProjectedNumber {
    let a2 = alpha * alpha;
    let (identity, z) = if a2 == 0.0 {
        (0.5, -0.5)
    } else {
        (a2 / (2.0 * a2).tanh(), -a2 / (2.0 * a2).sinh())
    };
    ProjectedNumber {
        identity,
        z,
        asymptotic_identity: a2,
        asymptotic_z: -2.0 * a2 * (-2.0 * a2).exp(),
    }
}

/// `⟨v|M|v⟩` real part.
pub fn expectation(v: &CVector, m: &CMatrix) -> f64 {
    (v.adjoint() * m * v)[(0, 0)].re
}
