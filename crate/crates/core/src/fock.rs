//! Truncated Fock space operators and the driven Kerr oscillator Hamiltonian.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{commutator, frobenius, hermiticity_defect, CMatrix, ControlledHamiltonian, C64, I, ZERO};

/// Fock truncation used when nothing else is requested.
pub const DEFAULT_DIM: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FockSpace {
    dim: usize,
}

impl FockSpace {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidSpace(dim));
        }
        Ok(Self { dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ladder(&self) -> CMatrix {
        let mut a = CMatrix::zeros(self.dim, self.dim);
        for n in 1..self.dim {
            a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
        }
        a
    }

    pub fn number(&self) -> CMatrix {
        CMatrix::from_fn(self.dim, self.dim, |r, c| if r == c { C64::new(r as f64, 0.0) } else { ZERO })
    }

    pub fn parity(&self) -> CMatrix {
        CMatrix::from_fn(self.dim, self.dim, |r, c| {
            if r != c {
                ZERO
            } else if r % 2 == 0 {
                C64::new(1.0, 0.0)
            } else {
                C64::new(-1.0, 0.0)
            }
        })
    }

    /// Basis indices of the even (`parity = +1`) or odd sector.
    pub fn sector_indices(&self, even: bool) -> Vec<usize> {
        let start = if even { 0 } else { 1 };
        (start..self.dim).step_by(2).collect()
    }
}

impl Default for FockSpace {
    fn default() -> Self {
        Self { dim: DEFAULT_DIM }
    }
}

/// Annihilation operator with `a|n⟩ = √n |n−1⟩`.
pub fn build_ladder(space: FockSpace) -> CMatrix {
    space.ladder()
}

pub fn parity_operator(space: FockSpace) -> CMatrix {
    space.parity()
}

/// Static system parameters. Energies are in units of the Kerr constant in
/// every scheme of this crate, but `kerr` is kept explicit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KerrCatParams {
    pub kerr: f64,
    pub eps2_0: f64,
    pub delta: f64,
}

impl KerrCatParams {
    pub fn new(kerr: f64, eps2_0: f64, delta: f64) -> Result<Self> {
        if !(kerr > 0.0 && kerr.is_finite()) {
            return Err(Error::InvalidInput(format!("Kerr constant must be positive, got {kerr}")));
        }
        if !(eps2_0 >= 0.0 && eps2_0.is_finite()) {
            return Err(Error::InvalidInput(format!("two-photon drive must be >= 0, got {eps2_0}")));
        }
        if !delta.is_finite() {
            return Err(Error::InvalidInput("detuning must be finite".into()));
        }
        Ok(Self { kerr, eps2_0, delta })
    }

    /// `K = 1`, zero base detuning, `ε₂₀ = α²`.
    pub fn from_alpha2(alpha2: f64) -> Result<Self> {
        Self::new(1.0, alpha2, 0.0)
    }

    pub fn alpha2(&self) -> f64 {
        self.eps2_0 / self.kerr
    }

    pub fn alpha(&self) -> f64 {
        self.alpha2().sqrt()
    }
}

/// Control channels of the Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    /// Detuning shift, couples to `a†a`.
    Detuning,
    /// Two-photon drive modulation, couples to `(a² + a†²)/2`.
    Eps2Mod,
    /// In-phase single-photon drive, couples to `(a + a†)/2`.
    EpsX,
    /// Quadrature single-photon drive, couples to `−i(a − a†)/2`.
    EpsY,
}

impl Channel {
    pub const ALL: [Channel; 4] = [Channel::Detuning, Channel::Eps2Mod, Channel::EpsX, Channel::EpsY];

    pub fn name(&self) -> &'static str {
        match self {
            Channel::Detuning => "delta",
            Channel::Eps2Mod => "eps2_mod",
            Channel::EpsX => "eps_x",
            Channel::EpsY => "eps_y",
        }
    }
}

/// Instantaneous channel values; missing channels are zero.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ChannelValues {
    pub detuning: f64,
    pub eps2_mod: f64,
    pub eps_x: f64,
    pub eps_y: f64,
}

impl ChannelValues {
    pub fn as_array(&self) -> [f64; 4] {
        [self.detuning, self.eps2_mod, self.eps_x, self.eps_y]
    }

    pub fn get(&self, channel: Channel) -> f64 {
        self.as_array()[channel as usize]
    }

    fn check(&self) -> Result<()> {
        for ch in Channel::ALL {
            if !self.get(ch).is_finite() {
                return Err(Error::InvalidInput(format!("channel {} is not finite", ch.name())));
            }
        }
        Ok(())
    }
}

/// Drift plus per-channel coupling operators for one parameter set.
#[derive(Debug, Clone)]
pub struct HamiltonianAssembly {
    params: KerrCatParams,
    space: FockSpace,
    drift: CMatrix,
    channels: [CMatrix; 4],
}

impl HamiltonianAssembly {
    pub fn new(params: KerrCatParams, space: FockSpace) -> Self {
        let a = space.ladder();
        let ad = a.adjoint();
        let n = &ad * &a;
        let a2 = &a * &a;
        let ad2 = &ad * &ad;
        let half = C64::new(0.5, 0.0);
        let squeeze = (&a2 + &ad2) * half;
        let kerr_term = &ad2 * &a2 * C64::new(-0.5 * params.kerr, 0.0);
        let drift = &n * C64::new(params.delta, 0.0) + kerr_term + &squeeze * C64::new(params.eps2_0, 0.0);
        let ex = (&a + &ad) * half;
        let ey = (&a - &ad) * (-I * half);
        Self {
            params,
            space,
            drift,
            channels: [n, squeeze, ex, ey],
        }
    }

    pub fn params(&self) -> &KerrCatParams {
        &self.params
    }

    pub fn space(&self) -> FockSpace {
        self.space
    }

    pub fn drift(&self) -> &CMatrix {
        &self.drift
    }

    pub fn channel(&self, channel: Channel) -> &CMatrix {
        &self.channels[channel as usize]
    }

    pub fn assemble(&self, values: &ChannelValues) -> Result<CMatrix> {
        values.check()?;
        let mut h = self.drift.clone();
        for (v, op) in values.as_array().iter().zip(&self.channels) {
            if *v != 0.0 {
                h += op * C64::new(*v, 0.0);
            }
        }
        Ok(h)
    }

    /// Sparse form with the channel order of [`Channel::ALL`].
    pub fn controlled(&self) -> ControlledHamiltonian {
        ControlledHamiltonian::from_dense(&self.drift, &self.channels)
    }

    /// `‖[H_drift, Π]‖_F / ‖H_drift‖_F`.
    pub fn parity_defect(&self) -> f64 {
        let norm = frobenius(&self.drift);
        if norm == 0.0 {
            return 0.0;
        }
        frobenius(&commutator(&self.drift, &self.space.parity())) / norm
    }
}

pub fn build_hamiltonian(params: &KerrCatParams, space: FockSpace, values: &ChannelValues) -> Result<CMatrix> {
    let h = HamiltonianAssembly::new(*params, space).assemble(values)?;
    let defect = hermiticity_defect(&h);
    if defect > 1e-12 {
        return Err(Error::NotHermitian(defect));
    }
    Ok(h)
}
