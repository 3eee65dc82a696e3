use crate::error::{Error, Result};
use crate::mesh::{DgField, DgSpace};

pub const N_FIELDS: usize = 6;

/// Unknowns of the mixed system, in storage order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    Rho = 0,
    V = 1,
    Phi = 2,
    Mu = 3,
    Tau = 4,
    Sigma = 5,
}

impl Var {
    pub const ALL: [Var; N_FIELDS] = [Var::Rho, Var::V, Var::Phi, Var::Mu, Var::Tau, Var::Sigma];

    pub fn name(self) -> &'static str {
        match self {
            Var::Rho => "rho",
            Var::V => "v",
            Var::Phi => "phi",
            Var::Mu => "mu",
            Var::Tau => "tau",
            Var::Sigma => "sigma",
        }
    }
}

/// Discrete unknown `(ρ, v, φ, μ, τ, σ)` at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub rho: DgField,
    pub v: DgField,
    pub phi: DgField,
    pub mu: DgField,
    pub tau: DgField,
    pub sigma: DgField,
}

impl StateVector {
    pub fn zeros(space: &DgSpace) -> Self {
        Self {
            rho: space.zeros(),
            v: space.zeros(),
            phi: space.zeros(),
            mu: space.zeros(),
            tau: space.zeros(),
            sigma: space.zeros(),
        }
    }

    pub fn field(&self, var: Var) -> &DgField {
        match var {
            Var::Rho => &self.rho,
            Var::V => &self.v,
            Var::Phi => &self.phi,
            Var::Mu => &self.mu,
            Var::Tau => &self.tau,
            Var::Sigma => &self.sigma,
        }
    }

    pub fn field_mut(&mut self, var: Var) -> &mut DgField {
        match var {
            Var::Rho => &mut self.rho,
            Var::V => &mut self.v,
            Var::Phi => &mut self.phi,
            Var::Mu => &mut self.mu,
            Var::Tau => &mut self.tau,
            Var::Sigma => &mut self.sigma,
        }
    }

    pub fn check(&self, space: &DgSpace) -> Result<()> {
        Var::ALL
            .iter()
            .try_for_each(|&var| space.check(self.field(var)))
    }

    /// Flat cell-major layout: `cell * 6 * n + var * n + node`.
    pub fn to_flat(&self) -> Vec<f64> {
        let n = self.rho.degree() + 1;
        let cells = self.rho.n_cells();
        let mut out = Vec::with_capacity(cells * N_FIELDS * n);
        for cell in 0..cells {
            for var in Var::ALL {
                out.extend_from_slice(self.field(var).cell(cell));
            }
        }
        out
    }

    pub fn from_flat(space: &DgSpace, flat: &[f64]) -> Result<Self> {
        let n = space.n_local();
        let cells = space.n_cells();
        if flat.len() != cells * N_FIELDS * n {
            return Err(Error::MeshMismatch);
        }
        let mut state = Self::zeros(space);
        for cell in 0..cells {
            for var in Var::ALL {
                let start = (cell * N_FIELDS + var as usize) * n;
                state
                    .field_mut(var)
                    .cell_mut(cell)
                    .copy_from_slice(&flat[start..start + n]);
            }
        }
        Ok(state)
    }

    /// `(self + other) / 2`, field by field.
    pub fn midpoint(&self, other: &StateVector) -> StateVector {
        let mut out = self.clone();
        for var in Var::ALL {
            let dst = out.field_mut(var).coeffs_mut();
            for (a, b) in dst.iter_mut().zip(other.field(var).coeffs()) {
                *a = 0.5 * (*a + b);
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &StateVector) -> f64 {
        Var::ALL
            .iter()
            .map(|&v| self.field(v).max_abs_diff(other.field(v)))
            .fold(0.0, f64::max)
    }
}

/// Index of `(cell, var, node)` in the flat layout.
#[inline]
pub fn flat_index(n_local: usize, cell: usize, var: Var, node: usize) -> usize {
    (cell * N_FIELDS + var as usize) * n_local + node
}
