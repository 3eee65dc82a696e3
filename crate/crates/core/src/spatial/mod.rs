//! Spatial discretization: state layout, face fluxes and the step residual.

mod flux;
mod residual;
mod state;

pub use flux::{
    assemble_bh, flux_terms, stabilization_dissipation, BoundaryValues, FluxParams, FluxSlot,
};
pub use residual::{assemble_residual, StepContext};
pub use state::{flat_index, StateVector, Var, N_FIELDS};

use crate::error::Result;
use crate::mesh::DgSpace;
use crate::thermo::MixtureParams;

/// Discrete problem definition: space, material parameters and face
/// stabilization.
#[derive(Debug, Clone)]
pub struct Scheme {
    pub space: DgSpace,
    pub mixture: MixtureParams,
    pub flux: FluxParams,
}

impl Scheme {
    pub fn new(space: DgSpace, mixture: MixtureParams, flux: FluxParams) -> Result<Self> {
        mixture.validate()?;
        flux.validate()?;
        Ok(Self {
            space,
            mixture,
            flux,
        })
    }
}

/// External data of a run: Dirichlet values of `v` and `σ` and volume
/// sources for the density, momentum and phase-field equations.
pub trait Forcing: Sync {
    fn boundary(&self, _t: f64) -> BoundaryValues {
        BoundaryValues::default()
    }

    fn has_sources(&self) -> bool {
        false
    }

    /// `(S_ρ, S_v, S_φ)` at `(x, t)`.
    fn sources(&self, _x: f64, _t: f64) -> [f64; 3] {
        [0.0; 3]
    }
}

/// No sources, homogeneous boundary data.
#[derive(Debug, Clone, Copy, Default)]
pub struct Unforced;

impl Forcing for Unforced {}
