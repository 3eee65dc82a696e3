//! Mass, discrete energy, the per-step energy balance and error bookkeeping.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mesh::{DgField, DgSpace};
use crate::spatial::{assemble_bh, stabilization_dissipation, BoundaryValues, Scheme, StateVector};
use crate::thermo::{mixture_energy, MixtureParams};

/// `∫ρ dx`.
pub fn total_mass(space: &DgSpace, rho: &DgField) -> Result<f64> {
    space.integrate(rho)
}

/// `Ê = ∫ ρf̃(ρ, φ) + (γ/2)σ² + (ρ/2)v² dx`.
pub fn discrete_energy(space: &DgSpace, mix: &MixtureParams, u: &StateVector) -> Result<f64> {
    u.check(space)?;
    let basis = space.basis();
    let mut total = 0.0;
    for cell in 0..space.n_cells() {
        let jac = 0.5 * space.mesh().cell_size(cell);
        for q in 0..basis.n_quad() {
            let rho = space.eval_quad(&u.rho, cell, q).0;
            let phi = space.eval_quad(&u.phi, cell, q).0;
            let v = space.eval_quad(&u.v, cell, q).0;
            let sigma = space.eval_quad(&u.sigma, cell, q).0;
            let density = mixture_energy(rho, phi, mix)?
                + 0.5 * mix.gamma * sigma * sigma
                + 0.5 * rho * v * v;
            total += basis.quad_weights()[q] * jac * density;
        }
    }
    Ok(total)
}

/// Terms of the discrete energy identity for one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyBalance {
    pub energy_old: f64,
    pub energy_new: f64,
    /// `∫η μ̄²/ρ̄`
    pub mobility: f64,
    /// `B_h[φ̄; v̄, v̄]`
    pub viscous: f64,
    /// `∑ α1⟦τ̄⟧²`, `∑ α2⟦v̄⟧²`, `∑ α3⟦μ̄⟧²`
    pub stabilization: [f64; 3],
}

impl EnergyBalance {
    /// `Ê_new − Ê_old + dt·(all dissipation)`; zero for an exactly solved
    /// source-free step.
    pub fn residual(&self, dt: f64) -> f64 {
        self.energy_new - self.energy_old
            + dt * (self.mobility + self.viscous + self.stabilization.iter().sum::<f64>())
    }
}

/// Energy identity terms for the step `old → new` under homogeneous boundary data.
pub fn energy_balance(scheme: &Scheme, old: &StateVector, new: &StateVector) -> Result<EnergyBalance> {
    let space = &scheme.space;
    let mix = &scheme.mixture;
    let mid = old.midpoint(new);
    let basis = space.basis();
    let mut mobility = 0.0;
    for cell in 0..space.n_cells() {
        let jac = 0.5 * space.mesh().cell_size(cell);
        for q in 0..basis.n_quad() {
            let rho = space.eval_quad(&mid.rho, cell, q).0;
            if !(rho > 0.0) {
                return Err(Error::NonPositiveDensity { rho });
            }
            let mu = space.eval_quad(&mid.mu, cell, q).0;
            mobility += basis.quad_weights()[q] * jac * mix.eta * mu * mu / rho;
        }
    }
    let viscous = assemble_bh(space, mix, &mid.phi, &mid.v, &mid.v, scheme.flux.alpha_b)?;
    let stabilization =
        stabilization_dissipation(space, mix, &mid, &scheme.flux, &BoundaryValues::default())?;
    Ok(EnergyBalance {
        energy_old: discrete_energy(space, mix, old)?,
        energy_new: discrete_energy(space, mix, new)?,
        mobility,
        viscous,
        stabilization,
    })
}

pub fn energy_balance_residual(
    scheme: &Scheme,
    old: &StateVector,
    new: &StateVector,
    dt: f64,
) -> Result<f64> {
    Ok(energy_balance(scheme, old, new)?.residual(dt))
}

/// Per-step record written to the energy time series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepDiagnostics {
    pub time: f64,
    pub total_mass: f64,
    pub energy: f64,
    pub visc_dissipation: f64,
    pub mobility_dissipation: f64,
    pub stab_dissipation: [f64; 3],
    pub energy_balance_residual: f64,
}

impl StepDiagnostics {
    /// Record for the initial state (no dissipation yet).
    pub fn initial(scheme: &Scheme, u: &StateVector, time: f64) -> Result<Self> {
        Ok(Self {
            time,
            total_mass: total_mass(&scheme.space, &u.rho)?,
            energy: discrete_energy(&scheme.space, &scheme.mixture, u)?,
            visc_dissipation: 0.0,
            mobility_dissipation: 0.0,
            stab_dissipation: [0.0; 3],
            energy_balance_residual: 0.0,
        })
    }

    pub fn after_step(
        scheme: &Scheme,
        old: &StateVector,
        new: &StateVector,
        time: f64,
        dt: f64,
    ) -> Result<Self> {
        let b = energy_balance(scheme, old, new)?;
        Ok(Self {
            time,
            total_mass: total_mass(&scheme.space, &new.rho)?,
            energy: b.energy_new,
            visc_dissipation: b.viscous,
            mobility_dissipation: b.mobility,
            stab_dissipation: b.stabilization,
            energy_balance_residual: b.residual(dt),
        })
    }
}

/// Experimental orders `log(e_{i−1}/e_i) / log(r_i/r_{i−1})` for a sequence
/// of errors at increasing resolutions `r` (cell counts, or `1/dt`).
pub fn compute_eoc(errors: &[f64], resolutions: &[f64]) -> Result<Vec<f64>> {
    if errors.len() != resolutions.len() || errors.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "need matching sequences of length ≥ 2, got {} errors and {} resolutions",
            errors.len(),
            resolutions.len()
        )));
    }
    if let Some(e) = errors.iter().find(|e| !(**e > 0.0) || !e.is_finite()) {
        return Err(Error::InvalidInput(format!("errors must be positive, got {e}")));
    }
    if let Some(r) = resolutions.iter().find(|r| !(**r > 0.0)) {
        return Err(Error::InvalidInput(format!("resolutions must be positive, got {r}")));
    }
    Ok(errors
        .windows(2)
        .zip(resolutions.windows(2))
        .map(|(e, r)| (e[0] / e[1]).ln() / (r[1] / r[0]).ln())
        .collect())
}

/// Discrete-time `L∞(0,T; L2)` norm: the largest sampled value.
pub fn linf_l2_error(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidInput("no error samples".into()));
    }
    Ok(samples.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

/// Broken L2 errors of `(ρ, v, φ)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct FieldErrors {
    pub rho: f64,
    pub v: f64,
    pub phi: f64,
}

impl FieldErrors {
    pub fn max(self, other: FieldErrors) -> FieldErrors {
        FieldErrors {
            rho: self.rho.max(other.rho),
            v: self.v.max(other.v),
            phi: self.phi.max(other.phi),
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.rho, self.v, self.phi]
    }
}

/// L2 errors of the primal variables against `exact(x) = (ρ, v, φ)`.
pub fn field_errors(
    space: &DgSpace,
    u: &StateVector,
    exact: impl Fn(f64) -> [f64; 3],
) -> Result<FieldErrors> {
    Ok(FieldErrors {
        rho: space.l2_error(&u.rho, |x| exact(x)[0])?,
        v: space.l2_error(&u.v, |x| exact(x)[1])?,
        phi: space.l2_error(&u.phi, |x| exact(x)[2])?,
    })
}
