//! Pointwise thermodynamic closures.
//!
//! The mixture free energy density is
//!
//! ```text
//! ρf̃(ρ, φ) = h(φ)·ρf_L(ρ) + (1 − h(φ))·ρf_V(ρ) + W(φ)/γ
//! ```
//!
//! with stiffened-gas bulk energies `ρf(ρ) = αρ ln ρ + (β − α)ρ + γ_c`, the
//! interpolation `h(φ) = 3φ² − 2φ³` and the double well `W(φ) = aφ²(1 − φ)²`.
//!
//! [`mu_quotient`] and [`tau_quotient`] are the staggered difference quotients
//! that replace `∂φ(ρf̃)` and `∂ρ(ρf̃)` in the time-discrete scheme. They are
//! evaluated through closed-form divided differences, so no cancellation
//! occurs when the increments become small.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this absolute increment the difference quotients switch to their
/// removable-singularity limit.
pub const SPLIT_EPS: f64 = 1e-8;

/// Stiffened-gas parameters for one pure phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseEos {
    pub alpha: f64,
    pub beta: f64,
    pub gamma_c: f64,
}

impl PhaseEos {
    pub const fn new(alpha: f64, beta: f64, gamma_c: f64) -> Self {
        Self {
            alpha,
            beta,
            gamma_c,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) || !self.beta.is_finite() || !self.gamma_c.is_finite() {
            return Err(Error::InvalidInput(format!(
                "equation of state needs alpha > 0 and finite coefficients, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Everything the closures need: both phases plus the phase-field constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureParams {
    pub liquid: PhaseEos,
    pub vapor: PhaseEos,
    /// Double-well height.
    pub a: f64,
    /// Capillarity (interface width) parameter.
    pub gamma: f64,
    /// Allen-Cahn mobility.
    pub eta: f64,
    pub nu_liquid: f64,
    pub nu_vapor: f64,
}

impl MixtureParams {
    /// Parameter set of the manufactured-solution convergence study.
    pub fn convergence_study() -> Self {
        Self {
            liquid: PhaseEos::new(1.5, std::f64::consts::LN_2, 0.0),
            vapor: PhaseEos::new(1.0, 0.0, 0.5),
            a: 0.1,
            gamma: 1e-3,
            eta: 1.0,
            nu_liquid: 1e-3,
            nu_vapor: 1e-3,
        }
    }

    /// Parameter set of the two-interface energy study (mobility 10).
    ///
    /// `a = γ/8` makes a tanh interface of width `4√γ` an equilibrium
    /// profile of the phase-field energy.
    pub fn energy_study() -> Self {
        Self {
            liquid: PhaseEos::new(5.0, -4.0, 11.0),
            vapor: PhaseEos::new(1.5, 1.8, 0.324),
            a: 5e-4 / 8.0,
            gamma: 5e-4,
            eta: 10.0,
            nu_liquid: 0.0125,
            nu_vapor: 0.00125,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.liquid.validate()?;
        self.vapor.validate()?;
        let positive = [
            ("a", self.a),
            ("gamma", self.gamma),
            ("eta", self.eta),
            ("nu_liquid", self.nu_liquid),
            ("nu_vapor", self.nu_vapor),
        ];
        for (name, value) in positive {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "{name} must be positive and finite, got {value}"
                )));
            }
        }
        Ok(())
    }
}

#[inline]
fn check_density(rho: f64) -> Result<()> {
    if rho > 0.0 && rho.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveDensity { rho })
    }
}

/// `h(φ) = 3φ² − 2φ³`
#[inline]
pub fn interp(phi: f64) -> f64 {
    phi * phi * (3.0 - 2.0 * phi)
}

#[inline]
pub fn interp_deriv(phi: f64) -> f64 {
    6.0 * phi * (1.0 - phi)
}

#[inline]
pub fn interp_deriv2(phi: f64) -> f64 {
    6.0 - 12.0 * phi
}

/// `W(φ) = aφ²(1 − φ)²`
#[inline]
pub fn double_well(phi: f64, a: f64) -> f64 {
    let s = phi * (1.0 - phi);
    a * s * s
}

#[inline]
pub fn double_well_deriv(phi: f64, a: f64) -> f64 {
    2.0 * a * phi * (1.0 - phi) * (1.0 - 2.0 * phi)
}

#[inline]
pub fn double_well_deriv2(phi: f64, a: f64) -> f64 {
    a * (2.0 - 12.0 * phi + 12.0 * phi * phi)
}

/// Stiffened-gas energy density `αρ ln ρ + (β − α)ρ + γ_c`.
pub fn bulk_energy(rho: f64, eos: &PhaseEos) -> Result<f64> {
    check_density(rho)?;
    Ok(eos.alpha * rho * rho.ln() + (eos.beta - eos.alpha) * rho + eos.gamma_c)
}

/// `d/dρ` of [`bulk_energy`]: `α ln ρ + β`.
pub fn bulk_energy_deriv(rho: f64, eos: &PhaseEos) -> Result<f64> {
    check_density(rho)?;
    Ok(eos.alpha * rho.ln() + eos.beta)
}

pub fn bulk_energy_deriv2(rho: f64, eos: &PhaseEos) -> Result<f64> {
    check_density(rho)?;
    Ok(eos.alpha / rho)
}

/// Divided difference `[ρ0, ρ1]` of the bulk energy. Equals the derivative
/// at `ρ0` when both arguments coincide.
fn bulk_energy_divided(rho0: f64, rho1: f64, eos: &PhaseEos) -> f64 {
    let d = rho1 - rho0;
    // (ρ1 ln ρ1 − ρ0 ln ρ0)/(ρ1 − ρ0) = ln ρ0 + ρ1·ln(1 + d/ρ0)/d
    let log_ratio_over_d = if d == 0.0 {
        1.0 / rho0
    } else {
        (d / rho0).ln_1p() / d
    };
    eos.alpha * (rho0.ln() + rho1 * log_ratio_over_d) + eos.beta - eos.alpha
}

fn interp_divided(p0: f64, p1: f64) -> f64 {
    3.0 * (p0 + p1) - 2.0 * (p0 * p0 + p0 * p1 + p1 * p1)
}

fn double_well_divided(p0: f64, p1: f64, a: f64) -> f64 {
    // W = a(φ² − 2φ³ + φ⁴)
    let s1 = p0 + p1;
    let s2 = p0 * p0 + p0 * p1 + p1 * p1;
    let s3 = p0 * p0 * p0 + p0 * p0 * p1 + p0 * p1 * p1 + p1 * p1 * p1;
    a * (s1 - 2.0 * s2 + s3)
}

/// Mixture energy `ρf̃(ρ, φ)`.
pub fn mixture_energy(rho: f64, phi: f64, p: &MixtureParams) -> Result<f64> {
    let h = interp(phi);
    Ok(h * bulk_energy(rho, &p.liquid)?
        + (1.0 - h) * bulk_energy(rho, &p.vapor)?
        + double_well(phi, p.a) / p.gamma)
}

/// `∂(ρf̃)/∂ρ`
pub fn mixture_energy_drho(rho: f64, phi: f64, p: &MixtureParams) -> Result<f64> {
    let h = interp(phi);
    Ok(h * bulk_energy_deriv(rho, &p.liquid)? + (1.0 - h) * bulk_energy_deriv(rho, &p.vapor)?)
}

/// `∂(ρf̃)/∂φ`
pub fn mixture_energy_dphi(rho: f64, phi: f64, p: &MixtureParams) -> Result<f64> {
    Ok(interp_deriv(phi) * (bulk_energy(rho, &p.liquid)? - bulk_energy(rho, &p.vapor)?)
        + double_well_deriv(phi, p.a) / p.gamma)
}

/// Second partials `(∂ρρ, ∂ρφ, ∂φφ)` of `ρf̃`; used by the manufactured sources.
pub fn mixture_energy_hessian(rho: f64, phi: f64, p: &MixtureParams) -> Result<[f64; 3]> {
    let h = interp(phi);
    let dh = interp_deriv(phi);
    let rr = h * bulk_energy_deriv2(rho, &p.liquid)? + (1.0 - h) * bulk_energy_deriv2(rho, &p.vapor)?;
    let rp = dh * (bulk_energy_deriv(rho, &p.liquid)? - bulk_energy_deriv(rho, &p.vapor)?);
    let pp = interp_deriv2(phi) * (bulk_energy(rho, &p.liquid)? - bulk_energy(rho, &p.vapor)?)
        + double_well_deriv2(phi, p.a) / p.gamma;
    Ok([rr, rp, pp])
}

/// Interpolated viscosity `ν(φ) = h(φ)ν_L + (1 − h(φ))ν_V`.
#[inline]
pub fn viscosity(phi: f64, p: &MixtureParams) -> f64 {
    let h = interp(phi);
    h * p.nu_liquid + (1.0 - h) * p.nu_vapor
}

#[inline]
pub fn viscosity_deriv(phi: f64, p: &MixtureParams) -> f64 {
    interp_deriv(phi) * (p.nu_liquid - p.nu_vapor)
}

/// Staggered quotient replacing `∂φ(ρf̃)` over one time step:
///
/// ```text
/// [ρ1f̃(ρ1,φ1) − ρ1f̃(ρ1,φ0) + ρ0f̃(ρ0,φ1) − ρ0f̃(ρ0,φ0)] / (2(φ1 − φ0))
/// ```
pub fn mu_quotient(
    rho_old: f64,
    rho_new: f64,
    phi_old: f64,
    phi_new: f64,
    p: &MixtureParams,
) -> Result<f64> {
    check_density(rho_old)?;
    check_density(rho_new)?;
    if (phi_new - phi_old).abs() <= SPLIT_EPS {
        let mid = 0.5 * (phi_old + phi_new);
        return Ok(0.5
            * (mixture_energy_dphi(rho_new, mid, p)? + mixture_energy_dphi(rho_old, mid, p)?));
    }
    let jump = |rho: f64| -> Result<f64> {
        Ok(bulk_energy(rho, &p.liquid)? - bulk_energy(rho, &p.vapor)?)
    };
    Ok(0.5 * (jump(rho_new)? + jump(rho_old)?) * interp_divided(phi_old, phi_new)
        + double_well_divided(phi_old, phi_new, p.a) / p.gamma)
}

/// Staggered quotient replacing `∂ρ(ρf̃)` over one time step:
///
/// ```text
/// [ρ1f̃(ρ1,φ1) − ρ0f̃(ρ0,φ1) + ρ1f̃(ρ1,φ0) − ρ0f̃(ρ0,φ0)] / (2(ρ1 − ρ0))
/// ```
pub fn tau_quotient(
    rho_old: f64,
    rho_new: f64,
    phi_old: f64,
    phi_new: f64,
    p: &MixtureParams,
) -> Result<f64> {
    check_density(rho_old)?;
    check_density(rho_new)?;
    if (rho_new - rho_old).abs() <= SPLIT_EPS {
        let mid = 0.5 * (rho_old + rho_new);
        return Ok(0.5
            * (mixture_energy_drho(mid, phi_new, p)? + mixture_energy_drho(mid, phi_old, p)?));
    }
    let dl = bulk_energy_divided(rho_old, rho_new, &p.liquid);
    let dv = bulk_energy_divided(rho_old, rho_new, &p.vapor);
    let at = |phi: f64| {
        let h = interp(phi);
        h * dl + (1.0 - h) * dv
    };
    Ok(0.5 * (at(phi_new) + at(phi_old)))
}
