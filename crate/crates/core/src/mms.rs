//! Manufactured solution on `[0, 1]` and its compensating sources.
//!
//! With `c = cos 5πt`:
//!
//! ```text
//! ρ = ½c·cos 2πx + 3/2,   v = c·cos 4πx,   φ = ½c·cos 2πx + ½,
//! σ = φ_x,   μ = ∂φ(ρf̃) − γφ_xx,   τ = ∂ρ(ρf̃) + ½v².
//! ```

use std::f64::consts::PI;

use crate::error::Result;
use crate::spatial::{BoundaryValues, Forcing};
use crate::thermo::{
    mixture_energy_dphi, mixture_energy_drho, mixture_energy_hessian, viscosity,
    viscosity_deriv, MixtureParams,
};

const OMEGA_T: f64 = 5.0 * PI;

/// Exact solution `(ρ, v, φ, μ, τ, σ)` at `(x, t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactState {
    pub rho: f64,
    pub v: f64,
    pub phi: f64,
    pub mu: f64,
    pub tau: f64,
    pub sigma: f64,
}

/// Manufactured solution bound to a parameter set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Manufactured {
    pub params: MixtureParams,
}

/// Space and time derivatives of the primal fields needed by the sources.
struct Jet {
    rho: f64,
    rho_x: f64,
    rho_t: f64,
    v: f64,
    v_x: f64,
    v_xx: f64,
    v_t: f64,
    phi: f64,
    phi_x: f64,
    phi_xx: f64,
    phi_t: f64,
}

fn jet(x: f64, t: f64) -> Jet {
    let (c, s) = ((OMEGA_T * t).cos(), (OMEGA_T * t).sin());
    let (c2, s2) = ((2.0 * PI * x).cos(), (2.0 * PI * x).sin());
    let (c4, s4) = ((4.0 * PI * x).cos(), (4.0 * PI * x).sin());
    let phi_x = -PI * c * s2;
    Jet {
        rho: 0.5 * c * c2 + 1.5,
        rho_x: phi_x,
        rho_t: -0.5 * OMEGA_T * s * c2,
        v: c * c4,
        v_x: -4.0 * PI * c * s4,
        v_xx: -16.0 * PI * PI * c * c4,
        v_t: -OMEGA_T * s * c4,
        phi: 0.5 * c * c2 + 0.5,
        phi_x,
        phi_xx: -2.0 * PI * PI * c * c2,
        phi_t: -0.5 * OMEGA_T * s * c2,
    }
}

/// `ρ`, `v`, `φ` only; these need no thermodynamics.
pub fn primal(x: f64, t: f64) -> [f64; 3] {
    let j = jet(x, t);
    [j.rho, j.v, j.phi]
}

impl Manufactured {
    pub fn new(params: MixtureParams) -> Self {
        Self { params }
    }

    pub fn exact(&self, x: f64, t: f64) -> Result<ExactState> {
        let j = jet(x, t);
        let p = &self.params;
        Ok(ExactState {
            rho: j.rho,
            v: j.v,
            phi: j.phi,
            mu: mixture_energy_dphi(j.rho, j.phi, p)? - p.gamma * j.phi_xx,
            tau: mixture_energy_drho(j.rho, j.phi, p)? + 0.5 * j.v * j.v,
            sigma: j.phi_x,
        })
    }

    /// `(S_ρ, S_v, S_φ)` in closed form.
    pub fn source_terms(&self, x: f64, t: f64) -> Result<[f64; 3]> {
        let j = jet(x, t);
        let p = &self.params;
        let [rr, rp, _] = mixture_energy_hessian(j.rho, j.phi, p)?;
        let mu = mixture_energy_dphi(j.rho, j.phi, p)? - p.gamma * j.phi_xx;
        let tau_x = rr * j.rho_x + rp * j.phi_x + j.v * j.v_x;
        let stress_x = viscosity_deriv(j.phi, p) * j.phi_x * j.v_x + viscosity(j.phi, p) * j.v_xx;
        Ok([
            j.rho_t + j.rho_x * j.v + j.rho * j.v_x,
            j.rho * j.v_t + j.rho * tau_x - mu * j.phi_x - stress_x,
            j.phi_t + j.phi_x * j.v + p.eta * mu / j.rho,
        ])
    }
}

impl Forcing for Manufactured {
    fn boundary(&self, t: f64) -> BoundaryValues {
        let c = (OMEGA_T * t).cos();
        let exterior = |x: f64| {
            self.exact(x, t)
                .ok()
                .map(|e| [e.rho, e.phi, e.mu, e.tau])
        };
        BoundaryValues {
            v_left: c,
            v_right: c,
            sigma_left: 0.0,
            sigma_right: 0.0,
            exterior_left: exterior(0.0),
            exterior_right: exterior(1.0),
        }
    }

    fn has_sources(&self) -> bool {
        true
    }

    fn sources(&self, x: f64, t: f64) -> [f64; 3] {
        // ρ stays within [1, 2] for every (x, t), so the thermodynamics cannot fail
        self.source_terms(x, t)
            .expect("manufactured density is bounded away from zero")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_at_origin() {
        let m = Manufactured::new(MixtureParams::convergence_study());
        let e = m.exact(0.0, 0.0).unwrap();
        assert_eq!((e.rho, e.v, e.phi, e.sigma), (2.0, 1.0, 1.0, 0.0));
        let e = m.exact(0.25, 0.1).unwrap();
        // cos(π/2) = 0 in time: all perturbations vanish
        assert!((e.rho - 1.5).abs() < 1e-15 && e.v.abs() < 1e-15 && (e.phi - 0.5).abs() < 1e-15);
    }

    #[test]
    fn boundary_data_matches_exact_solution() {
        let m = Manufactured::new(MixtureParams::convergence_study());
        for t in [0.0, 0.013, 0.03] {
            let bc = m.boundary(t);
            for (x, v, s) in [(0.0, bc.v_left, bc.sigma_left), (1.0, bc.v_right, bc.sigma_right)] {
                let e = m.exact(x, t).unwrap();
                assert!((e.v - v).abs() < 1e-14);
                assert!((e.sigma - s).abs() < 1e-12);
            }
        }
    }
}
