//! Face terms: the numerical fluxes `F1`–`F6` (with optional jump
//! stabilization) and the symmetric interior penalty form `B_h`.
//!
//! Boundary faces carry a ghost exterior state. The ghost copies the interior
//! trace for `ρ, φ, μ, τ` and takes the prescribed Dirichlet data for `v` and
//! `σ`; averages at the boundary use the interior side only. With the
//! boundary nodes of `v` and `σ` pinned to their data every boundary jump is
//! zero and only interior faces contribute.

use serde::{Deserialize, Serialize};

use super::state::StateVector;
use crate::error::{Error, Result};
use crate::mesh::{DgField, DgSpace, FaceKind};
use crate::thermo::{viscosity, MixtureParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluxParams {
    /// Interior penalty coefficient of `B_h`.
    pub alpha_b: f64,
    /// Stabilization of the density flux by `⟦τ⟧`.
    pub alpha1: f64,
    /// Stabilization of the momentum flux by `⟦v⟧`.
    pub alpha2: f64,
    /// Stabilization of the phase-field flux by `⟦μ⟧`.
    pub alpha3: f64,
}

impl FluxParams {
    /// Stabilization used by the spatial convergence study at degree `k`.
    pub fn for_degree(k: usize) -> Option<Self> {
        let (alpha_b, alpha1) = match k {
            0 => (1e-3, 0.0),
            1 => (1.7e-3, 6e-3),
            2 => (7e-3, 1e-3),
            3 => (2e-2, 1e-1),
            _ => return None,
        };
        Some(Self {
            alpha_b,
            alpha1,
            alpha2: 0.0,
            alpha3: 0.0,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_b > 0.0) {
            return Err(Error::InvalidInput(format!(
                "alpha_b must be positive, got {}",
                self.alpha_b
            )));
        }
        for (name, a) in [
            ("alpha1", self.alpha1),
            ("alpha2", self.alpha2),
            ("alpha3", self.alpha3),
        ] {
            if !(a >= 0.0) || !a.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "{name} must be nonnegative, got {a}"
                )));
            }
        }
        Ok(())
    }
}

/// Dirichlet data for `v` and `σ` at both ends of the domain, plus optional
/// exterior values `(ρ, φ, μ, τ)` for problems with flow through the boundary.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BoundaryValues {
    pub v_left: f64,
    pub v_right: f64,
    pub sigma_left: f64,
    pub sigma_right: f64,
    pub exterior_left: Option<[f64; 4]>,
    pub exterior_right: Option<[f64; 4]>,
}

impl BoundaryValues {
    pub fn midpoint(&self, other: &BoundaryValues) -> BoundaryValues {
        BoundaryValues {
            v_left: 0.5 * (self.v_left + other.v_left),
            v_right: 0.5 * (self.v_right + other.v_right),
            sigma_left: 0.5 * (self.sigma_left + other.sigma_left),
            sigma_right: 0.5 * (self.sigma_right + other.sigma_right),
            exterior_left: mid_exterior(self.exterior_left, other.exterior_left),
            exterior_right: mid_exterior(self.exterior_right, other.exterior_right),
        }
    }
}

fn mid_exterior(a: Option<[f64; 4]>, b: Option<[f64; 4]>) -> Option<[f64; 4]> {
    match (a, b) {
        (Some(a), Some(b)) => Some(std::array::from_fn(|i| 0.5 * (a[i] + b[i]))),
        (a, None) => a,
        (None, b) => b,
    }
}

/// Trace values on one side of a face.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Side {
    pub rho: f64,
    pub v: f64,
    pub phi: f64,
    pub mu: f64,
    pub tau: f64,
    pub sigma: f64,
    /// `φ` entering the `σ`-equation flux (new time level in the scheme).
    pub phi_sigma: f64,
    pub v_x: f64,
    pub nu: f64,
}

/// Both sides of a face plus the weights that define averages.
#[derive(Debug, Clone, Copy)]
pub(crate) struct FaceTraces {
    pub left: Side,
    pub right: Side,
    pub w_left: f64,
    pub w_right: f64,
    /// Cell carrying test functions on the left/right side (`None` for a ghost).
    pub cell_left: Option<usize>,
    pub cell_right: Option<usize>,
    pub measure: f64,
}

impl FaceTraces {
    #[inline]
    pub fn jump(&self, f: impl Fn(&Side) -> f64) -> f64 {
        f(&self.left) - f(&self.right)
    }
}

#[inline]
fn side(space: &DgSpace, u: &StateVector, phi_sigma: &DgField, mix: &MixtureParams, cell: usize, right_end: bool) -> Side {
    let pick = |(l, r): (f64, f64)| if right_end { r } else { l };
    let phi = pick(space.traces(&u.phi, cell));
    Side {
        rho: pick(space.traces(&u.rho, cell)),
        v: pick(space.traces(&u.v, cell)),
        phi,
        mu: pick(space.traces(&u.mu, cell)),
        tau: pick(space.traces(&u.tau, cell)),
        sigma: pick(space.traces(&u.sigma, cell)),
        phi_sigma: pick(space.traces(phi_sigma, cell)),
        v_x: pick(space.deriv_traces(&u.v, cell)),
        nu: viscosity(phi, mix),
    }
}

fn ghost(interior: &Side, v: f64, sigma: f64, exterior: Option<[f64; 4]>) -> Side {
    let mut g = Side {
        v,
        sigma,
        v_x: 0.0,
        ..*interior
    };
    if let Some([rho, phi, mu, tau]) = exterior {
        g.rho = rho;
        g.phi = phi;
        g.phi_sigma = phi;
        g.mu = mu;
        g.tau = tau;
    }
    g
}

/// Traces at `face` of state `u`; `phi_sigma` supplies the `φ` used by the
/// `σ`-flux.
pub(crate) fn face_traces(
    space: &DgSpace,
    u: &StateVector,
    phi_sigma: &DgField,
    mix: &MixtureParams,
    bc: &BoundaryValues,
    face: usize,
) -> Result<FaceTraces> {
    let measure = space.mesh().face_measure(face);
    Ok(match space.face_kind(face)? {
        FaceKind::Interior { left, right } => FaceTraces {
            left: side(space, u, phi_sigma, mix, left, true),
            right: side(space, u, phi_sigma, mix, right, false),
            w_left: 0.5,
            w_right: 0.5,
            cell_left: Some(left),
            cell_right: Some(right),
            measure,
        },
        FaceKind::BoundaryLeft { cell } => {
            let inner = side(space, u, phi_sigma, mix, cell, false);
            FaceTraces {
                left: ghost(&inner, bc.v_left, bc.sigma_left, bc.exterior_left),
                right: inner,
                w_left: 0.0,
                w_right: 1.0,
                cell_left: None,
                cell_right: Some(cell),
                measure,
            }
        }
        FaceKind::BoundaryRight { cell } => {
            let inner = side(space, u, phi_sigma, mix, cell, true);
            FaceTraces {
                left: inner,
                right: ghost(&inner, bc.v_right, bc.sigma_right, bc.exterior_right),
                w_left: 1.0,
                w_right: 0.0,
                cell_left: Some(cell),
                cell_right: None,
                measure,
            }
        }
    })
}

/// Equation slot of a numerical flux (`F1` … `F6`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FluxSlot {
    Density = 1,
    Momentum = 2,
    PhaseField = 3,
    ChemicalPotential = 4,
    Enthalpy = 5,
    Gradient = 6,
}

impl FluxSlot {
    pub fn from_index(i: usize) -> Result<Self> {
        Ok(match i {
            1 => FluxSlot::Density,
            2 => FluxSlot::Momentum,
            3 => FluxSlot::PhaseField,
            4 => FluxSlot::ChemicalPotential,
            5 => FluxSlot::Enthalpy,
            6 => FluxSlot::Gradient,
            _ => {
                return Err(Error::InvalidInput(format!(
                    "flux slot must be in 1..=6, got {i}"
                )))
            }
        })
    }
}

/// Coefficients `(c_L, c_R)` such that the flux of `slot` at this face equals
/// `c_L·t_L + c_R·t_R` for test traces `t_L`, `t_R`.
#[inline]
pub(crate) fn flux_coefficients(
    slot: FluxSlot,
    f: &FaceTraces,
    fp: &FluxParams,
    gamma: f64,
) -> (f64, f64) {
    let (wl, wr) = (f.w_left, f.w_right);
    match slot {
        FluxSlot::Density => {
            let j_mass = f.jump(|s| s.rho * s.v);
            let j_tau = f.jump(|s| s.tau);
            (
                -j_mass * wl + fp.alpha1 * j_tau,
                -j_mass * wr - fp.alpha1 * j_tau,
            )
        }
        FluxSlot::Momentum => {
            let j_tau = f.jump(|s| s.tau);
            let j_phi = f.jump(|s| s.phi);
            let j_v = f.jump(|s| s.v);
            (
                wl * (-j_tau * f.left.rho + j_phi * f.left.mu) + fp.alpha2 * j_v,
                wr * (-j_tau * f.right.rho + j_phi * f.right.mu) - fp.alpha2 * j_v,
            )
        }
        FluxSlot::PhaseField => {
            let j_phi = f.jump(|s| s.phi);
            let j_mu = f.jump(|s| s.mu);
            (
                -j_phi * wl * f.left.v + fp.alpha3 * j_mu,
                -j_phi * wr * f.right.v - fp.alpha3 * j_mu,
            )
        }
        FluxSlot::ChemicalPotential => {
            let j_sigma = f.jump(|s| s.sigma);
            (-gamma * j_sigma * wl, -gamma * j_sigma * wr)
        }
        FluxSlot::Enthalpy => (0.0, 0.0),
        FluxSlot::Gradient => {
            let j_phi = f.jump(|s| s.phi_sigma);
            (j_phi * wl, j_phi * wr)
        }
    }
}

/// Face part of `B_h` for trial traces in `f` against a test function.
/// Returns coefficients on `(t_L, t_R, t'_L, t'_R)` where `t'` are physical
/// derivative traces of the test function.
#[inline]
pub(crate) fn penalty_coefficients(f: &FaceTraces, alpha_b: f64) -> [f64; 4] {
    let avg_stress = f.w_left * f.left.nu * f.left.v_x + f.w_right * f.right.nu * f.right.v_x;
    let j_v = f.jump(|s| s.v);
    let pen = alpha_b / f.measure * j_v;
    [
        -avg_stress + pen,
        avg_stress - pen,
        -f.w_left * f.left.nu * j_v,
        -f.w_right * f.right.nu * j_v,
    ]
}

/// `(trace, derivative trace)` of a test field on the given side of a face.
#[inline]
fn test_traces(space: &DgSpace, test: &DgField, cell: Option<usize>, right_end: bool) -> (f64, f64) {
    match cell {
        None => (0.0, 0.0),
        Some(c) => {
            let t = space.traces(test, c);
            let d = space.deriv_traces(test, c);
            if right_end {
                (t.1, d.1)
            } else {
                (t.0, d.0)
            }
        }
    }
}

/// `∑_faces F_slot[U, test]`. Boundary faces use the ghost state defined by
/// `bc`; they contribute nothing when `U` satisfies the boundary data.
pub fn flux_terms(
    space: &DgSpace,
    mix: &MixtureParams,
    u: &StateVector,
    slot: FluxSlot,
    test: &DgField,
    fp: &FluxParams,
    bc: &BoundaryValues,
) -> Result<f64> {
    u.check(space)?;
    space.check(test)?;
    let mut total = 0.0;
    for face in 0..space.mesh().n_faces() {
        let f = face_traces(space, u, &u.phi, mix, bc, face)?;
        let (cl, cr) = flux_coefficients(slot, &f, fp, mix.gamma);
        let tl = test_traces(space, test, f.cell_left, true).0;
        let tr = test_traces(space, test, f.cell_right, false).0;
        total += cl * tl + cr * tr;
    }
    Ok(total)
}

/// Symmetric interior penalty form `B_h[φ; v, X]` with homogeneous boundary
/// data (`v = 0` outside the domain).
pub fn assemble_bh(
    space: &DgSpace,
    mix: &MixtureParams,
    phi: &DgField,
    v: &DgField,
    x: &DgField,
    alpha_b: f64,
) -> Result<f64> {
    for f in [phi, v, x] {
        space.check(f)?;
    }
    let basis = space.basis();
    let mut total = 0.0;
    for cell in 0..space.n_cells() {
        let jac = 0.5 * space.mesh().cell_size(cell);
        for q in 0..basis.n_quad() {
            let p = space.eval_quad(phi, cell, q).0;
            let vx = space.eval_quad(v, cell, q).1;
            let xx = space.eval_quad(x, cell, q).1;
            total += basis.quad_weights()[q] * jac * viscosity(p, mix) * vx * xx;
        }
    }
    let mut u = StateVector::zeros(space);
    u.phi = phi.clone();
    u.v = v.clone();
    let bc = BoundaryValues::default();
    for face in 0..space.mesh().n_faces() {
        let f = face_traces(space, &u, phi, mix, &bc, face)?;
        let c = penalty_coefficients(&f, alpha_b);
        let (tl, dl) = test_traces(space, x, f.cell_left, true);
        let (tr, dr) = test_traces(space, x, f.cell_right, false);
        total += c[0] * tl + c[1] * tr + c[2] * dl + c[3] * dr;
    }
    Ok(total)
}

/// `∑_faces α1⟦τ⟧² + α2⟦v⟧² + α3⟦μ⟧²` for the state `u` (ghost jumps on the boundary).
pub fn stabilization_dissipation(
    space: &DgSpace,
    mix: &MixtureParams,
    u: &StateVector,
    fp: &FluxParams,
    bc: &BoundaryValues,
) -> Result<[f64; 3]> {
    let mut out = [0.0; 3];
    for face in 0..space.mesh().n_faces() {
        let f = face_traces(space, u, &u.phi, mix, bc, face)?;
        out[0] += fp.alpha1 * f.jump(|s| s.tau).powi(2);
        out[1] += fp.alpha2 * f.jump(|s| s.v).powi(2);
        out[2] += fp.alpha3 * f.jump(|s| s.mu).powi(2);
    }
    Ok(out)
}
