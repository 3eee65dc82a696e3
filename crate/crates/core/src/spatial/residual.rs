//! Fully discrete residual of one time step.

use super::flux::{face_traces, flux_coefficients, penalty_coefficients, BoundaryValues, FluxSlot};
use super::state::{flat_index, StateVector, Var, N_FIELDS};
use super::{Forcing, Scheme};
use crate::error::{Error, Result};
use crate::thermo::{mu_quotient, tau_quotient, viscosity};

/// Equation rows touched by each flux slot.
const FLUX_ROWS: [(FluxSlot, Var); 5] = [
    (FluxSlot::Density, Var::Rho),
    (FluxSlot::Momentum, Var::V),
    (FluxSlot::PhaseField, Var::Phi),
    (FluxSlot::ChemicalPotential, Var::Mu),
    (FluxSlot::Gradient, Var::Sigma),
];

/// Data fixed during one step: the old state, boundary data at both ends of
/// the step and the sources at `t_n + dt/2` on every quadrature point.
pub struct StepContext<'a> {
    scheme: &'a Scheme,
    old: &'a StateVector,
    dt: f64,
    bc_new: BoundaryValues,
    bc_mid: BoundaryValues,
    sources: Option<Vec<[f64; 3]>>,
}

impl<'a> StepContext<'a> {
    pub fn new(
        scheme: &'a Scheme,
        old: &'a StateVector,
        t_old: f64,
        dt: f64,
        forcing: &dyn Forcing,
    ) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidInput(format!("time step must be positive, got {dt}")));
        }
        old.check(&scheme.space)?;
        let bc_old = forcing.boundary(t_old);
        let bc_new = forcing.boundary(t_old + dt);
        let sources = forcing.has_sources().then(|| {
            let t_mid = t_old + 0.5 * dt;
            let space = &scheme.space;
            (0..space.n_cells())
                .flat_map(|cell| space.quad_coords(cell).collect::<Vec<_>>())
                .map(|x| forcing.sources(x, t_mid))
                .collect()
        });
        Ok(Self {
            scheme,
            old,
            dt,
            bc_new,
            bc_mid: bc_old.midpoint(&bc_new),
            sources,
        })
    }

    pub fn scheme(&self) -> &Scheme {
        self.scheme
    }

    pub fn old(&self) -> &StateVector {
        self.old
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn boundary_new(&self) -> &BoundaryValues {
        &self.bc_new
    }

    pub fn boundary_mid(&self) -> &BoundaryValues {
        &self.bc_mid
    }

    /// Whether the boundary nodes of `v` and `σ` are pinned (degree ≥ 1).
    pub fn pinned(&self) -> bool {
        self.scheme.space.degree() >= 1
    }

    /// Flat indices of the pinned unknowns, paired with their prescribed values.
    pub fn pinned_dofs(&self) -> Vec<(usize, f64)> {
        if !self.pinned() {
            return Vec::new();
        }
        let space = &self.scheme.space;
        let n = space.n_local();
        let last = space.n_cells() - 1;
        let bc = &self.bc_new;
        vec![
            (flat_index(n, 0, Var::V, 0), bc.v_left),
            (flat_index(n, last, Var::V, n - 1), bc.v_right),
            (flat_index(n, 0, Var::Sigma, 0), bc.sigma_left),
            (flat_index(n, last, Var::Sigma, n - 1), bc.sigma_right),
        ]
    }

    /// Residual of the step for candidate new state `new`, flat layout.
    pub fn residual(&self, new: &StateVector) -> Result<Vec<f64>> {
        let scheme = self.scheme;
        let space = &scheme.space;
        let mix = &scheme.mixture;
        let basis = space.basis();
        new.check(space)?;
        let old = self.old;
        let n = space.n_local();
        let nq = basis.n_quad();
        let dt = self.dt;
        let mut r = vec![0.0; space.n_cells() * N_FIELDS * n];

        for cell in 0..space.n_cells() {
            let jac = 0.5 * space.mesh().cell_size(cell);
            let scale = 1.0 / jac;
            for q in 0..nq {
                let w = basis.quad_weights()[q] * jac;
                let (r0, r0x) = space.eval_quad(&old.rho, cell, q);
                let (r1, r1x) = space.eval_quad(&new.rho, cell, q);
                let (v0, v0x) = space.eval_quad(&old.v, cell, q);
                let (v1, v1x) = space.eval_quad(&new.v, cell, q);
                let (p0, p0x) = space.eval_quad(&old.phi, cell, q);
                let (p1, p1x) = space.eval_quad(&new.phi, cell, q);
                let m = 0.5 * (space.eval_quad(&old.mu, cell, q).0 + space.eval_quad(&new.mu, cell, q).0);
                let tx = 0.5 * (space.eval_quad(&old.tau, cell, q).1 + space.eval_quad(&new.tau, cell, q).1);
                let t = 0.5 * (space.eval_quad(&old.tau, cell, q).0 + space.eval_quad(&new.tau, cell, q).0);
                let sx = 0.5 * (space.eval_quad(&old.sigma, cell, q).1 + space.eval_quad(&new.sigma, cell, q).1);
                let s1 = space.eval_quad(&new.sigma, cell, q).0;

                let positivity = |_| Error::DensityPositivityLoss {
                    cell,
                    x: space.mesh().map(cell, basis.quad_points()[q]),
                };
                let q_mu = mu_quotient(r0, r1, p0, p1, mix).map_err(positivity)?;
                let q_tau = tau_quotient(r0, r1, p0, p1, mix).map_err(positivity)?;

                let (rb, rbx) = (0.5 * (r0 + r1), 0.5 * (r0x + r1x));
                let (vb, vbx) = (0.5 * (v0 + v1), 0.5 * (v0x + v1x));
                let (pb, pbx) = (0.5 * (p0 + p1), 0.5 * (p0x + p1x));
                let [s_rho, s_v, s_phi] = match &self.sources {
                    Some(s) => s[cell * nq + q],
                    None => [0.0; 3],
                };

                // (ρv²)_x − (ρv)_x v − ½ρ(v²)_x, kept in its literal form
                let conv = (rbx * vb * vb + 2.0 * rb * vb * vbx)
                    - (rbx * vb + rb * vbx) * vb
                    - rb * vb * vbx;

                let e_rho = (r1 - r0) / dt + rbx * vb + rb * vbx - s_rho;
                let e_v = rb * (v1 - v0) / dt + conv + rb * tx - m * pbx - s_v;
                let e_v_grad = viscosity(pb, mix) * vbx;
                let e_phi = (p1 - p0) / dt + pbx * vb + mix.eta * m / rb - s_phi;
                let e_mu = m - q_mu + mix.gamma * sx;
                let e_tau = t - q_tau - 0.25 * (v1 * v1 + v0 * v0);
                let e_sigma = s1 - p1x;

                let vals = basis.values_at(q);
                let ders = basis.derivs_at(q);
                for i in 0..n {
                    let l = w * vals[i];
                    r[flat_index(n, cell, Var::Rho, i)] += e_rho * l;
                    r[flat_index(n, cell, Var::V, i)] += e_v * l + e_v_grad * w * ders[i] * scale;
                    r[flat_index(n, cell, Var::Phi, i)] += e_phi * l;
                    r[flat_index(n, cell, Var::Mu, i)] += e_mu * l;
                    r[flat_index(n, cell, Var::Tau, i)] += e_tau * l;
                    r[flat_index(n, cell, Var::Sigma, i)] += e_sigma * l;
                }
            }
        }

        let mid = old.midpoint(new);
        let tl = basis.trace_left();
        let tr = basis.trace_right();
        let dl = basis.deriv_left();
        let dr = basis.deriv_right();
        for face in 0..space.mesh().n_faces() {
            let f = face_traces(space, &mid, &new.phi, mix, &self.bc_mid, face)?;
            for (slot, var) in FLUX_ROWS {
                let (cl, cr) = flux_coefficients(slot, &f, &scheme.flux, mix.gamma);
                if let Some(c) = f.cell_left {
                    for i in 0..n {
                        r[flat_index(n, c, var, i)] += cl * tr[i];
                    }
                }
                if let Some(c) = f.cell_right {
                    for i in 0..n {
                        r[flat_index(n, c, var, i)] += cr * tl[i];
                    }
                }
            }
            let p = penalty_coefficients(&f, scheme.flux.alpha_b);
            if let Some(c) = f.cell_left {
                let scale = 2.0 / space.mesh().cell_size(c);
                for i in 0..n {
                    r[flat_index(n, c, Var::V, i)] += p[0] * tr[i] + p[2] * dr[i] * scale;
                }
            }
            if let Some(c) = f.cell_right {
                let scale = 2.0 / space.mesh().cell_size(c);
                for i in 0..n {
                    r[flat_index(n, c, Var::V, i)] += p[1] * tl[i] + p[3] * dl[i] * scale;
                }
            }
        }

        if self.pinned() {
            let flat_new = |idx: usize| {
                let cell = idx / (N_FIELDS * n);
                let var = Var::ALL[(idx / n) % N_FIELDS];
                new.field(var).cell(cell)[idx % n]
            };
            for (idx, value) in self.pinned_dofs() {
                r[idx] = flat_new(idx) - value;
            }
        }
        Ok(r)
    }
}

/// One-shot residual evaluation; see [`StepContext::residual`].
pub fn assemble_residual(
    scheme: &Scheme,
    old: &StateVector,
    new: &StateVector,
    t_old: f64,
    dt: f64,
    forcing: &dyn Forcing,
) -> Result<Vec<f64>> {
    StepContext::new(scheme, old, t_old, dt, forcing)?.residual(new)
}
