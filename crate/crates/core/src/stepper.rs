//! Initial data, the Newton solve of one fully discrete step and the time loop.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::diagnostics::StepDiagnostics;
use crate::error::{Error, Result};
use crate::linalg::{bicgstab, BandMatrix, IterativeSettings, LinearSolverKind};
use crate::mesh::{DgField, DgSpace};
use crate::mms::Manufactured;
use crate::spatial::{BoundaryValues, Forcing, Scheme, StateVector, StepContext, Var, N_FIELDS};
use crate::thermo::{interp, mixture_energy_dphi, mixture_energy_drho, MixtureParams};

/// Uniform partition of `[0, t_end]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    dt: f64,
    n_steps: usize,
}

impl TimeGrid {
    /// Requires `n_steps · dt = t_end` to within `1e-12`.
    pub fn new(t_end: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() || !(t_end >= 0.0) || !t_end.is_finite() {
            return Err(Error::InvalidInput(format!(
                "need dt > 0 and t_end ≥ 0, got dt = {dt}, t_end = {t_end}"
            )));
        }
        let n_steps = (t_end / dt).round() as usize;
        if (n_steps as f64 * dt - t_end).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!(
                "dt = {dt} does not divide t_end = {t_end}"
            )));
        }
        Ok(Self { dt, n_steps })
    }

    pub fn from_steps(dt: f64, n_steps: usize) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidInput(format!("dt must be positive, got {dt}")));
        }
        Ok(Self { dt, n_steps })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn t_end(&self) -> f64 {
        self.n_steps as f64 * self.dt
    }

    pub fn time(&self, step: usize) -> f64 {
        step as f64 * self.dt
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Bound on the max-norm of the step residual.
    pub newton_abs_tol: f64,
    pub newton_max_iter: usize,
    /// Relative tolerance of the iterative backend (unused by the direct solver).
    pub linear_abs_tol: f64,
    pub max_step_halvings: usize,
    pub linear_solver: LinearSolverKind,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            newton_abs_tol: 1e-10,
            newton_max_iter: 30,
            linear_abs_tol: 1e-10,
            max_step_halvings: 8,
            linear_solver: LinearSolverKind::BandedLu,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.newton_abs_tol > 0.0) || !(self.linear_abs_tol > 0.0) {
            return Err(Error::InvalidInput("solver tolerances must be positive".into()));
        }
        if self.newton_max_iter == 0 {
            return Err(Error::InvalidInput("newton_max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

/// Pointwise initial data: `ρ0`, `v0`, `φ0` and the first two derivatives of `φ0`.
pub trait InitialCondition: Sync {
    fn rho(&self, x: f64) -> f64;
    fn v(&self, x: f64) -> f64;
    fn phi(&self, x: f64) -> f64;
    fn phi_x(&self, x: f64) -> f64;
    fn phi_xx(&self, x: f64) -> f64;
}

/// Spatially constant state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantState {
    pub rho: f64,
    pub v: f64,
    pub phi: f64,
}

impl InitialCondition for ConstantState {
    fn rho(&self, _: f64) -> f64 {
        self.rho
    }
    fn v(&self, _: f64) -> f64 {
        self.v
    }
    fn phi(&self, _: f64) -> f64 {
        self.phi
    }
    fn phi_x(&self, _: f64) -> f64 {
        0.0
    }
    fn phi_xx(&self, _: f64) -> f64 {
        0.0
    }
}

/// Liquid slab `0.3 < x < 0.7` with tanh interfaces of width `δ = 4√γ`,
/// at rest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoInterface {
    pub delta: f64,
    pub rho_liquid: f64,
    pub rho_vapor: f64,
}

impl TwoInterface {
    pub fn new(gamma: f64) -> Self {
        Self {
            delta: 4.0 * gamma.sqrt(),
            rho_liquid: 2.23,
            rho_vapor: 0.3,
        }
    }

    fn args(&self, x: f64) -> (f64, f64) {
        ((x - 0.3) / self.delta, (x - 0.7) / self.delta)
    }
}

impl InitialCondition for TwoInterface {
    fn rho(&self, x: f64) -> f64 {
        self.rho_vapor + (self.rho_liquid - self.rho_vapor) * interp(self.phi(x))
    }
    fn v(&self, _: f64) -> f64 {
        0.0
    }
    fn phi(&self, x: f64) -> f64 {
        let (a, b) = self.args(x);
        0.5 * (a.tanh() - b.tanh())
    }
    fn phi_x(&self, x: f64) -> f64 {
        let (a, b) = self.args(x);
        let sech2 = |z: f64| 1.0 - z.tanh().powi(2);
        0.5 * (sech2(a) - sech2(b)) / self.delta
    }
    fn phi_xx(&self, x: f64) -> f64 {
        let (a, b) = self.args(x);
        let d = |z: f64| -2.0 * z.tanh() * (1.0 - z.tanh().powi(2));
        0.5 * (d(a) - d(b)) / (self.delta * self.delta)
    }
}

impl InitialCondition for Manufactured {
    fn rho(&self, x: f64) -> f64 {
        0.5 * (2.0 * PI * x).cos() + 1.5
    }
    fn v(&self, x: f64) -> f64 {
        (4.0 * PI * x).cos()
    }
    fn phi(&self, x: f64) -> f64 {
        0.5 * (2.0 * PI * x).cos() + 0.5
    }
    fn phi_x(&self, x: f64) -> f64 {
        -PI * (2.0 * PI * x).sin()
    }
    fn phi_xx(&self, x: f64) -> f64 {
        -2.0 * PI * PI * (2.0 * PI * x).cos()
    }
}

/// Discrete gradient `σ_h` of `φ_h`: the solution of the `σ`-equation of the
/// scheme, `∫σZ = ∫φ_x Z − ∑_faces ⟦φ⟧{Z}`, with boundary nodes pinned to
/// `bc` when the degree is at least one.
pub fn discrete_gradient(space: &DgSpace, phi: &DgField, bc: &BoundaryValues) -> Result<DgField> {
    space.check(phi)?;
    let basis = space.basis();
    let n = space.n_local();
    let n_cells = space.n_cells();
    let mut out = space.zeros();
    for cell in 0..n_cells {
        let jac = 0.5 * space.mesh().cell_size(cell);
        let mut mass = DMatrix::<f64>::zeros(n, n);
        let mut rhs = DVector::<f64>::zeros(n);
        for q in 0..basis.n_quad() {
            let w = basis.quad_weights()[q] * jac;
            let dphi = space.eval_quad(phi, cell, q).1;
            let l = basis.values_at(q);
            for i in 0..n {
                rhs[i] += w * dphi * l[i];
                for j in 0..n {
                    mass[(i, j)] += w * l[i] * l[j];
                }
            }
        }
        if cell == 0 {
            if let Some(ext) = bc.exterior_left {
                let jump = ext[1] - space.traces(phi, cell).0;
                for i in 0..n {
                    rhs[i] -= jump * basis.trace_left()[i];
                }
            }
        }
        if cell == n_cells - 1 {
            if let Some(ext) = bc.exterior_right {
                let jump = space.traces(phi, cell).1 - ext[1];
                for i in 0..n {
                    rhs[i] -= jump * basis.trace_right()[i];
                }
            }
        }
        if cell > 0 {
            let jump = space.traces(phi, cell - 1).1 - space.traces(phi, cell).0;
            for i in 0..n {
                rhs[i] -= 0.5 * jump * basis.trace_left()[i];
            }
        }
        if cell + 1 < n_cells {
            let jump = space.traces(phi, cell).1 - space.traces(phi, cell + 1).0;
            for i in 0..n {
                rhs[i] -= 0.5 * jump * basis.trace_right()[i];
            }
        }
        if space.degree() >= 1 {
            let mut pin = |row: usize, value: f64| {
                mass.row_mut(row).fill(0.0);
                mass[(row, row)] = 1.0;
                rhs[row] = value;
            };
            if cell == 0 {
                pin(0, bc.sigma_left);
            }
            if cell == n_cells - 1 {
                pin(n - 1, bc.sigma_right);
            }
        }
        let sol = mass
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::LinearSolver("singular local mass matrix".into()))?;
        out.cell_mut(cell).copy_from_slice(sol.as_slice());
    }
    Ok(out)
}

/// Discrete initial state at `t = 0`: projections of `ρ0`, `v0`, `φ0`,
/// `μ0 = ∂φ(ρf̃) − γφ0''` and `τ0 = ∂ρ(ρf̃) + ½v0²`, with `σ0` the discrete
/// gradient of the projected `φ0` and the boundary nodes of `v0`, `σ0`
/// pinned to the boundary data.
pub fn make_initial_state(
    scheme: &Scheme,
    init: &dyn InitialCondition,
    forcing: &dyn Forcing,
) -> Result<StateVector> {
    let space = &scheme.space;
    let mix = &scheme.mixture;
    let mut bad = None;
    for cell in 0..space.n_cells() {
        for x in space.quad_coords(cell).chain(space.node_coords(cell)) {
            let (r, p) = (init.rho(x), init.phi(x));
            if !(r > 0.0) || !(-1e-12..=1.0 + 1e-12).contains(&p) {
                bad.get_or_insert((x, r, p));
            }
        }
    }
    if let Some((x, r, p)) = bad {
        return Err(Error::InvalidInput(format!(
            "initial data out of range at x = {x}: rho = {r}, phi = {p}"
        )));
    }
    let thermo_mu = |x: f64, m: &MixtureParams| -> f64 {
        mixture_energy_dphi(init.rho(x), init.phi(x), m).unwrap_or(f64::NAN)
            - m.gamma * init.phi_xx(x)
    };
    let thermo_tau = |x: f64, m: &MixtureParams| -> f64 {
        let v = init.v(x);
        mixture_energy_drho(init.rho(x), init.phi(x), m).unwrap_or(f64::NAN) + 0.5 * v * v
    };
    let bc = forcing.boundary(0.0);
    let phi = space.l2_project(|x| init.phi(x));
    let mut u = StateVector {
        rho: space.l2_project(|x| init.rho(x)),
        v: space.l2_project(|x| init.v(x)),
        sigma: discrete_gradient(space, &phi, &bc)?,
        phi,
        mu: space.l2_project(|x| thermo_mu(x, mix)),
        tau: space.l2_project(|x| thermo_tau(x, mix)),
    };
    if space.degree() >= 1 {
        let last = space.n_cells() - 1;
        let k = space.degree();
        u.v.cell_mut(0)[0] = bc.v_left;
        u.v.cell_mut(last)[k] = bc.v_right;
    }
    Ok(u)
}

/// Outcome of one accepted step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub iterations: usize,
    pub residual: f64,
    pub halvings: usize,
}

fn max_norm(r: &[f64]) -> f64 {
    r.iter().fold(0.0f64, |a, b| {
        if b.is_nan() || a.is_nan() {
            f64::NAN
        } else {
            a.max(b.abs())
        }
    })
}

/// Forward-difference Jacobian with a three-colouring of the cells: every
/// residual row of a cell only depends on the cell and its two neighbours.
fn jacobian(ctx: &StepContext, u: &[f64], r: &[f64]) -> Result<BandMatrix> {
    let space = &ctx.scheme().space;
    let block = N_FIELDS * space.n_local();
    let n_cells = space.n_cells();
    let dim = u.len();
    let band = 2 * block - 1;
    let mut jac = BandMatrix::zeros(dim, band, band);
    let sqrt_eps = f64::EPSILON.sqrt();
    let mut probe = u.to_vec();
    for color in 0..3.min(n_cells) {
        for local in 0..block {
            let cells: Vec<usize> = (color..n_cells).step_by(3).collect();
            let mut steps = Vec::with_capacity(cells.len());
            for &c in &cells {
                let j = c * block + local;
                let h = sqrt_eps * (1.0 + u[j].abs());
                probe[j] = u[j] + h;
                steps.push(h);
            }
            let state = StateVector::from_flat(space, &probe)?;
            let rp = ctx.residual(&state)?;
            for (&c, &h) in cells.iter().zip(&steps) {
                let col = c * block + local;
                probe[col] = u[col];
                let lo = c.saturating_sub(1) * block;
                let hi = ((c + 2).min(n_cells)) * block;
                for row in lo..hi {
                    let d = (rp[row] - r[row]) / h;
                    if d != 0.0 {
                        jac.set(row, col, d)?;
                    }
                }
            }
        }
    }
    Ok(jac)
}

fn linear_solve(jac: BandMatrix, rhs: &[f64], cfg: &SolverConfig, block: usize) -> Result<Vec<f64>> {
    match cfg.linear_solver {
        LinearSolverKind::BandedLu => jac.factor()?.solve(rhs),
        LinearSolverKind::Bicgstab => bicgstab(
            &jac,
            rhs,
            &IterativeSettings {
                rel_tol: cfg.linear_abs_tol,
                max_iter: 2000,
                block,
            },
        ),
    }
}

/// Solves one step `old → new` by damped Newton iteration started at `old`.
pub fn newton_step(
    scheme: &Scheme,
    old: &StateVector,
    t_old: f64,
    dt: f64,
    cfg: &SolverConfig,
    forcing: &dyn Forcing,
) -> Result<(StateVector, StepReport)> {
    let ctx = StepContext::new(scheme, old, t_old, dt, forcing)?;
    let space = &scheme.space;
    let block = N_FIELDS * space.n_local();
    let mut u = old.to_flat();
    let mut r = ctx.residual(old)?;
    let mut norm = max_norm(&r);
    let mut total_halvings = 0;
    for iter in 0..=cfg.newton_max_iter {
        if norm <= cfg.newton_abs_tol {
            return Ok((
                StateVector::from_flat(space, &u)?,
                StepReport {
                    iterations: iter,
                    residual: norm,
                    halvings: total_halvings,
                },
            ));
        }
        if iter == cfg.newton_max_iter || !norm.is_finite() {
            return Err(Error::NonConvergence {
                iterations: iter,
                residual: norm,
            });
        }
        let jac = jacobian(&ctx, &u, &r)?;
        let neg: Vec<f64> = r.iter().map(|v| -v).collect();
        let delta = match linear_solve(jac, &neg, cfg, block) {
            Ok(d) => d,
            Err(Error::LinearSolver(_)) => {
                return Err(Error::NonConvergence {
                    iterations: iter,
                    residual: norm,
                })
            }
            Err(e) => return Err(e),
        };
        let mut lambda = 1.0;
        let mut halvings = 0;
        loop {
            let cand: Vec<f64> = u.iter().zip(&delta).map(|(a, d)| a + lambda * d).collect();
            match ctx.residual(&StateVector::from_flat(space, &cand)?) {
                Ok(rc) => {
                    u = cand;
                    r = rc;
                    norm = max_norm(&r);
                    break;
                }
                Err(e @ Error::DensityPositivityLoss { .. }) => {
                    if halvings == cfg.max_step_halvings {
                        return Err(e);
                    }
                    halvings += 1;
                    lambda *= 0.5;
                }
                Err(e) => return Err(e),
            }
        }
        total_halvings += halvings;
    }
    unreachable!("the loop returns on its last iteration")
}

/// Result of a time integration.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub final_state: StateVector,
    /// One record for the initial state and one per accepted step.
    pub diagnostics: Vec<StepDiagnostics>,
    pub reports: Vec<StepReport>,
}

/// Data handed to observers after each accepted step.
pub struct StepEvent<'a> {
    pub step: usize,
    pub time: f64,
    pub state: &'a StateVector,
    pub diagnostics: &'a StepDiagnostics,
}

/// Advances `u0` over `grid`, calling `observer` after every accepted step.
/// Solver failures are wrapped with the index of the failing step.
pub fn run(
    scheme: &Scheme,
    u0: &StateVector,
    grid: &TimeGrid,
    cfg: &SolverConfig,
    forcing: &dyn Forcing,
    observer: &mut dyn FnMut(&StepEvent) -> Result<()>,
) -> Result<Trajectory> {
    cfg.validate()?;
    u0.check(&scheme.space)?;
    let mut state = u0.clone();
    let mut diagnostics = vec![StepDiagnostics::initial(scheme, u0, 0.0)?];
    let mut reports = Vec::with_capacity(grid.n_steps());
    let mut worst_excursion = (0, 0.0);
    for step in 0..grid.n_steps() {
        let t_old = grid.time(step);
        let (next, report) = newton_step(scheme, &state, t_old, grid.dt(), cfg, forcing)
            .map_err(|e| Error::Step {
                step,
                source: Box::new(e),
            })?;
        let time = grid.time(step + 1);
        log::debug!(
            "step {} t = {time:.6}: {} Newton iterations, residual {:.2e}",
            step + 1,
            report.iterations,
            report.residual
        );
        // nodal coefficients are point values, so this is the nodal range of φ
        let (lo, hi) = next
            .phi
            .coeffs()
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &p| (lo.min(p), hi.max(p)));
        if lo < 0.0 || hi > 1.0 {
            let excess = (-lo).max(hi - 1.0);
            log::debug!("step {}: phase field leaves [0, 1] by {excess:.3e}", step + 1);
            if excess > worst_excursion.1 {
                worst_excursion = (step + 1, excess);
            }
        }
        let diag = StepDiagnostics::after_step(scheme, &state, &next, time, grid.dt())?;
        observer(&StepEvent {
            step: step + 1,
            time,
            state: &next,
            diagnostics: &diag,
        })?;
        diagnostics.push(diag);
        reports.push(report);
        state = next;
    }
    if worst_excursion.1 > 0.0 {
        log::warn!(
            "phase field left [0, 1] by up to {:.3e} (largest at step {})",
            worst_excursion.1,
            worst_excursion.0
        );
    }
    Ok(Trajectory {
        final_state: state,
        diagnostics,
        reports,
    })
}

/// Observer that does nothing.
pub fn no_observer(_: &StepEvent) -> Result<()> {
    Ok(())
}

/// Value of variable `var` at the nodes, for field dumps.
pub fn nodal_values(space: &DgSpace, u: &StateVector, var: Var) -> Vec<(f64, f64)> {
    let f = u.field(var);
    (0..space.n_cells())
        .flat_map(|c| space.node_coords(c).zip(f.cell(c).iter().copied()).collect::<Vec<_>>())
        .collect()
}
