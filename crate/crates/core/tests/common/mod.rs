//! Independent oracles shared by the integration tests and the acceptance
//! harness. Everything here recomputes quantities from traces, point values
//! and finite differences rather than calling the code under test for them.

#![allow(dead_code)]

use std::f64::consts::PI;

use nsac::mesh::{DgField, DgSpace};
use nsac::mms::{primal, Manufactured};
use nsac::spatial::{flux_terms, BoundaryValues, FluxParams, FluxSlot, StateVector};
use nsac::thermo::{
    bulk_energy, bulk_energy_deriv, bulk_energy_deriv2, double_well, double_well_deriv,
    double_well_deriv2, interp, interp_deriv, interp_deriv2, mixture_energy, mixture_energy_dphi,
    mixture_energy_drho, mixture_energy_hessian, mu_quotient, tau_quotient, viscosity,
    viscosity_deriv, MixtureParams, SPLIT_EPS,
};
use rand::rngs::StdRng;
use rand::Rng;

pub fn params() -> MixtureParams {
    MixtureParams::convergence_study()
}

/// Field with independent random nodal values in `[lo, hi]`.
pub fn random_field(rng: &mut StdRng, space: &DgSpace, lo: f64, hi: f64) -> DgField {
    let mut f = space.zeros();
    for c in f.coeffs_mut() {
        *c = rng.gen_range(lo..hi);
    }
    f
}

/// Discontinuous state with `ρ > 0` and `φ ∈ [0, 1]`.
pub fn random_state(rng: &mut StdRng, space: &DgSpace) -> StateVector {
    StateVector {
        rho: random_field(rng, space, 0.5, 2.5),
        v: random_field(rng, space, -2.0, 2.0),
        phi: random_field(rng, space, 0.0, 1.0),
        mu: random_field(rng, space, -2.0, 2.0),
        tau: random_field(rng, space, -2.0, 2.0),
        sigma: random_field(rng, space, -2.0, 2.0),
    }
}

pub fn random_boundary(rng: &mut StdRng) -> BoundaryValues {
    BoundaryValues {
        v_left: rng.gen_range(-1.0..1.0),
        v_right: rng.gen_range(-1.0..1.0),
        sigma_left: rng.gen_range(-1.0..1.0),
        sigma_right: rng.gen_range(-1.0..1.0),
        ..Default::default()
    }
}

/// Random trigonometric polynomial `x ↦ c + ∑ a_j cos(jπx) + b_j sin(jπx)`.
pub fn random_smooth(rng: &mut StdRng, offset: f64, amp: f64) -> impl Fn(f64) -> f64 {
    let coef: Vec<(f64, f64)> = (1..=3)
        .map(|_| (rng.gen_range(-amp..amp), rng.gen_range(-amp..amp)))
        .collect();
    move |x| {
        offset
            + coef
                .iter()
                .enumerate()
                .map(|(j, (a, b))| {
                    let w = (j + 1) as f64 * PI;
                    a * (w * x).cos() + b * (w * x).sin()
                })
                .sum::<f64>()
    }
}

/// Continuous state (nodal interpolant of smooth functions) and the boundary
/// data it satisfies. Needs `k ≥ 1` so that cell end points are nodes.
pub fn continuous_state(rng: &mut StdRng, space: &DgSpace) -> (StateVector, BoundaryValues) {
    let rho = random_smooth(rng, 1.5, 0.15);
    let v = random_smooth(rng, 0.0, 0.5);
    let phi = random_smooth(rng, 0.5, 0.1);
    let mu = random_smooth(rng, 0.0, 0.5);
    let tau = random_smooth(rng, 0.0, 0.5);
    let sigma = random_smooth(rng, 0.0, 0.5);
    let bc = BoundaryValues {
        v_left: v(0.0),
        v_right: v(1.0),
        sigma_left: sigma(0.0),
        sigma_right: sigma(1.0),
        ..Default::default()
    };
    let u = StateVector {
        rho: space.interpolate(rho),
        v: space.interpolate(v),
        phi: space.interpolate(phi),
        mu: space.interpolate(mu),
        tau: space.interpolate(tau),
        sigma: space.interpolate(sigma),
    };
    (u, bc)
}

fn tr(space: &DgSpace, f: &DgField, cell: usize) -> (f64, f64) {
    space.traces(f, cell)
}

/// `∑_faces ⟦g⟧` for a pointwise product `g` of traces, with the boundary
/// ghost state (`v`, `σ` prescribed; `ρ`, `φ`, `μ`, `τ` mirrored).
fn jump_sum(
    space: &DgSpace,
    u: &StateVector,
    bc: &BoundaryValues,
    g: impl Fn(f64, f64, f64) -> f64,
) -> f64 {
    let n = space.n_cells();
    let at = |cell: usize, right: bool| {
        let pick = |(l, r): (f64, f64)| if right { r } else { l };
        (
            pick(tr(space, &u.rho, cell)),
            pick(tr(space, &u.v, cell)),
            pick(tr(space, &u.tau, cell)),
        )
    };
    let mut s = 0.0;
    for c in 0..n - 1 {
        let (rl, vl, tl) = at(c, true);
        let (rr, vr, tr_) = at(c + 1, false);
        s += g(rl, vl, tl) - g(rr, vr, tr_);
    }
    let (r0, v0, t0) = at(0, false);
    s += g(r0, bc.v_left, t0) - g(r0, v0, t0);
    let (r1, v1, t1) = at(n - 1, true);
    s += g(r1, v1, t1) - g(r1, bc.v_right, t1);
    s
}

/// `|F1[U, 1] + ∑⟦ρv⟧|`.
pub fn mass_flux_gap(space: &DgSpace, mix: &MixtureParams, u: &StateVector, fp: &FluxParams, bc: &BoundaryValues) -> f64 {
    let one = space.constant(1.0);
    let f1 = flux_terms(space, mix, u, FluxSlot::Density, &one, fp, bc).unwrap();
    (f1 + jump_sum(space, u, bc, |r, v, _| r * v)).abs()
}

/// `|F1[U, τ] + F2[U, v] + F3[U, μ] + ∑⟦ρvτ⟧|` with all `α = 0`.
pub fn pairing_gap(space: &DgSpace, mix: &MixtureParams, u: &StateVector, bc: &BoundaryValues) -> f64 {
    let fp = FluxParams {
        alpha_b: 1.0,
        alpha1: 0.0,
        alpha2: 0.0,
        alpha3: 0.0,
    };
    let f = |slot, test: &DgField| flux_terms(space, mix, u, slot, test, &fp, bc).unwrap();
    let total = f(FluxSlot::Density, &u.tau) + f(FluxSlot::Momentum, &u.v) + f(FluxSlot::PhaseField, &u.mu);
    (total + jump_sum(space, u, bc, |r, v, t| r * v * t)).abs()
}

/// Largest `|F_i[U, test]|` over all six slots.
pub fn continuous_flux_max(space: &DgSpace, mix: &MixtureParams, u: &StateVector, test: &DgField, fp: &FluxParams, bc: &BoundaryValues) -> f64 {
    (1..=6)
        .map(|i| {
            flux_terms(space, mix, u, FluxSlot::from_index(i).unwrap(), test, fp, bc)
                .unwrap()
                .abs()
        })
        .fold(0.0, f64::max)
}

/// Random positive flux parameters (stabilization switched on).
pub fn random_flux(rng: &mut StdRng) -> FluxParams {
    FluxParams {
        alpha_b: rng.gen_range(0.01..2.0),
        alpha1: rng.gen_range(0.0..1.0),
        alpha2: rng.gen_range(0.0..1.0),
        alpha3: rng.gen_range(0.0..1.0),
    }
}

/// Worst of the three flux conditions over `n` random states of random size.
pub fn flux_conditions(rng: &mut StdRng, n: usize) -> [f64; 3] {
    let mix = params();
    let mut worst = [0.0f64; 3];
    for _ in 0..n {
        let cells = rng.gen_range(1..9);
        let k = rng.gen_range(1..5);
        let space = DgSpace::uniform(cells, k).unwrap();
        let fp = random_flux(rng);
        let (uc, bcc) = continuous_state(rng, &space);
        let test = random_field(rng, &space, -1.0, 1.0);
        worst[0] = worst[0].max(continuous_flux_max(&space, &mix, &uc, &test, &fp, &bcc));
        let u = random_state(rng, &space);
        let bc = random_boundary(rng);
        worst[1] = worst[1].max(mass_flux_gap(&space, &mix, &u, &fp, &bc));
        worst[2] = worst[2].max(pairing_gap(&space, &mix, &u, &bc));
    }
    worst
}

/// Relative telescoping defect for one sample; the scale is the magnitude
/// of the two energies whose difference is taken.
pub fn telescoping_defect(r0: f64, r1: f64, p0: f64, p1: f64, mix: &MixtureParams) -> f64 {
    let e0 = mixture_energy(r0, p0, mix).unwrap();
    let e1 = mixture_energy(r1, p1, mix).unwrap();
    let lhs = (p1 - p0) * mu_quotient(r0, r1, p0, p1, mix).unwrap()
        + (r1 - r0) * tau_quotient(r0, r1, p0, p1, mix).unwrap();
    (lhs - (e1 - e0)).abs() / (e0.abs() + e1.abs()).max(f64::MIN_POSITIVE)
}

/// Random `(ρ_old, ρ_new, φ_old, φ_new)` with both increments above the
/// switching threshold.
pub fn telescoping_sample(rng: &mut StdRng) -> (f64, f64, f64, f64) {
    loop {
        let r0: f64 = rng.gen_range(0.1..3.0);
        let r1: f64 = rng.gen_range(0.1..3.0);
        let p0: f64 = rng.gen_range(-0.2..1.2);
        let p1: f64 = rng.gen_range(-0.2..1.2);
        if (r1 - r0).abs() > SPLIT_EPS && (p1 - p0).abs() > SPLIT_EPS {
            return (r0, r1, p0, p1);
        }
    }
}

pub fn telescoping_worst(rng: &mut StdRng, n: usize) -> f64 {
    let mixes = [MixtureParams::convergence_study(), MixtureParams::energy_study()];
    (0..n)
        .map(|i| {
            let (r0, r1, p0, p1) = telescoping_sample(rng);
            telescoping_defect(r0, r1, p0, p1, &mixes[i % 2])
        })
        .fold(0.0, f64::max)
}

/// Central difference with step `h`.
pub fn central(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Fourth-order central difference with step `h`.
pub fn central4(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

/// Worst relative defect of every analytic derivative against central
/// differences at one point.
pub fn derivative_defect(rho: f64, phi: f64, mix: &MixtureParams) -> f64 {
    let h = 1e-5;
    let eos = [mix.liquid, mix.vapor];
    let mut worst = 0.0f64;
    let mut push = |analytic: f64, fd: f64| worst = worst.max(rel(fd, analytic));
    push(interp_deriv(phi), central(interp, phi, h));
    push(interp_deriv2(phi), central(interp_deriv, phi, h));
    push(double_well_deriv(phi, mix.a), central(|p| double_well(p, mix.a), phi, h));
    push(double_well_deriv2(phi, mix.a), central(|p| double_well_deriv(p, mix.a), phi, h));
    for e in &eos {
        push(bulk_energy_deriv(rho, e).unwrap(), central(|r| bulk_energy(r, e).unwrap(), rho, h));
        push(bulk_energy_deriv2(rho, e).unwrap(), central(|r| bulk_energy_deriv(r, e).unwrap(), rho, h));
    }
    let e = |r: f64, p: f64| mixture_energy(r, p, mix).unwrap();
    push(mixture_energy_drho(rho, phi, mix).unwrap(), central(|r| e(r, phi), rho, h));
    push(mixture_energy_dphi(rho, phi, mix).unwrap(), central(|p| e(rho, p), phi, h));
    let [rr, rp, pp] = mixture_energy_hessian(rho, phi, mix).unwrap();
    push(rr, central(|r| mixture_energy_drho(r, phi, mix).unwrap(), rho, h));
    push(rp, central(|p| mixture_energy_drho(rho, p, mix).unwrap(), phi, h));
    push(pp, central(|p| mixture_energy_dphi(rho, p, mix).unwrap(), phi, h));
    push(viscosity_deriv(phi, mix), central(|p| viscosity(p, mix), phi, h));
    worst
}

pub fn derivative_worst(rng: &mut StdRng, n: usize) -> f64 {
    let mixes = [MixtureParams::convergence_study(), MixtureParams::energy_study()];
    (0..n)
        .map(|i| {
            let rho = rng.gen_range(0.2..3.0);
            let phi = rng.gen_range(-0.1..1.1);
            derivative_defect(rho, phi, &mixes[i % 2])
        })
        .fold(0.0, f64::max)
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Convergence slopes of both quotients towards the partials at the midpoint
/// `(ρ, φ)` as symmetric increments `±δ·(dρ, dφ)/2` shrink.
pub fn quotient_slopes(rho: f64, phi: f64, d_rho: f64, d_phi: f64, mix: &MixtureParams) -> [f64; 2] {
    let deltas: Vec<f64> = (0..6).map(|i| 0.1 * 0.5f64.powi(i)).collect();
    let mut err_mu = Vec::new();
    let mut err_tau = Vec::new();
    for &d in &deltas {
        let (r0, r1) = (rho - 0.5 * d * d_rho, rho + 0.5 * d * d_rho);
        let (p0, p1) = (phi - 0.5 * d * d_phi, phi + 0.5 * d * d_phi);
        err_mu.push((mu_quotient(r0, r1, p0, p1, mix).unwrap() - mixture_energy_dphi(rho, phi, mix).unwrap()).abs());
        err_tau.push((tau_quotient(r0, r1, p0, p1, mix).unwrap() - mixture_energy_drho(rho, phi, mix).unwrap()).abs());
    }
    [loglog_slope(&deltas, &err_mu), loglog_slope(&deltas, &err_tau)]
}

/// Sources rebuilt from the exact primal fields by nested fourth-order
/// differences in space and time with step `h`.
pub fn fd_sources(mix: &MixtureParams, x: f64, t: f64, h: f64) -> [f64; 3] {
    let rho = |x: f64, t: f64| primal(x, t)[0];
    let v = |x: f64, t: f64| primal(x, t)[1];
    let phi = |x: f64, t: f64| primal(x, t)[2];
    let phi_x = |x: f64, t: f64| central4(|y| phi(y, t), x, h);
    let phi_xx = |x: f64, t: f64| central4(|y| phi_x(y, t), x, h);
    let mu = |x: f64, t: f64| mixture_energy_dphi(rho(x, t), phi(x, t), mix).unwrap() - mix.gamma * phi_xx(x, t);
    let tau = |x: f64, t: f64| mixture_energy_drho(rho(x, t), phi(x, t), mix).unwrap() + 0.5 * v(x, t).powi(2);
    let stress = |x: f64, t: f64| viscosity(phi(x, t), mix) * central4(|y| v(y, t), x, h);

    let (r, u, m) = (rho(x, t), v(x, t), mu(x, t));
    let s_rho = central4(|s| rho(x, s), t, h) + central4(|y| rho(y, t) * v(y, t), x, h);
    let s_v = r * central4(|s| v(x, s), t, h) + r * central4(|y| tau(y, t), x, h)
        - m * phi_x(x, t)
        - central4(|y| stress(y, t), x, h);
    let s_phi = central4(|s| phi(x, s), t, h) + u * phi_x(x, t) + mix.eta * m / r;
    [s_rho, s_v, s_phi]
}

/// Worst absolute gap between closed-form and difference-based sources.
pub fn mms_source_worst(rng: &mut StdRng, n: usize) -> f64 {
    let mix = params();
    let m = Manufactured::new(mix);
    (0..n)
        .map(|_| {
            let x = rng.gen_range(0.0..1.0);
            let t = rng.gen_range(0.0..0.03);
            let exact = m.source_terms(x, t).unwrap();
            let fd = fd_sources(&mix, x, t, 1e-4);
            (0..3).map(|i| (exact[i] - fd[i]).abs()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}
