//! Reference-cell machinery on `[-1, 1]`: Gauss quadrature, Gauss-Lobatto
//! nodes and the nodal Lagrange basis built on them.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Legendre polynomial `P_n` and its derivative at `x`.
pub fn legendre(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p_prev, mut p) = (1.0, x);
    for m in 2..=n {
        let m = m as f64;
        let p_next = ((2.0 * m - 1.0) * x * p - (m - 1.0) * p_prev) / m;
        p_prev = p;
        p = p_next;
    }
    let n_f = n as f64;
    let dp = if (x * x - 1.0).abs() < 1e-300 {
        // P_n'(±1) = (±1)^(n-1) n(n+1)/2
        let sign = if x > 0.0 || n % 2 == 1 { 1.0 } else { -1.0 };
        sign * n_f * (n_f + 1.0) / 2.0
    } else {
        n_f * (x * p - p_prev) / (x * x - 1.0)
    };
    (p, dp)
}

/// Gauss-Legendre points and weights with `n` points, ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "quadrature needs at least one point");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let n_f = n as f64;
    for i in 0..n {
        let mut z = -(std::f64::consts::PI * (i as f64 + 0.75) / (n_f + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, z);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, z);
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

/// Gauss-Lobatto nodes for polynomial degree `k` (`k + 1` points including ±1).
/// For `k = 0` the single node is the cell midpoint.
pub fn gauss_lobatto_nodes(k: usize) -> Vec<f64> {
    match k {
        0 => vec![0.0],
        1 => vec![-1.0, 1.0],
        _ => {
            let kf = k as f64;
            let mut nodes = Vec::with_capacity(k + 1);
            nodes.push(-1.0);
            for i in 1..k {
                // interior nodes are the roots of P_k'
                let mut z = -(std::f64::consts::PI * i as f64 / kf).cos();
                for _ in 0..100 {
                    let (p, dp) = legendre(k, z);
                    let d2p = (2.0 * z * dp - kf * (kf + 1.0) * p) / (1.0 - z * z);
                    let dz = dp / d2p;
                    z -= dz;
                    if dz.abs() < 1e-16 {
                        break;
                    }
                }
                nodes.push(z);
            }
            nodes.push(1.0);
            nodes
        }
    }
}

/// Lagrange basis `ℓ_i` on `nodes` and its derivative, evaluated at `x`.
pub fn lagrange(nodes: &[f64], i: usize, x: f64) -> (f64, f64) {
    let xi = nodes[i];
    let mut value = 1.0;
    for (j, &xj) in nodes.iter().enumerate() {
        if j != i {
            value *= (x - xj) / (xi - xj);
        }
    }
    let mut deriv = 0.0;
    for (m, &xm) in nodes.iter().enumerate() {
        if m == i {
            continue;
        }
        let mut term = 1.0 / (xi - xm);
        for (j, &xj) in nodes.iter().enumerate() {
            if j != i && j != m {
                term *= (x - xj) / (xi - xj);
            }
        }
        deriv += term;
    }
    (value, deriv)
}

/// Nodal basis of degree `k` with tabulated values at the quadrature points
/// and at both cell ends. All derivatives are with respect to the reference
/// coordinate.
#[derive(Debug, Clone)]
pub struct Basis {
    degree: usize,
    nodes: Vec<f64>,
    quad_points: Vec<f64>,
    quad_weights: Vec<f64>,
    /// `values[q * n_dofs + i] = ℓ_i(ξ_q)`
    values: Vec<f64>,
    derivs: Vec<f64>,
    trace_left: Vec<f64>,
    trace_right: Vec<f64>,
    deriv_left: Vec<f64>,
    deriv_right: Vec<f64>,
    mass_inv: DMatrix<f64>,
}

impl Basis {
    /// Degree-`k` basis with `k + 3` Gauss points.
    pub fn new(degree: usize) -> Self {
        Self::with_quadrature(degree, degree + 3).expect("k + 3 points always suffice")
    }

    pub fn with_quadrature(degree: usize, n_quad: usize) -> Result<Self> {
        if n_quad < degree + 2 {
            return Err(Error::InvalidInput(format!(
                "degree {degree} needs at least {} quadrature points, got {n_quad}",
                degree + 2
            )));
        }
        let nodes = gauss_lobatto_nodes(degree);
        let n = nodes.len();
        let (quad_points, quad_weights) = gauss_legendre(n_quad);
        let mut values = Vec::with_capacity(n_quad * n);
        let mut derivs = Vec::with_capacity(n_quad * n);
        for &xq in &quad_points {
            for i in 0..n {
                let (v, d) = lagrange(&nodes, i, xq);
                values.push(v);
                derivs.push(d);
            }
        }
        let ends = |x: f64| -> (Vec<f64>, Vec<f64>) {
            (0..n).map(|i| lagrange(&nodes, i, x)).unzip()
        };
        let (trace_left, deriv_left) = ends(-1.0);
        let (trace_right, deriv_right) = ends(1.0);

        let mut mass = DMatrix::zeros(n, n);
        for q in 0..n_quad {
            for i in 0..n {
                for j in 0..n {
                    mass[(i, j)] += quad_weights[q] * values[q * n + i] * values[q * n + j];
                }
            }
        }
        let mass_inv = mass
            .try_inverse()
            .ok_or_else(|| Error::InvalidInput("singular reference mass matrix".into()))?;

        Ok(Self {
            degree,
            nodes,
            quad_points,
            quad_weights,
            values,
            derivs,
            trace_left,
            trace_right,
            deriv_left,
            deriv_right,
            mass_inv,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn n_dofs(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn n_quad(&self) -> usize {
        self.quad_points.len()
    }

    pub fn quad_points(&self) -> &[f64] {
        &self.quad_points
    }

    pub fn quad_weights(&self) -> &[f64] {
        &self.quad_weights
    }

    /// `ℓ_i(ξ_q)` for all `i`.
    #[inline]
    pub fn values_at(&self, q: usize) -> &[f64] {
        let n = self.n_dofs();
        &self.values[q * n..(q + 1) * n]
    }

    #[inline]
    pub fn derivs_at(&self, q: usize) -> &[f64] {
        let n = self.n_dofs();
        &self.derivs[q * n..(q + 1) * n]
    }

    pub fn trace_left(&self) -> &[f64] {
        &self.trace_left
    }

    pub fn trace_right(&self) -> &[f64] {
        &self.trace_right
    }

    pub fn deriv_left(&self) -> &[f64] {
        &self.deriv_left
    }

    pub fn deriv_right(&self) -> &[f64] {
        &self.deriv_right
    }

    /// Inverse of the reference mass matrix `∫ ℓ_i ℓ_j dξ`.
    pub fn mass_inverse(&self) -> &DMatrix<f64> {
        &self.mass_inv
    }

    /// Evaluates `Σ c_i ℓ_i(ξ)` and its reference derivative at an arbitrary point.
    pub fn evaluate(&self, coeffs: &[f64], xi: f64) -> (f64, f64) {
        let mut value = 0.0;
        let mut deriv = 0.0;
        for (i, &c) in coeffs.iter().enumerate() {
            let (v, d) = lagrange(&self.nodes, i, xi);
            value += c * v;
            deriv += c * d;
        }
        (value, deriv)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_rule_is_exact_to_degree_2n_minus_1() {
        for n in 1..=9 {
            let (x, w) = gauss_legendre(n);
            for p in 0..(2 * n) {
                let exact = if p % 2 == 0 { 2.0 / (p as f64 + 1.0) } else { 0.0 };
                let approx: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(p as i32)).sum();
                assert!(
                    (approx - exact).abs() <= 1e-13 * exact.abs().max(1.0),
                    "n={n} p={p}: {approx} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn lobatto_nodes_match_known_values() {
        let n4 = gauss_lobatto_nodes(3);
        let s = 5f64.sqrt() / 5.0;
        for (a, b) in n4.iter().zip([-1.0, -s, s, 1.0]) {
            assert!((a - b).abs() < 1e-15);
        }
        let n5 = gauss_lobatto_nodes(4);
        let s = 21f64.sqrt() / 7.0;
        for (a, b) in n5.iter().zip([-1.0, -s, 0.0, s, 1.0]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn nodal_basis_is_kronecker_at_nodes() {
        for k in 0..=6 {
            let nodes = gauss_lobatto_nodes(k);
            for i in 0..nodes.len() {
                for (j, &xj) in nodes.iter().enumerate() {
                    let (v, _) = lagrange(&nodes, i, xj);
                    let expected = if i == j { 1.0 } else { 0.0 };
                    assert!((v - expected).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn lagrange_derivative_matches_finite_difference() {
        let nodes = gauss_lobatto_nodes(4);
        let d = 1e-6;
        for i in 0..nodes.len() {
            for x in [-0.9, -0.3, 0.1, 0.77] {
                let (_, dv) = lagrange(&nodes, i, x);
                let fd = (lagrange(&nodes, i, x + d).0 - lagrange(&nodes, i, x - d).0) / (2.0 * d);
                assert!((dv - fd).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn too_few_quadrature_points_rejected() {
        assert!(Basis::with_quadrature(3, 4).is_err());
        assert!(Basis::with_quadrature(3, 5).is_ok());
    }
}
