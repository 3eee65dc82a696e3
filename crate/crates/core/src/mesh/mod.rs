//! One-dimensional mesh, broken polynomial fields and the face calculus
//! (jumps and averages) that couples neighbouring cells.

mod basis;

pub use basis::{gauss_legendre, gauss_lobatto_nodes, lagrange, legendre, Basis};

use crate::error::{Error, Result};

/// Partition of `[0, 1]` into cells `[x_j, x_{j+1}]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh1D {
    vertices: Vec<f64>,
}

impl Mesh1D {
    /// Uniform partition into `n_cells` cells.
    pub fn uniform(n_cells: usize) -> Result<Self> {
        if n_cells == 0 {
            return Err(Error::InvalidInput("a mesh needs at least one cell".into()));
        }
        let n = n_cells as f64;
        let vertices = (0..=n_cells).map(|j| j as f64 / n).collect();
        Ok(Self { vertices })
    }

    pub fn n_cells(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn vertices(&self) -> &[f64] {
        &self.vertices
    }

    #[inline]
    pub fn cell_size(&self, cell: usize) -> f64 {
        self.vertices[cell + 1] - self.vertices[cell]
    }

    /// Mesh size `h = max_T h_T`.
    pub fn h(&self) -> f64 {
        (0..self.n_cells())
            .map(|j| self.cell_size(j))
            .fold(0.0, f64::max)
    }

    /// Physical coordinate of reference point `xi ∈ [-1, 1]` in `cell`.
    #[inline]
    pub fn map(&self, cell: usize, xi: f64) -> f64 {
        let (a, b) = (self.vertices[cell], self.vertices[cell + 1]);
        0.5 * (a + b) + 0.5 * (b - a) * xi
    }

    /// Number of faces (vertices), boundary faces included.
    pub fn n_faces(&self) -> usize {
        self.vertices.len()
    }

    /// Face measure used by the interior penalty: the mean size of the
    /// adjacent cells (the single adjacent cell on the boundary).
    pub fn face_measure(&self, face: usize) -> f64 {
        let n = self.n_cells();
        match face {
            0 => self.cell_size(0),
            f if f == n => self.cell_size(n - 1),
            f => 0.5 * (self.cell_size(f - 1) + self.cell_size(f)),
        }
    }
}

/// Which side(s) of a face carry cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceKind {
    /// Between `left` and `right = left + 1`.
    Interior { left: usize, right: usize },
    /// `x = 0`; the cell's outward normal is `-1`.
    BoundaryLeft { cell: usize },
    /// `x = 1`; the cell's outward normal is `+1`.
    BoundaryRight { cell: usize },
}

/// Mesh plus reference basis: everything needed to evaluate broken fields.
#[derive(Debug, Clone)]
pub struct DgSpace {
    mesh: Mesh1D,
    basis: Basis,
}

impl DgSpace {
    pub fn new(mesh: Mesh1D, basis: Basis) -> Self {
        Self { mesh, basis }
    }

    /// Uniform mesh with `n_cells` cells and the default degree-`k` basis.
    pub fn uniform(n_cells: usize, degree: usize) -> Result<Self> {
        Ok(Self::new(Mesh1D::uniform(n_cells)?, Basis::new(degree)))
    }

    pub fn mesh(&self) -> &Mesh1D {
        &self.mesh
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn degree(&self) -> usize {
        self.basis.degree()
    }

    pub fn n_cells(&self) -> usize {
        self.mesh.n_cells()
    }

    /// Degrees of freedom per cell of one scalar field.
    pub fn n_local(&self) -> usize {
        self.basis.n_dofs()
    }

    pub fn face_kind(&self, face: usize) -> Result<FaceKind> {
        let n = self.n_cells();
        match face {
            0 => Ok(FaceKind::BoundaryLeft { cell: 0 }),
            f if f == n => Ok(FaceKind::BoundaryRight { cell: n - 1 }),
            f if f < n => Ok(FaceKind::Interior {
                left: f - 1,
                right: f,
            }),
            f => Err(Error::InvalidInput(format!(
                "face {f} does not exist on a mesh with {n} cells"
            ))),
        }
    }

    /// Physical coordinates of the quadrature points of `cell`.
    pub fn quad_coords(&self, cell: usize) -> impl Iterator<Item = f64> + '_ {
        self.basis
            .quad_points()
            .iter()
            .map(move |&xi| self.mesh.map(cell, xi))
    }

    /// Physical coordinates of the nodes of `cell`.
    pub fn node_coords(&self, cell: usize) -> impl Iterator<Item = f64> + '_ {
        self.basis
            .nodes()
            .iter()
            .map(move |&xi| self.mesh.map(cell, xi))
    }

    pub fn zeros(&self) -> DgField {
        DgField {
            n_cells: self.n_cells(),
            degree: self.degree(),
            coeffs: vec![0.0; self.n_cells() * self.n_local()],
        }
    }

    pub fn constant(&self, c: f64) -> DgField {
        let mut f = self.zeros();
        f.coeffs.fill(c);
        f
    }

    /// Field whose nodal values are `f` at the nodes (nodal interpolation).
    pub fn interpolate(&self, f: impl Fn(f64) -> f64) -> DgField {
        let mut field = self.zeros();
        let n = self.n_local();
        for cell in 0..self.n_cells() {
            for (i, x) in self.node_coords(cell).enumerate() {
                field.coeffs[cell * n + i] = f(x);
            }
        }
        field
    }

    pub fn check(&self, field: &DgField) -> Result<()> {
        if field.n_cells != self.n_cells()
            || field.degree != self.degree()
            || field.coeffs.len() != self.n_cells() * self.n_local()
        {
            return Err(Error::MeshMismatch);
        }
        Ok(())
    }

    /// Per-cell L2 projection of `f`, computed with the quadrature rule.
    pub fn l2_project(&self, f: impl Fn(f64) -> f64) -> DgField {
        let n = self.n_local();
        let basis = &self.basis;
        let mut field = self.zeros();
        let mut rhs = vec![0.0; n];
        for cell in 0..self.n_cells() {
            rhs.fill(0.0);
            for (q, x) in self.quad_coords(cell).enumerate() {
                let wf = basis.quad_weights()[q] * f(x);
                for (r, &l) in rhs.iter_mut().zip(basis.values_at(q)) {
                    *r += wf * l;
                }
            }
            let minv = basis.mass_inverse();
            let out = field.cell_mut(cell);
            for i in 0..n {
                out[i] = (0..n).map(|j| minv[(i, j)] * rhs[j]).sum();
            }
        }
        field
    }

    /// Value and physical derivative of `field` at quadrature point `q` of `cell`.
    #[inline]
    pub fn eval_quad(&self, field: &DgField, cell: usize, q: usize) -> (f64, f64) {
        let c = field.cell(cell);
        let scale = 2.0 / self.mesh.cell_size(cell);
        let v: f64 = c.iter().zip(self.basis.values_at(q)).map(|(a, b)| a * b).sum();
        let d: f64 = c.iter().zip(self.basis.derivs_at(q)).map(|(a, b)| a * b).sum();
        (v, d * scale)
    }

    /// Value of `field` at physical point `x` (taken from the cell containing
    /// `x`, the right one at interior vertices).
    pub fn eval_at(&self, field: &DgField, x: f64) -> f64 {
        let n = self.n_cells();
        let v = self.mesh.vertices();
        let cell = match v.partition_point(|&vx| vx <= x) {
            0 => 0,
            c => (c - 1).min(n - 1),
        };
        let xi = 2.0 * (x - v[cell]) / self.mesh.cell_size(cell) - 1.0;
        self.basis.evaluate(field.cell(cell), xi).0
    }

    /// Left- and right-end traces of `field` in `cell`.
    #[inline]
    pub fn traces(&self, field: &DgField, cell: usize) -> (f64, f64) {
        let c = field.cell(cell);
        let l = c.iter().zip(self.basis.trace_left()).map(|(a, b)| a * b).sum();
        let r = c.iter().zip(self.basis.trace_right()).map(|(a, b)| a * b).sum();
        (l, r)
    }

    /// Physical derivative traces at both ends of `cell`.
    #[inline]
    pub fn deriv_traces(&self, field: &DgField, cell: usize) -> (f64, f64) {
        let c = field.cell(cell);
        let scale = 2.0 / self.mesh.cell_size(cell);
        let l: f64 = c.iter().zip(self.basis.deriv_left()).map(|(a, b)| a * b).sum();
        let r: f64 = c.iter().zip(self.basis.deriv_right()).map(|(a, b)| a * b).sum();
        (l * scale, r * scale)
    }

    /// Jump and average of `field` at a face. Interior faces use
    /// `⟦a⟧ = a_left − a_right`; on the boundary the average is the interior
    /// trace and the jump is the trace times the outward normal.
    pub fn jump_avg(&self, field: &DgField, face: usize) -> Result<(f64, f64)> {
        self.check(field)?;
        Ok(match self.face_kind(face)? {
            FaceKind::Interior { left, right } => {
                let a = self.traces(field, left).1;
                let b = self.traces(field, right).0;
                (a - b, 0.5 * (a + b))
            }
            FaceKind::BoundaryLeft { cell } => {
                let a = self.traces(field, cell).0;
                (-a, a)
            }
            FaceKind::BoundaryRight { cell } => {
                let a = self.traces(field, cell).1;
                (a, a)
            }
        })
    }

    /// `∫ u_x φ + ∫ u φ_x − ∫_{faces} ⟦φu⟧`, which vanishes identically for
    /// broken fields (elementwise integration by parts).
    pub fn elementwise_ibp_residual(&self, u: &DgField, phi: &DgField) -> Result<f64> {
        self.check(u)?;
        self.check(phi)?;
        let mut volume = 0.0;
        for cell in 0..self.n_cells() {
            let jac = 0.5 * self.mesh.cell_size(cell);
            for q in 0..self.basis.n_quad() {
                let (uv, ud) = self.eval_quad(u, cell, q);
                let (pv, pd) = self.eval_quad(phi, cell, q);
                volume += self.basis.quad_weights()[q] * jac * (ud * pv + uv * pd);
            }
        }
        let mut faces = 0.0;
        for face in 0..self.mesh.n_faces() {
            faces += match self.face_kind(face)? {
                FaceKind::Interior { left, right } => {
                    let (ul, ur) = (self.traces(u, left).1, self.traces(u, right).0);
                    let (pl, pr) = (self.traces(phi, left).1, self.traces(phi, right).0);
                    ul * pl - ur * pr
                }
                FaceKind::BoundaryLeft { cell } => {
                    -self.traces(u, cell).0 * self.traces(phi, cell).0
                }
                FaceKind::BoundaryRight { cell } => {
                    self.traces(u, cell).1 * self.traces(phi, cell).1
                }
            };
        }
        Ok(volume - faces)
    }

    /// Broken L2 distance between `field` and a pointwise function.
    pub fn l2_error(&self, field: &DgField, exact: impl Fn(f64) -> f64) -> Result<f64> {
        self.check(field)?;
        let mut sum = 0.0;
        for cell in 0..self.n_cells() {
            let jac = 0.5 * self.mesh.cell_size(cell);
            for (q, x) in self.quad_coords(cell).enumerate() {
                let d = self.eval_quad(field, cell, q).0 - exact(x);
                sum += self.basis.quad_weights()[q] * jac * d * d;
            }
        }
        Ok(sum.sqrt())
    }

    /// `∫ field dx` by quadrature.
    pub fn integrate(&self, field: &DgField) -> Result<f64> {
        self.check(field)?;
        let mut sum = 0.0;
        for cell in 0..self.n_cells() {
            let jac = 0.5 * self.mesh.cell_size(cell);
            for q in 0..self.basis.n_quad() {
                sum += self.basis.quad_weights()[q] * jac * self.eval_quad(field, cell, q).0;
            }
        }
        Ok(sum)
    }
}

/// Broken polynomial: one block of nodal coefficients per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct DgField {
    n_cells: usize,
    degree: usize,
    coeffs: Vec<f64>,
}

impl DgField {
    pub fn from_coeffs(n_cells: usize, degree: usize, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != n_cells * (degree + 1) {
            return Err(Error::MeshMismatch);
        }
        Ok(Self {
            n_cells,
            degree,
            coeffs,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    #[inline]
    pub fn cell(&self, cell: usize) -> &[f64] {
        let n = self.degree + 1;
        &self.coeffs[cell * n..(cell + 1) * n]
    }

    #[inline]
    pub fn cell_mut(&mut self, cell: usize) -> &mut [f64] {
        let n = self.degree + 1;
        &mut self.coeffs[cell * n..(cell + 1) * n]
    }

    pub fn same_shape(&self, other: &DgField) -> bool {
        self.n_cells == other.n_cells && self.degree == other.degree
    }

    pub fn max_abs_diff(&self, other: &DgField) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}
