//! Banded storage, banded LU with partial pivoting and a block-Jacobi
//! preconditioned BiCGSTAB for the Newton systems.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Square matrix with `kl` sub- and `ku` superdiagonals, stored column by
/// column with `kl` extra rows of room for pivoting fill-in.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    ab: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let ldab = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            ldab,
            ab: vec![0.0; ldab * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    #[inline]
    pub fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && i <= j + self.kl && j <= i + self.ku
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        j * self.ldab + self.kl + self.ku + i - j
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.ab[self.slot(i, j)]
        } else {
            0.0
        }
    }

    /// Sets `A(i, j)`; entries outside the band must be zero.
    pub fn set(&mut self, i: usize, j: usize, value: f64) -> Result<()> {
        if !self.in_band(i, j) {
            if value == 0.0 {
                return Ok(());
            }
            return Err(Error::LinearSolver(format!(
                "entry ({i}, {j}) lies outside the band ({}, {})",
                self.kl, self.ku
            )));
        }
        let s = self.slot(i, j);
        self.ab[s] = value;
        Ok(())
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for j in 0..self.n {
            let lo = j.saturating_sub(self.ku);
            let hi = (j + self.kl).min(self.n - 1);
            for i in lo..=hi {
                y[i] += self.ab[self.slot(i, j)] * x[j];
            }
        }
        y
    }

    /// LU factorization with partial pivoting.
    pub fn factor(mut self) -> Result<BandLu> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let mut ipiv = vec![0; n];
        let mut ju = 0;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let mut p = j;
            let mut best = self.ab[self.slot(j, j)].abs();
            for i in j + 1..=j + km {
                let a = self.ab[self.slot(i, j)].abs();
                if a > best {
                    best = a;
                    p = i;
                }
            }
            ipiv[j] = p;
            if !(best > 0.0) || !best.is_finite() {
                return Err(Error::LinearSolver(format!(
                    "singular or non-finite pivot in column {j}"
                )));
            }
            ju = ju.max((p + ku).min(n - 1));
            if p != j {
                for c in j..=ju {
                    let (a, b) = (self.slot(j, c), self.slot(p, c));
                    self.ab.swap(a, b);
                }
            }
            let pivot = self.ab[self.slot(j, j)];
            for i in j + 1..=j + km {
                let s = self.slot(i, j);
                self.ab[s] /= pivot;
            }
            for c in j + 1..=ju {
                let a = self.ab[self.slot(j, c)];
                if a == 0.0 {
                    continue;
                }
                for i in j + 1..=j + km {
                    let l = self.ab[self.slot(i, j)];
                    let s = self.slot(i, c);
                    self.ab[s] -= l * a;
                }
            }
        }
        Ok(BandLu { lu: self, ipiv })
    }
}

/// Factored band matrix.
#[derive(Debug, Clone)]
pub struct BandLu {
    lu: BandMatrix,
    ipiv: Vec<usize>,
}

impl BandLu {
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let a = &self.lu;
        let n = a.n;
        if rhs.len() != n {
            return Err(Error::LinearSolver(format!(
                "right-hand side has length {}, expected {n}",
                rhs.len()
            )));
        }
        let mut b = rhs.to_vec();
        for j in 0..n {
            b.swap(j, self.ipiv[j]);
            let km = a.kl.min(n - 1 - j);
            for i in j + 1..=j + km {
                b[i] -= a.ab[a.slot(i, j)] * b[j];
            }
        }
        let kv = a.kl + a.ku;
        for j in (0..n).rev() {
            b[j] /= a.ab[a.slot(j, j)];
            for i in j.saturating_sub(kv)..j {
                b[i] -= a.ab[a.slot(i, j)] * b[j];
            }
        }
        if b.iter().all(|v| v.is_finite()) {
            Ok(b)
        } else {
            Err(Error::LinearSolver("non-finite solution".into()))
        }
    }
}

/// Linear solver used inside Newton's method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinearSolverKind {
    #[default]
    BandedLu,
    Bicgstab,
}

/// Settings of the iterative backend.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterativeSettings {
    pub rel_tol: f64,
    pub max_iter: usize,
    /// Size of the diagonal blocks of the preconditioner.
    pub block: usize,
}

/// Preconditioned BiCGSTAB with exact inverses of the diagonal blocks.
pub fn bicgstab(a: &BandMatrix, rhs: &[f64], settings: &IterativeSettings) -> Result<Vec<f64>> {
    let n = a.dim();
    let bs = settings.block.max(1);
    if !n.is_multiple_of(bs) {
        return Err(Error::LinearSolver(format!(
            "block size {bs} does not divide dimension {n}"
        )));
    }
    let mut inv_blocks = Vec::with_capacity(n / bs);
    for b in 0..n / bs {
        let block = DMatrix::from_fn(bs, bs, |i, j| a.get(b * bs + i, b * bs + j));
        let inv = block.try_inverse().ok_or_else(|| {
            Error::LinearSolver(format!("singular diagonal block {b}"))
        })?;
        inv_blocks.push(inv);
    }
    let precond = |r: &[f64]| -> Vec<f64> {
        let mut out = Vec::with_capacity(n);
        for (b, inv) in inv_blocks.iter().enumerate() {
            let seg = DVector::from_column_slice(&r[b * bs..(b + 1) * bs]);
            out.extend((inv * seg).iter());
        }
        out
    };
    let dot = |x: &[f64], y: &[f64]| -> f64 { x.iter().zip(y).map(|(a, b)| a * b).sum() };
    let norm = |x: &[f64]| dot(x, x).sqrt();

    let b_norm = norm(rhs);
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok(x);
    }
    let mut r = rhs.to_vec();
    let r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    for _ in 0..settings.max_iter {
        let rho_new = dot(&r_hat, &r);
        if rho_new == 0.0 {
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        let p_hat = precond(&p);
        v = a.mul_vec(&p_hat);
        alpha = rho / dot(&r_hat, &v);
        let s: Vec<f64> = r.iter().zip(&v).map(|(r, v)| r - alpha * v).collect();
        if norm(&s) <= settings.rel_tol * b_norm {
            for i in 0..n {
                x[i] += alpha * p_hat[i];
            }
            return Ok(x);
        }
        let s_hat = precond(&s);
        let t = a.mul_vec(&s_hat);
        omega = dot(&t, &s) / dot(&t, &t);
        for i in 0..n {
            x[i] += alpha * p_hat[i] + omega * s_hat[i];
            r[i] = s[i] - omega * t[i];
        }
        if norm(&r) <= settings.rel_tol * b_norm {
            return Ok(x);
        }
        if !omega.is_finite() || omega == 0.0 {
            break;
        }
    }
    Err(Error::LinearSolver(
        "BiCGSTAB did not reach the requested tolerance".into(),
    ))
}
