//! Small dense vector and matrix helpers for points in R^d.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

/// `a + s * b`.
pub fn axpy(a: &[f64], s: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}

pub fn neg(a: &[f64]) -> Vec<f64> {
    a.iter().map(|x| -x).collect()
}

pub fn unit(dim: usize, axis: usize) -> Vec<f64> {
    let mut e = vec![0.0; dim];
    e[axis] = 1.0;
    e
}

/// Returns `a / |a|`, rejecting the zero vector.
pub fn normalize(a: &[f64]) -> Result<Vec<f64>> {
    let n = norm(a);
    if !(n > 0.0 && n.is_finite()) {
        return invalid("cannot normalize a zero or non-finite vector");
    }
    Ok(scale(a, 1.0 / n))
}

/// Checks that `w` has unit length within `tol`.
pub fn check_unit(w: &[f64], tol: f64) -> Result<()> {
    let n = norm(w);
    if (n - 1.0).abs() > tol || !n.is_finite() {
        return invalid(format!("expected a unit vector, got norm {n}"));
    }
    Ok(())
}

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self { n, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return invalid("matrix rows must form a square array");
        }
        Ok(Self {
            n,
            data: rows.concat(),
        })
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// `M x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| dot(self.row(i), x)).collect()
    }

    /// `M^T x`.
    pub fn apply_t(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (i, xi) in x.iter().enumerate() {
            for (o, m) in out.iter_mut().zip(self.row(i)) {
                *o += m * xi;
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let n = self.n;
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                data[j * n + i] = self.data[i * n + j];
            }
        }
        Self { n, data }
    }

    pub fn mul(&self, other: &Matrix) -> Self {
        let n = self.n;
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                for j in 0..n {
                    data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        Self { n, data }
    }

    /// Lower Cholesky factor of a symmetric positive semidefinite matrix.
    /// Tiny negative pivots from rounding are clamped to zero.
    pub fn cholesky(&self) -> Result<Matrix> {
        let n = self.n;
        let mut l = vec![0.0; n * n];
        let scale = (0..n).map(|i| self.get(i, i).abs()).fold(0.0, f64::max);
        for j in 0..n {
            let mut d = self.get(j, j);
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if d < -1e-10 * scale.max(1e-300) {
                return invalid("matrix is not positive semidefinite");
            }
            let d = d.max(0.0).sqrt();
            l[j * n + j] = d;
            for i in j + 1..n {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = if d > 0.0 { s / d } else { 0.0 };
            }
        }
        Ok(Matrix { n, data: l })
    }
}

/// Proper rotation `Q` (det +1) with `Q n = e_d` for a unit vector `n`.
///
/// Built from the Householder reflection swapping `n` and `e_d`, composed
/// with a sign flip of the first axis so the determinant is +1.
pub fn rotation_to_last_axis(n: &[f64]) -> Matrix {
    let d = n.len();
    let mut v = n.to_vec();
    v[d - 1] -= 1.0;
    let vv = dot(&v, &v);
    if vv < 1e-30 {
        return Matrix::identity(d);
    }
    let mut h = Matrix::identity(d);
    for i in 0..d {
        for j in 0..d {
            h.data[i * d + j] -= 2.0 * v[i] * v[j] / vv;
        }
    }
    for j in 0..d {
        h.data[j] = -h.data[j];
    }
    h
}

/// Orthonormal vectors spanning the complement of the unit vector `u`.
pub fn orthogonal_complement(u: &[f64]) -> Vec<Vec<f64>> {
    let q = rotation_to_last_axis(u);
    // Rows of Q are an orthonormal basis; the last row is u itself.
    (0..u.len() - 1).map(|i| q.row(i).to_vec()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotation_maps_normal_to_last_axis() {
        for n in [
            vec![0.6, 0.8],
            vec![0.0, -1.0],
            vec![0.0, 1.0],
            vec![1.0, 2.0, -2.0],
        ] {
            let n = normalize(&n).unwrap();
            let q = rotation_to_last_axis(&n);
            let e = q.apply(&n);
            let d = n.len();
            for (i, v) in e.iter().enumerate() {
                let want = if i == d - 1 { 1.0 } else { 0.0 };
                assert!((v - want).abs() < 1e-14);
            }
            let qtq = q.transpose().mul(&q);
            for i in 0..d {
                for j in 0..d {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((qtq.get(i, j) - want).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn rotation_is_proper_in_2d() {
        let q = rotation_to_last_axis(&[0.6, 0.8]);
        let det = q.get(0, 0) * q.get(1, 1) - q.get(0, 1) * q.get(1, 0);
        assert!((det - 1.0).abs() < 1e-14);
    }

    #[test]
    fn cholesky_reconstructs() {
        let m = Matrix::from_rows(&[vec![4.0, 2.0], vec![2.0, 3.0]]).unwrap();
        let l = m.cholesky().unwrap();
        let r = l.mul(&l.transpose());
        for (a, b) in r.data.iter().zip(&m.data) {
            assert!((a - b).abs() < 1e-14);
        }
    }
}
