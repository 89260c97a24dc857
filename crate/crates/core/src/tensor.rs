//! Pointwise tensor algebra in arbitrary dimension: the induced inner product
//! on covariant 2-tensors, the strain tensor, and Lie derivatives.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-12;

/// Components `b_ij` of a symmetric covariant 2-tensor at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTensor {
    b: DMatrix<f64>,
}

impl SymTensor {
    pub fn new(b: DMatrix<f64>) -> Result<Self> {
        if !b.is_square() {
            return Err(Error::DimensionMismatch {
                expected: b.nrows(),
                got: b.ncols(),
            });
        }
        let n = b.nrows();
        for i in 0..n {
            for j in (i + 1)..n {
                let gap = (b[(i, j)] - b[(j, i)]).abs();
                let scale = b[(i, j)].abs().max(b[(j, i)].abs()).max(1.0);
                if gap > SYMMETRY_TOL * scale {
                    return Err(Error::NotSymmetric { i, j, gap });
                }
            }
        }
        Ok(Self { b })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(matrix_from_rows(rows)?)
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            b: DMatrix::zeros(dim, dim),
        }
    }

    pub fn scalar(s: f64) -> Self {
        Self {
            b: DMatrix::from_element(1, 1, s),
        }
    }

    pub fn dim(&self) -> usize {
        self.b.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.b[(i, j)]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|i| self.b.row(i).iter().copied().collect())
            .collect()
    }

    /// Congruence `Aᵀ B A`, the component change under `x = A x'`.
    pub fn congruent(&self, a: &DMatrix<f64>) -> Self {
        let m = a.transpose() * &self.b * a;
        // re-symmetrize rounding noise
        let sym = (&m + m.transpose()) * 0.5;
        Self { b: sym }
    }
}

/// A Riemannian metric at one point, stored together with its inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct Metric {
    g: DMatrix<f64>,
    inv: DMatrix<f64>,
}

impl Metric {
    /// Accepts `g` only if it is symmetric and its Cholesky factorization
    /// succeeds.
    pub fn new(g: DMatrix<f64>) -> Result<Self> {
        let g = SymTensor::new(g)?.b;
        let chol = g.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
        let inv = chol.inverse();
        Ok(Self { g, inv })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(matrix_from_rows(rows)?)
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            g: DMatrix::identity(dim, dim),
            inv: DMatrix::identity(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.g
    }

    /// `[g]^{ij}`, the inverse matrix.
    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.inv
    }

    pub fn as_tensor(&self) -> SymTensor {
        SymTensor { b: self.g.clone() }
    }

    pub fn congruent(&self, a: &DMatrix<f64>) -> Result<Self> {
        Self::new(self.as_tensor().congruent(a).b)
    }
}

fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    for r in rows {
        if r.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: r.len(),
            });
        }
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Strain `S = h*g_N − g_M`.
pub fn strain(pullback: &SymTensor, g_m: &Metric) -> Result<SymTensor> {
    check_dim(g_m.dim(), pullback.dim())?;
    Ok(SymTensor {
        b: &pullback.b - &g_m.g,
    })
}

/// `G(B1, B2) = b1_ij b2_kl g^{ik} g^{jl}`, the inner product on covariant
/// 2-tensors induced by `g`.
pub fn g_contract(b1: &SymTensor, b2: &SymTensor, g: &Metric) -> Result<f64> {
    let n = g.dim();
    check_dim(n, b1.dim())?;
    check_dim(n, b2.dim())?;
    let gi = &g.inv;
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            let bij = b1.b[(i, j)];
            if bij == 0.0 {
                continue;
            }
            for k in 0..n {
                let gik = gi[(i, k)];
                for l in 0..n {
                    acc += bij * b2.b[(k, l)] * gik * gi[(j, l)];
                }
            }
        }
    }
    Ok(acc)
}

/// Local jet `(y, ẏ, ÿ)` of a tangent field `Y = y ∂/∂t` on `[0, L]`,
/// sampled on the uniform grid `t_k = k·L/m`, `k = 0..=m`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorFieldJet1D {
    length: f64,
    y: Vec<f64>,
    ydot: Vec<f64>,
    yddot: Vec<f64>,
}

impl VectorFieldJet1D {
    pub fn new(length: f64, y: Vec<f64>, ydot: Vec<f64>, yddot: Vec<f64>) -> Result<Self> {
        if !(length > 0.0) {
            return Err(Error::InvalidArgument(format!("length {length} must be positive")));
        }
        if y.len() < 3 {
            return Err(Error::GridMismatch { expected: 3, got: y.len() });
        }
        for v in [&ydot, &yddot] {
            if v.len() != y.len() {
                return Err(Error::GridMismatch {
                    expected: y.len(),
                    got: v.len(),
                });
            }
        }
        let last = y.len() - 1;
        for (name, v) in [("y", &y), ("y'", &ydot), ("y''", &yddot)] {
            if (v[0] - v[last]).abs() > 1e-9 {
                return Err(Error::InvalidArgument(format!(
                    "field is not periodic: {name}(0) = {} but {name}(L) = {}",
                    v[0], v[last]
                )));
            }
        }
        Ok(Self {
            length,
            y,
            ydot,
            yddot,
        })
    }

    /// Samples a field and its two derivatives given in closed form.
    pub fn from_fn(
        length: f64,
        m: usize,
        y: impl Fn(f64) -> f64,
        ydot: impl Fn(f64) -> f64,
        yddot: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let h = length / m as f64;
        let t: Vec<f64> = (0..=m).map(|k| k as f64 * h).collect();
        Self::new(
            length,
            t.iter().map(|&s| y(s)).collect(),
            t.iter().map(|&s| ydot(s)).collect(),
            t.iter().map(|&s| yddot(s)).collect(),
        )
    }

    pub fn zero(length: f64, m: usize) -> Self {
        Self {
            length,
            y: vec![0.0; m + 1],
            ydot: vec![0.0; m + 1],
            yddot: vec![0.0; m + 1],
        }
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Number of intervals `m`.
    pub fn intervals(&self) -> usize {
        self.y.len() - 1
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn ydot(&self) -> &[f64] {
        &self.ydot
    }

    pub fn yddot(&self) -> &[f64] {
        &self.yddot
    }
}

/// `[L_Y h*g_N]_11 = 2u̇(üy + u̇ẏ)` for the 1-D pullback metric `u̇²`.
pub fn lie_derivative_1d(udot: &[f64], uddot: &[f64], field: &VectorFieldJet1D) -> Result<Vec<f64>> {
    let n = field.y.len();
    for len in [udot.len(), uddot.len()] {
        if len != n {
            return Err(Error::GridMismatch { expected: n, got: len });
        }
    }
    Ok((0..n)
        .map(|k| 2.0 * udot[k] * (uddot[k] * field.y[k] + udot[k] * field.ydot[k]))
        .collect())
}

/// `[L_X β]_ij = X^k ∂_k β_ij + β_kj ∂_i X^k + β_ik ∂_j X^k` at one point.
///
/// `dbeta[k]` holds `∂β/∂x^k`; `dx[(k, i)]` holds `∂X^k/∂x^i`.
pub fn lie_derivative_at(
    beta: &SymTensor,
    dbeta: &[SymTensor],
    x: &[f64],
    dx: &DMatrix<f64>,
) -> Result<SymTensor> {
    let n = beta.dim();
    check_dim(n, dbeta.len())?;
    check_dim(n, x.len())?;
    check_dim(n, dx.nrows())?;
    check_dim(n, dx.ncols())?;
    for d in dbeta {
        check_dim(n, d.dim())?;
    }
    let b = &beta.b;
    let out = DMatrix::from_fn(n, n, |i, j| {
        let mut v = 0.0;
        for k in 0..n {
            v += x[k] * dbeta[k].b[(i, j)];
            v += b[(k, j)] * dx[(k, i)];
            v += b[(i, k)] * dx[(k, j)];
        }
        v
    });
    Ok(SymTensor { b: out })
}

/// Uniform periodic grid on a box `[0, n_1 h_1) × … × [0, n_d h_d)`, stored in
/// row-major order (last axis fastest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicGrid {
    pub shape: Vec<usize>,
    pub spacing: Vec<f64>,
}

impl PeriodicGrid {
    pub fn new(shape: Vec<usize>, spacing: Vec<f64>) -> Result<Self> {
        check_dim(shape.len(), spacing.len())?;
        if shape.iter().any(|&s| s < 3) || spacing.iter().any(|&h| !(h > 0.0)) {
            return Err(Error::InvalidArgument(
                "grid needs at least 3 points and positive spacing per axis".into(),
            ));
        }
        Ok(Self { shape, spacing })
    }

    pub fn ndim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.shape.len()];
        for a in (0..self.shape.len().saturating_sub(1)).rev() {
            s[a] = s[a + 1] * self.shape[a + 1];
        }
        s
    }

    /// Multi-index of a flat index.
    pub fn unravel(&self, mut flat: usize) -> Vec<usize> {
        let strides = self.strides();
        strides
            .iter()
            .map(|&s| {
                let i = flat / s;
                flat %= s;
                i
            })
            .collect()
    }

    /// Coordinates of a flat index.
    pub fn coords(&self, flat: usize) -> Vec<f64> {
        self.unravel(flat)
            .iter()
            .zip(&self.spacing)
            .map(|(&i, &h)| i as f64 * h)
            .collect()
    }

    /// Flat indices of the two neighbours of `flat` along `axis`, wrapping.
    fn neighbours(&self, flat: usize, axis: usize, strides: &[usize]) -> (usize, usize) {
        let n = self.shape[axis];
        let s = strides[axis];
        let i = (flat / s) % n;
        let base = flat - i * s;
        (base + ((i + n - 1) % n) * s, base + ((i + 1) % n) * s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TensorField {
    pub grid: PeriodicGrid,
    pub values: Vec<SymTensor>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub grid: PeriodicGrid,
    pub values: Vec<Vec<f64>>,
}

impl TensorField {
    pub fn new(grid: PeriodicGrid, values: Vec<SymTensor>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        for v in &values {
            check_dim(grid.ndim(), v.dim())?;
        }
        Ok(Self { grid, values })
    }
}

impl VectorField {
    pub fn new(grid: PeriodicGrid, values: Vec<Vec<f64>>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        for v in &values {
            check_dim(grid.ndim(), v.len())?;
        }
        Ok(Self { grid, values })
    }
}

/// Lie derivative of a tensor field along a vector field on a periodic grid,
/// with spatial derivatives from second-order central differences.
pub fn lie_derivative_general(beta: &TensorField, x: &VectorField) -> Result<TensorField> {
    if beta.grid != x.grid {
        return Err(Error::GridMismatch {
            expected: beta.grid.len(),
            got: x.grid.len(),
        });
    }
    let grid = &beta.grid;
    let n = grid.ndim();
    let strides = grid.strides();
    let values = (0..grid.len())
        .map(|p| {
            let mut dbeta = Vec::with_capacity(n);
            let mut dx = DMatrix::zeros(n, n);
            for axis in 0..n {
                let (lo, hi) = grid.neighbours(p, axis, &strides);
                let inv = 0.5 / grid.spacing[axis];
                dbeta.push(SymTensor {
                    b: (&beta.values[hi].b - &beta.values[lo].b) * inv,
                });
                for k in 0..n {
                    dx[(k, axis)] = (x.values[hi][k] - x.values[lo][k]) * inv;
                }
            }
            lie_derivative_at(&beta.values[p], &dbeta, &x.values[p], &dx)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TensorField {
        grid: grid.clone(),
        values,
    })
}
