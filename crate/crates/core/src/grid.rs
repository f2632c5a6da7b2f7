//! Discrete calculus on regular grids with unit spacing.
//!
//! A 2D grid has `rows` (the `x` direction, index `i`) by `cols` (the `y`
//! direction, index `j`), stored row-major. Gradients are forward differences
//! with a zero in the last row/column; the divergence is the negative adjoint
//! of the gradient, i.e. backward differences with the matching boundary rows.

use serde::{Deserialize, Serialize};

use crate::error::{check_dims, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dims {
    D1(usize),
    D2 { rows: usize, cols: usize },
}

impl Dims {
    pub fn len(self) -> usize {
        match self {
            Dims::D1(n) => n,
            Dims::D2 { rows, cols } => rows * cols,
        }
    }

    pub fn is_empty(self) -> bool {
        self.len() == 0
    }

    /// Extent along the splitting direction: the length in 1D, the number of rows in 2D.
    pub fn rows(self) -> usize {
        match self {
            Dims::D1(n) => n,
            Dims::D2 { rows, .. } => rows,
        }
    }

    /// Number of values per row (1 for 1D grids).
    pub fn row_len(self) -> usize {
        match self {
            Dims::D1(_) => 1,
            Dims::D2 { cols, .. } => cols,
        }
    }

    pub fn is_2d(self) -> bool {
        matches!(self, Dims::D2 { .. })
    }

    /// The same geometry with `rows` replaced, used for row bands.
    pub fn with_rows(self, rows: usize) -> Dims {
        match self {
            Dims::D1(_) => Dims::D1(rows),
            Dims::D2 { cols, .. } => Dims::D2 { rows, cols },
        }
    }
}

/// A real-valued function on a 1D or 2D grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    dims: Dims,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn zeros(dims: Dims) -> Self {
        GridFunction {
            dims,
            values: vec![0.0; dims.len()],
        }
    }

    pub fn constant(dims: Dims, value: f64) -> Self {
        GridFunction {
            dims,
            values: vec![value; dims.len()],
        }
    }

    pub fn new(dims: Dims, values: Vec<f64>) -> Result<Self> {
        if values.len() != dims.len() {
            return Err(Error::InvalidArgument(format!(
                "{} values for grid {:?}",
                values.len(),
                dims
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("grid values"));
        }
        Ok(GridFunction { dims, values })
    }

    pub fn from_1d(values: Vec<f64>) -> Self {
        let dims = Dims::D1(values.len());
        GridFunction { dims, values }
    }

    /// Builds a 2D grid from nested rows. Panics on ragged input.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        GridFunction {
            dims: Dims::D2 {
                rows: rows.len(),
                cols,
            },
            values: rows.concat(),
        }
    }

    pub(crate) fn from_raw(dims: Dims, values: Vec<f64>) -> Self {
        debug_assert_eq!(dims.len(), values.len());
        GridFunction { dims, values }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.dims.row_len() + j]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn dot(&self, other: &GridFunction) -> f64 {
        debug_assert_eq!(self.dims, other.dims);
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, factor: f64) -> GridFunction {
        self.map(|v| v * factor)
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> GridFunction {
        GridFunction {
            dims: self.dims,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> GridFunction {
        assert_eq!(self.dims, other.dims, "grid shapes differ");
        GridFunction {
            dims: self.dims,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn add(&self, other: &GridFunction) -> GridFunction {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &GridFunction) -> GridFunction {
        self.zip_map(other, |a, b| a - b)
    }

    /// `self += factor * other`
    pub fn axpy(&mut self, factor: f64, other: &GridFunction) {
        assert_eq!(self.dims, other.dims, "grid shapes differ");
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += factor * b;
        }
    }

    pub fn distance(&self, other: &GridFunction) -> f64 {
        self.sub(other).norm()
    }

    pub fn sup_distance(&self, other: &GridFunction) -> f64 {
        self.sub(other).sup_norm()
    }

    /// Copy of the row band `[start, end)` as its own grid.
    pub fn row_band(&self, start: usize, end: usize) -> GridFunction {
        let w = self.dims.row_len();
        GridFunction {
            dims: self.dims.with_rows(end - start),
            values: self.values[start * w..end * w].to_vec(),
        }
    }
}

/// Dual variable: one component per node in 1D, a pair `(x, y)` per node in 2D.
/// In 1D the `y` component is empty.
#[derive(Clone, Debug, PartialEq)]
pub struct DualField {
    dims: Dims,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl DualField {
    pub fn zeros(dims: Dims) -> Self {
        let n = dims.len();
        DualField {
            dims,
            x: vec![0.0; n],
            y: if dims.is_2d() { vec![0.0; n] } else { Vec::new() },
        }
    }

    pub fn new(dims: Dims, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let expected_y = if dims.is_2d() { dims.len() } else { 0 };
        if x.len() != dims.len() || y.len() != expected_y {
            return Err(Error::InvalidArgument(format!(
                "dual components of length {}/{} for grid {:?}",
                x.len(),
                y.len(),
                dims
            )));
        }
        Ok(DualField { dims, x, y })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    /// Euclidean magnitude of the dual vector at node `k`.
    pub fn node_norm(&self, k: usize) -> f64 {
        if self.y.is_empty() {
            self.x[k].abs()
        } else {
            self.x[k].hypot(self.y[k])
        }
    }

    pub fn sup_node_norm(&self) -> f64 {
        (0..self.dims.len()).fold(0.0, |m, k| m.max(self.node_norm(k)))
    }

    pub fn dot(&self, other: &DualField) -> f64 {
        let dx: f64 = self.x.iter().zip(&other.x).map(|(a, b)| a * b).sum();
        let dy: f64 = self.y.iter().zip(&other.y).map(|(a, b)| a * b).sum();
        dx + dy
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn row_band(&self, start: usize, end: usize) -> DualField {
        let w = self.dims.row_len();
        DualField {
            dims: self.dims.with_rows(end - start),
            x: self.x[start * w..end * w].to_vec(),
            y: if self.y.is_empty() {
                Vec::new()
            } else {
                self.y[start * w..end * w].to_vec()
            },
        }
    }
}

pub(crate) fn forward_diff_into(values: &[f64], dims: Dims, gx: &mut [f64], gy: &mut [f64]) {
    let rows = dims.rows();
    let cols = dims.row_len();
    for i in 0..rows {
        for j in 0..cols {
            let k = i * cols + j;
            gx[k] = if i + 1 < rows { values[k + cols] - values[k] } else { 0.0 };
            if !gy.is_empty() {
                gy[k] = if j + 1 < cols { values[k + 1] - values[k] } else { 0.0 };
            }
        }
    }
}

pub(crate) fn backward_div_into(dims: Dims, px: &[f64], py: &[f64], out: &mut [f64]) {
    let rows = dims.rows();
    let cols = dims.row_len();
    for i in 0..rows {
        for j in 0..cols {
            let k = i * cols + j;
            let mut d = 0.0;
            if i + 1 < rows {
                d += px[k];
            }
            if i > 0 {
                d -= px[k - cols];
            }
            if !py.is_empty() {
                if j + 1 < cols {
                    d += py[k];
                }
                if j > 0 {
                    d -= py[k - 1];
                }
            }
            out[k] = d;
        }
    }
}

/// Forward-difference gradient on either geometry.
pub fn gradient(u: &GridFunction) -> DualField {
    let mut p = DualField::zeros(u.dims);
    forward_diff_into(&u.values, u.dims, &mut p.x, &mut p.y);
    p
}

/// Backward-difference divergence, the negative adjoint of [`gradient`].
pub fn divergence(p: &DualField) -> GridFunction {
    let mut out = vec![0.0; p.dims.len()];
    backward_div_into(p.dims, &p.x, &p.y, &mut out);
    GridFunction::from_raw(p.dims, out)
}

pub fn gradient_1d(u: &GridFunction) -> Result<GridFunction> {
    let Dims::D1(_) = u.dims else {
        return Err(Error::InvalidArgument("gradient_1d needs a 1D grid".into()));
    };
    let p = gradient(u);
    Ok(GridFunction::from_raw(u.dims, p.x))
}

pub fn gradient_2d(u: &GridFunction) -> Result<DualField> {
    if !u.dims.is_2d() {
        return Err(Error::InvalidArgument("gradient_2d needs a 2D grid".into()));
    }
    Ok(gradient(u))
}

/// 1D divergence of a dual field stored as a grid function. The last entry
/// does not enter the formula.
pub fn divergence_1d(p: &GridFunction) -> Result<GridFunction> {
    let Dims::D1(_) = p.dims else {
        return Err(Error::InvalidArgument("divergence_1d needs a 1D field".into()));
    };
    let mut out = vec![0.0; p.len()];
    backward_div_into(p.dims, &p.values, &[], &mut out);
    Ok(GridFunction::from_raw(p.dims, out))
}

pub fn divergence_2d(p: &DualField) -> Result<GridFunction> {
    if !p.dims.is_2d() {
        return Err(Error::InvalidArgument("divergence_2d needs a 2D field".into()));
    }
    Ok(divergence(p))
}

/// Discrete (isotropic in 2D) total variation: sum over nodes of the
/// gradient magnitude.
pub fn discrete_tv(u: &GridFunction) -> f64 {
    let rows = u.dims.rows();
    let cols = u.dims.row_len();
    let v = &u.values;
    let mut total = 0.0;
    for i in 0..rows {
        for j in 0..cols {
            let k = i * cols + j;
            let gx = if i + 1 < rows { v[k + cols] - v[k] } else { 0.0 };
            if u.dims.is_2d() {
                let gy = if j + 1 < cols { v[k + 1] - v[k] } else { 0.0 };
                total += gx.hypot(gy);
            } else {
                total += gx.abs();
            }
        }
    }
    total
}

pub fn inner(a: &GridFunction, b: &GridFunction) -> Result<f64> {
    check_dims(a.dims, b.dims)?;
    Ok(a.dot(b))
}
