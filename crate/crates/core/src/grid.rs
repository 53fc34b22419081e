//! Uniform periodic grids on the unit torus and the discrete calculus on them.
//!
//! Nodes are indexed lexicographically with axis 0 varying slowest. The
//! divergence is the exact negative adjoint of the centered gradient with
//! respect to the `h^d`-weighted inner product, so summation by parts holds to
//! round-off on every field.

use serde::{Deserialize, Serialize};

use crate::error::{MfgError, Result};

/// Largest supported spatial dimension.
pub const MAX_DIM: usize = 3;

/// Uniform grid with `n` points per axis on `[0, 1)^dim`, periodic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TorusGrid {
    dim: usize,
    n: usize,
}

impl TorusGrid {
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(MfgError::InvalidGrid(format!(
                "dimension {dim} not in 1..=3"
            )));
        }
        if n < 4 || !n.is_multiple_of(2) {
            return Err(MfgError::InvalidGrid(format!(
                "points per axis must be even and at least 4, got {n}"
            )));
        }
        Ok(Self { dim, n })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Grid spacing; the period is fixed to 1 on every axis.
    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Total number of nodes, `n^dim`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Cell volume `h^dim`.
    pub fn cell_volume(&self) -> f64 {
        1.0 / self.len() as f64
    }

    fn stride(&self, axis: usize) -> usize {
        self.n.pow((self.dim - 1 - axis) as u32)
    }

    /// Integer coordinates of a node.
    pub fn coords(&self, index: usize) -> [usize; MAX_DIM] {
        let mut c = [0; MAX_DIM];
        for (axis, slot) in c.iter_mut().enumerate().take(self.dim) {
            *slot = (index / self.stride(axis)) % self.n;
        }
        c
    }

    /// Position of a node in `[0,1)^dim`; unused trailing entries are zero.
    pub fn position(&self, index: usize) -> [f64; MAX_DIM] {
        let c = self.coords(index);
        let h = self.h();
        let mut x = [0.0; MAX_DIM];
        for axis in 0..self.dim {
            x[axis] = c[axis] as f64 * h;
        }
        x
    }

    /// Index of the node displaced by `offset` steps along `axis`, with wrap.
    pub fn shift(&self, index: usize, axis: usize, offset: isize) -> usize {
        let stride = self.stride(axis);
        let c = (index / stride) % self.n;
        let n = self.n as isize;
        let shifted = (c as isize + offset).rem_euclid(n) as usize;
        index - c * stride + shifted * stride
    }

    pub fn zeros(&self) -> ScalarField {
        ScalarField {
            grid: *self,
            values: vec![0.0; self.len()],
        }
    }

    pub fn constant(&self, value: f64) -> ScalarField {
        ScalarField {
            grid: *self,
            values: vec![value; self.len()],
        }
    }

    /// Samples `f` at every node position.
    pub fn sample(&self, f: impl Fn(&[f64]) -> f64) -> ScalarField {
        let values = (0..self.len())
            .map(|i| {
                let x = self.position(i);
                f(&x[..self.dim])
            })
            .collect();
        ScalarField {
            grid: *self,
            values,
        }
    }
}

/// Real-valued grid function.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: TorusGrid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: TorusGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(MfgError::FieldLength {
                expected: grid.len(),
                got: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
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

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> ScalarField {
        debug_assert_eq!(self.grid, other.grid);
        ScalarField {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |acc: f64, v| acc.max(v.abs()))
    }

    /// Cyclic shift by one node along `axis`: result(x) = self(x - h e_axis).
    pub fn roll(&self, axis: usize) -> ScalarField {
        let mut values = vec![0.0; self.values.len()];
        for (i, &v) in self.values.iter().enumerate() {
            values[self.grid.shift(i, axis, 1)] = v;
        }
        ScalarField {
            grid: self.grid,
            values,
        }
    }
}

/// `dim` scalar components on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    grid: TorusGrid,
    components: Vec<ScalarField>,
}

impl VectorField {
    pub fn new(components: Vec<ScalarField>) -> Result<Self> {
        let grid = *components
            .first()
            .ok_or_else(|| MfgError::InvalidParameter("vector field needs components".into()))?
            .grid();
        if components.len() != grid.dim() {
            return Err(MfgError::InvalidParameter(format!(
                "expected {} components, got {}",
                grid.dim(),
                components.len()
            )));
        }
        if components.iter().any(|c| *c.grid() != grid) {
            return Err(MfgError::GridMismatch);
        }
        Ok(Self { grid, components })
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.components
    }

    pub fn component(&self, axis: usize) -> &ScalarField {
        &self.components[axis]
    }

    /// Vector value at a node; entries past `dim` are zero.
    pub fn at(&self, index: usize) -> [f64; MAX_DIM] {
        let mut p = [0.0; MAX_DIM];
        for (axis, c) in self.components.iter().enumerate() {
            p[axis] = c.values[index];
        }
        p
    }

    /// Pointwise Euclidean length.
    pub fn magnitude(&self) -> ScalarField {
        let values = (0..self.grid.len())
            .map(|i| {
                self.components
                    .iter()
                    .map(|c| c.values[i] * c.values[i])
                    .sum::<f64>()
                    .sqrt()
            })
            .collect();
        ScalarField {
            grid: self.grid,
            values,
        }
    }

    /// Pointwise dot product with another vector field.
    pub fn dot(&self, other: &VectorField) -> ScalarField {
        let values = (0..self.grid.len())
            .map(|i| {
                self.components
                    .iter()
                    .zip(&other.components)
                    .map(|(a, b)| a.values[i] * b.values[i])
                    .sum::<f64>()
            })
            .collect();
        ScalarField {
            grid: self.grid,
            values,
        }
    }
}

/// Centered difference along one axis, `(f(x+h e) - f(x-h e)) / 2h`.
pub fn centered_difference(f: &ScalarField, axis: usize) -> ScalarField {
    let grid = f.grid;
    let inv = 0.5 / grid.h();
    let values = (0..grid.len())
        .map(|i| (f.values[grid.shift(i, axis, 1)] - f.values[grid.shift(i, axis, -1)]) * inv)
        .collect();
    ScalarField { grid, values }
}

pub fn gradient(f: &ScalarField) -> VectorField {
    VectorField {
        grid: f.grid,
        components: (0..f.grid.dim())
            .map(|a| centered_difference(f, a))
            .collect(),
    }
}

/// Negative transpose of [`gradient`]: sum of centered differences of the components.
pub fn divergence(field: &VectorField) -> ScalarField {
    let grid = field.grid;
    let inv = 0.5 / grid.h();
    let values = (0..grid.len())
        .map(|i| {
            field
                .components
                .iter()
                .enumerate()
                .map(|(axis, c)| {
                    (c.values[grid.shift(i, axis, 1)] - c.values[grid.shift(i, axis, -1)]) * inv
                })
                .sum::<f64>()
        })
        .collect();
    ScalarField { grid, values }
}

/// Compact `(2 dim + 1)`-point Laplacian.
pub fn laplacian(f: &ScalarField) -> ScalarField {
    let grid = f.grid;
    let inv_h2 = 1.0 / (grid.h() * grid.h());
    let values = (0..grid.len())
        .map(|i| {
            let centre = f.values[i];
            (0..grid.dim())
                .map(|axis| {
                    (f.values[grid.shift(i, axis, 1)] - 2.0 * centre
                        + f.values[grid.shift(i, axis, -1)])
                        * inv_h2
                })
                .sum::<f64>()
        })
        .collect();
    ScalarField { grid, values }
}

/// Neumaier-compensated sum in index order.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0_f64;
    let mut carry = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

/// `h^dim * sum_x f(x)`.
pub fn integrate(f: &ScalarField) -> f64 {
    compensated_sum(f.values.iter().copied()) / f.grid.len() as f64
}

/// `h^dim`-weighted inner product of two vector fields.
pub fn inner_vector(a: &VectorField, b: &VectorField) -> f64 {
    integrate(&a.dot(b))
}

pub fn inner(a: &ScalarField, b: &ScalarField) -> f64 {
    integrate(&a.zip_map(b, |x, y| x * y))
}

/// Discrete `L^p` norm; pass `f64::INFINITY` for the sup norm.
pub fn lp_norm(f: &ScalarField, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(MfgError::InvalidParameter(format!(
            "L^p norm needs p >= 1, got {p}"
        )));
    }
    if p.is_infinite() {
        return Ok(f.sup_norm());
    }
    if p == 1.0 {
        return Ok(integrate(&f.map(f64::abs)));
    }
    if p == 2.0 {
        return Ok(integrate(&f.map(|v| v * v)).sqrt());
    }
    // scale by the sup norm so large exponents cannot overflow
    let top = f.sup_norm();
    if top == 0.0 || !top.is_finite() {
        return Ok(top);
    }
    Ok(top * integrate(&f.map(|v| (v.abs() / top).powf(p))).powf(1.0 / p))
}

pub fn mean_zero_project(f: &ScalarField) -> ScalarField {
    let mean = integrate(f);
    f.map(|v| v - mean)
}
