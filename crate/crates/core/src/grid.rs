//! Periodic structured grids, second-order finite differences and quadrature.
//!
//! All fields live on a flat torus: node `x_i = i·h` along each axis, and
//! indices wrap modulo `n`. Storage is node-major with the x-axis fastest.
//! Pointwise operators are parallelised over nodes; reductions go through
//! [`pairwise_sum`], whose tree shape depends only on the input length, so
//! every result is independent of the worker-thread count.

use std::fmt::Debug;
use std::ops::{Add, Mul, Sub};

use rayon::prelude::*;

use crate::clifford::{EvenSpinor, Vector};
use crate::error::GridError;

/// Minimum nodes per axis.
pub const MIN_NODES: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    dim: usize,
    n: [usize; 3],
    length: [f64; 3],
    h: [f64; 3],
}

impl Grid {
    /// A periodic grid with `n.len()` (2 or 3) axes.
    pub fn new(n: &[usize], length: &[f64]) -> Result<Grid, GridError> {
        let dim = n.len();
        if !(2..=3).contains(&dim) || length.len() != dim {
            return Err(GridError::Dimension(dim));
        }
        let mut nn = [1usize; 3];
        let mut ll = [1.0; 3];
        let mut hh = [1.0; 3];
        for axis in 0..dim {
            if n[axis] < MIN_NODES {
                return Err(GridError::TooFewNodes { axis, n: n[axis] });
            }
            if !(length[axis] > 0.0 && length[axis].is_finite()) {
                return Err(GridError::Length {
                    axis,
                    length: length[axis],
                });
            }
            nn[axis] = n[axis];
            ll[axis] = length[axis];
            hh[axis] = length[axis] / n[axis] as f64;
        }
        Ok(Grid {
            dim,
            n: nn,
            length: ll,
            h: hh,
        })
    }

    /// Cube / square with equal axes.
    pub fn uniform(dim: usize, n: usize, length: f64) -> Result<Grid, GridError> {
        Grid::new(&vec![n; dim], &vec![length; dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self, axis: usize) -> usize {
        self.n[axis]
    }

    pub fn length(&self, axis: usize) -> f64 {
        self.length[axis]
    }

    pub fn h(&self, axis: usize) -> f64 {
        self.h[axis]
    }

    pub fn counts(&self) -> &[usize] {
        &self.n[..self.dim]
    }

    pub fn lengths(&self) -> &[f64] {
        &self.length[..self.dim]
    }

    pub fn min_h(&self) -> f64 {
        self.h[..self.dim].iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Total node count.
    pub fn len(&self) -> usize {
        self.n.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `Π h` over the active axes.
    pub fn cell_volume(&self) -> f64 {
        self.h[..self.dim].iter().product()
    }

    pub fn volume(&self) -> f64 {
        self.length[..self.dim].iter().product()
    }

    #[inline]
    pub fn index(&self, c: [usize; 3]) -> usize {
        c[0] + self.n[0] * (c[1] + self.n[1] * c[2])
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let i = idx % self.n[0];
        let r = idx / self.n[0];
        [i, r % self.n[1], r / self.n[1]]
    }

    /// Index of the node `offset` steps along `axis` from `c`, wrapping.
    #[inline]
    pub fn neighbor(&self, c: [usize; 3], axis: usize, offset: isize) -> usize {
        let n = self.n[axis] as isize;
        let mut c = c;
        let mut p = c[axis] as isize + offset;
        if p < 0 || p >= n {
            p = p.rem_euclid(n);
        }
        c[axis] = p as usize;
        self.index(c)
    }

    /// `(next, previous)` node indices along `axis`, wrapping.
    #[inline]
    pub fn adjacent(&self, idx: usize, c: [usize; 3], axis: usize) -> (usize, usize) {
        let n = self.n[axis];
        let stride = match axis {
            0 => 1,
            1 => self.n[0],
            _ => self.n[0] * self.n[1],
        };
        let next = if c[axis] + 1 == n { idx + stride - n * stride } else { idx + stride };
        let prev = if c[axis] == 0 { idx + (n - 1) * stride } else { idx - stride };
        (next, prev)
    }

    /// Physical position `i·h` per axis (unused axes are 0).
    pub fn position(&self, idx: usize) -> [f64; 3] {
        let c = self.coords(idx);
        let mut x = [0.0; 3];
        for axis in 0..self.dim {
            x[axis] = c[axis] as f64 * self.h[axis];
        }
        x
    }

    /// Position relative to the domain centre, `i·h - L/2`.
    pub fn centered_position(&self, idx: usize) -> [f64; 3] {
        let mut x = self.position(idx);
        for axis in 0..self.dim {
            x[axis] -= 0.5 * self.length[axis];
        }
        x
    }

    /// Evaluates `f` at every node, in storage order.
    pub fn build<T, F>(&self, f: F) -> Vec<T>
    where
        T: Send + Clone + Default,
        F: Fn(usize, [usize; 3]) -> T + Sync + Send,
    {
        let (n0, n1) = (self.n[0], self.n[1]);
        let mut out = vec![T::default(); self.len()];
        out.par_chunks_mut(n0).enumerate().for_each(|(row, chunk)| {
            let (j, k) = (row % n1, row / n1);
            for (i, slot) in chunk.iter_mut().enumerate() {
                *slot = f(i + n0 * row, [i, j, k]);
            }
        });
        out
    }
}

/// Values that can be stored per node and differenced.
pub trait FieldValue:
    Copy
    + Send
    + Sync
    + Default
    + Debug
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<f64, Output = Self>
{
    /// Number of f64 components per node.
    const NCOMP: usize;

    fn norm_sq(&self) -> f64;

    fn is_finite(&self) -> bool;

    fn write_components(&self, out: &mut Vec<f64>);

    fn from_components(c: &[f64]) -> Self;
}

impl FieldValue for f64 {
    const NCOMP: usize = 1;

    fn norm_sq(&self) -> f64 {
        self * self
    }

    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }

    fn write_components(&self, out: &mut Vec<f64>) {
        out.push(*self);
    }

    fn from_components(c: &[f64]) -> Self {
        c[0]
    }
}

impl FieldValue for EvenSpinor {
    const NCOMP: usize = 4;

    fn norm_sq(&self) -> f64 {
        EvenSpinor::norm_sq(*self)
    }

    fn is_finite(&self) -> bool {
        EvenSpinor::is_finite(*self)
    }

    fn write_components(&self, out: &mut Vec<f64>) {
        out.extend_from_slice(&self.to_array());
    }

    fn from_components(c: &[f64]) -> Self {
        EvenSpinor::new(c[0], c[1], c[2], c[3])
    }
}

impl Mul<f64> for Vector {
    type Output = Vector;
    fn mul(self, k: f64) -> Vector {
        self.scale(k)
    }
}

impl FieldValue for Vector {
    const NCOMP: usize = 3;

    fn norm_sq(&self) -> f64 {
        self.dot(*self)
    }

    fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    fn write_components(&self, out: &mut Vec<f64>) {
        out.extend_from_slice(&self.0);
    }

    fn from_components(c: &[f64]) -> Self {
        Vector([c[0], c[1], c[2]])
    }
}

/// A periodic field with one value per node.
#[derive(Clone, Debug, PartialEq)]
pub struct Field<T> {
    grid: Grid,
    values: Vec<T>,
}

pub type ScalarField = Field<f64>;
pub type SpinorField = Field<EvenSpinor>;
/// Grade-1 values; components beyond the grid dimension stay zero.
pub type VectorField = Field<Vector>;

impl<T: FieldValue> Field<T> {
    pub fn from_values(grid: Grid, values: Vec<T>) -> Result<Self, GridError> {
        if values.len() != grid.len() {
            return Err(GridError::ValueCount {
                expected: grid.len(),
                got: values.len(),
            });
        }
        Ok(Field { grid, values })
    }

    pub fn constant(grid: Grid, value: T) -> Self {
        Field {
            grid,
            values: vec![value; grid.len()],
        }
    }

    pub fn zeros(grid: Grid) -> Self {
        Field::constant(grid, T::default())
    }

    /// Samples `f(idx, centred position)` at every node.
    pub fn from_fn<F>(grid: Grid, f: F) -> Self
    where
        F: Fn([f64; 3]) -> T + Sync + Send,
    {
        let values = grid.build(|idx, _| f(grid.centered_position(idx)));
        Field { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn map<U: FieldValue, F>(&self, f: F) -> Field<U>
    where
        F: Fn(T) -> U + Sync + Send,
    {
        Field {
            grid: self.grid,
            values: self.values.par_iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map<U: FieldValue, V: FieldValue, F>(&self, other: &Field<U>, f: F) -> Field<V>
    where
        F: Fn(T, U) -> V + Sync + Send,
    {
        assert_eq!(self.grid, other.grid, "fields live on different grids");
        Field {
            grid: self.grid,
            values: self
                .values
                .par_iter()
                .zip(other.values.par_iter())
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// `self + k·other`.
    pub fn axpy(&self, k: f64, other: &Field<T>) -> Field<T> {
        self.zip_map(other, |a, b| a + b * k)
    }

    pub fn scale(&self, k: f64) -> Field<T> {
        self.map(|a| a * k)
    }

    /// Largest pointwise magnitude.
    pub fn max_norm(&self) -> f64 {
        self.values
            .par_iter()
            .map(|v| v.norm_sq())
            .reduce(|| 0.0, f64::max)
            .sqrt()
    }

    /// Index of the first non-finite node, if any.
    pub fn first_non_finite(&self) -> Option<usize> {
        self.values.iter().position(|v| !v.is_finite())
    }

    /// Periodic translation by `shift` nodes per axis.
    pub fn shifted(&self, shift: [isize; 3]) -> Field<T> {
        let g = self.grid;
        let values = g.build(|_, c| {
            let mut src = c;
            for axis in 0..3 {
                let n = g.n(axis) as isize;
                src[axis] = (c[axis] as isize - shift[axis]).rem_euclid(n) as usize;
            }
            self.values[g.index(src)]
        });
        Field { grid: g, values }
    }
}

impl ScalarField {
    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Sum with a fixed binary tree whose shape depends only on `values.len()`.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 128;
    const PAR: usize = 1 << 14;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let (lo, hi) = values.split_at(values.len() / 2);
    if values.len() >= PAR {
        let (a, b) = rayon::join(|| pairwise_sum(lo), || pairwise_sum(hi));
        a + b
    } else {
        pairwise_sum(lo) + pairwise_sum(hi)
    }
}

/// `(f(x+h) - f(x-h)) / 2h` along `axis`.
pub fn diff_central<T: FieldValue>(f: &Field<T>, axis: usize) -> Field<T> {
    let g = *f.grid();
    assert!(axis < g.dim(), "axis {axis} invalid for a {}-d grid", g.dim());
    let inv = 0.5 / g.h(axis);
    let v = f.values();
    let values = g.build(|idx, c| {
        let (p, m) = g.adjacent(idx, c, axis);
        (v[p] - v[m]) * inv
    });
    Field { grid: g, values }
}

/// Nonnegative compact Laplacian `-Σ (f(x+h) - 2f(x) + f(x-h)) / h²`.
pub fn laplacian_flat<T: FieldValue>(f: &Field<T>) -> Field<T> {
    let g = *f.grid();
    let v = f.values();
    let values = g.build(|idx, c| {
        let mut acc = T::default();
        for axis in 0..g.dim() {
            let inv = 1.0 / (g.h(axis) * g.h(axis));
            let centre = v[idx];
            let (p, m) = g.adjacent(idx, c, axis);
            acc = acc + (centre + centre - v[p] - v[m]) * inv;
        }
        acc
    });
    Field { grid: g, values }
}

/// Nonnegative wide-stencil Laplacian `-Σ_k ∂_k ∂_k` built from
/// [`diff_central`] applied twice per axis.
pub fn laplacian_wide<T: FieldValue>(f: &Field<T>) -> Field<T> {
    let g = *f.grid();
    let mut acc = Field::zeros(g);
    for axis in 0..g.dim() {
        let d2 = diff_central(&diff_central(f, axis), axis);
        acc = acc.zip_map(&d2, |a, b| a - b);
    }
    acc
}

/// Central-difference gradient; unused components are zero in 2-d.
pub fn gradient_flat(f: &ScalarField) -> VectorField {
    let g = *f.grid();
    let v = f.values();
    let values = g.build(|idx, c| {
        let mut out = [0.0; 3];
        for (axis, o) in out.iter_mut().enumerate().take(g.dim()) {
            let (p, m) = g.adjacent(idx, c, axis);
            *o = (v[p] - v[m]) * (0.5 / g.h(axis));
        }
        Vector(out)
    });
    Field { grid: g, values }
}

/// Rectangle rule `Σ f · Π h`.
pub fn integrate(f: &ScalarField) -> f64 {
    pairwise_sum(f.values()) * f.grid().cell_volume()
}

/// `(sqrt(∫ w |f|² dV₀), max |f|)`; the weight defaults to 1.
pub fn norms<T: FieldValue>(
    f: &Field<T>,
    weight: Option<&ScalarField>,
) -> Result<(f64, f64), GridError> {
    let density: Vec<f64> = match weight {
        Some(w) => {
            if w.grid() != f.grid() {
                return Err(GridError::GridMismatch);
            }
            if let Some(node) = w.values().iter().position(|&x| x < 0.0) {
                return Err(GridError::NegativeWeight {
                    node,
                    value: w.values()[node],
                });
            }
            f.values()
                .par_iter()
                .zip(w.values().par_iter())
                .map(|(v, &wt)| wt * v.norm_sq())
                .collect()
        }
        None => f.values().par_iter().map(|v| v.norm_sq()).collect(),
    };
    let l2 = (pairwise_sum(&density) * f.grid().cell_volume()).sqrt();
    Ok((l2, f.max_norm()))
}
