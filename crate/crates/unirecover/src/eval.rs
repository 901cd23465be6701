//! Evaluation machinery shared by recovery, discretization and the bench
//! drivers: tensor evaluation grids (the uniform-norm surrogate), point sets
//! in floating coordinates, and real cosine/sine bases of the subspaces
//! `T(R(s))`.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::torus::{enumerate_rectangle, FrequencyVector, ShapeVector, TorusPoint};

/// A finite evaluation set: a uniform tensor grid on `[0, 2π)^d` plus optional
/// extra points (for example the sampling nodes, so that node values are
/// always dominated by the set maximum).
///
/// Canonical point order: tensor points in row-major multi-index order (last
/// axis fastest), then the extras in insertion order. Every evaluator in this
/// crate emits values in this order.
#[derive(Debug, Clone)]
pub struct EvalGrid {
    d: usize,
    per_axis: usize,
    axes: Vec<Vec<f64>>,
    extra: Vec<Vec<f64>>,
}

/// Per-axis fractional offsets of the uniform grids, golden-ratio multiples.
/// A plain unshifted grid aligns with the symmetries of the trigonometric
/// subspaces and produces thousands of exactly tied extrema, which degrades
/// the minimax solver; the shift removes the ties without affecting the
/// oversampling guarantee (it is still a uniform grid).
fn axis_offset(axis: usize) -> f64 {
    ((axis + 1) as f64 * 0.618_033_988_749_894_9).fract()
}

/// Serializable description of a grid, recorded in results.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct GridSpec {
    pub d: usize,
    pub per_axis: usize,
    pub extra_points: usize,
}

impl EvalGrid {
    /// Uniform tensor grid with `per_axis` points per axis, each axis shifted
    /// by its golden-ratio offset: `2π(i + o_j)/per_axis`.
    pub fn tensor(d: usize, per_axis: usize) -> Self {
        assert!(d >= 1 && per_axis >= 1);
        let axes = (0..d)
            .map(|j| {
                let o = axis_offset(j);
                (0..per_axis).map(|i| TAU * (i as f64 + o) / per_axis as f64).collect()
            })
            .collect();
        Self { d, per_axis, axes, extra: Vec::new() }
    }

    /// Grid matched to a shape collection: `oversample · 2^{max_j s_j}` points
    /// per axis, the resolution rule used by every sup-norm surrogate here.
    pub fn for_shapes(d: usize, oversample: usize, shapes: &[ShapeVector]) -> Self {
        let max_entry = shapes
            .iter()
            .flat_map(|s| s.entries().iter().copied())
            .max()
            .unwrap_or(0);
        Self::tensor(d, oversample << max_entry)
    }

    /// Appends explicit evaluation points (deduplication is not attempted).
    pub fn with_extra_points(mut self, pts: &[Vec<f64>]) -> Self {
        for p in pts {
            assert_eq!(p.len(), self.d, "extra point dimension mismatch");
            self.extra.push(p.clone());
        }
        self
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn per_axis(&self) -> usize {
        self.per_axis
    }

    pub fn axis_values(&self, axis: usize) -> &[f64] {
        &self.axes[axis]
    }

    pub fn extra_points(&self) -> &[Vec<f64>] {
        &self.extra
    }

    pub fn tensor_len(&self) -> usize {
        self.per_axis.pow(self.d as u32)
    }

    pub fn total_len(&self) -> usize {
        self.tensor_len() + self.extra.len()
    }

    /// Index of the first extra point in the canonical order.
    pub fn extra_offset(&self) -> usize {
        self.tensor_len()
    }

    /// The `idx`-th point in canonical order.
    pub fn point(&self, idx: usize) -> Vec<f64> {
        let t = self.tensor_len();
        if idx < t {
            let mut rem = idx;
            let mut out = vec![0.0; self.d];
            for j in (0..self.d).rev() {
                out[j] = self.axes[j][rem % self.per_axis];
                rem /= self.per_axis;
            }
            out
        } else {
            self.extra[idx - t].clone()
        }
    }

    /// Materializes all points in canonical order.
    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.total_len()).map(|i| self.point(i)).collect()
    }

    pub fn spec(&self) -> GridSpec {
        GridSpec { d: self.d, per_axis: self.per_axis, extra_points: self.extra.len() }
    }
}

/// A point set in floating coordinates, stored axis-major for the factorized
/// kernel evaluators.
#[derive(Debug, Clone)]
pub struct PointSet {
    axes: Vec<Vec<f64>>,
}

impl PointSet {
    pub fn from_torus_points(points: &[TorusPoint]) -> Result<Self> {
        let coords: Vec<Vec<f64>> = points.iter().map(|p| p.to_radians()).collect();
        Self::from_points(&coords)
    }

    pub fn from_points(points: &[Vec<f64>]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidParam("point set must be nonempty".into()));
        }
        let d = points[0].len();
        if d == 0 {
            return Err(Error::InvalidParam("points must have d ≥ 1".into()));
        }
        let mut axes = vec![Vec::with_capacity(points.len()); d];
        for p in points {
            if p.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: p.len() });
            }
            for (j, &x) in p.iter().enumerate() {
                if !x.is_finite() {
                    return Err(Error::NonFinite(j));
                }
                axes[j].push(x);
            }
        }
        Ok(Self { axes })
    }

    pub fn len(&self) -> usize {
        self.axes[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.axes[0].is_empty()
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axis(&self, j: usize) -> &[f64] {
        &self.axes[j]
    }

    pub fn point(&self, i: usize) -> Vec<f64> {
        self.axes.iter().map(|a| a[i]).collect()
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }
}

/// Real cosine/sine basis of `T(R(s))`.
///
/// The basis is `1`, then `cos(k·x), sin(k·x)` for every lexicographically
/// positive `k ∈ R(s)`; its dimension equals `|R(s)|`, the real dimension of
/// the subspace restricted to real-valued functions.
#[derive(Debug, Clone)]
pub struct TrigBasis {
    shape: ShapeVector,
    half_modes: Vec<FrequencyVector>,
}

impl TrigBasis {
    pub fn new(shape: &ShapeVector) -> Result<Self> {
        let zero = FrequencyVector(vec![0; shape.dim()]);
        let half_modes = enumerate_rectangle(shape)?
            .into_iter()
            .filter(|k| *k > zero)
            .collect();
        Ok(Self { shape: shape.clone(), half_modes })
    }

    pub fn shape(&self) -> &ShapeVector {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        1 + 2 * self.half_modes.len()
    }

    pub fn half_modes(&self) -> &[FrequencyVector] {
        &self.half_modes
    }

    /// Fills one design-matrix row: the basis functions evaluated at `x`.
    pub fn eval_row(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dim());
        out[0] = 1.0;
        for (i, k) in self.half_modes.iter().enumerate() {
            let angle: f64 = k
                .components()
                .iter()
                .zip(x)
                .map(|(&kj, &xj)| kj as f64 * xj)
                .sum();
            let (s, c) = angle.sin_cos();
            out[1 + 2 * i] = c;
            out[2 + 2 * i] = s;
        }
    }

    pub fn eval(&self, coeffs: &[f64], x: &[f64]) -> f64 {
        debug_assert_eq!(coeffs.len(), self.dim());
        let mut row = vec![0.0; self.dim()];
        self.eval_row(x, &mut row);
        row.iter().zip(coeffs).map(|(&r, &c)| r * c).sum()
    }

    /// Design matrix over the canonical points of a grid (one row per point).
    pub fn design_matrix(&self, grid: &EvalGrid) -> DMatrix<f64> {
        let rows = grid.total_len();
        let dim = self.dim();
        let mut data = vec![0.0f64; rows * dim];
        use rayon::prelude::*;
        data.par_chunks_mut(dim).enumerate().for_each(|(i, row)| {
            self.eval_row(&grid.point(i), row);
        });
        DMatrix::from_row_slice(rows, dim, &data)
    }

    /// Design matrix over an explicit point list.
    pub fn design_matrix_points(&self, points: &[Vec<f64>]) -> DMatrix<f64> {
        let rows = points.len();
        let dim = self.dim();
        let mut data = vec![0.0f64; rows * dim];
        use rayon::prelude::*;
        data.par_chunks_mut(dim).enumerate().for_each(|(i, row)| {
            self.eval_row(&points[i], row);
        });
        DMatrix::from_row_slice(rows, dim, &data)
    }

    /// Values of the polynomial with the given coefficients at all grid points.
    pub fn eval_grid(&self, coeffs: &[f64], grid: &EvalGrid) -> Vec<f64> {
        let design = self.design_matrix(grid);
        (design * DVector::from_column_slice(coeffs)).iter().copied().collect()
    }
}

/// Smallest shape whose rectangle contains all given frequencies.
pub fn covering_shape(freqs: &[FrequencyVector], d: usize) -> Result<ShapeVector> {
    let mut maxima = vec![0i64; d];
    for k in freqs {
        if k.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, got: k.dim() });
        }
        for (j, &kj) in k.components().iter().enumerate() {
            maxima[j] = maxima[j].max(kj.abs());
        }
    }
    let entries = maxima
        .into_iter()
        .map(|m| {
            let mut s = 0u32;
            while (1i64 << s) - 1 < m {
                s += 1;
            }
            s
        })
        .collect();
    Ok(ShapeVector::new(entries))
}

pub fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0f64, |acc, &v| acc.max(v.abs()))
}
