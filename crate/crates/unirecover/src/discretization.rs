//! Empirical certification of uniform-norm universal discretization: estimate
//! the smallest constant `D` with `‖t‖_∞ ≤ D·max_ν |t(ξ^ν)|` for every `t` in
//! every subspace of a shape collection.
//!
//! Random probing yields a lower estimate `D̂` of the true constant (reports
//! label it accordingly); an exact mode for small subspaces computes the grid
//! value of `D` through linear programs.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::eval::{EvalGrid, GridSpec, PointSet, TrigBasis};
use crate::minimax::min_l1_combination;
use crate::torus::{enumerate_shapes, ShapeVector};

/// Default number of random probes per shape.
pub const DEFAULT_PROBES: usize = 200;

/// Basis-dimension cap of the exact mode.
pub const EXACT_MODE_DIM_CAP: usize = 64;

/// Worst probe ratio observed for one shape.
#[derive(Debug, Clone, Serialize)]
pub struct ShapeRatio {
    pub shape: ShapeVector,
    pub worst_ratio: f64,
}

/// Report of a collection-wide discretization estimate. `d_hat` is a lower
/// bound for the true constant of the collection.
#[derive(Debug, Clone, Serialize)]
pub struct DiscretizationReport {
    pub point_set: String,
    pub n: u32,
    pub d: usize,
    pub per_shape: Vec<ShapeRatio>,
    pub d_hat_lower: f64,
    pub probes: usize,
    pub grid: GridSpec,
    pub seed: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

fn probe_seed(seed: u64, shape: &ShapeVector, probe: usize) -> u64 {
    let mut key = splitmix64(seed);
    for &e in shape.entries() {
        key = splitmix64(key ^ (e as u64));
    }
    splitmix64(key ^ (probe as u64))
}

/// Ratio `‖t‖_{grid∪ξ,∞} / max_ν |t(ξ^ν)|` for an explicit polynomial, the
/// quantity maximized by the probe estimator. Ratios are `+∞` when the
/// polynomial vanishes on the nodes but not on the grid, and 1 when it
/// vanishes everywhere.
pub fn discretization_ratio(
    basis: &TrigBasis,
    coeffs: &[f64],
    xi: &PointSet,
    grid: &EvalGrid,
) -> f64 {
    let full = grid.clone().with_extra_points(&xi.points());
    let design = basis.design_matrix(&full);
    let values = design * DVector::from_column_slice(coeffs);
    ratio_from_values(values.as_slice(), full.total_len() - xi.len())
}

fn ratio_from_values(values: &[f64], node_offset: usize) -> f64 {
    let all_max = values.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    let node_max = values[node_offset..].iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    if node_max == 0.0 {
        if all_max > 0.0 {
            f64::INFINITY
        } else {
            1.0
        }
    } else {
        all_max / node_max
    }
}

/// Lower estimate of the discretization constant of `ξ` against `T(R(s))` by
/// seeded random probing (standard normal coefficients).
///
/// The evaluation set is always the grid united with the nodes, so every
/// ratio is ≥ 1. Rank-deficient sampling (the sampling map has a nontrivial
/// kernel, e.g. fewer nodes than the subspace dimension) reports `+∞`.
pub fn estimate_discretization_constant(
    xi: &PointSet,
    s: &ShapeVector,
    probes: usize,
    grid: &EvalGrid,
    seed: u64,
) -> Result<f64> {
    if probes < 1 {
        return Err(Error::InvalidParam("need at least one probe".into()));
    }
    let basis = TrigBasis::new(s)?;
    let full = grid.clone().with_extra_points(&xi.points());
    let node_offset = full.total_len() - xi.len();
    let design = basis.design_matrix(&full);

    // a nontrivial kernel of the sampling map means the true constant is +∞
    let node_design = design.rows(node_offset, xi.len()).clone_owned();
    if sampling_rank_deficient(&node_design) {
        return Ok(f64::INFINITY);
    }

    let dim = basis.dim();
    let worst = (0..probes)
        .into_par_iter()
        .map(|p| {
            let mut rng = ChaCha8Rng::seed_from_u64(probe_seed(seed, s, p));
            let coeffs: Vec<f64> =
                (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            let values = &design * DVector::from_column_slice(&coeffs);
            ratio_from_values(values.as_slice(), node_offset)
        })
        .reduce(|| 1.0f64, f64::max);
    Ok(worst)
}

fn sampling_rank_deficient(node_design: &DMatrix<f64>) -> bool {
    if node_design.nrows() < node_design.ncols() {
        return true;
    }
    let svd = node_design.clone().svd(false, false);
    let sv = &svd.singular_values;
    let max = sv.iter().fold(0.0f64, |a, &v| a.max(v));
    max == 0.0 || sv.iter().any(|&v| v <= 1e-12 * max.max(1.0))
}

/// Runs the probe estimator for every shape of weight `n` and aggregates.
pub fn certify_collection(
    xi: &PointSet,
    n: u32,
    d: usize,
    probes: usize,
    grid: &EvalGrid,
    seed: u64,
    point_set_label: &str,
) -> Result<DiscretizationReport> {
    if xi.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: xi.dim() });
    }
    let shapes = enumerate_shapes(n, d);
    let per_shape: Vec<ShapeRatio> = shapes
        .iter()
        .map(|s| {
            let worst = estimate_discretization_constant(xi, s, probes, grid, seed)?;
            Ok(ShapeRatio { shape: s.clone(), worst_ratio: worst })
        })
        .collect::<Result<_>>()?;
    let d_hat = per_shape.iter().fold(1.0f64, |a, r| a.max(r.worst_ratio));
    Ok(DiscretizationReport {
        point_set: point_set_label.to_string(),
        n,
        d,
        per_shape,
        d_hat_lower: d_hat,
        probes,
        grid: grid.spec(),
        seed,
    })
}

/// Exact grid value of the discretization constant for one small subspace:
/// `max_{x ∈ grid∪ξ} max { |t(x)| : max_ν |t(ξ^ν)| ≤ 1 }`, each inner maximum
/// solved as a linear program. `None` inner values (targets outside the node
/// row space) make the constant `+∞`.
pub fn exact_discretization_constant(
    xi: &PointSet,
    s: &ShapeVector,
    grid: &EvalGrid,
) -> Result<f64> {
    let basis = TrigBasis::new(s)?;
    if basis.dim() > EXACT_MODE_DIM_CAP {
        return Err(Error::InvalidParam(format!(
            "exact mode capped at subspace dimension {EXACT_MODE_DIM_CAP}, got {}",
            basis.dim()
        )));
    }
    let phi = basis.design_matrix_points(&xi.points());
    let full = grid.clone().with_extra_points(&xi.points());
    let n_points = full.total_len();
    let values: Vec<f64> = (0..n_points)
        .into_par_iter()
        .map(|i| {
            let mut row = vec![0.0; basis.dim()];
            basis.eval_row(&full.point(i), &mut row);
            match min_l1_combination(&phi, &row) {
                Ok(Some(v)) => Ok(v),
                Ok(None) => Ok(f64::INFINITY),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    Ok(values.into_iter().fold(1.0f64, f64::max))
}
