//! Recovery operators: discrete kernel convolution over lattice nodes, the
//! discrete Chebyshev (uniform-norm) fit over arbitrary node sets, and the
//! nonlinear universal selectors built on top of both.
//!
//! The convolution operator reproduces every polynomial of `T(R(s))` exactly
//! as long as the shape budget stays within the certified exactness radius of
//! the lattice: a sampled product `t(y)·V_{2^s}(x−y)` has cross level at most
//! `3^d · 2^{‖s‖₁}`, so a radius `N*` certifies every shape with
//! `3^d · 2^{‖s‖₁} ≤ N*`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::eval::{max_abs, EvalGrid, GridSpec, PointSet, TrigBasis};
use crate::kernels::vp_eval;
use crate::minimax::chebyshev_minimax;
use crate::torus::{enumerate_shapes, ShapeVector};

/// Largest shape budget `n'` with `9·2^{n'} ≤ N*`, the certified budget of a
/// two-dimensional lattice with exactness radius `N*`.
pub fn fib_budget(n_star: u64) -> Option<u32> {
    budget_with_factor(n_star, 9)
}

/// Largest `ℓ` with `3^d·2^ℓ ≤ N*`, the certified budget in dimension `d`.
pub fn korobov_budget(n_star: u64, d: usize) -> Option<u32> {
    let factor = 3u128.checked_pow(d as u32)?;
    budget_with_factor_u128(n_star as u128, factor)
}

fn budget_with_factor(n_star: u64, factor: u128) -> Option<u32> {
    budget_with_factor_u128(n_star as u128, factor)
}

fn budget_with_factor_u128(n_star: u128, factor: u128) -> Option<u32> {
    if factor > n_star {
        return None;
    }
    let mut budget = 0u32;
    while factor << (budget + 1) <= n_star {
        budget += 1;
    }
    Some(budget)
}

/// An evaluable recovery result: either a weighted sum of translated kernels
/// over the sampling nodes, or explicit real trigonometric coefficients.
#[derive(Debug, Clone)]
pub enum Approximant {
    KernelSum {
        nodes: PointSet,
        /// Function samples at the nodes, in node order.
        weights: Vec<f64>,
        shape: ShapeVector,
        /// Set when the shape exceeded the certified budget; evaluation still
        /// works but the reproduction guarantee is void.
        uncertified: bool,
    },
    TrigCoefficients {
        basis: TrigBasis,
        coeffs: Vec<f64>,
    },
}

impl Approximant {
    pub fn shape(&self) -> &ShapeVector {
        match self {
            Approximant::KernelSum { shape, .. } => shape,
            Approximant::TrigCoefficients { basis, .. } => basis.shape(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Approximant::KernelSum { nodes, weights, shape, .. } => {
                let orders = kernel_orders(shape);
                let m = nodes.len();
                let mut acc = 0.0;
                for nu in 0..m {
                    let mut prod = weights[nu];
                    for (j, &order) in orders.iter().enumerate() {
                        prod *= vp_eval(order, x[j] - nodes.axis(j)[nu]);
                    }
                    acc += prod;
                }
                acc / m as f64
            }
            Approximant::TrigCoefficients { basis, coeffs } => basis.eval(coeffs, x),
        }
    }

    /// Values at every canonical grid point.
    pub fn eval_grid(&self, grid: &EvalGrid) -> Vec<f64> {
        match self {
            Approximant::KernelSum { nodes, weights, shape, .. } => {
                kernel_sum_values(nodes, weights, shape, grid, false)
            }
            Approximant::TrigCoefficients { basis, coeffs } => basis.eval_grid(coeffs, grid),
        }
    }
}

fn kernel_orders(shape: &ShapeVector) -> Vec<u32> {
    shape
        .entries()
        .iter()
        .map(|&s| {
            assert!(s < 31, "shape entry too large for kernel order");
            1u32 << s
        })
        .collect()
}

/// Factorized evaluation of `m^{−1} Σ_ν w_ν ∏_j V_{2^{s_j}}(x_j − y_j^ν)` at
/// every canonical grid point; with `take_abs` the absolute value of the
/// kernel product is used (the integrand of the operator-norm quantity).
pub(crate) fn kernel_sum_values(
    nodes: &PointSet,
    weights: &[f64],
    shape: &ShapeVector,
    grid: &EvalGrid,
    take_abs: bool,
) -> Vec<f64> {
    let d = nodes.dim();
    assert_eq!(grid.dim(), d);
    assert_eq!(weights.len(), nodes.len());
    let orders = kernel_orders(shape);
    let m = nodes.len();
    let per_axis = grid.per_axis();

    // per-axis kernel tables: table[j][g * m + ν] = V(grid_j[g] − y_j^ν)
    let tables: Vec<Vec<f64>> = (0..d)
        .map(|j| {
            let axis = nodes.axis(j);
            let order = orders[j];
            let mut t = vec![0.0f64; per_axis * m];
            t.par_chunks_mut(m).enumerate().for_each(|(g, row)| {
                let x = grid.axis_values(j)[g];
                for (nu, slot) in row.iter_mut().enumerate() {
                    *slot = vp_eval(order, x - axis[nu]);
                }
            });
            t
        })
        .collect();

    let tensor_len = grid.tensor_len();
    let inv_m = 1.0 / m as f64;
    let mut out: Vec<f64> = (0..tensor_len)
        .into_par_iter()
        .map(|flat| {
            let mut idx = vec![0usize; d];
            let mut rem = flat;
            for j in (0..d).rev() {
                idx[j] = rem % per_axis;
                rem /= per_axis;
            }
            let rows: Vec<&[f64]> =
                (0..d).map(|j| &tables[j][idx[j] * m..(idx[j] + 1) * m]).collect();
            let mut acc = 0.0;
            for nu in 0..m {
                let mut prod = 1.0;
                for row in &rows {
                    prod *= row[nu];
                }
                if take_abs {
                    prod = prod.abs();
                }
                acc += weights[nu] * prod;
            }
            acc * inv_m
        })
        .collect();

    out.extend(grid.extra_points().iter().map(|x| {
        let mut acc = 0.0;
        for nu in 0..m {
            let mut prod = 1.0;
            for (j, &order) in orders.iter().enumerate() {
                prod *= vp_eval(order, x[j] - nodes.axis(j)[nu]);
            }
            if take_abs {
                prod = prod.abs();
            }
            acc += weights[nu] * prod;
        }
        acc * inv_m
    }));
    out
}

/// Discrete convolution recovery from samples at the lattice nodes.
///
/// When `certified_budget` is given and `‖s‖₁` exceeds it, the approximant is
/// built anyway with its `uncertified` flag set.
pub fn vs_apply(
    nodes: &PointSet,
    samples: &[f64],
    s: &ShapeVector,
    certified_budget: Option<u32>,
) -> Result<Approximant> {
    if samples.len() != nodes.len() {
        return Err(Error::LengthMismatch { expected: nodes.len(), got: samples.len() });
    }
    if s.dim() != nodes.dim() {
        return Err(Error::DimensionMismatch { expected: nodes.dim(), got: s.dim() });
    }
    let uncertified = certified_budget.is_some_and(|b| s.weight() > b);
    Ok(Approximant::KernelSum {
        nodes: nodes.clone(),
        weights: samples.to_vec(),
        shape: s.clone(),
        uncertified,
    })
}

/// Grid maximum of the node-average of `|V_{2^s}(x − y^ν)|`, the discrete
/// Lebesgue-type quantity controlling the operator norm of the convolution.
pub fn lebesgue_vs(nodes: &PointSet, s: &ShapeVector, grid: &EvalGrid) -> f64 {
    let weights = vec![1.0; nodes.len()];
    let values = kernel_sum_values(nodes, &weights, s, grid, true);
    values.iter().fold(0.0f64, |acc, &v| acc.max(v))
}

/// Per-shape uniform error measured on the evaluation grid.
#[derive(Debug, Clone, Serialize)]
pub struct ShapeError {
    pub shape: ShapeVector,
    pub error: f64,
}

/// Outcome of a universal (nonlinear) recovery run.
#[derive(Debug, Clone, Serialize)]
pub struct RecoveryResult {
    #[serde(skip)]
    pub approximant: Approximant,
    pub chosen_shape: ShapeVector,
    pub per_shape_errors: Vec<ShapeError>,
    pub winner_error: f64,
    pub grid: GridSpec,
}

fn argmin_shape(errors: &[ShapeError]) -> usize {
    // shapes arrive in lexicographic order; strict `<` keeps the first minimizer
    let mut best = 0usize;
    for (i, e) in errors.iter().enumerate().skip(1) {
        if e.error < errors[best].error {
            best = i;
        }
    }
    best
}

/// Universal convolution recovery: evaluates every shape of weight
/// `n_budget`, picks the lexicographically smallest error minimizer.
///
/// `node_samples` are the function samples at the lattice nodes and
/// `target_values` the function values at every canonical grid point.
pub fn universal_vp_recover_sampled(
    nodes: &PointSet,
    node_samples: &[f64],
    target_values: &[f64],
    n_budget: u32,
    grid: &EvalGrid,
) -> Result<RecoveryResult> {
    if node_samples.len() != nodes.len() {
        return Err(Error::LengthMismatch { expected: nodes.len(), got: node_samples.len() });
    }
    if target_values.len() != grid.total_len() {
        return Err(Error::LengthMismatch { expected: grid.total_len(), got: target_values.len() });
    }
    let shapes = enumerate_shapes(n_budget, nodes.dim());
    let per_shape_errors: Vec<ShapeError> = shapes
        .par_iter()
        .map(|s| {
            let values = kernel_sum_values(nodes, node_samples, s, grid, false);
            let error = sup_deviation(target_values, &values);
            ShapeError { shape: s.clone(), error }
        })
        .collect();
    let best = argmin_shape(&per_shape_errors);
    let approximant = vs_apply(nodes, node_samples, &shapes[best], Some(n_budget))?;
    Ok(RecoveryResult {
        approximant,
        chosen_shape: shapes[best].clone(),
        winner_error: per_shape_errors[best].error,
        per_shape_errors,
        grid: grid.spec(),
    })
}

/// Sampler-driven wrapper around [`universal_vp_recover_sampled`].
pub fn universal_vp_recover<F>(
    nodes: &PointSet,
    sampler: &F,
    n_budget: u32,
    grid: &EvalGrid,
) -> Result<RecoveryResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let node_samples: Vec<f64> =
        (0..nodes.len()).into_par_iter().map(|i| sampler(&nodes.point(i))).collect();
    let target: Vec<f64> =
        (0..grid.total_len()).into_par_iter().map(|i| sampler(&grid.point(i))).collect();
    universal_vp_recover_sampled(nodes, &node_samples, &target, n_budget, grid)
}

fn sup_deviation(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |acc, (&x, &y)| acc.max((x - y).abs()))
}

/// A discrete Chebyshev fit together with its certification data.
#[derive(Debug, Clone)]
pub struct ChebFit {
    pub approximant: Approximant,
    /// Achieved minimax value `max_ν |f(ξ^ν) − u(ξ^ν)|`.
    pub residual: f64,
    /// Duality-gap certificate from the underlying linear program.
    pub certified_gap: f64,
    /// Rank-deficient sampling; coefficients are the minimum-norm tie-break.
    pub degenerate: bool,
}

/// Best uniform fit from `T(R(s))` at the sample points: minimizes
/// `max_ν |values_ν − u(points_ν)|` over the real basis of the subspace.
pub fn chebyshev_fit(points: &[Vec<f64>], values: &[f64], s: &ShapeVector) -> Result<ChebFit> {
    if points.is_empty() {
        return Err(Error::InvalidParam("fit needs at least one sample point".into()));
    }
    if values.len() != points.len() {
        return Err(Error::LengthMismatch { expected: points.len(), got: values.len() });
    }
    let basis = TrigBasis::new(s)?;
    let design = basis.design_matrix_points(points);
    let fit = chebyshev_minimax(&design, values)?;
    Ok(ChebFit {
        approximant: Approximant::TrigCoefficients { basis, coeffs: fit.coeffs },
        residual: fit.residual,
        certified_gap: fit.certified_gap,
        degenerate: fit.degenerate,
    })
}

/// Universal Chebyshev recovery over an explicit shape collection: fits every
/// subspace at the nodes, then selects the lexicographically smallest
/// minimizer of the grid uniform error.
pub fn universal_cheb_recover_sampled(
    points: &[Vec<f64>],
    node_samples: &[f64],
    target_values: &[f64],
    shapes: &[ShapeVector],
    grid: &EvalGrid,
) -> Result<RecoveryResult> {
    if shapes.is_empty() {
        return Err(Error::InvalidParam("empty shape collection".into()));
    }
    if target_values.len() != grid.total_len() {
        return Err(Error::LengthMismatch { expected: grid.total_len(), got: target_values.len() });
    }
    let fits: Vec<(ChebFit, f64)> = shapes
        .par_iter()
        .map(|s| {
            let fit = chebyshev_fit(points, node_samples, s)?;
            let values = fit.approximant.eval_grid(grid);
            let error = sup_deviation(target_values, &values);
            Ok((fit, error))
        })
        .collect::<Result<_>>()?;
    let errors: Vec<ShapeError> = shapes
        .iter()
        .zip(&fits)
        .map(|(s, (_, e))| ShapeError { shape: s.clone(), error: *e })
        .collect();
    let best = argmin_shape(&errors);
    Ok(RecoveryResult {
        approximant: fits[best].0.approximant.clone(),
        chosen_shape: shapes[best].clone(),
        winner_error: errors[best].error,
        per_shape_errors: errors,
        grid: grid.spec(),
    })
}

/// Sampler-driven wrapper around [`universal_cheb_recover_sampled`].
pub fn universal_cheb_recover<F>(
    points: &[Vec<f64>],
    sampler: &F,
    shapes: &[ShapeVector],
    grid: &EvalGrid,
) -> Result<RecoveryResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let node_samples: Vec<f64> = points.par_iter().map(|p| sampler(p)).collect();
    let target: Vec<f64> =
        (0..grid.total_len()).into_par_iter().map(|i| sampler(&grid.point(i))).collect();
    universal_cheb_recover_sampled(points, &node_samples, &target, shapes, grid)
}

/// Convenience: sup-norm of values minus a reference, used by tests and bench.
pub fn grid_error(target: &[f64], values: &[f64]) -> f64 {
    sup_deviation(target, values)
}

/// Re-export of the shared max-abs helper.
pub fn sup_norm(values: &[f64]) -> f64 {
    max_abs(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classes::random_trig_function;
    use crate::cubature::max_exact_cross;
    use crate::lattices::fibonacci_lattice;

    fn fib_setup(n: u32) -> (PointSet, u32) {
        let lat = fibonacci_lattice(n).unwrap();
        let n_star = max_exact_cross(lat.b_n, &lat.generator(), 2, lat.b_n).unwrap();
        let budget = fib_budget(n_star).unwrap();
        (PointSet::from_torus_points(lat.nodes()).unwrap(), budget)
    }

    #[test]
    fn budgets_from_exactness_radius() {
        assert_eq!(fib_budget(8), None); // 9 > 8
        assert_eq!(fib_budget(9), Some(0));
        assert_eq!(fib_budget(17), Some(0));
        assert_eq!(fib_budget(18), Some(1));
        assert_eq!(fib_budget(88), Some(3));
        assert_eq!(korobov_budget(26, 3), None);
        assert_eq!(korobov_budget(27, 3), Some(0));
        assert_eq!(korobov_budget(108, 3), Some(2));
    }

    #[test]
    fn constant_function_reproduced() {
        let (nodes, _) = fib_setup(10);
        let samples = vec![1.0; nodes.len()];
        let approx = vs_apply(&nodes, &samples, &ShapeVector::new(vec![1, 0]), Some(1)).unwrap();
        let grid = EvalGrid::tensor(2, 16);
        for v in approx.eval_grid(&grid) {
            assert!((v - 1.0).abs() < 1e-10, "constant not reproduced: {v}");
        }
    }

    #[test]
    fn reproduction_of_subspace_members() {
        let (nodes, budget) = fib_setup(12);
        assert_eq!(budget, 3);
        for s in enumerate_shapes(budget, 2) {
            let grid = EvalGrid::for_shapes(2, 8, &[s.clone()]);
            for seed in 0..5 {
                let t = random_trig_function(&s, seed, 1.0).unwrap();
                let samples = t.eval_points(&nodes.points());
                let approx = vs_apply(&nodes, &samples, &s, Some(budget)).unwrap();
                let got = approx.eval_grid(&grid);
                let want = t.eval_grid(&grid);
                let err = sup_deviation(&want, &got);
                let norm = max_abs(&want);
                assert!(err < 1e-8 * norm, "shape {s} seed {seed}: err {err}, norm {norm}");
            }
        }
    }

    #[test]
    fn outside_mode_leaves_residual() {
        let (nodes, budget) = fib_setup(12);
        let s = ShapeVector::new(vec![1, 0]);
        // cos(3 x_1) is outside R((1,0)) (and outside the kernel's flat part)
        let sampler = |x: &[f64]| (3.0 * x[0]).cos();
        let samples: Vec<f64> = nodes.points().iter().map(|p| sampler(p)).collect();
        let approx = vs_apply(&nodes, &samples, &s, Some(budget)).unwrap();
        let grid = EvalGrid::for_shapes(2, 8, &[s.clone()]);
        let got = approx.eval_grid(&grid);
        let want: Vec<f64> = (0..grid.total_len()).map(|i| sampler(&grid.point(i))).collect();
        assert!(sup_deviation(&want, &got) > 0.1);
    }

    #[test]
    fn uncertified_flag() {
        let (nodes, budget) = fib_setup(10);
        let s = ShapeVector::new(vec![budget + 1, 0]);
        let approx = vs_apply(&nodes, &vec![0.0; nodes.len()], &s, Some(budget)).unwrap();
        match approx {
            Approximant::KernelSum { uncertified, .. } => assert!(uncertified),
            _ => unreachable!(),
        }
    }

    #[test]
    fn operator_norm_consistency() {
        // ‖V_s(g)‖_grid ≤ lebesgue_vs(s) · ‖g‖_nodes for arbitrary samples
        let (nodes, budget) = fib_setup(11);
        let s = ShapeVector::new(vec![budget, 0]);
        let grid = EvalGrid::for_shapes(2, 8, &[s.clone()]);
        let leb = lebesgue_vs(&nodes, &s, &grid);
        assert!(leb > 0.0);
        let samples: Vec<f64> =
            (0..nodes.len()).map(|i| ((i * 37 % 17) as f64 / 8.5 - 1.0)).collect();
        let approx = vs_apply(&nodes, &samples, &s, Some(budget)).unwrap();
        let got = approx.eval_grid(&grid);
        assert!(max_abs(&got) <= leb * max_abs(&samples) + 1e-10);
    }

    #[test]
    fn lebesgue_bound_small_case() {
        let (nodes, budget) = fib_setup(10);
        for s in enumerate_shapes(budget, 2) {
            let grid = EvalGrid::for_shapes(2, 8, &[s.clone()]);
            let leb = lebesgue_vs(&nodes, &s, &grid);
            assert!(leb <= 9.0, "shape {s}: {leb}");
        }
    }

    #[test]
    fn universal_vp_finds_member_shape() {
        let (nodes, budget) = fib_setup(12);
        let shapes = enumerate_shapes(budget, 2);
        let grid = EvalGrid::for_shapes(2, 8, &shapes);
        let star = ShapeVector::new(vec![0, budget]);
        let t = random_trig_function(&star, 3, 1.0).unwrap();
        let res = universal_vp_recover(&nodes, &|x: &[f64]| t.eval(x), budget, &grid).unwrap();
        let norm = max_abs(&t.eval_grid(&grid));
        assert!(res.winner_error < 1e-8 * norm, "winner error {}", res.winner_error);
        assert_eq!(res.per_shape_errors.len(), shapes.len());
        // scaling the function leaves the chosen shape unchanged
        let res2 = universal_vp_recover(&nodes, &|x: &[f64]| 10.0 * t.eval(x), budget, &grid).unwrap();
        assert_eq!(res.chosen_shape, res2.chosen_shape);
    }

    #[test]
    fn univariate_structure_concentrates_budget() {
        let (nodes, budget) = fib_setup(12);
        let grid = EvalGrid::for_shapes(2, 8, &enumerate_shapes(budget, 2));
        // high univariate order in x_1 only
        let sampler = |x: &[f64]| (7.0 * x[0]).cos() + 0.3 * (5.0 * x[0]).sin();
        let res = universal_vp_recover(&nodes, &sampler, budget, &grid).unwrap();
        assert_eq!(res.chosen_shape.entries()[1], 0, "winner {}", res.chosen_shape);
    }

    #[test]
    fn cheb_fit_constant_is_midrange() {
        let points = vec![vec![0.0, 0.0], vec![1.0, 2.0], vec![3.0, 4.0]];
        let values = vec![-1.0, 5.0, 2.0];
        let fit = chebyshev_fit(&points, &values, &ShapeVector::new(vec![0, 0])).unwrap();
        assert!((fit.residual - 3.0).abs() < 1e-10);
        match &fit.approximant {
            Approximant::TrigCoefficients { coeffs, .. } => {
                assert!((coeffs[0] - 2.0).abs() < 1e-10)
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn cheb_fit_interpolates_members() {
        let (nodes, _) = fib_setup(10);
        let s = ShapeVector::new(vec![1, 1]);
        let t = random_trig_function(&s, 5, 1.0).unwrap();
        let values = t.eval_points(&nodes.points());
        let fit = chebyshev_fit(&nodes.points(), &values, &s).unwrap();
        assert!(fit.residual < 1e-8, "residual {}", fit.residual);
        assert!(!fit.degenerate);
        // recovered polynomial matches off the nodes too
        let x = [1.1, 4.2];
        assert!((fit.approximant.eval(&x) - t.eval(&x)).abs() < 1e-7);
    }

    #[test]
    fn cheb_residual_monotone_under_shape_growth() {
        let (nodes, _) = fib_setup(9);
        let sampler = |x: &[f64]| (x[0] + 0.5 * x[1]).sin() + 0.2 * (3.0 * x[0]).cos();
        let values: Vec<f64> = nodes.points().iter().map(|p| sampler(p)).collect();
        let small = chebyshev_fit(&nodes.points(), &values, &ShapeVector::new(vec![1, 0])).unwrap();
        let big = chebyshev_fit(&nodes.points(), &values, &ShapeVector::new(vec![1, 1])).unwrap();
        assert!(big.residual <= small.residual + 1e-9);
    }

    #[test]
    fn cheb_alternating_perturbation() {
        let (nodes, _) = fib_setup(9);
        let s = ShapeVector::new(vec![1, 0]);
        let t = random_trig_function(&s, 8, 1.0).unwrap();
        let eps = 1e-4;
        let values: Vec<f64> = nodes
            .points()
            .iter()
            .enumerate()
            .map(|(i, p)| t.eval(p) + if i % 2 == 0 { eps } else { -eps })
            .collect();
        let fit = chebyshev_fit(&nodes.points(), &values, &s).unwrap();
        assert!(fit.residual <= eps + 1e-9);
    }

    #[test]
    fn universal_cheb_exact_member() {
        let (nodes, budget) = fib_setup(12);
        let shapes = enumerate_shapes(budget, 2);
        let grid = EvalGrid::for_shapes(2, 8, &shapes).with_extra_points(&nodes.points());
        let star = shapes[1].clone();
        let t = random_trig_function(&star, 11, 1.0).unwrap();
        let res =
            universal_cheb_recover(&nodes.points(), &|x: &[f64]| t.eval(x), &shapes, &grid)
                .unwrap();
        let norm = max_abs(&t.eval_grid(&grid));
        assert!(res.winner_error < 1e-8 * norm, "winner error {}", res.winner_error);
    }
}
