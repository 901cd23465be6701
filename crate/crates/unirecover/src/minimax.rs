//! Discrete linear minimax (uniform-norm) fitting via linear programming.
//!
//! For a design matrix `A` (one row per sample point) and values `b`, the fit
//! minimizes `max_i |b_i − (Ac)_i|`. The solver works on the dual program
//!
//! ```text
//!   maximize  bᵀy   subject to   Aᵀy = 0,  ‖y‖₁ = 1,
//! ```
//!
//! whose basis never exceeds `n+1` columns, with a two-phase revised simplex.
//! The primal coefficients are the simplex multipliers of the optimal basis;
//! optimality is certified by recomputing the achieved residual and comparing
//! it against the dual objective (strong duality makes them equal).
//!
//! The same simplex core drives the `min ‖y‖₁ : Φᵀy = g` programs used by the
//! exact discretization-constant mode.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const RC_TOL: f64 = 1e-10;
/// Entries of the pivot column below this are ineligible pivots; tiny pivots
/// poison the basis inverse faster than they advance the objective.
const PIVOT_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-9;
// with ≤ 65 rows a fresh inverse is cheap next to pricing; a short interval
// keeps the product-form drift negligible on degenerate instances
const REFACTOR_EVERY: usize = 10;
const MAX_ITERS: usize = 50_000;
const DEGENERATE_STREAK_FOR_BLAND: usize = 60;

/// Column access for a standard-form LP `max cᵀw, Mw = r, w ≥ 0`.
trait Columns {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// Phase-2 objective coefficient.
    fn cost(&self, j: usize) -> f64;
    fn column_into(&self, j: usize, out: &mut [f64]);
    /// Best entering column: some `j` with reduced cost `> tol`, or `None`.
    /// `phase1` prices with zero costs; `bland` switches to first-index order.
    fn price(&self, pi: &[f64], phase1: bool, tol: f64, bland: bool) -> Option<usize>;
    /// Scale of the phase-2 costs, used to make tolerances scale-aware.
    fn cost_scale(&self) -> f64;
}

struct SimplexOutcome {
    /// Dual vector of the phase-2 optimum.
    pi: Vec<f64>,
    objective: f64,
    feasible: bool,
    iterations: usize,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Solve with a deterministic right-hand-side perturbation that breaks the
/// massive primal degeneracy of structured (grid-symmetric) instances. The
/// perturbation shifts the optimum by at most `O(perturb · ‖π‖₁)`, which the
/// caller's duality-gap certificate accounts for.
fn solve_lp<C: Columns>(
    cols: &C,
    rhs: &[f64],
    perturb: f64,
    force_bland: bool,
) -> Result<SimplexOutcome> {
    let rhs: Vec<f64> = rhs
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let u = splitmix64(i as u64 + 1) as f64 / u64::MAX as f64;
            r + perturb * (1.0 + u)
        })
        .collect();
    let rhs = &rhs[..];
    let n = cols.nrows();
    let ncols = cols.ncols();
    assert_eq!(rhs.len(), n);
    let art_sign: Vec<f64> = rhs.iter().map(|&r| if r < 0.0 { -1.0 } else { 1.0 }).collect();

    let mut basis: Vec<usize> = (0..n).map(|i| ncols + i).collect();
    let mut binv = DMatrix::<f64>::from_diagonal(&DVector::from_iterator(
        n,
        art_sign.iter().copied(),
    ));
    let mut xb: Vec<f64> = rhs.iter().map(|&r| r.abs()).collect();

    let scale = cols.cost_scale().max(1.0);
    let rc_tol = RC_TOL * scale;
    let mut phase1 = true;
    let mut bland = force_bland;
    let mut latched_bland = force_bland;
    let mut streak = 0usize;
    let mut iterations = 0usize;
    let mut since_refactor = 0usize;
    let mut resets = 0usize;
    let mut col_buf = vec![0.0f64; n];

    let cost_of = |j: usize, phase1: bool, cols: &C| -> f64 {
        if j >= cols.ncols() {
            if phase1 {
                -1.0
            } else {
                0.0
            }
        } else if phase1 {
            0.0
        } else {
            cols.cost(j)
        }
    };

    loop {
        // duals of the current basis: π = B⁻ᵀ c_B
        let cb = DVector::from_iterator(n, basis.iter().map(|&j| cost_of(j, phase1, cols)));
        let pi_vec = binv.transpose() * &cb;
        let pi: Vec<f64> = pi_vec.iter().copied().collect();

        let tol = if phase1 { RC_TOL } else { rc_tol };
        let entering = cols.price(&pi, phase1, tol, bland);

        let entering = match entering {
            Some(j) => j,
            None => {
                if phase1 {
                    let infeas: f64 = basis
                        .iter()
                        .zip(&xb)
                        .filter(|(&j, _)| j >= ncols)
                        .map(|(_, &x)| x)
                        .sum();
                    if infeas > FEAS_TOL {
                        return Ok(SimplexOutcome {
                            pi,
                            objective: f64::NAN,
                            feasible: false,
                            iterations,
                        });
                    }
                    phase1 = false;
                    bland = latched_bland;
                    streak = 0;
                    continue;
                }
                let objective = basis
                    .iter()
                    .zip(&xb)
                    .map(|(&j, &x)| cost_of(j, false, cols) * x)
                    .sum();
                return Ok(SimplexOutcome { pi, objective, feasible: true, iterations });
            }
        };

        cols.column_into(entering, &mut col_buf);
        let u = &binv * DVector::from_column_slice(&col_buf);

        // Harris-style two-pass ratio test: bound the step with a small
        // feasibility slack, then take the best-conditioned pivot among the
        // rows that stay within it. Under Bland mode fall back to the strict
        // smallest-ratio / smallest-id rule, which cannot cycle.
        let leave = if bland {
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..n {
                if u[i] > PIVOT_TOL {
                    let theta = xb[i] / u[i];
                    match leave {
                        None => leave = Some((i, theta)),
                        Some((li, lt)) => {
                            if theta < lt - 1e-12
                                || ((theta - lt).abs() <= 1e-12 && basis[i] < basis[li])
                            {
                                leave = Some((i, theta));
                            }
                        }
                    }
                }
            }
            leave
        } else {
            let slack = FEAS_TOL * (1.0 + xb.iter().fold(0.0f64, |a, &v| a.max(v)));
            let mut theta_cap = f64::INFINITY;
            for i in 0..n {
                if u[i] > PIVOT_TOL {
                    theta_cap = theta_cap.min((xb[i] + slack) / u[i]);
                }
            }
            let mut leave: Option<(usize, f64)> = None;
            if theta_cap.is_finite() {
                let mut best_piv = 0.0f64;
                for i in 0..n {
                    if u[i] > PIVOT_TOL {
                        let theta = xb[i] / u[i];
                        if theta <= theta_cap && u[i] > best_piv {
                            best_piv = u[i];
                            leave = Some((i, theta));
                        }
                    }
                }
            }
            leave
        };
        let (leave_row, theta) = match leave {
            Some((i, t)) => (i, t.max(0.0)),
            None => {
                return Err(Error::NoConvergence(format!(
                    "unbounded direction in phase {}",
                    if phase1 { 1 } else { 2 }
                )))
            }
        };

        // update the basic solution and the basis inverse (product form)
        let piv = u[leave_row];
        for i in 0..n {
            if i != leave_row {
                xb[i] -= u[i] * theta;
                if xb[i] < 0.0 {
                    xb[i] = xb[i].max(-FEAS_TOL);
                    xb[i] = xb[i].max(0.0);
                }
            }
        }
        xb[leave_row] = theta;
        basis[leave_row] = entering;
        {
            let mut lr = binv.row_mut(leave_row);
            lr /= piv;
        }
        for i in 0..n {
            if i != leave_row {
                let f = u[i];
                if f != 0.0 {
                    let lr = binv.row(leave_row).clone_owned();
                    let mut ri = binv.row_mut(i);
                    ri -= lr * f;
                }
            }
        }

        iterations += 1;
        since_refactor += 1;
        if theta <= PIVOT_TOL {
            streak += 1;
            if streak == DEGENERATE_STREAK_FOR_BLAND {
                // long degenerate run: switch to the anti-cycling rule and
                // clean the basis inverse before crawling further
                bland = true;
                since_refactor = REFACTOR_EVERY;
            }
        } else {
            streak = 0;
            bland = latched_bland;
        }
        if iterations > MAX_ITERS {
            return Err(Error::NoConvergence(format!(
                "simplex exceeded {MAX_ITERS} iterations"
            )));
        }
        if since_refactor >= REFACTOR_EVERY {
            since_refactor = 0;
            if !refactor(cols, &basis, &art_sign, rhs, &mut binv, &mut xb)? {
                // the basis went numerically bad: restart from the artificial
                // basis in anti-cycling mode, keeping the iteration budget
                resets += 1;
                if resets > 2 {
                    return Err(Error::NoConvergence(
                        "basis kept degenerating after restarts".into(),
                    ));
                }
                for (i, b) in basis.iter_mut().enumerate() {
                    *b = ncols + i;
                }
                binv = DMatrix::<f64>::from_diagonal(&DVector::from_iterator(
                    n,
                    art_sign.iter().copied(),
                ));
                for (i, x) in xb.iter_mut().enumerate() {
                    *x = rhs[i].abs();
                }
                phase1 = true;
                bland = true;
                latched_bland = true;
                streak = 0;
            }
        }
    }
}

/// Rebuilds the basis inverse from scratch. Returns `Ok(false)` when the
/// basis turned out singular or its true basic solution drifted infeasible,
/// signalling the caller to restart.
fn refactor<C: Columns>(
    cols: &C,
    basis: &[usize],
    art_sign: &[f64],
    rhs: &[f64],
    binv: &mut DMatrix<f64>,
    xb: &mut [f64],
) -> Result<bool> {
    let n = basis.len();
    let mut b = DMatrix::<f64>::zeros(n, n);
    let mut buf = vec![0.0f64; n];
    for (col, &j) in basis.iter().enumerate() {
        if j >= cols.ncols() {
            let row = j - cols.ncols();
            b[(row, col)] = art_sign[row];
        } else {
            cols.column_into(j, &mut buf);
            for (row, &v) in buf.iter().enumerate() {
                b[(row, col)] = v;
            }
        }
    }
    let Some(inv) = b.try_inverse() else {
        return Ok(false);
    };
    let fresh = &inv * DVector::from_column_slice(rhs);
    let scale = 1.0 + fresh.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    if fresh.iter().any(|&v| v < -1e-7 * scale) {
        return Ok(false);
    }
    for i in 0..n {
        xb[i] = fresh[i].max(0.0);
    }
    *binv = inv;
    Ok(true)
}

/// Dual columns of the discrete Chebyshev problem.
///
/// Column `2i` is `(+a_i; 1)` with cost `+b_i`; column `2i+1` is `(−a_i; 1)`
/// with cost `−b_i`. Constraints: `Aᵀy = 0` (first `n` rows) and `Σ|y| = 1`.
struct ChebColumns<'a> {
    a: &'a DMatrix<f64>,
    b: &'a [f64],
}

impl Columns for ChebColumns<'_> {
    fn nrows(&self) -> usize {
        self.a.ncols() + 1
    }

    fn ncols(&self) -> usize {
        2 * self.a.nrows()
    }

    fn cost(&self, j: usize) -> f64 {
        let i = j / 2;
        if j % 2 == 0 {
            self.b[i]
        } else {
            -self.b[i]
        }
    }

    fn column_into(&self, j: usize, out: &mut [f64]) {
        let i = j / 2;
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        let n = self.a.ncols();
        for c in 0..n {
            out[c] = sign * self.a[(i, c)];
        }
        out[n] = 1.0;
    }

    fn price(&self, pi: &[f64], phase1: bool, tol: f64, bland: bool) -> Option<usize> {
        let n = self.a.ncols();
        let p = DVector::from_column_slice(&pi[..n]);
        let t = pi[n];
        let q = self.a * p; // q_i = a_iᵀ p
        let m = self.a.nrows();
        let mut best: Option<(usize, f64)> = None;
        for i in 0..m {
            // reduced costs of the (+) and (−) columns
            let (rc_plus, rc_minus) = if phase1 {
                (-q[i] - t, q[i] - t)
            } else {
                (self.b[i] - q[i] - t, -(self.b[i] - q[i]) - t)
            };
            for (j, rc) in [(2 * i, rc_plus), (2 * i + 1, rc_minus)] {
                if rc > tol {
                    if bland {
                        return Some(j);
                    }
                    if best.map_or(true, |(_, brc)| rc > brc) {
                        best = Some((j, rc));
                    }
                }
            }
        }
        best.map(|(j, _)| j)
    }

    fn cost_scale(&self) -> f64 {
        self.b.iter().fold(0.0f64, |acc, &v| acc.max(v.abs()))
    }
}

/// Result of a certified discrete minimax fit.
#[derive(Debug, Clone)]
pub struct MinimaxFit {
    pub coeffs: Vec<f64>,
    /// Achieved `max_i |b_i − (Ac)_i|`, recomputed from the coefficients.
    pub residual: f64,
    /// Dual objective; equals the residual at a true optimum.
    pub dual_objective: f64,
    /// `|residual − dual_objective|`: the optimality certificate.
    pub certified_gap: f64,
    /// Set when the design matrix is rank-deficient; coefficients are then the
    /// minimum-norm representative among vectors with the same fitted values.
    pub degenerate: bool,
    pub iterations: usize,
}

/// Minimizes `max_i |values_i − (design · c)_i|` over coefficient vectors `c`.
///
/// Large point sets go through a constraint-generation outer loop: the fit is
/// computed on a growing active subset of points and the worst violators of
/// the full problem are exchanged in until the full residual matches the
/// subset optimum. Since the subset problem relaxes the full one, its dual
/// objective is a valid lower bound for the full minimax, so the returned
/// duality gap certifies global optimality.
pub fn chebyshev_minimax(design: &DMatrix<f64>, values: &[f64]) -> Result<MinimaxFit> {
    let m = design.nrows();
    let n = design.ncols();
    if m == 0 || n == 0 {
        return Err(Error::InvalidParam("minimax fit needs ≥ 1 point and ≥ 1 basis function".into()));
    }
    if values.len() != m {
        return Err(Error::LengthMismatch { expected: m, got: values.len() });
    }
    let gap_tol = 1e-9 * (1.0 + values.iter().fold(0.0f64, |a, &v| a.max(v.abs())));

    let target = 3 * (n + 1);
    if m <= 2 * target {
        let mut fit = solve_dense(design, values)?;
        finalize(design, values, &mut fit);
        return Ok(fit);
    }

    // seed the working set with a uniform stride plus the largest value
    let mut in_set = vec![false; m];
    let stride = (m / target).max(1);
    for i in (0..m).step_by(stride) {
        in_set[i] = true;
    }
    let i_max = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(i, _)| i)
        .unwrap_or(0);
    in_set[i_max] = true;

    let mut iterations = 0usize;
    for _round in 0..200 {
        let subset: Vec<usize> = (0..m).filter(|&i| in_set[i]).collect();
        let sub_design = design.select_rows(subset.iter());
        let sub_values: Vec<f64> = subset.iter().map(|&i| values[i]).collect();
        let sub_fit = solve_dense(&sub_design, &sub_values)?;
        iterations += sub_fit.iterations;

        // full residuals under the subset-optimal coefficients
        let fitted = design * DVector::from_column_slice(&sub_fit.coeffs);
        let mut worst: Vec<(usize, f64)> = Vec::new();
        let mut full_max = 0.0f64;
        for i in 0..m {
            let r = (values[i] - fitted[i]).abs();
            full_max = full_max.max(r);
            if r > sub_fit.dual_objective + gap_tol && !in_set[i] {
                worst.push((i, r));
            }
        }
        if worst.is_empty() {
            // the subset dual bound certifies the full problem
            let mut fit = MinimaxFit {
                coeffs: sub_fit.coeffs,
                residual: full_max,
                dual_objective: sub_fit.dual_objective,
                certified_gap: (full_max - sub_fit.dual_objective).abs(),
                degenerate: false,
                iterations,
            };
            finalize(design, values, &mut fit);
            return Ok(fit);
        }
        worst.sort_by(|a, b| b.1.total_cmp(&a.1));
        for &(i, _) in worst.iter().take(n + 1) {
            in_set[i] = true;
        }
    }
    Err(Error::NoConvergence("constraint generation did not close the gap".into()))
}

/// Rank handling shared by both solve paths: flag rank-deficient designs and
/// replace the coefficients by the minimum-norm representative.
fn finalize(design: &DMatrix<f64>, values: &[f64], fit: &mut MinimaxFit) {
    if rank_deficient(design) {
        fit.degenerate = true;
        fit.coeffs = min_norm_same_fit(design, &fit.coeffs);
        fit.residual = max_abs_residual(design, &fit.coeffs, values);
        fit.certified_gap = (fit.residual - fit.dual_objective).abs();
    }
}

/// Dense path: the full dual simplex with a perturbation ladder; every rung
/// is checked against the duality-gap contract before being accepted.
fn solve_dense(design: &DMatrix<f64>, values: &[f64]) -> Result<MinimaxFit> {
    let n = design.ncols();
    let cols = ChebColumns { a: design, b: values };
    let mut rhs = vec![0.0f64; n + 1];
    rhs[n] = 1.0;
    let scale = 1.0 + cols.cost_scale();
    let gap_tol = 1e-9 * scale;
    let mut last_err: Option<Error> = None;
    for (perturb, force_bland) in [(0.0, false), (0.0, true), (1e-10, false)] {
        let out = match solve_lp(&cols, &rhs, perturb, force_bland) {
            Ok(out) => out,
            Err(e) => {
                last_err = Some(e);
                continue;
            }
        };
        if !out.feasible {
            // Σ|y| = 1 with Aᵀy = 0 is infeasible only for pathological inputs
            last_err = Some(Error::NoConvergence("dual feasibility phase failed".into()));
            continue;
        }
        let coeffs: Vec<f64> = out.pi[..n].to_vec();
        let residual = max_abs_residual(design, &coeffs, values);
        let dual_objective = out.objective;
        let certified_gap = (residual - dual_objective).abs();
        if certified_gap > gap_tol {
            last_err = Some(Error::NoConvergence(format!(
                "duality gap {certified_gap:.3e} above tolerance {gap_tol:.3e}"
            )));
            continue;
        }
        return Ok(MinimaxFit {
            coeffs,
            residual,
            dual_objective,
            certified_gap,
            degenerate: false,
            iterations: out.iterations,
        });
    }
    Err(last_err.unwrap_or_else(|| Error::NoConvergence("minimax solver failed".into())))
}

fn max_abs_residual(design: &DMatrix<f64>, coeffs: &[f64], values: &[f64]) -> f64 {
    let fitted = design * DVector::from_column_slice(coeffs);
    values
        .iter()
        .zip(fitted.iter())
        .fold(0.0f64, |acc, (&b, &f)| acc.max((b - f).abs()))
}

fn rank_deficient(design: &DMatrix<f64>) -> bool {
    if design.nrows() < design.ncols() {
        return true;
    }
    let svd = design.clone().svd(false, false);
    let sv = &svd.singular_values;
    let max = sv.iter().fold(0.0f64, |a, &v| a.max(v));
    if max == 0.0 {
        return true;
    }
    sv.iter().any(|&v| v < 1e-10 * max)
}

/// Minimum-norm coefficients among those with identical fitted values.
fn min_norm_same_fit(design: &DMatrix<f64>, coeffs: &[f64]) -> Vec<f64> {
    let fitted = design * DVector::from_column_slice(coeffs);
    let svd = design.clone().svd(true, true);
    match svd.solve(&fitted, 1e-12) {
        Ok(c) => c.iter().copied().collect(),
        Err(_) => coeffs.to_vec(),
    }
}

/// Minimum of `‖y‖₁` subject to `Φᵀ y = g`; `None` when `g` is outside the
/// row space of `Φ` (the program is infeasible).
///
/// `phi` holds one row per sample point, like the minimax design matrix.
pub fn min_l1_combination(phi: &DMatrix<f64>, g: &[f64]) -> Result<Option<f64>> {
    let m = phi.nrows();
    let n = phi.ncols();
    if g.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: g.len() });
    }
    if m == 0 {
        return Err(Error::InvalidParam("need at least one sample point".into()));
    }
    let cols = L1Columns { phi };
    let mut last_err: Option<Error> = None;
    for (perturb, force_bland) in [(0.0, false), (0.0, true), (1e-10, false)] {
        match solve_lp(&cols, g, perturb, force_bland) {
            Ok(out) if !out.feasible => return Ok(None),
            Ok(out) => return Ok(Some(-out.objective)),
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.unwrap_or_else(|| Error::NoConvergence("l1 solver failed".into())))
}

/// Columns of the `min ‖y‖₁ : Φᵀy = g` program in standard form:
/// column `2i` is `+φ(ξ_i)` and `2i+1` is `−φ(ξ_i)`, both with cost `−1`.
struct L1Columns<'a> {
    phi: &'a DMatrix<f64>,
}

impl Columns for L1Columns<'_> {
    fn nrows(&self) -> usize {
        self.phi.ncols()
    }

    fn ncols(&self) -> usize {
        2 * self.phi.nrows()
    }

    fn cost(&self, _j: usize) -> f64 {
        -1.0
    }

    fn column_into(&self, j: usize, out: &mut [f64]) {
        let i = j / 2;
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        for c in 0..self.phi.ncols() {
            out[c] = sign * self.phi[(i, c)];
        }
    }

    fn price(&self, pi: &[f64], phase1: bool, tol: f64, bland: bool) -> Option<usize> {
        let w = self.phi * DVector::from_column_slice(pi); // w_i = φ_iᵀπ
        let m = self.phi.nrows();
        let base = if phase1 { 0.0 } else { -1.0 };
        let mut best: Option<(usize, f64)> = None;
        for i in 0..m {
            let rc_plus = base - w[i];
            let rc_minus = base + w[i];
            for (j, rc) in [(2 * i, rc_plus), (2 * i + 1, rc_minus)] {
                if rc > tol {
                    if bland {
                        return Some(j);
                    }
                    if best.map_or(true, |(_, brc)| rc > brc) {
                        best = Some((j, rc));
                    }
                }
            }
        }
        best.map(|(j, _)| j)
    }

    fn cost_scale(&self) -> f64 {
        1.0
    }
}
