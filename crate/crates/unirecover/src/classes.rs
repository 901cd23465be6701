//! Test functions with known anisotropic smoothness: truncated Bernoulli
//! kernels and their products, random trigonometric polynomials, the
//! smoothness aggregate `g(r)`, and best-approximation oracles.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::eval::{covering_shape, EvalGrid, TrigBasis};
use crate::minimax::chebyshev_minimax;
use crate::torus::{FrequencyVector, ShapeVector};

/// Default per-axis truncation of the Bernoulli series.
pub const DEFAULT_BERNOULLI_TERMS: usize = 4096;

/// Smoothness parameters `r_j > 0` with phase parameters `α_j`.
#[derive(Debug, Clone)]
pub struct SmoothnessVector {
    pub r: Vec<f64>,
    pub alpha: Vec<f64>,
}

impl SmoothnessVector {
    pub fn new(r: Vec<f64>, alpha: Vec<f64>) -> Result<Self> {
        if r.is_empty() || r.len() != alpha.len() {
            return Err(Error::InvalidParam("r and alpha must have equal positive length".into()));
        }
        if r.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::InvalidParam("smoothness entries must be positive".into()));
        }
        Ok(Self { r, alpha })
    }

    pub fn cosine_phase(r: Vec<f64>) -> Result<Self> {
        let alpha = vec![0.0; r.len()];
        Self::new(r, alpha)
    }
}

/// The aggregate `g(r) = (Σ_j 1/r_j)^{−1}` governing achievable rates.
pub fn g_of_r(r: &[f64]) -> Result<f64> {
    if r.is_empty() {
        return Err(Error::InvalidParam("empty smoothness vector".into()));
    }
    if r.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::InvalidParam("smoothness entries must be positive".into()));
    }
    Ok(1.0 / r.iter().map(|&v| 1.0 / v).sum::<f64>())
}

/// `K`-term partial sum of the Bernoulli kernel
/// `F_r(x, α) = 1 + 2 Σ_{k≥1} k^{−r} cos(kx − απ/2)`.
pub fn bernoulli_eval(r: f64, alpha: f64, x: f64, k_terms: usize) -> f64 {
    assert!(r > 0.0 && k_terms >= 1, "need r > 0 and K ≥ 1");
    assert!(x.is_finite());
    BernoulliAxis::new(r, alpha, k_terms).eval(x)
}

/// Tail bound `2 Σ_{k>K} k^{−r} ≤ 2 K^{1−r}/(r−1)`; requires `r > 1`.
pub fn bernoulli_tail_bound(r: f64, k_terms: usize) -> f64 {
    assert!(r > 1.0, "tail bound needs r > 1");
    2.0 * (k_terms as f64).powf(1.0 - r) / (r - 1.0)
}

/// One truncated Bernoulli factor with a precomputed weight table.
#[derive(Debug, Clone)]
struct BernoulliAxis {
    r: f64,
    phase: f64,
    weights: Vec<f64>,
}

impl BernoulliAxis {
    fn new(r: f64, alpha: f64, k_terms: usize) -> Self {
        let weights = (1..=k_terms).map(|k| (k as f64).powf(-r)).collect();
        Self { r, phase: alpha * PI / 2.0, weights }
    }

    /// Phasor-rotation evaluation; a direct `sin_cos` every 1024 terms keeps
    /// the rotation drift negligible.
    fn eval(&self, x: f64) -> f64 {
        let (sx, cx) = x.sin_cos();
        let (sphi, cphi) = self.phase.sin_cos();
        let (mut ck, mut sk) = (1.0f64, 0.0f64);
        let mut acc = 0.0;
        for (i, &w) in self.weights.iter().enumerate() {
            let k = i + 1;
            let nc = ck * cx - sk * sx;
            let ns = sk * cx + ck * sx;
            ck = nc;
            sk = ns;
            if k % 1024 == 0 {
                let (s, c) = (k as f64 * x).sin_cos();
                ck = c;
                sk = s;
            }
            acc += w * (ck * cphi + sk * sphi);
        }
        1.0 + 2.0 * acc
    }

    /// Upper bound on `‖F^K_r‖_∞`.
    fn sup_bound(&self) -> f64 {
        1.0 + 2.0 * self.weights.iter().sum::<f64>()
    }

    fn tail(&self) -> f64 {
        bernoulli_tail_bound(self.r, self.weights.len())
    }
}

/// An evaluable test function.
#[derive(Debug, Clone)]
pub enum TestFunction {
    BernoulliProduct {
        axes: Vec<BernoulliAxisHandle>,
        label: String,
    },
    TrigPolynomial {
        basis: TrigBasis,
        coeffs: Vec<f64>,
        label: String,
    },
}

/// Opaque handle keeping the axis internals private.
#[derive(Debug, Clone)]
pub struct BernoulliAxisHandle(BernoulliAxis);

impl TestFunction {
    pub fn dim(&self) -> usize {
        match self {
            TestFunction::BernoulliProduct { axes, .. } => axes.len(),
            TestFunction::TrigPolynomial { basis, .. } => basis.shape().dim(),
        }
    }

    pub fn label(&self) -> &str {
        match self {
            TestFunction::BernoulliProduct { label, .. } => label,
            TestFunction::TrigPolynomial { label, .. } => label,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            TestFunction::BernoulliProduct { axes, .. } => {
                debug_assert_eq!(axes.len(), x.len());
                axes.iter().zip(x).map(|(a, &xj)| a.0.eval(xj)).product()
            }
            TestFunction::TrigPolynomial { basis, coeffs, .. } => basis.eval(coeffs, x),
        }
    }

    pub fn eval_points(&self, points: &[Vec<f64>]) -> Vec<f64> {
        points.par_iter().map(|p| self.eval(p)).collect()
    }

    /// Values at every canonical grid point; the product form is evaluated
    /// separably (one pass per axis), which matters on large grids.
    pub fn eval_grid(&self, grid: &EvalGrid) -> Vec<f64> {
        match self {
            TestFunction::TrigPolynomial { basis, coeffs, .. } => basis.eval_grid(coeffs, grid),
            TestFunction::BernoulliProduct { axes, .. } => {
                let d = grid.dim();
                assert_eq!(axes.len(), d, "function/grid dimension mismatch");
                let per_axis = grid.per_axis();
                let tables: Vec<Vec<f64>> = axes
                    .iter()
                    .enumerate()
                    .map(|(j, a)| {
                        grid.axis_values(j)
                            .par_iter()
                            .map(|&x| a.0.eval(x))
                            .collect()
                    })
                    .collect();
                let tensor_len = grid.tensor_len();
                let mut out: Vec<f64> = (0..tensor_len)
                    .into_par_iter()
                    .map(|flat| {
                        let mut rem = flat;
                        let mut prod = 1.0;
                        for table in tables.iter().rev() {
                            prod *= table[rem % per_axis];
                            rem /= per_axis;
                        }
                        prod
                    })
                    .collect();
                out.extend(grid.extra_points().iter().map(|p| self.eval(p)));
                out
            }
        }
    }

    /// Certified bound on the truncation error against the full series
    /// (zero for trigonometric polynomials).
    pub fn truncation_bound(&self) -> f64 {
        match self {
            TestFunction::TrigPolynomial { .. } => 0.0,
            TestFunction::BernoulliProduct { axes, .. } => {
                let sups: Vec<f64> = axes.iter().map(|a| a.0.sup_bound() + a.0.tail()).collect();
                axes.iter()
                    .enumerate()
                    .map(|(j, a)| {
                        let others: f64 = sups
                            .iter()
                            .enumerate()
                            .filter(|&(i, _)| i != j)
                            .map(|(_, &s)| s)
                            .product();
                        a.0.tail() * others
                    })
                    .sum()
            }
        }
    }
}

/// Product of truncated Bernoulli kernels, the canonical member of the
/// anisotropic classes with aggregate `g(r)`.
pub fn make_test_function(r: &SmoothnessVector, k_terms: usize) -> Result<TestFunction> {
    if r.r.iter().any(|&v| v <= 1.0) {
        return Err(Error::InvalidParam(
            "Bernoulli class membership needs r_j > 1 on every axis".into(),
        ));
    }
    if k_terms < 1 {
        return Err(Error::InvalidParam("need at least one series term".into()));
    }
    let axes = r
        .r
        .iter()
        .zip(&r.alpha)
        .map(|(&rj, &aj)| BernoulliAxisHandle(BernoulliAxis::new(rj, aj, k_terms)))
        .collect();
    let label = format!(
        "bernoulli:r={};alpha={};K={}",
        join_floats(&r.r),
        join_floats(&r.alpha),
        k_terms
    );
    Ok(TestFunction::BernoulliProduct { axes, label })
}

/// Canonical member of the anisotropic class with smoothness vector `r`: the
/// product of kernels `F_{r_j+1}`. One convolution order separates a class
/// member from the bare kernel: the kernel `F_ρ` itself has per-axis uniform
/// smoothness `ρ−1`, so products of `F_{r_j+1}` recover at the class rate
/// `2^{−g(r)n}` while bare products of `F_{r_j}` decay like `2^{−g(r−1)n}`.
pub fn member_test_function(r: &SmoothnessVector, k_terms: usize) -> Result<TestFunction> {
    if k_terms < 1 {
        return Err(Error::InvalidParam("need at least one series term".into()));
    }
    let axes = r
        .r
        .iter()
        .zip(&r.alpha)
        .map(|(&rj, &aj)| BernoulliAxisHandle(BernoulliAxis::new(rj + 1.0, aj, k_terms)))
        .collect();
    let label = format!(
        "wclass:r={};alpha={};K={}",
        join_floats(&r.r),
        join_floats(&r.alpha),
        k_terms
    );
    Ok(TestFunction::BernoulliProduct { axes, label })
}

/// Random element of `T(R(s))` with coefficients uniform in `[−scale, scale]`,
/// reproducible from the seed.
pub fn random_trig_function(shape: &ShapeVector, seed: u64, scale: f64) -> Result<TestFunction> {
    let basis = TrigBasis::new(shape)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs: Vec<f64> = (0..basis.dim())
        .map(|_| rng.random_range(-scale..=scale))
        .collect();
    let label = format!("trigrand:s={};seed={seed};scale={scale}", join_ints(shape.entries()));
    Ok(TestFunction::TrigPolynomial { basis, coeffs, label })
}

/// Trigonometric polynomial from an explicit basis and coefficient vector.
pub fn trig_function(basis: TrigBasis, coeffs: Vec<f64>, label: String) -> Result<TestFunction> {
    if coeffs.len() != basis.dim() {
        return Err(Error::LengthMismatch { expected: basis.dim(), got: coeffs.len() });
    }
    Ok(TestFunction::TrigPolynomial { basis, coeffs, label })
}

/// Estimated uniform best approximation `d̂(f, T(R(s)))_∞`: the minimax fit of
/// `f` over the grid points (a lower estimate of the true distance).
pub fn best_approx_oracle(f: &TestFunction, s: &ShapeVector, grid: &EvalGrid) -> Result<f64> {
    let values = f.eval_grid(grid);
    best_approx_from_values(&values, s, grid)
}

pub fn best_approx_from_values(values: &[f64], s: &ShapeVector, grid: &EvalGrid) -> Result<f64> {
    let basis = TrigBasis::new(s)?;
    let design = basis.design_matrix(grid);
    Ok(chebyshev_minimax(&design, values)?.residual)
}

/// Best-approximation oracle with cached design matrices, for sweeps that
/// evaluate many functions against one shape collection and grid.
pub struct BestApproxOracle {
    shapes: Vec<ShapeVector>,
    designs: Vec<DMatrix<f64>>,
}

impl BestApproxOracle {
    pub fn new(shapes: &[ShapeVector], grid: &EvalGrid) -> Result<Self> {
        let designs = shapes
            .iter()
            .map(|s| Ok(TrigBasis::new(s)?.design_matrix(grid)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { shapes: shapes.to_vec(), designs })
    }

    pub fn shapes(&self) -> &[ShapeVector] {
        &self.shapes
    }

    /// `d̂(f, T(R(s)))_∞` per shape, from grid values of `f`.
    pub fn distances(&self, values: &[f64]) -> Result<Vec<f64>> {
        self.designs
            .par_iter()
            .map(|design| Ok(chebyshev_minimax(design, values)?.residual))
            .collect()
    }

    /// Smallest distance over the collection, with the full table.
    pub fn min_distance(&self, values: &[f64]) -> Result<(f64, Vec<f64>)> {
        let table = self.distances(values)?;
        let min = table.iter().copied().fold(f64::INFINITY, f64::min);
        Ok((min, table))
    }
}

/// Parsed form of the function-spec mini-language.
///
/// Supported forms:
/// - `bernoulli:r=2,2;alpha=0,0;K=4096` — bare kernel product `∏ F_{r_j}`
///   (`alpha`, `K` optional),
/// - `wclass:r=2,2;alpha=0,0;K=4096` — class member of smoothness `r`
///   (kernel product `∏ F_{r_j+1}`),
/// - `trig:<coefficient file>`,
/// - `trigrand:s=2,1;seed=7;scale=1` (seeded random polynomial; `scale` optional),
/// - `samples:<file>` (raw node samples; not evaluable off the nodes).
#[derive(Debug, Clone, PartialEq)]
pub enum FunctionSpec {
    Bernoulli { r: Vec<f64>, alpha: Vec<f64>, k_terms: usize },
    ClassMember { r: Vec<f64>, alpha: Vec<f64>, k_terms: usize },
    TrigFile(PathBuf),
    TrigRandom { shape: Vec<u32>, seed: u64, scale: f64 },
    Samples(PathBuf),
}

pub fn parse_function_spec(spec: &str) -> Result<FunctionSpec> {
    let (head, rest) = spec
        .split_once(':')
        .ok_or_else(|| Error::Parse(format!("function spec '{spec}' has no ':'")))?;
    match head {
        "trig" => Ok(FunctionSpec::TrigFile(PathBuf::from(rest))),
        "samples" => Ok(FunctionSpec::Samples(PathBuf::from(rest))),
        "bernoulli" | "wclass" => {
            let kv = parse_kv(rest)?;
            let r = parse_float_list(
                kv_get(&kv, "r")
                    .ok_or_else(|| Error::Parse("bernoulli spec needs r=<list>".into()))?,
            )?;
            let alpha = match kv_get(&kv, "alpha") {
                Some(v) => parse_float_list(v)?,
                None => vec![0.0; r.len()],
            };
            let k_terms = match kv_get(&kv, "K") {
                Some(v) => v.parse().map_err(|e| Error::Parse(format!("K: {e}")))?,
                None => DEFAULT_BERNOULLI_TERMS,
            };
            if alpha.len() != r.len() {
                return Err(Error::Parse("alpha length must match r".into()));
            }
            if head == "wclass" {
                Ok(FunctionSpec::ClassMember { r, alpha, k_terms })
            } else {
                Ok(FunctionSpec::Bernoulli { r, alpha, k_terms })
            }
        }
        "trigrand" => {
            let kv = parse_kv(rest)?;
            let shape = parse_int_list(
                kv_get(&kv, "s")
                    .ok_or_else(|| Error::Parse("trigrand spec needs s=<list>".into()))?,
            )?;
            let seed = match kv_get(&kv, "seed") {
                Some(v) => v.parse().map_err(|e| Error::Parse(format!("seed: {e}")))?,
                None => 0,
            };
            let scale = match kv_get(&kv, "scale") {
                Some(v) => v.parse().map_err(|e| Error::Parse(format!("scale: {e}")))?,
                None => 1.0,
            };
            Ok(FunctionSpec::TrigRandom { shape, seed, scale })
        }
        other => Err(Error::Parse(format!("unknown function kind '{other}'"))),
    }
}

impl FunctionSpec {
    /// Instantiates an evaluable function; `samples:` specs are data, not
    /// functions, and are rejected here.
    pub fn build(&self) -> Result<TestFunction> {
        match self {
            FunctionSpec::Bernoulli { r, alpha, k_terms } => {
                let sv = SmoothnessVector::new(r.clone(), alpha.clone())?;
                make_test_function(&sv, *k_terms)
            }
            FunctionSpec::ClassMember { r, alpha, k_terms } => {
                let sv = SmoothnessVector::new(r.clone(), alpha.clone())?;
                member_test_function(&sv, *k_terms)
            }
            FunctionSpec::TrigRandom { shape, seed, scale } => {
                random_trig_function(&ShapeVector::new(shape.clone()), *seed, *scale)
            }
            FunctionSpec::TrigFile(path) => load_trig_file(path),
            FunctionSpec::Samples(_) => Err(Error::InvalidParam(
                "a samples: spec provides node data only and cannot be evaluated".into(),
            )),
        }
    }
}

/// Loads a trigonometric polynomial from a coefficient file: one term per
/// line, `k_1 … k_d a [b]` meaning `a·cos(k·x) + b·sin(k·x)`; `#` comments.
pub fn load_trig_file(path: &Path) -> Result<TestFunction> {
    let text = std::fs::read_to_string(path)?;
    let mut terms: Vec<(Vec<i64>, f64, f64)> = Vec::new();
    let mut d: Option<usize> = None;
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        let dim = match d {
            Some(d) => d,
            None => {
                let ints = toks.iter().take_while(|t| t.parse::<i64>().is_ok()).count();
                let floats = toks.len().saturating_sub(ints);
                if !(1..=2).contains(&floats) || ints == 0 {
                    return Err(Error::Parse(format!(
                        "line {}: expected 'k_1 … k_d a [b]'",
                        ln + 1
                    )));
                }
                d = Some(ints);
                ints
            }
        };
        if toks.len() < dim + 1 || toks.len() > dim + 2 {
            return Err(Error::Parse(format!("line {}: wrong field count", ln + 1)));
        }
        let k: Vec<i64> = toks[..dim]
            .iter()
            .map(|t| t.parse().map_err(|e| Error::Parse(format!("line {}: {e}", ln + 1))))
            .collect::<Result<_>>()?;
        let a: f64 = toks[dim]
            .parse()
            .map_err(|e| Error::Parse(format!("line {}: {e}", ln + 1)))?;
        let b: f64 = if toks.len() == dim + 2 {
            toks[dim + 1]
                .parse()
                .map_err(|e| Error::Parse(format!("line {}: {e}", ln + 1)))?
        } else {
            0.0
        };
        terms.push((k, a, b));
    }
    let d = d.ok_or_else(|| Error::Parse("coefficient file has no terms".into()))?;
    let freqs: Vec<FrequencyVector> =
        terms.iter().map(|(k, _, _)| FrequencyVector(k.clone())).collect();
    let shape = covering_shape(&freqs, d)?;
    let basis = TrigBasis::new(&shape)?;
    let zero = FrequencyVector(vec![0; d]);
    let mut coeffs = vec![0.0; basis.dim()];
    for (k, a, mut b) in terms {
        let mut k = FrequencyVector(k);
        if k == zero {
            coeffs[0] += a;
            continue;
        }
        if k < zero {
            // cos(−k·x) = cos(k·x), sin(−k·x) = −sin(k·x)
            k = FrequencyVector(k.components().iter().map(|v| -v).collect());
            b = -b;
        }
        let idx = basis
            .half_modes()
            .binary_search(&k)
            .map_err(|_| Error::Parse(format!("frequency {k} not covered by shape {shape}")))?;
        coeffs[1 + 2 * idx] += a;
        coeffs[2 + 2 * idx] += b;
    }
    trig_function(basis, coeffs, format!("trig:{}", path.display()))
}

/// Reads node samples (one value per line, `#` comments) for `samples:` specs.
pub fn read_samples_file(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        out.push(
            line.parse::<f64>()
                .map_err(|e| Error::Parse(format!("line {}: {e}", ln + 1)))?,
        );
    }
    Ok(out)
}

fn parse_kv(s: &str) -> Result<Vec<(String, String)>> {
    s.split(';')
        .filter(|p| !p.is_empty())
        .map(|p| {
            p.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| Error::Parse(format!("expected key=value, got '{p}'")))
        })
        .collect()
}

fn kv_get<'a>(kv: &'a [(String, String)], key: &str) -> Option<&'a str> {
    kv.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
}

fn parse_float_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| Error::Parse(format!("{e}: '{t}'"))))
        .collect()
}

fn parse_int_list(s: &str) -> Result<Vec<u32>> {
    s.split(',')
        .map(|t| t.trim().parse::<u32>().map_err(|e| Error::Parse(format!("{e}: '{t}'"))))
        .collect()
}

fn join_floats(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn join_ints(v: &[u32]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    #[test]
    fn g_of_r_examples() {
        assert!((g_of_r(&[2.0, 2.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((g_of_r(&[3.5]).unwrap() - 3.5).abs() < 1e-15);
        assert!((g_of_r(&[1.5, 3.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((g_of_r(&[2.0, 3.0, 4.0]).unwrap() - 12.0 / 13.0).abs() < 1e-15);
        assert!(g_of_r(&[2.0, 0.0]).is_err());
        assert!(g_of_r(&[2.0, -1.0]).is_err());
    }

    /// Term-by-term reference sum with direct cosines.
    fn bernoulli_oracle(r: f64, alpha: f64, x: f64, k_terms: usize) -> f64 {
        let mut acc = 1.0;
        for k in 1..=k_terms {
            acc += 2.0 * (k as f64).powf(-r) * (k as f64 * x - alpha * PI / 2.0).cos();
        }
        acc
    }

    #[test]
    fn bernoulli_matches_direct_summation() {
        for &(r, alpha) in &[(2.0, 0.0), (1.5, 1.0), (3.0, -0.5)] {
            for i in 0..50 {
                let x = TAU * (i as f64 * 0.618_033_988_749_894_9 % 1.0);
                for &k in &[1usize, 7, 100, 5000] {
                    let fast = bernoulli_eval(r, alpha, x, k);
                    let slow = bernoulli_oracle(r, alpha, x, k);
                    assert!(
                        (fast - slow).abs() < 1e-9,
                        "r={r} α={alpha} x={x} K={k}: {fast} vs {slow}"
                    );
                }
            }
        }
    }

    #[test]
    fn bernoulli_zeta_limit() {
        // K → ∞ at x = 0, α = 0: 1 + 2ζ(2) = 1 + π²/3
        let val = bernoulli_eval(2.0, 0.0, 0.0, 200_000);
        let limit = 1.0 + PI * PI / 3.0;
        let tail = bernoulli_tail_bound(2.0, 200_000);
        assert!((val - limit).abs() <= tail + 1e-9, "{val} vs {limit} (tail {tail})");
    }

    #[test]
    fn bernoulli_single_term_and_symmetry() {
        let x = 1.234f64;
        assert!(
            (bernoulli_eval(2.0, 0.7, x, 1) - (1.0 + 2.0 * (x - 0.7 * PI / 2.0).cos())).abs()
                < 1e-12
        );
        // α = 0 is even in x
        assert!((bernoulli_eval(2.5, 0.0, x, 64) - bernoulli_eval(2.5, 0.0, -x, 64)).abs() < 1e-12);
        // F(−x, α) = F(x, −α)
        assert!(
            (bernoulli_eval(2.5, 0.8, -x, 64) - bernoulli_eval(2.5, -0.8, x, 64)).abs() < 1e-12
        );
    }

    #[test]
    fn truncation_certificate() {
        // doubling K moves the value by less than the reported tail bound
        let sv = SmoothnessVector::cosine_phase(vec![2.0, 3.0]).unwrap();
        let f1 = make_test_function(&sv, 512).unwrap();
        let f2 = make_test_function(&sv, 1024).unwrap();
        let bound = f1.truncation_bound();
        for i in 0..200 {
            let x = vec![
                TAU * (i as f64 * 0.618_033_988_749_894_9 % 1.0),
                TAU * (i as f64 * 0.414_213_562_373_095_1 % 1.0),
            ];
            assert!((f1.eval(&x) - f2.eval(&x)).abs() <= bound, "x={x:?}");
        }
    }

    #[test]
    fn product_form_separability() {
        let sv = SmoothnessVector::cosine_phase(vec![2.0, 2.5]).unwrap();
        let f = make_test_function(&sv, 256).unwrap();
        // f(x_1, 0) is the univariate kernel times the constant F(0)
        let c = bernoulli_eval(2.5, 0.0, 0.0, 256);
        let x1 = 2.1;
        assert!((f.eval(&[x1, 0.0]) - bernoulli_eval(2.0, 0.0, x1, 256) * c).abs() < 1e-10);
    }

    #[test]
    fn grid_evaluation_matches_pointwise() {
        let sv = SmoothnessVector::cosine_phase(vec![2.0, 2.0]).unwrap();
        let f = make_test_function(&sv, 128).unwrap();
        let grid = EvalGrid::tensor(2, 9).with_extra_points(&[vec![0.3, 5.1]]);
        let values = f.eval_grid(&grid);
        for idx in [0usize, 5, 40, 80, 81] {
            let direct = f.eval(&grid.point(idx));
            assert!((values[idx] - direct).abs() < 1e-10, "idx={idx}");
        }
    }

    #[test]
    fn class_membership_guard() {
        let sv = SmoothnessVector::cosine_phase(vec![1.0, 2.0]).unwrap();
        assert!(make_test_function(&sv, 64).is_err());
    }

    #[test]
    fn best_approx_of_member_is_zero() {
        let shape = ShapeVector::new(vec![1, 1]);
        let f = random_trig_function(&shape, 42, 1.0).unwrap();
        let grid = EvalGrid::tensor(2, 24);
        let d = best_approx_oracle(&f, &shape, &grid).unwrap();
        assert!(d < 1e-8, "member distance {d}");
    }

    #[test]
    fn best_approx_of_outside_mode_positive_and_monotone() {
        // cos(2 x_1) sits outside R((1,0)) = {|k_1| ≤ 1, k_2 = 0}
        let basis = TrigBasis::new(&ShapeVector::new(vec![2, 0])).unwrap();
        let ki = basis.half_modes().iter().position(|k| k.components() == [2, 0]).unwrap();
        let mut coeffs = vec![0.0; basis.dim()];
        coeffs[1 + 2 * ki] = 1.0;
        let f = trig_function(basis, coeffs, "cos2x".into()).unwrap();
        let grid = EvalGrid::tensor(2, 32);
        let values = f.eval_grid(&grid);
        let d_small =
            best_approx_from_values(&values, &ShapeVector::new(vec![1, 0]), &grid).unwrap();
        let d_big =
            best_approx_from_values(&values, &ShapeVector::new(vec![2, 0]), &grid).unwrap();
        assert!(d_small > 0.5, "outside-mode distance {d_small}");
        assert!(d_big < 1e-9);
        assert!(d_big <= d_small);
    }

    #[test]
    fn spec_parsing() {
        assert_eq!(
            parse_function_spec("bernoulli:r=2,2;alpha=0,0;K=4096").unwrap(),
            FunctionSpec::Bernoulli { r: vec![2.0, 2.0], alpha: vec![0.0, 0.0], k_terms: 4096 }
        );
        assert_eq!(
            parse_function_spec("bernoulli:r=1.5,3").unwrap(),
            FunctionSpec::Bernoulli { r: vec![1.5, 3.0], alpha: vec![0.0, 0.0], k_terms: 4096 }
        );
        assert_eq!(
            parse_function_spec("trigrand:s=2,1;seed=7").unwrap(),
            FunctionSpec::TrigRandom { shape: vec![2, 1], seed: 7, scale: 1.0 }
        );
        assert_eq!(
            parse_function_spec("trig:/tmp/coeffs.txt").unwrap(),
            FunctionSpec::TrigFile(PathBuf::from("/tmp/coeffs.txt"))
        );
        assert_eq!(
            parse_function_spec("samples:data.txt").unwrap(),
            FunctionSpec::Samples(PathBuf::from("data.txt"))
        );
        assert!(parse_function_spec("fourier:r=2").is_err());
        assert!(parse_function_spec("bernoulli:alpha=1").is_err());
    }

    #[test]
    fn trig_file_roundtrip() {
        let dir = std::env::temp_dir().join("unirecover-test-classes");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("coeffs.txt");
        std::fs::write(&path, "# test polynomial\n0 0 1.5\n1 0 0.5 0.25\n-1 1 0 2.0\n").unwrap();
        let f = load_trig_file(&path).unwrap();
        // the −k flip lands on (1,−1) with negated sine part
        let x = [0.9f64, 2.2];
        let want = 1.5 + 0.5 * x[0].cos() + 0.25 * x[0].sin() - 2.0 * (x[0] - x[1]).sin();
        assert!((f.eval(&x) - want).abs() < 1e-12);
    }

    #[test]
    fn class_member_uses_shifted_exponent() {
        let sv = SmoothnessVector::cosine_phase(vec![1.5, 3.0]).unwrap();
        let member = member_test_function(&sv, 128).unwrap();
        // axis evaluation matches the kernel of exponent r+1
        let x = 1.7;
        assert!(
            (member.eval(&[x, 0.0])
                - bernoulli_eval(2.5, 0.0, x, 128) * bernoulli_eval(4.0, 0.0, 0.0, 128))
            .abs()
                < 1e-10
        );
        assert!(member.label().starts_with("wclass:r=1.5,3"));
        // smoothness entries in (0, 1] are fine: the series exponent exceeds 1
        let sv = SmoothnessVector::cosine_phase(vec![0.5]).unwrap();
        assert!(member_test_function(&sv, 16).is_ok());
        assert_eq!(
            parse_function_spec("wclass:r=2,2;K=512").unwrap(),
            FunctionSpec::ClassMember { r: vec![2.0, 2.0], alpha: vec![0.0, 0.0], k_terms: 512 }
        );
    }

    #[test]
    fn random_trig_deterministic() {
        let s = ShapeVector::new(vec![2, 1]);
        let f1 = random_trig_function(&s, 9, 1.0).unwrap();
        let f2 = random_trig_function(&s, 9, 1.0).unwrap();
        let x = [1.0, 2.0];
        assert_eq!(f1.eval(&x), f2.eval(&x));
        let f3 = random_trig_function(&s, 10, 1.0).unwrap();
        assert_ne!(f1.eval(&x), f3.eval(&x));
    }
}
