//! Equal-weight lattice cubature and arithmetic exactness certification.
//!
//! A rank-1 lattice with `m` nodes and generator `h` integrates a mode
//! `e^{i(k,x)}` exactly iff `Σ_j k_j h_j ≢ 0 (mod m)` or `k = 0`; exactness on
//! the whole cross `Γ(N, d)` is therefore a finite congruence check with no
//! floating-point tolerance.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::torus::{
    enumerate_hyperbolic_cross_capped, FrequencyVector, HyperbolicCrossSpec, DEFAULT_FREQ_CAP,
};

/// Equal-weight cubature value `m^{−1} Σ_ν f(w^ν)`, given samples in node order.
pub fn cubature_value(samples: &[f64], m: usize) -> Result<f64> {
    if samples.len() != m {
        return Err(Error::LengthMismatch { expected: m, got: samples.len() });
    }
    if m == 0 {
        return Err(Error::InvalidParam("cubature needs at least one node".into()));
    }
    Ok(samples.iter().sum::<f64>() / m as f64)
}

/// Whether `k` aliases to zero on the lattice: `Σ_j k_j h_j ≡ 0 (mod m)`.
pub(crate) fn aliased(k: &[i64], h: &[u64], m: u64) -> bool {
    debug_assert_eq!(k.len(), h.len());
    let mi = m as i128;
    let mut acc: i128 = 0;
    for (&kj, &hj) in k.iter().zip(h) {
        acc = (acc + (kj as i128) * (hj as i128)) % mi;
    }
    acc.rem_euclid(mi) == 0
}

/// Result of an exactness scan over one cross.
#[derive(Debug, Clone)]
pub struct ExactnessOutcome {
    pub exact: bool,
    /// Lexicographically smallest aliased nonzero mode, when not exact.
    pub first_aliased: Option<FrequencyVector>,
}

/// True iff every nonzero `k ∈ Γ(N, d)` satisfies `Σ_j k_j h_j ≢ 0 (mod m)`.
pub fn exactness_check(m: u64, h: &[u64], n: u64, d: usize) -> Result<ExactnessOutcome> {
    exactness_check_capped(m, h, n, d, DEFAULT_FREQ_CAP)
}

pub fn exactness_check_capped(
    m: u64,
    h: &[u64],
    n: u64,
    d: usize,
    cap: usize,
) -> Result<ExactnessOutcome> {
    if h.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: h.len() });
    }
    if m < 1 {
        return Err(Error::InvalidParam("lattice size m must be ≥ 1".into()));
    }
    let spec = HyperbolicCrossSpec::new(n, d)?;
    let modes = enumerate_hyperbolic_cross_capped(&spec, cap)?;
    let first_aliased = modes
        .into_iter()
        .find(|k| !k.is_zero() && aliased(k.components(), h, m));
    Ok(ExactnessOutcome { exact: first_aliased.is_none(), first_aliased })
}

/// Largest `N` such that the cubature is exact on `T(N, d)`.
///
/// Monotonicity in `N` (the crosses are nested) allows an exponential scan
/// followed by bisection. The mode `(m, 0, …, 0)` always aliases, so the
/// answer is below `m`; `n_cap` bounds the search for large lattices and an
/// error is returned if exactness still holds at the cap.
pub fn max_exact_cross(m: u64, h: &[u64], d: usize, n_cap: u64) -> Result<u64> {
    let cap = n_cap.min(m).max(1);
    if !exactness_check(m, h, 1, d)?.exact {
        return Ok(0);
    }
    // exponential scan for the first failure
    let mut lo = 1u64; // exact here
    let mut hi = lo;
    loop {
        hi = (hi * 2).min(cap);
        let out = exactness_check(m, h, hi, d)?;
        if !out.exact {
            break;
        }
        lo = hi;
        if hi == cap {
            return Err(Error::InvalidParam(format!(
                "still exact at the search cap N = {cap}"
            )));
        }
    }
    // invariant: exact at lo, aliased at hi
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if exactness_check(m, h, mid, d)?.exact {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Exactness certificate of a lattice: the largest certified cross and the
/// mode that breaks the next one.
#[derive(Debug, Clone, Serialize)]
pub struct ExactnessCertificate {
    pub m: u64,
    pub h: Vec<u64>,
    pub d: usize,
    pub n_star: u64,
    /// First aliased mode of `Γ(N*+1, d)`.
    pub first_aliased_mode: Option<Vec<i64>>,
}

/// Runs [`max_exact_cross`] and packages the result with its witness.
pub fn certify(m: u64, h: &[u64], d: usize, n_cap: u64) -> Result<ExactnessCertificate> {
    let n_star = max_exact_cross(m, h, d, n_cap)?;
    let witness = exactness_check(m, h, n_star + 1, d)?
        .first_aliased
        .map(|k| k.components().to_vec());
    Ok(ExactnessCertificate { m, h: h.to_vec(), d, n_star, first_aliased_mode: witness })
}
