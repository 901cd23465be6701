//! Exact torus-point arithmetic and frequency-domain combinatorics.
//!
//! Points of `[0, 2π)^d` are kept as rational multiples of `2π` so that
//! lattice nodes are represented without rounding. Frequency sets come in two
//! flavours: dyadic rectangles `R(s) = {k : |k_j| < 2^{s_j}}` indexed by a
//! shape vector `s`, and hyperbolic crosses
//! `Γ(N, d) = {k : ∏_j max(|k_j|, 1) ≤ N}`.

use std::f64::consts::TAU;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

/// Default cap on the number of frequencies any enumeration may materialize.
pub const DEFAULT_FREQ_CAP: usize = 10_000_000;

/// A point of `[0, 2π)^d` stored as `(2π a_1/M, …, 2π a_d/M)` with `0 ≤ a_j < M`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TorusPoint {
    numerators: Vec<u64>,
    modulus: u64,
}

impl TorusPoint {
    /// Builds a point from integer numerators, reducing each one modulo `modulus`.
    pub fn new(numerators: &[i64], modulus: u64) -> Result<Self> {
        if modulus == 0 {
            return Err(Error::InvalidParam("modulus must be ≥ 1".into()));
        }
        let m = modulus as i64;
        let numerators = numerators.iter().map(|&a| a.rem_euclid(m) as u64).collect();
        Ok(Self { numerators, modulus })
    }

    pub fn dim(&self) -> usize {
        self.numerators.len()
    }

    pub fn numerators(&self) -> &[u64] {
        &self.numerators
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// Floating coordinates in `[0, 2π)^d`.
    pub fn to_radians(&self) -> Vec<f64> {
        self.numerators
            .iter()
            .map(|&a| TAU * (a as f64) / (self.modulus as f64))
            .collect()
    }
}

/// An integer frequency vector `k ∈ Z^d`. The derived ordering is lexicographic.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct FrequencyVector(pub Vec<i64>);

impl FrequencyVector {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn components(&self) -> &[i64] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&k| k == 0)
    }

    /// The hyperbolic-cross level `∏_j max(|k_j|, 1)`.
    pub fn cross_level(&self) -> u128 {
        self.0
            .iter()
            .map(|&k| (k.unsigned_abs() as u128).max(1))
            .product()
    }
}

impl fmt::Display for FrequencyVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|k| k.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// A shape vector `s ∈ Z_+^d`; its weight `‖s‖_1` selects the collection `H(n, d)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct ShapeVector(Vec<u32>);

impl ShapeVector {
    pub fn new(entries: Vec<u32>) -> Self {
        Self(entries)
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// `‖s‖_1 = Σ_j s_j`.
    pub fn weight(&self) -> u32 {
        self.0.iter().sum()
    }

    /// `|R(s)| = ∏_j (2^{s_j + 1} − 1)`.
    pub fn rectangle_cardinality(&self) -> u128 {
        self.0
            .iter()
            .map(|&s| (1u128 << (s + 1)) - 1)
            .product()
    }

    /// Per-axis kernel orders `2^{s_j}` used by convolution recovery.
    pub fn dyadic_orders(&self) -> Vec<u64> {
        self.0.iter().map(|&s| 1u64 << s).collect()
    }
}

impl fmt::Display for ShapeVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|s| s.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Parameters of a hyperbolic cross `Γ(N, d)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HyperbolicCrossSpec {
    pub n: u64,
    pub d: usize,
}

impl HyperbolicCrossSpec {
    pub fn new(n: u64, d: usize) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidParam("cross parameter N must be ≥ 1".into()));
        }
        if d < 1 {
            return Err(Error::InvalidParam("dimension must be ≥ 1".into()));
        }
        Ok(Self { n, d })
    }
}

/// All `k` with `|k_j| < 2^{s_j}` for every `j`, in lexicographic order.
pub fn enumerate_rectangle(s: &ShapeVector) -> Result<Vec<FrequencyVector>> {
    enumerate_rectangle_capped(s, DEFAULT_FREQ_CAP)
}

pub fn enumerate_rectangle_capped(s: &ShapeVector, cap: usize) -> Result<Vec<FrequencyVector>> {
    if s.dim() == 0 {
        return Err(Error::InvalidParam("shape must have d ≥ 1".into()));
    }
    let card = s.rectangle_cardinality();
    if card > cap as u128 {
        return Err(Error::CapExceeded { needed: card, cap });
    }
    let bounds: Vec<i64> = s.entries().iter().map(|&sj| (1i64 << sj) - 1).collect();
    let mut out = Vec::with_capacity(card as usize);
    let mut k: Vec<i64> = bounds.iter().map(|&b| -b).collect();
    loop {
        out.push(FrequencyVector(k.clone()));
        // odometer increment, last coordinate fastest
        let mut axis = k.len();
        loop {
            if axis == 0 {
                return Ok(out);
            }
            axis -= 1;
            if k[axis] < bounds[axis] {
                k[axis] += 1;
                for j in axis + 1..k.len() {
                    k[j] = -bounds[j];
                }
                break;
            }
        }
    }
}

/// Number of elements of `Γ(N, d)` without materializing the set.
pub fn cross_cardinality(n: u64, d: usize) -> u128 {
    fn rec(budget: u64, dims_left: usize) -> u128 {
        if dims_left == 1 {
            return 2 * budget as u128 + 1;
        }
        let mut total = rec(budget, dims_left - 1); // k_1 = 0
        for a in 1..=budget {
            total += 2 * rec(budget / a, dims_left - 1);
        }
        total
    }
    if d == 0 {
        return 0;
    }
    rec(n, d)
}

/// All `k` with `∏_j max(|k_j|, 1) ≤ N`, in lexicographic order.
pub fn enumerate_hyperbolic_cross(spec: &HyperbolicCrossSpec) -> Result<Vec<FrequencyVector>> {
    enumerate_hyperbolic_cross_capped(spec, DEFAULT_FREQ_CAP)
}

pub fn enumerate_hyperbolic_cross_capped(
    spec: &HyperbolicCrossSpec,
    cap: usize,
) -> Result<Vec<FrequencyVector>> {
    let card = cross_cardinality(spec.n, spec.d);
    if card > cap as u128 {
        return Err(Error::CapExceeded { needed: card, cap });
    }
    let mut out = Vec::with_capacity(card as usize);
    let mut prefix = vec![0i64; spec.d];
    fill_cross(&mut out, &mut prefix, 0, spec.n);
    Ok(out)
}

fn fill_cross(out: &mut Vec<FrequencyVector>, prefix: &mut Vec<i64>, axis: usize, budget: u64) {
    let b = budget as i64;
    if axis + 1 == prefix.len() {
        for k in -b..=b {
            prefix[axis] = k;
            out.push(FrequencyVector(prefix.clone()));
        }
        prefix[axis] = 0;
        return;
    }
    for k in -b..=b {
        prefix[axis] = k;
        let used = (k.unsigned_abs()).max(1);
        fill_cross(out, prefix, axis + 1, budget / used);
    }
    prefix[axis] = 0;
}

/// All `s ∈ Z_+^d` with `‖s‖_1 = n`, strictly lexicographically increasing.
///
/// The ordering is the tie-break convention for every downstream argmin.
pub fn enumerate_shapes(n: u32, d: usize) -> Vec<ShapeVector> {
    assert!(d >= 1, "dimension must be ≥ 1");
    let mut out = Vec::new();
    let mut entries = vec![0u32; d];
    fill_shapes(&mut out, &mut entries, 0, n);
    out
}

fn fill_shapes(out: &mut Vec<ShapeVector>, entries: &mut Vec<u32>, axis: usize, left: u32) {
    if axis + 1 == entries.len() {
        entries[axis] = left;
        out.push(ShapeVector::new(entries.clone()));
        entries[axis] = 0;
        return;
    }
    for v in 0..=left {
        entries[axis] = v;
        fill_shapes(out, entries, axis + 1, left - v);
    }
    entries[axis] = 0;
}

/// Componentwise reduction modulo `2π` into `[0, 2π)`.
pub fn torus_reduce(x: &[f64]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(x.len());
    for (j, &v) in x.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFinite(j));
        }
        let mut r = v.rem_euclid(TAU);
        if r >= TAU {
            r = 0.0;
        }
        out.push(r);
    }
    Ok(out)
}

/// Renders frequency vectors as CSV lines `k_1,…,k_d`.
pub fn freqs_to_csv(freqs: &[FrequencyVector]) -> String {
    let mut s = String::new();
    for k in freqs {
        let parts: Vec<String> = k.components().iter().map(|v| v.to_string()).collect();
        s.push_str(&parts.join(","));
        s.push('\n');
    }
    s
}
