//! Fibonacci and Korobov rank-1 point sets, the exhaustive generator search
//! for exact cubature, and binary-net machinery (a d=2 construction plus a
//! property verifier that accepts externally supplied point sets).

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use num_integer::Integer;

use crate::cubature::aliased;
use crate::error::{Error, Result};
use crate::torus::{
    cross_cardinality, enumerate_hyperbolic_cross_capped, enumerate_shapes, FrequencyVector,
    HyperbolicCrossSpec, TorusPoint, DEFAULT_FREQ_CAP,
};

/// Largest lattice size the constructors will materialize.
pub const DEFAULT_NODE_CAP: u64 = 10_000_000;

/// The `n`-th Fibonacci number under the indexing `b_0 = b_1 = 1`.
pub fn fibonacci_number(n: u32) -> Result<u64> {
    let (mut a, mut b) = (1u64, 1u64);
    for _ in 0..n {
        let next = a.checked_add(b).ok_or(Error::Overflow("fibonacci_number"))?;
        a = b;
        b = next;
    }
    Ok(a)
}

/// The Fibonacci point set: `b_n` nodes `(2πν/b_n, 2π{νb_{n−1}/b_n})`, ν = 1..b_n.
#[derive(Debug, Clone)]
pub struct FibonacciLattice {
    pub n: u32,
    pub b_n: u64,
    pub b_prev: u64,
    nodes: Vec<TorusPoint>,
}

pub fn fibonacci_lattice(n: u32) -> Result<FibonacciLattice> {
    if n < 2 {
        return Err(Error::InvalidParam("Fibonacci lattice needs n ≥ 2".into()));
    }
    let b_n = fibonacci_number(n)?;
    let b_prev = fibonacci_number(n - 1)?;
    if b_n > DEFAULT_NODE_CAP {
        return Err(Error::CapExceeded { needed: b_n as u128, cap: DEFAULT_NODE_CAP as usize });
    }
    let nodes = rank1_nodes(b_n, &[1, b_prev]);
    Ok(FibonacciLattice { n, b_n, b_prev, nodes })
}

impl FibonacciLattice {
    pub fn nodes(&self) -> &[TorusPoint] {
        &self.nodes
    }

    pub fn generator(&self) -> Vec<u64> {
        vec![1, self.b_prev]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// The Korobov point set `w^ν = (2π{νh_1/m}, …, 2π{νh_d/m})`, ν = 1..m.
#[derive(Debug, Clone)]
pub struct KorobovLattice {
    pub m: u64,
    /// Generator reduced componentwise modulo `m`.
    pub h: Vec<u64>,
    nodes: Vec<TorusPoint>,
}

pub fn korobov_lattice(m: u64, h: &[i64]) -> Result<KorobovLattice> {
    if m < 1 {
        return Err(Error::InvalidParam("node count m must be ≥ 1".into()));
    }
    if h.is_empty() {
        return Err(Error::InvalidParam("generator must have d ≥ 1".into()));
    }
    if m > DEFAULT_NODE_CAP {
        return Err(Error::CapExceeded { needed: m as u128, cap: DEFAULT_NODE_CAP as usize });
    }
    let hr: Vec<u64> = h.iter().map(|&v| v.rem_euclid(m as i64) as u64).collect();
    let nodes = rank1_nodes(m, &hr);
    Ok(KorobovLattice { m, h: hr, nodes })
}

impl KorobovLattice {
    pub fn nodes(&self) -> &[TorusPoint] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `gcd(h_j, m)` per axis; 1 everywhere means each axis visits m distinct values.
    pub fn gcd_report(&self) -> Vec<u64> {
        self.h.iter().map(|&hj| hj.gcd(&self.m)).collect()
    }
}

fn rank1_nodes(m: u64, h: &[u64]) -> Vec<TorusPoint> {
    (1..=m)
        .map(|nu| {
            let nums: Vec<i64> = h
                .iter()
                .map(|&hj| ((nu as u128 * hj as u128) % m as u128) as i64)
                .collect();
            TorusPoint::new(&nums, m).expect("modulus ≥ 1")
        })
        .collect()
}

/// Smallest prime `≥ n`.
pub fn next_prime_at_least(n: u64) -> u64 {
    let mut m = n.max(2);
    while !is_prime(m) {
        m += 1;
    }
    m
}

/// Deterministic trial-division primality check (sufficient for the sweep sizes here).
pub fn is_prime(m: u64) -> bool {
    if m < 2 {
        return false;
    }
    if m % 2 == 0 {
        return m == 2;
    }
    let mut p = 3u64;
    while p * p <= m {
        if m % p == 0 {
            return false;
        }
        p += 2;
    }
    true
}

/// Outcome of the exhaustive search for a generator `(1, h, h², …, h^{d−1})`.
#[derive(Debug, Clone)]
pub struct KorobovSearch {
    /// Smallest `h ∈ [1, m)` whose cubature is exact on `T(N, d)`, if any.
    pub h: Option<u64>,
    pub m_is_prime: bool,
    /// Whether `|Γ(N,d)| < (m−1)/d` held, which guarantees a hit for prime `m`.
    pub guaranteed: bool,
    pub cross_cardinality: u128,
}

impl KorobovSearch {
    /// Expands the winning scalar into the full generator vector.
    pub fn generator(&self, m: u64, d: usize) -> Option<Vec<u64>> {
        self.h.map(|h| power_generator(h, m, d))
    }
}

/// `(1, h, h², …, h^{d−1})` reduced modulo `m`.
pub fn power_generator(h: u64, m: u64, d: usize) -> Vec<u64> {
    let mut g = Vec::with_capacity(d);
    let mut p = 1u64 % m.max(1);
    for _ in 0..d {
        g.push(p);
        p = ((p as u128 * h as u128) % m as u128) as u64;
    }
    g
}

/// Smallest `h` such that no nonzero `k ∈ Γ(N, d)` satisfies
/// `Σ_j k_j h^{j−1} ≡ 0 (mod m)`. Pure integer arithmetic.
///
/// Composite `m` is allowed (the result records that the guarantee was absent).
pub fn korobov_search(m: u64, n_cross: u64, d: usize) -> Result<KorobovSearch> {
    if m < 2 {
        return Err(Error::InvalidParam("search needs m ≥ 2".into()));
    }
    let spec = HyperbolicCrossSpec::new(n_cross, d)?;
    let modes = enumerate_hyperbolic_cross_capped(&spec, DEFAULT_FREQ_CAP)?;
    let card = cross_cardinality(n_cross, d);
    let m_is_prime = is_prime(m);
    let guaranteed = m_is_prime && card * (d as u128) < (m - 1) as u128;
    // residues of the nonzero modes, reduced once
    let reduced: Vec<Vec<u64>> = modes
        .iter()
        .filter(|k| !k.is_zero())
        .map(|k| {
            k.components()
                .iter()
                .map(|&kj| kj.rem_euclid(m as i64) as u64)
                .collect()
        })
        .collect();
    let found = (1..m).find(|&h| {
        let gen = power_generator(h, m, d);
        !reduced.iter().any(|k| aliased_residues(k, &gen, m))
    });
    Ok(KorobovSearch { h: found, m_is_prime, guaranteed, cross_cardinality: card })
}

/// Aliasing test on residues already reduced modulo `m`.
fn aliased_residues(k: &[u64], h: &[u64], m: u64) -> bool {
    let mut acc: u64 = 0;
    for (&kj, &hj) in k.iter().zip(h) {
        acc = (acc + ((kj as u128 * hj as u128) % m as u128) as u64) % m;
    }
    acc == 0
}

/// A set of `2^r` points in `[0,1)^d` with `2^{−r}`-aligned coordinates.
#[derive(Debug, Clone)]
pub struct BinaryNet {
    pub r: u32,
    pub d: usize,
    /// Quality parameter the set is claimed to satisfy.
    pub t: u32,
    /// Dyadic numerators; coordinate value is `numerator / 2^r`.
    points: Vec<Vec<u64>>,
}

impl BinaryNet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dyadic_points(&self) -> &[Vec<u64>] {
        &self.points
    }

    /// Coordinates in `[0,1)^d` as floats.
    pub fn to_unit_points(&self) -> Vec<Vec<f64>> {
        let scale = 1.0 / (1u64 << self.r) as f64;
        self.points
            .iter()
            .map(|p| p.iter().map(|&a| a as f64 * scale).collect())
            .collect()
    }

    /// Scales `[0,1)^d` to the torus, preserving exact dyadic rationals:
    /// numerator `a` over `2^r` becomes the torus point `2πa/2^r`.
    pub fn scale_to_torus(&self) -> Vec<TorusPoint> {
        let m = 1u64 << self.r;
        self.points
            .iter()
            .map(|p| {
                let nums: Vec<i64> = p.iter().map(|&a| a as i64).collect();
                TorusPoint::new(&nums, m).expect("modulus ≥ 1")
            })
            .collect()
    }
}

/// The 2^r-point Hammersley set `{(i·2^{−r}, bitreverse_r(i)·2^{−r})}` in `[0,1)²`,
/// a `(0, r, 2)`-net in base 2.
pub fn hammersley_net(r: u32) -> Result<BinaryNet> {
    if r < 1 {
        return Err(Error::InvalidParam("net resolution r must be ≥ 1".into()));
    }
    if r > 22 {
        return Err(Error::CapExceeded { needed: 1u128 << r, cap: 1 << 22 });
    }
    let count = 1u64 << r;
    let points = (0..count)
        .map(|i| vec![i, bit_reverse(i, r)])
        .collect();
    Ok(BinaryNet { r, d: 2, t: 0, points })
}

fn bit_reverse(i: u64, bits: u32) -> u64 {
    let mut out = 0u64;
    for b in 0..bits {
        out |= ((i >> b) & 1) << (bits - 1 - b);
    }
    out
}

/// A dyadic box on which the net property fails.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetViolation {
    /// Box shape `(s_1, …, s_d)`: side lengths `2^{−s_j}`.
    pub shape: Vec<u32>,
    /// Box anchor: the box is `∏_j [a_j 2^{−s_j}, (a_j+1) 2^{−s_j})`.
    pub anchor: Vec<u64>,
    pub count: u64,
    pub expected: u64,
}

/// Checks the `(t, r, d)`-net property: every dyadic box of volume `2^{t−r}`
/// must contain exactly `2^t` points. Returns the first violating box in
/// (shape, anchor) lexicographic order, or `None` when the property holds.
pub fn verify_net_property(
    points: &[Vec<f64>],
    t: u32,
    r: u32,
    d: usize,
) -> Result<Option<NetViolation>> {
    if t > r {
        return Err(Error::InvalidParam("need t ≤ r".into()));
    }
    let expected_total = 1u64 << r;
    if points.len() as u64 != expected_total {
        return Err(Error::LengthMismatch { expected: expected_total as usize, got: points.len() });
    }
    for (i, p) in points.iter().enumerate() {
        if p.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: p.len() });
        }
        if p.iter().any(|&x| !(0.0..1.0).contains(&x)) {
            return Err(Error::InvalidParam(format!("point {i} outside [0,1)^d")));
        }
    }
    let expected = 1u64 << t;
    for shape in enumerate_shapes(r - t, d) {
        let sides: Vec<u32> = shape.entries().to_vec();
        let mut counts: std::collections::HashMap<Vec<u64>, u64> = std::collections::HashMap::new();
        for p in points {
            let cell: Vec<u64> = p
                .iter()
                .zip(&sides)
                .map(|(&x, &s)| (x * (1u64 << s) as f64).floor() as u64)
                .collect();
            *counts.entry(cell).or_insert(0) += 1;
        }
        // scan anchors in lexicographic order to report the first violation
        let mut anchor = vec![0u64; d];
        loop {
            let count = counts.get(&anchor).copied().unwrap_or(0);
            if count != expected {
                return Ok(Some(NetViolation {
                    shape: sides.clone(),
                    anchor: anchor.clone(),
                    count,
                    expected,
                }));
            }
            let mut axis = d;
            let mut done = false;
            loop {
                if axis == 0 {
                    done = true;
                    break;
                }
                axis -= 1;
                anchor[axis] += 1;
                if anchor[axis] < (1u64 << sides[axis]) {
                    break;
                }
                anchor[axis] = 0;
            }
            if done {
                break;
            }
        }
    }
    Ok(None)
}

/// Writes a point-set file: header `# d=<d> m=<m>`, then one node per line with
/// `d` space-separated decimal coordinates in `[0, 2π)`.
pub fn write_point_file(path: &Path, points: &[Vec<f64>]) -> Result<()> {
    let d = points.first().map_or(0, Vec::len);
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "# d={} m={}", d, points.len())?;
    for p in points {
        let parts: Vec<String> = p.iter().map(|x| format!("{x:?}")).collect();
        writeln!(out, "{}", parts.join(" "))?;
    }
    Ok(())
}

/// Reads a point-set file written by [`write_point_file`].
pub fn read_point_file(path: &Path) -> Result<Vec<Vec<f64>>> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty point file".into()))??;
    let (d, m) = parse_point_header(&header)?;
    let mut points = Vec::with_capacity(m);
    for (ln, line) in lines.enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let coords: std::result::Result<Vec<f64>, _> =
            line.split_whitespace().map(str::parse::<f64>).collect();
        let coords =
            coords.map_err(|e| Error::Parse(format!("line {}: {e}", ln + 2)))?;
        if coords.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: coords.len() });
        }
        points.push(coords);
    }
    if points.len() != m {
        return Err(Error::LengthMismatch { expected: m, got: points.len() });
    }
    Ok(points)
}

fn parse_point_header(header: &str) -> Result<(usize, usize)> {
    let body = header
        .strip_prefix('#')
        .ok_or_else(|| Error::Parse("point file must start with '# d=<d> m=<m>'".into()))?;
    let mut d = None;
    let mut m = None;
    for tok in body.split_whitespace() {
        if let Some(v) = tok.strip_prefix("d=") {
            d = Some(v.parse::<usize>().map_err(|e| Error::Parse(e.to_string()))?);
        } else if let Some(v) = tok.strip_prefix("m=") {
            m = Some(v.parse::<usize>().map_err(|e| Error::Parse(e.to_string()))?);
        }
    }
    match (d, m) {
        (Some(d), Some(m)) => Ok((d, m)),
        _ => Err(Error::Parse("point file header must carry d= and m=".into())),
    }
}

/// First aliased mode of a plain generator vector, used by tests and reports.
pub fn first_aliased_mode(m: u64, h: &[u64], modes: &[FrequencyVector]) -> Option<FrequencyVector> {
    modes
        .iter()
        .find(|k| !k.is_zero() && aliased(k.components(), h, m))
        .cloned()
}
