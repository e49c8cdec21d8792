//! Low-density subset sum solving in the Lagarias–Odlyzko style: embed the
//! instance into a lattice, LLL-reduce, and scan the reduced rows for a
//! {0,1}-pattern short vector, on both the instance and its complement.
//! Every emitted solution is verified by substitution, so the solver can
//! miss but never lie.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::lattice::{lll_reduce, IntBasis, LllDelta};
use crate::numeric::{log2, mod_pow2, pow2};

/// Cap for exhaustive enumeration.
pub const BRUTE_FORCE_MAX_M: usize = 24;

/// A subset sum instance: positive weights and a nonnegative target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsetSumInstance {
    weights: Vec<BigUint>,
    target: BigUint,
}

impl SubsetSumInstance {
    pub fn new(weights: Vec<BigUint>, target: BigUint) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidConfig("need at least one weight".into()));
        }
        if weights.iter().any(|w| w.is_zero()) {
            return Err(Error::InvalidConfig("weights must be positive".into()));
        }
        Ok(Self { weights, target })
    }

    pub fn weights(&self) -> &[BigUint] {
        &self.weights
    }

    pub fn target(&self) -> &BigUint {
        &self.target
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weight_sum(&self) -> BigUint {
        self.weights.iter().sum()
    }

    pub fn max_weight(&self) -> &BigUint {
        self.weights.iter().max().expect("non-empty")
    }

    /// Check a candidate by substitution: Σ a_i x_i = target exactly.
    pub fn verify(&self, bits: &[u8]) -> bool {
        if bits.len() != self.weights.len() {
            return false;
        }
        let sum: BigUint = self
            .weights
            .iter()
            .zip(bits)
            .filter(|(_, &b)| b == 1)
            .map(|(w, _)| w)
            .sum();
        sum == self.target
    }
}

/// Density d = m / log2(max a_i).
pub fn density(inst: &SubsetSumInstance) -> Result<f64> {
    let max = inst.max_weight();
    if *max < BigUint::from(2u32) {
        return Err(Error::DegenerateWeights);
    }
    Ok(inst.len() as f64 / log2(max))
}

/// How the embedding scale λ is chosen.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum LambdaPolicy {
    /// Smallest power of two exceeding √(m+1)·2^b, where 2^b bounds the
    /// weights. Any reduced vector shorter than λ then has a zero last
    /// coordinate, so the pattern scan is sound.
    #[default]
    Auto,
    Fixed(BigUint),
}

impl fmt::Display for LambdaPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Auto => write!(f, "auto"),
            Self::Fixed(v) => write!(f, "{v}"),
        }
    }
}

impl FromStr for LambdaPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("auto") {
            return Ok(Self::Auto);
        }
        let v = BigUint::from_str(t)
            .map_err(|_| Error::InvalidConfig(format!("bad lambda policy '{s}'")))?;
        if v.is_zero() {
            return Err(Error::InvalidConfig("lambda must be positive".into()));
        }
        Ok(Self::Fixed(v))
    }
}

/// Smallest power of two λ with λ² > (m+1)·2^(2·weight_bits).
pub fn default_lambda(m: usize, weight_bits: u64) -> BigUint {
    let bound = BigUint::from(m as u64 + 1) << (2 * weight_bits);
    let mut lambda = BigUint::one();
    while &lambda * &lambda <= bound {
        lambda <<= 1;
    }
    lambda
}

fn resolve_lambda(policy: &LambdaPolicy, m: usize, weight_bits: u64) -> BigUint {
    match policy {
        LambdaPolicy::Auto => default_lambda(m, weight_bits),
        LambdaPolicy::Fixed(v) => v.clone(),
    }
}

/// The Lagarias–Odlyzko embedding basis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeBasis {
    pub rows: IntBasis,
    pub lambda: BigUint,
}

/// Build the embedding: row i (i < m) is the i-th unit vector with last
/// coordinate λ·a_i; the final row is all zeros with last coordinate λ·M.
/// A solution x corresponds to the lattice vector Σ x_i b_i − b_{m+1} =
/// (x_1, ..., x_m, 0) of norm at most √m.
pub fn build_lo_lattice(inst: &SubsetSumInstance, lambda: &BigUint) -> LatticeBasis {
    let m = inst.len();
    let lam = BigInt::from(lambda.clone());
    let mut rows: IntBasis = Vec::with_capacity(m + 1);
    for (i, w) in inst.weights().iter().enumerate() {
        let mut row = vec![BigInt::zero(); m + 1];
        row[i] = BigInt::one();
        row[m] = &lam * BigInt::from(w.clone());
        rows.push(row);
    }
    let mut last = vec![BigInt::zero(); m + 1];
    last[m] = &lam * BigInt::from(inst.target().clone());
    rows.push(last);
    LatticeBasis {
        rows,
        lambda: lambda.clone(),
    }
}

/// A verified solution, optionally tagged with the shift index t that
/// produced its target in a congruence solve.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct SvSolution {
    pub bits: Vec<u8>,
    pub shift_index: Option<u32>,
}

/// Reduce one embedding lattice and scan every row and its negation for the
/// pattern (x ∈ {0,1}^m, last coordinate 0), keeping only candidates that
/// verify by substitution.
pub fn lo_pattern_scan(
    inst: &SubsetSumInstance,
    delta: LllDelta,
    lambda: &BigUint,
) -> Vec<Vec<u8>> {
    let m = inst.len();
    let basis = build_lo_lattice(inst, lambda);
    let reduced = match lll_reduce(&basis.rows, delta) {
        Ok(r) => r,
        Err(_) => return Vec::new(),
    };
    let mut found = BTreeSet::new();
    for row in &reduced {
        'signs: for sign in [1i64, -1] {
            if !row[m].is_zero() {
                continue;
            }
            let mut bits = Vec::with_capacity(m);
            for v in &row[..m] {
                let v = v * sign;
                if v.is_zero() {
                    bits.push(0u8);
                } else if v.is_one() {
                    bits.push(1u8);
                } else {
                    continue 'signs;
                }
            }
            if inst.verify(&bits) {
                found.insert(bits);
            }
        }
    }
    found.into_iter().collect()
}

/// Algorithm SV: pattern scan on the instance and on its complement
/// (weights unchanged, target Σa_i − M, bits flipped back). NotFound is a
/// legitimate outcome (the method is heuristic) but every returned
/// solution is exact.
pub fn sv_solve(
    inst: &SubsetSumInstance,
    delta: LllDelta,
    lambda_policy: &LambdaPolicy,
) -> Vec<SvSolution> {
    let m = inst.len();
    let sum_all = inst.weight_sum();
    let mut found: BTreeSet<Vec<u8>> = BTreeSet::new();

    if inst.target().is_zero() {
        // The empty subset; the embedding degenerates (zero target row).
        found.insert(vec![0u8; m]);
    } else if *inst.target() <= sum_all {
        let lambda = resolve_lambda(lambda_policy, m, inst.max_weight().bits());
        for bits in lo_pattern_scan(inst, delta, &lambda) {
            found.insert(bits);
        }

        let comp_target = &sum_all - inst.target();
        if comp_target.is_zero() {
            found.insert(vec![1u8; m]);
        } else {
            let comp =
                SubsetSumInstance::new(inst.weights().to_vec(), comp_target).expect("same weights");
            for bits in lo_pattern_scan(&comp, delta, &lambda) {
                let flipped: Vec<u8> = bits.iter().map(|&b| 1 - b).collect();
                if inst.verify(&flipped) {
                    found.insert(flipped);
                }
            }
        }
    }

    found
        .into_iter()
        .map(|bits| SvSolution {
            bits,
            shift_index: None,
        })
        .collect()
}

/// Solve a_1 x_1 + ... + a_m x_m ≡ c (mod 2^(n-1)) by lifting to the
/// targets M = c + t·2^(n-1) for t in [0, 2m) and calling SV on each.
///
/// Zero weights are allowed here (their bits are free and expanded after
/// solving the positive-weight core). Solutions are deduplicated by bit
/// vector and ordered by (t, bits).
pub fn solve_congruence(
    weights: &[BigUint],
    c: &BigUint,
    n: u32,
    delta: LllDelta,
    lambda_policy: &LambdaPolicy,
) -> Vec<SvSolution> {
    let m = weights.len();
    let modulus = pow2(n as u64 - 1);
    let nonzero_idx: Vec<usize> = (0..m).filter(|&i| !weights[i].is_zero()).collect();
    let zero_idx: Vec<usize> = (0..m).filter(|&i| weights[i].is_zero()).collect();
    let core_weights: Vec<BigUint> = nonzero_idx.iter().map(|&i| weights[i].clone()).collect();
    let sum_all: BigUint = core_weights.iter().sum();

    // Weights below 2^n, so λ from the register width covers every target.
    let policy = match lambda_policy {
        LambdaPolicy::Auto => LambdaPolicy::Fixed(default_lambda(m, n as u64)),
        fixed => fixed.clone(),
    };

    let mut seen: BTreeSet<Vec<u8>> = BTreeSet::new();
    let mut out = Vec::new();
    for t in 0..(2 * m as u32) {
        let target = c + &modulus * BigUint::from(t);
        if target > sum_all {
            break;
        }
        let core_solutions: Vec<Vec<u8>> = if core_weights.is_empty() {
            if target.is_zero() {
                vec![Vec::new()]
            } else {
                continue;
            }
        } else {
            let inst = SubsetSumInstance::new(core_weights.clone(), target).expect("positive");
            sv_solve(&inst, delta, &policy)
                .into_iter()
                .map(|s| s.bits)
                .collect()
        };
        for core in core_solutions {
            for free in 0..(1u64 << zero_idx.len()) {
                let mut bits = vec![0u8; m];
                for (pos, &i) in nonzero_idx.iter().enumerate() {
                    bits[i] = core[pos];
                }
                for (pos, &i) in zero_idx.iter().enumerate() {
                    bits[i] = ((free >> pos) & 1) as u8;
                }
                if seen.insert(bits.clone()) {
                    out.push(SvSolution {
                        bits,
                        shift_index: Some(t),
                    });
                }
            }
        }
    }
    out.sort_by(|a, b| (a.shift_index, &a.bits).cmp(&(b.shift_index, &b.bits)));
    out
}

/// Exhaustive congruence solve for validation; complete for m ≤ 24.
pub fn solve_congruence_exhaustive(
    weights: &[BigUint],
    c: &BigUint,
    n: u32,
) -> Result<Vec<SvSolution>> {
    let m = weights.len();
    if m > BRUTE_FORCE_MAX_M {
        return Err(Error::TooLarge {
            m,
            cap: BRUTE_FORCE_MAX_M,
        });
    }
    let modulus = pow2(n as u64 - 1);
    let mut out = Vec::new();
    let mut bits = vec![0u8; m];
    let mut current = BigUint::zero();
    let check = |bits: &[u8], sum: &BigUint, out: &mut Vec<SvSolution>| {
        if mod_pow2(sum, n as u64 - 1) == *c {
            let t = ((sum - c) / &modulus)
                .try_into()
                .expect("shift index fits u32");
            out.push(SvSolution {
                bits: bits.to_vec(),
                shift_index: Some(t),
            });
        }
    };
    check(&bits, &current, &mut out);
    for i in 1..(1u64 << m) {
        let bit = i.trailing_zeros() as usize;
        if bits[bit] == 0 {
            bits[bit] = 1;
            current += &weights[bit];
        } else {
            bits[bit] = 0;
            current -= &weights[bit];
        }
        check(&bits, &current, &mut out);
    }
    out.sort_by(|a, b| (a.shift_index, &a.bits).cmp(&(b.shift_index, &b.bits)));
    Ok(out)
}

/// All solutions of the instance by exhaustive enumeration (m ≤ 24).
pub fn brute_force_subset_sum(inst: &SubsetSumInstance) -> Result<Vec<Vec<u8>>> {
    let m = inst.len();
    if m > BRUTE_FORCE_MAX_M {
        return Err(Error::TooLarge {
            m,
            cap: BRUTE_FORCE_MAX_M,
        });
    }
    let mut out = Vec::new();
    let mut bits = vec![0u8; m];
    let mut current = BigUint::zero();
    if current == *inst.target() {
        out.push(bits.clone());
    }
    for i in 1..(1u64 << m) {
        let bit = i.trailing_zeros() as usize;
        if bits[bit] == 0 {
            bits[bit] = 1;
            current += &inst.weights()[bit];
        } else {
            bits[bit] = 0;
            current -= &inst.weights()[bit];
        }
        if current == *inst.target() {
            out.push(bits.clone());
        }
    }
    out.sort();
    Ok(out)
}
