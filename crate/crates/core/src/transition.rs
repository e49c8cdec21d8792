//! Transition-state generation: per-group phase filtering, target-register
//! measurement, collapse, and assembly of the sparse survivor set with exact
//! phase exponents.
//!
//! The phase filter g_i(x_i) = a_i(x_i) mod 2^(n-1) acts on group i alone,
//! so measuring the m target registers factorizes: each group is enumerated
//! over its 2^m labels independently and the collapsed data register is the
//! Cartesian product of the per-group survivor sets. This costs m·2^m
//! instead of 2^(m²), which is what keeps desk-scale widths feasible.
//!
//! Exponents a(x) are stored without the slope; only the measurement
//! routines in [`crate::pipeline`] ever multiply by s.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::Rng;

use crate::error::{Error, Result};
use crate::numeric::mod_pow2;
use crate::phase::GroupState;

/// Default cap on the assembled survivor product.
pub const DEFAULT_SUPPORT_CAP: u64 = 1 << 24;

/// Post-measurement support of one group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupSupport {
    pub group_index: usize,
    /// Surviving labels with their exact phase-function values, ascending by label.
    pub survivors: Vec<(u32, BigUint)>,
    /// Measured residue c_i of the target register, below 2^(n-1).
    pub measured: BigUint,
}

/// One surviving basis label of the collapsed data register.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Survivor {
    /// Per-group labels (x_1, ..., x_m).
    pub labels: Vec<u32>,
    /// Phase exponent; after global-phase elimination this is 0 or 2^(n-1).
    pub exponent: BigUint,
}

/// The collapsed superposition, with the global phase already eliminated.
#[derive(Debug, Clone)]
pub struct TransitionState {
    pub n: u32,
    /// Σ c_i mod 2^(n-1).
    pub c: BigUint,
    /// The subtracted reference exponent min_x a'(x).
    pub reference_exponent: BigUint,
    /// Survivors in lexicographic label order, exponents relative to the reference.
    pub survivors: Vec<Survivor>,
}

/// Exact phase-function values of a group, indexed by label.
pub fn group_value_table(group: &GroupState) -> Vec<BigUint> {
    let m = group.arity();
    assert!(m <= 26, "per-group enumeration capped at 26 qubits");
    let size = 1usize << m;
    let mut values = vec![BigUint::zero(); size];
    for label in 1..size {
        let low = label.trailing_zeros() as usize;
        values[label] = &values[label & (label - 1)] + &group.coefficients[low];
    }
    values
}

/// The survivors a given measurement outcome would leave in one group.
pub fn filter_with_outcome(group: &GroupState, n: u32, outcome: &BigUint) -> GroupSupport {
    let values = group_value_table(group);
    let survivors = values
        .into_iter()
        .enumerate()
        .filter(|(_, v)| mod_pow2(v, n as u64 - 1) == *outcome)
        .map(|(label, v)| (label as u32, v))
        .collect();
    GroupSupport {
        group_index: group.index,
        survivors,
        measured: outcome.clone(),
    }
}

/// Apply the phase filter to one group and measure its target register.
///
/// The outcome c_i is drawn with probability proportional to the number of
/// labels mapping to it (the amplitudes are uniform), and exactly the labels
/// with g_i(x_i) = c_i survive.
pub fn apply_phase_filter<R: Rng + ?Sized>(group: &GroupState, n: u32, rng: &mut R) -> GroupSupport {
    let values = group_value_table(group);
    let drawn = rng.gen_range(0..values.len());
    let outcome = mod_pow2(&values[drawn], n as u64 - 1);
    let survivors = values
        .into_iter()
        .enumerate()
        .filter(|(_, v)| mod_pow2(v, n as u64 - 1) == outcome)
        .map(|(label, v)| (label as u32, v))
        .collect();
    GroupSupport {
        group_index: group.index,
        survivors,
        measured: outcome,
    }
}

/// Assemble the collapsed state from the per-group supports.
///
/// The survivor set is the Cartesian product of the per-group survivor sets;
/// each survivor's exponent is Σ_i a_i(x_i) mod 2^n. The minimum exponent is
/// subtracted so every stored exponent is 0 or 2^(n-1).
pub fn assemble_transition(
    supports: &[GroupSupport],
    n: u32,
    support_cap: u64,
) -> Result<TransitionState> {
    assert!(!supports.is_empty());
    assert!(supports.iter().all(|s| !s.survivors.is_empty()));

    let mut size: u128 = 1;
    for s in supports {
        size = size.saturating_mul(s.survivors.len() as u128);
    }
    if size > support_cap as u128 {
        return Err(Error::SupportTooLarge {
            size,
            cap: support_cap,
        });
    }

    let mut c = BigUint::zero();
    for s in supports {
        c += &s.measured;
    }
    c = mod_pow2(&c, n as u64 - 1);

    // Cartesian product in lexicographic label order (last group fastest).
    let mut survivors = Vec::with_capacity(size as usize);
    let mut indices = vec![0usize; supports.len()];
    let mut done = false;
    while !done {
        let mut exponent = BigUint::zero();
        let mut labels = Vec::with_capacity(supports.len());
        for (s, &i) in supports.iter().zip(&indices) {
            let (label, value) = &s.survivors[i];
            labels.push(*label);
            exponent += value;
        }
        survivors.push(Survivor {
            labels,
            exponent: mod_pow2(&exponent, n as u64),
        });
        done = true;
        for pos in (0..supports.len()).rev() {
            indices[pos] += 1;
            if indices[pos] < supports[pos].survivors.len() {
                done = false;
                break;
            }
            indices[pos] = 0;
        }
    }

    let reference = survivors
        .iter()
        .map(|s| s.exponent.clone())
        .min()
        .expect("non-empty product");
    for s in &mut survivors {
        s.exponent -= &reference;
    }

    Ok(TransitionState {
        n,
        c,
        reference_exponent: reference,
        survivors,
    })
}

/// τ, the number of surviving basis labels.
pub fn survivor_tau(state: &TransitionState) -> usize {
    state.survivors.len()
}

// ---------------------------------------------------------------------------
// Global congruence model
// ---------------------------------------------------------------------------
//
// The success-probability analysis treats the collapse constraint as a single
// congruence a(x) ≡ c mod 2^(n-1) over all 2^(m²) labels with the residue c
// drawn independently of the coefficients. The helpers below count and
// enumerate the solutions of that model exactly, meeting in the middle over
// the two halves of the groups so the cost is square-root of the label space.

fn half_residue_counts(
    groups: &[GroupState],
    modulus_bits: u64,
) -> BTreeMap<BigUint, BigUint> {
    let mut counts: BTreeMap<BigUint, BigUint> = BTreeMap::new();
    let mut stack: Vec<BigUint> = vec![BigUint::zero()];
    for g in groups {
        let values = group_value_table(g);
        let mut next = Vec::with_capacity(stack.len() * values.len());
        for acc in &stack {
            for v in &values {
                next.push(acc + v);
            }
        }
        stack = next;
    }
    for sum in stack {
        *counts.entry(mod_pow2(&sum, modulus_bits)).or_default() += BigUint::one();
    }
    counts
}

/// Number of labels x with a(x) ≡ target mod 2^(n-1).
pub fn congruence_solution_count(groups: &[GroupState], target: &BigUint, n: u32) -> BigUint {
    let bits = n as u64 - 1;
    let modulus = crate::numeric::pow2(bits);
    let mid = groups.len().div_ceil(2);
    let left = half_residue_counts(&groups[..mid], bits);
    let right = half_residue_counts(&groups[mid..], bits);
    let mut total = BigUint::zero();
    for (r, count) in &left {
        let want = (target + &modulus - r) % &modulus;
        if let Some(other) = right.get(&want) {
            total += count * other;
        }
    }
    total
}

/// All labels solving a(x) ≡ target mod 2^(n-1), with exact exponents mod 2^n,
/// in lexicographic label order. Errors if more than `cap` solutions exist.
pub fn enumerate_congruence_solutions(
    groups: &[GroupState],
    target: &BigUint,
    n: u32,
    cap: u64,
) -> Result<Vec<Survivor>> {
    let bits = n as u64 - 1;
    let modulus = crate::numeric::pow2(bits);
    let mid = groups.len().div_ceil(2);

    // Right half: residue → list of (label tuple, exact sum).
    let mut right: BTreeMap<BigUint, Vec<(Vec<u32>, BigUint)>> = BTreeMap::new();
    let mut stack: Vec<(Vec<u32>, BigUint)> = vec![(Vec::new(), BigUint::zero())];
    for g in &groups[mid..] {
        let values = group_value_table(g);
        let mut next = Vec::with_capacity(stack.len() * values.len());
        for (labels, acc) in &stack {
            for (label, v) in values.iter().enumerate() {
                let mut ls = labels.clone();
                ls.push(label as u32);
                next.push((ls, acc + v));
            }
        }
        stack = next;
    }
    for (labels, sum) in stack {
        right
            .entry(mod_pow2(&sum, bits))
            .or_default()
            .push((labels, sum));
    }

    // Left half combos, joined against the complementary residue.
    let mut left: Vec<(Vec<u32>, BigUint)> = vec![(Vec::new(), BigUint::zero())];
    for g in &groups[..mid] {
        let values = group_value_table(g);
        let mut next = Vec::with_capacity(left.len() * values.len());
        for (labels, acc) in &left {
            for (label, v) in values.iter().enumerate() {
                let mut ls = labels.clone();
                ls.push(label as u32);
                next.push((ls, acc + v));
            }
        }
        left = next;
    }

    let mut solutions = Vec::new();
    for (labels, sum) in &left {
        let want = (target + &modulus - mod_pow2(sum, bits)) % &modulus;
        if let Some(matches) = right.get(&want) {
            for (rlabels, rsum) in matches {
                if solutions.len() as u64 >= cap {
                    return Err(Error::SupportTooLarge {
                        size: cap as u128 + 1,
                        cap,
                    });
                }
                let mut full = labels.clone();
                full.extend_from_slice(rlabels);
                solutions.push(Survivor {
                    labels: full,
                    exponent: mod_pow2(&(sum + rsum), n as u64),
                });
            }
        }
    }
    solutions.sort_by(|a, b| a.labels.cmp(&b.labels));
    Ok(solutions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::pow2;
    use crate::phase::{build_groups, group_count, PhaseState};
    use crate::rng;

    fn group(coeffs: &[u64]) -> GroupState {
        GroupState {
            index: 0,
            coefficients: coeffs.iter().map(|&c| BigUint::from(c)).collect(),
        }
    }

    #[test]
    fn filter_worked_example() {
        // n=4, a=(3,5): g values are {00→0, 10→3, 01→5, 11→0}.
        let g = group(&[3, 5]);
        let values = group_value_table(&g);
        assert_eq!(
            values,
            vec![
                BigUint::from(0u32),
                BigUint::from(3u32),
                BigUint::from(5u32),
                BigUint::from(8u32)
            ]
        );
        let support = filter_with_outcome(&g, 4, &BigUint::zero());
        let labels: Vec<u32> = support.survivors.iter().map(|(l, _)| *l).collect();
        assert_eq!(labels, vec![0, 3]);

        // Outcome 0 carries probability 1/2: exactly 2 of 4 labels map to it.
        let mut hits = 0u32;
        let mut r = rng::derive(7, &[]);
        for _ in 0..4000 {
            if apply_phase_filter(&g, 4, &mut r).measured == BigUint::zero() {
                hits += 1;
            }
        }
        let freq = hits as f64 / 4000.0;
        assert!((freq - 0.5).abs() < 3.0 * (0.25f64 / 4000.0).sqrt());
    }

    #[test]
    fn filter_single_label_outcome() {
        // a=(1,2), n=4: outcome 3 leaves only label 11.
        let g = group(&[1, 2]);
        let support = filter_with_outcome(&g, 4, &BigUint::from(3u32));
        assert_eq!(support.survivors, vec![(3, BigUint::from(3u32))]);
    }

    #[test]
    fn filter_all_zero_coefficients() {
        let g = group(&[0, 0, 0]);
        let mut r = rng::derive(9, &[]);
        let support = apply_phase_filter(&g, 9, &mut r);
        assert_eq!(support.measured, BigUint::zero());
        assert_eq!(support.survivors.len(), 8);
    }

    #[test]
    fn measurement_distribution_matches_multiplicity() {
        // a=(3,5,3), n=5: value multiset {0,3,5,3,8,6,8,11} mod 16.
        let g = group(&[3, 5, 3]);
        let values = group_value_table(&g);
        let mut expected: BTreeMap<BigUint, u32> = BTreeMap::new();
        for v in &values {
            *expected.entry(mod_pow2(v, 4)).or_default() += 1;
        }
        let trials = 8000;
        let mut observed: BTreeMap<BigUint, u32> = BTreeMap::new();
        let mut r = rng::derive(21, &[]);
        for _ in 0..trials {
            *observed
                .entry(apply_phase_filter(&g, 5, &mut r).measured)
                .or_default() += 1;
        }
        for (outcome, mult) in &expected {
            let p = *mult as f64 / 8.0;
            let got = *observed.get(outcome).unwrap_or(&0) as f64 / trials as f64;
            let sigma = (p * (1.0 - p) / trials as f64).sqrt();
            assert!(
                (got - p).abs() < 3.0 * sigma,
                "outcome {outcome}: got {got}, want {p}"
            );
        }
    }

    #[test]
    fn assemble_product_and_elimination() {
        let s1 = GroupSupport {
            group_index: 0,
            survivors: vec![(0, BigUint::from(3u32)), (3, BigUint::from(11u32))],
            measured: BigUint::from(3u32),
        };
        let s2 = GroupSupport {
            group_index: 1,
            survivors: vec![(1, BigUint::zero()), (2, BigUint::from(8u32))],
            measured: BigUint::zero(),
        };
        let state = assemble_transition(&[s1, s2], 4, DEFAULT_SUPPORT_CAP).unwrap();
        assert_eq!(survivor_tau(&state), 4);
        assert_eq!(state.c, BigUint::from(3u32));
        // Exponents before elimination: 3, 11, 11, 19 mod 16 = {3, 11, 11, 3};
        // reference 3, stored {0, 8, 8, 0}.
        assert_eq!(state.reference_exponent, BigUint::from(3u32));
        let exps: Vec<BigUint> = state.survivors.iter().map(|s| s.exponent.clone()).collect();
        assert_eq!(
            exps,
            vec![
                BigUint::zero(),
                BigUint::from(8u32),
                BigUint::from(8u32),
                BigUint::zero()
            ]
        );
        // Lexicographic label order, group 0 most significant.
        let labels: Vec<Vec<u32>> = state.survivors.iter().map(|s| s.labels.clone()).collect();
        assert_eq!(labels, vec![vec![0, 1], vec![0, 2], vec![3, 1], vec![3, 2]]);
    }

    #[test]
    fn support_cap_enforced() {
        let s = GroupSupport {
            group_index: 0,
            survivors: (0..8u32).map(|l| (l, BigUint::zero())).collect(),
            measured: BigUint::zero(),
        };
        let supports = vec![s.clone(), s.clone(), s];
        let err = assemble_transition(&supports, 9, 100).unwrap_err();
        assert!(matches!(err, Error::SupportTooLarge { size: 512, cap: 100 }));
    }

    #[test]
    fn exponents_all_zero_or_half_modulus() {
        for n in [4u32, 6, 9] {
            let m = group_count(n);
            for trial in 0..200u64 {
                let mut r = rng::derive(33, &[n as u64, trial]);
                let states: Vec<PhaseState> = (0..m * m)
                    .map(|_| PhaseState {
                        n,
                        k: rng::gen_biguint_below_pow2(&mut r, n),
                    })
                    .collect();
                let groups = build_groups(&states, n).unwrap();
                let supports: Vec<GroupSupport> = groups
                    .iter()
                    .map(|g| apply_phase_filter(g, n, &mut r))
                    .collect();
                let state = assemble_transition(&supports, n, DEFAULT_SUPPORT_CAP).unwrap();
                let half = pow2(n as u64 - 1);
                for s in &state.survivors {
                    assert!(s.exponent.is_zero() || s.exponent == half);
                }
            }
        }
    }

    /// The assembled survivor set must equal the brute-force filter over all
    /// 2^(m²) labels under the per-group constraints.
    #[test]
    fn assembly_matches_exhaustive_filter() {
        for n in [4u32, 6, 9] {
            let m = group_count(n);
            for trial in 0..50u64 {
                let mut r = rng::derive(44, &[n as u64, trial]);
                let states: Vec<PhaseState> = (0..m * m)
                    .map(|_| PhaseState {
                        n,
                        k: rng::gen_biguint_below_pow2(&mut r, n),
                    })
                    .collect();
                let groups = build_groups(&states, n).unwrap();
                let supports: Vec<GroupSupport> = groups
                    .iter()
                    .map(|g| apply_phase_filter(g, n, &mut r))
                    .collect();
                let state = assemble_transition(&supports, n, DEFAULT_SUPPORT_CAP).unwrap();

                let mut expected: Vec<Vec<u32>> = Vec::new();
                let total_bits = m * m;
                for joint in 0..(1u64 << total_bits) {
                    let labels: Vec<u32> = (0..m)
                        .map(|i| ((joint >> (i * m)) & ((1 << m) - 1)) as u32)
                        .collect();
                    let ok = groups.iter().zip(&labels).zip(&supports).all(
                        |((g, &label), support)| {
                            mod_pow2(&g.phase_value(label), n as u64 - 1) == support.measured
                        },
                    );
                    if ok {
                        expected.push(labels);
                    }
                }
                expected.sort();
                let got: Vec<Vec<u32>> =
                    state.survivors.iter().map(|s| s.labels.clone()).collect();
                assert_eq!(got, expected, "n={n} trial={trial}");
            }
        }
    }

    #[test]
    fn congruence_count_matches_brute_force() {
        for n in [4u32, 6, 9] {
            let m = group_count(n);
            for trial in 0..100u64 {
                let mut r = rng::derive(55, &[n as u64, trial]);
                let states: Vec<PhaseState> = (0..m * m)
                    .map(|_| PhaseState {
                        n,
                        k: rng::gen_biguint_below_pow2(&mut r, n),
                    })
                    .collect();
                let groups = build_groups(&states, n).unwrap();
                let target = rng::gen_biguint_below_pow2(&mut r, n - 1);

                let fast = congruence_solution_count(&groups, &target, n);
                let mut brute = 0u64;
                for joint in 0..(1u64 << (m * m)) {
                    let mut a = BigUint::zero();
                    for (i, g) in groups.iter().enumerate() {
                        a += g.phase_value(((joint >> (i * m)) & ((1 << m) - 1)) as u32);
                    }
                    if mod_pow2(&a, n as u64 - 1) == target {
                        brute += 1;
                    }
                }
                assert_eq!(fast, BigUint::from(brute), "n={n} trial={trial}");

                let listed =
                    enumerate_congruence_solutions(&groups, &target, n, 1 << 24).unwrap();
                assert_eq!(BigUint::from(listed.len()), fast);
                for s in &listed {
                    let mut a = BigUint::zero();
                    for (g, &label) in groups.iter().zip(&s.labels) {
                        a += g.phase_value(label);
                    }
                    assert_eq!(mod_pow2(&a, n as u64 - 1), target);
                    assert_eq!(mod_pow2(&a, n as u64), s.exponent);
                }
            }
        }
    }
}
