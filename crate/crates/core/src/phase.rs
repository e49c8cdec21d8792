//! Phase-state sampling and grouping.
//!
//! A phase state |0⟩ + e^(2πiks/2^n)|1⟩ is represented purely by its
//! classically known index k; the slope never enters. m = ⌈√n⌉ groups of m
//! states each are tensored together conceptually, so the joint state is
//! carried as the m×m coefficient matrix alone.

use num_bigint::BigUint;
use rand::Rng;

use crate::dihedral::HiddenInstance;
use crate::error::{Error, Result};
use crate::numeric::ceil_sqrt;
use crate::rng::gen_biguint_below_pow2;

/// A sampled phase state, identified by its index k < 2^n.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhaseState {
    pub n: u32,
    pub k: BigUint,
}

/// One group of m tensored phase states: the coefficient vector
/// (a_i1, ..., a_im) of its phase function a_i(x_i) = Σ_j a_ij x_ij.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupState {
    pub index: usize,
    pub coefficients: Vec<BigUint>,
}

impl GroupState {
    /// Number of qubits in this group.
    pub fn arity(&self) -> usize {
        self.coefficients.len()
    }

    /// Exact phase-function value for a basis label. Bit j of the label is
    /// the j-th binary coordinate x_{i,j+1}.
    pub fn phase_value(&self, label: u32) -> BigUint {
        let mut acc = BigUint::default();
        for (j, coeff) in self.coefficients.iter().enumerate() {
            if (label >> j) & 1 == 1 {
                acc += coeff;
            }
        }
        acc
    }
}

/// Number of groups (and states per group) for width n.
pub fn group_count(n: u32) -> usize {
    ceil_sqrt(n) as usize
}

/// Sample one phase state: k uniform on [0, 2^n).
///
/// This is the shortcut path; it is distribution-identical to
/// [`crate::dihedral::coset_fourier_sample`], which is what makes recording
/// only k sound.
pub fn sample_phase_state<R: Rng + ?Sized>(inst: &HiddenInstance, rng: &mut R) -> PhaseState {
    PhaseState {
        n: inst.width(),
        k: gen_biguint_below_pow2(rng, inst.width()),
    }
}

/// Pack m² sampled states into m groups of m coefficients, in order:
/// group i takes states [i·m, (i+1)·m).
pub fn build_groups(states: &[PhaseState], n: u32) -> Result<Vec<GroupState>> {
    let m = group_count(n);
    if states.len() != m * m {
        return Err(Error::ArityMismatch {
            expected: m * m,
            got: states.len(),
            groups: m,
        });
    }
    Ok((0..m)
        .map(|i| GroupState {
            index: i,
            coefficients: states[i * m..(i + 1) * m]
                .iter()
                .map(|s| s.k.clone())
                .collect(),
        })
        .collect())
}
