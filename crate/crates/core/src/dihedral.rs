//! Exact arithmetic in the dihedral group D_N for N = 2^n, the hidden
//! reflection oracle, and a full state-vector Fourier sampling path used to
//! validate the shortcut phase sampler at small widths.

use std::sync::atomic::{AtomicU64, Ordering};

use num_bigint::BigUint;
use num_complex::Complex64;
use num_traits::{ToPrimitive, Zero};
use rand::Rng;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::numeric::{mod_pow2, pow2};

/// Widest register the dense state-vector path will simulate.
pub const FULL_SIM_MAX_WIDTH: u32 = 10;

/// Group element x^a y^b of D_N, stored as (rotation, reflection flag).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DihedralElement {
    pub rotation: BigUint,
    pub reflection: bool,
}

impl DihedralElement {
    pub fn new(rotation: BigUint, reflection: bool, n: u32) -> Self {
        Self {
            rotation: mod_pow2(&rotation, n as u64),
            reflection,
        }
    }

    pub fn identity() -> Self {
        Self {
            rotation: BigUint::zero(),
            reflection: false,
        }
    }
}

/// Semi-direct product law: (a1, b1)(a2, b2) = (a1 + (-1)^b1 a2, b1 ⊕ b2).
pub fn compose(g: &DihedralElement, h: &DihedralElement, n: u32) -> DihedralElement {
    let modulus = pow2(n as u64);
    let rotation = if g.reflection {
        // a1 - a2 mod 2^n
        (mod_pow2(&g.rotation, n as u64) + &modulus - mod_pow2(&h.rotation, n as u64)) % &modulus
    } else {
        (&g.rotation + &h.rotation) % &modulus
    };
    DihedralElement {
        rotation,
        reflection: g.reflection ^ h.reflection,
    }
}

/// Inverse under [`compose`].
pub fn inverse(g: &DihedralElement, n: u32) -> DihedralElement {
    if g.reflection {
        g.clone()
    } else {
        let modulus = pow2(n as u64);
        DihedralElement {
            rotation: (&modulus - mod_pow2(&g.rotation, n as u64)) % &modulus,
            reflection: false,
        }
    }
}

/// The hidden problem instance: register width n and the secret slope s.
///
/// The slope is only legible through [`HiddenInstance::slope`], which counts
/// every access. Classical post-processing must not touch it; the counter
/// lets tests audit that only the measurement routines do.
#[derive(Debug)]
pub struct HiddenInstance {
    width: u32,
    slope: BigUint,
    slope_reads: AtomicU64,
}

impl Clone for HiddenInstance {
    fn clone(&self) -> Self {
        Self {
            width: self.width,
            slope: self.slope.clone(),
            slope_reads: AtomicU64::new(0),
        }
    }
}

impl HiddenInstance {
    pub fn new(width: u32, slope: BigUint) -> Result<Self> {
        if width < 2 {
            return Err(Error::InvalidConfig(format!(
                "register width must be at least 2, got {width}"
            )));
        }
        if slope.bits() > width as u64 {
            return Err(Error::InvalidConfig(format!(
                "slope must be below 2^{width}"
            )));
        }
        Ok(Self {
            width,
            slope,
            slope_reads: AtomicU64::new(0),
        })
    }

    /// Draw a random instance of the given width.
    pub fn random<R: Rng + ?Sized>(width: u32, rng: &mut R) -> Result<Self> {
        let slope = crate::rng::gen_biguint_below_pow2(rng, width);
        Self::new(width, slope)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    /// N = 2^n.
    pub fn modulus(&self) -> BigUint {
        pow2(self.width as u64)
    }

    /// The secret slope. Every call is counted; see [`HiddenInstance::slope_reads`].
    pub fn slope(&self) -> &BigUint {
        self.slope_reads.fetch_add(1, Ordering::Relaxed);
        &self.slope
    }

    /// Parity of the slope (reads the slope).
    pub fn parity(&self) -> u8 {
        if self.slope().bit(0) {
            1
        } else {
            0
        }
    }

    /// How many times the slope has been read since construction.
    pub fn slope_reads(&self) -> u64 {
        self.slope_reads.load(Ordering::Relaxed)
    }

    /// The reflection generating the hidden subgroup, H = {identity, (s, 1)}.
    pub fn hidden_reflection(&self) -> DihedralElement {
        DihedralElement {
            rotation: self.slope().clone(),
            reflection: true,
        }
    }

    /// The two-element coset of g under the hidden subgroup.
    pub fn coset(&self, g: &DihedralElement) -> [DihedralElement; 2] {
        let partner = compose(&self.hidden_reflection(), g, self.width);
        [g.clone(), partner]
    }
}

/// The hiding function: f(a, 0) = a, f(a, 1) = (s - a) mod 2^n.
///
/// Constant exactly on the cosets of the hidden subgroup and distinct
/// across cosets; the label is the rotation part of the coset's rotation
/// representative.
pub fn hidden_f(g: &DihedralElement, inst: &HiddenInstance) -> BigUint {
    let modulus = inst.modulus();
    if g.reflection {
        (inst.slope() + &modulus - mod_pow2(&g.rotation, inst.width as u64)) % &modulus
    } else {
        mod_pow2(&g.rotation, inst.width as u64)
    }
}

/// One Fourier sample from the full dense simulation.
#[derive(Debug, Clone)]
pub struct CosetSample {
    /// Measured index of the rotation register.
    pub k: u64,
    /// Residual-qubit amplitudes, global phase normalized so `amplitudes[0]`
    /// is real and positive.
    pub amplitudes: [Complex64; 2],
}

/// Full quantum Fourier sampling over D_N via a dense state vector.
///
/// Prepares the uniform superposition over all 2N group elements, applies
/// the oracle, measures the function register, Fourier transforms the
/// rotation coordinate, measures k, and returns the residual qubit. The
/// oracle's coset alignment leaves a classically known phase on the |1⟩
/// branch (both the function outcome v and k are classical data), which is
/// removed so the relative phase is exactly e^(2πiks/2^n).
pub fn coset_fourier_sample<R: Rng + ?Sized>(
    inst: &HiddenInstance,
    rng: &mut R,
) -> Result<CosetSample> {
    let n = inst.width;
    if n > FULL_SIM_MAX_WIDTH {
        return Err(Error::WidthTooLarge {
            n,
            cap: FULL_SIM_MAX_WIDTH,
        });
    }
    let nn: usize = 1 << n;

    // Uniform superposition over (a, b) with oracle values attached.
    let norm = 1.0 / ((2 * nn) as f64).sqrt();
    let mut f_values = vec![0u64; 2 * nn];
    for b in 0..2 {
        for a in 0..nn {
            let g = DihedralElement::new(BigUint::from(a), b == 1, n);
            f_values[b * nn + a] = hidden_f(&g, inst).to_u64().expect("n ≤ 10");
        }
    }

    // Measure the function register: outcome v with probability proportional
    // to the squared mass of its level set (uniform amplitudes here).
    let mut weights = vec![0.0f64; nn];
    for &v in &f_values {
        weights[v as usize] += norm * norm;
    }
    let v = sample_index(&weights, rng) as u64;

    // Collapse and renormalize.
    let mass: f64 = weights[v as usize];
    let collapsed_amp = Complex64::new(norm / mass.sqrt(), 0.0);
    let mut state = vec![[Complex64::zero(); 2]; nn];
    for b in 0..2 {
        for a in 0..nn {
            if f_values[b * nn + a] == v {
                state[a][b] = collapsed_amp;
            }
        }
    }

    // QFT over the rotation coordinate: |a⟩ ↦ N^(-1/2) Σ_k ω^(ak) |k⟩.
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_inverse(nn);
    let scale = 1.0 / (nn as f64).sqrt();
    let mut rows = [vec![Complex64::zero(); nn], vec![Complex64::zero(); nn]];
    for b in 0..2 {
        for a in 0..nn {
            rows[b][a] = state[a][b];
        }
        fft.process(&mut rows[b]);
        for amp in rows[b].iter_mut() {
            *amp *= scale;
        }
    }

    // Measure k.
    let k_weights: Vec<f64> = (0..nn)
        .map(|k| rows[0][k].norm_sqr() + rows[1][k].norm_sqr())
        .collect();
    let k = sample_index(&k_weights, rng) as u64;

    let mut amp0 = rows[0][k as usize];
    let mut amp1 = rows[1][k as usize];
    let renorm = (amp0.norm_sqr() + amp1.norm_sqr()).sqrt();
    amp0 /= renorm;
    amp1 /= renorm;

    // Classically parameterized phase correction on the |1⟩ branch:
    // multiply by ω^(2vk), with v and k known from the measurements.
    let correction = (2 * v * k) % (nn as u64);
    amp1 *= unit_phase(correction, nn as u64);

    // Normalize global phase so amp0 is real positive.
    let phase = amp0 / amp0.norm();
    amp0 /= phase;
    amp1 /= phase;

    Ok(CosetSample {
        k,
        amplitudes: [amp0, amp1],
    })
}

/// e^(2πi · num / den).
pub fn unit_phase(num: u64, den: u64) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * (num as f64) / (den as f64))
}

fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    weights.len() - 1
}
