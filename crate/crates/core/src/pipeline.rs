//! The full parity-recovery pipeline: sample phase states, collapse to a
//! transition state, recover the surviving labels from the classical
//! transcript alone, select a measurement pair with exponent gap 2^(n-1),
//! project onto its two-level subspace and measure in the ± basis.
//!
//! Everything between the target-register measurement and the projection is
//! classical and computed from [`ClassicalTranscript`], which carries no
//! information about the slope. Only [`project_pair`] touches the slope, and
//! [`crate::dihedral::HiddenInstance`] counts every access so tests can
//! audit the boundary.

use std::time::Instant;

use num_bigint::BigUint;
use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::dihedral::{coset_fourier_sample, HiddenInstance};
use crate::error::{Error, Result};
use crate::lattice::LllDelta;
use crate::numeric::{mod_pow2, pow2, ratio_of_pow2};
use crate::phase::{build_groups, group_count, sample_phase_state, GroupState, PhaseState};
use crate::rng::{derive, label};
use crate::subset_sum::{solve_congruence, solve_congruence_exhaustive, LambdaPolicy};
use crate::transition::{
    apply_phase_filter, assemble_transition, survivor_tau, GroupSupport, TransitionState,
    DEFAULT_SUPPORT_CAP,
};

/// How phase states are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplerPath {
    /// Draw k uniformly and record it; distribution-identical to the full
    /// simulation and scales to any width.
    Shortcut,
    /// Dense state-vector Fourier sampling (validation only, n ≤ 10).
    FullFourier,
}

/// How the per-group congruences are solved during recovery.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CandidateSolver {
    /// Algorithm SV on each lifted target.
    Lattice {
        delta: LllDelta,
        lambda: LambdaPolicy,
    },
    /// Exhaustive enumeration (m ≤ 24), complete by construction.
    Exhaustive,
}

impl Default for CandidateSolver {
    fn default() -> Self {
        Self::Lattice {
            delta: LllDelta::default(),
            lambda: LambdaPolicy::Auto,
        }
    }
}

/// Pair-selection strategy on the recovered candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PairSearch {
    /// Scan all candidate pairs in lexicographic order for a valid gap.
    #[default]
    Exhaustive,
    /// Consider only the first two candidates, then restart on failure.
    FirstTwo,
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub max_retries: u32,
    pub support_cap: u64,
    pub sampler: SamplerPath,
    pub solver: CandidateSolver,
    pub pair_search: PairSearch,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            max_retries: 32,
            support_cap: DEFAULT_SUPPORT_CAP,
            sampler: SamplerPath::Shortcut,
            solver: CandidateSolver::default(),
            pair_search: PairSearch::default(),
        }
    }
}

/// The classical record of one transition-state preparation. Contains the
/// coefficient matrix and the measured residues; nothing derived from s.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassicalTranscript {
    pub n: u32,
    pub m: usize,
    /// a_ij, row i = group i.
    pub coefficients: Vec<Vec<BigUint>>,
    /// Measured residues c_i, below 2^(n-1).
    pub measured: Vec<BigUint>,
    /// Σ c_i mod 2^(n-1).
    pub c: BigUint,
}

impl ClassicalTranscript {
    pub fn from_groups(groups: &[GroupState], supports: &[GroupSupport], n: u32) -> Self {
        let measured: Vec<BigUint> = supports.iter().map(|s| s.measured.clone()).collect();
        let mut c = BigUint::default();
        for ci in &measured {
            c += ci;
        }
        Self {
            n,
            m: groups.len(),
            coefficients: groups.iter().map(|g| g.coefficients.clone()).collect(),
            measured,
            c: mod_pow2(&c, n as u64 - 1),
        }
    }

    pub fn groups(&self) -> Vec<GroupState> {
        self.coefficients
            .iter()
            .enumerate()
            .map(|(i, coeffs)| GroupState {
                index: i,
                coefficients: coeffs.clone(),
            })
            .collect()
    }
}

/// A recovered ground-state label with its exact phase exponent, computed
/// from the transcript.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub labels: Vec<u32>,
    /// Exact Σ a_i(x_i), not reduced.
    pub exponent: BigUint,
}

impl Candidate {
    /// a'(x) = a(x) mod 2^n.
    pub fn reduced_exponent(&self, n: u32) -> BigUint {
        mod_pow2(&self.exponent, n as u64)
    }
}

/// Solve the per-group congruences and combine the per-group solutions into
/// full labels. Fails with [`Error::SvNotFound`] if any group comes back
/// empty, and with [`Error::SupportTooLarge`] past the cap.
pub fn recover_candidates(
    transcript: &ClassicalTranscript,
    solver: &CandidateSolver,
    cap: u64,
) -> Result<Vec<Candidate>> {
    let n = transcript.n;
    let mut per_group: Vec<Vec<u32>> = Vec::with_capacity(transcript.m);
    for (i, coeffs) in transcript.coefficients.iter().enumerate() {
        let solutions = match solver {
            CandidateSolver::Lattice { delta, lambda } => {
                solve_congruence(coeffs, &transcript.measured[i], n, *delta, lambda)
            }
            CandidateSolver::Exhaustive => {
                solve_congruence_exhaustive(coeffs, &transcript.measured[i], n)?
            }
        };
        if solutions.is_empty() {
            return Err(Error::SvNotFound { group: i });
        }
        let mut labels: Vec<u32> = solutions
            .iter()
            .map(|s| {
                s.bits
                    .iter()
                    .enumerate()
                    .fold(0u32, |acc, (j, &b)| acc | ((b as u32) << j))
            })
            .collect();
        labels.sort_unstable();
        labels.dedup();
        per_group.push(labels);
    }

    let mut size: u128 = 1;
    for g in &per_group {
        size = size.saturating_mul(g.len() as u128);
    }
    if size > cap as u128 {
        return Err(Error::SupportTooLarge { size, cap });
    }

    let groups = transcript.groups();
    let mut out = Vec::with_capacity(size as usize);
    let mut indices = vec![0usize; per_group.len()];
    let mut done = false;
    while !done {
        let mut exponent = BigUint::default();
        let mut labels = Vec::with_capacity(per_group.len());
        for ((g, list), &i) in groups.iter().zip(&per_group).zip(&indices) {
            let label = list[i];
            labels.push(label);
            exponent += g.phase_value(label);
        }
        out.push(Candidate { labels, exponent });
        done = true;
        for pos in (0..per_group.len()).rev() {
            indices[pos] += 1;
            if indices[pos] < per_group[pos].len() {
                done = false;
                break;
            }
            indices[pos] = 0;
        }
    }
    Ok(out)
}

/// First candidate pair (in lexicographic order) whose exponents differ by
/// exactly 2^(n-1) mod 2^n, ordered so the first member has the smaller
/// reduced exponent.
pub fn select_pair(
    candidates: &[Candidate],
    n: u32,
) -> Result<(&Candidate, &Candidate)> {
    let half = pow2(n as u64 - 1);
    let modulus = pow2(n as u64);
    for i in 0..candidates.len() {
        let ei = candidates[i].reduced_exponent(n);
        for (j, cand) in candidates.iter().enumerate().skip(i + 1) {
            let ej = cand.reduced_exponent(n);
            let gap = (&ej + &modulus - &ei) % &modulus;
            if gap == half {
                return if ei < ej {
                    Ok((&candidates[i], &candidates[j]))
                } else {
                    Ok((&candidates[j], &candidates[i]))
                };
            }
        }
    }
    Err(Error::NoValidPair)
}

/// The retained two-level state after a successful projection.
#[derive(Debug, Clone)]
pub struct ProjectedPair {
    pub amplitudes: [Complex64; 2],
}

/// Project the transition state onto the subspace spanned by the pair.
///
/// With uniform amplitudes over τ survivors the projection succeeds with
/// probability exactly 2/τ; on success the retained amplitudes carry the
/// relative phase e^(2πi·(a(x²)−a(x¹))·s/2^n). This is the only place the
/// slope enters.
pub fn project_pair<R: Rng + ?Sized>(
    state: &TransitionState,
    pair: (&Candidate, &Candidate),
    inst: &HiddenInstance,
    rng: &mut R,
) -> Result<ProjectedPair> {
    let member = |c: &Candidate| state.survivors.iter().any(|s| s.labels == c.labels);
    assert!(
        member(pair.0) && member(pair.1),
        "pair members must be survivors of the transition state"
    );
    let tau = survivor_tau(state) as f64;
    if rng.gen::<f64>() >= 2.0 / tau {
        return Err(Error::ProjectionMissed);
    }

    let n = state.n;
    let modulus = pow2(n as u64);
    let gap = (pair.1.reduced_exponent(n) + &modulus - pair.0.reduced_exponent(n)) % &modulus;
    let exponent = mod_pow2(&(&gap * inst.slope()), n as u64);
    let theta = 2.0 * std::f64::consts::PI * ratio_of_pow2(&exponent, n as u64);
    let amp = std::f64::consts::FRAC_1_SQRT_2;
    Ok(ProjectedPair {
        amplitudes: [
            Complex64::new(amp, 0.0),
            Complex64::from_polar(amp, theta),
        ],
    })
}

/// Relabel the pair to |0⟩ + e(φ)|1⟩ and measure in the ± basis. A relative
/// phase of +1 yields parity 0 deterministically, −1 yields parity 1.
pub fn measure_pm(pair: &ProjectedPair) -> Result<u8> {
    let rel = pair.amplitudes[1] / pair.amplitudes[0];
    if rel.im.abs() > 1e-9 || (rel.re.abs() - 1.0).abs() > 1e-9 {
        return Err(Error::NonRealPhase {
            re: rel.re,
            im: rel.im,
        });
    }
    Ok(if rel.re < 0.0 { 1 } else { 0 })
}

/// Why one attempt failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    /// Fewer than two survivors after the collapse.
    TooFewSurvivors,
    /// All recovered candidates share one exponent residue.
    NoValidPair,
    /// The projective measurement missed the two-level subspace.
    ProjectionMissed,
    /// Some group's congruence came back without solutions.
    SvNotFound,
}

/// Failure counts accumulated over the retries of one run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct FailureBreakdown {
    pub too_few_survivors: u32,
    pub no_valid_pair: u32,
    pub projection_missed: u32,
    pub sv_not_found: u32,
}

impl FailureBreakdown {
    pub fn record(&mut self, reason: FailureReason) {
        match reason {
            FailureReason::TooFewSurvivors => self.too_few_survivors += 1,
            FailureReason::NoValidPair => self.no_valid_pair += 1,
            FailureReason::ProjectionMissed => self.projection_missed += 1,
            FailureReason::SvNotFound => self.sv_not_found += 1,
        }
    }

    pub fn total(&self) -> u32 {
        self.too_few_survivors + self.no_valid_pair + self.projection_missed + self.sv_not_found
    }
}

/// Wall-clock microseconds per stage, accumulated across retries.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct StageTimings {
    pub sample_us: u64,
    pub filter_us: u64,
    pub assemble_us: u64,
    pub recover_us: u64,
    pub select_us: u64,
    pub measure_us: u64,
}

impl StageTimings {
    pub fn total_us(&self) -> u64 {
        self.sample_us
            + self.filter_us
            + self.assemble_us
            + self.recover_us
            + self.select_us
            + self.measure_us
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PipelineOutcome {
    Parity(u8),
    /// Every attempt failed; carries the last failure seen.
    Exhausted(FailureReason),
}

#[derive(Debug, Clone)]
pub struct PipelineResult {
    pub outcome: PipelineOutcome,
    /// Failed attempts.
    pub retries: u32,
    /// Attempts made in total.
    pub attempts: u32,
    pub failures: FailureBreakdown,
    pub timings: StageTimings,
}

impl PipelineResult {
    pub fn parity(&self) -> Option<u8> {
        match self.outcome {
            PipelineOutcome::Parity(p) => Some(p),
            PipelineOutcome::Exhausted(_) => None,
        }
    }
}

fn elapsed_us(start: Instant) -> u64 {
    start.elapsed().as_micros().min(u64::MAX as u128) as u64
}

/// Run the full pipeline, retrying from scratch on each failure up to
/// `max_retries` attempts. A completed run reports parity equal to the
/// slope's parity by construction: the pair's exponent gap is verified
/// classically before measurement, so runs may fail but never lie.
pub fn run_pipeline(
    inst: &HiddenInstance,
    seed: u64,
    config: &PipelineConfig,
) -> Result<PipelineResult> {
    let n = inst.width();
    if n < 4 {
        return Err(Error::InfeasibleWidth {
            n,
            reason: "pipeline requires n ≥ 4".into(),
        });
    }
    let m = group_count(n);
    if m > 26 {
        return Err(Error::InfeasibleWidth {
            n,
            reason: "per-group enumeration needs ⌈√n⌉ ≤ 26".into(),
        });
    }
    if config.max_retries == 0 {
        return Err(Error::InvalidConfig("max_retries must be at least 1".into()));
    }
    if config.sampler == SamplerPath::FullFourier && n > crate::dihedral::FULL_SIM_MAX_WIDTH {
        return Err(Error::WidthTooLarge {
            n,
            cap: crate::dihedral::FULL_SIM_MAX_WIDTH,
        });
    }

    let mut failures = FailureBreakdown::default();
    let mut timings = StageTimings::default();
    let mut last_failure = FailureReason::TooFewSurvivors;

    for attempt in 0..config.max_retries {
        let fail = |reason: FailureReason,
                    failures: &mut FailureBreakdown,
                    last: &mut FailureReason| {
            failures.record(reason);
            *last = reason;
        };

        // Step 1: Fourier-sample m² phase states.
        let start = Instant::now();
        let mut sample_rng = derive(seed, &[attempt as u64, label::SAMPLE]);
        let states: Result<Vec<PhaseState>> = (0..m * m)
            .map(|_| match config.sampler {
                SamplerPath::Shortcut => Ok(sample_phase_state(inst, &mut sample_rng)),
                SamplerPath::FullFourier => coset_fourier_sample(inst, &mut sample_rng)
                    .map(|s| PhaseState {
                        n,
                        k: BigUint::from(s.k),
                    }),
            })
            .collect();
        let groups = build_groups(&states?, n)?;
        timings.sample_us += elapsed_us(start);

        // Step 2: phase filter per group, with a per-group stream so the
        // transcript is identical whether groups run serially or in parallel.
        let start = Instant::now();
        let supports: Vec<GroupSupport> = groups
            .iter()
            .enumerate()
            .map(|(i, g)| {
                let mut rng = derive(seed, &[attempt as u64, label::FILTER, i as u64]);
                apply_phase_filter(g, n, &mut rng)
            })
            .collect();
        timings.filter_us += elapsed_us(start);

        // Step 3: collapse.
        let start = Instant::now();
        let state = assemble_transition(&supports, n, config.support_cap)?;
        timings.assemble_us += elapsed_us(start);
        if survivor_tau(&state) < 2 {
            fail(FailureReason::TooFewSurvivors, &mut failures, &mut last_failure);
            continue;
        }

        // Step 4: classical recovery of the measurement basis.
        let start = Instant::now();
        let transcript = ClassicalTranscript::from_groups(&groups, &supports, n);
        let candidates = match recover_candidates(&transcript, &config.solver, config.support_cap)
        {
            Ok(c) => c,
            Err(Error::SvNotFound { .. }) => {
                timings.recover_us += elapsed_us(start);
                fail(FailureReason::SvNotFound, &mut failures, &mut last_failure);
                continue;
            }
            Err(e) => return Err(e),
        };
        timings.recover_us += elapsed_us(start);

        let start = Instant::now();
        let narrowed = match config.pair_search {
            PairSearch::Exhaustive => &candidates[..],
            PairSearch::FirstTwo => &candidates[..candidates.len().min(2)],
        };
        let pair = select_pair(narrowed, n);
        timings.select_us += elapsed_us(start);
        let pair = match pair {
            Ok(p) => p,
            Err(Error::NoValidPair) => {
                fail(FailureReason::NoValidPair, &mut failures, &mut last_failure);
                continue;
            }
            Err(e) => return Err(e),
        };

        // Step 5: projective measurement and ± readout.
        let start = Instant::now();
        let mut project_rng = derive(seed, &[attempt as u64, label::PROJECT]);
        match project_pair(&state, pair, inst, &mut project_rng) {
            Ok(two_level) => {
                let parity = measure_pm(&two_level)?;
                timings.measure_us += elapsed_us(start);
                return Ok(PipelineResult {
                    outcome: PipelineOutcome::Parity(parity),
                    retries: attempt,
                    attempts: attempt + 1,
                    failures,
                    timings,
                });
            }
            Err(Error::ProjectionMissed) => {
                timings.measure_us += elapsed_us(start);
                fail(FailureReason::ProjectionMissed, &mut failures, &mut last_failure);
                continue;
            }
            Err(e) => return Err(e),
        }
    }

    Ok(PipelineResult {
        outcome: PipelineOutcome::Exhausted(last_failure),
        retries: config.max_retries,
        attempts: config.max_retries,
        failures,
        timings,
    })
}
