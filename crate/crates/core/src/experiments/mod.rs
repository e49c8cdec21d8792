//! Monte Carlo harness over the pipeline and the solver.
//!
//! Every experiment is driven by an [`ExperimentConfig`] with a master seed;
//! per-trial generators are derived from (seed, kind, cell, trial), so trial
//! order and the `parallel` setting cannot change any result. Aggregates
//! carry 95% Wilson intervals; assertions against them belong to the test
//! suite, not the runners.

pub mod report;
pub mod stats;

use std::time::Instant;

use num_bigint::BigUint;
use num_traits::Zero;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::LllDelta;
use crate::numeric::{log2, mod_pow2, pow2};
use crate::phase::{group_count, GroupState};
use crate::pipeline::{
    run_pipeline, CandidateSolver, FailureBreakdown, PipelineConfig, StageTimings,
};
use crate::rng::{derive, gen_biguint_below_pow2, gen_biguint_nonzero_below_pow2, label};
use crate::subset_sum::{density, sv_solve, LambdaPolicy, SubsetSumInstance};
use crate::transition::{congruence_solution_count, enumerate_congruence_solutions};

pub use report::{ConfigEcho, CsvReport, ExperimentReport, StageMeans, TimingSummary, SCHEMA_VERSION};
pub use stats::{binomial_estimate, chi_square_uniform_p, least_squares, BinomialEstimate};

/// Analytic large-n limit of P(τ ≥ 2): 1 − 3e⁻².
pub const PTAU_ANALYTIC_LIMIT: f64 = 0.5939941502901618;

/// Cap on enumerated solutions per trial in the phase-flip experiment.
const FLIP_ENUMERATION_CAP: u64 = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Ptau,
    PhaseFlip,
    SvSweep,
    SvBench,
    Run,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Ptau => "ptau",
            Self::PhaseFlip => "phase-flip",
            Self::SvSweep => "sv-sweep",
            Self::SvBench => "sv-bench",
            Self::Run => "run",
        }
    }

    fn stream_id(&self) -> u64 {
        match self {
            Self::Ptau => 1,
            Self::PhaseFlip => 2,
            Self::SvSweep => 3,
            Self::SvBench => 4,
            Self::Run => 5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub ns: Vec<u32>,
    pub m_values: Vec<usize>,
    pub bit_values: Vec<u32>,
    pub trials: u64,
    pub seed: u64,
    pub lll_delta: LllDelta,
    pub lambda_policy: LambdaPolicy,
    pub max_retries: u32,
    pub brute_force_check: bool,
    /// Worker threads for trials; 0 or 1 runs serially.
    pub parallel: usize,
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        Self {
            kind,
            ns: Vec::new(),
            m_values: Vec::new(),
            bit_values: Vec::new(),
            trials: 1,
            seed: 0,
            lll_delta: LllDelta::default(),
            lambda_policy: LambdaPolicy::Auto,
            max_retries: 32,
            brute_force_check: false,
            parallel: 0,
        }
    }

    pub fn echo(&self) -> ConfigEcho {
        ConfigEcho {
            experiment: self.kind.name().to_string(),
            ns: self.ns.clone(),
            m_values: self.m_values.clone(),
            bit_values: self.bit_values.clone(),
            trials: self.trials,
            seed: self.seed,
            lll_delta: self.lll_delta.to_string(),
            lambda_policy: self.lambda_policy.to_string(),
            max_retries: self.max_retries,
            brute_force_check: self.brute_force_check,
            parallel: self.parallel,
        }
    }

    fn validate_common(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        Ok(())
    }
}

/// Run `count` independent trials, serially or on a dedicated pool.
fn run_trials<T: Send>(parallel: usize, count: u64, f: impl Fn(u64) -> T + Send + Sync) -> Vec<T> {
    if parallel <= 1 {
        (0..count).map(f).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(parallel)
            .build()
            .expect("thread pool");
        pool.install(|| (0..count).into_par_iter().map(f).collect())
    }
}

// ---------------------------------------------------------------------------
// The analytic congruence model
// ---------------------------------------------------------------------------
//
// The success-probability analysis counts solutions of
//     w_1 x_1 + ... + w_n x_n ≡ c   (mod 2^(n-1)),
// over all x ∈ {0,1}^n with the residue c drawn independently of the
// weights; P(count ≥ 2) tends to 1 − 3e⁻² at every width. The pipeline's
// measured collapse conditions on every per-group residue instead and has a
// different (much thinner) survivor distribution; these experiments
// reproduce the model, the `run` experiment reports the physical pipeline.

fn model_weights<R: Rng + ?Sized>(n: u32, rng: &mut R) -> Vec<BigUint> {
    (0..n).map(|_| gen_biguint_below_pow2(rng, n)).collect()
}

/// Chunk the n model weights into groups of ⌈√n⌉ for the factorized count.
fn model_groups(weights: &[BigUint], n: u32) -> Vec<GroupState> {
    let m = group_count(n);
    weights
        .chunks(m)
        .enumerate()
        .map(|(index, chunk)| GroupState {
            index,
            coefficients: chunk.to_vec(),
        })
        .collect()
}

fn model_flat_bits(groups: &[GroupState], labels: &[u32]) -> Vec<u8> {
    let mut bits = Vec::new();
    for (g, &label) in groups.iter().zip(labels) {
        for j in 0..g.arity() {
            bits.push(((label >> j) & 1) as u8);
        }
    }
    bits
}

// ---------------------------------------------------------------------------
// ptau
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct PtauRecord {
    pub n: u32,
    pub trial: u64,
    pub tau: String,
    pub tau_ge2: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub brute_force_tau: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PtauAggregate {
    pub n: u32,
    pub tau_ge2: BinomialEstimate,
    pub analytic_limit: f64,
    pub oracle_mismatches: u64,
}

pub type PtauReport = ExperimentReport<PtauRecord, Vec<PtauAggregate>>;

/// Estimate P(τ ≥ 2) under the congruence model.
pub fn estimate_ptau(cfg: &ExperimentConfig) -> Result<PtauReport> {
    cfg.validate_common()?;
    if cfg.ns.is_empty() {
        return Err(Error::InvalidConfig("ptau needs at least one n".into()));
    }
    for &n in &cfg.ns {
        if !(2..=40).contains(&n) {
            return Err(Error::InfeasibleWidth {
                n,
                reason: "meet-in-the-middle solution count supports 2 ≤ n ≤ 40".into(),
            });
        }
        if cfg.brute_force_check && n > 20 {
            return Err(Error::InfeasibleWidth {
                n,
                reason: "brute-force recount supports n ≤ 20".into(),
            });
        }
    }

    let started = Instant::now();
    let kind = cfg.kind.stream_id();
    let total = cfg.ns.len() as u64 * cfg.trials;
    let records = run_trials(cfg.parallel, total, |idx| {
        let n = cfg.ns[(idx / cfg.trials) as usize];
        let trial = idx % cfg.trials;
        let mut rng = derive(cfg.seed, &[label::TRIAL, kind, n as u64, trial]);
        let weights = model_weights(n, &mut rng);
        let c = gen_biguint_below_pow2(&mut rng, n - 1);
        let groups = model_groups(&weights, n);
        let tau = congruence_solution_count(&groups, &c, n);
        let brute_force_tau = cfg.brute_force_check.then(|| {
            crate::subset_sum::solve_congruence_exhaustive(&weights, &c, n)
                .expect("n ≤ 20 fits the enumeration cap")
                .len()
                .to_string()
        });
        PtauRecord {
            n,
            trial,
            tau: tau.to_string(),
            tau_ge2: tau >= BigUint::from(2u32),
            brute_force_tau,
        }
    });

    let aggregates = cfg
        .ns
        .iter()
        .map(|&n| {
            let rows = records.iter().filter(|r| r.n == n);
            let hits = rows.clone().filter(|r| r.tau_ge2).count() as u64;
            let mismatches = rows
                .clone()
                .filter(|r| {
                    r.brute_force_tau
                        .as_ref()
                        .is_some_and(|bf| *bf != r.tau)
                })
                .count() as u64;
            PtauAggregate {
                n,
                tau_ge2: binomial_estimate(hits, cfg.trials),
                analytic_limit: PTAU_ANALYTIC_LIMIT,
                oracle_mismatches: mismatches,
            }
        })
        .collect();

    let total_us = started.elapsed().as_micros() as u64;
    Ok(ExperimentReport {
        schema_version: SCHEMA_VERSION,
        experiment: cfg.kind.name().to_string(),
        config: cfg.echo(),
        records,
        aggregates,
        timing: TimingSummary {
            total_us,
            mean_trial_us: total_us as f64 / total as f64,
            stage_means_us: None,
        },
    })
}

impl CsvReport for PtauReport {
    fn to_csv(&self) -> String {
        let mut out = String::from(
            "n,trials,tau_ge2,estimate,ci95_low,ci95_high,analytic_limit,oracle_mismatches\n",
        );
        for a in &self.aggregates {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                a.n,
                a.tau_ge2.trials,
                a.tau_ge2.successes,
                a.tau_ge2.estimate,
                a.tau_ge2.ci95_low,
                a.tau_ge2.ci95_high,
                a.analytic_limit,
                a.oracle_mismatches
            ));
        }
        out
    }
}

// ---------------------------------------------------------------------------
// phase-flip
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct PhaseFlipRecord {
    pub n: u32,
    pub trial: u64,
    pub tau: String,
    pub qualifying: bool,
    /// Degenerate draws (all-zero weights or an enumeration overflow) are
    /// excluded from the estimate.
    pub excluded: bool,
    pub flip: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub brute_force_ok: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PhaseFlipAggregate {
    pub n: u32,
    pub qualifying: u64,
    pub excluded: u64,
    pub flip: BinomialEstimate,
    pub oracle_mismatches: u64,
}

pub type PhaseFlipReport = ExperimentReport<PhaseFlipRecord, Vec<PhaseFlipAggregate>>;

/// Among model draws with τ ≥ 2, estimate the probability that a uniformly
/// chosen solution pair has exponent gap exactly 2^(n-1).
pub fn estimate_phase_flip(cfg: &ExperimentConfig) -> Result<PhaseFlipReport> {
    cfg.validate_common()?;
    if cfg.ns.is_empty() {
        return Err(Error::InvalidConfig("phase-flip needs at least one n".into()));
    }
    for &n in &cfg.ns {
        if !(2..=20).contains(&n) {
            return Err(Error::InfeasibleWidth {
                n,
                reason: "solution enumeration supports 2 ≤ n ≤ 20".into(),
            });
        }
    }

    let started = Instant::now();
    let kind = cfg.kind.stream_id();
    let total = cfg.ns.len() as u64 * cfg.trials;
    let records = run_trials(cfg.parallel, total, |idx| {
        let n = cfg.ns[(idx / cfg.trials) as usize];
        let trial = idx % cfg.trials;
        let mut rng = derive(cfg.seed, &[label::TRIAL, kind, n as u64, trial]);
        let weights = model_weights(n, &mut rng);
        let c = gen_biguint_below_pow2(&mut rng, n - 1);
        let groups = model_groups(&weights, n);

        let tau = congruence_solution_count(&groups, &c, n);
        let degenerate = weights.iter().all(|w| w.is_zero());
        if degenerate || tau > BigUint::from(FLIP_ENUMERATION_CAP) {
            return PhaseFlipRecord {
                n,
                trial,
                tau: tau.to_string(),
                qualifying: false,
                excluded: true,
                flip: None,
                brute_force_ok: None,
            };
        }

        let solutions = enumerate_congruence_solutions(&groups, &c, n, FLIP_ENUMERATION_CAP)
            .expect("within cap");
        let qualifying = solutions.len() >= 2;
        let flip = if qualifying {
            let i = rng.gen_range(0..solutions.len());
            let mut j = rng.gen_range(0..solutions.len() - 1);
            if j >= i {
                j += 1;
            }
            let modulus = pow2(n as u64);
            let gap = (&solutions[j].exponent + &modulus - &solutions[i].exponent) % &modulus;
            Some(gap == pow2(n as u64 - 1))
        } else {
            None
        };

        let brute_force_ok = cfg.brute_force_check.then(|| {
            let oracle = crate::subset_sum::solve_congruence_exhaustive(&weights, &c, n)
                .expect("n ≤ 20");
            let half = pow2(n as u64 - 1);
            let from_oracle: std::collections::BTreeSet<(Vec<u8>, BigUint)> = oracle
                .iter()
                .map(|o| {
                    let exp = &c + &half * BigUint::from(o.shift_index.unwrap_or(0));
                    (o.bits.clone(), mod_pow2(&exp, n as u64))
                })
                .collect();
            let from_enum: std::collections::BTreeSet<(Vec<u8>, BigUint)> = solutions
                .iter()
                .map(|s| (model_flat_bits(&groups, &s.labels), s.exponent.clone()))
                .collect();
            from_oracle == from_enum
        });

        PhaseFlipRecord {
            n,
            trial,
            tau: solutions.len().to_string(),
            qualifying,
            excluded: false,
            flip,
            brute_force_ok,
        }
    });

    let aggregates = cfg
        .ns
        .iter()
        .map(|&n| {
            let rows: Vec<&PhaseFlipRecord> = records.iter().filter(|r| r.n == n).collect();
            let qualifying = rows.iter().filter(|r| r.qualifying).count() as u64;
            let excluded = rows.iter().filter(|r| r.excluded).count() as u64;
            let flips = rows.iter().filter(|r| r.flip == Some(true)).count() as u64;
            let mismatches = rows
                .iter()
                .filter(|r| r.brute_force_ok == Some(false))
                .count() as u64;
            PhaseFlipAggregate {
                n,
                qualifying,
                excluded,
                flip: binomial_estimate(flips, qualifying),
                oracle_mismatches: mismatches,
            }
        })
        .collect();

    let total_us = started.elapsed().as_micros() as u64;
    Ok(ExperimentReport {
        schema_version: SCHEMA_VERSION,
        experiment: cfg.kind.name().to_string(),
        config: cfg.echo(),
        records,
        aggregates,
        timing: TimingSummary {
            total_us,
            mean_trial_us: total_us as f64 / total as f64,
            stage_means_us: None,
        },
    })
}

impl CsvReport for PhaseFlipReport {
    fn to_csv(&self) -> String {
        let mut out = String::from(
            "n,trials,qualifying,excluded,flips,estimate,ci95_low,ci95_high,oracle_mismatches\n",
        );
        for a in &self.aggregates {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                a.n,
                self.config.trials,
                a.qualifying,
                a.excluded,
                a.flip.successes,
                a.flip.estimate,
                a.flip.ci95_low,
                a.flip.ci95_high,
                a.oracle_mismatches
            ));
        }
        out
    }
}

// ---------------------------------------------------------------------------
// sv-sweep / sv-bench
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct SweepRecord {
    pub m: usize,
    pub bits: u32,
    pub trial: u64,
    pub density: Option<f64>,
    pub success: bool,
    pub solutions: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub brute_force_ok: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepCell {
    pub m: usize,
    pub bits: u32,
    pub success: BinomialEstimate,
    pub mean_density: f64,
    pub oracle_mismatches: u64,
}

pub type SweepReport = ExperimentReport<SweepRecord, Vec<SweepCell>>;

fn planted_instance<R: Rng + ?Sized>(m: usize, bits: u32, rng: &mut R) -> SubsetSumInstance {
    let weights: Vec<BigUint> = (0..m)
        .map(|_| gen_biguint_nonzero_below_pow2(rng, bits))
        .collect();
    let planted: Vec<u8> = loop {
        let bits_vec: Vec<u8> = (0..m).map(|_| rng.gen_range(0..2u8)).collect();
        if bits_vec.contains(&1) {
            break bits_vec;
        }
    };
    let target: BigUint = weights
        .iter()
        .zip(&planted)
        .filter(|(_, &b)| b == 1)
        .map(|(w, _)| w)
        .sum();
    SubsetSumInstance::new(weights, target).expect("positive weights")
}

fn validate_cells(cfg: &ExperimentConfig) -> Result<()> {
    cfg.validate_common()?;
    if cfg.m_values.is_empty() || cfg.bit_values.is_empty() {
        return Err(Error::InvalidConfig(
            "need at least one m and one bit size".into(),
        ));
    }
    if cfg.m_values.iter().any(|&m| m == 0 || m > 128) {
        return Err(Error::InvalidConfig("m must be in 1..=128".into()));
    }
    if cfg.bit_values.iter().any(|&b| !(2..=4096).contains(&b)) {
        return Err(Error::InvalidConfig("bit sizes must be in 2..=4096".into()));
    }
    if cfg.brute_force_check && cfg.m_values.iter().any(|&m| m > 24) {
        return Err(Error::InvalidConfig(
            "brute-force check supports m ≤ 24".into(),
        ));
    }
    Ok(())
}

/// Success rate of algorithm SV on planted instances, per (m, bits) cell.
pub fn sv_success_sweep(cfg: &ExperimentConfig) -> Result<SweepReport> {
    validate_cells(cfg)?;
    let started = Instant::now();
    let kind = cfg.kind.stream_id();
    let cells: Vec<(usize, u32)> = cfg
        .m_values
        .iter()
        .flat_map(|&m| cfg.bit_values.iter().map(move |&b| (m, b)))
        .collect();
    let total = cells.len() as u64 * cfg.trials;
    let records = run_trials(cfg.parallel, total, |idx| {
        let (m, bits) = cells[(idx / cfg.trials) as usize];
        let trial = idx % cfg.trials;
        let mut rng = derive(cfg.seed, &[label::TRIAL, kind, m as u64, bits as u64, trial]);
        let inst = planted_instance(m, bits, &mut rng);
        let sols = sv_solve(&inst, cfg.lll_delta, &cfg.lambda_policy);
        let brute_force_ok = cfg.brute_force_check.then(|| {
            let oracle = crate::subset_sum::brute_force_subset_sum(&inst).expect("m ≤ 24");
            sols.iter().all(|s| oracle.contains(&s.bits))
        });
        SweepRecord {
            m,
            bits,
            trial,
            density: density(&inst).ok(),
            success: !sols.is_empty(),
            solutions: sols.len(),
            brute_force_ok,
        }
    });

    let aggregates = cells
        .iter()
        .map(|&(m, bits)| {
            let rows: Vec<&SweepRecord> = records
                .iter()
                .filter(|r| r.m == m && r.bits == bits)
                .collect();
            let successes = rows.iter().filter(|r| r.success).count() as u64;
            let densities: Vec<f64> = rows.iter().filter_map(|r| r.density).collect();
            let mean_density = if densities.is_empty() {
                f64::NAN
            } else {
                densities.iter().sum::<f64>() / densities.len() as f64
            };
            let mismatches = rows
                .iter()
                .filter(|r| r.brute_force_ok == Some(false))
                .count() as u64;
            SweepCell {
                m,
                bits,
                success: binomial_estimate(successes, cfg.trials),
                mean_density,
                oracle_mismatches: mismatches,
            }
        })
        .collect();

    let total_us = started.elapsed().as_micros() as u64;
    Ok(ExperimentReport {
        schema_version: SCHEMA_VERSION,
        experiment: cfg.kind.name().to_string(),
        config: cfg.echo(),
        records,
        aggregates,
        timing: TimingSummary {
            total_us,
            mean_trial_us: total_us as f64 / total as f64,
            stage_means_us: None,
        },
    })
}

impl CsvReport for SweepReport {
    fn to_csv(&self) -> String {
        let mut out = String::from(
            "m,bits,trials,successes,success_rate,ci95_low,ci95_high,mean_density,oracle_mismatches\n",
        );
        for c in &self.aggregates {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                c.m,
                c.bits,
                c.success.trials,
                c.success.successes,
                c.success.estimate,
                c.success.ci95_low,
                c.success.ci95_high,
                c.mean_density,
                c.oracle_mismatches
            ));
        }
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchRecord {
    pub m: usize,
    pub bits: u32,
    pub trial: u64,
    pub success: bool,
    /// log2 of m·(log2 max a)³ for this instance.
    pub predictor_log2: f64,
    /// Measured, not reproducible run to run.
    pub runtime_us: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchCell {
    pub m: usize,
    pub bits: u32,
    pub trials: u64,
    pub geo_mean_us: f64,
    pub min_us: u64,
    pub max_us: u64,
    pub mean_predictor_log2: f64,
}

/// The log-log fit of runtime against m·(log2 max a)³. A slope near 1 means
/// the measured cost tracks that law; `flagged` marks slopes outside
/// [0.5, 1.5].
#[derive(Debug, Clone, Serialize)]
pub struct TimingFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub expected_slope: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchAggregates {
    pub cells: Vec<BenchCell>,
    pub fit: TimingFit,
}

pub type BenchReport = ExperimentReport<BenchRecord, BenchAggregates>;

/// Wall-clock benchmark of [`sv_solve`] across (m, bits) cells.
pub fn sv_timing_bench(cfg: &ExperimentConfig) -> Result<BenchReport> {
    validate_cells(cfg)?;
    let started = Instant::now();
    let kind = cfg.kind.stream_id();
    let cells: Vec<(usize, u32)> = cfg
        .m_values
        .iter()
        .flat_map(|&m| cfg.bit_values.iter().map(move |&b| (m, b)))
        .collect();
    let total = cells.len() as u64 * cfg.trials;
    let records = run_trials(cfg.parallel, total, |idx| {
        let (m, bits) = cells[(idx / cfg.trials) as usize];
        let trial = idx % cfg.trials;
        let mut rng = derive(cfg.seed, &[label::TRIAL, kind, m as u64, bits as u64, trial]);
        let inst = planted_instance(m, bits, &mut rng);
        let log_max = log2(inst.max_weight()).max(1.0);
        let predictor_log2 = (m as f64).log2() + 3.0 * log_max.log2();
        let t0 = Instant::now();
        let sols = sv_solve(&inst, cfg.lll_delta, &cfg.lambda_policy);
        let runtime_us = t0.elapsed().as_micros().max(1) as u64;
        BenchRecord {
            m,
            bits,
            trial,
            success: !sols.is_empty(),
            predictor_log2,
            runtime_us,
        }
    });

    let cells_agg: Vec<BenchCell> = cells
        .iter()
        .map(|&(m, bits)| {
            let rows: Vec<&BenchRecord> = records
                .iter()
                .filter(|r| r.m == m && r.bits == bits)
                .collect();
            let logs: Vec<f64> = rows.iter().map(|r| (r.runtime_us as f64).log2()).collect();
            let geo_mean_us = (logs.iter().sum::<f64>() / logs.len() as f64).exp2();
            BenchCell {
                m,
                bits,
                trials: rows.len() as u64,
                geo_mean_us,
                min_us: rows.iter().map(|r| r.runtime_us).min().unwrap_or(0),
                max_us: rows.iter().map(|r| r.runtime_us).max().unwrap_or(0),
                mean_predictor_log2: rows.iter().map(|r| r.predictor_log2).sum::<f64>()
                    / rows.len() as f64,
            }
        })
        .collect();

    let points: Vec<(f64, f64)> = records
        .iter()
        .map(|r| (r.predictor_log2, (r.runtime_us as f64).log2()))
        .collect();
    let fit = if points.len() >= 2 {
        let fit = least_squares(&points);
        TimingFit {
            slope: fit.slope,
            intercept: fit.intercept,
            r_squared: fit.r_squared,
            expected_slope: 1.0,
            flagged: !(0.5..=1.5).contains(&fit.slope),
        }
    } else {
        TimingFit {
            slope: f64::NAN,
            intercept: f64::NAN,
            r_squared: f64::NAN,
            expected_slope: 1.0,
            flagged: true,
        }
    };

    let total_us = started.elapsed().as_micros() as u64;
    Ok(ExperimentReport {
        schema_version: SCHEMA_VERSION,
        experiment: cfg.kind.name().to_string(),
        config: cfg.echo(),
        records,
        aggregates: BenchAggregates {
            cells: cells_agg,
            fit,
        },
        timing: TimingSummary {
            total_us,
            mean_trial_us: total_us as f64 / total as f64,
            stage_means_us: None,
        },
    })
}

impl CsvReport for BenchReport {
    fn to_csv(&self) -> String {
        let mut out =
            String::from("m,bits,trials,geo_mean_us,min_us,max_us,mean_predictor_log2\n");
        for c in &self.aggregates.cells {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                c.m, c.bits, c.trials, c.geo_mean_us, c.min_us, c.max_us, c.mean_predictor_log2
            ));
        }
        let f = &self.aggregates.fit;
        out.push_str(&format!(
            "# fit: slope={} intercept={} r_squared={} flagged={}\n",
            f.slope, f.intercept, f.r_squared, f.flagged
        ));
        out
    }
}

// ---------------------------------------------------------------------------
// end-to-end runs
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub n: u32,
    pub trial: u64,
    pub planted_slope: String,
    pub completed: bool,
    pub parity: Option<u8>,
    pub parity_correct: Option<bool>,
    pub attempts: u32,
    pub retries: u32,
    pub failures: FailureBreakdown,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub brute_force_ok: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunAggregate {
    pub n: u32,
    pub trials: u64,
    pub completed: u64,
    pub wrong_parity: u64,
    pub completion: BinomialEstimate,
    pub mean_attempts: f64,
    pub failures: FailureBreakdown,
    pub oracle_mismatches: u64,
}

pub type RunReport = ExperimentReport<RunRecord, Vec<RunAggregate>>;

/// Draw a random slope per trial and run the full pipeline against it.
pub fn end_to_end(cfg: &ExperimentConfig) -> Result<RunReport> {
    cfg.validate_common()?;
    if cfg.ns.is_empty() {
        return Err(Error::InvalidConfig("run needs at least one n".into()));
    }
    if cfg.max_retries == 0 {
        return Err(Error::InvalidConfig("max_retries must be at least 1".into()));
    }
    for &n in &cfg.ns {
        if n < 4 || group_count(n) > 26 {
            return Err(Error::InfeasibleWidth {
                n,
                reason: "pipeline requires 4 ≤ n with ⌈√n⌉ ≤ 26".into(),
            });
        }
        if cfg.brute_force_check && n > 9 {
            return Err(Error::InfeasibleWidth {
                n,
                reason: "brute-force check supports n ≤ 9".into(),
            });
        }
    }

    let pipe_config = PipelineConfig {
        max_retries: cfg.max_retries,
        solver: CandidateSolver::Lattice {
            delta: cfg.lll_delta,
            lambda: cfg.lambda_policy.clone(),
        },
        ..PipelineConfig::default()
    };

    let started = Instant::now();
    let kind = cfg.kind.stream_id();
    let total = cfg.ns.len() as u64 * cfg.trials;
    let results: Vec<(RunRecord, StageTimings)> = run_trials(cfg.parallel, total, |idx| {
        let n = cfg.ns[(idx / cfg.trials) as usize];
        let trial = idx % cfg.trials;
        let mut slope_rng = derive(cfg.seed, &[label::SLOPE, kind, n as u64, trial]);
        let inst = crate::dihedral::HiddenInstance::random(n, &mut slope_rng).expect("n ≥ 4");
        let run_seed: u64 = derive(cfg.seed, &[label::TRIAL, kind, n as u64, trial]).gen();

        let result = run_pipeline(&inst, run_seed, &pipe_config).expect("validated widths");
        let parity = result.parity();
        let parity_correct = parity.map(|p| p == inst.parity());

        let brute_force_ok = cfg.brute_force_check.then(|| {
            let oracle_config = PipelineConfig {
                solver: CandidateSolver::Exhaustive,
                ..pipe_config.clone()
            };
            let oracle = run_pipeline(&inst, run_seed, &oracle_config).expect("validated");
            match (parity, oracle.parity()) {
                // The complete solver must agree whenever both finish, and a
                // lattice-solver completion implies a complete-solver one.
                (Some(p), Some(q)) => p == q,
                (Some(_), None) => false,
                (None, _) => true,
            }
        });

        (
            RunRecord {
                n,
                trial,
                planted_slope: inst.slope().to_string(),
                completed: parity.is_some(),
                parity,
                parity_correct,
                attempts: result.attempts,
                retries: result.retries,
                failures: result.failures,
                brute_force_ok,
            },
            result.timings,
        )
    });

    let records: Vec<RunRecord> = results.iter().map(|(r, _)| r.clone()).collect();
    let aggregates = cfg
        .ns
        .iter()
        .map(|&n| {
            let rows: Vec<&RunRecord> = records.iter().filter(|r| r.n == n).collect();
            let completed = rows.iter().filter(|r| r.completed).count() as u64;
            let wrong = rows
                .iter()
                .filter(|r| r.parity_correct == Some(false))
                .count() as u64;
            let mut failures = FailureBreakdown::default();
            for r in &rows {
                failures.too_few_survivors += r.failures.too_few_survivors;
                failures.no_valid_pair += r.failures.no_valid_pair;
                failures.projection_missed += r.failures.projection_missed;
                failures.sv_not_found += r.failures.sv_not_found;
            }
            let mismatches = rows
                .iter()
                .filter(|r| r.brute_force_ok == Some(false))
                .count() as u64;
            RunAggregate {
                n,
                trials: rows.len() as u64,
                completed,
                wrong_parity: wrong,
                completion: binomial_estimate(completed, rows.len() as u64),
                mean_attempts: rows.iter().map(|r| r.attempts as f64).sum::<f64>()
                    / rows.len() as f64,
                failures,
                oracle_mismatches: mismatches,
            }
        })
        .collect();

    let stage_means = {
        let count = results.len() as f64;
        let sum = |f: fn(&StageTimings) -> u64| {
            results.iter().map(|(_, t)| f(t) as f64).sum::<f64>() / count
        };
        StageMeans {
            sample: sum(|t| t.sample_us),
            filter: sum(|t| t.filter_us),
            assemble: sum(|t| t.assemble_us),
            recover: sum(|t| t.recover_us),
            select: sum(|t| t.select_us),
            measure: sum(|t| t.measure_us),
        }
    };

    let total_us = started.elapsed().as_micros() as u64;
    Ok(ExperimentReport {
        schema_version: SCHEMA_VERSION,
        experiment: cfg.kind.name().to_string(),
        config: cfg.echo(),
        records,
        aggregates,
        timing: TimingSummary {
            total_us,
            mean_trial_us: total_us as f64 / total as f64,
            stage_means_us: Some(stage_means),
        },
    })
}

impl CsvReport for RunReport {
    fn to_csv(&self) -> String {
        let mut out = String::from(
            "n,trials,completed,wrong_parity,completion_rate,ci95_low,ci95_high,mean_attempts,\
             too_few_survivors,no_valid_pair,projection_missed,sv_not_found,oracle_mismatches\n",
        );
        for a in &self.aggregates {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                a.n,
                a.trials,
                a.completed,
                a.wrong_parity,
                a.completion.estimate,
                a.completion.ci95_low,
                a.completion.ci95_high,
                a.mean_attempts,
                a.failures.too_few_survivors,
                a.failures.no_valid_pair,
                a.failures.projection_missed,
                a.failures.sv_not_found,
                a.oracle_mismatches
            ));
        }
        out
    }
}
