//! C ABI for the dhsp library.
//!
//! Arbitrary-precision values cross the boundary as NUL-terminated decimal
//! strings; solution sets are owned by opaque handles with explicit
//! destructors. Every entry point returns a [`DhspStatus`] and never
//! unwinds; `dhsp_last_error` describes the most recent failure on the
//! calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::str::FromStr;

use num_bigint::BigUint;

use dhsp::dihedral::HiddenInstance;
use dhsp::lattice::LllDelta;
use dhsp::pipeline::{run_pipeline, PipelineConfig, PipelineOutcome};
use dhsp::subset_sum::{sv_solve, LambdaPolicy, SubsetSumInstance};

/// Result of every API call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DhspStatus {
    Ok = 0,
    /// A pointer was null or an argument failed to parse or validate.
    InvalidArgument = 1,
    /// The requested index or object does not exist.
    NotFound = 2,
    /// The configuration is outside the supported range.
    Unsupported = 3,
    /// An internal invariant failed.
    Internal = 4,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg).unwrap_or_else(|_| CString::new("invalid error text").unwrap());
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: DhspStatus, msg: impl Into<String>) -> DhspStatus {
    set_error(msg.into());
    status
}

/// Message for the most recent error on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn dhsp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| {
        e.borrow()
            .as_ref()
            .map_or(std::ptr::null(), |c| c.as_ptr())
    })
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn dhsp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

unsafe fn parse_c_str<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, String> {
    if ptr.is_null() {
        return Err(format!("{what} pointer is null"));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| format!("{what} is not valid UTF-8"))
}

unsafe fn parse_biguint(ptr: *const c_char, what: &str) -> Result<BigUint, String> {
    let s = parse_c_str(ptr, what)?;
    BigUint::from_str(s.trim()).map_err(|_| format!("{what} '{s}' is not a decimal integer"))
}

unsafe fn parse_delta(ptr: *const c_char) -> Result<LllDelta, String> {
    if ptr.is_null() {
        return Ok(LllDelta::default());
    }
    parse_c_str(ptr, "lll_delta")?
        .parse::<LllDelta>()
        .map_err(|e| e.to_string())
}

unsafe fn parse_lambda(ptr: *const c_char) -> Result<LambdaPolicy, String> {
    if ptr.is_null() {
        return Ok(LambdaPolicy::Auto);
    }
    parse_c_str(ptr, "lambda_policy")?
        .parse::<LambdaPolicy>()
        .map_err(|e| e.to_string())
}

/// An owned set of verified subset sum solutions.
pub struct DhspSolutions {
    arity: usize,
    items: Vec<Vec<u8>>,
}

/// Solve a subset sum instance.
///
/// `weights` points to `weight_count` decimal strings; `target` is a decimal
/// string. `lll_delta` ("p/q") and `lambda_policy` ("auto" or a decimal)
/// may be null for the defaults. On success `*out` owns the solution set
/// and must be released with `dhsp_solutions_free`. Finding no solution is
/// still `DHSP_STATUS_OK`; the set is just empty.
///
/// # Safety
/// All pointers must be valid for the duration of the call.
#[no_mangle]
pub unsafe extern "C" fn dhsp_subset_sum_solve(
    weights: *const *const c_char,
    weight_count: usize,
    target: *const c_char,
    lll_delta: *const c_char,
    lambda_policy: *const c_char,
    out: *mut *mut DhspSolutions,
) -> DhspStatus {
    if out.is_null() {
        return fail(DhspStatus::InvalidArgument, "out pointer is null");
    }
    *out = std::ptr::null_mut();
    if weights.is_null() || weight_count == 0 {
        return fail(DhspStatus::InvalidArgument, "need at least one weight");
    }

    let mut parsed = Vec::with_capacity(weight_count);
    for i in 0..weight_count {
        match parse_biguint(*weights.add(i), &format!("weight {i}")) {
            Ok(w) => parsed.push(w),
            Err(e) => return fail(DhspStatus::InvalidArgument, e),
        }
    }
    let target = match parse_biguint(target, "target") {
        Ok(t) => t,
        Err(e) => return fail(DhspStatus::InvalidArgument, e),
    };
    let delta = match parse_delta(lll_delta) {
        Ok(d) => d,
        Err(e) => return fail(DhspStatus::InvalidArgument, e),
    };
    let lambda = match parse_lambda(lambda_policy) {
        Ok(l) => l,
        Err(e) => return fail(DhspStatus::InvalidArgument, e),
    };

    let inst = match SubsetSumInstance::new(parsed, target) {
        Ok(i) => i,
        Err(e) => return fail(DhspStatus::InvalidArgument, e.to_string()),
    };

    let solved = catch_unwind(AssertUnwindSafe(|| {
        sv_solve(&inst, delta, &lambda)
            .into_iter()
            .map(|s| s.bits)
            .collect::<Vec<_>>()
    }));
    match solved {
        Ok(items) => {
            let boxed = Box::new(DhspSolutions {
                arity: weight_count,
                items,
            });
            *out = Box::into_raw(boxed);
            DhspStatus::Ok
        }
        Err(_) => fail(DhspStatus::Internal, "solver panicked"),
    }
}

/// Number of solutions in the set.
///
/// # Safety
/// `set` must be a live handle from `dhsp_subset_sum_solve`.
#[no_mangle]
pub unsafe extern "C" fn dhsp_solutions_count(set: *const DhspSolutions) -> usize {
    if set.is_null() {
        return 0;
    }
    (*set).items.len()
}

/// Number of bits per solution (the instance size m).
///
/// # Safety
/// `set` must be a live handle from `dhsp_subset_sum_solve`.
#[no_mangle]
pub unsafe extern "C" fn dhsp_solutions_arity(set: *const DhspSolutions) -> usize {
    if set.is_null() {
        return 0;
    }
    (*set).arity
}

/// Copy solution `index` into `buf` as one 0/1 byte per weight.
///
/// # Safety
/// `set` must be live and `buf` must hold at least `buf_len` bytes.
#[no_mangle]
pub unsafe extern "C" fn dhsp_solutions_bits(
    set: *const DhspSolutions,
    index: usize,
    buf: *mut u8,
    buf_len: usize,
) -> DhspStatus {
    if set.is_null() || buf.is_null() {
        return fail(DhspStatus::InvalidArgument, "null pointer");
    }
    let set = &*set;
    let Some(bits) = set.items.get(index) else {
        return fail(
            DhspStatus::NotFound,
            format!("no solution at index {index}"),
        );
    };
    if buf_len < bits.len() {
        return fail(
            DhspStatus::InvalidArgument,
            format!("buffer holds {buf_len} bytes, need {}", bits.len()),
        );
    }
    std::ptr::copy_nonoverlapping(bits.as_ptr(), buf, bits.len());
    DhspStatus::Ok
}

/// Release a solution set.
///
/// # Safety
/// `set` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn dhsp_solutions_free(set: *mut DhspSolutions) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// Outcome of one pipeline run.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct DhspRunSummary {
    /// True when some attempt completed and `parity` is meaningful.
    pub completed: bool,
    /// Recovered parity of the slope (0 or 1) when completed.
    pub parity: u8,
    pub attempts: u32,
    pub retries: u32,
    pub failed_too_few_survivors: u32,
    pub failed_no_valid_pair: u32,
    pub failed_projection_missed: u32,
    pub failed_sv_not_found: u32,
}

/// Run the end-to-end parity recovery for a width-n instance.
///
/// `slope_decimal` fixes the hidden slope; pass null to draw it from the
/// seed. The run itself is deterministic given (n, slope, seed,
/// max_retries).
///
/// # Safety
/// `out` must point to writable memory; `slope_decimal` may be null.
#[no_mangle]
pub unsafe extern "C" fn dhsp_pipeline_run(
    n: u32,
    slope_decimal: *const c_char,
    seed: u64,
    max_retries: u32,
    out: *mut DhspRunSummary,
) -> DhspStatus {
    if out.is_null() {
        return fail(DhspStatus::InvalidArgument, "out pointer is null");
    }
    let slope = if slope_decimal.is_null() {
        let mut rng = dhsp::rng::derive(seed, &[dhsp::rng::label::SLOPE]);
        dhsp::rng::gen_biguint_below_pow2(&mut rng, n)
    } else {
        match parse_biguint(slope_decimal, "slope") {
            Ok(s) => s,
            Err(e) => return fail(DhspStatus::InvalidArgument, e),
        }
    };
    let inst = match HiddenInstance::new(n, slope) {
        Ok(i) => i,
        Err(e) => return fail(DhspStatus::InvalidArgument, e.to_string()),
    };
    let config = PipelineConfig {
        max_retries: max_retries.max(1),
        ..PipelineConfig::default()
    };

    let run = catch_unwind(AssertUnwindSafe(|| run_pipeline(&inst, seed, &config)));
    match run {
        Ok(Ok(result)) => {
            let (completed, parity) = match result.outcome {
                PipelineOutcome::Parity(p) => (true, p),
                PipelineOutcome::Exhausted(_) => (false, 0),
            };
            *out = DhspRunSummary {
                completed,
                parity,
                attempts: result.attempts,
                retries: result.retries,
                failed_too_few_survivors: result.failures.too_few_survivors,
                failed_no_valid_pair: result.failures.no_valid_pair,
                failed_projection_missed: result.failures.projection_missed,
                failed_sv_not_found: result.failures.sv_not_found,
            };
            DhspStatus::Ok
        }
        Ok(Err(e)) => fail(DhspStatus::Unsupported, e.to_string()),
        Err(_) => fail(DhspStatus::Internal, "pipeline panicked"),
    }
}
