//! Hypothesis tests: permutation and closed-form chi-square p-values.
//!
//! Three test statistics are supported: the maximum marginal correlation,
//! the average marginal correlation, and the full-dimensional statistic
//! computed on all dimensions at once. P-values come either from a seeded
//! permutation test (rows of X permuted, statistic recomputed) or from the
//! chi-square tail bounds
//!
//! ```text
//! max:  p = 1 - F1(n c^M + 1)^(pq)
//! avg:  p = 1 - F_pq(pq (n c^A + 1))
//! full: p = 1 - F1(n c + 1)
//! ```
//!
//! where `F_k` is the chi-square CDF with k degrees of freedom. The bounds
//! are valid (conservative) at type 1 error levels alpha <= 0.05; the level
//! is exposed as a caller parameter, and the guarantee is only claimed in
//! that range.

mod chisq;
mod permutation;

pub use chisq::{chisq_cdf, chisq_sf};

use crate::dcor::DataMatrix;
use crate::error::{Error, Result};
use crate::marginal::{ColumnPolicy, PreparedGrid};
use std::fmt;

/// Which aggregate of the sample is the test statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Maximum marginal correlation.
    Max,
    /// Average marginal correlation.
    Avg,
    /// Statistic on all dimensions jointly.
    Full,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Max, Method::Avg, Method::Full];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Max => "max",
            Method::Avg => "avg",
            Method::Full => "full",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max" => Ok(Method::Max),
            "avg" => Ok(Method::Avg),
            "full" => Ok(Method::Full),
            other => Err(Error::InvalidParameter(format!("unknown method: {other}"))),
        }
    }
}

/// How the p-value is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TestKind {
    Permutation,
    ChiSquare,
}

impl TestKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            TestKind::Permutation => "permutation",
            TestKind::ChiSquare => "chisquare",
        }
    }
}

impl fmt::Display for TestKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for TestKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "permutation" => Ok(TestKind::Permutation),
            "chisquare" => Ok(TestKind::ChiSquare),
            other => Err(Error::InvalidParameter(format!("unknown test: {other}"))),
        }
    }
}

/// Permutation p-value convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PvalueMode {
    /// `(1 + #{replicate >= observed}) / (r + 1)`: never zero, level-valid
    /// at any replicate count. The default.
    #[default]
    PlusOne,
    /// `#{replicate > observed} / r`: the raw ratio, which can return zero.
    Raw,
}

/// Result of one hypothesis test, with enough metadata to re-run it.
#[derive(Debug, Clone, PartialEq)]
pub struct TestOutcome {
    pub method: Method,
    pub test_kind: TestKind,
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
    pub p: usize,
    pub q: usize,
    /// Replicate count for permutation outcomes, `None` for chi-square.
    pub permutations_used: Option<usize>,
    /// Seed for permutation outcomes, `None` for chi-square.
    pub seed: Option<u64>,
}

fn check_pvalue_params(n: usize, p: usize, q: usize) -> Result<u64> {
    if n < 4 {
        return Err(Error::InvalidParameter(format!(
            "n = {n}, the chi-square tests require n >= 4"
        )));
    }
    if p < 1 || q < 1 {
        return Err(Error::InvalidParameter(format!(
            "dimensions must be >= 1, got p = {p}, q = {q}"
        )));
    }
    Ok(p as u64 * q as u64)
}

/// P-value of the maximum-statistic chi-square test:
/// `1 - F1(n c_max + 1)^(pq)`, computed in log space so dimension products
/// up to 1e6 and beyond do not underflow. Arguments at or below zero give
/// p = 1.
pub fn chisq_max_pvalue(c_max: f64, n: usize, p: usize, q: usize) -> Result<f64> {
    let pq = check_pvalue_params(n, p, q)?;
    if !c_max.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "non-finite statistic: {c_max}"
        )));
    }
    let arg = n as f64 * c_max + 1.0;
    if arg <= 0.0 {
        return Ok(1.0);
    }
    let sf = chisq_sf(arg, 1)?;
    // 1 - (1 - sf)^pq = -expm1(pq log1p(-sf)).
    Ok((-((pq as f64) * (-sf).ln_1p()).exp_m1()).clamp(0.0, 1.0))
}

/// P-value of the average-statistic chi-square test:
/// `1 - F_pq(pq (n c_avg + 1))`.
pub fn chisq_avg_pvalue(c_avg: f64, n: usize, p: usize, q: usize) -> Result<f64> {
    let pq = check_pvalue_params(n, p, q)?;
    if !c_avg.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "non-finite statistic: {c_avg}"
        )));
    }
    let arg = pq as f64 * (n as f64 * c_avg + 1.0);
    if arg <= 0.0 {
        return Ok(1.0);
    }
    chisq_sf(arg, pq)
}

/// P-value of the full-statistic chi-square test: `1 - F1(n c + 1)`,
/// the single-pair case of the maximum formula.
pub fn chisq_full_pvalue(c_full: f64, n: usize) -> Result<f64> {
    check_pvalue_params(n, 1, 1)?;
    if !c_full.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "non-finite statistic: {c_full}"
        )));
    }
    let arg = n as f64 * c_full + 1.0;
    if arg <= 0.0 {
        return Ok(1.0);
    }
    chisq_sf(arg, 1)
}

/// Chi-square test of independence on a paired sample.
pub fn chisquare_test(
    x: &DataMatrix,
    y: &DataMatrix,
    method: Method,
    policy: ColumnPolicy,
) -> Result<TestOutcome> {
    let (n, p, q) = (x.n(), x.d(), y.d());
    let (statistic, p_value) = match method {
        Method::Max | Method::Avg => {
            let prepared = PreparedGrid::new(x, y, policy)?;
            let mut scratch = crate::dcor::MergeScratch::new(n);
            let stats = prepared.stats(None, &mut scratch);
            match method {
                Method::Max => (stats.max, chisq_max_pvalue(stats.max, n, p, q)?),
                Method::Avg => (stats.avg, chisq_avg_pvalue(stats.avg, n, p, q)?),
                Method::Full => unreachable!(),
            }
        }
        Method::Full => {
            let engine = permutation::FullEngine::new(x, y)?;
            let c = engine.observed();
            (c, chisq_full_pvalue(c, n)?)
        }
    };
    Ok(TestOutcome {
        method,
        test_kind: TestKind::ChiSquare,
        statistic,
        p_value,
        n,
        p,
        q,
        permutations_used: None,
        seed: None,
    })
}

/// Knobs for [`permutation_test_with`].
#[derive(Debug, Clone, Copy)]
pub struct PermutationConfig {
    /// Number of permutation replicates r (>= 1). Default 1000.
    pub replicates: usize,
    pub seed: u64,
    pub pvalue_mode: PvalueMode,
    pub policy: ColumnPolicy,
}

impl Default for PermutationConfig {
    fn default() -> Self {
        Self {
            replicates: 1000,
            seed: 0,
            pvalue_mode: PvalueMode::PlusOne,
            policy: ColumnPolicy::Strict,
        }
    }
}

/// Permutation test with default settings (see [`PermutationConfig`]).
pub fn permutation_test(
    x: &DataMatrix,
    y: &DataMatrix,
    method: Method,
    replicates: usize,
    seed: u64,
) -> Result<TestOutcome> {
    permutation_test_with(
        x,
        y,
        method,
        &PermutationConfig {
            replicates,
            seed,
            ..PermutationConfig::default()
        },
    )
}

/// Permutation test of independence.
///
/// Each replicate permutes the rows of X with a Fisher–Yates shuffle driven
/// by a stream derived from `(seed, replicate index)` and recomputes the
/// statistic, so the p-value is reproducible bit-for-bit at any thread
/// count. Replicates run in parallel.
pub fn permutation_test_with(
    x: &DataMatrix,
    y: &DataMatrix,
    method: Method,
    config: &PermutationConfig,
) -> Result<TestOutcome> {
    if config.replicates < 1 {
        return Err(Error::InvalidParameter(
            "permutation replicates must be >= 1".to_string(),
        ));
    }
    permutation::run(x, y, method, config)
}
