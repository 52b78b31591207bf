//! Permutation replicate engines.
//!
//! The observed statistic and every replicate statistic are produced by the
//! same prepared structures: per-column sort orders and row sums for the
//! marginal methods, U-centered distance matrices for the full method. A
//! replicate never recomputes distances from scratch — it re-indexes the
//! prepared data through the permutation — an equivalence the test suite
//! checks against naive recomputation.

use rayon::prelude::*;

use crate::dcor::finish_dcor;
use crate::dcor::{pairwise_distances, u_center, unbiased_dcov, DataMatrix, MergeScratch, UCenteredMatrix};
use crate::error::{Error, Result};
use crate::marginal::PreparedGrid;
use crate::rng::{derive_seed, fisher_yates, invert_permutation, rng_from_seed};
use crate::sum::Accumulator;

use super::{Method, PermutationConfig, PvalueMode, TestKind, TestOutcome};

/// Full-dimensional statistic with cached U-centered matrices; permuting X
/// rows only re-indexes its matrix, the variances are unchanged.
pub(crate) struct FullEngine {
    a: UCenteredMatrix,
    b: UCenteredMatrix,
    denom: f64,
    observed: f64,
    n: usize,
}

impl FullEngine {
    pub fn new(x: &DataMatrix, y: &DataMatrix) -> Result<Self> {
        let n = x.n();
        if n != y.n() {
            return Err(Error::ShapeMismatch(format!(
                "X has {n} rows, Y has {} rows",
                y.n()
            )));
        }
        if n < 4 {
            return Err(Error::SampleTooSmall { n, min: 4 });
        }
        let dx = pairwise_distances(x)?;
        let dy = pairwise_distances(y)?;
        let a = u_center(&dx)?;
        let b = u_center(&dy)?;
        let dcov = unbiased_dcov(&a, &b)?;
        let dvar_x = unbiased_dcov(&a, &a)?;
        let dvar_y = unbiased_dcov(&b, &b)?;
        let result = finish_dcor(dcov, dvar_x, dvar_y, dx.mean_offdiag(), dy.mean_offdiag())?;
        Ok(Self {
            a,
            b,
            denom: (dvar_x * dvar_y).sqrt(),
            observed: result.dcor,
            n,
        })
    }

    pub fn observed(&self) -> f64 {
        self.observed
    }

    /// Statistic with X rows permuted: A'(s,t) = A(perm[s], perm[t]).
    pub fn statistic(&self, perm: &[u32]) -> f64 {
        let n = self.n;
        let ae = self.a.entries();
        let be = self.b.entries();
        let mut acc = Accumulator::new();
        for s in 0..n {
            let ps = perm[s] as usize * n;
            let brow = &be[s * n..(s + 1) * n];
            for (t, &bv) in brow.iter().enumerate() {
                if s != t {
                    acc.add(ae[ps + perm[t] as usize] * bv);
                }
            }
        }
        let dcov = acc.value() / (n as f64 * (n as f64 - 3.0));
        (dcov / self.denom).clamp(-1.0, 1.0)
    }
}

/// Shared replicate loop behind `permutation_test_with`.
pub(crate) fn run(
    x: &DataMatrix,
    y: &DataMatrix,
    method: Method,
    config: &PermutationConfig,
) -> Result<TestOutcome> {
    let n = x.n();
    let r = config.replicates;

    enum Engine {
        Marginal(PreparedGrid),
        Full(FullEngine),
    }

    let engine = match method {
        Method::Max | Method::Avg => Engine::Marginal(PreparedGrid::new(x, y, config.policy)?),
        Method::Full => Engine::Full(FullEngine::new(x, y)?),
    };

    let observed = match &engine {
        Engine::Marginal(grid) => {
            let mut scratch = MergeScratch::new(n);
            let stats = grid.stats(None, &mut scratch);
            match method {
                Method::Max => stats.max,
                Method::Avg => stats.avg,
                Method::Full => unreachable!(),
            }
        }
        Engine::Full(full) => full.observed(),
    };

    let (count_gt, count_ge) = (0..r)
        .into_par_iter()
        .map_init(
            || MergeScratch::new(n),
            |scratch, s| {
                let mut rng = rng_from_seed(derive_seed(&[config.seed, s as u64]));
                let perm = fisher_yates(n, &mut rng);
                let stat = match &engine {
                    Engine::Marginal(grid) => {
                        let inv = invert_permutation(&perm);
                        let stats = grid.stats(Some(&inv), scratch);
                        match method {
                            Method::Max => stats.max,
                            Method::Avg => stats.avg,
                            Method::Full => unreachable!(),
                        }
                    }
                    Engine::Full(full) => full.statistic(&perm),
                };
                (u64::from(stat > observed), u64::from(stat >= observed))
            },
        )
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));

    let p_value = match config.pvalue_mode {
        PvalueMode::PlusOne => (1.0 + count_ge as f64) / (r as f64 + 1.0),
        PvalueMode::Raw => count_gt as f64 / r as f64,
    };

    Ok(TestOutcome {
        method,
        test_kind: TestKind::Permutation,
        statistic: observed,
        p_value,
        n,
        p: x.d(),
        q: y.d(),
        permutations_used: Some(r),
        seed: Some(config.seed),
    })
}
