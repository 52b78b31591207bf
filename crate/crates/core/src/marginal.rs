//! Marginal correlation grid and its aggregates.
//!
//! For paired samples X (n x p) and Y (n x q), the grid holds the marginal
//! statistic c(X^i, Y^j) for every dimension pair, from which the maximum
//! (signed, not absolute) and the average are derived. Any statistic
//! satisfying the marginal contract can be plugged in through
//! [`MarginalStatistic`]; the crate ships the unbiased distance correlation.
//!
//! Grid evaluation may run cells in parallel. Cells are pure functions of
//! the two columns, and results are merged in index order, so the output is
//! bit-identical for any thread count.

use rayon::prelude::*;

use crate::dcor::{dcov_prepared, fast_univariate_dcor, DataMatrix, MergeScratch, PreparedColumn};
use crate::dcor::DVAR_REL_TOL;
use crate::error::{Error, Result};
use crate::sum::Accumulator;

/// A marginal dependence statistic: maps two same-length 1-D samples to a
/// real value. Implementations must converge to a population quantity that
/// is zero iff the two variables are independent, with variance O(1/n^2)
/// under independence — the contract the aggregate tests rely on.
pub trait MarginalStatistic: Sync {
    /// Stable identifier recorded in grids computed with this statistic.
    fn id(&self) -> &str;

    /// Evaluate the statistic on one dimension pair.
    fn evaluate(&self, x: &[f64], y: &[f64]) -> Result<f64>;
}

/// The default marginal statistic: unbiased distance correlation, evaluated
/// through the O(n log n) univariate kernel.
#[derive(Debug, Clone, Copy, Default)]
pub struct UnbiasedDcor;

impl MarginalStatistic for UnbiasedDcor {
    fn id(&self) -> &str {
        "unbiased_dcor"
    }

    fn evaluate(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        Ok(fast_univariate_dcor(x, y)?.dcor)
    }
}

/// What to do with a constant (zero distance variance) column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnPolicy {
    /// Error out naming the offending column (default).
    Strict,
    /// Exclude the column's cells from the maximum and count them as zero
    /// in the average.
    Permissive,
}

/// The p x q matrix of marginal statistics, stored row-major: row i holds
/// c(X^i, Y^j) for all j.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalGrid {
    values: Vec<f64>,
    p: usize,
    q: usize,
    statistic_id: String,
    /// Cells excluded under the permissive policy (their value is 0.0).
    excluded: Vec<(usize, usize)>,
}

impl MarginalGrid {
    /// Build a grid from raw row-major values.
    pub fn from_values(values: Vec<f64>, p: usize, q: usize, statistic_id: &str) -> Result<Self> {
        if p == 0 || q == 0 || values.is_empty() {
            return Err(Error::InvalidGrid("empty grid".to_string()));
        }
        if values.len() != p * q {
            return Err(Error::InvalidGrid(format!(
                "expected {p} x {q} = {} cells, got {}",
                p * q,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("non-finite grid cell".to_string()));
        }
        Ok(Self {
            values,
            p,
            q,
            statistic_id: statistic_id.to_string(),
            excluded: Vec::new(),
        })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn statistic_id(&self) -> &str {
        &self.statistic_id
    }

    /// Cell (i, j), zero-based.
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.q + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Cells excluded by the permissive column policy.
    pub fn excluded(&self) -> &[(usize, usize)] {
        &self.excluded
    }

    fn is_excluded(&self, i: usize, j: usize) -> bool {
        self.excluded.binary_search(&(i, j)).is_ok()
    }
}

/// Maximum cell, its position, and the grid average.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aggregate {
    /// Largest cell value (signed).
    pub max_value: f64,
    /// Zero-based position of the maximum; ties resolve to the
    /// lexicographically smallest (i, j).
    pub argmax: (usize, usize),
    /// Mean over all p*q cells.
    pub avg_value: f64,
}

/// Compute the full grid of marginal statistics.
///
/// Deterministic: the result is identical for any thread count. Under
/// `ColumnPolicy::Strict` a constant column raises `DegenerateSample` naming
/// the column and the first offending cell.
pub fn marginal_grid(
    x: &DataMatrix,
    y: &DataMatrix,
    stat: &dyn MarginalStatistic,
    policy: ColumnPolicy,
) -> Result<MarginalGrid> {
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
    let (p, q) = (x.d(), y.d());

    let raw: Vec<Result<f64>> = (0..p * q)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / q, idx % q);
            stat.evaluate(x.column(i), y.column(j))
        })
        .collect();

    collect_grid(raw, p, q, stat.id(), policy)
}

/// Grid of unbiased distance correlations via shared per-column
/// preparation; bit-identical to [`marginal_grid`] with [`UnbiasedDcor`]
/// but avoids re-sorting each column q (resp. p) times.
pub fn dcor_marginal_grid(
    x: &DataMatrix,
    y: &DataMatrix,
    policy: ColumnPolicy,
) -> Result<MarginalGrid> {
    let prepared = PreparedGrid::new(x, y, policy)?;
    let raw: Vec<Result<f64>> = (0..prepared.p * prepared.q)
        .into_par_iter()
        .map_init(
            || MergeScratch::new(prepared.n),
            |scratch, idx| {
                let (i, j) = (idx / prepared.q, idx % prepared.q);
                prepared.cell(i, j, None, scratch)
            },
        )
        .collect();
    collect_grid(raw, prepared.p, prepared.q, "unbiased_dcor", policy)
}

fn collect_grid(
    raw: Vec<Result<f64>>,
    p: usize,
    q: usize,
    statistic_id: &str,
    policy: ColumnPolicy,
) -> Result<MarginalGrid> {
    let mut values = Vec::with_capacity(p * q);
    let mut excluded = Vec::new();
    for (idx, cell) in raw.into_iter().enumerate() {
        let (i, j) = (idx / q, idx % q);
        match cell {
            Ok(v) => values.push(v),
            Err(Error::DegenerateSample(msg)) => match policy {
                ColumnPolicy::Strict => {
                    return Err(Error::DegenerateSample(format!(
                        "{msg} at grid cell ({}, {})",
                        i + 1,
                        j + 1
                    )))
                }
                ColumnPolicy::Permissive => {
                    values.push(0.0);
                    excluded.push((i, j));
                }
            },
            Err(other) => return Err(other),
        }
    }
    if excluded.len() == p * q {
        return Err(Error::DegenerateSample(
            "every grid cell is degenerate".to_string(),
        ));
    }
    let mut grid = MarginalGrid::from_values(values, p, q, statistic_id)?;
    grid.excluded = excluded;
    Ok(grid)
}

/// Maximum aggregate of a grid (signed maximum, lexicographic tie-break),
/// with the average populated alongside.
pub fn max_marginal(grid: &MarginalGrid) -> Result<Aggregate> {
    let mut best: Option<(f64, (usize, usize))> = None;
    for i in 0..grid.p {
        for j in 0..grid.q {
            if grid.is_excluded(i, j) {
                continue;
            }
            let v = grid.value(i, j);
            if best.is_none_or(|(bv, _)| v > bv) {
                best = Some((v, (i, j)));
            }
        }
    }
    let (max_value, argmax) = best.ok_or_else(|| {
        Error::InvalidGrid("no evaluable cells: every cell is excluded".to_string())
    })?;
    Ok(Aggregate {
        max_value,
        argmax,
        avg_value: avg_marginal(grid)?,
    })
}

/// Arithmetic mean of all p*q cells (excluded cells count as zero).
pub fn avg_marginal(grid: &MarginalGrid) -> Result<f64> {
    if grid.values.is_empty() {
        return Err(Error::InvalidGrid("empty grid".to_string()));
    }
    let mut acc = Accumulator::new();
    for &v in &grid.values {
        acc.add(v);
    }
    Ok(acc.value() / (grid.p * grid.q) as f64)
}

/// Per-column preparation of a paired sample, shared between grid
/// evaluation and the permutation test. Column degeneracy is decided here
/// once — distance variance does not depend on the row pairing, so the set
/// of excluded cells is permutation-invariant.
pub(crate) struct PreparedGrid {
    pub(crate) x_cols: Vec<PreparedColumn>,
    pub(crate) y_cols: Vec<PreparedColumn>,
    x_ok: Vec<bool>,
    y_ok: Vec<bool>,
    pub(crate) n: usize,
    pub(crate) p: usize,
    pub(crate) q: usize,
}

/// Signed maximum and average of one (possibly permuted) grid.
#[derive(Debug, Clone, Copy)]
pub(crate) struct GridStats {
    pub max: f64,
    pub avg: f64,
}

impl PreparedGrid {
    pub fn new(x: &DataMatrix, y: &DataMatrix, policy: ColumnPolicy) -> Result<Self> {
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
        let prepare = |m: &DataMatrix, name: &str| -> Result<(Vec<PreparedColumn>, Vec<bool>)> {
            let cols: Vec<PreparedColumn> =
                (0..m.d()).map(|j| PreparedColumn::new(m.column(j))).collect();
            let ok: Vec<bool> = cols
                .iter()
                .map(|c| c.dvar() > DVAR_REL_TOL * c.scale() * c.scale())
                .collect();
            if policy == ColumnPolicy::Strict {
                if let Some(j) = ok.iter().position(|&b| !b) {
                    return Err(Error::DegenerateSample(format!(
                        "column {} of {name} has zero distance variance",
                        j + 1
                    )));
                }
            }
            Ok((cols, ok))
        };
        let (x_cols, x_ok) = prepare(x, "X")?;
        let (y_cols, y_ok) = prepare(y, "Y")?;
        if !x_ok.contains(&true) || !y_ok.contains(&true) {
            return Err(Error::DegenerateSample(
                "every grid cell is degenerate".to_string(),
            ));
        }
        Ok(Self {
            x_cols,
            y_cols,
            x_ok,
            y_ok,
            n,
            p: x.d(),
            q: y.d(),
        })
    }

    /// One grid cell under an optional row permutation of X (`inv` is the
    /// inverse permutation). Degenerate columns surface as errors so the
    /// caller applies its policy.
    pub fn cell(
        &self,
        i: usize,
        j: usize,
        inv: Option<&[u32]>,
        scratch: &mut MergeScratch,
    ) -> Result<f64> {
        if !self.x_ok[i] {
            return Err(Error::DegenerateSample(format!(
                "column {} of X has zero distance variance",
                i + 1
            )));
        }
        if !self.y_ok[j] {
            return Err(Error::DegenerateSample(format!(
                "column {} of Y has zero distance variance",
                j + 1
            )));
        }
        let a = &self.x_cols[i];
        let b = &self.y_cols[j];
        let dcov = dcov_prepared(a, b, inv, scratch);
        Ok((dcov / (a.dvar() * b.dvar()).sqrt()).clamp(-1.0, 1.0))
    }

    /// Max/avg aggregates of the grid under a permutation, skipping excluded
    /// cells for the max and counting them as zero in the average.
    pub fn stats(&self, inv: Option<&[u32]>, scratch: &mut MergeScratch) -> GridStats {
        let mut best: Option<f64> = None;
        let mut acc = Accumulator::new();
        for i in 0..self.p {
            if !self.x_ok[i] {
                continue;
            }
            for j in 0..self.q {
                if !self.y_ok[j] {
                    continue;
                }
                let a = &self.x_cols[i];
                let b = &self.y_cols[j];
                let dcov = dcov_prepared(a, b, inv, scratch);
                let v = (dcov / (a.dvar() * b.dvar()).sqrt()).clamp(-1.0, 1.0);
                if best.is_none_or(|bv| v > bv) {
                    best = Some(v);
                }
                acc.add(v);
            }
        }
        GridStats {
            // Construction guarantees at least one evaluable cell.
            max: best.expect("no evaluable cells"),
            avg: acc.value() / (self.p * self.q) as f64,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(cols: Vec<Vec<f64>>) -> DataMatrix {
        DataMatrix::from_columns(cols).unwrap()
    }

    #[test]
    fn single_cell_grid_equals_direct_dcor() {
        let x = mat(vec![vec![0.0, 1.0, 2.0, 3.0, 4.5]]);
        let y = mat(vec![vec![2.0, 0.5, -1.0, 3.0, 2.5]]);
        let grid = dcor_marginal_grid(&x, &y, ColumnPolicy::Strict).unwrap();
        assert_eq!(grid.p(), 1);
        assert_eq!(grid.q(), 1);
        let direct = fast_univariate_dcor(x.column(0), y.column(0)).unwrap();
        assert_eq!(grid.value(0, 0).to_bits(), direct.dcor.to_bits());
    }

    #[test]
    fn fast_grid_matches_generic_path_bitwise() {
        let mut rng = crate::rng::rng_from_seed(7);
        let n = 24;
        let x = mat((0..3)
            .map(|_| (0..n).map(|_| crate::rng::uniform_open(&mut rng)).collect())
            .collect());
        let y = mat((0..2)
            .map(|_| (0..n).map(|_| crate::rng::uniform_open(&mut rng)).collect())
            .collect());
        let fast = dcor_marginal_grid(&x, &y, ColumnPolicy::Strict).unwrap();
        let generic = marginal_grid(&x, &y, &UnbiasedDcor, ColumnPolicy::Strict).unwrap();
        for (a, b) in fast.values().iter().zip(generic.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn max_aggregate_single_cell() {
        let grid = MarginalGrid::from_values(vec![0.5], 1, 1, "test").unwrap();
        let agg = max_marginal(&grid).unwrap();
        assert_eq!(agg.max_value, 0.5);
        assert_eq!(agg.argmax, (0, 0));
        assert_eq!(agg.avg_value, 0.5);
    }

    #[test]
    fn max_aggregate_tie_break_lexicographic() {
        let grid =
            MarginalGrid::from_values(vec![0.1, 0.4, 0.4, 0.2], 2, 2, "test").unwrap();
        let agg = max_marginal(&grid).unwrap();
        assert_eq!(agg.max_value, 0.4);
        assert_eq!(agg.argmax, (0, 1));
        assert!((agg.avg_value - 0.275).abs() < 1e-15);
    }

    #[test]
    fn max_aggregate_all_negative_is_signed() {
        let grid =
            MarginalGrid::from_values(vec![-0.5, -0.1, -0.9, -0.3], 2, 2, "test").unwrap();
        let agg = max_marginal(&grid).unwrap();
        assert_eq!(agg.max_value, -0.1);
        assert_eq!(agg.argmax, (0, 1));
    }

    #[test]
    fn avg_cancellation() {
        let grid = MarginalGrid::from_values(vec![1.0, -1.0], 1, 2, "test").unwrap();
        assert_eq!(avg_marginal(&grid).unwrap(), 0.0);
    }

    #[test]
    fn avg_matches_scalar_loop() {
        let values = vec![0.21, -0.04, 0.55, 0.13, -0.38, 0.07];
        let grid = MarginalGrid::from_values(values.clone(), 3, 2, "test").unwrap();
        let expected = values.iter().sum::<f64>() / 6.0;
        assert!((avg_marginal(&grid).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn empty_grid_rejected() {
        assert!(matches!(
            MarginalGrid::from_values(vec![], 0, 0, "test"),
            Err(Error::InvalidGrid(_))
        ));
    }

    #[test]
    fn strict_policy_names_constant_column() {
        let x = mat(vec![vec![0.0, 1.0, 2.0, 3.0], vec![7.0, 7.0, 7.0, 7.0]]);
        let y = mat(vec![vec![1.0, 0.0, 2.0, 5.0]]);
        let err = dcor_marginal_grid(&x, &y, ColumnPolicy::Strict).unwrap_err();
        match err {
            Error::DegenerateSample(msg) => {
                assert!(msg.contains("column 2 of X"), "message: {msg}");
            }
            other => panic!("unexpected error: {other:?}"),
        }
    }

    #[test]
    fn permissive_policy_excludes_constant_column() {
        let x = mat(vec![vec![0.0, 1.0, 2.0, 3.0], vec![7.0, 7.0, 7.0, 7.0]]);
        let y = mat(vec![vec![0.0, 1.0, 2.0, 3.0]]);
        let grid = dcor_marginal_grid(&x, &y, ColumnPolicy::Permissive).unwrap();
        assert_eq!(grid.excluded(), &[(1, 0)]);
        assert_eq!(grid.value(1, 0), 0.0);
        let agg = max_marginal(&grid).unwrap();
        // Max comes from the live cell; average counts the excluded cell as 0.
        assert!((agg.max_value - 1.0).abs() < 1e-9);
        assert_eq!(agg.argmax, (0, 0));
        assert!((agg.avg_value - agg.max_value / 2.0).abs() < 1e-15);
    }

    #[test]
    fn all_columns_degenerate_is_an_error() {
        let x = mat(vec![vec![3.0, 3.0, 3.0, 3.0]]);
        let y = mat(vec![vec![0.0, 1.0, 2.0, 3.0]]);
        assert!(matches!(
            dcor_marginal_grid(&x, &y, ColumnPolicy::Permissive),
            Err(Error::DegenerateSample(_))
        ));
    }

    #[test]
    fn grid_cells_lie_in_unit_interval() {
        let mut rng = crate::rng::rng_from_seed(11);
        let n = 30;
        let x = mat((0..4)
            .map(|_| (0..n).map(|_| crate::rng::uniform_open(&mut rng)).collect())
            .collect());
        let y = mat((0..3)
            .map(|_| (0..n).map(|_| crate::rng::uniform_open(&mut rng)).collect())
            .collect());
        let grid = dcor_marginal_grid(&x, &y, ColumnPolicy::Strict).unwrap();
        for &v in grid.values() {
            assert!((-1.0..=1.0).contains(&v));
        }
        let agg = max_marginal(&grid).unwrap();
        let min = grid.values().iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(min <= agg.avg_value && agg.avg_value <= agg.max_value);
    }

    #[test]
    fn prepared_stats_match_grid_aggregates_bitwise() {
        let mut rng = crate::rng::rng_from_seed(23);
        let n = 20;
        let x = mat((0..3)
            .map(|_| (0..n).map(|_| crate::rng::uniform_open(&mut rng)).collect())
            .collect());
        let y = mat((0..2)
            .map(|_| (0..n).map(|_| crate::rng::uniform_open(&mut rng)).collect())
            .collect());
        let grid = dcor_marginal_grid(&x, &y, ColumnPolicy::Strict).unwrap();
        let agg = max_marginal(&grid).unwrap();

        let prepared = PreparedGrid::new(&x, &y, ColumnPolicy::Strict).unwrap();
        let mut scratch = MergeScratch::new(n);
        let stats = prepared.stats(None, &mut scratch);
        assert_eq!(stats.max.to_bits(), agg.max_value.to_bits());
        assert_eq!(stats.avg.to_bits(), agg.avg_value.to_bits());
    }
}
