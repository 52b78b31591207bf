//! Unbiased distance covariance and correlation.
//!
//! The statistic is built from U-centered Euclidean distance matrices. For a
//! pairwise distance matrix `D` of a sample of size n, the U-centered matrix
//! has zero diagonal and off-diagonal entries
//!
//! ```text
//! A(i,j) = D(i,j) - S_i/(n-2) - S_j/(n-2) + T/((n-1)(n-2))
//! ```
//!
//! where `S_i` is the i-th row sum of `D` and `T` its total sum. The unbiased
//! distance covariance of two same-size U-centered matrices is
//!
//! ```text
//! dcov(A, B) = sum_{i != j} A(i,j) B(i,j) / (n (n-3))
//! ```
//!
//! and the correlation normalizes by the distance variances,
//! `dcor = dcov / sqrt(dvar_x dvar_y)`. Under independence the statistic has
//! expectation zero and may be negative; it always lies in [-1, 1].
//!
//! Two evaluation paths are provided: a naive O(n^2) path that follows the
//! formulas above literally (kept permanently as the reference for property
//! tests), and an O(n log n) univariate path in [`fast_univariate_dcor`].

mod fast;

pub(crate) use fast::{dcov_prepared, MergeScratch, PreparedColumn};

use crate::error::{Error, Result};
use crate::sum::{self, Accumulator};

/// Relative tolerance below which a distance variance is treated as zero.
/// Compared against the squared mean off-diagonal distance, so the check is
/// scale-invariant.
pub(crate) const DVAR_REL_TOL: f64 = 1e-12;

/// An n x d real matrix: n samples (rows) over d dimensions (columns).
///
/// Storage is column-major; every statistic in this crate consumes columns.
/// All entries are guaranteed finite by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: Vec<f64>,
    n: usize,
    d: usize,
}

impl DataMatrix {
    /// Build from column-major storage. Rejects empty shapes, size
    /// mismatches, and non-finite entries.
    pub fn from_column_major(values: Vec<f64>, n: usize, d: usize) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::InvalidData(format!("empty matrix: {n} x {d}")));
        }
        if values.len() != n * d {
            return Err(Error::ShapeMismatch(format!(
                "expected {n} x {d} = {} values, got {}",
                n * d,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!(
                "non-finite entry at row {}, column {}",
                pos % n + 1,
                pos / n + 1
            )));
        }
        Ok(Self { values, n, d })
    }

    /// Build from a list of columns of equal length.
    pub fn from_columns(columns: Vec<Vec<f64>>) -> Result<Self> {
        let d = columns.len();
        let n = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != n) {
            return Err(Error::ShapeMismatch(
                "columns have unequal lengths".to_string(),
            ));
        }
        let mut values = Vec::with_capacity(n * d);
        for col in &columns {
            values.extend_from_slice(col);
        }
        Self::from_column_major(values, n, d)
    }

    /// Build from a list of rows of equal length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::ShapeMismatch("rows have unequal lengths".to_string()));
        }
        let mut values = vec![0.0; n * d];
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                values[j * n + i] = v;
            }
        }
        Self::from_column_major(values, n, d)
    }

    /// Single-column matrix from a vector.
    pub fn from_vec(column: Vec<f64>) -> Result<Self> {
        let n = column.len();
        Self::from_column_major(column, n, 1)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Column `j` as a contiguous slice.
    pub fn column(&self, j: usize) -> &[f64] {
        &self.values[j * self.n..(j + 1) * self.n]
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[col * self.n + row]
    }

    /// New matrix with rows reordered as `rows[s] = self.rows[perm[s]]`.
    pub fn permuted_rows(&self, perm: &[u32]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(Error::ShapeMismatch(format!(
                "permutation length {} != n = {}",
                perm.len(),
                self.n
            )));
        }
        let mut values = vec![0.0; self.values.len()];
        for j in 0..self.d {
            let src = self.column(j);
            let dst = &mut values[j * self.n..(j + 1) * self.n];
            for (s, &t) in perm.iter().enumerate() {
                dst[s] = src[t as usize];
            }
        }
        Self::from_column_major(values, self.n, self.d)
    }
}

/// Symmetric n x n matrix of pairwise Euclidean distances (zero diagonal).
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    entries: Vec<f64>,
    n: usize,
}

impl DistanceMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    /// Mean off-diagonal distance; the scale used by degeneracy checks.
    pub fn mean_offdiag(&self) -> f64 {
        let n = self.n;
        if n < 2 {
            return 0.0;
        }
        let mut acc = Accumulator::new();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    acc.add(self.entries[i * n + j]);
                }
            }
        }
        acc.value() / (n * (n - 1)) as f64
    }
}

/// U-centered distance matrix: zero diagonal, off-diagonal row and column
/// sums zero (up to roundoff).
#[derive(Debug, Clone, PartialEq)]
pub struct UCenteredMatrix {
    entries: Vec<f64>,
    n: usize,
}

impl UCenteredMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub(crate) fn entries(&self) -> &[f64] {
        &self.entries
    }
}

/// Distance covariance, the two distance variances, and their correlation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DcorResult {
    pub dcov: f64,
    pub dvar_x: f64,
    pub dvar_y: f64,
    pub dcor: f64,
}

/// Pairwise Euclidean distance matrix of the sample rows.
pub fn pairwise_distances(sample: &DataMatrix) -> Result<DistanceMatrix> {
    let n = sample.n();
    if n < 2 {
        return Err(Error::SampleTooSmall { n, min: 2 });
    }
    let mut entries = vec![0.0; n * n];
    if sample.d() == 1 {
        // 1-D: |x_i - x_j| directly, no squaring round-trip.
        let col = sample.column(0);
        for i in 0..n {
            for j in (i + 1)..n {
                let d = (col[i] - col[j]).abs();
                entries[i * n + j] = d;
                entries[j * n + i] = d;
            }
        }
    } else {
        // Accumulate squared differences one dimension at a time (column-major
        // friendly), then take square roots.
        for dim in 0..sample.d() {
            let col = sample.column(dim);
            for i in 0..n {
                let ci = col[i];
                for j in (i + 1)..n {
                    let diff = ci - col[j];
                    entries[i * n + j] += diff * diff;
                }
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let d = entries[i * n + j].sqrt();
                entries[i * n + j] = d;
                entries[j * n + i] = d;
            }
        }
    }
    Ok(DistanceMatrix { entries, n })
}

/// U-center a distance matrix. Requires n >= 4.
pub fn u_center(dist: &DistanceMatrix) -> Result<UCenteredMatrix> {
    let n = dist.n();
    if n < 4 {
        return Err(Error::SampleTooSmall { n, min: 4 });
    }
    let nf = n as f64;
    let row_sums: Vec<f64> = (0..n)
        .map(|i| sum::sum(&dist.entries[i * n..(i + 1) * n]))
        .collect();
    let total = sum::sum(&row_sums);
    let c_row = 1.0 / (nf - 2.0);
    let c_total = total / ((nf - 1.0) * (nf - 2.0));
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                entries[i * n + j] =
                    dist.entries[i * n + j] - c_row * row_sums[i] - c_row * row_sums[j] + c_total;
            }
        }
    }
    Ok(UCenteredMatrix { entries, n })
}

/// Unbiased distance covariance of two U-centered matrices:
/// `sum_{i != j} A(i,j) B(i,j) / (n (n-3))`.
pub fn unbiased_dcov(a: &UCenteredMatrix, b: &UCenteredMatrix) -> Result<f64> {
    let n = a.n();
    if n != b.n() {
        return Err(Error::ShapeMismatch(format!(
            "U-centered matrices of size {} and {}",
            n,
            b.n()
        )));
    }
    if n < 4 {
        return Err(Error::SampleTooSmall { n, min: 4 });
    }
    let mut acc = Accumulator::new();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc.add(a.entries[i * n + j] * b.entries[i * n + j]);
            }
        }
    }
    Ok(acc.value() / (n as f64 * (n as f64 - 3.0)))
}

/// Assemble a [`DcorResult`] from the raw pieces, enforcing the degeneracy
/// policy: a distance variance at or below `DVAR_REL_TOL * scale^2` (in
/// particular, an exact zero) is an error rather than a silent 0/0.
pub(crate) fn finish_dcor(
    dcov: f64,
    dvar_x: f64,
    dvar_y: f64,
    scale_x: f64,
    scale_y: f64,
) -> Result<DcorResult> {
    if dvar_x <= DVAR_REL_TOL * scale_x * scale_x {
        return Err(Error::DegenerateSample(
            "X has zero distance variance".to_string(),
        ));
    }
    if dvar_y <= DVAR_REL_TOL * scale_y * scale_y {
        return Err(Error::DegenerateSample(
            "Y has zero distance variance".to_string(),
        ));
    }
    let denom = (dvar_x * dvar_y).sqrt();
    let dcor = (dcov / denom).clamp(-1.0, 1.0);
    Ok(DcorResult {
        dcov,
        dvar_x,
        dvar_y,
        dcor,
    })
}

/// Unbiased distance correlation of two paired samples (naive O(n^2) path).
///
/// Errors with `DegenerateSample` when either sample has zero distance
/// variance (all rows identical), and `SampleTooSmall` below n = 4.
pub fn unbiased_dcor(x: &DataMatrix, y: &DataMatrix) -> Result<DcorResult> {
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
    finish_dcor(dcov, dvar_x, dvar_y, dx.mean_offdiag(), dy.mean_offdiag())
}

/// Unbiased distance correlation of two univariate samples in O(n log n).
///
/// Agrees with [`unbiased_dcor`] on the corresponding one-column matrices to
/// within 1e-9 (the naive path remains the reference); identical error
/// behavior.
pub fn fast_univariate_dcor(x: &[f64], y: &[f64]) -> Result<DcorResult> {
    let n = x.len();
    if n != y.len() {
        return Err(Error::ShapeMismatch(format!(
            "x has {n} entries, y has {}",
            y.len()
        )));
    }
    if n < 4 {
        return Err(Error::SampleTooSmall { n, min: 4 });
    }
    for (name, col) in [("x", x), ("y", y)] {
        if let Some(pos) = col.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!(
                "non-finite entry at row {} of {name}",
                pos + 1
            )));
        }
    }
    let a = PreparedColumn::new(x);
    let b = PreparedColumn::new(y);
    let mut scratch = MergeScratch::new(n);
    let dcov = dcov_prepared(&a, &b, None, &mut scratch);
    finish_dcor(dcov, a.dvar(), b.dvar(), a.scale(), b.scale())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(cols: Vec<Vec<f64>>) -> DataMatrix {
        DataMatrix::from_columns(cols).unwrap()
    }

    #[test]
    fn distances_one_dimensional_pair() {
        let m = mat(vec![vec![0.0, 3.0]]);
        let d = pairwise_distances(&m).unwrap();
        assert_eq!(d.get(0, 0), 0.0);
        assert_eq!(d.get(0, 1), 3.0);
        assert_eq!(d.get(1, 0), 3.0);
        assert_eq!(d.get(1, 1), 0.0);
    }

    #[test]
    fn distances_three_four_five() {
        let m = DataMatrix::from_rows(&[vec![0.0, 0.0], vec![3.0, 4.0]]).unwrap();
        let d = pairwise_distances(&m).unwrap();
        assert_eq!(d.get(0, 1), 5.0);
        assert_eq!(d.get(1, 0), 5.0);
    }

    #[test]
    fn distances_duplicate_rows_are_zero() {
        let m = DataMatrix::from_rows(&[
            vec![1.0, 2.0],
            vec![4.0, -1.0],
            vec![1.0, 2.0],
            vec![0.5, 0.5],
        ])
        .unwrap();
        let d = pairwise_distances(&m).unwrap();
        assert_eq!(d.get(0, 2), 0.0);
        assert_eq!(d.get(2, 0), 0.0);
        assert!(d.get(0, 1) > 0.0);
    }

    #[test]
    fn distances_reject_tiny_samples() {
        let m = mat(vec![vec![1.0]]);
        assert!(matches!(
            pairwise_distances(&m),
            Err(Error::SampleTooSmall { n: 1, min: 2 })
        ));
    }

    #[test]
    fn u_center_zero_matrix_stays_zero() {
        let m = mat(vec![vec![5.0, 5.0, 5.0, 5.0]]);
        let d = pairwise_distances(&m).unwrap();
        let a = u_center(&d).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(a.get(i, j), 0.0);
            }
        }
    }

    #[test]
    fn u_center_row_sums_vanish() {
        let m = mat(vec![vec![0.3, -1.2, 4.5, 2.2, 0.0, 9.1]]);
        let d = pairwise_distances(&m).unwrap();
        let a = u_center(&d).unwrap();
        let n = 6;
        let scale = d.mean_offdiag();
        for i in 0..n {
            let mut s = 0.0;
            for j in 0..n {
                if i != j {
                    s += a.get(i, j);
                }
            }
            assert!(s.abs() <= 1e-9 * n as f64 * scale, "row {i}: {s}");
        }
    }

    #[test]
    fn u_center_requires_four_samples() {
        let m = mat(vec![vec![0.0, 1.0, 2.0]]);
        let d = pairwise_distances(&m).unwrap();
        assert!(matches!(
            u_center(&d),
            Err(Error::SampleTooSmall { n: 3, min: 4 })
        ));
    }

    #[test]
    fn dcov_zero_factor() {
        let x = mat(vec![vec![0.0, 1.0, 2.0, 3.0]]);
        let zeros = mat(vec![vec![1.0, 1.0, 1.0, 1.0]]);
        let a = u_center(&pairwise_distances(&x).unwrap()).unwrap();
        let b = u_center(&pairwise_distances(&zeros).unwrap()).unwrap();
        assert_eq!(unbiased_dcov(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn dcov_self_is_nonnegative() {
        let x = mat(vec![vec![0.4, -2.0, 7.0, 1.5, 1.5]]);
        let a = u_center(&pairwise_distances(&x).unwrap()).unwrap();
        assert!(unbiased_dcov(&a, &a).unwrap() >= 0.0);
    }

    #[test]
    fn dcov_size_mismatch() {
        let x = mat(vec![vec![0.0, 1.0, 2.0, 3.0]]);
        let y = mat(vec![vec![0.0, 1.0, 2.0, 3.0, 4.0]]);
        let a = u_center(&pairwise_distances(&x).unwrap()).unwrap();
        let b = u_center(&pairwise_distances(&y).unwrap()).unwrap();
        assert!(matches!(unbiased_dcov(&a, &b), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn dcor_self_correlation_is_one() {
        let x = mat(vec![vec![0.0, 1.0, 2.0, 3.0, 5.0, -2.0]]);
        let r = unbiased_dcor(&x, &x).unwrap();
        assert!((r.dcor - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn dcor_identical_rows_degenerate() {
        let x = mat(vec![vec![2.0, 2.0, 2.0, 2.0], vec![1.0, 1.0, 1.0, 1.0]]);
        let y = mat(vec![vec![0.0, 1.0, 2.0, 3.0]]);
        assert!(matches!(
            unbiased_dcor(&x, &y),
            Err(Error::DegenerateSample(_))
        ));
    }

    #[test]
    fn dcor_symmetry_exact() {
        let x = mat(vec![vec![0.0, 1.0, 4.0, 2.0, -3.0]]);
        let y = mat(vec![vec![5.0, 2.0, 2.5, -1.0, 0.0]]);
        let xy = unbiased_dcor(&x, &y).unwrap();
        let yx = unbiased_dcor(&y, &x).unwrap();
        assert_eq!(xy.dcor, yx.dcor);
        assert_eq!(xy.dcov, yx.dcov);
    }

    #[test]
    fn fast_dcor_self_correlation() {
        let v = [0.0, 1.0, 2.0, 3.0];
        let r = fast_univariate_dcor(&v, &v).unwrap();
        assert!((r.dcor - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn fast_dcor_constant_column_degenerate() {
        let x = [4.0, 4.0, 4.0, 4.0, 4.0];
        let y = [0.0, 1.0, 2.0, 3.0, 4.0];
        assert!(matches!(
            fast_univariate_dcor(&x, &y),
            Err(Error::DegenerateSample(_))
        ));
    }

    #[test]
    fn fast_dcor_rejects_nan() {
        let x = [0.0, f64::NAN, 2.0, 3.0];
        let y = [0.0, 1.0, 2.0, 3.0];
        assert!(matches!(
            fast_univariate_dcor(&x, &y),
            Err(Error::InvalidData(_))
        ));
    }

    #[test]
    fn data_matrix_round_trips_rows_and_columns() {
        let rows = vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]];
        let m = DataMatrix::from_rows(&rows).unwrap();
        assert_eq!(m.n(), 3);
        assert_eq!(m.d(), 2);
        assert_eq!(m.column(0), &[1.0, 3.0, 5.0]);
        assert_eq!(m.column(1), &[2.0, 4.0, 6.0]);
        assert_eq!(m.get(2, 1), 6.0);
    }

    #[test]
    fn permuted_rows_reorders() {
        let m = mat(vec![vec![10.0, 20.0, 30.0, 40.0]]);
        let p = m.permuted_rows(&[3, 0, 2, 1]).unwrap();
        assert_eq!(p.column(0), &[40.0, 10.0, 30.0, 20.0]);
    }

    #[test]
    fn triangle_inequality_spot_check() {
        let m = DataMatrix::from_rows(&[
            vec![0.1, 2.0, -1.0],
            vec![4.0, 0.0, 0.5],
            vec![-2.0, 1.0, 1.0],
            vec![0.0, 0.0, 0.0],
            vec![3.0, -5.0, 2.0],
        ])
        .unwrap();
        let d = pairwise_distances(&m).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                for k in 0..5 {
                    assert!(d.get(i, j) <= d.get(i, k) + d.get(k, j) + 1e-12);
                }
            }
        }
    }
}
