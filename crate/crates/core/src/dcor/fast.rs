//! O(n log n) univariate path for the unbiased statistic.
//!
//! For 1-D samples the U-centered inner product collapses to three pieces,
//! each computable from sorted order alone:
//!
//! ```text
//! sum_{i != j} A(i,j) B(i,j) =
//!     sum_{i != j} a_ij b_ij  -  2/(n-2) sum_i S_i T_i  +  S.. T.. / ((n-1)(n-2))
//! ```
//!
//! where `a_ij = |x_i - x_j|`, `S_i` its row sums, `S..` the total (same for
//! y with `b`/`T`). Row sums come from one sort plus prefix sums. The cross
//! term `sum a_ij b_ij` reduces, over pairs taken in x-sorted order, to
//!
//! ```text
//! sum_{i<j} (x_j - x_i) |y_j - y_i|
//!     = n sum x_i y_i - (sum x)(sum y) - 2 I,
//! I   = sum over pairs with y out of order of (x_j - x_i)(y_j - y_i),
//! ```
//!
//! and `I` is accumulated by a merge-sort recursion over the y sequence that
//! carries suffix sums of (x, y, xy) for the not-yet-merged left half. Small
//! blocks fall back to a direct pairwise loop. Each merge accumulates its
//! contributions locally; the cross-merge reduction is compensated, so the
//! summation stays effectively pairwise at any n.
//!
//! A column is prepared once ([`PreparedColumn`]) and can then be paired
//! against any other column, including under a row permutation — the
//! permutation engine relies on this to avoid re-sorting per replicate.
//! Values are mean-centered at preparation time; distances are translation
//! invariant, so this only guards the squared-sum identity against
//! cancellation.

use crate::sum::{self, Accumulator};

/// Per-column precomputation for the fast kernel.
#[derive(Debug, Clone)]
pub(crate) struct PreparedColumn {
    /// Centered values in original sample order.
    values: Vec<f64>,
    /// Sample indices in ascending value order.
    order: Vec<u32>,
    /// Centered values in ascending order (`values[order[m]]`).
    sorted: Vec<f64>,
    /// Distance-matrix row sums per original sample index.
    row_sums: Vec<f64>,
    /// Sum of centered values (zero up to roundoff; kept exact).
    value_sum: f64,
    /// Total of all distances, `sum_i row_sums[i]`.
    total: f64,
    dvar: f64,
    scale: f64,
}

impl PreparedColumn {
    /// Prepare a column. Caller guarantees `n >= 4` and finite entries.
    pub fn new(raw: &[f64]) -> Self {
        let n = raw.len();
        let nf = n as f64;
        debug_assert!(n >= 4);

        let mean = sum::sum(raw) / nf;
        let values: Vec<f64> = raw.iter().map(|&v| v - mean).collect();

        let mut order: Vec<u32> = (0..n as u32).collect();
        order.sort_unstable_by(|&a, &b| values[a as usize].total_cmp(&values[b as usize]));
        let sorted: Vec<f64> = order.iter().map(|&i| values[i as usize]).collect();

        // Prefix sums of the sorted values: prefix[m] = sum of the first m.
        let mut prefix = vec![0.0; n + 1];
        let mut acc = Accumulator::new();
        for (m, &v) in sorted.iter().enumerate() {
            acc.add(v);
            prefix[m + 1] = acc.value();
        }
        let value_sum = prefix[n];

        // Row sum at sorted position m:
        //   sum_j |v_m - v_j| = v_m (2m + 1 - n) + total - prefix[m] - prefix[m+1].
        let mut row_sums = vec![0.0; n];
        let mut total_acc = Accumulator::new();
        for m in 0..n {
            let rs = sorted[m] * ((2 * m + 1) as f64 - nf) + value_sum - prefix[m] - prefix[m + 1];
            row_sums[order[m] as usize] = rs;
            total_acc.add(rs);
        }
        let total = total_acc.value();

        // sum_{i != j} (v_i - v_j)^2 = 2 (n sum v^2 - (sum v)^2), clamped at 0.
        let mut sq_acc = Accumulator::new();
        for &v in &values {
            sq_acc.add(v * v);
        }
        let sq_sum = (2.0 * (nf * sq_acc.value() - value_sum * value_sum)).max(0.0);

        let row_sq = sum::dot(&row_sums, &row_sums);
        let dvar = (sq_sum - 2.0 / (nf - 2.0) * row_sq + total * total / ((nf - 1.0) * (nf - 2.0)))
            / (nf * (nf - 3.0));
        let scale = total / (nf * (nf - 1.0));

        Self {
            values,
            order,
            sorted,
            row_sums,
            value_sum,
            total,
            dvar,
            scale,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn dvar(&self) -> f64 {
        self.dvar
    }

    /// Mean off-diagonal distance, the degeneracy scale.
    pub fn scale(&self) -> f64 {
        self.scale
    }
}

/// One (x, y, xy) element moved through the merge.
#[derive(Debug, Clone, Copy, Default)]
struct Pt {
    y: f64,
    x: f64,
    xy: f64,
}

/// Reusable buffers for [`dcov_prepared`]; one per worker thread.
#[derive(Debug, Clone)]
pub(crate) struct MergeScratch {
    pts: Vec<Pt>,
    tmp: Vec<Pt>,
    /// Suffix sums of (x, y, xy) over the pending left half.
    suffix: Vec<[f64; 3]>,
}

impl MergeScratch {
    pub fn new(n: usize) -> Self {
        Self {
            pts: vec![Pt::default(); n],
            tmp: vec![Pt::default(); n],
            suffix: vec![[0.0; 3]; n / 2 + 2],
        }
    }
}

/// Blocks at or below this size use the direct pairwise loop.
const MERGE_LEAF: usize = 32;

/// Unbiased distance covariance of two prepared columns.
///
/// `inv`, when present, is the inverse of a row permutation applied to the
/// first column's sample: original a-index `t` is paired with b-index
/// `inv[t]`. `None` pairs by original index. The arithmetic sequence is
/// identical for `None` and for the identity permutation.
pub(crate) fn dcov_prepared(
    a: &PreparedColumn,
    b: &PreparedColumn,
    inv: Option<&[u32]>,
    scratch: &mut MergeScratch,
) -> f64 {
    let n = a.len();
    debug_assert_eq!(n, b.len());
    let nf = n as f64;

    // Lay out the pairing in ascending-x order.
    let mut xy_acc = Accumulator::new();
    {
        let pts = &mut scratch.pts[..n];
        match inv {
            None => {
                for (m, (&t, &xv)) in a.order.iter().zip(&a.sorted).enumerate() {
                    let yv = b.values[t as usize];
                    let prod = xv * yv;
                    pts[m] = Pt { y: yv, x: xv, xy: prod };
                    xy_acc.add(prod);
                }
            }
            Some(iv) => {
                for (m, (&t, &xv)) in a.order.iter().zip(&a.sorted).enumerate() {
                    let yv = b.values[iv[t as usize] as usize];
                    let prod = xv * yv;
                    pts[m] = Pt { y: yv, x: xv, xy: prod };
                    xy_acc.add(prod);
                }
            }
        }
    }
    let sum_xy = xy_acc.value();

    // Weighted inversion sum over the y sequence.
    let mut inv_acc = Accumulator::new();
    merge_count(&mut scratch.pts[..n], &mut scratch.tmp[..n], &mut scratch.suffix, &mut inv_acc);
    let inversions = inv_acc.value();

    let s_half = nf * sum_xy - a.value_sum * b.value_sum - 2.0 * inversions;
    let s_ab = 2.0 * s_half;

    let mut row_acc = Accumulator::new();
    match inv {
        None => {
            for (&ra, &rb) in a.row_sums.iter().zip(&b.row_sums) {
                row_acc.add(ra * rb);
            }
        }
        Some(iv) => {
            for (&ra, &t) in a.row_sums.iter().zip(iv) {
                row_acc.add(ra * b.row_sums[t as usize]);
            }
        }
    }
    let row_dot = row_acc.value();

    (s_ab - 2.0 / (nf - 2.0) * row_dot + a.total * b.total / ((nf - 1.0) * (nf - 2.0)))
        / (nf * (nf - 3.0))
}

/// Sort `pts` ascending by y while adding to `acc`, for every pair
/// left-index/right-index with left y strictly larger, the term
/// `(x_r - x_l)(y_r - y_l)`.
fn merge_count(pts: &mut [Pt], tmp: &mut [Pt], suffix: &mut [[f64; 3]], acc: &mut Accumulator) {
    let len = pts.len();
    if len <= MERGE_LEAF {
        // Direct pairwise contributions, then insertion sort (stable, so
        // equal y values are never treated as out of order). The select
        // keeps the inner loop branch-free; out-of-order pairs contribute
        // their term, in-order pairs contribute zero.
        let mut local = 0.0;
        for j in 1..len {
            let pj = pts[j];
            for pi in &pts[..j] {
                let term = (pj.x - pi.x) * (pj.y - pi.y);
                local += if pi.y > pj.y { term } else { 0.0 };
            }
        }
        acc.add(local);
        for j in 1..len {
            let pj = pts[j];
            let mut k = j;
            while k > 0 && pts[k - 1].y > pj.y {
                pts[k] = pts[k - 1];
                k -= 1;
            }
            pts[k] = pj;
        }
        return;
    }

    let mid = len / 2;
    {
        let (left, right) = pts.split_at_mut(mid);
        merge_count(left, &mut tmp[..mid], suffix, acc);
        merge_count(right, &mut tmp[mid..len], suffix, acc);
    }

    // Suffix sums over the left half: suffix[k] aggregates positions k..mid.
    suffix[mid] = [0.0; 3];
    for k in (0..mid).rev() {
        let s = suffix[k + 1];
        let p = pts[k];
        suffix[k] = [s[0] + p.x, s[1] + p.y, s[2] + p.xy];
    }

    let mut l = 0;
    let mut r = mid;
    let mut out = 0;
    let mut local = 0.0;
    while l < mid && r < len {
        // Ties go left so equal y values are never counted as out of order
        // (their term is zero anyway).
        if pts[l].y <= pts[r].y {
            tmp[out] = pts[l];
            l += 1;
        } else {
            let p = pts[r];
            let k = (mid - l) as f64;
            let s = suffix[l];
            local += k * p.xy + s[2] - p.x * s[1] - p.y * s[0];
            tmp[out] = p;
            r += 1;
        }
        out += 1;
    }
    acc.add(local);
    tmp[out..out + (mid - l)].copy_from_slice(&pts[l..mid]);
    let copied = out + (mid - l);
    tmp[copied..len].copy_from_slice(&pts[r..len]);
    pts.copy_from_slice(&tmp[..len]);
}
